#include "sos/gateway/event_bus.h"

#include <algorithm>

namespace sos::gateway {

std::string_view to_string(EventKind kind) {
    switch (kind) {
        case EventKind::Created: return "Created";
        case EventKind::StateChanged: return "StateChanged";
        case EventKind::Acknowledged: return "Acknowledged";
    }
    return "?";
}

std::optional<BusEvent> Subscription::next(std::chrono::milliseconds timeout) {
    std::unique_lock lock(mu_);
    cv_.wait_for(lock, timeout, [&] { return closed_ || !queue_.empty(); });
    if (queue_.empty()) return std::nullopt;
    BusEvent e = std::move(queue_.front());
    queue_.pop_front();
    return e;
}

void Subscription::close() {
    {
        std::lock_guard lock(mu_);
        closed_ = true;
    }
    cv_.notify_all();
}

bool Subscription::closed() const {
    std::lock_guard lock(mu_);
    return closed_;
}

std::uint64_t Subscription::dropped() const {
    std::lock_guard lock(mu_);
    return dropped_;
}

void Subscription::push(const BusEvent& e) {
    {
        std::lock_guard lock(mu_);
        if (closed_) return;
        if (queue_.size() >= capacity_) {
            queue_.pop_front();
            ++dropped_;
        }
        queue_.push_back(e);
    }
    cv_.notify_one();
}

std::uint64_t EventBus::publish(EventKind kind, std::string alert_id, std::string data) {
    std::lock_guard lock(mu_);
    BusEvent e{next_seq_++, kind, std::move(alert_id), std::move(data)};
    for (const auto& s : subs_) s->push(e);
    recent_.push_back(std::move(e));
    if (recent_.size() > replay_limit_) recent_.pop_front();
    return recent_.back().seq;
}

std::shared_ptr<Subscription> EventBus::subscribe() {
    std::shared_ptr<Subscription> sub(new Subscription(std::max(queue_capacity_, replay_limit_)));
    std::lock_guard lock(mu_);
    if (shut_down_) {
        sub->close();
        return sub;
    }
    // Replay and registration under one lock: nothing published in between
    // can be missed or duplicated.
    for (const auto& e : recent_) sub->push(e);
    subs_.push_back(sub);
    return sub;
}

void EventBus::unsubscribe(const std::shared_ptr<Subscription>& sub) {
    std::lock_guard lock(mu_);
    subs_.remove(sub);
}

void EventBus::shutdown() {
    std::lock_guard lock(mu_);
    shut_down_ = true;
    for (const auto& s : subs_) s->close();
    subs_.clear();
}

std::size_t EventBus::subscriber_count() const {
    std::lock_guard lock(mu_);
    return subs_.size();
}

std::vector<BusEvent> EventBus::replay() const {
    std::lock_guard lock(mu_);
    return {recent_.begin(), recent_.end()};
}

}  // namespace sos::gateway
