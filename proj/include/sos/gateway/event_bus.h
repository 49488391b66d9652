#pragma once

#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <list>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

namespace sos::gateway {

enum class EventKind { Created, StateChanged, Acknowledged };

std::string_view to_string(EventKind kind);

struct BusEvent {
    std::uint64_t seq = 0;
    EventKind kind = EventKind::Created;
    std::string alert_id;
    /// Serialized JSON data line.
    std::string data;
};

class EventBus;

/// One reader's queue. Bounded; on overflow the oldest event is dropped so a
/// slow reader never blocks publishers.
class Subscription {
public:
    /// Waits up to `timeout`; nullopt on timeout or after close().
    std::optional<BusEvent> next(std::chrono::milliseconds timeout);
    void close();
    bool closed() const;
    std::uint64_t dropped() const;

private:
    friend class EventBus;
    explicit Subscription(std::size_t capacity) : capacity_(capacity) {}
    void push(const BusEvent& e);

    const std::size_t capacity_;
    mutable std::mutex mu_;
    std::condition_variable cv_;
    std::deque<BusEvent> queue_;
    bool closed_ = false;
    std::uint64_t dropped_ = 0;
};

class EventBus {
public:
    static constexpr std::size_t kReplay = 50;
    static constexpr std::size_t kQueueCapacity = 256;

    explicit EventBus(std::size_t replay = kReplay, std::size_t queue_capacity = kQueueCapacity)
        : replay_limit_(replay), queue_capacity_(queue_capacity) {}

    std::uint64_t publish(EventKind kind, std::string alert_id, std::string data);

    /// New subscription preloaded with the replay window.
    std::shared_ptr<Subscription> subscribe();
    void unsubscribe(const std::shared_ptr<Subscription>& sub);
    /// Closes every subscription; later subscribers start closed.
    void shutdown();

    std::size_t subscriber_count() const;
    std::vector<BusEvent> replay() const;

private:
    const std::size_t replay_limit_;
    const std::size_t queue_capacity_;
    mutable std::mutex mu_;
    std::uint64_t next_seq_ = 1;
    std::deque<BusEvent> recent_;
    std::list<std::shared_ptr<Subscription>> subs_;
    bool shut_down_ = false;
};

}  // namespace sos::gateway
