#include "sos/transport.h"

#include <algorithm>
#include <atomic>
#include <stdexcept>
#include <thread>

namespace sos::transport {

std::string_view to_string(OutcomeKind kind) {
    switch (kind) {
        case OutcomeKind::Accepted: return "Accepted";
        case OutcomeKind::TransientFailure: return "TransientFailure";
        case OutcomeKind::PermanentFailure: return "PermanentFailure";
    }
    return "Accepted";
}

OutcomeKind outcome_kind_from_string(std::string_view s) {
    if (s == "Accepted" || s == "accepted") return OutcomeKind::Accepted;
    if (s == "TransientFailure" || s == "transient") return OutcomeKind::TransientFailure;
    if (s == "PermanentFailure" || s == "permanent") return OutcomeKind::PermanentFailure;
    throw std::invalid_argument("unknown outcome '" + std::string(s) + "'");
}

std::string_view to_string(DeliveryStatus s) {
    switch (s) {
        case DeliveryStatus::Pending: return "Pending";
        case DeliveryStatus::Succeeded: return "Succeeded";
        case DeliveryStatus::Failed: return "Failed";
    }
    return "Pending";
}

std::string idempotency_key(std::string_view alert_id, const Msisdn& msisdn, unsigned seq) {
    return std::string(alert_id) + ":" + msisdn.str() + ":" + std::to_string(seq);
}

void RetryPolicy::validate() const {
    if (max_attempts < 1) throw std::invalid_argument("max_attempts must be >= 1");
    if (base_delay_ms < 0) throw std::invalid_argument("base_delay_ms must be >= 0");
    if (factor < 1) throw std::invalid_argument("factor must be >= 1");
    if (cap_ms < 0) throw std::invalid_argument("cap_ms must be >= 0");
}

std::int64_t next_retry_delay(const RetryPolicy& policy, int attempt_no) {
    std::int64_t delay = policy.base_delay_ms;
    for (int i = 1; i < attempt_no && delay < policy.cap_ms; ++i) delay *= policy.factor;
    return std::min(delay, policy.cap_ms);
}

SendOutcome send_sms(SmsBackend& backend, const SendRequest& req) {
    try {
        return backend.send(req);
    } catch (const std::exception& e) {
        return SendOutcome::transient(std::string("backend unreachable: ") + e.what());
    }
}

SendOutcome MockBackend::send(const SendRequest& req) {
    std::lock_guard lock(mu_);
    ++calls_;
    if (accepted_keys_.contains(req.idempotency_key)) return SendOutcome::accepted();

    SendOutcome outcome = SendOutcome::accepted();
    if (auto it = plans_.find(req.msisdn); it != plans_.end() && !it->second.empty()) {
        outcome = it->second.front();
        it->second.erase(it->second.begin());
    }
    if (outcome.kind == OutcomeKind::Accepted) {
        accepted_keys_.insert(req.idempotency_key);
        delivered_.push_back(DeliveredSms{req.msisdn, req.idempotency_key, req.encoded});
    }
    return outcome;
}

void MockBackend::set_plan(const Msisdn& msisdn, std::vector<SendOutcome> plan) {
    std::lock_guard lock(mu_);
    plans_.insert_or_assign(msisdn, std::move(plan));
}

void MockBackend::reset() {
    std::lock_guard lock(mu_);
    plans_.clear();
    accepted_keys_.clear();
    delivered_.clear();
    calls_ = 0;
}

std::vector<DeliveredSms> MockBackend::delivered() const {
    std::lock_guard lock(mu_);
    return delivered_;
}

std::vector<std::string> MockBackend::texts_for(const Msisdn& msisdn) const {
    std::lock_guard lock(mu_);
    std::vector<std::string> texts;
    // Concatenated parts are buffered by reference until every seq arrived.
    std::map<std::uint8_t, message::EncodedSms> partial;
    for (const auto& d : delivered_) {
        if (d.msisdn != msisdn) continue;
        for (const auto& seg : d.encoded.segments) {
            const auto ref = seg.concat_ref();
            if (!ref) {
                texts.push_back(message::reassemble(message::EncodedSms{d.encoded.charset, {seg}}));
                continue;
            }
            auto& buf = partial[*ref];
            buf.charset = d.encoded.charset;
            buf.segments.push_back(seg);
            if (buf.segments.size() == seg.total()) {
                texts.push_back(message::reassemble(buf));
                partial.erase(*ref);
            }
        }
    }
    return texts;
}

std::size_t MockBackend::send_calls() const {
    std::lock_guard lock(mu_);
    return calls_;
}

namespace {

DeliveryRecord deliver_to(const Msisdn& msisdn, const message::EncodedSms& encoded, SmsBackend& backend,
                          Clock& clock, const FanoutOptions& options) {
    DeliveryRecord record{msisdn, {}, DeliveryStatus::Pending};
    for (const auto& seg : encoded.segments) {
        const unsigned seq = seg.seq();
        SendRequest req{msisdn, message::EncodedSms{encoded.charset, {seg}},
                        idempotency_key(options.key_prefix, msisdn, seq)};
        bool segment_ok = false;
        for (int attempt = 1; attempt <= options.policy.max_attempts; ++attempt) {
            SendOutcome outcome = send_sms(backend, req);
            const auto kind = outcome.kind;
            record.attempts.push_back(DeliveryAttempt{attempt, seq, clock.now_ms(), std::move(outcome)});
            if (kind == OutcomeKind::Accepted) {
                segment_ok = true;
                break;
            }
            if (kind == OutcomeKind::PermanentFailure) break;
            if (attempt < options.policy.max_attempts) clock.sleep_ms(next_retry_delay(options.policy, attempt));
        }
        if (!segment_ok) {
            record.final_status = DeliveryStatus::Failed;
            return record;
        }
    }
    record.final_status = DeliveryStatus::Succeeded;
    return record;
}

}  // namespace

std::vector<DeliveryRecord> dispatch_fanout(std::span<const Msisdn> contacts, const message::EncodedSms& encoded,
                                            SmsBackend& backend, Clock& clock, const FanoutOptions& options) {
    options.policy.validate();
    if (contacts.empty()) throw std::invalid_argument("dispatch_fanout needs at least one contact");

    std::vector<std::optional<DeliveryRecord>> slots(contacts.size());
    const std::size_t workers = std::clamp<std::size_t>(options.max_in_flight, 1, contacts.size());
    if (workers == 1) {
        for (std::size_t i = 0; i < contacts.size(); ++i) {
            slots[i] = deliver_to(contacts[i], encoded, backend, clock, options);
        }
    } else {
        std::atomic<std::size_t> next{0};
        {
            std::vector<std::jthread> pool;
            pool.reserve(workers);
            for (std::size_t w = 0; w < workers; ++w) {
                pool.emplace_back([&] {
                    for (std::size_t i = next++; i < contacts.size(); i = next++) {
                        slots[i] = deliver_to(contacts[i], encoded, backend, clock, options);
                    }
                });
            }
        }
    }

    std::vector<DeliveryRecord> records;
    records.reserve(slots.size());
    for (auto& s : slots) records.push_back(std::move(*s));
    return records;
}

}  // namespace sos::transport
