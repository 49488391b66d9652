#pragma once

#include <cstdint>
#include <map>
#include <mutex>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "sos/clock.h"
#include "sos/message.h"
#include "sos/registry.h"

namespace sos::transport {

using registry::Msisdn;

enum class OutcomeKind { Accepted, TransientFailure, PermanentFailure };

std::string_view to_string(OutcomeKind kind);
OutcomeKind outcome_kind_from_string(std::string_view s);

struct SendOutcome {
    OutcomeKind kind = OutcomeKind::Accepted;
    std::string reason;

    static SendOutcome accepted() { return {OutcomeKind::Accepted, {}}; }
    static SendOutcome transient(std::string why) { return {OutcomeKind::TransientFailure, std::move(why)}; }
    static SendOutcome permanent(std::string why) { return {OutcomeKind::PermanentFailure, std::move(why)}; }

    friend bool operator==(const SendOutcome&, const SendOutcome&) = default;
};

struct SendRequest {
    Msisdn msisdn;
    message::EncodedSms encoded;
    std::string idempotency_key;
};

/// "<alert_id>:<msisdn>:<seq>"
std::string idempotency_key(std::string_view alert_id, const Msisdn& msisdn, unsigned seq);

struct DeliveryAttempt {
    /// 1-based, counted per segment.
    int attempt_no = 1;
    unsigned segment_seq = 1;
    TimestampMs at = 0;
    SendOutcome outcome;

    friend bool operator==(const DeliveryAttempt&, const DeliveryAttempt&) = default;
};

enum class DeliveryStatus { Pending, Succeeded, Failed };

std::string_view to_string(DeliveryStatus s);

struct DeliveryRecord {
    Msisdn msisdn;
    std::vector<DeliveryAttempt> attempts;
    DeliveryStatus final_status = DeliveryStatus::Pending;

    friend bool operator==(const DeliveryRecord&, const DeliveryRecord&) = default;
};

struct RetryPolicy {
    int max_attempts = 4;
    std::int64_t base_delay_ms = 500;
    std::int64_t factor = 2;
    std::int64_t cap_ms = 8000;

    /// Throws std::invalid_argument.
    void validate() const;
};

/// min(cap, base * factor^(attempt_no - 1)); no jitter.
std::int64_t next_retry_delay(const RetryPolicy& policy, int attempt_no);

/// Backends must accept concurrent send calls.
class SmsBackend {
public:
    virtual ~SmsBackend() = default;
    virtual SendOutcome send(const SendRequest& req) = 0;
};

/// Calls the backend; exceptions map to TransientFailure.
SendOutcome send_sms(SmsBackend& backend, const SendRequest& req);

struct DeliveredSms {
    Msisdn msisdn;
    std::string idempotency_key;
    message::EncodedSms encoded;
};

/// In-memory backend with scripted failures and a dedup table.
class MockBackend final : public SmsBackend {
public:
    SendOutcome send(const SendRequest& req) override;

    /// Outcomes returned in order for this number, then Accepted forever.
    void set_plan(const Msisdn& msisdn, std::vector<SendOutcome> plan);
    void reset();

    std::vector<DeliveredSms> delivered() const;
    /// Reassembled texts delivered to one number, in delivery order.
    std::vector<std::string> texts_for(const Msisdn& msisdn) const;
    std::size_t send_calls() const;

private:
    mutable std::mutex mu_;
    std::map<Msisdn, std::vector<SendOutcome>> plans_;
    std::set<std::string> accepted_keys_;
    std::vector<DeliveredSms> delivered_;
    std::size_t calls_ = 0;
};

struct FanoutOptions {
    RetryPolicy policy;
    std::size_t max_in_flight = 8;
    /// Prefix for idempotency keys, normally the alert id.
    std::string key_prefix;
};

/// Sends every segment to every contact. Contacts are isolated from each
/// other; one contact's segments go out sequentially in seq order. Records
/// come back in contact order.
std::vector<DeliveryRecord> dispatch_fanout(std::span<const Msisdn> contacts, const message::EncodedSms& encoded,
                                            SmsBackend& backend, Clock& clock, const FanoutOptions& options);

}  // namespace sos::transport
