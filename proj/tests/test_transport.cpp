#include <doctest.h>

#include "sos/transport.h"

using namespace sos;
using namespace sos::transport;

namespace {

message::EncodedSms encode(const std::string& text, std::uint64_t seed = 1) {
    message::ConcatRng rng(seed);
    return message::segment_message(text, rng);
}

std::vector<Msisdn> numbers(std::initializer_list<const char*> raw) {
    std::vector<Msisdn> out;
    for (const char* r : raw) out.push_back(Msisdn::parse(r));
    return out;
}

FanoutOptions opts(std::size_t in_flight = 8) {
    FanoutOptions o;
    o.key_prefix = "A1";
    o.max_in_flight = in_flight;
    return o;
}

}  // namespace

TEST_CASE("next_retry_delay") {
    const RetryPolicy p;
    CHECK(next_retry_delay(p, 1) == 500);
    CHECK(next_retry_delay(p, 2) == 1000);
    CHECK(next_retry_delay(p, 3) == 2000);
    CHECK(next_retry_delay(p, 5) == 8000);
    CHECK(next_retry_delay(p, 30) == 8000);
    CHECK(next_retry_delay(RetryPolicy{4, 0, 2, 8000}, 3) == 0);
    CHECK_THROWS(RetryPolicy{0, 500, 2, 8000}.validate());
    CHECK_THROWS(RetryPolicy{1, -1, 2, 8000}.validate());
}

TEST_CASE("mock send_sms") {
    MockBackend mock;
    const auto to = Msisdn::parse("+15551234567");
    const SendRequest req{to, encode("hi"), "A1:+15551234567:1"};
    CHECK(send_sms(mock, req).kind == OutcomeKind::Accepted);
    CHECK(mock.delivered().size() == 1);

    // Duplicate key: Accepted, no new delivery.
    CHECK(send_sms(mock, req).kind == OutcomeKind::Accepted);
    CHECK(mock.delivered().size() == 1);

    mock.set_plan(to, {SendOutcome::transient("busy"), SendOutcome::accepted()});
    const SendRequest req2{to, encode("again"), "A2:+15551234567:1"};
    CHECK(send_sms(mock, req2).kind == OutcomeKind::TransientFailure);
    CHECK(send_sms(mock, req2).kind == OutcomeKind::Accepted);
    CHECK(mock.texts_for(to) == std::vector<std::string>{"hi", "again"});
}

TEST_CASE("send_sms maps backend exceptions to transient failures") {
    struct Throwing final : SmsBackend {
        SendOutcome send(const SendRequest&) override { throw std::runtime_error("connection refused"); }
    } backend;
    const auto out = send_sms(backend, SendRequest{Msisdn::parse("+15551234567"), encode("x"), "k"});
    CHECK(out.kind == OutcomeKind::TransientFailure);
    CHECK(out.reason.find("connection refused") != std::string::npos);
}

TEST_CASE("dispatch_fanout all accepted") {
    MockBackend mock;
    ManualClock clock;
    const auto to = numbers({"+15551234567", "+447700900123", "+919876543210"});
    const auto recs = dispatch_fanout(to, encode("help"), mock, clock, opts());
    REQUIRE(recs.size() == 3);
    for (std::size_t i = 0; i < 3; ++i) {
        CHECK(recs[i].msisdn == to[i]);
        CHECK(recs[i].final_status == DeliveryStatus::Succeeded);
        CHECK(recs[i].attempts.size() == 1);
    }
    CHECK(mock.delivered().size() == 3);
}

TEST_CASE("dispatch_fanout retries transient failures up to max_attempts") {
    MockBackend mock;
    ManualClock clock;
    const auto to = numbers({"+15551234567"});
    mock.set_plan(to[0], std::vector<SendOutcome>(10, SendOutcome::transient("busy")));
    const auto recs = dispatch_fanout(to, encode("help"), mock, clock, opts());
    REQUIRE(recs.size() == 1);
    CHECK(recs[0].final_status == DeliveryStatus::Failed);
    CHECK(recs[0].attempts.size() == 4);
    for (int i = 0; i < 4; ++i) CHECK(recs[0].attempts[i].attempt_no == i + 1);
    CHECK(clock.total_slept_ms() == 500 + 1000 + 2000);

    // Recovers on the third attempt.
    MockBackend mock2;
    mock2.set_plan(to[0], {SendOutcome::transient("a"), SendOutcome::transient("b")});
    const auto ok = dispatch_fanout(to, encode("help"), mock2, clock, opts());
    CHECK(ok[0].final_status == DeliveryStatus::Succeeded);
    CHECK(ok[0].attempts.size() == 3);
}

TEST_CASE("dispatch_fanout isolates a permanent failure") {
    MockBackend mock;
    ManualClock clock;
    const auto to = numbers({"+15551234567", "+447700900123"});
    mock.set_plan(to[0], {SendOutcome::permanent("unknown subscriber")});
    const auto recs = dispatch_fanout(to, encode("help"), mock, clock, opts());
    CHECK(recs[0].final_status == DeliveryStatus::Failed);
    CHECK(recs[0].attempts.size() == 1);
    CHECK(recs[1].final_status == DeliveryStatus::Succeeded);
    CHECK(clock.total_slept_ms() == 0);
}

TEST_CASE("dispatch_fanout sends segments in order and stops a contact on failure") {
    MockBackend mock;
    ManualClock clock;
    const auto to = numbers({"+15551234567", "+447700900123"});
    const auto sms = encode(std::string(400, 'a'));
    REQUIRE(sms.segments.size() == 3);
    // Second contact: segment 1 ok, segment 2 permanently rejected.
    mock.set_plan(to[1], {SendOutcome::accepted(), SendOutcome::permanent("rejected")});
    const auto recs = dispatch_fanout(to, sms, mock, clock, opts());
    CHECK(recs[0].final_status == DeliveryStatus::Succeeded);
    REQUIRE(recs[0].attempts.size() == 3);
    for (unsigned i = 0; i < 3; ++i) CHECK(recs[0].attempts[i].segment_seq == i + 1);
    CHECK(recs[1].final_status == DeliveryStatus::Failed);
    CHECK(recs[1].attempts.size() == 2);
    CHECK(mock.texts_for(to[0]) == std::vector<std::string>{std::string(400, 'a')});
}

TEST_CASE("dispatch_fanout is deterministic and replay-safe") {
    const auto to = numbers({"+15551234567", "+447700900123", "+919876543210", "+33123456789", "+4915112345678"});
    const auto sms = encode(std::string(200, 'z'));
    auto run = [&](MockBackend& mock) {
        ManualClock clock(1'000);
        mock.set_plan(to[2], {SendOutcome::transient("t"), SendOutcome::accepted()});
        mock.set_plan(to[3], {SendOutcome::permanent("p")});
        return dispatch_fanout(to, sms, mock, clock, opts(4));
    };
    MockBackend m1, m2;
    const auto first = run(m1);
    CHECK(first == run(m2));

    // Replaying the same keys against the same mock delivers nothing new.
    const auto delivered = m1.delivered().size();
    ManualClock clock(1'000);
    dispatch_fanout(to, sms, m1, clock, opts(4));
    CHECK(m1.delivered().size() == delivered + 2);  // only the fourth contact, rejected the first time
}

TEST_CASE("dispatch_fanout conservation for many contacts in parallel") {
    MockBackend mock;
    ManualClock clock;
    std::vector<Msisdn> to;
    for (int i = 0; i < 20; ++i) to.push_back(Msisdn::parse("+4477009001" + std::to_string(10 + i)));
    const auto recs = dispatch_fanout(to, encode("x"), mock, clock, opts(8));
    REQUIRE(recs.size() == to.size());
    for (std::size_t i = 0; i < to.size(); ++i) CHECK(recs[i].msisdn == to[i]);
    CHECK_THROWS(dispatch_fanout({}, encode("x"), mock, clock, opts()));
}
