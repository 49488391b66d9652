#pragma once

#include <atomic>
#include <cstdint>

namespace sos {

/// Milliseconds since the Unix epoch, UTC.
using TimestampMs = std::int64_t;

class Clock {
public:
    virtual ~Clock() = default;
    virtual TimestampMs now_ms() const = 0;
    virtual void sleep_ms(std::int64_t ms) = 0;
};

class SystemClock final : public Clock {
public:
    TimestampMs now_ms() const override;
    void sleep_ms(std::int64_t ms) override;
};

/// Test clock. Time only moves when set; sleeps are recorded but return
/// immediately, so concurrent callers observe identical timestamps.
class ManualClock final : public Clock {
public:
    explicit ManualClock(TimestampMs start = 1'700'000'000'000) : now_(start) {}

    TimestampMs now_ms() const override { return now_.load(); }
    void sleep_ms(std::int64_t ms) override { slept_ += ms; }

    void set(TimestampMs t) { now_ = t; }
    void advance(std::int64_t ms) { now_ += ms; }
    std::int64_t total_slept_ms() const { return slept_.load(); }

private:
    std::atomic<TimestampMs> now_;
    std::atomic<std::int64_t> slept_{0};
};

}  // namespace sos
