#pragma once

#include <chrono>
#include <cstdint>
#include <nlohmann/json.hpp>
#include <stdexcept>
#include <string>
#include <vector>

#include "sos/sim/scenario.h"

namespace sos::sim {

enum class SimErrorKind { GatewayUnreachable, GatewayRejected, ExpectationTimeout };

class SimError : public std::runtime_error {
public:
    SimError(SimErrorKind kind, const std::string& detail) : std::runtime_error(detail), kind_(kind) {}
    SimErrorKind kind() const { return kind_; }

private:
    SimErrorKind kind_;
};

std::string_view to_string(SimErrorKind kind);

struct RunOptions {
    /// http://host:port
    std::string gateway_url;
    std::uint64_t seed = 0;
    std::chrono::milliseconds alert_timeout{10'000};
    std::chrono::milliseconds poll_interval{10};
};

/// "<trigger name>-<seed as 16 hex digits>": one seed replays idempotently,
/// a new seed makes fresh alerts.
std::string wire_trigger_id(const std::string& name, std::uint64_t seed);

struct TriggerOutcome {
    std::string trigger_id;
    std::string alert_id;
    /// Final public alert view.
    nlohmann::json alert;
    std::int64_t elapsed_ms = 0;
};

struct ExpectationOutcome {
    std::string type;
    std::string trigger_id;
    std::string expected;
    std::string actual;
    bool passed = false;
};

struct Report {
    std::string scenario;
    std::uint64_t seed = 0;
    std::vector<TriggerOutcome> triggers;
    /// One per scenario expectation, same order.
    std::vector<ExpectationOutcome> expectations;
    std::int64_t total_ms = 0;

    bool passed() const;
    /// Everything outside "timings" is deterministic for a fixed seed.
    nlohmann::json to_json(bool with_timings = true) const;
    std::string to_text() const;
};

/// Registers the scenario's devices, runs the steps in order (waiting for
/// each triggered alert to go terminal), then evaluates expectations.
/// Throws SimError.
Report run_scenario(const Scenario& scenario, const RunOptions& options);

}  // namespace sos::sim
