#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace sos::sim {

inline constexpr std::size_t kMaxTriggerNameLength = 40;

class ScenarioParseError : public std::runtime_error {
public:
    ScenarioParseError(std::string path, std::string reason)
        : std::runtime_error(path + ": " + reason), path_(std::move(path)), reason_(std::move(reason)) {}
    /// JSON path of the offending field, e.g. "steps[0].device_id".
    const std::string& path() const { return path_; }
    const std::string& reason() const { return reason_; }

private:
    std::string path_;
    std::string reason_;
};

struct ContactSpec {
    std::string number;
    std::string label;
};

struct DeviceSpec {
    std::string device_id;
    std::vector<ContactSpec> contacts;
    std::optional<std::string> custom_message;
};

struct FixSpec {
    double lat = 0;
    double lon = 0;
    /// fixed_at is set to send time minus this.
    std::int64_t age_ms = 0;
    std::optional<double> accuracy_m;
};

struct CellSpec {
    int mcc = 0;
    int mnc = 0;
    int lac = 0;
    std::int64_t cid = 0;
};

struct TriggerStep {
    std::string device_id;
    /// Scenario-level name; the id sent on the wire is derived from it and
    /// the run seed.
    std::string trigger_id;
    std::optional<FixSpec> fix;
    std::optional<CellSpec> cell;
};

struct WaitStep {
    std::int64_t ms = 0;
};

struct InjectFailureStep {
    std::string msisdn;
    /// "accepted" | "transient" | "permanent", consumed in order.
    std::vector<std::string> plan;
};

using Step = std::variant<TriggerStep, WaitStep, InjectFailureStep>;

struct ExpectState {
    std::string trigger_id;
    std::string expected;
};

struct ExpectDeliveredCount {
    std::string trigger_id;
    std::size_t n = 0;
};

struct ExpectMessageContains {
    std::string trigger_id;
    std::string substring;
};

using Expectation = std::variant<ExpectState, ExpectDeliveredCount, ExpectMessageContains>;

std::string_view type_name(const Expectation& e);
const std::string& trigger_of(const Expectation& e);

struct Scenario {
    std::string name;
    std::vector<DeviceSpec> devices;
    std::vector<Step> steps;
    std::vector<Expectation> expectations;
};

/// Throws ScenarioParseError with the path of the first bad field.
Scenario parse_scenario(std::string_view json_text);
Scenario load_scenario(const std::string& path);

}  // namespace sos::sim
