#include "sos/sim/scenario.h"

#include <fstream>
#include <nlohmann/json.hpp>
#include <set>
#include <sstream>

#include "sos/alert.h"
#include "sos/registry.h"

namespace sos::sim {

using nlohmann::json;

std::string_view type_name(const Expectation& e) {
    switch (e.index()) {
        case 0: return "alert_state";
        case 1: return "delivered_count";
        default: return "message_contains";
    }
}

const std::string& trigger_of(const Expectation& e) {
    return std::visit([](const auto& x) -> const std::string& { return x.trigger_id; }, e);
}

namespace {

std::string at(const std::string& base, std::string_view key) {
    return base.empty() ? std::string(key) : base + "." + std::string(key);
}

std::string index(const std::string& base, std::size_t i) { return base + "[" + std::to_string(i) + "]"; }

const json& object(const json& j, const std::string& path) {
    if (!j.is_object()) throw ScenarioParseError(path.empty() ? "$" : path, "expected an object");
    return j;
}

const json* field(const json& obj, const char* key) {
    const auto it = obj.find(key);
    return it == obj.end() || it->is_null() ? nullptr : &*it;
}

const json& required(const json& obj, const char* key, const std::string& base) {
    const json* v = field(obj, key);
    if (!v) throw ScenarioParseError(at(base, key), "required");
    return *v;
}

std::string str(const json& obj, const char* key, const std::string& base) {
    const json& v = required(obj, key, base);
    if (!v.is_string()) throw ScenarioParseError(at(base, key), "expected a string");
    return v.get<std::string>();
}

std::optional<std::string> opt_str(const json& obj, const char* key, const std::string& base) {
    if (!field(obj, key)) return std::nullopt;
    return str(obj, key, base);
}

double num(const json& obj, const char* key, const std::string& base) {
    const json& v = required(obj, key, base);
    if (!v.is_number()) throw ScenarioParseError(at(base, key), "expected a number");
    return v.get<double>();
}

std::int64_t integer(const json& obj, const char* key, const std::string& base) {
    const json& v = required(obj, key, base);
    if (!v.is_number_integer()) throw ScenarioParseError(at(base, key), "expected an integer");
    return v.get<std::int64_t>();
}

const json& array(const json& obj, const char* key, const std::string& base) {
    const json& v = required(obj, key, base);
    if (!v.is_array()) throw ScenarioParseError(at(base, key), "expected an array");
    return v;
}

DeviceSpec parse_device(const json& j, const std::string& path) {
    object(j, path);
    DeviceSpec d;
    d.device_id = str(j, "device_id", path);
    if (!registry::is_valid_device_id(d.device_id)) {
        throw ScenarioParseError(at(path, "device_id"), "must match [A-Za-z0-9_-]{1,64}");
    }
    if (field(j, "contacts")) {
        const auto& contacts = array(j, "contacts", path);
        for (std::size_t i = 0; i < contacts.size(); ++i) {
            const auto cpath = index(at(path, "contacts"), i);
            ContactSpec c;
            if (contacts[i].is_string()) {
                c.number = contacts[i].get<std::string>();
            } else {
                object(contacts[i], cpath);
                c.number = str(contacts[i], "number", cpath);
                c.label = opt_str(contacts[i], "label", cpath).value_or("");
            }
            d.contacts.push_back(std::move(c));
        }
    }
    d.custom_message = opt_str(j, "custom_message", path);
    return d;
}

Step parse_step(const json& j, const std::string& path) {
    object(j, path);
    const auto type = str(j, "type", path);
    if (type == "trigger") {
        TriggerStep t;
        t.device_id = str(j, "device_id", path);
        t.trigger_id = str(j, "trigger_id", path);
        if (t.trigger_id.empty() || t.trigger_id.size() > kMaxTriggerNameLength) {
            throw ScenarioParseError(at(path, "trigger_id"),
                                     "must be 1.." + std::to_string(kMaxTriggerNameLength) + " characters");
        }
        if (const json* f = field(j, "fix")) {
            const auto fpath = at(path, "fix");
            object(*f, fpath);
            FixSpec fix;
            fix.lat = num(*f, "lat", fpath);
            fix.lon = num(*f, "lon", fpath);
            if (field(*f, "age_ms")) fix.age_ms = integer(*f, "age_ms", fpath);
            if (field(*f, "accuracy_m")) fix.accuracy_m = num(*f, "accuracy_m", fpath);
            t.fix = fix;
        }
        if (const json* c = field(j, "cell")) {
            const auto cpath = at(path, "cell");
            object(*c, cpath);
            t.cell = CellSpec{static_cast<int>(integer(*c, "mcc", cpath)), static_cast<int>(integer(*c, "mnc", cpath)),
                              static_cast<int>(integer(*c, "lac", cpath)), integer(*c, "cid", cpath)};
        }
        return t;
    }
    if (type == "wait") {
        const auto ms = integer(j, "ms", path);
        if (ms < 0) throw ScenarioParseError(at(path, "ms"), "must be >= 0");
        return WaitStep{ms};
    }
    if (type == "inject_failure") {
        InjectFailureStep s;
        s.msisdn = str(j, "msisdn", path);
        const auto& plan = array(j, "plan", path);
        for (std::size_t i = 0; i < plan.size(); ++i) {
            const auto ppath = index(at(path, "plan"), i);
            if (!plan[i].is_string()) throw ScenarioParseError(ppath, "expected a string");
            const auto o = plan[i].get<std::string>();
            if (o != "accepted" && o != "transient" && o != "permanent") {
                throw ScenarioParseError(ppath, "expected accepted, transient or permanent");
            }
            s.plan.push_back(o);
        }
        return s;
    }
    throw ScenarioParseError(at(path, "type"), "unknown step type '" + type + "'");
}

Expectation parse_expectation(const json& j, const std::string& path) {
    object(j, path);
    const auto type = str(j, "type", path);
    const auto trigger = str(j, "trigger_id", path);
    if (type == "alert_state") {
        const auto expected = str(j, "expected", path);
        try {
            core::alert_state_from_string(expected);
        } catch (const std::invalid_argument&) {
            throw ScenarioParseError(at(path, "expected"), "unknown alert state '" + expected + "'");
        }
        return ExpectState{trigger, expected};
    }
    if (type == "delivered_count") {
        const auto n = integer(j, "n", path);
        if (n < 0) throw ScenarioParseError(at(path, "n"), "must be >= 0");
        return ExpectDeliveredCount{trigger, static_cast<std::size_t>(n)};
    }
    if (type == "message_contains") return ExpectMessageContains{trigger, str(j, "substring", path)};
    throw ScenarioParseError(at(path, "type"), "unknown expectation type '" + type + "'");
}

}  // namespace

Scenario parse_scenario(std::string_view json_text) {
    json root;
    try {
        root = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw ScenarioParseError("$", std::string("invalid JSON: ") + e.what());
    }
    object(root, "");
    Scenario s;
    s.name = str(root, "name", "");

    std::set<std::string> devices;
    const auto& dev = array(root, "devices", "");
    for (std::size_t i = 0; i < dev.size(); ++i) {
        const auto path = index("devices", i);
        auto d = parse_device(dev[i], path);
        if (!devices.insert(d.device_id).second) throw ScenarioParseError(at(path, "device_id"), "duplicate device");
        s.devices.push_back(std::move(d));
    }

    std::set<std::string> triggers;
    if (field(root, "steps")) {
        const auto& steps = array(root, "steps", "");
        for (std::size_t i = 0; i < steps.size(); ++i) {
            const auto path = index("steps", i);
            auto step = parse_step(steps[i], path);
            if (const auto* t = std::get_if<TriggerStep>(&step)) {
                if (!devices.contains(t->device_id)) {
                    throw ScenarioParseError(at(path, "device_id"), "unknown device '" + t->device_id + "'");
                }
                if (!triggers.insert(t->trigger_id).second) {
                    throw ScenarioParseError(at(path, "trigger_id"), "duplicate trigger_id");
                }
            }
            s.steps.push_back(std::move(step));
        }
    }

    if (field(root, "expectations")) {
        const auto& ex = array(root, "expectations", "");
        for (std::size_t i = 0; i < ex.size(); ++i) {
            const auto path = index("expectations", i);
            auto e = parse_expectation(ex[i], path);
            if (!triggers.contains(trigger_of(e))) {
                throw ScenarioParseError(at(path, "trigger_id"), "no trigger step named '" + trigger_of(e) + "'");
            }
            s.expectations.push_back(std::move(e));
        }
    }
    return s;
}

Scenario load_scenario(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ScenarioParseError("$", "cannot read " + path);
    std::ostringstream text;
    text << in.rdbuf();
    return parse_scenario(text.str());
}

}  // namespace sos::sim
