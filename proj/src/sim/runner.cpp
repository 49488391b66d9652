#include "sos/sim/runner.h"

#include <httplib.h>

#include <cctype>
#include <cstdio>
#include <map>
#include <sstream>
#include <thread>

namespace sos::sim {

using nlohmann::json;
using Clock = std::chrono::steady_clock;

std::string_view to_string(SimErrorKind kind) {
    switch (kind) {
        case SimErrorKind::GatewayUnreachable: return "GatewayUnreachable";
        case SimErrorKind::GatewayRejected: return "GatewayRejected";
        case SimErrorKind::ExpectationTimeout: return "ExpectationTimeout";
    }
    return "?";
}

std::string wire_trigger_id(const std::string& name, std::uint64_t seed) {
    char hex[17];
    std::snprintf(hex, sizeof hex, "%016llx", static_cast<unsigned long long>(seed));
    return name + "-" + hex;
}

namespace {

std::int64_t ms_since(Clock::time_point t0) {
    return std::chrono::duration_cast<std::chrono::milliseconds>(Clock::now() - t0).count();
}

std::int64_t wall_ms() {
    return std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::system_clock::now().time_since_epoch())
        .count();
}

std::string url_encode(const std::string& s) {
    std::string out;
    for (unsigned char c : s) {
        if (std::isalnum(c) || c == '-' || c == '_' || c == '.') {
            out.push_back(static_cast<char>(c));
        } else {
            char buf[4];
            std::snprintf(buf, sizeof buf, "%%%02X", c);
            out += buf;
        }
    }
    return out;
}

class Gateway {
public:
    explicit Gateway(const std::string& url) : url_(url), client_(url) {
        if (!client_.is_valid()) throw SimError(SimErrorKind::GatewayUnreachable, "bad gateway url " + url);
        client_.set_connection_timeout(std::chrono::seconds(2));
        client_.set_read_timeout(std::chrono::seconds(10));
    }

    /// Returns (status, parsed body or null).
    std::pair<int, json> call(const std::string& method, const std::string& path, const json* body = nullptr) {
        httplib::Result res = [&] {
            const std::string payload = body ? body->dump() : std::string();
            if (method == "GET") return client_.Get(path);
            if (method == "PUT") return client_.Put(path, payload, "application/json");
            return client_.Post(path, payload, "application/json");
        }();
        if (!res) {
            throw SimError(SimErrorKind::GatewayUnreachable,
                           "cannot reach gateway at " + url_ + ": " + httplib::to_string(res.error()));
        }
        json parsed = json::parse(res->body, nullptr, false);
        return {res->status, parsed.is_discarded() ? json(nullptr) : parsed};
    }

    json expect(const std::string& method, const std::string& path, const json& body,
                std::initializer_list<int> ok, std::initializer_list<std::string> ok_errors = {}) {
        auto [status, parsed] = call(method, path, &body);
        for (int s : ok) {
            if (status == s) return parsed;
        }
        const std::string code = parsed.is_object() ? parsed.value("error", "") : "";
        for (const auto& e : ok_errors) {
            if (code == e) return parsed;
        }
        throw SimError(SimErrorKind::GatewayRejected, method + " " + path + " returned " + std::to_string(status) +
                                                          (parsed.is_null() ? "" : ": " + parsed.dump()));
    }

private:
    std::string url_;
    httplib::Client client_;
};

json trigger_body(const TriggerStep& t, std::uint64_t seed) {
    json body = {{"trigger_id", wire_trigger_id(t.trigger_id, seed)}};
    if (t.fix) {
        body["fix"] = {{"lat", t.fix->lat}, {"lon", t.fix->lon}, {"fixed_at", wall_ms() - t.fix->age_ms}};
        if (t.fix->accuracy_m) body["fix"]["accuracy_m"] = *t.fix->accuracy_m;
    }
    if (t.cell) body["cell"] = {{"mcc", t.cell->mcc}, {"mnc", t.cell->mnc}, {"lac", t.cell->lac}, {"cid", t.cell->cid}};
    return body;
}

ExpectationOutcome evaluate(const Expectation& e, const std::map<std::string, const TriggerOutcome*>& by_name) {
    ExpectationOutcome out;
    out.type = std::string(type_name(e));
    out.trigger_id = trigger_of(e);
    const json& alert = by_name.at(out.trigger_id)->alert;
    std::visit(
        [&](const auto& x) {
            using T = std::decay_t<decltype(x)>;
            if constexpr (std::is_same_v<T, ExpectState>) {
                out.expected = x.expected;
                out.actual = alert.value("state", "");
                out.passed = out.actual == out.expected;
            } else if constexpr (std::is_same_v<T, ExpectDeliveredCount>) {
                const auto n = alert.value("delivered_count", std::size_t{0});
                out.expected = std::to_string(x.n);
                out.actual = std::to_string(n);
                out.passed = n == x.n;
            } else {
                const auto msg = alert.contains("message") && alert["message"].is_string()
                                     ? alert["message"].get<std::string>()
                                     : std::string();
                out.expected = x.substring;
                out.actual = msg;
                out.passed = msg.find(x.substring) != std::string::npos;
            }
        },
        e);
    return out;
}

}  // namespace

bool Report::passed() const {
    for (const auto& e : expectations) {
        if (!e.passed) return false;
    }
    return true;
}

json Report::to_json(bool with_timings) const {
    json triggers_j = json::array();
    for (const auto& t : triggers) {
        triggers_j.push_back({{"trigger_id", t.trigger_id},
                              {"alert_id", t.alert_id},
                              {"state", t.alert.value("state", "")},
                              {"delivered_count", t.alert.value("delivered_count", 0)},
                              {"message", t.alert.contains("message") ? t.alert["message"] : json(nullptr)}});
    }
    json exp = json::array();
    std::size_t failed = 0;
    for (const auto& e : expectations) {
        exp.push_back({{"type", e.type},
                       {"trigger_id", e.trigger_id},
                       {"expected", e.expected},
                       {"actual", e.actual},
                       {"passed", e.passed}});
        failed += e.passed ? 0 : 1;
    }
    char seed_hex[19];
    std::snprintf(seed_hex, sizeof seed_hex, "0x%016llx", static_cast<unsigned long long>(seed));
    json out = {{"scenario", scenario},
                {"seed", seed_hex},
                {"passed", passed()},
                {"summary", {{"total", expectations.size()}, {"passed", expectations.size() - failed}, {"failed", failed}}},
                {"triggers", std::move(triggers_j)},
                {"expectations", std::move(exp)}};
    if (with_timings) {
        json per = json::object();
        for (const auto& t : triggers) per[t.trigger_id] = t.elapsed_ms;
        out["timings"] = {{"total_ms", total_ms}, {"trigger_to_terminal_ms", std::move(per)}};
    }
    return out;
}

std::string Report::to_text() const {
    std::ostringstream os;
    os << "scenario " << scenario << '\n';
    for (const auto& t : triggers) {
        os << "  trigger " << t.trigger_id << " -> " << t.alert_id << ' ' << t.alert.value("state", "") << " ("
           << t.alert.value("delivered_count", 0) << " delivered)\n";
    }
    std::size_t failed = 0;
    for (std::size_t i = 0; i < expectations.size(); ++i) {
        const auto& e = expectations[i];
        failed += e.passed ? 0 : 1;
        os << (e.passed ? "  PASS " : "  FAIL ") << '[' << i << "] " << e.type << ' ' << e.trigger_id << ": expected "
           << e.expected;
        if (!e.passed) os << ", got " << e.actual;
        os << '\n';
    }
    os << (failed == 0 ? "PASS" : "FAIL") << ' ' << expectations.size() - failed << '/' << expectations.size()
       << " expectations\n";
    return os.str();
}

Report run_scenario(const Scenario& scenario, const RunOptions& options) {
    const auto t0 = Clock::now();
    Gateway gw(options.gateway_url);
    Report report;
    report.scenario = scenario.name;
    report.seed = options.seed;

    for (const auto& d : scenario.devices) {
        gw.expect("POST", "/devices", {{"device_id", d.device_id}}, {200, 201});
        for (const auto& c : d.contacts) {
            gw.expect("POST", "/devices/" + d.device_id + "/contacts", {{"number", c.number}, {"label", c.label}}, {201},
                      {"DuplicateContact"});
        }
        if (d.custom_message) gw.expect("PUT", "/devices/" + d.device_id + "/message", {{"text", *d.custom_message}}, {204});
    }

    for (const auto& step : scenario.steps) {
        if (const auto* t = std::get_if<TriggerStep>(&step)) {
            const auto start = Clock::now();
            const auto accepted = gw.expect("POST", "/devices/" + t->device_id + "/sos", trigger_body(*t, options.seed),
                                            {200, 202});
            TriggerOutcome out;
            out.trigger_id = t->trigger_id;
            out.alert_id = accepted.value("alert_id", "");
            const auto deadline = start + options.alert_timeout;
            for (;;) {
                auto [status, view] = gw.call("GET", "/alerts/" + url_encode(out.alert_id));
                if (status != 200) {
                    throw SimError(SimErrorKind::GatewayRejected, "GET /alerts/" + out.alert_id + " returned " +
                                                                      std::to_string(status));
                }
                if (view.value("terminal", false)) {
                    out.alert = std::move(view);
                    break;
                }
                if (Clock::now() >= deadline) {
                    throw SimError(SimErrorKind::ExpectationTimeout,
                                   "alert " + out.alert_id + " for trigger " + t->trigger_id + " not terminal after " +
                                       std::to_string(options.alert_timeout.count()) + " ms (state " +
                                       view.value("state", "?") + ")");
                }
                std::this_thread::sleep_for(options.poll_interval);
            }
            out.elapsed_ms = ms_since(start);
            report.triggers.push_back(std::move(out));
        } else if (const auto* w = std::get_if<WaitStep>(&step)) {
            std::this_thread::sleep_for(std::chrono::milliseconds(w->ms));
        } else {
            const auto& f = std::get<InjectFailureStep>(step);
            auto [status, body] = [&] {
                const json req = {{"msisdn", f.msisdn}, {"plan", f.plan}};
                return gw.call("POST", "/mock/failure-plans", &req);
            }();
            if (status == 404) {
                throw SimError(SimErrorKind::GatewayRejected, "gateway has no mock transport; cannot inject failures");
            }
            if (status != 204) {
                throw SimError(SimErrorKind::GatewayRejected,
                               "POST /mock/failure-plans returned " + std::to_string(status) + ": " + body.dump());
            }
        }
    }

    std::map<std::string, const TriggerOutcome*> by_name;
    for (const auto& t : report.triggers) by_name[t.trigger_id] = &t;
    for (const auto& e : scenario.expectations) report.expectations.push_back(evaluate(e, by_name));
    report.total_ms = ms_since(t0);
    return report;
}

}  // namespace sos::sim
