#include <doctest.h>

#include <httplib.h>

#include "sos/gateway/server.h"
#include "sos/gateway/service.h"
#include "sos/sim/runner.h"
#include "sos/sim/scenario.h"

using namespace sos;
using namespace sos::sim;
using namespace std::chrono_literals;

namespace {

std::string parse_error_path(std::string_view text) {
    try {
        parse_scenario(text);
    } catch (const ScenarioParseError& e) {
        return e.path();
    }
    FAIL("expected ScenarioParseError");
    return {};
}

struct LiveGateway {
    SystemClock clock;
    std::unique_ptr<gateway::GatewayService> service;
    std::unique_ptr<gateway::GatewayServer> server;

    explicit LiveGateway(std::int64_t base_delay_ms = 1) {
        gateway::GatewayConfig c;
        c.retry.base_delay_ms = base_delay_ms;
        service = std::make_unique<gateway::GatewayService>(
            c, registry::Registry{},
            geo::parse_gazetteer("nh37\tNational Highway 37, Borjhar\tGuwahati, Assam\tIndia\t26.1\t91.6\n"),
            geo::CellDb{}, std::make_shared<transport::MockBackend>(), clock);
        server = std::make_unique<gateway::GatewayServer>(*service);
        server->bind({"127.0.0.1", 0});
        server->start();
    }
    ~LiveGateway() {
        server->stop();
        service->shutdown();
    }
    RunOptions options(std::uint64_t seed = 1) const {
        RunOptions o;
        o.gateway_url = server->base_url();
        o.seed = seed;
        return o;
    }
};

const char* kPaper = R"({
  "name": "paper",
  "devices": [{"device_id": "h1", "custom_message": "I need help!",
               "contacts": ["+919864012345", {"number": "+919435012345", "label": "Brother"}]}],
  "steps": [{"type": "trigger", "device_id": "h1", "trigger_id": "gps",
             "fix": {"lat": 26.1, "lon": 91.6}}],
  "expectations": [
    {"type": "alert_state", "trigger_id": "gps", "expected": "Delivered"},
    {"type": "delivered_count", "trigger_id": "gps", "n": 2},
    {"type": "message_contains", "trigger_id": "gps", "substring": "National Highway 37, Borjhar, Guwahati, Assam, India"}
  ]
})";

}  // namespace

TEST_CASE("parse_scenario accepts minimal and empty scenarios") {
    const auto s = parse_scenario(kPaper);
    CHECK(s.name == "paper");
    REQUIRE(s.devices.size() == 1);
    CHECK(s.devices[0].contacts[1].label == "Brother");
    REQUIRE(s.steps.size() == 1);
    const auto& t = std::get<TriggerStep>(s.steps[0]);
    CHECK(t.fix->lat == 26.1);
    CHECK_FALSE(t.cell);
    CHECK(s.expectations.size() == 3);
    CHECK(type_name(s.expectations[1]) == "delivered_count");

    const auto empty = parse_scenario(R"({"name":"noop","devices":[],"steps":[]})");
    CHECK(empty.steps.empty());
    CHECK(empty.expectations.empty());
}

TEST_CASE("parse_scenario reports field paths") {
    CHECK(parse_error_path(R"({"name":"x","devices":[],"steps":[{"type":"trigger","device_id":"ghost","trigger_id":"t"}]})") ==
          "steps[0].device_id");
    CHECK(parse_error_path("[1]") == "$");
    CHECK(parse_error_path("{") == "$");
    CHECK(parse_error_path(R"({"devices":[]})") == "name");
    CHECK(parse_error_path(R"({"name":"x","devices":[{"device_id":"a b"}]})") == "devices[0].device_id");
    CHECK(parse_error_path(R"({"name":"x","devices":[{"device_id":"a"},{"device_id":"a"}]})") == "devices[1].device_id");
    CHECK(parse_error_path(R"({"name":"x","devices":[{"device_id":"a","contacts":[{"label":"m"}]}]})") ==
          "devices[0].contacts[0].number");
    CHECK(parse_error_path(R"({"name":"x","devices":[],"steps":[{"type":"wait","ms":-1}]})") == "steps[0].ms");
    CHECK(parse_error_path(R"({"name":"x","devices":[],"steps":[{"type":"dance"}]})") == "steps[0].type");
    CHECK(parse_error_path(R"({"name":"x","devices":[],"steps":[{"type":"inject_failure","msisdn":"+1555","plan":["boom"]}]})") ==
          "steps[0].plan[0]");
    CHECK(parse_error_path(R"({"name":"x","devices":[{"device_id":"a"}],
        "steps":[{"type":"trigger","device_id":"a","trigger_id":"t","fix":{"lat":"north","lon":1}}]})") ==
          "steps[0].fix.lat");
    CHECK(parse_error_path(R"({"name":"x","devices":[{"device_id":"a"}],
        "steps":[{"type":"trigger","device_id":"a","trigger_id":"t"},{"type":"trigger","device_id":"a","trigger_id":"t"}]})") ==
          "steps[1].trigger_id");
    CHECK(parse_error_path(R"({"name":"x","devices":[],"expectations":[{"type":"alert_state","trigger_id":"nope","expected":"Delivered"}]})") ==
          "expectations[0].trigger_id");
    CHECK(parse_error_path(R"({"name":"x","devices":[{"device_id":"a"}],"steps":[{"type":"trigger","device_id":"a","trigger_id":"t"}],
        "expectations":[{"type":"alert_state","trigger_id":"t","expected":"Done"}]})") == "expectations[0].expected");
}

TEST_CASE("wire_trigger_id") {
    CHECK(wire_trigger_id("sos", 0) == "sos-0000000000000000");
    CHECK(wire_trigger_id("sos", 0xabc) == "sos-0000000000000abc");
}

TEST_CASE("run_scenario passes the paper scenario") {
    LiveGateway gw;
    const auto report = run_scenario(parse_scenario(kPaper), gw.options());
    CHECK(report.passed());
    REQUIRE(report.expectations.size() == 3);
    for (const auto& e : report.expectations) CHECK(e.passed);
    CHECK(report.to_text().find("PASS 3/3") != std::string::npos);
    CHECK(report.to_json()["summary"]["failed"] == 0);
    CHECK(report.to_json().contains("timings"));
    CHECK_FALSE(report.to_json(false).contains("timings"));
}

TEST_CASE("run_scenario marks expectations broken by injected failures") {
    LiveGateway gw;
    const auto s = parse_scenario(R"({
      "name": "doomed",
      "devices": [{"device_id": "h1", "contacts": ["+15551234567"]}],
      "steps": [{"type": "inject_failure", "msisdn": "+15551234567", "plan": ["permanent"]},
                {"type": "trigger", "device_id": "h1", "trigger_id": "t"}],
      "expectations": [{"type": "alert_state", "trigger_id": "t", "expected": "Delivered"},
                       {"type": "message_contains", "trigger_id": "t", "substring": "Location unavailable"}]
    })");
    const auto report = run_scenario(s, gw.options());
    CHECK_FALSE(report.passed());
    CHECK_FALSE(report.expectations[0].passed);
    CHECK(report.expectations[0].actual == "Failed");
    CHECK(report.expectations[1].passed);
    CHECK(report.to_text().find("FAIL [0]") != std::string::npos);
}

TEST_CASE("reports are deterministic for a fixed seed") {
    const auto s = parse_scenario(kPaper);
    std::string first;
    for (int i = 0; i < 2; ++i) {
        LiveGateway gw;
        const auto text = run_scenario(s, gw.options(42)).to_json(false).dump();
        if (i == 0) first = text;
        CHECK(text == first);
    }
    // Same seed against the same gateway replays the original alerts.
    LiveGateway gw;
    const auto a = run_scenario(s, gw.options(42)).to_json(false);
    const auto sends = gw.service->mock()->send_calls();
    const auto b = run_scenario(s, gw.options(42)).to_json(false);
    CHECK(a == b);
    CHECK(gw.service->mock()->send_calls() == sends);
    const auto c = run_scenario(s, gw.options(43)).to_json(false);
    CHECK(c["triggers"][0]["alert_id"] != a["triggers"][0]["alert_id"]);
}

TEST_CASE("gateway errors") {
    int port = 0;
    {
        httplib::Server probe;
        port = probe.bind_to_any_port("127.0.0.1");
    }
    RunOptions o;
    o.gateway_url = "http://127.0.0.1:" + std::to_string(port);
    try {
        run_scenario(parse_scenario(kPaper), o);
        FAIL("expected SimError");
    } catch (const SimError& e) {
        CHECK(e.kind() == SimErrorKind::GatewayUnreachable);
    }

    LiveGateway slow(500);
    const auto s = parse_scenario(R"({
      "name": "slow",
      "devices": [{"device_id": "h1", "contacts": ["+15551234567"]}],
      "steps": [{"type": "inject_failure", "msisdn": "+15551234567", "plan": ["transient", "transient"]},
                {"type": "trigger", "device_id": "h1", "trigger_id": "t"}]
    })");
    auto opts = slow.options();
    opts.alert_timeout = 100ms;
    try {
        run_scenario(s, opts);
        FAIL("expected SimError");
    } catch (const SimError& e) {
        CHECK(e.kind() == SimErrorKind::ExpectationTimeout);
    }
}
