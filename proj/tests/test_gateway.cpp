#include <doctest.h>

#include <httplib.h>

#include <unistd.h>

#include <filesystem>
#include <fstream>
#include <set>
#include <thread>
#include <nlohmann/json.hpp>

#include "sos/gateway/config.h"
#include "sos/gateway/event_bus.h"
#include "sos/gateway/server.h"
#include "sos/gateway/service.h"
#include "sos/gateway/views.h"

using namespace sos;
using namespace sos::gateway;
using nlohmann::json;
using namespace std::chrono_literals;

namespace {

const char* kGazetteer =
    "# place_id\tname\tadmin\tcountry\tlat\tlon\n"
    "nh37\tNational Highway 37, Borjhar\tGuwahati, Assam\tIndia\t26.1\t91.6\n";

struct Harness {
    SystemClock clock;
    std::unique_ptr<GatewayService> service;
    std::unique_ptr<GatewayServer> server;
    std::unique_ptr<httplib::Client> client;

    explicit Harness(GatewayConfig config = {}) {
        config.retry.base_delay_ms = 1;
        service = std::make_unique<GatewayService>(config, registry::Registry{}, geo::parse_gazetteer(kGazetteer),
                                                   geo::CellDb{}, std::make_shared<transport::MockBackend>(), clock);
        server = std::make_unique<GatewayServer>(*service);
        server->bind({"127.0.0.1", 0});
        server->start();
        client = std::make_unique<httplib::Client>("127.0.0.1", server->port());
    }
    ~Harness() {
        server->stop();
        service->shutdown();
    }

    httplib::Result post(const std::string& path, const json& body) {
        return client->Post(path, body.dump(), "application/json");
    }

    void device_with_contacts(const std::string& id, int n) {
        REQUIRE(post("/devices", {{"device_id", id}})->status == 201);
        for (int i = 0; i < n; ++i) {
            REQUIRE(post("/devices/" + id + "/contacts", {{"number", "+4477009001" + std::to_string(10 + i)}})->status ==
                    201);
        }
    }

    json wait_alert(const std::string& id) {
        const auto a = service->wait_terminal(id, 5s);
        REQUIRE(a);
        REQUIRE(core::is_terminal(a->state));
        const auto res = client->Get("/alerts/" + id);
        REQUIRE(res);
        REQUIRE(res->status == 200);
        return json::parse(res->body);
    }
};

/// Reads /events until `done` returns true for the accumulated text, or
/// the deadline passes.
std::string read_stream(int port, const std::function<bool(const std::string&)>& done,
                        std::chrono::milliseconds deadline = 3s) {
    httplib::Client c("127.0.0.1", port);
    c.set_read_timeout(deadline);
    std::string text;
    const auto until = std::chrono::steady_clock::now() + deadline;
    c.Get("/events", [&](const char* data, std::size_t len) {
        text.append(data, len);
        return !done(text) && std::chrono::steady_clock::now() < until;
    });
    return text;
}

std::vector<json> stream_events(const std::string& text) {
    std::vector<json> out;
    std::size_t pos = 0;
    while ((pos = text.find("data: ", pos)) != std::string::npos) {
        const auto end = text.find('\n', pos);
        if (end == std::string::npos) break;
        out.push_back(json::parse(text.substr(pos + 6, end - pos - 6)));
        pos = end;
    }
    return out;
}

std::size_t count(const std::string& text, const std::string& needle) {
    std::size_t n = 0;
    for (auto pos = text.find(needle); pos != std::string::npos; pos = text.find(needle, pos + 1)) ++n;
    return n;
}

}  // namespace

TEST_CASE("parse_listen") {
    CHECK(parse_listen("127.0.0.1:8080").port == 8080);
    CHECK(parse_listen(":9000").host == "127.0.0.1");
    CHECK(parse_listen("0.0.0.0:0").port == 0);
    CHECK_THROWS_AS(parse_listen("localhost"), ConfigError);
    CHECK_THROWS_AS(parse_listen("h:70000"), ConfigError);
    CHECK_THROWS_AS(parse_listen("h:80x"), ConfigError);
}

TEST_CASE("parse_config") {
    const auto c = parse_config(R"({"listen":"127.0.0.1:9999","gazetteer_path":"g.tsv","transport":"mock",
                                    "retry":{"max_attempts":2},"geocode_radius_km":5})",
                                "/etc/sos");
    CHECK(c.listen == "127.0.0.1:9999");
    CHECK(c.gazetteer_path == "/etc/sos/g.tsv");
    CHECK(c.retry.max_attempts == 2);
    CHECK(c.retry.base_delay_ms == 500);
    CHECK(c.geocode_radius_km == 5);
    CHECK(c.transport == TransportKind::Mock);

    const auto h = parse_config(R"({"transport":{"kind":"http","http":{"endpoint":"http://sms.local/send",
                                    "bearer_token":"t","timeout_ms":1000}}})");
    CHECK(h.transport == TransportKind::Http);
    CHECK(h.http.timeout_ms == 1000);

    CHECK_THROWS_AS(parse_config("[]"), ConfigError);
    CHECK_THROWS_AS(parse_config("{"), ConfigError);
    CHECK_THROWS_AS(parse_config(R"({"transport":"carrier-pigeon"})"), ConfigError);
    CHECK_THROWS_AS(parse_config(R"({"transport":{"kind":"http","http":{"endpoint":"https://x"}}})"), ConfigError);
    CHECK_THROWS_AS(parse_config(R"({"listen":42})"), ConfigError);
    CHECK_THROWS_AS(parse_config(R"({"retry":{"max_attempts":0}})"), ConfigError);
}

TEST_CASE("mask_msisdn") {
    CHECK(mask_msisdn(registry::Msisdn::parse("+15551234567")) == "+1•••••••4567");
    CHECK(mask_msisdn(registry::Msisdn::parse("+447700900123")) == "+44•••••••0123");
    CHECK(mask_msisdn(registry::Msisdn::parse("+919876543210")) == "+91•••••••3210");
    CHECK(mask_msisdn(registry::Msisdn::parse("+35312345678")) == "+353•••••••5678");
    CHECK(mask_msisdn(registry::Msisdn::parse("+79161234567")) == "+7•••••••4567");
    CHECK(country_code_length("2125550000") == 3);
}

TEST_CASE("EventBus replay window and drop-oldest") {
    EventBus bus(3, 4);
    for (int i = 0; i < 5; ++i) bus.publish(EventKind::Created, "A" + std::to_string(i), "{}");
    auto sub = bus.subscribe();
    std::vector<std::string> ids;
    while (auto e = sub->next(0ms)) ids.push_back(e->alert_id);
    CHECK(ids == std::vector<std::string>{"A2", "A3", "A4"});

    for (int i = 0; i < 10; ++i) bus.publish(EventKind::StateChanged, "B" + std::to_string(i), "{}");
    ids.clear();
    while (auto e = sub->next(0ms)) ids.push_back(e->alert_id);
    CHECK(ids == std::vector<std::string>{"B6", "B7", "B8", "B9"});
    CHECK(sub->dropped() == 6);

    bus.shutdown();
    CHECK(sub->closed());
    CHECK(bus.subscribe()->closed());
}

TEST_CASE("device and contact endpoints") {
    Harness h;
    CHECK(h.client->Get("/healthz")->body == "ok");
    CHECK(h.post("/devices", {{"device_id", "d1"}})->status == 201);
    CHECK(h.post("/devices", {{"device_id", "d1"}})->status == 200);
    CHECK(h.post("/devices", {{"device_id", "bad id"}})->status == 400);
    CHECK(h.post("/devices", json::object())->status == 400);

    CHECK(h.post("/devices/d1/contacts", {{"number", "+1 (555) 123-4567"}, {"label", "Mom"}})->status == 201);
    auto dup = h.post("/devices/d1/contacts", {{"number", "+15551234567"}});
    CHECK(dup->status == 409);
    CHECK(json::parse(dup->body)["error"] == "DuplicateContact");
    CHECK(h.post("/devices/d1/contacts", {{"number", "5551234567"}})->status == 400);
    CHECK(h.post("/devices/nope/contacts", {{"number", "+15551234567"}})->status == 404);

    auto view = json::parse(h.client->Get("/devices/d1")->body);
    CHECK(view["contacts"][0]["number"] == "+1•••••••4567");
    CHECK(view["contacts"][0]["label"] == "Mom");
    CHECK(h.client->Get("/devices/zz")->status == 404);

    CHECK(h.client->Put("/devices/d1/message", json{{"text", "I need help!"}}.dump(), "application/json")->status == 204);
    CHECK(h.client->Put("/devices/d1/message", json{{"text", "  "}}.dump(), "application/json")->status == 400);
    CHECK(json::parse(h.client->Get("/devices/d1")->body)["custom_message"] == "I need help!");

    CHECK(h.client->Delete("/devices/d1/contacts/%2B15551234567")->status == 204);
    CHECK(h.client->Delete("/devices/d1/contacts/%2B15551234567")->status == 404);
    CHECK(h.client->Get("/no/such/route")->status == 404);
}

TEST_CASE("trigger runs the pipeline and is idempotent") {
    Harness h;
    h.device_with_contacts("d1", 3);
    REQUIRE(h.client->Put("/devices/d1/message", json{{"text", "I need help!"}}.dump(), "application/json"));
    const auto now = h.clock.now_ms();
    const json body = {{"trigger_id", "t-1"}, {"fix", {{"lat", 26.1}, {"lon", 91.6}, {"fixed_at", now}}}};
    auto res = h.post("/devices/d1/sos", body);
    REQUIRE(res->status == 202);
    const auto id = json::parse(res->body)["alert_id"].get<std::string>();

    const auto a = h.wait_alert(id);
    CHECK(a["state"] == "Delivered");
    CHECK(a["message"] ==
          "I need help! Longitude:91.6 Latitude:26.1 Near: National Highway 37, Borjhar, Guwahati, Assam, India");
    CHECK(a["location"]["lat"] == "26.1");
    CHECK(a["location"]["lon"] == "91.6");
    CHECK(a["delivered_count"] == 3);
    CHECK(a["deliveries"][0]["to"] == "+44•••••••0110");
    CHECK(a["state_history"].size() == 5);

    const auto calls = h.service->mock()->send_calls();
    res = h.post("/devices/d1/sos", body);
    CHECK(res->status == 200);
    CHECK(json::parse(res->body)["alert_id"] == id);
    CHECK(h.service->mock()->send_calls() == calls);

    CHECK(h.post("/devices/nope/sos", body)->status == 404);
    CHECK(h.client->Get("/alerts/A999999")->status == 404);
    CHECK(json::parse(h.client->Get("/alerts")->body).size() == 1);
}

TEST_CASE("trigger without position still dispatches") {
    Harness h;
    h.device_with_contacts("d1", 2);
    auto res = h.post("/devices/d1/sos", {{"trigger_id", "nofix"}});
    REQUIRE(res->status == 202);
    const auto a = h.wait_alert(json::parse(res->body)["alert_id"]);
    CHECK(a["state"] == "Delivered");
    CHECK(a["message"] == "EMERGENCY! I need help. Location unavailable");
    CHECK(a["location"]["kind"] == "unavailable");
    CHECK(a["delivered_count"] == 2);
}

TEST_CASE("malformed triggers") {
    Harness h;
    h.device_with_contacts("d1", 1);
    auto error_path = [&](const json& body) {
        const auto res = h.post("/devices/d1/sos", body);
        REQUIRE(res->status == 400);
        return json::parse(res->body)["message"].get<std::string>();
    };
    CHECK(error_path(json::object()).rfind("trigger_id", 0) == 0);
    CHECK(error_path({{"trigger_id", "t"}, {"fix", {{"lat", 95}, {"lon", 0}, {"fixed_at", 1}}}}).rfind("fix", 0) == 0);
    CHECK(error_path({{"trigger_id", "t"}, {"fix", {{"lat", 1}, {"lon", 0}}}}).rfind("fix.fixed_at", 0) == 0);
    CHECK(error_path({{"trigger_id", "t"}, {"cell", {{"mcc", 404}, {"mnc", 1}, {"lac", 1}}}}).rfind("cell.cid", 0) ==
          0);
    CHECK(error_path({{"trigger_id", std::string(65, 'x')}}).find("trigger_id") != std::string::npos);
    CHECK(h.client->Post("/devices/d1/sos", "{not json", "application/json")->status == 400);
}

TEST_CASE("acknowledge") {
    Harness h;
    h.device_with_contacts("d1", 1);
    const auto id = json::parse(h.post("/devices/d1/sos", {{"trigger_id", "t"}})->body)["alert_id"].get<std::string>();
    h.wait_alert(id);
    auto res = h.post("/alerts/" + id + "/ack", {{"responder_id", "resp-1"}});
    REQUIRE(res->status == 200);
    CHECK(json::parse(res->body)["acknowledged_by"]["responder_id"] == "resp-1");
    res = h.post("/alerts/" + id + "/ack", {{"responder_id", "resp-2"}});
    CHECK(res->status == 409);
    CHECK(json::parse(res->body)["error"] == "AlreadyAcknowledged");
    CHECK(h.post("/alerts/A404/ack", {{"responder_id", "r"}})->status == 404);
}

TEST_CASE("permanent failure through the mock endpoints") {
    Harness h;
    h.device_with_contacts("d1", 3);
    CHECK(h.post("/mock/failure-plans", {{"msisdn", "+447700900111"}, {"plan", {"permanent"}}})->status == 204);
    CHECK(h.post("/mock/failure-plans", {{"msisdn", "+447700900111"}, {"plan", {"sometimes"}}})->status == 400);
    const auto id = json::parse(h.post("/devices/d1/sos", {{"trigger_id", "t"}})->body)["alert_id"].get<std::string>();
    const auto a = h.wait_alert(id);
    CHECK(a["state"] == "PartiallyDelivered");
    CHECK(a["delivered_count"] == 2);
    CHECK(json::parse(h.client->Get("/mock/deliveries")->body).size() == 2);
    CHECK(h.client->Delete("/mock/state")->status == 204);
    CHECK(json::parse(h.client->Get("/mock/deliveries")->body).empty());
}

TEST_CASE("no contacts ends Failed with a reason") {
    Harness h;
    h.device_with_contacts("d1", 0);
    const auto id = json::parse(h.post("/devices/d1/sos", {{"trigger_id", "t"}})->body)["alert_id"].get<std::string>();
    const auto a = h.wait_alert(id);
    CHECK(a["state"] == "Failed");
    CHECK(a["failure_reason"] == "NoContactsRegistered");
}

TEST_CASE("event stream orders Created before StateChanged") {
    Harness h;
    h.device_with_contacts("d1", 2);
    std::string text;
    std::thread reader([&] {
        text = read_stream(h.server->port(), [](const std::string& t) { return t.find("\"Delivered\"") != std::string::npos; });
    });
    // Give the reader a moment to subscribe; replay covers the race anyway.
    std::this_thread::sleep_for(100ms);
    const auto id = json::parse(h.post("/devices/d1/sos", {{"trigger_id", "t"}})->body)["alert_id"].get<std::string>();
    reader.join();

    CHECK(text.find("event: alert\n") != std::string::npos);
    const auto events = stream_events(text);
    REQUIRE(events.size() >= 2);
    CHECK(events.front()["kind"] == "Created");
    std::vector<std::string> states;
    for (std::size_t i = 1; i < events.size(); ++i) {
        CHECK(events[i]["kind"] == "StateChanged");
        CHECK(events[i]["alert"]["alert_id"] == id);
        states.push_back(events[i]["alert"]["state"]);
    }
    CHECK(states == std::vector<std::string>{"Locating", "Composing", "Dispatching", "Delivered"});
}

TEST_CASE("event stream replays recent events on connect") {
    Harness h;
    h.device_with_contacts("d1", 1);
    std::vector<std::string> ids;
    for (int i = 0; i < 3; ++i) {
        const auto res = h.post("/devices/d1/sos", {{"trigger_id", "t" + std::to_string(i)}});
        ids.push_back(json::parse(res->body)["alert_id"]);
        h.wait_alert(ids.back());
    }
    const auto text = read_stream(h.server->port(), [](const std::string& t) { return count(t, "\"kind\":\"StateChanged\"") >= 12; });
    std::set<std::string> terminal;
    for (const auto& e : stream_events(text)) {
        if (e["alert"]["state"] == "Delivered") terminal.insert(e["alert"]["alert_id"].get<std::string>());
    }
    CHECK(terminal == std::set<std::string>(ids.begin(), ids.end()));
}

TEST_CASE("idle stream sends heartbeats") {
    GatewayConfig c;
    c.heartbeat_ms = 100;
    Harness h(c);
    const auto text = read_stream(h.server->port(), [](const std::string& t) { return count(t, ": heartbeat") >= 2; });
    CHECK(count(text, ": heartbeat") >= 2);
    CHECK(text.find("event:") == std::string::npos);
}

TEST_CASE("every mutation leaves a loadable snapshot") {
    const auto dir = std::filesystem::temp_directory_path() / ("sos-gw-" + std::to_string(::getpid()));
    std::filesystem::create_directories(dir);
    GatewayConfig c;
    c.snapshot_path = (dir / "registry.json").string();
    Harness h(c);
    auto check = [&] {
        const auto loaded = registry::load_snapshot(c.snapshot_path);
        CHECK(loaded.devices() == std::vector<registry::DeviceProfile>{h.service->device("d1")});
    };
    h.post("/devices", {{"device_id", "d1"}});
    check();
    h.post("/devices/d1/contacts", {{"number", "+15551234567"}, {"label", "Mom"}});
    check();
    h.client->Put("/devices/d1/message", json{{"text", "Help"}}.dump(), "application/json");
    check();
    h.client->Delete("/devices/d1/contacts/%2B15551234567");
    check();
    std::filesystem::remove_all(dir);
}

TEST_CASE("console mount") {
    const auto dir = std::filesystem::temp_directory_path() / ("sos-console-" + std::to_string(::getpid()));
    std::filesystem::create_directories(dir);
    std::ofstream(dir / "index.html") << "<!doctype html><title>SOS</title>";
    GatewayConfig c;
    c.console_dir = dir.string();
    Harness h(c);
    const auto res = h.client->Get("/console/index.html");
    REQUIRE(res);
    CHECK(res->status == 200);
    CHECK(res->body.find("SOS") != std::string::npos);
    CHECK(h.client->Get("/console/")->body == res->body);
    std::filesystem::remove_all(dir);
}
