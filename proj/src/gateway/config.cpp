#include "sos/gateway/config.h"

#include <charconv>
#include <filesystem>
#include <fstream>
#include <nlohmann/json.hpp>
#include <sstream>

namespace sos::gateway {

namespace fs = std::filesystem;
using nlohmann::json;

std::string_view to_string(TransportKind kind) { return kind == TransportKind::Mock ? "mock" : "http"; }

TransportKind transport_kind_from_string(std::string_view s) {
    if (s == "mock") return TransportKind::Mock;
    if (s == "http") return TransportKind::Http;
    throw ConfigError("transport must be mock or http, got '" + std::string(s) + "'");
}

ListenAddress parse_listen(std::string_view addr) {
    const auto colon = addr.rfind(':');
    if (colon == std::string_view::npos) throw ConfigError("listen address needs host:port: " + std::string(addr));
    ListenAddress out;
    out.host = colon == 0 ? "127.0.0.1" : std::string(addr.substr(0, colon));
    const auto port = addr.substr(colon + 1);
    const auto [end, ec] = std::from_chars(port.data(), port.data() + port.size(), out.port);
    if (port.empty() || ec != std::errc{} || end != port.data() + port.size() || out.port < 0 || out.port > 65535) {
        throw ConfigError("bad port in listen address: " + std::string(addr));
    }
    return out;
}

void GatewayConfig::validate() const {
    parse_listen(listen);
    try {
        retry.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("retry: ") + e.what());
    }
    if (max_fix_age_ms < 0) throw ConfigError("max_fix_age_ms must be >= 0");
    if (!(geocode_radius_km > 0)) throw ConfigError("geocode_radius_km must be > 0");
    if (max_in_flight == 0) throw ConfigError("max_in_flight must be >= 1");
    if (pipeline_workers == 0) throw ConfigError("pipeline_workers must be >= 1");
    if (heartbeat_ms <= 0) throw ConfigError("heartbeat_ms must be > 0");
    if (transport == TransportKind::Http) {
        try {
            transport::HttpProviderBackend probe(http);
        } catch (const std::invalid_argument& e) {
            throw ConfigError(std::string("http transport: ") + e.what());
        }
    }
}

namespace {

template <typename T>
void read(const json& j, const char* key, T& out) {
    if (const auto it = j.find(key); it != j.end() && !it->is_null()) {
        try {
            out = it->get<T>();
        } catch (const json::exception&) {
            throw ConfigError(std::string("config key '") + key + "' has the wrong type");
        }
    }
}

void read_path(const json& j, const char* key, const std::string& base_dir, std::string& out) {
    read(j, key, out);
    if (!out.empty() && !base_dir.empty() && fs::path(out).is_relative()) out = (fs::path(base_dir) / out).string();
}

}  // namespace

GatewayConfig parse_config(std::string_view json_text, const std::string& base_dir) {
    json j;
    try {
        j = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    if (!j.is_object()) throw ConfigError("config must be a JSON object");

    GatewayConfig c;
    read(j, "listen", c.listen);
    read_path(j, "snapshot_path", base_dir, c.snapshot_path);
    read_path(j, "gazetteer_path", base_dir, c.gazetteer_path);
    read_path(j, "cell_db_path", base_dir, c.cell_db_path);
    read_path(j, "console_dir", base_dir, c.console_dir);
    read(j, "max_fix_age_ms", c.max_fix_age_ms);
    read(j, "geocode_radius_km", c.geocode_radius_km);
    read(j, "max_in_flight", c.max_in_flight);
    read(j, "pipeline_workers", c.pipeline_workers);
    read(j, "heartbeat_ms", c.heartbeat_ms);

    if (const auto t = j.find("transport"); t != j.end()) {
        if (t->is_string()) {
            c.transport = transport_kind_from_string(t->get<std::string>());
        } else if (t->is_object()) {
            std::string kind = "mock";
            read(*t, "kind", kind);
            c.transport = transport_kind_from_string(kind);
            if (const auto h = t->find("http"); h != t->end()) {
                read(*h, "endpoint", c.http.endpoint);
                read(*h, "bearer_token", c.http.bearer_token);
                read(*h, "timeout_ms", c.http.timeout_ms);
            }
        } else {
            throw ConfigError("transport must be a string or an object");
        }
    }
    if (const auto r = j.find("retry"); r != j.end()) {
        read(*r, "max_attempts", c.retry.max_attempts);
        read(*r, "base_delay_ms", c.retry.base_delay_ms);
        read(*r, "factor", c.retry.factor);
        read(*r, "cap_ms", c.retry.cap_ms);
    }
    c.validate();
    return c;
}

GatewayConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read config file " + path);
    std::ostringstream text;
    text << in.rdbuf();
    return parse_config(text.str(), fs::path(path).parent_path().string());
}

}  // namespace sos::gateway
