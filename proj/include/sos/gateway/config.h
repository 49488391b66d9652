#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

#include "sos/http_transport.h"
#include "sos/transport.h"

namespace sos::gateway {

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

enum class TransportKind { Mock, Http };

std::string_view to_string(TransportKind kind);
/// Throws ConfigError.
TransportKind transport_kind_from_string(std::string_view s);

struct ListenAddress {
    std::string host;
    int port = 0;
};

/// "host:port" or ":port" (loopback). Port 0 picks a free port.
ListenAddress parse_listen(std::string_view addr);

struct GatewayConfig {
    std::string listen = "127.0.0.1:8080";
    /// Empty keeps the registry in memory only.
    std::string snapshot_path;
    std::string gazetteer_path;
    std::string cell_db_path;
    TransportKind transport = TransportKind::Mock;
    transport::HttpProviderConfig http;
    transport::RetryPolicy retry;
    std::int64_t max_fix_age_ms = 120'000;
    double geocode_radius_km = 10.0;
    std::size_t max_in_flight = 8;
    std::size_t pipeline_workers = 4;
    std::int64_t heartbeat_ms = 15'000;
    /// Directory served under /console; empty disables the mount.
    std::string console_dir;

    /// Throws ConfigError.
    void validate() const;
};

/// Parses a JSON config. Missing keys keep their defaults; relative paths
/// resolve against `base_dir` when it is non-empty.
GatewayConfig parse_config(std::string_view json_text, const std::string& base_dir = {});
GatewayConfig load_config(const std::string& path);

}  // namespace sos::gateway
