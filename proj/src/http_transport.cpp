#include "sos/http_transport.h"

#include <httplib.h>

#include <nlohmann/json.hpp>
#include <stdexcept>

namespace sos::transport {

namespace {

std::string to_hex(const std::vector<std::uint8_t>& bytes) {
    static constexpr char kDigits[] = "0123456789ABCDEF";
    std::string out;
    out.reserve(bytes.size() * 2);
    for (auto b : bytes) {
        out.push_back(kDigits[b >> 4]);
        out.push_back(kDigits[b & 0xF]);
    }
    return out;
}

}  // namespace

SendOutcome outcome_for_status(int status) {
    if (status >= 200 && status < 300) return SendOutcome::accepted();
    if (status == 429 || (status >= 500 && status < 600)) {
        return SendOutcome::transient("provider returned " + std::to_string(status));
    }
    return SendOutcome::permanent("provider returned " + std::to_string(status));
}

std::string provider_request_body(const SendRequest& req) {
    nlohmann::json segments = nlohmann::json::array();
    for (const auto& s : req.encoded.segments) {
        segments.push_back({{"udh_hex", to_hex(s.udh)}, {"payload_hex", to_hex(s.payload)}});
    }
    nlohmann::json body = {{"to", req.msisdn.str()},
                           {"charset", std::string(message::to_string(req.encoded.charset))},
                           {"segments", std::move(segments)},
                           {"idempotency_key", req.idempotency_key}};
    return body.dump();
}

HttpProviderBackend::HttpProviderBackend(HttpProviderConfig config) : config_(std::move(config)) {
    constexpr std::string_view scheme = "http://";
    const std::string_view url = config_.endpoint;
    if (url.substr(0, scheme.size()) != scheme) {
        throw std::invalid_argument("provider endpoint must be an http:// URL: " + config_.endpoint);
    }
    const auto slash = url.find('/', scheme.size());
    origin_ = std::string(url.substr(0, slash));
    path_ = slash == std::string_view::npos ? "/" : std::string(url.substr(slash));
    if (origin_.size() == scheme.size()) throw std::invalid_argument("provider endpoint has no host");
    if (config_.timeout_ms <= 0) throw std::invalid_argument("timeout_ms must be positive");
}

SendOutcome HttpProviderBackend::send(const SendRequest& req) {
    httplib::Client client(origin_);
    const auto sec = static_cast<time_t>(config_.timeout_ms / 1000);
    const auto usec = static_cast<time_t>((config_.timeout_ms % 1000) * 1000);
    client.set_connection_timeout(sec, usec);
    client.set_read_timeout(sec, usec);
    client.set_write_timeout(sec, usec);

    httplib::Headers headers = {{"Idempotency-Key", req.idempotency_key}};
    if (!config_.bearer_token.empty()) headers.emplace("Authorization", "Bearer " + config_.bearer_token);

    const auto res = client.Post(path_, headers, provider_request_body(req), "application/json");
    if (!res) return SendOutcome::transient("provider unreachable: " + httplib::to_string(res.error()));
    return outcome_for_status(res->status);
}

}  // namespace sos::transport
