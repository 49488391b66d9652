#pragma once

#include <cstdint>
#include <string>

#include "sos/transport.h"

namespace sos::transport {

struct HttpProviderConfig {
    /// http://host[:port]/path
    std::string endpoint;
    std::string bearer_token;
    std::int64_t timeout_ms = 5000;
};

/// Maps an HTTP status to an outcome: 2xx Accepted, 429/5xx transient,
/// other 4xx permanent.
SendOutcome outcome_for_status(int status);

/// JSON body {to, charset, segments:[{udh_hex, payload_hex}], idempotency_key}.
std::string provider_request_body(const SendRequest& req);

/// Posts each request to an SMS provider. Idempotency is best-effort: the
/// key travels in the body and in an Idempotency-Key header, and dedup is up
/// to the provider.
class HttpProviderBackend final : public SmsBackend {
public:
    /// Throws std::invalid_argument for an unusable endpoint.
    explicit HttpProviderBackend(HttpProviderConfig config);

    SendOutcome send(const SendRequest& req) override;

private:
    HttpProviderConfig config_;
    std::string origin_;
    std::string path_;
};

inline SendOutcome http_provider_send(const HttpProviderConfig& config, const SendRequest& req) {
    return HttpProviderBackend(config).send(req);
}

}  // namespace sos::transport
