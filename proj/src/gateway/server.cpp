#include "sos/gateway/server.h"

#include <httplib.h>

#include <filesystem>
#include <iostream>
#include <nlohmann/json.hpp>

#include "sos/gateway/views.h"

namespace sos::gateway {

using nlohmann::json;

namespace {

constexpr std::chrono::milliseconds kStreamPoll{200};

void send_json(httplib::Response& res, int status, const json& body) {
    res.status = status;
    res.set_content(body.dump(), "application/json");
}

void send_error(httplib::Response& res, int status, const std::string& code, const std::string& message) {
    send_json(res, status, {{"error", code}, {"message", message}});
}

ApiError bad_request(const std::string& path, const std::string& reason) {
    return ApiError(400, "MalformedBody", path + ": " + reason);
}

json parse_body(const httplib::Request& req) {
    json body;
    try {
        body = json::parse(req.body);
    } catch (const json::parse_error&) {
        throw bad_request("body", "not valid JSON");
    }
    if (!body.is_object()) throw bad_request("body", "expected an object");
    return body;
}

const json* optional_field(const json& obj, const char* key) {
    const auto it = obj.find(key);
    return it == obj.end() || it->is_null() ? nullptr : &*it;
}

std::string string_field(const json& obj, const char* key, const std::string& path, bool required = true) {
    const json* v = optional_field(obj, key);
    if (!v) {
        if (required) throw bad_request(path, "required");
        return {};
    }
    if (!v->is_string()) throw bad_request(path, "expected a string");
    return v->get<std::string>();
}

double number_field(const json& obj, const char* key, const std::string& path) {
    const json* v = optional_field(obj, key);
    if (!v) throw bad_request(path, "required");
    if (!v->is_number()) throw bad_request(path, "expected a number");
    return v->get<double>();
}

std::int64_t integer_field(const json& obj, const char* key, const std::string& path) {
    const json* v = optional_field(obj, key);
    if (!v) throw bad_request(path, "required");
    if (!v->is_number_integer()) throw bad_request(path, "expected an integer");
    return v->get<std::int64_t>();
}

core::TriggerRequest parse_trigger(const json& body) {
    core::TriggerRequest t;
    t.trigger_id = string_field(body, "trigger_id", "trigger_id");
    if (const json* fix = optional_field(body, "fix")) {
        if (!fix->is_object()) throw bad_request("fix", "expected an object");
        const double lat = number_field(*fix, "lat", "fix.lat");
        const double lon = number_field(*fix, "lon", "fix.lon");
        const auto fixed_at = integer_field(*fix, "fixed_at", "fix.fixed_at");
        std::optional<double> accuracy;
        if (optional_field(*fix, "accuracy_m")) accuracy = number_field(*fix, "accuracy_m", "fix.accuracy_m");
        try {
            t.fix = geo::GpsFix{geo::LatLon(lat, lon), fixed_at, accuracy};
        } catch (const geo::GeoError& e) {
            throw bad_request("fix", e.what());
        }
    }
    if (const json* cell = optional_field(body, "cell")) {
        if (!cell->is_object()) throw bad_request("cell", "expected an object");
        geo::CellKey key;
        auto small = [&](const char* k) {
            const auto v = integer_field(*cell, k, std::string("cell.") + k);
            if (v < INT32_MIN || v > INT32_MAX) throw bad_request(std::string("cell.") + k, "out of range");
            return static_cast<int>(v);
        };
        key.mcc = small("mcc");
        key.mnc = small("mnc");
        key.lac = small("lac");
        key.cid = integer_field(*cell, "cid", "cell.cid");
        try {
            key.validate();
        } catch (const geo::GeoError& e) {
            throw bad_request("cell", e.what());
        }
        t.cell = key;
    }
    return t;
}

/// Runs a handler, turning service errors into JSON error responses.
template <typename F>
httplib::Server::Handler guarded(F f) {
    return [f = std::move(f)](const httplib::Request& req, httplib::Response& res) {
        try {
            f(req, res);
        } catch (const ApiError& e) {
            send_error(res, e.status(), e.code(), e.what());
        } catch (const std::exception& e) {
            send_error(res, 500, "Internal", e.what());
        }
    };
}

std::vector<transport::SendOutcome> parse_plan(const json& plan) {
    if (!plan.is_array()) throw bad_request("plan", "expected an array");
    std::vector<transport::SendOutcome> out;
    for (std::size_t i = 0; i < plan.size(); ++i) {
        const auto& o = plan[i];
        const std::string path = "plan[" + std::to_string(i) + "]";
        if (!o.is_string()) throw bad_request(path, "expected an outcome name");
        try {
            out.push_back({transport::outcome_kind_from_string(o.get<std::string>()), "injected"});
        } catch (const std::invalid_argument& e) {
            throw bad_request(path, e.what());
        }
    }
    return out;
}

}  // namespace

GatewayServer::GatewayServer(GatewayService& service)
    : service_(service), http_(std::make_unique<httplib::Server>()) {
    // Event streams hold a worker each; leave room for ordinary requests.
    http_->new_task_queue = [] { return new httplib::ThreadPool(32); };
    routes();
}

GatewayServer::~GatewayServer() { stop(); }

void GatewayServer::routes() {
    auto& s = *http_;
    auto& svc = service_;

    s.Get("/healthz", [](const httplib::Request&, httplib::Response& res) { res.set_content("ok", "text/plain"); });

    s.Post("/devices", guarded([&svc](const httplib::Request& req, httplib::Response& res) {
               const auto body = parse_body(req);
               auto [profile, created] = svc.register_device(string_field(body, "device_id", "device_id"));
               send_json(res, created ? 201 : 200, profile_view(profile));
           }));

    s.Get("/devices/:id", guarded([&svc](const httplib::Request& req, httplib::Response& res) {
              send_json(res, 200, profile_view(svc.device(req.path_params.at("id"))));
          }));

    s.Post("/devices/:id/contacts", guarded([&svc](const httplib::Request& req, httplib::Response& res) {
               const auto body = parse_body(req);
               const auto c = svc.add_contact(req.path_params.at("id"), string_field(body, "number", "number"),
                                              string_field(body, "label", "label", false));
               send_json(res, 201, {{"number", mask_msisdn(c.msisdn)}, {"label", c.label}, {"added_at", c.added_at}});
           }));

    s.Delete("/devices/:id/contacts/:msisdn", guarded([&svc](const httplib::Request& req, httplib::Response& res) {
                 svc.remove_contact(req.path_params.at("id"), req.path_params.at("msisdn"));
                 res.status = 204;
             }));

    s.Put("/devices/:id/message", guarded([&svc](const httplib::Request& req, httplib::Response& res) {
              const auto body = parse_body(req);
              svc.set_message(req.path_params.at("id"), string_field(body, "text", "text"));
              res.status = 204;
          }));

    s.Post("/devices/:id/sos", guarded([&svc](const httplib::Request& req, httplib::Response& res) {
               const auto& device_id = req.path_params.at("id");
               svc.device(device_id);  // 404 before body errors
               const auto r = svc.trigger(device_id, parse_trigger(parse_body(req)));
               send_json(res, r.created ? 202 : 200, {{"alert_id", r.alert_id}, {"state", core::to_string(r.state)}});
           }));

    s.Get("/alerts", guarded([&svc](const httplib::Request&, httplib::Response& res) {
              json out = json::array();
              for (const auto& a : svc.alerts()) out.push_back(alert_view(a));
              send_json(res, 200, out);
          }));

    s.Get("/alerts/:id", guarded([&svc](const httplib::Request& req, httplib::Response& res) {
              const auto a = svc.alert(req.path_params.at("id"));
              if (!a) throw ApiError(404, "UnknownAlert", "unknown alert " + req.path_params.at("id"));
              send_json(res, 200, alert_view(*a));
          }));

    s.Post("/alerts/:id/ack", guarded([&svc](const httplib::Request& req, httplib::Response& res) {
               const auto body = parse_body(req);
               const auto a = svc.acknowledge(req.path_params.at("id"), string_field(body, "responder_id", "responder_id"));
               send_json(res, 200, alert_view(a));
           }));

    s.Get("/events", [this](const httplib::Request&, httplib::Response& res) {
        auto sub = service_.events().subscribe();
        const auto heartbeat = std::chrono::milliseconds(service_.config().heartbeat_ms);
        auto last_write = std::chrono::steady_clock::now();
        res.set_header("Cache-Control", "no-cache");
        res.set_header("X-Accel-Buffering", "no");
        res.set_chunked_content_provider(
            "text/event-stream",
            [this, sub, heartbeat, last_write](std::size_t, httplib::DataSink& sink) mutable {
                auto write = [&](const std::string& chunk) {
                    last_write = std::chrono::steady_clock::now();
                    return sink.write(chunk.data(), chunk.size());
                };
                if (stopping_) {
                    sink.done();
                    return true;
                }
                if (auto e = sub->next(kStreamPoll)) {
                    return write("id: " + std::to_string(e->seq) + "\nevent: alert\ndata: " + e->data + "\n\n");
                }
                if (sub->closed()) {
                    sink.done();
                    return true;
                }
                if (std::chrono::steady_clock::now() - last_write >= heartbeat) return write(": heartbeat\n\n");
                return true;
            },
            [this, sub](bool) {
                service_.events().unsubscribe(sub);
                sub->close();
            });
    });

    if (const auto& dir = service_.config().console_dir; !dir.empty()) {
        if (std::filesystem::is_directory(dir)) {
            s.set_mount_point("/console", dir);
        } else {
            std::cerr << "console directory " << dir << " not found; /console disabled\n";
        }
    }

    if (auto* mock = service_.mock()) {
        s.Get("/mock/deliveries", [mock](const httplib::Request&, httplib::Response& res) {
            json out = json::array();
            for (const auto& d : mock->delivered()) {
                out.push_back({{"to", mask_msisdn(d.msisdn)},
                               {"idempotency_key", d.idempotency_key},
                               {"segments", d.encoded.segments.size()}});
            }
            send_json(res, 200, out);
        });
        s.Post("/mock/failure-plans", guarded([mock](const httplib::Request& req, httplib::Response& res) {
                   const auto body = parse_body(req);
                   const auto number = string_field(body, "msisdn", "msisdn");
                   const json* plan = optional_field(body, "plan");
                   if (!plan) throw bad_request("plan", "required");
                   registry::Msisdn msisdn = [&] {
                       try {
                           return registry::Msisdn::parse(number);
                       } catch (const registry::RegistryError& e) {
                           throw bad_request("msisdn", e.what());
                       }
                   }();
                   mock->set_plan(msisdn, parse_plan(*plan));
                   res.status = 204;
               }));
        s.Delete("/mock/state", [mock](const httplib::Request&, httplib::Response& res) {
            mock->reset();
            res.status = 204;
        });
    }

    s.set_error_handler([](const httplib::Request&, httplib::Response& res) {
        if (res.body.empty()) {
            send_error(res, res.status, res.status == 404 ? "NotFound" : "HttpError", httplib::status_message(res.status));
        }
    });
}

int GatewayServer::bind(const ListenAddress& addr) {
    host_ = addr.host;
    port_ = addr.port == 0 ? http_->bind_to_any_port(addr.host) : (http_->bind_to_port(addr.host, addr.port) ? addr.port : -1);
    if (port_ < 0) throw ConfigError("cannot bind " + addr.host + ":" + std::to_string(addr.port));
    return port_;
}

void GatewayServer::run() { http_->listen_after_bind(); }

void GatewayServer::start() {
    thread_ = std::thread([this] { run(); });
    http_->wait_until_ready();
}

void GatewayServer::stop() {
    stopping_ = true;
    http_->stop();
    if (thread_.joinable()) thread_.join();
}

std::string GatewayServer::base_url() const { return "http://" + host_ + ":" + std::to_string(port_); }

}  // namespace sos::gateway
