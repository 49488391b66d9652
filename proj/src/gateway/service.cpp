#include "sos/gateway/service.h"

#include <cstdio>
#include <filesystem>
#include <iostream>

#include "sos/gateway/views.h"
#include "sos/http_transport.h"

namespace sos::gateway {

namespace {

ApiError from_registry(const registry::RegistryError& e) {
    using K = registry::RegistryErrorKind;
    const std::string code(registry::to_string(e.kind()));
    switch (e.kind()) {
        case K::UnknownDevice:
        case K::UnknownContact: return ApiError(404, code, e.what());
        case K::DuplicateContact:
        case K::ContactLimitReached: return ApiError(409, code, e.what());
        case K::IoError:
        case K::CorruptSnapshot: return ApiError(500, code, e.what());
        default: return ApiError(400, code, e.what());
    }
}

core::PipelineOptions pipeline_options(const GatewayConfig& c) {
    core::PipelineOptions o;
    o.retry = c.retry;
    o.max_in_flight = c.max_in_flight;
    return o;
}

}  // namespace

WorkerPool::WorkerPool(std::size_t threads) {
    for (std::size_t i = 0; i < threads; ++i) {
        threads_.emplace_back([this] {
            for (;;) {
                std::function<void()> job;
                {
                    std::unique_lock lock(mu_);
                    cv_.wait(lock, [&] { return stopping_ || !jobs_.empty(); });
                    if (jobs_.empty()) return;
                    job = std::move(jobs_.front());
                    jobs_.pop_front();
                }
                job();
            }
        });
    }
}

WorkerPool::~WorkerPool() { stop(); }

void WorkerPool::submit(std::function<void()> job) {
    {
        std::lock_guard lock(mu_);
        if (stopping_) throw std::logic_error("worker pool stopped");
        jobs_.push_back(std::move(job));
    }
    cv_.notify_one();
}

void WorkerPool::stop() {
    {
        std::lock_guard lock(mu_);
        stopping_ = true;
    }
    cv_.notify_all();
    for (auto& t : threads_) {
        if (t.joinable()) t.join();
    }
}

GatewayService::GatewayService(GatewayConfig config, registry::Registry registry, geo::Gazetteer gazetteer,
                               geo::CellDb cells, std::shared_ptr<transport::SmsBackend> backend, Clock& clock)
    : config_(std::move(config)),
      clock_(clock),
      registry_(std::move(registry)),
      gazetteer_(std::move(gazetteer)),
      cells_(std::move(cells)),
      locator_(gazetteer_, cells_, geo::LocationConfig{config_.max_fix_age_ms, config_.geocode_radius_km}),
      backend_(std::move(backend)),
      mock_(dynamic_cast<transport::MockBackend*>(backend_.get())),
      pipeline_(locator_, *backend_, clock_, pipeline_options(config_)),
      workers_(config_.pipeline_workers) {}

GatewayService::~GatewayService() { shutdown(); }

std::unique_ptr<GatewayService> GatewayService::from_config(const GatewayConfig& config, Clock& clock) {
    config.validate();
    registry::Registry reg;
    if (!config.snapshot_path.empty()) {
        if (std::filesystem::exists(config.snapshot_path)) {
            reg = registry::load_snapshot(config.snapshot_path);
        } else if (const auto dir = std::filesystem::path(config.snapshot_path).parent_path(); !dir.empty()) {
            std::filesystem::create_directories(dir);
        }
    }
    geo::Gazetteer gaz = config.gazetteer_path.empty() ? geo::Gazetteer{} : geo::load_gazetteer(config.gazetteer_path);
    geo::CellDb cells = config.cell_db_path.empty() ? geo::CellDb{} : geo::load_cell_db(config.cell_db_path);
    std::shared_ptr<transport::SmsBackend> backend;
    if (config.transport == TransportKind::Http) {
        backend = std::make_shared<transport::HttpProviderBackend>(config.http);
    } else {
        backend = std::make_shared<transport::MockBackend>();
    }
    return std::make_unique<GatewayService>(config, std::move(reg), std::move(gaz), std::move(cells),
                                            std::move(backend), clock);
}

void GatewayService::persist() {
    if (config_.snapshot_path.empty()) return;
    registry::save_snapshot(registry_, config_.snapshot_path);
}

std::pair<registry::DeviceProfile, bool> GatewayService::register_device(const std::string& device_id) {
    try {
        std::lock_guard lock(persist_mu_);
        const bool existed = registry_.find(device_id).has_value();
        auto profile = registry_.register_device(device_id, clock_.now_ms());
        if (!existed) persist();
        return {std::move(profile), !existed};
    } catch (const registry::RegistryError& e) {
        throw from_registry(e);
    }
}

registry::DeviceProfile GatewayService::device(const std::string& device_id) const {
    auto p = registry_.find(device_id);
    if (!p) throw ApiError(404, "UnknownDevice", "unknown device " + device_id);
    return *p;
}

registry::Contact GatewayService::add_contact(const std::string& device_id, const std::string& number,
                                              const std::string& label) {
    try {
        std::lock_guard lock(persist_mu_);
        auto c = registry_.add_contact(device_id, number, label, clock_.now_ms());
        persist();
        return c;
    } catch (const registry::RegistryError& e) {
        throw from_registry(e);
    }
}

void GatewayService::remove_contact(const std::string& device_id, const std::string& msisdn) {
    try {
        std::lock_guard lock(persist_mu_);
        registry_.remove_contact(device_id, msisdn);
        persist();
    } catch (const registry::RegistryError& e) {
        throw from_registry(e);
    }
}

void GatewayService::set_message(const std::string& device_id, const std::string& text) {
    try {
        std::lock_guard lock(persist_mu_);
        registry_.set_custom_message(device_id, text);
        persist();
    } catch (const registry::RegistryError& e) {
        throw from_registry(e);
    }
}

void GatewayService::publish(EventKind kind, const core::Alert& alert) {
    const nlohmann::json data = {{"kind", to_string(kind)}, {"alert", alert_view(alert)}};
    bus_.publish(kind, alert.alert_id, data.dump());
}

TriggerResult GatewayService::trigger(const std::string& device_id, core::TriggerRequest req) {
    const auto profile = registry_.find(device_id);
    if (!profile) throw ApiError(404, "UnknownDevice", "unknown device " + device_id);
    req.device_id = device_id;
    req.triggered_at = clock_.now_ms();
    try {
        core::validate_trigger(req);
    } catch (const core::AlertError& e) {
        throw ApiError(400, "InvalidTrigger", e.what());
    }

    core::Alert alert;
    {
        std::lock_guard lock(alerts_mu_);
        if (shut_down_) throw ApiError(503, "ShuttingDown", "gateway is shutting down");
        const auto key = std::make_pair(device_id, req.trigger_id);
        if (const auto it = by_trigger_.find(key); it != by_trigger_.end()) {
            return {it->second, alerts_.at(it->second).state, false};
        }
        char id[16];
        std::snprintf(id, sizeof id, "A%06llu", static_cast<unsigned long long>(next_alert_++));
        alert = core::create_alert(std::move(req), id, clock_.now_ms());
        alerts_.emplace(alert.alert_id, alert);
        by_trigger_.emplace(key, alert.alert_id);
        order_.push_back(alert.alert_id);
        // Published under the store lock so Created precedes any StateChanged.
        publish(EventKind::Created, alert);
    }

    workers_.submit([this, alert, profile = *profile]() mutable {
        const auto id = alert.alert_id;
        try {
            pipeline_.run(std::move(alert), profile, [this](const core::Alert& a) { store_progress(a); });
        } catch (const std::exception& e) {
            std::cerr << "pipeline for " << id << " aborted: " << e.what() << '\n';
        }
    });
    return {alert.alert_id, alert.state, true};
}

void GatewayService::store_progress(const core::Alert& a) {
    {
        std::lock_guard lock(alerts_mu_);
        auto& stored = alerts_.at(a.alert_id);
        // Acknowledgments land on the stored copy only.
        auto ack = std::move(stored.acknowledged_by);
        stored = a;
        stored.acknowledged_by = std::move(ack);
        publish(EventKind::StateChanged, stored);
    }
    alerts_cv_.notify_all();
}

std::optional<core::Alert> GatewayService::alert(const std::string& alert_id) const {
    std::lock_guard lock(alerts_mu_);
    if (const auto it = alerts_.find(alert_id); it != alerts_.end()) return it->second;
    return std::nullopt;
}

std::vector<core::Alert> GatewayService::alerts() const {
    std::lock_guard lock(alerts_mu_);
    std::vector<core::Alert> out;
    out.reserve(order_.size());
    for (auto it = order_.rbegin(); it != order_.rend(); ++it) out.push_back(alerts_.at(*it));
    return out;
}

core::Alert GatewayService::acknowledge(const std::string& alert_id, const std::string& responder_id) {
    if (responder_id.empty() || responder_id.size() > 64) {
        throw ApiError(400, "InvalidResponder", "responder_id must be 1..64 characters");
    }
    std::lock_guard lock(alerts_mu_);
    const auto it = alerts_.find(alert_id);
    if (it == alerts_.end()) throw ApiError(404, "UnknownAlert", "unknown alert " + alert_id);
    try {
        it->second = core::acknowledge(std::move(it->second), responder_id, clock_.now_ms());
    } catch (const core::AlertError& e) {
        throw ApiError(409, "AlreadyAcknowledged", e.what());
    }
    publish(EventKind::Acknowledged, it->second);
    return it->second;
}

std::optional<core::Alert> GatewayService::wait_terminal(const std::string& alert_id,
                                                         std::chrono::milliseconds timeout) const {
    std::unique_lock lock(alerts_mu_);
    const auto it = alerts_.find(alert_id);
    if (it == alerts_.end()) return std::nullopt;
    alerts_cv_.wait_for(lock, timeout, [&] { return core::is_terminal(it->second.state); });
    return it->second;
}

void GatewayService::shutdown() {
    {
        std::lock_guard lock(alerts_mu_);
        if (shut_down_) return;
        shut_down_ = true;
    }
    workers_.stop();
    bus_.shutdown();
}

}  // namespace sos::gateway
