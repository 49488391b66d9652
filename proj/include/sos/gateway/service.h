#pragma once

#include <chrono>
#include <condition_variable>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <thread>
#include <deque>
#include <vector>

#include "sos/alert.h"
#include "sos/clock.h"
#include "sos/gateway/config.h"
#include "sos/gateway/event_bus.h"
#include "sos/geo.h"
#include "sos/location.h"
#include "sos/pipeline.h"
#include "sos/registry.h"
#include "sos/transport.h"

namespace sos::gateway {

/// An error with the HTTP status and machine-readable code it maps to.
class ApiError : public std::runtime_error {
public:
    ApiError(int status, std::string code, const std::string& detail)
        : std::runtime_error(detail), status_(status), code_(std::move(code)) {}
    int status() const { return status_; }
    const std::string& code() const { return code_; }

private:
    int status_;
    std::string code_;
};

struct TriggerResult {
    std::string alert_id;
    core::AlertState state;
    /// False when the trigger_id was already seen for this device.
    bool created;
};

/// Fixed pool running queued jobs in FIFO order. The destructor finishes
/// queued work before joining.
class WorkerPool {
public:
    explicit WorkerPool(std::size_t threads);
    ~WorkerPool();
    WorkerPool(const WorkerPool&) = delete;
    WorkerPool& operator=(const WorkerPool&) = delete;

    void submit(std::function<void()> job);
    void stop();

private:
    std::mutex mu_;
    std::condition_variable cv_;
    std::deque<std::function<void()>> jobs_;
    bool stopping_ = false;
    std::vector<std::jthread> threads_;
};

/// The gateway's behaviour without HTTP: registry with write-through
/// snapshots, alert store with trigger idempotency, async pipelines and the
/// event feed.
class GatewayService {
public:
    GatewayService(GatewayConfig config, registry::Registry registry, geo::Gazetteer gazetteer, geo::CellDb cells,
                   std::shared_ptr<transport::SmsBackend> backend, Clock& clock);
    ~GatewayService();

    /// Loads snapshot, gazetteer and cell db named by the config and builds
    /// the configured transport. Throws ConfigError or the loaders' errors.
    static std::unique_ptr<GatewayService> from_config(const GatewayConfig& config, Clock& clock);

    /// Second value is true when the device was created by this call.
    std::pair<registry::DeviceProfile, bool> register_device(const std::string& device_id);
    registry::DeviceProfile device(const std::string& device_id) const;
    registry::Contact add_contact(const std::string& device_id, const std::string& number, const std::string& label);
    void remove_contact(const std::string& device_id, const std::string& msisdn);
    void set_message(const std::string& device_id, const std::string& text);

    /// `trigger.device_id` and `triggered_at` are filled in here.
    TriggerResult trigger(const std::string& device_id, core::TriggerRequest trigger);
    std::optional<core::Alert> alert(const std::string& alert_id) const;
    /// Newest first.
    std::vector<core::Alert> alerts() const;
    core::Alert acknowledge(const std::string& alert_id, const std::string& responder_id);
    /// Blocks until the alert is terminal or the timeout passes.
    std::optional<core::Alert> wait_terminal(const std::string& alert_id, std::chrono::milliseconds timeout) const;

    EventBus& events() { return bus_; }
    const GatewayConfig& config() const { return config_; }
    /// Null unless the transport is the mock.
    transport::MockBackend* mock() const { return mock_; }

    /// Stops accepting triggers, finishes running pipelines, closes streams.
    void shutdown();

private:
    void persist();
    void publish(EventKind kind, const core::Alert& alert);
    void store_progress(const core::Alert& alert);

    GatewayConfig config_;
    Clock& clock_;
    registry::Registry registry_;
    std::mutex persist_mu_;
    geo::Gazetteer gazetteer_;
    geo::CellDb cells_;
    geo::LocationResolver locator_;
    std::shared_ptr<transport::SmsBackend> backend_;
    transport::MockBackend* mock_ = nullptr;
    core::Pipeline pipeline_;
    EventBus bus_;

    mutable std::mutex alerts_mu_;
    mutable std::condition_variable alerts_cv_;
    std::map<std::string, core::Alert> alerts_;
    std::map<std::pair<std::string, std::string>, std::string> by_trigger_;
    std::vector<std::string> order_;
    std::uint64_t next_alert_ = 1;
    bool shut_down_ = false;

    WorkerPool workers_;
};

}  // namespace sos::gateway
