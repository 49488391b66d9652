#pragma once

#include <atomic>
#include <memory>
#include <string>
#include <thread>

#include "sos/gateway/config.h"
#include "sos/gateway/service.h"

namespace httplib {
class Server;
}

namespace sos::gateway {

/// HTTP/JSON binding of GatewayService, plus the /events stream and the
/// static /console mount.
class GatewayServer {
public:
    explicit GatewayServer(GatewayService& service);
    ~GatewayServer();
    GatewayServer(const GatewayServer&) = delete;
    GatewayServer& operator=(const GatewayServer&) = delete;

    /// Returns the bound port. Throws ConfigError when binding fails.
    int bind(const ListenAddress& addr);
    /// Blocks until stop().
    void run();
    /// run() on a background thread.
    void start();
    void stop();

    int port() const { return port_; }
    std::string base_url() const;

private:
    void routes();

    GatewayService& service_;
    std::unique_ptr<httplib::Server> http_;
    std::string host_;
    int port_ = 0;
    std::atomic<bool> stopping_{false};
    std::thread thread_;
};

}  // namespace sos::gateway
