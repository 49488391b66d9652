// sos-gateway: serves the SOS HTTP API, event stream and console.

#include <CLI11.hpp>

#include <signal.h>

#include <atomic>
#include <cstdlib>
#include <iostream>
#include <thread>

#include "sos/gateway/config.h"
#include "sos/gateway/server.h"
#include "sos/gateway/service.h"

int main(int argc, char** argv) {
    CLI::App app{"SOS alert gateway"};
    std::string config_path;
    std::string listen;
    std::string transport;
    app.add_option("--config", config_path, "JSON config file (falls back to $SOS_GATEWAY_CONFIG)");
    app.add_option("--listen", listen, "host:port to bind, overrides the config");
    app.add_option("--transport", transport, "mock or http, overrides the config")
        ->check(CLI::IsMember({"mock", "http"}));
    CLI11_PARSE(app, argc, argv);

    if (config_path.empty()) {
        if (const char* env = std::getenv("SOS_GATEWAY_CONFIG"); env && *env) config_path = env;
    }

    // Signals are taken synchronously by a watcher thread; every other
    // thread inherits the blocked mask.
    sigset_t stop_signals;
    sigemptyset(&stop_signals);
    sigaddset(&stop_signals, SIGINT);
    sigaddset(&stop_signals, SIGTERM);
    pthread_sigmask(SIG_BLOCK, &stop_signals, nullptr);

    try {
        sos::gateway::GatewayConfig config;
        if (!config_path.empty()) config = sos::gateway::load_config(config_path);
        if (!listen.empty()) config.listen = listen;
        if (!transport.empty()) config.transport = sos::gateway::transport_kind_from_string(transport);
        config.validate();

        sos::SystemClock clock;
        auto service = sos::gateway::GatewayService::from_config(config, clock);
        sos::gateway::GatewayServer server(*service);
        const int port = server.bind(sos::gateway::parse_listen(config.listen));

        std::atomic<bool> done{false};
        std::thread watcher([&] {
            const timespec tick{0, 200'000'000};
            while (!done) {
                if (sigtimedwait(&stop_signals, nullptr, &tick) > 0) {
                    server.stop();
                    return;
                }
            }
        });

        std::cerr << "sos-gateway listening on " << server.base_url() << " (transport "
                  << sos::gateway::to_string(config.transport) << ", port " << port << ")\n";
        server.run();
        done = true;
        watcher.join();
        service->shutdown();
        std::cerr << "sos-gateway stopped\n";
    } catch (const std::exception& e) {
        std::cerr << "sos-gateway: " << e.what() << '\n';
        return 2;
    }
    return 0;
}
