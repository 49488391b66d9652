// sos-sim: runs a device scenario against a gateway and reports outcomes.
// Exit status: 0 all expectations pass, 1 some failed, 2 error.

#include <CLI11.hpp>

#include <fstream>
#include <iostream>

#include "sos/sim/runner.h"
#include "sos/sim/scenario.h"

int main(int argc, char** argv) {
    CLI::App app{"SOS device simulator"};
    std::string gateway;
    std::string scenario_path;
    std::uint64_t seed = 0;
    std::string report_path;
    app.add_option("--gateway", gateway, "gateway base URL, e.g. http://127.0.0.1:8080")->required();
    app.add_option("--scenario", scenario_path, "scenario JSON file")->required();
    app.add_option("--seed", seed, "seed for wire trigger ids");
    app.add_option("--report", report_path, "write the JSON report here (text goes to stdout)");
    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    try {
        const auto scenario = sos::sim::load_scenario(scenario_path);
        sos::sim::RunOptions options;
        options.gateway_url = gateway;
        options.seed = seed;
        const auto report = sos::sim::run_scenario(scenario, options);
        std::cout << report.to_text();
        if (!report_path.empty()) {
            std::ofstream out(report_path);
            out << report.to_json().dump(2) << '\n';
            if (!out) {
                std::cerr << "sos-sim: cannot write " << report_path << '\n';
                return 2;
            }
        }
        return report.passed() ? 0 : 1;
    } catch (const sos::sim::ScenarioParseError& e) {
        std::cerr << "sos-sim: scenario error at " << e.path() << ": " << e.reason() << '\n';
    } catch (const sos::sim::SimError& e) {
        std::cerr << "sos-sim: " << sos::sim::to_string(e.kind()) << ": " << e.what() << '\n';
    } catch (const std::exception& e) {
        std::cerr << "sos-sim: " << e.what() << '\n';
    }
    return 2;
}
