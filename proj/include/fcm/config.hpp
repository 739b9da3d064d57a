#pragma once

#include <string>

#include "fcm/allocation.hpp"
#include "fcm/scenario.hpp"
#include "fcm/session.hpp"

namespace fcm {

enum class RunMode { simulate_invariant, simulate_varying, sweep, replay };

std::string mode_name(RunMode mode);
RunMode mode_from_name(const std::string& name);

struct ReplaySettings {
    std::string forecasts;
    std::string realizations;
};

// Fully resolved run description. parse() fills every default, so the
// echoed manifest plus the input files reproduce a run exactly.
struct RunConfig {
    RunMode mode = RunMode::simulate_invariant;
    std::uint64_t seed = 1;
    std::string output_dir = "out";
    Method method = Method::rqr;
    double eta = 0.05;
    double utility_per_round = 100.0;
    ScenarioConfig scenario;  // scenario.seed mirrors the top-level seed
    AllocationConfig allocation;
    Vec sweep_rates = {0.05, 0.3, 0.6, 0.9};
    ReplaySettings replay;

    EngineSettings engine() const {
        return {method == Method::rqr ? ModelKind::robust : ModelKind::plain, eta};
    }
    void validate() const;

    // Strict parse: unknown or out-of-range keys fail with their key path.
    static RunConfig parse(const std::string& text);
    static RunConfig defaults_for(RunMode mode);

    // Manifest form; parse(to_json()) reproduces the config.
    std::string to_json() const;
};

}  // namespace fcm
