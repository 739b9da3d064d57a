#pragma once

#include <memory>

#include "fcm/scenario.hpp"
#include "fcm/session.hpp"

namespace fcm {

struct MarketRunOptions {
    double utility_per_round = 100.0;
    int bias_seller = -1;   // seller index reporting untruthfully; -1 = nobody
    double bias = 0.0;      // constant shift added to every submitted quantile
    std::uint64_t market_seed = 0;
    std::string task_id = "sim";
};

// Drives a full market (sessions, settlements, ledger) over one generated
// scenario run. Sellers are named s1..sn. Missing sellers simply do not
// submit; the market derives the availability mask itself.
std::unique_ptr<Market> run_scenario_market(const ScenarioConfig& config, int run_index,
                                            const EngineSettings& engine,
                                            const AllocationConfig& alloc,
                                            const MarketRunOptions& options = {});

}  // namespace fcm
