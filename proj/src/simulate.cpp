#include "fcm/simulate.hpp"

namespace fcm {

std::unique_ptr<Market> run_scenario_market(const ScenarioConfig& config, int run_index,
                                            const EngineSettings& engine,
                                            const AllocationConfig& alloc,
                                            const MarketRunOptions& options) {
    config.validate();
    if (options.bias_seller >= static_cast<int>(config.seller_count()))
        throw ValidationError("bias seller index out of range");

    MarketTask task;
    task.task_id = options.task_id;
    task.quantile_levels = config.quantile_levels;
    task.horizon_steps = 1;

    std::vector<std::string> sellers;
    for (std::size_t i = 0; i < config.seller_count(); ++i)
        sellers.push_back("s" + std::to_string(i + 1));

    auto market = std::make_unique<Market>(task, sellers, engine, alloc, options.market_seed);
    ScenarioGenerator gen(config, run_index);
    const std::size_t m = config.quantile_levels.size();

    for (std::int64_t t = 0; t < config.horizon; ++t) {
        RoundSample round = gen.next();
        market->open_session(t);
        for (std::size_t i = 0; i < config.seller_count(); ++i) {
            if (round.alpha.missing(i)) continue;
            Vec values(m);
            const double shift =
                static_cast<int>(i) == options.bias_seller ? options.bias : 0.0;
            for (std::size_t j = 0; j < m; ++j) values[j] = round.submissions(i, j) + shift;
            market->submit(sellers[i], values);
        }
        market->close_session();
        market->settle(round.realization, options.utility_per_round);
    }
    return market;
}

}  // namespace fcm
