#include <filesystem>
#include <iostream>
#include <optional>

#include <CLI11.hpp>

#include "fcm/config.hpp"
#include "fcm/csv_io.hpp"
#include "fcm/io_util.hpp"
#include "fcm/ledger.hpp"
#include "fcm/replay.hpp"
#include "fcm/simulate.hpp"

namespace fs = std::filesystem;
using namespace fcm;

namespace {

struct Overrides {
    std::optional<std::uint64_t> seed;
    std::optional<std::string> output_dir;
    std::optional<std::string> method;
    std::optional<double> eta;
    std::optional<double> utility;
    std::optional<double> delta;
    std::optional<double> lambda;
    std::optional<int> runs;
    std::optional<std::int64_t> horizon;
    std::optional<double> missing_rate;
    std::optional<std::vector<double>> rates;
    std::optional<std::string> forecasts;
    std::optional<std::string> realizations;
    bool varying = false;
    bool invariant = false;
};

void add_common_options(CLI::App* cmd, std::string& config_path, Overrides& ov) {
    cmd->add_option("--config", config_path, "JSON config file");
    cmd->add_option("--seed", ov.seed, "master RNG seed");
    cmd->add_option("--output-dir", ov.output_dir, "output directory");
    cmd->add_option("--method", ov.method, "qr | rqr | mean-impute | last-impute");
    cmd->add_option("--eta", ov.eta, "online learning rate");
    cmd->add_option("--utility", ov.utility, "utility paid per settlement");
    cmd->add_option("--delta", ov.delta, "in-sample reward fraction");
    cmd->add_option("--lambda", ov.lambda, "Shapley forgetting factor");
    cmd->add_option("--runs", ov.runs, "Monte Carlo runs");
    cmd->add_option("--horizon", ov.horizon, "rounds per run");
    cmd->add_option("--missing-rate", ov.missing_rate, "per-seller missingness probability");
}

RunConfig load_config(const std::string& config_path, RunMode fallback_mode,
                      const Overrides& ov) {
    RunConfig cfg;
    if (!config_path.empty()) {
        if (ov.varying || ov.invariant)
            throw ValidationError(
                "--varying/--invariant conflict with --config; set the mode key instead");
        cfg = RunConfig::parse(read_file(config_path));
    } else {
        RunMode mode = fallback_mode;
        if (ov.varying) mode = RunMode::simulate_varying;
        cfg = RunConfig::defaults_for(mode);
    }

    if (ov.seed) {
        cfg.seed = *ov.seed;
        cfg.scenario.seed = *ov.seed;
    }
    if (ov.output_dir) cfg.output_dir = *ov.output_dir;
    if (ov.method) cfg.method = method_from_name(*ov.method);
    if (ov.eta) cfg.eta = *ov.eta;
    if (ov.utility) cfg.utility_per_round = *ov.utility;
    if (ov.delta) cfg.allocation.delta = *ov.delta;
    if (ov.lambda) cfg.allocation.lambda = *ov.lambda;
    if (ov.runs) cfg.scenario.runs = *ov.runs;
    if (ov.horizon) cfg.scenario.horizon = *ov.horizon;
    if (ov.missing_rate) cfg.scenario.missing_rate = *ov.missing_rate;
    if (ov.rates) cfg.sweep_rates = *ov.rates;
    if (ov.forecasts) cfg.replay.forecasts = *ov.forecasts;
    if (ov.realizations) cfg.replay.realizations = *ov.realizations;
    return cfg;
}

std::string stats_csv(const std::string& method, double rate, const WeightErrorStats& stats) {
    std::string out;
    for (std::size_t i = 0; i < stats.bias.size(); ++i)
        out += method + "," + format_double(rate) + "," + std::to_string(i + 1) + "," +
               format_double(stats.bias[i]) + "," + format_double(stats.bias_sd[i]) + "," +
               format_double(stats.variance[i]) + "," + format_double(stats.variance_sd[i]) +
               "\n";
    return out;
}

constexpr const char* kStatsHeader = "method,rate,seller,bias,bias_sd,var,var_sd\n";

std::string trajectories_csv(const std::vector<TrajectoryRow>& rows) {
    std::string out = "run,t,seller,w_true,w_est,alpha\n";
    for (const auto& r : rows)
        out += std::to_string(r.run) + "," + std::to_string(r.t) + "," +
               std::to_string(r.seller + 1) + "," + format_double(r.w_true) + "," +
               format_double(r.w_est) + "," + std::to_string(r.alpha) + "\n";
    return out;
}

void write_manifest(const RunConfig& cfg) {
    write_file_atomic((fs::path(cfg.output_dir) / "manifest.json").string(), cfg.to_json());
}

int cmd_simulate(const RunConfig& cfg) {
    if (cfg.mode != RunMode::simulate_invariant && cfg.mode != RunMode::simulate_varying)
        throw ValidationError("mode: config mode '" + mode_name(cfg.mode) +
                              "' does not fit the simulate command");
    cfg.validate();
    write_manifest(cfg);

    MonteCarloOptions options;
    options.eta = cfg.eta;
    options.capture = TrajectoryCapture::all_runs;
    // Track the median level when present, otherwise the first.
    options.level_index = 0;
    for (std::size_t j = 0; j < cfg.scenario.quantile_levels.size(); ++j)
        if (cfg.scenario.quantile_levels[j] == 0.5) options.level_index = j;

    const Method method = cfg.method;
    MonteCarloResult result = run_monte_carlo(cfg.scenario, method, options);
    const fs::path dir(cfg.output_dir);
    write_file_atomic((dir / "stats.csv").string(),
                      kStatsHeader +
                          stats_csv(method_name(method), cfg.scenario.missing_rate, result.stats));
    write_file_atomic((dir / "trajectories.csv").string(),
                      trajectories_csv(result.trajectories));

    if (method == Method::qr || method == Method::rqr) {
        MarketRunOptions mo;
        mo.utility_per_round = cfg.utility_per_round;
        mo.market_seed = cfg.seed;
        auto market = run_scenario_market(cfg.scenario, 0, cfg.engine(), cfg.allocation, mo);
        write_ledger_file((dir / "ledger.jsonl").string(), market->ledger());
        emit_report(market->ledger(), cfg.output_dir, market->registry().ids(),
                    cfg.allocation.delta);
    } else {
        std::cout << "note: imputation baselines track weights only; no reward ledger emitted\n";
    }
    std::cout << "wrote " << cfg.output_dir << "\n";
    return 0;
}

int cmd_sweep(RunConfig cfg) {
    cfg.mode = RunMode::sweep;
    cfg.validate();
    write_manifest(cfg);
    std::string body = kStatsHeader;
    const auto entries = missingness_sweep(cfg.scenario, cfg.method,
                                           MonteCarloOptions{.eta = cfg.eta}, cfg.sweep_rates);
    for (const auto& e : entries) body += stats_csv(method_name(cfg.method), e.rate, e.stats);
    write_file_atomic((fs::path(cfg.output_dir) / "sweep_stats.csv").string(), body);
    std::cout << "wrote " << cfg.output_dir << "\n";
    return 0;
}

int cmd_replay(RunConfig cfg) {
    cfg.mode = RunMode::replay;
    cfg.validate();
    const ForecastTable table =
        load_forecast_csv(cfg.replay.forecasts, cfg.replay.realizations,
                          /*expected_levels=*/{});
    ReplayOutcome outcome = run_replay(cfg, table);
    write_manifest(cfg);
    const fs::path dir(cfg.output_dir);
    write_ledger_file((dir / "ledger.jsonl").string(), outcome.market->ledger());
    emit_report(outcome.market->ledger(), cfg.output_dir, table.sellers, cfg.allocation.delta);

    std::cout << "replayed " << table.rounds() << " rounds, " << table.seller_count()
              << " sellers\n";
    for (std::size_t i = 0; i < outcome.rewards.sellers.size(); ++i)
        std::cout << "  " << outcome.rewards.sellers[i] << ": total "
                  << format_double(outcome.rewards.total[i]) << "\n";
    std::cout << "wrote " << cfg.output_dir << "\n";
    return 0;
}

int cmd_report(const std::string& ledger_path, const std::string& output_dir, double delta) {
    const Ledger ledger = read_ledger_file(ledger_path);
    if (ledger.empty()) throw ValidationError("ledger is empty");
    emit_report(ledger, output_dir, {}, delta);
    std::cout << "wrote " << output_dir << "\n";
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"online forecast-combination prediction market"};
    app.require_subcommand(1);

    std::string config_path;
    Overrides ov;

    auto* sim = app.add_subcommand("simulate", "synthetic market simulation");
    add_common_options(sim, config_path, ov);
    sim->add_flag("--varying", ov.varying, "time-varying true weights");
    sim->add_flag("--invariant", ov.invariant, "time-invariant true weights");

    auto* sweep = app.add_subcommand("sweep", "missingness-rate sweep");
    add_common_options(sweep, config_path, ov);
    std::vector<double> rates;
    sweep->add_option("--rates", rates, "missingness rates to sweep");

    auto* replay = app.add_subcommand("replay", "replay an external forecast CSV as a market");
    add_common_options(replay, config_path, ov);
    std::string forecasts, realizations;
    replay->add_option("--forecasts", forecasts, "forecast CSV path");
    replay->add_option("--realizations", realizations, "realization CSV path");

    auto* report = app.add_subcommand("report", "re-emit CSV reports from a ledger");
    std::string ledger_path, report_dir = "out";
    double report_delta = 0.5;
    report->add_option("--ledger", ledger_path, "ledger JSONL path")->required();
    report->add_option("--output-dir", report_dir, "output directory");
    report->add_option("--delta", report_delta, "in-sample fraction used at settlement");

    CLI11_PARSE(app, argc, argv);

    try {
        if (!rates.empty()) ov.rates = rates;
        if (!forecasts.empty()) ov.forecasts = forecasts;
        if (!realizations.empty()) ov.realizations = realizations;
        if (sim->parsed())
            return cmd_simulate(load_config(config_path, RunMode::simulate_invariant, ov));
        if (sweep->parsed()) return cmd_sweep(load_config(config_path, RunMode::sweep, ov));
        if (replay->parsed()) return cmd_replay(load_config(config_path, RunMode::replay, ov));
        if (report->parsed()) return cmd_report(ledger_path, report_dir, report_delta);
    } catch (const ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const ConflictError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "runtime error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
