#pragma once

#include <cstdint>
#include <optional>
#include <random>

#include "fcm/combination.hpp"
#include "fcm/types.hpp"

namespace fcm {

// One synthetic seller: forecasts are Normal(mu, sigma) with
// mu = offset + noise * eps, eps ~ N(0,1) redrawn each round.
struct SellerSpec {
    double offset = 0.0;  // C
    double noise = 0.5;   // amplitude on the mean perturbation
    double sigma = 1.0;   // forecast distribution spread
};

// Periodic drift between two weight vectors, smoothed recursively:
//   beta_t = (1 + sin(2 pi t / period)) / 2
//   target = (1 - beta_t) * start + beta_t * end
//   w_t    = smoothing * w_{t-1} + (1 - smoothing) * target
struct WeightSchedule {
    Vec start;
    Vec end;
    double period = 0.0;  // 0 = use the horizon
    double smoothing = 0.999;
};

struct ScenarioConfig {
    std::vector<SellerSpec> sellers;
    Vec true_weights;  // static case; ignored when schedule is set
    std::optional<WeightSchedule> schedule;
    std::int64_t horizon = 20000;  // T
    int runs = 20;
    double missing_rate = 0.05;
    Vec quantile_levels = {0.1, 0.5, 0.9};
    std::uint64_t seed = 1;

    std::size_t seller_count() const { return sellers.size(); }
    void validate() const;

    static ScenarioConfig defaults_invariant();
    static ScenarioConfig defaults_varying();
};

struct RoundSample {
    Matrix submissions;  // seller-major: submissions(i, j) = seller i, level j
    double realization = 0.0;
    AvailabilityMask alpha;
    Vec true_weights;
};

// Independent Bernoulli(rate) per seller; when every draw comes up missing,
// one uniformly chosen seller is forced present.
AvailabilityMask gen_missingness(double rate, std::size_t n, std::mt19937_64& rng);

// Deterministic round stream for one Monte Carlo run. Draw order per round
// is fixed: seller mean perturbations, then the realization draw, then the
// missingness mask.
class ScenarioGenerator {
public:
    ScenarioGenerator(ScenarioConfig config, int run_index);

    RoundSample next();
    std::int64_t t() const { return t_; }
    const ScenarioConfig& config() const { return config_; }

private:
    Vec weights_at(std::int64_t t);

    ScenarioConfig config_;
    std::mt19937_64 rng_;
    std::int64_t t_ = 0;
    Vec z_levels_;         // standard normal quantiles of the configured levels
    Vec current_weights_;  // recursive state of the time-varying schedule
};

// Running per-(seller, level) history backing the imputation baselines.
class ImputationState {
public:
    enum class Kind { mean, last };

    ImputationState(std::size_t n_sellers, std::size_t n_levels);

    // Replaces missing entries by the running mean / last observed value of
    // that seller at that level. Sellers with no history yet impute 0 and
    // are flagged.
    Vec fill(std::size_t level, const Vec& x_hat, const AvailabilityMask& alpha, Kind kind,
             std::vector<std::uint8_t>* no_history = nullptr) const;

    // Record this round's present submissions.
    void observe(std::size_t level, const Vec& x_hat, const AvailabilityMask& alpha);

private:
    struct Cell {
        std::int64_t count = 0;
        double sum = 0.0;
        double last = 0.0;
    };
    std::size_t levels_;
    std::vector<Cell> cells_;  // seller-major
};

enum class Method { qr, rqr, mean_impute, last_impute };

std::string method_name(Method m);
Method method_from_name(const std::string& name);

// Per-seller weight-tracking quality over a Monte Carlo batch. bias is the
// mean signed error of the estimated weight after burn-in, averaged over
// runs; variance is the within-run temporal variance, averaged over runs;
// the _sd fields are across-run standard deviations. tracking_correlation
// is the across-run mean Pearson correlation between estimated and true
// weights over the last half of the horizon.
struct WeightErrorStats {
    Vec bias;
    Vec bias_sd;
    Vec variance;
    Vec variance_sd;
    Vec tracking_correlation;
    std::int64_t burn_in = 0;
};

enum class TrajectoryCapture { none, first_run, all_runs };

struct TrajectoryRow {
    int run;
    std::int64_t t;
    int seller;
    double w_true;
    double w_est;
    int alpha;
};

struct MonteCarloResult {
    WeightErrorStats stats;
    std::vector<TrajectoryRow> trajectories;
};

struct MonteCarloOptions {
    double eta = 0.05;
    std::size_t level_index = 0;     // which configured quantile level to track
    std::int64_t burn_in = 5000;     // clamped to horizon / 2 for short runs
    TrajectoryCapture capture = TrajectoryCapture::none;
    bool parallel = true;
};

// Seeded, deterministic batch of independent runs. Plain QR requires a
// zero missingness rate; the imputation baselines feed filled vectors to a
// plain model, treating every seller as present.
MonteCarloResult run_monte_carlo(const ScenarioConfig& config, Method method,
                                 const MonteCarloOptions& options);

struct SweepEntry {
    double rate;
    WeightErrorStats stats;
};

std::vector<SweepEntry> missingness_sweep(ScenarioConfig config, Method method,
                                          const MonteCarloOptions& options, const Vec& rates);

}  // namespace fcm
