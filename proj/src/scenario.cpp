#include "fcm/scenario.hpp"

#include <cmath>
#include <future>
#include <numbers>

#include "fcm/normal.hpp"

namespace fcm {

void ScenarioConfig::validate() const {
    if (sellers.empty()) throw ValidationError("scenario.sellers must not be empty");
    for (const auto& s : sellers)
        if (!(s.sigma > 0.0)) throw ValidationError("scenario.sellers.sigma must be positive");
    if (horizon < 1) throw ValidationError("scenario.horizon must be at least 1");
    if (runs < 1) throw ValidationError("scenario.runs must be at least 1");
    if (!(missing_rate >= 0.0 && missing_rate < 1.0))
        throw ValidationError("scenario.missing_rate must lie in [0,1)");
    if (quantile_levels.empty())
        throw ValidationError("scenario.quantile_levels must not be empty");
    for (std::size_t j = 0; j < quantile_levels.size(); ++j) {
        if (!(quantile_levels[j] > 0.0 && quantile_levels[j] < 1.0))
            throw ValidationError("scenario.quantile_levels entries must lie in (0,1)");
        if (j > 0 && quantile_levels[j] <= quantile_levels[j - 1])
            throw ValidationError("scenario.quantile_levels must be strictly increasing");
    }

    auto check_simplex = [this](const Vec& w, const char* key) {
        if (w.size() != sellers.size())
            throw ValidationError(std::string(key) + " size differs from seller count");
        double sum = 0.0;
        for (double x : w) {
            if (x < 0.0) throw ValidationError(std::string(key) + " entries must be nonnegative");
            sum += x;
        }
        if (std::fabs(sum - 1.0) > 1e-9)
            throw ValidationError(std::string(key) + " must sum to one");
    };

    if (schedule) {
        check_simplex(schedule->start, "scenario.weights_start");
        check_simplex(schedule->end, "scenario.weights_end");
        if (schedule->period < 0.0)
            throw ValidationError("scenario.period must be nonnegative");
        if (!(schedule->smoothing >= 0.0 && schedule->smoothing < 1.0))
            throw ValidationError("scenario.smoothing must lie in [0,1)");
    } else {
        check_simplex(true_weights, "scenario.true_weights");
    }
}

ScenarioConfig ScenarioConfig::defaults_invariant() {
    ScenarioConfig c;
    c.sellers = {{0.0, 0.5, 1.0}, {1.0, 0.5, 1.0}, {2.0, 0.5, 1.0}};
    c.true_weights = {0.1, 0.6, 0.3};
    return c;
}

ScenarioConfig ScenarioConfig::defaults_varying() {
    ScenarioConfig c = defaults_invariant();
    WeightSchedule s;
    s.start = {0.7, 0.2, 0.1};
    s.end = {0.1, 0.2, 0.7};
    s.period = 0.0;  // follow the horizon
    s.smoothing = 0.999;
    c.schedule = s;
    return c;
}

AvailabilityMask gen_missingness(double rate, std::size_t n, std::mt19937_64& rng) {
    if (!(rate >= 0.0 && rate < 1.0))
        throw ValidationError("missingness rate must lie in [0,1)");
    if (n == 0) throw ValidationError("missingness mask needs at least one seller");
    std::vector<std::uint8_t> bits(n, 0);
    bool all_missing = true;
    for (std::size_t i = 0; i < n; ++i) {
        bits[i] = rng::uniform01(rng) < rate ? 1 : 0;
        all_missing = all_missing && bits[i];
    }
    if (all_missing) bits[rng::uniform_index(rng, n)] = 0;
    return AvailabilityMask(std::move(bits));
}

ScenarioGenerator::ScenarioGenerator(ScenarioConfig config, int run_index)
    : config_(std::move(config)),
      rng_(rng::derive_seed(config_.seed, static_cast<std::uint64_t>(run_index))) {
    config_.validate();
    for (double tau : config_.quantile_levels) z_levels_.push_back(normal_quantile(tau));
    if (!config_.schedule) current_weights_ = config_.true_weights;
}

Vec ScenarioGenerator::weights_at(std::int64_t t) {
    if (!config_.schedule) return config_.true_weights;
    const auto& s = *config_.schedule;
    const double period = s.period > 0.0 ? s.period : static_cast<double>(config_.horizon);
    const double beta =
        0.5 * (1.0 + std::sin(2.0 * std::numbers::pi * static_cast<double>(t) / period));
    Vec target(s.start.size());
    for (std::size_t i = 0; i < target.size(); ++i)
        target[i] = (1.0 - beta) * s.start[i] + beta * s.end[i];
    if (t == 0 || current_weights_.empty()) return target;
    Vec w(target.size());
    for (std::size_t i = 0; i < w.size(); ++i)
        w[i] = s.smoothing * current_weights_[i] + (1.0 - s.smoothing) * target[i];
    return w;
}

RoundSample ScenarioGenerator::next() {
    const std::size_t n = config_.seller_count();
    const std::size_t m = config_.quantile_levels.size();
    current_weights_ = weights_at(t_);

    RoundSample round;
    round.true_weights = current_weights_;
    round.submissions = Matrix(n, m);

    double mu_t = 0.0;
    double sigma_t = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const auto& s = config_.sellers[i];
        const double mu_i = s.offset + s.noise * rng::normal(rng_);
        for (std::size_t j = 0; j < m; ++j)
            round.submissions(i, j) = mu_i + s.sigma * z_levels_[j];
        mu_t += current_weights_[i] * mu_i;
        sigma_t += current_weights_[i] * s.sigma;
    }
    round.realization = mu_t + sigma_t * rng::normal(rng_);
    round.alpha = gen_missingness(config_.missing_rate, n, rng_);
    ++t_;
    return round;
}

ImputationState::ImputationState(std::size_t n_sellers, std::size_t n_levels)
    : levels_(n_levels), cells_(n_sellers * n_levels) {}

Vec ImputationState::fill(std::size_t level, const Vec& x_hat, const AvailabilityMask& alpha,
                          Kind kind, std::vector<std::uint8_t>* no_history) const {
    if (x_hat.size() * levels_ != cells_.size() || alpha.size() != x_hat.size())
        throw ValidationError("imputation state size differs from submission size");
    Vec filled = x_hat;
    if (no_history) no_history->assign(x_hat.size(), 0);
    for (std::size_t i = 0; i < x_hat.size(); ++i) {
        if (!alpha.missing(i)) continue;
        const Cell& c = cells_[i * levels_ + level];
        if (c.count == 0) {
            filled[i] = 0.0;
            if (no_history) (*no_history)[i] = 1;
        } else {
            filled[i] = kind == Kind::mean ? c.sum / static_cast<double>(c.count) : c.last;
        }
    }
    return filled;
}

void ImputationState::observe(std::size_t level, const Vec& x_hat,
                              const AvailabilityMask& alpha) {
    if (x_hat.size() * levels_ != cells_.size() || alpha.size() != x_hat.size())
        throw ValidationError("imputation state size differs from submission size");
    for (std::size_t i = 0; i < x_hat.size(); ++i) {
        if (alpha.missing(i)) continue;
        Cell& c = cells_[i * levels_ + level];
        c.count += 1;
        c.sum += x_hat[i];
        c.last = x_hat[i];
    }
}

std::string method_name(Method m) {
    switch (m) {
        case Method::qr: return "qr";
        case Method::rqr: return "rqr";
        case Method::mean_impute: return "mean-impute";
        case Method::last_impute: return "last-impute";
    }
    return "?";
}

Method method_from_name(const std::string& name) {
    if (name == "qr") return Method::qr;
    if (name == "rqr") return Method::rqr;
    if (name == "mean-impute") return Method::mean_impute;
    if (name == "last-impute") return Method::last_impute;
    throw ValidationError("unknown method '" + name + "'");
}

namespace {

struct RunAccumulator {
    explicit RunAccumulator(std::size_t n)
        : err_sum(n, 0.0), w_sum(n, 0.0), w_sq(n, 0.0), cx(n, 0.0), cy(n, 0.0), cxx(n, 0.0),
          cyy(n, 0.0), cxy(n, 0.0) {}

    Vec err_sum, w_sum, w_sq;           // post burn-in moments
    Vec cx, cy, cxx, cyy, cxy;          // last-half correlation moments
    std::int64_t count = 0;
    std::int64_t corr_count = 0;

    void weight_sample(const Vec& w_est, const Vec& w_true) {
        for (std::size_t i = 0; i < w_est.size(); ++i) {
            err_sum[i] += w_est[i] - w_true[i];
            w_sum[i] += w_est[i];
            w_sq[i] += w_est[i] * w_est[i];
        }
        ++count;
    }

    void corr_sample(const Vec& w_est, const Vec& w_true) {
        for (std::size_t i = 0; i < w_est.size(); ++i) {
            cx[i] += w_est[i];
            cy[i] += w_true[i];
            cxx[i] += w_est[i] * w_est[i];
            cyy[i] += w_true[i] * w_true[i];
            cxy[i] += w_est[i] * w_true[i];
        }
        ++corr_count;
    }
};

struct RunResult {
    Vec bias, variance, correlation;
    std::vector<TrajectoryRow> trajectory;
};

RunResult simulate_run(const ScenarioConfig& config, Method method,
                       const MonteCarloOptions& options, int run, std::int64_t burn_in,
                       bool capture) {
    const std::size_t n = config.seller_count();
    const double tau = config.quantile_levels.at(options.level_index);
    const std::int64_t half = config.horizon / 2;

    const ModelKind kind = method == Method::rqr ? ModelKind::robust : ModelKind::plain;
    QuantileModel model(tau, n, options.eta, kind);
    ImputationState history(n, 1);
    ScenarioGenerator gen(config, run);
    RunAccumulator acc(n);
    RunResult out;

    for (std::int64_t t = 0; t < config.horizon; ++t) {
        RoundSample round = gen.next();
        Vec x(n);
        for (std::size_t i = 0; i < n; ++i) x[i] = round.submissions(i, options.level_index);

        switch (method) {
            case Method::qr:
                model.update(x, round.realization);
                break;
            case Method::rqr: {
                const Vec masked = apply_mask(x, round.alpha);
                model.update(masked, round.alpha, round.realization);
                break;
            }
            case Method::mean_impute:
            case Method::last_impute: {
                const auto kind_i = method == Method::mean_impute ? ImputationState::Kind::mean
                                                                  : ImputationState::Kind::last;
                const Vec filled = history.fill(0, x, round.alpha, kind_i);
                history.observe(0, x, round.alpha);
                model.update(filled, round.realization);
                break;
            }
        }

        const Vec& w = model.weights();
        if (t >= burn_in) acc.weight_sample(w, round.true_weights);
        if (t >= half) acc.corr_sample(w, round.true_weights);
        if (capture) {
            for (std::size_t i = 0; i < n; ++i)
                out.trajectory.push_back({run, t, static_cast<int>(i), round.true_weights[i],
                                          w[i], round.alpha[i]});
        }
    }

    out.bias.assign(n, 0.0);
    out.variance.assign(n, 0.0);
    out.correlation.assign(n, 0.0);
    const double cnt = static_cast<double>(acc.count);
    for (std::size_t i = 0; i < n; ++i) {
        out.bias[i] = acc.err_sum[i] / cnt;
        const double mean = acc.w_sum[i] / cnt;
        out.variance[i] =
            acc.count > 1 ? std::max(0.0, (acc.w_sq[i] - cnt * mean * mean) / (cnt - 1.0)) : 0.0;
        const double cc = static_cast<double>(acc.corr_count);
        const double cov = acc.cxy[i] - acc.cx[i] * acc.cy[i] / cc;
        const double vx = acc.cxx[i] - acc.cx[i] * acc.cx[i] / cc;
        const double vy = acc.cyy[i] - acc.cy[i] * acc.cy[i] / cc;
        out.correlation[i] = (vx > 0.0 && vy > 0.0) ? cov / std::sqrt(vx * vy) : 0.0;
    }
    return out;
}

}  // namespace

MonteCarloResult run_monte_carlo(const ScenarioConfig& config, Method method,
                                 const MonteCarloOptions& options) {
    config.validate();
    if (options.level_index >= config.quantile_levels.size())
        throw ValidationError("tracked level index out of range");
    if (method == Method::qr && config.missing_rate > 0.0)
        throw ValidationError(
            "plain QR cannot run with missingness; use rqr or an imputation baseline");

    const std::int64_t burn_in = std::min<std::int64_t>(options.burn_in, config.horizon / 2);
    const std::size_t n = config.seller_count();

    std::vector<RunResult> results(config.runs);
    auto worker = [&](int run) {
        const bool capture = options.capture == TrajectoryCapture::all_runs ||
                             (options.capture == TrajectoryCapture::first_run && run == 0);
        return simulate_run(config, method, options, run, burn_in, capture);
    };

    if (options.parallel && config.runs > 1) {
        std::vector<std::future<RunResult>> futures;
        futures.reserve(config.runs);
        for (int run = 0; run < config.runs; ++run)
            futures.push_back(std::async(std::launch::async, worker, run));
        for (int run = 0; run < config.runs; ++run) results[run] = futures[run].get();
    } else {
        for (int run = 0; run < config.runs; ++run) results[run] = worker(run);
    }

    // Reduce in run order so the aggregation is independent of scheduling.
    MonteCarloResult out;
    out.stats.burn_in = burn_in;
    out.stats.bias.assign(n, 0.0);
    out.stats.bias_sd.assign(n, 0.0);
    out.stats.variance.assign(n, 0.0);
    out.stats.variance_sd.assign(n, 0.0);
    out.stats.tracking_correlation.assign(n, 0.0);
    const double r = static_cast<double>(config.runs);
    for (const auto& res : results) {
        for (std::size_t i = 0; i < n; ++i) {
            out.stats.bias[i] += res.bias[i] / r;
            out.stats.variance[i] += res.variance[i] / r;
            out.stats.tracking_correlation[i] += res.correlation[i] / r;
        }
    }
    if (config.runs > 1) {
        for (const auto& res : results) {
            for (std::size_t i = 0; i < n; ++i) {
                const double db = res.bias[i] - out.stats.bias[i];
                const double dv = res.variance[i] - out.stats.variance[i];
                out.stats.bias_sd[i] += db * db;
                out.stats.variance_sd[i] += dv * dv;
            }
        }
        for (std::size_t i = 0; i < n; ++i) {
            out.stats.bias_sd[i] = std::sqrt(out.stats.bias_sd[i] / (r - 1.0));
            out.stats.variance_sd[i] = std::sqrt(out.stats.variance_sd[i] / (r - 1.0));
        }
    }
    for (auto& res : results)
        out.trajectories.insert(out.trajectories.end(), res.trajectory.begin(),
                                res.trajectory.end());
    return out;
}

std::vector<SweepEntry> missingness_sweep(ScenarioConfig config, Method method,
                                          const MonteCarloOptions& options, const Vec& rates) {
    std::vector<SweepEntry> entries;
    for (double rate : rates) {
        if (!(rate >= 0.0 && rate < 1.0))
            throw ValidationError("sweep rates must lie in [0,1)");
        config.missing_rate = rate;
        entries.push_back({rate, run_monte_carlo(config, method, options).stats});
    }
    return entries;
}

}  // namespace fcm
