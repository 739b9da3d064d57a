#include "fcm/config.hpp"

#include <cmath>
#include <set>

#include <json.hpp>

namespace fcm {

using json = nlohmann::ordered_json;

std::string mode_name(RunMode mode) {
    switch (mode) {
        case RunMode::simulate_invariant: return "simulate-invariant";
        case RunMode::simulate_varying: return "simulate-varying";
        case RunMode::sweep: return "sweep";
        case RunMode::replay: return "replay";
    }
    return "?";
}

RunMode mode_from_name(const std::string& name) {
    if (name == "simulate-invariant") return RunMode::simulate_invariant;
    if (name == "simulate-varying") return RunMode::simulate_varying;
    if (name == "sweep") return RunMode::sweep;
    if (name == "replay") return RunMode::replay;
    throw ValidationError("mode: unknown mode '" + name + "'");
}

RunConfig RunConfig::defaults_for(RunMode mode) {
    RunConfig c;
    c.mode = mode;
    c.scenario = mode == RunMode::simulate_varying ? ScenarioConfig::defaults_varying()
                                                   : ScenarioConfig::defaults_invariant();
    c.scenario.seed = c.seed;
    return c;
}

void RunConfig::validate() const {
    if (!(eta > 0.0) || !std::isfinite(eta))
        throw ValidationError("eta: must be positive");
    if (!(utility_per_round >= 0.0) || !std::isfinite(utility_per_round))
        throw ValidationError("utility_per_round: must be nonnegative");
    if (output_dir.empty()) throw ValidationError("output_dir: must not be empty");
    try {
        scenario.validate();
        allocation.validate();
    } catch (const ValidationError& e) {
        throw ValidationError(e.what());
    }
    for (double r : sweep_rates)
        if (!(r >= 0.0 && r < 1.0)) throw ValidationError("sweep.rates: must lie in [0,1)");
    if (mode == RunMode::replay) {
        if (replay.forecasts.empty())
            throw ValidationError("replay.forecasts: required in replay mode");
        if (replay.realizations.empty())
            throw ValidationError("replay.realizations: required in replay mode");
        if (method != Method::qr && method != Method::rqr)
            throw ValidationError(
                "method: replay settles real rewards, so imputation baselines are not "
                "allowed; use qr or rqr");
    }
    if (method == Method::qr && mode != RunMode::replay && scenario.missing_rate > 0.0)
        throw ValidationError(
            "method: plain qr requires scenario.missing_rate = 0; use rqr or an imputation "
            "baseline");
    if (mode == RunMode::sweep && method == Method::qr)
        for (double r : sweep_rates)
            if (r > 0.0)
                throw ValidationError(
                    "method: plain qr cannot sweep nonzero missingness rates");
}

namespace {

[[noreturn]] void fail(const std::string& path, const std::string& what) {
    throw ValidationError(path + ": " + what);
}

void check_keys(const json& obj, const std::string& path,
                const std::set<std::string>& allowed) {
    for (const auto& [key, value] : obj.items()) {
        (void)value;
        if (!allowed.count(key)) fail(path.empty() ? key : path + "." + key, "unknown key");
    }
}

double get_number(const json& obj, const std::string& path, const std::string& key,
                  double fallback) {
    if (!obj.contains(key)) return fallback;
    if (!obj.at(key).is_number()) fail(path + key, "expected a number");
    return obj.at(key).get<double>();
}

Vec get_vector(const json& obj, const std::string& path, const std::string& key,
               Vec fallback) {
    if (!obj.contains(key)) return fallback;
    if (!obj.at(key).is_array()) fail(path + key, "expected an array of numbers");
    Vec v;
    for (const auto& x : obj.at(key)) {
        if (!x.is_number()) fail(path + key, "expected an array of numbers");
        v.push_back(x.get<double>());
    }
    return v;
}

std::string get_string(const json& obj, const std::string& path, const std::string& key,
                       std::string fallback) {
    if (!obj.contains(key)) return fallback;
    if (!obj.at(key).is_string()) fail(path + key, "expected a string");
    return obj.at(key).get<std::string>();
}

}  // namespace

RunConfig RunConfig::parse(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw ValidationError(std::string("config is not valid JSON: ") + e.what());
    }
    if (!j.is_object()) throw ValidationError("config must be a JSON object");

    check_keys(j, "", {"mode", "seed", "output_dir", "method", "eta", "utility_per_round",
                       "scenario", "allocation", "sweep", "replay"});

    RunConfig c = defaults_for(
        j.contains("mode") ? mode_from_name(get_string(j, "", "mode", ""))
                           : RunMode::simulate_invariant);

    if (j.contains("seed")) {
        if (!j.at("seed").is_number_integer() || j.at("seed").get<std::int64_t>() < 0)
            fail("seed", "expected a nonnegative integer");
        c.seed = j.at("seed").get<std::uint64_t>();
    }
    c.output_dir = get_string(j, "", "output_dir", c.output_dir);
    if (j.contains("method")) c.method = method_from_name(get_string(j, "", "method", ""));
    c.eta = get_number(j, "", "eta", c.eta);
    c.utility_per_round = get_number(j, "", "utility_per_round", c.utility_per_round);

    if (j.contains("scenario")) {
        const json& s = j.at("scenario");
        if (!s.is_object()) fail("scenario", "expected an object");
        check_keys(s, "scenario",
                   {"sellers", "true_weights", "weights_start", "weights_end", "period",
                    "smoothing", "horizon", "runs", "missing_rate", "quantile_levels"});
        if (s.contains("sellers")) {
            if (!s.at("sellers").is_array()) fail("scenario.sellers", "expected an array");
            c.scenario.sellers.clear();
            std::size_t idx = 0;
            for (const auto& e : s.at("sellers")) {
                const std::string path = "scenario.sellers[" + std::to_string(idx++) + "]";
                if (!e.is_object()) fail(path, "expected an object");
                check_keys(e, path, {"offset", "noise", "sigma"});
                SellerSpec spec;
                spec.offset = get_number(e, path + ".", "offset", spec.offset);
                spec.noise = get_number(e, path + ".", "noise", spec.noise);
                spec.sigma = get_number(e, path + ".", "sigma", spec.sigma);
                c.scenario.sellers.push_back(spec);
            }
        }
        c.scenario.true_weights =
            get_vector(s, "scenario.", "true_weights", c.scenario.true_weights);
        const bool varying = c.mode == RunMode::simulate_varying;
        if (s.contains("weights_start") || s.contains("weights_end") || s.contains("period") ||
            s.contains("smoothing")) {
            if (!varying)
                fail("scenario.weights_start",
                     "weight schedules apply only to simulate-varying mode");
        }
        if (varying && c.scenario.schedule) {
            auto& sched = *c.scenario.schedule;
            sched.start = get_vector(s, "scenario.", "weights_start", sched.start);
            sched.end = get_vector(s, "scenario.", "weights_end", sched.end);
            sched.period = get_number(s, "scenario.", "period", sched.period);
            sched.smoothing = get_number(s, "scenario.", "smoothing", sched.smoothing);
        }
        const double horizon = get_number(s, "scenario.", "horizon",
                                          static_cast<double>(c.scenario.horizon));
        if (horizon < 1 || horizon != std::floor(horizon))
            fail("scenario.horizon", "expected a positive integer");
        c.scenario.horizon = static_cast<std::int64_t>(horizon);
        const double runs =
            get_number(s, "scenario.", "runs", static_cast<double>(c.scenario.runs));
        if (runs < 1 || runs != std::floor(runs))
            fail("scenario.runs", "expected a positive integer");
        c.scenario.runs = static_cast<int>(runs);
        c.scenario.missing_rate =
            get_number(s, "scenario.", "missing_rate", c.scenario.missing_rate);
        c.scenario.quantile_levels =
            get_vector(s, "scenario.", "quantile_levels", c.scenario.quantile_levels);
    }
    c.scenario.seed = c.seed;

    if (j.contains("allocation")) {
        const json& a = j.at("allocation");
        if (!a.is_object()) fail("allocation", "expected an object");
        check_keys(a, "allocation", {"delta", "lambda", "shapley_method", "shapley_samples"});
        c.allocation.delta = get_number(a, "allocation.", "delta", c.allocation.delta);
        c.allocation.lambda = get_number(a, "allocation.", "lambda", c.allocation.lambda);
        const std::string sm = get_string(a, "allocation.", "shapley_method",
                                          c.allocation.shapley_method ==
                                                  AllocationConfig::Shapley::exact
                                              ? "exact"
                                              : "sampled");
        if (sm == "exact") c.allocation.shapley_method = AllocationConfig::Shapley::exact;
        else if (sm == "sampled") c.allocation.shapley_method = AllocationConfig::Shapley::sampled;
        else fail("allocation.shapley_method", "expected 'exact' or 'sampled'");
        const double samples = get_number(a, "allocation.", "shapley_samples",
                                          c.allocation.shapley_samples);
        if (samples < 1 || samples != std::floor(samples))
            fail("allocation.shapley_samples", "expected a positive integer");
        c.allocation.shapley_samples = static_cast<int>(samples);
    }

    if (j.contains("sweep")) {
        const json& sw = j.at("sweep");
        if (!sw.is_object()) fail("sweep", "expected an object");
        check_keys(sw, "sweep", {"rates"});
        c.sweep_rates = get_vector(sw, "sweep.", "rates", c.sweep_rates);
    }

    if (j.contains("replay")) {
        const json& r = j.at("replay");
        if (!r.is_object()) fail("replay", "expected an object");
        check_keys(r, "replay", {"forecasts", "realizations"});
        c.replay.forecasts = get_string(r, "replay.", "forecasts", c.replay.forecasts);
        c.replay.realizations = get_string(r, "replay.", "realizations", c.replay.realizations);
    }

    // Range checks with key paths.
    try {
        c.validate();
    } catch (const ValidationError&) {
        if (!(c.eta > 0.0)) fail("eta", "must be positive");
        if (!(c.allocation.delta >= 0.0 && c.allocation.delta <= 1.0))
            fail("allocation.delta", "must lie in [0,1]");
        if (!(c.allocation.lambda >= 0.0 && c.allocation.lambda < 1.0))
            fail("allocation.lambda", "must lie in [0,1)");
        if (!(c.scenario.missing_rate >= 0.0 && c.scenario.missing_rate < 1.0))
            fail("scenario.missing_rate", "must lie in [0,1)");
        for (std::size_t i = 1; i < c.scenario.quantile_levels.size(); ++i)
            if (c.scenario.quantile_levels[i] <= c.scenario.quantile_levels[i - 1])
                fail("scenario.quantile_levels", "must be strictly increasing");
        throw;
    }
    return c;
}

std::string RunConfig::to_json() const {
    json j;
    j["mode"] = mode_name(mode);
    j["seed"] = seed;
    j["output_dir"] = output_dir;
    j["method"] = method_name(method);
    j["eta"] = eta;
    j["utility_per_round"] = utility_per_round;

    json s;
    s["sellers"] = json::array();
    for (const auto& sp : scenario.sellers)
        s["sellers"].push_back({{"offset", sp.offset}, {"noise", sp.noise}, {"sigma", sp.sigma}});
    s["true_weights"] = scenario.true_weights;
    if (scenario.schedule) {
        s["weights_start"] = scenario.schedule->start;
        s["weights_end"] = scenario.schedule->end;
        s["period"] = scenario.schedule->period;
        s["smoothing"] = scenario.schedule->smoothing;
    }
    s["horizon"] = scenario.horizon;
    s["runs"] = scenario.runs;
    s["missing_rate"] = scenario.missing_rate;
    s["quantile_levels"] = scenario.quantile_levels;
    j["scenario"] = std::move(s);

    json a;
    a["delta"] = allocation.delta;
    a["lambda"] = allocation.lambda;
    a["shapley_method"] =
        allocation.shapley_method == AllocationConfig::Shapley::exact ? "exact" : "sampled";
    a["shapley_samples"] = allocation.shapley_samples;
    j["allocation"] = std::move(a);

    j["sweep"] = {{"rates", sweep_rates}};
    if (mode == RunMode::replay)
        j["replay"] = {{"forecasts", replay.forecasts}, {"realizations", replay.realizations}};
    return j.dump(2) + "\n";
}

}  // namespace fcm
