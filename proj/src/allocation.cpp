#include "fcm/allocation.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "fcm/normal.hpp"

namespace fcm {

void AllocationConfig::validate() const {
    if (!(delta >= 0.0 && delta <= 1.0))
        throw ValidationError("allocation.delta must lie in [0,1]");
    if (!(lambda >= 0.0 && lambda < 1.0))
        throw ValidationError("allocation.lambda must lie in [0,1)");
    if (shapley_samples < 1)
        throw ValidationError("allocation.shapley_samples must be at least 1");
}

void ShapleyState::update(const Vec& phi_s_round) {
    if (phi_s_round.size() != phi_c.size())
        throw ValidationError("shapley update size differs from state size");
    phi_s = phi_s_round;
    for (std::size_t i = 0; i < phi_c.size(); ++i)
        phi_c[i] = lambda * phi_c[i] + (1.0 - lambda) * phi_s[i];
}

void ShapleyState::add_seller() {
    phi_s.push_back(0.0);
    phi_c.push_back(0.0);
}

double coalition_value(const QuantileModel& model, const Vec& x_hat,
                       const AvailabilityMask& alpha, double y,
                       const std::vector<std::size_t>& members) {
    const std::size_t n = model.size();
    if (x_hat.size() != n || alpha.size() != n)
        throw ValidationError("coalition inputs differ from registered seller count");

    std::vector<std::uint8_t> outside(n, 1);
    for (std::size_t i : members) {
        if (i >= n) throw ValidationError("coalition member index out of range");
        if (alpha.missing(i))
            throw ValidationError("coalition may only contain available sellers");
        outside[i] = 0;
    }
    AvailabilityMask coalition_mask{std::move(outside)};
    const double y_hat = model.predict(apply_mask(x_hat, coalition_mask), coalition_mask);
    return -quantile_loss(model.tau(), y, y_hat);
}

namespace {

// Shared by the exact and sampled estimators: coalition values indexed by
// bitmask over the available-seller list.
struct CoalitionTable {
    explicit CoalitionTable(const QuantileModel& model, const Vec& x_hat,
                            const AvailabilityMask& alpha, double y)
        : avail(alpha.available_indices()) {
        values.assign(std::size_t{1} << avail.size(), 0.0);
        std::vector<std::size_t> members;
        for (std::size_t mask = 0; mask < values.size(); ++mask) {
            members.clear();
            for (std::size_t b = 0; b < avail.size(); ++b)
                if (mask & (std::size_t{1} << b)) members.push_back(avail[b]);
            values[mask] = coalition_value(model, x_hat, alpha, y, members);
        }
    }

    std::vector<std::size_t> avail;
    Vec values;
};

}  // namespace

Vec shapley_exact(const QuantileModel& model, const Vec& x_hat,
                  const AvailabilityMask& alpha, double y) {
    const std::size_t n = model.size();
    if (alpha.size() != n || x_hat.size() != n)
        throw ValidationError("shapley inputs differ from registered seller count");
    const std::size_t n_avail = alpha.available_count();
    if (n_avail > 20)
        throw ValidationError(
            "exact Shapley is limited to 20 available sellers; use permutation sampling");

    Vec phi(n, 0.0);
    if (n_avail == 0) return phi;

    const CoalitionTable table(model, x_hat, alpha, y);

    // Factorial coalition weights |S|! (n-|S|-1)! / n!.
    Vec weight_by_size(n_avail, 0.0);
    {
        Vec fact(n_avail + 1, 1.0);
        for (std::size_t i = 1; i <= n_avail; ++i)
            fact[i] = fact[i - 1] * static_cast<double>(i);
        for (std::size_t s = 0; s < n_avail; ++s)
            weight_by_size[s] = fact[s] * fact[n_avail - s - 1] / fact[n_avail];
    }

    const std::size_t full = table.values.size();
    std::vector<int> popcount(full, 0);
    for (std::size_t mask = 1; mask < full; ++mask)
        popcount[mask] = popcount[mask >> 1] + static_cast<int>(mask & 1);

    for (std::size_t b = 0; b < n_avail; ++b) {
        const std::size_t bit = std::size_t{1} << b;
        double sum = 0.0;
        for (std::size_t mask = 0; mask < full; ++mask) {
            if (mask & bit) continue;
            sum += weight_by_size[popcount[mask]] * (table.values[mask | bit] - table.values[mask]);
        }
        phi[table.avail[b]] = sum;
    }
    return phi;
}

Vec shapley_sampled(const QuantileModel& model, const Vec& x_hat,
                    const AvailabilityMask& alpha, double y, int num_permutations,
                    std::mt19937_64& rng) {
    const std::size_t n = model.size();
    if (alpha.size() != n || x_hat.size() != n)
        throw ValidationError("shapley inputs differ from registered seller count");
    if (num_permutations < 1)
        throw ValidationError("permutation sampling needs at least one permutation");

    Vec phi(n, 0.0);
    const auto avail = alpha.available_indices();
    if (avail.empty()) return phi;

    const double v_empty = coalition_value(model, x_hat, alpha, y, {});
    std::vector<std::size_t> order(avail.size());
    std::iota(order.begin(), order.end(), 0);
    std::vector<std::size_t> prefix;
    prefix.reserve(avail.size());

    for (int p = 0; p < num_permutations; ++p) {
        // Fisher-Yates with our own index draws, for cross-platform streams.
        for (std::size_t i = order.size(); i > 1; --i)
            std::swap(order[i - 1], order[rng::uniform_index(rng, i)]);
        prefix.clear();
        double prev = v_empty;
        for (std::size_t idx : order) {
            prefix.push_back(avail[idx]);
            const double cur = coalition_value(model, x_hat, alpha, y, prefix);
            phi[avail[idx]] += cur - prev;
            prev = cur;
        }
    }
    for (double& x : phi) x /= static_cast<double>(num_permutations);
    return phi;
}

Vec in_sample_rewards(const Vec& phi_c, const AvailabilityMask& alpha) {
    if (phi_c.size() != alpha.size())
        throw ValidationError("shapley state size differs from availability mask size");
    const std::size_t n = phi_c.size();
    Vec shares(n, 0.0);
    const std::size_t n_avail = alpha.available_count();
    if (n_avail == 0) return shares;

    double denom = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        if (!alpha.missing(i)) denom += std::max(0.0, phi_c[i]);

    if (denom > 0.0) {
        for (std::size_t i = 0; i < n; ++i)
            if (!alpha.missing(i)) shares[i] = std::max(0.0, phi_c[i]) / denom;
    } else {
        // Nobody has positive recursive value; split equally.
        for (std::size_t i = 0; i < n; ++i)
            if (!alpha.missing(i)) shares[i] = 1.0 / static_cast<double>(n_avail);
    }
    return shares;
}

Vec oos_scores(double tau, double y, const Vec& x_hat, const AvailabilityMask& alpha) {
    if (x_hat.size() != alpha.size())
        throw ValidationError("forecast vector and availability mask sizes differ");
    const std::size_t n = x_hat.size();
    Vec sc(n, 0.0);
    const std::size_t n_avail = alpha.available_count();
    if (n_avail == 0) return sc;

    Vec losses(n, 0.0);
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        if (alpha.missing(i)) continue;
        losses[i] = quantile_loss(tau, y, x_hat[i]);
        total += losses[i];
    }

    if (total <= 0.0) {
        // Every available forecast hit the realization exactly.
        for (std::size_t i = 0; i < n; ++i)
            if (!alpha.missing(i)) sc[i] = 1.0 / static_cast<double>(n_avail);
        return sc;
    }
    if (n_avail == 1) {
        // 1 - L/L would zero out the only participant.
        for (std::size_t i = 0; i < n; ++i)
            if (!alpha.missing(i)) sc[i] = 1.0;
        return sc;
    }
    for (std::size_t i = 0; i < n; ++i)
        if (!alpha.missing(i)) sc[i] = 1.0 - losses[i] / total;
    return sc;
}

Vec oos_rewards(const Vec& sc, const AvailabilityMask& alpha) {
    if (sc.size() != alpha.size())
        throw ValidationError("score vector and availability mask sizes differ");
    Vec shares(sc.size(), 0.0);
    double denom = 0.0;
    for (std::size_t i = 0; i < sc.size(); ++i)
        if (!alpha.missing(i)) denom += sc[i];
    if (denom <= 0.0) return shares;
    for (std::size_t i = 0; i < sc.size(); ++i)
        if (!alpha.missing(i)) shares[i] = sc[i] / denom;
    return shares;
}

RewardBreakdown settle_rewards(double utility, const AllocationConfig& config,
                               const std::vector<LevelShares>& shares) {
    config.validate();
    if (utility < 0.0) throw ValidationError("utility must be nonnegative");
    if (shares.empty()) throw ValidationError("settlement needs at least one level");
    const std::size_t n = shares.front().in_sample.size();

    RewardBreakdown out;
    out.utility = utility;
    out.total.assign(n, 0.0);
    const double per_slice = utility / static_cast<double>(shares.size());

    for (const auto& s : shares) {
        if (s.in_sample.size() != n || s.out_sample.size() != n)
            throw ValidationError("share vectors differ in size across levels");
        LevelRewards lr;
        lr.tau = s.tau;
        lr.horizon = s.horizon;
        lr.utility = per_slice;
        lr.in_sample = s.in_sample;
        lr.out_sample = s.out_sample;
        lr.degenerate = s.degenerate;
        lr.reward.assign(n, 0.0);
        if (!s.degenerate) {
            for (std::size_t i = 0; i < n; ++i) {
                lr.reward[i] = per_slice * (config.delta * s.in_sample[i] +
                                            (1.0 - config.delta) * s.out_sample[i]);
                out.total[i] += lr.reward[i];
            }
        }
        out.levels.push_back(std::move(lr));
    }
    return out;
}

}  // namespace fcm
