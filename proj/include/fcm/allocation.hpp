#pragma once

#include <random>

#include "fcm/combination.hpp"
#include "fcm/types.hpp"

namespace fcm {

struct AllocationConfig {
    enum class Shapley { exact, sampled };

    double delta = 0.5;    // in-sample fraction of each level's utility
    double lambda = 0.99;  // forgetting factor of the recursive Shapley value
    Shapley shapley_method = Shapley::exact;
    int shapley_samples = 200;  // permutations when sampling

    void validate() const;
};

// Per-level Shapley bookkeeping. phi_s is the last round's instantaneous
// value (zero for sellers that were missing); phi_c the recursive value
// phi_c <- lambda * phi_c + (1 - lambda) * phi_s, applied to every seller,
// so the value of an absent seller decays rather than freezes.
struct ShapleyState {
    ShapleyState(std::size_t n, double lambda_) : phi_s(n, 0.0), phi_c(n, 0.0), lambda(lambda_) {}

    void update(const Vec& phi_s_round);
    void add_seller();

    Vec phi_s;
    Vec phi_c;
    double lambda;
};

// Value of a coalition S of sellers: minus the pinball loss of the robust
// prediction made as if every seller outside S were missing, using the
// round's corrected-weight machinery. members must be a subset of the
// sellers available under alpha. The empty coalition predicts 0.
double coalition_value(const QuantileModel& model, const Vec& x_hat,
                       const AvailabilityMask& alpha, double y,
                       const std::vector<std::size_t>& members);

// Exact Shapley values of the available sellers over coalition_value;
// missing sellers get 0. Guarded to at most 20 available sellers — beyond
// that, use shapley_sampled.
Vec shapley_exact(const QuantileModel& model, const Vec& x_hat,
                  const AvailabilityMask& alpha, double y);

// Unbiased Monte Carlo estimate via uniformly random permutations of the
// available sellers.
Vec shapley_sampled(const QuantileModel& model, const Vec& x_hat,
                    const AvailabilityMask& alpha, double y, int num_permutations,
                    std::mt19937_64& rng);

// In-sample shares: max(0, phi_c_i) normalized over available sellers.
// All-nonpositive phi_c among the available -> equal split; nobody
// available -> all zeros.
Vec in_sample_rewards(const Vec& phi_c, const AvailabilityMask& alpha);

// Accuracy scores sc_i = 1 - L_i / sum_available L_j, zero for missing
// sellers. A lone available seller scores 1; all-zero losses score
// 1/n_available each.
Vec oos_scores(double tau, double y, const Vec& x_hat, const AvailabilityMask& alpha);

// Out-of-sample shares: scores normalized over available sellers.
Vec oos_rewards(const Vec& sc, const AvailabilityMask& alpha);

// Shares of one settled (quantile level, lead time) slice.
struct LevelShares {
    double tau = 0.5;
    int horizon = 1;
    Vec in_sample;
    Vec out_sample;
    bool degenerate = false;  // no seller available this round
};

struct LevelRewards {
    double tau = 0.5;
    int horizon = 1;
    double utility = 0.0;  // this slice's share of U_t
    Vec in_sample;
    Vec out_sample;
    Vec reward;  // monetary, per seller
    bool degenerate = false;
};

struct RewardBreakdown {
    double utility = 0.0;  // U_t
    Vec total;             // per seller, summed over slices
    std::vector<LevelRewards> levels;
};

// Splits U_t equally across the slices, then inside each slice pays
// delta * in-sample + (1 - delta) * out-of-sample. Budget balance holds
// whenever at least one seller was available in every slice; degenerate
// slices pay nobody.
RewardBreakdown settle_rewards(double utility, const AllocationConfig& config,
                               const std::vector<LevelShares>& shares);

}  // namespace fcm
