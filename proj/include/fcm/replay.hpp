#pragma once

#include <memory>
#include <string>

#include "fcm/config.hpp"
#include "fcm/csv_io.hpp"
#include "fcm/session.hpp"

namespace fcm {

// Per-level forecast quality, aggregated from a ledger. Seller statistics
// cover the rounds that seller participated in; the combined forecast
// covers every round.
struct LossSummary {
    Vec levels;
    std::vector<std::string> entities;          // sellers..., then "combined"
    std::vector<std::vector<std::int64_t>> rounds;  // level x entity
    std::vector<Vec> total_loss;                    // level x entity
    std::vector<Vec> mean_loss;                     // level x entity
};

LossSummary loss_summary(const Ledger& ledger, const std::vector<std::string>& sellers);

// Per-seller monetary totals split into the in-sample and out-of-sample
// components (delta is the in-sample fraction used at settlement).
struct RewardSummary {
    std::vector<std::string> sellers;
    Vec in_sample;
    Vec out_sample;
    Vec total;
};

RewardSummary reward_summary(const Ledger& ledger, const std::vector<std::string>& sellers,
                             double delta);

struct ReplayOutcome {
    std::unique_ptr<Market> market;
    LossSummary losses;
    RewardSummary rewards;
};

// Drives a market over the table rounds: a session per timestamp, absent
// rows become missing sellers, settlement uses the configured constant
// utility per round.
ReplayOutcome run_replay(const RunConfig& config, const ForecastTable& table);

// Plot-ready CSV artifacts from a ledger: weight trajectories, cumulative
// reward trajectories, and the per-level loss summary. Seller names default
// to s1..sn when not supplied. Writes are atomic and deterministic.
void emit_report(const Ledger& ledger, const std::string& output_dir,
                 const std::vector<std::string>& sellers = {}, double delta = 0.5);

// CSV renderers used by emit_report (exposed for tests).
std::string weights_csv(const Ledger& ledger, const std::vector<std::string>& sellers);
std::string rewards_trajectory_csv(const Ledger& ledger,
                                   const std::vector<std::string>& sellers);
std::string loss_summary_csv(const LossSummary& summary);
std::string reward_summary_csv(const RewardSummary& summary);

}  // namespace fcm
