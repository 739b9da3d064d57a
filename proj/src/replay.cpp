#include "fcm/replay.hpp"

#include <filesystem>

#include "fcm/combination.hpp"
#include "fcm/io_util.hpp"
#include "fcm/ledger.hpp"

namespace fcm {

namespace {

std::vector<std::string> default_names(std::size_t n, const std::vector<std::string>& given) {
    if (!given.empty()) {
        if (given.size() != n)
            throw ValidationError("seller name count differs from ledger seller count");
        return given;
    }
    std::vector<std::string> names;
    for (std::size_t i = 0; i < n; ++i) names.push_back("s" + std::to_string(i + 1));
    return names;
}

}  // namespace

LossSummary loss_summary(const Ledger& ledger, const std::vector<std::string>& sellers) {
    if (ledger.empty()) throw ValidationError("ledger is empty");
    const std::size_t n = ledger.front().alpha.size();
    const std::size_t slices = ledger.front().slices.size();

    LossSummary s;
    s.entities = default_names(n, sellers);
    s.entities.push_back("combined");
    for (std::size_t sl = 0; sl < slices; ++sl) s.levels.push_back(ledger.front().slices[sl].tau);
    s.rounds.assign(slices, std::vector<std::int64_t>(n + 1, 0));
    s.total_loss.assign(slices, Vec(n + 1, 0.0));
    s.mean_loss.assign(slices, Vec(n + 1, 0.0));

    for (const auto& rec : ledger) {
        if (rec.alpha.size() != n || rec.slices.size() != slices)
            throw ValidationError("ledger records disagree on market shape");
        for (std::size_t sl = 0; sl < slices; ++sl) {
            const auto& slice = rec.slices[sl];
            const double y = rec.y.at(static_cast<std::size_t>(slice.horizon - 1));
            for (std::size_t i = 0; i < n; ++i) {
                if (rec.alpha[i]) continue;
                s.total_loss[sl][i] += quantile_loss(slice.tau, y, slice.submissions[i]);
                s.rounds[sl][i] += 1;
            }
            s.total_loss[sl][n] += quantile_loss(slice.tau, y, slice.combined);
            s.rounds[sl][n] += 1;
        }
    }
    for (std::size_t sl = 0; sl < slices; ++sl)
        for (std::size_t e = 0; e <= n; ++e)
            s.mean_loss[sl][e] =
                s.rounds[sl][e] > 0 ? s.total_loss[sl][e] / static_cast<double>(s.rounds[sl][e])
                                    : 0.0;
    return s;
}

RewardSummary reward_summary(const Ledger& ledger, const std::vector<std::string>& sellers,
                             double delta) {
    if (ledger.empty()) throw ValidationError("ledger is empty");
    const std::size_t n = ledger.front().alpha.size();
    RewardSummary r;
    r.sellers = default_names(n, sellers);
    r.in_sample.assign(n, 0.0);
    r.out_sample.assign(n, 0.0);
    r.total.assign(n, 0.0);
    for (const auto& rec : ledger) {
        const double per_slice = rec.utility / static_cast<double>(rec.slices.size());
        for (const auto& slice : rec.slices) {
            for (std::size_t i = 0; i < n; ++i) {
                if (slice.reward.empty()) continue;
                r.in_sample[i] += per_slice * delta * slice.in_sample[i];
                r.out_sample[i] += per_slice * (1.0 - delta) * slice.out_sample[i];
                r.total[i] += slice.reward[i];
            }
        }
    }
    return r;
}

ReplayOutcome run_replay(const RunConfig& config, const ForecastTable& table) {
    config.validate();
    if (table.rounds() == 0) throw ValidationError("forecast table is empty");
    if (table.seller_count() == 0) throw ValidationError("forecast table has no sellers");

    MarketTask task;
    task.task_id = "replay";
    task.quantile_levels = table.quantile_levels;
    task.horizon_steps = 1;

    auto market = std::make_unique<Market>(task, table.sellers, config.engine(),
                                           config.allocation, config.seed);
    for (std::size_t r = 0; r < table.rounds(); ++r) {
        market->open_session(table.timestamps[r]);
        for (std::size_t i = 0; i < table.seller_count(); ++i) {
            if (table.missing[r][i]) continue;
            Vec values(table.quantile_levels.size());
            for (std::size_t j = 0; j < values.size(); ++j)
                values[j] = table.submissions[r](i, j);
            market->submit(table.sellers[i], values);
        }
        market->close_session();
        market->settle(table.realizations[r], config.utility_per_round);
    }

    ReplayOutcome out;
    out.losses = loss_summary(market->ledger(), table.sellers);
    out.rewards = reward_summary(market->ledger(), table.sellers, config.allocation.delta);
    out.market = std::move(market);
    return out;
}

std::string weights_csv(const Ledger& ledger, const std::vector<std::string>& sellers) {
    if (ledger.empty()) throw ValidationError("ledger is empty");
    const std::size_t n = ledger.front().alpha.size();
    const auto names = default_names(n, sellers);
    std::string out = "t,horizon,tau,seller,w\n";
    for (const auto& rec : ledger)
        for (const auto& slice : rec.slices)
            for (std::size_t i = 0; i < n; ++i)
                out += std::to_string(rec.t) + "," + std::to_string(slice.horizon) + "," +
                       format_double(slice.tau) + "," + names[i] + "," +
                       format_double(slice.weights[i]) + "\n";
    return out;
}

std::string rewards_trajectory_csv(const Ledger& ledger,
                                   const std::vector<std::string>& sellers) {
    if (ledger.empty()) throw ValidationError("ledger is empty");
    const std::size_t n = ledger.front().alpha.size();
    const auto names = default_names(n, sellers);
    std::string out = "t,cum_utility";
    for (const auto& name : names) out += "," + name;
    out += "\n";
    double cum_u = 0.0;
    Vec cum(n, 0.0);
    for (const auto& rec : ledger) {
        cum_u += rec.utility;
        for (std::size_t i = 0; i < n; ++i) cum[i] += rec.totals[i];
        out += std::to_string(rec.t) + "," + format_double(cum_u);
        for (std::size_t i = 0; i < n; ++i) out += "," + format_double(cum[i]);
        out += "\n";
    }
    return out;
}

std::string loss_summary_csv(const LossSummary& summary) {
    std::string out = "tau,entity,rounds,total_loss,mean_loss\n";
    for (std::size_t sl = 0; sl < summary.levels.size(); ++sl)
        for (std::size_t e = 0; e < summary.entities.size(); ++e)
            out += format_double(summary.levels[sl]) + "," + summary.entities[e] + "," +
                   std::to_string(summary.rounds[sl][e]) + "," +
                   format_double(summary.total_loss[sl][e]) + "," +
                   format_double(summary.mean_loss[sl][e]) + "\n";
    return out;
}

std::string reward_summary_csv(const RewardSummary& summary) {
    std::string out = "seller,in_sample,out_of_sample,total\n";
    for (std::size_t i = 0; i < summary.sellers.size(); ++i)
        out += summary.sellers[i] + "," + format_double(summary.in_sample[i]) + "," +
               format_double(summary.out_sample[i]) + "," + format_double(summary.total[i]) +
               "\n";
    return out;
}

void emit_report(const Ledger& ledger, const std::string& output_dir,
                 const std::vector<std::string>& sellers, double delta) {
    if (ledger.empty()) throw ValidationError("ledger is empty");
    namespace fs = std::filesystem;
    fs::create_directories(output_dir);
    const auto dir = fs::path(output_dir);
    write_file_atomic((dir / "weights_trajectory.csv").string(), weights_csv(ledger, sellers));
    write_file_atomic((dir / "rewards_trajectory.csv").string(),
                      rewards_trajectory_csv(ledger, sellers));
    write_file_atomic((dir / "losses.csv").string(),
                      loss_summary_csv(loss_summary(ledger, sellers)));
    write_file_atomic((dir / "rewards.csv").string(),
                      reward_summary_csv(reward_summary(ledger, sellers, delta)));
}

}  // namespace fcm
