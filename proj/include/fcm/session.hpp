#pragma once

#include <deque>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>

#include "fcm/allocation.hpp"
#include "fcm/combination.hpp"
#include "fcm/types.hpp"

namespace fcm {

// A client's standing forecast request. Each (quantile level, lead time)
// pair gets its own independent model instance.
struct MarketTask {
    std::string task_id = "task";
    std::string description;
    Vec quantile_levels = {0.1, 0.5, 0.9};
    int horizon_steps = 1;               // k
    std::int64_t submission_deadline = 0;  // informational

    std::size_t level_count() const { return quantile_levels.size(); }
    std::size_t slice_count() const {
        return quantile_levels.size() * static_cast<std::size_t>(horizon_steps);
    }
    void validate() const;
};

enum class SessionState { open, closed, settled };

// One market round. Submissions are lead-time-major: for seller values v,
// v[h * m + j] is the forecast for lead time h+1 at the j-th quantile level.
struct Session {
    std::string id;
    std::int64_t t = 0;
    SessionState state = SessionState::open;
    std::map<std::string, Vec> submissions;
    AvailabilityMask alpha;  // derived at close
    Vec combined;            // per slice, lead-time-major; filled at close
    bool degenerate = false; // every seller missing
    std::vector<std::string> late_attempts;
};

// Stable seller index order plus participation bookkeeping. The contracted
// missing-quota (e.g. 10%) is recorded here but never enforced.
class SellerRegistry {
public:
    explicit SellerRegistry(std::vector<std::string> ids);

    std::size_t size() const { return ids_.size(); }
    const std::vector<std::string>& ids() const { return ids_; }
    std::optional<std::size_t> index_of(const std::string& id) const;

    void add(const std::string& id, std::int64_t joined_t);
    void record_round(const AvailabilityMask& alpha);

    std::int64_t sessions_observed(std::size_t i) const { return observed_[i]; }
    std::int64_t sessions_missed(std::size_t i) const { return missed_[i]; }
    std::int64_t joined_at(std::size_t i) const { return joined_[i]; }
    double missing_rate(std::size_t i) const {
        return observed_[i] == 0 ? 0.0
                                 : static_cast<double>(missed_[i]) /
                                       static_cast<double>(observed_[i]);
    }

private:
    std::vector<std::string> ids_;
    std::vector<std::int64_t> joined_;
    std::vector<std::int64_t> observed_;
    std::vector<std::int64_t> missed_;
};

// One settled round, as appended to the audit ledger.
struct SliceRecord {
    int horizon = 1;  // 1-based lead time
    double tau = 0.5;
    Vec submissions;  // masked forecast vector
    double combined = 0.0;
    Vec in_sample;    // shares
    Vec out_sample;   // shares
    Vec reward;       // monetary
    Vec weights;      // model snapshot after the round's update
    Vec correction;   // row-major D snapshot after the update
    Vec phi_c;        // recursive Shapley values after the update
};

struct SettlementRecord {
    std::int64_t t = 0;
    std::string session_id;
    std::vector<std::uint8_t> alpha;
    Vec y;  // one realization per lead time
    double utility = 0.0;
    Vec totals;  // per seller
    std::vector<SliceRecord> slices;  // lead-time-major
};

using Ledger = std::deque<SettlementRecord>;

struct EngineSettings {
    ModelKind kind = ModelKind::robust;
    double eta = 0.05;
};

// Single-client market: drives sessions through open -> closed -> settled,
// owns the per-slice models and Shapley states, and appends one record per
// settlement to an append-only ledger. Mutating calls are serialized
// internally; distinct markets are fully independent.
class Market {
public:
    Market(MarketTask task, std::vector<std::string> sellers, EngineSettings engine,
           AllocationConfig alloc, std::uint64_t seed = 0);

    const Session& open_session(std::int64_t t);
    void submit(const std::string& seller_id, const Vec& values);
    const Session& close_session();
    const SettlementRecord& settle(double y, double utility);      // single lead time
    const SettlementRecord& settle(const Vec& y, double utility);  // one entry per lead time

    // Experimental mid-market join: zero weight, zero correction row and
    // column, zero contribution history.
    void add_seller(const std::string& seller_id);

    const MarketTask& task() const { return task_; }
    const SellerRegistry& registry() const { return registry_; }
    const EngineSettings& engine() const { return engine_; }
    const AllocationConfig& allocation() const { return alloc_; }

    std::size_t slice_count() const { return models_.size(); }
    std::size_t slice_index(int horizon, std::size_t level_index) const;
    const QuantileModel& model(std::size_t slice) const { return models_.at(slice); }
    const ShapleyState& shapley_state(std::size_t slice) const { return shapley_.at(slice); }

    const Ledger& ledger() const { return ledger_; }
    const Vec& cumulative_rewards() const { return cumulative_rewards_; }
    const Session* current_session() const { return session_ ? &*session_ : nullptr; }
    const Session* last_settled_session() const {
        return last_session_ ? &*last_session_ : nullptr;
    }

private:
    Vec slice_forecasts(const Session& s, std::size_t slice) const;
    Vec round_shapley(const QuantileModel& model, const Vec& x,
                      const AvailabilityMask& alpha, double y);

    MarketTask task_;
    SellerRegistry registry_;
    EngineSettings engine_;
    AllocationConfig alloc_;
    std::vector<QuantileModel> models_;
    std::vector<ShapleyState> shapley_;
    Ledger ledger_;
    Vec cumulative_rewards_;
    std::optional<Session> session_;
    std::optional<Session> last_session_;
    std::int64_t next_t_ = 0;  // sessions must advance in time
    std::mt19937_64 sample_rng_;
    std::unique_ptr<std::mutex> mu_;
};

}  // namespace fcm
