#include "fcm/session.hpp"

#include <algorithm>
#include <cmath>

#include "fcm/normal.hpp"

namespace fcm {

void MarketTask::validate() const {
    if (task_id.empty()) throw ValidationError("task_id must not be empty");
    if (quantile_levels.empty()) throw ValidationError("task needs at least one quantile level");
    for (std::size_t j = 0; j < quantile_levels.size(); ++j) {
        if (!(quantile_levels[j] > 0.0 && quantile_levels[j] < 1.0))
            throw ValidationError("quantile levels must lie in (0,1)");
        if (j > 0 && quantile_levels[j] <= quantile_levels[j - 1])
            throw ValidationError("quantile levels must be strictly increasing");
    }
    if (horizon_steps < 1) throw ValidationError("horizon_steps must be at least 1");
}

SellerRegistry::SellerRegistry(std::vector<std::string> ids) : ids_(std::move(ids)) {
    for (std::size_t i = 0; i < ids_.size(); ++i) {
        if (ids_[i].empty()) throw ValidationError("seller ids must not be empty");
        for (std::size_t j = i + 1; j < ids_.size(); ++j)
            if (ids_[i] == ids_[j]) throw ValidationError("duplicate seller id '" + ids_[i] + "'");
    }
    joined_.assign(ids_.size(), 0);
    observed_.assign(ids_.size(), 0);
    missed_.assign(ids_.size(), 0);
}

std::optional<std::size_t> SellerRegistry::index_of(const std::string& id) const {
    for (std::size_t i = 0; i < ids_.size(); ++i)
        if (ids_[i] == id) return i;
    return std::nullopt;
}

void SellerRegistry::add(const std::string& id, std::int64_t joined_t) {
    if (id.empty()) throw ValidationError("seller ids must not be empty");
    if (index_of(id)) throw ConflictError("seller '" + id + "' is already registered");
    ids_.push_back(id);
    joined_.push_back(joined_t);
    observed_.push_back(0);
    missed_.push_back(0);
}

void SellerRegistry::record_round(const AvailabilityMask& alpha) {
    if (alpha.size() != ids_.size())
        throw ValidationError("availability mask size differs from registry size");
    for (std::size_t i = 0; i < ids_.size(); ++i) {
        observed_[i] += 1;
        missed_[i] += alpha.missing(i) ? 1 : 0;
    }
}

Market::Market(MarketTask task, std::vector<std::string> sellers, EngineSettings engine,
               AllocationConfig alloc, std::uint64_t seed)
    : task_(std::move(task)),
      registry_(std::move(sellers)),
      engine_(engine),
      alloc_(alloc),
      sample_rng_(rng::derive_seed(seed, 0x5a6d)),
      mu_(std::make_unique<std::mutex>()) {
    task_.validate();
    alloc_.validate();
    if (!(engine_.eta > 0.0)) throw ValidationError("engine.eta must be positive");
    const std::size_t n = registry_.size();
    for (int h = 0; h < task_.horizon_steps; ++h)
        for (double tau : task_.quantile_levels) {
            if (n > 0) {
                models_.emplace_back(tau, n, engine_.eta, engine_.kind);
                shapley_.emplace_back(n, alloc_.lambda);
            }
        }
    cumulative_rewards_.assign(n, 0.0);
}

std::size_t Market::slice_index(int horizon, std::size_t level_index) const {
    if (horizon < 1 || horizon > task_.horizon_steps)
        throw ValidationError("lead time out of range");
    if (level_index >= task_.level_count())
        throw ValidationError("quantile level index out of range");
    return static_cast<std::size_t>(horizon - 1) * task_.level_count() + level_index;
}

const Session& Market::open_session(std::int64_t t) {
    std::lock_guard lock(*mu_);
    if (session_ && session_->state != SessionState::settled)
        throw ConflictError("a session is already live for task '" + task_.task_id + "'");
    if (t < next_t_)
        throw ConflictError("session for t=" + std::to_string(t) +
                            " conflicts with an already recorded round");
    Session s;
    s.id = task_.task_id + "#" + std::to_string(t);
    s.t = t;
    s.state = SessionState::open;
    session_ = std::move(s);
    return *session_;
}

void Market::submit(const std::string& seller_id, const Vec& values) {
    std::lock_guard lock(*mu_);
    if (!session_ || session_->state == SessionState::settled)
        throw StateError("no live session to submit to");
    if (session_->state == SessionState::closed) {
        session_->late_attempts.push_back(seller_id);
        throw LateSubmissionError("session " + session_->id +
                                  " is closed; submission recorded as missing");
    }
    if (!registry_.index_of(seller_id))
        throw ValidationError("seller '" + seller_id + "' is not registered");
    const std::size_t m = task_.level_count();
    if (values.size() != task_.slice_count())
        throw ValidationError("expected " + std::to_string(task_.slice_count()) +
                              " forecast values, got " + std::to_string(values.size()));
    for (double v : values)
        if (!std::isfinite(v)) throw ValidationError("forecast values must be finite");
    for (int h = 0; h < task_.horizon_steps; ++h)
        for (std::size_t j = 1; j < m; ++j)
            if (values[h * m + j] < values[h * m + j - 1])
                throw ValidationError("quantile forecasts must be nondecreasing in the level");
    session_->submissions[seller_id] = values;  // resubmission overwrites
}

Vec Market::slice_forecasts(const Session& s, std::size_t slice) const {
    Vec x(registry_.size(), 0.0);
    for (std::size_t i = 0; i < registry_.size(); ++i) {
        auto it = s.submissions.find(registry_.ids()[i]);
        if (it != s.submissions.end()) x[i] = it->second[slice];
    }
    return x;
}

const Session& Market::close_session() {
    std::lock_guard lock(*mu_);
    if (!session_ || session_->state != SessionState::open)
        throw StateError("no open session to close");
    if (registry_.size() == 0)
        throw StateError("market is unusable: no sellers are registered");

    std::vector<std::uint8_t> bits(registry_.size(), 0);
    for (std::size_t i = 0; i < registry_.size(); ++i)
        bits[i] = session_->submissions.count(registry_.ids()[i]) ? 0 : 1;
    session_->alpha = AvailabilityMask(std::move(bits));
    session_->degenerate = session_->alpha.none_available();
    registry_.record_round(session_->alpha);

    session_->combined.assign(slice_count(), 0.0);
    for (std::size_t s = 0; s < slice_count(); ++s)
        session_->combined[s] =
            models_[s].predict(slice_forecasts(*session_, s), session_->alpha);
    session_->state = SessionState::closed;
    return *session_;
}

Vec Market::round_shapley(const QuantileModel& model, const Vec& x,
                          const AvailabilityMask& alpha, double y) {
    if (alloc_.shapley_method == AllocationConfig::Shapley::sampled)
        return shapley_sampled(model, x, alpha, y, alloc_.shapley_samples, sample_rng_);
    return shapley_exact(model, x, alpha, y);
}

const SettlementRecord& Market::settle(double y, double utility) {
    if (task_.horizon_steps != 1)
        throw ValidationError("scalar settle requires a single lead time");
    return settle(Vec{y}, utility);
}

const SettlementRecord& Market::settle(const Vec& y, double utility) {
    std::lock_guard lock(*mu_);
    if (!session_ || session_->state != SessionState::closed) {
        if (session_ && session_->state == SessionState::open)
            throw StateError("session must be closed before settlement");
        throw ConflictError("no closed session awaiting settlement");
    }
    if (y.size() != static_cast<std::size_t>(task_.horizon_steps))
        throw ValidationError("expected one realization per lead time");
    for (double v : y)
        if (!std::isfinite(v)) throw ValidationError("realizations must be finite");
    if (!(utility >= 0.0) || !std::isfinite(utility))
        throw ValidationError("utility must be finite and nonnegative");

    const AvailabilityMask& alpha = session_->alpha;
    const std::size_t m = task_.level_count();

    // Allocation first, on the pre-update models, then the model update;
    // both consume the same round inputs.
    std::vector<QuantileModel> updated_models;
    std::vector<ShapleyState> updated_shapley;
    std::vector<LevelShares> shares;
    std::vector<SliceRecord> slices;
    updated_models.reserve(slice_count());
    updated_shapley.reserve(slice_count());

    for (std::size_t s = 0; s < slice_count(); ++s) {
        const int horizon = static_cast<int>(s / m) + 1;
        const double y_h = y[static_cast<std::size_t>(horizon - 1)];
        const Vec x = slice_forecasts(*session_, s);

        const Vec phi_s = round_shapley(models_[s], x, alpha, y_h);
        ShapleyState st = shapley_[s];
        st.update(phi_s);

        LevelShares sh;
        sh.tau = models_[s].tau();
        sh.horizon = horizon;
        sh.degenerate = alpha.none_available();
        sh.in_sample = in_sample_rewards(st.phi_c, alpha);
        sh.out_sample = oos_rewards(oos_scores(models_[s].tau(), y_h, x, alpha), alpha);

        QuantileModel model = models_[s];
        model.update(x, alpha, y_h);

        SliceRecord rec;
        rec.horizon = horizon;
        rec.tau = models_[s].tau();
        rec.submissions = x;
        rec.combined = session_->combined[s];
        rec.in_sample = sh.in_sample;
        rec.out_sample = sh.out_sample;
        rec.weights = model.weights();
        rec.correction = model.correction().data();
        rec.phi_c = st.phi_c;

        shares.push_back(std::move(sh));
        slices.push_back(std::move(rec));
        updated_models.push_back(std::move(model));
        updated_shapley.push_back(std::move(st));
    }

    RewardBreakdown breakdown = settle_rewards(utility, alloc_, shares);

    SettlementRecord record;
    record.t = session_->t;
    record.session_id = session_->id;
    record.alpha = alpha.bits();
    record.y = y;
    record.utility = utility;
    record.totals = breakdown.total;
    for (std::size_t s = 0; s < slice_count(); ++s) {
        slices[s].reward = breakdown.levels[s].reward;
        record.slices.push_back(std::move(slices[s]));
    }

    // Commit atomically: nothing above mutated market state.
    models_ = std::move(updated_models);
    shapley_ = std::move(updated_shapley);
    for (std::size_t i = 0; i < cumulative_rewards_.size(); ++i)
        cumulative_rewards_[i] += record.totals[i];
    session_->state = SessionState::settled;
    next_t_ = session_->t + 1;
    last_session_ = std::move(session_);
    session_.reset();
    ledger_.push_back(std::move(record));
    return ledger_.back();
}

void Market::add_seller(const std::string& seller_id) {
    std::lock_guard lock(*mu_);
    if (session_ && session_->state != SessionState::settled)
        throw StateError("cannot add a seller while a session is live");
    if (registry_.size() == 0) {
        // First seller of an empty market: build fresh state.
        registry_.add(seller_id, next_t_);
        for (int h = 0; h < task_.horizon_steps; ++h)
            for (double tau : task_.quantile_levels) {
                models_.emplace_back(tau, 1, engine_.eta, engine_.kind);
                shapley_.emplace_back(1, alloc_.lambda);
            }
        cumulative_rewards_.assign(1, 0.0);
        return;
    }
    registry_.add(seller_id, next_t_);
    for (auto& model : models_) model.add_seller();
    for (auto& st : shapley_) st.add_seller();
    cumulative_rewards_.push_back(0.0);
}

}  // namespace fcm
