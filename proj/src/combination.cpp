#include "fcm/combination.hpp"

#include <algorithm>
#include <cmath>

namespace fcm {

double quantile_loss(double tau, double y, double y_hat) {
    if (!(tau > 0.0 && tau < 1.0))
        throw ValidationError("quantile level must lie in (0,1)");
    const double diff = y - y_hat;
    return diff >= 0.0 ? diff * tau : -diff * (1.0 - tau);
}

double loss_subgradient_pred(double tau, double y, double y_hat) {
    if (!(tau > 0.0 && tau < 1.0))
        throw ValidationError("quantile level must lie in (0,1)");
    if (y > y_hat) return -tau;
    if (y_hat > y) return 1.0 - tau;
    return 0.0;
}

Vec project_to_simplex(Vec v) {
    const std::size_t n = v.size();
    if (n == 0) throw ValidationError("cannot project an empty vector");

    Vec u = v;
    std::sort(u.begin(), u.end(), std::greater<double>());
    double cumsum = 0.0;
    double threshold = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
        cumsum += u[k];
        const double candidate = (1.0 - cumsum) / static_cast<double>(k + 1);
        if (u[k] + candidate > 0.0) threshold = candidate;
    }
    for (auto& x : v) x = std::max(x + threshold, 0.0);
    return v;
}

Vec apply_mask(Vec x_hat, const AvailabilityMask& alpha) {
    if (x_hat.size() != alpha.size())
        throw ValidationError("forecast vector and availability mask sizes differ");
    for (std::size_t i = 0; i < x_hat.size(); ++i)
        if (alpha.missing(i)) x_hat[i] = 0.0;
    return x_hat;
}

QuantileModel::QuantileModel(double tau, std::size_t n_sellers, double eta, ModelKind kind)
    : tau_(tau), eta_(eta), kind_(kind) {
    if (!(tau > 0.0 && tau < 1.0))
        throw ValidationError("quantile level must lie in (0,1)");
    if (!(eta > 0.0)) throw ValidationError("learning rate must be positive");
    if (n_sellers == 0) throw ValidationError("model needs at least one seller");
    weights_.assign(n_sellers, 1.0 / static_cast<double>(n_sellers));
    correction_ = Matrix(n_sellers, n_sellers, 0.0);
}

void QuantileModel::check_inputs(const Vec& x_hat, const AvailabilityMask* alpha) const {
    if (x_hat.size() != size())
        throw ValidationError("forecast vector size differs from registered seller count");
    if (alpha) {
        if (alpha->size() != size())
            throw ValidationError("availability mask size differs from registered seller count");
        if (kind_ == ModelKind::plain && alpha->any_missing())
            throw ValidationError(
                "plain combination cannot accept missing forecasts; use the robust model");
        for (std::size_t i = 0; i < x_hat.size(); ++i)
            if (alpha->missing(i) && x_hat[i] != 0.0)
                throw ValidationError("masked forecast entries must be stored as 0");
    }
}

Vec QuantileModel::effective_weights(const AvailabilityMask& alpha) const {
    if (alpha.size() != size())
        throw ValidationError("availability mask size differs from registered seller count");
    Vec theta = weights_;
    for (std::size_t i = 0; i < size(); ++i) {
        double corr = 0.0;
        for (std::size_t j = 0; j < size(); ++j)
            if (alpha.missing(j)) corr += correction_(i, j);
        theta[i] += corr;
    }
    return theta;
}

double QuantileModel::predict(const Vec& x_hat) const {
    check_inputs(x_hat, nullptr);
    return dot(weights_, x_hat);
}

double QuantileModel::predict(const Vec& x_hat, const AvailabilityMask& alpha) const {
    check_inputs(x_hat, &alpha);
    if (!alpha.any_missing()) return dot(weights_, x_hat);
    return dot(effective_weights(alpha), x_hat);
}

void QuantileModel::update(const Vec& x_hat, double y) {
    update(x_hat, AvailabilityMask::all_present(size()), y);
}

void QuantileModel::update(const Vec& x_hat, const AvailabilityMask& alpha, double y) {
    check_inputs(x_hat, &alpha);
    const double y_hat = alpha.any_missing() ? dot(effective_weights(alpha), x_hat)
                                             : dot(weights_, x_hat);
    const double g = loss_subgradient_pred(tau_, y, y_hat);

    // Masked entries carry x_hat[i] = 0, so missing sellers get no raw
    // weight gradient; the correction only moves when something is missing.
    Vec w = weights_;
    for (std::size_t i = 0; i < size(); ++i) w[i] -= eta_ * g * x_hat[i];
    weights_ = project_to_simplex(std::move(w));

    if (kind_ == ModelKind::robust && alpha.any_missing()) {
        for (std::size_t i = 0; i < size(); ++i) {
            if (x_hat[i] == 0.0) continue;
            for (std::size_t j = 0; j < size(); ++j)
                if (alpha.missing(j)) correction_(i, j) -= eta_ * g * x_hat[i];
        }
    }
}

void QuantileModel::add_seller() {
    weights_.push_back(0.0);
    weights_ = project_to_simplex(std::move(weights_));
    correction_.grow();
}

void QuantileModel::set_state(Vec w, Matrix correction) {
    if (w.size() != size() || correction.rows() != size() || correction.cols() != size())
        throw ValidationError("model state dimensions differ from registered seller count");
    double sum = 0.0;
    for (double x : w) {
        if (x < 0.0) throw ValidationError("weights must be nonnegative");
        sum += x;
    }
    if (std::fabs(sum - 1.0) > 1e-9) throw ValidationError("weights must sum to one");
    weights_ = std::move(w);
    correction_ = std::move(correction);
}

}  // namespace fcm
