#pragma once

#include "fcm/types.hpp"

namespace fcm {

// Pinball loss for nominal level tau: (y - yhat) tau when y >= yhat,
// (yhat - y)(1 - tau) otherwise. Zero exactly when y == yhat.
double quantile_loss(double tau, double y, double y_hat);

// Subgradient of the pinball loss in the prediction: -tau when y > yhat,
// (1 - tau) when yhat > y, and 0 at the kink (0 lies in [-tau, 1-tau]).
double loss_subgradient_pred(double tau, double y, double y_hat);

// Euclidean projection onto the probability simplex (sort-and-threshold).
// Throws ValidationError on an empty input.
Vec project_to_simplex(Vec v);

// Zero out entries flagged missing.
Vec apply_mask(Vec x_hat, const AvailabilityMask& alpha);

enum class ModelKind {
    plain,   // convex combination only; rejects rounds with missing forecasts
    robust,  // learns a linear correction applied when forecasts are missing
};

// One online forecast-combination model for a single (quantile level,
// lead time) pair. Weights live on the probability simplex; the robust
// variant additionally learns a correction matrix D so that the effective
// weights under availability mask alpha are theta = w + D * alpha.
//
// Single-writer: updates on one instance must be serialized by the caller.
class QuantileModel {
public:
    QuantileModel(double tau, std::size_t n_sellers, double eta,
                  ModelKind kind = ModelKind::robust);

    double tau() const { return tau_; }
    double eta() const { return eta_; }
    ModelKind kind() const { return kind_; }
    std::size_t size() const { return weights_.size(); }

    const Vec& weights() const { return weights_; }
    const Matrix& correction() const { return correction_; }

    // theta(alpha) = w + D * alpha. Not re-projected onto the simplex: the
    // correction is applied additively and only w is ever projected.
    Vec effective_weights(const AvailabilityMask& alpha) const;

    // All-present prediction/update (the plain path).
    double predict(const Vec& x_hat) const;
    void update(const Vec& x_hat, double y);

    // Masked prediction/update. x_hat must already be zero on missing
    // entries. An all-missing round predicts 0 and leaves w unchanged.
    // A plain-kind model rejects any mask with missing entries.
    double predict(const Vec& x_hat, const AvailabilityMask& alpha) const;
    void update(const Vec& x_hat, const AvailabilityMask& alpha, double y);

    // Mid-market join: appends weight 0 (then re-projects) and a zero
    // row/column in D.
    void add_seller();

    // Replace learned state, e.g. when replaying a ledger snapshot.
    void set_state(Vec w, Matrix correction);

private:
    void check_inputs(const Vec& x_hat, const AvailabilityMask* alpha) const;

    double tau_;
    double eta_;
    ModelKind kind_;
    Vec weights_;
    Matrix correction_;
};

}  // namespace fcm
