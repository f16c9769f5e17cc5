#pragma once

#include "ocelad/metric.hpp"

namespace ocelad {

/// Proximal operator of tau * ||.||_* restricted to the PSD cone:
/// eigenvalues are soft-thresholded at tau and negatives clamped to zero.
Matrix prox_nuclear_psd(const Matrix &G, double tau);

/// Entrywise soft-threshold at tau followed by projection onto the PSD cone.
/// Exact whenever the thresholded matrix is already PSD.
Matrix prox_l1_psd(const Matrix &G, double tau);

/// One composite-objective mirror-descent learner with a fixed rate under the
/// squared-Frobenius (matrix) and squared-Euclidean (threshold) geometry.
class ComidLearner {
  public:
    ComidLearner(MetricState state, double eta, LossConfig cfg);

    const MetricState &state() const noexcept { return state_; }
    double eta() const noexcept { return eta_; }
    const LossConfig &config() const noexcept { return cfg_; }

    /// Applies the update for constraint c and returns the stepped learner.
    /// Throws NumericalError (tagged with c.t) on non-finite gradients or a
    /// failed eigendecomposition.
    [[nodiscard]] ComidLearner step(const Constraint &c) const;

    friend bool operator==(const ComidLearner &, const ComidLearner &) = default;

  private:
    MetricState state_;
    double eta_;
    LossConfig cfg_;
};

inline ComidLearner comid_step(const ComidLearner &learner, const Constraint &c) {
    return learner.step(c);
}

} // namespace ocelad
