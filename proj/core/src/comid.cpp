#include "ocelad/comid.hpp"

#include "ocelad/error.hpp"
#include "ocelad/linalg.hpp"

#include <cmath>
#include <stdexcept>

namespace ocelad {

namespace {

void check_prox_input(const Matrix &G, double tau) {
    if (G.rows() != G.cols())
        throw std::invalid_argument("prox input must be square");
    if (!(tau >= 0.0) || !std::isfinite(tau))
        throw std::invalid_argument("prox threshold must be finite and >= 0");
    if (!linalg::is_symmetric(G))
        throw std::invalid_argument("prox input is not symmetric");
}

// Eigenvalue-space map shared by both proxes; leaves G untouched when it is
// already PSD and no shrinkage is requested, so that a zero step is exact.
Matrix shrink_eigenvalues(const Matrix &G, double tau) {
    auto eig = linalg::eigen_symmetric(G);
    if (tau == 0.0 && eig.values.size() > 0 &&
        eig.values(0) >= -linalg::kPsdTol * linalg::scale_of(G)) {
        Matrix out = G;
        linalg::symmetrize(out);
        return out;
    }
    const Vector shrunk = (eig.values.array() - tau).cwiseMax(0.0);
    return linalg::reconstruct(eig.vectors, shrunk);
}

} // namespace

Matrix prox_nuclear_psd(const Matrix &G, double tau) {
    check_prox_input(G, tau);
    if (G.size() == 0)
        return G;
    return shrink_eigenvalues(G, tau);
}

Matrix prox_l1_psd(const Matrix &G, double tau) {
    check_prox_input(G, tau);
    if (G.size() == 0)
        return G;
    Matrix thresholded = G.unaryExpr([tau](double g) {
        const double mag = std::abs(g) - tau;
        return mag > 0.0 ? std::copysign(mag, g) : 0.0;
    });
    return shrink_eigenvalues(thresholded, 0.0);
}

ComidLearner::ComidLearner(MetricState state, double eta, LossConfig cfg)
    : state_(std::move(state)), eta_(eta), cfg_(cfg) {
    if (!(eta_ > 0.0) || !std::isfinite(eta_))
        throw std::invalid_argument("COMID learning rate must be finite and > 0");
    cfg_.validate();
    state_.validate();
}

ComidLearner ComidLearner::step(const Constraint &c) const {
    if (c.dim() != state_.dim())
        throw std::invalid_argument("constraint dimension " + std::to_string(c.dim()) +
                                    " does not match metric dimension " +
                                    std::to_string(state_.dim()));
    const LossGradient grad = loss_subgradient(state_, c);
    if (!grad.dM.allFinite() || !std::isfinite(grad.dmu))
        throw NumericalError("comid", c.t, "non-finite loss gradient");

    const double tau = eta_ * cfg_.rho;
    const bool zero_grad = grad.dmu == 0.0 && grad.dM.isZero(0.0);
    if (zero_grad && tau == 0.0)
        return *this;

    ComidLearner next = *this;
    Matrix G = state_.M - eta_ * grad.dM;
    linalg::symmetrize(G);
    try {
        next.state_.M = cfg_.regularizer == Regularizer::NuclearNorm ? prox_nuclear_psd(G, tau)
                                                                     : prox_l1_psd(G, tau);
    } catch (const NumericalError &e) {
        throw NumericalError("comid", c.t, e.what());
    }
    next.state_.mu = std::max(1.0, state_.mu - eta_ * grad.dmu);
    if (!next.state_.M.allFinite() || !std::isfinite(next.state_.mu))
        throw NumericalError("comid", c.t, "update produced non-finite state");
    return next;
}

} // namespace ocelad
