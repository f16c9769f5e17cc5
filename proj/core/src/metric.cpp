#include "ocelad/metric.hpp"

#include "ocelad/linalg.hpp"

#include <cmath>
#include <stdexcept>

namespace ocelad {

namespace {

void check_vectors(const MetricState &state, const Vector &x, const Vector &z) {
    if (x.size() != z.size() || x.size() != state.dim())
        throw std::invalid_argument("dimension mismatch: metric is " +
                                    std::to_string(state.dim()) + ", points are " +
                                    std::to_string(x.size()) + " and " +
                                    std::to_string(z.size()));
    if (!x.allFinite() || !z.allFinite())
        throw std::invalid_argument("non-finite point coordinates");
}

} // namespace

MetricState MetricState::identity(Eigen::Index n, double mu0) {
    return {Matrix::Identity(n, n), mu0};
}

void MetricState::validate() const {
    if (M.rows() != M.cols())
        throw std::invalid_argument("metric matrix must be square");
    if (!M.allFinite() || !std::isfinite(mu))
        throw std::invalid_argument("metric state has non-finite entries");
    if (!linalg::is_symmetric(M))
        throw std::invalid_argument("metric matrix is not symmetric");
    if (linalg::min_eigenvalue(M) < -linalg::kPsdTol * linalg::scale_of(M))
        throw std::invalid_argument("metric matrix is not positive semidefinite");
    if (mu < 1.0)
        throw std::invalid_argument("margin threshold mu must be >= 1");
}

MetricState operator+(const MetricState &a, const MetricState &b) {
    return {a.M + b.M, a.mu + b.mu};
}

MetricState operator*(double s, const MetricState &a) { return {s * a.M, s * a.mu}; }

bool operator==(const MetricState &a, const MetricState &b) {
    return a.mu == b.mu && a.M.rows() == b.M.rows() && a.M.cols() == b.M.cols() &&
           a.M == b.M;
}

void Constraint::validate() const {
    if (t < 1)
        throw std::invalid_argument("constraint step index must be >= 1");
    if (x.size() != z.size())
        throw std::invalid_argument("constraint points differ in dimension");
    if (y != 1 && y != -1)
        throw std::invalid_argument("constraint label must be +1 or -1");
    if (!x.allFinite() || !z.allFinite())
        throw std::invalid_argument("constraint has non-finite coordinates");
}

bool operator==(const Constraint &a, const Constraint &b) {
    return a.t == b.t && a.y == b.y && a.x.size() == b.x.size() &&
           a.z.size() == b.z.size() && a.x == b.x && a.z == b.z;
}

void LossConfig::validate() const {
    if (!(rho >= 0.0) || !std::isfinite(rho))
        throw std::invalid_argument("regularization weight rho must be finite and >= 0");
}

const char *to_string(Regularizer r) {
    switch (r) {
    case Regularizer::NuclearNorm:
        return "nuclear";
    case Regularizer::ElementwiseL1:
        return "l1";
    }
    return "unknown";
}

Regularizer regularizer_from_string(const std::string &name) {
    if (name == "nuclear")
        return Regularizer::NuclearNorm;
    if (name == "l1")
        return Regularizer::ElementwiseL1;
    throw std::invalid_argument("unknown regularizer '" + name + "' (expected nuclear or l1)");
}

double mahalanobis_sq(const MetricState &state, const Vector &x, const Vector &z) {
    check_vectors(state, x, z);
    const Vector u = x - z;
    const double d = u.dot(state.M * u);
    return d < 0.0 ? 0.0 : d;
}

double margin(const MetricState &state, const Constraint &c) {
    return c.y * (state.mu - mahalanobis_sq(state, c.x, c.z));
}

double hinge_loss(const MetricState &state, const Constraint &c) {
    return HingeLoss::value(margin(state, c));
}

LossGradient loss_subgradient(const MetricState &state, const Constraint &c) {
    const double slope = HingeLoss::derivative(margin(state, c));
    const auto n = state.dim();
    if (slope == 0.0)
        return {Matrix::Zero(n, n), 0.0};
    // d/dM of y (mu - u^T M u) is -y u u^T, d/dmu is y.
    const Vector u = c.difference();
    return {(-slope * c.y) * (u * u.transpose()), slope * c.y};
}

double regularizer_value(const Matrix &M, const LossConfig &cfg) {
    if (M.rows() != M.cols())
        throw std::invalid_argument("regularizer expects a square matrix");
    if (M.size() == 0)
        return 0.0;
    switch (cfg.regularizer) {
    case Regularizer::NuclearNorm:
        return linalg::eigen_symmetric(M).values.cwiseAbs().sum();
    case Regularizer::ElementwiseL1:
        return M.cwiseAbs().sum();
    }
    return 0.0;
}

} // namespace ocelad
