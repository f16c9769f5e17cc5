#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <string>

namespace ocelad {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Learned parameter: a PSD matrix defining a Mahalanobis distance plus the
/// margin threshold separating similar from dissimilar pairs.
struct MetricState {
    Matrix M;
    double mu = 1.0;

    Eigen::Index dim() const { return M.rows(); }

    /// Identity metric with the given threshold.
    static MetricState identity(Eigen::Index n, double mu0);

    /// Throws std::invalid_argument unless M is square, symmetric and PSD
    /// (within tolerance) and mu >= 1.
    void validate() const;

    friend MetricState operator+(const MetricState &a, const MetricState &b);
    friend MetricState operator*(double s, const MetricState &a);
    friend bool operator==(const MetricState &a, const MetricState &b);
};

/// A pairwise side-information constraint received at step t.
/// y = +1 marks a similar pair, y = -1 a dissimilar one.
struct Constraint {
    std::int64_t t = 1;
    Vector x;
    Vector z;
    int y = 1;

    Eigen::Index dim() const { return x.size(); }
    Vector difference() const { return x - z; }
    void validate() const;

    friend bool operator==(const Constraint &a, const Constraint &b);
};

enum class Regularizer { NuclearNorm, ElementwiseL1 };

struct LossConfig {
    double rho = 0.0;
    Regularizer regularizer = Regularizer::NuclearNorm;

    void validate() const;

    friend bool operator==(const LossConfig &, const LossConfig &) = default;
};

const char *to_string(Regularizer r);
Regularizer regularizer_from_string(const std::string &name);

// Margin loss applied to z = y (mu - d^2). Any convex, nonincreasing margin
// loss with a subderivative can be swapped in by providing these two members.
struct HingeLoss {
    static double value(double margin) { return margin < 1.0 ? 1.0 - margin : 0.0; }
    // Zero at the kink.
    static double derivative(double margin) { return margin < 1.0 ? -1.0 : 0.0; }
};

struct LossGradient {
    Matrix dM;
    double dmu = 0.0;
};

/// Squared Mahalanobis distance (x - z)^T M (x - z). Tiny negative values
/// from round-off are clamped to zero.
double mahalanobis_sq(const MetricState &state, const Vector &x, const Vector &z);

/// The signed margin y (mu - u^T M u) of a constraint under a metric.
double margin(const MetricState &state, const Constraint &c);

/// Hinge loss max(0, 1 - y (mu - u^T M u)).
double hinge_loss(const MetricState &state, const Constraint &c);

/// Subgradient of hinge_loss with respect to (M, mu). Active hinge gives
/// (y u u^T, -y); inactive hinge and the kink give zero.
LossGradient loss_subgradient(const MetricState &state, const Constraint &c);

/// Nuclear norm (sum of |eigenvalues| for symmetric M) or the elementwise
/// L1 norm, depending on cfg.regularizer. The weight rho is not applied.
double regularizer_value(const Matrix &M, const LossConfig &cfg);

} // namespace ocelad
