#pragma once

#include "ocelad/metric.hpp"

namespace ocelad::linalg {

// Relative tolerances shared by every PSD/symmetry check.
inline constexpr double kSymmetryTol = 1e-12;
inline constexpr double kPsdTol = 1e-9;

inline double scale_of(const Matrix &M) { return std::max(1.0, M.norm()); }

/// M <- (M + M^T) / 2.
void symmetrize(Matrix &M);

bool is_symmetric(const Matrix &M);

bool all_finite(const Matrix &M);

/// Smallest eigenvalue of a symmetric matrix.
double min_eigenvalue(const Matrix &M);

/// Eigendecomposition of a symmetric matrix; throws NumericalError on failure.
struct SymmetricEigen {
    Vector values; // ascending
    Matrix vectors;
};
SymmetricEigen eigen_symmetric(const Matrix &M);

/// V diag(values) V^T.
Matrix reconstruct(const Matrix &vectors, const Vector &values);

/// Projection onto the PSD cone by eigenvalue clamping.
Matrix project_psd(const Matrix &G);

} // namespace ocelad::linalg
