#include "ocelad/linalg.hpp"

#include "ocelad/error.hpp"

namespace ocelad::linalg {

void symmetrize(Matrix &M) {
    Matrix T = M.transpose();
    M = 0.5 * (M + T);
}

bool is_symmetric(const Matrix &M) {
    if (M.rows() != M.cols())
        return false;
    return (M - M.transpose()).cwiseAbs().maxCoeff() <= kSymmetryTol * scale_of(M);
}

bool all_finite(const Matrix &M) { return M.allFinite(); }

double min_eigenvalue(const Matrix &M) {
    if (M.size() == 0)
        return 0.0;
    Eigen::SelfAdjointEigenSolver<Matrix> es(M, Eigen::EigenvaluesOnly);
    if (es.info() != Eigen::Success)
        throw NumericalError("linalg", 0, "eigenvalue computation failed");
    return es.eigenvalues()(0);
}

SymmetricEigen eigen_symmetric(const Matrix &M) {
    if (!M.allFinite())
        throw NumericalError("linalg", 0, "non-finite matrix passed to eigensolver");
    Eigen::SelfAdjointEigenSolver<Matrix> es(M);
    if (es.info() != Eigen::Success)
        throw NumericalError("linalg", 0, "symmetric eigendecomposition failed");
    return {es.eigenvalues(), es.eigenvectors()};
}

Matrix reconstruct(const Matrix &vectors, const Vector &values) {
    Matrix out = vectors * values.asDiagonal() * vectors.transpose();
    symmetrize(out);
    return out;
}

Matrix project_psd(const Matrix &G) {
    auto eig = eigen_symmetric(G);
    return reconstruct(eig.vectors, eig.values.cwiseMax(0.0));
}

} // namespace ocelad::linalg
