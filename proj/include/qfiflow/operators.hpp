#pragma once

#include <complex>

#include <Eigen/Dense>

namespace qfiflow {

using Complex = std::complex<double>;
using Matrix = Eigen::MatrixXcd;
using RealVector = Eigen::VectorXd;

inline constexpr Complex kI{0.0, 1.0};

namespace ops {

// Eigenvalues ascending; columns of `eigenvectors` are the matching
// orthonormal eigenvectors.
struct HermitianEigensystem {
    RealVector eigenvalues;
    Matrix eigenvectors;

    Matrix reconstruct() const;
};

Matrix commutator(const Matrix& a, const Matrix& b);
Matrix anticommutator(const Matrix& a, const Matrix& b);
Matrix dagger(const Matrix& a);
Matrix tensor_product(const Matrix& a, const Matrix& b);
Complex trace(const Matrix& a);

double max_norm(const Matrix& a);
double hermiticity_defect(const Matrix& a);
Matrix hermitian_part(const Matrix& a);

// Hermitian eigendecomposition. The input is symmetrized as (A + A^dagger)/2
// first. A negative herm_tol selects the default 1e-10 * dim * max(1, |A|).
HermitianEigensystem eigh(const Matrix& a, double herm_tol = -1.0);

Matrix identity(int dim);
Matrix sigma_x();
Matrix sigma_y();
Matrix sigma_z();
Matrix sigma_plus();  // |e><g|, with |e> = basis state 0
Matrix sigma_minus(); // |g><e|

} // namespace ops
} // namespace qfiflow
