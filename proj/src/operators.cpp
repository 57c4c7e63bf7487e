#include "qfiflow/operators.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "qfiflow/errors.hpp"

namespace qfiflow::ops {

namespace {

void require_same_dims(const Matrix& a, const Matrix& b, const char* what) {
    if (a.rows() != a.cols() || b.rows() != b.cols() || a.rows() != b.rows()) {
        throw DimensionMismatch(std::string(what) + ": operands must be square with equal dims (got " +
                                std::to_string(a.rows()) + "x" + std::to_string(a.cols()) + " and " +
                                std::to_string(b.rows()) + "x" + std::to_string(b.cols()) + ")");
    }
}

} // namespace

Matrix HermitianEigensystem::reconstruct() const {
    return eigenvectors * eigenvalues.cast<Complex>().asDiagonal() * eigenvectors.adjoint();
}

Matrix commutator(const Matrix& a, const Matrix& b) {
    require_same_dims(a, b, "commutator");
    return a * b - b * a;
}

Matrix anticommutator(const Matrix& a, const Matrix& b) {
    require_same_dims(a, b, "anticommutator");
    return a * b + b * a;
}

Matrix dagger(const Matrix& a) { return a.adjoint(); }

Matrix tensor_product(const Matrix& a, const Matrix& b) {
    Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
    for (Eigen::Index i = 0; i < a.rows(); ++i) {
        for (Eigen::Index j = 0; j < a.cols(); ++j) {
            out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
        }
    }
    return out;
}

Complex trace(const Matrix& a) {
    if (a.rows() != a.cols()) throw DimensionMismatch("trace: matrix must be square");
    return a.trace();
}

double max_norm(const Matrix& a) {
    if (a.size() == 0) return 0.0;
    return a.cwiseAbs().maxCoeff();
}

double hermiticity_defect(const Matrix& a) { return max_norm(a - a.adjoint()); }

Matrix hermitian_part(const Matrix& a) { return 0.5 * (a + a.adjoint()); }

HermitianEigensystem eigh(const Matrix& a, double herm_tol) {
    if (a.rows() != a.cols() || a.rows() == 0) {
        throw DimensionMismatch("eigh: matrix must be square and nonempty");
    }
    if (!a.allFinite()) throw InvalidArgument("eigh: matrix has non-finite entries");
    const double dim = static_cast<double>(a.rows());
    if (herm_tol < 0.0) herm_tol = 1e-10 * dim * std::max(1.0, max_norm(a));
    const double defect = hermiticity_defect(a);
    if (defect > herm_tol) {
        throw NonHermitian("eigh: |A - A^dagger|_max = " + std::to_string(defect) +
                           " exceeds tolerance " + std::to_string(herm_tol));
    }
    Eigen::SelfAdjointEigenSolver<Matrix> solver(hermitian_part(a));
    if (solver.info() != Eigen::Success) throw ConvergenceFailure("eigh: eigensolver did not converge");
    return {solver.eigenvalues(), solver.eigenvectors()};
}

Matrix identity(int dim) { return Matrix::Identity(dim, dim); }

Matrix sigma_x() {
    Matrix m(2, 2);
    m << 0.0, 1.0, 1.0, 0.0;
    return m;
}

Matrix sigma_y() {
    Matrix m(2, 2);
    m << 0.0, -kI, kI, 0.0;
    return m;
}

Matrix sigma_z() {
    Matrix m(2, 2);
    m << 1.0, 0.0, 0.0, -1.0;
    return m;
}

Matrix sigma_plus() {
    Matrix m(2, 2);
    m << 0.0, 1.0, 0.0, 0.0;
    return m;
}

Matrix sigma_minus() {
    Matrix m(2, 2);
    m << 0.0, 0.0, 1.0, 0.0;
    return m;
}

} // namespace qfiflow::ops
