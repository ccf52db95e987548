#pragma once

// Small dense kernels shared by every other module. All functions take any
// Eigen expression and evaluate it once; none of them keep state.

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <string>
#include <string_view>

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include "auxid/errors.hpp"

namespace auxid {

template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

using MatrixXd = Matrix<double>;
using VectorXd = Vector<double>;

/// Relative asymmetry accepted (and silently removed) by the symmetric kernels.
inline constexpr double kSymmetryTolerance = 1e-9;

/// Largest condition estimate accepted by solve_spd.
inline constexpr double kConditionLimit = 1e14;

/// Above this size spectral_norm switches from one-sided Jacobi to divide and conquer.
inline constexpr Eigen::Index kJacobiSvdMaxDim = 64;

template <typename Derived>
void require_finite(const Eigen::MatrixBase<Derived>& m, std::string_view what = "matrix") {
    if (!m.allFinite()) {
        throw InvalidInput(std::string(what) + " has non-finite entries");
    }
}

template <typename Derived>
void require_square(const Eigen::MatrixBase<Derived>& m, std::string_view what = "matrix") {
    if (m.rows() != m.cols()) {
        std::ostringstream os;
        os << what << " must be square, got " << m.rows() << "x" << m.cols();
        throw DimensionError(os.str());
    }
}

/// Largest singular value.
template <typename Derived>
typename Derived::RealScalar spectral_norm(const Eigen::MatrixBase<Derived>& m) {
    using Scalar = typename Derived::Scalar;
    require_finite(m);
    if (m.size() == 0) {
        return 0;
    }
    const Matrix<Scalar> dense = m;
    if (std::max(dense.rows(), dense.cols()) <= kJacobiSvdMaxDim) {
        Eigen::JacobiSVD<Matrix<Scalar>> svd(dense);
        return svd.singularValues()(0);
    }
    Eigen::BDCSVD<Matrix<Scalar>> svd(dense);
    return svd.singularValues()(0);
}

/// Largest eigenvalue modulus.
template <typename Derived>
typename Derived::RealScalar spectral_radius(const Eigen::MatrixBase<Derived>& m) {
    using Scalar = typename Derived::Scalar;
    require_square(m);
    require_finite(m);
    if (m.size() == 0) {
        return 0;
    }
    Eigen::EigenSolver<Matrix<Scalar>> solver(m.eval(), /*computeEigenvectors=*/false);
    if (solver.info() != Eigen::Success) {
        throw NumericalError("eigenvalue iteration did not converge");
    }
    return solver.eigenvalues().cwiseAbs().maxCoeff();
}

/// Returns (m + m')/2 after checking that m is symmetric to kSymmetryTolerance,
/// measured relative to max(1, max|m_ij|).
template <typename Derived>
Matrix<typename Derived::Scalar> symmetrized(const Eigen::MatrixBase<Derived>& m,
                                             std::string_view what = "matrix") {
    using Scalar = typename Derived::Scalar;
    require_square(m, what);
    require_finite(m, what);
    const Matrix<Scalar> dense = m;
    if (dense.size() == 0) {
        return dense;
    }
    const Scalar scale = std::max<Scalar>(Scalar(1), dense.cwiseAbs().maxCoeff());
    const Scalar asym = (dense - dense.transpose()).cwiseAbs().maxCoeff();
    if (asym > Scalar(kSymmetryTolerance) * scale) {
        std::ostringstream os;
        os << what << " is not symmetric (max |m - m'| = " << asym << ")";
        throw InvalidInput(os.str());
    }
    return (dense + dense.transpose()) / Scalar(2);
}

/// Eigenvalues of a symmetric matrix in increasing order.
template <typename Derived>
Vector<typename Derived::Scalar> eigenvalues_sym(const Eigen::MatrixBase<Derived>& m) {
    using Scalar = typename Derived::Scalar;
    const Matrix<Scalar> sym = symmetrized(m);
    if (sym.size() == 0) {
        return Vector<Scalar>();
    }
    Eigen::SelfAdjointEigenSolver<Matrix<Scalar>> solver(sym, Eigen::EigenvaluesOnly);
    if (solver.info() != Eigen::Success) {
        throw NumericalError("symmetric eigenvalue iteration did not converge");
    }
    return solver.eigenvalues();
}

template <typename Derived>
typename Derived::Scalar min_eigenvalue_sym(const Eigen::MatrixBase<Derived>& m) {
    if (m.size() == 0) {
        throw DimensionError("min_eigenvalue_sym of an empty matrix");
    }
    return eigenvalues_sym(m)(0);
}

template <typename Derived>
typename Derived::Scalar max_eigenvalue_sym(const Eigen::MatrixBase<Derived>& m) {
    if (m.size() == 0) {
        throw DimensionError("max_eigenvalue_sym of an empty matrix");
    }
    const auto values = eigenvalues_sym(m);
    return values(values.size() - 1);
}

/// log det of a symmetric positive definite matrix through its Cholesky factor.
template <typename Derived>
typename Derived::Scalar logdet_spd(const Eigen::MatrixBase<Derived>& m) {
    using Scalar = typename Derived::Scalar;
    const Matrix<Scalar> sym = symmetrized(m);
    Eigen::LLT<Matrix<Scalar>> llt(sym);
    if (llt.info() != Eigen::Success) {
        throw SingularityError("logdet_spd: matrix is not positive definite");
    }
    return Scalar(2) * llt.matrixLLT().diagonal().array().log().sum();
}

/// lambda_max / lambda_min of a symmetric matrix; +inf when it is not positive definite.
template <typename Derived>
typename Derived::Scalar condition_estimate_spd(const Eigen::MatrixBase<Derived>& m) {
    using Scalar = typename Derived::Scalar;
    const auto values = eigenvalues_sym(m);
    if (values.size() == 0) {
        return Scalar(1);
    }
    const Scalar lo = values(0);
    const Scalar hi = values(values.size() - 1);
    if (!(lo > Scalar(0))) {
        return std::numeric_limits<Scalar>::infinity();
    }
    return hi / lo;
}

template <typename Scalar>
struct SpdSolution {
    Matrix<Scalar> value;
    Scalar condition;
};

/// Solves m * S = rhs for symmetric positive definite m, refusing systems whose
/// condition estimate exceeds kConditionLimit. `name` labels m in diagnostics.
template <typename DerivedM, typename DerivedR>
SpdSolution<typename DerivedM::Scalar> solve_spd_checked(const Eigen::MatrixBase<DerivedM>& m,
                                                         const Eigen::MatrixBase<DerivedR>& rhs,
                                                         std::string_view name = "matrix") {
    using Scalar = typename DerivedM::Scalar;
    require_square(m, name);
    require_finite(rhs, "right-hand side");
    if (rhs.rows() != m.rows()) {
        std::ostringstream os;
        os << "solve_spd: " << name << " is " << m.rows() << "x" << m.cols()
           << " but the right-hand side has " << rhs.rows() << " rows";
        throw DimensionError(os.str());
    }
    const Matrix<Scalar> sym = symmetrized(m, name);
    const Scalar condition = condition_estimate_spd(sym);
    if (!(condition <= Scalar(kConditionLimit))) {
        std::ostringstream os;
        os << name << " is singular or ill-conditioned (condition estimate " << condition
           << " exceeds " << kConditionLimit << ")";
        throw SingularityError(os.str());
    }
    Eigen::LLT<Matrix<Scalar>> llt(sym);
    if (llt.info() != Eigen::Success) {
        throw SingularityError(std::string(name) + " is not positive definite");
    }
    return {llt.solve(rhs.eval()), condition};
}

template <typename DerivedM, typename DerivedR>
Matrix<typename DerivedM::Scalar> solve_spd(const Eigen::MatrixBase<DerivedM>& m,
                                            const Eigen::MatrixBase<DerivedR>& rhs,
                                            std::string_view name = "matrix") {
    return solve_spd_checked(m, rhs, name).value;
}

} // namespace auxid
