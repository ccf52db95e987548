#pragma once

// Batch matrices and the regularized weighted least-squares estimate
//   theta = X Q Z' (Z Q Z' + lambda I)^{-1},  Q = diag(I, q I),
// where Q is applied as per-column weights (1 on true columns, q on auxiliary ones).

#include <cmath>
#include <sstream>
#include <string>

#include "auxid/errors.hpp"
#include "auxid/linalg.hpp"
#include "auxid/system.hpp"

namespace auxid {

/// X = [x_1 .. x_T per rollout], Z = [z_0 .. z_{T-1}], z_t = (x_t, u_t); true
/// rollouts occupy columns [0, column_split), auxiliary rollouts the rest.
template <typename Scalar = double>
struct BatchData {
    Eigen::Index n = 0;
    Eigen::Index p = 0;
    Eigen::Index column_split = 0;
    bool has_noise = false;
    Matrix<Scalar> X;
    Matrix<Scalar> Z;
    Matrix<Scalar> W;

    Eigen::Index columns() const noexcept { return Z.cols(); }
    Eigen::Index true_columns() const noexcept { return column_split; }
    Eigen::Index aux_columns() const noexcept { return Z.cols() - column_split; }

    auto true_Z() const { return Z.leftCols(column_split); }
    auto aux_Z() const { return Z.rightCols(aux_columns()); }
    auto true_X() const { return X.leftCols(column_split); }
    auto aux_X() const { return X.rightCols(aux_columns()); }
};

namespace detail {

template <typename Scalar>
void append_rollouts(const RolloutSet<Scalar>& rs, BatchData<Scalar>& data, Eigen::Index& col) {
    const Eigen::Index n = data.n;
    for (const auto& r : rs.rollouts) {
        const Eigen::Index T = rs.length;
        data.X.middleCols(col, T) = r.states.rightCols(T);
        data.Z.block(0, col, n, T) = r.states.leftCols(T);
        data.Z.block(n, col, data.p, T) = r.inputs;
        if (data.has_noise) {
            data.W.middleCols(col, T) = r.noise;
        }
        col += T;
    }
}

} // namespace detail

/// Stacks true rollouts then auxiliary rollouts. An empty auxiliary set is legal.
template <typename Scalar>
BatchData<Scalar> assemble_batch(const RolloutSet<Scalar>& true_data, const RolloutSet<Scalar>& aux_data) {
    if (true_data.n != aux_data.n || true_data.p != aux_data.p) {
        std::ostringstream os;
        os << "true data has (n, p) = (" << true_data.n << ", " << true_data.p << ") but auxiliary data has ("
           << aux_data.n << ", " << aux_data.p << ")";
        throw DimensionError(os.str());
    }
    true_data.validate();
    aux_data.validate();

    BatchData<Scalar> data;
    data.n = true_data.n;
    data.p = true_data.p;
    data.column_split = true_data.num_samples();
    data.has_noise = true_data.has_noise && (aux_data.empty() || aux_data.has_noise);
    const Eigen::Index M = true_data.num_samples() + aux_data.num_samples();
    data.X.resize(data.n, M);
    data.Z.resize(data.n + data.p, M);
    if (data.has_noise) {
        data.W.resize(data.n, M);
    }
    Eigen::Index col = 0;
    detail::append_rollouts(true_data, data, col);
    detail::append_rollouts(aux_data, data, col);
    return data;
}

/// Delta = [0 .. 0, delta_theta * z_aux], the model-difference part of X = Theta Z + W + Delta.
template <typename Scalar, typename Derived>
Matrix<Scalar> model_difference_columns(const BatchData<Scalar>& data, const Eigen::MatrixBase<Derived>& delta_theta) {
    if (delta_theta.rows() != data.n || delta_theta.cols() != data.n + data.p) {
        throw DimensionError("delta_theta must be n x (n+p)");
    }
    Matrix<Scalar> delta = Matrix<Scalar>::Zero(data.n, data.columns());
    delta.rightCols(data.aux_columns()).noalias() = delta_theta * data.aux_Z();
    return delta;
}

struct WlsConfig {
    double q = 0.0;
    double lambda = 0.0;

    void validate() const {
        if (!std::isfinite(q) || q < 0) {
            throw InvalidInput("auxiliary weight q must be finite and >= 0");
        }
        if (!std::isfinite(lambda) || lambda < 0) {
            throw InvalidInput("regularization lambda must be finite and >= 0");
        }
    }
};

/// Z Q Z' (unregularized).
template <typename Scalar>
Matrix<Scalar> weighted_gram(const BatchData<Scalar>& data, double q) {
    Matrix<Scalar> g = data.true_Z() * data.true_Z().transpose();
    if (data.aux_columns() > 0 && q != 0.0) {
        g.noalias() += Scalar(q) * (data.aux_Z() * data.aux_Z().transpose());
    }
    return g;
}

/// Z_aux Z_aux' (unweighted).
template <typename Scalar>
Matrix<Scalar> aux_gram(const BatchData<Scalar>& data) {
    return data.aux_Z() * data.aux_Z().transpose();
}

template <typename Scalar = double>
struct WlsEstimate {
    Matrix<Scalar> theta;
    Matrix<Scalar> a_hat;
    Matrix<Scalar> b_hat;
    WlsConfig config;
    Scalar condition = 0;
};

namespace detail {

/// Z Q Y' for a row-aligned Y (X, W or Delta).
template <typename Scalar, typename Derived>
Matrix<Scalar> weighted_cross(const BatchData<Scalar>& data, const Eigen::MatrixBase<Derived>& y, double q) {
    const Eigen::Index split = data.column_split;
    const Eigen::Index aux = data.aux_columns();
    Matrix<Scalar> out = data.true_Z() * y.leftCols(split).transpose();
    if (aux > 0 && q != 0.0) {
        out.noalias() += Scalar(q) * (data.aux_Z() * y.rightCols(aux).transpose());
    }
    return out;
}

template <typename Scalar>
Matrix<Scalar> regularized_gram(const BatchData<Scalar>& data, const WlsConfig& cfg) {
    Matrix<Scalar> g = weighted_gram(data, cfg.q);
    g.diagonal().array() += Scalar(cfg.lambda);
    return g;
}

template <typename Scalar, typename Derived>
SpdSolution<Scalar> solve_gram(const Matrix<Scalar>& gram, const Eigen::MatrixBase<Derived>& rhs) {
    try {
        return solve_spd_checked(gram, rhs, "ZQZ' + lambda*I");
    } catch (const SingularityError& e) {
        throw SingularityError(std::string(e.what()) +
                               "; use lambda > 0 or collect more (exciting) data");
    }
}

} // namespace detail

/// Solves (ZQZ' + lambda I) Y = ZQX' and returns theta = Y'.
template <typename Scalar>
WlsEstimate<Scalar> wls_estimate(const BatchData<Scalar>& data, const WlsConfig& cfg) {
    cfg.validate();
    const Matrix<Scalar> gram = detail::regularized_gram(data, cfg);
    const Matrix<Scalar> cross = detail::weighted_cross(data, data.X, cfg.q);
    const auto sol = detail::solve_gram(gram, cross);

    WlsEstimate<Scalar> est;
    est.theta = sol.value.transpose();
    est.a_hat = est.theta.leftCols(data.n);
    est.b_hat = est.theta.rightCols(data.p);
    est.config = cfg;
    est.condition = sol.condition;
    return est;
}

/// ||theta (ZQZ' + lambda I) - XQZ'||_F / (||theta||_F ||ZQZ' + lambda I||_F + ||XQZ'||_F).
template <typename Scalar>
Scalar normal_equation_residual(const WlsEstimate<Scalar>& est, const BatchData<Scalar>& data) {
    const Matrix<Scalar> gram = detail::regularized_gram(data, est.config);
    const Matrix<Scalar> rhs = detail::weighted_cross(data, data.X, est.config.q).transpose();
    const Scalar scale = est.theta.norm() * gram.norm() + rhs.norm();
    if (scale == Scalar(0)) {
        return 0;
    }
    return (est.theta * gram - rhs).norm() / scale;
}

/// ||theta_hat - [A B]||.
template <typename Scalar>
Scalar estimation_error(const WlsEstimate<Scalar>& est, const SystemModel<Scalar>& truth) {
    if (est.theta.rows() != truth.n() || est.theta.cols() != truth.n() + truth.p()) {
        throw DimensionError("estimate and truth have different shapes");
    }
    return spectral_norm(est.theta - truth.theta());
}

/// The three addends of theta_hat - theta.
template <typename Scalar = double>
struct ErrorTerms {
    Matrix<Scalar> regularization;   // -lambda Theta G^{-1}
    Matrix<Scalar> noise;            // W Q Z' G^{-1}
    Matrix<Scalar> model_difference; // Delta Q Z' G^{-1}

    Matrix<Scalar> sum() const { return regularization + noise + model_difference; }
};

/// Splits theta_hat - theta into regularization, noise and model-difference
/// terms, G = ZQZ' + lambda I. Needs the recorded process noise W.
template <typename Scalar, typename Derived>
ErrorTerms<Scalar> error_decomposition(const BatchData<Scalar>& data, const WlsConfig& cfg,
                                       const SystemModel<Scalar>& truth,
                                       const Eigen::MatrixBase<Derived>& delta_theta) {
    cfg.validate();
    if (!data.has_noise) {
        throw Unavailable("error_decomposition needs recorded process noise, which this data set lacks");
    }
    if (truth.n() != data.n || truth.p() != data.p) {
        throw DimensionError("truth model does not match the batch dimensions");
    }
    const Eigen::Index n = data.n;
    const Eigen::Index d = data.n + data.p;
    const Matrix<Scalar> gram = detail::regularized_gram(data, cfg);
    const Matrix<Scalar> delta = model_difference_columns(data, delta_theta);

    Matrix<Scalar> rhs(d, 3 * n);
    rhs.leftCols(n) = -Scalar(cfg.lambda) * truth.theta().transpose();
    rhs.middleCols(n, n) = detail::weighted_cross(data, data.W, cfg.q);
    rhs.rightCols(n) = detail::weighted_cross(data, delta, cfg.q);
    const Matrix<Scalar> solved = detail::solve_gram(gram, rhs).value;

    ErrorTerms<Scalar> terms;
    terms.regularization = solved.leftCols(n).transpose();
    terms.noise = solved.middleCols(n, n).transpose();
    terms.model_difference = solved.rightCols(n).transpose();
    return terms;
}

} // namespace auxid
