#pragma once

// LTI system models and multi-rollout simulation of
//   x_{t+1} = A x_t + B u_t + w_t,  x_0 ~ N(0, sx^2 I), u_t ~ N(0, su^2 I), w_t ~ N(0, sw^2 I).

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <sstream>
#include <utility>
#include <vector>

#include "auxid/errors.hpp"
#include "auxid/linalg.hpp"
#include "auxid/rng.hpp"

namespace auxid {

template <typename Scalar = double>
class SystemModel {
public:
    SystemModel(Matrix<Scalar> a, Matrix<Scalar> b) : a_(std::move(a)), b_(std::move(b)) {
        if (a_.rows() < 1 || b_.cols() < 1) {
            throw DimensionError("system model needs n >= 1 and p >= 1");
        }
        require_square(a_, "A");
        if (b_.rows() != a_.rows()) {
            std::ostringstream os;
            os << "B has " << b_.rows() << " rows but A is " << a_.rows() << "x" << a_.cols();
            throw DimensionError(os.str());
        }
        require_finite(a_, "A");
        require_finite(b_, "B");
    }

    const Matrix<Scalar>& A() const noexcept { return a_; }
    const Matrix<Scalar>& B() const noexcept { return b_; }
    Eigen::Index n() const noexcept { return a_.rows(); }
    Eigen::Index p() const noexcept { return b_.cols(); }

    /// [A B], n x (n+p).
    Matrix<Scalar> theta() const {
        Matrix<Scalar> t(n(), n() + p());
        t << a_, b_;
        return t;
    }

private:
    Matrix<Scalar> a_;
    Matrix<Scalar> b_;
};

/// delta_theta = [A_aux - A_true, B_aux - B_true].
template <typename Scalar>
Matrix<Scalar> model_difference(const SystemModel<Scalar>& truth, const SystemModel<Scalar>& aux) {
    if (truth.n() != aux.n() || truth.p() != aux.p()) {
        throw DimensionError("true and auxiliary systems have different (n, p)");
    }
    return aux.theta() - truth.theta();
}

/// Standard deviations of the initial state, inputs and process noise.
struct NoiseConfig {
    double sigma_x = 1.0;
    double sigma_u = 1.0;
    double sigma_w = 1.0;
    /// Permits zero standard deviations (and a pinned x_0) for exact-recovery tests.
    bool noiseless_override = false;

    void validate() const {
        if (!std::isfinite(sigma_x) || !std::isfinite(sigma_u) || !std::isfinite(sigma_w)) {
            throw InvalidInput("noise standard deviations must be finite");
        }
        if (sigma_x < 0 || sigma_u < 0 || sigma_w < 0) {
            throw InvalidInput("noise standard deviations must be nonnegative");
        }
        if (!noiseless_override && (sigma_x <= 0 || sigma_u <= 0)) {
            throw InvalidInput("sigma_x and sigma_u must be > 0 (set noiseless_override to allow 0)");
        }
    }

    double sigma_min() const noexcept { return std::min({sigma_x, sigma_u, sigma_w}); }
    double sigma_max() const noexcept { return std::max({sigma_x, sigma_u, sigma_w}); }
};

/// One trajectory: states x_0..x_T as columns, inputs and noise u_0..u_{T-1}, w_0..w_{T-1}.
template <typename Scalar = double>
struct Rollout {
    Matrix<Scalar> states; // n x (T+1)
    Matrix<Scalar> inputs; // p x T
    Matrix<Scalar> noise;  // n x T (empty when not recorded)
};

template <typename Scalar = double>
struct RolloutSet {
    Eigen::Index n = 0;
    Eigen::Index p = 0;
    Eigen::Index length = 0; // T
    std::uint64_t seed = 0;
    bool has_noise = true;
    std::vector<Rollout<Scalar>> rollouts;

    Eigen::Index num_rollouts() const noexcept { return static_cast<Eigen::Index>(rollouts.size()); }
    Eigen::Index num_samples() const noexcept { return num_rollouts() * length; }
    bool empty() const noexcept { return rollouts.empty(); }

    /// A legal set with no data, e.g. "no auxiliary system".
    static RolloutSet none(Eigen::Index n, Eigen::Index p) {
        RolloutSet rs;
        rs.n = n;
        rs.p = p;
        return rs;
    }

    void validate() const {
        for (const auto& r : rollouts) {
            const bool ok = r.states.rows() == n && r.states.cols() == length + 1 && r.inputs.rows() == p &&
                            r.inputs.cols() == length &&
                            (!has_noise || (r.noise.rows() == n && r.noise.cols() == length));
            if (!ok) {
                throw DimensionError("rollout shapes disagree with the rollout set's (n, p, T)");
            }
        }
    }
};

template <typename Scalar = double>
struct SimulationOptions {
    /// Every rollout starts here instead of a Gaussian draw. Requires noiseless_override.
    std::optional<Vector<Scalar>> initial_state;
};

/// Simulates N independent rollouts of length T. Rollout i draws from the
/// substream derive_seed(seed, {i}) in the order x_0, then (u_t, w_t) for each
/// t, so results do not depend on N and a longer rollout extends a shorter one.
template <typename Scalar>
RolloutSet<Scalar> simulate_rollouts(const SystemModel<Scalar>& model, const NoiseConfig& noise, Eigen::Index N,
                                     Eigen::Index T, std::uint64_t seed,
                                     const SimulationOptions<Scalar>& options = {}) {
    noise.validate();
    if (N < 1 || T < 1) {
        throw InvalidInput("simulate_rollouts needs N >= 1 and T >= 1");
    }
    const Eigen::Index n = model.n();
    const Eigen::Index p = model.p();
    if (options.initial_state) {
        if (!noise.noiseless_override) {
            throw InvalidInput("a pinned initial state requires noiseless_override");
        }
        if (options.initial_state->size() != n) {
            throw DimensionError("pinned initial state has the wrong dimension");
        }
    }

    RolloutSet<Scalar> rs;
    rs.n = n;
    rs.p = p;
    rs.length = T;
    rs.seed = seed;
    rs.has_noise = true;
    rs.rollouts.resize(static_cast<std::size_t>(N));

    const Scalar sx(noise.sigma_x);
    const Scalar su(noise.sigma_u);
    const Scalar sw(noise.sigma_w);
    for (Eigen::Index i = 0; i < N; ++i) {
        NormalStream draw(derive_seed(seed, {static_cast<std::uint64_t>(i)}));
        auto& r = rs.rollouts[static_cast<std::size_t>(i)];
        r.states.resize(n, T + 1);
        r.inputs.resize(p, T);
        r.noise.resize(n, T);
        if (options.initial_state) {
            r.states.col(0) = *options.initial_state;
        } else {
            for (Eigen::Index k = 0; k < n; ++k) {
                r.states(k, 0) = sx * Scalar(draw());
            }
        }
        for (Eigen::Index t = 0; t < T; ++t) {
            for (Eigen::Index k = 0; k < p; ++k) {
                r.inputs(k, t) = su * Scalar(draw());
            }
            for (Eigen::Index k = 0; k < n; ++k) {
                r.noise(k, t) = sw * Scalar(draw());
            }
            r.states.col(t + 1).noalias() = model.A() * r.states.col(t) + model.B() * r.inputs.col(t);
            r.states.col(t + 1) += r.noise.col(t);
        }
    }
    return rs;
}

/// Per-channel sample standard deviations of x_0, u_t and w_t.
template <typename Scalar = double>
struct MomentReport {
    Vector<Scalar> initial_state_std;
    Vector<Scalar> input_std;
    Vector<Scalar> noise_std;
    std::size_t initial_state_samples = 0;
    std::size_t step_samples = 0;
};

namespace detail {

template <typename Scalar>
Vector<Scalar> row_std(const Matrix<Scalar>& samples) {
    Vector<Scalar> out = Vector<Scalar>::Zero(samples.rows());
    if (samples.cols() < 2) {
        return out;
    }
    for (Eigen::Index r = 0; r < samples.rows(); ++r) {
        const Scalar mean = samples.row(r).mean();
        const Scalar ss = (samples.row(r).array() - mean).square().sum();
        out(r) = std::sqrt(ss / Scalar(samples.cols() - 1));
    }
    return out;
}

} // namespace detail

template <typename Scalar>
MomentReport<Scalar> empirical_moment_check(const RolloutSet<Scalar>& rs) {
    if (rs.empty()) {
        throw InvalidInput("empirical_moment_check needs at least one rollout");
    }
    const Eigen::Index N = rs.num_rollouts();
    const Eigen::Index M = rs.num_samples();
    Matrix<Scalar> x0(rs.n, N);
    Matrix<Scalar> u(rs.p, M);
    Matrix<Scalar> w = Matrix<Scalar>::Zero(rs.n, M);
    for (Eigen::Index i = 0; i < N; ++i) {
        const auto& r = rs.rollouts[static_cast<std::size_t>(i)];
        x0.col(i) = r.states.col(0);
        u.middleCols(i * rs.length, rs.length) = r.inputs;
        if (rs.has_noise) {
            w.middleCols(i * rs.length, rs.length) = r.noise;
        }
    }
    MomentReport<Scalar> report;
    report.initial_state_std = detail::row_std(x0);
    report.input_std = detail::row_std(u);
    report.noise_std = detail::row_std(w);
    report.initial_state_samples = static_cast<std::size_t>(N);
    report.step_samples = static_cast<std::size_t>(M);
    return report;
}

} // namespace auxid
