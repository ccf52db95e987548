#pragma once

// Computable finite-sample error bounds for the weighted least-squares estimate.
//
// Data-independent bound (lambda = 0), with D = NrTr*smin_true^2 + q*NpTp*smin_aux^2:
//   noise  = 20 max(sw_true, sqrt(q) sw_aux) sqrt(log(9^n/delta) + (n+p) log(phi)) / sqrt(D)
//   bias   = q ||delta_theta|| g_aux / D
//   phi    = (g_true + q g_aux) / D + 1
//   g(N,T) = N sum_{t<T} 41 (tr(G_t) + p) (log(2/delta)/c + 1) smax^2
//   G_t    = sum_{i<=t} A^i A^i' + sum_{i<t} A^i B B' A^i'
//
// Data-dependent bound (lambda > 0), with M = ZQZ' + lambda I:
//   noise  = max(sw_true, sqrt(q) sw_aux) sqrt(32/9 (log(9^n/delta) + 1/2 log det(M/lambda))) / sqrt(lambda_min(M))
//   bias   = q ||delta_theta|| ||Z_aux Z_aux' M^{-1}||
//   reg    = ||Theta|| lambda / lambda_min(M)

#include <algorithm>
#include <cmath>
#include <optional>
#include <sstream>

#include "auxid/errors.hpp"
#include "auxid/estimator.hpp"
#include "auxid/linalg.hpp"
#include "auxid/system.hpp"

namespace auxid {

/// Largest confidence parameter accepted by the data-independent bound (2/e).
inline constexpr double kMaxIndependentDelta = 0.73575888234288464319;

/// Multiplier in the excitation lower bound ZQZ' >= D/41 I and in g(N, T).
inline constexpr double kExcitationFactor = 41.0;

inline constexpr int kDefaultEnvelopeHorizon = 500;

template <typename Scalar = double>
struct BoundReport {
    Scalar total = 0;
    Scalar noise_term = 0;
    Scalar model_difference_term = 0;
    Scalar regularization_term = 0;
    /// Sample-size hypothesis of the data-independent bound; always true for the data-dependent one.
    bool hypothesis_satisfied = true;
    /// phi for the data-independent bound, log det(ZQZ'/lambda + I) for the data-dependent one.
    Scalar phi_or_logdet = 0;
    /// lambda_min(ZQZ' + lambda I), or the excitation threshold D/41 for the data-independent bound.
    Scalar lambda_min = 0;
    std::optional<Scalar> g_true;
    std::optional<Scalar> g_aux;
    double q = 0;
    double lambda = 0;
    double delta = 0;
};

namespace detail {

inline void check_independent_delta(double delta) {
    if (!(delta > 0.0 && delta < kMaxIndependentDelta)) {
        std::ostringstream os;
        os << "delta must lie in (0, 2/e), got " << delta;
        throw InvalidInput(os.str());
    }
}

inline double log_nine_pow_over(Eigen::Index n, double delta) {
    return static_cast<double>(n) * std::log(9.0) - std::log(delta);
}

template <typename Scalar>
void finish(BoundReport<Scalar>& r) {
    r.total = r.noise_term + r.model_difference_term + r.regularization_term;
}

} // namespace detail

/// tr(G_0), ..., tr(G_{count-1}), accumulated from powers of A.
template <typename Scalar>
Vector<Scalar> trace_G_sequence(const SystemModel<Scalar>& model, Eigen::Index count) {
    Vector<Scalar> out(std::max<Eigen::Index>(count, 0));
    Matrix<Scalar> power = Matrix<Scalar>::Identity(model.n(), model.n());
    Scalar trace = 0;
    for (Eigen::Index t = 0; t < count; ++t) {
        // G_t = G_{t-1} + A^t A^t' + A^{t-1} B B' A^{t-1}'
        if (t > 0) {
            trace += (power * model.B()).squaredNorm();
            power = power * model.A();
        }
        trace += power.squaredNorm();
        out(t) = trace;
    }
    return out;
}

template <typename Scalar>
Scalar trace_G(const SystemModel<Scalar>& model, Eigen::Index t) {
    if (t < 0) {
        throw InvalidInput("trace_G needs t >= 0");
    }
    return trace_G_sequence(model, t + 1)(t);
}

/// g(N, T) = N sum_{t<T} 41 (tr(G_t) + p) (log(2/delta)/c + 1) sigma_max^2.
template <typename Scalar>
Scalar g_total(const SystemModel<Scalar>& model, const NoiseConfig& noise, Eigen::Index N, Eigen::Index T,
               double delta, double c) {
    detail::check_independent_delta(delta);
    if (!(c > 0.0)) {
        throw InvalidInput("constant c must be > 0");
    }
    if (N < 0 || T < 0) {
        throw InvalidInput("g_total needs N, T >= 0");
    }
    const Vector<Scalar> traces = trace_G_sequence(model, T);
    const Scalar per_step = Scalar(kExcitationFactor * (std::log(2.0 / delta) / c + 1.0) *
                                   noise.sigma_max() * noise.sigma_max());
    const Scalar sum = (traces.array() + Scalar(model.p())).sum();
    return Scalar(N) * per_step * sum;
}

template <typename Scalar = double>
struct BoundInputsIndependent {
    SystemModel<Scalar> true_model;
    NoiseConfig true_noise;
    SystemModel<Scalar> aux_model;
    NoiseConfig aux_noise;
    Eigen::Index Nr = 1;
    Eigen::Index Tr = 1;
    Eigen::Index Np = 1;
    Eigen::Index Tp = 1;
    double q = 0.0;
    double delta = 0.05;
    double c = 1.0;
    double delta_theta_norm = 0.0;

    Eigen::Index true_samples() const noexcept { return Nr * Tr; }
    Eigen::Index aux_samples() const noexcept { return Np * Tp; }

    /// q, except that no auxiliary samples means q is treated as 0.
    double effective_q() const noexcept { return aux_samples() == 0 ? 0.0 : q; }

    void validate() const {
        detail::check_independent_delta(delta);
        if (!(c > 0.0)) {
            throw InvalidInput("constant c must be > 0");
        }
        if (!std::isfinite(q) || q < 0) {
            throw InvalidInput("q must be finite and >= 0");
        }
        if (!std::isfinite(delta_theta_norm) || delta_theta_norm < 0) {
            throw InvalidInput("delta_theta_norm must be finite and >= 0");
        }
        if (Nr < 1 || Tr < 1 || Np < 0 || Tp < 0) {
            throw InvalidInput("sample counts must be positive (auxiliary counts may be 0)");
        }
        if (true_model.n() != aux_model.n() || true_model.p() != aux_model.p()) {
            throw DimensionError("true and auxiliary systems have different (n, p)");
        }
        true_noise.validate();
        aux_noise.validate();
    }

    /// N_r T_r smin_true^2 + q N_p T_p smin_aux^2.
    double excitation_mass() const {
        const double st = true_noise.sigma_min();
        const double sa = aux_noise.sigma_min();
        return static_cast<double>(true_samples()) * st * st +
               effective_q() * static_cast<double>(aux_samples()) * sa * sa;
    }

    bool hypothesis_satisfied() const {
        const double d = static_cast<double>(true_model.n() + true_model.p());
        const double need = std::max(kExcitationFactor, 200.0 * d * std::log(12.0 / delta));
        return static_cast<double>(std::min(true_samples(), aux_samples())) >= need;
    }
};

namespace detail {

template <typename Scalar>
struct PhiParts {
    Scalar phi;
    Scalar g_true;
    std::optional<Scalar> g_aux;
    Scalar mass;
};

template <typename Scalar>
PhiParts<Scalar> phi_parts(const BoundInputsIndependent<Scalar>& in) {
    in.validate();
    const double q = in.effective_q();
    const Scalar mass = Scalar(in.excitation_mass());
    if (!(mass > Scalar(0))) {
        throw InvalidInput("phi: N_r T_r smin^2 + q N_p T_p smin^2 must be > 0");
    }
    PhiParts<Scalar> parts{Scalar(1), g_total(in.true_model, in.true_noise, in.Nr, in.Tr, in.delta, in.c),
                           std::nullopt, mass};
    Scalar numerator = parts.g_true;
    if (q > 0.0) {
        parts.g_aux = g_total(in.aux_model, in.aux_noise, in.Np, in.Tp, in.delta, in.c);
        numerator += Scalar(q) * *parts.g_aux;
    }
    parts.phi = numerator / mass + Scalar(1);
    return parts;
}

} // namespace detail

template <typename Scalar>
Scalar phi(const BoundInputsIndependent<Scalar>& in) {
    return detail::phi_parts(in).phi;
}

/// Lower bound D/41 on lambda_min(ZQZ') that holds with probability >= 1 - 2 delta
/// once min(N_r T_r, N_p T_p) >= max(41, 200 (n+p) log(12/delta)).
template <typename Scalar>
Scalar excitation_threshold(const BoundInputsIndependent<Scalar>& in) {
    return Scalar(in.excitation_mass() / kExcitationFactor);
}

/// Data-independent bound (lambda = 0). The sample-size hypothesis is reported, not enforced.
template <typename Scalar>
BoundReport<Scalar> bound_data_independent(const BoundInputsIndependent<Scalar>& in) {
    const auto parts = detail::phi_parts(in);
    const double q = in.effective_q();
    const Eigen::Index n = in.true_model.n();
    const Eigen::Index p = in.true_model.p();

    const double sw = std::max(in.true_noise.sigma_w, q > 0.0 ? std::sqrt(q) * in.aux_noise.sigma_w : 0.0);
    const Scalar radicand =
        Scalar(detail::log_nine_pow_over(n, in.delta)) + Scalar(n + p) * std::log(parts.phi);

    BoundReport<Scalar> r;
    r.noise_term = Scalar(20.0 * sw) * std::sqrt(radicand) / std::sqrt(parts.mass);
    r.model_difference_term =
        q > 0.0 ? Scalar(q * in.delta_theta_norm) * *parts.g_aux / parts.mass : Scalar(0);
    r.regularization_term = 0;
    r.hypothesis_satisfied = in.hypothesis_satisfied();
    r.phi_or_logdet = parts.phi;
    r.lambda_min = parts.mass / Scalar(kExcitationFactor);
    r.g_true = parts.g_true;
    r.g_aux = parts.g_aux;
    r.q = q;
    r.lambda = 0;
    r.delta = in.delta;
    detail::finish(r);
    return r;
}

/// Constants with ||A^i|| <= kappa gamma^i for all i >= 0.
template <typename Scalar = double>
struct GelfandEnvelope {
    Scalar kappa = 1;
    Scalar gamma = 0;
    /// Smallest m with ||(A/gamma)^m|| <= 1; submultiplicativity then extends
    /// the bound from [0, m] to every i.
    Eigen::Index certified_at = 0;
};

/// gamma = (rho(A) + 1)/2 and kappa = max(1, max_{i <= horizon} ||A^i|| / gamma^i).
template <typename Derived>
GelfandEnvelope<typename Derived::Scalar> gelfand_envelope(const Eigen::MatrixBase<Derived>& a,
                                                           Eigen::Index horizon = kDefaultEnvelopeHorizon) {
    using Scalar = typename Derived::Scalar;
    if (horizon < 1) {
        throw InvalidInput("gelfand_envelope needs horizon >= 1");
    }
    const Scalar rho = spectral_radius(a);
    if (!(rho < Scalar(1))) {
        std::ostringstream os;
        os << "spectral radius " << rho << " >= 1; the envelope needs a strictly stable matrix";
        throw InstabilityError(os.str());
    }
    GelfandEnvelope<Scalar> env;
    env.gamma = (rho + Scalar(1)) / Scalar(2);
    const Matrix<Scalar> scaled = a / env.gamma;
    Matrix<Scalar> power = Matrix<Scalar>::Identity(a.rows(), a.cols());
    Scalar kappa = 1; // i = 0 term
    Eigen::Index certified = -1;
    for (Eigen::Index i = 1; i <= horizon; ++i) {
        power = power * scaled;
        const Scalar ratio = spectral_norm(power);
        kappa = std::max(kappa, ratio);
        if (certified < 0 && ratio <= Scalar(1)) {
            certified = i;
        }
    }
    if (certified < 0) {
        std::ostringstream os;
        os << "||(A/gamma)^i|| stays above 1 for every i <= " << horizon << "; increase the horizon";
        throw HorizonTooSmall(os.str());
    }
    for (Eigen::Index i = horizon + 1; i <= horizon + 10; ++i) {
        power = power * scaled;
        if (spectral_norm(power) > kappa * (Scalar(1) + Scalar(1e-12))) {
            throw HorizonTooSmall("envelope exceeded beyond the scanned horizon; increase the horizon");
        }
    }
    env.kappa = kappa;
    env.certified_at = certified;
    return env;
}

/// sup_t tr(G_t) <= n kappa^2 / (1 - gamma^2) + n kappa^2 ||B||^2 / (1 - gamma^2).
template <typename Scalar>
Scalar trace_G_envelope_bound(const SystemModel<Scalar>& model, Scalar kappa, Scalar gamma) {
    if (!(gamma > Scalar(0) && gamma < Scalar(1))) {
        throw InvalidInput("trace_G_envelope_bound needs gamma in (0, 1)");
    }
    if (!(kappa >= Scalar(1))) {
        throw InvalidInput("trace_G_envelope_bound needs kappa >= 1");
    }
    const Scalar base = Scalar(model.n()) * kappa * kappa / (Scalar(1) - gamma * gamma);
    const Scalar b_norm = spectral_norm(model.B());
    return base + base * b_norm * b_norm;
}

template <typename Scalar = double>
struct GramGrowthConstant {
    Scalar gamma;     // max of the two sides
    Scalar true_side; // 41 (sup tr(G_t) + p)(log(2/delta)/c + 1) smax_true^2
    Scalar aux_side;
};

/// A constant gamma dominating 41 (tr(G_t) + p)(log(2/delta)/c + 1) smax^2 for
/// every t on both systems, using the envelope bound for sup_t tr(G_t).
template <typename Scalar>
GramGrowthConstant<Scalar> gram_growth_constant(const SystemModel<Scalar>& true_model, const NoiseConfig& true_noise,
                                                const SystemModel<Scalar>& aux_model, const NoiseConfig& aux_noise,
                                                double delta, double c,
                                                Eigen::Index horizon = kDefaultEnvelopeHorizon) {
    detail::check_independent_delta(delta);
    if (!(c > 0.0)) {
        throw InvalidInput("constant c must be > 0");
    }
    const double factor = kExcitationFactor * (std::log(2.0 / delta) / c + 1.0);
    auto side = [&](const SystemModel<Scalar>& m, const NoiseConfig& noise) {
        const auto env = gelfand_envelope(m.A(), horizon);
        const Scalar sup_trace = trace_G_envelope_bound(m, env.kappa, env.gamma);
        return Scalar(factor * noise.sigma_max() * noise.sigma_max()) * (sup_trace + Scalar(m.p()));
    };
    GramGrowthConstant<Scalar> out;
    out.true_side = side(true_model, true_noise);
    out.aux_side = side(aux_model, aux_noise);
    out.gamma = std::max(out.true_side, out.aux_side);
    return out;
}

template <typename Scalar = double>
struct AuxBenefit {
    bool beneficial = false;
    Scalar lhs = 0; // true-only bound (without the leading 20)
    Scalar rhs = 0; // weighted bound (without the leading 20)
};

/// Sufficient condition for q > 0 to give a smaller data-independent bound than q = 0.
template <typename Scalar>
AuxBenefit<Scalar> check_aux_benefit(const BoundInputsIndependent<Scalar>& in, Scalar gamma) {
    in.validate();
    if (!(in.q > 0.0)) {
        throw InvalidInput("check_aux_benefit needs q > 0");
    }
    if (in.aux_samples() == 0) {
        throw InvalidInput("check_aux_benefit needs auxiliary samples");
    }
    if (!(gamma > Scalar(0))) {
        throw InvalidInput("check_aux_benefit needs gamma > 0");
    }
    const Eigen::Index n = in.true_model.n();
    const Eigen::Index p = in.true_model.p();
    const double log9 = detail::log_nine_pow_over(n, in.delta);
    const double st = in.true_noise.sigma_min();
    const double sa = in.aux_noise.sigma_min();
    const double s_min = std::min(st, sa);
    const Scalar true_mass = Scalar(static_cast<double>(in.true_samples()) * st * st);
    const Scalar aux_mass = Scalar(static_cast<double>(in.aux_samples()) * sa * sa);
    const Scalar g_true = g_total(in.true_model, in.true_noise, in.Nr, in.Tr, in.delta, in.c);

    AuxBenefit<Scalar> out;
    out.lhs = Scalar(in.true_noise.sigma_w) *
              std::sqrt(Scalar(log9) + Scalar(n + p) * std::log(g_true / true_mass + Scalar(1))) /
              std::sqrt(true_mass);
    const double sw = std::max(in.true_noise.sigma_w / std::sqrt(in.q), in.aux_noise.sigma_w);
    out.rhs = Scalar(sw) *
                  std::sqrt(Scalar(log9) + Scalar(n + p) * std::log(gamma / Scalar(s_min * s_min) + Scalar(1))) /
                  std::sqrt(aux_mass) +
              Scalar(in.delta_theta_norm) * gamma / Scalar(20.0 * sa * sa);
    out.beneficial = out.lhs > out.rhs;
    return out;
}

/// The pieces of ZQZ' a data-dependent bound needs: Z_true Z_true' and Z_aux Z_aux'.
template <typename Scalar = double>
struct GramPieces {
    Eigen::Index n = 0;
    Eigen::Index p = 0;
    Matrix<Scalar> true_gram;
    Matrix<Scalar> aux_gram;
    bool has_aux = false;

    static GramPieces from(const BatchData<Scalar>& data) {
        GramPieces g;
        g.n = data.n;
        g.p = data.p;
        g.true_gram = data.true_Z() * data.true_Z().transpose();
        g.aux_gram = auxid::aux_gram(data);
        g.has_aux = data.aux_columns() > 0;
        return g;
    }
};

/// Everything but (q, lambda): confidence, noise levels and norm priors.
struct DependentBoundPriors {
    double delta = 0.01;
    double sigma_w_true = 1.0;
    double sigma_w_aux = 1.0;
    double delta_theta_norm = 0.0; // ||delta_theta|| or an upper bound
    double theta_norm = 0.0;       // ||Theta|| or an upper bound

    void validate() const {
        if (!(delta > 0.0) || !std::isfinite(delta)) {
            throw InvalidInput("delta must be > 0");
        }
        if (!(sigma_w_true >= 0.0) || !(sigma_w_aux >= 0.0) || !std::isfinite(sigma_w_true) ||
            !std::isfinite(sigma_w_aux)) {
            throw InvalidInput("sub-Gaussian parameters must be finite and >= 0");
        }
        if (!(delta_theta_norm >= 0.0) || !(theta_norm >= 0.0) || !std::isfinite(delta_theta_norm) ||
            !std::isfinite(theta_norm)) {
            throw InvalidInput("norm priors must be finite and >= 0");
        }
    }
};

template <typename Scalar = double>
struct BoundInputsDependent {
    GramPieces<Scalar> gram;
    double q = 0.0;
    double lambda = 1.0;
    DependentBoundPriors priors;
};

/// Data-dependent bound (lambda > 0).
template <typename Scalar>
BoundReport<Scalar> bound_data_dependent(const BoundInputsDependent<Scalar>& in) {
    in.priors.validate();
    if (!(in.lambda > 0.0) || !std::isfinite(in.lambda)) {
        throw InvalidInput("the data-dependent bound needs lambda > 0");
    }
    if (!std::isfinite(in.q) || in.q < 0.0) {
        throw InvalidInput("q must be finite and >= 0");
    }
    const auto& g = in.gram;
    const Eigen::Index d = g.n + g.p;
    if (g.true_gram.rows() != d || g.true_gram.cols() != d) {
        throw DimensionError("gram pieces do not match (n, p)");
    }
    const double q = g.has_aux ? in.q : 0.0;
    const Scalar lambda(in.lambda);

    Matrix<Scalar> weighted = g.true_gram;
    if (q > 0.0) {
        weighted.noalias() += Scalar(q) * g.aux_gram;
    }
    Matrix<Scalar> regularized = weighted;
    regularized.diagonal().array() += lambda;

    const Vector<Scalar> mu = eigenvalues_sym(weighted);
    Scalar logdet = 0;
    for (Eigen::Index i = 0; i < mu.size(); ++i) {
        logdet += std::log1p(mu(i) / lambda);
    }
    const Scalar lambda_min = min_eigenvalue_sym(regularized);

    const double sw = std::max(in.priors.sigma_w_true, std::sqrt(q) * in.priors.sigma_w_aux);
    const Scalar radicand =
        Scalar(32.0 / 9.0) * (Scalar(detail::log_nine_pow_over(g.n, in.priors.delta)) + logdet / Scalar(2));

    BoundReport<Scalar> r;
    r.noise_term = Scalar(sw) * std::sqrt(radicand) / std::sqrt(lambda_min);
    if (q > 0.0 && in.priors.delta_theta_norm > 0.0) {
        const Matrix<Scalar> ratio = solve_spd(regularized, g.aux_gram, "ZQZ' + lambda*I");
        r.model_difference_term = Scalar(q * in.priors.delta_theta_norm) * spectral_norm(ratio);
    }
    r.regularization_term = Scalar(in.priors.theta_norm) * lambda / lambda_min;
    r.hypothesis_satisfied = true;
    r.phi_or_logdet = logdet;
    r.lambda_min = lambda_min;
    r.q = q;
    r.lambda = in.lambda;
    r.delta = in.priors.delta;
    detail::finish(r);
    return r;
}

} // namespace auxid
