#pragma once

// Choose the auxiliary weight q (and optionally lambda) by minimizing the
// data-dependent bound over a grid.

#include <cmath>
#include <optional>
#include <tuple>
#include <vector>

#include "auxid/bounds.hpp"
#include "auxid/errors.hpp"
#include "auxid/estimator.hpp"

namespace auxid {

struct SweepGrid {
    double q_min = 0.0;
    double q_max = 2.0;
    double q_step = 0.01;
    std::vector<double> lambda_values{1.0};

    void validate() const {
        if (!std::isfinite(q_min) || !std::isfinite(q_max) || q_min < 0 || q_max < q_min) {
            throw InvalidInput("sweep grid needs 0 <= q_min <= q_max");
        }
        if (!(q_step > 0) || !std::isfinite(q_step)) {
            throw InvalidInput("sweep grid needs q_step > 0");
        }
        if (lambda_values.empty()) {
            throw InvalidInput("sweep grid needs at least one lambda");
        }
        for (const double l : lambda_values) {
            if (!(l > 0) || !std::isfinite(l)) {
                throw InvalidInput("sweep grid lambdas must be > 0");
            }
        }
    }

    /// q_min + k q_step for k = 0..K, with the last point snapped to q_max when
    /// it lands within 1e-9 steps of it.
    std::vector<double> q_values() const {
        validate();
        const double span = (q_max - q_min) / q_step;
        const auto count = static_cast<long>(std::floor(span + 1e-9)) + 1;
        std::vector<double> qs;
        qs.reserve(static_cast<std::size_t>(count));
        for (long k = 0; k < count; ++k) {
            qs.push_back(q_min + static_cast<double>(k) * q_step);
        }
        if (std::abs(qs.back() - q_max) <= 1e-9 * q_step) {
            qs.back() = q_max;
        }
        return qs;
    }
};

template <typename Scalar = double>
struct SweepPoint {
    double q = 0;
    double lambda = 0;
    BoundReport<Scalar> bound;
    std::optional<Scalar> true_error;
};

template <typename Scalar = double>
struct SweepResult {
    std::vector<SweepPoint<Scalar>> points;
    std::size_t chosen = 0;

    const SweepPoint<Scalar>& best() const { return points.at(chosen); }
    double chosen_q() const { return best().q; }
    double chosen_lambda() const { return best().lambda; }
};

/// Index of the smallest total; ties go to the smallest q, then the smallest lambda.
/// The result does not depend on the order of `points`.
template <typename Scalar>
std::size_t argmin_bound(const std::vector<SweepPoint<Scalar>>& points) {
    if (points.empty()) {
        throw InvalidInput("argmin over an empty sweep");
    }
    std::size_t best = 0;
    for (std::size_t i = 1; i < points.size(); ++i) {
        const auto& a = points[i];
        const auto& b = points[best];
        if (std::tie(a.bound.total, a.q, a.lambda) < std::tie(b.bound.total, b.q, b.lambda)) {
            best = i;
        }
    }
    return best;
}

namespace detail {

template <typename Scalar>
SweepResult<Scalar> run_sweep(const BatchData<Scalar>& data, const SweepGrid& grid,
                              const DependentBoundPriors& priors, const SystemModel<Scalar>* truth) {
    priors.validate();
    const auto qs = grid.q_values();
    BoundInputsDependent<Scalar> in;
    in.gram = GramPieces<Scalar>::from(data);
    in.priors = priors;

    SweepResult<Scalar> result;
    result.points.reserve(qs.size() * grid.lambda_values.size());
    for (const double lambda : grid.lambda_values) {
        for (const double q : qs) {
            in.q = q;
            in.lambda = lambda;
            SweepPoint<Scalar> point{q, lambda, bound_data_dependent(in), std::nullopt};
            if (truth != nullptr) {
                point.true_error = estimation_error(wls_estimate(data, WlsConfig{q, lambda}), *truth);
            }
            result.points.push_back(std::move(point));
        }
    }
    result.chosen = argmin_bound(result.points);
    return result;
}

} // namespace detail

/// Evaluates the data-dependent bound at every (q, lambda) grid point.
template <typename Scalar>
SweepResult<Scalar> sweep(const BatchData<Scalar>& data, const SweepGrid& grid, const DependentBoundPriors& priors) {
    return detail::run_sweep<Scalar>(data, grid, priors, nullptr);
}

/// As sweep, also recording ||theta_hat(q, lambda) - Theta|| at each point.
template <typename Scalar>
SweepResult<Scalar> sweep_with_truth(const BatchData<Scalar>& data, const SweepGrid& grid,
                                     const DependentBoundPriors& priors, const SystemModel<Scalar>& truth) {
    return detail::run_sweep<Scalar>(data, grid, priors, &truth);
}

} // namespace auxid
