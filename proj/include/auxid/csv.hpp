#pragma once

// CSV schemas. Numbers are written with 17 significant digits so that doubles
// round-trip exactly.

#include <cstdint>
#include <iosfwd>
#include <string>

#include "auxid/bounds.hpp"
#include "auxid/estimator.hpp"
#include "auxid/experiments.hpp"
#include "auxid/system.hpp"
#include "auxid/weight_select.hpp"

namespace auxid {

std::string format_double(double v);

/// Header `rollout,t,x_1..x_n,u_1..u_p,w_1..w_n`, then one row per (rollout, t)
/// for t = 0..T. The row t = T carries the final state and leaves u and w empty.
/// The w columns are omitted when the set has no recorded noise.
void write_rollouts_csv(std::ostream& os, const RolloutSet<double>& rs);

/// Inverse of write_rollouts_csv. `source` names the input in diagnostics.
RolloutSet<double> read_rollouts_csv(std::istream& is, const std::string& source = "<csv>");

/// `n=..,p=..,q=..,lambda=..,seed=..` then the n rows of theta = [A B].
void write_estimate_csv(std::ostream& os, const WlsEstimate<double>& est, std::uint64_t seed);

std::string bound_csv_header();
std::string bound_csv_row(const BoundReport<double>& r);

/// One row per grid point: bound columns, true_error, chosen; the chosen point
/// is repeated as the final row with chosen = 1.
void write_sweep_csv(std::ostream& os, const SweepResult<double>& result);

/// `scenario,schedule_idx,N_r,T_r,N_p,T_p,q_policy,q_value,lambda,trial,error`.
void write_experiment_csv(std::ostream& os, const ExperimentResult& result);

/// `scenario,schedule_idx,N_r,T_r,N_p,T_p,q_policy,mean_error`.
void write_experiment_means_csv(std::ostream& os, const ExperimentResult& result);

/// `kind,trials,successes,frequency,std_error`.
void write_validity_csv(std::ostream& os, const ValidityReport& report);

} // namespace auxid
