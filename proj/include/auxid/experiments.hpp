#pragma once

// Monte-Carlo experiment harness: error-vs-sample-size scenarios with fixed q
// policies, q sweeps of the data-dependent bound, and frequency checks of the
// probabilistic statements.
//
// Seeding: trial k draws its true-system data from derive_seed(master, {k, 0})
// and its auxiliary data from derive_seed(master, {k, 1}). Rollout streams do
// not depend on their length, so within a trial every schedule point sees
// prefixes of the same trajectories, and every q policy at a schedule point
// reuses the identical data set.

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "auxid/bounds.hpp"
#include "auxid/estimator.hpp"
#include "auxid/system.hpp"
#include "auxid/weight_select.hpp"

namespace auxid {

struct SystemSpec {
    SystemModel<double> model;
    NoiseConfig noise;
};

/// The 3-state, 2-input true system used by the built-in setups.
SystemSpec reference_true_system();
/// True system with A(0,0) += 0.1, B(0,0) += b_shift and noise level sigma_w.
SystemSpec reference_aux_system(double b_shift = 0.1, double sigma_w = 1.0);

struct SchedulePoint {
    Eigen::Index Nr = 1;
    Eigen::Index Tr = 1;
    Eigen::Index Np = 1;
    Eigen::Index Tp = 1;

    friend bool operator==(const SchedulePoint&, const SchedulePoint&) = default;
};

/// A fixed weight, or the diminishing rule q = value / sqrt(T_r).
struct QPolicy {
    enum class Kind { Fixed, InverseSqrtTr };
    Kind kind = Kind::Fixed;
    double value = 0.0;

    static QPolicy fixed(double q) { return {Kind::Fixed, q}; }
    static QPolicy inverse_sqrt_tr(double scale = 1.0) { return {Kind::InverseSqrtTr, scale}; }

    double at(const SchedulePoint& point) const;
    std::string label() const;
};

/// Parses "0.3", "1e10", "1/sqrt(T_r)" or "0.5/sqrt(T_r)".
QPolicy parse_q_policy(const std::string& text);

struct ScenarioConfig {
    std::string scenario = "custom";
    SystemSpec true_system = reference_true_system();
    SystemSpec aux_system = reference_aux_system();
    std::vector<SchedulePoint> schedule;
    std::vector<QPolicy> q_policies;
    int num_trials = 10;
    std::uint64_t master_seed = 42;
    double lambda = 0.0;
    unsigned jobs = 1;

    void validate() const;
};

struct TrialRecord {
    std::size_t schedule_idx = 0;
    std::size_t policy_idx = 0;
    int trial = 0;
    double q_value = 0.0;
    double error = 0.0;
};

struct ExperimentResult {
    ScenarioConfig config;
    /// Sorted by (schedule_idx, policy_idx, trial).
    std::vector<TrialRecord> records;
    /// mean_error(s, k): mean over trials at schedule point s, policy k.
    MatrixXd mean_error;
    double wall_seconds = 0.0;

    double mean(std::size_t schedule_idx, std::size_t policy_idx) const {
        return mean_error(static_cast<Eigen::Index>(schedule_idx), static_cast<Eigen::Index>(policy_idx));
    }
};

struct TrialData {
    RolloutSet<double> true_data;
    RolloutSet<double> aux_data;
};

/// The data set of one (trial, schedule point); independent of the q policy.
TrialData make_trial_data(const SystemSpec& true_system, const SystemSpec& aux_system, const SchedulePoint& point,
                          std::uint64_t master_seed, int trial);

/// FNV-1a over the bytes of X, Z and W; used to check paired trials.
std::uint64_t dataset_hash(const BatchData<double>& data);

ExperimentResult run_scenario(const ScenarioConfig& cfg);

struct QSweepConfig {
    std::string name = "custom";
    SystemSpec true_system = reference_true_system();
    SystemSpec aux_system = reference_aux_system();
    SchedulePoint point{20, 10, 20, 50};
    SweepGrid grid;
    double delta = 0.01;
    /// Defaults: the exact ||delta_theta|| and ||Theta|| of the configured systems.
    std::optional<double> delta_theta_norm;
    std::optional<double> theta_norm;
    int num_trials = 10;
    std::uint64_t master_seed = 42;
    unsigned jobs = 1;

    void validate() const;
    DependentBoundPriors priors() const;
};

struct QSweepExperiment {
    QSweepConfig config;
    /// Per grid point means over trials of every bound field and of the true error.
    SweepResult<double> aggregate;
    double argmin_bound_q = 0.0;
    double argmin_error_q = 0.0;
    std::vector<double> chosen_q_per_trial;
};

QSweepExperiment run_qsweep_experiment(const QSweepConfig& cfg);

enum class ValidityKind { Excitation, DependentBound };

ValidityKind parse_validity_kind(const std::string& text);
std::string to_string(ValidityKind kind);

struct ValidityParams {
    SystemSpec true_system = reference_true_system();
    SystemSpec aux_system = reference_aux_system();
    SchedulePoint point;
    double q = 0.0;
    double lambda = 1.0;
    double delta = 0.05;
};

struct ValidityReport {
    ValidityKind kind = ValidityKind::DependentBound;
    int trials = 0;
    int successes = 0;
    double frequency = 0.0;
    /// sqrt(f (1 - f) / trials).
    double std_error = 0.0;
};

/// Frequency of {lambda_min(ZQZ') >= D/41} (Excitation) or of
/// {||theta_hat - Theta|| <= data-dependent bound} (DependentBound) over seeded trials.
ValidityReport run_mc_validity(ValidityKind kind, int trials, const ValidityParams& params, std::uint64_t seed,
                               unsigned jobs = 1);

// Built-in setups.

/// Scenario "1" (T_p = 3 T_r), "2" (T_p = 2400) or "3" (T_r = 50).
ScenarioConfig preset_scenario(const std::string& id);

/// Cases 1..6: baseline 1, baseline 2, large model difference, noisy
/// auxiliary system, noisy true system, many true samples.
QSweepConfig preset_qsweep(int case_id);

ValidityParams default_validity_params(ValidityKind kind);

/// Runs fn(i) for i in [0, count) on up to `jobs` threads.
void parallel_for(std::size_t count, unsigned jobs, const std::function<void(std::size_t)>& fn);

} // namespace auxid
