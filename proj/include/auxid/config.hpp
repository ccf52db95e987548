#pragma once

// JSON run configuration. A document may name a preset; the preset document is
// laid down first and the user document is merge-patched over it (a null value
// deletes a preset key). Unknown keys are rejected with their key path.
//
// {
//   "preset": "paper-va" | "paper-vb-case1" .. "paper-vb-case6",
//   "seed": 42,
//   "true_system": {"A": [[..]], "B": [[..]],
//                   "noise": {"sigma_x": 1, "sigma_u": 1, "sigma_w": 1, "noiseless_override": false}},
//   "aux_system": { same shape },
//   "initial_state": [..],
//   "data": {"N_r": 1, "T_r": 100, "N_p": 1, "T_p": 300},
//   "estimator": {"q": 1, "lambda": 0},
//   "bounds": {"delta": 0.01, "c": 1, "delta_theta_norm": .., "theta_norm": ..,
//              "sigma_w_true": .., "sigma_w_aux": ..},
//   "rollouts": {"true_csv": "path", "aux_csv": "path"},
//   "output": {"dir": "path"},
//   "experiment": {"trials": 10, "jobs": 1,
//                  "schedule": [{"N_r": 1, "T_r": 25, "N_p": 1, "T_p": 75}, ..],
//                  "q_policies": [0, 0.3, "1/sqrt(T_r)"]},
//   "sweep": {"q_min": 0, "q_max": 2, "q_step": 0.01, "lambda_values": [1]}
// }

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "auxid/estimator.hpp"
#include "auxid/experiments.hpp"
#include "auxid/weight_select.hpp"

namespace auxid {

/// Unset fields fall back to the defaults of the command that consumes them.
struct RunConfig {
    std::optional<std::string> preset;
    std::optional<std::uint64_t> seed;
    std::optional<SystemSpec> true_system;
    std::optional<SystemSpec> aux_system;
    std::optional<VectorXd> initial_state;
    std::optional<SchedulePoint> data;
    std::optional<double> q;
    std::optional<double> lambda;
    std::optional<double> delta;
    std::optional<double> c;
    std::optional<double> delta_theta_norm;
    std::optional<double> theta_norm;
    std::optional<double> sigma_w_true;
    std::optional<double> sigma_w_aux;
    std::optional<std::string> true_csv;
    std::optional<std::string> aux_csv;
    std::optional<std::string> output_dir;
    std::optional<int> trials;
    std::optional<unsigned> jobs;
    std::optional<std::vector<SchedulePoint>> schedule;
    std::optional<std::vector<QPolicy>> q_policies;
    std::optional<SweepGrid> sweep;

    /// The merged document the fields were read from.
    nlohmann::json document;
};

std::vector<std::string> preset_names();

/// Throws ConfigError for an unknown name.
nlohmann::json preset_document(const std::string& name);

/// Parses JSON text; syntax errors report line and column.
nlohmann::json parse_json_text(const std::string& text, const std::string& source);

/// Applies the named preset (the document's own "preset" key wins over
/// `fallback_preset`), merges, and validates.
RunConfig build_run_config(const nlohmann::json& user, const std::optional<std::string>& fallback_preset = {});

/// Reads `path` (IoError when unreadable) and calls build_run_config.
RunConfig load_run_config(const std::filesystem::path& path,
                          const std::optional<std::string>& fallback_preset = {});

/// Scenario `id` with systems, schedule, q policies, trials, lambda, seed and
/// jobs taken from `cfg` where set.
ScenarioConfig scenario_from(const RunConfig& cfg, const std::string& id);

/// Needs true_system, aux_system and data.
QSweepConfig qsweep_from(const RunConfig& cfg);

ValidityParams validity_from(const RunConfig& cfg, ValidityKind kind);

} // namespace auxid
