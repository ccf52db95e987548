// auxid: simulate, estimate, run experiments and check bounds from the command line.
//
// Exit codes: 0 success, 2 configuration or invalid input, 3 numerical failure, 4 I/O failure.

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "auxid/config.hpp"
#include "auxid/csv.hpp"
#include "auxid/experiments.hpp"

#ifndef AUXID_VERSION
#define AUXID_VERSION "0.0.0"
#endif

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitNumerical = 3;
constexpr int kExitIo = 4;

struct Flags {
    std::optional<std::string> config;
    std::optional<std::string> preset;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out;
    std::optional<unsigned> jobs;
    std::optional<double> q;
    std::optional<double> lambda;
    std::optional<int> trials;
};

struct Context {
    auxid::RunConfig cfg;
    fs::path config_dir = ".";
    fs::path out_dir;
    std::uint64_t seed = 42;
    std::vector<std::string> outputs;
    std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();
};

void add_common(CLI::App* cmd, Flags& f) {
    cmd->add_option("--config", f.config, "JSON run configuration");
    cmd->add_option("--preset", f.preset, "built-in setup: paper-va, paper-vb-case1..6");
    cmd->add_option("--seed", f.seed, "master seed (default 42)");
    cmd->add_option("--out", f.out, "output directory (default auxid_out)");
    cmd->add_option("--jobs", f.jobs, "worker threads")->check(CLI::PositiveNumber);
    cmd->add_option("--q", f.q, "auxiliary weight")->check(CLI::NonNegativeNumber);
    cmd->add_option("--lambda", f.lambda, "regularization")->check(CLI::NonNegativeNumber);
    cmd->add_option("--trials", f.trials, "Monte-Carlo trials")->check(CLI::PositiveNumber);
}

Context load(const Flags& f, const std::optional<std::string>& default_preset) {
    Context ctx;
    if (f.config) {
        ctx.cfg = auxid::load_run_config(*f.config, f.preset);
        ctx.config_dir = fs::path(*f.config).parent_path();
    } else {
        ctx.cfg = auxid::build_run_config(json::object(), f.preset ? f.preset : default_preset);
    }
    auto& c = ctx.cfg;
    if (f.seed) c.seed = f.seed;
    if (f.jobs) c.jobs = f.jobs;
    if (f.q) c.q = f.q;
    if (f.lambda) c.lambda = f.lambda;
    if (f.trials) c.trials = f.trials;
    ctx.seed = c.seed.value_or(42);
    ctx.out_dir = f.out ? fs::path(*f.out) : fs::path(c.output_dir.value_or("auxid_out"));
    std::error_code ec;
    fs::create_directories(ctx.out_dir, ec);
    if (ec) {
        throw auxid::IoError("cannot create output directory '" + ctx.out_dir.string() + "': " + ec.message());
    }
    return ctx;
}

template <typename Writer>
void write_file(Context& ctx, const std::string& name, Writer&& writer) {
    const fs::path path = ctx.out_dir / name;
    std::ofstream os(path, std::ios::binary);
    if (!os) {
        throw auxid::IoError("cannot write '" + path.string() + "'");
    }
    writer(os);
    os.flush();
    if (!os) {
        throw auxid::IoError("write to '" + path.string() + "' failed");
    }
    ctx.outputs.push_back(path.string());
}

void write_metadata(Context& ctx, const std::string& command, const json& extra = json::object()) {
    json meta = {
        {"command", command},
        {"version", AUXID_VERSION},
        {"eigen_version", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                              std::to_string(EIGEN_MINOR_VERSION)},
        {"seed", ctx.seed},
        {"config", ctx.cfg.document},
        {"outputs", ctx.outputs},
        {"wall_seconds", std::chrono::duration<double>(std::chrono::steady_clock::now() - ctx.start).count()},
    };
    meta.update(extra);
    write_file(ctx, "metadata.json", [&](std::ostream& os) { os << meta.dump(2) << '\n'; });
}

auxid::RolloutSet<double> read_rollouts(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw auxid::IoError("cannot open rollout file '" + path.string() + "'");
    }
    return auxid::read_rollouts_csv(in, path.string());
}

struct SimulatedData {
    auxid::RolloutSet<double> true_data;
    auxid::RolloutSet<double> aux_data;
};

SimulatedData simulate(const Context& ctx) {
    const auto& c = ctx.cfg;
    if (!c.true_system) {
        throw auxid::ConfigError("config key 'true_system': missing");
    }
    if (!c.data) {
        throw auxid::ConfigError("config key 'data': missing");
    }
    auxid::SimulationOptions<double> opts;
    opts.initial_state = c.initial_state;
    SimulatedData d;
    d.true_data = auxid::simulate_rollouts(c.true_system->model, c.true_system->noise, c.data->Nr, c.data->Tr,
                                           auxid::derive_seed(ctx.seed, {0, 0}), opts);
    if (c.aux_system && c.data->Np > 0) {
        d.aux_data = auxid::simulate_rollouts(c.aux_system->model, c.aux_system->noise, c.data->Np, c.data->Tp,
                                              auxid::derive_seed(ctx.seed, {0, 1}), opts);
    } else {
        d.aux_data = auxid::RolloutSet<double>::none(c.true_system->model.n(), c.true_system->model.p());
    }
    return d;
}

int cmd_simulate(const Flags& f) {
    Context ctx = load(f, "paper-va");
    const auto d = simulate(ctx);
    write_file(ctx, "true_rollouts.csv", [&](std::ostream& os) { auxid::write_rollouts_csv(os, d.true_data); });
    if (!d.aux_data.empty()) {
        write_file(ctx, "aux_rollouts.csv", [&](std::ostream& os) { auxid::write_rollouts_csv(os, d.aux_data); });
    }
    write_metadata(ctx, "simulate");
    std::cout << "simulated " << d.true_data.num_rollouts() << " true rollout(s) of length " << d.true_data.length;
    if (!d.aux_data.empty()) {
        std::cout << " and " << d.aux_data.num_rollouts() << " auxiliary rollout(s) of length " << d.aux_data.length;
    }
    std::cout << " into " << ctx.out_dir.string() << '\n';
    return 0;
}

int cmd_estimate(const Flags& f) {
    Context ctx = load(f, "paper-va");
    const auto& c = ctx.cfg;
    SimulatedData d;
    if (c.true_csv) {
        auto resolve = [&](const std::string& p) {
            const fs::path path(p);
            return path.is_absolute() ? path : ctx.config_dir / path;
        };
        d.true_data = read_rollouts(resolve(*c.true_csv));
        d.aux_data = c.aux_csv ? read_rollouts(resolve(*c.aux_csv))
                               : auxid::RolloutSet<double>::none(d.true_data.n, d.true_data.p);
    } else {
        d = simulate(ctx);
    }
    const auto data = auxid::assemble_batch(d.true_data, d.aux_data);
    const auxid::WlsConfig wls{c.q.value_or(0.0), c.lambda.value_or(0.0)};
    const auto est = auxid::wls_estimate(data, wls);
    write_file(ctx, "estimate.csv", [&](std::ostream& os) { auxid::write_estimate_csv(os, est, ctx.seed); });

    std::cout << "estimate: q=" << auxid::format_double(wls.q) << " lambda=" << auxid::format_double(wls.lambda)
              << " samples=" << data.true_columns() << "+" << data.aux_columns()
              << " condition=" << std::setprecision(6) << est.condition << '\n';
    json extra = json::object();
    if (c.true_system && c.true_system->model.n() == data.n && c.true_system->model.p() == data.p) {
        const double err = auxid::estimation_error(est, c.true_system->model);
        std::cout << "error vs truth: " << auxid::format_double(err) << '\n';
        extra["error_vs_truth"] = err;
    }
    if (c.delta_theta_norm && c.theta_norm && wls.lambda > 0) {
        auxid::DependentBoundPriors pr;
        pr.delta = c.delta.value_or(0.01);
        pr.sigma_w_true = c.sigma_w_true.value_or(c.true_system ? c.true_system->noise.sigma_w : 1.0);
        pr.sigma_w_aux = c.sigma_w_aux.value_or(c.aux_system ? c.aux_system->noise.sigma_w : 1.0);
        pr.delta_theta_norm = *c.delta_theta_norm;
        pr.theta_norm = *c.theta_norm;
        const auto report =
            auxid::bound_data_dependent(auxid::BoundInputsDependent<double>{auxid::GramPieces<double>::from(data),
                                                                            wls.q, wls.lambda, pr});
        write_file(ctx, "bound.csv", [&](std::ostream& os) {
            os << auxid::bound_csv_header() << '\n' << auxid::bound_csv_row(report) << '\n';
        });
        std::cout << "bound: total=" << auxid::format_double(report.total) << " (noise "
                  << auxid::format_double(report.noise_term) << ", model difference "
                  << auxid::format_double(report.model_difference_term) << ", regularization "
                  << auxid::format_double(report.regularization_term) << ")\n";
    }
    write_metadata(ctx, "estimate", extra);
    return 0;
}

int cmd_scenario(const Flags& f, const std::string& id) {
    Context ctx = load(f, std::nullopt);
    const auto cfg = auxid::scenario_from(ctx.cfg, id);
    const auto result = auxid::run_scenario(cfg);
    write_file(ctx, "scenario_" + id + ".csv", [&](std::ostream& os) { auxid::write_experiment_csv(os, result); });
    write_file(ctx, "scenario_" + id + "_means.csv",
               [&](std::ostream& os) { auxid::write_experiment_means_csv(os, result); });
    write_metadata(ctx, "scenario " + id, {{"trials", cfg.num_trials}});

    std::cout << "scenario " << id << ": mean estimation error over " << cfg.num_trials << " trials\n";
    std::cout << std::setw(6) << "N_r" << std::setw(7) << "T_r" << std::setw(6) << "N_p" << std::setw(7) << "T_p";
    for (const auto& k : cfg.q_policies) {
        std::cout << std::setw(14) << ("q=" + k.label());
    }
    std::cout << '\n' << std::setprecision(5);
    for (std::size_t s = 0; s < cfg.schedule.size(); ++s) {
        const auto& pt = cfg.schedule[s];
        std::cout << std::setw(6) << pt.Nr << std::setw(7) << pt.Tr << std::setw(6) << pt.Np << std::setw(7) << pt.Tp;
        for (std::size_t k = 0; k < cfg.q_policies.size(); ++k) {
            std::cout << std::setw(14) << result.mean(s, k);
        }
        std::cout << '\n';
    }
    return 0;
}

int cmd_qsweep(const Flags& f) {
    Context ctx = load(f, "paper-vb-case1");
    auto cfg = auxid::qsweep_from(ctx.cfg);
    if (f.lambda) {
        cfg.grid.lambda_values = {*f.lambda};
    }
    const auto result = auxid::run_qsweep_experiment(cfg);
    write_file(ctx, "qsweep_" + cfg.name + ".csv",
               [&](std::ostream& os) { auxid::write_sweep_csv(os, result.aggregate); });
    write_metadata(ctx, "qsweep", {{"chosen_q", result.argmin_bound_q}, {"argmin_error_q", result.argmin_error_q}});

    const auto& best = result.aggregate.best();
    std::cout << "qsweep " << cfg.name << ": " << result.aggregate.points.size() << " grid points, "
              << cfg.num_trials << " trials\n"
              << std::setprecision(6) << "chosen q* = " << best.q << " (lambda " << best.lambda
              << "), mean bound " << best.bound.total << ", mean error " << best.true_error.value_or(0.0) << '\n'
              << "q minimizing the mean true error: " << result.argmin_error_q << '\n';
    return 0;
}

int cmd_validate(const Flags& f, const std::string& kind_name) {
    const auto kind = auxid::parse_validity_kind(kind_name);
    Context ctx = load(f, std::nullopt);
    const auto params = auxid::validity_from(ctx.cfg, kind);
    const int trials = ctx.cfg.trials.value_or(200);
    const auto report = auxid::run_mc_validity(kind, trials, params, ctx.seed, ctx.cfg.jobs.value_or(1));
    write_file(ctx, "validate_" + kind_name + ".csv", [&](std::ostream& os) { auxid::write_validity_csv(os, report); });
    write_metadata(ctx, "validate " + kind_name);

    std::cout << "validate " << kind_name << ": frequency " << std::setprecision(6) << report.frequency
              << " (" << report.successes << "/" << report.trials << "), standard error " << report.std_error
              << ", nominal level " << 1.0 - params.delta << '\n';
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Weighted least-squares system identification with auxiliary data"};
    app.set_version_flag("--version", AUXID_VERSION);
    app.require_subcommand(1);

    Flags flags;
    std::string scenario_id;
    std::string validity_kind;

    auto* simulate = app.add_subcommand("simulate", "simulate true and auxiliary rollouts to CSV");
    add_common(simulate, flags);
    auto* estimate = app.add_subcommand("estimate", "weighted least-squares estimate (and bound, given priors)");
    add_common(estimate, flags);
    auto* scenario = app.add_subcommand("scenario", "error vs sample size for fixed q policies");
    scenario->add_option("id", scenario_id, "1, 2 or 3")->required();
    add_common(scenario, flags);
    auto* qsweep = app.add_subcommand("qsweep", "data-dependent bound and true error over a q grid");
    add_common(qsweep, flags);
    auto* validate = app.add_subcommand("validate", "Monte-Carlo frequency of a probabilistic statement");
    validate->add_option("kind", validity_kind, "excitation or dependent-bound")->required();
    add_common(validate, flags);

    try {
        app.parse(argc, argv);
    } catch (const CLI::Success& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitConfig;
    }

    try {
        if (simulate->parsed()) return cmd_simulate(flags);
        if (estimate->parsed()) return cmd_estimate(flags);
        if (scenario->parsed()) return cmd_scenario(flags, scenario_id);
        if (qsweep->parsed()) return cmd_qsweep(flags);
        return cmd_validate(flags, validity_kind);
    } catch (const auxid::IoError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitIo;
    } catch (const auxid::NumericalError& e) {
        std::cerr << "numerical error: " << e.what() << '\n';
        return kExitNumerical;
    } catch (const auxid::Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << '\n';
        return 1;
    }
}
