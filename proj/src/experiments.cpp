#include "auxid/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstring>
#include <exception>
#include <mutex>
#include <thread>
#include <tuple>

namespace auxid {

namespace {

std::string shortest(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

double parse_number(const std::string& text, const std::string& what) {
    std::size_t used = 0;
    double v = 0;
    try {
        v = std::stod(text, &used);
    } catch (const std::exception&) {
        throw InvalidInput("cannot parse " + what + " '" + text + "'");
    }
    if (used != text.size()) {
        throw InvalidInput("trailing characters in " + what + " '" + text + "'");
    }
    return v;
}

void check_point(const SchedulePoint& s) {
    if (s.Nr < 1 || s.Tr < 1 || s.Np < 0 || s.Tp < 0 || (s.Np == 0) != (s.Tp == 0)) {
        throw InvalidInput("schedule points need N_r, T_r >= 1 and N_p, T_p both 0 or both >= 1");
    }
}

void check_pair(const SystemSpec& truth, const SystemSpec& aux) {
    truth.noise.validate();
    aux.noise.validate();
    if (truth.model.n() != aux.model.n() || truth.model.p() != aux.model.p()) {
        throw DimensionError("true and auxiliary systems have different (n, p)");
    }
}

} // namespace

double QPolicy::at(const SchedulePoint& point) const {
    if (kind == Kind::Fixed) {
        return value;
    }
    return value / std::sqrt(static_cast<double>(point.Tr));
}

std::string QPolicy::label() const {
    if (kind == Kind::Fixed) {
        return shortest(value);
    }
    return value == 1.0 ? "1/sqrt(T_r)" : shortest(value) + "/sqrt(T_r)";
}

QPolicy parse_q_policy(const std::string& text) {
    static const std::string suffix = "/sqrt(T_r)";
    QPolicy policy;
    if (text.size() > suffix.size() && text.compare(text.size() - suffix.size(), suffix.size(), suffix) == 0) {
        policy = QPolicy::inverse_sqrt_tr(parse_number(text.substr(0, text.size() - suffix.size()), "q policy"));
    } else {
        policy = QPolicy::fixed(parse_number(text, "q policy"));
    }
    if (!std::isfinite(policy.value) || policy.value < 0) {
        throw InvalidInput("q policy '" + text + "' must be finite and >= 0");
    }
    return policy;
}

void ScenarioConfig::validate() const {
    check_pair(true_system, aux_system);
    if (schedule.empty()) {
        throw InvalidInput("scenario needs at least one schedule point");
    }
    for (const auto& s : schedule) {
        check_point(s);
    }
    if (q_policies.empty()) {
        throw InvalidInput("scenario needs at least one q policy");
    }
    for (const auto& k : q_policies) {
        if (!std::isfinite(k.value) || k.value < 0) {
            throw InvalidInput("q policies must be finite and >= 0");
        }
    }
    if (num_trials < 1) {
        throw InvalidInput("number of trials must be >= 1");
    }
    if (!std::isfinite(lambda) || lambda < 0) {
        throw InvalidInput("lambda must be finite and >= 0");
    }
}

TrialData make_trial_data(const SystemSpec& true_system, const SystemSpec& aux_system, const SchedulePoint& point,
                          std::uint64_t master_seed, int trial) {
    const auto k = static_cast<std::uint64_t>(trial);
    TrialData d;
    d.true_data = simulate_rollouts(true_system.model, true_system.noise, point.Nr, point.Tr,
                                    derive_seed(master_seed, {k, 0}));
    if (point.Np > 0) {
        d.aux_data = simulate_rollouts(aux_system.model, aux_system.noise, point.Np, point.Tp,
                                       derive_seed(master_seed, {k, 1}));
    } else {
        d.aux_data = RolloutSet<double>::none(true_system.model.n(), true_system.model.p());
    }
    return d;
}

std::uint64_t dataset_hash(const BatchData<double>& data) {
    std::uint64_t h = 1469598103934665603ULL;
    auto feed = [&](const void* ptr, std::size_t bytes) {
        const auto* b = static_cast<const unsigned char*>(ptr);
        for (std::size_t i = 0; i < bytes; ++i) {
            h ^= b[i];
            h *= 1099511628211ULL;
        }
    };
    for (const MatrixXd* m : {&data.X, &data.Z, &data.W}) {
        const Eigen::Index dims[2] = {m->rows(), m->cols()};
        feed(dims, sizeof dims);
        feed(m->data(), sizeof(double) * static_cast<std::size_t>(m->size()));
    }
    return h;
}

void parallel_for(std::size_t count, unsigned jobs, const std::function<void(std::size_t)>& fn) {
    if (jobs <= 1 || count <= 1) {
        for (std::size_t i = 0; i < count; ++i) {
            fn(i);
        }
        return;
    }
    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::mutex failure_mutex;
    auto worker = [&] {
        for (std::size_t i = next++; i < count; i = next++) {
            try {
                fn(i);
            } catch (...) {
                std::lock_guard lock(failure_mutex);
                if (!failure) {
                    failure = std::current_exception();
                }
                next = count;
            }
        }
    };
    std::vector<std::thread> pool;
    const auto n = std::min<std::size_t>(jobs, count);
    for (std::size_t t = 0; t < n; ++t) {
        pool.emplace_back(worker);
    }
    for (auto& t : pool) {
        t.join();
    }
    if (failure) {
        std::rethrow_exception(failure);
    }
}

ExperimentResult run_scenario(const ScenarioConfig& cfg) {
    cfg.validate();
    const auto start = std::chrono::steady_clock::now();
    const std::size_t S = cfg.schedule.size();
    const std::size_t P = cfg.q_policies.size();
    const auto K = static_cast<std::size_t>(cfg.num_trials);

    ExperimentResult result;
    result.config = cfg;
    result.records.resize(S * P * K);
    parallel_for(S * K, cfg.jobs, [&](std::size_t task) {
        const std::size_t s = task / K;
        const int trial = static_cast<int>(task % K);
        const auto& point = cfg.schedule[s];
        const auto td = make_trial_data(cfg.true_system, cfg.aux_system, point, cfg.master_seed, trial);
        const auto data = assemble_batch(td.true_data, td.aux_data);
        for (std::size_t k = 0; k < P; ++k) {
            const double q = cfg.q_policies[k].at(point);
            const auto est = wls_estimate(data, WlsConfig{q, cfg.lambda});
            auto& rec = result.records[(s * P + k) * K + static_cast<std::size_t>(trial)];
            rec = {s, k, trial, q, estimation_error(est, cfg.true_system.model)};
        }
    });

    result.mean_error = MatrixXd::Zero(static_cast<Eigen::Index>(S), static_cast<Eigen::Index>(P));
    for (const auto& rec : result.records) {
        result.mean_error(static_cast<Eigen::Index>(rec.schedule_idx), static_cast<Eigen::Index>(rec.policy_idx)) +=
            rec.error / static_cast<double>(K);
    }
    result.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return result;
}

void QSweepConfig::validate() const {
    check_pair(true_system, aux_system);
    check_point(point);
    grid.validate();
    if (num_trials < 1) {
        throw InvalidInput("number of trials must be >= 1");
    }
    priors().validate();
}

DependentBoundPriors QSweepConfig::priors() const {
    DependentBoundPriors pr;
    pr.delta = delta;
    pr.sigma_w_true = true_system.noise.sigma_w;
    pr.sigma_w_aux = aux_system.noise.sigma_w;
    pr.delta_theta_norm =
        delta_theta_norm.value_or(spectral_norm(model_difference(true_system.model, aux_system.model)));
    pr.theta_norm = theta_norm.value_or(spectral_norm(true_system.model.theta()));
    return pr;
}

QSweepExperiment run_qsweep_experiment(const QSweepConfig& cfg) {
    cfg.validate();
    const auto priors = cfg.priors();
    const auto K = static_cast<std::size_t>(cfg.num_trials);
    std::vector<SweepResult<double>> per_trial(K);
    parallel_for(K, cfg.jobs, [&](std::size_t k) {
        const auto td = make_trial_data(cfg.true_system, cfg.aux_system, cfg.point, cfg.master_seed,
                                        static_cast<int>(k));
        per_trial[k] = sweep_with_truth(assemble_batch(td.true_data, td.aux_data), cfg.grid, priors,
                                        cfg.true_system.model);
    });

    QSweepExperiment out;
    out.config = cfg;
    auto& agg = out.aggregate.points;
    agg = per_trial.front().points;
    const double w = 1.0 / static_cast<double>(K);
    for (std::size_t i = 0; i < agg.size(); ++i) {
        auto& b = agg[i].bound;
        b.total = b.noise_term = b.model_difference_term = b.regularization_term = 0;
        b.phi_or_logdet = b.lambda_min = 0;
        b.hypothesis_satisfied = true;
        double err = 0;
        for (const auto& r : per_trial) {
            const auto& src = r.points[i].bound;
            b.total += w * src.total;
            b.noise_term += w * src.noise_term;
            b.model_difference_term += w * src.model_difference_term;
            b.regularization_term += w * src.regularization_term;
            b.phi_or_logdet += w * src.phi_or_logdet;
            b.lambda_min += w * src.lambda_min;
            b.hypothesis_satisfied = b.hypothesis_satisfied && src.hypothesis_satisfied;
            err += w * r.points[i].true_error.value();
        }
        agg[i].true_error = err;
    }
    out.aggregate.chosen = argmin_bound(agg);
    out.argmin_bound_q = out.aggregate.chosen_q();

    std::size_t best = 0;
    for (std::size_t i = 1; i < agg.size(); ++i) {
        if (std::tie(*agg[i].true_error, agg[i].q, agg[i].lambda) <
            std::tie(*agg[best].true_error, agg[best].q, agg[best].lambda)) {
            best = i;
        }
    }
    out.argmin_error_q = agg[best].q;
    for (const auto& r : per_trial) {
        out.chosen_q_per_trial.push_back(r.chosen_q());
    }
    return out;
}

ValidityKind parse_validity_kind(const std::string& text) {
    if (text == "excitation") {
        return ValidityKind::Excitation;
    }
    if (text == "dependent-bound") {
        return ValidityKind::DependentBound;
    }
    throw InvalidInput("unknown validity check '" + text + "' (expected excitation or dependent-bound)");
}

std::string to_string(ValidityKind kind) {
    return kind == ValidityKind::Excitation ? "excitation" : "dependent-bound";
}

ValidityReport run_mc_validity(ValidityKind kind, int trials, const ValidityParams& params, std::uint64_t seed,
                               unsigned jobs) {
    if (trials < 1) {
        throw InvalidInput("validity check needs trials >= 1");
    }
    check_pair(params.true_system, params.aux_system);
    check_point(params.point);
    const WlsConfig wls{params.q, params.lambda};
    wls.validate();

    double threshold = 0;
    DependentBoundPriors priors;
    if (kind == ValidityKind::Excitation) {
        BoundInputsIndependent<double> in{params.true_system.model, params.true_system.noise,
                                          params.aux_system.model, params.aux_system.noise};
        in.Nr = params.point.Nr;
        in.Tr = params.point.Tr;
        in.Np = params.point.Np;
        in.Tp = params.point.Tp;
        in.q = params.q;
        in.delta = params.delta;
        in.validate();
        threshold = excitation_threshold(in);
    } else {
        if (!(params.lambda > 0)) {
            throw InvalidInput("the data-dependent bound needs lambda > 0");
        }
        priors.delta = params.delta;
        priors.sigma_w_true = params.true_system.noise.sigma_w;
        priors.sigma_w_aux = params.aux_system.noise.sigma_w;
        priors.delta_theta_norm = spectral_norm(model_difference(params.true_system.model, params.aux_system.model));
        priors.theta_norm = spectral_norm(params.true_system.model.theta());
        priors.validate();
    }

    std::vector<char> hit(static_cast<std::size_t>(trials), 0);
    parallel_for(hit.size(), jobs, [&](std::size_t k) {
        const auto td = make_trial_data(params.true_system, params.aux_system, params.point, seed, static_cast<int>(k));
        const auto data = assemble_batch(td.true_data, td.aux_data);
        if (kind == ValidityKind::Excitation) {
            hit[k] = min_eigenvalue_sym(weighted_gram(data, params.q)) >= threshold;
        } else {
            BoundInputsDependent<double> in{GramPieces<double>::from(data), params.q, params.lambda, priors};
            const double bound = bound_data_dependent(in).total;
            hit[k] = estimation_error(wls_estimate(data, wls), params.true_system.model) <= bound;
        }
    });

    ValidityReport r;
    r.kind = kind;
    r.trials = trials;
    r.successes = static_cast<int>(std::count(hit.begin(), hit.end(), 1));
    r.frequency = static_cast<double>(r.successes) / trials;
    r.std_error = std::sqrt(r.frequency * (1.0 - r.frequency) / trials);
    return r;
}

SystemSpec reference_true_system() {
    MatrixXd a(3, 3);
    a << 0.6, 0.5, 0.4,
         0.0, 0.5, 0.4,
         0.0, 0.0, 0.4;
    MatrixXd b(3, 2);
    b << 1.0, 0.5,
         0.5, 1.0,
         0.5, 0.5;
    return {SystemModel<double>(a, b), NoiseConfig{}};
}

SystemSpec reference_aux_system(double b_shift, double sigma_w) {
    const auto base = reference_true_system();
    MatrixXd a = base.model.A();
    MatrixXd b = base.model.B();
    a(0, 0) += 0.1;
    b(0, 0) += b_shift;
    NoiseConfig noise;
    noise.sigma_w = sigma_w;
    return {SystemModel<double>(a, b), noise};
}

ScenarioConfig preset_scenario(const std::string& id) {
    ScenarioConfig cfg;
    cfg.scenario = id;
    cfg.q_policies = {QPolicy::fixed(0), QPolicy::fixed(0.3), QPolicy::fixed(0.6),
                      QPolicy::fixed(1), QPolicy::fixed(1e10), QPolicy::inverse_sqrt_tr()};
    if (id == "1") {
        for (const Eigen::Index tr : {25, 50, 100, 200, 400, 800}) {
            cfg.schedule.push_back({1, tr, 1, 3 * tr});
        }
    } else if (id == "2") {
        for (const Eigen::Index tr : {50, 100, 200, 400, 800, 1600}) {
            cfg.schedule.push_back({1, tr, 1, 2400});
        }
    } else if (id == "3") {
        for (const Eigen::Index tp : {50, 100, 200, 400, 800, 1600, 3200}) {
            cfg.schedule.push_back({1, 50, 1, tp});
        }
    } else {
        throw InvalidInput("unknown scenario '" + id + "' (expected 1, 2 or 3)");
    }
    return cfg;
}

QSweepConfig preset_qsweep(int case_id) {
    struct Case {
        double b_shift;
        double sigma_w_true;
        double sigma_w_aux;
        Eigen::Index Nr;
    };
    static const Case cases[] = {
        {0.1, 1.0, 1.0, 20}, {0.11, 1.0, 1.1, 19}, {3.0, 1.0, 1.0, 20},
        {0.1, 1.0, 5.0, 20}, {0.1, 5.0, 1.0, 20}, {0.1, 1.0, 1.0, 1200},
    };
    if (case_id < 1 || case_id > 6) {
        throw InvalidInput("q-sweep case must be 1..6");
    }
    const Case& c = cases[case_id - 1];
    QSweepConfig cfg;
    cfg.name = "case" + std::to_string(case_id);
    cfg.true_system.noise.sigma_w = c.sigma_w_true;
    cfg.aux_system = reference_aux_system(c.b_shift, c.sigma_w_aux);
    cfg.point = {c.Nr, 10, 20, 50};
    return cfg;
}

ValidityParams default_validity_params(ValidityKind kind) {
    ValidityParams p;
    if (kind == ValidityKind::Excitation) {
        p.true_system.model = SystemModel<double>(MatrixXd::Constant(1, 1, 0.5), MatrixXd::Ones(1, 1));
        p.aux_system.model = SystemModel<double>(MatrixXd::Constant(1, 1, 0.6), MatrixXd::Ones(1, 1));
        p.aux_system.noise = NoiseConfig{};
        p.point = {1, 2200, 1, 2200};
        p.q = 0.0;
        p.lambda = 0.0;
        p.delta = 0.05;
    } else {
        p.point = {20, 10, 20, 50};
        p.q = 1.0;
        p.lambda = 1.0;
        p.delta = 0.05;
    }
    return p;
}

} // namespace auxid
