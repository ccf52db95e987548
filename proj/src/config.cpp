#include "auxid/config.hpp"

#include <algorithm>
#include <fstream>
#include <limits>
#include <sstream>

namespace auxid {

using nlohmann::json;

namespace {

[[noreturn]] void fail(const std::string& path, const std::string& what) {
    throw ConfigError("config key '" + path + "': " + what);
}

std::string join(const std::string& path, const std::string& key) { return path.empty() ? key : path + "." + key; }

std::string index(const std::string& path, std::size_t i) { return path + "[" + std::to_string(i) + "]"; }

void require_object(const json& j, const std::string& path, std::initializer_list<const char*> allowed) {
    if (!j.is_object()) {
        fail(path.empty() ? "<root>" : path, "expected an object");
    }
    for (const auto& item : j.items()) {
        if (std::none_of(allowed.begin(), allowed.end(), [&](const char* k) { return item.key() == k; })) {
            std::string keys;
            for (const char* k : allowed) {
                keys += keys.empty() ? k : std::string(", ") + k;
            }
            fail(join(path, item.key()), "unknown key (allowed here: " + keys + ")");
        }
    }
}

double number(const json& j, const std::string& path) {
    if (!j.is_number()) {
        fail(path, "expected a number");
    }
    const double v = j.get<double>();
    if (!std::isfinite(v)) {
        fail(path, "expected a finite number");
    }
    return v;
}

double nonnegative(const json& j, const std::string& path) {
    const double v = number(j, path);
    if (v < 0) {
        fail(path, "must be >= 0");
    }
    return v;
}

std::int64_t integer(const json& j, const std::string& path, std::int64_t lo) {
    if (!j.is_number_integer()) {
        fail(path, "expected an integer");
    }
    const auto v = j.get<std::int64_t>();
    if (v < lo) {
        fail(path, "must be >= " + std::to_string(lo));
    }
    return v;
}

std::string text(const json& j, const std::string& path) {
    if (!j.is_string()) {
        fail(path, "expected a string");
    }
    return j.get<std::string>();
}

bool boolean(const json& j, const std::string& path) {
    if (!j.is_boolean()) {
        fail(path, "expected true or false");
    }
    return j.get<bool>();
}

MatrixXd matrix(const json& j, const std::string& path) {
    if (!j.is_array() || j.empty()) {
        fail(path, "expected a non-empty array of rows");
    }
    const std::size_t rows = j.size();
    if (!j[0].is_array() || j[0].empty()) {
        fail(index(path, 0), "expected a non-empty array of numbers");
    }
    const std::size_t cols = j[0].size();
    MatrixXd m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    for (std::size_t r = 0; r < rows; ++r) {
        const auto& row = j[r];
        if (!row.is_array() || row.size() != cols) {
            fail(index(path, r), "expected a row of " + std::to_string(cols) + " numbers");
        }
        for (std::size_t c = 0; c < cols; ++c) {
            m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = number(row[c], index(index(path, r), c));
        }
    }
    return m;
}

json matrix_json(const MatrixXd& m) {
    json rows = json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        json row = json::array();
        for (Eigen::Index c = 0; c < m.cols(); ++c) {
            row.push_back(m(r, c));
        }
        rows.push_back(row);
    }
    return rows;
}

json system_json(const SystemSpec& s) {
    return {{"A", matrix_json(s.model.A())},
            {"B", matrix_json(s.model.B())},
            {"noise", {{"sigma_x", s.noise.sigma_x}, {"sigma_u", s.noise.sigma_u}, {"sigma_w", s.noise.sigma_w}}}};
}

json point_json(const SchedulePoint& s) { return {{"N_r", s.Nr}, {"T_r", s.Tr}, {"N_p", s.Np}, {"T_p", s.Tp}}; }

NoiseConfig noise(const json& j, const std::string& path) {
    require_object(j, path, {"sigma_x", "sigma_u", "sigma_w", "noiseless_override"});
    NoiseConfig cfg;
    if (j.contains("sigma_x")) cfg.sigma_x = nonnegative(j["sigma_x"], join(path, "sigma_x"));
    if (j.contains("sigma_u")) cfg.sigma_u = nonnegative(j["sigma_u"], join(path, "sigma_u"));
    if (j.contains("sigma_w")) cfg.sigma_w = nonnegative(j["sigma_w"], join(path, "sigma_w"));
    if (j.contains("noiseless_override")) {
        cfg.noiseless_override = boolean(j["noiseless_override"], join(path, "noiseless_override"));
    }
    try {
        cfg.validate();
    } catch (const InvalidInput& e) {
        fail(path, e.what());
    }
    return cfg;
}

SystemSpec system(const json& j, const std::string& path) {
    require_object(j, path, {"A", "B", "noise"});
    if (!j.contains("A")) fail(join(path, "A"), "missing");
    if (!j.contains("B")) fail(join(path, "B"), "missing");
    const MatrixXd a = matrix(j["A"], join(path, "A"));
    const MatrixXd b = matrix(j["B"], join(path, "B"));
    if (a.rows() != a.cols()) {
        fail(join(path, "A"), "must be square, got " + std::to_string(a.rows()) + "x" + std::to_string(a.cols()));
    }
    if (b.rows() != a.rows()) {
        fail(join(path, "B"), "has " + std::to_string(b.rows()) + " rows but " + join(path, "A") + " is " +
                                  std::to_string(a.rows()) + "x" + std::to_string(a.cols()));
    }
    const NoiseConfig nc = j.contains("noise") ? noise(j["noise"], join(path, "noise")) : NoiseConfig{};
    return {SystemModel<double>(a, b), nc};
}

SchedulePoint point(const json& j, const std::string& path) {
    require_object(j, path, {"N_r", "T_r", "N_p", "T_p"});
    SchedulePoint s;
    for (const char* key : {"N_r", "T_r", "N_p", "T_p"}) {
        if (!j.contains(key)) {
            fail(join(path, key), "missing");
        }
    }
    s.Nr = integer(j["N_r"], join(path, "N_r"), 1);
    s.Tr = integer(j["T_r"], join(path, "T_r"), 1);
    s.Np = integer(j["N_p"], join(path, "N_p"), 0);
    s.Tp = integer(j["T_p"], join(path, "T_p"), 0);
    if ((s.Np == 0) != (s.Tp == 0)) {
        fail(path, "N_p and T_p must both be 0 or both be >= 1");
    }
    return s;
}

template <typename Fn>
void optional_key(const json& j, const std::string& path, const char* key, Fn&& fn) {
    if (j.contains(key)) {
        fn(j[key], join(path, key));
    }
}

RunConfig parse(const json& doc) {
    require_object(doc, "",
                   {"preset", "seed", "true_system", "aux_system", "initial_state", "data", "estimator", "bounds",
                    "rollouts", "output", "experiment", "sweep"});
    RunConfig cfg;
    cfg.document = doc;
    optional_key(doc, "", "preset", [&](const json& j, const std::string& p) { cfg.preset = text(j, p); });
    optional_key(doc, "", "seed", [&](const json& j, const std::string& p) {
        if (!j.is_number_unsigned()) {
            fail(p, "expected a nonnegative integer");
        }
        cfg.seed = j.get<std::uint64_t>();
    });
    optional_key(doc, "", "true_system", [&](const json& j, const std::string& p) { cfg.true_system = system(j, p); });
    optional_key(doc, "", "aux_system", [&](const json& j, const std::string& p) { cfg.aux_system = system(j, p); });
    if (cfg.true_system && cfg.aux_system &&
        (cfg.true_system->model.n() != cfg.aux_system->model.n() ||
         cfg.true_system->model.p() != cfg.aux_system->model.p())) {
        fail("aux_system", "(n, p) differs from true_system");
    }
    optional_key(doc, "", "initial_state", [&](const json& j, const std::string& p) {
        if (!j.is_array() || j.empty()) {
            fail(p, "expected a non-empty array of numbers");
        }
        VectorXd x(static_cast<Eigen::Index>(j.size()));
        for (std::size_t i = 0; i < j.size(); ++i) {
            x(static_cast<Eigen::Index>(i)) = number(j[i], index(p, i));
        }
        if (cfg.true_system && x.size() != cfg.true_system->model.n()) {
            fail(p, "has " + std::to_string(x.size()) + " entries but true_system.A is " +
                        std::to_string(cfg.true_system->model.n()) + "x" + std::to_string(cfg.true_system->model.n()));
        }
        cfg.initial_state = x;
    });
    optional_key(doc, "", "data", [&](const json& j, const std::string& p) { cfg.data = point(j, p); });
    optional_key(doc, "", "estimator", [&](const json& j, const std::string& p) {
        require_object(j, p, {"q", "lambda"});
        optional_key(j, p, "q", [&](const json& v, const std::string& k) { cfg.q = nonnegative(v, k); });
        optional_key(j, p, "lambda", [&](const json& v, const std::string& k) { cfg.lambda = nonnegative(v, k); });
    });
    optional_key(doc, "", "bounds", [&](const json& j, const std::string& p) {
        require_object(j, p, {"delta", "c", "delta_theta_norm", "theta_norm", "sigma_w_true", "sigma_w_aux"});
        optional_key(j, p, "delta", [&](const json& v, const std::string& k) {
            cfg.delta = number(v, k);
            if (!(*cfg.delta > 0 && *cfg.delta < 1)) {
                fail(k, "must lie in (0, 1)");
            }
        });
        optional_key(j, p, "c", [&](const json& v, const std::string& k) {
            cfg.c = number(v, k);
            if (!(*cfg.c > 0)) {
                fail(k, "must be > 0");
            }
        });
        optional_key(j, p, "delta_theta_norm",
                     [&](const json& v, const std::string& k) { cfg.delta_theta_norm = nonnegative(v, k); });
        optional_key(j, p, "theta_norm", [&](const json& v, const std::string& k) { cfg.theta_norm = nonnegative(v, k); });
        optional_key(j, p, "sigma_w_true",
                     [&](const json& v, const std::string& k) { cfg.sigma_w_true = nonnegative(v, k); });
        optional_key(j, p, "sigma_w_aux", [&](const json& v, const std::string& k) { cfg.sigma_w_aux = nonnegative(v, k); });
    });
    optional_key(doc, "", "rollouts", [&](const json& j, const std::string& p) {
        require_object(j, p, {"true_csv", "aux_csv"});
        if (!j.contains("true_csv")) {
            fail(join(p, "true_csv"), "missing");
        }
        cfg.true_csv = text(j["true_csv"], join(p, "true_csv"));
        optional_key(j, p, "aux_csv", [&](const json& v, const std::string& k) { cfg.aux_csv = text(v, k); });
    });
    optional_key(doc, "", "output", [&](const json& j, const std::string& p) {
        require_object(j, p, {"dir"});
        optional_key(j, p, "dir", [&](const json& v, const std::string& k) { cfg.output_dir = text(v, k); });
    });
    optional_key(doc, "", "experiment", [&](const json& j, const std::string& p) {
        require_object(j, p, {"trials", "jobs", "schedule", "q_policies"});
        optional_key(j, p, "trials", [&](const json& v, const std::string& k) {
            cfg.trials = static_cast<int>(std::min<std::int64_t>(integer(v, k, 1), std::numeric_limits<int>::max()));
        });
        optional_key(j, p, "jobs", [&](const json& v, const std::string& k) {
            cfg.jobs = static_cast<unsigned>(std::min<std::int64_t>(integer(v, k, 1), 1024));
        });
        optional_key(j, p, "schedule", [&](const json& v, const std::string& k) {
            if (!v.is_array() || v.empty()) {
                fail(k, "expected a non-empty array of schedule points");
            }
            std::vector<SchedulePoint> pts;
            for (std::size_t i = 0; i < v.size(); ++i) {
                pts.push_back(point(v[i], index(k, i)));
            }
            cfg.schedule = pts;
        });
        optional_key(j, p, "q_policies", [&](const json& v, const std::string& k) {
            if (!v.is_array() || v.empty()) {
                fail(k, "expected a non-empty array");
            }
            std::vector<QPolicy> policies;
            for (std::size_t i = 0; i < v.size(); ++i) {
                const auto at = index(k, i);
                try {
                    policies.push_back(v[i].is_string() ? parse_q_policy(v[i].get<std::string>())
                                                        : QPolicy::fixed(nonnegative(v[i], at)));
                } catch (const InvalidInput& e) {
                    fail(at, e.what());
                }
            }
            cfg.q_policies = policies;
        });
    });
    optional_key(doc, "", "sweep", [&](const json& j, const std::string& p) {
        require_object(j, p, {"q_min", "q_max", "q_step", "lambda_values"});
        SweepGrid grid;
        optional_key(j, p, "q_min", [&](const json& v, const std::string& k) { grid.q_min = nonnegative(v, k); });
        optional_key(j, p, "q_max", [&](const json& v, const std::string& k) { grid.q_max = nonnegative(v, k); });
        optional_key(j, p, "q_step", [&](const json& v, const std::string& k) { grid.q_step = number(v, k); });
        optional_key(j, p, "lambda_values", [&](const json& v, const std::string& k) {
            if (!v.is_array() || v.empty()) {
                fail(k, "expected a non-empty array of numbers");
            }
            grid.lambda_values.clear();
            for (std::size_t i = 0; i < v.size(); ++i) {
                grid.lambda_values.push_back(number(v[i], index(k, i)));
            }
        });
        try {
            grid.validate();
        } catch (const InvalidInput& e) {
            fail(p, e.what());
        }
        cfg.sweep = grid;
    });
    return cfg;
}

} // namespace

std::vector<std::string> preset_names() {
    std::vector<std::string> names{"paper-va"};
    for (int k = 1; k <= 6; ++k) {
        names.push_back("paper-vb-case" + std::to_string(k));
    }
    return names;
}

json preset_document(const std::string& name) {
    if (name == "paper-va") {
        return {{"true_system", system_json(reference_true_system())},
                {"aux_system", system_json(reference_aux_system())},
                {"data", point_json({1, 100, 1, 300})},
                {"estimator", {{"q", 1.0}, {"lambda", 0.0}}}};
    }
    static const std::string prefix = "paper-vb-case";
    if (name.rfind(prefix, 0) == 0 && name.size() == prefix.size() + 1) {
        const int k = name.back() - '0';
        if (k >= 1 && k <= 6) {
            const auto q = preset_qsweep(k);
            const auto pr = q.priors();
            return {{"true_system", system_json(q.true_system)},
                    {"aux_system", system_json(q.aux_system)},
                    {"data", point_json(q.point)},
                    {"estimator", {{"q", 1.0}, {"lambda", 1.0}}},
                    {"bounds", {{"delta", q.delta}, {"delta_theta_norm", pr.delta_theta_norm},
                                {"theta_norm", pr.theta_norm}}},
                    {"experiment", {{"trials", q.num_trials}}},
                    {"sweep", {{"q_min", q.grid.q_min}, {"q_max", q.grid.q_max}, {"q_step", q.grid.q_step},
                               {"lambda_values", q.grid.lambda_values}}}};
        }
    }
    std::string known;
    for (const auto& n : preset_names()) {
        known += (known.empty() ? "" : ", ") + n;
    }
    throw ConfigError("config key 'preset': unknown preset '" + name + "' (known: " + known + ")");
}

json parse_json_text(const std::string& body, const std::string& source) {
    try {
        return json::parse(body);
    } catch (const json::parse_error& e) {
        const auto upto = std::min<std::size_t>(e.byte == 0 ? 0 : e.byte - 1, body.size());
        const auto line = 1 + std::count(body.begin(), body.begin() + static_cast<std::ptrdiff_t>(upto), '\n');
        const auto last_nl = body.rfind('\n', upto == 0 ? 0 : upto - 1);
        const auto column = upto - (last_nl == std::string::npos || upto == 0 ? 0 : last_nl + 1) + 1;
        std::ostringstream os;
        os << source << ":" << line << ":" << column << ": invalid JSON (" << e.what() << ")";
        throw ConfigError(os.str());
    }
}

RunConfig build_run_config(const json& user, const std::optional<std::string>& fallback_preset) {
    if (!user.is_object()) {
        throw ConfigError("config root must be a JSON object");
    }
    std::optional<std::string> preset = fallback_preset;
    if (user.contains("preset")) {
        preset = text(user["preset"], "preset");
    }
    json doc = preset ? preset_document(*preset) : json::object();
    doc.merge_patch(user);
    if (preset) {
        doc["preset"] = *preset;
    }
    return parse(doc);
}

RunConfig load_run_config(const std::filesystem::path& path, const std::optional<std::string>& fallback_preset) {
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw IoError("cannot open config file '" + path.string() + "'");
    }
    std::ostringstream body;
    body << in.rdbuf();
    return build_run_config(parse_json_text(body.str(), path.string()), fallback_preset);
}

ScenarioConfig scenario_from(const RunConfig& cfg, const std::string& id) {
    ScenarioConfig s = preset_scenario(id);
    if (cfg.true_system) s.true_system = *cfg.true_system;
    if (cfg.aux_system) s.aux_system = *cfg.aux_system;
    if (cfg.schedule) s.schedule = *cfg.schedule;
    if (cfg.q_policies) s.q_policies = *cfg.q_policies;
    if (cfg.trials) s.num_trials = *cfg.trials;
    if (cfg.lambda) s.lambda = *cfg.lambda;
    if (cfg.seed) s.master_seed = *cfg.seed;
    if (cfg.jobs) s.jobs = *cfg.jobs;
    return s;
}

QSweepConfig qsweep_from(const RunConfig& cfg) {
    if (!cfg.true_system || !cfg.aux_system || !cfg.data) {
        throw ConfigError("qsweep needs true_system, aux_system and data (or a paper-vb-case preset)");
    }
    QSweepConfig q;
    q.name = cfg.preset.value_or("custom");
    q.true_system = *cfg.true_system;
    q.aux_system = *cfg.aux_system;
    q.point = *cfg.data;
    if (cfg.sweep) q.grid = *cfg.sweep;
    if (cfg.delta) q.delta = *cfg.delta;
    q.delta_theta_norm = cfg.delta_theta_norm;
    q.theta_norm = cfg.theta_norm;
    if (cfg.trials) q.num_trials = *cfg.trials;
    if (cfg.seed) q.master_seed = *cfg.seed;
    if (cfg.jobs) q.jobs = *cfg.jobs;
    return q;
}

ValidityParams validity_from(const RunConfig& cfg, ValidityKind kind) {
    ValidityParams p = default_validity_params(kind);
    if (cfg.true_system) p.true_system = *cfg.true_system;
    if (cfg.aux_system) p.aux_system = *cfg.aux_system;
    if (cfg.data) p.point = *cfg.data;
    if (cfg.q) p.q = *cfg.q;
    if (cfg.lambda) p.lambda = *cfg.lambda;
    if (cfg.delta) p.delta = *cfg.delta;
    return p;
}

} // namespace auxid
