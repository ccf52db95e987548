#include "auxid/csv.hpp"

#include <charconv>
#include <istream>
#include <ostream>
#include <sstream>
#include <vector>

namespace auxid {

namespace {

std::vector<std::string> split(std::string line) {
    if (!line.empty() && line.back() == '\r') {
        line.pop_back();
    }
    std::vector<std::string> out;
    std::string field;
    std::istringstream ss(line);
    while (std::getline(ss, field, ',')) {
        out.push_back(field);
    }
    if (!line.empty() && line.back() == ',') {
        out.emplace_back();
    }
    return out;
}

[[noreturn]] void bad(const std::string& source, std::size_t line, const std::string& what) {
    std::ostringstream os;
    os << source << ":" << line << ": " << what;
    throw InvalidInput(os.str());
}

double parse_field(const std::string& s, const std::string& source, std::size_t line) {
    double v = 0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
        bad(source, line, "expected a number, got '" + s + "'");
    }
    return v;
}

long parse_index(const std::string& s, const std::string& source, std::size_t line) {
    long v = 0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size() || v < 0) {
        bad(source, line, "expected a nonnegative integer, got '" + s + "'");
    }
    return v;
}

Eigen::Index count_prefix(const std::vector<std::string>& header, std::size_t& pos, char prefix) {
    Eigen::Index k = 0;
    while (pos < header.size() && header[pos] == std::string(1, prefix) + "_" + std::to_string(k + 1)) {
        ++k;
        ++pos;
    }
    return k;
}

const char* flag(bool b) { return b ? "1" : "0"; }

} // namespace

std::string format_double(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 17);
    return std::string(buf, res.ptr);
}

void write_rollouts_csv(std::ostream& os, const RolloutSet<double>& rs) {
    rs.validate();
    os << "rollout,t";
    for (Eigen::Index k = 1; k <= rs.n; ++k) {
        os << ",x_" << k;
    }
    for (Eigen::Index k = 1; k <= rs.p; ++k) {
        os << ",u_" << k;
    }
    if (rs.has_noise) {
        for (Eigen::Index k = 1; k <= rs.n; ++k) {
            os << ",w_" << k;
        }
    }
    os << '\n';
    for (std::size_t i = 0; i < rs.rollouts.size(); ++i) {
        const auto& r = rs.rollouts[i];
        for (Eigen::Index t = 0; t <= rs.length; ++t) {
            const bool last = t == rs.length;
            os << i << ',' << t;
            for (Eigen::Index k = 0; k < rs.n; ++k) {
                os << ',' << format_double(r.states(k, t));
            }
            for (Eigen::Index k = 0; k < rs.p; ++k) {
                os << ',';
                if (!last) {
                    os << format_double(r.inputs(k, t));
                }
            }
            if (rs.has_noise) {
                for (Eigen::Index k = 0; k < rs.n; ++k) {
                    os << ',';
                    if (!last) {
                        os << format_double(r.noise(k, t));
                    }
                }
            }
            os << '\n';
        }
    }
}

RolloutSet<double> read_rollouts_csv(std::istream& is, const std::string& source) {
    std::string line;
    std::size_t lineno = 1;
    if (!std::getline(is, line)) {
        bad(source, lineno, "missing header row");
    }
    const auto header = split(line);
    if (header.size() < 2 || header[0] != "rollout" || header[1] != "t") {
        bad(source, lineno, "header must start with 'rollout,t'");
    }
    std::size_t pos = 2;
    const Eigen::Index n = count_prefix(header, pos, 'x');
    const Eigen::Index p = count_prefix(header, pos, 'u');
    const Eigen::Index nw = count_prefix(header, pos, 'w');
    if (n < 1 || p < 1 || pos != header.size() || (nw != 0 && nw != n)) {
        bad(source, lineno, "header must be rollout,t,x_1..x_n,u_1..u_p[,w_1..w_n]");
    }

    // Collect per-rollout columns, then check shapes.
    struct Pending {
        std::vector<std::vector<std::string>> rows;
        std::size_t first_line = 0;
    };
    std::vector<Pending> pending;
    while (std::getline(is, line)) {
        ++lineno;
        if (line.empty() || line == "\r") {
            continue;
        }
        auto fields = split(line);
        if (fields.size() != header.size()) {
            bad(source, lineno, "expected " + std::to_string(header.size()) + " fields, got " +
                                    std::to_string(fields.size()));
        }
        const auto rollout = static_cast<std::size_t>(parse_index(fields[0], source, lineno));
        const auto t = static_cast<std::size_t>(parse_index(fields[1], source, lineno));
        if (rollout == pending.size()) {
            pending.push_back({{}, lineno});
        } else if (rollout + 1 != pending.size()) {
            bad(source, lineno, "rollouts must be numbered 0, 1, ... in order");
        }
        auto& cur = pending.back();
        if (t != cur.rows.size()) {
            bad(source, lineno, "time index must count up from 0 within a rollout");
        }
        cur.rows.push_back(std::move(fields));
    }

    RolloutSet<double> rs;
    rs.n = n;
    rs.p = p;
    rs.has_noise = nw == n;
    if (pending.empty()) {
        return rs;
    }
    const auto T = static_cast<Eigen::Index>(pending.front().rows.size()) - 1;
    if (T < 1) {
        bad(source, pending.front().first_line, "rollouts need at least one transition");
    }
    rs.length = T;
    for (const auto& pr : pending) {
        if (static_cast<Eigen::Index>(pr.rows.size()) - 1 != T) {
            bad(source, pr.first_line, "all rollouts must have the same length");
        }
        Rollout<double> r;
        r.states.resize(n, T + 1);
        r.inputs.resize(p, T);
        if (rs.has_noise) {
            r.noise.resize(n, T);
        }
        for (Eigen::Index t = 0; t <= T; ++t) {
            const auto& f = pr.rows[static_cast<std::size_t>(t)];
            const std::size_t ln = pr.first_line + static_cast<std::size_t>(t);
            for (Eigen::Index k = 0; k < n; ++k) {
                r.states(k, t) = parse_field(f[static_cast<std::size_t>(2 + k)], source, ln);
            }
            for (Eigen::Index k = 0; k < p + nw; ++k) {
                const auto& cell = f[static_cast<std::size_t>(2 + n + k)];
                if (t == T) {
                    if (!cell.empty()) {
                        bad(source, ln, "the final row of a rollout must leave u and w empty");
                    }
                    continue;
                }
                const double v = parse_field(cell, source, ln);
                if (k < p) {
                    r.inputs(k, t) = v;
                } else {
                    r.noise(k - p, t) = v;
                }
            }
        }
        rs.rollouts.push_back(std::move(r));
    }
    return rs;
}

void write_estimate_csv(std::ostream& os, const WlsEstimate<double>& est, std::uint64_t seed) {
    const auto n = est.theta.rows();
    const auto p = est.theta.cols() - n;
    os << "n=" << n << ",p=" << p << ",q=" << format_double(est.config.q)
       << ",lambda=" << format_double(est.config.lambda) << ",seed=" << seed << '\n';
    for (Eigen::Index i = 0; i < est.theta.rows(); ++i) {
        for (Eigen::Index j = 0; j < est.theta.cols(); ++j) {
            os << (j ? "," : "") << format_double(est.theta(i, j));
        }
        os << '\n';
    }
}

std::string bound_csv_header() {
    return "q,lambda,delta,total,noise_term,model_difference_term,regularization_term,hypothesis_satisfied,"
           "phi_or_logdet,lambda_min";
}

std::string bound_csv_row(const BoundReport<double>& r) {
    std::ostringstream os;
    os << format_double(r.q) << ',' << format_double(r.lambda) << ',' << format_double(r.delta) << ','
       << format_double(r.total) << ',' << format_double(r.noise_term) << ','
       << format_double(r.model_difference_term) << ',' << format_double(r.regularization_term) << ','
       << flag(r.hypothesis_satisfied) << ',' << format_double(r.phi_or_logdet) << ','
       << format_double(r.lambda_min);
    return os.str();
}

void write_sweep_csv(std::ostream& os, const SweepResult<double>& result) {
    os << bound_csv_header() << ",true_error,chosen\n";
    auto row = [&](const SweepPoint<double>& pt, bool chosen) {
        os << bound_csv_row(pt.bound) << ',' << (pt.true_error ? format_double(*pt.true_error) : "") << ','
           << flag(chosen) << '\n';
    };
    for (const auto& pt : result.points) {
        row(pt, false);
    }
    row(result.best(), true);
}

void write_experiment_csv(std::ostream& os, const ExperimentResult& result) {
    const auto& cfg = result.config;
    os << "scenario,schedule_idx,N_r,T_r,N_p,T_p,q_policy,q_value,lambda,trial,error\n";
    for (const auto& rec : result.records) {
        const auto& s = cfg.schedule[rec.schedule_idx];
        os << cfg.scenario << ',' << rec.schedule_idx << ',' << s.Nr << ',' << s.Tr << ',' << s.Np << ',' << s.Tp
           << ',' << cfg.q_policies[rec.policy_idx].label() << ',' << format_double(rec.q_value) << ','
           << format_double(cfg.lambda) << ',' << rec.trial << ',' << format_double(rec.error) << '\n';
    }
}

void write_experiment_means_csv(std::ostream& os, const ExperimentResult& result) {
    const auto& cfg = result.config;
    os << "scenario,schedule_idx,N_r,T_r,N_p,T_p,q_policy,mean_error\n";
    for (std::size_t i = 0; i < cfg.schedule.size(); ++i) {
        const auto& s = cfg.schedule[i];
        for (std::size_t k = 0; k < cfg.q_policies.size(); ++k) {
            os << cfg.scenario << ',' << i << ',' << s.Nr << ',' << s.Tr << ',' << s.Np << ',' << s.Tp << ','
               << cfg.q_policies[k].label() << ',' << format_double(result.mean(i, k)) << '\n';
        }
    }
}

void write_validity_csv(std::ostream& os, const ValidityReport& report) {
    os << "kind,trials,successes,frequency,std_error\n"
       << to_string(report.kind) << ',' << report.trials << ',' << report.successes << ','
       << format_double(report.frequency) << ',' << format_double(report.std_error) << '\n';
}

} // namespace auxid
