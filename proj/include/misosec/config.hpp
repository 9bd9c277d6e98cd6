#pragma once

// JSON scenario configuration and run-record emission for the CLI.
// Parsing is fail-closed: unknown fields anywhere in the document are
// rejected with a field-path diagnostic, so typos in experiment configs
// cannot silently fall back to defaults.

#include <json.hpp>

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "misosec/grad_kkt.hpp"
#include "misosec/hermitian.hpp"

namespace misosec {

using nlohmann::json;

struct ConfigError : std::runtime_error {
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

namespace cfg_detail {

inline void check_keys(const json& j, std::initializer_list<const char*> allowed,
                       const std::string& context) {
    if (!j.is_object()) throw ConfigError(context + ": expected an object");
    for (const auto& [key, value] : j.items()) {
        bool ok = false;
        for (const char* a : allowed) {
            if (key == a) { ok = true; break; }
        }
        if (!ok) throw ConfigError(context + ": unknown field '" + key + "'");
    }
}

inline double require_number(const json& j, const std::string& context) {
    if (!j.is_number()) throw ConfigError(context + ": expected a number");
    return j.get<double>();
}

// a scalar entry is either a plain number (real) or a [re, im] pair
inline Complex parse_complex(const json& j, const std::string& context) {
    if (j.is_number()) return {j.get<double>(), 0.0};
    if (j.is_array() && j.size() == 2 && j[0].is_number() && j[1].is_number()) {
        return {j[0].get<double>(), j[1].get<double>()};
    }
    throw ConfigError(context + ": expected a number or [re, im] pair");
}

} // namespace cfg_detail

struct JakesSpec {
    double phi = 0.0;
    double d_over_lambda = 0.5;
    double scale = 1.0;
};

struct CovarianceSpec {
    std::optional<JakesSpec> jakes;
    std::optional<ComplexMatrix> explicit_matrix;

    static CovarianceSpec parse(const json& j, const std::string& context) {
        cfg_detail::check_keys(j, {"jakes", "explicit"}, context);
        CovarianceSpec out;
        if (j.contains("jakes") == j.contains("explicit")) {
            throw ConfigError(context + ": specify exactly one of 'jakes' or 'explicit'");
        }
        if (j.contains("jakes")) {
            const json& jk = j["jakes"];
            cfg_detail::check_keys(jk, {"phi", "d_over_lambda", "scale"}, context + ".jakes");
            JakesSpec spec;
            if (!jk.contains("phi")) throw ConfigError(context + ".jakes: missing 'phi'");
            spec.phi = cfg_detail::require_number(jk["phi"], context + ".jakes.phi");
            if (jk.contains("d_over_lambda")) {
                spec.d_over_lambda =
                    cfg_detail::require_number(jk["d_over_lambda"], context + ".jakes.d_over_lambda");
            }
            if (jk.contains("scale")) {
                spec.scale = cfg_detail::require_number(jk["scale"], context + ".jakes.scale");
            }
            out.jakes = spec;
        } else {
            const json& rows = j["explicit"];
            if (!rows.is_array() || rows.empty()) {
                throw ConfigError(context + ".explicit: expected a non-empty array of rows");
            }
            const auto n = static_cast<Eigen::Index>(rows.size());
            ComplexMatrix m(n, n);
            for (Eigen::Index r = 0; r < n; ++r) {
                const json& row = rows[static_cast<std::size_t>(r)];
                if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != n) {
                    throw ConfigError(context + ".explicit: matrix must be square");
                }
                for (Eigen::Index c = 0; c < n; ++c) {
                    m(r, c) = cfg_detail::parse_complex(
                        row[static_cast<std::size_t>(c)],
                        context + ".explicit[" + std::to_string(r) + "][" + std::to_string(c) + "]");
                }
            }
            out.explicit_matrix = std::move(m);
        }
        return out;
    }

    HermitianMatrix build(int n_t, const std::string& context) const {
        if (jakes) {
            return jakes_covariance(n_t, jakes->phi, jakes->d_over_lambda, jakes->scale);
        }
        if (explicit_matrix->rows() != n_t) {
            throw ConfigError(context + ": explicit matrix size does not match n_T");
        }
        return HermitianMatrix(*explicit_matrix);
    }
};

struct ScenarioConfig {
    int n_t = 0;
    std::vector<double> snr_db; // one or more values; first is the default
    ChannelKnowledge mode = ChannelKnowledge::Statistical;
    std::optional<CovarianceSpec> sigma_R;
    CovarianceSpec sigma_E;
    std::optional<ComplexVector> h_R_explicit;
    std::optional<std::uint64_t> h_R_sample_seed;
    SolverOptions solver;
    int n_starts = 1;
    std::uint64_t solver_seed = 1;
    long mc_samples = 1'000'000;
    std::uint64_t mc_seed = 2;
    json raw; // scenario echo for records

    static ScenarioConfig parse(const json& j) {
        cfg_detail::check_keys(
            j, {"n_T", "snr_db", "mode", "sigma_R", "sigma_E", "h_R", "solver", "mc"}, "config");
        ScenarioConfig c;
        c.raw = j;
        if (!j.contains("n_T") || !j["n_T"].is_number_integer()) {
            throw ConfigError("config.n_T: required integer");
        }
        c.n_t = j["n_T"].get<int>();
        if (c.n_t < 1) throw ConfigError("config.n_T: must be >= 1");

        if (!j.contains("snr_db")) throw ConfigError("config.snr_db: required");
        if (j["snr_db"].is_number()) {
            c.snr_db.push_back(j["snr_db"].get<double>());
        } else if (j["snr_db"].is_array() && !j["snr_db"].empty()) {
            for (const auto& v : j["snr_db"]) {
                c.snr_db.push_back(cfg_detail::require_number(v, "config.snr_db[]"));
            }
        } else {
            throw ConfigError("config.snr_db: expected a number or non-empty array");
        }

        if (!j.contains("mode") || !j["mode"].is_string()) {
            throw ConfigError("config.mode: required string");
        }
        const std::string mode = j["mode"].get<std::string>();
        if (mode == "statistical") {
            c.mode = ChannelKnowledge::Statistical;
        } else if (mode == "full_csi") {
            c.mode = ChannelKnowledge::FullCsi;
        } else {
            throw ConfigError("config.mode: must be 'statistical' or 'full_csi'");
        }

        if (j.contains("sigma_R")) {
            c.sigma_R = CovarianceSpec::parse(j["sigma_R"], "config.sigma_R");
        } else if (c.mode == ChannelKnowledge::Statistical) {
            throw ConfigError("config.sigma_R: required in statistical mode");
        }
        if (!j.contains("sigma_E")) throw ConfigError("config.sigma_E: required");
        c.sigma_E = CovarianceSpec::parse(j["sigma_E"], "config.sigma_E");

        if (c.mode == ChannelKnowledge::FullCsi) {
            if (!j.contains("h_R")) throw ConfigError("config.h_R: required in full_csi mode");
            const json& h = j["h_R"];
            if (h.is_array()) {
                ComplexVector v(static_cast<Eigen::Index>(h.size()));
                for (Eigen::Index i = 0; i < v.size(); ++i) {
                    v(i) = cfg_detail::parse_complex(h[static_cast<std::size_t>(i)],
                                                     "config.h_R[" + std::to_string(i) + "]");
                }
                c.h_R_explicit = std::move(v);
            } else if (h.is_object()) {
                cfg_detail::check_keys(h, {"sample"}, "config.h_R");
                if (!h.contains("sample")) throw ConfigError("config.h_R: expected 'sample'");
                cfg_detail::check_keys(h["sample"], {"seed"}, "config.h_R.sample");
                if (!h["sample"].contains("seed") || !h["sample"]["seed"].is_number_integer()) {
                    throw ConfigError("config.h_R.sample.seed: required integer");
                }
                c.h_R_sample_seed = h["sample"]["seed"].get<std::uint64_t>();
            } else {
                throw ConfigError("config.h_R: expected an array or {sample: {seed}}");
            }
        } else if (j.contains("h_R")) {
            throw ConfigError("config.h_R: only allowed in full_csi mode");
        }

        if (j.contains("solver")) {
            const json& s = j["solver"];
            cfg_detail::check_keys(s, {"beta", "tol", "max_iters", "n_starts", "seed"},
                                   "config.solver");
            if (s.contains("beta")) c.solver.beta = cfg_detail::require_number(s["beta"], "config.solver.beta");
            if (s.contains("tol")) c.solver.tol = cfg_detail::require_number(s["tol"], "config.solver.tol");
            if (s.contains("max_iters")) {
                if (!s["max_iters"].is_number_integer()) {
                    throw ConfigError("config.solver.max_iters: expected integer");
                }
                c.solver.max_iters = s["max_iters"].get<int>();
            }
            if (s.contains("n_starts")) {
                if (!s["n_starts"].is_number_integer()) {
                    throw ConfigError("config.solver.n_starts: expected integer");
                }
                c.n_starts = s["n_starts"].get<int>();
            }
            if (s.contains("seed")) {
                if (!s["seed"].is_number_integer()) throw ConfigError("config.solver.seed: expected integer");
                c.solver_seed = s["seed"].get<std::uint64_t>();
            }
        }
        if (j.contains("mc")) {
            const json& m = j["mc"];
            cfg_detail::check_keys(m, {"n_samples", "seed"}, "config.mc");
            if (m.contains("n_samples")) {
                if (!m["n_samples"].is_number_integer()) {
                    throw ConfigError("config.mc.n_samples: expected integer");
                }
                c.mc_samples = m["n_samples"].get<long>();
            }
            if (m.contains("seed")) {
                if (!m["seed"].is_number_integer()) throw ConfigError("config.mc.seed: expected integer");
                c.mc_seed = m["seed"].get<std::uint64_t>();
            }
        }
        return c;
    }

    // sampled h_R ~ CN(0, Sigma_R) (white if no sigma_R is configured)
    ComplexVector realize_h_R() const {
        if (h_R_explicit) {
            if (h_R_explicit->size() != n_t) {
                throw ConfigError("config.h_R: length does not match n_T");
            }
            return *h_R_explicit;
        }
        GaussianSampler rng(*h_R_sample_seed);
        ComplexVector hw = sample_standard_complex_gaussian(n_t, rng);
        if (sigma_R) {
            return matrix_sqrt(sigma_R->build(n_t, "config.sigma_R")).matrix() * hw;
        }
        return hw;
    }

    Scenario to_scenario(double snr_db_value) const {
        const double rho = std::pow(10.0, snr_db_value / 10.0);
        if (mode == ChannelKnowledge::Statistical) {
            return Scenario::statistical(rho, sigma_R->build(n_t, "config.sigma_R"),
                                         sigma_E.build(n_t, "config.sigma_E"));
        }
        return Scenario::full_csi(rho, realize_h_R(), sigma_E.build(n_t, "config.sigma_E"));
    }

    Scenario to_scenario() const { return to_scenario(snr_db.front()); }
};

inline constexpr double nats_per_bit = 0.69314718055994530942;

struct RunRecord {
    json scenario;
    double snr_db = 0.0;
    double rate_nats = 0.0;
    double rate_bits = 0.0;
    std::vector<double> q_eigenvalues;
    std::vector<double> theta_eigenvalues;
    double trace_q_theta = 0.0;
    double commutator_residual = 0.0;
    double eigen_eq_residual = 0.0;
    double lambda_max_gap = 0.0;
    int iterations = 0;
    bool converged = false;
    double wall_time_s = 0.0;

    static RunRecord from_report(const json& scenario_echo, double snr_db_value,
                                 const KktReport& r, double wall_time) {
        RunRecord rec;
        rec.scenario = scenario_echo;
        rec.snr_db = snr_db_value;
        rec.rate_nats = r.rate;
        rec.rate_bits = r.rate / nats_per_bit;
        const RealVector& qw = r.q_opt.spectrum().eigenvalues;
        rec.q_eigenvalues.assign(qw.data(), qw.data() + qw.size());
        rec.theta_eigenvalues.assign(r.theta_spectrum.data(),
                                     r.theta_spectrum.data() + r.theta_spectrum.size());
        rec.trace_q_theta = r.trace_q_theta;
        rec.commutator_residual = r.commutator_residual;
        rec.eigen_eq_residual = r.eigen_eq_residual;
        rec.lambda_max_gap = r.lambda_max_gap;
        rec.iterations = r.iterations;
        rec.converged = r.converged;
        rec.wall_time_s = wall_time;
        return rec;
    }

    json to_json() const {
        return json{{"scenario", scenario},
                    {"snr_db", snr_db},
                    {"rate_nats", rate_nats},
                    {"rate_bits", rate_bits},
                    {"q_eigenvalues", q_eigenvalues},
                    {"theta_eigenvalues", theta_eigenvalues},
                    {"trace_q_theta", trace_q_theta},
                    {"kkt_residuals",
                     json{{"commutator", commutator_residual},
                          {"eigen_eq", eigen_eq_residual},
                          {"lambda_max_gap", lambda_max_gap}}},
                    {"iterations", iterations},
                    {"converged", converged},
                    {"wall_time_s", wall_time_s}};
    }

    static RunRecord from_json(const json& j) {
        cfg_detail::check_keys(j,
                               {"scenario", "snr_db", "rate_nats", "rate_bits", "q_eigenvalues",
                                "theta_eigenvalues", "trace_q_theta", "kkt_residuals",
                                "iterations", "converged", "wall_time_s"},
                               "record");
        RunRecord rec;
        rec.scenario = j.at("scenario");
        rec.snr_db = j.at("snr_db").get<double>();
        rec.rate_nats = j.at("rate_nats").get<double>();
        rec.rate_bits = j.at("rate_bits").get<double>();
        rec.q_eigenvalues = j.at("q_eigenvalues").get<std::vector<double>>();
        rec.theta_eigenvalues = j.at("theta_eigenvalues").get<std::vector<double>>();
        rec.trace_q_theta = j.at("trace_q_theta").get<double>();
        const json& res = j.at("kkt_residuals");
        cfg_detail::check_keys(res, {"commutator", "eigen_eq", "lambda_max_gap"},
                               "record.kkt_residuals");
        rec.commutator_residual = res.at("commutator").get<double>();
        rec.eigen_eq_residual = res.at("eigen_eq").get<double>();
        rec.lambda_max_gap = res.at("lambda_max_gap").get<double>();
        rec.iterations = j.at("iterations").get<int>();
        rec.converged = j.at("converged").get<bool>();
        rec.wall_time_s = j.at("wall_time_s").get<double>();
        return rec;
    }
};

// 9 significant digits, '.' separator, locale-independent
inline std::string format_csv_number(double v) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.9g", v);
    return buf;
}

} // namespace misosec
