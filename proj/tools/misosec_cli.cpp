// Command-line front end: solve a configured scenario, scan the full-CSI
// rank-one parameter z, sweep a scenario parameter, or cross-validate the
// closed-form rate against Monte Carlo.
//
// Exit codes: 0 success, 2 malformed config / usage, 3 solver non-convergence.

#include <CLI11.hpp>

#include <atomic>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "misosec/misosec.hpp"

namespace {

using namespace misosec;

constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitNoConvergence = 3;

struct CommonArgs {
    std::string config_path;
    std::string out_path;     // empty -> stdout
    int threads = 0;          // 0 -> hardware concurrency
    std::optional<std::uint64_t> seed_override;
};

ScenarioConfig load_config(const CommonArgs& args) {
    std::ifstream in(args.config_path);
    if (!in) throw ConfigError("cannot open config file: " + args.config_path);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    ScenarioConfig cfg = ScenarioConfig::parse(j);
    if (args.seed_override) {
        cfg.solver_seed = *args.seed_override;
        cfg.mc_seed = *args.seed_override + 1;
        if (cfg.h_R_sample_seed) cfg.h_R_sample_seed = *args.seed_override + 2;
    }
    return cfg;
}

void write_output(const std::string& out_path, const std::string& text) {
    if (out_path.empty()) {
        std::cout << text;
        return;
    }
    std::ofstream out(out_path);
    if (!out) throw std::runtime_error("cannot open output file: " + out_path);
    out << text;
}

double now_seconds() {
    return std::chrono::duration<double>(
               std::chrono::steady_clock::now().time_since_epoch())
        .count();
}

struct SolveOutcome {
    RunRecord record;
    MultiStartReport report;
};

SolveOutcome run_solve(const ScenarioConfig& cfg, double snr_db) {
    const Scenario s = cfg.to_scenario(snr_db);
    const double t0 = now_seconds();
    MultiStartReport rep = multi_start_solve(s, cfg.n_starts, cfg.solver_seed, cfg.solver);
    const double wall = now_seconds() - t0;
    return {RunRecord::from_report(cfg.raw, snr_db, rep.best, wall), std::move(rep)};
}

int cmd_solve(const CommonArgs& args, const std::string& trace_path) {
    const ScenarioConfig cfg = load_config(args);
    const SolveOutcome out = run_solve(cfg, cfg.snr_db.front());
    write_output(args.out_path, out.record.to_json().dump(2) + "\n");
    if (!trace_path.empty()) {
        std::ostringstream csv;
        csv << "iter,rate_nats\n";
        const auto& trace = out.report.best.rate_trace;
        for (std::size_t i = 0; i < trace.size(); ++i) {
            csv << i << "," << format_csv_number(trace[i]) << "\n";
        }
        std::ofstream tf(trace_path);
        if (!tf) throw std::runtime_error("cannot open trace file: " + trace_path);
        tf << csv.str();
    }
    return out.record.converged ? kExitOk : kExitNoConvergence;
}

int cmd_scan_z(const CommonArgs& args, double grid_step) {
    const ScenarioConfig cfg = load_config(args);
    if (cfg.mode != ChannelKnowledge::FullCsi) {
        throw ConfigError("scan-z requires mode 'full_csi'");
    }
    if (!(grid_step > 0.0 && grid_step <= 1.0)) {
        throw ConfigError("scan-z: --grid-step must lie in (0, 1]");
    }
    const Scenario s = cfg.to_scenario();
    std::vector<double> grid;
    grid.push_back(0.0);
    for (double z = grid_step; z < 1.0 - 1e-12; z += grid_step) grid.push_back(z);
    grid.push_back(1.0);
    const ScanResult scan = scan_cs_z(s, grid);

    std::ostringstream csv;
    csv << "z,phi_z,rate_nats\n";
    for (std::size_t k = 0; k < scan.grid_z.size(); ++k) {
        csv << format_csv_number(scan.grid_z[k]) << "," << format_csv_number(scan.grid_phi[k])
            << "," << format_csv_number(scan.grid_rate[k]) << "\n";
    }
    csv << "# best_z=" << format_csv_number(scan.best_z)
        << " best_rate_nats=" << format_csv_number(scan.best_rate) << "\n";
    write_output(args.out_path, csv.str());
    return kExitOk;
}

int cmd_sweep(const CommonArgs& args, const std::string& param, const std::string& values_csv) {
    const ScenarioConfig cfg = load_config(args);
    std::vector<double> values;
    {
        std::stringstream ss(values_csv);
        std::string tok;
        while (std::getline(ss, tok, ',')) {
            if (tok.empty()) continue;
            try {
                values.push_back(std::stod(tok));
            } catch (const std::exception&) {
                throw ConfigError("sweep: bad value '" + tok + "' in --values");
            }
        }
    }
    if (values.empty()) throw ConfigError("sweep: --values must list at least one number");
    if (param != "snr_db" && param != "phi_R" && param != "phi_E") {
        throw ConfigError("sweep: --param must be one of snr_db, phi_R, phi_E");
    }
    if (param == "phi_R" && (!cfg.sigma_R || !cfg.sigma_R->jakes)) {
        throw ConfigError("sweep over phi_R requires a Jakes sigma_R");
    }
    if (param == "phi_E" && !cfg.sigma_E.jakes) {
        throw ConfigError("sweep over phi_E requires a Jakes sigma_E");
    }

    struct Row {
        double value;
        RunRecord record;
        bool ok = false;
    };
    std::vector<Row> rows(values.size());
    std::atomic<std::size_t> next{0};
    std::atomic<bool> config_failed{false};
    std::string config_error;
    std::mutex error_mutex;

    auto worker = [&]() {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= values.size()) return;
            try {
                ScenarioConfig point = cfg;
                double snr = cfg.snr_db.front();
                if (param == "snr_db") {
                    snr = values[i];
                } else if (param == "phi_R") {
                    point.sigma_R->jakes->phi = values[i];
                } else {
                    point.sigma_E.jakes->phi = values[i];
                }
                SolveOutcome out = run_solve(point, snr);
                rows[i] = Row{values[i], std::move(out.record), true};
            } catch (const std::exception& e) {
                std::scoped_lock lock(error_mutex);
                config_failed = true;
                config_error = e.what();
                return;
            }
        }
    };
    unsigned n_threads = args.threads > 0 ? static_cast<unsigned>(args.threads)
                                          : std::max(1u, std::thread::hardware_concurrency());
    n_threads = std::min<unsigned>(n_threads, static_cast<unsigned>(values.size()));
    std::vector<std::thread> pool;
    for (unsigned t = 0; t < n_threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
    if (config_failed) throw ConfigError("sweep point failed: " + config_error);

    std::ostringstream csv;
    csv << "param_value,rate_nats,rate_bits,rank_q,trace_q_theta\n";
    bool all_converged = true;
    for (const Row& row : rows) {
        int rank_q = 0;
        const double top = row.record.q_eigenvalues.empty() ? 0.0 : row.record.q_eigenvalues[0];
        for (double w : row.record.q_eigenvalues) {
            if (w > 1e-6 * std::max(top, 1e-300)) ++rank_q;
        }
        csv << format_csv_number(row.value) << "," << format_csv_number(row.record.rate_nats)
            << "," << format_csv_number(row.record.rate_bits) << "," << rank_q << ","
            << format_csv_number(row.record.trace_q_theta) << "\n";
        all_converged = all_converged && row.record.converged;
    }
    write_output(args.out_path, csv.str());
    return all_converged ? kExitOk : kExitNoConvergence;
}

int cmd_validate(const CommonArgs& args, long samples_override) {
    ScenarioConfig cfg = load_config(args);
    if (samples_override > 0) cfg.mc_samples = samples_override;
    const Scenario s = cfg.to_scenario();
    const SolveOutcome out = run_solve(cfg, cfg.snr_db.front());
    const MonteCarloEstimate mc =
        monte_carlo_rate(s, out.report.best.q_opt, cfg.mc_samples, cfg.mc_seed);
    const double gap = out.report.best.rate - mc.estimate;
    const bool pass = std::abs(gap) <= 4.0 * mc.std_error;

    json rep{{"record", out.record.to_json()},
             {"closed_form_rate_nats", out.report.best.rate},
             {"mc_estimate_nats", mc.estimate},
             {"mc_std_error", mc.std_error},
             {"mc_samples", mc.n_samples},
             {"gap_in_sigmas", mc.std_error > 0 ? gap / mc.std_error : 0.0},
             {"pass_4_sigma", pass}};
    write_output(args.out_path, rep.dump(2) + "\n");
    return out.record.converged ? kExitOk : kExitNoConvergence;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Ergodic secrecy-rate solver for correlated MISO wiretap channels"};
    app.require_subcommand(1);

    CommonArgs common;
    std::uint64_t seed_value = 0;
    bool seed_set = false;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", common.config_path, "JSON scenario config")->required();
        sub->add_option("--out", common.out_path, "output path (default: stdout)");
        sub->add_option("--threads", common.threads, "worker threads for sweeps");
        sub->add_option("--seed", seed_value, "override all seeds in the config")
            ->each([&](const std::string&) { seed_set = true; });
    };

    std::string trace_path;
    CLI::App* solve = app.add_subcommand("solve", "run the fixed-point solver");
    add_common(solve);
    solve->add_option("--trace", trace_path, "per-iteration rate CSV");

    double grid_step = 0.01;
    CLI::App* scan = app.add_subcommand("scan-z", "full-CSI scan of C_s(z)");
    add_common(scan);
    scan->add_option("--grid-step", grid_step, "z grid step (default 0.01)");

    std::string param, values_csv;
    CLI::App* sweep = app.add_subcommand("sweep", "sweep one scenario parameter");
    add_common(sweep);
    sweep->add_option("--param", param, "snr_db | phi_R | phi_E")->required();
    sweep->add_option("--values", values_csv, "comma-separated parameter values")->required();

    long samples = 0;
    CLI::App* validate = app.add_subcommand("validate", "Monte-Carlo cross-check at the solution");
    add_common(validate);
    validate->add_option("--samples", samples, "Monte-Carlo sample count");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitConfig;
    }

    if (seed_set) common.seed_override = seed_value;

    try {
        if (solve->parsed()) return cmd_solve(common, trace_path);
        if (scan->parsed()) return cmd_scan_z(common, grid_step);
        if (sweep->parsed()) return cmd_sweep(common, param, values_csv);
        if (validate->parsed()) return cmd_validate(common, samples);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const std::invalid_argument& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitNoConvergence;
    }
    return kExitConfig;
}
