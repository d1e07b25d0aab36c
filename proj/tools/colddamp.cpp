// Command-line front end: config-driven steady-state solves, spectra,
// trajectory ensembles, delay scans and delay optimization, with
// deterministic CSV output and a JSON metadata sidecar per file.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

#include <omp.h>

#include <CLI11.hpp>
#include <json.hpp>

#include "colddamp/collective.hpp"
#include "colddamp/config.hpp"
#include "colddamp/csv.hpp"
#include "colddamp/markov.hpp"
#include "colddamp/spectral.hpp"
#include "colddamp/sweep.hpp"
#include "colddamp/trajectory.hpp"

namespace fs = std::filesystem;
using namespace colddamp;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitPhysics = 2;

struct CommonOptions {
    std::string config_path;
    std::string out_dir = ".";
    std::string method;
    int threads = 0;
    std::optional<std::uint64_t> seed;
};

void add_common(CLI::App* cmd, CommonOptions& opts) {
    cmd->add_option("--config", opts.config_path, "configuration file")->required();
    cmd->add_option("--out", opts.out_dir, "output directory");
    cmd->add_option("--method", opts.method, "method override");
    cmd->add_option("--threads", opts.threads, "worker thread cap");
    cmd->add_option_function<std::uint64_t>(
        "--seed", [&opts](std::uint64_t s) { opts.seed = s; }, "RNG seed override");
}

void apply_threads(const CommonOptions& opts) {
    int threads = opts.threads;
    if (threads <= 0) {
        if (const char* env = std::getenv("COLDDAMP_THREADS")) threads = std::atoi(env);
    }
    if (threads > 0) omp_set_num_threads(threads);
}

// Sections owned by other subcommands are tolerated in a shared config file;
// genuinely unknown keys are still rejected with their line numbers.
void allow_other_sections(const Config& cfg, const std::string& own) {
    for (const char* section : {"steady", "spectrum", "sim", "scan", "optimize", "quadrature"}) {
        if (own == section) continue;
        for (const char* key :
             {".method", ".tau", ".tau_min", ".tau_max", ".tau_points", ".spacing",
              ".spacing_min", ".spacing_max", ".spacing_points", ".omega", ".omega_min",
              ".omega_max", ".omega_points", ".objective", ".dt", ".t_end", ".n_traj",
              ".seed", ".burn_in", ".record_stride", ".allow_interpolation",
              ".inject_optical_noise", ".rel_tol", ".collective"}) {
            const std::string k = std::string(section) + key;
            if (cfg.has(k)) cfg.text(k);
        }
    }
}

void write_metadata(const fs::path& data_file, const std::string& command,
                    const Config& cfg, const SystemSpec& spec, nlohmann::json extra) {
    nlohmann::json meta;
    meta["command"] = command;
    meta["config"] = cfg.dump();
    meta["spec"] = to_json(spec);
    meta["extra"] = std::move(extra);
    fs::path side = data_file;
    side += ".meta.json";
    std::ofstream out(side, std::ios::binary);
    out << meta.dump(2) << '\n';
}

QuadratureConfig quadrature_options(const Config& cfg) {
    QuadratureConfig q;
    q.rel_tol = cfg.number_or("quadrature.rel_tol", q.rel_tol);
    q.omega_max = cfg.number_or("quadrature.omega_max", q.omega_max);
    return q;
}

SystemSpec load_spec(const Config& cfg) {
    SystemSpec spec = cfg.build_spec();
    if (spec.coupling_source == CouplingSource::mean_field) {
        const ClassicalSteadyState steady = solve_classical_amplitude(spec);
        spec = linearize(spec, steady.amplitude);
    }
    return spec;
}

int cmd_steady(const CommonOptions& opts) {
    const Config cfg = Config::parse_file(opts.config_path);
    const SystemSpec spec = load_spec(cfg);
    const std::string method =
        !opts.method.empty() ? opts.method : cfg.text_or("steady.method", "lyapunov-sfflc");
    const QuadratureConfig qcfg = quadrature_options(cfg);
    allow_other_sections(cfg, "steady");
    cfg.ensure_all_consumed();

    const double tau = spec.feedback.tau;
    std::vector<double> n;
    if (method == "lyapunov-sfflc" || method == "lyapunov-wfflc") {
        const Regime regime =
            method == "lyapunov-sfflc" ? Regime::sfflc : Regime::wfflc;
        const RateSet r = rates_at_mode_frequencies(spec, regime);
        n = occupancy_from_cov(solve_lyapunov(build_drift(spec, r, tau), build_diffusion(spec)));
    } else if (method == "fourier") {
        n = occupancy_fourier(spec, tau, qcfg);
    } else if (method == "closed-form") {
        if (spec.size() == 1) {
            const Regime regime =
                spec.feedback.regime == Regime::sfflc ? Regime::sfflc : Regime::wfflc;
            n = {closed_form_single(spec, tau, regime)};
        } else if (spec.size() == 2) {
            const auto [n1, n2] = closed_form_two(spec, tau);
            n = {n1, n2};
        } else if (tau == 0.0) {
            n = closed_form_multi_tau0(spec);
        } else {
            throw ConfigError("closed-form needs one or two modes, or tau = 0");
        }
    } else {
        throw ConfigError("unknown steady method '" + method + "'");
    }

    fs::create_directories(opts.out_dir);
    const fs::path file = fs::path(opts.out_dir) / "occupancies.csv";
    CsvWriter csv(file.string());
    csv.header({"mode", "n_eff", "method"});
    for (int j = 0; j < spec.size(); ++j)
        csv.row({std::to_string(j + 1), format_g17(n[j]), method});
    write_metadata(file, "steady", cfg, spec, {{"method", method}, {"tau", tau}});
    return kExitOk;
}

int cmd_spectrum(const CommonOptions& opts) {
    const Config cfg = Config::parse_file(opts.config_path);
    const SystemSpec spec = load_spec(cfg);
    if (!cfg.has_grid("spectrum.omega"))
        throw ConfigError("spectrum needs an omega grid (spectrum.omega or *_min/_max/_points)");
    const std::vector<double> grid = cfg.grid("spectrum.omega");
    if (grid.size() < 2 || !(grid.back() > grid.front()))
        throw ConfigError("spectrum grid must contain at least two increasing points");
    std::vector<double> taus{spec.feedback.tau};
    if (cfg.has("spectrum.tau")) taus = cfg.numbers("spectrum.tau");
    // Collective-basis spectra expose the bright/dark structure that the
    // per-mode diagonals hide for (near-)degenerate systems.
    const bool collective = cfg.flag_or("spectrum.collective", false);
    allow_other_sections(cfg, "spectrum");
    cfg.ensure_all_consumed();

    fs::create_directories(opts.out_dir);
    for (size_t t = 0; t < taus.size(); ++t) {
        const fs::path file =
            fs::path(opts.out_dir) / ("spectrum_" + std::to_string(t + 1) + ".csv");
        CsvWriter csv(file.string());
        if (collective) {
            const CollectiveBasis basis = build_basis(spec);
            std::vector<std::string> header{"omega"};
            for (int l = 0; l < spec.size(); ++l)
                header.push_back("s_Q_" + std::to_string(l + 1));
            csv.header(header);
            for (double Omega : grid) {
                const CollectiveResponse resp =
                    dark_mode_response(spec, Omega, taus[t], basis);
                const Eigen::MatrixXcd S =
                    noise_spectrum(spec, Omega, taus[t], NoiseModel::full);
                std::vector<double> row{Omega};
                row.push_back((resp.bright * S * resp.bright.adjoint())(0, 0).real());
                for (int l = 1; l < spec.size(); ++l)
                    row.push_back(
                        (resp.dark.row(l - 1) * S * resp.dark.row(l - 1).adjoint())(0, 0)
                            .real());
                csv.row_numeric(row);
            }
        } else {
            const SpectrumGrid s = spec.size() == 1 ? spectrum_single(spec, taus[t], grid)
                                                    : spectrum_modes(spec, taus[t], grid);
            std::vector<std::string> header{"omega"};
            for (int j = 0; j < spec.size(); ++j)
                header.push_back("s_q_" + std::to_string(j + 1));
            if (s.has_components)
                for (const char* c :
                     {"thermal", "radiation_pressure", "feedback", "interference"})
                    header.push_back(c);
            csv.header(header);
            for (size_t i = 0; i < grid.size(); ++i) {
                std::vector<double> row{grid[i]};
                for (int j = 0; j < spec.size(); ++j)
                    row.push_back(s.s_q(static_cast<Eigen::Index>(i), j));
                if (s.has_components) {
                    row.push_back(s.thermal[i]);
                    row.push_back(s.radiation_pressure[i]);
                    row.push_back(s.feedback[i]);
                    row.push_back(s.interference[i]);
                }
                csv.row_numeric(row);
            }
        }
        write_metadata(file, "spectrum", cfg, spec,
                       {{"tau", taus[t]}, {"collective", collective}});
    }
    return kExitOk;
}

int cmd_simulate(const CommonOptions& opts) {
    const Config cfg = Config::parse_file(opts.config_path);
    const SystemSpec spec = load_spec(cfg);
    SimConfig sim;
    sim.dt = cfg.number_or("sim.dt", 0.0);
    sim.t_end = cfg.number("sim.t_end");
    sim.n_traj = static_cast<int>(cfg.integer_or("sim.n_traj", 100));
    sim.seed = static_cast<std::uint64_t>(cfg.integer_or("sim.seed", 0));
    sim.burn_in = cfg.number_or("sim.burn_in", 0.5);
    sim.record_stride = static_cast<int>(cfg.integer_or("sim.record_stride", 0));
    sim.allow_interpolation = cfg.flag_or("sim.allow_interpolation", false);
    sim.inject_optical_noise = cfg.flag_or("sim.inject_optical_noise", false);
    if (opts.seed) sim.seed = *opts.seed;
    allow_other_sections(cfg, "sim");
    cfg.ensure_all_consumed();

    const TrajectoryEnsemble ens = run_ensemble(spec, sim);

    fs::create_directories(opts.out_dir);
    const fs::path file = fs::path(opts.out_dir) / "trajectory.csv";
    CsvWriter csv(file.string());
    std::vector<std::string> header{"time"};
    for (int j = 0; j < spec.size(); ++j) header.push_back("n_" + std::to_string(j + 1));
    for (int j = 0; j < spec.size(); ++j) header.push_back("stderr_" + std::to_string(j + 1));
    csv.header(header);
    for (size_t i = 0; i < ens.time.size(); ++i) {
        std::vector<double> row{ens.time[i]};
        for (int j = 0; j < spec.size(); ++j)
            row.push_back(ens.mean_n(static_cast<Eigen::Index>(i), j));
        for (int j = 0; j < spec.size(); ++j)
            row.push_back(ens.stderr_n(static_cast<Eigen::Index>(i), j));
        csv.row_numeric(row);
    }

    nlohmann::json extra{{"seed", sim.seed},
                         {"dt", ens.dt},
                         {"rng", ens.rng_id},
                         {"n_traj", sim.n_traj},
                         {"diverged", ens.diverged},
                         {"diverged_count", ens.diverged_count},
                         {"steady_n", ens.steady_n},
                         {"steady_stderr", ens.steady_stderr},
                         {"warnings", ens.warnings}};
    if (ens.diverged) extra["first_divergence_time"] = ens.first_divergence_time;
    write_metadata(file, "simulate", cfg, spec, extra);
    return kExitOk;
}

void write_scan_csv(const fs::path& file, const ScanResult& scan) {
    CsvWriter csv(file.string());
    csv.header({"axis1", "axis2", "total_occupancy", "margin", "status"});
    for (int i2 = 0; i2 < scan.n2; ++i2) {
        for (int i1 = 0; i1 < scan.n1; ++i1) {
            const auto& cell = scan.at(i1, i2);
            std::vector<std::string> row;
            row.push_back(format_g17(scan.axis1[i1]));
            row.push_back(scan.axis2.empty() ? "" : format_g17(scan.axis2[i2]));
            row.push_back(cell.status == CellStatus::stable
                              ? format_g17(cell.total_occupancy)
                              : "");  // unstable cells carry no occupancy
            row.push_back(format_g17(cell.margin));
            row.push_back(to_string(cell.status));
            csv.row(row);
        }
    }
}

int cmd_scan(const CommonOptions& opts) {
    const Config cfg = Config::parse_file(opts.config_path);
    const SystemSpec spec = load_spec(cfg);
    if (!cfg.has_grid("scan.tau")) throw ConfigError("scan needs a tau grid");
    const std::vector<double> tau_grid = cfg.grid("scan.tau");
    const ScanMethod method = scan_method_from_string(
        !opts.method.empty() ? opts.method : cfg.text_or("scan.method", "lyapunov"));
    std::optional<std::vector<double>> spacing;
    if (cfg.has_grid("scan.spacing")) spacing = cfg.grid("scan.spacing");
    allow_other_sections(cfg, "scan");
    cfg.ensure_all_consumed();

    const ScanResult scan = spacing ? scan_2d(spec, tau_grid, *spacing, method)
                                    : scan_tau(spec, tau_grid, method);

    fs::create_directories(opts.out_dir);
    const fs::path file = fs::path(opts.out_dir) / "scan.csv";
    write_scan_csv(file, scan);
    write_metadata(file, "scan", cfg, spec,
                   {{"method", to_string(method)}, {"two_dimensional", spacing.has_value()}});
    return kExitOk;
}

int cmd_optimize(const CommonOptions& opts) {
    const Config cfg = Config::parse_file(opts.config_path);
    const SystemSpec spec = load_spec(cfg);
    const double lo = cfg.number("optimize.tau_min");
    const double hi = cfg.number("optimize.tau_max");
    const Objective objective =
        objective_from_string(cfg.text_or("optimize.objective", "total-occupancy"));
    const ScanMethod method = scan_method_from_string(
        !opts.method.empty() ? opts.method : cfg.text_or("optimize.method", "lyapunov"));
    allow_other_sections(cfg, "optimize");
    cfg.ensure_all_consumed();

    const OptimizeResult res = optimize_delay(spec, {lo, hi}, objective, method);

    fs::create_directories(opts.out_dir);
    const fs::path file = fs::path(opts.out_dir) / "optimize.csv";
    CsvWriter csv(file.string());
    csv.header({"tau_star", "objective", "method", "margin"});
    csv.row({format_g17(res.tau_star), format_g17(res.objective), to_string(method),
             format_g17(res.margin)});
    write_metadata(file, "optimize", cfg, spec,
                   {{"method", to_string(method)}, {"tau_min", lo}, {"tau_max", hi}});
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Simultaneous cold-damping feedback cooling of mechanical resonator modes"};
    app.require_subcommand(1);

    CommonOptions opts;
    auto* steady = app.add_subcommand("steady", "steady-state occupancies");
    auto* spectrum = app.add_subcommand("spectrum", "position spectra");
    auto* simulate = app.add_subcommand("simulate", "delayed-SDE trajectory ensemble");
    auto* scan = app.add_subcommand("scan", "delay (and spacing) scans");
    auto* optimize = app.add_subcommand("optimize", "additional-delay optimization");
    for (auto* cmd : {steady, spectrum, simulate, scan, optimize}) add_common(cmd, opts);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitUsage;
    }

    try {
        apply_threads(opts);
        if (steady->parsed()) return cmd_steady(opts);
        if (spectrum->parsed()) return cmd_spectrum(opts);
        if (simulate->parsed()) return cmd_simulate(opts);
        if (scan->parsed()) return cmd_scan(opts);
        if (optimize->parsed()) return cmd_optimize(opts);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const NotStable& e) {
        std::cerr << "unstable configuration: " << e.what() << '\n';
        return kExitPhysics;
    } catch (const Unstable& e) {
        std::cerr << "unstable configuration: " << e.what() << '\n';
        return kExitPhysics;
    } catch (const NoStableDelay& e) {
        std::cerr << "no stable delay: " << e.what() << '\n';
        return kExitPhysics;
    } catch (const QuadratureDiverged& e) {
        std::cerr << "quadrature diverged: " << e.what() << '\n';
        return kExitPhysics;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitUsage;
    }
    return kExitUsage;
}
