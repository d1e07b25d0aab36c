#include "colddamp/sweep.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace colddamp {

std::string to_string(ScanMethod m) {
    return m == ScanMethod::lyapunov ? "lyapunov" : "fourier";
}

std::string to_string(CellStatus s) {
    switch (s) {
        case CellStatus::stable: return "stable";
        case CellStatus::unstable: return "unstable";
        case CellStatus::quadrature_failed: return "quadrature-failed";
    }
    return "?";
}

ScanMethod scan_method_from_string(const std::string& s) {
    if (s == "lyapunov") return ScanMethod::lyapunov;
    if (s == "fourier") return ScanMethod::fourier;
    throw ConfigError("unknown scan method '" + s + "'");
}

Objective objective_from_string(const std::string& s) {
    if (s == "total-occupancy") return Objective::total_occupancy;
    if (s == "max-mode-occupancy") return Objective::max_mode_occupancy;
    throw ConfigError("unknown objective '" + s + "'");
}

namespace {

// Stability of the delayed system is judged by the Markovian drift
// eigenvalues for both methods (valid for tau below 1/Gamma); the Fourier
// method can additionally report quadrature failures.
ScanResult::Cell evaluate_cell(const SystemSpec& spec, double tau, ScanMethod method) {
    ScanResult::Cell cell;
    const Regime regime =
        spec.feedback.regime == Regime::sfflc ? Regime::sfflc : Regime::wfflc;
    try {
        const RateSet r = rates_at_mode_frequencies(spec, regime);
        const DriftMatrix drift = build_drift(spec, r, tau);
        cell.margin = stability_margin(drift.M);
        if (!(cell.margin < 0)) {
            cell.status = CellStatus::unstable;
            return cell;
        }
        if (method == ScanMethod::lyapunov) {
            const CovarianceMatrix cov = solve_lyapunov(drift, build_diffusion(spec));
            cell.per_mode = occupancy_from_cov(cov);
        } else {
            QuadratureConfig qcfg;
            qcfg.parallel = false;  // scans parallelize over cells
            cell.per_mode = occupancy_fourier(spec, tau, qcfg, NoiseModel::white_thermal);
        }
        cell.total_occupancy = 0.0;
        for (double v : cell.per_mode) cell.total_occupancy += v;
    } catch (const QuadratureDiverged&) {
        cell.status = CellStatus::quadrature_failed;
        cell.per_mode.clear();
        cell.total_occupancy = 0.0;
    } catch (const NotStable&) {
        cell.status = CellStatus::unstable;
        cell.per_mode.clear();
        cell.total_occupancy = 0.0;
    } catch (const Error&) {
        cell.status = CellStatus::quadrature_failed;
        cell.per_mode.clear();
        cell.total_occupancy = 0.0;
    }
    return cell;
}

}  // namespace

ScanResult scan_tau(const SystemSpec& spec, const std::vector<double>& tau_grid,
                    ScanMethod method, bool parallel) {
    if (tau_grid.empty()) throw ConfigError("tau grid must be nonempty");
    ScanResult out;
    out.axis1 = tau_grid;
    out.n1 = static_cast<int>(tau_grid.size());
    out.n2 = 1;
    out.cells.resize(tau_grid.size());
    if (parallel) {
#pragma omp parallel for schedule(dynamic)
        for (int i = 0; i < out.n1; ++i)
            out.cells[i] = evaluate_cell(spec, tau_grid[i], method);
    } else {
        for (int i = 0; i < out.n1; ++i)
            out.cells[i] = evaluate_cell(spec, tau_grid[i], method);
    }
    return out;
}

SystemSpec apply_dispersion(SystemSpec spec, double spacing) {
    const double omega1 = spec.modes[0].omega;
    const double nbar1 = spec.modes[0].nbar;
    for (int k = 0; k < spec.size(); ++k) {
        spec.modes[k].omega = omega1 + k * spacing;
        spec.modes[k].nbar = nbar1 * omega1 / spec.modes[k].omega;
    }
    return spec;
}

ScanResult scan_2d(const SystemSpec& spec, const std::vector<double>& tau_grid,
                   const std::vector<double>& spacing_grid, ScanMethod method,
                   bool parallel) {
    if (tau_grid.empty() || spacing_grid.empty())
        throw ConfigError("scan grids must be nonempty");
    ScanResult out;
    out.axis1 = tau_grid;
    out.axis2 = spacing_grid;
    out.n1 = static_cast<int>(tau_grid.size());
    out.n2 = static_cast<int>(spacing_grid.size());
    out.cells.resize(static_cast<size_t>(out.n1) * out.n2);
    const int total = out.n1 * out.n2;
    if (parallel) {
#pragma omp parallel for schedule(dynamic)
        for (int c = 0; c < total; ++c) {
            const SystemSpec cell_spec = apply_dispersion(spec, spacing_grid[c / out.n1]);
            out.cells[c] = evaluate_cell(cell_spec, tau_grid[c % out.n1], method);
        }
    } else {
        for (int c = 0; c < total; ++c) {
            const SystemSpec cell_spec = apply_dispersion(spec, spacing_grid[c / out.n1]);
            out.cells[c] = evaluate_cell(cell_spec, tau_grid[c % out.n1], method);
        }
    }
    return out;
}

namespace {

double cell_objective(const ScanResult::Cell& cell, Objective objective) {
    if (cell.status != CellStatus::stable || cell.per_mode.empty())
        return std::numeric_limits<double>::infinity();
    if (objective == Objective::total_occupancy) return cell.total_occupancy;
    return *std::max_element(cell.per_mode.begin(), cell.per_mode.end());
}

}  // namespace

OptimizeResult optimize_delay(const SystemSpec& spec, std::pair<double, double> tau_bounds,
                              Objective objective, ScanMethod method, int coarse_points) {
    const double lo = tau_bounds.first, hi = tau_bounds.second;
    if (!(lo >= 0) || !(hi > lo)) throw ConfigError("invalid tau bounds");

    auto evaluate = [&](double tau) {
        return cell_objective(evaluate_cell(spec, tau, method), objective);
    };

    std::vector<double> grid(coarse_points);
    for (int i = 0; i < coarse_points; ++i)
        grid[i] = lo + (hi - lo) * i / (coarse_points - 1.0);
    const ScanResult coarse = scan_tau(spec, grid, method);

    int best = -1;
    double best_val = std::numeric_limits<double>::infinity();
    for (int i = 0; i < coarse_points; ++i) {
        const double v = cell_objective(coarse.cells[i], objective);
        if (v < best_val) {
            best_val = v;
            best = i;
        }
    }
    if (best < 0) throw NoStableDelay("no stable delay inside the given bounds");

    // Golden-section refinement on the bracket around the best coarse cell.
    double a = grid[std::max(0, best - 1)];
    double b = grid[std::min(coarse_points - 1, best + 1)];
    const double gr = (std::sqrt(5.0) - 1.0) / 2.0;
    double x1 = b - gr * (b - a), x2 = a + gr * (b - a);
    double f1 = evaluate(x1), f2 = evaluate(x2);
    for (int it = 0; it < 80 && (b - a) > 1e-12 * std::max(1.0, hi); ++it) {
        if (f1 < f2) {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - gr * (b - a);
            f1 = evaluate(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + gr * (b - a);
            f2 = evaluate(x2);
        }
    }
    double tau_star = 0.5 * (a + b);
    double obj_star = evaluate(tau_star);
    if (obj_star > best_val) {
        tau_star = grid[best];
        obj_star = best_val;
    }

    // Commensurate candidates: smallest delays with omega_j tau ~ 2 pi n_j
    // for every mode simultaneously (phase tolerance 0.05 rad).
    constexpr double kPhaseTol = 0.05;
    auto commensurate = [&](double tau) {
        for (const auto& m : spec.modes) {
            const double phase = std::fmod(m.omega * tau, 2.0 * M_PI);
            if (std::min(phase, 2.0 * M_PI - phase) > kPhaseTol) return false;
        }
        return true;
    };
    for (const auto& m : spec.modes) {
        const double period = 2.0 * M_PI / m.omega;
        for (int k = static_cast<int>(std::ceil(lo / period)); k * period <= hi; ++k) {
            const double tau = k * period;
            if (tau < lo || !commensurate(tau)) continue;
            const double v = evaluate(tau);
            if (v < obj_star) {
                obj_star = v;
                tau_star = tau;
            }
        }
    }

    // Local guard grid around the winner.
    const double span = (hi - lo) / coarse_points;
    for (int i = 0; i < 32; ++i) {
        const double tau = std::clamp(tau_star - span + 2.0 * span * i / 31.0, lo, hi);
        const double v = evaluate(tau);
        if (v < obj_star) {
            obj_star = v;
            tau_star = tau;
        }
    }

    const ScanResult::Cell final_cell = evaluate_cell(spec, tau_star, method);
    if (final_cell.status != CellStatus::stable)
        throw NoStableDelay("optimizer failed to certify a stable delay");
    return OptimizeResult{tau_star, cell_objective(final_cell, objective), final_cell.margin};
}

}  // namespace colddamp
