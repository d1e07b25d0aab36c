#pragma once

#include <utility>

#include "colddamp/markov.hpp"
#include "colddamp/spectral.hpp"

namespace colddamp {

enum class ScanMethod { lyapunov, fourier };
enum class CellStatus { stable, unstable, quadrature_failed };

std::string to_string(ScanMethod m);
std::string to_string(CellStatus s);
ScanMethod scan_method_from_string(const std::string& s);

// Grid of steady-state solves. Unstable cells carry no occupancy value; for
// 1-D scans axis2 stays empty and n2 == 1.
struct ScanResult {
    struct Cell {
        double total_occupancy = 0.0;
        double margin = 0.0;
        CellStatus status = CellStatus::stable;
        std::vector<double> per_mode;
    };

    std::vector<double> axis1;  // tau values
    std::vector<double> axis2;  // second parameter (mode spacing), optional
    std::vector<Cell> cells;    // axis2-major: cell(i2 * n1 + i1)

    int n1 = 0, n2 = 1;
    const Cell& at(int i1, int i2 = 0) const { return cells[i2 * n1 + i1]; }
};

ScanResult scan_tau(const SystemSpec& spec, const std::vector<double>& tau_grid,
                    ScanMethod method, bool parallel = true);

// Linear-dispersion template: mode k gets omega_1 + (k-1) spacing and
// nbar_1 omega_1 / omega_k; couplings and damping stay as given.
SystemSpec apply_dispersion(SystemSpec spec, double spacing);

ScanResult scan_2d(const SystemSpec& spec, const std::vector<double>& tau_grid,
                   const std::vector<double>& spacing_grid, ScanMethod method,
                   bool parallel = true);

enum class Objective { total_occupancy, max_mode_occupancy };

Objective objective_from_string(const std::string& s);

struct OptimizeResult {
    double tau_star = 0.0;
    double objective = 0.0;
    double margin = 0.0;
};

// Coarse stable-cell scan, golden-section refinement on the best bracket, the
// commensurate candidates omega_j tau ~ 2 pi n_j, and a final local grid as a
// guard against narrow side minima. Never returns an unstable delay.
OptimizeResult optimize_delay(const SystemSpec& spec, std::pair<double, double> tau_bounds,
                              Objective objective, ScanMethod method = ScanMethod::lyapunov,
                              int coarse_points = 400);

}  // namespace colddamp
