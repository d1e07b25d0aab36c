#pragma once

#include <functional>
#include <vector>

#include "colddamp/types.hpp"

namespace colddamp {

// Spectra here are near-Lorentzian with widths down to gamma ~ 1e-5 on
// supports of hundreds of frequency units; uniform grids are hopeless. The
// engine works on a panel decomposition: dense windows around each mechanical
// resonance, a log-spaced tail elsewhere, and panel-wise adaptive Simpson with
// Richardson error control inside each panel.
struct QuadratureConfig {
    double rel_tol = 1e-3;
    int depth_cap = 20;
    double omega_max = 0.0;          // 0: derived as max(10 kappa, 10 omega_fb, max omega + 10 kappa)
    double window_halfwidths = 50.0; // half-width in units of gamma_eff_j(omega_j)
    int window_min_points = 200;
    int tail_points_per_decade = 24;
    bool parallel = true;
};

// Writes n_components values at frequency omega into out (preallocated).
using VectorIntegrand = std::function<void(double omega, double* out)>;

struct QuadratureResult {
    std::vector<double> value;
    double error_estimate = 0.0;  // max over components, absolute
    bool converged = true;
    int panels_failed = 0;
    long evaluations = 0;
};

// Panel boundaries on [0, omega_max] for the given spec: resonance windows
// sized by the local effective linewidth, oscillation-aware width caps for
// tau > 0, log tail between and above the windows.
std::vector<double> frequency_breakpoints(const SystemSpec& spec, double tau,
                                          const QuadratureConfig& cfg);

// Integrates f over consecutive panels. Panels are independent work units;
// results are accumulated in panel order so the sum does not depend on the
// execution schedule.
QuadratureResult integrate_panels(const std::vector<double>& breakpoints, int n_components,
                                  const VectorIntegrand& f, const QuadratureConfig& cfg);

}  // namespace colddamp
