// Times the OpenMP work units against their serial reference paths:
// trajectory ensembles, scan grids and quadrature panels. The parallel and
// serial results must agree bitwise; the table reports the speedup.

#include <chrono>
#include <cstdio>

#include <omp.h>

#include "colddamp/quadrature.hpp"
#include "colddamp/spectral.hpp"
#include "colddamp/sweep.hpp"
#include "colddamp/trajectory.hpp"

using namespace colddamp;
using Clock = std::chrono::steady_clock;

namespace {

SystemSpec reference_single() {
    SystemSpec spec;
    MechanicalMode m;
    m.omega = 1.0;
    m.gamma = 4e-5;
    m.nbar = 1e5;
    m.G = 0.2;
    m.g_cd = 0.6;
    spec.modes = {m};
    spec.cavity.kappa = 4.0;
    spec.feedback.omega_fb = 4.5;
    return spec;
}

double seconds(Clock::time_point a, Clock::time_point b) {
    return std::chrono::duration<double>(b - a).count();
}

template <typename F>
double timed(F&& f) {
    const auto t0 = Clock::now();
    f();
    return seconds(t0, Clock::now());
}

}  // namespace

int main() {
    const SystemSpec spec = reference_single();
    std::printf("threads available: %d\n\n", omp_get_max_threads());
    std::printf("%-28s %10s %10s %8s %s\n", "workload", "serial[s]", "openmp[s]", "speedup",
                "bitwise");

    {
        SimConfig cfg;
        cfg.dt = 4e-3;
        cfg.t_end = 400.0;
        cfg.n_traj = 64;
        cfg.seed = 2024;
        cfg.parallel = false;
        TrajectoryEnsemble serial, parallel;
        const double ts = timed([&] { serial = run_ensemble(spec, cfg); });
        cfg.parallel = true;
        const double tp = timed([&] { parallel = run_ensemble(spec, cfg); });
        const bool same = (serial.mean_n - parallel.mean_n).cwiseAbs().maxCoeff() == 0.0;
        std::printf("%-28s %10.3f %10.3f %8.2f %s\n", "trajectory ensemble", ts, tp, ts / tp,
                    same ? "yes" : "NO");
    }

    {
        std::vector<double> grid(160);
        for (size_t i = 0; i < grid.size(); ++i) grid[i] = 1.5 * i / (grid.size() - 1.0);
        ScanResult serial, parallel;
        const double ts =
            timed([&] { serial = scan_tau(spec, grid, ScanMethod::fourier, false); });
        const double tp =
            timed([&] { parallel = scan_tau(spec, grid, ScanMethod::fourier, true); });
        bool same = true;
        for (size_t i = 0; i < serial.cells.size(); ++i)
            same = same && serial.cells[i].total_occupancy == parallel.cells[i].total_occupancy &&
                   serial.cells[i].margin == parallel.cells[i].margin;
        std::printf("%-28s %10.3f %10.3f %8.2f %s\n", "delay scan (fourier)", ts, tp, ts / tp,
                    same ? "yes" : "NO");
    }

    {
        QuadratureConfig cfg;
        cfg.rel_tol = 1e-6;
        cfg.window_min_points = 1200;
        cfg.tail_points_per_decade = 96;
        std::vector<double> serial, parallel;
        const double tau = 4.0 * M_PI;
        occupancy_fourier(spec, tau, cfg);  // warmup
        cfg.parallel = false;
        const double ts = timed([&] { serial = occupancy_fourier(spec, tau, cfg); });
        cfg.parallel = true;
        const double tp = timed([&] { parallel = occupancy_fourier(spec, tau, cfg); });
        const bool same = serial[0] == parallel[0];
        std::printf("%-28s %10.3f %10.3f %8.2f %s\n", "quadrature panels", ts, tp, ts / tp,
                    same ? "yes" : "NO");
    }
    return 0;
}
