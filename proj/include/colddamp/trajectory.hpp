#pragma once

#include <cstdint>
#include <optional>
#include <random>

#include <Eigen/Dense>

#include "colddamp/types.hpp"

namespace colddamp {

// Deterministic per-trajectory RNG: splitmix64-derived seeds feeding a
// mt19937_64, Gaussians by Box-Muller with a cached spare.
class Rng {
  public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    double uniform();   // (0, 1)
    double gaussian();  // standard normal

    static std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index);
    static constexpr const char* id() { return "splitmix64/mt19937_64/box-muller"; }

  private:
    std::mt19937_64 engine_;
    double spare_ = 0.0;
    bool has_spare_ = false;
};

struct SimConfig {
    double dt = 0.0;           // 0: default resolving the fastest deterministic scale
    double t_end = 0.0;
    int n_traj = 1;
    std::uint64_t seed = 0;
    double burn_in = 0.5;      // fraction of t_end discarded before steady averaging
    int record_stride = 0;     // 0: chosen so roughly 2000 rows are kept
    bool allow_interpolation = false;
    bool inject_optical_noise = false;  // off: matches the printed y-equation
    double init_scale = 1.0;   // multiplies the thermal initial spread
    bool parallel = true;
    std::optional<Eigen::MatrixXd> record_basis;  // also record collective occupancies
};

// One trajectory: mechanical quadratures, the cavity phase quadrature y, the
// feedback filter state w, and the delayed-y ring buffers (values and slopes,
// so mid-step stage times interpolate at the integrator's own accuracy).
struct TrajectoryState {
    Eigen::VectorXd q, p;
    double y = 0.0;
    double w = 0.0;
    std::uint64_t step_index = 0;
    double dt = 0.0;
    double delay_fraction = 0.0;  // tau / dt
    bool diverged = false;

    std::vector<double> hist_y, hist_ydot;

    double delayed_y(double stage_offset) const;  // y(t + stage_offset dt - tau)
};

double default_dt(const SystemSpec& spec);

// Fresh state with zeroed optical history; validates the tau/dt ratio.
TrajectoryState make_state(const SystemSpec& spec, double dt, bool allow_interpolation = false);

// One step: deterministic RK4 on (q, p, y, w) with the feedback force
// -g_cd omega_fb (y(t - tau) - w) realizing the high-pass kernel exactly,
// then the additive thermal increment sqrt((2 nbar + 1) gamma dt) on each p.
// Pass rng = nullptr for the noiseless flow.
void step(TrajectoryState& state, const SystemSpec& spec, double dt, Rng* rng);

struct TrajectoryEnsemble {
    std::vector<double> time;
    Eigen::MatrixXd mean_n;    // rows: time, cols: modes (+ collective coordinates)
    Eigen::MatrixXd stderr_n;  // inter-trajectory standard error
    std::vector<double> steady_n;
    std::vector<double> steady_stderr;
    bool diverged = false;
    double first_divergence_time = 0.0;
    int diverged_count = 0;
    int n_collective = 0;
    double dt = 0.0;
    std::string rng_id;
    std::vector<std::string> warnings;
};

TrajectoryEnsemble run_ensemble(const SystemSpec& spec, const SimConfig& config);

struct DecayFit {
    double rate;
    double residual;  // rms of the log-linear fit
};

// Log-linear fit of the excess occupancy over [0.1, 0.5] of the 1/e
// relaxation time for the given column (mode or collective coordinate).
DecayFit transient_occupancy(const TrajectoryEnsemble& ensemble, int column);

}  // namespace colddamp
