#include "colddamp/trajectory.hpp"

#include <cmath>
#include <sstream>

namespace colddamp {

namespace {

constexpr double kDivergenceThreshold = 1e8;

std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

}  // namespace

double Rng::uniform() {
    // Strictly inside (0, 1) so the Box-Muller log stays finite.
    return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53;
}

double Rng::gaussian() {
    if (has_spare_) {
        has_spare_ = false;
        return spare_;
    }
    const double u = uniform();
    const double v = uniform();
    const double r = std::sqrt(-2.0 * std::log(u));
    spare_ = r * std::sin(2.0 * M_PI * v);
    has_spare_ = true;
    return r * std::cos(2.0 * M_PI * v);
}

std::uint64_t Rng::derive_seed(std::uint64_t master, std::uint64_t index) {
    return splitmix64(splitmix64(master) ^ splitmix64(index + 0x51e03daull));
}

double default_dt(const SystemSpec& spec) {
    const double fastest = std::min({2.0 * M_PI / spec.max_omega(),
                                     1.0 / spec.cavity.kappa,
                                     1.0 / spec.feedback.omega_fb});
    return fastest / 50.0;
}

TrajectoryState make_state(const SystemSpec& spec, double dt, bool allow_interpolation) {
    if (!(dt > 0)) throw ConfigError("dt must be > 0");
    const double tau = spec.feedback.tau;
    const double frac = tau / dt;
    if (tau > 0) {
        const double nearest = std::round(frac);
        if (!allow_interpolation && std::abs(frac - nearest) > 1e-9 * std::max(1.0, nearest))
            throw ConfigError("tau/dt must be an integer (or enable interpolation)");
        if (frac < 1.0 - 1e-9)
            throw ConfigError("tau must be zero or at least one time step");
    }

    TrajectoryState s;
    s.q.setZero(spec.size());
    s.p.setZero(spec.size());
    s.dt = dt;
    s.delay_fraction = frac;
    const std::size_t capacity = static_cast<std::size_t>(std::ceil(frac)) + 4;
    s.hist_y.assign(capacity, 0.0);
    s.hist_ydot.assign(capacity, 0.0);
    return s;
}

double TrajectoryState::delayed_y(double stage_offset) const {
    // Fractional step position of the requested time; history before t = 0
    // is identically zero.
    const double pos = static_cast<double>(step_index) + stage_offset - delay_fraction;
    if (pos <= 0.0) return 0.0;
    const std::size_t cap = hist_y.size();
    const double floor_pos = std::floor(pos);
    const std::size_t i = static_cast<std::size_t>(floor_pos);
    const double theta = pos - floor_pos;
    const double y0 = hist_y[i % cap];
    if (theta == 0.0) return y0;
    const double y1 = hist_y[(i + 1) % cap];
    const double d0 = hist_ydot[i % cap] * dt;
    const double d1 = hist_ydot[(i + 1) % cap] * dt;
    const double t2 = theta * theta, t3 = t2 * theta;
    return (2.0 * t3 - 3.0 * t2 + 1.0) * y0 + (t3 - 2.0 * t2 + theta) * d0 +
           (-2.0 * t3 + 3.0 * t2) * y1 + (t3 - t2) * d1;
}

namespace {

struct Derivative {
    Eigen::VectorXd dq, dp;
    double dy = 0.0, dw = 0.0;
};

void evaluate(const TrajectoryState& base, const SystemSpec& spec,
              const Eigen::VectorXd& q, const Eigen::VectorXd& p, double y, double w,
              double stage_offset, Derivative& out) {
    const int n = spec.size();
    const double wfb = spec.feedback.omega_fb;
    const double y_del = spec.feedback.tau == 0.0 ? y : base.delayed_y(stage_offset);
    const double filter_drive = wfb * (y_del - w);

    double coupling = 0.0;
    for (int j = 0; j < n; ++j) {
        const auto& m = spec.modes[j];
        out.dq(j) = m.omega * p(j);
        out.dp(j) = -m.omega * q(j) - m.gamma * p(j) - m.g_cd * filter_drive;
        coupling += m.G * q(j);
    }
    out.dy = -spec.cavity.kappa * y + coupling;
    out.dw = filter_drive;
}

}  // namespace

void step(TrajectoryState& state, const SystemSpec& spec, double dt, Rng* rng) {
    const int n = spec.size();
    const std::size_t cap = state.hist_y.size();

    // The buffer holds the node at the current step before integration.
    double coupling = 0.0;
    for (int j = 0; j < n; ++j) coupling += spec.modes[j].G * state.q(j);
    state.hist_y[state.step_index % cap] = state.y;
    state.hist_ydot[state.step_index % cap] = -spec.cavity.kappa * state.y + coupling;

    static thread_local Derivative k1, k2, k3, k4;
    if (k1.dq.size() != n) {
        k1.dq.resize(n); k1.dp.resize(n);
        k2.dq.resize(n); k2.dp.resize(n);
        k3.dq.resize(n); k3.dp.resize(n);
        k4.dq.resize(n); k4.dp.resize(n);
    }

    evaluate(state, spec, state.q, state.p, state.y, state.w, 0.0, k1);
    evaluate(state, spec, state.q + 0.5 * dt * k1.dq, state.p + 0.5 * dt * k1.dp,
             state.y + 0.5 * dt * k1.dy, state.w + 0.5 * dt * k1.dw, 0.5, k2);
    evaluate(state, spec, state.q + 0.5 * dt * k2.dq, state.p + 0.5 * dt * k2.dp,
             state.y + 0.5 * dt * k2.dy, state.w + 0.5 * dt * k2.dw, 0.5, k3);
    evaluate(state, spec, state.q + dt * k3.dq, state.p + dt * k3.dp,
             state.y + dt * k3.dy, state.w + dt * k3.dw, 1.0, k4);

    const double h6 = dt / 6.0;
    state.q += h6 * (k1.dq + 2.0 * k2.dq + 2.0 * k3.dq + k4.dq);
    state.p += h6 * (k1.dp + 2.0 * k2.dp + 2.0 * k3.dp + k4.dp);
    state.y += h6 * (k1.dy + 2.0 * k2.dy + 2.0 * k3.dy + k4.dy);
    state.w += h6 * (k1.dw + 2.0 * k2.dw + 2.0 * k3.dw + k4.dw);

    if (rng) {
        for (int j = 0; j < n; ++j) {
            const auto& m = spec.modes[j];
            state.p(j) += std::sqrt((2.0 * m.nbar + 1.0) * m.gamma * dt) * rng->gaussian();
        }
    }

    ++state.step_index;
    double max_abs = std::max(std::abs(state.y), std::abs(state.w));
    max_abs = std::max(max_abs, state.q.cwiseAbs().maxCoeff());
    max_abs = std::max(max_abs, state.p.cwiseAbs().maxCoeff());
    if (!(max_abs < kDivergenceThreshold)) state.diverged = true;
}

TrajectoryEnsemble run_ensemble(const SystemSpec& spec, const SimConfig& config) {
    const int n = spec.size();
    SimConfig cfg = config;
    if (cfg.dt <= 0) cfg.dt = default_dt(spec);
    if (!(cfg.t_end > 0)) throw ConfigError("t_end must be > 0");
    if (!(cfg.burn_in >= 0 && cfg.burn_in < 1)) throw ConfigError("burn_in must lie in [0, 1)");
    if (cfg.n_traj < 1) throw ConfigError("n_traj must be >= 1");

    const long n_steps = std::lround(cfg.t_end / cfg.dt);
    if (cfg.record_stride <= 0)
        cfg.record_stride = static_cast<int>(std::max(1l, n_steps / 2000));
    const int n_rec = static_cast<int>(n_steps / cfg.record_stride) + 1;

    const int n_coll = cfg.record_basis ? static_cast<int>(cfg.record_basis->rows()) : 0;
    const int n_cols = n + n_coll;

    TrajectoryEnsemble out;
    out.dt = cfg.dt;
    out.n_collective = n_coll;
    out.rng_id = Rng::id();
    for (const auto& m : spec.modes)
        if (m.nbar < 10.0) {
            out.warnings.push_back(
                "nbar < 10: the classical-variable treatment of the trajectories is questionable");
            break;
        }

    out.time.resize(n_rec);
    for (int r = 0; r < n_rec; ++r)
        out.time[r] = static_cast<double>(r) * cfg.record_stride * cfg.dt;

    std::vector<Eigen::MatrixXd> records(cfg.n_traj);
    std::vector<char> diverged(cfg.n_traj, 0);
    std::vector<double> divergence_time(cfg.n_traj, 0.0);

    auto integrate_one = [&](int t) {
        Rng rng(Rng::derive_seed(cfg.seed, static_cast<std::uint64_t>(t)));
        TrajectoryState s = make_state(spec, cfg.dt, cfg.allow_interpolation);
        for (int j = 0; j < n; ++j) {
            const double sd = cfg.init_scale * std::sqrt(spec.modes[j].nbar + 0.5);
            s.q(j) = sd * rng.gaussian();
            s.p(j) = sd * rng.gaussian();
        }

        Eigen::MatrixXd rec(n_rec, n_cols);
        auto record_row = [&](int r) {
            for (int j = 0; j < n; ++j)
                rec(r, j) = 0.5 * (s.q(j) * s.q(j) + s.p(j) * s.p(j));
            if (n_coll) {
                const Eigen::VectorXd cq = (*cfg.record_basis) * s.q;
                const Eigen::VectorXd cp = (*cfg.record_basis) * s.p;
                for (int l = 0; l < n_coll; ++l)
                    rec(r, n + l) = 0.5 * (cq(l) * cq(l) + cp(l) * cp(l));
            }
        };

        record_row(0);
        int r = 1;
        for (long k = 1; k <= n_steps; ++k) {
            if (!s.diverged) {
                step(s, spec, cfg.dt, &rng);
                if (cfg.inject_optical_noise)
                    s.y += std::sqrt(spec.cavity.kappa * cfg.dt) * rng.gaussian();
                if (s.diverged) {
                    diverged[t] = 1;
                    divergence_time[t] = static_cast<double>(k) * cfg.dt;
                }
            }
            if (k % cfg.record_stride == 0 && r < n_rec) record_row(r++);
        }
        records[t] = std::move(rec);
    };

    if (cfg.parallel) {
#pragma omp parallel for schedule(dynamic)
        for (int t = 0; t < cfg.n_traj; ++t) integrate_one(t);
    } else {
        for (int t = 0; t < cfg.n_traj; ++t) integrate_one(t);
    }

    // Reduction in trajectory-index order: results do not depend on the
    // execution schedule.
    out.mean_n.setZero(n_rec, n_cols);
    for (int t = 0; t < cfg.n_traj; ++t) out.mean_n += records[t];
    out.mean_n /= cfg.n_traj;

    out.stderr_n.setZero(n_rec, n_cols);
    if (cfg.n_traj > 1) {
        for (int t = 0; t < cfg.n_traj; ++t)
            out.stderr_n += (records[t] - out.mean_n).cwiseAbs2();
        out.stderr_n = (out.stderr_n / (cfg.n_traj - 1.0) / cfg.n_traj).cwiseSqrt();
    }

    const double t_burn = cfg.burn_in * cfg.t_end;
    int first_steady = 0;
    while (first_steady < n_rec - 1 && out.time[first_steady] < t_burn) ++first_steady;
    const int n_steady = n_rec - first_steady;

    out.steady_n.assign(n_cols, 0.0);
    out.steady_stderr.assign(n_cols, 0.0);
    std::vector<double> traj_means(cfg.n_traj);
    for (int c = 0; c < n_cols; ++c) {
        double mean = 0.0;
        for (int t = 0; t < cfg.n_traj; ++t) {
            traj_means[t] = records[t].col(c).tail(n_steady).mean();
            mean += traj_means[t];
        }
        mean /= cfg.n_traj;
        double var = 0.0;
        for (int t = 0; t < cfg.n_traj; ++t)
            var += (traj_means[t] - mean) * (traj_means[t] - mean);
        out.steady_n[c] = mean;
        out.steady_stderr[c] =
            cfg.n_traj > 1 ? std::sqrt(var / (cfg.n_traj - 1.0) / cfg.n_traj) : 0.0;
    }

    for (int t = 0; t < cfg.n_traj; ++t) {
        if (diverged[t]) {
            ++out.diverged_count;
            if (!out.diverged || divergence_time[t] < out.first_divergence_time)
                out.first_divergence_time = divergence_time[t];
            out.diverged = true;
        }
    }
    return out;
}

DecayFit transient_occupancy(const TrajectoryEnsemble& ensemble, int column) {
    const int n_rec = static_cast<int>(ensemble.time.size());
    if (column < 0 || column >= ensemble.mean_n.cols()) throw FitFailed("no such column");
    const double steady = ensemble.steady_n[column];
    const double excess0 = ensemble.mean_n(0, column) - steady;
    if (!(excess0 > 0)) throw FitFailed("initial occupancy does not exceed the steady value");

    int relax = -1;
    for (int r = 0; r < n_rec; ++r) {
        if (ensemble.mean_n(r, column) - steady < excess0 / M_E) {
            relax = r;
            break;
        }
    }
    if (relax < 0) throw FitFailed("occupancy never relaxed within the simulated window");
    const double t_relax = ensemble.time[relax];

    std::vector<double> ts, ys;
    for (int r = 0; r < n_rec; ++r) {
        const double t = ensemble.time[r];
        if (t < 0.1 * t_relax || t > 0.5 * t_relax) continue;
        const double excess = ensemble.mean_n(r, column) - steady;
        if (!(excess > 0)) throw FitFailed("negative excess occupancy inside the fit window");
        ts.push_back(t);
        ys.push_back(std::log(excess));
    }
    if (ts.size() < 10) throw FitFailed("fewer than 10 points in the fit window");

    const double n_pts = static_cast<double>(ts.size());
    double st = 0, sy = 0, stt = 0, sty = 0;
    for (size_t i = 0; i < ts.size(); ++i) {
        st += ts[i];
        sy += ys[i];
        stt += ts[i] * ts[i];
        sty += ts[i] * ys[i];
    }
    const double slope = (n_pts * sty - st * sy) / (n_pts * stt - st * st);
    const double intercept = (sy - slope * st) / n_pts;
    double rss = 0;
    for (size_t i = 0; i < ts.size(); ++i) {
        const double e = ys[i] - (intercept + slope * ts[i]);
        rss += e * e;
    }
    return DecayFit{-slope, std::sqrt(rss / n_pts)};
}

}  // namespace colddamp
