#include "colddamp/quadrature.hpp"

#include <algorithm>
#include <cmath>

#include <omp.h>

#include "colddamp/model.hpp"

namespace colddamp {

namespace {

struct PanelResult {
    std::vector<double> value;
    double error = 0.0;
    bool failed = false;
    long evaluations = 0;
};

struct Sample {
    double x;
    std::vector<double> f;
};

class PanelIntegrator {
  public:
    PanelIntegrator(const VectorIntegrand& f, int n, const QuadratureConfig& cfg)
        : f_(f), n_(n), cfg_(cfg) {}

    PanelResult run(double a, double b, const std::vector<double>& tol) {
        result_.value.assign(n_, 0.0);
        result_.error = 0.0;
        result_.failed = false;
        result_.evaluations = 0;
        Sample fa = eval(a), fb = eval(b), fm = eval(0.5 * (a + b));
        recurse(fa, fm, fb, simpson(fa, fm, fb), tol, cfg_.depth_cap);
        return std::move(result_);
    }

  private:
    Sample eval(double x) {
        Sample s;
        s.x = x;
        s.f.resize(n_);
        f_(x, s.f.data());
        ++result_.evaluations;
        return s;
    }

    std::vector<double> simpson(const Sample& fa, const Sample& fm, const Sample& fb) {
        std::vector<double> s(n_);
        const double h6 = (fb.x - fa.x) / 6.0;
        for (int c = 0; c < n_; ++c) s[c] = h6 * (fa.f[c] + 4.0 * fm.f[c] + fb.f[c]);
        return s;
    }

    void recurse(const Sample& fa, const Sample& fm, const Sample& fb,
                 std::vector<double> whole, const std::vector<double>& tol, int depth) {
        Sample fl = eval(0.5 * (fa.x + fm.x));
        Sample fr = eval(0.5 * (fm.x + fb.x));
        std::vector<double> left = simpson(fa, fl, fm);
        std::vector<double> right = simpson(fm, fr, fb);

        bool ok = true;
        double err = 0.0;
        for (int c = 0; c < n_; ++c) {
            const double e = std::abs(left[c] + right[c] - whole[c]) / 15.0;
            err = std::max(err, e - tol[c]);
            if (e > tol[c]) ok = false;
        }
        if (ok || depth <= 0) {
            if (!ok) {
                result_.failed = true;
                result_.error += err;
            }
            for (int c = 0; c < n_; ++c)
                result_.value[c] += left[c] + right[c] + (left[c] + right[c] - whole[c]) / 15.0;
            return;
        }
        std::vector<double> half_tol(n_);
        for (int c = 0; c < n_; ++c) half_tol[c] = 0.5 * tol[c];
        recurse(fa, fl, fm, std::move(left), half_tol, depth - 1);
        recurse(fm, fr, fb, std::move(right), half_tol, depth - 1);
    }

    const VectorIntegrand& f_;
    int n_;
    const QuadratureConfig& cfg_;
    PanelResult result_;
};

}  // namespace

std::vector<double> frequency_breakpoints(const SystemSpec& spec, double tau,
                                          const QuadratureConfig& cfg) {
    const double kappa = spec.cavity.kappa;
    const double wfb = spec.feedback.omega_fb;
    double omega_max = cfg.omega_max;
    if (omega_max <= 0)
        omega_max = std::max({10.0 * kappa, 10.0 * wfb, spec.max_omega() + 10.0 * kappa});

    const double cap_window = tau > 0 ? (2.0 * M_PI / tau) / 16.0 : omega_max;
    const double cap_tail = tau > 0 ? (2.0 * M_PI / tau) / 4.0 : omega_max;

    std::vector<std::pair<double, double>> windows;
    for (int j = 0; j < spec.size(); ++j) {
        const auto& m = spec.modes[j];
        const RateSet r = rates(spec, Regime::wfflc, m.omega);
        const double c = std::cos(m.omega * tau), s = std::sin(m.omega * tau);
        const double geff = m.gamma + r.gamma_fb(j, j) * c - r.delta_omega(j, j) * s;
        const double half = cfg.window_halfwidths * std::max(std::abs(geff), 1e-12 * m.omega);
        windows.emplace_back(std::max(0.0, m.omega - half), std::min(omega_max, m.omega + half));
    }
    std::sort(windows.begin(), windows.end());
    std::vector<std::pair<double, double>> merged;
    for (const auto& w : windows) {
        if (!merged.empty() && w.first <= merged.back().second)
            merged.back().second = std::max(merged.back().second, w.second);
        else
            merged.push_back(w);
    }

    std::vector<double> pts;
    pts.push_back(0.0);

    auto fill_uniform = [&pts](double a, double b, int n) {
        for (int i = 1; i <= n; ++i) pts.push_back(a + (b - a) * i / n);
    };
    auto fill_log = [&](double a, double b) {
        const double ratio = std::pow(10.0, 1.0 / cfg.tail_points_per_decade);
        double x = std::max(a, 1e-6 * omega_max);
        while (x < b) {
            const double next = std::min({x * ratio, x + cap_tail, b});
            pts.push_back(next);
            x = next;
        }
    };

    double cursor = 0.0;
    for (const auto& w : merged) {
        if (w.first > cursor) {
            if (cursor == 0.0)
                fill_uniform(0.0, w.first, 64);
            else
                fill_log(cursor, w.first);
        }
        const double width = w.second - w.first;
        const int n = std::max(cfg.window_min_points,
                               static_cast<int>(std::ceil(width / cap_window)));
        fill_uniform(w.first, w.second, n);
        cursor = w.second;
    }
    if (cursor < omega_max) {
        if (cursor == 0.0) {
            const double lin_end = std::min(1.0, omega_max);
            fill_uniform(0.0, lin_end, 64);
            cursor = lin_end;
        }
        fill_log(cursor, omega_max);
    }
    pts.push_back(omega_max);

    std::sort(pts.begin(), pts.end());
    std::vector<double> unique;
    unique.reserve(pts.size());
    for (double p : pts)
        if (unique.empty() || p - unique.back() > 1e-12 * omega_max) unique.push_back(p);
    if (unique.back() < omega_max) unique.push_back(omega_max);
    return unique;
}

QuadratureResult integrate_panels(const std::vector<double>& breakpoints, int n_components,
                                  const VectorIntegrand& f, const QuadratureConfig& cfg) {
    if (breakpoints.size() < 2) throw Error("quadrature needs at least one panel");
    const int n_panels = static_cast<int>(breakpoints.size()) - 1;

    // Coarse pass fixes the per-component scale, then each panel gets an equal
    // share of the absolute error budget.
    std::vector<double> scale(n_components, 0.0);
    {
        std::vector<double> fa(n_components), fm(n_components), fb(n_components);
        for (int p = 0; p < n_panels; ++p) {
            const double a = breakpoints[p], b = breakpoints[p + 1];
            f(a, fa.data());
            f(0.5 * (a + b), fm.data());
            f(b, fb.data());
            for (int c = 0; c < n_components; ++c)
                scale[c] += std::abs((b - a) / 6.0 * (fa[c] + 4.0 * fm[c] + fb[c]));
        }
    }
    std::vector<double> tol(n_components);
    double max_scale = 0.0;
    for (int c = 0; c < n_components; ++c) max_scale = std::max(max_scale, scale[c]);
    for (int c = 0; c < n_components; ++c)
        tol[c] = cfg.rel_tol * std::max(scale[c], 1e-9 * max_scale + 1e-300) / n_panels;

    std::vector<PanelResult> results(n_panels);
    if (cfg.parallel) {
#pragma omp parallel
        {
            PanelIntegrator worker(f, n_components, cfg);
#pragma omp for schedule(dynamic, 4)
            for (int p = 0; p < n_panels; ++p)
                results[p] = worker.run(breakpoints[p], breakpoints[p + 1], tol);
        }
    } else {
        PanelIntegrator worker(f, n_components, cfg);
        for (int p = 0; p < n_panels; ++p)
            results[p] = worker.run(breakpoints[p], breakpoints[p + 1], tol);
    }

    QuadratureResult out;
    out.value.assign(n_components, 0.0);
    for (const PanelResult& r : results) {
        for (int c = 0; c < n_components; ++c) out.value[c] += r.value[c];
        out.error_estimate += r.error;
        out.evaluations += r.evaluations;
        if (r.failed) ++out.panels_failed;
    }
    double max_value = 0.0;
    for (double v : out.value) max_value = std::max(max_value, std::abs(v));
    out.converged = out.panels_failed == 0 ||
                    out.error_estimate <= 10.0 * cfg.rel_tol * std::max(max_value, 1e-300);
    return out;
}

}  // namespace colddamp
