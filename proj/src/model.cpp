#include "colddamp/model.hpp"

#include <cmath>
#include <sstream>

namespace colddamp {

std::string to_string(Regime r) {
    switch (r) {
        case Regime::sfflc: return "sfflc";
        case Regime::wfflc: return "wfflc";
        case Regime::exact_fourier: return "exact-fourier";
    }
    return "?";
}

Regime regime_from_string(const std::string& s) {
    if (s == "sfflc") return Regime::sfflc;
    if (s == "wfflc") return Regime::wfflc;
    if (s == "exact-fourier") return Regime::exact_fourier;
    throw ConfigError("unknown regime '" + s + "' (expected sfflc, wfflc or exact-fourier)");
}

double SystemSpec::max_omega() const {
    double m = 0.0;
    for (const auto& mode : modes) m = std::max(m, mode.omega);
    return m;
}

void validate(const SystemSpec& spec) {
    if (spec.modes.empty()) throw ConfigError("at least one mechanical mode is required");
    int idx = 1;
    for (const auto& m : spec.modes) {
        std::ostringstream where;
        where << "modes." << idx;
        if (!(m.omega > 0)) throw ConfigError(where.str() + ".omega must be > 0");
        if (!(m.gamma > 0)) throw ConfigError(where.str() + ".gamma must be > 0");
        if (!(m.nbar >= 0)) throw ConfigError(where.str() + ".nbar must be >= 0");
        if (!(m.G >= 0)) throw ConfigError(where.str() + ".G must be >= 0");
        if (!(m.g_cd >= 0)) throw ConfigError(where.str() + ".g_cd must be >= 0");
        if (spec.coupling_source == CouplingSource::mean_field && !m.g_om)
            throw ConfigError(where.str() + ".g_om required when couplings come from the mean-field solve");
        ++idx;
    }
    if (!(spec.cavity.kappa > 0)) throw ConfigError("cavity.kappa must be > 0");
    if (!(spec.cavity.eta > 0 && spec.cavity.eta <= 1)) throw ConfigError("cavity.eta must lie in (0, 1]");
    if (!(spec.feedback.omega_fb > 0)) throw ConfigError("feedback.omega_fb must be > 0");
    if (!(spec.feedback.tau >= 0)) throw ConfigError("feedback.tau must be >= 0");
}

ClassicalSteadyState solve_classical_amplitude(const SystemSpec& spec,
                                               int max_iterations,
                                               double relaxation) {
    if (!spec.cavity.epsilon)
        throw ConfigError("cavity.epsilon required for the mean-field solve");
    for (const auto& m : spec.modes)
        if (!m.g_om) throw ConfigError("every mode needs g_om for the mean-field solve");

    const double eps = *spec.cavity.epsilon;
    const double kappa = spec.cavity.kappa;
    const double delta0 = spec.cavity.delta0;

    auto rhs = [&](std::complex<double> a) {
        double shift = 0.0;
        for (const auto& m : spec.modes)
            shift += (*m.g_om) * (*m.g_om) * std::norm(a) / m.omega;
        return eps / std::complex<double>(kappa, delta0 - shift);
    };

    std::complex<double> a = eps / kappa;
    double residual = 0.0;
    for (int it = 1; it <= max_iterations; ++it) {
        const std::complex<double> next = rhs(a);
        residual = std::abs(a - next);
        a = (1.0 - relaxation) * a + relaxation * next;
        if (residual < 1e-12 * std::max(std::abs(a), 1e-300)) {
            ClassicalSteadyState out;
            out.amplitude = a;
            double shift = 0.0;
            out.displacements.reserve(spec.modes.size());
            for (const auto& m : spec.modes) {
                shift += (*m.g_om) * (*m.g_om) * std::norm(a) / m.omega;
                out.displacements.push_back((*m.g_om) / m.omega * std::norm(a));
            }
            out.detuning = delta0 - shift;
            out.iterations = it;
            out.residual = residual;
            return out;
        }
    }
    throw NoConvergence("mean-field fixed point did not converge", residual);
}

SystemSpec linearize(SystemSpec spec, std::complex<double> amplitude) {
    if (spec.coupling_source == CouplingSource::mean_field) {
        for (auto& m : spec.modes)
            m.G = std::sqrt(2.0) * (*m.g_om) * std::abs(amplitude);
    }
    spec.cavity.delta0 = 0.0;  // effective detuning kept at zero
    spec.linearized = true;
    return spec;
}

RateSet rates(const SystemSpec& spec, Regime regime, double Omega) {
    const int n = spec.size();
    RateSet out;
    out.regime = regime;
    out.omega_eval = Omega;
    out.gamma_fb.setZero(n, n);
    out.delta_omega.setZero(n, n);

    const double kappa = spec.cavity.kappa;
    const double wfb = spec.feedback.omega_fb;
    for (int j = 0; j < n; ++j) {
        for (int k = 0; k < n; ++k) {
            const double gg = spec.modes[j].g_cd * spec.modes[k].G * spec.modes[k].omega;
            if (regime == Regime::sfflc) {
                out.gamma_fb(j, k) = gg / kappa;
            } else {
                const double den = (kappa * kappa + Omega * Omega) * (wfb * wfb + Omega * Omega);
                out.gamma_fb(j, k) = gg * wfb * (kappa * wfb - Omega * Omega) / den;
                out.delta_omega(j, k) = gg * wfb * Omega * (wfb + kappa) / den;
            }
        }
    }
    return out;
}

RateSet rates_at_mode_frequencies(const SystemSpec& spec, Regime regime) {
    const int n = spec.size();
    RateSet out;
    out.regime = regime;
    out.at_mode_frequencies = true;
    out.gamma_fb.setZero(n, n);
    out.delta_omega.setZero(n, n);
    for (int k = 0; k < n; ++k) {
        const RateSet col = rates(spec, regime, spec.modes[k].omega);
        out.gamma_fb.col(k) = col.gamma_fb.col(k);
        out.delta_omega.col(k) = col.delta_omega.col(k);
    }
    return out;
}

}  // namespace colddamp
