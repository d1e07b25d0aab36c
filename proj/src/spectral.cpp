#include "colddamp/spectral.hpp"

#include <cmath>

#include <Eigen/LU>

namespace colddamp {

namespace {

using Complex = std::complex<double>;
constexpr Complex kI{0.0, 1.0};

// Feedback transfer g0_j(Omega) = i Omega omega_fb g_cd_j / (omega_fb + i Omega).
Complex feedback_transfer(const SystemSpec& spec, int j, double Omega) {
    const double wfb = spec.feedback.omega_fb;
    return kI * Omega * wfb * spec.modes[j].g_cd / Complex(wfb, Omega);
}

// F_j(Omega) = g0_j(Omega) e^{-i Omega tau} / (kappa + i Omega). The product
// F_j G_k omega_k is the feedback block of the inverse susceptibility and
// F_j G_j omega_j = (omega_eff_j^2 - omega_j^2) + i Omega (gamma_eff_j - gamma_j).
Complex feedback_block(const SystemSpec& spec, int j, double Omega, double tau) {
    return feedback_transfer(spec, j, Omega) * std::exp(-kI * Omega * tau) /
           Complex(spec.cavity.kappa, Omega);
}

double thermal_white(const SystemSpec& spec, int j) {
    return spec.modes[j].gamma * (2.0 * spec.modes[j].nbar + 1.0);
}

// Symmetrized coth spectrum at the temperature implied by nbar_j.
double thermal_exact(const SystemSpec& spec, int j, double Omega) {
    const auto& m = spec.modes[j];
    if (m.nbar <= 0.0) return m.gamma * std::abs(Omega) / m.omega;
    const double temp = m.omega / std::log1p(1.0 / m.nbar);
    const double x = Omega / (2.0 * temp);
    if (std::abs(x) < 1e-8) return m.gamma * 2.0 * temp / m.omega;
    return m.gamma * Omega / (m.omega * std::tanh(x));
}

}  // namespace

std::string to_string(NoiseModel m) {
    switch (m) {
        case NoiseModel::white_thermal: return "white-thermal";
        case NoiseModel::exact_thermal: return "exact-thermal";
        case NoiseModel::full: return "full";
    }
    return "?";
}

EffectiveResponse effective_response(const SystemSpec& spec, double Omega, double tau) {
    const int n = spec.size();
    const RateSet r = rates(spec, Regime::wfflc, Omega);
    const double c = std::cos(Omega * tau), s = std::sin(Omega * tau);
    EffectiveResponse out;
    out.omega_eff_sq.resize(n);
    out.gamma_eff.resize(n);
    for (int j = 0; j < n; ++j) {
        const double w = spec.modes[j].omega;
        out.omega_eff_sq[j] = w * w + Omega * (r.delta_omega(j, j) * c + r.gamma_fb(j, j) * s);
        out.gamma_eff[j] = spec.modes[j].gamma + r.gamma_fb(j, j) * c - r.delta_omega(j, j) * s;
    }
    return out;
}

Eigen::MatrixXcd susceptibility_inverse(const SystemSpec& spec, double Omega, double tau) {
    const int n = spec.size();
    Eigen::MatrixXcd inv(n, n);
    for (int j = 0; j < n; ++j) {
        const Complex fb = feedback_block(spec, j, Omega, tau);
        const double wj = spec.modes[j].omega;
        for (int k = 0; k < n; ++k) inv(j, k) = fb * spec.modes[k].G;
        inv(j, j) += Complex(wj * wj - Omega * Omega, Omega * spec.modes[j].gamma) / wj;
    }
    return inv;
}

Eigen::MatrixXcd noise_spectrum(const SystemSpec& spec, double Omega, double tau,
                                NoiseModel model) {
    const int n = spec.size();
    Eigen::MatrixXcd S = Eigen::MatrixXcd::Zero(n, n);
    for (int j = 0; j < n; ++j)
        S(j, j) = model == NoiseModel::exact_thermal ? thermal_exact(spec, j, Omega)
                                                     : thermal_white(spec, j);
    if (model != NoiseModel::full) return S;

    const double kappa = spec.cavity.kappa;
    const double eta = spec.cavity.eta;
    const Complex phase = std::exp(-kI * Omega * tau);
    const Complex pole(kappa, Omega);
    for (int j = 0; j < n; ++j) {
        const Complex g0j = feedback_transfer(spec, j, Omega);
        for (int k = 0; k < n; ++k) {
            const Complex g0k = feedback_transfer(spec, k, Omega);
            Complex v = g0j * std::conj(g0k) / (4.0 * kappa * eta);
            v += kappa * spec.modes[j].G * spec.modes[k].G / (kappa * kappa + Omega * Omega);
            v += kI * g0j * spec.modes[k].G * phase / (2.0 * pole);
            v -= kI * std::conj(g0k) * spec.modes[j].G * std::conj(phase) / (2.0 * std::conj(pole));
            S(j, k) += v;
        }
    }
    return S;
}

FourierOccupancy occupancy_fourier_matrix(const SystemSpec& spec, double tau,
                                          const QuadratureConfig& cfg, NoiseModel model) {
    const int n = spec.size();
    // Components: upper triangle of Re(chi S chi^dag) with the energy weight,
    // then the diagonal imaginary parts as a reality diagnostic.
    const int n_sym = n * (n + 1) / 2;
    const int n_comp = n_sym + n;

    // The interference part of the full noise model is odd in Omega, so the
    // half-line integration averages +Omega and -Omega; for even integrands
    // this is the plain doubling.
    auto correlation = [&](double Omega) {
        const Eigen::MatrixXcd inv = susceptibility_inverse(spec, Omega, tau);
        const Eigen::MatrixXcd chi = inv.partialPivLu().inverse();
        const Eigen::MatrixXcd S = noise_spectrum(spec, Omega, tau, model);
        return Eigen::MatrixXcd(chi * S * chi.adjoint());
    };
    VectorIntegrand f = [&](double Omega, double* out) {
        const Eigen::MatrixXcd corr =
            0.5 * (correlation(Omega) + correlation(-Omega));
        int c = 0;
        for (int j = 0; j < n; ++j) {
            for (int k = j; k < n; ++k) {
                const double weight =
                    0.5 * (1.0 + Omega * Omega / (spec.modes[j].omega * spec.modes[k].omega));
                out[c++] = corr(j, k).real() * weight / M_PI;
            }
        }
        for (int j = 0; j < n; ++j) out[c++] = corr(j, j).imag();
    };

    const std::vector<double> panels = frequency_breakpoints(spec, tau, cfg);
    const QuadratureResult res = integrate_panels(panels, n_comp, f, cfg);
    if (!res.converged)
        throw QuadratureDiverged("spectral quadrature did not converge; configuration likely unstable");

    FourierOccupancy out;
    out.matrix.resize(n, n);
    int c = 0;
    for (int j = 0; j < n; ++j)
        for (int k = j; k < n; ++k) {
            out.matrix(j, k) = res.value[c];
            out.matrix(k, j) = res.value[c];
            ++c;
        }
    for (int j = 0; j < n; ++j)
        out.max_diag_imag = std::max(out.max_diag_imag, std::abs(res.value[n_sym + j]));
    out.diagnostics = res;
    return out;
}

std::vector<double> occupancy_fourier(const SystemSpec& spec, double tau,
                                      const QuadratureConfig& cfg, NoiseModel model) {
    const FourierOccupancy occ = occupancy_fourier_matrix(spec, tau, cfg, model);
    std::vector<double> n(spec.size());
    for (int j = 0; j < spec.size(); ++j) n[j] = occ.matrix(j, j);
    return n;
}

SpectrumGrid spectrum_modes(const SystemSpec& spec, double tau,
                            const std::vector<double>& grid) {
    const int n = spec.size();
    SpectrumGrid out;
    out.omega = grid;
    out.s_q.resize(static_cast<Eigen::Index>(grid.size()), n);
    for (size_t m = 0; m < grid.size(); ++m) {
        const Eigen::MatrixXcd inv = susceptibility_inverse(spec, grid[m], tau);
        const Eigen::MatrixXcd chi = inv.partialPivLu().inverse();
        const Eigen::MatrixXcd S = noise_spectrum(spec, grid[m], tau, NoiseModel::full);
        const Eigen::MatrixXcd corr = chi * S * chi.adjoint();
        for (int j = 0; j < n; ++j) out.s_q(static_cast<Eigen::Index>(m), j) = corr(j, j).real();
    }
    return out;
}

SpectrumGrid spectrum_single(const SystemSpec& spec, double tau,
                             const std::vector<double>& grid) {
    if (spec.size() != 1) throw Error("spectrum_single needs exactly one mode");
    const auto& mode = spec.modes[0];
    const double kappa = spec.cavity.kappa;
    const double eta = spec.cavity.eta;

    SpectrumGrid out;
    out.omega = grid;
    out.s_q.resize(static_cast<Eigen::Index>(grid.size()), 1);
    out.has_components = true;
    out.thermal.resize(grid.size());
    out.radiation_pressure.resize(grid.size());
    out.feedback.resize(grid.size());
    out.interference.resize(grid.size());

    for (size_t m = 0; m < grid.size(); ++m) {
        const double Omega = grid[m];
        const EffectiveResponse eff = effective_response(spec, Omega, tau);
        const double denom_re = eff.omega_eff_sq[0] - Omega * Omega;
        const double denom_im = Omega * eff.gamma_eff[0];
        const double chi2 =
            mode.omega * mode.omega / (denom_re * denom_re + denom_im * denom_im);

        const Complex g0 = feedback_transfer(spec, 0, Omega);
        const double s_th = thermal_white(spec, 0);
        const double s_rp = mode.G * mode.G * kappa / (kappa * kappa + Omega * Omega);
        const double s_fb = std::norm(g0) / (4.0 * kappa * eta);
        const double s_int =
            (kI * g0 * mode.G * std::exp(-kI * Omega * tau) / Complex(kappa, Omega)).real();

        out.thermal[m] = chi2 * s_th;
        out.radiation_pressure[m] = chi2 * s_rp;
        out.feedback[m] = chi2 * s_fb;
        out.interference[m] = chi2 * s_int;
        out.s_q(static_cast<Eigen::Index>(m), 0) =
            out.thermal[m] + out.radiation_pressure[m] + out.feedback[m] + out.interference[m];
    }
    return out;
}

namespace {

double sfflc_residual_approx(const SystemSpec& spec, int n_modes) {
    const auto& m = spec.modes[0];
    const double kappa = spec.cavity.kappa;
    const double wfb = spec.feedback.omega_fb;
    const double eta = spec.cavity.eta;
    const double Gamma = m.omega * m.g_cd * m.G / kappa;
    const double mismatch = m.g_cd * m.omega / (2.0 * std::sqrt(eta)) - m.G;
    const double excess = m.g_cd * m.g_cd * m.omega * m.omega / (4.0 * eta) - m.G * m.G;
    return mismatch * mismatch / (2.0 * kappa * Gamma) +
           (1.0 - std::sqrt(eta)) / (2.0 * std::sqrt(eta)) +
           n_modes * (excess * (kappa + wfb) / (4.0 * kappa * kappa * wfb) +
                      wfb * m.g_cd * m.g_cd / (16.0 * kappa * eta));
}

}  // namespace

ResidualOccupancy residual_occupancy(const SystemSpec& spec, double tau) {
    if (spec.size() != 1) throw Error("residual_occupancy needs exactly one mode");
    const auto& m = spec.modes[0];
    const double kappa = spec.cavity.kappa;
    const double wfb = spec.feedback.omega_fb;
    const double eta = spec.cavity.eta;
    const double w2 = m.omega * m.omega;

    const EffectiveResponse eff = effective_response(spec, m.omega, tau);
    const double we2 = eff.omega_eff_sq[0];
    const double ge = eff.gamma_eff[0];

    const double k2 = kappa * kappa;
    const double rp_bracket =
        kappa - (k2 - w2) * (kappa + ge) * (we2 + k2 - kappa * ge) /
                    ((we2 + k2) * (we2 + k2) - ge * ge * k2);
    const double f2 = wfb * wfb;
    const double fb_bracket =
        w2 + ((we2 + f2) * (we2 * we2 - w2 * f2) + wfb * (f2 - w2) * we2 * ge) /
                 ((we2 + f2) * (we2 + f2) - ge * ge * f2);

    ResidualOccupancy out;
    out.full = m.G * m.G / (4.0 * we2 * ge) * rp_bracket +
               f2 * m.g_cd * m.g_cd / (16.0 * kappa * eta * we2 * ge) * fb_bracket - 0.5;
    out.sfflc_approx = sfflc_residual_approx(spec, 1);
    return out;
}

BrightResidual bright_residual(const SystemSpec& spec, int n_modes, double tau) {
    if (spec.size() != 1) throw Error("bright_residual expects the single-mode template");
    if (n_modes < 1) throw Error("bright_residual needs n_modes >= 1");
    const auto& m = spec.modes[0];
    const double kappa = spec.cavity.kappa;
    const double eta = spec.cavity.eta;

    // Bright-mode response frozen at resonance, matching the closed-form
    // derivation: the noise keeps its full frequency dependence.
    const EffectiveResponse eff = effective_response(spec, m.omega, tau);
    const double wb2 = m.omega * m.omega + n_modes * (eff.omega_eff_sq[0] - m.omega * m.omega);
    const double gb = m.gamma + n_modes * (eff.gamma_eff[0] - m.gamma);
    if (!(gb > 0)) throw Unstable("bright residual needs positive effective damping");

    // The interference component is odd in Omega; averaging over +-Omega
    // keeps the half-line quadrature equal to the full-line integral.
    auto weighted = [&](double Omega) {
        const double dre = wb2 - Omega * Omega;
        const double chi2 = m.omega * m.omega / (dre * dre + Omega * Omega * gb * gb);

        const Complex g0 = feedback_transfer(spec, 0, Omega);
        const double s_rp = m.G * m.G * kappa / (kappa * kappa + Omega * Omega);
        const double s_fb = std::norm(g0) / (4.0 * kappa * eta);
        const double s_int =
            (kI * g0 * m.G * std::exp(-kI * Omega * tau) / Complex(kappa, Omega)).real();
        return chi2 * n_modes * (s_rp + s_fb + s_int) *
               0.5 * (1.0 + Omega * Omega / (m.omega * m.omega)) / M_PI;
    };
    VectorIntegrand f = [&](double Omega, double* out) {
        out[0] = 0.5 * (weighted(Omega) + weighted(-Omega));
    };

    QuadratureConfig cfg;
    cfg.rel_tol = 1e-5;
    // The feedback-noise tail falls off only as 1/Omega^2; reach far enough
    // that the truncated fraction is negligible against the 5% oracles.
    cfg.omega_max = 2000.0 * std::max(kappa, spec.feedback.omega_fb);
    const std::vector<double> panels = frequency_breakpoints(spec, tau, cfg);
    const QuadratureResult res = integrate_panels(panels, 1, f, cfg);
    if (!res.converged)
        throw QuadratureDiverged("bright residual quadrature did not converge");

    BrightResidual out;
    out.quadrature = res.value[0] - 0.5;
    out.sfflc_approx = sfflc_residual_approx(spec, n_modes);
    return out;
}

}  // namespace colddamp
