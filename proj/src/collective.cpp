#include "colddamp/collective.hpp"

#include <cmath>

#include <Eigen/LU>

namespace colddamp {

namespace {

using Complex = std::complex<double>;
constexpr Complex kI{0.0, 1.0};

void fix_sign(Eigen::MatrixXd& alpha, Eigen::Index r) {
    for (Eigen::Index i = 0; i < alpha.cols(); ++i) {
        if (std::abs(alpha(r, i)) > 1e-12) {
            if (alpha(r, i) < 0) alpha.row(r) = -alpha.row(r);
            return;
        }
    }
}

}  // namespace

CollectiveBasis build_basis(const Eigen::VectorXd& couplings) {
    const Eigen::Index n = couplings.size();
    const double norm = couplings.norm();
    if (!(norm > 0)) throw AllZeroCouplings("all couplings are zero; no bright mode exists");

    Eigen::MatrixXd alpha(n, n);
    alpha.row(0) = couplings.transpose() / norm;

    // Modified Gram-Schmidt over the canonical seeds, with a second
    // orthogonalization pass; seeds parallel to the span so far are skipped.
    Eigen::Index rows = 1;
    for (Eigen::Index seed = 0; seed < n && rows < n; ++seed) {
        Eigen::RowVectorXd v = Eigen::RowVectorXd::Zero(n);
        v(seed) = 1.0;
        for (int pass = 0; pass < 2; ++pass)
            for (Eigen::Index r = 0; r < rows; ++r)
                v -= (v * alpha.row(r).transpose()) * alpha.row(r);
        const double vn = v.norm();
        if (vn < 1e-10) continue;
        alpha.row(rows) = v / vn;
        fix_sign(alpha, rows);
        ++rows;
    }
    if (rows != n) throw Error("Gram-Schmidt failed to complete the dark basis");
    return CollectiveBasis{std::move(alpha)};
}

CollectiveBasis build_basis(const SystemSpec& spec) {
    Eigen::VectorXd g(spec.size());
    for (int j = 0; j < spec.size(); ++j) g(j) = spec.modes[j].G;
    return build_basis(g);
}

CovarianceMatrix transform_cov(const CovarianceMatrix& cov, const CollectiveBasis& basis) {
    const Eigen::Index n = basis.alpha.rows();
    if (cov.V.rows() != 2 * n)
        throw Error("covariance dimension does not match the basis");
    Eigen::MatrixXd T = Eigen::MatrixXd::Zero(2 * n, 2 * n);
    for (Eigen::Index l = 0; l < n; ++l)
        for (Eigen::Index k = 0; k < n; ++k) {
            T(2 * l, 2 * k) = basis.alpha(l, k);
            T(2 * l + 1, 2 * k + 1) = basis.alpha(l, k);
        }
    return CovarianceMatrix{T * cov.V * T.transpose()};
}

DegenerateOccupancy degenerate_bright_occupancy(const SystemSpec& spec, double tau) {
    const int n = spec.size();
    const auto& first = spec.modes[0];
    for (const auto& m : spec.modes) {
        if (std::abs(m.omega - first.omega) > 1e-12 * first.omega ||
            std::abs(m.gamma - first.gamma) > 1e-12 * first.gamma ||
            std::abs(m.nbar - first.nbar) > 1e-12 * std::max(first.nbar, 1.0) ||
            std::abs(m.G - first.G) > 1e-12 * std::max(first.G, 1e-300) ||
            std::abs(m.g_cd - first.g_cd) > 1e-12 * std::max(first.g_cd, 1e-300))
            throw Error("degenerate_bright_occupancy needs identical modes");
    }

    const Regime regime =
        spec.feedback.regime == Regime::sfflc ? Regime::sfflc : Regime::wfflc;
    const RateSet r = rates(spec, regime, first.omega);
    const double Gamma = r.gamma_fb(0, 0);
    const double shift = r.delta_omega(0, 0);
    const double c = std::cos(first.omega * tau), s = std::sin(first.omega * tau);

    const double gamma_eff = first.gamma + n * (Gamma * c - shift * s);
    const double omega_den = first.omega + n * (shift * c + Gamma * s);
    if (!(gamma_eff > 0) || !(omega_den > 0))
        throw Unstable("bright-mode effective damping is not positive at this delay");

    DegenerateOccupancy out;
    out.bright = 0.5 * first.gamma * (first.nbar + 0.5) / gamma_eff *
                 (1.0 + first.omega / omega_den);
    out.dark = first.nbar + 0.5;
    out.dark_high_t = first.nbar;
    return out;
}

CollectiveResponse dark_mode_response(const SystemSpec& spec, double Omega, double tau,
                                      const CollectiveBasis& basis) {
    const int n = spec.size();
    if (basis.alpha.rows() != n) throw Error("basis dimension does not match the system");

    double gnorm2 = 0.0;
    for (const auto& m : spec.modes) gnorm2 += m.G * m.G;
    const double gnorm = std::sqrt(gnorm2);

    // Bare denominators, feedback blocks e_j = F_j G_j omega_j.
    Eigen::VectorXcd bare(n), fb(n);
    const double kappa = spec.cavity.kappa;
    const double wfb = spec.feedback.omega_fb;
    for (int j = 0; j < n; ++j) {
        const auto& m = spec.modes[j];
        bare(j) = Complex(m.omega * m.omega - Omega * Omega, Omega * m.gamma);
        const Complex g0 = kI * Omega * wfb * m.g_cd / Complex(wfb, Omega);
        fb(j) = g0 * std::exp(-kI * Omega * tau) / Complex(kappa, Omega) * m.G * m.omega;
    }

    CollectiveResponse out;
    out.bright.resize(n);
    for (int j = 0; j < n; ++j) {
        Complex denom = bare(j) + fb(j);
        for (int k = 0; k < n; ++k)
            if (k != j) denom += fb(k) * bare(j) / bare(k);
        out.bright(j) = spec.modes[j].omega * spec.modes[j].G / (gnorm * denom);
    }

    out.dark.resize(n - 1, n);
    for (int l = 1; l < n; ++l) {
        // Bright-dark coupling: sum_j (alpha_lj / alpha_1j) e_j / d_j, written
        // through F_j omega_j so zero couplings cause no 0/0.
        Complex coupling = 0.0;
        for (int j = 0; j < n; ++j) {
            const auto& m = spec.modes[j];
            const Complex g0 = kI * Omega * wfb * m.g_cd / Complex(wfb, Omega);
            const Complex fj = g0 * std::exp(-kI * Omega * tau) / Complex(kappa, Omega);
            coupling += basis.alpha(l, j) * fj * m.omega * gnorm / bare(j);
        }
        for (int j = 0; j < n; ++j)
            out.dark(l - 1, j) = basis.alpha(l, j) * spec.modes[j].omega / bare(j) -
                                 coupling * out.bright(j);
    }
    return out;
}

std::vector<double> collective_occupancy_fourier(const SystemSpec& spec, double tau,
                                                 const CollectiveBasis& basis,
                                                 const QuadratureConfig& cfg,
                                                 NoiseModel model) {
    const int n = spec.size();

    Eigen::MatrixXd alpha_w(n, n);
    for (int l = 0; l < n; ++l)
        for (int j = 0; j < n; ++j)
            alpha_w(l, j) = basis.alpha(l, j) / spec.modes[j].omega;

    // Momentum rows are P_l = sum_j alpha_lj (i Omega / omega_j) q_j; the
    // +-Omega average keeps odd noise components out of the half-line sum.
    auto energies = [&](double Omega, double* out) {
        const CollectiveResponse resp = dark_mode_response(spec, Omega, tau, basis);
        Eigen::MatrixXcd qrows(n, n);
        qrows.row(0) = resp.bright;
        for (int l = 1; l < n; ++l) qrows.row(l) = resp.dark.row(l - 1);

        const Eigen::MatrixXcd inv = susceptibility_inverse(spec, Omega, tau);
        const Eigen::MatrixXcd chi = inv.partialPivLu().inverse();
        const Eigen::MatrixXcd prows = alpha_w * chi;

        const Eigen::MatrixXcd S = noise_spectrum(spec, Omega, tau, model);
        for (int l = 0; l < n; ++l) {
            const Complex qq = qrows.row(l) * S * qrows.row(l).adjoint();
            const Complex pp = prows.row(l) * S * prows.row(l).adjoint();
            out[l] = 0.5 * (qq.real() + Omega * Omega * pp.real()) / M_PI;
        }
    };
    VectorIntegrand f = [&](double Omega, double* out) {
        std::vector<double> neg(n);
        energies(Omega, out);
        energies(-Omega, neg.data());
        for (int l = 0; l < n; ++l) out[l] = 0.5 * (out[l] + neg[l]);
    };

    const std::vector<double> panels = frequency_breakpoints(spec, tau, cfg);
    const QuadratureResult res = integrate_panels(panels, n, f, cfg);
    if (!res.converged)
        throw QuadratureDiverged("collective quadrature did not converge");
    return res.value;
}

}  // namespace colddamp
