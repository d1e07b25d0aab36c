#include "colddamp/markov.hpp"

#include <cmath>
#include <sstream>

#include <Eigen/Eigenvalues>
#include <Eigen/LU>

namespace colddamp {

namespace {

// Delay-weighted rate combinations entering the drift. For the sFFLC the
// shift matrix is zero and these reduce to Gamma cos / Gamma sin.
struct DelayedRates {
    Eigen::MatrixXd damping;  // Delta Gamma_jk(tau)
    Eigen::MatrixXd shift;    // Delta Omega_jk(tau)
};

DelayedRates delayed_rates(const SystemSpec& spec, const RateSet& rates, double tau) {
    const int n = spec.size();
    DelayedRates out;
    out.damping.resize(n, n);
    out.shift.resize(n, n);
    for (int k = 0; k < n; ++k) {
        const double c = std::cos(spec.modes[k].omega * tau);
        const double s = std::sin(spec.modes[k].omega * tau);
        for (int j = 0; j < n; ++j) {
            out.damping(j, k) = rates.gamma_fb(j, k) * c - rates.delta_omega(j, k) * s;
            out.shift(j, k) = rates.gamma_fb(j, k) * s + rates.delta_omega(j, k) * c;
        }
    }
    return out;
}

}  // namespace

DriftMatrix build_drift(const SystemSpec& spec, const RateSet& rates, double tau) {
    const int n = spec.size();
    const DelayedRates dr = delayed_rates(spec, rates, tau);

    DriftMatrix out;
    out.regime = rates.regime;
    out.tau = tau;
    out.M.setZero(2 * n, 2 * n);
    for (int j = 0; j < n; ++j) {
        out.M(2 * j, 2 * j + 1) = spec.modes[j].omega;
        out.M(2 * j + 1, 2 * j) = -(spec.modes[j].omega + dr.shift(j, j));
        out.M(2 * j + 1, 2 * j + 1) = -(spec.modes[j].gamma + dr.damping(j, j));
        for (int k = 0; k < n; ++k) {
            if (k == j) continue;
            out.M(2 * j + 1, 2 * k) = -dr.shift(j, k);
            out.M(2 * j + 1, 2 * k + 1) = -dr.damping(j, k);
        }
    }
    return out;
}

DiffusionMatrix build_diffusion(const SystemSpec& spec) {
    const int n = spec.size();
    DiffusionMatrix out;
    out.D.setZero(2 * n, 2 * n);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            double d = spec.modes[i].G * spec.modes[j].G / spec.cavity.kappa;
            if (i == j) d += (2.0 * spec.modes[i].nbar + 1.0) * spec.modes[i].gamma;
            out.D(2 * i + 1, 2 * j + 1) = d;
        }
    }
    return out;
}

double stability_margin(const Eigen::MatrixXd& M) {
    Eigen::EigenSolver<Eigen::MatrixXd> solver(M, /*computeEigenvectors=*/false);
    if (solver.info() != Eigen::Success)
        throw EigenFailure("eigensolver failed on the drift matrix");
    return solver.eigenvalues().real().maxCoeff();
}

CovarianceMatrix solve_lyapunov(const DriftMatrix& drift, const DiffusionMatrix& diffusion) {
    const Eigen::MatrixXd& M = drift.M;
    const Eigen::MatrixXd& D = diffusion.D;
    const int dim = static_cast<int>(M.rows());

    const double margin = stability_margin(M);
    if (!(margin < 0)) {
        std::ostringstream msg;
        msg << "drift matrix is not stable (max eigenvalue real part " << margin << ")";
        throw NotStable(msg.str(), margin);
    }

    // vec(M V + V M^T) = (I (x) M + M (x) I) vec(V), column-major vec.
    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(dim * dim, dim * dim);
    for (int c = 0; c < dim; ++c)
        A.block(c * dim, c * dim, dim, dim) += M;
    for (int c = 0; c < dim; ++c)
        for (int r = 0; r < dim; ++r)
            for (int k = 0; k < dim; ++k)
                A(c * dim + r, k * dim + r) += M(c, k);

    Eigen::VectorXd b(dim * dim);
    for (int c = 0; c < dim; ++c)
        b.segment(c * dim, dim) = -D.col(c);

    Eigen::PartialPivLU<Eigen::MatrixXd> lu(A);
    Eigen::VectorXd x = lu.solve(b);
    if (!x.allFinite()) throw SolveFailed("Lyapunov linear system is numerically singular");

    Eigen::MatrixXd V(dim, dim);
    for (int c = 0; c < dim; ++c)
        V.col(c) = x.segment(c * dim, dim);
    V = 0.5 * (V + V.transpose()).eval();

    const double dnorm = D.cwiseAbs().maxCoeff();
    const double residual = (M * V + V * M.transpose() + D).cwiseAbs().maxCoeff();
    if (residual > 1e-10 * std::max(dnorm, 1e-300) && dnorm > 0)
        throw SolveFailed("Lyapunov residual above tolerance");

    return CovarianceMatrix{std::move(V)};
}

std::vector<double> occupancy_from_cov(const CovarianceMatrix& cov) {
    std::vector<double> n;
    n.reserve(cov.modes());
    for (int j = 0; j < cov.modes(); ++j)
        n.push_back(0.5 * (cov.V(2 * j, 2 * j) + cov.V(2 * j + 1, 2 * j + 1)));
    return n;
}

double closed_form_single(const SystemSpec& spec, double tau, Regime regime) {
    if (spec.size() != 1) throw Error("closed_form_single needs exactly one mode");
    const auto& m = spec.modes[0];
    const double kappa = spec.cavity.kappa;
    const double c = std::cos(m.omega * tau);
    const double s = std::sin(m.omega * tau);

    double gamma_eff, omega_den, numerator;
    if (regime == Regime::sfflc) {
        const double Gamma = m.g_cd * m.G * m.omega / kappa;
        const double coop = m.G * m.G / (kappa * m.gamma);
        gamma_eff = m.gamma + Gamma * c;
        omega_den = m.omega + Gamma * s;
        numerator = m.gamma * (m.nbar + 0.5 + 0.5 * coop);
    } else {
        const RateSet r = rates(spec, Regime::wfflc, m.omega);
        const double Gamma = r.gamma_fb(0, 0);
        const double shift = r.delta_omega(0, 0);
        gamma_eff = m.gamma + Gamma * c - shift * s;
        omega_den = m.omega + shift * c + Gamma * s;
        numerator = m.gamma * (m.nbar + 0.5);
    }
    if (!(gamma_eff > 0) || !(omega_den > 0))
        throw Unstable("effective damping is not positive at this delay");
    return 0.5 * numerator / gamma_eff * (1.0 + m.omega / omega_den);
}

namespace {

double heating_rate(const SystemSpec& spec, int i) {
    const auto& m = spec.modes[i];
    return (2.0 * m.nbar + 1.0) * m.gamma + m.G * m.G / spec.cavity.kappa;
}

// Mutual-heating weight of the off-diagonal moment equations. The printed
// form divides out gamma against Gamma; keeping gamma in the diagonal damping
// d_i = gamma_i + Gamma_ii cos(omega_i tau) costs nothing and extends the
// validity from O(gamma/Gamma) to the genuinely dropped higher orders.
double lambda_cross(const SystemSpec& spec, const Eigen::MatrixXd& gamma_fb, int i, int j,
                    double ci, double cj) {
    const double di = spec.modes[i].gamma + gamma_fb(i, i) * ci;
    const double dj = spec.modes[j].gamma + gamma_fb(j, j) * cj;
    return gamma_fb(j, i) * ci * heating_rate(spec, i) / di +
           gamma_fb(i, j) * cj * heating_rate(spec, j) / dj -
           2.0 * spec.modes[i].G * spec.modes[j].G / spec.cavity.kappa;
}

void require_nondegenerate(const SystemSpec& spec) {
    double wmax2 = 0.0;
    for (const auto& m : spec.modes) wmax2 = std::max(wmax2, m.omega * m.omega);
    for (int i = 0; i < spec.size(); ++i)
        for (int j = i + 1; j < spec.size(); ++j) {
            const double wi2 = spec.modes[i].omega * spec.modes[i].omega;
            const double wj2 = spec.modes[j].omega * spec.modes[j].omega;
            if (std::abs(wi2 - wj2) < 1e-9 * wmax2)
                throw Degenerate("closed forms have poles at equal frequencies; use the Lyapunov solver");
        }
}

}  // namespace

// Hand elimination of the two-mode moment equations: Y_ii = 0 and the Y_12,
// Y_21 relation reduce the Lyapunov system to three equations in the
// off-diagonal moments (X_12, Z_12, Y_12) once the diagonal equations are
// substituted symbolically. Solving that 3x3 by Cramer gives the steady state
// in closed form; dropping the gamma- and s-weighted corrections recovers the
// familiar Lambda_ij mutual-heating expressions.
std::pair<double, double> closed_form_two(const SystemSpec& spec, double tau) {
    if (spec.size() != 2) throw Error("closed_form_two needs exactly two modes");
    require_nondegenerate(spec);

    const double w1 = spec.modes[0].omega, w2 = spec.modes[1].omega;
    const RateSet r = rates_at_mode_frequencies(spec, Regime::sfflc);
    const double g11 = r.gamma_fb(0, 0), g22 = r.gamma_fb(1, 1);
    const double g12 = r.gamma_fb(0, 1), g21 = r.gamma_fb(1, 0);
    const double c1 = std::cos(w1 * tau), s1 = std::sin(w1 * tau);
    const double c2 = std::cos(w2 * tau), s2 = std::sin(w2 * tau);
    const double d1 = spec.modes[0].gamma + g11 * c1;
    const double d2 = spec.modes[1].gamma + g22 * c2;
    const double u1 = w1 + g11 * s1, u2 = w2 + g22 * s2;
    if (!(d1 > 0) || !(d2 > 0) || !(u1 > 0) || !(u2 > 0))
        throw Unstable("two-mode closed form outside its stability region");

    const double heat1 = heating_rate(spec, 0), heat2 = heating_rate(spec, 1);
    const double lam = lambda_cross(spec, r.gamma_fb, 0, 1, c1, c2);

    // Diagonal substitutions X_ii = a_i + b_i Y_12 + c_i X_12.
    const double a1 = heat1 / d1, b1 = g12 * s2 * w2 / (w1 * d1), c1x = -g12 * c2 / d1;
    const double a2 = heat2 / d2, b2 = -g21 * s1 / d2, c2x = -g21 * c1 / d2;

    // Rows of the (X_12, Z_12, Y_12) system.
    const double A11 = w1 - g21 * s1 * w1 * c1x / u1;
    const double A12 = -u2 + g21 * s1 * g12 * s2 / u1;
    const double A13 = -d2 - g21 * s1 * (w1 * b1 - g12 * c2) / u1;
    const double r1 = g21 * s1 * w1 * a1 / u1;

    const double A21 = w2 - g12 * s2 * w2 * c2x / u2;
    const double A22 = -u1 + g12 * s2 * g21 * s1 / u2;
    const double A23 = d1 * w2 / w1 - g12 * s2 * (w2 * b2 + g21 * c1 * w2 / w1) / u2;
    const double r2 = g12 * s2 * w2 * a2 / u2;

    const double A31 = (d1 + d2) - g12 * g21 * c1 * c2 * (1.0 / d1 + 1.0 / d2);
    const double A33 = u1 - u2 * w2 / w1 + g21 * c1 * b1 + g12 * c2 * b2;
    const double r3 = -lam;

    const double det = A11 * A22 * A33 - A12 * (A21 * A33 - A23 * A31) - A13 * A22 * A31;
    if (std::abs(det) < 1e-300) throw Degenerate("two-mode moment system is singular");
    const double x12 =
        (r1 * A22 * A33 - A12 * (r2 * A33 - A23 * r3) - A13 * A22 * r3) / det;
    const double z12 =
        (A11 * (r2 * A33 - A23 * r3) - r1 * (A21 * A33 - A23 * A31) +
         A13 * (A21 * r3 - r2 * A31)) /
        det;
    const double y12 =
        (A11 * A22 * r3 - A12 * (A21 * r3 - r2 * A31) - r1 * A22 * A31) / det;
    const double y21 = -(w2 / w1) * y12;

    const double x11 = a1 + b1 * y12 + c1x * x12;
    const double x22 = a2 + b2 * y12 + c2x * x12;
    const double z11 = (w1 * x11 - g12 * s2 * z12 - g12 * c2 * y12) / u1;
    const double z22 = (w2 * x22 - g21 * s1 * z12 - g21 * c1 * y21) / u2;

    return {0.25 * (x11 + z11), 0.25 * (x22 + z22)};
}

std::vector<double> closed_form_multi_tau0(const SystemSpec& spec) {
    require_nondegenerate(spec);
    const int n = spec.size();
    const RateSet r = rates_at_mode_frequencies(spec, Regime::sfflc);

    std::vector<double> damping(n);
    for (int i = 0; i < n; ++i) damping[i] = spec.modes[i].gamma + r.gamma_fb(i, i);

    // Pair weights shared between the X_12 and Y_12 routes; the feedback
    // correction in pair_det is O(gamma) and keeps the pair terms consistent
    // with the two-mode elimination.
    auto pair_weight = [&](int i, int j) {
        const double wi2 = spec.modes[i].omega * spec.modes[i].omega;
        const double wj2 = spec.modes[j].omega * spec.modes[j].omega;
        return damping[i] * wj2 + damping[j] * wi2;
    };
    auto pair_det = [&](int i, int j) {
        const double wi2 = spec.modes[i].omega * spec.modes[i].omega;
        const double wj2 = spec.modes[j].omega * spec.modes[j].omega;
        const double delta = wi2 - wj2;
        const double feedback = (damping[i] + damping[j]) -
                                r.gamma_fb(i, j) * r.gamma_fb(j, i) *
                                    (1.0 / damping[i] + 1.0 / damping[j]);
        return delta * delta + feedback * pair_weight(i, j);
    };

    std::vector<double> out(n);
    for (int i = 0; i < n; ++i) {
        const double wi2 = spec.modes[i].omega * spec.modes[i].omega;
        if (!(r.gamma_fb(i, i) > 0))
            throw Unstable("vanishing feedback damping in the tau = 0 closed form");
        double value = 0.5 * heating_rate(spec, i) / damping[i];
        for (int j = 0; j < n; ++j) {
            if (j == i) continue;
            const double wj2 = spec.modes[j].omega * spec.modes[j].omega;
            const double dij = wi2 - wj2;
            const double lam_ij = lambda_cross(spec, r.gamma_fb, i, j, 1.0, 1.0);
            const double det_ij = pair_det(i, j);
            double brace = pair_weight(i, j) * lam_ij / det_ij;
            for (int k = 0; k < n; ++k) {
                if (k == i || k == j) continue;
                brace += (wi2 * r.gamma_fb(j, k) *
                              lambda_cross(spec, r.gamma_fb, i, k, 1.0, 1.0) *
                              (wi2 - spec.modes[k].omega * spec.modes[k].omega) /
                              pair_det(i, k) -
                          wj2 * r.gamma_fb(i, k) *
                              lambda_cross(spec, r.gamma_fb, j, k, 1.0, 1.0) *
                              (wj2 - spec.modes[k].omega * spec.modes[k].omega) /
                              pair_det(j, k)) /
                         dij;
            }
            value += r.gamma_fb(i, j) / (2.0 * damping[i]) * brace +
                     r.gamma_fb(i, j) * lam_ij * dij / (4.0 * det_ij);
        }
        out[i] = value;
    }
    return out;
}

}  // namespace colddamp
