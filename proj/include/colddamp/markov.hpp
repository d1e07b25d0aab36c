#pragma once

#include <utility>

#include <Eigen/Dense>

#include "colddamp/model.hpp"

namespace colddamp {

// Drift matrix of the Markovian reduction, ordered (q1, p1, ..., qN, pN).
struct DriftMatrix {
    Eigen::MatrixXd M;
    Regime regime = Regime::sfflc;
    double tau = 0.0;
};

// Diffusion matrix: nonzero only on momentum rows/columns, independent of tau.
struct DiffusionMatrix {
    Eigen::MatrixXd D;
};

// Steady-state second moments. V stores single-operator moments <v v^T>;
// X/Y/Z are the symmetrized doubles, e.g. X_ii = 2 <p_i^2>.
struct CovarianceMatrix {
    Eigen::MatrixXd V;

    double X(int i, int j) const { return 2.0 * V(2 * i + 1, 2 * j + 1); }
    double Z(int i, int j) const { return 2.0 * V(2 * i, 2 * j); }
    double Y(int i, int j) const { return 2.0 * V(2 * i, 2 * j + 1); }
    int modes() const { return static_cast<int>(V.rows()) / 2; }
};

DriftMatrix build_drift(const SystemSpec& spec, const RateSet& rates, double tau);
DiffusionMatrix build_diffusion(const SystemSpec& spec);

// Max real part of the eigenvalues of M; negative means stable.
double stability_margin(const Eigen::MatrixXd& M);

// Solves M V + V M^T = -D by Kronecker vectorization (LU on a (2N)^2 system),
// then symmetrizes. Throws NotStable when M has a non-negative eigenvalue and
// SolveFailed on a numerically singular system.
CovarianceMatrix solve_lyapunov(const DriftMatrix& drift, const DiffusionMatrix& diffusion);

// n_eff_j = (<q_j^2> + <p_j^2>)/2 = (Z_jj + X_jj)/4. No -1/2 subtraction here;
// the residual-occupancy quantities in the spectral module are the ones that
// subtract the zero-point half.
std::vector<double> occupancy_from_cov(const CovarianceMatrix& cov);

// Single-mode closed form. sFFLC carries the back-action term C/2 in the
// numerator; wFFLC is thermal-only, with the rate combinations
// Gamma cos - delta_omega sin and delta_omega cos + Gamma sin.
double closed_form_single(const SystemSpec& spec, double tau, Regime regime);

// Two-mode closed form with the off-diagonal moments X_12, Z_12 (sFFLC,
// valid for gamma << Gamma_jj and non-degenerate frequencies).
std::pair<double, double> closed_form_two(const SystemSpec& spec, double tau);

// N-mode tau = 0 closed form, including the three-mode cross terms.
std::vector<double> closed_form_multi_tau0(const SystemSpec& spec);

}  // namespace colddamp
