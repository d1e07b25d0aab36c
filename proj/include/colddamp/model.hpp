#pragma once

#include <complex>

#include <Eigen/Dense>

#include "colddamp/types.hpp"

namespace colddamp {

// Fixed point of the classical mean-field cavity equation, together with the
// shifted detuning and the static mode displacements.
struct ClassicalSteadyState {
    std::complex<double> amplitude;
    double detuning = 0.0;              // Delta = Delta0 - sum_j g_om^2 |A|^2 / omega_j
    std::vector<double> displacements;  // <Q_j> = (g_om_j / omega_j) |A|^2
    int iterations = 0;
    double residual = 0.0;
};

// Damped fixed-point iteration A <- (1-lambda) A + lambda rhs(A) starting from
// A = epsilon/kappa. Bistability is not resolved; the branch reached from that
// seed is reported. Throws NoConvergence past the iteration cap.
ClassicalSteadyState solve_classical_amplitude(const SystemSpec& spec,
                                               int max_iterations = 10000,
                                               double relaxation = 0.5);

// Populates G_j = sqrt(2) g_om_j |amplitude| and forces the effective detuning
// to zero. Identity on specs whose G is supplied directly.
SystemSpec linearize(SystemSpec spec, std::complex<double> amplitude);

// Feedback damping rates Gamma_jk and frequency shifts delta_omega_jk.
// In the sFFLC, Gamma_jk = g_cd_j G_k omega_k / kappa exactly and the shifts
// vanish; wFFLC carries the frequency-resolved lossy-cavity corrections.
struct RateSet {
    Eigen::MatrixXd gamma_fb;     // Gamma_jk
    Eigen::MatrixXd delta_omega;  // delta_omega_jk
    Regime regime = Regime::sfflc;
    double omega_eval = 0.0;      // evaluation frequency (single-frequency sets)
    bool at_mode_frequencies = false;
};

// Evaluates the full N x N rate matrices at one frequency Omega. The sFFLC
// ignores Omega.
RateSet rates(const SystemSpec& spec, Regime regime, double Omega);

// Column k evaluated at Omega = omega_k: the variant entering the Markovian
// drift matrix, where p_k(t - tau) oscillates at its own mode frequency.
RateSet rates_at_mode_frequencies(const SystemSpec& spec, Regime regime);

}  // namespace colddamp
