#pragma once

#include <complex>

#include <Eigen/Dense>

#include "colddamp/model.hpp"
#include "colddamp/quadrature.hpp"

namespace colddamp {

// Frequency-resolved effective resonance and decay, including the delay
// phases cos(Omega tau) / sin(Omega tau).
struct EffectiveResponse {
    std::vector<double> omega_eff_sq;
    std::vector<double> gamma_eff;
};

EffectiveResponse effective_response(const SystemSpec& spec, double Omega, double tau);

// Inverse susceptibility matrix: diagonal carries the effective response, the
// off-diagonals the shared feedback channel. Well-defined on the whole real
// axis for gamma > 0.
Eigen::MatrixXcd susceptibility_inverse(const SystemSpec& spec, double Omega, double tau);

enum class NoiseModel { white_thermal, exact_thermal, full };

std::string to_string(NoiseModel m);

// Force-noise spectrum S(Omega). white_thermal: flat gamma (2 nbar + 1)
// diagonal. exact_thermal: symmetrized coth spectrum at the per-mode
// temperature implied by nbar. full: thermal plus feedback back-action,
// radiation pressure and the delayed interference terms; Hermitian.
Eigen::MatrixXcd noise_spectrum(const SystemSpec& spec, double Omega, double tau,
                                NoiseModel model);

// Steady-state occupancy matrix (1/2pi) int dOmega (chi S chi^dag)_{jk}
// (1 + Omega^2/(omega_j omega_k))/2, real symmetric. Off-diagonals are
// computed but carry no interpretation here; the diagonal holds n_eff.
struct FourierOccupancy {
    Eigen::MatrixXd matrix;
    double max_diag_imag = 0.0;  // residual imaginary part, reality diagnostic
    QuadratureResult diagnostics;
};

FourierOccupancy occupancy_fourier_matrix(const SystemSpec& spec, double tau,
                                          const QuadratureConfig& cfg = {},
                                          NoiseModel model = NoiseModel::white_thermal);

// Diagonal of the above. Throws QuadratureDiverged when panel refinement
// hits the depth cap without the error budget closing.
std::vector<double> occupancy_fourier(const SystemSpec& spec, double tau,
                                      const QuadratureConfig& cfg = {},
                                      NoiseModel model = NoiseModel::white_thermal);

struct SpectrumGrid {
    std::vector<double> omega;
    Eigen::MatrixXd s_q;  // grid x modes, diagonal position spectra
    bool has_components = false;
    std::vector<double> thermal, radiation_pressure, feedback, interference;
};

// Diagonal position spectra for all modes on the given grid (full noise).
SpectrumGrid spectrum_modes(const SystemSpec& spec, double tau,
                            const std::vector<double>& grid);

// Single-mode spectrum with the four-component decomposition, each component
// already weighted by |chi_eff|^2 so the columns sum to the total.
SpectrumGrid spectrum_single(const SystemSpec& spec, double tau,
                             const std::vector<double>& grid);

// Ground-state-limit residual occupancy (single mode): the closed form
// evaluated with omega_eff(omega), gamma_eff(omega), and the strong
// fast-feedback-lossy-cavity approximation at tau = 0. Both subtract 1/2.
struct ResidualOccupancy {
    double full;
    double sfflc_approx;
};

ResidualOccupancy residual_occupancy(const SystemSpec& spec, double tau);

// Bright-mode residual for n identical copies of the given single-mode spec:
// quadrature of n (S_fb + S_rp + S_fb-rp) against the bright susceptibility,
// plus the affine-in-n sFFLC approximation.
struct BrightResidual {
    double quadrature;
    double sfflc_approx;
};

BrightResidual bright_residual(const SystemSpec& spec, int n_modes, double tau);

}  // namespace colddamp
