#pragma once

#include <Eigen/Dense>

#include "colddamp/markov.hpp"
#include "colddamp/quadrature.hpp"
#include "colddamp/spectral.hpp"

namespace colddamp {

// Orthonormal collective basis: row 0 is the bright mode proportional to the
// coupling vector G, the remaining rows span the dark manifold. Rows carry a
// deterministic sign convention (first nonzero entry positive).
struct CollectiveBasis {
    Eigen::MatrixXd alpha;
};

CollectiveBasis build_basis(const Eigen::VectorXd& couplings);
CollectiveBasis build_basis(const SystemSpec& spec);

// Applies the basis to both quadratures of a (q, p)-interleaved covariance.
CovarianceMatrix transform_cov(const CovarianceMatrix& cov, const CollectiveBasis& basis);

// Closed-form occupancies for N identical modes. The dark manifold is
// feedback-decoupled and purely thermal; the nbar + 1/2 value and the
// high-temperature shorthand nbar are both reported.
struct DegenerateOccupancy {
    double bright;
    double dark;         // nbar + 1/2
    double dark_high_t;  // nbar
};

DegenerateOccupancy degenerate_bright_occupancy(const SystemSpec& spec, double tau);

// Frequency-domain response rows of the collective coordinates: Q_l(Omega) =
// row_l . zeta(Omega). The bright row comes from the closed bright-mode
// solution; each dark row is the noise projection minus the bright-dark
// coupling times the bright solution.
struct CollectiveResponse {
    Eigen::RowVectorXcd bright;
    Eigen::MatrixXcd dark;  // (N-1) x N
};

CollectiveResponse dark_mode_response(const SystemSpec& spec, double Omega, double tau,
                                      const CollectiveBasis& basis);

// Steady-state occupancies of the collective modes by spectral quadrature,
// with the bright/dark rows assembled through dark_mode_response.
std::vector<double> collective_occupancy_fourier(const SystemSpec& spec, double tau,
                                                 const CollectiveBasis& basis,
                                                 const QuadratureConfig& cfg = {},
                                                 NoiseModel model = NoiseModel::white_thermal);

}  // namespace colddamp
