#pragma once

#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace colddamp {

// All frequencies and rates are dimensionless, expressed in units of a
// reference frequency (the convention throughout is omega_1 = 1). Thermal
// occupancies are direct inputs; no physical constants appear anywhere.

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct NoConvergence final : Error {
    NoConvergence(const std::string& msg, double residual)
        : Error(msg), last_residual(residual) {}
    double last_residual;
};

struct NotStable final : Error {
    NotStable(const std::string& msg, double margin)
        : Error(msg), max_real_part(margin) {}
    double max_real_part;
};

struct SolveFailed final : Error { using Error::Error; };
struct Unstable final : Error { using Error::Error; };
struct Degenerate final : Error { using Error::Error; };
struct QuadratureDiverged final : Error { using Error::Error; };
struct AllZeroCouplings final : Error { using Error::Error; };
struct FitFailed final : Error { using Error::Error; };
struct EigenFailure final : Error { using Error::Error; };
struct NoStableDelay final : Error { using Error::Error; };
struct ConfigError final : Error { using Error::Error; };

enum class Regime { sfflc, wfflc, exact_fourier };

std::string to_string(Regime r);
Regime regime_from_string(const std::string& s);

// Whether the effective couplings G_j are given directly (the convention in
// all reference parameter sets) or derived from g_om via the mean-field solve.
enum class CouplingSource { direct, mean_field };

struct MechanicalMode {
    double omega = 1.0;   // angular frequency
    double gamma = 0.0;   // intrinsic damping rate
    double nbar = 0.0;    // mean thermal occupancy
    std::optional<double> g_om;  // single-photon optomechanical coupling
    double G = 0.0;       // effective linearized coupling
    double g_cd = 0.0;    // feedback gain for this mode
};

struct CavitySpec {
    double kappa = 1.0;   // cavity decay rate
    double delta0 = 0.0;  // bare detuning, used only by the mean-field solve
    std::optional<double> epsilon;  // drive amplitude
    double eta = 1.0;     // detector quantum efficiency in (0, 1]
};

struct FeedbackSpec {
    double omega_fb = 1.0;  // feedback bandwidth
    double tau = 0.0;       // total delay (inherent + added)
    Regime regime = Regime::sfflc;
};

struct SystemSpec {
    std::vector<MechanicalMode> modes;  // kept in the order given
    CavitySpec cavity;
    FeedbackSpec feedback;
    CouplingSource coupling_source = CouplingSource::direct;
    bool linearized = true;  // direct-G specs are born linearized

    int size() const { return static_cast<int>(modes.size()); }
    double max_omega() const;
};

// Throws ConfigError when any invariant is violated.
void validate(const SystemSpec& spec);

}  // namespace colddamp
