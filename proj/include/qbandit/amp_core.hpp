#pragma once

// Classical simulation of a single amplitude-amplification step over K arms.
//
// The arm distribution p is held as a superposition with amplitudes g_k,
// |g_k|^2 = p_k. One iteration G = -U(phi2, psi0) * U(phi1, m) shifts the phase
// of the target arm m and then rotates about the pre-step state. The squared
// magnitudes change by a factor rho on the target and sigma on every other arm.
// With matched phases (phi1 = phi2 = phi) the two factors move in opposite
// directions, and on [phi_min(p_m), 0] sigma is a monotone function of phi that
// can be inverted in closed form.

#include <complex>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

#include "qbandit/rng.hpp"

namespace qbandit::amp {

using complex = std::complex<double>;

inline constexpr double kNormTolerance = 1e-9;

/// Amplitudes g_k of the K arms; sum of |g_k|^2 is 1.
class AmplitudeState {
public:
    /// Throws std::invalid_argument if K < 2 or the state is not normalized.
    explicit AmplitudeState(std::vector<complex> amps);

    /// Real, nonnegative amplitudes sqrt(p_k).
    static AmplitudeState from_probabilities(std::span<const double> p);

    std::size_t size() const noexcept { return amps_.size(); }
    const std::vector<complex>& amplitudes() const noexcept { return amps_; }
    std::vector<double> probabilities() const;

private:
    std::vector<complex> amps_;
};

struct PhaseParams {
    double phi1 = 0.0;  // oracle phase on the target arm
    double phi2 = 0.0;  // diffusion phase about the pre-step state

    static PhaseParams matched(double phi) noexcept { return {phi, phi}; }
};

/// Squared-magnitude multipliers after one step.
struct UpdateRatios {
    double rho = 1.0;    // target arm
    double sigma = 1.0;  // every other arm
};

struct TargetSelection {
    std::size_t m = 0;
};

/// Thrown by solve_phi when the requested sigma is below sigma_min(p_m).
class infeasible_target : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// Index of the largest entry, lowest index on ties.
TargetSelection select_target(std::span<const double> p);

/// G|psi0> for one iteration. The leading minus sign of G is kept.
AmplitudeState grover_apply(const AmplitudeState& state, TargetSelection target,
                            PhaseParams phases);

UpdateRatios update_ratios(double p_m, PhaseParams phases);

/// Phase-matched shorthand for update_ratios(p_m, {phi, phi}).sigma.
double sigma_of_phi(double p_m, double phi);

/// kappa(p_m, phi) with 1 - rho = (p_m - 1) kappa and 1 - sigma = p_m kappa.
double kappa(double p_m, double phi);

/// Smallest attainable non-target multiplier: (max(1 - 4 p_m, 0))^2.
double sigma_min(double p_m);

/// Left end of the monotone phase range, in [-pi, 0).
double phi_min(double p_m);

/// Phase phi in [phi_min, 0] whose matched update yields sigma == sigma_target.
double solve_phi(double p_m, double sigma_target);

/// Maps an average disparity dbar in [0, 1] linearly onto [sigma_min, 1] and
/// solves for the phase.
double phi_from_disparity(double p_m, double dbar);

/// p'_m = rho p_m, p'_k = sigma p_k (k != m). Returns p unchanged when p_m is 0
/// or 1. No renormalization is applied.
std::vector<double> amplified_distribution(std::span<const double> p, TargetSelection target,
                                           double phi);

/// Collapse: inverse-CDF draw over arm indices in ascending order.
std::size_t measure(std::span<const double> p, Rng& rng);

/// Same as measure() with the uniform variate supplied by the caller.
std::size_t measure_with(std::span<const double> p, double u);

}  // namespace qbandit::amp
