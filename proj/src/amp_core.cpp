#include "qbandit/amp_core.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

namespace qbandit::amp {
namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kBoundarySlack = 1e-12;

void require_open_probability(double p_m, const char* what) {
    if (!(p_m > 0.0 && p_m < 1.0)) {
        throw std::domain_error(std::string(what) + ": p_m must lie in (0, 1), got " +
                                std::to_string(p_m));
    }
}

double clamp_unit(double x) { return std::clamp(x, -1.0, 1.0); }

// W_x = 1 - (1 - sqrt(x)) / (2 p_m); cos(phi) at which the matched update gives sigma = x.
double cos_for_sigma(double p_m, double x) { return 1.0 - (1.0 - std::sqrt(x)) / (2.0 * p_m); }

}  // namespace

AmplitudeState::AmplitudeState(std::vector<complex> amps) : amps_(std::move(amps)) {
    if (amps_.size() < 2) {
        throw std::invalid_argument("AmplitudeState: at least two arms required");
    }
    double norm = 0.0;
    for (const auto& g : amps_) {
        norm += std::norm(g);
    }
    if (!std::isfinite(norm) || std::abs(norm - 1.0) > kNormTolerance) {
        throw std::invalid_argument("AmplitudeState: squared magnitudes sum to " +
                                    std::to_string(norm));
    }
}

AmplitudeState AmplitudeState::from_probabilities(std::span<const double> p) {
    std::vector<complex> amps;
    amps.reserve(p.size());
    for (double pk : p) {
        if (!(pk >= 0.0)) {
            throw std::invalid_argument("AmplitudeState: negative probability");
        }
        amps.emplace_back(std::sqrt(pk), 0.0);
    }
    return AmplitudeState(std::move(amps));
}

std::vector<double> AmplitudeState::probabilities() const {
    std::vector<double> p(amps_.size());
    std::transform(amps_.begin(), amps_.end(), p.begin(),
                   [](const complex& g) { return std::norm(g); });
    return p;
}

TargetSelection select_target(std::span<const double> p) {
    if (p.empty()) {
        throw std::invalid_argument("select_target: empty distribution");
    }
    // max_element returns the first maximal element.
    return {static_cast<std::size_t>(std::max_element(p.begin(), p.end()) - p.begin())};
}

AmplitudeState grover_apply(const AmplitudeState& state, TargetSelection target,
                            PhaseParams phases) {
    const auto& psi0 = state.amplitudes();
    if (target.m >= psi0.size()) {
        throw std::out_of_range("grover_apply: target arm out of range");
    }
    const complex e1 = std::polar(1.0, phases.phi1);
    const complex e2 = std::polar(1.0, phases.phi2);

    // Oracle: I - (1 - e^{j phi1}) |m><m| multiplies the target amplitude by e^{j phi1}.
    std::vector<complex> out = psi0;
    out[target.m] *= e1;

    // Diffusion: I - (1 - e^{j phi2}) |psi0><psi0|.
    complex overlap{0.0, 0.0};
    for (std::size_t k = 0; k < out.size(); ++k) {
        overlap += std::conj(psi0[k]) * out[k];
    }
    const complex coeff = (1.0 - e2) * overlap;
    for (std::size_t k = 0; k < out.size(); ++k) {
        out[k] = -(out[k] - coeff * psi0[k]);
    }
    return AmplitudeState(std::move(out));
}

UpdateRatios update_ratios(double p_m, PhaseParams phases) {
    require_open_probability(p_m, "update_ratios");
    const complex e1 = std::polar(1.0, phases.phi1);
    const complex e2 = std::polar(1.0, phases.phi2);
    const complex cross = (1.0 - e1) * (1.0 - e2) * p_m;
    return {std::norm((1.0 - e1 - e2) - cross), std::norm(-e2 - cross)};
}

double sigma_of_phi(double p_m, double phi) {
    return update_ratios(p_m, PhaseParams::matched(phi)).sigma;
}

double kappa(double p_m, double phi) {
    require_open_probability(p_m, "kappa");
    const double half = std::sin(phi / 2.0);
    const double s = std::sin(phi);
    return 4.0 * (2.0 * p_m - 1.0) * half * half * (std::cos(phi) - 1.0) + 2.0 * s * s;
}

double sigma_min(double p_m) {
    require_open_probability(p_m, "sigma_min");
    const double r = std::max(1.0 - 4.0 * p_m, 0.0);
    return r * r;
}

double phi_min(double p_m) {
    require_open_probability(p_m, "phi_min");
    return -std::min(std::acos(clamp_unit(cos_for_sigma(p_m, 0.0))), kPi);
}

double solve_phi(double p_m, double sigma_target) {
    require_open_probability(p_m, "solve_phi");
    if (!std::isfinite(sigma_target) || sigma_target > 1.0 + kBoundarySlack) {
        throw std::domain_error("solve_phi: target sigma must not exceed 1");
    }
    const double floor = sigma_min(p_m);
    if (sigma_target < floor - kBoundarySlack) {
        throw infeasible_target("solve_phi: target sigma " + std::to_string(sigma_target) +
                                " below sigma_min " + std::to_string(floor));
    }
    const double x = std::clamp(sigma_target, floor, 1.0);
    // 0.0 - acos keeps the zero phase positive (plain negation would give -0).
    return 0.0 - std::acos(clamp_unit(cos_for_sigma(p_m, x)));
}

double phi_from_disparity(double p_m, double dbar) {
    require_open_probability(p_m, "phi_from_disparity");
    if (!(dbar >= 0.0 && dbar <= 1.0)) {
        throw std::domain_error("phi_from_disparity: dbar must lie in [0, 1]");
    }
    const double floor = sigma_min(p_m);
    return solve_phi(p_m, (1.0 - floor) * dbar + floor);
}

std::vector<double> amplified_distribution(std::span<const double> p, TargetSelection target,
                                           double phi) {
    if (target.m >= p.size()) {
        throw std::out_of_range("amplified_distribution: target arm out of range");
    }
    std::vector<double> out(p.begin(), p.end());
    const double p_m = p[target.m];
    if (!(p_m > 0.0 && p_m < 1.0)) {
        return out;
    }
    const UpdateRatios r = update_ratios(p_m, PhaseParams::matched(phi));
    for (std::size_t k = 0; k < out.size(); ++k) {
        out[k] *= (k == target.m) ? r.rho : r.sigma;
    }
    return out;
}

std::size_t measure_with(std::span<const double> p, double u) {
    if (p.empty()) {
        throw std::invalid_argument("measure: empty distribution");
    }
    double cumulative = 0.0;
    std::size_t last_positive = 0;
    for (std::size_t k = 0; k < p.size(); ++k) {
        if (p[k] > 0.0) {
            last_positive = k;
        }
        cumulative += p[k];
        if (u < cumulative) {
            return k;
        }
    }
    // u landed in the rounding gap above the cumulative sum.
    return last_positive;
}

std::size_t measure(std::span<const double> p, Rng& rng) { return measure_with(p, rng.uniform()); }

}  // namespace qbandit::amp
