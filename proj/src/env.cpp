#include "qbandit/env.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>

#include "qbandit/rng.hpp"

namespace qbandit::env {
namespace {

// Fading gain exceeded 95% of the time by a unit-mean exponential: -ln(0.95).
const double kFifthPercentileGain = -std::log(0.95);

bool within(const Band& inner, const Band& outer) {
    return inner.lo >= outer.lo && inner.hi <= outer.hi && inner.lo <= inner.hi;
}

}  // namespace

double ChannelParams::noise_dbm() const {
    return noise_dbm_per_hz + 10.0 * std::log10(bandwidth_hz);
}

std::string_view to_string(AdversaryMode mode) noexcept {
    switch (mode) {
        case AdversaryMode::IidUniform: return "iid-uniform";
        case AdversaryMode::Sinusoidal: return "sinusoidal";
        case AdversaryMode::Switching: return "switching";
    }
    return "unknown";
}

std::optional<AdversaryMode> parse_adversary_mode(std::string_view text) noexcept {
    for (auto mode : {AdversaryMode::IidUniform, AdversaryMode::Sinusoidal,
                      AdversaryMode::Switching}) {
        if (to_string(mode) == text) {
            return mode;
        }
    }
    return std::nullopt;
}

void FogConfig::validate() const {
    if (arms < 2) {
        throw std::invalid_argument("environment: at least two SPs required");
    }
    if (cpu_ghz.empty() ||
        std::any_of(cpu_ghz.begin(), cpu_ghz.end(), [](double f) { return !(f > 0.0); })) {
        throw std::invalid_argument("environment: CPU frequencies must be positive");
    }
    if (!(range_km > 0.0)) {
        throw std::invalid_argument("environment: communication range must be positive");
    }
    if (!(channel.bandwidth_hz > 0.0) || !std::isfinite(channel.tx_power_dbm) ||
        !std::isfinite(channel.noise_dbm_per_hz)) {
        throw std::invalid_argument("environment: invalid channel parameters");
    }
    if (!(task.q_bits > 0.0) || !(task.cycles_per_bit > 0.0) || !(task.output_ratio >= 0.0)) {
        throw std::invalid_argument("environment: invalid task parameters");
    }
    const auto& adv = adversary;
    if (!(adv.range.lo > 0.0) || adv.range.lo > adv.range.hi || adv.range.hi > 1.0) {
        throw std::invalid_argument("environment: allocation range must satisfy 0 < lo <= hi <= 1");
    }
    if (adv.mode == AdversaryMode::Switching) {
        if (adv.epochs < 1) {
            throw std::invalid_argument("environment: switching needs at least one epoch");
        }
        if (!within(adv.favored, adv.range) || !within(adv.others, adv.range)) {
            throw std::invalid_argument("environment: switching bands must lie inside the range");
        }
    }
    if (adv.mode == AdversaryMode::Sinusoidal && !(adv.period > 0.0)) {
        throw std::invalid_argument("environment: sinusoidal period must be positive");
    }
    if (loss_cap && !(*loss_cap > 0.0)) {
        throw std::invalid_argument("environment: loss cap must be positive");
    }
}

std::vector<double> cyclic_cpu_list(std::span<const double> base, std::size_t arms) {
    if (base.empty()) {
        throw std::invalid_argument("cyclic_cpu_list: empty base list");
    }
    std::vector<double> out(arms);
    for (std::size_t k = 0; k < arms; ++k) {
        out[k] = base[k % base.size()];
    }
    return out;
}

double pathloss_db(double d_km) {
    if (!(d_km > 0.0)) {
        throw std::domain_error("pathloss_db: distance must be positive");
    }
    return 128.1 + 37.6 * std::log10(d_km);
}

double link_rate(double d_km, double fading_gain, const ChannelParams& channel) {
    if (!(fading_gain > 0.0)) {
        throw std::domain_error("link_rate: fading gain must be positive");
    }
    const double snr_db = channel.tx_power_dbm - pathloss_db(d_km) - channel.noise_dbm();
    const double snr = std::pow(10.0, snr_db / 10.0) * fading_gain;
    // log1p keeps the rate positive for vanishing gains.
    return channel.bandwidth_hz * std::log1p(snr) / std::numbers::ln2;
}

double offload_cost_seconds(const TaskSpec& task, double max_freq_hz, double fraction,
                            double r_up, double r_down) {
    if (!(r_up > 0.0) || !(r_down > 0.0)) {
        throw std::domain_error("offload_cost_seconds: rates must be positive");
    }
    if (!(fraction > 0.0) || !(max_freq_hz > 0.0)) {
        throw std::domain_error("offload_cost_seconds: compute share must be positive");
    }
    const double upload = task.q_bits / r_up;
    const double compute = task.q_bits * task.cycles_per_bit / (fraction * max_freq_hz);
    const double download = task.q_bits * task.output_ratio / r_down;
    return upload + compute + download;
}

double default_loss_cap(const FogConfig& config) {
    const auto freqs = cyclic_cpu_list(config.cpu_ghz, config.arms);
    const double slowest = *std::min_element(freqs.begin(), freqs.end()) * 1e9;
    const double compute = config.task.cycles_per_bit / (config.adversary.range.lo * slowest);
    const double edge_rate = link_rate(config.range_km, kFifthPercentileGain, config.channel);
    return compute + (1.0 + config.task.output_ratio) / edge_rate;
}

std::vector<double> LossMatrix::column_sums() const {
    std::vector<double> sums(arms_, 0.0);
    for (std::size_t t = 0; t < rounds_; ++t) {
        for (std::size_t k = 0; k < arms_; ++k) {
            sums[k] += at(t, k);
        }
    }
    return sums;
}

FogEnvironment::FogEnvironment(FogConfig config, std::size_t horizon, std::uint64_t seed)
    : config_(std::move(config)) {
    config_.validate();
    const std::size_t k_arms = config_.arms;
    const auto freqs = cyclic_cpu_list(config_.cpu_ghz, k_arms);
    loss_cap_ = config_.loss_cap.value_or(default_loss_cap(config_));

    Rng rng(seed);
    providers_.resize(k_arms);
    for (std::size_t k = 0; k < k_arms; ++k) {
        // (0, range]: 1 - u never reaches 0.
        providers_[k] = {freqs[k] * 1e9, config_.range_km * (1.0 - rng.uniform())};
    }

    const auto& adv = config_.adversary;
    std::vector<std::size_t> perm(k_arms);
    if (adv.mode == AdversaryMode::Switching) {
        for (std::size_t k = 0; k < k_arms; ++k) {
            perm[k] = k;
        }
        for (std::size_t k = k_arms - 1; k > 0; --k) {
            std::swap(perm[k], perm[rng.below(k + 1)]);
        }
        favored_.resize(adv.epochs);
        for (std::size_t e = 0; e < adv.epochs; ++e) {
            favored_[e] = perm[e % k_arms];
        }
    }

    losses_ = LossMatrix(horizon, k_arms);
    fractions_ = LossMatrix(horizon, k_arms);
    const double two_pi = 2.0 * std::numbers::pi;
    const double mid = 0.5 * (adv.range.lo + adv.range.hi);
    const double half = 0.5 * (adv.range.hi - adv.range.lo);

    for (std::size_t t = 0; t < horizon; ++t) {
        const std::size_t epoch =
            adv.mode == AdversaryMode::Switching ? t * adv.epochs / horizon : 0;
        for (std::size_t k = 0; k < k_arms; ++k) {
            double fraction = 0.0;
            switch (adv.mode) {
                case AdversaryMode::IidUniform:
                    fraction = rng.uniform(adv.range.lo, adv.range.hi);
                    break;
                case AdversaryMode::Sinusoidal:
                    fraction = mid + half * std::sin(two_pi * static_cast<double>(t) / adv.period +
                                                     two_pi * static_cast<double>(k) /
                                                         static_cast<double>(k_arms));
                    break;
                case AdversaryMode::Switching: {
                    const Band& band = favored_[epoch] == k ? adv.favored : adv.others;
                    fraction = rng.uniform(band.lo, band.hi);
                    break;
                }
            }
            fraction = std::clamp(fraction, adv.range.lo, adv.range.hi);
            // Independent fading per direction.
            const double gain_up = rng.exponential();
            const double gain_down = rng.exponential();
            const auto& sp = providers_[k];
            const double r_up = link_rate(sp.distance_km, std::max(gain_up, 1e-300), config_.channel);
            const double r_down =
                link_rate(sp.distance_km, std::max(gain_down, 1e-300), config_.channel);
            const double cost =
                offload_cost_seconds(config_.task, sp.max_freq_hz, fraction, r_up, r_down);
            double loss = cost / config_.task.q_bits / loss_cap_;
            if (loss > 1.0) {
                loss = 1.0;
                ++clamp_events_;
            }
            losses_.at(t, k) = loss;
            fractions_.at(t, k) = fraction;
        }
    }
}

double FogEnvironment::clamp_fraction() const noexcept {
    const double n = static_cast<double>(losses_.rounds() * losses_.arms());
    return n > 0 ? static_cast<double>(clamp_events_) / n : 0.0;
}

std::size_t SyntheticConfig::arms() const { return phases.empty() ? 0 : phases.front().means.size(); }

void SyntheticConfig::validate() const {
    if (phases.empty()) {
        throw std::invalid_argument("synthetic: at least one phase required");
    }
    const std::size_t k = arms();
    if (k < 2) {
        throw std::invalid_argument("synthetic: at least two arms required");
    }
    for (const auto& ph : phases) {
        if (ph.means.size() != k) {
            throw std::invalid_argument("synthetic: every phase needs the same arm count");
        }
        if (!(ph.weight > 0.0)) {
            throw std::invalid_argument("synthetic: phase weights must be positive");
        }
        for (double m : ph.means) {
            if (!(m >= 0.0 && m <= 1.0)) {
                throw std::invalid_argument("synthetic: means must lie in [0, 1]");
            }
        }
    }
}

LossMatrix synthetic_losses(const SyntheticConfig& config, std::size_t horizon,
                            std::uint64_t seed) {
    config.validate();
    const std::size_t k_arms = config.arms();
    LossMatrix out(horizon, k_arms);
    double total_weight = 0.0;
    for (const auto& ph : config.phases) {
        total_weight += ph.weight;
    }
    Rng rng(seed);
    std::size_t start = 0;
    double cumulative = 0.0;
    for (std::size_t i = 0; i < config.phases.size(); ++i) {
        const auto& ph = config.phases[i];
        cumulative += ph.weight;
        const std::size_t end = i + 1 == config.phases.size()
                                    ? horizon
                                    : static_cast<std::size_t>(std::floor(
                                          cumulative / total_weight * static_cast<double>(horizon)));
        for (std::size_t t = start; t < end; ++t) {
            for (std::size_t k = 0; k < k_arms; ++k) {
                out.at(t, k) = config.bernoulli ? (rng.bernoulli(ph.means[k]) ? 1.0 : 0.0)
                                                : ph.means[k];
            }
        }
        start = end;
    }
    return out;
}

}  // namespace qbandit::env
