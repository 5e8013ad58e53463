#pragma once

// Loss generators. The fog environment turns wireless link rates and
// adversarially allocated CPU shares into per-bit offloading costs, normalized
// into [0, 1]. All losses for a run are drawn up front from the environment's
// own random stream, so the sequence is oblivious to the learner.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

namespace qbandit::env {

struct ChannelParams {
    double tx_power_dbm = 24.0;
    double bandwidth_hz = 1e7;
    double noise_dbm_per_hz = -174.0;

    double noise_dbm() const;
};

struct TaskSpec {
    double q_bits = 1e6;
    double cycles_per_bit = 1e3;
    double output_ratio = 0.2;  // result size as a fraction of the input
};

struct Band {
    double lo = 0.2;
    double hi = 0.5;
};

enum class AdversaryMode { IidUniform, Sinusoidal, Switching };

std::string_view to_string(AdversaryMode mode) noexcept;
std::optional<AdversaryMode> parse_adversary_mode(std::string_view text) noexcept;

/// How the CPU share granted by each SP evolves over the horizon.
///   iid-uniform: U[range] every round.
///   sinusoidal:  mid(range) + half_width(range) * sin(2 pi t / period + 2 pi k / K).
///   switching:   the horizon is split into `epochs` equal parts; in epoch e the SP
///                perm[e mod K] (seeded permutation) draws from `favored`, all others
///                from `others`.
struct AdversarySchedule {
    AdversaryMode mode = AdversaryMode::Switching;
    Band range{0.2, 0.5};
    std::size_t epochs = 3;
    Band favored{0.4, 0.5};
    Band others{0.2, 0.4};
    double period = 1000.0;
};

struct SpProfile {
    double max_freq_hz = 0.0;
    double distance_km = 0.0;
};

struct FogConfig {
    std::size_t arms = 5;
    std::vector<double> cpu_ghz{6.0, 6.0, 5.0, 4.0, 3.5};  // cycled when arms > size
    double range_km = 0.4;
    ChannelParams channel;
    TaskSpec task;
    AdversarySchedule adversary;
    std::optional<double> loss_cap;  // seconds per bit; derived when absent

    /// Throws std::invalid_argument on inconsistent parameters.
    void validate() const;
};

/// Extends a frequency list cyclically: F_k = F_{k mod n}.
std::vector<double> cyclic_cpu_list(std::span<const double> base, std::size_t arms);

/// Large-scale loss 128.1 + 37.6 log10(d), d in km.
double pathloss_db(double d_km);

/// Shannon rate B log2(1 + SNR) in bit/s.
double link_rate(double d_km, double fading_gain, const ChannelParams& channel);

/// Upload + execution + download time for one task.
double offload_cost_seconds(const TaskSpec& task, double max_freq_hz, double fraction,
                            double r_up, double r_down);

/// Worst-case compute cost at the lowest share of the slowest SP plus the link cost
/// at the range edge with a 5th-percentile fading gain, per bit.
double default_loss_cap(const FogConfig& config);

/// Row-major T x K matrix of losses in [0, 1]; row t is round t (0-based).
class LossMatrix {
public:
    LossMatrix() = default;
    LossMatrix(std::size_t rounds, std::size_t arms)
        : rounds_(rounds), arms_(arms), data_(rounds * arms, 0.0) {}

    std::size_t rounds() const noexcept { return rounds_; }
    std::size_t arms() const noexcept { return arms_; }

    double& at(std::size_t round, std::size_t arm) { return data_[round * arms_ + arm]; }
    double at(std::size_t round, std::size_t arm) const { return data_[round * arms_ + arm]; }

    std::span<const double> row(std::size_t round) const {
        return {data_.data() + round * arms_, arms_};
    }

    /// Per-arm totals over all rounds.
    std::vector<double> column_sums() const;

    bool operator==(const LossMatrix&) const = default;

private:
    std::size_t rounds_ = 0;
    std::size_t arms_ = 0;
    std::vector<double> data_;
};

class FogEnvironment {
public:
    FogEnvironment(FogConfig config, std::size_t horizon, std::uint64_t seed);

    std::size_t arms() const noexcept { return config_.arms; }
    std::size_t horizon() const noexcept { return losses_.rounds(); }

    /// Normalized per-bit loss of `arm` in round `round` (0-based).
    double unit_loss(std::size_t round, std::size_t arm) const { return losses_.at(round, arm); }
    std::span<const double> round_losses(std::size_t round) const { return losses_.row(round); }
    const LossMatrix& losses() const noexcept { return losses_; }

    /// CPU share granted by `arm` in `round`.
    double allocation(std::size_t round, std::size_t arm) const {
        return fractions_.at(round, arm);
    }

    const std::vector<SpProfile>& providers() const noexcept { return providers_; }
    double loss_cap() const noexcept { return loss_cap_; }
    std::size_t clamp_events() const noexcept { return clamp_events_; }
    double clamp_fraction() const noexcept;

    /// SP favored in each epoch (switching mode only; empty otherwise).
    const std::vector<std::size_t>& favored_order() const noexcept { return favored_; }

private:
    FogConfig config_;
    std::vector<SpProfile> providers_;
    std::vector<std::size_t> favored_;
    LossMatrix losses_;
    LossMatrix fractions_;
    double loss_cap_ = 0.0;
    std::size_t clamp_events_ = 0;
};

/// A stretch of the horizon with fixed per-arm loss means.
struct SyntheticPhase {
    double weight = 1.0;  // share of the horizon, relative to the other phases
    std::vector<double> means;
};

struct SyntheticConfig {
    std::vector<SyntheticPhase> phases;
    bool bernoulli = false;  // draw 0/1 losses with the phase means instead of using them directly

    std::size_t arms() const;
    void validate() const;
};

LossMatrix synthetic_losses(const SyntheticConfig& config, std::size_t horizon,
                            std::uint64_t seed);

}  // namespace qbandit::env
