#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "qbandit/env.hpp"
#include "qbandit/policies.hpp"

namespace qbandit::harness {

struct EnvConfig {
    enum class Kind { Fog, Synthetic };

    Kind kind = Kind::Fog;
    env::FogConfig fog;
    env::SyntheticConfig synthetic;

    std::size_t arms() const;
    void validate() const;
};

struct ExperimentConfig {
    int schema = 1;
    std::vector<policy::PolicyId> policies{std::begin(policy::kAllPolicies),
                                           std::end(policy::kAllPolicies)};
    EnvConfig environment;
    std::size_t horizon = 3000;
    std::size_t repetitions = 50;
    std::uint64_t seed = 1;
    std::string output_dir = "results";
    std::vector<std::size_t> k_list{5, 10, 15};
    policy::PolicySettings settings;

    /// Throws std::invalid_argument on an unusable configuration.
    void validate() const;
};

/// Seeds for one repetition. The environment seed depends only on (base, rep) so
/// all policies in a repetition see the same loss matrix.
struct RunSeeds {
    std::uint64_t environment = 0;
    std::uint64_t policy = 0;
};

RunSeeds derive_run_seeds(std::uint64_t base, policy::PolicyId id, std::size_t rep);

struct Trajectory {
    std::vector<std::size_t> arms;
    std::vector<double> losses;
    std::vector<policy::PolicyTrace> traces;  // only when requested

    std::size_t size() const noexcept { return arms.size(); }
};

env::LossMatrix build_losses(const EnvConfig& config, std::size_t horizon, std::uint64_t seed);

/// Runs `policy` against a fixed loss matrix.
Trajectory play(policy::Policy& policy, const env::LossMatrix& losses, Rng& rng,
                bool keep_traces = false);

Trajectory run_single(policy::PolicyId id, const ExperimentConfig& config, RunSeeds seeds,
                      bool keep_traces = false);

/// Best fixed arm over the whole horizon, lowest index on ties.
std::size_t best_fixed_arm(const env::LossMatrix& losses);

/// Cumulative regret against the best fixed arm in hindsight.
std::vector<double> regret_series(std::span<const std::size_t> arms, const env::LossMatrix& losses);
std::vector<double> regret_series(const Trajectory& trajectory, const env::LossMatrix& losses);

struct SeriesStats {
    std::vector<double> mean;
    std::vector<double> stddev;  // sample (n - 1); zero for a single series
};

/// Per-index mean and standard deviation across equally long series, reduced in
/// ascending series order.
SeriesStats aggregate_series(std::span<const std::vector<double>> series);

struct PolicyAggregate {
    policy::PolicyId id{};
    SeriesStats cumulative_regret;

    double final_mean() const;
    double final_std() const;
    /// Standard error of the final mean.
    double final_se(std::size_t repetitions) const;
};

struct AggregateResult {
    std::size_t arms = 0;
    std::size_t horizon = 0;
    std::size_t repetitions = 0;
    std::vector<PolicyAggregate> policies;

    const PolicyAggregate& at(policy::PolicyId id) const;
};

/// Number of worker threads: QBANDIT_THREADS if set to a positive integer, else
/// the hardware concurrency.
std::size_t thread_budget();

/// R repetitions per policy. Identical results for any thread count.
AggregateResult run_experiment(const ExperimentConfig& config, std::size_t threads = 0);

/// Runs the experiment once per K, extending the CPU list cyclically.
std::vector<AggregateResult> sweep_k(const ExperimentConfig& config,
                                     std::span<const std::size_t> arm_counts,
                                     std::size_t threads = 0);

struct PhaseRow {
    std::size_t t = 0;
    double p_m = 0.0;
    double dbar = 0.0;
    double phi = 0.0;
    double sigma = 0.0;
};

/// Per-round (p_m, dbar, phi, sigma) of a QB run (repetition 0).
std::vector<PhaseRow> phase_trace(const ExperimentConfig& config);

void write_regret_csv(std::ostream& out, const AggregateResult& result);
void write_final_csv(std::ostream& out, std::span<const AggregateResult> results);
void write_phase_csv(std::ostream& out, std::span<const PhaseRow> rows);

}  // namespace qbandit::harness
