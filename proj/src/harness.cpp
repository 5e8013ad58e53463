#include "qbandit/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <ostream>
#include <stdexcept>
#include <thread>

#include <fmt/format.h>
#include <fmt/ostream.h>

namespace qbandit::harness {

using policy::PolicyId;

namespace {

constexpr std::uint64_t kEnvironmentTag = hash_tag("environment");

}  // namespace

std::size_t EnvConfig::arms() const {
    return kind == Kind::Fog ? fog.arms : synthetic.arms();
}

void EnvConfig::validate() const {
    if (kind == Kind::Fog) {
        fog.validate();
    } else {
        synthetic.validate();
    }
}

void ExperimentConfig::validate() const {
    if (schema != 1) {
        throw std::invalid_argument("unsupported config schema " + std::to_string(schema));
    }
    if (policies.empty()) {
        throw std::invalid_argument("at least one policy required");
    }
    if (repetitions < 1) {
        throw std::invalid_argument("repetitions must be >= 1");
    }
    if (horizon < 1) {
        throw std::invalid_argument("horizon must be >= 1");
    }
    for (std::size_t k : k_list) {
        if (k < 2) {
            throw std::invalid_argument("K values must be >= 2");
        }
    }
    if (!(settings.epsilon >= 0.0 && settings.epsilon <= 1.0)) {
        throw std::invalid_argument("epsilon must lie in [0, 1]");
    }
    if (!(settings.gamma_ratio >= 0.0)) {
        throw std::invalid_argument("gamma ratio must be nonnegative");
    }
    environment.validate();
}

RunSeeds derive_run_seeds(std::uint64_t base, PolicyId id, std::size_t rep) {
    return {derive_seed(base, kEnvironmentTag, rep),
            derive_seed(base, hash_tag(policy::to_string(id)), rep)};
}

env::LossMatrix build_losses(const EnvConfig& config, std::size_t horizon, std::uint64_t seed) {
    if (config.kind == EnvConfig::Kind::Fog) {
        return env::FogEnvironment(config.fog, horizon, seed).losses();
    }
    return env::synthetic_losses(config.synthetic, horizon, seed);
}

Trajectory play(policy::Policy& policy, const env::LossMatrix& losses, Rng& rng, bool keep_traces) {
    Trajectory out;
    const std::size_t horizon = losses.rounds();
    out.arms.reserve(horizon);
    out.losses.reserve(horizon);
    if (keep_traces) {
        out.traces.reserve(horizon);
    }
    for (std::size_t t = 0; t < horizon; ++t) {
        auto trace = policy.select(rng);
        const double loss = losses.at(t, trace.arm);
        policy.observe(trace, loss);
        out.arms.push_back(trace.arm);
        out.losses.push_back(loss);
        if (keep_traces) {
            out.traces.push_back(std::move(trace));
        }
    }
    return out;
}

Trajectory run_single(PolicyId id, const ExperimentConfig& config, RunSeeds seeds,
                      bool keep_traces) {
    const auto losses = build_losses(config.environment, config.horizon, seeds.environment);
    if (losses.rounds() == 0) {
        return {};
    }
    auto policy = policy::make_policy(id, losses.arms(), config.horizon, config.settings);
    Rng rng(seeds.policy);
    return play(*policy, losses, rng, keep_traces);
}

std::size_t best_fixed_arm(const env::LossMatrix& losses) {
    const auto sums = losses.column_sums();
    return static_cast<std::size_t>(std::min_element(sums.begin(), sums.end()) - sums.begin());
}

std::vector<double> regret_series(std::span<const std::size_t> arms, const env::LossMatrix& losses) {
    if (arms.size() != losses.rounds()) {
        throw std::invalid_argument("regret_series: trajectory and loss matrix lengths differ");
    }
    std::vector<double> out(arms.size());
    if (arms.empty()) {
        return out;
    }
    const std::size_t best = best_fixed_arm(losses);
    double played = 0.0;
    double comparator = 0.0;
    for (std::size_t t = 0; t < arms.size(); ++t) {
        played += losses.at(t, arms[t]);
        comparator += losses.at(t, best);
        out[t] = played - comparator;
    }
    return out;
}

std::vector<double> regret_series(const Trajectory& trajectory, const env::LossMatrix& losses) {
    return regret_series(trajectory.arms, losses);
}

SeriesStats aggregate_series(std::span<const std::vector<double>> series) {
    SeriesStats out;
    if (series.empty()) {
        return out;
    }
    const std::size_t len = series.front().size();
    out.mean.assign(len, 0.0);
    out.stddev.assign(len, 0.0);
    std::vector<double> m2(len, 0.0);
    // Welford, one series at a time in index order.
    for (std::size_t i = 0; i < series.size(); ++i) {
        if (series[i].size() != len) {
            throw std::invalid_argument("aggregate_series: series lengths differ");
        }
        const double n = static_cast<double>(i + 1);
        for (std::size_t t = 0; t < len; ++t) {
            const double delta = series[i][t] - out.mean[t];
            out.mean[t] += delta / n;
            m2[t] += delta * (series[i][t] - out.mean[t]);
        }
    }
    if (series.size() > 1) {
        const double dof = static_cast<double>(series.size() - 1);
        for (std::size_t t = 0; t < len; ++t) {
            out.stddev[t] = std::sqrt(std::max(m2[t], 0.0) / dof);
        }
    }
    return out;
}

double PolicyAggregate::final_mean() const {
    return cumulative_regret.mean.empty() ? 0.0 : cumulative_regret.mean.back();
}

double PolicyAggregate::final_std() const {
    return cumulative_regret.stddev.empty() ? 0.0 : cumulative_regret.stddev.back();
}

double PolicyAggregate::final_se(std::size_t repetitions) const {
    return final_std() / std::sqrt(static_cast<double>(std::max<std::size_t>(repetitions, 1)));
}

const PolicyAggregate& AggregateResult::at(PolicyId id) const {
    for (const auto& p : policies) {
        if (p.id == id) {
            return p;
        }
    }
    throw std::out_of_range("AggregateResult: policy not present");
}

std::size_t thread_budget() {
    if (const char* env_value = std::getenv("QBANDIT_THREADS")) {
        char* end = nullptr;
        const long parsed = std::strtol(env_value, &end, 10);
        if (end != env_value && *end == '\0' && parsed > 0) {
            return static_cast<std::size_t>(parsed);
        }
    }
    return std::max(1u, std::thread::hardware_concurrency());
}

AggregateResult run_experiment(const ExperimentConfig& config, std::size_t threads) {
    config.validate();
    const std::size_t reps = config.repetitions;
    const std::size_t n_policies = config.policies.size();

    // regrets[policy][rep]
    std::vector<std::vector<std::vector<double>>> regrets(
        n_policies, std::vector<std::vector<double>>(reps));

    auto run_rep = [&](std::size_t rep) {
        // One loss matrix per repetition, shared by every policy.
        const auto env_seed = derive_run_seeds(config.seed, config.policies.front(), rep).environment;
        const auto losses = build_losses(config.environment, config.horizon, env_seed);
        for (std::size_t i = 0; i < n_policies; ++i) {
            const PolicyId id = config.policies[i];
            auto policy = policy::make_policy(id, losses.arms(), config.horizon, config.settings);
            Rng rng(derive_run_seeds(config.seed, id, rep).policy);
            const auto trajectory = play(*policy, losses, rng);
            regrets[i][rep] = regret_series(trajectory, losses);
        }
    };

    const std::size_t workers = std::min(threads == 0 ? thread_budget() : threads, reps);
    if (workers <= 1) {
        for (std::size_t rep = 0; rep < reps; ++rep) {
            run_rep(rep);
        }
    } else {
        std::atomic<std::size_t> next{0};
        std::vector<std::exception_ptr> errors(workers);
        {
            std::vector<std::jthread> pool;
            pool.reserve(workers);
            for (std::size_t w = 0; w < workers; ++w) {
                pool.emplace_back([&, w] {
                    try {
                        for (std::size_t rep = next++; rep < reps; rep = next++) {
                            run_rep(rep);
                        }
                    } catch (...) {
                        errors[w] = std::current_exception();
                        next = reps;
                    }
                });
            }
        }
        for (const auto& e : errors) {
            if (e) {
                std::rethrow_exception(e);
            }
        }
    }

    AggregateResult out;
    out.arms = config.environment.arms();
    out.horizon = config.horizon;
    out.repetitions = reps;
    for (std::size_t i = 0; i < n_policies; ++i) {
        out.policies.push_back({config.policies[i], aggregate_series(regrets[i])});
    }
    return out;
}

std::vector<AggregateResult> sweep_k(const ExperimentConfig& config,
                                     std::span<const std::size_t> arm_counts, std::size_t threads) {
    if (config.environment.kind != EnvConfig::Kind::Fog) {
        throw std::invalid_argument("sweep_k: only the fog environment can change its arm count");
    }
    std::vector<AggregateResult> out;
    out.reserve(arm_counts.size());
    for (std::size_t k : arm_counts) {
        if (k < 2) {
            throw std::invalid_argument("sweep_k: K values must be >= 2");
        }
        ExperimentConfig per_k = config;
        per_k.environment.fog.arms = k;
        out.push_back(run_experiment(per_k, threads));
    }
    return out;
}

std::vector<PhaseRow> phase_trace(const ExperimentConfig& config) {
    config.validate();
    const auto trajectory =
        run_single(PolicyId::Qb, config, derive_run_seeds(config.seed, PolicyId::Qb, 0), true);
    std::vector<PhaseRow> rows;
    rows.reserve(trajectory.traces.size());
    for (const auto& tr : trajectory.traces) {
        rows.push_back({tr.t, tr.p[tr.m], tr.dbar, tr.phi, tr.sigma});
    }
    return rows;
}

void write_regret_csv(std::ostream& out, const AggregateResult& result) {
    fmt::print(out, "policy,t,mean_cum_regret,std_cum_regret\n");
    for (const auto& p : result.policies) {
        const auto& s = p.cumulative_regret;
        for (std::size_t t = 0; t < s.mean.size(); ++t) {
            fmt::print(out, "{},{},{:.12g},{:.12g}\n", policy::to_string(p.id), t + 1, s.mean[t],
                       s.stddev[t]);
        }
    }
}

void write_final_csv(std::ostream& out, std::span<const AggregateResult> results) {
    fmt::print(out, "policy,K,mean,std\n");
    for (const auto& r : results) {
        for (const auto& p : r.policies) {
            fmt::print(out, "{},{},{:.12g},{:.12g}\n", policy::to_string(p.id), r.arms,
                       p.final_mean(), p.final_std());
        }
    }
}

void write_phase_csv(std::ostream& out, std::span<const PhaseRow> rows) {
    fmt::print(out, "t,p_m,dbar,phi,sigma\n");
    for (const auto& r : rows) {
        fmt::print(out, "{},{:.12g},{:.12g},{:.12g},{:.12g}\n", r.t, r.p_m, r.dbar, r.phi, r.sigma);
    }
}

}  // namespace qbandit::harness
