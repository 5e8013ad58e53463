// qbandit: run, sweep, and trace bandit experiments from a JSON config.
//
// Exit codes: 0 success, 2 configuration/usage error, 3 runtime error,
// 1 selftest failure.

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <fmt/format.h>
#include <fmt/ostream.h>

#include "CLI11.hpp"
#include "qbandit/config.hpp"
#include "qbandit/harness.hpp"
#include "qbandit/selftest.hpp"

namespace {

using qbandit::config::ConfigError;
using qbandit::harness::ExperimentConfig;

constexpr int kExitConfig = 2;
constexpr int kExitRuntime = 3;

struct Overrides {
    std::string config_path;
    std::string out_dir;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> reps;
    std::optional<std::size_t> horizon;
    std::string policies;
    std::string k_list;
    bool print_config = false;
};

std::vector<std::string> split_list(const std::string& text) {
    std::vector<std::string> out;
    std::string item;
    for (char c : text + ",") {
        if (c == ',') {
            if (!item.empty()) {
                out.push_back(item);
            }
            item.clear();
        } else if (c != ' ') {
            item.push_back(c);
        }
    }
    return out;
}

ExperimentConfig resolve_config(const Overrides& o) {
    ExperimentConfig c =
        o.config_path.empty() ? qbandit::config::defaults() : qbandit::config::load(o.config_path);
    if (o.seed) c.seed = *o.seed;
    if (o.reps) c.repetitions = *o.reps;
    if (o.horizon) c.horizon = *o.horizon;
    if (!o.out_dir.empty()) c.output_dir = o.out_dir;
    if (!o.policies.empty()) {
        c.policies.clear();
        for (const auto& name : split_list(o.policies)) {
            const auto id = qbandit::policy::parse_policy_id(name);
            if (!id) {
                throw ConfigError("unknown policy '" + name + "'");
            }
            c.policies.push_back(*id);
        }
    }
    if (!o.k_list.empty()) {
        c.k_list.clear();
        for (const auto& item : split_list(o.k_list)) {
            std::size_t pos = 0;
            unsigned long long k = 0;
            try {
                k = std::stoull(item, &pos);
            } catch (const std::exception&) {
                pos = 0;
            }
            if (pos != item.size()) {
                throw ConfigError("invalid K value '" + item + "'");
            }
            c.k_list.push_back(static_cast<std::size_t>(k));
        }
    }
    try {
        c.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
    return c;
}

void warn_schedules(const ExperimentConfig& c, std::size_t arms) {
    auto sched = qbandit::policy::schedules_default(arms, c.horizon);
    sched.kind = c.settings.schedule;
    sched.gamma_ratio = c.settings.gamma_ratio;
    for (const auto& w : sched.validate()) {
        fmt::print(std::cerr, "warning: K={}: {}\n", arms, w);
    }
}

std::filesystem::path output_file(const ExperimentConfig& c, const char* name) {
    std::filesystem::create_directories(c.output_dir);
    return std::filesystem::path(c.output_dir) / name;
}

template <typename Writer>
void write_file(const std::filesystem::path& path, Writer&& writer) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw std::runtime_error("cannot write '" + path.string() + "'");
    }
    writer(out);
    out.flush();
    if (!out) {
        throw std::runtime_error("write failed for '" + path.string() + "'");
    }
}

int cmd_run(const ExperimentConfig& c) {
    warn_schedules(c, c.environment.arms());
    const auto start = std::chrono::steady_clock::now();
    const auto result = qbandit::harness::run_experiment(c);
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const auto path = output_file(c, "regret.csv");
    write_file(path, [&](std::ostream& out) { qbandit::harness::write_regret_csv(out, result); });

    fmt::print("K={} T={} R={} ({:.1f} s)\n", result.arms, result.horizon, result.repetitions, secs);
    fmt::print("{:<12} {:>14} {:>12}\n", "policy", "final regret", "std");
    for (const auto& p : result.policies) {
        fmt::print("{:<12} {:>14.3f} {:>12.3f}\n", qbandit::policy::to_string(p.id), p.final_mean(),
                   p.final_std());
    }
    fmt::print("wrote {}\n", path.string());
    return 0;
}

int cmd_sweep(const ExperimentConfig& c) {
    for (std::size_t k : c.k_list) {
        warn_schedules(c, k);
    }
    const auto results = qbandit::harness::sweep_k(c, c.k_list);
    const auto path = output_file(c, "final.csv");
    write_file(path, [&](std::ostream& out) { qbandit::harness::write_final_csv(out, results); });
    for (const auto& r : results) {
        fmt::print("K={}\n", r.arms);
        for (const auto& p : r.policies) {
            fmt::print("  {:<12} {:>12.3f} +- {:.3f}\n", qbandit::policy::to_string(p.id),
                       p.final_mean(), p.final_std());
        }
    }
    fmt::print("wrote {}\n", path.string());
    return 0;
}

int cmd_trace(const ExperimentConfig& c) {
    warn_schedules(c, c.environment.arms());
    const auto rows = qbandit::harness::phase_trace(c);
    const auto path = output_file(c, "phase_trace.csv");
    write_file(path, [&](std::ostream& out) { qbandit::harness::write_phase_csv(out, rows); });
    fmt::print("{} rows, wrote {}\n", rows.size(), path.string());
    return 0;
}

int cmd_selftest(std::uint64_t seed) {
    const qbandit::selftest::SuiteReport reports[] = {
        qbandit::selftest::amp_core_suite(seed),
        qbandit::selftest::policies_suite(seed),
    };
    bool ok = true;
    for (const auto& r : reports) {
        fmt::print("{}: {} passed, {} failed\n", r.name, r.passed, r.failed);
        for (const auto& f : r.failures) {
            fmt::print("  FAIL {}\n", f);
        }
        ok = ok && r.ok();
    }
    return ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Grover-amplified adversarial bandit experiments"};
    app.require_subcommand(1);
    Overrides o;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", o.config_path, "Experiment config (JSON)")
            ->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
        sub->add_option("--out", o.out_dir, "Output directory")
            ->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
        sub->add_option("--seed", o.seed, "Base seed")
            ->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
        sub->add_option("--reps", o.reps, "Repetitions per policy")
            ->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
        sub->add_option("--horizon", o.horizon, "Rounds per run")
            ->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
        sub->add_option("--policies", o.policies, "Comma-separated policy ids")
            ->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
        sub->add_option("--k", o.k_list, "Comma-separated arm counts")
            ->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
        sub->add_flag("--print-config", o.print_config, "Print the resolved config and exit");
    };

    auto* run = app.add_subcommand("run", "Regret curves for one K (regret.csv)");
    auto* sweep = app.add_subcommand("sweep", "Final regret per K (final.csv)");
    auto* trace = app.add_subcommand("trace", "Per-round QB phase trace (phase_trace.csv)");
    auto* self = app.add_subcommand("selftest", "Run the built-in property suites");
    for (auto* sub : {run, sweep, trace}) {
        add_common(sub);
    }
    std::uint64_t selftest_seed = 2024;
    self->add_option("--seed", selftest_seed, "Seed for the randomized properties")
        ->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitConfig;
    }

    if (self->parsed()) {
        return cmd_selftest(selftest_seed);
    }

    ExperimentConfig config;
    try {
        config = resolve_config(o);
    } catch (const std::exception& e) {
        fmt::print(std::cerr, "error: {}\n", e.what());
        return kExitConfig;
    }
    if (o.print_config) {
        std::cout << qbandit::config::to_json(config).dump(2) << '\n';
        return 0;
    }

    try {
        if (run->parsed()) return cmd_run(config);
        if (sweep->parsed()) return cmd_sweep(config);
        return cmd_trace(config);
    } catch (const std::exception& e) {
        fmt::print(std::cerr, "error: {}\n", e.what());
        return kExitRuntime;
    }
}
