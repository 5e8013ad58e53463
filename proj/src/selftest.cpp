#include "qbandit/selftest.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>
#include <numeric>

#include <fmt/format.h>

#include "qbandit/amp_core.hpp"
#include "qbandit/policies.hpp"
#include "qbandit/rng.hpp"

namespace qbandit::selftest {
namespace {

constexpr double kTol = 1e-9;

// Records one property; `check` returns an empty string on success or a
// description of the first counterexample.
void property(SuiteReport& report, const std::string& name, const std::function<std::string()>& check) {
    std::string failure;
    try {
        failure = check();
    } catch (const std::exception& e) {
        failure = std::string("threw: ") + e.what();
    }
    if (failure.empty()) {
        ++report.passed;
    } else {
        ++report.failed;
        report.failures.push_back(name + ": " + failure);
    }
}

std::vector<double> random_simplex(Rng& rng, std::size_t k) {
    std::vector<double> p(k);
    for (auto& v : p) {
        v = rng.exponential() + 1e-12;
    }
    const double total = std::accumulate(p.begin(), p.end(), 0.0);
    for (auto& v : p) {
        v /= total;
    }
    return p;
}

double sum(const std::vector<double>& v) { return std::accumulate(v.begin(), v.end(), 0.0); }

}  // namespace

SuiteReport amp_core_suite(std::uint64_t seed, std::size_t samples) {
    SuiteReport report;
    report.name = "amp-core";
    Rng rng(seed);
    const double pi = std::numbers::pi;

    property(report, "rho p + sigma (1 - p) = 1", [&]() -> std::string {
        for (std::size_t i = 0; i < samples; ++i) {
            const double p = rng.uniform(1e-6, 1.0 - 1e-6);
            const amp::PhaseParams ph{rng.uniform(-pi, pi), rng.uniform(-pi, pi)};
            const auto r = amp::update_ratios(p, ph);
            const double total = r.rho * p + r.sigma * (1.0 - p);
            if (std::abs(total - 1.0) > kTol) {
                return fmt::format("p={} phi1={} phi2={} total={}", p, ph.phi1, ph.phi2, total);
            }
        }
        return {};
    });

    property(report, "matched phases move rho and sigma oppositely", [&]() -> std::string {
        for (std::size_t i = 0; i < samples; ++i) {
            const double p = rng.uniform(1e-6, 1.0 - 1e-6);
            const double phi = rng.uniform(-pi, pi);
            const auto r = amp::update_ratios(p, amp::PhaseParams::matched(phi));
            if ((1.0 - r.rho) * (1.0 - r.sigma) > kTol) {
                return fmt::format("p={} phi={} rho={} sigma={}", p, phi, r.rho, r.sigma);
            }
            const double k = amp::kappa(p, phi);
            if (std::abs((1.0 - r.rho) - (p - 1.0) * k) > kTol ||
                std::abs((1.0 - r.sigma) - p * k) > kTol) {
                return fmt::format("kappa identity fails at p={} phi={}", p, phi);
            }
        }
        return {};
    });

    property(report, "solve_phi inverts sigma on [sigma_min, 1]", [&]() -> std::string {
        for (std::size_t i = 0; i < samples; ++i) {
            const double p = rng.uniform(0.005, 0.995);
            const double lo = amp::sigma_min(p);
            const double x = rng.uniform(lo, 1.0);
            const double phi = amp::solve_phi(p, x);
            if (phi < amp::phi_min(p) - kTol || phi > kTol) {
                return fmt::format("phi={} outside [{}, 0] for p={}", phi, amp::phi_min(p), p);
            }
            if (std::abs(amp::sigma_of_phi(p, phi) - x) > kTol) {
                return fmt::format("p={} target={} got {}", p, x, amp::sigma_of_phi(p, phi));
            }
        }
        return {};
    });

    property(report, "sigma nondecreasing on [phi_min, 0]", [&]() -> std::string {
        for (std::size_t i = 0; i < samples / 10 + 1; ++i) {
            const double p = rng.uniform(0.005, 0.995);
            const double a = amp::phi_min(p);
            double prev = amp::sigma_of_phi(p, a);
            if (std::abs(prev - amp::sigma_min(p)) > kTol) {
                return fmt::format("sigma(phi_min)={} sigma_min={} p={}", prev, amp::sigma_min(p), p);
            }
            for (int j = 1; j <= 200; ++j) {
                const double s = amp::sigma_of_phi(p, a - a * j / 200.0);
                if (s < prev - kTol) {
                    return fmt::format("decrease at p={} step {}", p, j);
                }
                prev = s;
            }
        }
        return {};
    });

    property(report, "grover_apply matches amplified_distribution", [&]() -> std::string {
        for (std::size_t i = 0; i < samples / 4 + 1; ++i) {
            const std::size_t k = 2 + rng.below(15);
            const auto p = random_simplex(rng, k);
            const auto target = amp::select_target(p);
            const double phi = rng.uniform(-pi, 0.0);
            const auto state = amp::AmplitudeState::from_probabilities(p);
            const auto direct = amp::grover_apply(state, target, amp::PhaseParams::matched(phi))
                                    .probabilities();
            const auto closed = amp::amplified_distribution(p, target, phi);
            for (std::size_t a = 0; a < k; ++a) {
                if (std::abs(direct[a] - closed[a]) > kTol) {
                    return fmt::format("K={} arm={} grover={} closed={}", k, a, direct[a], closed[a]);
                }
            }
            if (std::abs(sum(direct) - 1.0) > kTol) {
                return fmt::format("norm drift {} at K={}", sum(direct), k);
            }
        }
        return {};
    });

    property(report, "measure stays on the support", [&]() -> std::string {
        for (std::size_t i = 0; i < samples; ++i) {
            const std::size_t k = 2 + rng.below(7);
            auto p = random_simplex(rng, k);
            const std::size_t zero = rng.below(k);
            p[zero] = 0.0;
            const std::size_t arm = amp::measure(p, rng);
            if (arm >= k || p[arm] == 0.0) {
                return fmt::format("drew arm {} with p={}", arm, arm < k ? p[arm] : -1.0);
            }
        }
        return {};
    });
    return report;
}

SuiteReport policies_suite(std::uint64_t seed, std::size_t samples) {
    using namespace qbandit::policy;
    SuiteReport report;
    report.name = "policies";
    Rng rng(seed);

    auto random_scores = [&](std::size_t k) {
        ScoreState s(k);
        for (auto& v : s.lhat) {
            v = rng.uniform(0.0, 20.0);
        }
        s.t = rng.below(3000);
        return s;
    };

    property(report, "score softmax is a positive distribution", [&]() -> std::string {
        for (std::size_t i = 0; i < samples; ++i) {
            const auto s = random_scores(2 + rng.below(14));
            const auto p = probabilities_from_scores(s);
            if (std::abs(sum(p) - 1.0) > kTol ||
                std::any_of(p.begin(), p.end(), [](double v) { return !(v > 0.0); })) {
                return fmt::format("bad distribution for K={}", s.arms());
            }
        }
        return {};
    });

    property(report, "qb trace stays in the admissible phase range", [&]() -> std::string {
        for (std::size_t i = 0; i < samples; ++i) {
            const auto s = random_scores(2 + rng.below(14));
            const auto sched = schedules_default(s.arms(), 3000);
            const auto tr = qb_select(s, sched, QbOptions{}, rng).trace;
            const double p_m = tr.p[tr.m];
            if (tr.phi > kTol || tr.phi < amp::phi_min(p_m) - kTol) {
                return fmt::format("phi={} p_m={}", tr.phi, p_m);
            }
            if (tr.sigma < amp::sigma_min(p_m) - kTol || tr.sigma > 1.0 + kTol) {
                return fmt::format("sigma={} p_m={}", tr.sigma, p_m);
            }
            if (tr.dbar < 0.0 || tr.dbar > 1.0 || std::abs(sum(tr.p_amp) - 1.0) > kTol) {
                return fmt::format("dbar={} sum(p')={}", tr.dbar, sum(tr.p_amp));
            }
        }
        return {};
    });

    property(report, "IX estimate is optimistic in expectation", [&]() -> std::string {
        for (std::size_t i = 0; i < samples; ++i) {
            const auto p = random_simplex(rng, 3);
            const double gamma = i % 5 == 0 ? 0.0 : rng.uniform(0.0, 0.5);
            std::vector<double> loss{rng.uniform(), rng.uniform(), rng.uniform()};
            for (std::size_t k = 0; k < 3; ++k) {
                double expected = 0.0;
                for (std::size_t played = 0; played < 3; ++played) {
                    expected += p[played] * ix_estimate(loss[k], played == k, p[k], gamma);
                }
                if (expected > loss[k] + kTol) {
                    return fmt::format("arm {} E={} > l={}", k, expected, loss[k]);
                }
                if (gamma == 0.0 && std::abs(expected - loss[k]) > kTol) {
                    return fmt::format("gamma=0 arm {} E={} != l={}", k, expected, loss[k]);
                }
                if (gamma > 0.0 && loss[k] > 0.0 && !(expected < loss[k])) {
                    return fmt::format("gamma={} arm {} unbiased", gamma, k);
                }
            }
        }
        return {};
    });

    property(report, "zero-phase QB reduces to Exp3-IX", [&]() -> std::string {
        const std::size_t k = 5;
        const std::size_t horizon = 300;
        PolicySettings zero;
        zero.qb.phase = PhaseMode::ForcedZero;
        auto qb = make_policy(PolicyId::Qb, k, horizon, zero);
        auto ix = make_policy(PolicyId::Exp3Ix, k, horizon, zero);
        const std::uint64_t s = rng.below(1u << 30);
        Rng a(s);
        Rng b(s);
        Rng losses(s + 1);
        for (std::size_t t = 0; t < horizon; ++t) {
            auto ta = qb->select(a);
            auto tb = ix->select(b);
            if (ta.arm != tb.arm) {
                return fmt::format("diverged at round {}", t + 1);
            }
            const double l = losses.uniform();
            qb->observe(ta, l);
            ix->observe(tb, l);
        }
        return {};
    });
    return report;
}

}  // namespace qbandit::selftest
