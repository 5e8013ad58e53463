#include "qbandit/policies.hpp"

#include <cmath>
#include <numbers>
#include <numeric>
#include <set>

#include <gtest/gtest.h>

using namespace qbandit;
using namespace qbandit::policy;

namespace {

ScoreState scores_of(std::vector<double> l, std::size_t t = 0) {
    ScoreState s;
    s.lhat = std::move(l);
    s.t = t;
    return s;
}

double sum(const std::vector<double>& v) { return std::accumulate(v.begin(), v.end(), 0.0); }

// Plays two policies on the same loss stream with identically seeded streams and
// returns whether every round chose the same arm.
bool same_trajectory(Policy& a, Policy& b, std::uint64_t seed, std::size_t horizon,
                     std::size_t arms) {
    Rng ra(seed);
    Rng rb(seed);
    Rng losses(seed ^ 0x9e3779b97f4a7c15ULL);
    for (std::size_t t = 0; t < horizon; ++t) {
        auto ta = a.select(ra);
        auto tb = b.select(rb);
        if (ta.arm != tb.arm) {
            return false;
        }
        for (std::size_t k = 0; k < arms; ++k) {
            if (ta.p_amp[k] != tb.p_amp[k]) {
                return false;
            }
        }
        const double l = losses.uniform();
        a.observe(ta, l);
        b.observe(tb, l);
    }
    return true;
}

}  // namespace

TEST(probabilities_from_scores, worked_values) {
    auto p = probabilities_from_scores(scores_of({0, 0, 0}));
    for (double v : p) {
        EXPECT_NEAR(v, 1.0 / 3, 1e-15);
    }
    p = probabilities_from_scores(scores_of({0, std::log(2.0)}));
    EXPECT_NEAR(p[0], 2.0 / 3, 1e-15);
    EXPECT_NEAR(p[1], 1.0 / 3, 1e-15);
    p = probabilities_from_scores(scores_of({5, 5 + std::log(4.0), 5 + std::log(4.0)}));
    EXPECT_NEAR(p[0], 2.0 / 3, 1e-15);
    EXPECT_NEAR(p[1], 1.0 / 6, 1e-15);
}

TEST(probabilities_from_scores, stable_for_huge_scores) {
    const auto p = probabilities_from_scores(scores_of({1e6, 1e6 + 1, 1e6 + 800}));
    EXPECT_NEAR(sum(p), 1.0, 1e-15);
    for (double v : p) {
        EXPECT_GT(v, 0.0);
    }
}

TEST(relative_disparity, worked_values) {
    auto d = relative_disparity(scores_of({3, 3, 3}), 1);
    EXPECT_DOUBLE_EQ(d.dbar, 1.0);
    const auto s = scores_of({0, std::log(2.0), std::log(4.0)});
    d = relative_disparity(s, 0);
    EXPECT_NEAR(d.d[0], 1.0, 1e-15);
    EXPECT_NEAR(d.d[1], 0.5, 1e-15);
    EXPECT_NEAR(d.d[2], 0.25, 1e-15);
    EXPECT_NEAR(d.dbar, 0.375, 1e-15);
    EXPECT_NEAR(relative_disparity(s, 0, DisparityMode::AllArms).dbar, 1.75 / 3, 1e-15);
}

TEST(ix_estimate, worked_values) {
    EXPECT_NEAR(ix_estimate(0.6, true, 0.3, 0.1), 1.5, 1e-15);
    EXPECT_EQ(ix_estimate(0.9, false, 0.2, 0.3), 0.0);
    EXPECT_EQ(ix_estimate(1.0, true, 1.0, 0.0), 1.0);
    EXPECT_LE(ix_estimate(1.0, true, 1e-12, 0.25), 4.0);
}

TEST(ix_estimate, expected_value_never_exceeds_loss) {
    // Exhaustive over the played arm for K = 3.
    Rng rng(21);
    for (int i = 0; i < 2000; ++i) {
        std::vector<double> p{rng.uniform() + 1e-6, rng.uniform() + 1e-6, rng.uniform() + 1e-6};
        const double total = sum(p);
        for (auto& v : p) v /= total;
        const double gamma = i % 4 == 0 ? 0.0 : rng.uniform(1e-4, 1.0);
        const std::vector<double> loss{rng.uniform(), rng.uniform(), rng.uniform()};
        for (std::size_t k = 0; k < 3; ++k) {
            double e = 0.0;
            for (std::size_t played = 0; played < 3; ++played) {
                e += p[played] * ix_estimate(loss[k], played == k, p[k], gamma);
            }
            if (gamma == 0.0) {
                ASSERT_NEAR(e, loss[k], 1e-12);
            } else {
                ASSERT_LT(e, loss[k] + 1e-15);
                if (loss[k] > 0.0) {
                    ASSERT_LT(e, loss[k]);
                }
            }
        }
    }
}

TEST(schedules, default_values) {
    const auto s = schedules_default(5, 3000);
    EXPECT_NEAR(s.eta(3000), std::sqrt(2 * std::log(5.0) / 15000), 1e-15);
    EXPECT_NEAR(s.eta(3000), 0.01465, 5e-6);
    for (std::size_t t = 1; t <= 3000; t += 37) {
        EXPECT_DOUBLE_EQ(s.gamma(t), s.eta(t) / 2);
        EXPECT_GT(s.eta(t), 0.0);
        EXPECT_LE(s.eta(t), 1.0);
    }
    const auto two = schedules_default(2, 10);
    EXPECT_LE(two.eta(1), 1.0);
    EXPECT_NEAR(exp3_learning_rate(5, 3000), std::sqrt(2 * std::log(5.0) / 15000), 1e-15);
    EXPECT_THROW(schedules_default(1, 10), std::invalid_argument);
}

TEST(schedules, never_exceed_one) {
    for (std::size_t k = 2; k <= 20; ++k) {
        ScheduleParams s{ScheduleKind::Anytime, 10, k, 0.5};
        ScheduleParams fixed{ScheduleKind::FixedHorizon, 1, k, 0.5};
        EXPECT_LE(s.eta(1), 1.0);
        EXPECT_LE(fixed.eta(1), 1.0);
        EXPECT_NEAR(s.eta(1), std::min(1.0, std::sqrt(2 * std::log(double(k)) / double(k))), 1e-15);
    }
}

TEST(schedules, validate_reports_early_violations) {
    const auto w = schedules_default(5, 3000).validate();
    // eta_1 = sqrt(2 ln 5 / 5) < 1 = 1/t at t = 1 only.
    ASSERT_EQ(w.size(), 2u);
    EXPECT_NE(w[0].find("1 of 3000"), std::string::npos);
    ScheduleParams fixed{ScheduleKind::FixedHorizon, 3000, 5, 0.5};
    EXPECT_FALSE(fixed.validate().empty());
}

TEST(qb_select, cold_start_is_uniform) {
    Rng rng(1);
    const auto sched = schedules_default(5, 3000);
    std::vector<int> counts(5, 0);
    for (int i = 0; i < 5000; ++i) {
        const auto sel = qb_select(ScoreState(5), sched, {}, rng);
        const auto& tr = sel.trace;
        ASSERT_EQ(tr.t, 1u);
        ASSERT_EQ(tr.m, 0u);
        ASSERT_DOUBLE_EQ(tr.dbar, 1.0);
        ASSERT_NEAR(tr.phi, 0.0, 1e-12);
        for (std::size_t k = 0; k < 5; ++k) {
            ASSERT_NEAR(tr.p_amp[k], 0.2, 1e-12);
        }
        ++counts[sel.arm];
    }
    for (int c : counts) {
        EXPECT_NEAR(c / 5000.0, 0.2, 0.025);
    }
}

TEST(qb_select, separated_scores_push_mass_to_leader) {
    Rng rng(2);
    const auto sched = schedules_default(3, 3000);
    const auto tr = qb_select(scores_of({0, 10, 10}, 50), sched, {}, rng).trace;
    EXPECT_EQ(tr.m, 0u);
    EXPECT_NEAR(tr.p[0], 1 - 2 * std::exp(-10.0), 1e-8);
    EXPECT_NEAR(tr.dbar, std::exp(-10.0), 1e-12);
    EXPECT_NEAR(tr.sigma, std::exp(-10.0), 1e-9);
    EXPECT_GT(tr.p_amp[0], tr.p[0]);
    EXPECT_LT(tr.p_amp[1], tr.p[1]);
    EXPECT_NEAR(sum(tr.p_amp), 1.0, 1e-9);
}

TEST(qb_select, consumes_one_uniform) {
    Rng a(9);
    Rng b(9);
    const auto sched = schedules_default(4, 100);
    qb_select(scores_of({0.3, 0.1, 0.5, 0.2}, 3), sched, {}, a);
    b.uniform();
    EXPECT_EQ(a.uniform(), b.uniform());
}

TEST(qb_select, trace_ranges_random_scores) {
    Rng rng(3);
    for (int i = 0; i < 3000; ++i) {
        const std::size_t k = 2 + rng.below(14);
        ScoreState s(k);
        for (auto& v : s.lhat) v = rng.uniform(0, 8);
        const auto tr = qb_select(s, schedules_default(k, 3000), {}, rng).trace;
        const double p_m = tr.p[tr.m];
        ASSERT_LE(tr.phi, 0.0);
        ASSERT_GE(tr.phi, amp::phi_min(p_m) - 1e-12);
        ASSERT_GE(tr.sigma, amp::sigma_min(p_m) - 1e-9);
        ASSERT_LE(tr.sigma, 1.0 + 1e-9);
        ASSERT_GE(tr.rho, 1.0 - 1e-9);
        ASSERT_NEAR(sum(tr.p_amp), 1.0, 1e-9);
        for (double v : tr.p_amp) ASSERT_GE(v, 0.0);
        for (double v : tr.p) ASSERT_GT(v, 0.0);
    }
}

TEST(qb_observe, worked_values) {
    PolicyTrace tr;
    tr.t = 1;
    tr.arm = 1;
    tr.p = {0.5, 0.5};
    tr.p_amp = {0.55, 0.45};
    ScheduleParams sched{ScheduleKind::FixedHorizon, 200, 2, 0.5};
    const auto s = qb_observe(ScoreState(2), tr, 1.0, sched);
    const double eta = sched.eta(1);
    EXPECT_NEAR(s.lhat[1], eta * 1.0 / (0.45 + sched.gamma(1)), 1e-15);
    EXPECT_EQ(s.lhat[0], 0.0);
    EXPECT_EQ(s.t, 1u);
    EXPECT_NEAR(0.1 * ix_estimate(1.0, true, 0.45, 0.05), 0.2, 1e-15);
    const auto zero = qb_observe(ScoreState(2), tr, 0.0, sched);
    EXPECT_EQ(zero.lhat, ScoreState(2).lhat);
    EXPECT_THROW(qb_observe(ScoreState(2), tr, 1.5, sched), std::invalid_argument);
    EXPECT_THROW(qb_observe(ScoreState(2), tr, -0.1, sched), std::invalid_argument);
}

TEST(qb_observe, pre_amplification_option_uses_p) {
    PolicyTrace tr;
    tr.t = 4;
    tr.arm = 0;
    tr.p = {0.5, 0.5};
    tr.p_amp = {0.8, 0.2};
    const auto sched = schedules_default(2, 100);
    const auto s = qb_observe(ScoreState(2), tr, 1.0, sched, IxProbability::PreAmplification);
    EXPECT_NEAR(s.lhat[0], sched.eta(4) / (0.5 + sched.gamma(4)), 1e-15);
}

TEST(policy_ids, round_trip) {
    std::set<std::string> names;
    for (PolicyId id : kAllPolicies) {
        const auto name = std::string(to_string(id));
        names.insert(name);
        ASSERT_EQ(parse_policy_id(name), id);
    }
    EXPECT_EQ(names.size(), 7u);
    EXPECT_FALSE(parse_policy_id("thompson"));
}

TEST(reduction, zero_phase_qb_equals_exp3ix) {
    PolicySettings zero;
    zero.qb.phase = PhaseMode::ForcedZero;
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        auto qb = make_policy(PolicyId::Qb, 5, 1000, zero);
        auto ix = make_policy(PolicyId::Exp3Ix, 5, 1000, zero);
        EXPECT_TRUE(same_trajectory(*qb, *ix, seed, 1000, 5)) << "seed " << seed;
    }
}

TEST(reduction, zero_phase_zero_gamma_fixed_rate_equals_exp3) {
    PolicySettings s;
    s.qb.phase = PhaseMode::ForcedZero;
    s.gamma_ratio = 0.0;
    s.schedule = ScheduleKind::FixedHorizon;
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        auto qb = make_policy(PolicyId::Qb, 4, 800, s);
        auto exp3 = make_policy(PolicyId::Exp3, 4, 800, s);
        EXPECT_TRUE(same_trajectory(*qb, *exp3, seed, 800, 4)) << "seed " << seed;
    }
}

TEST(reduction, solved_phase_differs_from_exp3ix) {
    auto qb = make_policy(PolicyId::Qb, 5, 1000);
    auto ix = make_policy(PolicyId::Exp3Ix, 5, 1000);
    EXPECT_FALSE(same_trajectory(*qb, *ix, 1, 1000, 5));
}

TEST(qb_sole, boosts_target_then_renormalizes) {
    auto sole = make_policy(PolicyId::QbSole, 3, 100);
    Rng rng(4);
    for (int t = 0; t < 60; ++t) {
        auto tr = sole->select(rng);
        ASSERT_NEAR(sum(tr.p_amp), 1.0, 1e-12);
        const double p_m = tr.p[tr.m];
        if (p_m > 0 && p_m < 1) {
            const double boosted = std::min(tr.rho * p_m, 1.0);
            const double scale = boosted + (1.0 - p_m);
            ASSERT_NEAR(tr.p_amp[tr.m], boosted / scale, 1e-12);
            for (std::size_t k = 0; k < 3; ++k) {
                if (k != tr.m) ASSERT_NEAR(tr.p_amp[k], tr.p[k] / scale, 1e-12);
            }
        }
        sole->observe(tr, tr.arm == 2 ? 0.1 : 0.7);
    }
}

TEST(ucb1, initializes_in_index_order_then_exploits) {
    auto ucb = make_policy(PolicyId::Ucb1, 4, 1000);
    Rng rng(0);
    for (std::size_t t = 0; t < 4; ++t) {
        auto tr = ucb->select(rng);
        ASSERT_EQ(tr.arm, t);
        ucb->observe(tr, t == 2 ? 0.0 : 1.0);
    }
    int best = 0;
    for (int t = 0; t < 500; ++t) {
        auto tr = ucb->select(rng);
        best += tr.arm == 2;
        ucb->observe(tr, tr.arm == 2 ? 0.0 : 1.0);
    }
    EXPECT_GT(best, 400);
}

TEST(eps_greedy, zero_epsilon_is_pure_greedy) {
    PolicySettings s;
    s.epsilon = 0.0;
    auto eg = make_policy(PolicyId::EpsGreedy, 3, 100, s);
    Rng rng(5);
    const std::vector<double> loss{0.5, 0.2, 0.9};
    for (std::size_t t = 0; t < 100; ++t) {
        auto tr = eg->select(rng);
        if (t >= 3) {
            ASSERT_EQ(tr.arm, 1u);
        } else {
            ASSERT_EQ(tr.arm, t);
        }
        eg->observe(tr, loss[tr.arm]);
    }
}

TEST(eps_greedy, explores_at_rate_epsilon) {
    auto eg = make_policy(PolicyId::EpsGreedy, 4, 20000);
    Rng rng(6);
    int off = 0;
    const int n = 20000;
    for (int t = 0; t < n; ++t) {
        auto tr = eg->select(rng);
        if (t >= 4) off += tr.arm != 0;
        eg->observe(tr, tr.arm == 0 ? 0.0 : 1.0);
    }
    // Uniform exploration leaves the greedy arm 3/4 of the time: 0.1 * 0.75.
    EXPECT_NEAR(off / static_cast<double>(n - 4), 0.075, 0.006);
}

TEST(exp3p, distribution_mixes_uniform_floor) {
    const std::size_t k = 5;
    const std::size_t n = 3000;
    auto p3 = make_policy(PolicyId::Exp3P, k, n);
    const double gamma = std::min(1.0, 1.05 * std::sqrt(k * std::log(5.0) / n));
    Rng rng(7);
    for (int t = 0; t < 500; ++t) {
        auto tr = p3->select(rng);
        ASSERT_NEAR(sum(tr.p), 1.0, 1e-12);
        for (double v : tr.p) ASSERT_GE(v, gamma / k - 1e-15);
        p3->observe(tr, tr.arm == 3 ? 0.0 : 0.9);
    }
}

TEST(policies, reject_out_of_range_losses) {
    Rng rng(8);
    for (PolicyId id : kAllPolicies) {
        auto pol = make_policy(id, 3, 10);
        auto tr = pol->select(rng);
        EXPECT_THROW(pol->observe(tr, 1.01), std::invalid_argument) << to_string(id);
    }
    EXPECT_THROW(make_policy(PolicyId::Qb, 1, 10), std::invalid_argument);
}

TEST(policies, deterministic_given_seed) {
    for (PolicyId id : kAllPolicies) {
        auto a = make_policy(id, 5, 400);
        auto b = make_policy(id, 5, 400);
        EXPECT_TRUE(same_trajectory(*a, *b, 77, 400, 5)) << to_string(id);
    }
}
