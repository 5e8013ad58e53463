#include "qbandit/policies.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace qbandit::policy {

// ---------------------------------------------------------------------------
// Schedules

double ScheduleParams::eta(std::size_t t) const {
    const auto k = static_cast<double>(arms);
    const auto denom_t = static_cast<double>(kind == ScheduleKind::Anytime ? std::max<std::size_t>(t, 1)
                                                                          : horizon);
    return std::min(1.0, std::sqrt(2.0 * std::log(k) / (k * denom_t)));
}

double ScheduleParams::gamma(std::size_t t) const { return gamma_ratio * eta(t); }

std::vector<std::string> ScheduleParams::validate() const {
    std::vector<std::string> warnings;
    auto summarize = [&](const char* condition, auto violates) {
        std::size_t count = 0;
        std::size_t first = 0;
        std::size_t last = 0;
        for (std::size_t t = 1; t <= horizon; ++t) {
            if (violates(t)) {
                if (count++ == 0) {
                    first = t;
                }
                last = t;
            }
        }
        if (count > 0) {
            warnings.push_back(std::string(condition) + " violated in " + std::to_string(count) +
                               " of " + std::to_string(horizon) + " rounds (t = " +
                               std::to_string(first) + ".." + std::to_string(last) + ")");
        }
    };
    summarize("eta_t > 1/t", [&](std::size_t t) { return eta(t) <= 1.0 / static_cast<double>(t); });
    summarize("gamma_t > 1/(2t)",
              [&](std::size_t t) { return gamma(t) <= 0.5 / static_cast<double>(t); });
    return warnings;
}

ScheduleParams schedules_default(std::size_t arms, std::size_t horizon) {
    if (arms < 2 || horizon < 1) {
        throw std::invalid_argument("schedules_default: need K >= 2 and T >= 1");
    }
    return ScheduleParams{ScheduleKind::Anytime, horizon, arms, 0.5};
}

double exp3_learning_rate(std::size_t arms, std::size_t horizon) {
    const auto k = static_cast<double>(arms);
    return std::min(1.0, std::sqrt(2.0 * std::log(k) / (static_cast<double>(horizon) * k)));
}

// ---------------------------------------------------------------------------
// Score machinery

std::vector<double> probabilities_from_scores(const ScoreState& scores) {
    const auto& l = scores.lhat;
    if (l.empty()) {
        throw std::invalid_argument("probabilities_from_scores: no arms");
    }
    const double lo = *std::min_element(l.begin(), l.end());
    std::vector<double> p(l.size());
    double total = 0.0;
    for (std::size_t k = 0; k < l.size(); ++k) {
        // Floored so extreme score gaps keep every arm strictly positive.
        p[k] = std::max(std::exp(-(l[k] - lo)), std::numeric_limits<double>::min());
        total += p[k];
    }
    for (auto& pk : p) {
        pk /= total;
    }
    return p;
}

Disparity relative_disparity(const ScoreState& scores, std::size_t m, DisparityMode mode) {
    const auto& l = scores.lhat;
    if (m >= l.size()) {
        throw std::out_of_range("relative_disparity: target arm out of range");
    }
    const double lo = *std::min_element(l.begin(), l.end());
    Disparity out;
    out.d.resize(l.size());
    double sum = 0.0;
    for (std::size_t k = 0; k < l.size(); ++k) {
        out.d[k] = std::max(std::exp(-(l[k] - lo)), std::numeric_limits<double>::min());
        sum += out.d[k];
    }
    if (mode == DisparityMode::ExcludeTarget) {
        out.dbar = (sum - out.d[m]) / static_cast<double>(l.size() - 1);
    } else {
        out.dbar = sum / static_cast<double>(l.size());
    }
    out.dbar = std::clamp(out.dbar, 0.0, 1.0);
    return out;
}

double ix_estimate(double loss, bool chosen, double p_used, double gamma) {
    if (!(p_used + gamma > 0.0)) {
        throw std::domain_error("ix_estimate: p + gamma must be positive");
    }
    return chosen ? loss / (p_used + gamma) : 0.0;
}

Selection qb_select(const ScoreState& scores, const ScheduleParams& /*schedule*/,
                    const QbOptions& options, Rng& rng) {
    Selection out;
    PolicyTrace& tr = out.trace;
    tr.t = scores.t + 1;
    tr.p = probabilities_from_scores(scores);
    const amp::TargetSelection target = amp::select_target(tr.p);
    tr.m = target.m;
    tr.dbar = relative_disparity(scores, tr.m, options.disparity).dbar;

    const double p_m = tr.p[tr.m];
    const bool amplifiable = p_m > 0.0 && p_m < 1.0;
    tr.phi = (options.phase == PhaseMode::Solved && amplifiable)
                 ? amp::phi_from_disparity(p_m, tr.dbar)
                 : 0.0;
    if (amplifiable) {
        const auto r = amp::update_ratios(p_m, amp::PhaseParams::matched(tr.phi));
        tr.rho = r.rho;
        tr.sigma = r.sigma;
    }

    if (options.amplification == Amplification::Matched) {
        tr.p_amp = amp::amplified_distribution(tr.p, target, tr.phi);
    } else {
        // Target-only boost; the other arms are restored by renormalizing.
        tr.p_amp = tr.p;
        if (amplifiable) {
            tr.p_amp[tr.m] = std::min(tr.rho * p_m, 1.0);
            const double total = std::accumulate(tr.p_amp.begin(), tr.p_amp.end(), 0.0);
            for (auto& v : tr.p_amp) {
                v /= total;
            }
        }
    }
    tr.arm = amp::measure(tr.p_amp, rng);
    out.arm = tr.arm;
    return out;
}

namespace {

void require_unit_loss(double loss) {
    if (!(loss >= 0.0 && loss <= 1.0)) {
        throw std::invalid_argument("loss must lie in [0, 1], got " + std::to_string(loss));
    }
}

}  // namespace

ScoreState qb_observe(ScoreState scores, const PolicyTrace& trace, double loss,
                      const ScheduleParams& schedule, IxProbability ix_probability) {
    require_unit_loss(loss);
    const auto& used = ix_probability == IxProbability::Amplified ? trace.p_amp : trace.p;
    const double estimate = ix_estimate(loss, true, used[trace.arm], schedule.gamma(trace.t));
    scores.lhat[trace.arm] += schedule.eta(trace.t) * estimate;
    scores.t = trace.t;
    return scores;
}

// ---------------------------------------------------------------------------
// Policy identifiers

std::string_view to_string(PolicyId id) noexcept {
    switch (id) {
        case PolicyId::Qb: return "qb";
        case PolicyId::QbSole: return "qb-sole";
        case PolicyId::Exp3Ix: return "exp3ix";
        case PolicyId::Exp3P: return "exp3p";
        case PolicyId::Exp3: return "exp3";
        case PolicyId::Ucb1: return "ucb1";
        case PolicyId::EpsGreedy: return "eps-greedy";
    }
    return "unknown";
}

std::optional<PolicyId> parse_policy_id(std::string_view text) noexcept {
    for (PolicyId id : kAllPolicies) {
        if (to_string(id) == text) {
            return id;
        }
    }
    return std::nullopt;
}

// ---------------------------------------------------------------------------
// Policies

namespace {

void fill_identity(PolicyTrace& tr) {
    tr.m = amp::select_target(tr.p).m;
    tr.dbar = 1.0;
    tr.phi = 0.0;
    tr.rho = 1.0;
    tr.sigma = 1.0;
    tr.p_amp = tr.p;
}

std::size_t argmin_index(std::span<const double> v) {
    return static_cast<std::size_t>(std::min_element(v.begin(), v.end()) - v.begin());
}

class QbPolicy final : public Policy {
public:
    QbPolicy(PolicyId id, std::size_t arms, ScheduleParams schedule, QbOptions options)
        : id_(id), scores_(arms), schedule_(schedule), options_(options) {}

    PolicyId id() const noexcept override { return id_; }

    PolicyTrace select(Rng& rng) override {
        return qb_select(scores_, schedule_, options_, rng).trace;
    }

    void observe(PolicyTrace& trace, double loss) override {
        scores_ = qb_observe(std::move(scores_), trace, loss, schedule_, options_.ix_probability);
        const auto& used =
            options_.ix_probability == IxProbability::Amplified ? trace.p_amp : trace.p;
        trace.loss = loss;
        trace.lhat = ix_estimate(loss, true, used[trace.arm], schedule_.gamma(trace.t));
    }

private:
    PolicyId id_;
    ScoreState scores_;
    ScheduleParams schedule_;
    QbOptions options_;
};

// Exp3-IX: exponential weights over IX estimates, no amplification step.
class Exp3IxPolicy final : public Policy {
public:
    Exp3IxPolicy(std::size_t arms, ScheduleParams schedule) : scores_(arms), schedule_(schedule) {}

    PolicyId id() const noexcept override { return PolicyId::Exp3Ix; }

    PolicyTrace select(Rng& rng) override {
        PolicyTrace tr;
        tr.t = scores_.t + 1;
        tr.p = probabilities_from_scores(scores_);
        fill_identity(tr);
        tr.arm = amp::measure(tr.p, rng);
        return tr;
    }

    void observe(PolicyTrace& trace, double loss) override {
        require_unit_loss(loss);
        const double estimate = ix_estimate(loss, true, trace.p[trace.arm], schedule_.gamma(trace.t));
        scores_.lhat[trace.arm] += schedule_.eta(trace.t) * estimate;
        scores_.t = trace.t;
        trace.loss = loss;
        trace.lhat = estimate;
    }

private:
    ScoreState scores_;
    ScheduleParams schedule_;
};

// Exp3 with unbiased importance-weighted estimates and a fixed rate.
class Exp3Policy final : public Policy {
public:
    Exp3Policy(std::size_t arms, std::size_t horizon)
        : scores_(arms), eta_(exp3_learning_rate(arms, horizon)) {}

    PolicyId id() const noexcept override { return PolicyId::Exp3; }

    PolicyTrace select(Rng& rng) override {
        PolicyTrace tr;
        tr.t = scores_.t + 1;
        tr.p = probabilities_from_scores(scores_);
        fill_identity(tr);
        tr.arm = amp::measure(tr.p, rng);
        return tr;
    }

    void observe(PolicyTrace& trace, double loss) override {
        require_unit_loss(loss);
        const double estimate = ix_estimate(loss, true, trace.p[trace.arm], 0.0);
        scores_.lhat[trace.arm] += eta_ * estimate;
        scores_.t = trace.t;
        trace.loss = loss;
        trace.lhat = estimate;
    }

private:
    ScoreState scores_;
    double eta_;
};

// Exp3.P on gains g = 1 - loss with uniform mixing and the beta/p optimistic bias.
class Exp3PPolicy final : public Policy {
public:
    Exp3PPolicy(std::size_t arms, std::size_t horizon, const Exp3PConstants& c)
        : gains_(arms, 0.0) {
        const auto k = static_cast<double>(arms);
        const auto n = static_cast<double>(horizon);
        const double base = std::sqrt(std::log(k) / (n * k));
        beta_ = c.beta_scale * base;
        eta_ = c.eta_scale * base;
        gamma_ = std::min(1.0, c.gamma_scale * std::sqrt(k * std::log(k) / n));
    }

    PolicyId id() const noexcept override { return PolicyId::Exp3P; }

    PolicyTrace select(Rng& rng) override {
        PolicyTrace tr;
        tr.t = ++t_;
        const double hi = *std::max_element(gains_.begin(), gains_.end());
        tr.p.resize(gains_.size());
        double total = 0.0;
        for (std::size_t k = 0; k < gains_.size(); ++k) {
            tr.p[k] = std::exp(eta_ * (gains_[k] - hi));
            total += tr.p[k];
        }
        const double uniform = gamma_ / static_cast<double>(gains_.size());
        for (auto& pk : tr.p) {
            pk = (1.0 - gamma_) * pk / total + uniform;
        }
        fill_identity(tr);
        tr.arm = amp::measure(tr.p, rng);
        return tr;
    }

    void observe(PolicyTrace& trace, double loss) override {
        require_unit_loss(loss);
        for (std::size_t k = 0; k < gains_.size(); ++k) {
            gains_[k] += beta_ / trace.p[k];
        }
        gains_[trace.arm] += (1.0 - loss) / trace.p[trace.arm];
        trace.loss = loss;
        trace.lhat = loss / trace.p[trace.arm];
    }

private:
    std::vector<double> gains_;
    std::size_t t_ = 0;
    double beta_ = 0.0;
    double eta_ = 0.0;
    double gamma_ = 0.0;
};

// Shared bookkeeping for the two empirical-mean baselines.
class MeanTracker {
public:
    explicit MeanTracker(std::size_t arms) : pulls_(arms, 0), sums_(arms, 0.0) {}

    void add(std::size_t arm, double loss) {
        ++pulls_[arm];
        sums_[arm] += loss;
    }
    double mean(std::size_t arm) const { return sums_[arm] / static_cast<double>(pulls_[arm]); }
    std::size_t pulls(std::size_t arm) const { return pulls_[arm]; }
    std::size_t arms() const { return pulls_.size(); }

private:
    std::vector<std::size_t> pulls_;
    std::vector<double> sums_;
};

class Ucb1Policy final : public Policy {
public:
    explicit Ucb1Policy(std::size_t arms) : stats_(arms) {}

    PolicyId id() const noexcept override { return PolicyId::Ucb1; }

    PolicyTrace select(Rng& /*rng*/) override {
        PolicyTrace tr;
        tr.t = ++t_;
        const std::size_t k_arms = stats_.arms();
        std::size_t arm = 0;
        if (tr.t <= k_arms) {
            arm = tr.t - 1;
        } else {
            // Lower confidence bound on the loss.
            std::vector<double> index(k_arms);
            const double log_t = std::log(static_cast<double>(tr.t));
            for (std::size_t k = 0; k < k_arms; ++k) {
                index[k] = stats_.mean(k) -
                           std::sqrt(2.0 * log_t / static_cast<double>(stats_.pulls(k)));
            }
            arm = argmin_index(index);
        }
        tr.p.assign(k_arms, 0.0);
        tr.p[arm] = 1.0;
        fill_identity(tr);
        tr.arm = arm;
        return tr;
    }

    void observe(PolicyTrace& trace, double loss) override {
        require_unit_loss(loss);
        stats_.add(trace.arm, loss);
        trace.loss = loss;
        trace.lhat = loss;
    }

private:
    MeanTracker stats_;
    std::size_t t_ = 0;
};

class EpsGreedyPolicy final : public Policy {
public:
    EpsGreedyPolicy(std::size_t arms, double epsilon) : stats_(arms), epsilon_(epsilon) {
        if (!(epsilon >= 0.0 && epsilon <= 1.0)) {
            throw std::invalid_argument("eps-greedy: epsilon must lie in [0, 1]");
        }
    }

    PolicyId id() const noexcept override { return PolicyId::EpsGreedy; }

    PolicyTrace select(Rng& rng) override {
        PolicyTrace tr;
        tr.t = ++t_;
        const std::size_t k_arms = stats_.arms();
        const double u = rng.uniform();
        std::size_t greedy = 0;
        std::size_t arm = 0;
        if (tr.t <= k_arms) {
            greedy = arm = tr.t - 1;
            tr.p.assign(k_arms, 0.0);
            tr.p[arm] = 1.0;
        } else {
            std::vector<double> means(k_arms);
            for (std::size_t k = 0; k < k_arms; ++k) {
                means[k] = stats_.mean(k);
            }
            greedy = argmin_index(means);
            arm = u < epsilon_ ? static_cast<std::size_t>(rng.below(k_arms)) : greedy;
            tr.p.assign(k_arms, epsilon_ / static_cast<double>(k_arms));
            tr.p[greedy] += 1.0 - epsilon_;
        }
        fill_identity(tr);
        tr.arm = arm;
        return tr;
    }

    void observe(PolicyTrace& trace, double loss) override {
        require_unit_loss(loss);
        stats_.add(trace.arm, loss);
        trace.loss = loss;
        trace.lhat = loss;
    }

private:
    MeanTracker stats_;
    double epsilon_;
    std::size_t t_ = 0;
};

}  // namespace

std::unique_ptr<Policy> make_policy(PolicyId id, std::size_t arms, std::size_t horizon,
                                    const PolicySettings& settings) {
    if (arms < 2) {
        throw std::invalid_argument("make_policy: at least two arms required");
    }
    if (horizon < 1) {
        horizon = 1;
    }
    ScheduleParams schedule = schedules_default(arms, horizon);
    schedule.kind = settings.schedule;
    schedule.gamma_ratio = settings.gamma_ratio;

    switch (id) {
        case PolicyId::Qb: {
            QbOptions opts = settings.qb;
            opts.amplification = Amplification::Matched;
            return std::make_unique<QbPolicy>(id, arms, schedule, opts);
        }
        case PolicyId::QbSole: {
            QbOptions opts = settings.qb;
            opts.amplification = Amplification::SoleTarget;
            return std::make_unique<QbPolicy>(id, arms, schedule, opts);
        }
        case PolicyId::Exp3Ix: return std::make_unique<Exp3IxPolicy>(arms, schedule);
        case PolicyId::Exp3P: return std::make_unique<Exp3PPolicy>(arms, horizon, settings.exp3p);
        case PolicyId::Exp3: return std::make_unique<Exp3Policy>(arms, horizon);
        case PolicyId::Ucb1: return std::make_unique<Ucb1Policy>(arms);
        case PolicyId::EpsGreedy: return std::make_unique<EpsGreedyPolicy>(arms, settings.epsilon);
    }
    throw std::invalid_argument("make_policy: unknown policy");
}

}  // namespace qbandit::policy
