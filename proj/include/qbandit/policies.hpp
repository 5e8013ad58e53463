#pragma once

#include <cstddef>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "qbandit/amp_core.hpp"
#include "qbandit/rng.hpp"

namespace qbandit::policy {

/// Cumulative weighted loss estimates L_k = sum_s eta_s * lhat_k^s, one per arm.
struct ScoreState {
    std::vector<double> lhat;
    std::size_t t = 0;  // rounds observed so far

    ScoreState() = default;
    explicit ScoreState(std::size_t arms) : lhat(arms, 0.0) {}
    std::size_t arms() const noexcept { return lhat.size(); }
};

/// Everything a policy decided in one round. Baselines fill the amplification
/// fields with their identity values (phi = 0, rho = sigma = 1, p_amp = p).
struct PolicyTrace {
    std::size_t t = 0;  // 1-based round
    std::vector<double> p;
    std::size_t m = 0;
    double dbar = 1.0;
    double phi = 0.0;
    double rho = 1.0;
    double sigma = 1.0;
    std::vector<double> p_amp;
    std::size_t arm = 0;
    double loss = 0.0;
    double lhat = 0.0;
};

enum class ScheduleKind { Anytime, FixedHorizon };

/// eta_t = min(1, sqrt(2 ln K / (K t))) in anytime mode, t replaced by T in
/// fixed-horizon mode; gamma_t = gamma_ratio * eta_t.
struct ScheduleParams {
    ScheduleKind kind = ScheduleKind::Anytime;
    std::size_t horizon = 1;
    std::size_t arms = 2;
    double gamma_ratio = 0.5;

    double eta(std::size_t t) const;
    double gamma(std::size_t t) const;

    /// Rounds t <= T that violate eta_t > 1/t or gamma_t > 1/(2t), summarized as
    /// human-readable warnings. Empty when both conditions hold throughout.
    std::vector<std::string> validate() const;
};

ScheduleParams schedules_default(std::size_t arms, std::size_t horizon);

/// Fixed Exp3 rate sqrt(2 ln K / (T K)), capped at 1.
double exp3_learning_rate(std::size_t arms, std::size_t horizon);

/// Softmax of -L with a min-shift; every entry is strictly positive.
std::vector<double> probabilities_from_scores(const ScoreState& scores);

enum class DisparityMode { ExcludeTarget, AllArms };

struct Disparity {
    std::vector<double> d;  // e^{-(L_k - min L)} in (0, 1]
    double dbar = 1.0;
};

Disparity relative_disparity(const ScoreState& scores, std::size_t m,
                             DisparityMode mode = DisparityMode::ExcludeTarget);

/// Implicit-exploration estimate loss * 1{chosen} / (p_used + gamma).
double ix_estimate(double loss, bool chosen, double p_used, double gamma);

enum class PhaseMode { Solved, ForcedZero };
enum class IxProbability { Amplified, PreAmplification };
enum class Amplification { Matched, SoleTarget };

struct QbOptions {
    PhaseMode phase = PhaseMode::Solved;
    DisparityMode disparity = DisparityMode::ExcludeTarget;
    IxProbability ix_probability = IxProbability::Amplified;
    Amplification amplification = Amplification::Matched;
};

struct Selection {
    std::size_t arm = 0;
    PolicyTrace trace;
};

/// One selection round: scores -> p -> target -> disparity -> phase -> amplified
/// distribution -> collapse. Consumes exactly one uniform from rng.
Selection qb_select(const ScoreState& scores, const ScheduleParams& schedule,
                    const QbOptions& options, Rng& rng);

/// Adds eta_t * loss / (p_used + gamma_t) to the chosen arm's score. Throws
/// std::invalid_argument if loss is outside [0, 1].
ScoreState qb_observe(ScoreState scores, const PolicyTrace& trace, double loss,
                      const ScheduleParams& schedule,
                      IxProbability ix_probability = IxProbability::Amplified);

// ---------------------------------------------------------------------------
// Policy objects

enum class PolicyId { Qb, QbSole, Exp3Ix, Exp3P, Exp3, Ucb1, EpsGreedy };

inline constexpr PolicyId kAllPolicies[] = {PolicyId::Qb,   PolicyId::QbSole, PolicyId::Exp3Ix,
                                            PolicyId::Exp3P, PolicyId::Exp3,  PolicyId::Ucb1,
                                            PolicyId::EpsGreedy};

std::string_view to_string(PolicyId id) noexcept;
std::optional<PolicyId> parse_policy_id(std::string_view text) noexcept;

/// Exp3.P constants as multiples of the delta-free tuning
/// beta = sqrt(ln K/(nK)), eta = sqrt(ln K/(nK)), gamma = sqrt(K ln K/n).
struct Exp3PConstants {
    double beta_scale = 1.0;
    double eta_scale = 0.95;
    double gamma_scale = 1.05;
};

struct PolicySettings {
    ScheduleKind schedule = ScheduleKind::Anytime;
    double gamma_ratio = 0.5;
    QbOptions qb;
    double epsilon = 0.1;
    Exp3PConstants exp3p;
};

class Policy {
public:
    virtual ~Policy() = default;

    virtual PolicyId id() const noexcept = 0;

    /// Chooses the arm for the next round.
    virtual PolicyTrace select(Rng& rng) = 0;

    /// Feeds back the chosen arm's loss in [0, 1]; fills trace.loss and trace.lhat.
    virtual void observe(PolicyTrace& trace, double loss) = 0;
};

std::unique_ptr<Policy> make_policy(PolicyId id, std::size_t arms, std::size_t horizon,
                                    const PolicySettings& settings = {});

}  // namespace qbandit::policy
