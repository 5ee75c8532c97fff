#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <variant>

#include "rbaird/belief.hpp"
#include "rbaird/gridworld.hpp"
#include "rbaird/planner.hpp"

namespace rbaird {

/// Per-state minimum over `samples` posterior weight draws.
struct WorstCase {
    std::size_t samples = 10;
    friend bool operator==(const WorstCase&, const WorstCase&) = default;
};

/// Per-state mean minus coefficient times population variance.
struct VariancePenalty {
    double coefficient = 1.0;
    friend bool operator==(const VariancePenalty&, const VariancePenalty&) = default;
};

/// Per-state posterior-sample mean (the unsafe planner).
struct MeanOnly {
    friend bool operator==(const MeanOnly&, const MeanOnly&) = default;
};

/// The true reward itself (the optimal planner).
struct TrueReward {
    friend bool operator==(const TrueReward&, const TrueReward&) = default;
};

using RiskMethod = std::variant<WorstCase, VariancePenalty, MeanOnly, TrueReward>;

/// "worst:10", "variance:1", "mean", "true".
std::string to_string(const RiskMethod& method);
RiskMethod parse_risk_method(const std::string& text);
void validate(const RiskMethod& method);

inline constexpr std::size_t kDefaultSampleCount = 100;

/// Shaped per-state rewards. One posterior sample is drawn per call and shared
/// by every state; R(s) = { f(s).w_i - living } over that sample.
StateRewardMap risk_state_rewards(const GridEnvironment& env, const Belief& belief, const RewardSpace& space,
                                  const RiskMethod& method, std::size_t sample_count, std::uint64_t seed,
                                  const std::optional<RewardFunction>& true_w = std::nullopt);

struct PlannedPath {
    Trajectory trajectory;
    FeatureExpectations features;
};

struct PlanSettings {
    std::size_t sample_count = kDefaultSampleCount;
    int horizon = kDefaultHorizon;
    double tolerance = kDefaultTolerance;
};

/// Value iteration on the shaped rewards, rollout, discounted feature sum.
PlannedPath plan_with_method(const GridEnvironment& env, const Belief& belief, const RewardSpace& space,
                             const RiskMethod& method, std::uint64_t seed,
                             const std::optional<RewardFunction>& true_w = std::nullopt,
                             const PlanSettings& settings = {});

/// Per-cell statistics of the posterior reward sample, used by the UI heatmap.
struct CellRewardStats {
    double mean_reward = 0.0;
    double variance = 0.0;
    double min_reward = 0.0;
};

std::vector<CellRewardStats> reward_statistics(const GridEnvironment& env, const Belief& belief,
                                               const RewardSpace& space, std::size_t sample_count,
                                               std::uint64_t seed);

}  // namespace rbaird
