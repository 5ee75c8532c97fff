#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

#include "rbaird/belief.hpp"
#include "rbaird/gridworld.hpp"
#include "rbaird/risk_planner.hpp"

namespace rbaird {

struct MetricsRecord {
    std::size_t inference_count = 0;
    std::size_t batch_index = 0;
    std::size_t query_index = 0;  // completed queries within the batch
    double test_regret = 0.0;
    double risk_regret = 0.0;
    double test_variance = 0.0;
    double risk_variance = 0.0;
    double posterior_entropy = 0.0;
    double true_member_probability = 0.0;
    // Mean true returns behind the regrets; not part of the CSV.
    double optimal_reward = 0.0;
    double unsafe_reward = 0.0;
    double risk_reward = 0.0;
};

struct EvaluationParams {
    std::size_t sample_count = kDefaultSampleCount;  // planner reward samples
    std::size_t variance_samples = 1000;             // draws for the trajectory variance
    int horizon = kDefaultHorizon;
    double tolerance = kDefaultTolerance;
    std::uint64_t seed = 0;
};

/// True return of a trajectory: phi . w - living * sum_t discount^t.
double true_return(const GridEnvironment& env, const PlannedPath& path, const RewardFunction& true_w);

/// Population variance of {phi . w_i} over the given members.
double return_variance(const FeatureExpectations& fe, const RewardSpace& space, std::span<const std::size_t> sample);

struct EnvironmentEvaluation {
    PlannedPath optimal, unsafe, risk;
    double optimal_reward = 0.0, unsafe_reward = 0.0, risk_reward = 0.0;
    double unsafe_variance = 0.0, risk_variance = 0.0;
};

/// Optimal, unsafe (MeanOnly) and risk planners on one environment. The
/// unsafe and risk planners share one weight sample; both variances share
/// a second, larger one.
EnvironmentEvaluation evaluate_environment(const GridEnvironment& env, const Belief& belief, const RewardSpace& space,
                                           const RewardFunction& true_w, const RiskMethod& method,
                                           const EvaluationParams& params, std::uint64_t env_seed);

/// The four planner metrics averaged over the test environments, plus
/// posterior entropy and the probability of the designated true member.
/// Counters (inference_count, batch_index, query_index) are left at zero.
MetricsRecord evaluate_checkpoint(std::span<const GridEnvironment> test_envs, const Belief& belief,
                                  const RewardSpace& space, const RewardFunction& true_w, const RiskMethod& method,
                                  const EvaluationParams& params);

/// Heatmap + trajectory document: per-cell true (or posterior-mean) reward as
/// a min-max normalised blue channel, posterior variance as a red channel,
/// cell kinds, and the unsafe and risk trajectories.
nlohmann::ordered_json render_trajectory_grid(const GridEnvironment& env, const Belief& belief,
                                              const RewardSpace& space, const std::optional<RewardFunction>& true_w,
                                              const RiskMethod& method, const EvaluationParams& params,
                                              std::uint64_t env_seed);

inline constexpr const char* kMetricsCsvHeader =
    "inference_count,batch_index,query_index,test_regret,risk_regret,test_variance,risk_variance,"
    "posterior_entropy,true_member_probability";

std::string metrics_csv(std::span<const MetricsRecord> records);
void export_metrics_csv(std::span<const MetricsRecord> records, const std::filesystem::path& path);
std::vector<MetricsRecord> parse_metrics_csv(const std::string& text);
std::vector<MetricsRecord> read_metrics_csv(const std::filesystem::path& path);

}  // namespace rbaird
