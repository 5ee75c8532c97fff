#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "rbaird/belief.hpp"
#include "rbaird/gridworld.hpp"
#include "rbaird/planner.hpp"

namespace rbaird {

/// Candidate reward functions shown together; the answer names one of them.
struct Query {
    std::vector<RewardFunction> candidates;

    std::size_t size() const { return candidates.size(); }
};

struct QueryAnswer {
    std::size_t env_index = 0;
    std::size_t choice_index = 0;
    friend bool operator==(const QueryAnswer&, const QueryAnswer&) = default;
};

/// Feature expectations of every candidate in every batch environment, plus
/// the per-environment answers as they arrive.
struct QueryRound {
    std::uint64_t round_id = 0;
    Query query;
    std::vector<std::vector<FeatureExpectations>> per_env_fes;  // [env][candidate]
    std::vector<std::optional<std::size_t>> answers;           // [env]

    bool complete() const;
    std::vector<std::size_t> unanswered() const;
};

/// Shared answer model used both for selecting queries and for updating on their answers.
struct AnswerModel {
    double rationality = 10.0;
    double temperature = kDefaultTemperature;
    int horizon = kDefaultHorizon;
};

/// How the working belief is carried from one batch environment to the next
/// while scoring a query.
///   Mixture: answer-marginalised mixture of posteriors (equal to the
///     working belief itself), so environments are scored independently.
///   MostProbableAnswer: posterior under the currently most probable answer.
enum class GainStrategy { Mixture, MostProbableAnswer };

/// Expected entropy reduction H(b) - E_a[H(b | a)] for one environment.
double expected_entropy_reduction(const Belief& belief, const RewardSpace& space,
                                  std::span<const FeatureExpectations> fes, double rationality);

/// Sum over batch environments of the expected entropy reduction of the
/// working belief, processed in batch order. Equals the exact expected
/// information gain for a single environment; never negative.
double expected_info_gain_from_fes(const Belief& belief, const RewardSpace& space,
                                   const std::vector<std::vector<FeatureExpectations>>& per_env_fes,
                                   double rationality, GainStrategy strategy = GainStrategy::Mixture);

/// Soft feature expectations of every candidate in every environment.
std::vector<std::vector<FeatureExpectations>> query_feature_expectations(const Query& query,
                                                                         std::span<const GridEnvironment> batch,
                                                                         const AnswerModel& model);

double expected_info_gain(const Belief& belief, const RewardSpace& space, const Query& query,
                          std::span<const GridEnvironment> batch, const AnswerModel& model,
                          GainStrategy strategy = GainStrategy::Mixture);

struct SelectionParams {
    std::size_t query_size = 5;
    int grad_steps = 20;
    double step_size = 0.1;
    double fd_step = 1e-3;
    std::uint64_t seed = 0;
    GainStrategy strategy = GainStrategy::Mixture;
};

struct SelectedQuery {
    Query query;
    std::vector<std::vector<FeatureExpectations>> per_env_fes;
    double info_gain = 0.0;
    double seed_info_gain = 0.0;
};

/// Greedy query construction: each new candidate starts as a seeded random
/// unit vector and climbs the expected information gain of the query with it
/// appended (central finite differences, fixed step, unit renormalisation,
/// stop on the first non-improving step). The result never scores below the
/// query made of the unoptimised starting vectors.
SelectedQuery select_query_detailed(const Belief& belief, const RewardSpace& space,
                                    std::span<const GridEnvironment> batch, const AnswerModel& model,
                                    const SelectionParams& params);

Query select_query(const Belief& belief, const RewardSpace& space, std::span<const GridEnvironment> batch,
                   const AnswerModel& model, const SelectionParams& params);

/// Boltzmann-rational simulated answer under the true reward.
QueryAnswer simulated_answer(std::size_t env_index, std::span<const FeatureExpectations> query_fes,
                             const RewardFunction& true_w, double oracle_rationality, std::uint64_t seed);

/// Folds bayes_update over the batch environments in order. Throws
/// std::invalid_argument when an answer is missing or out of range. When
/// `inference_count` is given it is incremented once per environment.
Belief apply_query_round(const Belief& belief, const RewardSpace& space, const QueryRound& round,
                         double rationality, std::size_t* inference_count = nullptr);

/// Random unit vector: uniform in [-1,1]^dim, then L2-normalised.
RewardFunction random_unit_reward(std::size_t dim, std::uint64_t seed);

}  // namespace rbaird
