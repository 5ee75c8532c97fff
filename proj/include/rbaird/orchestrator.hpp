#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "rbaird/belief.hpp"
#include "rbaird/evaluation.hpp"
#include "rbaird/gridworld.hpp"
#include "rbaird/query_engine.hpp"
#include "rbaird/risk_planner.hpp"
#include "rbaird/serialization.hpp"

namespace rbaird {

/// Features [0, initial_active + b * added_per_batch) are active in batch b.
struct FeatureSchedule {
    int initial_active = 2;
    int added_per_batch = 2;
    friend bool operator==(const FeatureSchedule&, const FeatureSchedule&) = default;
};

struct ExperimentSeeds {
    std::uint64_t space = 0;
    std::uint64_t envs = 0;
    std::uint64_t queries = 0;
    std::uint64_t oracle = 0;
    std::uint64_t sampling = 0;
    friend bool operator==(const ExperimentSeeds&, const ExperimentSeeds&) = default;

    static ExperimentSeeds all(std::uint64_t seed) { return {seed, seed, seed, seed, seed}; }
};

enum class OracleMode { Simulated, Interactive };

struct ExperimentConfig {
    int batches = 4;
    int envs_per_batch = 5;
    int queries_per_batch = 5;
    int query_size = 5;
    int feature_dim = 10;
    RiskMethod risk_method = VariancePenalty{1.0};
    double rationality = 10.0;
    double oracle_rationality = 10.0;
    double temperature = kDefaultTemperature;
    double discount = 0.95;
    double living_reward = 0.01;
    int horizon = kDefaultHorizon;
    int space_size = 100;
    int test_env_count = 30;
    std::optional<FeatureSchedule> feature_schedule;
    ExperimentSeeds seeds;
    OracleMode oracle_mode = OracleMode::Simulated;
    // Knobs beyond the core set; every one has a default.
    int grad_steps = 20;
    double step_size = 0.1;
    GainStrategy gain_strategy = GainStrategy::Mixture;
    int sample_count = static_cast<int>(kDefaultSampleCount);
    int variance_samples = 1000;
    int grid_width = 12;
    int grid_height = 12;
    double wall_density = 0.15;
    double feature_density = 1.0;
    int features_per_env = 0;

    friend bool operator==(const ExperimentConfig&, const ExperimentConfig&) = default;
};

class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Throws ConfigError on the first violated invariant.
void validate(const ExperimentConfig& config);

/// basic, big_batches, many_batches, new_features, aird_baseline.
ExperimentConfig preset(const std::string& name);
std::vector<std::string> preset_names();

Json to_json(const ExperimentConfig& config);
/// Fields absent from `j` keep the values of `base`; unknown fields are rejected.
ExperimentConfig config_from_json(const Json& j, const ExperimentConfig& base = {});

/// min(feature_dim, initial_active + batch_index * added_per_batch), or feature_dim without a schedule.
int feature_activation(int batch_index, const std::optional<FeatureSchedule>& schedule, int feature_dim);

enum class ExperimentStatus { Running, AwaitingAnswers, Done };
const char* to_string(ExperimentStatus s);

struct AnswerLogEntry {
    std::uint64_t round_id = 0;
    std::size_t env_index = 0;
    std::size_t choice_index = 0;
    std::string timestamp;
};

Json to_json(const AnswerLogEntry& e);
AnswerLogEntry answer_entry_from_json(const Json& j);

struct ExperimentState {
    ExperimentConfig config;
    RewardSpace space;
    Belief belief{std::vector<double>{1.0}};
    std::vector<GridEnvironment> test_envs;
    std::vector<GridEnvironment> batch_envs;
    int current_batch = 0;
    int current_query = 0;
    std::size_t inference_count = 0;
    std::uint64_t rounds_published = 0;
    std::optional<QueryRound> round;
    std::vector<MetricsRecord> metrics_log;
    std::vector<Belief> belief_log;  // belief at each metrics record
    std::vector<AnswerLogEntry> answer_log;
    ExperimentStatus status = ExperimentStatus::Running;
};

/// Reason an answer submission was refused.
class AnswerError : public std::runtime_error {
public:
    enum class Kind { OutOfRange, Duplicate, NotAwaited, Incomplete };
    AnswerError(Kind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
    Kind kind() const { return kind_; }

private:
    Kind kind_;
};

/// Space, uniform belief, test set, first batch and the prior checkpoint.
/// A supplied space replaces the generated one (it must match feature_dim).
ExperimentState start_experiment(const ExperimentConfig& config,
                                 const std::optional<RewardSpace>& space = std::nullopt);

/// Records one environment's answer for the published round. Throws
/// AnswerError; the state is unchanged on failure. Returns true when the
/// round now has every answer.
bool submit_answer(ExperimentState& state, const QueryAnswer& answer, const std::string& timestamp = {});

/// Advances one phase. Running: moves to the next batch if the current one
/// is exhausted, then publishes the next round (or finishes). AwaitingAnswers:
/// merges `answers`, which together with earlier submissions must cover every
/// batch environment, updates the belief, and appends a checkpoint.
void step_experiment(ExperimentState& state, const std::optional<std::vector<QueryAnswer>>& answers = std::nullopt);

/// Simulated-oracle answers for the published round.
std::vector<QueryAnswer> oracle_answers(const ExperimentState& state);

/// Runs to completion with the simulated oracle.
ExperimentState run_experiment(const ExperimentConfig& config,
                               const std::optional<RewardSpace>& space = std::nullopt);

/// Rebuilds a state by re-publishing rounds and re-applying logged answers.
ExperimentState replay_answers(const ExperimentConfig& config, const std::vector<AnswerLogEntry>& log,
                               const std::optional<RewardSpace>& space = std::nullopt);

/// Round wire document: candidates, per-environment planner trajectories and
/// heatmaps, answered / unanswered environments.
Json round_document(const ExperimentState& state);

}  // namespace rbaird
