#pragma once

#include <vector>

#include "rbaird/orchestrator.hpp"

namespace fixtures {

using namespace rbaird;

/// 1-row corridor of `features.size() / d` cells, start at x = 0, goal at the far end.
inline GridEnvironment corridor(std::vector<double> features, int d, double living = 0.0, double discount = 1.0) {
    const int width = static_cast<int>(features.size()) / d;
    return GridEnvironment("corridor", width, 1, d, {0, 0}, {{width - 1, 0}}, {}, std::move(features), living,
                           discount);
}

inline GridEnvironment random_env(std::uint64_t seed, int width = 4, int height = 4, int d = 3,
                                  double discount = 0.95, double living = 0.01) {
    GenerationParams p;
    p.seed = seed;
    p.width = width;
    p.height = height;
    p.feature_dim = d;
    p.active_feature_count = d;
    p.discount = discount;
    p.living_reward = living;
    p.id = "env-" + std::to_string(seed);
    return generate_environment(p);
}

inline RewardSpace explicit_space(std::vector<std::vector<double>> members, std::size_t true_index = 0) {
    RewardSpace s;
    for (auto& m : members) s.members.push_back(RewardFunction{std::move(m)});
    s.true_index = true_index;
    return s;
}

/// Small experiment that runs in well under a second per query.
inline ExperimentConfig tiny_config(std::uint64_t seed = 1) {
    ExperimentConfig c;
    c.batches = 2;
    c.envs_per_batch = 2;
    c.queries_per_batch = 2;
    c.query_size = 3;
    c.feature_dim = 3;
    c.space_size = 8;
    c.test_env_count = 3;
    c.horizon = 15;
    c.grid_width = 5;
    c.grid_height = 5;
    c.grad_steps = 3;
    c.sample_count = 20;
    c.variance_samples = 50;
    c.seeds = ExperimentSeeds::all(seed);
    return c;
}

}  // namespace fixtures
