#pragma once

#include <string>

#include "json.hpp"

#include "rbaird/belief.hpp"
#include "rbaird/gridworld.hpp"
#include "rbaird/planner.hpp"
#include "rbaird/query_engine.hpp"

namespace rbaird {

using Json = nlohmann::ordered_json;

/// {id, width, height, start, goals, walls, features, living_reward, discount, feature_dim}
Json to_json(const GridEnvironment& env);
GridEnvironment environment_from_json(const Json& j);

Json to_json(CellCoord c);

/// {env_id, planner, states, truncated}; planner is "optimal", "unsafe" or "risk".
Json trajectory_to_json(const GridEnvironment& env, const std::string& planner, const Trajectory& trajectory);

/// {space_seed, N, probs, entropy, map_index}
Json belief_snapshot(const Belief& belief, const RewardSpace& space);
Belief belief_from_snapshot(const Json& j);

Json to_json(const RewardFunction& w);
RewardFunction reward_from_json(const Json& j);

}  // namespace rbaird
