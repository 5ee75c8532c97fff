#include "rbaird/serialization.hpp"

#include <stdexcept>

namespace rbaird {

namespace {

CellCoord coord_from_json(const Json& j) {
    if (!j.is_array() || j.size() != 2) throw std::invalid_argument("coordinate must be [x, y]");
    return {j.at(0).get<int>(), j.at(1).get<int>()};
}

}  // namespace

Json to_json(CellCoord c) { return Json::array({c.x, c.y}); }

Json to_json(const GridEnvironment& env) {
    Json j;
    j["id"] = env.id();
    j["width"] = env.width();
    j["height"] = env.height();
    j["start"] = to_json(env.start());
    Json goals = Json::array();
    for (auto g : env.goals()) goals.push_back(to_json(g));
    j["goals"] = std::move(goals);
    Json walls = Json::array();
    for (auto w : env.walls()) walls.push_back(to_json(w));
    j["walls"] = std::move(walls);
    j["features"] = env.feature_table();
    j["living_reward"] = env.living_reward();
    j["discount"] = env.discount();
    j["feature_dim"] = env.feature_dim();
    return j;
}

GridEnvironment environment_from_json(const Json& j) {
    try {
        std::vector<CellCoord> goals, walls;
        for (const auto& g : j.at("goals")) goals.push_back(coord_from_json(g));
        for (const auto& w : j.at("walls")) walls.push_back(coord_from_json(w));
        return GridEnvironment(j.at("id").get<std::string>(), j.at("width").get<int>(), j.at("height").get<int>(),
                               j.at("feature_dim").get<int>(), coord_from_json(j.at("start")), std::move(goals),
                               std::move(walls), j.at("features").get<std::vector<double>>(),
                               j.at("living_reward").get<double>(), j.at("discount").get<double>());
    } catch (const nlohmann::json::exception& e) {
        throw std::invalid_argument(std::string("environment JSON: ") + e.what());
    }
}

Json trajectory_to_json(const GridEnvironment& env, const std::string& planner, const Trajectory& trajectory) {
    Json j;
    j["env_id"] = env.id();
    j["planner"] = planner;
    Json states = Json::array();
    for (auto s : trajectory.states) states.push_back(to_json(s));
    j["states"] = std::move(states);
    j["truncated"] = trajectory.truncated;
    return j;
}

Json belief_snapshot(const Belief& belief, const RewardSpace& space) {
    Json j;
    j["space_seed"] = space.seed;
    j["N"] = belief.size();
    j["probs"] = belief.probs();
    j["entropy"] = entropy(belief);
    j["map_index"] = belief.map_index();
    return j;
}

Belief belief_from_snapshot(const Json& j) {
    try {
        auto probs = j.at("probs").get<std::vector<double>>();
        if (j.contains("N") && j.at("N").get<std::size_t>() != probs.size())
            throw std::invalid_argument("belief snapshot: N does not match probs");
        return Belief(std::move(probs));
    } catch (const nlohmann::json::exception& e) {
        throw std::invalid_argument(std::string("belief snapshot: ") + e.what());
    }
}

Json to_json(const RewardFunction& w) { return Json(w.weights); }

RewardFunction reward_from_json(const Json& j) { return RewardFunction{j.get<std::vector<double>>()}; }

}  // namespace rbaird
