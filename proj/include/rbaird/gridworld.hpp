#pragma once

#include <array>
#include <compare>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "rbaird/reward.hpp"

namespace rbaird {

enum class CellKind : std::uint8_t { Free, Wall, Start, Goal };

/// Fixed order doubles as the tie-break order of the planners.
enum class Action : std::uint8_t { North, South, East, West };
inline constexpr std::array<Action, 4> kActions{Action::North, Action::South, Action::East, Action::West};
inline constexpr std::size_t kActionCount = kActions.size();

const char* to_string(Action a);

/// Zero-based cell coordinate, (0,0) is the top-left corner; y grows southwards.
struct CellCoord {
    int x = 0;
    int y = 0;
    friend auto operator<=>(const CellCoord&, const CellCoord&) = default;
};

/// Immutable 2-D grid MDP with per-cell feature vectors.
///
/// Movement is deterministic; moving into a wall or off the grid leaves the
/// agent in place. The constructor validates every structural invariant
/// (single start, at least one goal, zeroed wall features, a start-to-goal
/// path) and throws std::invalid_argument otherwise.
class GridEnvironment {
public:
    GridEnvironment(std::string id, int width, int height, int feature_dim, CellCoord start,
                    std::vector<CellCoord> goals, std::vector<CellCoord> walls,
                    std::vector<double> features, double living_reward, double discount);

    const std::string& id() const { return id_; }
    int width() const { return width_; }
    int height() const { return height_; }
    int feature_dim() const { return feature_dim_; }
    double living_reward() const { return living_reward_; }
    double discount() const { return discount_; }
    CellCoord start() const { return start_; }
    std::size_t start_index() const { return index(start_); }
    const std::vector<CellCoord>& goals() const { return goals_; }
    const std::vector<CellCoord>& walls() const { return walls_; }
    std::size_t cell_count() const { return cells_.size(); }

    bool in_bounds(CellCoord c) const { return c.x >= 0 && c.y >= 0 && c.x < width_ && c.y < height_; }
    std::size_t index(CellCoord c) const { return static_cast<std::size_t>(c.y) * width_ + c.x; }
    CellCoord coord(std::size_t i) const {
        return {static_cast<int>(i % width_), static_cast<int>(i / width_)};
    }

    CellKind kind(CellCoord c) const { return cells_.at(index(c)); }
    CellKind kind_at(std::size_t i) const { return cells_[i]; }
    bool is_wall(std::size_t i) const { return cells_[i] == CellKind::Wall; }
    bool is_goal(std::size_t i) const { return cells_[i] == CellKind::Goal; }

    std::span<const double> features(CellCoord c) const { return features_at(index(c)); }
    std::span<const double> features_at(std::size_t i) const {
        return {features_.data() + i * feature_dim_, static_cast<std::size_t>(feature_dim_)};
    }
    /// Row-major, length width*height*feature_dim.
    const std::vector<double>& feature_table() const { return features_; }

    /// Successor cell index under bump-and-stay dynamics (precomputed).
    std::size_t successor(std::size_t i, Action a) const {
        return successors_[i * kActionCount + static_cast<std::size_t>(a)];
    }

private:
    std::string id_;
    int width_;
    int height_;
    int feature_dim_;
    CellCoord start_;
    std::vector<CellCoord> goals_;
    std::vector<CellCoord> walls_;
    std::vector<CellKind> cells_;
    std::vector<double> features_;
    double living_reward_;
    double discount_;
    std::vector<std::size_t> successors_;
};

/// Adjacent cell in the action's direction, or `cell` itself when blocked.
CellCoord neighbors(const GridEnvironment& env, CellCoord cell, Action action);

/// f(cell) . w - living_reward.
double state_reward(const GridEnvironment& env, CellCoord cell, const RewardFunction& w);

/// True when some goal is reachable from start through non-wall cells.
bool goal_reachable(int width, int height, const std::vector<CellKind>& cells, CellCoord start);

struct GenerationParams {
    std::uint64_t seed = 0;
    int width = 12;
    int height = 12;
    int feature_dim = 10;
    int active_feature_count = 10;
    double wall_density = 0.15;
    double feature_density = 1.0;  // chance that a present component of a cell is nonzero
    int features_per_env = 0;      // present features drawn from the active ones; 0 = all active
    double living_reward = 0.01;
    double discount = 0.95;
    int max_goals = 3;
    std::string id;
};

/// Random environment: start and 1..max_goals goals placed uniformly, walls
/// drawn per cell with probability wall_density (redrawn until a goal is
/// reachable, at most 100 attempts). A random subset of features_per_env of the
/// active features is present; each present component of a cell is nonzero
/// with probability feature_density, and then uniform in [0,1].
/// Pure function of its parameters.
GridEnvironment generate_environment(const GenerationParams& params);

}  // namespace rbaird
