#include "rbaird/gridworld.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <stdexcept>
#include <tuple>

#include "rbaird/random.hpp"

namespace rbaird {

namespace {

constexpr int kMaxWallAttempts = 100;

CellCoord offset(CellCoord c, Action a) {
    switch (a) {
        case Action::North: return {c.x, c.y - 1};
        case Action::South: return {c.x, c.y + 1};
        case Action::East: return {c.x + 1, c.y};
        case Action::West: return {c.x - 1, c.y};
    }
    return c;
}

void require(bool cond, const char* what) {
    if (!cond) throw std::invalid_argument(std::string("GridEnvironment: ") + what);
}

}  // namespace

const char* to_string(Action a) {
    switch (a) {
        case Action::North: return "north";
        case Action::South: return "south";
        case Action::East: return "east";
        case Action::West: return "west";
    }
    return "?";
}

GridEnvironment::GridEnvironment(std::string id, int width, int height, int feature_dim, CellCoord start,
                                 std::vector<CellCoord> goals, std::vector<CellCoord> walls,
                                 std::vector<double> features, double living_reward, double discount)
    : id_(std::move(id)),
      width_(width),
      height_(height),
      feature_dim_(feature_dim),
      start_(start),
      goals_(std::move(goals)),
      walls_(std::move(walls)),
      features_(std::move(features)),
      living_reward_(living_reward),
      discount_(discount) {
    require(width_ >= 1 && height_ >= 1, "grid dimensions must be positive");
    require(feature_dim_ >= 1, "feature_dim must be >= 1");
    require(living_reward_ >= 0.0, "living_reward must be >= 0");
    require(discount_ >= 0.0 && discount_ <= 1.0, "discount must lie in [0,1]");
    require(features_.size() == static_cast<std::size_t>(width_) * height_ * feature_dim_,
            "features must have width*height*feature_dim entries");
    require(in_bounds(start_), "start out of bounds");
    require(!goals_.empty(), "at least one goal is required");

    cells_.assign(static_cast<std::size_t>(width_) * height_, CellKind::Free);
    for (auto w : walls_) {
        require(in_bounds(w), "wall out of bounds");
        cells_[index(w)] = CellKind::Wall;
    }
    require(cells_[index(start_)] == CellKind::Free, "start must not be a wall");
    cells_[index(start_)] = CellKind::Start;
    for (auto g : goals_) {
        require(in_bounds(g), "goal out of bounds");
        require(cells_[index(g)] == CellKind::Free, "goal must not coincide with a wall, start or another goal");
        cells_[index(g)] = CellKind::Goal;
    }
    for (std::size_t i = 0; i < cells_.size(); ++i) {
        for (double f : features_at(i)) {
            require(std::isfinite(f), "features must be finite");
            if (cells_[i] == CellKind::Wall) require(f == 0.0, "wall cells must have all-zero features");
        }
    }
    require(goal_reachable(width_, height_, cells_, start_), "no goal reachable from start");

    successors_.resize(cells_.size() * kActionCount);
    for (std::size_t i = 0; i < cells_.size(); ++i) {
        for (auto a : kActions) {
            const CellCoord n = offset(coord(i), a);
            std::size_t target = i;
            if (in_bounds(n) && cells_[index(n)] != CellKind::Wall) target = index(n);
            successors_[i * kActionCount + static_cast<std::size_t>(a)] = target;
        }
    }
}

CellCoord neighbors(const GridEnvironment& env, CellCoord cell, Action action) {
    if (!env.in_bounds(cell)) throw std::out_of_range("neighbors: cell out of bounds");
    return env.coord(env.successor(env.index(cell), action));
}

double state_reward(const GridEnvironment& env, CellCoord cell, const RewardFunction& w) {
    if (!env.in_bounds(cell)) throw std::out_of_range("state_reward: cell out of bounds");
    if (w.dim() != static_cast<std::size_t>(env.feature_dim()))
        throw std::invalid_argument("state_reward: weight dimension does not match feature_dim");
    return dot(env.features(cell), w.weights) - env.living_reward();
}

bool goal_reachable(int width, int height, const std::vector<CellKind>& cells, CellCoord start) {
    const auto idx = [width](CellCoord c) { return static_cast<std::size_t>(c.y) * width + c.x; };
    std::vector<char> seen(cells.size(), 0);
    std::deque<CellCoord> frontier{start};
    seen[idx(start)] = 1;
    while (!frontier.empty()) {
        const CellCoord c = frontier.front();
        frontier.pop_front();
        if (cells[idx(c)] == CellKind::Goal) return true;
        for (auto a : kActions) {
            const CellCoord n = offset(c, a);
            if (n.x < 0 || n.y < 0 || n.x >= width || n.y >= height) continue;
            const auto j = idx(n);
            if (seen[j] || cells[j] == CellKind::Wall) continue;
            seen[j] = 1;
            frontier.push_back(n);
        }
    }
    return false;
}

GridEnvironment generate_environment(const GenerationParams& p) {
    if (p.width < 1 || p.height < 1 || p.width * p.height < 2)
        throw std::invalid_argument("generate_environment: grid needs at least two cells");
    if (p.feature_dim < 1) throw std::invalid_argument("generate_environment: feature_dim must be >= 1");
    if (p.active_feature_count < 1 || p.active_feature_count > p.feature_dim)
        throw std::invalid_argument("generate_environment: active_feature_count must lie in [1, feature_dim]");
    if (p.wall_density < 0.0 || p.wall_density > 0.3)
        throw std::invalid_argument("generate_environment: wall_density must lie in [0, 0.3]");
    if (!(p.feature_density > 0.0 && p.feature_density <= 1.0))
        throw std::invalid_argument("generate_environment: feature_density must lie in (0, 1]");
    if (p.features_per_env < 0) throw std::invalid_argument("generate_environment: features_per_env must be >= 0");
    if (p.max_goals < 1) throw std::invalid_argument("generate_environment: max_goals must be >= 1");

    Rng rng(derive_seed(p.seed, {0x67726964ULL}));
    const std::size_t n_cells = static_cast<std::size_t>(p.width) * p.height;
    const auto coord = [&](std::size_t i) {
        return CellCoord{static_cast<int>(i % p.width), static_cast<int>(i / p.width)};
    };

    // Partial Fisher-Yates over cell indices: first is the start, then goals.
    std::vector<std::size_t> order(n_cells);
    for (std::size_t i = 0; i < n_cells; ++i) order[i] = i;
    const int goal_count =
        1 + static_cast<int>(rng.below(static_cast<std::uint64_t>(std::min<std::size_t>(p.max_goals, n_cells - 1))));
    for (std::size_t i = 0; i < static_cast<std::size_t>(goal_count) + 1; ++i) {
        const std::size_t j = i + rng.below(n_cells - i);
        std::swap(order[i], order[j]);
    }
    const CellCoord start = coord(order[0]);
    std::vector<CellCoord> goals;
    for (int g = 0; g < goal_count; ++g) goals.push_back(coord(order[1 + g]));
    std::sort(goals.begin(), goals.end(), [](CellCoord a, CellCoord b) {
        return std::tie(a.y, a.x) < std::tie(b.y, b.x);
    });

    std::vector<CellKind> cells;
    bool reachable = false;
    for (int attempt = 0; attempt < kMaxWallAttempts && !reachable; ++attempt) {
        cells.assign(n_cells, CellKind::Free);
        cells[order[0]] = CellKind::Start;
        for (int g = 0; g < goal_count; ++g) cells[order[1 + g]] = CellKind::Goal;
        for (std::size_t i = 0; i < n_cells; ++i) {
            const bool draw = rng.bernoulli(p.wall_density);
            if (cells[i] == CellKind::Free && draw) cells[i] = CellKind::Wall;
        }
        reachable = goal_reachable(p.width, p.height, cells, start);
    }
    if (!reachable)
        throw std::runtime_error("generate_environment: no reachable goal after 100 wall placements");

    std::vector<int> present(static_cast<std::size_t>(p.active_feature_count));
    for (int k = 0; k < p.active_feature_count; ++k) present[k] = k;
    if (p.features_per_env > 0 && p.features_per_env < p.active_feature_count) {
        for (int k = 0; k < p.features_per_env; ++k)
            std::swap(present[k], present[k + rng.below(static_cast<std::uint64_t>(p.active_feature_count - k))]);
        present.resize(static_cast<std::size_t>(p.features_per_env));
        std::sort(present.begin(), present.end());
    }

    std::vector<CellCoord> walls;
    std::vector<double> features(n_cells * p.feature_dim, 0.0);
    for (std::size_t i = 0; i < n_cells; ++i) {
        if (cells[i] == CellKind::Wall) {
            walls.push_back(coord(i));
            continue;
        }
        for (int k : present) {
            if (p.feature_density < 1.0 && !rng.bernoulli(p.feature_density)) continue;
            features[i * p.feature_dim + k] = rng.uniform();
        }
    }

    return GridEnvironment(p.id, p.width, p.height, p.feature_dim, start, std::move(goals), std::move(walls),
                           std::move(features), p.living_reward, p.discount);
}

}  // namespace rbaird
