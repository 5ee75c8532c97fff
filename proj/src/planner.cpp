#include "rbaird/planner.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace rbaird {

namespace {

void check_dim(const GridEnvironment& env, const RewardFunction& w, const char* where) {
    if (w.dim() != static_cast<std::size_t>(env.feature_dim()))
        throw std::invalid_argument(std::string(where) + ": weight dimension does not match feature_dim");
}

void check_rewards(const GridEnvironment& env, const StateRewardMap& rewards) {
    if (rewards.size() != env.cell_count())
        throw std::invalid_argument("state reward map size does not match the grid");
}

}  // namespace

StateRewardMap state_rewards(const GridEnvironment& env, const RewardFunction& w) {
    check_dim(env, w, "state_rewards");
    StateRewardMap r(env.cell_count(), 0.0);
    for (std::size_t i = 0; i < r.size(); ++i) {
        if (env.is_wall(i)) continue;
        r[i] = dot(env.features_at(i), w.weights) - env.living_reward();
    }
    return r;
}

Policy::Policy(int width, int height, std::vector<std::vector<Action>> tables)
    : width_(width), height_(height), tables_(std::move(tables)) {
    if (tables_.empty()) throw std::invalid_argument("Policy: at least one action table is required");
    for (const auto& t : tables_)
        if (t.size() != static_cast<std::size_t>(width_) * height_)
            throw std::invalid_argument("Policy: table size does not match the grid");
}

Action Policy::action(CellCoord cell, int moves_left) const {
    if (cell.x < 0 || cell.y < 0 || cell.x >= width_ || cell.y >= height_)
        throw std::out_of_range("Policy::action: cell out of bounds");
    const int k = std::clamp(moves_left, 1, planned_moves());
    return tables_[k - 1][static_cast<std::size_t>(cell.y) * width_ + cell.x];
}

Policy value_iteration(const GridEnvironment& env, const StateRewardMap& rewards, int horizon, double tolerance) {
    if (horizon < 1) throw std::invalid_argument("value_iteration: horizon must be >= 1");
    if (!(tolerance > 0.0)) throw std::invalid_argument("value_iteration: tolerance must be > 0");
    check_rewards(env, rewards);

    const std::size_t n = env.cell_count();
    const double gamma = env.discount();
    std::vector<double> value(n, 0.0), next(n, 0.0);
    for (std::size_t i = 0; i < n; ++i)
        if (!env.is_wall(i)) value[i] = rewards[i];

    std::vector<std::vector<Action>> tables;
    tables.reserve(static_cast<std::size_t>(horizon));
    for (int k = 1; k <= horizon; ++k) {
        std::vector<Action> table(n, Action::North);
        double delta = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            if (env.is_wall(i)) continue;
            if (env.is_goal(i)) {
                next[i] = rewards[i];
                continue;
            }
            Action best_action = Action::North;
            double best = value[env.successor(i, Action::North)];
            for (auto a : kActions) {
                const double v = value[env.successor(i, a)];
                if (v > best) {
                    best = v;
                    best_action = a;
                }
            }
            table[i] = best_action;
            next[i] = rewards[i] + gamma * best;
            delta = std::max(delta, std::abs(next[i] - value[i]));
        }
        tables.push_back(std::move(table));
        value.swap(next);
        if (delta < tolerance) break;
    }
    return Policy(env.width(), env.height(), std::move(tables));
}

Trajectory rollout(const GridEnvironment& env, const Policy& policy, int horizon) {
    if (horizon < 1) throw std::invalid_argument("rollout: horizon must be >= 1");
    Trajectory t;
    std::size_t s = env.start_index();
    t.states.push_back(env.coord(s));
    for (int step = 0; step < horizon && !env.is_goal(s); ++step) {
        s = env.successor(s, policy.action(env.coord(s), horizon - step));
        t.states.push_back(env.coord(s));
    }
    t.truncated = !env.is_goal(s);
    return t;
}

FeatureExpectations trajectory_features(const GridEnvironment& env, const Trajectory& trajectory) {
    FeatureExpectations fe{std::vector<double>(static_cast<std::size_t>(env.feature_dim()), 0.0)};
    double g = 1.0;
    for (auto c : trajectory.states) {
        const auto f = env.features(c);
        for (std::size_t k = 0; k < f.size(); ++k) fe.phi[k] += g * f[k];
        g *= env.discount();
    }
    return fe;
}

double trajectory_return(const GridEnvironment& env, const StateRewardMap& rewards, const Trajectory& trajectory) {
    check_rewards(env, rewards);
    double total = 0.0;
    double g = 1.0;
    for (auto c : trajectory.states) {
        total += g * rewards[env.index(c)];
        g *= env.discount();
    }
    return total;
}

double discount_mass(const GridEnvironment& env, const Trajectory& trajectory) {
    double total = 0.0;
    double g = 1.0;
    for (std::size_t i = 0; i < trajectory.states.size(); ++i) {
        total += g;
        g *= env.discount();
    }
    return total;
}

FeatureExpectations feature_expectations_hard(const GridEnvironment& env, const RewardFunction& w, int horizon,
                                              double tolerance) {
    check_dim(env, w, "feature_expectations_hard");
    const auto policy = value_iteration(env, state_rewards(env, w), horizon, tolerance);
    return trajectory_features(env, rollout(env, policy, horizon));
}

FeatureExpectations feature_expectations_soft(const GridEnvironment& env, const RewardFunction& w, int horizon,
                                              double temperature) {
    check_dim(env, w, "feature_expectations_soft");
    if (!(temperature > 0.0)) throw std::invalid_argument("feature_expectations_soft: temperature must be > 0");
    if (horizon < 1) throw std::invalid_argument("feature_expectations_soft: horizon must be >= 1");

    const std::size_t n = env.cell_count();
    const double gamma = env.discount();
    const double inv_t = 1.0 / temperature;
    const StateRewardMap r = state_rewards(env, w);

    // Interior (non-wall, non-goal) cells and their successor lists.
    std::vector<std::size_t> interior;
    interior.reserve(n);
    for (std::size_t i = 0; i < n; ++i)
        if (!env.is_wall(i) && !env.is_goal(i)) interior.push_back(i);

    // values[k] is the soft value with k moves left.
    std::vector<std::vector<double>> values(static_cast<std::size_t>(horizon));
    values[0] = r;
    for (int k = 1; k < horizon; ++k) {
        const auto& prev = values[k - 1];
        auto& cur = values[k];
        cur = r;
        for (std::size_t i : interior) {
            double q[kActionCount];
            double m = -INFINITY;
            for (std::size_t a = 0; a < kActionCount; ++a) {
                q[a] = prev[env.successor(i, kActions[a])];
                m = std::max(m, q[a]);
            }
            double s = 0.0;
            for (double qa : q) s += std::exp((qa - m) * inv_t);
            cur[i] = r[i] + gamma * (m + temperature * std::log(s));
        }
    }

    std::vector<double> occupancy(n, 0.0), current(n, 0.0), after(n, 0.0);
    current[env.start_index()] = 1.0;
    double g = 1.0;
    for (int t = 0; t <= horizon; ++t) {
        for (std::size_t i = 0; i < n; ++i) occupancy[i] += g * current[i];
        if (t == horizon) break;
        // With m = horizon - t moves left the successors are valued with m - 1.
        const auto& v = values[static_cast<std::size_t>(horizon - t - 1)];
        std::fill(after.begin(), after.end(), 0.0);
        for (std::size_t i : interior) {
            const double mass = current[i];
            if (mass == 0.0) continue;
            double q[kActionCount];
            double m = -INFINITY;
            for (std::size_t a = 0; a < kActionCount; ++a) {
                q[a] = v[env.successor(i, kActions[a])];
                m = std::max(m, q[a]);
            }
            double s = 0.0;
            for (std::size_t a = 0; a < kActionCount; ++a) {
                q[a] = std::exp((q[a] - m) * inv_t);
                s += q[a];
            }
            for (std::size_t a = 0; a < kActionCount; ++a) after[env.successor(i, kActions[a])] += mass * q[a] / s;
        }
        current.swap(after);
        g *= gamma;
    }

    FeatureExpectations fe{std::vector<double>(static_cast<std::size_t>(env.feature_dim()), 0.0)};
    for (std::size_t i = 0; i < n; ++i) {
        if (occupancy[i] == 0.0) continue;
        const auto f = env.features_at(i);
        for (std::size_t k = 0; k < f.size(); ++k) fe.phi[k] += occupancy[i] * f[k];
    }
    return fe;
}

}  // namespace rbaird
