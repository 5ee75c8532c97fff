#pragma once

#include <vector>

#include "rbaird/gridworld.hpp"
#include "rbaird/reward.hpp"

namespace rbaird {

inline constexpr int kDefaultHorizon = 50;
inline constexpr double kDefaultTolerance = 1e-6;
inline constexpr double kDefaultTemperature = 1.0;

/// Per-cell reward, indexed by GridEnvironment::index. Wall entries are ignored.
using StateRewardMap = std::vector<double>;

/// f(s) . w - living_reward for every cell.
StateRewardMap state_rewards(const GridEnvironment& env, const RewardFunction& w);

/// Deterministic policy produced by finite-horizon value iteration.
///
/// One greedy action table is kept per number of remaining moves, so the
/// rollout is optimal for the horizon-truncated problem. Tables stop once the
/// value function converges; later steps reuse the last table.
class Policy {
public:
    Policy(int width, int height, std::vector<std::vector<Action>> tables);

    /// Action with the full planned horizon remaining.
    Action action(CellCoord cell) const { return action(cell, planned_moves()); }
    Action action(CellCoord cell, int moves_left) const;

    int planned_moves() const { return static_cast<int>(tables_.size()); }

private:
    int width_;
    int height_;
    std::vector<std::vector<Action>> tables_;
};

struct Trajectory {
    std::vector<CellCoord> states;
    bool truncated = false;
};

/// Backward induction over at most `horizon` moves with state values
/// V(s) = r(s) + discount * max_a V(next(s,a)); goals collect their reward and
/// stop. Ties resolve in the order North, South, East, West.
Policy value_iteration(const GridEnvironment& env, const StateRewardMap& rewards, int horizon = kDefaultHorizon,
                       double tolerance = kDefaultTolerance);

/// Walk from the start cell following the policy until a goal or `horizon` moves.
Trajectory rollout(const GridEnvironment& env, const Policy& policy, int horizon = kDefaultHorizon);

/// sum_t discount^t f(s_t), with s_0 = start at t = 0.
FeatureExpectations trajectory_features(const GridEnvironment& env, const Trajectory& trajectory);

/// sum_t discount^t rewards(s_t).
double trajectory_return(const GridEnvironment& env, const StateRewardMap& rewards, const Trajectory& trajectory);

/// sum_t discount^t over the visited states; multiplies the living reward when
/// a return is rebuilt from feature expectations.
double discount_mass(const GridEnvironment& env, const Trajectory& trajectory);

FeatureExpectations feature_expectations_hard(const GridEnvironment& env, const RewardFunction& w,
                                              int horizon = kDefaultHorizon, double tolerance = kDefaultTolerance);

/// Boltzmann-soft counterpart of feature_expectations_hard.
///
/// Soft values V_0 = r, V_k(s) = r(s) + discount * tau * log sum_a exp(V_{k-1}(next(s,a)) / tau)
/// for k < horizon; with m moves left the policy is pi(a|s) ~ exp(V_{m-1}(next(s,a)) / tau).
/// The start-state occupancy is carried for `horizon` moves under these
/// policies. The result is smooth in w, which query optimisation needs, and
/// tends to the hard planner's features as tau -> 0.
FeatureExpectations feature_expectations_soft(const GridEnvironment& env, const RewardFunction& w,
                                              int horizon = kDefaultHorizon,
                                              double temperature = kDefaultTemperature);

}  // namespace rbaird
