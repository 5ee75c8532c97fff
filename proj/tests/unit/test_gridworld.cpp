#include <queue>

#include "doctest.h"
#include "fixtures.hpp"

using namespace rbaird;

namespace {

GridEnvironment three_by_three_with_wall() {
    // Start (0,0), goal (2,2), wall in the centre.
    return GridEnvironment("w", 3, 3, 1, {0, 0}, {{2, 2}}, {{1, 1}}, std::vector<double>(9, 0.0), 0.0, 0.9);
}

/// Independent reachability check by flood fill over coordinates.
bool flood_reaches_goal(const GridEnvironment& env) {
    std::vector<char> seen(env.cell_count(), 0);
    std::queue<CellCoord> q;
    q.push(env.start());
    seen[env.index(env.start())] = 1;
    const int dx[] = {0, 0, 1, -1}, dy[] = {-1, 1, 0, 0};
    while (!q.empty()) {
        const CellCoord c = q.front();
        q.pop();
        if (env.kind(c) == CellKind::Goal) return true;
        for (int k = 0; k < 4; ++k) {
            const CellCoord n{c.x + dx[k], c.y + dy[k]};
            if (!env.in_bounds(n) || env.kind(n) == CellKind::Wall || seen[env.index(n)]) continue;
            seen[env.index(n)] = 1;
            q.push(n);
        }
    }
    return false;
}

}  // namespace

TEST_CASE("moving off the top row leaves the agent in place") {
    const auto env = three_by_three_with_wall();
    CHECK(neighbors(env, {0, 0}, Action::North) == CellCoord{0, 0});
    CHECK(neighbors(env, {2, 1}, Action::East) == CellCoord{2, 1});
}

TEST_CASE("moving into a wall leaves the agent in place") {
    const auto env = three_by_three_with_wall();
    CHECK(neighbors(env, {1, 0}, Action::South) == CellCoord{1, 0});
    CHECK(neighbors(env, {0, 1}, Action::East) == CellCoord{0, 1});
    CHECK(neighbors(env, {0, 0}, Action::East) == CellCoord{1, 0});
}

TEST_CASE("constructor rejects broken layouts") {
    const std::vector<double> f(4, 0.0);
    CHECK_THROWS_AS(GridEnvironment("x", 2, 2, 1, {0, 0}, {}, {}, f, 0.0, 0.9), std::invalid_argument);
    CHECK_THROWS_AS(GridEnvironment("x", 2, 2, 1, {0, 0}, {{0, 0}}, {}, f, 0.0, 0.9), std::invalid_argument);
    CHECK_THROWS_AS(GridEnvironment("x", 2, 2, 1, {0, 0}, {{1, 1}}, {{1, 0}, {0, 1}}, f, 0.0, 0.9),
                    std::invalid_argument);
    CHECK_THROWS_AS(GridEnvironment("x", 2, 2, 1, {0, 0}, {{1, 1}}, {}, std::vector<double>(3, 0.0), 0.0, 0.9),
                    std::invalid_argument);
    CHECK_THROWS_AS(GridEnvironment("x", 2, 2, 1, {0, 0}, {{1, 1}}, {}, f, 0.0, 1.5), std::invalid_argument);
    std::vector<double> wall_feature(4, 0.0);
    wall_feature[1] = 1.0;
    CHECK_THROWS_AS(GridEnvironment("x", 2, 2, 1, {0, 0}, {{1, 1}}, {{1, 0}}, wall_feature, 0.0, 0.9),
                    std::invalid_argument);
}

TEST_CASE("generate_environment is a pure function of its parameters") {
    GenerationParams p;
    p.seed = 99;
    const auto a = generate_environment(p);
    const auto b = generate_environment(p);
    CHECK(a.feature_table() == b.feature_table());
    CHECK(a.walls() == b.walls());
    CHECK(a.goals() == b.goals());
    CHECK(a.start() == b.start());
    p.seed = 100;
    CHECK(generate_environment(p).feature_table() != a.feature_table());
}

TEST_CASE("generated environments always have a reachable goal") {
    GenerationParams p;
    p.wall_density = 0.3;
    for (std::uint64_t seed = 0; seed < 200; ++seed) {
        p.seed = seed;
        const auto env = generate_environment(p);
        REQUIRE(flood_reaches_goal(env));
        CHECK(env.goals().size() >= 1);
        CHECK(env.goals().size() <= 3);
    }
}

TEST_CASE("inactive features are zero columns and active ones lie in [0,1]") {
    GenerationParams p;
    p.seed = 5;
    p.active_feature_count = 4;
    const auto env = generate_environment(p);
    for (std::size_t i = 0; i < env.cell_count(); ++i) {
        const auto f = env.features_at(i);
        for (int k = 0; k < env.feature_dim(); ++k) {
            if (k >= 4 || env.is_wall(i))
                CHECK(f[k] == 0.0);
            else
                CHECK((f[k] >= 0.0 && f[k] < 1.0));
        }
    }
}

TEST_CASE("features_per_env restricts each environment to a subset of the active features") {
    GenerationParams p;
    p.features_per_env = 3;
    p.active_feature_count = 8;
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        p.seed = seed;
        const auto env = generate_environment(p);
        std::vector<char> used(10, 0);
        for (std::size_t i = 0; i < env.cell_count(); ++i)
            for (int k = 0; k < 10; ++k)
                if (env.features_at(i)[k] != 0.0) used[k] = 1;
        int count = 0;
        for (int k = 0; k < 10; ++k) count += used[k];
        CHECK(count == 3);
        CHECK(used[8] == 0);
        CHECK(used[9] == 0);
    }
}

TEST_CASE("feature_density thins out the nonzero components") {
    GenerationParams p;
    p.seed = 8;
    p.feature_density = 0.25;
    const auto env = generate_environment(p);
    std::size_t nonzero = 0, total = 0;
    for (std::size_t i = 0; i < env.cell_count(); ++i) {
        if (env.is_wall(i)) continue;
        for (double v : env.features_at(i)) {
            ++total;
            nonzero += v != 0.0;
        }
    }
    const double p_hat = static_cast<double>(nonzero) / static_cast<double>(total);
    const double sigma = std::sqrt(0.25 * 0.75 / static_cast<double>(total));
    CHECK(std::abs(p_hat - 0.25) < 4.0 * sigma);
}

TEST_CASE("generation rejects out-of-range parameters") {
    GenerationParams p;
    p.wall_density = 0.31;
    CHECK_THROWS_AS(generate_environment(p), std::invalid_argument);
    p = {};
    p.active_feature_count = 11;
    CHECK_THROWS_AS(generate_environment(p), std::invalid_argument);
    p = {};
    p.feature_density = 0.0;
    CHECK_THROWS_AS(generate_environment(p), std::invalid_argument);
}

TEST_CASE("state_reward is linear in the weights up to the living reward") {
    const auto env = fixtures::random_env(3, 4, 4, 3, 0.95, 0.2);
    const RewardFunction w1{{0.3, -0.5, 0.9}}, w2{{-1.0, 0.25, 0.1}};
    const double a = 1.7, b = -0.4;
    RewardFunction mix{{0, 0, 0}};
    for (int k = 0; k < 3; ++k) mix.weights[k] = a * w1.weights[k] + b * w2.weights[k];
    for (std::size_t i = 0; i < env.cell_count(); ++i) {
        const auto c = env.coord(i);
        const double lhs = state_reward(env, c, mix) + env.living_reward();
        const double rhs =
            a * (state_reward(env, c, w1) + env.living_reward()) + b * (state_reward(env, c, w2) + env.living_reward());
        CHECK(lhs == doctest::Approx(rhs).epsilon(1e-12));
    }
    CHECK_THROWS_AS(state_reward(env, {0, 0}, RewardFunction{{1.0}}), std::invalid_argument);
}
