#include "rbaird/risk_planner.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <stdexcept>

namespace rbaird {

namespace {

template <class... Ts>
struct Overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

/// Distinct sampled members with their sample fractions.
struct WeightedSample {
    std::vector<std::size_t> members;
    std::vector<double> fractions;
};

WeightedSample draw(const Belief& belief, std::size_t n, std::uint64_t seed) {
    std::map<std::size_t, std::size_t> counts;
    for (auto i : sample_indices(belief, n, seed)) ++counts[i];
    WeightedSample s;
    for (auto [i, c] : counts) {
        s.members.push_back(i);
        s.fractions.push_back(static_cast<double>(c) / static_cast<double>(n));
    }
    return s;
}

struct CellStats {
    double mean;
    double variance;
    double min;
};

CellStats cell_stats(const GridEnvironment& env, std::size_t cell, const RewardSpace& space,
                     const WeightedSample& sample, std::vector<double>& scratch) {
    const auto f = env.features_at(cell);
    scratch.resize(sample.members.size());
    CellStats st{0.0, 0.0, INFINITY};
    for (std::size_t j = 0; j < sample.members.size(); ++j) {
        scratch[j] = dot(f, space.members[sample.members[j]].weights) - env.living_reward();
        st.mean += sample.fractions[j] * scratch[j];
        st.min = std::min(st.min, scratch[j]);
    }
    for (std::size_t j = 0; j < sample.members.size(); ++j) {
        const double dev = scratch[j] - st.mean;
        st.variance += sample.fractions[j] * dev * dev;
    }
    return st;
}

}  // namespace

std::string to_string(const RiskMethod& method) {
    return std::visit(Overloaded{
                          [](const WorstCase& m) { return "worst:" + std::to_string(m.samples); },
                          [](const VariancePenalty& m) {
                              char buf[64];
                              std::snprintf(buf, sizeof buf, "variance:%g", m.coefficient);
                              return std::string(buf);
                          },
                          [](const MeanOnly&) { return std::string("mean"); },
                          [](const TrueReward&) { return std::string("true"); },
                      },
                      method);
}

RiskMethod parse_risk_method(const std::string& text) {
    const auto colon = text.find(':');
    const std::string kind = text.substr(0, colon);
    const std::string arg = colon == std::string::npos ? "" : text.substr(colon + 1);
    RiskMethod m;
    try {
        if (kind == "worst" || kind == "worst_case") {
            const long n = arg.empty() ? 10 : std::stol(arg);
            if (n < 1) throw std::invalid_argument("samples");
            m = WorstCase{static_cast<std::size_t>(n)};
        } else if (kind == "variance" || kind == "variance_penalty") {
            m = VariancePenalty{arg.empty() ? 1.0 : std::stod(arg)};
        } else if (kind == "mean" || kind == "mean_only") {
            m = MeanOnly{};
        } else if (kind == "true" || kind == "true_reward") {
            m = TrueReward{};
        } else {
            throw std::invalid_argument(kind);
        }
    } catch (const std::logic_error&) {
        throw std::invalid_argument("unrecognised risk method '" + text + "'");
    }
    validate(m);
    return m;
}

void validate(const RiskMethod& method) {
    if (const auto* w = std::get_if<WorstCase>(&method); w && w->samples < 1)
        throw std::invalid_argument("WorstCase needs samples >= 1");
    if (const auto* v = std::get_if<VariancePenalty>(&method); v && !(v->coefficient >= 0.0))
        throw std::invalid_argument("VariancePenalty needs coefficient >= 0");
}

StateRewardMap risk_state_rewards(const GridEnvironment& env, const Belief& belief, const RewardSpace& space,
                                  const RiskMethod& method, std::size_t sample_count, std::uint64_t seed,
                                  const std::optional<RewardFunction>& true_w) {
    validate(method);
    if (belief.size() != space.size()) throw std::invalid_argument("risk_state_rewards: belief and space sizes differ");
    if (space.dim() != static_cast<std::size_t>(env.feature_dim()))
        throw std::invalid_argument("risk_state_rewards: reward space dimension does not match feature_dim");

    if (std::holds_alternative<TrueReward>(method)) {
        if (!true_w) throw std::invalid_argument("risk_state_rewards: TrueReward requires the true reward");
        return state_rewards(env, *true_w);
    }
    if (!std::holds_alternative<WorstCase>(method) && sample_count < 2)
        throw std::invalid_argument("risk_state_rewards: sample_count must be >= 2");

    const std::size_t n = std::visit(Overloaded{
                                         [](const WorstCase& m) { return m.samples; },
                                         [&](const auto&) { return sample_count; },
                                     },
                                     method);
    const WeightedSample sample = draw(belief, n, seed);

    StateRewardMap out(env.cell_count(), 0.0);
    std::vector<double> scratch;
    for (std::size_t i = 0; i < out.size(); ++i) {
        if (env.is_wall(i)) continue;
        const CellStats st = cell_stats(env, i, space, sample, scratch);
        out[i] = std::visit(Overloaded{
                                [&](const WorstCase&) { return st.min; },
                                [&](const VariancePenalty& m) { return st.mean - m.coefficient * st.variance; },
                                [&](const MeanOnly&) { return st.mean; },
                                [&](const TrueReward&) { return 0.0; },
                            },
                            method);
    }
    return out;
}

PlannedPath plan_with_method(const GridEnvironment& env, const Belief& belief, const RewardSpace& space,
                             const RiskMethod& method, std::uint64_t seed, const std::optional<RewardFunction>& true_w,
                             const PlanSettings& settings) {
    const auto rewards = risk_state_rewards(env, belief, space, method, settings.sample_count, seed, true_w);
    const auto policy = value_iteration(env, rewards, settings.horizon, settings.tolerance);
    PlannedPath out;
    out.trajectory = rollout(env, policy, settings.horizon);
    out.features = trajectory_features(env, out.trajectory);
    return out;
}

std::vector<CellRewardStats> reward_statistics(const GridEnvironment& env, const Belief& belief,
                                               const RewardSpace& space, std::size_t sample_count,
                                               std::uint64_t seed) {
    if (sample_count < 1) throw std::invalid_argument("reward_statistics: sample_count must be >= 1");
    const WeightedSample sample = draw(belief, sample_count, seed);
    std::vector<CellRewardStats> out(env.cell_count());
    std::vector<double> scratch;
    for (std::size_t i = 0; i < out.size(); ++i) {
        if (env.is_wall(i)) continue;
        const CellStats st = cell_stats(env, i, space, sample, scratch);
        out[i] = {st.mean, st.variance, st.min};
    }
    return out;
}

}  // namespace rbaird
