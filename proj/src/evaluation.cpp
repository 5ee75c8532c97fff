#include "rbaird/evaluation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "rbaird/random.hpp"
#include "rbaird/serialization.hpp"

namespace rbaird {

namespace {

constexpr std::uint64_t kVarianceStream = 0x766172ULL;

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

const char* kind_name(CellKind k) {
    switch (k) {
        case CellKind::Free: return "free";
        case CellKind::Wall: return "wall";
        case CellKind::Start: return "start";
        case CellKind::Goal: return "goal";
    }
    return "free";
}

const char* kind_color(CellKind k) {
    switch (k) {
        case CellKind::Wall: return "#808080";
        case CellKind::Start: return "#ffd700";
        case CellKind::Goal: return "#2e8b57";
        case CellKind::Free: break;
    }
    return nullptr;
}

}  // namespace

double true_return(const GridEnvironment& env, const PlannedPath& path, const RewardFunction& true_w) {
    return dot(true_w, path.features) - env.living_reward() * discount_mass(env, path.trajectory);
}

double return_variance(const FeatureExpectations& fe, const RewardSpace& space, std::span<const std::size_t> sample) {
    if (sample.empty()) return 0.0;
    // Shifted by the first value so that a constant sample gives exactly zero.
    std::vector<double> values;
    values.reserve(sample.size());
    const double shift = dot(space.members[sample.front()], fe);
    double mean = 0.0;
    for (auto i : sample) {
        values.push_back(dot(space.members[i], fe) - shift);
        mean += values.back();
    }
    mean /= static_cast<double>(values.size());
    double var = 0.0;
    for (double v : values) var += (v - mean) * (v - mean);
    return var / static_cast<double>(values.size());
}

EnvironmentEvaluation evaluate_environment(const GridEnvironment& env, const Belief& belief, const RewardSpace& space,
                                           const RewardFunction& true_w, const RiskMethod& method,
                                           const EvaluationParams& params, std::uint64_t env_seed) {
    const PlanSettings settings{params.sample_count, params.horizon, params.tolerance};
    EnvironmentEvaluation ev;
    ev.optimal = plan_with_method(env, belief, space, TrueReward{}, env_seed, true_w, settings);
    ev.unsafe = plan_with_method(env, belief, space, MeanOnly{}, env_seed, true_w, settings);
    ev.risk = plan_with_method(env, belief, space, method, env_seed, true_w, settings);
    ev.optimal_reward = true_return(env, ev.optimal, true_w);
    ev.unsafe_reward = true_return(env, ev.unsafe, true_w);
    ev.risk_reward = true_return(env, ev.risk, true_w);
    const auto sample = sample_indices(belief, params.variance_samples, derive_seed(env_seed, {kVarianceStream}));
    ev.unsafe_variance = return_variance(ev.unsafe.features, space, sample);
    ev.risk_variance = return_variance(ev.risk.features, space, sample);
    return ev;
}

MetricsRecord evaluate_checkpoint(std::span<const GridEnvironment> test_envs, const Belief& belief,
                                  const RewardSpace& space, const RewardFunction& true_w, const RiskMethod& method,
                                  const EvaluationParams& params) {
    if (test_envs.empty()) throw std::invalid_argument("evaluate_checkpoint: no test environments");
    MetricsRecord rec;
    for (std::size_t e = 0; e < test_envs.size(); ++e) {
        const auto ev = evaluate_environment(test_envs[e], belief, space, true_w, method, params,
                                             derive_seed(params.seed, {e}));
        rec.optimal_reward += ev.optimal_reward;
        rec.unsafe_reward += ev.unsafe_reward;
        rec.risk_reward += ev.risk_reward;
        rec.test_regret += ev.optimal_reward - ev.unsafe_reward;
        rec.risk_regret += ev.optimal_reward - ev.risk_reward;
        rec.test_variance += ev.unsafe_variance;
        rec.risk_variance += ev.risk_variance;
    }
    const double n = static_cast<double>(test_envs.size());
    for (double* v : {&rec.optimal_reward, &rec.unsafe_reward, &rec.risk_reward, &rec.test_regret, &rec.risk_regret,
                      &rec.test_variance, &rec.risk_variance})
        *v /= n;
    rec.posterior_entropy = entropy(belief);
    rec.true_member_probability = space.true_index ? belief[*space.true_index] : 0.0;
    return rec;
}

nlohmann::ordered_json render_trajectory_grid(const GridEnvironment& env, const Belief& belief,
                                              const RewardSpace& space, const std::optional<RewardFunction>& true_w,
                                              const RiskMethod& method, const EvaluationParams& params,
                                              std::uint64_t env_seed) {
    const auto stats = reward_statistics(env, belief, space, params.sample_count, env_seed);
    std::vector<double> reward(env.cell_count(), 0.0);
    for (std::size_t i = 0; i < reward.size(); ++i) {
        if (env.is_wall(i)) continue;
        reward[i] = true_w ? dot(env.features_at(i), true_w->weights) - env.living_reward() : stats[i].mean_reward;
    }

    double rmin = INFINITY, rmax = -INFINITY, vmin = INFINITY, vmax = -INFINITY;
    for (std::size_t i = 0; i < reward.size(); ++i) {
        if (env.is_wall(i)) continue;
        rmin = std::min(rmin, reward[i]);
        rmax = std::max(rmax, reward[i]);
        vmin = std::min(vmin, stats[i].variance);
        vmax = std::max(vmax, stats[i].variance);
    }
    const auto scale = [](double v, double lo, double hi) { return hi > lo ? (v - lo) / (hi - lo) : 0.0; };

    Json cells = Json::array();
    for (std::size_t i = 0; i < reward.size(); ++i) {
        const CellCoord c = env.coord(i);
        const CellKind k = env.kind_at(i);
        Json cell;
        cell["x"] = c.x;
        cell["y"] = c.y;
        cell["kind"] = kind_name(k);
        const bool wall = k == CellKind::Wall;
        cell["reward"] = wall ? 0.0 : reward[i];
        cell["mean_reward"] = stats[i].mean_reward;
        cell["variance"] = stats[i].variance;
        cell["min_reward"] = stats[i].min_reward;
        cell["blue"] = wall ? 0.0 : scale(reward[i], rmin, rmax);
        cell["red"] = wall ? 0.0 : scale(stats[i].variance, vmin, vmax);
        if (const char* color = kind_color(k)) cell["color"] = color;
        cells.push_back(std::move(cell));
    }

    const PlanSettings settings{params.sample_count, params.horizon, params.tolerance};
    Json doc;
    doc["env_id"] = env.id();
    doc["width"] = env.width();
    doc["height"] = env.height();
    doc["method"] = to_string(method);
    doc["reward_source"] = true_w ? "true" : "posterior_mean";
    doc["cells"] = std::move(cells);
    Json trajectories = Json::object();
    trajectories["unsafe"] = trajectory_to_json(
        env, "unsafe", plan_with_method(env, belief, space, MeanOnly{}, env_seed, true_w, settings).trajectory);
    if (!std::holds_alternative<TrueReward>(method) || true_w)
        trajectories["risk"] = trajectory_to_json(
            env, "risk", plan_with_method(env, belief, space, method, env_seed, true_w, settings).trajectory);
    doc["trajectories"] = std::move(trajectories);
    return doc;
}

std::string metrics_csv(std::span<const MetricsRecord> records) {
    std::string out = kMetricsCsvHeader;
    out += '\n';
    for (const auto& r : records) {
        out += std::to_string(r.inference_count) + ',' + std::to_string(r.batch_index) + ',' +
               std::to_string(r.query_index);
        for (double v : {r.test_regret, r.risk_regret, r.test_variance, r.risk_variance, r.posterior_entropy,
                         r.true_member_probability}) {
            out += ',';
            out += format_double(v);
        }
        out += '\n';
    }
    return out;
}

void export_metrics_csv(std::span<const MetricsRecord> records, const std::filesystem::path& path) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw std::runtime_error("cannot open '" + path.string() + "' for writing");
    f << metrics_csv(records);
    if (!f) throw std::runtime_error("failed writing '" + path.string() + "'");
}

std::vector<MetricsRecord> parse_metrics_csv(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line) || line != kMetricsCsvHeader)
        throw std::invalid_argument("metrics CSV: unexpected header");
    std::vector<MetricsRecord> out;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::vector<std::string> cols;
        std::stringstream ls(line);
        std::string col;
        while (std::getline(ls, col, ',')) cols.push_back(col);
        if (cols.size() != 9) throw std::invalid_argument("metrics CSV: expected 9 columns");
        MetricsRecord r;
        r.inference_count = std::stoull(cols[0]);
        r.batch_index = std::stoull(cols[1]);
        r.query_index = std::stoull(cols[2]);
        r.test_regret = std::stod(cols[3]);
        r.risk_regret = std::stod(cols[4]);
        r.test_variance = std::stod(cols[5]);
        r.risk_variance = std::stod(cols[6]);
        r.posterior_entropy = std::stod(cols[7]);
        r.true_member_probability = std::stod(cols[8]);
        out.push_back(r);
    }
    return out;
}

std::vector<MetricsRecord> read_metrics_csv(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open '" + path.string() + "'");
    std::stringstream ss;
    ss << f.rdbuf();
    return parse_metrics_csv(ss.str());
}

}  // namespace rbaird
