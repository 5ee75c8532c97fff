#include "rbaird/query_engine.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "rbaird/random.hpp"

namespace rbaird {

bool QueryRound::complete() const {
    return !answers.empty() && std::all_of(answers.begin(), answers.end(), [](const auto& a) { return a.has_value(); });
}

std::vector<std::size_t> QueryRound::unanswered() const {
    std::vector<std::size_t> out;
    for (std::size_t e = 0; e < answers.size(); ++e)
        if (!answers[e]) out.push_back(e);
    return out;
}

namespace {

/// log L_i(k) for every member i and answer k, row-major [i][k].
std::vector<double> log_likelihood_table(const RewardSpace& space, std::span<const FeatureExpectations> fes,
                                         double rationality) {
    const std::size_t n = space.size();
    const std::size_t k = fes.size();
    std::vector<double> table(n * k);
    for (std::size_t i = 0; i < n; ++i) {
        double* row = table.data() + i * k;
        double m = -INFINITY;
        for (std::size_t j = 0; j < k; ++j) {
            row[j] = rationality * dot(space.members[i], fes[j]);
            m = std::max(m, row[j]);
        }
        double s = 0.0;
        for (std::size_t j = 0; j < k; ++j) s += std::exp(row[j] - m);
        const double lse = m + std::log(s);
        for (std::size_t j = 0; j < k; ++j) row[j] -= lse;
    }
    return table;
}

struct EnvGain {
    double gain;
    std::vector<double> marginal;  // P(k)
};

EnvGain env_gain(const std::vector<double>& probs, const std::vector<double>& log_lik, std::size_t k) {
    EnvGain out{0.0, std::vector<double>(k, 0.0)};
    const std::size_t n = probs.size();
    for (std::size_t i = 0; i < n; ++i) {
        if (probs[i] == 0.0) continue;
        for (std::size_t j = 0; j < k; ++j) out.marginal[j] += probs[i] * std::exp(log_lik[i * k + j]);
    }
    // Mutual information sum_i sum_k p_i L_ik (log L_ik - log P_k).
    double mi = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        if (probs[i] == 0.0) continue;
        for (std::size_t j = 0; j < k; ++j) {
            const double l = log_lik[i * k + j];
            const double joint = probs[i] * std::exp(l);
            if (joint == 0.0) continue;
            mi += joint * (l - std::log(out.marginal[j]));
        }
    }
    out.gain = std::max(mi, 0.0);
    return out;
}

void check_query_fes(std::span<const FeatureExpectations> fes, std::size_t dim) {
    if (fes.empty()) throw std::invalid_argument("query has no candidates");
    for (const auto& fe : fes)
        if (fe.dim() != dim) throw std::invalid_argument("feature expectation dimension does not match reward space");
}

}  // namespace

double expected_entropy_reduction(const Belief& belief, const RewardSpace& space,
                                  std::span<const FeatureExpectations> fes, double rationality) {
    if (belief.size() != space.size()) throw std::invalid_argument("belief and space sizes differ");
    check_query_fes(fes, space.dim());
    const auto table = log_likelihood_table(space, fes, rationality);
    return env_gain(belief.probs(), table, fes.size()).gain;
}

double expected_info_gain_from_fes(const Belief& belief, const RewardSpace& space,
                                   const std::vector<std::vector<FeatureExpectations>>& per_env_fes,
                                   double rationality, GainStrategy strategy) {
    if (belief.size() != space.size()) throw std::invalid_argument("belief and space sizes differ");
    std::vector<double> working = belief.probs();
    double total = 0.0;
    for (const auto& fes : per_env_fes) {
        check_query_fes(fes, space.dim());
        const std::size_t k = fes.size();
        const auto table = log_likelihood_table(space, fes, rationality);
        const auto g = env_gain(working, table, k);
        total += g.gain;
        if (strategy == GainStrategy::MostProbableAnswer) {
            const std::size_t a =
                static_cast<std::size_t>(std::max_element(g.marginal.begin(), g.marginal.end()) - g.marginal.begin());
            double z = 0.0;
            for (std::size_t i = 0; i < working.size(); ++i) {
                working[i] *= std::exp(table[i * k + a]);
                z += working[i];
            }
            for (double& p : working) p /= z;
        }
        // Mixture: sum_a P(a) posterior_a(i) = working(i), nothing to carry.
    }
    return total;
}

std::vector<std::vector<FeatureExpectations>> query_feature_expectations(const Query& query,
                                                                         std::span<const GridEnvironment> batch,
                                                                         const AnswerModel& model) {
    std::vector<std::vector<FeatureExpectations>> out;
    out.reserve(batch.size());
    for (const auto& env : batch) {
        auto& row = out.emplace_back();
        row.reserve(query.size());
        for (const auto& c : query.candidates)
            row.push_back(feature_expectations_soft(env, c, model.horizon, model.temperature));
    }
    return out;
}

double expected_info_gain(const Belief& belief, const RewardSpace& space, const Query& query,
                          std::span<const GridEnvironment> batch, const AnswerModel& model, GainStrategy strategy) {
    return expected_info_gain_from_fes(belief, space, query_feature_expectations(query, batch, model),
                                       model.rationality, strategy);
}

RewardFunction random_unit_reward(std::size_t dim, std::uint64_t seed) {
    Rng rng(seed);
    for (;;) {
        RewardFunction w{std::vector<double>(dim)};
        for (double& x : w.weights) x = rng.uniform(-1.0, 1.0);
        if (l2_norm(w.weights) > 1e-12) return normalized(std::move(w));
    }
}

SelectedQuery select_query_detailed(const Belief& belief, const RewardSpace& space,
                                    std::span<const GridEnvironment> batch, const AnswerModel& model,
                                    const SelectionParams& params) {
    if (params.query_size < 2) throw std::invalid_argument("select_query: query size must be >= 2");
    if (params.grad_steps < 0) throw std::invalid_argument("select_query: grad_steps must be >= 0");
    if (batch.empty()) throw std::invalid_argument("select_query: empty batch");
    const std::size_t dim = space.dim();
    for (const auto& env : batch)
        if (static_cast<std::size_t>(env.feature_dim()) != dim)
            throw std::invalid_argument("select_query: environment feature_dim does not match reward space");

    // Coordinates whose feature is zero everywhere have an identically zero derivative.
    std::vector<char> live(dim, 0);
    for (const auto& env : batch) {
        const auto& table = env.feature_table();
        for (std::size_t i = 0; i < table.size(); ++i)
            if (table[i] != 0.0) live[i % dim] = 1;
    }

    const std::size_t n_env = batch.size();
    const auto soft_fes = [&](const RewardFunction& w) {
        std::vector<FeatureExpectations> out;
        out.reserve(n_env);
        for (const auto& env : batch) out.push_back(feature_expectations_soft(env, w, model.horizon, model.temperature));
        return out;
    };

    SelectedQuery result;
    result.per_env_fes.assign(n_env, {});
    std::vector<std::vector<FeatureExpectations>> seed_fes(n_env);
    std::vector<std::vector<FeatureExpectations>> probe(n_env);

    const auto objective = [&](const std::vector<FeatureExpectations>& candidate_fes) {
        for (std::size_t e = 0; e < n_env; ++e) {
            probe[e] = result.per_env_fes[e];
            probe[e].push_back(candidate_fes[e]);
        }
        return expected_info_gain_from_fes(belief, space, probe, model.rationality, params.strategy);
    };

    for (std::size_t c = 0; c < params.query_size; ++c) {
        RewardFunction w = random_unit_reward(dim, derive_seed(params.seed, {c}));
        std::vector<FeatureExpectations> w_fes = soft_fes(w);
        for (std::size_t e = 0; e < n_env; ++e) seed_fes[e].push_back(w_fes[e]);

        // A single-candidate query carries no information, so its gradient is zero.
        if (c > 0 && params.grad_steps > 0) {
            double value = objective(w_fes);
            for (int step = 0; step < params.grad_steps; ++step) {
                std::vector<double> grad(dim, 0.0);
                bool any = false;
                for (std::size_t j = 0; j < dim; ++j) {
                    if (!live[j]) continue;
                    RewardFunction hi = w, lo = w;
                    hi.weights[j] += params.fd_step;
                    lo.weights[j] -= params.fd_step;
                    grad[j] = (objective(soft_fes(hi)) - objective(soft_fes(lo))) / (2.0 * params.fd_step);
                    any = any || grad[j] != 0.0;
                }
                if (!any) break;
                RewardFunction moved = w;
                for (std::size_t j = 0; j < dim; ++j) moved.weights[j] += params.step_size * grad[j];
                moved = normalized(std::move(moved));
                auto moved_fes = soft_fes(moved);
                const double moved_value = objective(moved_fes);
                // The gradient is a pure function of w, so a rejected step would repeat forever.
                if (moved_value < value) break;
                w = std::move(moved);
                w_fes = std::move(moved_fes);
                value = moved_value;
            }
        }
        result.query.candidates.push_back(std::move(w));
        for (std::size_t e = 0; e < n_env; ++e) result.per_env_fes[e].push_back(std::move(w_fes[e]));
    }

    result.info_gain = expected_info_gain_from_fes(belief, space, result.per_env_fes, model.rationality, params.strategy);
    result.seed_info_gain = expected_info_gain_from_fes(belief, space, seed_fes, model.rationality, params.strategy);
    if (result.info_gain < result.seed_info_gain) {
        Query seed_query;
        for (std::size_t c = 0; c < params.query_size; ++c)
            seed_query.candidates.push_back(random_unit_reward(dim, derive_seed(params.seed, {c})));
        result.query = std::move(seed_query);
        result.per_env_fes = std::move(seed_fes);
        result.info_gain = result.seed_info_gain;
    }
    return result;
}

Query select_query(const Belief& belief, const RewardSpace& space, std::span<const GridEnvironment> batch,
                   const AnswerModel& model, const SelectionParams& params) {
    return select_query_detailed(belief, space, batch, model, params).query;
}

QueryAnswer simulated_answer(std::size_t env_index, std::span<const FeatureExpectations> query_fes,
                             const RewardFunction& true_w, double oracle_rationality, std::uint64_t seed) {
    if (query_fes.size() < 2) throw std::invalid_argument("simulated_answer: a query needs at least two candidates");
    const auto probs = answer_likelihoods(query_fes, true_w, oracle_rationality);
    Rng rng(derive_seed(seed, {0x6f7261636c65ULL}));
    return {env_index, rng.categorical(probs)};
}

Belief apply_query_round(const Belief& belief, const RewardSpace& space, const QueryRound& round, double rationality,
                         std::size_t* inference_count) {
    if (round.answers.size() != round.per_env_fes.size())
        throw std::invalid_argument("apply_query_round: answers and environments differ in count");
    for (std::size_t e = 0; e < round.answers.size(); ++e) {
        if (!round.answers[e]) throw std::invalid_argument("apply_query_round: missing answer for an environment");
        if (*round.answers[e] >= round.per_env_fes[e].size())
            throw std::invalid_argument("apply_query_round: answer index out of range");
    }
    Belief current = belief;
    for (std::size_t e = 0; e < round.answers.size(); ++e) {
        current = bayes_update(current, space, round.per_env_fes[e], *round.answers[e], rationality);
        if (inference_count) ++*inference_count;
    }
    return current;
}

}  // namespace rbaird
