#include "rbaird/belief.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "rbaird/random.hpp"

namespace rbaird {

const RewardFunction& RewardSpace::true_reward() const {
    if (!true_index || *true_index >= members.size())
        throw std::logic_error("RewardSpace: no designated true reward");
    return members[*true_index];
}

void RewardSpace::validate() const {
    if (members.size() < 2) throw std::invalid_argument("RewardSpace: at least two members are required");
    const std::size_t d = dim();
    if (d == 0) throw std::invalid_argument("RewardSpace: members must be non-empty");
    for (const auto& m : members) {
        if (m.dim() != d) throw std::invalid_argument("RewardSpace: member dimensions differ");
        for (double x : m.weights)
            if (!std::isfinite(x)) throw std::invalid_argument("RewardSpace: non-finite weight");
    }
    std::vector<const RewardFunction*> sorted;
    for (const auto& m : members) sorted.push_back(&m);
    std::sort(sorted.begin(), sorted.end(), [](auto* a, auto* b) { return a->weights < b->weights; });
    for (std::size_t i = 1; i < sorted.size(); ++i)
        if (sorted[i]->weights == sorted[i - 1]->weights)
            throw std::invalid_argument("RewardSpace: duplicate members");
    if (true_index && *true_index >= members.size())
        throw std::invalid_argument("RewardSpace: true_index out of range");
}

RewardSpace generate_reward_space(std::size_t size, std::size_t dim, std::uint64_t seed) {
    if (size < 2) throw std::invalid_argument("generate_reward_space: size must be >= 2");
    if (dim < 1) throw std::invalid_argument("generate_reward_space: dim must be >= 1");
    Rng rng(derive_seed(seed, {0x7370616365ULL}));
    RewardSpace space;
    space.seed = seed;
    space.members.reserve(size);
    while (space.members.size() < size) {
        RewardFunction w{std::vector<double>(dim)};
        for (double& x : w.weights) x = rng.uniform(-1.0, 1.0);
        if (l2_norm(w.weights) < 1e-12) continue;
        space.members.push_back(normalized(std::move(w)));
    }
    space.true_index = static_cast<std::size_t>(rng.below(size));
    space.validate();
    return space;
}

Belief::Belief(std::vector<double> weights) : probs_(std::move(weights)) {
    if (probs_.empty()) throw std::invalid_argument("Belief: empty support");
    double total = 0.0;
    for (double p : probs_) {
        if (!std::isfinite(p) || p < 0.0) throw std::invalid_argument("Belief: weights must be finite and >= 0");
        total += p;
    }
    if (!(total > 0.0)) throw std::invalid_argument("Belief: total mass is zero");
    for (double& p : probs_) p /= total;
}

Belief Belief::uniform(std::size_t n) { return Belief(std::vector<double>(n, 1.0)); }

std::size_t Belief::map_index() const {
    return static_cast<std::size_t>(std::max_element(probs_.begin(), probs_.end()) - probs_.begin());
}

Belief uniform_belief(const RewardSpace& space) { return Belief::uniform(space.size()); }

std::vector<double> answer_likelihoods(std::span<const FeatureExpectations> query_fes, const RewardFunction& w,
                                       double rationality) {
    if (query_fes.empty()) throw std::invalid_argument("answer_likelihood: empty query");
    if (rationality < 0.0) throw std::invalid_argument("answer_likelihood: rationality must be >= 0");
    std::vector<double> logits(query_fes.size());
    for (std::size_t j = 0; j < query_fes.size(); ++j) logits[j] = rationality * dot(w, query_fes[j]);
    const double m = *std::max_element(logits.begin(), logits.end());
    double total = 0.0;
    for (double& l : logits) {
        l = std::exp(l - m);
        total += l;
    }
    for (double& l : logits) l /= total;
    return logits;
}

double answer_likelihood(std::span<const FeatureExpectations> query_fes, std::size_t answer_index,
                         const RewardFunction& w, double rationality) {
    if (answer_index >= query_fes.size()) throw std::out_of_range("answer_likelihood: answer index out of range");
    return answer_likelihoods(query_fes, w, rationality)[answer_index];
}

Belief bayes_update(const Belief& belief, std::span<const double> member_likelihoods) {
    if (member_likelihoods.size() != belief.size())
        throw std::invalid_argument("bayes_update: likelihood vector size does not match belief");
    std::vector<double> post(belief.size());
    double total = 0.0;
    for (std::size_t i = 0; i < post.size(); ++i) {
        post[i] = belief[i] * member_likelihoods[i];
        total += post[i];
    }
    if (!(total > 0.0)) throw std::runtime_error("bayes_update: posterior mass underflowed to zero");
    return Belief(std::move(post));
}

Belief bayes_update(const Belief& belief, const RewardSpace& space, std::span<const FeatureExpectations> query_fes,
                    std::size_t answer_index, double rationality) {
    if (belief.size() != space.size()) throw std::invalid_argument("bayes_update: belief and space sizes differ");
    if (answer_index >= query_fes.size()) throw std::out_of_range("bayes_update: answer index out of range");
    std::vector<double> lik(space.size());
    for (std::size_t i = 0; i < lik.size(); ++i)
        lik[i] = answer_likelihoods(query_fes, space.members[i], rationality)[answer_index];
    return bayes_update(belief, lik);
}

double entropy(std::span<const double> probs) {
    double h = 0.0;
    for (double p : probs)
        if (p > 0.0) h -= p * std::log(p);
    return h;
}

double entropy(const Belief& belief) { return entropy(belief.probs()); }

std::vector<std::size_t> sample_indices(const Belief& belief, std::size_t n, std::uint64_t seed) {
    std::vector<double> cdf(belief.size());
    double acc = 0.0;
    for (std::size_t i = 0; i < cdf.size(); ++i) {
        acc += belief[i];
        cdf[i] = acc;
    }
    // Last strictly positive atom absorbs rounding at the top of the cdf.
    std::size_t last = 0;
    for (std::size_t i = 0; i < belief.size(); ++i)
        if (belief[i] > 0.0) last = i;

    Rng rng(derive_seed(seed, {0x73616d706c65ULL}));
    std::vector<std::size_t> out(n);
    for (auto& idx : out) {
        const double u = rng.uniform() * acc;
        const auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
        idx = std::min(static_cast<std::size_t>(it - cdf.begin()), last);
    }
    return out;
}

std::vector<RewardFunction> sample_rewards(const Belief& belief, const RewardSpace& space, std::size_t n,
                                           std::uint64_t seed) {
    if (belief.size() != space.size()) throw std::invalid_argument("sample_rewards: belief and space sizes differ");
    std::vector<RewardFunction> out;
    out.reserve(n);
    for (auto i : sample_indices(belief, n, seed)) out.push_back(space.members[i]);
    return out;
}

}  // namespace rbaird
