#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "rbaird/reward.hpp"

namespace rbaird {

/// Finite candidate set for the true reward. Members are unit-norm weight
/// vectors; `true_index` designates the simulated ground truth.
struct RewardSpace {
    std::vector<RewardFunction> members;
    std::optional<std::size_t> true_index;
    std::uint64_t seed = 0;

    std::size_t size() const { return members.size(); }
    std::size_t dim() const { return members.empty() ? 0 : members.front().dim(); }
    const RewardFunction& true_reward() const;

    /// Throws std::invalid_argument unless N >= 2, dimensions agree and members are distinct.
    void validate() const;
};

/// `size` vectors drawn uniformly from [-1,1]^dim, L2-normalised; the true
/// member is a seeded uniform pick.
RewardSpace generate_reward_space(std::size_t size, std::size_t dim, std::uint64_t seed);

/// Categorical distribution over a RewardSpace. Always normalised.
class Belief {
public:
    /// Normalises `weights`; throws if any entry is negative or non-finite, or they sum to 0.
    explicit Belief(std::vector<double> weights);

    static Belief uniform(std::size_t n);

    const std::vector<double>& probs() const { return probs_; }
    double operator[](std::size_t i) const { return probs_[i]; }
    std::size_t size() const { return probs_.size(); }
    std::size_t map_index() const;

private:
    std::vector<double> probs_;
};

Belief uniform_belief(const RewardSpace& space);

/// Boltzmann choice probabilities exp(beta w.phi_j) / sum_k exp(beta w.phi_k) for all j.
std::vector<double> answer_likelihoods(std::span<const FeatureExpectations> query_fes, const RewardFunction& w,
                                       double rationality);

double answer_likelihood(std::span<const FeatureExpectations> query_fes, std::size_t answer_index,
                         const RewardFunction& w, double rationality);

/// Posterior proportional to prior * member likelihood.
Belief bayes_update(const Belief& belief, std::span<const double> member_likelihoods);

Belief bayes_update(const Belief& belief, const RewardSpace& space, std::span<const FeatureExpectations> query_fes,
                    std::size_t answer_index, double rationality);

/// -sum p ln p with 0 ln 0 = 0.
double entropy(const Belief& belief);
double entropy(std::span<const double> probs);

/// n i.i.d. member indices, deterministic per seed.
std::vector<std::size_t> sample_indices(const Belief& belief, std::size_t n, std::uint64_t seed);

std::vector<RewardFunction> sample_rewards(const Belief& belief, const RewardSpace& space, std::size_t n,
                                           std::uint64_t seed);

}  // namespace rbaird
