#pragma once

#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

namespace rbaird {

/// Linear reward over cell features: r(s) = f(s) . weights - living_reward.
struct RewardFunction {
    std::vector<double> weights;

    std::size_t dim() const { return weights.size(); }
    friend bool operator==(const RewardFunction&, const RewardFunction&) = default;
};

/// Discounted sum of the features visited along a (soft or hard) trajectory.
struct FeatureExpectations {
    std::vector<double> phi;

    std::size_t dim() const { return phi.size(); }
    friend bool operator==(const FeatureExpectations&, const FeatureExpectations&) = default;
};

inline double dot(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) throw std::invalid_argument("dot: dimension mismatch");
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

inline double dot(const RewardFunction& w, const FeatureExpectations& fe) { return dot(w.weights, fe.phi); }

inline double l2_norm(std::span<const double> v) {
    double s = 0.0;
    for (double x : v) s += x * x;
    return std::sqrt(s);
}

/// Rescales to unit L2 norm. A zero vector is returned unchanged.
inline RewardFunction normalized(RewardFunction w) {
    const double n = l2_norm(w.weights);
    if (n > 0.0)
        for (double& x : w.weights) x /= n;
    return w;
}

}  // namespace rbaird
