#pragma once

#include <array>
#include <span>
#include <string>
#include <vector>

#include "csisched/channel.hpp"
#include "csisched/policy.hpp"

namespace csisched {

// A stability region represented by its generating terms: the weighted
// Minkowski sum over estimate vectors c_hat of the simplices
// CH[0, w_1 e_1, ..., w_N e_N], scaled by sigma. Terms are enumerated over
// c_hat in S^N with user 0 as the most significant digit.
struct RegionTerms {
    enum class Label { full, naive };

    int n_users = 0;
    Label label = Label::full;
    double sigma = 1.0;  // region scaling factor, in (0, 1]

    std::vector<double> weights;  // per term, the estimate-vector probability
    std::vector<double> legs;     // term-major, n_users per term

    // grouped per-axis data: leg values depend only on the user's own
    // estimate, which collapses corner computations from |S|^N to |S|
    std::vector<std::vector<double>> axis_marginal;  // [user][est]
    std::vector<std::vector<double>> axis_leg;       // [user][est]

    size_t term_count() const { return weights.size(); }
    double leg(size_t term, int user) const {
        return legs[term * static_cast<size_t>(n_users) + static_cast<size_t>(user)];
    }

    // Axis intercept for one user: sigma * sum_est marginal * leg.
    double corner(int user) const;
};

// Stability region under full knowledge of the joint statistics:
// legs are the rate-adapted expected service p(r* | c_hat) * r*.
RegionTerms region_full(const SuccessTable& st, int n_users);

// Stability region of the estimate-trusting scheduler: legs are
// p(c_hat | c_hat) * c_hat.
RegionTerms region_naive(const SuccessTable& st, int n_users);

// Region of the statistics-learning policy with exploration fraction gamma:
// the same terms scaled by (1 - gamma).
RegionTerms scale_region(const RegionTerms& r, double gamma);

// Exact outer boundary for two users: counterclockwise vertex list from
// (corner_1, 0) to (0, corner_2), computed by sorting the term triangles by
// leg ratio and sweeping. Parallel edges (equal ratios) are merged.
std::vector<std::array<double, 2>> boundary_2d(const RegionTerms& r);

// Support function h(theta) = sigma * sum_t weight_t * max_i leg_i theta_i.
double support(const RegionTerms& r, std::span<const double> theta);

enum class Membership { inside, boundary, outside };

// Region membership. Exact for one and two users; for three or more users
// the verdict comes from minimizing h(theta) - lambda . theta over a refined
// direction grid (coarse resolution 1/24 plus local refinement), so "inside"
// is accurate only up to that resolution while "outside" is certified.
Membership contains(const RegionTerms& r, std::span<const double> lambda, double tol = 1e-9);

// Largest s such that s * dir lies in the region (two users, exact; the
// direction must be nonnegative and nonzero). Returns 0 for a degenerate
// region.
double ray_exit_scale(const RegionTerms& r, std::span<const double> dir);

// Per-term, per-user activation probabilities alpha_i^chat of the randomized
// stationary reference policy; a constructive membership certificate.
struct AchievabilityWeights {
    enum class Status { feasible, infeasible, unresolved };

    Status status = Status::infeasible;
    int n_users = 0;
    std::vector<double> alpha;  // term-major, aligned with RegionTerms terms
    double residual = 0.0;      // min_i (service_i - lambda_i - delta)

    double at(size_t term, int user) const {
        return alpha[term * static_cast<size_t>(n_users) + static_cast<size_t>(user)];
    }
};

// Searches for activation probabilities alpha with sum_i alpha_i^chat <= 1
// per estimate vector and lambda_i + delta <= sum_chat pi alpha_i^chat w_i.
// Exact for two users via the sorted-ratio boundary structure; iterative
// with a certified residual for three or more.
AchievabilityWeights achievability_weights(const SuccessTable& st, std::span<const double> lambda,
                                           double delta);

}  // namespace csisched
