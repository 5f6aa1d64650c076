#pragma once

#include <array>
#include <cmath>
#include <vector>

#include "csisched/channel.hpp"
#include "csisched/region.hpp"

namespace fixtures {

using csisched::JointStatistics;
using csisched::RateSpace;

// Binary channel S = {0.2, 1} with P(C = 1) = 0.8 and a symmetric estimator
// of accuracy q = P(C_hat = k | C = k); q = 0.8 and q = 0.4 are the two
// mismatch levels of the worked two-user examples.
inline JointStatistics binary_channel(double q, int n_users = 2) {
    RateSpace rates({0.2, 1.0});
    std::vector<std::vector<double>> table = {
        {0.2 * q, 0.2 * (1.0 - q)},  // actual 0.2: estimate 0.2, estimate 1
        {0.8 * (1.0 - q), 0.8 * q},  // actual 1
    };
    std::vector<std::vector<std::vector<double>>> users(static_cast<size_t>(n_users), table);
    return JointStatistics::from_tables(std::move(rates), users);
}

inline JointStatistics perfect_binary_channel(int n_users = 2) {
    return binary_channel(1.0, n_users);
}

// ---- independent oracles (brute-force enumeration, no reuse of the
// implementation under test) ----

// P(C >= rates[rate_idx] | estimate column) from a raw joint matrix
// joint[actual][estimate].
inline double oracle_conditional(const std::vector<std::vector<double>>& joint, int est,
                                 int rate_idx) {
    double col = 0.0, tail = 0.0;
    for (size_t c = 0; c < joint.size(); ++c) {
        col += joint[c][static_cast<size_t>(est)];
        if (static_cast<int>(c) >= rate_idx) tail += joint[c][static_cast<size_t>(est)];
    }
    return tail / col;
}

inline double oracle_marginal(const std::vector<std::vector<double>>& joint, int est) {
    double col = 0.0;
    for (const auto& row : joint) col += row[static_cast<size_t>(est)];
    return col;
}

// Single-user region corner by enumerating every (estimate, rate) choice:
// sum_e P(e) max_r P(C >= r | e) * r.
inline double oracle_corner(const std::vector<std::vector<double>>& joint,
                            const std::vector<double>& rates) {
    double corner = 0.0;
    for (size_t e = 0; e < rates.size(); ++e) {
        double best = 0.0;
        for (size_t r = 0; r < rates.size(); ++r) {
            double v = oracle_conditional(joint, static_cast<int>(e), static_cast<int>(r)) * rates[r];
            if (v > best) best = v;
        }
        corner += oracle_marginal(joint, static_cast<int>(e)) * best;
    }
    return corner;
}

// Corner of the estimate-trusting policy: sum_e P(e) P(C >= e | e) * e.
inline double oracle_corner_naive(const std::vector<std::vector<double>>& joint,
                                  const std::vector<double>& rates) {
    double corner = 0.0;
    for (size_t e = 0; e < rates.size(); ++e)
        corner += oracle_marginal(joint, static_cast<int>(e)) *
                  oracle_conditional(joint, static_cast<int>(e), static_cast<int>(e)) * rates[e];
    return corner;
}

inline std::vector<std::vector<double>> binary_joint(double q) {
    return {{0.2 * q, 0.2 * (1.0 - q)}, {0.8 * (1.0 - q), 0.8 * q}};
}

// Direction-sampled support of a convex polygon given by its vertices plus
// the origin: max over vertices of the dot product.
inline double polygon_support(const std::vector<std::array<double, 2>>& verts, double t1,
                              double t2) {
    double best = 0.0;
    for (const auto& v : verts) best = std::max(best, v[0] * t1 + v[1] * t2);
    return best;
}

// Bottleneck-optimum oracle for the exploration design: bisection on the
// bottleneck level t, feasible iff |S| t <= gamma and t <= min marginal.
inline double bisect_bottleneck(const std::vector<double>& marginal, double gamma) {
    double pmin = marginal[0];
    for (double v : marginal) pmin = std::min(pmin, v);
    auto feasible = [&](double t) {
        return static_cast<double>(marginal.size()) * t <= gamma && t <= pmin;
    };
    double lo = 0.0, hi = 1.0;
    for (int i = 0; i < 200; ++i) {
        double mid = 0.5 * (lo + hi);
        if (feasible(mid)) lo = mid;
        else hi = mid;
    }
    return lo;
}

}  // namespace fixtures
