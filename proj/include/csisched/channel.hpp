#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "csisched/rate_space.hpp"
#include "csisched/rng.hpp"

namespace csisched {

// Per-user joint probability table P(C = c, C_hat = c_hat) over a finite
// rate space, i.i.d. across slots and independent across users.
//
// Rows are actual-channel levels, columns are estimate indices. Level 0 is a
// reserved "below the lowest rate" actual state (no transmission can
// succeed); analytically constructed tables leave it empty, the Rayleigh/MMSE
// generator populates it for continuous draws that quantize under the lowest
// level. Level l >= 1 corresponds to rate index l - 1.
class JointStatistics {
public:
    // Analytic construction from per-user |S| x |S| tables indexed
    // [actual rate idx][estimate idx]; sub-minimum row left empty.
    static JointStatistics from_tables(RateSpace rates,
                                       const std::vector<std::vector<std::vector<double>>>& tables,
                                       double tol = 1e-12);

    // Construction including the sub-minimum actual row: per-user tables are
    // (|S|+1) x |S|, row 0 = below-minimum actual state.
    static JointStatistics from_levels(RateSpace rates,
                                       std::vector<std::vector<double>> level_tables,
                                       double tol = 1e-12);

    int n_users() const { return static_cast<int>(users_.size()); }
    const RateSpace& rate_space() const { return rates_; }
    int n_states() const { return rates_.size(); }

    // P(actual level = level, estimate idx = est) for one user.
    // level ranges over 0..|S| (0 = below minimum), est over 0..|S|-1.
    double prob(int user, int level, int est) const {
        return users_[static_cast<size_t>(user)]
                     [static_cast<size_t>(level * rates_.size() + est)];
    }

    // P(estimate idx = est) for one user.
    double marginal(int user, int est) const;

    std::vector<double> marginals(int user) const;

    void validate(double tol) const;

    std::string to_json() const;
    static JointStatistics from_json(const std::string& text);

private:
    JointStatistics(RateSpace rates, std::vector<std::vector<double>> users)
        : rates_(std::move(rates)), users_(std::move(users)) {}

    RateSpace rates_;
    // per user, (|S|+1) x |S| row-major
    std::vector<std::vector<double>> users_;
};

// Conditional success probabilities P(C >= r | C_hat = c_hat) together with
// the estimate marginals; the quantity every scheduling policy consumes.
// Estimates with zero marginal are excluded from the domain.
struct SuccessTable {
    struct User {
        std::vector<double> marginal;    // per estimate idx
        std::vector<double> p;           // |S| x |S| row-major, [est][rate]
        std::vector<uint8_t> in_domain;  // marginal > 0
    };

    RateSpace rates;
    std::vector<User> users;

    int n_users() const { return static_cast<int>(users.size()); }

    double prob(int user, int est, int rate_idx) const {
        return users[static_cast<size_t>(user)]
            .p[static_cast<size_t>(est * rates.size() + rate_idx)];
    }
    double marginal(int user, int est) const {
        return users[static_cast<size_t>(user)].marginal[static_cast<size_t>(est)];
    }
    bool defined(int user, int est) const {
        return users[static_cast<size_t>(user)].in_domain[static_cast<size_t>(est)] != 0;
    }
};

SuccessTable derive_success_table(const JointStatistics& js);

// Probability of a channel estimate vector: product of the
// per-user estimate marginals.
double estimate_vector_probability(const SuccessTable& st, std::span<const int> est_idx);

// One slot's channel realization per user.
struct ChannelDraw {
    std::vector<int> actual_level;  // 0 = below minimum, l >= 1 -> rate idx l-1
    std::vector<int> est_idx;

    bool meets(int user, int rate_idx) const {
        return actual_level[static_cast<size_t>(user)] >= rate_idx + 1;
    }
};

// Precomputed per-user CDF for fast repeated slot sampling.
class ChannelSampler {
public:
    explicit ChannelSampler(const JointStatistics& js);

    void draw(Rng& rng, ChannelDraw& out) const;
    ChannelDraw draw(Rng& rng) const;

    int n_users() const { return n_users_; }

private:
    int n_users_;
    int n_states_;
    std::vector<std::vector<double>> cdf_;  // per user, flattened (|S|+1) x |S|
};

ChannelDraw sample_slot(const JointStatistics& js, Rng& rng);

// Monte-Carlo joint statistics for i.i.d. Rayleigh fading with an MMSE
// channel estimator: h = h_est + h_err with h_est ~ CN(0, 1-beta) and
// h_err ~ CN(0, beta), rates log(1 + rho |.|^2) quantized down to the rate
// space. Identical statistics for every user.
JointStatistics rayleigh_mmse_statistics(double rho, double beta, const RateSpace& quantizer,
                                         int n_users, int64_t sample_count, Rng& rng);

}  // namespace csisched
