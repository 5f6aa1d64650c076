#pragma once

#include <cstdint>
#include <span>

#include "csisched/channel.hpp"

namespace csisched {

// Rate adaptation result for one user at one estimate: the rate maximizing
// the expected served rate P(C >= r | C_hat) * r, with ties broken toward
// the smallest maximizing rate.
struct RateChoice {
    int rate_idx = -1;
    double value = 0.0;  // p * r at the chosen rate
};

RateChoice rate_adapt(const SuccessTable& st, int user, int est_idx);

// One slot's scheduling outcome. At most one user transmits per slot
// (one-hop interference); `weight` is the queue-weighted expected rate of
// the chosen user, kept for diagnostics.
struct Decision {
    bool transmit = false;
    int user = -1;
    int rate_idx = -1;
    double rate = 0.0;
    double weight = 0.0;

    static Decision idle() { return {}; }
};

// Core max-weight rule over precomputed per-user rate choices: schedules
// argmax_i Q_i * value_i, lowest index on ties, idle when every weight is 0.
Decision schedule_max_weight(const RateSpace& rates, std::span<const int64_t> queues,
                             std::span<const RateChoice> choices);

// Policy that knows the full channel/estimator statistics: rate-adapts each
// user, then schedules the user maximizing the queue-weighted expected rate.
Decision schedule_psi(const SuccessTable& st, std::span<const int64_t> queues,
                      std::span<const int> est_idx);

// Estimate-trusting policy: treats the estimate as the actual channel state,
// schedules argmax_i Q_i * c_hat_i and transmits at the estimated rate.
Decision schedule_naive(const RateSpace& rates, std::span<const int64_t> queues,
                        std::span<const int> est_idx);

}  // namespace csisched
