#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "csisched/channel.hpp"
#include "csisched/policy.hpp"
#include "csisched/rng.hpp"

namespace csisched {

// Optimized probing probabilities x^i_chat of the min-max exploration
// design: user i is explored with probability x^i_chat / N in a slot whose
// estimate reads chat, chosen to maximize the slowest per-estimate learning
// rate eta = P(C_hat = chat) * x / N subject to sum_chat eta = gamma / N.
struct ExplorationPlan {
    double gamma = 0.0;
    int n_users = 0;
    std::vector<std::vector<double>> x;         // [user][est]
    std::vector<std::vector<double>> marginal;  // [user][est], P(C_hat = chat)

    double eta(int user, int est) const {
        return marginal[static_cast<size_t>(user)][static_cast<size_t>(est)] *
               x[static_cast<size_t>(user)][static_cast<size_t>(est)] / n_users;
    }

    std::string to_json() const;
};

// Water-filling-like solver for the per-user min-max problem: estimates are
// processed in ascending marginal order; while an estimate cannot reach the
// equal share of the remaining budget even at x = 1 it is pinned at 1, then
// the rest of the budget is split for a uniform learning rate.
ExplorationPlan solve_exploration_plan(const std::vector<std::vector<double>>& marginals,
                                       double gamma);

// Closed-form optimum of the bottleneck learning rate for one user:
// min(gamma / |S|, min_chat P(C_hat = chat)).
double bottleneck_oracle(std::span<const double> marginal, double gamma);

// Running exploration counters: per (user, estimate, rate) the number of
// probes and the number of successes, plus the cached per-(user, estimate)
// empirical rate choice consumed by the learning scheduler.
class EmpiricalStats {
public:
    EmpiricalStats(int n_users, const RateSpace& rates);

    uint64_t trials(int user, int est, int rate_idx) const { return trials_[index(user, est, rate_idx)]; }
    uint64_t wins(int user, int est, int rate_idx) const { return wins_[index(user, est, rate_idx)]; }
    uint64_t slot() const { return slot_; }
    void advance_slot() { ++slot_; }

    // Empirical P(C >= r | C_hat = chat); before the first probe of a pair,
    // the prior of a channel uniform over the rate space: (|S| - k + 1)/|S|
    // with k the 1-based rank of the rate.
    double success(int user, int est, int rate_idx) const;

    void record(int user, int est, int rate_idx, bool success);

    // argmax_r success * rate over the empirical values, smallest rate on
    // ties; monotonicity in r is not assumed or repaired
    RateChoice best_choice(int user, int est) const {
        return best_[pair_index(user, est)];
    }

    int n_users() const { return n_users_; }
    const RateSpace& rates() const { return rates_; }

private:
    size_t index(int user, int est, int rate_idx) const {
        return (static_cast<size_t>(user) * static_cast<size_t>(s_) + static_cast<size_t>(est)) *
                   static_cast<size_t>(s_) +
               static_cast<size_t>(rate_idx);
    }
    size_t pair_index(int user, int est) const {
        return static_cast<size_t>(user) * static_cast<size_t>(s_) + static_cast<size_t>(est);
    }
    void recompute_best(int user, int est);

    int n_users_;
    int s_;
    RateSpace rates_;
    std::vector<uint64_t> trials_;
    std::vector<uint64_t> wins_;
    std::vector<RateChoice> best_;
    uint64_t slot_ = 0;
};

// Probe instruction: spend the slot exploring one user at one rate.
struct ExploreAction {
    int user = -1;
    int rate_idx = -1;
};

// Either a probe instruction or a (possibly idle) transmission decision.
struct SlotAction {
    std::optional<ExploreAction> explore;
    Decision decision;

    bool is_explore() const { return explore.has_value(); }
};

// Step (1)+(2) of the learning policy: explore user i with probability
// x^i_chat / N (mutually exclusive across users), probe rate uniform over S;
// otherwise the slot is a transmission slot.
std::optional<ExploreAction> decide_slot(const ExplorationPlan& plan, std::span<const int> est_idx,
                                         const RateSpace& rates, Rng& rng);

// Full learning policy slot: decide_slot, then on transmission slots the
// max-weight rule over the empirical rate choices.
SlotAction schedule_learning(const ExplorationPlan& plan, const EmpiricalStats& es,
                             std::span<const int64_t> queues, std::span<const int> est_idx,
                             Rng& rng);

// ---- Law-of-Iterated-Logarithm diagnostic ----

// Snapshot of one (user, estimate, rate) counter at a sample time.
struct LilPoint {
    uint64_t t = 0;
    int user = 0;
    int est_idx = 0;
    int rate_idx = 0;
    uint64_t n = 0;
    uint64_t s = 0;
};

struct LilRow {
    uint64_t t = 0;
    int user = 0;
    int est_idx = 0;
    int rate_idx = 0;
    double normalized = 0.0;  // (phat - p) / envelope, signed
    double envelope = 0.0;    // sqrt(2 loglog(eta t/|S|) / (eta t/|S|)) * sigma
};

// Envelope value; NaN when eta*t/|S| <= e (loglog undefined or nonpositive).
double lil_envelope(double eta_over_s_times_t, double p_true);

// Normalized deviations of the empirical conditionals against a known truth
// table. Points with no samples yet or with an undefined envelope are
// skipped; a zero-variance truth (p in {0,1}) yields 0 when the numerator is
// exactly 0 and infinity otherwise.
std::vector<LilRow> lil_diagnostic(std::span<const LilPoint> history, const SuccessTable& truth,
                                   const ExplorationPlan& plan);

// Running maximum of |normalized deviation| per (user, estimate, rate),
// keyed as (user * |S| + est) * |S| + rate.
struct LilMax {
    size_t key = 0;
    double max_abs = 0.0;
    uint64_t last_t = 0;
};
std::vector<LilMax> lil_running_max(std::span<const LilRow> rows, int n_states);

// Exploration-only simulation: estimates drawn per slot, probes per the
// plan, counters snapshotted at roughly log-spaced checkpoint times.
// Returns one LilPoint per (pair, checkpoint).
std::vector<LilPoint> run_exploration_trace(const JointStatistics& js, const ExplorationPlan& plan,
                                            uint64_t horizon, int checkpoints, Rng& rng);

// Fast single-pair trace: the per-slot process marginalizes, for one
// (user, estimate, rate) triple, to i.i.d. Bernoulli(q) sampling with
// success probability p, so checkpoint counts can be drawn binomially
// instead of looping over slots. Exact in distribution.
std::vector<LilPoint> run_pair_trace_fast(double q_per_slot, double p_true, uint64_t horizon,
                                          int checkpoints, Rng& rng);

}  // namespace csisched
