#pragma once

#include <cstdint>
#include <deque>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "csisched/channel.hpp"
#include "csisched/learner.hpp"
#include "csisched/policy.hpp"
#include "csisched/region.hpp"

namespace csisched {

// Exogenous arrival process; the realized per-slot mean equals lambda.
// bernoulli_batch delivers `batch` packets with probability lambda/batch
// (batch chosen automatically when 0), poisson draws Poisson(lambda).
struct ArrivalSpec {
    enum class Kind { bernoulli_batch, poisson };

    Kind kind = Kind::bernoulli_batch;
    std::vector<double> lambda;  // packets/slot per user, in rate units
    int batch = 0;               // rate units; 0 = auto
};

struct PolicyPsi {};
struct PolicyNaive {};
struct PolicyLearning {
    double gamma = 0.2;
};
// Randomized stationary reference policy parameterized by achievability
// weights: at estimate vector chat, activate user i with probability
// alpha_i^chat and transmit at the rate-adapted rate.
struct PolicyRandomized {
    AchievabilityWeights weights;
};

using PolicySpec = std::variant<PolicyPsi, PolicyNaive, PolicyLearning, PolicyRandomized>;

struct Scenario {
    JointStatistics stats;
    PolicySpec policy;
    ArrivalSpec arrivals;
    bool explore_serves = false;  // alternative semantics: probes drain queues
    int stride = 0;               // metric sampling stride in slots; 0 = auto
};

// Discrete-time queue bank implementing the head-of-line retransmission
// dynamics: a transmission at a rate above the actual channel fails and
// retains the head packet; a successful one departs min(rate, Q) packets.
// All packet accounting is integral after scaling rates by `scale`.
class QueueEngine {
public:
    QueueEngine(int n_users, int64_t scale, const RateSpace& rates);

    // Applies one slot: service according to the action and channel draw,
    // then arrivals (in scaled packets), then advances the slot clock.
    void step(const SlotAction& action, const ChannelDraw& draw,
              std::span<const int64_t> arrivals);

    int64_t queue_len(int user) const { return users_[static_cast<size_t>(user)].qlen; }
    int64_t slot() const { return slot_; }

    // cumulative counters
    int64_t arrivals_total(int user) const { return users_[static_cast<size_t>(user)].arrivals; }
    int64_t departures_total(int user) const { return users_[static_cast<size_t>(user)].departures; }
    int64_t outages_total(int user) const { return users_[static_cast<size_t>(user)].outages; }
    int64_t attempts_total(int user) const { return users_[static_cast<size_t>(user)].attempts; }
    int64_t successes_total(int user) const { return users_[static_cast<size_t>(user)].successes; }
    int64_t explore_slots() const { return explore_slots_; }
    int64_t explore_slots_user(int user) const { return users_[static_cast<size_t>(user)].explored; }
    int64_t delay_sum() const { return delay_sum_; }
    int64_t tx_attributed() const { return tx_attributed_; }

    int64_t scale() const { return scale_; }
    bool explore_serves = false;

private:
    struct UserState {
        std::deque<std::pair<int64_t, int64_t>> fifo;  // (arrival slot, packet count)
        int64_t qlen = 0;
        int64_t arrivals = 0;
        int64_t departures = 0;
        int64_t outages = 0;
        int64_t attempts = 0;
        int64_t successes = 0;
        int64_t explored = 0;
        int64_t head_fails = 0;  // failed attempts of the current head packet
    };

    void serve(int user, int rate_idx, bool success);

    int64_t scale_;
    std::vector<int64_t> scaled_rate_;
    std::vector<UserState> users_;
    int64_t slot_ = 0;
    int64_t explore_slots_ = 0;
    int64_t delay_sum_ = 0;       // sum of departure delays, slots
    int64_t tx_attributed_ = 0;   // transmissions attributed to departed packets
};

// Per-slot inspection hook for tests and diagnostics. Queues and estimates
// are the values the policy saw; `empirical` is non-null for the learning
// policy.
struct SlotView {
    uint64_t t = 0;
    const SlotAction& action;
    std::span<const int64_t> queues;  // scaled packets
    std::span<const int> est_idx;
    const ChannelDraw& draw;
    const EmpiricalStats* empirical = nullptr;
};
using SlotObserver = std::function<void(const SlotView&)>;

// Replication-averaged (or single-run) metric time series. Ratio metrics
// carry the mean of per-replication values, its standard error, and the
// count of replications where the value was defined. Queue lengths are in
// original (unscaled) packet units.
struct RatioSeries {
    std::vector<double> mean;
    std::vector<double> se;
    std::vector<int> defined;
};

struct Metrics {
    uint64_t horizon = 0;
    int stride = 0;
    int n_users = 0;
    int64_t scale = 1;
    int n_reps = 1;

    std::vector<double> sample_slots;             // end-of-window slot numbers
    std::vector<std::vector<double>> queue_mean;  // [user][point]
    std::vector<std::vector<double>> queue_se;
    std::vector<double> total_queue_mean;
    std::vector<double> total_queue_se;

    RatioSeries succ_cum, succ_win;    // successes / attempts
    RatioSeries retx_cum, retx_win;    // transmissions / departed packet
    RatioSeries delay_cum, delay_win;  // slots / departed packet
    RatioSeries explore_cum;           // exploration slots / slots

    // final totals, averaged over replications, original packet units
    std::vector<double> fin_arrivals;
    std::vector<double> fin_departures;
    std::vector<double> fin_queue;
};

std::string metrics_csv(const Metrics& m);

Metrics run(const Scenario& scenario, uint64_t horizon, uint64_t seed,
            const SlotObserver* observer = nullptr);

// Independent replications with seeds base_seed, base_seed+1, ...; the
// pointwise aggregation is performed in replication order so the result does
// not depend on the worker count (capped by CSI_SCHED_THREADS).
Metrics run_replications(const Scenario& scenario, uint64_t horizon, int n_reps,
                         uint64_t base_seed);

enum class Stability { stable, unstable, inconclusive };

// Empirical stability proxy on the total-queue series: compares the mean
// over the [40%, 60%] and [80%, 100%] horizon windows and requires a
// significantly positive fitted slope before declaring instability.
struct StabilityConfig {
    double w1_begin = 0.40, w1_end = 0.60;
    double w2_begin = 0.80, w2_end = 1.00;
    double grow_ratio = 1.5;  // later/earlier mean above this => candidate unstable
    double flat_ratio = 1.2;  // later mean within this factor => stable
    double slope_z = 3.0;     // slope significance in standard errors
    int min_points = 10;
};

Stability detect_stability(const Metrics& m, const StabilityConfig& cfg = {});

const char* stability_name(Stability s);

}  // namespace csisched
