#include "csisched/learner.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "json.hpp"

namespace csisched {

std::string ExplorationPlan::to_json() const {
    nlohmann::json doc;
    doc["gamma"] = gamma;
    nlohmann::json users = nlohmann::json::array();
    for (const auto& xu : x) {
        nlohmann::json entry;
        entry["x"] = xu;
        users.push_back(std::move(entry));
    }
    doc["users"] = std::move(users);
    return doc.dump();
}

ExplorationPlan solve_exploration_plan(const std::vector<std::vector<double>>& marginals,
                                       double gamma) {
    if (!(gamma > 0.0 && gamma < 1.0))
        throw std::invalid_argument("gamma must lie in (0, 1)");
    if (marginals.empty()) throw std::invalid_argument("need at least one user");

    ExplorationPlan plan;
    plan.gamma = gamma;
    plan.n_users = static_cast<int>(marginals.size());
    plan.marginal = marginals;
    plan.x.reserve(marginals.size());

    for (const auto& m : marginals) {
        const int s = static_cast<int>(m.size());
        if (s == 0) throw std::invalid_argument("marginal distribution must be nonempty");
        double sum = std::accumulate(m.begin(), m.end(), 0.0);
        if (std::fabs(sum - 1.0) > 1e-9)
            throw std::invalid_argument("marginals must sum to 1");
        for (double v : m)
            if (!(v >= 0.0)) throw std::invalid_argument("marginals must be nonnegative");

        std::vector<int> order(m.size());
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(),
                         [&](int a, int b) { return m[static_cast<size_t>(a)] < m[static_cast<size_t>(b)]; });

        std::vector<double> x(m.size(), 1.0);
        double fixed_mass = 0.0;
        int fixed_count = 0;
        for (int k = 0; k < s; ++k) {
            double pk = m[static_cast<size_t>(order[static_cast<size_t>(k)])];
            double share = (gamma - fixed_mass) / static_cast<double>(s - fixed_count);
            if (pk >= share) {
                for (int l = k; l < s; ++l) {
                    size_t idx = static_cast<size_t>(order[static_cast<size_t>(l)]);
                    x[idx] = share / m[idx];
                }
                break;
            }
            // the estimate cannot reach the uniform share even probed always
            x[static_cast<size_t>(order[static_cast<size_t>(k)])] = 1.0;
            fixed_mass += pk;
            ++fixed_count;
        }
        plan.x.push_back(std::move(x));
    }
    return plan;
}

double bottleneck_oracle(std::span<const double> marginal, double gamma) {
    double pmin = std::numeric_limits<double>::infinity();
    for (double v : marginal) pmin = std::min(pmin, v);
    return std::min(gamma / static_cast<double>(marginal.size()), pmin);
}

EmpiricalStats::EmpiricalStats(int n_users, const RateSpace& rates)
    : n_users_(n_users), s_(rates.size()), rates_(rates) {
    if (n_users < 1) throw std::invalid_argument("need at least one user");
    size_t cells = static_cast<size_t>(n_users_) * static_cast<size_t>(s_) * static_cast<size_t>(s_);
    trials_.assign(cells, 0);
    wins_.assign(cells, 0);
    best_.resize(static_cast<size_t>(n_users_) * static_cast<size_t>(s_));
    for (int u = 0; u < n_users_; ++u)
        for (int e = 0; e < s_; ++e) recompute_best(u, e);
}

double EmpiricalStats::success(int user, int est, int rate_idx) const {
    uint64_t n = trials_[index(user, est, rate_idx)];
    if (n == 0) {
        // uniform-channel prior, rank k = rate_idx + 1
        return static_cast<double>(s_ - rate_idx) / static_cast<double>(s_);
    }
    return static_cast<double>(wins_[index(user, est, rate_idx)]) / static_cast<double>(n);
}

void EmpiricalStats::record(int user, int est, int rate_idx, bool success) {
    if (rate_idx < 0 || rate_idx >= s_)
        throw std::domain_error("record: rate index outside the rate space");
    trials_[index(user, est, rate_idx)]++;
    if (success) wins_[index(user, est, rate_idx)]++;
    recompute_best(user, est);
}

void EmpiricalStats::recompute_best(int user, int est) {
    RateChoice best;
    for (int r = 0; r < s_; ++r) {
        double v = success(user, est, r) * rates_.rate(r);
        if (best.rate_idx < 0 || v > best.value) {
            best.rate_idx = r;
            best.value = v;
        }
    }
    best_[pair_index(user, est)] = best;
}

std::optional<ExploreAction> decide_slot(const ExplorationPlan& plan, std::span<const int> est_idx,
                                         const RateSpace& rates, Rng& rng) {
    if (static_cast<int>(est_idx.size()) != plan.n_users)
        throw std::invalid_argument("decide_slot: estimate vector length mismatch");
    double u = rng.uniform();
    double acc = 0.0;
    for (int i = 0; i < plan.n_users; ++i) {
        int e = est_idx[static_cast<size_t>(i)];
        acc += plan.x[static_cast<size_t>(i)][static_cast<size_t>(e)] / plan.n_users;
        if (u < acc) {
            ExploreAction a;
            a.user = i;
            a.rate_idx = static_cast<int>(rng.uniform_int(static_cast<uint64_t>(rates.size())));
            return a;
        }
    }
    return std::nullopt;
}

SlotAction schedule_learning(const ExplorationPlan& plan, const EmpiricalStats& es,
                             std::span<const int64_t> queues, std::span<const int> est_idx,
                             Rng& rng) {
    SlotAction action;
    action.explore = decide_slot(plan, est_idx, es.rates(), rng);
    if (action.explore) return action;
    std::vector<RateChoice> choices(queues.size());
    for (size_t i = 0; i < queues.size(); ++i)
        choices[i] = es.best_choice(static_cast<int>(i), est_idx[i]);
    action.decision = schedule_max_weight(es.rates(), queues, choices);
    return action;
}

double lil_envelope(double x, double p_true) {
    if (!(x > 2.718281828459045235)) return std::numeric_limits<double>::quiet_NaN();
    double sigma = std::sqrt(p_true * (1.0 - p_true));
    return std::sqrt(2.0 * std::log(std::log(x)) / x) * sigma;
}

std::vector<LilRow> lil_diagnostic(std::span<const LilPoint> history, const SuccessTable& truth,
                                   const ExplorationPlan& plan) {
    std::vector<LilRow> rows;
    rows.reserve(history.size());
    const int s = truth.rates.size();
    for (const auto& pt : history) {
        if (pt.n == 0) continue;
        double eta = plan.eta(pt.user, pt.est_idx);
        double x = eta * static_cast<double>(pt.t) / static_cast<double>(s);
        double p = truth.prob(pt.user, pt.est_idx, pt.rate_idx);
        double env = lil_envelope(x, p);
        if (!(env == env)) continue;  // undefined envelope times are skipped
        double phat = static_cast<double>(pt.s) / static_cast<double>(pt.n);
        LilRow row;
        row.t = pt.t;
        row.user = pt.user;
        row.est_idx = pt.est_idx;
        row.rate_idx = pt.rate_idx;
        row.envelope = env;
        if (env == 0.0) {
            row.normalized = phat == p ? 0.0 : std::numeric_limits<double>::infinity();
        } else {
            row.normalized = (phat - p) / env;
        }
        rows.push_back(row);
    }
    return rows;
}

std::vector<LilMax> lil_running_max(std::span<const LilRow> rows, int n_states) {
    std::vector<LilMax> out;
    auto find = [&](size_t key) -> LilMax& {
        for (auto& m : out)
            if (m.key == key) return m;
        out.push_back(LilMax{key, 0.0, 0});
        return out.back();
    };
    for (const auto& row : rows) {
        size_t key = (static_cast<size_t>(row.user) * static_cast<size_t>(n_states) +
                      static_cast<size_t>(row.est_idx)) *
                         static_cast<size_t>(n_states) +
                     static_cast<size_t>(row.rate_idx);
        LilMax& m = find(key);
        m.max_abs = std::max(m.max_abs, std::fabs(row.normalized));
        m.last_t = row.t;
    }
    return out;
}

namespace {

std::vector<uint64_t> checkpoint_times(uint64_t horizon, int checkpoints) {
    std::vector<uint64_t> times;
    if (checkpoints < 1 || horizon == 0) return times;
    double lo = std::log(8.0);
    double hi = std::log(static_cast<double>(horizon));
    for (int i = 0; i < checkpoints; ++i) {
        double f = checkpoints == 1 ? 1.0 : static_cast<double>(i) / (checkpoints - 1);
        uint64_t t = static_cast<uint64_t>(std::llround(std::exp(lo + f * (hi - lo))));
        t = std::min<uint64_t>(std::max<uint64_t>(t, 1), horizon);
        if (times.empty() || t > times.back()) times.push_back(t);
    }
    if (times.empty() || times.back() != horizon) times.push_back(horizon);
    return times;
}

}  // namespace

std::vector<LilPoint> run_exploration_trace(const JointStatistics& js, const ExplorationPlan& plan,
                                            uint64_t horizon, int checkpoints, Rng& rng) {
    const int s = js.n_states();
    const int n = js.n_users();
    EmpiricalStats es(n, js.rate_space());
    ChannelSampler sampler(js);
    ChannelDraw draw;
    auto times = checkpoint_times(horizon, checkpoints);
    std::vector<LilPoint> out;
    size_t next = 0;
    for (uint64_t t = 1; t <= horizon && next < times.size(); ++t) {
        sampler.draw(rng, draw);
        auto probe = decide_slot(plan, draw.est_idx, js.rate_space(), rng);
        if (probe) {
            bool success = draw.meets(probe->user, probe->rate_idx);
            es.record(probe->user, draw.est_idx[static_cast<size_t>(probe->user)], probe->rate_idx,
                      success);
        }
        if (t == times[next]) {
            for (int u = 0; u < n; ++u)
                for (int e = 0; e < s; ++e)
                    for (int r = 0; r < s; ++r) {
                        LilPoint pt;
                        pt.t = t;
                        pt.user = u;
                        pt.est_idx = e;
                        pt.rate_idx = r;
                        pt.n = es.trials(u, e, r);
                        pt.s = es.wins(u, e, r);
                        out.push_back(pt);
                    }
            ++next;
        }
    }
    return out;
}

std::vector<LilPoint> run_pair_trace_fast(double q_per_slot, double p_true, uint64_t horizon,
                                          int checkpoints, Rng& rng) {
    if (!(q_per_slot > 0.0 && q_per_slot <= 1.0))
        throw std::invalid_argument("per-slot sampling probability must lie in (0, 1]");
    auto times = checkpoint_times(horizon, checkpoints);
    std::vector<LilPoint> out;
    out.reserve(times.size());
    uint64_t t_prev = 0, n = 0, s = 0;
    for (uint64_t t : times) {
        uint64_t slots = t - t_prev;
        int64_t dn = rng.binomial(static_cast<int64_t>(slots), q_per_slot);
        int64_t ds = rng.binomial(dn, p_true);
        n += static_cast<uint64_t>(dn);
        s += static_cast<uint64_t>(ds);
        t_prev = t;
        LilPoint pt;
        pt.t = t;
        pt.n = n;
        pt.s = s;
        out.push_back(pt);
    }
    return out;
}

}  // namespace csisched
