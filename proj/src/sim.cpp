#include "csisched/sim.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <sstream>
#include <stdexcept>
#include <thread>

namespace csisched {

QueueEngine::QueueEngine(int n_users, int64_t scale, const RateSpace& rates) : scale_(scale) {
    if (n_users < 1) throw std::invalid_argument("need at least one user");
    if (scale < 1) throw std::invalid_argument("scale must be positive");
    users_.resize(static_cast<size_t>(n_users));
    scaled_rate_.resize(static_cast<size_t>(rates.size()));
    for (int r = 0; r < rates.size(); ++r) {
        double v = rates.rate(r) * static_cast<double>(scale);
        int64_t iv = static_cast<int64_t>(std::llround(v));
        if (std::fabs(v - static_cast<double>(iv)) > 1e-6 || iv < 1)
            throw std::invalid_argument("scale does not make the rate space integral");
        scaled_rate_[static_cast<size_t>(r)] = iv;
    }
}

void QueueEngine::serve(int user, int rate_idx, bool success) {
    UserState& u = users_[static_cast<size_t>(user)];
    u.attempts++;
    if (!success) {
        u.outages++;
        u.head_fails++;
        return;
    }
    u.successes++;
    int64_t served = std::min(scaled_rate_[static_cast<size_t>(rate_idx)], u.qlen);
    if (served <= 0) return;
    tx_attributed_ += u.head_fails + served;
    u.head_fails = 0;
    u.departures += served;
    u.qlen -= served;
    int64_t remaining = served;
    while (remaining > 0) {
        auto& front = u.fifo.front();
        int64_t take = std::min(front.second, remaining);
        delay_sum_ += take * (slot_ - front.first);
        front.second -= take;
        remaining -= take;
        if (front.second == 0) u.fifo.pop_front();
    }
}

void QueueEngine::step(const SlotAction& action, const ChannelDraw& draw,
                       std::span<const int64_t> arrivals) {
    if (action.is_explore()) {
        explore_slots_++;
        users_[static_cast<size_t>(action.explore->user)].explored++;
        if (explore_serves) {
            // alternative semantics: a successful probe also carries data
            int user = action.explore->user;
            if (users_[static_cast<size_t>(user)].qlen > 0)
                serve(user, action.explore->rate_idx, draw.meets(user, action.explore->rate_idx));
        }
    } else if (action.decision.transmit) {
        serve(action.decision.user, action.decision.rate_idx,
              draw.meets(action.decision.user, action.decision.rate_idx));
    }
    for (size_t i = 0; i < users_.size(); ++i) {
        int64_t a = arrivals[i];
        if (a > 0) {
            users_[i].fifo.emplace_back(slot_, a);
            users_[i].qlen += a;
            users_[i].arrivals += a;
        }
    }
    slot_++;
}

namespace {

// cumulative counter snapshots of one replication
struct RawSeries {
    std::vector<double> sample_slots;
    std::vector<std::vector<int64_t>> queue;  // [user][point], scaled packets
    std::vector<int64_t> attempts, succ, departures, delay_sum, retx_sum, explore;
    std::vector<int64_t> fin_arrivals, fin_departures, fin_queue;  // per user
};

struct ArrivalSampler {
    ArrivalSpec::Kind kind;
    std::vector<double> prob;      // bernoulli-batch per-slot probability
    std::vector<int64_t> batch;    // scaled batch size
    std::vector<double> mean;      // scaled poisson mean

    ArrivalSampler(const ArrivalSpec& spec, int n_users, int64_t scale) : kind(spec.kind) {
        if (static_cast<int>(spec.lambda.size()) != n_users)
            throw std::invalid_argument("arrival lambda vector must have one entry per user");
        prob.resize(spec.lambda.size());
        batch.resize(spec.lambda.size());
        mean.resize(spec.lambda.size());
        for (size_t i = 0; i < spec.lambda.size(); ++i) {
            double lam = spec.lambda[i];
            if (!(lam >= 0.0)) throw std::invalid_argument("arrival rates must be nonnegative");
            double lam_s = lam * static_cast<double>(scale);
            mean[i] = lam_s;
            int64_t b;
            if (spec.batch > 0) {
                b = static_cast<int64_t>(spec.batch) * scale;
                if (lam_s > static_cast<double>(b) + 1e-12)
                    throw std::invalid_argument("bernoulli batch smaller than the arrival mean");
            } else {
                b = std::max<int64_t>(1, static_cast<int64_t>(std::ceil(lam_s - 1e-12)));
            }
            batch[i] = b;
            prob[i] = lam_s / static_cast<double>(b);
        }
    }

    void draw(Rng& rng, std::vector<int64_t>& out) const {
        for (size_t i = 0; i < prob.size(); ++i) {
            if (kind == ArrivalSpec::Kind::bernoulli_batch)
                out[i] = rng.bernoulli(prob[i]) ? batch[i] : 0;
            else
                out[i] = rng.poisson(mean[i]);
        }
    }
};

int resolve_stride(uint64_t horizon, int requested) {
    if (requested > 0) return requested;
    return static_cast<int>(std::max<uint64_t>(1, horizon / 1000));
}

int thread_cap() {
    if (const char* env = std::getenv("CSI_SCHED_THREADS")) {
        int v = std::atoi(env);
        if (v > 0) return v;
    }
    unsigned hw = std::thread::hardware_concurrency();
    return hw > 0 ? static_cast<int>(hw) : 1;
}

RawSeries run_raw(const Scenario& scenario, uint64_t horizon, uint64_t seed,
                  const SlotObserver* observer) {
    if (horizon < 1) throw std::invalid_argument("horizon must be at least 1");
    const JointStatistics& js = scenario.stats;
    const int n_users = js.n_users();
    const RateSpace& rates = js.rate_space();
    const int64_t scale = rates.integer_scale();
    const int stride = resolve_stride(horizon, scenario.stride);

    Rng rng(seed);
    ChannelSampler sampler(js);
    QueueEngine engine(n_users, scale, rates);
    engine.explore_serves = scenario.explore_serves;
    ArrivalSampler arrivals(scenario.arrivals, n_users, scale);

    SuccessTable st = derive_success_table(js);
    // rate choices of the statistics-aware policies, fixed per (user, est)
    std::vector<std::vector<RateChoice>> psi_cache(static_cast<size_t>(n_users));
    for (int u = 0; u < n_users; ++u) {
        psi_cache[static_cast<size_t>(u)].resize(static_cast<size_t>(rates.size()));
        for (int e = 0; e < rates.size(); ++e)
            if (st.defined(u, e))
                psi_cache[static_cast<size_t>(u)][static_cast<size_t>(e)] = rate_adapt(st, u, e);
    }

    const PolicyLearning* learning = std::get_if<PolicyLearning>(&scenario.policy);
    const PolicyRandomized* randomized = std::get_if<PolicyRandomized>(&scenario.policy);
    std::optional<ExplorationPlan> plan;
    std::optional<EmpiricalStats> es;
    if (learning) {
        std::vector<std::vector<double>> marginals;
        marginals.reserve(static_cast<size_t>(n_users));
        for (int u = 0; u < n_users; ++u) marginals.push_back(js.marginals(u));
        plan = solve_exploration_plan(marginals, learning->gamma);
        es.emplace(n_users, rates);
    }

    RawSeries out;
    size_t n_points = horizon / static_cast<uint64_t>(stride);
    out.sample_slots.reserve(n_points);
    out.queue.assign(static_cast<size_t>(n_users), {});
    for (auto& q : out.queue) q.reserve(n_points);

    ChannelDraw draw;
    std::vector<int64_t> arr(static_cast<size_t>(n_users));
    std::vector<int64_t> queues(static_cast<size_t>(n_users));
    std::vector<RateChoice> choices(static_cast<size_t>(n_users));
    SlotAction action;

    for (uint64_t t = 0; t < horizon; ++t) {
        sampler.draw(rng, draw);
        arrivals.draw(rng, arr);
        for (int u = 0; u < n_users; ++u) queues[static_cast<size_t>(u)] = engine.queue_len(u);

        action.explore.reset();
        if (learning) {
            action = schedule_learning(*plan, *es, queues, draw.est_idx, rng);
        } else if (randomized) {
            // flatten the estimate vector, user 0 most significant
            size_t term = 0;
            for (int u = 0; u < n_users; ++u)
                term = term * static_cast<size_t>(rates.size()) +
                       static_cast<size_t>(draw.est_idx[static_cast<size_t>(u)]);
            double x = rng.uniform();
            double acc = 0.0;
            action.decision = Decision::idle();
            for (int u = 0; u < n_users; ++u) {
                acc += randomized->weights.at(term, u);
                if (x < acc) {
                    const RateChoice& c =
                        psi_cache[static_cast<size_t>(u)]
                                 [static_cast<size_t>(draw.est_idx[static_cast<size_t>(u)])];
                    if (queues[static_cast<size_t>(u)] > 0 && c.rate_idx >= 0) {
                        action.decision.transmit = true;
                        action.decision.user = u;
                        action.decision.rate_idx = c.rate_idx;
                        action.decision.rate = rates.rate(c.rate_idx);
                        action.decision.weight =
                            static_cast<double>(queues[static_cast<size_t>(u)]) * c.value;
                    }
                    break;
                }
            }
        } else if (std::holds_alternative<PolicyNaive>(scenario.policy)) {
            action.decision = schedule_naive(rates, queues, draw.est_idx);
        } else {
            for (int u = 0; u < n_users; ++u)
                choices[static_cast<size_t>(u)] =
                    psi_cache[static_cast<size_t>(u)]
                             [static_cast<size_t>(draw.est_idx[static_cast<size_t>(u)])];
            action.decision = schedule_max_weight(rates, queues, choices);
        }

        if (observer && *observer) {
            SlotView view{t, action, queues, draw.est_idx, draw, es ? &*es : nullptr};
            (*observer)(view);
        }

        engine.step(action, draw, arr);
        if (learning) {
            es->advance_slot();
            if (action.is_explore()) {
                int u = action.explore->user;
                es->record(u, draw.est_idx[static_cast<size_t>(u)], action.explore->rate_idx,
                           draw.meets(u, action.explore->rate_idx));
            }
        }

        if ((t + 1) % static_cast<uint64_t>(stride) == 0) {
            out.sample_slots.push_back(static_cast<double>(t + 1));
            int64_t att = 0, suc = 0, dep = 0;
            for (int u = 0; u < n_users; ++u) {
                out.queue[static_cast<size_t>(u)].push_back(engine.queue_len(u));
                att += engine.attempts_total(u);
                suc += engine.successes_total(u);
                dep += engine.departures_total(u);
            }
            out.attempts.push_back(att);
            out.succ.push_back(suc);
            out.departures.push_back(dep);
            out.delay_sum.push_back(engine.delay_sum());
            out.retx_sum.push_back(engine.tx_attributed());
            out.explore.push_back(engine.explore_slots());
        }
    }
    for (int u = 0; u < n_users; ++u) {
        out.fin_arrivals.push_back(engine.arrivals_total(u));
        out.fin_departures.push_back(engine.departures_total(u));
        out.fin_queue.push_back(engine.queue_len(u));
    }
    return out;
}

void accumulate_ratio(RatioSeries& rs, std::vector<double>& m2, size_t point, double num,
                      double den) {
    if (den <= 0.0) return;
    double v = num / den;
    rs.defined[point] += 1;
    double d = v - rs.mean[point];
    rs.mean[point] += d / rs.defined[point];
    m2[point] += d * (v - rs.mean[point]);
}

struct RatioAccum {
    RatioSeries series;
    std::vector<double> m2;

    explicit RatioAccum(size_t n) : m2(n, 0.0) {
        series.mean.assign(n, 0.0);
        series.se.assign(n, 0.0);
        series.defined.assign(n, 0);
    }

    void finish() {
        for (size_t i = 0; i < m2.size(); ++i) {
            int n = series.defined[i];
            series.se[i] = n > 1 ? std::sqrt(m2[i] / (n - 1) / n) : 0.0;
        }
    }
};

Metrics aggregate(const std::vector<RawSeries>& reps, const Scenario& scenario, uint64_t horizon,
                  int stride, int n_users, int64_t scale) {
    (void)scenario;
    Metrics m;
    m.horizon = horizon;
    m.stride = stride;
    m.n_users = n_users;
    m.scale = scale;
    m.n_reps = static_cast<int>(reps.size());
    const size_t n_points = reps.front().sample_slots.size();
    m.sample_slots = reps.front().sample_slots;
    m.queue_mean.assign(static_cast<size_t>(n_users), std::vector<double>(n_points, 0.0));
    m.queue_se.assign(static_cast<size_t>(n_users), std::vector<double>(n_points, 0.0));
    m.total_queue_mean.assign(n_points, 0.0);
    m.total_queue_se.assign(n_points, 0.0);

    std::vector<std::vector<double>> q_m2(static_cast<size_t>(n_users),
                                          std::vector<double>(n_points, 0.0));
    std::vector<double> tot_m2(n_points, 0.0);

    RatioAccum succ_cum(n_points), succ_win(n_points), retx_cum(n_points), retx_win(n_points),
        delay_cum(n_points), delay_win(n_points), explore_cum(n_points);

    m.fin_arrivals.assign(static_cast<size_t>(n_users), 0.0);
    m.fin_departures.assign(static_cast<size_t>(n_users), 0.0);
    m.fin_queue.assign(static_cast<size_t>(n_users), 0.0);

    int rep_i = 0;
    for (const auto& rep : reps) {
        ++rep_i;
        for (size_t p = 0; p < n_points; ++p) {
            double tot = 0.0;
            for (int u = 0; u < n_users; ++u) {
                double v = static_cast<double>(rep.queue[static_cast<size_t>(u)][p]) /
                           static_cast<double>(scale);
                tot += v;
                double d = v - m.queue_mean[static_cast<size_t>(u)][p];
                m.queue_mean[static_cast<size_t>(u)][p] += d / rep_i;
                q_m2[static_cast<size_t>(u)][p] +=
                    d * (v - m.queue_mean[static_cast<size_t>(u)][p]);
            }
            double dt = tot - m.total_queue_mean[p];
            m.total_queue_mean[p] += dt / rep_i;
            tot_m2[p] += dt * (tot - m.total_queue_mean[p]);

            auto delta = [&](const std::vector<int64_t>& c) {
                return static_cast<double>(p == 0 ? c[p] : c[p] - c[p - 1]);
            };
            accumulate_ratio(succ_cum.series, succ_cum.m2, p, static_cast<double>(rep.succ[p]),
                             static_cast<double>(rep.attempts[p]));
            accumulate_ratio(succ_win.series, succ_win.m2, p, delta(rep.succ),
                             delta(rep.attempts));
            accumulate_ratio(retx_cum.series, retx_cum.m2, p, static_cast<double>(rep.retx_sum[p]),
                             static_cast<double>(rep.departures[p]));
            accumulate_ratio(retx_win.series, retx_win.m2, p, delta(rep.retx_sum),
                             delta(rep.departures));
            accumulate_ratio(delay_cum.series, delay_cum.m2, p,
                             static_cast<double>(rep.delay_sum[p]),
                             static_cast<double>(rep.departures[p]));
            accumulate_ratio(delay_win.series, delay_win.m2, p, delta(rep.delay_sum),
                             delta(rep.departures));
            accumulate_ratio(explore_cum.series, explore_cum.m2, p,
                             static_cast<double>(rep.explore[p]), rep.sample_slots[p]);
        }
        for (int u = 0; u < n_users; ++u) {
            m.fin_arrivals[static_cast<size_t>(u)] +=
                static_cast<double>(rep.fin_arrivals[static_cast<size_t>(u)]) / scale;
            m.fin_departures[static_cast<size_t>(u)] +=
                static_cast<double>(rep.fin_departures[static_cast<size_t>(u)]) / scale;
            m.fin_queue[static_cast<size_t>(u)] +=
                static_cast<double>(rep.fin_queue[static_cast<size_t>(u)]) / scale;
        }
    }
    const int n = static_cast<int>(reps.size());
    for (size_t p = 0; p < n_points; ++p) {
        for (int u = 0; u < n_users; ++u)
            m.queue_se[static_cast<size_t>(u)][p] =
                n > 1 ? std::sqrt(q_m2[static_cast<size_t>(u)][p] / (n - 1) / n) : 0.0;
        m.total_queue_se[p] = n > 1 ? std::sqrt(tot_m2[p] / (n - 1) / n) : 0.0;
    }
    for (auto* acc :
         {&succ_cum, &succ_win, &retx_cum, &retx_win, &delay_cum, &delay_win, &explore_cum})
        acc->finish();
    m.succ_cum = std::move(succ_cum.series);
    m.succ_win = std::move(succ_win.series);
    m.retx_cum = std::move(retx_cum.series);
    m.retx_win = std::move(retx_win.series);
    m.delay_cum = std::move(delay_cum.series);
    m.delay_win = std::move(delay_win.series);
    m.explore_cum = std::move(explore_cum.series);
    for (int u = 0; u < n_users; ++u) {
        m.fin_arrivals[static_cast<size_t>(u)] /= n;
        m.fin_departures[static_cast<size_t>(u)] /= n;
        m.fin_queue[static_cast<size_t>(u)] /= n;
    }
    return m;
}

}  // namespace

Metrics run(const Scenario& scenario, uint64_t horizon, uint64_t seed,
            const SlotObserver* observer) {
    std::vector<RawSeries> reps;
    reps.push_back(run_raw(scenario, horizon, seed, observer));
    return aggregate(reps, scenario, horizon, resolve_stride(horizon, scenario.stride),
                     scenario.stats.n_users(), scenario.stats.rate_space().integer_scale());
}

Metrics run_replications(const Scenario& scenario, uint64_t horizon, int n_reps,
                         uint64_t base_seed) {
    if (n_reps < 1) throw std::invalid_argument("replication count must be at least 1");
    std::vector<RawSeries> reps(static_cast<size_t>(n_reps));
    int workers = std::min(n_reps, thread_cap());
    if (workers <= 1) {
        for (int r = 0; r < n_reps; ++r)
            reps[static_cast<size_t>(r)] =
                run_raw(scenario, horizon, base_seed + static_cast<uint64_t>(r), nullptr);
    } else {
        std::atomic<int> next(0);
        auto work = [&]() {
            for (;;) {
                int r = next.fetch_add(1);
                if (r >= n_reps) return;
                reps[static_cast<size_t>(r)] =
                    run_raw(scenario, horizon, base_seed + static_cast<uint64_t>(r), nullptr);
            }
        };
        std::vector<std::thread> pool;
        pool.reserve(static_cast<size_t>(workers));
        for (int w = 0; w < workers; ++w) pool.emplace_back(work);
        for (auto& th : pool) th.join();
    }
    return aggregate(reps, scenario, horizon, resolve_stride(horizon, scenario.stride),
                     scenario.stats.n_users(), scenario.stats.rate_space().integer_scale());
}

namespace {

double window_mean(const std::vector<double>& v, size_t begin, size_t end) {
    double s = 0.0;
    for (size_t i = begin; i < end; ++i) s += v[i];
    return s / static_cast<double>(end - begin);
}

}  // namespace

Stability detect_stability(const Metrics& m, const StabilityConfig& cfg) {
    const auto& series = m.total_queue_mean;
    const size_t n = series.size();
    size_t a1 = static_cast<size_t>(cfg.w1_begin * n);
    size_t b1 = static_cast<size_t>(cfg.w1_end * n);
    size_t a2 = static_cast<size_t>(cfg.w2_begin * n);
    size_t b2 = static_cast<size_t>(cfg.w2_end * n);
    if (b1 <= a1 + static_cast<size_t>(cfg.min_points) ||
        b2 <= a2 + static_cast<size_t>(cfg.min_points) || b2 > n)
        return Stability::inconclusive;

    double m1 = window_mean(series, a1, b1);
    double m2 = window_mean(series, a2, b2);
    if (m1 <= 1e-12) {
        if (m2 <= 1e-12) return Stability::stable;
    } else if (m2 <= cfg.flat_ratio * m1) {
        return Stability::stable;
    }
    if (m1 > 1e-12 && m2 <= cfg.grow_ratio * m1) return Stability::inconclusive;

    // least-squares slope over the combined span
    size_t lo = a1, hi = b2;
    double sx = 0.0, sy = 0.0;
    size_t cnt = hi - lo;
    for (size_t i = lo; i < hi; ++i) {
        sx += m.sample_slots[i];
        sy += series[i];
    }
    double mx = sx / cnt, my = sy / cnt;
    double sxx = 0.0, sxy = 0.0;
    for (size_t i = lo; i < hi; ++i) {
        double dx = m.sample_slots[i] - mx;
        sxx += dx * dx;
        sxy += dx * (series[i] - my);
    }
    if (sxx <= 0.0) return Stability::inconclusive;
    double slope = sxy / sxx;
    double rss = 0.0;
    for (size_t i = lo; i < hi; ++i) {
        double r = series[i] - my - slope * (m.sample_slots[i] - mx);
        rss += r * r;
    }
    double se = cnt > 2 ? std::sqrt(rss / (cnt - 2) / sxx) : 0.0;
    if (slope > 0.0 && slope >= cfg.slope_z * se) return Stability::unstable;
    return Stability::inconclusive;
}

const char* stability_name(Stability s) {
    switch (s) {
        case Stability::stable: return "stable";
        case Stability::unstable: return "unstable";
        default: return "inconclusive";
    }
}

namespace {

void csv_ratio_rows(std::ostringstream& os, const Metrics& m, const char* name,
                    const RatioSeries& rs) {
    char buf[64];
    for (size_t p = 0; p < m.sample_slots.size(); ++p) {
        if (rs.defined[p] == 0) continue;
        os << static_cast<uint64_t>(m.sample_slots[p]) << ',' << name << ",-1,";
        std::snprintf(buf, sizeof buf, "%.17g", rs.mean[p]);
        os << buf << ',';
        if (m.n_reps > 1) {
            std::snprintf(buf, sizeof buf, "%.17g", rs.se[p]);
            os << buf;
        }
        os << '\n';
    }
}

}  // namespace

std::string metrics_csv(const Metrics& m) {
    std::ostringstream os;
    os << "slot,metric,user,value,stderr\n";
    char buf[64];
    for (size_t p = 0; p < m.sample_slots.size(); ++p) {
        for (int u = 0; u < m.n_users; ++u) {
            os << static_cast<uint64_t>(m.sample_slots[p]) << ",queue_len," << u << ',';
            std::snprintf(buf, sizeof buf, "%.17g", m.queue_mean[static_cast<size_t>(u)][p]);
            os << buf << ',';
            if (m.n_reps > 1) {
                std::snprintf(buf, sizeof buf, "%.17g", m.queue_se[static_cast<size_t>(u)][p]);
                os << buf;
            }
            os << '\n';
        }
        os << static_cast<uint64_t>(m.sample_slots[p]) << ",queue_len,-1,";
        std::snprintf(buf, sizeof buf, "%.17g", m.total_queue_mean[p]);
        os << buf << ',';
        if (m.n_reps > 1) {
            std::snprintf(buf, sizeof buf, "%.17g", m.total_queue_se[p]);
            os << buf;
        }
        os << '\n';
    }
    csv_ratio_rows(os, m, "success_prob_cum", m.succ_cum);
    csv_ratio_rows(os, m, "success_prob_win", m.succ_win);
    csv_ratio_rows(os, m, "retx_per_packet_cum", m.retx_cum);
    csv_ratio_rows(os, m, "retx_per_packet_win", m.retx_win);
    csv_ratio_rows(os, m, "delay_cum", m.delay_cum);
    csv_ratio_rows(os, m, "delay_win", m.delay_win);
    csv_ratio_rows(os, m, "explore_frac_cum", m.explore_cum);
    return os.str();
}

}  // namespace csisched
