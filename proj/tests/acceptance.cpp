// Acceptance suite: runs every criterion at its stated tolerance and prints
// one pass/fail line per criterion. Exit status is nonzero when any fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "csisched/commands.hpp"
#include "csisched/learner.hpp"
#include "csisched/region.hpp"
#include "csisched/sim.hpp"

#include "fixtures.hpp"

using namespace csisched;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

struct Check {
    bool ok = true;
    std::string detail;

    void require(bool cond, const std::string& what) {
        if (!cond) {
            ok = false;
            if (!detail.empty()) detail += "; ";
            detail += what;
        }
    }
};

std::string fmt(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

// random two-user instance for the stability criteria: |S| in {2, 3},
// integer rates, joint entries bounded away from zero
JointStatistics random_two_user_instance(Rng& rng) {
    int s = 2 + static_cast<int>(rng.uniform_int(2));
    std::vector<double> rates(static_cast<size_t>(s));
    double r = 1.0 + static_cast<double>(rng.uniform_int(2));
    for (int i = 0; i < s; ++i) {
        rates[static_cast<size_t>(i)] = r;
        r += 1.0;
    }
    std::vector<std::vector<std::vector<double>>> tables;
    for (int u = 0; u < 2; ++u) {
        std::vector<std::vector<double>> t(static_cast<size_t>(s),
                                           std::vector<double>(static_cast<size_t>(s)));
        double sum = 0.0;
        for (auto& row : t)
            for (auto& v : row) {
                v = 0.05 + rng.uniform();
                sum += v;
            }
        for (auto& row : t)
            for (auto& v : row) v /= sum;
        tables.push_back(std::move(t));
    }
    return JointStatistics::from_tables(RateSpace(rates), tables, 1e-9);
}

std::vector<double> random_boundary_point(const RegionTerms& region, Rng& rng) {
    double ang = (10.0 + 70.0 * rng.uniform()) * 3.14159265358979323846 / 180.0;
    std::vector<double> dir = {std::cos(ang), std::sin(ang)};
    double s = ray_exit_scale(region, dir);
    return {s * dir[0], s * dir[1]};
}

Stability simulate_verdict(const JointStatistics& js, const PolicySpec& policy,
                           const std::vector<double>& lambda, uint64_t horizon, int reps,
                           uint64_t seed) {
    Scenario sc{js, policy, ArrivalSpec{ArrivalSpec::Kind::bernoulli_batch, lambda, 0}};
    return detect_stability(run_replications(sc, horizon, reps, seed));
}

// ---- criterion 1 ----
bool criterion_1() {
    auto start = Clock::now();
    Check c;
    auto expect_corner = [&](const RegionTerms& r, double want, const char* what) {
        for (int u = 0; u < 2; ++u)
            c.require(std::fabs(r.corner(u) - want) <= 1e-9,
                      std::string(what) + " corner " + fmt(r.corner(u)) + " != " + fmt(want));
    };
    auto st_a = derive_success_table(fixtures::binary_channel(0.8));
    expect_corner(region_full(st_a, 2), 0.8, "0.8-accuracy full");
    expect_corner(region_naive(st_a, 2), 0.704, "0.8-accuracy naive");
    auto st_b = derive_success_table(fixtures::binary_channel(0.4));
    expect_corner(region_full(st_b, 2), 0.8, "0.4-accuracy full");
    expect_corner(region_naive(st_b, 2), 0.432, "0.4-accuracy naive");
    auto st_p = derive_success_table(fixtures::perfect_binary_channel());
    expect_corner(region_full(st_p, 2), 0.84, "perfect-estimator full");

    // independent Bayes/brute-force oracle agreement
    c.require(std::fabs(region_full(st_a, 2).corner(0) -
                        fixtures::oracle_corner(fixtures::binary_joint(0.8), {0.2, 1.0})) <= 1e-12,
              "full corner disagrees with the enumeration oracle");
    c.require(std::fabs(region_naive(st_b, 2).corner(0) -
                        fixtures::oracle_corner_naive(fixtures::binary_joint(0.4), {0.2, 1.0})) <=
                  1e-12,
              "naive corner disagrees with the enumeration oracle");

    double elapsed = seconds_since(start);
    c.require(elapsed < 1.0, "runtime " + fmt(elapsed) + "s exceeds 1s");
    std::printf("criterion 1 (region corners): %s%s [%.2fs]\n", c.ok ? "PASS" : "FAIL",
                c.ok ? "" : (" — " + c.detail).c_str(), elapsed);
    return c.ok;
}

// ---- criterion 2 ----
bool criterion_2() {
    auto start = Clock::now();
    Check c;
    Rng rng(42);
    for (int trial = 0; trial < 1000 && c.ok; ++trial) {
        int s = 2 + static_cast<int>(rng.uniform_int(7));
        std::vector<double> m(static_cast<size_t>(s));
        double sum = 0.0;
        for (auto& v : m) {
            v = 0.005 + rng.uniform();
            sum += v;
        }
        for (auto& v : m) v /= sum;
        double gamma = 0.02 + 0.96 * rng.uniform();
        auto plan = solve_exploration_plan({m}, gamma);

        double budget = 0.0, bottleneck = 1e300, pmin = 1e300;
        bool any_one = false;
        int argmin = 0;
        for (int e = 0; e < s; ++e) {
            double x = plan.x[0][static_cast<size_t>(e)];
            double px = m[static_cast<size_t>(e)] * x;
            budget += px;
            bottleneck = std::min(bottleneck, px);
            if (std::fabs(x - 1.0) <= 1e-12) any_one = true;
            if (m[static_cast<size_t>(e)] < pmin) {
                pmin = m[static_cast<size_t>(e)];
                argmin = e;
            }
            c.require(x > 0.0 && x <= 1.0 + 1e-12, "x outside (0, 1]");
        }
        c.require(std::fabs(budget - gamma) <= 1e-12, "budget sum_e P x != gamma");
        c.require(std::fabs(bottleneck - bottleneck_oracle(m, gamma)) <= 1e-9,
                  "bottleneck != min(gamma/|S|, P_min)");
        if (!any_one) {
            for (int e = 0; e < s; ++e)
                c.require(std::fabs(m[static_cast<size_t>(e)] * plan.x[0][static_cast<size_t>(e)] -
                                    gamma / s) <= 1e-9,
                          "interior solution must equalize P x at gamma/|S|");
        } else {
            c.require(std::fabs(plan.x[0][static_cast<size_t>(argmin)] - 1.0) <= 1e-12,
                      "saturated solution must pin the smallest marginal at x = 1");
        }
    }
    // worked examples, exact up to double rounding
    auto p1 = solve_exploration_plan({{0.5, 0.5}}, 0.2);
    c.require(std::fabs(p1.x[0][0] - 0.2) <= 1e-12 && std::fabs(p1.x[0][1] - 0.2) <= 1e-12,
              "example 1 mismatch");
    auto p2 = solve_exploration_plan({{0.05, 0.95}}, 0.2);
    c.require(std::fabs(p2.x[0][0] - 1.0) <= 1e-12 && std::fabs(p2.x[0][1] - 3.0 / 19.0) <= 1e-12,
              "example 2 mismatch");
    auto p3 = solve_exploration_plan({{0.1, 0.3, 0.6}}, 0.6);
    c.require(std::fabs(p3.x[0][0] - 1.0) <= 1e-12 &&
                  std::fabs(p3.x[0][1] - 5.0 / 6.0) <= 1e-12 &&
                  std::fabs(p3.x[0][2] - 5.0 / 12.0) <= 1e-12,
              "example 3 mismatch");

    double elapsed = seconds_since(start);
    c.require(elapsed < 10.0, "runtime " + fmt(elapsed) + "s exceeds 10s");
    std::printf("criterion 2 (optimizer vs oracle): %s%s [%.2fs]\n", c.ok ? "PASS" : "FAIL",
                c.ok ? "" : (" — " + c.detail).c_str(), elapsed);
    return c.ok;
}

// ---- criteria 3 and 4 ----
bool criterion_3() {
    auto start = Clock::now();
    Check c;
    Rng rng(1001);
    const uint64_t horizon = 200000;
    const int reps = 20;
    for (int inst = 0; inst < 10; ++inst) {
        auto js = random_two_user_instance(rng);
        auto region = region_full(derive_success_table(js), 2);
        auto boundary = random_boundary_point(region, rng);
        std::vector<double> lam_in = {0.9 * boundary[0], 0.9 * boundary[1]};
        std::vector<double> lam_out = {1.1 * boundary[0], 1.1 * boundary[1]};
        uint64_t seed = 50000 + static_cast<uint64_t>(inst) * 100;
        Stability sin_ = simulate_verdict(js, PolicyPsi{}, lam_in, horizon, reps, seed);
        Stability sout = simulate_verdict(js, PolicyPsi{}, lam_out, horizon, reps, seed + 50);
        c.require(sin_ == Stability::stable, "instance " + std::to_string(inst) +
                                                 ": 0.9x boundary detected " +
                                                 stability_name(sin_));
        c.require(sout == Stability::unstable, "instance " + std::to_string(inst) +
                                                   ": 1.1x boundary detected " +
                                                   stability_name(sout));
    }
    double elapsed = seconds_since(start);
    c.require(elapsed < 300.0, "runtime " + fmt(elapsed) + "s exceeds 5min");
    std::printf("criterion 3 (throughput optimality of the max-weight policy): %s%s [%.1fs]\n",
                c.ok ? "PASS" : "FAIL", c.ok ? "" : (" — " + c.detail).c_str(), elapsed);
    return c.ok;
}

bool criterion_4() {
    auto start = Clock::now();
    Check c;
    Rng rng(1001);  // same instance stream as criterion 3
    const uint64_t horizon = 200000;
    const int reps = 20;
    const double gamma = 0.2;
    for (int inst = 0; inst < 10; ++inst) {
        auto js = random_two_user_instance(rng);
        auto region = region_full(derive_success_table(js), 2);
        auto boundary = random_boundary_point(region, rng);
        // 0.9 x (1-gamma)-scaled boundary: stable under learning
        std::vector<double> lam_in = {0.9 * (1.0 - gamma) * boundary[0],
                                      0.9 * (1.0 - gamma) * boundary[1]};
        // 1.1 x scaled boundary = 0.88 x boundary: inside the full region but
        // beyond the learning policy's capacity
        std::vector<double> lam_mid = {1.1 * (1.0 - gamma) * boundary[0],
                                       1.1 * (1.0 - gamma) * boundary[1]};
        uint64_t seed = 90000 + static_cast<uint64_t>(inst) * 100;
        Stability learn_in =
            simulate_verdict(js, PolicyLearning{gamma}, lam_in, horizon, reps, seed);
        Stability learn_mid =
            simulate_verdict(js, PolicyLearning{gamma}, lam_mid, horizon, reps, seed + 40);
        Stability psi_mid = simulate_verdict(js, PolicyPsi{}, lam_mid, horizon, reps, seed + 80);
        c.require(learn_in == Stability::stable,
                  "instance " + std::to_string(inst) + ": learning at 0.9x(1-g) detected " +
                      stability_name(learn_in));
        c.require(learn_mid == Stability::unstable,
                  "instance " + std::to_string(inst) + ": learning at 1.1x(1-g) detected " +
                      stability_name(learn_mid));
        c.require(psi_mid == Stability::stable,
                  "instance " + std::to_string(inst) + ": psi at 1.1x(1-g) detected " +
                      stability_name(psi_mid));
    }
    double elapsed = seconds_since(start);
    c.require(elapsed < 300.0, "runtime " + fmt(elapsed) + "s exceeds 5min");
    std::printf("criterion 4 (learning-policy region (1-gamma)L): %s%s [%.1fs]\n",
                c.ok ? "PASS" : "FAIL", c.ok ? "" : (" — " + c.detail).c_str(), elapsed);
    return c.ok;
}

// ---- criterion 5 ----
JointStatistics agreement_fixture() {
    // two users over S = {1, 2}; every per-(user, estimate) pair of expected
    // rates p(1)*1 and p(2)*2 is separated by far more than 0.05
    RateSpace rates({1.0, 2.0});
    auto build = [&](double m0, double p2_e0, double p2_e1) {
        double m1 = 1.0 - m0;
        return std::vector<std::vector<double>>{
            {m0 * (1.0 - p2_e0), m1 * (1.0 - p2_e1)},  // actual 1
            {m0 * p2_e0, m1 * p2_e1},                  // actual 2
        };
    };
    // expected-rate pairs: user A: (1, 0.62), (1, 1.66); user B: (1, 0.44), (1, 1.38)
    auto a = build(0.4, 0.31, 0.83);
    auto b = build(0.5, 0.22, 0.69);
    return JointStatistics::from_tables(rates, {a, b}, 1e-12);
}

bool criterion_5() {
    auto start = Clock::now();
    Check c;
    auto js = agreement_fixture();
    auto st = derive_success_table(js);

    // verify the fixture premise: all value gaps >= 0.05
    double min_gap = 1e300;
    for (int u = 0; u < 2; ++u)
        for (int e = 0; e < 2; ++e) {
            double v1 = st.prob(u, e, 0) * 1.0;
            double v2 = st.prob(u, e, 1) * 2.0;
            min_gap = std::min(min_gap, std::fabs(v2 - v1));
        }
    c.require(min_gap >= 0.05, "fixture value gap below 0.05");

    // true rate allocations per (user, estimate)
    std::vector<std::vector<RateChoice>> truth(2, std::vector<RateChoice>(2));
    for (int u = 0; u < 2; ++u)
        for (int e = 0; e < 2; ++e) truth[static_cast<size_t>(u)][static_cast<size_t>(e)] =
            rate_adapt(st, u, e);

    const uint64_t horizon = 100000;
    const int seeds = 100;
    std::vector<double> gammas = {0.1, 0.2, 0.3};
    std::vector<double> mean_hit(gammas.size(), 0.0);
    uint64_t worst_hit = 0;
    for (size_t gi = 0; gi < gammas.size(); ++gi) {
        double total = 0.0;
        for (int seed = 0; seed < seeds; ++seed) {
            Scenario sc{js, PolicyLearning{gammas[gi]},
                        ArrivalSpec{ArrivalSpec::Kind::poisson, {0.35, 0.30}, 0}};
            uint64_t last_disagreement = 0;
            // on every transmit slot, the rate the empirical scheme would
            // allocate to each user must match the true-statistics allocation
            SlotObserver obs = [&](const SlotView& view) {
                if (view.action.is_explore()) return;
                for (int u = 0; u < 2; ++u) {
                    int e = view.est_idx[static_cast<size_t>(u)];
                    int got = view.empirical->best_choice(u, e).rate_idx;
                    if (got != truth[static_cast<size_t>(u)][static_cast<size_t>(e)].rate_idx)
                        last_disagreement = view.t + 1;
                }
            };
            (void)run(sc, horizon, 7000 + static_cast<uint64_t>(seed), &obs);
            total += static_cast<double>(last_disagreement);
            worst_hit = std::max(worst_hit, last_disagreement);
        }
        mean_hit[gi] = total / seeds;
    }
    // decisions must agree for 100% of transmit slots after the hitting time;
    // a hitting time near the horizon would mean agreement was never reached
    c.require(worst_hit < horizon * 4 / 5,
              "agreement not reached comfortably before the horizon (worst " +
                  std::to_string(worst_hit) + ")");
    c.require(mean_hit[0] > mean_hit[1] && mean_hit[1] > mean_hit[2],
              "hitting time not decreasing in gamma: " + fmt(mean_hit[0]) + ", " +
                  fmt(mean_hit[1]) + ", " + fmt(mean_hit[2]));

    double elapsed = seconds_since(start);
    std::printf(
        "criterion 5 (eventual rate-allocation agreement; mean hit %s/%s/%s @ gamma 0.1/0.2/0.3): "
        "%s%s [%.1fs]\n",
        fmt(mean_hit[0]).c_str(), fmt(mean_hit[1]).c_str(), fmt(mean_hit[2]).c_str(),
        c.ok ? "PASS" : "FAIL", c.ok ? "" : (" — " + c.detail).c_str(), elapsed);
    return c.ok;
}

// ---- criterion 6 ----
bool criterion_6() {
    auto start = Clock::now();
    Check c;
    RateSpace quantizer({1.0, 2.0, 3.0, 4.0, 5.0, 6.0});
    Rng gen(777);
    auto js = rayleigh_mmse_statistics(50.0, 0.1, quantizer, 2, 400000, gen);
    auto region = region_full(derive_success_table(js), 2);
    std::vector<double> diag = {1.0, 1.0};
    double b = ray_exit_scale(region, diag);
    // load 75% of the gamma=0.3 capacity so every gamma is stable
    double lam = 0.75 * 0.7 * b;
    std::vector<double> gammas = {0.1, 0.2, 0.3};
    const int reps = 2000;
    const uint64_t horizon = 20000;

    std::vector<Metrics> metrics;
    for (double g : gammas) {
        Scenario sc{js, PolicyLearning{g},
                    ArrivalSpec{ArrivalSpec::Kind::bernoulli_batch, {lam, lam}, 0}};
        sc.stride = 100;
        metrics.push_back(run_replications(sc, horizon, reps, 600000 + static_cast<uint64_t>(g * 1000)));
    }

    // (a) windowed success probability at slot 2000 increases with gamma
    size_t p2000 = 19;  // stride 100
    for (size_t gi = 0; gi + 1 < gammas.size(); ++gi) {
        double lo = metrics[gi].succ_win.mean[p2000];
        double hi = metrics[gi + 1].succ_win.mean[p2000];
        double se = std::hypot(metrics[gi].succ_win.se[p2000], metrics[gi + 1].succ_win.se[p2000]);
        c.require(hi - lo >= 3.0 * se, "success prob at slot 2000: gamma " + fmt(gammas[gi + 1]) +
                                           " vs " + fmt(gammas[gi]) + " separation " +
                                           fmt(hi - lo) + " < 3 SE " + fmt(3.0 * se));
    }
    // (b) post-convergence delay increases with gamma (final window)
    size_t last = metrics[0].delay_win.mean.size() - 1;
    for (size_t gi = 0; gi + 1 < gammas.size(); ++gi) {
        double lo = metrics[gi].delay_win.mean[last];
        double hi = metrics[gi + 1].delay_win.mean[last];
        double se = std::hypot(metrics[gi].delay_win.se[last], metrics[gi + 1].delay_win.se[last]);
        c.require(hi - lo >= 3.0 * se, "post-convergence delay: gamma " + fmt(gammas[gi + 1]) +
                                           " vs " + fmt(gammas[gi]) + " separation " +
                                           fmt(hi - lo) + " < 3 SE " + fmt(3.0 * se));
    }
    // (c) retransmissions per departed packet decrease over time for every gamma
    for (size_t gi = 0; gi < gammas.size(); ++gi) {
        const auto& rs = metrics[gi].retx_win;
        double early = 0.0, late = 0.0, se_e = 0.0, se_l = 0.0;
        int k = 5;
        for (int i = 0; i < k; ++i) {
            early += rs.mean[static_cast<size_t>(i)] / k;
            se_e += rs.se[static_cast<size_t>(i)] / k;
            late += rs.mean[last - static_cast<size_t>(i)] / k;
            se_l += rs.se[last - static_cast<size_t>(i)] / k;
        }
        c.require(early - late >= 3.0 * (se_e + se_l),
                  "retx not decreasing for gamma " + fmt(gammas[gi]) + " (early " + fmt(early) +
                      ", late " + fmt(late) + ")");
    }

    double elapsed = seconds_since(start);
    c.require(elapsed < 900.0, "runtime " + fmt(elapsed) + "s exceeds 15min");
    std::printf("criterion 6 (throughput-delay tradeoff, qualitative): %s%s [%.1fs]\n",
                c.ok ? "PASS" : "FAIL", c.ok ? "" : (" — " + c.detail).c_str(), elapsed);
    return c.ok;
}

// ---- criterion 7 ----
bool criterion_7() {
    auto start = Clock::now();
    Check c;
    // 10^7 expected exploration samples: per-slot pair probability 0.01 over
    // 10^9 slots; the binomial fast-forward is exact in distribution
    const double q = 0.01;
    const uint64_t horizon = 1000000000ull;
    const double p = 0.5;
    int ok = 0;
    const int seeds = 100;
    for (int s = 0; s < seeds; ++s) {
        Rng rng(3000 + static_cast<uint64_t>(s));
        auto trace = run_pair_trace_fast(q, p, horizon, 40, rng);
        const auto& lastpt = trace.back();
        double x = q * static_cast<double>(lastpt.t);
        double env = lil_envelope(x, p);
        double phat = static_cast<double>(lastpt.s) / static_cast<double>(lastpt.n);
        if (std::fabs(phat - p) / env <= 1.5) ++ok;
    }
    c.require(ok >= 95, "only " + std::to_string(ok) + "/100 seeds within 1.5 envelopes");

    // deterministic channels: exactly zero deviation at every checkpoint
    for (double pd : {0.0, 1.0}) {
        Rng rng(55);
        auto trace = run_pair_trace_fast(q, pd, 10000000, 25, rng);
        for (const auto& pt : trace) {
            if (pt.n == 0) continue;
            double phat = static_cast<double>(pt.s) / static_cast<double>(pt.n);
            c.require(phat == pd, "deterministic channel deviates");
        }
    }

    double elapsed = seconds_since(start);
    std::printf("criterion 7 (LIL envelope, %d/100 seeds within 1.5): %s%s [%.1fs]\n", ok,
                c.ok ? "PASS" : "FAIL", c.ok ? "" : (" — " + c.detail).c_str(), elapsed);
    return c.ok;
}

// ---- criterion 8 ----
std::string slurp(const fs::path& p) {
    std::ifstream is(p, std::ios::binary);
    std::ostringstream buf;
    buf << is.rdbuf();
    return buf.str();
}

bool criterion_8() {
    auto start = Clock::now();
    Check c;
    auto js = fixtures::binary_channel(0.8);
    std::ostringstream cfg_text;
    cfg_text << "{ \"channel\": {\"source\": \"inline\", \"stats\": " << js.to_json() << "}, "
             << "\"users\": 2, \"policy\": {\"kind\": \"learning\", \"gamma\": 0.2}, "
             << "\"arrivals\": {\"kind\": \"bernoulli-batch\", \"lambda\": [0.25, 0.2]}, "
             << "\"horizon\": 20000, \"reps\": 4, \"seed\": 11 }";
    auto cfg = parse_scenario_config(cfg_text.str());

    fs::path base = fs::temp_directory_path() / "csisched_acceptance";
    fs::remove_all(base);
    auto run_all = [&](const fs::path& dir) {
        cmd_region(cfg, (dir / "region").string());
        cmd_plan(cfg, (dir / "plan").string());
        cmd_simulate(cfg, (dir / "sim").string(), std::nullopt);
        cmd_lil(cfg, (dir / "lil").string());
    };
    run_all(base / "a");
    run_all(base / "b");
    const char* files[] = {
        "region/region_full.csv", "region/region_naive.csv", "region/region_scaled.csv",
        "region/corners.json",    "plan/plan.json",          "plan/bottleneck.json",
        "sim/metrics.csv",        "sim/metadata.json",       "lil/lil.csv",
    };
    for (const char* f : files) {
        std::string a = slurp(base / "a" / f);
        std::string b = slurp(base / "b" / f);
        c.require(!a.empty(), std::string(f) + " missing or empty");
        c.require(a == b, std::string(f) + " differs between identical runs");
    }
    double elapsed = seconds_since(start);
    std::printf("criterion 8 (byte-identical reruns of every subcommand): %s%s [%.1fs]\n",
                c.ok ? "PASS" : "FAIL", c.ok ? "" : (" — " + c.detail).c_str(), elapsed);
    return c.ok;
}

}  // namespace

int main() {
    int failures = 0;
    failures += criterion_1() ? 0 : 1;
    failures += criterion_2() ? 0 : 1;
    failures += criterion_3() ? 0 : 1;
    failures += criterion_4() ? 0 : 1;
    failures += criterion_5() ? 0 : 1;
    failures += criterion_6() ? 0 : 1;
    failures += criterion_7() ? 0 : 1;
    failures += criterion_8() ? 0 : 1;
    if (failures == 0) std::printf("all acceptance criteria passed\n");
    else std::printf("%d acceptance criteria failed\n", failures);
    return failures == 0 ? 0 : 1;
}
