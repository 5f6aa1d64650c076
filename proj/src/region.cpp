#include "csisched/region.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace csisched {

namespace {

double pow_int(int base, int exp) {
    double v = 1.0;
    for (int i = 0; i < exp; ++i) v *= base;
    return v;
}

RegionTerms build_region(const SuccessTable& st, int n_users, RegionTerms::Label label) {
    if (n_users < 1) throw std::invalid_argument("region needs at least one user");
    if (st.n_users() != n_users && st.n_users() != 1)
        throw std::invalid_argument("success table must carry one shared or N per-user tables");
    const int s = st.rates.size();
    if (pow_int(s, n_users) > 1e6) throw std::length_error("|S|^N exceeds the enumeration guard");

    auto table_user = [&](int u) { return st.n_users() == 1 ? 0 : u; };

    RegionTerms r;
    r.n_users = n_users;
    r.label = label;
    r.sigma = 1.0;
    r.axis_marginal.resize(static_cast<size_t>(n_users));
    r.axis_leg.resize(static_cast<size_t>(n_users));
    for (int u = 0; u < n_users; ++u) {
        auto& marg = r.axis_marginal[static_cast<size_t>(u)];
        auto& leg = r.axis_leg[static_cast<size_t>(u)];
        marg.resize(static_cast<size_t>(s));
        leg.resize(static_cast<size_t>(s));
        for (int e = 0; e < s; ++e) {
            int tu = table_user(u);
            marg[static_cast<size_t>(e)] = st.marginal(tu, e);
            if (!st.defined(tu, e)) {
                leg[static_cast<size_t>(e)] = 0.0;  // probability-0 estimate
                continue;
            }
            if (label == RegionTerms::Label::full) {
                RateChoice c = rate_adapt(st, tu, e);
                leg[static_cast<size_t>(e)] = c.value;
            } else {
                leg[static_cast<size_t>(e)] = st.prob(tu, e, e) * st.rates.rate(e);
            }
        }
    }

    const size_t n_terms = static_cast<size_t>(pow_int(s, n_users));
    r.weights.resize(n_terms);
    r.legs.resize(n_terms * static_cast<size_t>(n_users));
    std::vector<int> est(static_cast<size_t>(n_users), 0);
    for (size_t t = 0; t < n_terms; ++t) {
        size_t rem = t;
        double w = 1.0;
        for (int u = n_users - 1; u >= 0; --u) {
            est[static_cast<size_t>(u)] = static_cast<int>(rem % static_cast<size_t>(s));
            rem /= static_cast<size_t>(s);
        }
        for (int u = 0; u < n_users; ++u) {
            int e = est[static_cast<size_t>(u)];
            w *= r.axis_marginal[static_cast<size_t>(u)][static_cast<size_t>(e)];
            r.legs[t * static_cast<size_t>(n_users) + static_cast<size_t>(u)] =
                r.axis_leg[static_cast<size_t>(u)][static_cast<size_t>(e)];
        }
        r.weights[t] = w;
    }
    return r;
}

// A merged boundary edge of the two-user region: the Minkowski-summed
// hypotenuse with horizontal extent a and vertical extent b.
struct Edge {
    double a = 0.0;
    double b = 0.0;
    double ratio = 0.0;  // b/a sort key, +inf for vertical segments
    std::vector<size_t> terms;  // constituent term indices
};

std::vector<Edge> merged_edges(const RegionTerms& r) {
    if (r.n_users != 2) throw std::domain_error("boundary geometry requires exactly two users");
    std::vector<Edge> edges;
    edges.reserve(r.term_count());
    for (size_t t = 0; t < r.term_count(); ++t) {
        double a = r.sigma * r.weights[t] * r.leg(t, 0);
        double b = r.sigma * r.weights[t] * r.leg(t, 1);
        if (a == 0.0 && b == 0.0) continue;
        double ratio = a == 0.0 ? std::numeric_limits<double>::infinity() : b / a;
        edges.push_back(Edge{a, b, ratio, {t}});
    }
    std::stable_sort(edges.begin(), edges.end(),
                     [](const Edge& lhs, const Edge& rhs) { return lhs.ratio > rhs.ratio; });
    std::vector<Edge> merged;
    for (auto& e : edges) {
        if (!merged.empty()) {
            Edge& last = merged.back();
            double c1 = last.b * e.a;
            double c2 = e.b * last.a;
            if (std::fabs(c1 - c2) <= 1e-12 * (std::fabs(c1) + std::fabs(c2))) {
                last.a += e.a;
                last.b += e.b;
                last.terms.insert(last.terms.end(), e.terms.begin(), e.terms.end());
                continue;
            }
        }
        merged.push_back(std::move(e));
    }
    return merged;
}

std::vector<std::array<double, 2>> sweep_vertices(const RegionTerms& r,
                                                  const std::vector<Edge>& edges) {
    std::vector<std::array<double, 2>> verts;
    verts.reserve(edges.size() + 1);
    double c0 = r.corner(0);
    double c1 = r.corner(1);
    double x = c0;
    double y = 0.0;
    verts.push_back({x, y});
    for (size_t i = 0; i < edges.size(); ++i) {
        x -= edges[i].a;
        y += edges[i].b;
        if (i + 1 == edges.size()) {
            x = 0.0;  // the sweep provably lands on the axis; pin it exactly
            y = c1;
        }
        verts.push_back({x, y});
    }
    return verts;
}

struct RayHit {
    double scale = 0.0;
    size_t edge = 0;   // index into the merged edge list
    double u = 0.0;    // parameter along that edge
};

RayHit ray_exit(const std::vector<Edge>& edges,
                const std::vector<std::array<double, 2>>& verts, std::span<const double> dir) {
    RayHit hit;
    if (edges.empty()) return hit;
    double best = -1.0;
    for (size_t i = 0; i < edges.size(); ++i) {
        double nx = edges[i].b;  // outward normal of the hypotenuse direction (-a, b)
        double ny = edges[i].a;
        double dn = nx * dir[0] + ny * dir[1];
        if (dn <= 0.0) continue;
        double s = (nx * verts[i][0] + ny * verts[i][1]) / dn;
        if (best < 0.0 || s < best) {
            best = s;
            hit.edge = i;
        }
    }
    if (best < 0.0) return hit;  // direction orthogonal to everything
    hit.scale = best;
    double ex = best * dir[0] - verts[hit.edge][0];
    double ey = best * dir[1] - verts[hit.edge][1];
    double dx = -edges[hit.edge].a;
    double dy = edges[hit.edge].b;
    double dd = dx * dx + dy * dy;
    hit.u = dd > 0.0 ? std::clamp((ex * dx + ey * dy) / dd, 0.0, 1.0) : 0.0;
    return hit;
}

double point_segment_distance(double px, double py, double ax, double ay, double bx, double by) {
    double dx = bx - ax, dy = by - ay;
    double dd = dx * dx + dy * dy;
    double u = dd > 0.0 ? std::clamp(((px - ax) * dx + (py - ay) * dy) / dd, 0.0, 1.0) : 0.0;
    double cx = ax + u * dx, cy = ay + u * dy;
    return std::hypot(px - cx, py - cy);
}

Membership classify(double margin, double tol) {
    if (margin > tol) return Membership::inside;
    if (margin < -tol) return Membership::outside;
    return Membership::boundary;
}

Membership contains_2d(const RegionTerms& r, std::span<const double> lambda, double tol) {
    double c0 = r.corner(0);
    double c1 = r.corner(1);
    if (c0 <= 0.0 || c1 <= 0.0) {
        // degenerate region: a point or an axis segment, no 2D interior
        double d;
        if (c0 <= 0.0 && c1 <= 0.0)
            d = std::hypot(lambda[0], lambda[1]);
        else if (c1 <= 0.0)
            d = point_segment_distance(lambda[0], lambda[1], 0.0, 0.0, c0, 0.0);
        else
            d = point_segment_distance(lambda[0], lambda[1], 0.0, 0.0, 0.0, c1);
        return d <= tol ? Membership::boundary : Membership::outside;
    }
    // margin against the outer boundary chain only: the axis faces belong to
    // the region (a rate point dominated by an interior point is supportable)
    auto edges = merged_edges(r);
    auto verts = sweep_vertices(r, edges);
    double margin = 0.0;
    bool first = true;
    for (size_t i = 0; i + 1 < verts.size(); ++i) {
        const auto& a = verts[i];
        const auto& b = verts[i + 1];
        double ex = b[0] - a[0], ey = b[1] - a[1];
        double len = std::hypot(ex, ey);
        if (len == 0.0) continue;
        double cross = ex * (lambda[1] - a[1]) - ey * (lambda[0] - a[0]);
        double m = cross / len;
        if (first || m < margin) {
            margin = m;
            first = false;
        }
    }
    return classify(margin, tol);
}

// enumerate simplex grid directions with resolution d and evaluate the
// support margin; returns the minimum and its argmin
std::pair<double, std::vector<double>> grid_min_margin(const RegionTerms& r,
                                                       std::span<const double> lambda, int d) {
    const int n = r.n_users;
    std::vector<double> theta(static_cast<size_t>(n));
    std::vector<double> best_theta;
    double best = 0.0;
    bool first = true;

    auto evaluate = [&]() {
        double norm = 0.0, dot = 0.0;
        for (int i = 0; i < n; ++i) {
            norm += theta[static_cast<size_t>(i)] * theta[static_cast<size_t>(i)];
            dot += theta[static_cast<size_t>(i)] * lambda[i];
        }
        if (norm == 0.0) return;
        double m = (support(r, theta) - dot) / std::sqrt(norm);
        if (first || m < best) {
            best = m;
            best_theta = theta;
            first = false;
        }
    };

    // recursively place d grid units across the n coordinates
    auto place = [&](auto&& self, int pos, int remaining) -> void {
        if (pos == n - 1) {
            theta[static_cast<size_t>(pos)] = static_cast<double>(remaining) / d;
            evaluate();
            return;
        }
        for (int k = 0; k <= remaining; ++k) {
            theta[static_cast<size_t>(pos)] = static_cast<double>(k) / d;
            self(self, pos + 1, remaining - k);
        }
    };
    place(place, 0, d);
    return {best, best_theta};
}

Membership contains_nd(const RegionTerms& r, std::span<const double> lambda, double tol) {
    auto [margin, theta] = grid_min_margin(r, lambda, 24);
    if (theta.empty()) return Membership::boundary;
    // local refinement around the coarse argmin
    const int n = r.n_users;
    double radius = 1.0 / 24.0;
    std::vector<double> cur = theta;
    for (int pass = 0; pass < 6; ++pass) {
        bool improved = true;
        while (improved) {
            improved = false;
            for (int i = 0; i < n; ++i) {
                for (double sgn : {1.0, -1.0}) {
                    std::vector<double> cand = cur;
                    cand[static_cast<size_t>(i)] =
                        std::max(0.0, cand[static_cast<size_t>(i)] + sgn * radius);
                    double norm = 0.0, dot = 0.0;
                    for (int j = 0; j < n; ++j) {
                        norm += cand[static_cast<size_t>(j)] * cand[static_cast<size_t>(j)];
                        dot += cand[static_cast<size_t>(j)] * lambda[j];
                    }
                    if (norm == 0.0) continue;
                    double m = (support(r, cand) - dot) / std::sqrt(norm);
                    if (m < margin) {
                        margin = m;
                        cur = cand;
                        improved = true;
                    }
                }
            }
        }
        radius *= 0.5;
    }
    return classify(margin, tol);
}

}  // namespace

double RegionTerms::corner(int user) const {
    const auto& marg = axis_marginal[static_cast<size_t>(user)];
    const auto& leg = axis_leg[static_cast<size_t>(user)];
    double c = 0.0;
    for (size_t e = 0; e < marg.size(); ++e) c += marg[e] * leg[e];
    return sigma * c;
}

RegionTerms region_full(const SuccessTable& st, int n_users) {
    return build_region(st, n_users, RegionTerms::Label::full);
}

RegionTerms region_naive(const SuccessTable& st, int n_users) {
    return build_region(st, n_users, RegionTerms::Label::naive);
}

RegionTerms scale_region(const RegionTerms& r, double gamma) {
    if (!(gamma > 0.0 && gamma < 1.0))
        throw std::invalid_argument("gamma must lie in (0, 1)");
    RegionTerms out = r;
    out.sigma *= 1.0 - gamma;
    return out;
}

std::vector<std::array<double, 2>> boundary_2d(const RegionTerms& r) {
    auto edges = merged_edges(r);
    if (edges.empty()) return {{0.0, 0.0}};
    return sweep_vertices(r, edges);
}

double support(const RegionTerms& r, std::span<const double> theta) {
    if (static_cast<int>(theta.size()) != r.n_users)
        throw std::invalid_argument("support: direction dimension mismatch");
    double h = 0.0;
    const size_t n = static_cast<size_t>(r.n_users);
    for (size_t t = 0; t < r.term_count(); ++t) {
        double m = 0.0;
        for (size_t i = 0; i < n; ++i) {
            double v = r.legs[t * n + i] * theta[i];
            if (v > m) m = v;
        }
        h += r.weights[t] * m;
    }
    return r.sigma * h;
}

Membership contains(const RegionTerms& r, std::span<const double> lambda, double tol) {
    if (static_cast<int>(lambda.size()) != r.n_users)
        throw std::invalid_argument("contains: point dimension mismatch");
    for (double v : lambda)
        if (!(v >= 0.0)) throw std::invalid_argument("contains: rate point must be nonnegative");
    if (r.n_users == 1) {
        double c = r.corner(0);
        return classify(c - lambda[0], tol);
    }
    if (r.n_users == 2) return contains_2d(r, lambda, tol);
    return contains_nd(r, lambda, tol);
}

double ray_exit_scale(const RegionTerms& r, std::span<const double> dir) {
    if (r.n_users == 1) {
        if (!(dir[0] > 0.0)) throw std::invalid_argument("ray direction must be nonzero");
        return r.corner(0) / dir[0];
    }
    if (r.n_users != 2) throw std::domain_error("ray_exit_scale supports one or two users");
    double mag = 0.0;
    for (double v : dir) {
        if (v < 0.0) throw std::invalid_argument("ray direction must be nonnegative");
        mag += v;
    }
    if (mag == 0.0) throw std::invalid_argument("ray direction must be nonzero");
    auto edges = merged_edges(r);
    if (edges.empty()) return 0.0;
    auto verts = sweep_vertices(r, edges);
    return ray_exit(edges, verts, dir).scale;
}

namespace {

AchievabilityWeights feasible_result(const RegionTerms& region, std::vector<double> alpha,
                                     std::span<const double> lambda, double delta) {
    AchievabilityWeights w;
    w.n_users = region.n_users;
    w.alpha = std::move(alpha);
    const size_t n = static_cast<size_t>(region.n_users);
    double residual = 0.0;
    bool first = true;
    for (size_t i = 0; i < n; ++i) {
        double service = 0.0;
        for (size_t t = 0; t < region.term_count(); ++t)
            service += region.weights[t] * w.alpha[t * n + i] * region.legs[t * n + i];
        double res = region.sigma * service - lambda[i] - delta;
        if (first || res < residual) {
            residual = res;
            first = false;
        }
    }
    w.residual = residual;
    w.status = residual >= -1e-9 ? AchievabilityWeights::Status::feasible
                                 : AchievabilityWeights::Status::unresolved;
    return w;
}

AchievabilityWeights achievability_2d(const RegionTerms& region, std::span<const double> lambda,
                                      double delta) {
    const size_t n_terms = region.term_count();
    std::vector<double> target{lambda[0] + delta, lambda[1] + delta};
    auto edges = merged_edges(region);
    auto verts = sweep_vertices(region, edges);
    AchievabilityWeights out;
    out.n_users = 2;
    if (target[0] == 0.0 && target[1] == 0.0) {
        out.alpha.assign(n_terms * 2, 0.0);
        out.status = AchievabilityWeights::Status::feasible;
        out.residual = 0.0;
        return out;
    }
    if (edges.empty()) return out;  // degenerate region, nonzero target infeasible
    RayHit hit = ray_exit(edges, verts, target);
    if (hit.scale < 1.0 - 1e-12) return out;  // target beyond the boundary
    double shrink = std::min(1.0, 1.0 / hit.scale);
    std::vector<double> alpha(n_terms * 2, 0.0);
    for (size_t e = 0; e < edges.size(); ++e) {
        double a1;  // share assigned to user 0
        if (e < hit.edge) a1 = 0.0;        // already swept: fully user 1
        else if (e > hit.edge) a1 = 1.0;   // not yet swept: fully user 0
        else a1 = 1.0 - hit.u;
        for (size_t t : edges[e].terms) {
            alpha[t * 2 + 0] = shrink * a1;
            alpha[t * 2 + 1] = shrink * (1.0 - a1);
        }
    }
    return feasible_result(region, std::move(alpha), lambda, delta);
}

AchievabilityWeights achievability_nd(const RegionTerms& region, std::span<const double> lambda,
                                      double delta) {
    const size_t n = static_cast<size_t>(region.n_users);
    const size_t n_terms = region.term_count();
    std::vector<double> target(n);
    for (size_t i = 0; i < n; ++i) target[i] = lambda[i] + delta;

    AchievabilityWeights out;
    out.n_users = region.n_users;

    // certified infeasibility probe on the direction grid
    if (contains(region, std::span<const double>(target), 1e-12) == Membership::outside)
        return out;

    // multiplicative-weights averaging of max-weight vertex allocations
    std::vector<double> cum_deficit(n, 0.0);
    std::vector<double> avg_alpha(n_terms * n, 0.0);
    std::vector<double> avg_service(n, 0.0);
    std::vector<double> theta(n);
    const int max_iter = 4000;
    for (int it = 1; it <= max_iter; ++it) {
        double mx = 0.0;
        for (size_t i = 0; i < n; ++i) mx = std::max(mx, cum_deficit[i]);
        double z = 0.0;
        for (size_t i = 0; i < n; ++i) {
            theta[i] = std::exp((cum_deficit[i] - mx) * 2.0);
            z += theta[i];
        }
        for (size_t i = 0; i < n; ++i) theta[i] /= z;
        // oracle: allocate each term to the user maximizing leg * theta
        double w = 1.0 / it;
        std::vector<double> service(n, 0.0);
        for (size_t t = 0; t < n_terms; ++t) {
            size_t best = 0;
            double bv = -1.0;
            for (size_t i = 0; i < n; ++i) {
                double v = region.legs[t * n + i] * theta[i];
                if (v > bv) {
                    bv = v;
                    best = i;
                }
            }
            for (size_t i = 0; i < n; ++i) {
                double g = i == best ? 1.0 : 0.0;
                avg_alpha[t * n + i] += w * (g - avg_alpha[t * n + i]);
            }
            service[best] += region.sigma * region.weights[t] * region.legs[t * n + best];
        }
        for (size_t i = 0; i < n; ++i) {
            avg_service[i] += w * (service[i] - avg_service[i]);
            cum_deficit[i] += (target[i] - service[i]);
        }
        if (it % 100 == 0) {
            bool ok = true;
            for (size_t i = 0; i < n; ++i)
                if (avg_service[i] < target[i] - 1e-9) ok = false;
            if (ok) return feasible_result(region, avg_alpha, lambda, delta);
        }
    }
    AchievabilityWeights w = feasible_result(region, avg_alpha, lambda, delta);
    if (w.status != AchievabilityWeights::Status::feasible)
        w.status = AchievabilityWeights::Status::unresolved;
    return w;
}

}  // namespace

AchievabilityWeights achievability_weights(const SuccessTable& st, std::span<const double> lambda,
                                           double delta) {
    if (delta < 0.0) throw std::invalid_argument("slack delta must be nonnegative");
    const int n = static_cast<int>(lambda.size());
    for (double v : lambda)
        if (!(v >= 0.0)) throw std::invalid_argument("arrival rates must be nonnegative");
    RegionTerms region = region_full(st, n);
    if (n == 1) {
        double c = region.corner(0);
        double t = lambda[0] + delta;
        AchievabilityWeights out;
        out.n_users = 1;
        if (t > c) return out;
        double share = c > 0.0 ? t / c : 0.0;
        out.alpha.assign(region.term_count(), share);
        return feasible_result(region, std::move(out.alpha), lambda, delta);
    }
    if (n == 2) return achievability_2d(region, lambda, delta);
    return achievability_nd(region, lambda, delta);
}

}  // namespace csisched
