#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>

namespace csisched {

// Deterministic random stream. All simulation randomness flows through this
// wrapper so that a given seed reproduces the exact same draw sequence; the
// distribution code below is self-contained for that reason (std::
// distributions are implementation-defined).
class Rng {
public:
    explicit Rng(uint64_t seed) : eng_(seed) {}

    // uniform in [0, 1)
    double uniform() { return std::ldexp(static_cast<double>(eng_() >> 11), -53); }

    bool bernoulli(double p) { return uniform() < p; }

    // uniform integer in [0, n)
    uint64_t uniform_int(uint64_t n) {
        uint64_t k = static_cast<uint64_t>(uniform() * static_cast<double>(n));
        return k >= n ? n - 1 : k;
    }

    // standard normal, Box-Muller
    double gaussian() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u1 = 1.0 - uniform();  // (0, 1]
        double u2 = uniform();
        double r = std::sqrt(-2.0 * std::log(u1));
        double a = 6.283185307179586476925286766559 * u2;
        spare_ = r * std::sin(a);
        have_spare_ = true;
        return r * std::cos(a);
    }

    int64_t poisson(double mean) {
        if (mean < 0.0 || mean > 600.0)
            throw std::invalid_argument("poisson mean out of supported range [0, 600]");
        if (mean == 0.0) return 0;
        // inversion by sequential search
        double p = std::exp(-mean);
        double f = p;
        double u = uniform();
        int64_t k = 0;
        while (u > f && k < 100000) {
            ++k;
            p *= mean / static_cast<double>(k);
            f += p;
        }
        return k;
    }

    // Binomial(n, p). Inversion for small np, Hormann's BTRS rejection
    // otherwise; both are exact samplers.
    int64_t binomial(int64_t n, double p) {
        if (n < 0 || p < 0.0 || p > 1.0)
            throw std::invalid_argument("binomial parameters out of range");
        if (n == 0 || p == 0.0) return 0;
        if (p == 1.0) return n;
        if (p > 0.5) return n - binomial(n, 1.0 - p);
        double np = static_cast<double>(n) * p;
        if (np < 30.0) return binomial_inversion(n, p);
        return binomial_btrs(n, p);
    }

private:
    int64_t binomial_inversion(int64_t n, double p) {
        double q = 1.0 - p;
        double s = p / q;
        double f = std::exp(static_cast<double>(n) * std::log(q));  // P(X=0)
        double u = uniform();
        double cdf = f;
        int64_t k = 0;
        while (u > cdf && k < n) {
            ++k;
            f *= s * static_cast<double>(n - k + 1) / static_cast<double>(k);
            cdf += f;
        }
        return k;
    }

    int64_t binomial_btrs(int64_t n, double p) {
        const double q = 1.0 - p;
        const double nd = static_cast<double>(n);
        const double spq = std::sqrt(nd * p * q);
        const double b = 1.15 + 2.53 * spq;
        const double a = -0.0873 + 0.0248 * b + 0.01 * p;
        const double c = nd * p + 0.5;
        const double vr = 0.92 - 4.2 / b;
        const double alpha = (2.83 + 5.1 / b) * spq;
        const double lpq = std::log(p / q);
        const int64_t m = static_cast<int64_t>(std::floor((nd + 1.0) * p));
        const double h = std::lgamma(static_cast<double>(m) + 1.0) +
                         std::lgamma(nd - static_cast<double>(m) + 1.0);
        for (;;) {
            double u = uniform() - 0.5;
            double v = uniform();
            double us = 0.5 - std::fabs(u);
            double kd = std::floor((2.0 * a / us + b) * u + c);
            if (kd < 0.0 || kd > nd) continue;
            int64_t k = static_cast<int64_t>(kd);
            if (us >= 0.07 && v <= vr) return k;
            v = v * alpha / (a / (us * us) + b);
            double lhs = std::log(v);
            double rhs = h - std::lgamma(kd + 1.0) - std::lgamma(nd - kd + 1.0) +
                         (kd - static_cast<double>(m)) * lpq;
            if (lhs <= rhs) return k;
        }
    }

    std::mt19937_64 eng_;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

}  // namespace csisched
