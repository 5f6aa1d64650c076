#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

namespace csisched {

// Finite set of admissible transmission rates (packets/slot), strictly
// increasing and strictly positive. Rates are addressed by 0-based index;
// the 1-based rank index used in CSV/JSON output is index + 1.
class RateSpace {
public:
    explicit RateSpace(std::vector<double> rates) : rates_(std::move(rates)) {
        if (rates_.empty())
            throw std::invalid_argument("rate space must be nonempty");
        double prev = 0.0;
        for (double r : rates_) {
            if (!std::isfinite(r) || r <= prev)
                throw std::invalid_argument("rates must be finite, positive, strictly increasing");
            prev = r;
        }
    }

    int size() const { return static_cast<int>(rates_.size()); }
    double rate(int idx) const { return rates_.at(static_cast<size_t>(idx)); }
    const std::vector<double>& rates() const { return rates_; }

    // Largest index with rate <= x, or -1 when x falls below the lowest rate.
    int quantize_down(double x) const {
        int idx = -1;
        for (int i = 0; i < size(); ++i) {
            if (rates_[static_cast<size_t>(i)] <= x) idx = i;
            else break;
        }
        return idx;
    }

    // Smallest positive integer m such that m * rate is integral for every
    // rate (within 1e-9). Used by the simulator to do exact integer packet
    // accounting for fractional rate spaces such as {0.2, 1}.
    int64_t integer_scale(int64_t limit = 100000) const {
        for (int64_t m = 1; m <= limit; ++m) {
            bool ok = true;
            for (double r : rates_) {
                double v = r * static_cast<double>(m);
                if (std::fabs(v - std::round(v)) > 1e-9 * std::max(1.0, v)) {
                    ok = false;
                    break;
                }
            }
            if (ok) return m;
        }
        throw std::invalid_argument("no integer scaling of the rate space found");
    }

    bool operator==(const RateSpace& o) const { return rates_ == o.rates_; }

private:
    std::vector<double> rates_;
};

}  // namespace csisched
