#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "sdmaf/types.hpp"

namespace sdmaf {

/// SplitMix64: tiny, fast, and good enough for simulation streams.
class SplitMix64 {
public:
    explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next() {
        std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ull);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
        return z ^ (z >> 31);
    }

    /// Uniform on [0, 1) with 53 random bits.
    double next_double() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

private:
    std::uint64_t state_;
};

namespace detail {

inline std::uint64_t mix64(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

}  // namespace detail

/// Deterministic per-stream seed: draws for stream i depend only on
/// (seed, i, salt), never on how many other streams were consumed.
/// This is what makes simulated output independent of worker count and
/// chunk order.
inline std::uint64_t stream_key(std::uint64_t seed, std::uint64_t stream,
                                std::uint64_t salt = 0) {
    return detail::mix64(detail::mix64(seed + 0x9E3779B97F4A7C15ull) ^
                         detail::mix64(stream + salt * 0x94D049BB133111EBull +
                                       0xBF58476D1CE4E5B9ull));
}

/// Exact binomial sample by CDF inversion.  Large p mirrors to 1-p;
/// trial counts whose q^n would underflow are split recursively into
/// two independent halves (the sum of independent binomials with the
/// same p is binomial), keeping every leaf's inversion well-posed.
inline std::int64_t binomial_draw(std::int64_t n, double p, SplitMix64& rng) {
    if (n < 0) throw Error("binomial sample: negative trial count");
    if (!(p >= 0.0 && p <= 1.0)) throw Error("binomial sample: probability out of [0,1]");
    if (n == 0 || p == 0.0) return 0;
    if (p == 1.0) return n;
    if (p > 0.5) return n - binomial_draw(n, 1.0 - p, rng);

    const double log_q = std::log1p(-p);
    if (static_cast<double>(n) * log_q < -700.0) {
        const std::int64_t half = n / 2;
        const std::int64_t lo = binomial_draw(half, p, rng);
        return lo + binomial_draw(n - half, p, rng);
    }

    const double ratio = p / (1.0 - p);
    double pmf = std::exp(static_cast<double>(n) * log_q);  // P[X = 0]
    double cdf = pmf;
    const double u = rng.next_double();
    std::int64_t k = 0;
    while (u > cdf && k < n) {
        ++k;
        pmf *= ratio * static_cast<double>(n - k + 1) / static_cast<double>(k);
        cdf += pmf;
    }
    return k;
}

/// Multinomial sample as a chain of conditional binomials.
inline std::vector<std::int64_t> multinomial_draw(std::int64_t n, std::span<const double> probs,
                                                  SplitMix64& rng) {
    if (probs.empty()) throw Error("multinomial sample: empty probability vector");
    double sum = 0.0;
    for (const double q : probs) {
        if (!(q >= 0.0 && q <= 1.0)) throw Error("multinomial sample: probability out of [0,1]");
        sum += q;
    }
    if (std::fabs(sum - 1.0) > 1e-9)
        throw Error("multinomial sample: probabilities sum to " + std::to_string(sum));

    std::vector<std::int64_t> counts(probs.size(), 0);
    std::int64_t remaining = n;
    double prob_left = 1.0;
    for (std::size_t i = 0; i + 1 < probs.size(); ++i) {
        if (remaining == 0) break;
        double cond = prob_left > 0.0 ? probs[i] / prob_left : 1.0;
        cond = std::min(1.0, std::max(0.0, cond));
        counts[i] = binomial_draw(remaining, cond, rng);
        remaining -= counts[i];
        prob_left -= probs[i];
    }
    counts.back() += remaining;
    return counts;
}

}  // namespace sdmaf
