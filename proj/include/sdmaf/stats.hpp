#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <span>
#include <vector>

#include "sdmaf/chisq.hpp"
#include "sdmaf/types.hpp"

// Sex-difference tests on minor-allele frequency.  Every
// test compares female and male allele-frequency estimates through a
// Wald statistic whose variance comes from the observed genotype
// distribution itself (no Hardy-Weinberg assumption): diploid strata
// carry a departure term delta_hat, hemizygous male strata are binomial.
//
// Degenerate handling is uniform: a zero-variance comparison with a
// zero numerator is a defined no-signal result (W = 0, p = 1), a
// zero-variance comparison with a non-zero numerator is NA (nullopt).
// df never depends on the data except for the omnibus between-population
// test, which may drop degenerate populations (reported explicitly).

namespace sdmaf {

inline StratumEstimate estimate_stratum(const DiploidCounts& c) {
    const std::int64_t n = c.total();
    if (n <= 0) throw EmptyStratumError("cannot estimate an empty diploid stratum");
    StratumEstimate e;
    e.n = n;
    e.ploidy = Ploidy::Diploid;
    e.p_hat = static_cast<double>(2 * c.n_BB + c.n_het) / static_cast<double>(2 * n);
    e.delta_hat = static_cast<double>(c.n_BB) / static_cast<double>(n) - e.p_hat * e.p_hat;
    return e;
}

inline StratumEstimate estimate_stratum(const HaploidCounts& c) {
    const std::int64_t n = c.total();
    if (n <= 0) throw EmptyStratumError("cannot estimate an empty haploid stratum");
    StratumEstimate e;
    e.n = n;
    e.ploidy = Ploidy::Haploid;
    e.p_hat = static_cast<double>(c.n_B) / static_cast<double>(n);
    return e;
}

inline StratumEstimate estimate_stratum(const GenotypeCounts& c) {
    return std::visit([](const auto& x) { return estimate_stratum(x); }, c);
}

/// Contribution of one stratum to the variance of the frequency
/// difference: (p(1-p) + delta) / 2n for diploid strata, p(1-p) / n for
/// hemizygous ones.  Clamped at zero against rounding in the diploid
/// sum (the exact value is non-negative).
inline double variance_term(const StratumEstimate& e) {
    if (e.ploidy == Ploidy::Diploid) {
        const double s = e.p_hat * (1.0 - e.p_hat) + *e.delta_hat;
        return std::max(0.0, s) / (2.0 * static_cast<double>(e.n));
    }
    return e.p_hat * (1.0 - e.p_hat) / static_cast<double>(e.n);
}

inline Ploidy male_ploidy_for(RegionClass region) {
    return region == RegionClass::XNpr ? Ploidy::Haploid : Ploidy::Diploid;
}

/// Throws unless the male counts' ploidy matches the region class
/// (hemizygous in XNpr, diploid elsewhere).
inline void check_male_shape(const PopulationStratumPair& pair, RegionClass region) {
    const bool haploid = std::holds_alternative<HaploidCounts>(pair.male);
    if (haploid != (region == RegionClass::XNpr))
        throw Error("male genotype counts for population '" + pair.population +
                    "' do not match the region class");
}

namespace detail {

struct PairTerms {
    double d;  // female minus male frequency estimate
    double v;  // summed variance of the difference
};

inline PairTerms pair_terms(const PopulationStratumPair& pair, RegionClass region) {
    check_male_shape(pair, region);
    const StratumEstimate f = estimate_stratum(pair.female);
    const StratumEstimate m = estimate_stratum(pair.male);
    PairTerms t;
    t.d = f.p_hat - m.p_hat;
    t.v = variance_term(f) + variance_term(m);
    return t;
}

/// Single-population Wald statistic; nullopt when the variance vanishes
/// under a non-zero difference (opposite-allele fixation).
inline std::optional<double> single_statistic(const PopulationStratumPair& pair,
                                              RegionClass region) {
    const PairTerms t = pair_terms(pair, region);
    if (t.v == 0.0) {
        if (t.d == 0.0) return 0.0;
        return std::nullopt;
    }
    return (t.d * t.d) / t.v;
}

}  // namespace detail

/// Sex difference in minor-allele frequency within one population;
/// 1 df chi-square.
inline std::optional<TestResult> sdmaf_single(const PopulationStratumPair& pair,
                                              RegionClass region) {
    const auto w = detail::single_statistic(pair, region);
    if (!w) return std::nullopt;
    return make_test_result(*w, 1);
}

/// Population-stratified test: the K single-population statistics add
/// up to a K-df chi-square.  NA if any population is untestable.
inline std::optional<TestResult> sdmaf_multi(std::span<const PopulationStratumPair> pairs,
                                             RegionClass region) {
    if (pairs.empty()) throw Error("stratified test requires at least one population");
    double acc = 0.0;
    for (const auto& pair : pairs) {
        const auto w = detail::single_statistic(pair, region);
        if (!w) return std::nullopt;
        acc += *w;
    }
    return make_test_result(acc, static_cast<int>(pairs.size()));
}

/// Collapse per-population counts into one synthetic population.
inline PopulationStratumPair pool_pairs(std::span<const PopulationStratumPair> pairs,
                                        RegionClass region) {
    if (pairs.empty()) throw Error("pooling requires at least one population");
    PopulationStratumPair pooled;
    pooled.population = "pooled";
    if (region == RegionClass::XNpr)
        pooled.male = HaploidCounts{};
    else
        pooled.male = DiploidCounts{};
    for (const auto& pair : pairs) {
        check_male_shape(pair, region);
        pooled.female += pair.female;
        if (region == RegionClass::XNpr)
            std::get<HaploidCounts>(pooled.male) += std::get<HaploidCounts>(pair.male);
        else
            std::get<DiploidCounts>(pooled.male) += std::get<DiploidCounts>(pair.male);
    }
    return pooled;
}

/// Single test applied to counts pooled across populations.  Ignores
/// population structure, so opposite-direction sex differences cancel.
inline std::optional<TestResult> sdmaf_pooled(std::span<const PopulationStratumPair> pairs,
                                              RegionClass region) {
    const PopulationStratumPair pooled = pool_pairs(pairs, region);
    return sdmaf_single(pooled, region);
}

/// Difference of the sex differences between two named populations;
/// 1 df chi-square.  Symmetric in its arguments.
inline std::optional<TestResult> sdmaf_pair_diff(const PopulationStratumPair& a,
                                                 const PopulationStratumPair& b,
                                                 RegionClass region) {
    const detail::PairTerms ta = detail::pair_terms(a, region);
    const detail::PairTerms tb = detail::pair_terms(b, region);
    const double num = ta.d - tb.d;
    const double den = ta.v + tb.v;
    if (den == 0.0) {
        if (num == 0.0) return make_test_result(0.0, 1);
        return std::nullopt;
    }
    return make_test_result((num * num) / den, 1);
}

/// Outcome of the omnibus heterogeneity test.  populations_used counts
/// the populations that actually entered the statistic; any others were
/// dropped for having zero variance of their sex difference.
struct OmnibusDiffResult {
    std::optional<TestResult> test;
    int populations_used = 0;
    int populations_excluded = 0;
};

/// Tests whether the sex difference is the same in every population
/// (baseline-free); (K' - 1) df where K' is the number of populations
/// with a non-degenerate variance.  NA when fewer than two remain.
inline OmnibusDiffResult sdmaf_omnibus_diff(std::span<const PopulationStratumPair> pairs,
                                            RegionClass region) {
    if (pairs.size() < 2) throw Error("omnibus heterogeneity test requires at least two populations");
    std::vector<detail::PairTerms> terms;
    terms.reserve(pairs.size());
    for (const auto& pair : pairs) terms.push_back(detail::pair_terms(pair, region));

    std::vector<std::size_t> usable;
    for (std::size_t k = 0; k < terms.size(); ++k)
        if (terms[k].v > 0.0) usable.push_back(k);

    OmnibusDiffResult out;
    out.populations_used = static_cast<int>(usable.size());
    out.populations_excluded = static_cast<int>(terms.size() - usable.size());
    if (usable.size() < 2) return out;

    if (usable.size() == 2) {
        // Matches the two-population pairwise statistic bit for bit.
        const detail::PairTerms& ta = terms[usable[0]];
        const detail::PairTerms& tb = terms[usable[1]];
        const double num = ta.d - tb.d;
        const double den = ta.v + tb.v;
        out.test = make_test_result((num * num) / den, 1);
        return out;
    }

    // Inverse-variance weighted dispersion of the per-population sex
    // differences around their weighted mean.  The centered form avoids
    // the catastrophic cancellation of sum(d^2 U) - (sum(d U))^2 / sum(U).
    double weight_sum = 0.0;
    double weighted_d = 0.0;
    for (const std::size_t k : usable) {
        const double u = 1.0 / terms[k].v;
        weight_sum += u;
        weighted_d += terms[k].d * u;
    }
    const double mean_d = weighted_d / weight_sum;
    double w = 0.0;
    for (const std::size_t k : usable) {
        const double u = 1.0 / terms[k].v;
        const double dd = terms[k].d - mean_d;
        w += u * (dd * dd);
    }
    out.test = make_test_result(w, static_cast<int>(usable.size()) - 1);
    return out;
}

}  // namespace sdmaf
