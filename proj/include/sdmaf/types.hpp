#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

namespace sdmaf {

/// Base class for all library errors.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

/// Problems with user-supplied files or configuration (CLI exit code 1).
class InputError : public Error {
public:
    explicit InputError(const std::string& msg) : Error(msg) {}
};

/// Estimation was requested for a stratum with no called individuals.
class EmptyStratumError : public Error {
public:
    explicit EmptyStratumError(const std::string& msg) : Error(msg) {}
};

enum class Sex { Female, Male };
enum class Ploidy { Diploid, Haploid };

/// How a genomic position is treated: regular diploid-everywhere
/// (Autosomal), pseudo-autosomal on X (XPar, males diploid), or
/// non-pseudo-autosomal on X (XNpr, males hemizygous).
enum class RegionClass { Autosomal, XPar, XNpr };

inline const char* to_string(RegionClass r) {
    switch (r) {
        case RegionClass::Autosomal: return "autosomal";
        case RegionClass::XPar: return "par";
        case RegionClass::XNpr: return "npr";
    }
    return "?";
}

inline std::optional<RegionClass> region_from_string(const std::string& s) {
    if (s == "autosomal") return RegionClass::Autosomal;
    if (s == "par") return RegionClass::XPar;
    if (s == "npr") return RegionClass::XNpr;
    return std::nullopt;
}

/// Genotype counts for one diploid stratum, oriented so that B is the
/// minor allele: n_bb major homozygotes, n_het heterozygotes, n_BB
/// minor homozygotes.
struct DiploidCounts {
    std::int64_t n_bb = 0;
    std::int64_t n_het = 0;
    std::int64_t n_BB = 0;

    std::int64_t total() const { return n_bb + n_het + n_BB; }

    /// Counts with the roles of the two alleles exchanged.
    DiploidCounts flipped() const { return {n_BB, n_het, n_bb}; }

    DiploidCounts& operator+=(const DiploidCounts& o) {
        n_bb += o.n_bb;
        n_het += o.n_het;
        n_BB += o.n_BB;
        return *this;
    }
    bool operator==(const DiploidCounts&) const = default;
};

/// Allele counts for one hemizygous stratum (B = minor allele).
struct HaploidCounts {
    std::int64_t n_b = 0;
    std::int64_t n_B = 0;

    std::int64_t total() const { return n_b + n_B; }
    HaploidCounts flipped() const { return {n_B, n_b}; }

    HaploidCounts& operator+=(const HaploidCounts& o) {
        n_b += o.n_b;
        n_B += o.n_B;
        return *this;
    }
    bool operator==(const HaploidCounts&) const = default;
};

using GenotypeCounts = std::variant<DiploidCounts, HaploidCounts>;

inline std::int64_t total(const GenotypeCounts& c) {
    return std::visit([](const auto& x) { return x.total(); }, c);
}

inline GenotypeCounts flipped(const GenotypeCounts& c) {
    return std::visit([](const auto& x) { return GenotypeCounts{x.flipped()}; }, c);
}

/// Minor-allele frequency estimate for one sex within one population.
/// delta_hat (the departure-from-independence term of the two allele
/// draws) is present only for diploid strata.
struct StratumEstimate {
    double p_hat = 0.0;
    std::optional<double> delta_hat;
    std::int64_t n = 0;
    Ploidy ploidy = Ploidy::Diploid;
};

/// Female and male genotype counts for one population at one variant.
struct PopulationStratumPair {
    DiploidCounts female;
    GenotypeCounts male;
    std::string population;
};

/// A Wald statistic referred to a chi-square reference distribution.
/// p_value may underflow to zero for extreme statistics; neg_log10_p is
/// computed in log space and stays finite and exact-to-precision.
struct TestResult {
    double statistic = 0.0;
    int df = 1;
    double p_value = 1.0;
    double neg_log10_p = 0.0;
};

/// One analysed variant: identity, region handling, per-population
/// stratified counts (minor-allele oriented), and allele-frequency
/// summaries.  missing_female/missing_male record, per population, how
/// many manifest samples contributed no usable call (missing genotype,
/// wrong-ploidy call, or excluded heterozygous hemizygous male), so
/// counts.total() + missing == manifest stratum size.
struct VariantRecord {
    std::string chrom;
    std::int64_t pos = 0;
    std::string id;
    std::string ref_allele;
    std::string alt_allele;
    bool minor_is_alt = true;
    RegionClass region = RegionClass::Autosomal;
    std::vector<PopulationStratumPair> strata;
    std::vector<double> pop_maf;
    double sample_maf = 0.0;
    std::vector<std::int64_t> missing_female;
    std::vector<std::int64_t> missing_male;
};

}  // namespace sdmaf
