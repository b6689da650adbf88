#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "sdmaf/io_util.hpp"
#include "sdmaf/rng.hpp"
#include "sdmaf/types.hpp"
#include "sdmaf/vcf.hpp"

// Null-hypothesis genotype simulation.
//
// MultiPop draws both sexes of every population from that population's
// female genotype frequencies (no sex difference anywhere, population
// structure preserved); in hemizygous regions male minor-allele counts
// are binomial on the female minor-allele frequency.
//
// BetweenPop draws every population's females from the pooled female
// genotype frequencies and every population's males from the pooled
// male frequencies (sex differences may exist but are identical across
// populations — the null of the between-population tests).

namespace sdmaf {

enum class NullProtocol { MultiPop, BetweenPop };

inline const char* to_string(NullProtocol p) {
    return p == NullProtocol::MultiPop ? "multipop" : "betweenpop";
}

/// Genotype frequencies for one diploid stratum (must sum to 1).
struct DiploidFreqs {
    double bb = 0.0;
    double het = 0.0;
    double BB = 0.0;

    double minor_allele_freq() const { return 0.5 * het + BB; }
};

struct PopulationSizes {
    std::string label;
    std::int64_t n_female = 0;
    std::int64_t n_male = 0;
};

struct NullSpec {
    NullProtocol protocol = NullProtocol::MultiPop;
    std::vector<PopulationSizes> sizes;
    std::uint64_t seed = 0;
};

/// Per-population source frequencies for one simulated variant.  The
/// male side is used only by the BetweenPop protocol: genotype
/// frequencies where males are diploid, a bare allele frequency where
/// they are hemizygous.
struct PopulationFreqs {
    DiploidFreqs female;
    DiploidFreqs male;
    double male_allele = std::numeric_limits<double>::quiet_NaN();
};

struct VariantSource {
    std::string id;
    RegionClass region = RegionClass::Autosomal;
    std::vector<PopulationFreqs> pops;
};

namespace detail {

constexpr std::uint64_t kDrawSalt = 0x5d3a;
constexpr std::uint64_t kSourceSalt = 0xa27e;

inline void check_freqs(const DiploidFreqs& f, const char* what) {
    if (!(f.bb >= 0.0) || !(f.het >= 0.0) || !(f.BB >= 0.0) ||
        std::fabs(f.bb + f.het + f.BB - 1.0) > 1e-12)
        throw Error(std::string("invalid ") + what + " genotype frequencies");
}

inline DiploidCounts draw_diploid(std::int64_t n, const DiploidFreqs& f, SplitMix64& rng) {
    const double probs[3] = {f.bb, f.het, f.BB};
    const auto c = multinomial_draw(n, probs, rng);
    return DiploidCounts{c[0], c[1], c[2]};
}

}  // namespace detail

/// Genotype frequencies implied by minor-allele frequency p and
/// departure-from-independence delta.
inline DiploidFreqs freqs_from_p_delta(double p, double delta) {
    DiploidFreqs f;
    f.bb = (1.0 - p) * (1.0 - p) + delta;
    f.het = 2.0 * p * (1.0 - p) - 2.0 * delta;
    f.BB = p * p + delta;
    detail::check_freqs(f, "derived");
    return f;
}

/// The admissible departure range at minor-allele frequency p:
/// [-min(p, 1-p)^2, p(1-p)].
inline std::pair<double, double> delta_range(double p) {
    const double m = std::min(p, 1.0 - p);
    return {-(m * m), p * (1.0 - p)};
}

/// Draws counts for every stratum of one variant under the given null
/// protocol.  Draws depend only on (spec.seed, index), so any subset of
/// variants can be generated in any order or in parallel.
inline VariantRecord simulate_variant(const NullSpec& spec, const VariantSource& src,
                                      std::uint64_t index) {
    if (spec.sizes.empty()) throw Error("simulation requires at least one population");
    if (src.pops.size() != spec.sizes.size())
        throw Error("variant source has " + std::to_string(src.pops.size()) +
                    " populations but the size list has " + std::to_string(spec.sizes.size()));

    const bool npr = src.region == RegionClass::XNpr;
    SplitMix64 rng(stream_key(spec.seed, index, detail::kDrawSalt));

    // BetweenPop pools the source frequencies over populations, weighted
    // by stratum sizes, before any drawing.
    DiploidFreqs pooled_female{}, pooled_male{};
    double pooled_male_allele = 0.0;
    if (spec.protocol == NullProtocol::BetweenPop) {
        double nf_total = 0.0, nm_total = 0.0;
        for (std::size_t k = 0; k < src.pops.size(); ++k) {
            detail::check_freqs(src.pops[k].female, "female");
            const double nf = static_cast<double>(spec.sizes[k].n_female);
            const double nm = static_cast<double>(spec.sizes[k].n_male);
            pooled_female.bb += nf * src.pops[k].female.bb;
            pooled_female.het += nf * src.pops[k].female.het;
            pooled_female.BB += nf * src.pops[k].female.BB;
            nf_total += nf;
            if (npr) {
                if (!(src.pops[k].male_allele >= 0.0 && src.pops[k].male_allele <= 1.0))
                    throw Error("invalid male allele frequency in variant source");
                pooled_male_allele += nm * src.pops[k].male_allele;
            } else {
                detail::check_freqs(src.pops[k].male, "male");
                pooled_male.bb += nm * src.pops[k].male.bb;
                pooled_male.het += nm * src.pops[k].male.het;
                pooled_male.BB += nm * src.pops[k].male.BB;
            }
            nm_total += nm;
        }
        if (nf_total <= 0.0 || nm_total <= 0.0)
            throw Error("pooled stratum sizes must be positive");
        pooled_female.bb /= nf_total;
        pooled_female.het /= nf_total;
        pooled_female.BB /= nf_total;
        if (npr) {
            pooled_male_allele /= nm_total;
        } else {
            pooled_male.bb /= nm_total;
            pooled_male.het /= nm_total;
            pooled_male.BB /= nm_total;
        }
    }

    VariantRecord rec;
    rec.chrom = "sim";
    rec.pos = static_cast<std::int64_t>(index) + 1;
    rec.id = src.id.empty() ? "v" + std::to_string(index + 1) : src.id;
    rec.ref_allele = "A";
    rec.alt_allele = "C";
    rec.region = src.region;
    rec.strata.resize(spec.sizes.size());
    rec.missing_female.assign(spec.sizes.size(), 0);
    rec.missing_male.assign(spec.sizes.size(), 0);

    for (std::size_t k = 0; k < spec.sizes.size(); ++k) {
        auto& stratum = rec.strata[k];
        stratum.population = spec.sizes[k].label;

        const DiploidFreqs& female_src = spec.protocol == NullProtocol::BetweenPop
                                             ? pooled_female
                                             : src.pops[k].female;
        detail::check_freqs(female_src, "female");
        stratum.female = detail::draw_diploid(spec.sizes[k].n_female, female_src, rng);

        if (npr) {
            const double male_p = spec.protocol == NullProtocol::BetweenPop
                                      ? pooled_male_allele
                                      : female_src.minor_allele_freq();
            HaploidCounts h;
            h.n_B = binomial_draw(spec.sizes[k].n_male, male_p, rng);
            h.n_b = spec.sizes[k].n_male - h.n_B;
            stratum.male = h;
        } else {
            const DiploidFreqs& male_src = spec.protocol == NullProtocol::BetweenPop
                                               ? pooled_male
                                               : female_src;
            stratum.male = detail::draw_diploid(spec.sizes[k].n_male, male_src, rng);
        }
    }

    detail::compute_record_mafs(rec);
    return rec;
}

struct SyntheticOptions {
    double maf_lo = 0.05;
    double maf_hi = 0.5;
    /// Fraction of the admissible departure range to draw delta from;
    /// 0 keeps every stratum at independence.
    double hwd_fraction = 0.0;
};

/// Random per-variant source frequencies, deterministic in (seed, index).
/// MultiPop draws an independent (maf, delta) per population; BetweenPop
/// draws one female and one male source shared by all populations (so
/// a sex difference common to every population is possible).
inline VariantSource synthetic_source(NullProtocol protocol, std::uint64_t seed,
                                      std::uint64_t index, RegionClass region,
                                      std::size_t population_count,
                                      const SyntheticOptions& opt = {}) {
    if (population_count == 0) throw Error("synthetic source requires at least one population");
    if (!(opt.maf_lo >= 0.0 && opt.maf_hi <= 0.5 && opt.maf_lo <= opt.maf_hi))
        throw Error("synthetic MAF range must lie within [0, 0.5]");
    if (!(opt.hwd_fraction >= 0.0 && opt.hwd_fraction <= 1.0))
        throw Error("departure fraction must lie in [0, 1]");

    SplitMix64 rng(stream_key(seed, index, detail::kSourceSalt));
    const auto draw_pair = [&](double& p, double& delta) {
        p = opt.maf_lo + (opt.maf_hi - opt.maf_lo) * rng.next_double();
        const auto [lo, hi] = delta_range(p);
        const double u = rng.next_double();
        delta = opt.hwd_fraction * (lo + (hi - lo) * u);
    };

    VariantSource src;
    src.region = region;
    src.pops.resize(population_count);
    if (protocol == NullProtocol::MultiPop) {
        for (auto& pop : src.pops) {
            double p, delta;
            draw_pair(p, delta);
            pop.female = freqs_from_p_delta(p, delta);
            pop.male = pop.female;
            pop.male_allele = p;
        }
    } else {
        double pf, df, pm, dm;
        draw_pair(pf, df);
        draw_pair(pm, dm);
        const DiploidFreqs female = freqs_from_p_delta(pf, df);
        const DiploidFreqs male = freqs_from_p_delta(pm, dm);
        for (auto& pop : src.pops) {
            pop.female = female;
            pop.male = male;
            pop.male_allele = pm;
        }
    }
    return src;
}

/// Long-format frequency table: one row per (variant, population).
struct FrequencyTable {
    std::vector<std::string> populations;
    std::vector<VariantSource> variants;
};

/// Reads a table written by the scan's frequency export (or by hand).
/// Columns: variant_id, region, population, female_bb, female_bB,
/// female_BB, male_bb, male_bB, male_BB.  Hemizygous male rows carry
/// allele frequencies in male_bb / male_BB with male_bB = NA.
/// Frequencies are renormalized to sum exactly to 1; rows with NA
/// female frequencies drop the whole variant (with a note in
/// `skipped`).
inline FrequencyTable load_frequency_table(const std::string& path,
                                           std::vector<std::string>* skipped = nullptr) {
    TextReader reader(path);
    std::string line;
    std::vector<std::string_view> fields;
    if (!reader.getline(line)) throw InputError("frequency table " + path + " is empty");
    while (!line.empty() && line[0] == '#')
        if (!reader.getline(line)) throw InputError("frequency table " + path + " is empty");
    split_tabs(line, fields);
    const std::vector<std::string> expect = {"variant_id", "region",   "population",
                                             "female_bb",  "female_bB", "female_BB",
                                             "male_bb",    "male_bB",   "male_BB"};
    if (fields.size() != expect.size())
        throw InputError("frequency table " + path + ": expected 9 columns");
    for (std::size_t i = 0; i < expect.size(); ++i)
        if (std::string(fields[i]) != expect[i])
            throw InputError("frequency table " + path + ": column " + std::to_string(i + 1) +
                             " must be " + expect[i]);

    FrequencyTable table;
    struct Pending {
        VariantSource src;
        std::vector<std::string> pops;
        bool bad = false;
    };
    Pending cur;
    std::int64_t line_no = 1;

    const auto flush = [&]() {
        if (cur.pops.empty()) return;
        if (cur.bad) {
            if (skipped) skipped->push_back(cur.src.id);
        } else {
            if (table.populations.empty())
                table.populations = cur.pops;
            else if (table.populations != cur.pops)
                throw InputError("frequency table " + path + ": variant " + cur.src.id +
                                 " lists different populations than earlier variants");
            table.variants.push_back(std::move(cur.src));
        }
        cur = Pending{};
    };

    while (reader.getline(line)) {
        ++line_no;
        if (line.empty() || line[0] == '#') continue;
        split_tabs(line, fields);
        if (fields.size() != expect.size())
            throw InputError("frequency table line " + std::to_string(line_no) +
                             ": expected 9 columns");
        const std::string id(fields[0]);
        if (cur.pops.empty() || cur.src.id != id) {
            flush();
            cur.src.id = id;
            const auto region = region_from_string(std::string(fields[1]));
            if (!region)
                throw InputError("frequency table line " + std::to_string(line_no) +
                                 ": unknown region '" + std::string(fields[1]) + "'");
            cur.src.region = *region;
        }
        cur.pops.emplace_back(fields[2]);

        PopulationFreqs pf;
        const bool female_na = fields[3] == "NA" || fields[4] == "NA" || fields[5] == "NA";
        if (female_na) {
            cur.bad = true;
        } else {
            pf.female.bb = parse_double(fields[3], "female_bb");
            pf.female.het = parse_double(fields[4], "female_bB");
            pf.female.BB = parse_double(fields[5], "female_BB");
            const double s = pf.female.bb + pf.female.het + pf.female.BB;
            if (s <= 0.0 || std::fabs(s - 1.0) > 1e-6)
                throw InputError("frequency table line " + std::to_string(line_no) +
                                 ": female frequencies do not sum to 1");
            pf.female.bb /= s;
            pf.female.het /= s;
            pf.female.BB /= s;
        }
        if (cur.src.region == RegionClass::XNpr) {
            if (fields[6] == "NA" || fields[8] == "NA") {
                cur.bad = true;
            } else {
                const double b = parse_double(fields[6], "male_bb");
                const double B = parse_double(fields[8], "male_BB");
                const double s = b + B;
                if (s <= 0.0 || std::fabs(s - 1.0) > 1e-6)
                    throw InputError("frequency table line " + std::to_string(line_no) +
                                     ": male allele frequencies do not sum to 1");
                pf.male_allele = B / s;
            }
        } else {
            const bool male_na = fields[6] == "NA" || fields[7] == "NA" || fields[8] == "NA";
            if (male_na) {
                cur.bad = true;
            } else {
                pf.male.bb = parse_double(fields[6], "male_bb");
                pf.male.het = parse_double(fields[7], "male_bB");
                pf.male.BB = parse_double(fields[8], "male_BB");
                const double s = pf.male.bb + pf.male.het + pf.male.BB;
                if (s <= 0.0 || std::fabs(s - 1.0) > 1e-6)
                    throw InputError("frequency table line " + std::to_string(line_no) +
                                     ": male frequencies do not sum to 1");
                pf.male.bb /= s;
                pf.male.het /= s;
                pf.male.BB /= s;
            }
        }
        cur.src.pops.push_back(pf);
    }
    flush();
    if (table.variants.empty())
        throw InputError("frequency table " + path + " has no usable variants");
    return table;
}

}  // namespace sdmaf
