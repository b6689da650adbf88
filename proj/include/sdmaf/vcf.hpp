#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "sdmaf/io_util.hpp"
#include "sdmaf/manifest.hpp"
#include "sdmaf/regions.hpp"
#include "sdmaf/types.hpp"

namespace sdmaf {

struct QcCounters {
    std::int64_t variants_read = 0;
    std::int64_t skipped_multiallelic = 0;
    std::int64_t skipped_non_snp = 0;
    std::int64_t malformed_skipped = 0;
    std::int64_t filtered_maf = 0;
    std::int64_t het_male_excluded = 0;
    std::int64_t variants_tested = 0;
};

enum class MalformedPolicy { Abort, Skip };

struct VcfOptions {
    /// A variant is kept only when every population's own minor-allele
    /// frequency (over both sexes) is at least this.
    double maf_threshold = 0.05;
    MalformedPolicy on_malformed = MalformedPolicy::Abort;
};

namespace detail {

/// Fills pop_maf / sample_maf / minor orientation bookkeeping that both
/// the VCF reader and the simulators share.  Counts in `rec.strata` are
/// assumed already oriented; frequencies come straight off the integers.
inline void compute_record_mafs(VariantRecord& rec) {
    std::int64_t minor_all = 0;
    std::int64_t total_all = 0;
    rec.pop_maf.assign(rec.strata.size(), 0.0);
    for (std::size_t k = 0; k < rec.strata.size(); ++k) {
        const auto& s = rec.strata[k];
        std::int64_t minor = 2 * s.female.n_BB + s.female.n_het;
        std::int64_t tot = 2 * s.female.total();
        if (const auto* d = std::get_if<DiploidCounts>(&s.male)) {
            minor += 2 * d->n_BB + d->n_het;
            tot += 2 * d->total();
        } else {
            const auto& h = std::get<HaploidCounts>(s.male);
            minor += h.n_B;
            tot += h.total();
        }
        minor_all += minor;
        total_all += tot;
        rec.pop_maf[k] = tot == 0 ? 0.0
                                  : static_cast<double>(std::min(minor, tot - minor)) /
                                        static_cast<double>(tot);
    }
    rec.sample_maf = total_all == 0
                         ? 0.0
                         : static_cast<double>(std::min(minor_all, total_all - minor_all)) /
                               static_cast<double>(total_all);
}

}  // namespace detail

/// Streams analysable variant records out of a (possibly gzipped) VCF:
/// bi-allelic SNPs only, genotypes tallied per (population, sex)
/// stratum, counts oriented to the whole-sample minor allele, male
/// calls in XNpr regions treated as hemizygous (heterozygous diploid
/// calls there are excluded and counted), and a per-population MAF
/// filter applied.  Re-streaming the same inputs reproduces the same
/// records.
class VcfStream {
public:
    VcfStream(const std::string& path, const SampleManifest& manifest, const RegionMap& regions,
              VcfOptions options = {})
        : reader_(path), manifest_(&manifest), regions_(&regions), options_(options) {
        parse_header(path);
    }

    const QcCounters& qc() const { return qc_; }
    const std::vector<std::string>& warnings() const { return warnings_; }

    /// Next variant passing all filters; nullopt at end of file.
    std::optional<VariantRecord> next() {
        std::string line;
        while (reader_.getline(line)) {
            ++line_no_;
            if (line.empty()) continue;
            if (line[0] == '#') continue;
            ++qc_.variants_read;
            VariantRecord rec;
            if (parse_line(line, rec)) {
                ++qc_.variants_tested;
                return rec;
            }
        }
        return std::nullopt;
    }

private:
    struct ColumnTarget {
        std::int32_t population = -1;  // -1: sample not in manifest
        Sex sex = Sex::Female;
    };

    [[noreturn]] void malformed_abort(const std::string& why) const {
        throw InputError("malformed VCF record at line " + std::to_string(line_no_) + ": " + why);
    }

    void parse_header(const std::string& path) {
        std::string line;
        while (reader_.getline(line)) {
            ++line_no_;
            if (line.rfind("##", 0) == 0) continue;
            if (line.rfind("#CHROM", 0) == 0) {
                std::vector<std::string_view> fields;
                split_tabs(line, fields);
                if (fields.size() < 10)
                    throw InputError("VCF " + path + " has no FORMAT/sample columns");
                std::size_t unmatched = 0;
                columns_.resize(fields.size() - 9);
                for (std::size_t i = 9; i < fields.size(); ++i) {
                    const std::string name(fields[i]);
                    const auto it = manifest_->samples.find(name);
                    if (it == manifest_->samples.end()) {
                        ++unmatched;
                        continue;
                    }
                    columns_[i - 9].population = static_cast<std::int32_t>(it->second.population);
                    columns_[i - 9].sex = it->second.sex;
                }
                if (unmatched > 0)
                    warnings_.push_back(std::to_string(unmatched) +
                                        " VCF sample(s) not present in the manifest; ignored");
                return;
            }
            throw InputError("VCF " + path + ": expected #CHROM header before data lines");
        }
        throw InputError("VCF " + path + " has no #CHROM header line");
    }

    static bool is_snp_allele(std::string_view a) {
        if (a.size() != 1) return false;
        switch (a[0]) {
            case 'A': case 'C': case 'G': case 'T':
            case 'a': case 'c': case 'g': case 't':
                return true;
            default:
                return false;
        }
    }

    /// The GT subfield of one sample column, given its index in FORMAT.
    static std::string_view gt_subfield(std::string_view field, int gt_index) {
        int idx = 0;
        std::size_t start = 0;
        for (std::size_t i = 0; i <= field.size(); ++i) {
            if (i == field.size() || field[i] == ':') {
                if (idx == gt_index) return field.substr(start, i - start);
                ++idx;
                start = i + 1;
            }
        }
        return {};
    }

    // Returns false and sets `why` for a structurally bad token.
    // A parsed token is either missing, haploid (one allele), or diploid.
    struct GtCall {
        bool missing = false;
        bool haploid = false;
        int a = 0;
        int b = 0;
    };
    static bool parse_gt(std::string_view gt, GtCall& call, std::string& why) {
        if (gt.empty()) {
            why = "empty GT";
            return false;
        }
        if (gt.find('.') != std::string_view::npos) {
            call.missing = true;
            return true;
        }
        const std::size_t sep = gt.find_first_of("/|");
        const auto allele = [&why](std::string_view s, int& out) {
            if (s.size() == 1 && (s[0] == '0' || s[0] == '1')) {
                out = s[0] - '0';
                return true;
            }
            why = "allele index out of range in GT '" + std::string(s) + "'";
            return false;
        };
        if (sep == std::string_view::npos) {
            call.haploid = true;
            return allele(gt, call.a);
        }
        if (!allele(gt.substr(0, sep), call.a)) return false;
        return allele(gt.substr(sep + 1), call.b);
    }

    bool handle_malformed(const std::string& why) {
        if (options_.on_malformed == MalformedPolicy::Abort) malformed_abort(why);
        ++qc_.malformed_skipped;
        if (warnings_.size() < 20)
            warnings_.push_back("skipped malformed record at line " + std::to_string(line_no_) +
                                ": " + why);
        return false;
    }

    // Parses one data line; true when a record passing all filters was
    // produced.  Tallies are alt-oriented first, then flipped to the
    // whole-sample minor allele.
    bool parse_line(const std::string& line, VariantRecord& rec) {
        split_tabs(line, fields_);
        if (fields_.size() != 9 + columns_.size())
            return handle_malformed("expected " + std::to_string(9 + columns_.size()) +
                                    " columns, found " + std::to_string(fields_.size()));

        rec.chrom = std::string(fields_[0]);
        std::int64_t pos = 0;
        {
            const auto s = fields_[1];
            const auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), pos);
            if (ec != std::errc{} || p != s.data() + s.size() || pos < 0)
                return handle_malformed("bad POS '" + std::string(s) + "'");
        }
        rec.pos = pos;
        rec.id = std::string(fields_[2]);
        rec.ref_allele = std::string(fields_[3]);
        rec.alt_allele = std::string(fields_[4]);

        if (rec.alt_allele.find(',') != std::string::npos) {
            ++qc_.skipped_multiallelic;
            return false;
        }
        if (!is_snp_allele(rec.ref_allele) || !is_snp_allele(rec.alt_allele)) {
            ++qc_.skipped_non_snp;
            return false;
        }

        int gt_index = -1;
        {
            int idx = 0;
            const std::string_view fmt = fields_[8];
            std::size_t start = 0;
            for (std::size_t i = 0; i <= fmt.size(); ++i) {
                if (i == fmt.size() || fmt[i] == ':') {
                    if (fmt.substr(start, i - start) == "GT") {
                        gt_index = idx;
                        break;
                    }
                    ++idx;
                    start = i + 1;
                }
            }
        }
        if (gt_index < 0) return handle_malformed("FORMAT has no GT field");

        rec.region = regions_->classify(rec.chrom, rec.pos);
        const bool male_haploid = rec.region == RegionClass::XNpr;
        const std::size_t npop = manifest_->population_count();

        rec.strata.assign(npop, {});
        for (std::size_t k = 0; k < npop; ++k) {
            rec.strata[k].population = manifest_->populations[k];
            if (male_haploid)
                rec.strata[k].male = HaploidCounts{};
            else
                rec.strata[k].male = DiploidCounts{};
        }

        std::int64_t het_males_here = 0;
        std::string why;
        for (std::size_t i = 0; i < columns_.size(); ++i) {
            const ColumnTarget tgt = columns_[i];
            if (tgt.population < 0) continue;
            const std::string_view gt = gt_subfield(fields_[9 + i], gt_index);
            GtCall call;
            if (!parse_gt(gt, call, why)) return handle_malformed(why);
            if (call.missing) continue;
            auto& stratum = rec.strata[static_cast<std::size_t>(tgt.population)];
            if (tgt.sex == Sex::Male && male_haploid) {
                int allele;
                if (call.haploid) {
                    allele = call.a;
                } else if (call.a == call.b) {
                    allele = call.a;  // homozygous diploid call: take the allele
                } else {
                    ++het_males_here;  // heterozygous call in a hemizygous region
                    continue;
                }
                auto& h = std::get<HaploidCounts>(stratum.male);
                if (allele == 0)
                    ++h.n_b;
                else
                    ++h.n_B;
            } else {
                if (call.haploid) continue;  // haploid call where a diploid one is needed
                DiploidCounts& d = tgt.sex == Sex::Female
                                       ? stratum.female
                                       : std::get<DiploidCounts>(stratum.male);
                const int alt_copies = call.a + call.b;
                if (alt_copies == 0)
                    ++d.n_bb;
                else if (alt_copies == 1)
                    ++d.n_het;
                else
                    ++d.n_BB;
            }
        }
        qc_.het_male_excluded += het_males_here;

        // Orient to the whole-sample minor allele (ties keep alt).
        std::int64_t alt_alleles = 0;
        std::int64_t total_alleles = 0;
        for (const auto& s : rec.strata) {
            alt_alleles += 2 * s.female.n_BB + s.female.n_het;
            total_alleles += 2 * s.female.total();
            if (const auto* d = std::get_if<DiploidCounts>(&s.male)) {
                alt_alleles += 2 * d->n_BB + d->n_het;
                total_alleles += 2 * d->total();
            } else {
                const auto& h = std::get<HaploidCounts>(s.male);
                alt_alleles += h.n_B;
                total_alleles += h.total();
            }
        }
        rec.minor_is_alt = 2 * alt_alleles <= total_alleles;
        if (!rec.minor_is_alt) {
            for (auto& s : rec.strata) {
                s.female = s.female.flipped();
                s.male = flipped(s.male);
            }
        }

        detail::compute_record_mafs(rec);
        for (const double maf : rec.pop_maf) {
            if (maf < options_.maf_threshold) {
                ++qc_.filtered_maf;
                return false;
            }
        }

        rec.missing_female.assign(npop, 0);
        rec.missing_male.assign(npop, 0);
        for (std::size_t k = 0; k < npop; ++k) {
            rec.missing_female[k] = manifest_->n_female[k] - rec.strata[k].female.total();
            rec.missing_male[k] = manifest_->n_male[k] - total(rec.strata[k].male);
        }
        return true;
    }

    TextReader reader_;
    const SampleManifest* manifest_;
    const RegionMap* regions_;
    VcfOptions options_;
    std::vector<ColumnTarget> columns_;
    std::vector<std::string_view> fields_;
    QcCounters qc_;
    std::vector<std::string> warnings_;
    std::int64_t line_no_ = 0;
};

}  // namespace sdmaf
