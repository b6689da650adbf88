#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "sdmaf/io_util.hpp"
#include "sdmaf/manifest.hpp"
#include "sdmaf/pipeline.hpp"
#include "sdmaf/regions.hpp"
#include "sdmaf/stats.hpp"
#include "sdmaf/types.hpp"
#include "sdmaf/vcf.hpp"

namespace sdmaf {

struct TestSelection {
    bool single = true;
    bool multi = true;
    bool pooled = true;
    bool pair_diff = true;
    bool omnibus = true;
};

/// Column plan for the result table, fixed once per run from the
/// population list and test selection.
struct RowLayout {
    std::vector<std::string> populations;
    std::size_t baseline = 0;
    TestSelection tests;
    std::vector<std::pair<std::size_t, std::size_t>> pairs;  // (pop, reference)

    static RowLayout make(const std::vector<std::string>& populations,
                          const std::string& baseline_label, const TestSelection& tests,
                          bool all_pairs) {
        RowLayout layout;
        layout.populations = populations;
        layout.tests = tests;
        if (!baseline_label.empty()) {
            bool found = false;
            for (std::size_t k = 0; k < populations.size(); ++k)
                if (populations[k] == baseline_label) {
                    layout.baseline = k;
                    found = true;
                }
            if (!found)
                throw InputError("baseline population '" + baseline_label +
                                 "' is not in the manifest");
        }
        if (tests.pair_diff && populations.size() > 1) {
            if (all_pairs) {
                for (std::size_t a = 0; a < populations.size(); ++a)
                    for (std::size_t b = a + 1; b < populations.size(); ++b)
                        layout.pairs.emplace_back(a, b);
            } else {
                for (std::size_t k = 0; k < populations.size(); ++k)
                    if (k != layout.baseline) layout.pairs.emplace_back(k, layout.baseline);
            }
        }
        return layout;
    }

    std::string header() const {
        std::string h = "chrom\tpos\tid\tref\talt\tminor_allele\tregion\tmaf";
        for (const auto& p : populations) {
            h += '\t' + p + "_n_f\t" + p + "_n_m\t" + p + "_f_bb\t" + p + "_f_bB\t" + p +
                 "_f_BB\t" + p + "_m_bb\t" + p + "_m_bB\t" + p + "_m_BB\t" + p + "_pf\t" + p +
                 "_pm\t" + p + "_delta_f\t" + p + "_delta_m\t" + p + "_sdmaf";
            if (tests.single) h += '\t' + p + "_single_p";
        }
        if (tests.multi) h += "\tmulti_W\tmulti_df\tmulti_p";
        if (tests.pooled) h += "\tpooled_W\tpooled_p";
        for (const auto& [a, b] : pairs)
            h += '\t' + populations[a] + "_vs_" + populations[b] + "_W\t" + populations[a] +
                 "_vs_" + populations[b] + "_p";
        if (tests.omnibus) h += "\tomnibus_W\tomnibus_df\tomnibus_p";
        h += '\n';
        return h;
    }
};

/// One formatted result row plus the p-values the summary needs.
struct RowStats {
    std::string line;
    std::string freq_lines;  // frequency-table rows, when exporting
    std::string variant_key;
    std::optional<double> multi_p;
    std::optional<double> pooled_p;
    std::optional<double> omnibus_p;
    std::vector<std::optional<double>> single_p;
    std::vector<std::optional<double>> pair_p;
};

namespace detail {

inline void append_na(std::string& s) { s += "NA"; }

inline void append_test(std::string& s, const std::optional<TestResult>& t, bool with_df) {
    if (t) {
        s += format_double(t->statistic, 12);
        if (with_df) {
            s += '\t';
            s += std::to_string(t->df);
        }
        s += '\t';
        s += format_pvalue(t->neg_log10_p);
    } else {
        append_na(s);
        if (with_df) {
            s += '\t';
            append_na(s);
        }
        s += '\t';
        append_na(s);
    }
}

inline bool stratum_pair_usable(const PopulationStratumPair& s) {
    return s.female.total() > 0 && total(s.male) > 0;
}

inline void append_freq(std::string& s, std::int64_t count, std::int64_t n) {
    if (n == 0) {
        append_na(s);
        return;
    }
    s += format_double(static_cast<double>(count) / static_cast<double>(n), 10);
}

}  // namespace detail

/// Computes every selected test for one variant and renders the result
/// row (and optional frequency-table rows).  Pure: safe to call from
/// any thread.
inline RowStats compute_row(const VariantRecord& rec, const RowLayout& layout,
                            bool export_freqs = false) {
    const std::size_t npop = rec.strata.size();
    if (npop != layout.populations.size())
        throw Error("variant record population count does not match the layout");

    RowStats out;
    out.variant_key = (rec.id.empty() || rec.id == ".")
                          ? rec.chrom + ":" + std::to_string(rec.pos)
                          : rec.id;

    std::vector<bool> usable(npop);
    bool all_usable = true;
    for (std::size_t k = 0; k < npop; ++k) {
        usable[k] = detail::stratum_pair_usable(rec.strata[k]);
        all_usable = all_usable && usable[k];
    }

    std::string& line = out.line;
    line.reserve(512);
    line += rec.chrom;
    line += '\t';
    line += std::to_string(rec.pos);
    line += '\t';
    line += rec.id;
    line += '\t';
    line += rec.ref_allele;
    line += '\t';
    line += rec.alt_allele;
    line += '\t';
    line += rec.minor_is_alt ? rec.alt_allele : rec.ref_allele;
    line += '\t';
    line += to_string(rec.region);
    line += '\t';
    line += format_double(rec.sample_maf);

    out.single_p.assign(npop, std::nullopt);
    for (std::size_t k = 0; k < npop; ++k) {
        const auto& s = rec.strata[k];
        const std::int64_t n_f = s.female.total();
        const std::int64_t n_m = total(s.male);
        line += '\t';
        line += std::to_string(n_f);
        line += '\t';
        line += std::to_string(n_m);
        line += '\t';
        line += std::to_string(s.female.n_bb);
        line += '\t';
        line += std::to_string(s.female.n_het);
        line += '\t';
        line += std::to_string(s.female.n_BB);
        line += '\t';
        if (const auto* d = std::get_if<DiploidCounts>(&s.male)) {
            line += std::to_string(d->n_bb);
            line += '\t';
            line += std::to_string(d->n_het);
            line += '\t';
            line += std::to_string(d->n_BB);
        } else {
            const auto& h = std::get<HaploidCounts>(s.male);
            line += std::to_string(h.n_b);
            line += "\tNA\t";
            line += std::to_string(h.n_B);
        }
        if (usable[k]) {
            const StratumEstimate ef = estimate_stratum(s.female);
            const StratumEstimate em = estimate_stratum(s.male);
            line += '\t';
            line += format_double(ef.p_hat);
            line += '\t';
            line += format_double(em.p_hat);
            line += '\t';
            line += format_double(*ef.delta_hat);
            line += '\t';
            if (em.delta_hat)
                line += format_double(*em.delta_hat);
            else
                detail::append_na(line);
            line += '\t';
            line += format_double(ef.p_hat - em.p_hat);
        } else {
            for (int i = 0; i < 5; ++i) {
                line += '\t';
                detail::append_na(line);
            }
        }
        if (layout.tests.single) {
            const auto t = usable[k] ? sdmaf_single(s, rec.region) : std::nullopt;
            if (t) out.single_p[k] = t->p_value;
            line += '\t';
            if (t)
                line += format_pvalue(t->neg_log10_p);
            else
                detail::append_na(line);
        }
    }

    if (layout.tests.multi) {
        std::optional<TestResult> t;
        if (all_usable) t = sdmaf_multi(rec.strata, rec.region);
        if (t) out.multi_p = t->p_value;
        line += '\t';
        detail::append_test(line, t, true);
    }
    if (layout.tests.pooled) {
        std::optional<TestResult> t;
        if (all_usable) t = sdmaf_pooled(rec.strata, rec.region);
        if (t) out.pooled_p = t->p_value;
        line += '\t';
        detail::append_test(line, t, false);
    }
    out.pair_p.assign(layout.pairs.size(), std::nullopt);
    for (std::size_t i = 0; i < layout.pairs.size(); ++i) {
        const auto [a, b] = layout.pairs[i];
        std::optional<TestResult> t;
        if (usable[a] && usable[b])
            t = sdmaf_pair_diff(rec.strata[a], rec.strata[b], rec.region);
        if (t) out.pair_p[i] = t->p_value;
        line += '\t';
        detail::append_test(line, t, false);
    }
    if (layout.tests.omnibus) {
        std::optional<TestResult> t;
        if (npop >= 2) {
            std::vector<PopulationStratumPair> subset;
            for (std::size_t k = 0; k < npop; ++k)
                if (usable[k]) subset.push_back(rec.strata[k]);
            if (subset.size() >= 2) {
                const OmnibusDiffResult r = sdmaf_omnibus_diff(subset, rec.region);
                t = r.test;
            }
        }
        if (t) out.omnibus_p = t->p_value;
        line += '\t';
        detail::append_test(line, t, true);
    }
    line += '\n';

    if (export_freqs) {
        std::string& fl = out.freq_lines;
        for (std::size_t k = 0; k < npop; ++k) {
            const auto& s = rec.strata[k];
            fl += out.variant_key;
            fl += '\t';
            fl += to_string(rec.region);
            fl += '\t';
            fl += layout.populations[k];
            const std::int64_t n_f = s.female.total();
            fl += '\t';
            detail::append_freq(fl, s.female.n_bb, n_f);
            fl += '\t';
            detail::append_freq(fl, s.female.n_het, n_f);
            fl += '\t';
            detail::append_freq(fl, s.female.n_BB, n_f);
            if (const auto* d = std::get_if<DiploidCounts>(&s.male)) {
                const std::int64_t n_m = d->total();
                fl += '\t';
                detail::append_freq(fl, d->n_bb, n_m);
                fl += '\t';
                detail::append_freq(fl, d->n_het, n_m);
                fl += '\t';
                detail::append_freq(fl, d->n_BB, n_m);
            } else {
                const auto& h = std::get<HaploidCounts>(s.male);
                const std::int64_t n_m = h.total();
                fl += '\t';
                detail::append_freq(fl, h.n_b, n_m);
                fl += "\tNA\t";
                detail::append_freq(fl, h.n_B, n_m);
            }
            fl += '\n';
        }
    }
    return out;
}

inline const char* frequency_table_header() {
    return "variant_id\tregion\tpopulation\tfemale_bb\tfemale_bB\tfemale_BB\tmale_bb\tmale_bB\tmale_BB\n";
}

struct ScanConfig {
    std::string vcf_path;
    std::string manifest_path;
    std::string region_path;  // empty: everything autosomal
    double maf_threshold = 0.05;
    std::string baseline;  // empty: first population alphabetically
    double significance_threshold = 5e-8;
    TestSelection tests;
    bool all_pairs = false;
    std::string out_dir;
    int workers = 1;
    bool gzip_output = false;
    std::string freq_table_path;  // empty: no frequency export
    MalformedPolicy on_malformed = MalformedPolicy::Abort;
};

struct ScanSummary {
    QcCounters qc;
    std::int64_t rows = 0;
    /// Count of variants below the significance threshold, per test key
    /// (multi, pooled, omnibus, single_<POP>, pair_<P>_vs_<Q>).
    std::map<std::string, std::int64_t> significant;
    /// Variants significant under the stratified test but not pooled,
    /// and vice versa.
    std::vector<std::string> multi_only;
    std::vector<std::string> pooled_only;
    std::vector<std::string> warnings;
};

namespace detail {

inline void accumulate(ScanSummary& summary, const RowStats& row, const RowLayout& layout,
                       double threshold) {
    ++summary.rows;
    const auto sig = [threshold](const std::optional<double>& p) {
        return p.has_value() && *p < threshold;
    };
    if (layout.tests.multi && sig(row.multi_p)) ++summary.significant["multi"];
    if (layout.tests.pooled && sig(row.pooled_p)) ++summary.significant["pooled"];
    if (layout.tests.omnibus && sig(row.omnibus_p)) ++summary.significant["omnibus"];
    if (layout.tests.single)
        for (std::size_t k = 0; k < row.single_p.size(); ++k)
            if (sig(row.single_p[k]))
                ++summary.significant["single_" + layout.populations[k]];
    for (std::size_t i = 0; i < row.pair_p.size(); ++i)
        if (sig(row.pair_p[i]))
            ++summary.significant["pair_" + layout.populations[layout.pairs[i].first] + "_vs_" +
                                  layout.populations[layout.pairs[i].second]];
    if (layout.tests.multi && layout.tests.pooled) {
        const bool m = sig(row.multi_p);
        const bool p = sig(row.pooled_p);
        if (m && !p) summary.multi_only.push_back(row.variant_key);
        if (p && !m) summary.pooled_only.push_back(row.variant_key);
    }
}

inline void write_summary_files(const ScanSummary& summary, const RowLayout& layout,
                                const std::filesystem::path& dir) {
    {
        TextWriter qc(
            (dir / "qc_summary.tsv").string());
        qc.write(
            "variants_read\tskipped_multiallelic\tskipped_non_snp\tmalformed_skipped\tfiltered_"
            "maf\thet_male_excluded\tvariants_tested\n");
        qc.write(std::to_string(summary.qc.variants_read) + '\t' +
                 std::to_string(summary.qc.skipped_multiallelic) + '\t' +
                 std::to_string(summary.qc.skipped_non_snp) + '\t' +
                 std::to_string(summary.qc.malformed_skipped) + '\t' +
                 std::to_string(summary.qc.filtered_maf) + '\t' +
                 std::to_string(summary.qc.het_male_excluded) + '\t' +
                 std::to_string(summary.qc.variants_tested) + '\n');
        qc.close();
    }
    {
        TextWriter s((dir / "summary.tsv").string());
        s.write("key\tvalue\n");
        s.write("variants_tested\t" + std::to_string(summary.rows) + '\n');
        std::vector<std::string> keys;
        if (layout.tests.multi) keys.push_back("multi");
        if (layout.tests.pooled) keys.push_back("pooled");
        if (layout.tests.omnibus) keys.push_back("omnibus");
        if (layout.tests.single)
            for (const auto& p : layout.populations) keys.push_back("single_" + p);
        for (const auto& [a, b] : layout.pairs)
            keys.push_back("pair_" + layout.populations[a] + "_vs_" + layout.populations[b]);
        for (const auto& key : keys) {
            const auto it = summary.significant.find(key);
            s.write("significant_" + key + '\t' +
                    std::to_string(it == summary.significant.end() ? 0 : it->second) + '\n');
        }
        if (layout.tests.multi && layout.tests.pooled) {
            s.write("multi_only_count\t" + std::to_string(summary.multi_only.size()) + '\n');
            s.write("pooled_only_count\t" + std::to_string(summary.pooled_only.size()) + '\n');
            const auto join = [](const std::vector<std::string>& v) {
                std::string out;
                for (std::size_t i = 0; i < v.size(); ++i) {
                    if (i) out += ',';
                    out += v[i];
                }
                return out;
            };
            s.write("multi_only_ids\t" + join(summary.multi_only) + '\n');
            s.write("pooled_only_ids\t" + join(summary.pooled_only) + '\n');
        }
        s.close();
    }
}

}  // namespace detail

/// Streams the VCF through the test battery into <out_dir>/results.tsv
/// (plus qc_summary.tsv and summary.tsv, and optionally a frequency
/// table).  Output is identical for any worker count.
inline ScanSummary run_scan(const ScanConfig& config) {
    const SampleManifest manifest = load_manifest(config.manifest_path);
    const RegionMap regions = RegionMap::load(config.region_path);
    const RowLayout layout =
        RowLayout::make(manifest.populations, config.baseline, config.tests, config.all_pairs);

    VcfOptions vcf_options;
    vcf_options.maf_threshold = config.maf_threshold;
    vcf_options.on_malformed = config.on_malformed;
    VcfStream vcf(config.vcf_path, manifest, regions, vcf_options);

    const std::filesystem::path dir(config.out_dir);
    std::filesystem::create_directories(dir);
    TextWriter results((dir / (config.gzip_output ? "results.tsv.gz" : "results.tsv")).string());
    results.write(layout.header());

    std::unique_ptr<TextWriter> freqs;
    if (!config.freq_table_path.empty()) {
        freqs = std::make_unique<TextWriter>(config.freq_table_path);
        freqs->write(frequency_table_header());
    }

    ScanSummary summary;
    summary.warnings = manifest.warnings;

    run_ordered(
        [&vcf]() { return vcf.next(); },
        [&layout, &freqs](VariantRecord&& rec) {
            return compute_row(rec, layout, freqs != nullptr);
        },
        [&](RowStats&& row) {
            results.write(row.line);
            if (freqs) freqs->write(row.freq_lines);
            detail::accumulate(summary, row, layout, config.significance_threshold);
        },
        config.workers);

    results.close();
    if (freqs) freqs->close();

    summary.qc = vcf.qc();
    for (const auto& w : vcf.warnings()) summary.warnings.push_back(w);
    detail::write_summary_files(summary, layout, dir);
    return summary;
}

}  // namespace sdmaf
