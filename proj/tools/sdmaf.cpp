// Command-line front end: scan a VCF, simulate null genotype data,
// and summarize result tables (inflation factor, QQ and two-track
// plot exports).
//
// Exit codes: 0 success, 1 input/usage error, 2 internal error.

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>
#include <string>
#include <vector>

#include "sdmaf/sdmaf.hpp"

namespace {

using namespace sdmaf;

const std::vector<PopulationSizes> kDefaultSizes = {
    {"AFR", 342, 319}, {"AMR", 177, 170}, {"EAS", 260, 244},
    {"EUR", 263, 240}, {"SAS", 229, 260},
};

std::vector<PopulationSizes> parse_sizes(const std::string& text) {
    std::vector<PopulationSizes> out;
    for (const std::string& item : split(text, ',')) {
        const auto parts = split(item, ':');
        if (parts.size() != 3 || parts[0].empty())
            throw InputError("bad --sizes entry '" + item + "' (expected LABEL:females:males)");
        PopulationSizes s;
        s.label = parts[0];
        s.n_female = parse_int(parts[1], "female count");
        s.n_male = parse_int(parts[2], "male count");
        if (s.n_female < 0 || s.n_male < 0)
            throw InputError("negative stratum size in --sizes entry '" + item + "'");
        out.push_back(std::move(s));
    }
    if (out.empty()) throw InputError("--sizes lists no populations");
    return out;
}

TestSelection parse_tests(const std::string& text) {
    TestSelection t;
    if (text.empty()) return t;
    t = {false, false, false, false, false};
    for (const std::string& tok : split(text, ',')) {
        if (tok == "single" || tok == "single-per-pop")
            t.single = true;
        else if (tok == "multi")
            t.multi = true;
        else if (tok == "pooled")
            t.pooled = true;
        else if (tok == "pair" || tok == "pair-diff")
            t.pair_diff = true;
        else if (tok == "omnibus" || tok == "omnibus-diff")
            t.omnibus = true;
        else
            throw InputError("unknown test '" + tok +
                             "' (expected single-per-pop, multi, pooled, pair-diff, omnibus-diff)");
    }
    return t;
}

int cmd_scan(const std::string& vcf, const std::string& manifest, const std::string& regions,
             double maf, const std::string& baseline, double significance,
             const std::string& tests, bool all_pairs, const std::string& out, int workers,
             bool gzip, const std::string& freq_out, bool skip_malformed) {
    ScanConfig config;
    config.vcf_path = vcf;
    config.manifest_path = manifest;
    config.region_path = regions;
    config.maf_threshold = maf;
    config.baseline = baseline;
    config.significance_threshold = significance;
    config.tests = parse_tests(tests);
    config.all_pairs = all_pairs;
    config.out_dir = out;
    config.workers = workers;
    config.gzip_output = gzip;
    config.freq_table_path = freq_out;
    config.on_malformed = skip_malformed ? MalformedPolicy::Skip : MalformedPolicy::Abort;

    const ScanSummary summary = run_scan(config);
    for (const auto& w : summary.warnings) std::cerr << "warning: " << w << '\n';
    std::cerr << "tested " << summary.rows << " of " << summary.qc.variants_read
              << " variants\n";
    return 0;
}

int cmd_simulate(const std::string& freqs_path, std::int64_t synthetic, const std::string& region,
                 const std::string& protocol_name, const std::string& sizes_text,
                 std::uint64_t seed, double maf_lo, double maf_hi, double hwd_fraction,
                 const std::string& out, int workers) {
    NullSpec spec;
    spec.seed = seed;
    if (protocol_name == "multipop")
        spec.protocol = NullProtocol::MultiPop;
    else if (protocol_name == "betweenpop")
        spec.protocol = NullProtocol::BetweenPop;
    else
        throw InputError("unknown protocol '" + protocol_name +
                         "' (expected multipop or betweenpop)");

    if (freqs_path.empty() == (synthetic == 0))
        throw InputError("exactly one of --freqs and --synthetic is required");

    std::vector<VariantSource> sources;
    std::vector<PopulationSizes> sizes =
        sizes_text.empty() ? kDefaultSizes : parse_sizes(sizes_text);

    if (!freqs_path.empty()) {
        std::vector<std::string> skipped;
        const FrequencyTable table = load_frequency_table(freqs_path, &skipped);
        for (const auto& id : skipped)
            std::cerr << "warning: variant " << id << " has incomplete frequencies; skipped\n";
        // align the size list with the table's population labels
        std::vector<PopulationSizes> aligned;
        for (const auto& label : table.populations) {
            bool found = false;
            for (const auto& s : sizes)
                if (s.label == label) {
                    aligned.push_back(s);
                    found = true;
                    break;
                }
            if (!found)
                throw InputError("no stratum sizes for population '" + label +
                                 "' (pass --sizes LABEL:females:males,...)");
        }
        sizes = std::move(aligned);
        sources = table.variants;
    }
    spec.sizes = sizes;

    RegionClass region_class = RegionClass::Autosomal;
    if (!region.empty()) {
        const auto r = region_from_string(region);
        if (!r)
            throw InputError("unknown region class '" + region +
                             "' (expected autosomal, par or npr)");
        region_class = *r;
    }

    SyntheticOptions opt;
    opt.maf_lo = maf_lo;
    opt.maf_hi = maf_hi;
    opt.hwd_fraction = hwd_fraction;

    const std::size_t count = freqs_path.empty()
                                  ? static_cast<std::size_t>(synthetic)
                                  : sources.size();

    RowLayout layout;
    {
        std::vector<std::string> labels;
        for (const auto& s : spec.sizes) labels.push_back(s.label);
        layout = RowLayout::make(labels, "", TestSelection{}, false);
    }

    TextWriter writer(out);
    {
        std::string head = "#protocol=";
        head += to_string(spec.protocol);
        head += "\tseed=" + std::to_string(spec.seed);
        head += "\tsizes=";
        for (std::size_t k = 0; k < spec.sizes.size(); ++k) {
            if (k) head += ',';
            head += spec.sizes[k].label + ':' + std::to_string(spec.sizes[k].n_female) + ':' +
                    std::to_string(spec.sizes[k].n_male);
        }
        if (freqs_path.empty()) {
            head += "\tsynthetic=" + std::to_string(count);
            head += "\tregion=";
            head += to_string(region_class);
        } else {
            head += "\tfreqs=" + freqs_path;
        }
        head += '\n';
        writer.write(head);
    }
    writer.write(layout.header());

    std::uint64_t next_index = 0;
    run_ordered(
        [&]() -> std::optional<std::uint64_t> {
            if (next_index >= count) return std::nullopt;
            return next_index++;
        },
        [&](std::uint64_t index) {
            const VariantSource src =
                freqs_path.empty()
                    ? synthetic_source(spec.protocol, spec.seed, index, region_class,
                                       spec.sizes.size(), opt)
                    : sources[index];
            const VariantRecord rec = simulate_variant(spec, src, index);
            return compute_row(rec, layout).line;
        },
        [&](std::string&& line) { writer.write(line); },
        workers);
    writer.close();
    std::cerr << "simulated " << count << " variants\n";
    return 0;
}

/// Shared row extraction for the summary subcommands.
struct TestValues {
    std::vector<double> w;           // empty if the table has no W column
    std::vector<double> p;           // parsed doubles (may underflow; medians fine)
    std::vector<double> neg_log10;   // exact from text
    std::vector<double> maf;
    int df = 1;
};

TestValues extract_test(const ResultTable& table, const std::string& selector) {
    const TestColumns cols = resolve_test_columns(table, selector);
    const int maf_col = table.column("maf");
    TestValues v;
    bool df_seen = false;
    for (const auto& row : table.rows()) {
        const std::string& ptext = row[static_cast<std::size_t>(cols.p)];
        if (ptext == "NA") continue;
        v.neg_log10.push_back(neg_log10_from_text(ptext));
        v.p.push_back(parse_double(ptext, "p-value"));
        if (cols.w >= 0) {
            const std::string& wtext = row[static_cast<std::size_t>(cols.w)];
            if (wtext != "NA") v.w.push_back(parse_double(wtext, "statistic"));
        }
        if (maf_col >= 0) {
            const std::string& mtext = row[static_cast<std::size_t>(maf_col)];
            v.maf.push_back(mtext == "NA" ? std::numeric_limits<double>::quiet_NaN()
                                          : parse_double(mtext, "maf"));
        } else {
            v.maf.push_back(std::numeric_limits<double>::quiet_NaN());
        }
        if (!df_seen && cols.df >= 0) {
            const std::string& dtext = row[static_cast<std::size_t>(cols.df)];
            if (dtext != "NA") {
                v.df = static_cast<int>(parse_int(dtext, "df"));
                df_seen = true;
            }
        }
    }
    if (!df_seen && cols.df < 0) v.df = cols.fixed_df;
    return v;
}

int cmd_lambda(const std::string& input, const std::string& selector, int df_override) {
    const ResultTable table = ResultTable::read(input);
    TestValues v = extract_test(table, selector);
    if (v.p.empty()) throw InputError("no testable rows for '" + selector + "' in " + input);
    if (df_override > 0) v.df = df_override;
    const double lambda = v.w.size() == v.p.size() ? genomic_lambda(v.w, v.df)
                                                   : genomic_lambda_from_p(v.p, v.df);
    std::printf("test\tdf\tn\tlambda\n%s\t%d\t%zu\t%s\n", selector.c_str(), v.df, v.p.size(),
                format_double(lambda).c_str());
    return 0;
}

int cmd_qq(const std::string& input, const std::string& selector, const std::string& out,
           int strata) {
    const ResultTable table = ResultTable::read(input);
    const TestValues v = extract_test(table, selector);
    if (v.p.empty()) throw InputError("no testable rows for '" + selector + "' in " + input);
    const auto qq = qq_strata(v.neg_log10, v.maf, v.df, strata);
    TextWriter writer(out);
    write_qq(writer, qq);
    writer.close();
    return 0;
}

int cmd_miami(const std::string& input, const std::string& top, const std::string& bottom,
              const std::string& out) {
    const ResultTable table = ResultTable::read(input);
    const TestColumns top_cols = resolve_test_columns(table, top);
    const TestColumns bottom_cols = resolve_test_columns(table, bottom);
    const int chrom_col = table.column("chrom");
    const int pos_col = table.column("pos");
    const int region_col = table.column("region");
    if (chrom_col < 0 || pos_col < 0 || region_col < 0)
        throw InputError("result table lacks chrom/pos/region columns");
    std::vector<MiamiRow> rows;
    rows.reserve(table.rows().size());
    for (const auto& row : table.rows()) {
        MiamiRow m;
        m.chrom = row[static_cast<std::size_t>(chrom_col)];
        m.pos = parse_int(row[static_cast<std::size_t>(pos_col)], "pos");
        m.region = row[static_cast<std::size_t>(region_col)];
        const std::string& tp = row[static_cast<std::size_t>(top_cols.p)];
        const std::string& bp = row[static_cast<std::size_t>(bottom_cols.p)];
        if (tp != "NA") m.top_neglog10 = neg_log10_from_text(tp);
        if (bp != "NA") m.bottom_neglog10 = neg_log10_from_text(bp);
        rows.push_back(std::move(m));
    }
    TextWriter writer(out);
    write_miami(writer, top, bottom, rows);
    writer.close();
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Sex-difference tests on minor-allele frequency"};
    app.require_subcommand(1);

    // scan
    auto* scan = app.add_subcommand("scan", "Test every variant of a VCF");
    std::string vcf, manifest, regions, baseline, tests, out_dir, freq_out;
    double maf = 0.05, significance = 5e-8;
    bool all_pairs = false, gzip = false, skip_malformed = false;
    int workers = 1;
    scan->add_option("--vcf", vcf, "input VCF (.vcf or .vcf.gz)")->required();
    scan->add_option("--manifest", manifest, "sample manifest TSV")->required();
    scan->add_option("--regions", regions, "region BED (chrom start end PAR|NPR)");
    scan->add_option("--maf", maf, "per-population MAF threshold (default 0.05)");
    scan->add_option("--baseline", baseline, "reference population for pairwise tests");
    scan->add_option("--significance,--threshold", significance,
                     "significance threshold (default 5e-8)");
    scan->add_option("--tests", tests, "comma list: single-per-pop,multi,pooled,pair-diff,omnibus-diff");
    scan->add_flag("--all-pairs", all_pairs, "pairwise tests for every population pair");
    scan->add_option("--out", out_dir, "output directory")->required();
    scan->add_option("--workers", workers, "worker threads (default 1)");
    scan->add_flag("--gzip", gzip, "gzip results.tsv");
    scan->add_option("--freq-out", freq_out, "also export a genotype frequency table");
    scan->add_flag("--skip-malformed", skip_malformed, "skip malformed records instead of aborting");

    // simulate
    auto* simulate = app.add_subcommand("simulate", "Generate null genotype data and test it");
    std::string freqs_path, region = "autosomal", protocol = "multipop", sizes_text, sim_out;
    std::int64_t synthetic = 0;
    std::uint64_t seed = 0;
    double maf_lo = 0.05, maf_hi = 0.5, hwd_fraction = 0.0;
    int sim_workers = 1;
    simulate->add_option("--freqs", freqs_path, "frequency table driving the simulation");
    simulate->add_option("--synthetic", synthetic, "number of synthetic variants instead");
    simulate->add_option("--region", region,
                         "region class for synthetic variants: autosomal, par or npr "
                         "(default autosomal)");
    simulate->add_option("--protocol", protocol, "multipop or betweenpop (default multipop)");
    simulate->add_option("--sizes", sizes_text, "LABEL:females:males,... (default: 1000G-like five)");
    simulate->add_option("--seed", seed, "random seed (default 0)");
    simulate->add_option("--maf-range", [&maf_lo, &maf_hi](const std::vector<std::string>& vals) {
        try {
            const auto parts = split(vals.at(0), ',');
            if (parts.size() != 2) return false;
            maf_lo = parse_double(parts[0], "maf lower bound");
            maf_hi = parse_double(parts[1], "maf upper bound");
            return true;
        } catch (const std::exception&) {
            return false;
        }
    }, "synthetic MAF range LO,HI (default 0.05,0.5)");
    simulate->add_option("--hwd-fraction", hwd_fraction,
                         "fraction of the admissible genotype-departure range (default 0)");
    simulate->add_option("--out", sim_out, "output result TSV (.gz ok)")->required();
    simulate->add_option("--workers", sim_workers, "worker threads (default 1)");

    // lambda
    auto* lambda = app.add_subcommand("lambda", "Genomic inflation factor of one test");
    std::string l_input, l_test = "multi";
    int l_df = 0;
    lambda->add_option("--input", l_input, "result TSV")->required();
    lambda->add_option("--test", l_test, "multi|pooled|omnibus|single:<POP>|pair:<P>[:<Q>]");
    lambda->add_option("--df", l_df, "override the reference chi-square df");

    // qq
    auto* qq = app.add_subcommand("qq", "QQ export, overall and by MAF stratum");
    std::string q_input, q_test = "multi", q_out;
    int q_strata = 4;
    qq->add_option("--input", q_input, "result TSV")->required();
    qq->add_option("--test", q_test, "test selector");
    qq->add_option("--strata", q_strata, "number of MAF strata (default 4)");
    qq->add_option("--out", q_out, "output TSV (.gz ok)")->required();

    // miami
    auto* miami = app.add_subcommand("miami", "Two-track plot export for a pair of tests");
    std::string m_input, m_top = "multi", m_bottom = "pooled", m_out;
    miami->add_option("--input", m_input, "result TSV")->required();
    miami->add_option("--top,--a", m_top, "test on the upper track");
    miami->add_option("--bottom,--b", m_bottom, "test on the lower track");
    miami->add_option("--out", m_out, "output TSV (.gz ok)")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        // 0 for --help/--version, 1 for any command-line usage error
        return app.exit(e) == 0 ? 0 : 1;
    }

    try {
        if (scan->parsed())
            return cmd_scan(vcf, manifest, regions, maf, baseline, significance, tests, all_pairs,
                            out_dir, workers, gzip, freq_out, skip_malformed);
        if (simulate->parsed())
            return cmd_simulate(freqs_path, synthetic, region, protocol, sizes_text, seed, maf_lo,
                                maf_hi, hwd_fraction, sim_out, sim_workers);
        if (lambda->parsed()) return cmd_lambda(l_input, l_test, l_df);
        if (qq->parsed()) return cmd_qq(q_input, q_test, q_out, q_strata);
        if (miami->parsed()) return cmd_miami(m_input, m_top, m_bottom, m_out);
    } catch (const sdmaf::InputError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << '\n';
        return 2;
    }
    return 0;
}
