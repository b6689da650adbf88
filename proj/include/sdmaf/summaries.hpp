#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "sdmaf/chisq.hpp"
#include "sdmaf/io_util.hpp"
#include "sdmaf/types.hpp"

namespace sdmaf {

namespace detail {

inline double median_sorted(const std::vector<double>& v) {
    const std::size_t n = v.size();
    if (n % 2 == 1) return v[n / 2];
    return 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace detail

/// Genomic inflation factor: median observed statistic over the median
/// of its chi-square reference.
inline double genomic_lambda(std::vector<double> w, int df) {
    if (w.empty()) throw Error("genomic lambda: no testable statistics");
    std::sort(w.begin(), w.end());
    return detail::median_sorted(w) / chisq_median(df);
}

/// Same, recovering statistics from p-values by tail inversion (only
/// the middle order statistics are inverted; the map is monotone).
inline double genomic_lambda_from_p(std::vector<double> p, int df) {
    if (p.empty()) throw Error("genomic lambda: no testable p-values");
    std::sort(p.begin(), p.end());
    const std::size_t n = p.size();
    const auto invert = [df](double pv) {
        if (!(pv > 0.0)) throw Error("genomic lambda: p-value of zero cannot be inverted");
        return chisq_quantile_upper(std::min(pv, 1.0), df);
    };
    double med;
    if (n % 2 == 1)
        med = invert(p[n / 2]);
    else
        med = 0.5 * (invert(p[n / 2 - 1]) + invert(p[n / 2]));
    return med / chisq_median(df);
}

struct QqPoint {
    double expected_neglog10 = 0.0;
    double observed_neglog10 = 0.0;
};

struct QqStratum {
    std::string name;
    double maf_min = 0.0;
    double maf_max = 0.0;
    std::size_t n = 0;
    double lambda = 0.0;
    std::vector<QqPoint> points;
};

/// Expected-vs-observed quantiles of -log10 p for the full input and
/// for equal-size MAF strata (defaults to quartiles).  Inputs are
/// (neg_log10_p, maf) pairs; non-finite entries are dropped.  The i-th
/// smallest p is paired with expected quantile i/(n+1); each stratum
/// carries its own inflation factor.
inline std::vector<QqStratum> qq_strata(const std::vector<double>& neg_log10_p,
                                        const std::vector<double>& maf, int df,
                                        int strata_count = 4) {
    if (neg_log10_p.size() != maf.size())
        throw Error("qq: p-value and MAF vectors differ in length");
    if (strata_count < 1) throw Error("qq: stratum count must be positive");

    std::vector<std::size_t> keep;
    for (std::size_t i = 0; i < neg_log10_p.size(); ++i)
        if (std::isfinite(neg_log10_p[i]) && std::isfinite(maf[i])) keep.push_back(i);
    if (keep.empty()) throw Error("qq: no usable p-values");

    const auto build = [&](const std::string& name, std::vector<std::size_t> idx) {
        QqStratum s;
        s.name = name;
        s.n = idx.size();
        std::vector<double> negs;
        std::vector<double> ps;
        negs.reserve(idx.size());
        ps.reserve(idx.size());
        s.maf_min = std::numeric_limits<double>::infinity();
        s.maf_max = -std::numeric_limits<double>::infinity();
        for (const std::size_t i : idx) {
            negs.push_back(neg_log10_p[i]);
            ps.push_back(std::pow(10.0, -neg_log10_p[i]));
            s.maf_min = std::min(s.maf_min, maf[i]);
            s.maf_max = std::max(s.maf_max, maf[i]);
        }
        // descending -log10 p == ascending p
        std::sort(negs.begin(), negs.end(), std::greater<double>());
        const double n = static_cast<double>(negs.size());
        s.points.reserve(negs.size());
        for (std::size_t r = 0; r < negs.size(); ++r) {
            QqPoint pt;
            pt.expected_neglog10 = -std::log10(static_cast<double>(r + 1) / (n + 1.0));
            pt.observed_neglog10 = negs[r];
            s.points.push_back(pt);
        }
        s.lambda = genomic_lambda_from_p(std::move(ps), df);
        return s;
    };

    std::vector<QqStratum> out;
    out.push_back(build("all", keep));

    std::vector<std::size_t> by_maf = keep;
    std::sort(by_maf.begin(), by_maf.end(),
              [&](std::size_t a, std::size_t b) { return maf[a] < maf[b]; });
    const std::size_t n = by_maf.size();
    for (int q = 0; q < strata_count; ++q) {
        const std::size_t lo = n * static_cast<std::size_t>(q) / strata_count;
        const std::size_t hi = n * (static_cast<std::size_t>(q) + 1) / strata_count;
        if (hi <= lo) continue;
        out.push_back(build("q" + std::to_string(q + 1),
                            {by_maf.begin() + static_cast<std::ptrdiff_t>(lo),
                             by_maf.begin() + static_cast<std::ptrdiff_t>(hi)}));
    }
    return out;
}

inline void write_qq(TextWriter& out, const std::vector<QqStratum>& strata) {
    out.write("stratum\tmaf_min\tmaf_max\tn\tlambda\trank\texpected_neglog10\tobserved_neglog10\n");
    std::string line;
    for (const auto& s : strata) {
        for (std::size_t r = 0; r < s.points.size(); ++r) {
            line.clear();
            line += s.name;
            line += '\t';
            line += format_double(s.maf_min);
            line += '\t';
            line += format_double(s.maf_max);
            line += '\t';
            line += std::to_string(s.n);
            line += '\t';
            line += format_double(s.lambda);
            line += '\t';
            line += std::to_string(r + 1);
            line += '\t';
            line += format_double(s.points[r].expected_neglog10);
            line += '\t';
            line += format_double(s.points[r].observed_neglog10);
            line += '\n';
            out.write(line);
        }
    }
}

struct MiamiRow {
    std::string chrom;
    std::int64_t pos = 0;
    std::string region;
    double top_neglog10 = std::numeric_limits<double>::quiet_NaN();
    double bottom_neglog10 = std::numeric_limits<double>::quiet_NaN();
};

/// Two-track plot export.  The display columns floor -log10 p at 1
/// (p above 0.1 is plotted at the 0.1 line); raw values ride along.
inline void write_miami(TextWriter& out, const std::string& top_name,
                        const std::string& bottom_name, const std::vector<MiamiRow>& rows) {
    out.write("#top=" + top_name + "\tbottom=" + bottom_name + "\n");
    out.write("chrom\tpos\tregion\ttop_neglog10\ttop_display\tbottom_neglog10\tbottom_display\n");
    std::string line;
    const auto emit = [&line](double v) {
        if (!std::isfinite(v)) {
            line += "NA\tNA";
            return;
        }
        line += format_double(v);
        line += '\t';
        line += format_double(v < 1.0 ? 1.0 : v);
    };
    for (const auto& r : rows) {
        line.clear();
        line += r.chrom;
        line += '\t';
        line += std::to_string(r.pos);
        line += '\t';
        line += r.region;
        line += '\t';
        emit(r.top_neglog10);
        line += '\t';
        emit(r.bottom_neglog10);
        line += '\n';
        out.write(line);
    }
}

/// A result table read back into memory: header comments skipped,
/// columns addressable by name.
class ResultTable {
public:
    static ResultTable read(const std::string& path) {
        ResultTable t;
        TextReader reader(path);
        std::string line;
        bool have_header = false;
        std::vector<std::string_view> fields;
        while (reader.getline(line)) {
            if (line.empty() || line[0] == '#') continue;
            split_tabs(line, fields);
            if (!have_header) {
                for (const auto f : fields) t.header_.emplace_back(f);
                have_header = true;
                continue;
            }
            std::vector<std::string> row;
            row.reserve(fields.size());
            for (const auto f : fields) row.emplace_back(f);
            if (row.size() != t.header_.size())
                throw InputError("result table " + path + ": ragged row with " +
                                 std::to_string(row.size()) + " columns");
            t.rows_.push_back(std::move(row));
        }
        if (!have_header) throw InputError("result table " + path + " has no header");
        return t;
    }

    const std::vector<std::string>& header() const { return header_; }
    const std::vector<std::vector<std::string>>& rows() const { return rows_; }

    int column(const std::string& name) const {
        for (std::size_t i = 0; i < header_.size(); ++i)
            if (header_[i] == name) return static_cast<int>(i);
        return -1;
    }

private:
    std::vector<std::string> header_;
    std::vector<std::vector<std::string>> rows_;
};

/// Columns carrying one test's output inside a result table.
struct TestColumns {
    int p = -1;
    int w = -1;
    int df = -1;        // column index, or -1 with fixed_df set
    int fixed_df = 1;
};

/// Accepts "multi", "pooled", "omnibus", "single:<POP>", "pair:<POP>"
/// (against whatever baseline the table was produced with) and
/// "pair:<P>:<Q>".
inline TestColumns resolve_test_columns(const ResultTable& table, const std::string& selector) {
    TestColumns c;
    const auto need = [&](const std::string& name) {
        const int idx = table.column(name);
        if (idx < 0)
            throw InputError("result table has no column '" + name + "' for test selector '" +
                             selector + "'");
        return idx;
    };
    if (selector == "multi") {
        c.p = need("multi_p");
        c.w = table.column("multi_W");
        c.df = table.column("multi_df");
    } else if (selector == "pooled") {
        c.p = need("pooled_p");
        c.w = table.column("pooled_W");
    } else if (selector == "omnibus") {
        c.p = need("omnibus_p");
        c.w = table.column("omnibus_W");
        c.df = table.column("omnibus_df");
    } else if (selector.rfind("single:", 0) == 0) {
        c.p = need(selector.substr(7) + "_single_p");
    } else if (selector.rfind("pair:", 0) == 0) {
        const auto parts = split(selector.substr(5), ':');
        if (parts.size() == 1) {
            // find the unique pair column mentioning this population first
            const std::string prefix = parts[0] + "_vs_";
            int found = -1;
            for (std::size_t i = 0; i < table.header().size(); ++i) {
                const std::string& h = table.header()[i];
                if (h.rfind(prefix, 0) == 0 && h.size() > 2 &&
                    h.compare(h.size() - 2, 2, "_p") == 0) {
                    found = static_cast<int>(i);
                    break;
                }
            }
            if (found < 0)
                throw InputError("result table has no pairwise column for population '" +
                                 parts[0] + "'");
            c.p = found;
            const std::string base = table.header()[static_cast<std::size_t>(found)];
            c.w = table.column(base.substr(0, base.size() - 2) + "_W");
        } else if (parts.size() == 2) {
            int idx = table.column(parts[0] + "_vs_" + parts[1] + "_p");
            std::string stem = parts[0] + "_vs_" + parts[1];
            if (idx < 0) {
                stem = parts[1] + "_vs_" + parts[0];
                idx = table.column(stem + "_p");
            }
            if (idx < 0)
                throw InputError("result table has no pairwise column for '" + parts[0] + "," +
                                 parts[1] + "'");
            c.p = idx;
            c.w = table.column(stem + "_W");
        } else {
            throw InputError("bad pair selector '" + selector + "'");
        }
    } else {
        throw InputError("unknown test selector '" + selector +
                         "' (expected multi, pooled, omnibus, single:<POP>, pair:<POP>[:<POP>])");
    }
    return c;
}

}  // namespace sdmaf
