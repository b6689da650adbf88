#pragma once

#include <algorithm>
#include <string>
#include <string_view>
#include <vector>

#include "sdmaf/io_util.hpp"
#include "sdmaf/types.hpp"

namespace sdmaf {

namespace detail {

/// "chrX" / "ChrX" / "X" all normalize to "x".
inline std::string normalize_chrom(std::string_view chrom) {
    std::string s = lower(chrom);
    if (s.size() > 3 && s.compare(0, 3, "chr") == 0) s.erase(0, 3);
    return s;
}

}  // namespace detail

/// Classifies positions into Autosomal / XPar / XNpr from a BED-style
/// file (0-based half-open intervals, label column PAR or NPR) covering
/// a single chromosome.  Positions on that chromosome outside every
/// interval are XNpr; positions on any other chromosome are Autosomal.
/// With no file loaded everything is Autosomal.
class RegionMap {
public:
    struct Interval {
        std::int64_t start;  // 0-based inclusive
        std::int64_t end;    // 0-based exclusive
        RegionClass label;
    };

    static RegionMap all_autosomal() { return RegionMap{}; }

    static RegionMap load(const std::string& path) {
        if (path.empty()) return all_autosomal();
        TextReader reader(path);
        RegionMap map;
        std::string line;
        std::vector<std::string_view> fields;
        std::int64_t line_no = 0;
        while (reader.getline(line)) {
            ++line_no;
            if (line.empty() || line[0] == '#') continue;
            split_tabs(line, fields);
            if (fields.size() < 4)
                throw InputError("region file line " + std::to_string(line_no) +
                                 ": expected chrom, start, end, label");
            const std::string chrom = detail::normalize_chrom(fields[0]);
            if (map.chrom_.empty())
                map.chrom_ = chrom;
            else if (map.chrom_ != chrom)
                throw InputError("region file line " + std::to_string(line_no) +
                                 ": all intervals must be on one chromosome");
            Interval iv;
            iv.start = parse_int(fields[1], "interval start");
            iv.end = parse_int(fields[2], "interval end");
            if (iv.start < 0 || iv.end <= iv.start)
                throw InputError("region file line " + std::to_string(line_no) +
                                 ": invalid interval");
            const std::string label = detail::lower(fields[3]);
            if (label == "par")
                iv.label = RegionClass::XPar;
            else if (label == "npr")
                iv.label = RegionClass::XNpr;
            else
                throw InputError("region file line " + std::to_string(line_no) +
                                 ": unknown region label '" + std::string(fields[3]) + "'");
            map.intervals_.push_back(iv);
        }
        std::sort(map.intervals_.begin(), map.intervals_.end(),
                  [](const Interval& a, const Interval& b) { return a.start < b.start; });
        for (std::size_t i = 1; i < map.intervals_.size(); ++i)
            if (map.intervals_[i].start < map.intervals_[i - 1].end)
                throw InputError("region file " + path + ": overlapping intervals at " +
                                 std::to_string(map.intervals_[i].start));
        return map;
    }

    bool empty() const { return chrom_.empty(); }
    const std::string& chromosome() const { return chrom_; }

    /// pos is 1-based (VCF convention); intervals are 0-based half-open.
    RegionClass classify(std::string_view chrom, std::int64_t pos) const {
        if (chrom_.empty() || detail::normalize_chrom(chrom) != chrom_)
            return RegionClass::Autosomal;
        const std::int64_t idx = pos - 1;
        auto it = std::upper_bound(
            intervals_.begin(), intervals_.end(), idx,
            [](std::int64_t v, const Interval& iv) { return v < iv.start; });
        if (it != intervals_.begin()) {
            --it;
            if (idx >= it->start && idx < it->end) return it->label;
        }
        return RegionClass::XNpr;
    }

private:
    std::string chrom_;
    std::vector<Interval> intervals_;
};

}  // namespace sdmaf
