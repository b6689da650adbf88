#pragma once

#include <algorithm>
#include <cstdint>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "sdmaf/io_util.hpp"
#include "sdmaf/types.hpp"

namespace sdmaf {

struct SampleInfo {
    Sex sex;
    std::uint32_t population;  // index into SampleManifest::populations
};

/// Sample-to-stratum assignment parsed from a TSV with columns
/// sample_id, sex, population.  Population labels are sorted; that
/// order fixes stratum order everywhere downstream.
struct SampleManifest {
    std::vector<std::string> populations;
    std::unordered_map<std::string, SampleInfo> samples;
    std::vector<std::int64_t> n_female;
    std::vector<std::int64_t> n_male;
    std::vector<std::string> warnings;

    std::size_t population_count() const { return populations.size(); }

    std::optional<std::size_t> population_index(const std::string& label) const {
        const auto it = std::lower_bound(populations.begin(), populations.end(), label);
        if (it == populations.end() || *it != label) return std::nullopt;
        return static_cast<std::size_t>(it - populations.begin());
    }
};

namespace detail {

inline std::string lower(std::string_view s) {
    std::string out(s);
    for (char& c : out)
        c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return out;
}

inline std::optional<Sex> parse_sex(std::string_view tok) {
    const std::string t = lower(tok);
    if (t == "female" || t == "f" || t == "2") return Sex::Female;
    if (t == "male" || t == "m" || t == "1") return Sex::Male;
    return std::nullopt;
}

}  // namespace detail

inline SampleManifest load_manifest(const std::string& path) {
    TextReader reader(path);
    std::string line;
    std::vector<std::string_view> fields;

    if (!reader.getline(line)) throw InputError("manifest " + path + " is empty");
    split_tabs(line, fields);
    // The three required columns are located by name, case-insensitively,
    // so that column order and extra columns do not matter.
    std::size_t col_id = fields.size(), col_sex = fields.size(), col_pop = fields.size();
    for (std::size_t i = 0; i < fields.size(); ++i) {
        const std::string name = detail::lower(fields[i]);
        if (name == "sample_id") col_id = i;
        else if (name == "sex") col_sex = i;
        else if (name == "population") col_pop = i;
    }
    if (col_id >= fields.size() || col_sex >= fields.size() || col_pop >= fields.size())
        throw InputError("manifest " + path +
                         " must start with a header line naming the sample_id, sex and "
                         "population columns");
    const std::size_t columns_needed = std::max({col_id, col_sex, col_pop}) + 1;

    struct Row {
        std::string id;
        Sex sex;
        std::string population;
    };
    std::vector<Row> rows;
    std::int64_t line_no = 1;
    while (reader.getline(line)) {
        ++line_no;
        if (line.empty()) continue;
        split_tabs(line, fields);
        if (fields.size() < columns_needed)
            throw InputError("manifest line " + std::to_string(line_no) + ": expected at least " +
                             std::to_string(columns_needed) + " columns");
        const auto sex = detail::parse_sex(fields[col_sex]);
        if (!sex)
            throw InputError("manifest line " + std::to_string(line_no) + ": unknown sex token '" +
                             std::string(fields[col_sex]) + "'");
        std::string pop(fields[col_pop]);
        if (pop.empty() || pop.find_first_of(" \t") != std::string::npos)
            throw InputError("manifest line " + std::to_string(line_no) +
                             ": invalid population label '" + pop + "'");
        rows.push_back({std::string(fields[col_id]), *sex, std::move(pop)});
    }
    if (rows.empty()) throw InputError("manifest " + path + " has no samples");

    SampleManifest m;
    for (const Row& r : rows) m.populations.push_back(r.population);
    std::sort(m.populations.begin(), m.populations.end());
    m.populations.erase(std::unique(m.populations.begin(), m.populations.end()),
                        m.populations.end());
    m.n_female.assign(m.populations.size(), 0);
    m.n_male.assign(m.populations.size(), 0);

    for (const Row& r : rows) {
        const auto idx = m.population_index(r.population);
        SampleInfo info{r.sex, static_cast<std::uint32_t>(*idx)};
        if (!m.samples.emplace(r.id, info).second)
            throw InputError("manifest " + path + ": duplicate sample id '" + r.id + "'");
        if (r.sex == Sex::Female)
            ++m.n_female[*idx];
        else
            ++m.n_male[*idx];
    }

    for (std::size_t k = 0; k < m.populations.size(); ++k) {
        if (m.n_female[k] == 0)
            m.warnings.push_back("population " + m.populations[k] +
                                 " has no female samples; its tests will be NA");
        if (m.n_male[k] == 0)
            m.warnings.push_back("population " + m.populations[k] +
                                 " has no male samples; its tests will be NA");
    }
    return m;
}

}  // namespace sdmaf
