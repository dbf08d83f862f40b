#include "qdsr/dataset.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include <fmt/format.h>

#include "qdsr/error.hpp"

namespace qdsr {

void Dataset::compute_ranges()
{
    ranges.clear();
    for (auto const& c : columns) {
        if (c.empty()) {
            ranges.emplace_back(0.0, 0.0);
            continue;
        }
        auto [lo, hi] = std::minmax_element(c.begin(), c.end());
        ranges.emplace_back(*lo, *hi);
    }
}

Dataset Dataset::select(std::vector<std::size_t> const& rows) const
{
    Dataset out;
    out.names = names;
    out.units = units;
    out.columns.resize(columns.size());
    for (std::size_t v = 0; v < columns.size(); ++v) {
        out.columns[v].reserve(rows.size());
        for (auto r : rows) { out.columns[v].push_back(columns[v][r]); }
    }
    out.target.reserve(rows.size());
    for (auto r : rows) { out.target.push_back(target[r]); }
    out.compute_ranges();
    return out;
}

Dataset parse_dataset(std::string_view text, UnitTable units)
{
    Dataset d;
    auto const nvars = units.entries.size();
    for (auto const& e : units.entries) { d.names.push_back(e.name); }
    d.units = std::move(units);
    d.columns.resize(nvars);

    std::size_t line_no = 0;
    std::size_t pos = 0;
    std::vector<double> row;
    while (pos <= text.size()) {
        auto nl = text.find('\n', pos);
        auto line = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
        pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
        ++line_no;

        row.clear();
        std::size_t i = 0;
        auto skip = [&] {
            while (i < line.size() && (std::isspace(static_cast<unsigned char>(line[i])) != 0 || line[i] == ',')) {
                ++i;
            }
        };
        skip();
        if (i == line.size() || line[i] == '#') { continue; }
        while (i < line.size()) {
            auto start = i;
            while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i])) == 0 && line[i] != ',') { ++i; }
            double v = 0.0;
            auto tok = line.substr(start, i - start);
            auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
            if (ec != std::errc{} || ptr != tok.data() + tok.size()) {
                throw ParseError(line_no, fmt::format("non-numeric token '{}'", tok));
            }
            if (!std::isfinite(v)) { throw ParseError(line_no, fmt::format("non-finite value '{}'", tok)); }
            row.push_back(v);
            skip();
        }
        if (row.size() != nvars + 1) {
            throw ParseError(line_no, fmt::format("row has {} values, expected {}", row.size(), nvars + 1));
        }
        for (std::size_t v = 0; v < nvars; ++v) { d.columns[v].push_back(row[v]); }
        d.target.push_back(row.back());
    }
    d.compute_ranges();
    return d;
}

Dataset load_dataset(std::string const& data_path, std::string const& units_path)
{
    auto units = load_unit_table(units_path);
    std::ifstream in(data_path);
    if (!in) { throw std::runtime_error(fmt::format("cannot open data file '{}'", data_path)); }
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_dataset(ss.str(), std::move(units));
}

std::string format_dataset(Dataset const& data)
{
    std::string out;
    for (std::size_t r = 0; r < data.rows(); ++r) {
        for (auto const& c : data.columns) { out += fmt::format("{:.17g} ", c[r]); }
        out += fmt::format("{:.17g}\n", data.target[r]);
    }
    return out;
}

std::vector<double> add_noise(std::vector<double> const& y, double level, Rng& rng)
{
    if (level < 0.0) { throw std::invalid_argument("noise level must be non-negative"); }
    std::vector<double> out(y);
    if (y.empty() || level == 0.0) { return out; }
    double mean = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(y.size());
    double ss = 0.0;
    for (double v : y) { ss += (v - mean) * (v - mean); }
    double sigma = std::sqrt(ss / static_cast<double>(y.size())) * level;
    if (sigma == 0.0) { return out; }
    std::normal_distribution<double> eta(0.0, sigma);
    for (auto& v : out) { v += eta(rng); }
    return out;
}

std::pair<Dataset, Dataset> split_train_test(Dataset const& data, double ratio, Rng& rng)
{
    if (!(ratio > 0.0 && ratio < 1.0)) { throw std::invalid_argument("split ratio must lie in (0, 1)"); }
    std::vector<std::size_t> idx(data.rows());
    std::iota(idx.begin(), idx.end(), 0);
    std::shuffle(idx.begin(), idx.end(), rng);
    auto cut = static_cast<std::size_t>(std::floor(ratio * static_cast<double>(data.rows())));
    std::vector<std::size_t> train(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(cut));
    std::vector<std::size_t> test(idx.begin() + static_cast<std::ptrdiff_t>(cut), idx.end());
    return {data.select(train), data.select(test)};
}

} // namespace qdsr
