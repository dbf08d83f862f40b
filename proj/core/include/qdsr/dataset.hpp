#pragma once

#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "qdsr/dims.hpp"
#include "qdsr/random.hpp"

namespace qdsr {

/// Column-major table of the original variables plus the target.
struct Dataset {
    std::vector<std::string> names;
    std::vector<std::vector<double>> columns;
    std::vector<double> target;
    UnitTable units;
    std::vector<std::pair<double, double>> ranges; // per variable (min, max)

    [[nodiscard]] std::size_t rows() const { return target.size(); }
    [[nodiscard]] std::size_t variables() const { return columns.size(); }

    /// Recomputes ranges from the columns.
    void compute_ranges();
    /// Copy restricted to the given rows, in that order.
    [[nodiscard]] Dataset select(std::vector<std::size_t> const& rows) const;
};

/// Whitespace- or comma-separated rows: one value per unit-table variable, then
/// the target. Lines starting with '#' and blank lines are skipped. Throws
/// ParseError naming the line.
Dataset parse_dataset(std::string_view text, UnitTable units);
Dataset load_dataset(std::string const& data_path, std::string const& units_path);
std::string format_dataset(Dataset const& data);

/// y + N(0, std(y) * level); population standard deviation.
std::vector<double> add_noise(std::vector<double> const& y, double level, Rng& rng);

/// Disjoint row sets of sizes floor(ratio * N) and the remainder.
std::pair<Dataset, Dataset> split_train_test(Dataset const& data, double ratio, Rng& rng);

} // namespace qdsr
