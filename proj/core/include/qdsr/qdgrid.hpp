#pragma once

#include <array>
#include <cstddef>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "qdsr/expr.hpp"
#include "qdsr/vocab.hpp"

namespace qdsr {

struct GridConfig {
    std::size_t max_len = 35;
    int length_bin = 1;
    int scalar_bin = 1;
    int function_bin = 2;
    int variable_bin = 2;
    bool use_nested_axis = false;
};

/// (length, scalars, functions, variable occurrences, nested); the last
/// coordinate stays 0 while the nested axis is off.
using CellIndex = std::array<int, 5>;

struct Candidate {
    ExprTree tree;
    std::vector<double> params;
    double fitness = -std::numeric_limits<double>::infinity();
    int complexity = 0;
    FeatureVector features;
};

/// Builds a candidate with complexity and features filled from the tree.
Candidate make_candidate(ExprTree tree, Vocabulary const& vocab, std::vector<double> params, double fitness);

/// Nothing when the length exceeds cfg.max_len.
std::optional<CellIndex> feature_to_cell(FeatureVector const& f, GridConfig const& cfg);

enum class InsertOutcome { PlacedNew, Replaced, Rejected };

/// MAP-Elites archive: one elite per cell, strict improvement to replace.
class QDGrid {
public:
    QDGrid() = default;
    explicit QDGrid(GridConfig cfg) : cfg_(cfg) {}

    [[nodiscard]] GridConfig const& config() const { return cfg_; }
    [[nodiscard]] std::size_t size() const { return cells_.size(); }
    [[nodiscard]] bool empty() const { return cells_.empty(); }
    [[nodiscard]] std::map<CellIndex, Candidate> const& cells() const { return cells_; }
    [[nodiscard]] Candidate const* find(CellIndex const& cell) const;

    /// Non-finite fitness and over-length trees are rejected.
    InsertOutcome insert(Candidate cand);

    /// Occupants in cell order.
    [[nodiscard]] std::vector<Candidate const*> flatten() const;

private:
    GridConfig cfg_;
    std::map<CellIndex, Candidate> cells_;
};

/// Re-bins every occupant on a grid with max_len + 10 and the nested axis on.
QDGrid expand_grid(QDGrid const& grid);

/// Non-dominated set under (lower complexity, higher fitness), sorted by
/// complexity ascending then fitness descending.
std::vector<Candidate> pareto_front(QDGrid const& grid);
std::vector<Candidate> pareto_front(std::vector<Candidate const*> const& cands);

/// Rows `cell_index | fitness | complexity | expression`.
std::string grid_snapshot(QDGrid const& grid, Vocabulary const& vocab);

std::string format_cell(CellIndex const& cell, bool nested_axis);

} // namespace qdsr
