#include "qdsr/qdgrid.hpp"

#include <algorithm>
#include <cmath>

#include <fmt/format.h>

namespace qdsr {

Candidate make_candidate(ExprTree tree, Vocabulary const& vocab, std::vector<double> params, double fitness)
{
    Candidate c;
    c.complexity = complexity(tree, vocab);
    c.features = features(tree);
    c.tree = std::move(tree);
    c.params = std::move(params);
    c.fitness = fitness;
    return c;
}

std::optional<CellIndex> feature_to_cell(FeatureVector const& f, GridConfig const& cfg)
{
    if (f.length > cfg.max_len) { return std::nullopt; }
    return CellIndex{static_cast<int>(f.length) / cfg.length_bin, static_cast<int>(f.num_scalars) / cfg.scalar_bin,
        static_cast<int>(f.num_functions) / cfg.function_bin,
        static_cast<int>(f.num_var_occurrences) / cfg.variable_bin, cfg.use_nested_axis && f.has_nested ? 1 : 0};
}

Candidate const* QDGrid::find(CellIndex const& cell) const
{
    auto it = cells_.find(cell);
    return it == cells_.end() ? nullptr : &it->second;
}

InsertOutcome QDGrid::insert(Candidate cand)
{
    if (!std::isfinite(cand.fitness)) { return InsertOutcome::Rejected; }
    auto cell = feature_to_cell(cand.features, cfg_);
    if (!cell) { return InsertOutcome::Rejected; }
    auto [it, placed] = cells_.try_emplace(*cell);
    if (placed) {
        it->second = std::move(cand);
        return InsertOutcome::PlacedNew;
    }
    if (cand.fitness > it->second.fitness) {
        it->second = std::move(cand);
        return InsertOutcome::Replaced;
    }
    return InsertOutcome::Rejected;
}

std::vector<Candidate const*> QDGrid::flatten() const
{
    std::vector<Candidate const*> out;
    out.reserve(cells_.size());
    for (auto const& [cell, cand] : cells_) { out.push_back(&cand); }
    return out;
}

QDGrid expand_grid(QDGrid const& grid)
{
    GridConfig cfg = grid.config();
    cfg.max_len += 10;
    cfg.use_nested_axis = true;
    QDGrid out(cfg);
    for (auto const& [cell, cand] : grid.cells()) { out.insert(cand); }
    return out;
}

std::vector<Candidate> pareto_front(std::vector<Candidate const*> const& cands)
{
    std::vector<Candidate const*> sorted(cands);
    std::stable_sort(sorted.begin(), sorted.end(), [](auto const* a, auto const* b) {
        return a->complexity != b->complexity ? a->complexity < b->complexity : a->fitness > b->fitness;
    });
    std::vector<Candidate> front;
    double best_lower = -std::numeric_limits<double>::infinity();
    bool have_lower = false;
    for (std::size_t i = 0; i < sorted.size();) {
        auto j = i;
        double group_best = sorted[i]->fitness;
        while (j < sorted.size() && sorted[j]->complexity == sorted[i]->complexity) { ++j; }
        for (auto k = i; k < j && sorted[k]->fitness == group_best; ++k) {
            if (!have_lower || group_best > best_lower) { front.push_back(*sorted[k]); }
        }
        if (!have_lower || group_best > best_lower) { best_lower = group_best; }
        have_lower = true;
        i = j;
    }
    return front;
}

std::vector<Candidate> pareto_front(QDGrid const& grid) { return pareto_front(grid.flatten()); }

std::string format_cell(CellIndex const& cell, bool nested_axis)
{
    if (nested_axis) { return fmt::format("({},{},{},{},{})", cell[0], cell[1], cell[2], cell[3], cell[4]); }
    return fmt::format("({},{},{},{})", cell[0], cell[1], cell[2], cell[3]);
}

std::string grid_snapshot(QDGrid const& grid, Vocabulary const& vocab)
{
    std::string out = "cell_index | fitness | complexity | expression\n";
    for (auto const& [cell, cand] : grid.cells()) {
        out += fmt::format("{} | {:.17g} | {} | {}\n", format_cell(cell, grid.config().use_nested_axis), cand.fitness,
            cand.complexity, to_string(cand.tree, vocab));
    }
    return out;
}

} // namespace qdsr
