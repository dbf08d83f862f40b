#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <vector>

#include "qdsr/expr.hpp"
#include "qdsr/qdgrid.hpp"
#include "qdsr/random.hpp"
#include "qdsr/treegen.hpp"

namespace qdsr {

struct SelectionConfig {
    /// Rank offset in the 1/(x + k) selection weights.
    double k = 3.0;
    /// crossover, mutation, unary removal
    std::array<double, 3> proportions{1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0};
    int retry_cap = 10;

    [[nodiscard]] bool valid() const;
};

/// Normalized 1/(x + k) weights for ranks x = 0..n-1.
std::vector<double> rank_weights(std::size_t n, double k);

/// Ranks candidates by fitness (descending, stable) once and draws parents.
class ParentSelector {
public:
    ParentSelector(std::vector<Candidate const*> candidates, double k);
    explicit ParentSelector(QDGrid const& grid, double k) : ParentSelector(grid.flatten(), k) {}

    [[nodiscard]] std::size_t size() const { return ranked_.size(); }
    [[nodiscard]] std::vector<Candidate const*> const& ranked() const { return ranked_; }
    [[nodiscard]] std::vector<double> const& probabilities() const { return probs_; }

    /// Index into ranked().
    std::size_t draw_rank(Rng& rng) const;
    Candidate const& draw(Rng& rng) const { return *ranked_[draw_rank(rng)]; }

private:
    std::vector<Candidate const*> ranked_;
    std::vector<double> probs_;
    std::vector<double> cumulative_;
};

/// Throws std::invalid_argument on an empty grid.
Candidate const& select_parent(QDGrid const& grid, SelectionConfig const& cfg, Rng& rng);

/// Replaces a subtree of `a` by a same-dimension subtree of `b`, uniformly over
/// the pairs that keep length and nesting within limits.
std::optional<ExprTree> crossover(ExprTree const& a, ExprTree const& b, Vocabulary const& vocab,
    TreeLimits const& limits, Rng& rng);

/// Swaps one token for a same-arity, dimension-compatible one, or grows one leaf
/// into a random subtree of depth <= 3 carrying the leaf's dimension.
std::optional<ExprTree> mutate(ExprTree const& t, TreeGenerator const& gen, TreeLimits const& limits, Rng& rng);

/// Splices out one random unary node whose removal keeps the tree consistent.
std::optional<ExprTree> remove_unary(ExprTree const& t, Vocabulary const& vocab, TreeLimits const& limits,
    Rng& rng);

enum class Variation { Crossover, Mutation, UnaryRemoval, Clone };

struct Offspring {
    ExprTree tree;
    Variation origin;
};

struct GenerationStats {
    std::array<std::size_t, 4> produced{}; // by Variation
    std::size_t fallbacks = 0;             // slots that fell back to mutation
};

/// Slot counts per operator class for a population of n.
std::array<std::size_t, 3> class_counts(std::size_t n, std::array<double, 3> const& proportions);

/// One offspring per occupied cell. A slot whose operator keeps failing after
/// retry_cap attempts falls back to mutation, then to a copy of its parent.
std::vector<Offspring> next_generation(QDGrid const& grid, TreeGenerator const& gen, SelectionConfig const& cfg,
    TreeLimits const& limits, Rng& rng, GenerationStats* stats = nullptr);

/// Levels in the tree (a single leaf has depth 1).
int depth(ExprTree const& t);

} // namespace qdsr
