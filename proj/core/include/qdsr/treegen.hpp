#pragma once

#include <array>
#include <cstddef>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "qdsr/dims.hpp"
#include "qdsr/expr.hpp"
#include "qdsr/random.hpp"
#include "qdsr/vocab.hpp"

namespace qdsr {

struct GenHyper {
    int p = 2;
    /// binary, unary, leaf
    std::array<double, 3> arity_weights{0.45, 0.15, 0.40};
    /// indexed by Op::Add .. Op::Pow
    std::array<double, 5> op_weights{0.15, 0.15, 0.35, 0.25, 0.10};
    /// Probability of the free scalar when a dimensionless leaf is drawn.
    double scalar_share = 0.25;
    std::size_t max_len = 35;
    int max_nest = 2;
    /// Restrict choices to those whose shortest completion fits max_len; otherwise
    /// a trial that outgrows max_len fails.
    bool budget_aware = true;

    /// Positive weights summing to one, and * >= / >= (+, -).
    [[nodiscard]] bool valid() const;
};

/// Draws p from {1, 2, 3}, a length budget uniform in [1, max_len], and
/// jitters every weight by up to +-30%, then renormalizes and restores the
/// operator ordering.
class HyperSampler {
public:
    explicit HyperSampler(GenHyper base = {}) : base_(base) {}
    [[nodiscard]] GenHyper sample(Rng& rng) const;
    [[nodiscard]] GenHyper const& base() const { return base_; }

private:
    GenHyper base_;
};

class TreeGenerator {
public:
    static constexpr int max_p = 3;
    static constexpr std::size_t unreachable_len = 1u << 20;

    /// Builds monomial lookups for p = 1..max_p over the vocabulary's originals:
    /// non-negative exponents for splitting, signed exponents for prefactors.
    explicit TreeGenerator(Vocabulary const& vocab);

    [[nodiscard]] Vocabulary const& vocab() const { return *vocab_; }
    [[nodiscard]] MonomialLookup const& lookup(int p) const;
    [[nodiscard]] MonomialLookup const& split_lookup(int p) const;
    /// Largest p whose lookups fit the key cap; requested p values are clamped to it.
    [[nodiscard]] int top_p() const { return top_p_; }

    /// Queue-based direct generation. The result satisfies the root dimension,
    /// every node rule, hyper.max_len and hyper.max_nest.
    std::optional<ExprTree> generate_tree(DimVector const& target, GenHyper const& hyper, Rng& rng) const;

    /// Direct generation with a nesting budget already consumed by ancestors.
    std::optional<ExprTree> generate_subtree(DimVector const& target, GenHyper const& hyper, int nest_above,
        Rng& rng) const;

    /// Direct, then numerator/denominator split, then monomial prefactor times
    /// a dimensionless tree.
    std::optional<ExprTree> generate_with_strategies(DimVector const& target, GenHyper const& hyper, Rng& rng) const;

    /// Strategy (b) alone.
    std::optional<ExprTree> generate_quotient(DimVector const& target, GenHyper const& hyper, Rng& rng) const;
    /// Strategy (c) alone.
    std::optional<ExprTree> generate_prefactored(DimVector const& target, GenHyper const& hyper, Rng& rng) const;

private:
    struct SplitKey {
        DimVector dim;
        SplitOp op;
        int p;
        friend bool operator==(SplitKey const&, SplitKey const&) = default;
    };
    struct SplitKeyHash {
        std::size_t operator()(SplitKey const& k) const noexcept
        {
            return DimHash{}(k.dim) * 31 + static_cast<std::size_t>(k.op) * 7 + static_cast<std::size_t>(k.p);
        }
    };
    using SplitList = std::vector<std::pair<DimVector, DimVector>>;

    SplitList const& splits(DimVector const& parent, SplitOp op, int p) const;
    /// A leaf, a split or a dimensionless subtree can realize d.
    bool expandable(DimVector const& d, int p) const;
    /// Length of a short realization of d (a leaf, a monomial or sqrt of a
    /// monomial); unreachable_len when none is known.
    std::size_t min_len(DimVector const& d) const;
    std::size_t monomial_len(DimVector const& d) const;
    /// Exponents of a monomial with dimension d: a lookup witness, else the sum of two.
    std::optional<MonomialLookup::Assignment> prefactor_exponents(DimVector const& d, int p, Rng& rng) const;
    ExprTree monomial(MonomialLookup::Assignment const& q) const;

    Vocabulary const* vocab_;
    int top_p_ = 1;
    std::map<int, MonomialLookup> lookups_;
    std::map<int, MonomialLookup> split_lookups_;
    mutable std::mutex cache_mutex_;
    mutable std::unordered_map<SplitKey, std::unique_ptr<SplitList>, SplitKeyHash> split_cache_;
    mutable std::unordered_map<DimVector, std::size_t, DimHash> len_cache_;
};

struct PoolStats {
    std::size_t requested = 0;
    std::size_t unique = 0;
    std::size_t misses = 0; // requests that failed every retry
    std::size_t duplicates = 0;
    std::map<std::size_t, std::size_t> length_histogram;

    [[nodiscard]] double uniqueness() const
    {
        return requested == 0 ? 0.0 : static_cast<double>(unique) / static_cast<double>(requested);
    }
};

struct Pool {
    std::vector<ExprTree> trees;
    PoolStats stats;
};

inline constexpr int pool_retry_cap = 20;

/// n requests, each retried up to pool_retry_cap times with fresh hyper-
/// parameters; deduplicated by canonical text.
Pool generate_pool(std::size_t n, DimVector const& target, TreeGenerator const& gen, HyperSampler const& sampler,
    Rng& rng);

} // namespace qdsr
