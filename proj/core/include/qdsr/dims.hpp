#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "qdsr/random.hpp"
#include "qdsr/rational.hpp"

namespace qdsr {

/// Exponents of a physical dimension over the run's base units.
class DimVector {
public:
    DimVector() = default;
    explicit DimVector(std::size_t size) : exps_(size) {}
    DimVector(std::initializer_list<Rational> exps) : exps_(exps) {}
    explicit DimVector(std::vector<Rational> exps) : exps_(std::move(exps)) {}

    [[nodiscard]] std::size_t size() const { return exps_.size(); }
    [[nodiscard]] bool is_zero() const;
    [[nodiscard]] Rational const& operator[](std::size_t i) const { return exps_[i]; }
    [[nodiscard]] Rational& operator[](std::size_t i) { return exps_[i]; }
    [[nodiscard]] std::span<Rational const> exponents() const { return exps_; }

    DimVector& operator+=(DimVector const& o);
    DimVector& operator-=(DimVector const& o);
    DimVector& operator*=(Rational const& s);

    friend DimVector operator+(DimVector a, DimVector const& b) { return a += b; }
    friend DimVector operator-(DimVector a, DimVector const& b) { return a -= b; }
    friend DimVector operator*(DimVector a, Rational const& s) { return a *= s; }
    friend DimVector operator*(Rational const& s, DimVector a) { return a *= s; }
    friend bool operator==(DimVector const&, DimVector const&) = default;

    /// "[1, -1/2, 0]"
    [[nodiscard]] std::string str() const;

private:
    std::vector<Rational> exps_;
};

struct DimHash {
    std::size_t operator()(DimVector const& d) const noexcept;
};

struct UnitEntry {
    std::string name;
    DimVector dim;
};

struct UnitTable {
    std::vector<UnitEntry> entries;
    DimVector target_dim;

    [[nodiscard]] std::size_t base_count() const { return target_dim.size(); }
    [[nodiscard]] std::optional<std::size_t> index_of(std::string_view name) const;
};

/// Parses rows `name, e1, ..., ek` plus one `TARGET, e1, ..., ek` row.
/// Blank lines and lines starting with '#' are skipped. Throws ParseError.
UnitTable parse_unit_table(std::string_view text);
UnitTable load_unit_table(std::string const& path);
std::string format_unit_table(UnitTable const& units);

/// Exponents q_i such that prod x_i^q_i carries the target dimension, when
/// that monomial is the only dimensionally admissible form.
using Monomial = std::vector<Rational>;

/// Returns the exponents iff the system sum q_i dim(x_i) = target_dim is
/// solvable and the dimension matrix has full column rank (no dimensionless
/// combination of the variables exists).
std::optional<Monomial> solve_trivial(UnitTable const& units);

struct VariableGroup {
    DimVector dim;
    std::vector<std::size_t> members; // indices into UnitTable::entries, ascending
};

/// Partition of the variables by shared dimension, ordered by first appearance.
std::vector<VariableGroup> group_by_dimension(UnitTable const& units);

enum class ExponentRange {
    Signed,      // q_i in [-p, p]
    NonNegative, // q_i in [0, p]
};

/// Dimensions reachable by monomials prod x_i^q_i with q_i bounded by p.
class MonomialLookup {
public:
    using Assignment = std::vector<int>; // one exponent per variable of the unit table

    static constexpr std::size_t default_key_cap = 200000;
    static constexpr std::size_t witnesses_per_key = 8;

    MonomialLookup() = default;
    MonomialLookup(std::vector<DimVector> const& variable_dims, std::size_t base_count, int p,
        std::size_t key_cap = default_key_cap, ExponentRange range = ExponentRange::Signed);

    [[nodiscard]] int max_exponent() const { return p_; }
    [[nodiscard]] std::size_t size() const { return table_.size(); }
    [[nodiscard]] bool contains(DimVector const& d) const { return table_.contains(d); }
    [[nodiscard]] std::vector<Assignment> const* witnesses(DimVector const& d) const;
    [[nodiscard]] std::vector<DimVector> const& keys() const { return keys_; }

private:
    int p_ = 0;
    std::unordered_map<DimVector, std::vector<Assignment>, DimHash> table_;
    std::vector<DimVector> keys_; // deterministic iteration order
};

MonomialLookup build_monomial_lookup(UnitTable const& units, int p,
    std::size_t key_cap = MonomialLookup::default_key_cap, ExponentRange range = ExponentRange::Signed);

enum class SplitOp { Mul, Div };

/// All (left, right) with left + right == parent (Mul) or left - right == parent
/// (Div), both keys of the lookup, in key order.
std::vector<std::pair<DimVector, DimVector>> valid_splits(DimVector const& parent, SplitOp op,
    MonomialLookup const& lookup);

/// Uniform choice among valid_splits(); nothing when no split exists.
std::optional<std::pair<DimVector, DimVector>> split_dimension(DimVector const& parent, SplitOp op,
    MonomialLookup const& lookup, Rng& rng);

} // namespace qdsr
