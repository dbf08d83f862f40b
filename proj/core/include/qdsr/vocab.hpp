#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "qdsr/dims.hpp"

namespace qdsr {

/// Node symbols. Order matters: binaries, then unaries, then leaves.
enum class Op : std::uint8_t {
    Add, Sub, Mul, Div, Pow,
    Exp, Log, Sqrt, Sin, Cos, Tan, Asin, Acos, Atan, Sinh, Cosh, Tanh, Asinh, Acosh, Atanh,
    Var,      // column-backed leaf: original or auxiliary variable
    Scalar,   // free scalar placeholder A
    Constant, // numeric literal; integer exponents and snapped constants
};

inline constexpr std::size_t op_count = static_cast<std::size_t>(Op::Constant) + 1;

[[nodiscard]] constexpr int arity(Op op)
{
    if (op <= Op::Pow) { return 2; }
    if (op <= Op::Atanh) { return 1; }
    return 0;
}
[[nodiscard]] constexpr bool is_binary(Op op) { return arity(op) == 2; }
[[nodiscard]] constexpr bool is_unary(Op op) { return arity(op) == 1; }
[[nodiscard]] constexpr bool is_leaf(Op op) { return arity(op) == 0; }
[[nodiscard]] constexpr bool is_commutative(Op op) { return op == Op::Add || op == Op::Mul; }

[[nodiscard]] std::string_view op_name(Op op);
[[nodiscard]] std::optional<Op> function_by_name(std::string_view name);

enum class TokenKind { Binary, Unary, Variable, Scalar, Integer };

/// Auxiliary leaf definition over original-variable indices.
struct AuxDefinition {
    enum class Kind {
        Ratio,           // x[v0] / x[v1]
        RatioProduct,    // (x[v0] / x[v1]) * (x[v2] / x[v3])
        Norm,            // sum_i x[v_i]^2
        PairDifferences, // sum over consecutive pairs (x[v0] - x[v1])^2 + ...
    };
    Kind kind;
    std::vector<std::size_t> vars;
};

struct Token {
    std::string symbol;
    TokenKind kind;
    DimVector dim;
    int complexity = 1;
    std::optional<AuxDefinition> definition;
};

struct VocabFlags {
    bool da_enabled = true;
    bool aux_ratios = true;
    bool aux_ratio_products = true;
    bool aux_norms = true;
    bool aux_scalar_products = true;
    /// Also emit the single difference-square token for dimension groups of size 2.
    bool aux_pair_difference = false;
    std::size_t max_aux = 400;

    static VocabFlags none()
    {
        return {.aux_ratios = false, .aux_ratio_products = false, .aux_norms = false, .aux_scalar_products = false};
    }
};

/// Table 1 complexity score of an operator or placeholder symbol.
/// Throws std::out_of_range for unknown symbols.
int token_complexity(std::string_view symbol);
int op_complexity(Op op);

class Vocabulary {
public:
    Vocabulary() = default;

    [[nodiscard]] std::span<Op const> binaries() const { return binaries_; }
    [[nodiscard]] std::span<Op const> unaries() const { return unaries_; }
    [[nodiscard]] std::span<int const> integer_exponents() const { return integer_exponents_; }

    /// Column-backed leaves: originals first, then auxiliary variables.
    [[nodiscard]] std::vector<Token> const& variables() const { return variables_; }
    [[nodiscard]] Token const& scalar() const { return scalar_; }
    [[nodiscard]] std::size_t original_count() const { return original_count_; }
    [[nodiscard]] std::size_t aux_count() const { return variables_.size() - original_count_; }

    [[nodiscard]] VocabFlags const& flags() const { return flags_; }
    [[nodiscard]] std::size_t base_count() const { return base_count_; }
    [[nodiscard]] DimVector const& target_dim() const { return target_dim_; }
    [[nodiscard]] DimVector zero_dim() const { return DimVector(base_count_); }

    /// Variable indices whose dimension equals d, in vocabulary order.
    [[nodiscard]] std::vector<std::size_t> const& variables_with_dim(DimVector const& d) const;
    [[nodiscard]] std::optional<std::size_t> variable_index(std::string_view symbol) const;

    /// Complexity of an operator, placeholder or variable symbol.
    [[nodiscard]] int complexity(std::string_view symbol) const;

    /// `symbol | kind | dims | complexity | definition` rows.
    [[nodiscard]] std::string dump() const;

    /// Unit table of the originals as seen by this vocabulary (zeroed when DA is off).
    [[nodiscard]] UnitTable const& units() const { return units_; }

private:
    friend Vocabulary build_vocabulary(UnitTable const& units, VocabFlags const& flags);

    std::vector<Op> binaries_;
    std::vector<Op> unaries_;
    std::vector<int> integer_exponents_;
    std::vector<Token> variables_;
    Token scalar_;
    std::size_t original_count_ = 0;
    std::size_t base_count_ = 0;
    DimVector target_dim_;
    VocabFlags flags_;
    UnitTable units_;
    std::vector<std::pair<DimVector, std::vector<std::size_t>>> by_dim_;
};

Vocabulary build_vocabulary(UnitTable const& units, VocabFlags const& flags);

/// Anchored ratios x0/xk with reciprocals for each group of size >= 2, and
/// (when with_products) the products y_i * y_j, i <= j, over the anchored ratios.
std::vector<Token> dimensionless_ratios(UnitTable const& units, std::vector<VariableGroup> const& groups,
    bool with_products);

/// One sum-of-squares token per group of size >= 2.
std::vector<Token> norms(UnitTable const& units, std::vector<VariableGroup> const& groups);

/// One token per perfect matching of the group: sum over pairs (x_a - x_b)^2.
/// Empty for groups of odd size.
std::vector<Token> scalar_products(UnitTable const& units, VariableGroup const& group);

/// All perfect matchings of {0, ..., n-1}, each as a flat list of pairs.
std::vector<std::vector<std::size_t>> perfect_matchings(std::size_t n);

/// Value of an auxiliary leaf given the original variables of one row.
template <typename T>
T aux_value(AuxDefinition const& def, std::span<T const> x)
{
    auto const& v = def.vars;
    switch (def.kind) {
    case AuxDefinition::Kind::Ratio: return x[v[0]] / x[v[1]];
    case AuxDefinition::Kind::RatioProduct: return (x[v[0]] / x[v[1]]) * (x[v[2]] / x[v[3]]);
    case AuxDefinition::Kind::Norm: {
        T s = 0;
        for (auto i : v) { s += x[i] * x[i]; }
        return s;
    }
    case AuxDefinition::Kind::PairDifferences: {
        T s = 0;
        for (std::size_t i = 0; i + 1 < v.size(); i += 2) {
            T d = x[v[i]] - x[v[i + 1]];
            s += d * d;
        }
        return s;
    }
    }
    return T(0);
}

/// Fills every vocabulary variable (originals, then aux) from the originals of one row.
template <typename T>
void expand_row(Vocabulary const& vocab, std::span<T const> originals, std::vector<T>& out)
{
    auto const& vars = vocab.variables();
    out.resize(vars.size());
    for (std::size_t i = 0; i < vocab.original_count(); ++i) { out[i] = originals[i]; }
    for (std::size_t i = vocab.original_count(); i < vars.size(); ++i) {
        out[i] = aux_value<T>(*vars[i].definition, originals);
    }
}

/// Infix text of an auxiliary definition over the original variable names.
std::string definition_text(AuxDefinition const& def, UnitTable const& units);

} // namespace qdsr
