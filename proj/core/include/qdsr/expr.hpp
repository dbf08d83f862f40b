#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <deque>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "qdsr/dims.hpp"
#include "qdsr/vocab.hpp"

namespace qdsr {

struct Node {
    Op op = Op::Constant;
    std::uint32_t index = 0; // variable index (Var) or scalar slot (Scalar)
    double value = 0.0;      // Constant only
    DimVector dim;           // filled by infer_dims
    int nest = 0;            // unary and non-integer power nodes on the path from the root, inclusive

    static Node var(std::size_t i) { return {Op::Var, static_cast<std::uint32_t>(i), 0.0, {}, 0}; }
    static Node scalar() { return {Op::Scalar, 0, 0.0, {}, 0}; }
    static Node constant(double v) { return {Op::Constant, 0, v, {}, 0}; }
    static Node make(Op op) { return {op, 0, 0.0, {}, 0}; }
};

/// Expression tree stored in prefix order; every subtree is a contiguous range.
class ExprTree {
public:
    ExprTree() = default;
    explicit ExprTree(std::vector<Node> nodes);

    [[nodiscard]] std::size_t length() const { return nodes_.size(); }
    [[nodiscard]] bool empty() const { return nodes_.empty(); }
    [[nodiscard]] std::size_t scalar_slots() const;
    [[nodiscard]] std::vector<Node> const& nodes() const { return nodes_; }
    [[nodiscard]] Node const& operator[](std::size_t i) const { return nodes_[i]; }
    [[nodiscard]] Node const& root() const { return nodes_.front(); }

    /// One past the last node of the subtree rooted at i.
    [[nodiscard]] std::size_t subtree_end(std::size_t i) const;
    [[nodiscard]] std::size_t child(std::size_t i, int which) const { return which == 0 ? i + 1 : subtree_end(i + 1); }
    /// Parent index of every node (root maps to itself).
    [[nodiscard]] std::vector<std::size_t> parents() const;
    [[nodiscard]] ExprTree subtree(std::size_t i) const;

    /// Copy with the subtree at i replaced by `with`. Annotations are stale afterwards.
    [[nodiscard]] ExprTree replace_subtree(std::size_t i, ExprTree const& with) const;

    /// Renumbers Scalar slots positionally (A1..Ak in prefix order).
    void renumber_scalars();

    std::vector<Node>& mutable_nodes() { return nodes_; }

    friend bool structurally_equal(ExprTree const& a, ExprTree const& b);

private:
    std::vector<Node> nodes_;
};

bool structurally_equal(ExprTree const& a, ExprTree const& b);

/// True when node i is a Pow whose exponent is an integer-valued constant.
bool is_integer_power(ExprTree const& t, std::size_t i);

struct DimViolation {
    std::size_t node;
    std::string rule;
};

/// Annotates every node with its dimension and nesting depth. Returns the
/// first violated rule, found bottom-up, when the tree is inconsistent.
std::optional<DimViolation> infer_dims(ExprTree& tree, Vocabulary const& vocab);

struct TreeLimits {
    std::size_t max_len = 35;
    int max_nest = 2;
};

/// infer_dims plus the length and nesting bounds; optionally the root dimension.
std::optional<DimViolation> validate(ExprTree& tree, Vocabulary const& vocab, TreeLimits const& limits,
    DimVector const* root_dim = nullptr);

/// Maximum nesting depth computed from structure alone.
int max_nesting(ExprTree const& tree);

struct FeatureVector {
    std::size_t length = 0;
    std::size_t num_scalars = 0;
    std::size_t num_functions = 0;
    std::size_t num_var_occurrences = 0;
    bool has_nested = false;

    friend bool operator==(FeatureVector const&, FeatureVector const&) = default;
};

FeatureVector features(ExprTree const& tree);

/// Sum of per-token complexity scores.
int complexity(ExprTree const& tree, Vocabulary const& vocab);

/// Scalar semantics of a unary operator; domain errors give NaN.
template <typename T>
T apply_unary(Op op, T x)
{
    using std::acos, std::acosh, std::asin, std::asinh, std::atan, std::atanh, std::cos, std::cosh, std::exp,
        std::log, std::sin, std::sinh, std::sqrt, std::tan, std::tanh;
    switch (op) {
    case Op::Exp: return exp(x);
    case Op::Log: return log(x);
    case Op::Sqrt: return sqrt(x);
    case Op::Sin: return sin(x);
    case Op::Cos: return cos(x);
    case Op::Tan: return tan(x);
    case Op::Asin: return asin(x);
    case Op::Acos: return acos(x);
    case Op::Atan: return atan(x);
    case Op::Sinh: return sinh(x);
    case Op::Cosh: return cosh(x);
    case Op::Tanh: return tanh(x);
    case Op::Asinh: return asinh(x);
    case Op::Acosh: return acosh(x);
    case Op::Atanh: return atanh(x);
    default: return std::numeric_limits<T>::quiet_NaN();
    }
}

template <typename T>
T apply_binary(Op op, T a, T b)
{
    switch (op) {
    case Op::Add: return a + b;
    case Op::Sub: return a - b;
    case Op::Mul: return a * b;
    case Op::Div: return a / b;
    case Op::Pow: {
        using std::pow;
        // integer exponents stay exact for negative bases
        if (b == T(2)) { return a * a; }
        return pow(a, b);
    }
    default: return std::numeric_limits<T>::quiet_NaN();
    }
}

using Columns = std::vector<std::span<double const>>;

/// Reusable evaluation buffers; one per worker.
class EvalScratch {
public:
    std::vector<double>& acquire(std::size_t n);
    void release(std::size_t count);
    void reset() { used_ = 0; }

private:
    std::deque<std::vector<double>> buffers_; // stable addresses across growth
    std::size_t used_ = 0;
};

/// Evaluates over a batch given one column per vocabulary variable. Domain
/// errors surface as non-finite values.
void evaluate(ExprTree const& tree, Columns const& columns, std::span<double const> params, std::span<double> out,
    EvalScratch& scratch);
std::vector<double> evaluate(ExprTree const& tree, Columns const& columns, std::span<double const> params);

/// Single-point evaluation at arbitrary floating precision.
template <typename T>
T evaluate_point(ExprTree const& tree, std::span<T const> vars, std::span<T const> params);

extern template double evaluate_point<double>(ExprTree const&, std::span<double const>, std::span<double const>);
extern template long double evaluate_point<long double>(ExprTree const&, std::span<long double const>,
    std::span<long double const>);

/// Canonical parenthesized infix text. Every binary node is wrapped except
/// the root; unary operands of binary nodes are wrapped as well.
std::string to_string(ExprTree const& tree, Vocabulary const& vocab);

/// Parses infix text. Identifiers resolve to functions, `pi`, scalar
/// placeholders (`A`, `A1`, ...), or vocabulary variables. Throws ParseError.
ExprTree parse_expression(std::string_view text, Vocabulary const& vocab);

std::string format_constant(double v);

} // namespace qdsr
