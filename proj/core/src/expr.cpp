#include "qdsr/expr.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

#include <fmt/format.h>

namespace qdsr {

ExprTree::ExprTree(std::vector<Node> nodes) : nodes_(std::move(nodes)) {}

std::size_t ExprTree::scalar_slots() const
{
    return static_cast<std::size_t>(
        std::count_if(nodes_.begin(), nodes_.end(), [](auto const& n) { return n.op == Op::Scalar; }));
}

std::size_t ExprTree::subtree_end(std::size_t i) const
{
    std::ptrdiff_t open = 1;
    std::size_t j = i;
    while (open > 0) {
        open += arity(nodes_[j].op) - 1;
        ++j;
    }
    return j;
}

std::vector<std::size_t> ExprTree::parents() const
{
    std::vector<std::size_t> parent(nodes_.size(), 0);
    // stack of (node, remaining child slots)
    std::vector<std::pair<std::size_t, int>> stack;
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
        if (!stack.empty()) {
            parent[i] = stack.back().first;
            if (--stack.back().second == 0) { stack.pop_back(); }
        }
        if (auto a = arity(nodes_[i].op); a > 0) { stack.emplace_back(i, a); }
    }
    return parent;
}

ExprTree ExprTree::subtree(std::size_t i) const
{
    auto e = subtree_end(i);
    return ExprTree(std::vector<Node>(nodes_.begin() + static_cast<std::ptrdiff_t>(i),
        nodes_.begin() + static_cast<std::ptrdiff_t>(e)));
}

ExprTree ExprTree::replace_subtree(std::size_t i, ExprTree const& with) const
{
    auto e = subtree_end(i);
    std::vector<Node> out;
    out.reserve(nodes_.size() - (e - i) + with.length());
    out.insert(out.end(), nodes_.begin(), nodes_.begin() + static_cast<std::ptrdiff_t>(i));
    out.insert(out.end(), with.nodes_.begin(), with.nodes_.end());
    out.insert(out.end(), nodes_.begin() + static_cast<std::ptrdiff_t>(e), nodes_.end());
    ExprTree t(std::move(out));
    t.renumber_scalars();
    return t;
}

void ExprTree::renumber_scalars()
{
    std::uint32_t k = 0;
    for (auto& n : nodes_) {
        if (n.op == Op::Scalar) { n.index = k++; }
    }
}

bool structurally_equal(ExprTree const& a, ExprTree const& b)
{
    if (a.nodes_.size() != b.nodes_.size()) { return false; }
    for (std::size_t i = 0; i < a.nodes_.size(); ++i) {
        auto const& x = a.nodes_[i];
        auto const& y = b.nodes_[i];
        if (x.op != y.op) { return false; }
        if (x.op == Op::Var && x.index != y.index) { return false; }
        if (x.op == Op::Constant && x.value != y.value) { return false; }
    }
    return true;
}

bool is_integer_power(ExprTree const& t, std::size_t i)
{
    if (t[i].op != Op::Pow) { return false; }
    auto e = t.child(i, 1);
    return t[e].op == Op::Constant && std::isfinite(t[e].value) && std::trunc(t[e].value) == t[e].value;
}

namespace {
    // subtree end for every node in one reverse pass
    std::vector<std::size_t> subtree_ends(std::vector<Node> const& nodes)
    {
        std::vector<std::size_t> ends(nodes.size());
        std::vector<std::size_t> stack;
        for (auto i = nodes.size(); i-- > 0;) {
            auto a = arity(nodes[i].op);
            std::size_t end = i + 1;
            for (int c = 0; c < a; ++c) {
                end = stack.back();
                stack.pop_back();
            }
            ends[i] = end;
            stack.push_back(end);
        }
        return ends;
    }

    bool counts_as_nesting(std::vector<Node> const& nodes, std::vector<std::size_t> const& ends, std::size_t i)
    {
        auto op = nodes[i].op;
        if (is_unary(op)) { return true; }
        if (op != Op::Pow) { return false; }
        auto const& e = nodes[ends[i + 1]];
        return !(e.op == Op::Constant && std::trunc(e.value) == e.value);
    }
} // namespace

std::optional<DimViolation> infer_dims(ExprTree& tree, Vocabulary const& vocab)
{
    auto& nodes = tree.mutable_nodes();
    if (nodes.empty()) { return DimViolation{0, "empty tree"}; }
    auto ends = subtree_ends(nodes);
    auto zero = vocab.zero_dim();

    for (auto i = nodes.size(); i-- > 0;) {
        auto& n = nodes[i];
        switch (arity(n.op)) {
        case 0:
            if (n.op == Op::Var) {
                if (n.index >= vocab.variables().size()) { return DimViolation{i, "unknown variable"}; }
                n.dim = vocab.variables()[n.index].dim;
            } else {
                n.dim = zero;
            }
            break;
        case 1: {
            auto const& c = nodes[i + 1].dim;
            if (n.op == Op::Sqrt) {
                n.dim = c * Rational(1, 2);
            } else if (!c.is_zero()) {
                return DimViolation{i, fmt::format("unary {} on dimensioned argument {}", op_name(n.op), c.str())};
            } else {
                n.dim = zero;
            }
            break;
        }
        default: {
            auto const& l = nodes[i + 1];
            auto const& r = nodes[ends[i + 1]];
            switch (n.op) {
            case Op::Add:
            case Op::Sub:
                if (!(l.dim == r.dim)) {
                    return DimViolation{i, fmt::format("{} of mismatched dimensions {} and {}", op_name(n.op),
                                               l.dim.str(), r.dim.str())};
                }
                n.dim = l.dim;
                break;
            case Op::Mul:
                n.dim = l.dim + r.dim;
                break;
            case Op::Div:
                n.dim = l.dim - r.dim;
                break;
            case Op::Pow: {
                if (!r.dim.is_zero()) { return DimViolation{i, "dimensioned exponent"}; }
                Rational q;
                if (r.op == Op::Constant && Rational::from_double(r.value, 12, 1e-12, q)) {
                    n.dim = l.dim * q;
                } else if (!l.dim.is_zero()) {
                    return DimViolation{i, "non-integer power of a dimensioned base"};
                } else {
                    n.dim = zero;
                }
                break;
            }
            default:
                break;
            }
        }
        }
    }

    // nesting, top-down: prefix order guarantees parents are visited first
    auto parents = tree.parents();
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        int inherited = i == 0 ? 0 : nodes[parents[i]].nest;
        nodes[i].nest = inherited + (counts_as_nesting(nodes, ends, i) ? 1 : 0);
    }
    return std::nullopt;
}

std::optional<DimViolation> validate(ExprTree& tree, Vocabulary const& vocab, TreeLimits const& limits,
    DimVector const* root_dim)
{
    if (auto v = infer_dims(tree, vocab)) { return v; }
    if (tree.length() > limits.max_len) {
        return DimViolation{0, fmt::format("length {} exceeds {}", tree.length(), limits.max_len)};
    }
    for (std::size_t i = 0; i < tree.length(); ++i) {
        if (tree[i].nest > limits.max_nest) {
            return DimViolation{i, fmt::format("nesting {} exceeds {}", tree[i].nest, limits.max_nest)};
        }
    }
    if (root_dim != nullptr && !(tree.root().dim == *root_dim)) {
        return DimViolation{0, fmt::format("root dimension {} differs from {}", tree.root().dim.str(), root_dim->str())};
    }
    return std::nullopt;
}

int max_nesting(ExprTree const& tree)
{
    auto const& nodes = tree.nodes();
    if (nodes.empty()) { return 0; }
    auto ends = subtree_ends(nodes);
    auto parents = tree.parents();
    std::vector<int> nest(nodes.size(), 0);
    int best = 0;
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        nest[i] = (i == 0 ? 0 : nest[parents[i]]) + (counts_as_nesting(nodes, ends, i) ? 1 : 0);
        best = std::max(best, nest[i]);
    }
    return best;
}

FeatureVector features(ExprTree const& tree)
{
    FeatureVector f;
    f.length = tree.length();
    for (auto const& n : tree.nodes()) {
        if (n.op == Op::Scalar) { ++f.num_scalars; }
        if (n.op == Op::Var) { ++f.num_var_occurrences; }
        if (is_unary(n.op)) { ++f.num_functions; }
    }
    f.has_nested = max_nesting(tree) >= 2;
    return f;
}

int complexity(ExprTree const& tree, Vocabulary const& vocab)
{
    int c = 0;
    for (auto const& n : tree.nodes()) {
        c += n.op == Op::Var ? vocab.variables().at(n.index).complexity : op_complexity(n.op);
    }
    return c;
}

std::vector<double>& EvalScratch::acquire(std::size_t n)
{
    if (used_ == buffers_.size()) { buffers_.emplace_back(); }
    auto& b = buffers_[used_++];
    b.resize(n);
    return b;
}

void EvalScratch::release(std::size_t count) { used_ -= count; }


void evaluate(ExprTree const& tree, Columns const& columns, std::span<double const> params, std::span<double> out,
    EvalScratch& scratch)
{
    auto const& nodes = tree.nodes();
    auto const n = out.size();
    scratch.reset();
    std::vector<std::vector<double>*> stack;
    stack.reserve(nodes.size());

    for (auto i = nodes.size(); i-- > 0;) {
        auto const& node = nodes[i];
        switch (arity(node.op)) {
        case 0: {
            auto& b = scratch.acquire(n);
            if (node.op == Op::Var) {
                auto col = columns[node.index];
                std::copy(col.begin(), col.begin() + static_cast<std::ptrdiff_t>(n), b.begin());
            } else {
                double v = node.op == Op::Scalar ? params[node.index] : node.value;
                std::fill(b.begin(), b.end(), v);
            }
            stack.push_back(&b);
            break;
        }
        case 1: {
            auto& b = *stack.back();
            auto op = node.op;
            for (auto& x : b) { x = apply_unary(op, x); }
            break;
        }
        default: {
            auto& a = *stack.back();
            stack.pop_back();
            auto& b = *stack.back();
            auto op = node.op;
            // result goes into the second child's buffer, which sits lower on the stack
            switch (op) {
            case Op::Add: for (std::size_t k = 0; k < n; ++k) { b[k] = a[k] + b[k]; } break;
            case Op::Sub: for (std::size_t k = 0; k < n; ++k) { b[k] = a[k] - b[k]; } break;
            case Op::Mul: for (std::size_t k = 0; k < n; ++k) { b[k] = a[k] * b[k]; } break;
            case Op::Div: for (std::size_t k = 0; k < n; ++k) { b[k] = a[k] / b[k]; } break;
            default: for (std::size_t k = 0; k < n; ++k) { b[k] = apply_binary(op, a[k], b[k]); } break;
            }
            break;
        }
        }
    }
    std::copy(stack.back()->begin(), stack.back()->end(), out.begin());
}

std::vector<double> evaluate(ExprTree const& tree, Columns const& columns, std::span<double const> params)
{
    std::size_t n = columns.empty() ? 1 : columns.front().size();
    std::vector<double> out(n);
    EvalScratch scratch;
    evaluate(tree, columns, params, out, scratch);
    return out;
}

template <typename T>
T evaluate_point(ExprTree const& tree, std::span<T const> vars, std::span<T const> params)
{
    auto const& nodes = tree.nodes();
    std::vector<T> stack;
    stack.reserve(nodes.size());
    for (auto i = nodes.size(); i-- > 0;) {
        auto const& node = nodes[i];
        switch (arity(node.op)) {
        case 0:
            if (node.op == Op::Var) {
                stack.push_back(vars[node.index]);
            } else if (node.op == Op::Scalar) {
                stack.push_back(params[node.index]);
            } else if (node.value == std::numbers::pi) {
                stack.push_back(std::numbers::pi_v<T>);
            } else {
                stack.push_back(static_cast<T>(node.value));
            }
            break;
        case 1:
            stack.back() = apply_unary(node.op, stack.back());
            break;
        default: {
            T a = stack.back();
            stack.pop_back();
            stack.back() = apply_binary(node.op, a, stack.back());
        }
        }
    }
    return stack.back();
}

template double evaluate_point<double>(ExprTree const&, std::span<double const>, std::span<double const>);
template long double evaluate_point<long double>(ExprTree const&, std::span<long double const>,
    std::span<long double const>);

std::string format_constant(double v)
{
    if (v == std::numbers::pi) { return "pi"; }
    if (std::isfinite(v) && std::trunc(v) == v && std::abs(v) < 1e15) {
        return fmt::format("{}", static_cast<long long>(v));
    }
    return fmt::format("{}", v); // shortest round-trip representation
}

namespace {
    void render(ExprTree const& t, std::size_t i, Vocabulary const& vocab, bool wrap, std::string& out)
    {
        auto const& n = t[i];
        switch (arity(n.op)) {
        case 0:
            if (n.op == Op::Var) {
                out += vocab.variables().at(n.index).symbol;
            } else if (n.op == Op::Scalar) {
                out += fmt::format("A{}", n.index + 1);
            } else {
                out += format_constant(n.value);
            }
            return;
        case 1:
            if (wrap) { out += '('; }
            out += op_name(n.op);
            out += '(';
            render(t, i + 1, vocab, false, out);
            out += ')';
            if (wrap) { out += ')'; }
            return;
        default:
            if (wrap) { out += '('; }
            render(t, i + 1, vocab, true, out);
            out += ' ';
            out += op_name(n.op);
            out += ' ';
            render(t, t.subtree_end(i + 1), vocab, true, out);
            if (wrap) { out += ')'; }
            return;
        }
    }
} // namespace

std::string to_string(ExprTree const& tree, Vocabulary const& vocab)
{
    std::string out;
    if (!tree.empty()) { render(tree, 0, vocab, false, out); }
    return out;
}

} // namespace qdsr
