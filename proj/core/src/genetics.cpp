#include "qdsr/genetics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace qdsr {

namespace {
    /// Annotated copy; inputs from the grid are annotated already.
    ExprTree annotated(ExprTree const& t, Vocabulary const& vocab)
    {
        ExprTree copy = t;
        if (!copy.empty() && copy.root().dim.size() != vocab.base_count()) { infer_dims(copy, vocab); }
        return copy;
    }

    int nest_above(ExprTree const& t, std::vector<std::size_t> const& parents, std::size_t i)
    {
        return i == 0 ? 0 : t[parents[i]].nest;
    }

    /// Deepest nesting inside the subtree at i, relative to its parent.
    int nest_within(ExprTree const& t, std::vector<std::size_t> const& parents, std::size_t i)
    {
        int base = nest_above(t, parents, i);
        int best = 0;
        for (auto n = i, e = t.subtree_end(i); n < e; ++n) { best = std::max(best, t[n].nest - base); }
        return best;
    }

    std::optional<ExprTree> checked(ExprTree t, Vocabulary const& vocab, TreeLimits const& limits,
        DimVector const& root_dim)
    {
        if (validate(t, vocab, limits, &root_dim)) { return std::nullopt; }
        return t;
    }
} // namespace

bool SelectionConfig::valid() const
{
    auto sum = std::accumulate(proportions.begin(), proportions.end(), 0.0);
    return k > 0.0 && std::abs(sum - 1.0) < 1e-9
        && std::all_of(proportions.begin(), proportions.end(), [](double p) { return p >= 0.0; }) && retry_cap >= 1;
}

std::vector<double> rank_weights(std::size_t n, double k)
{
    std::vector<double> w(n);
    for (std::size_t x = 0; x < n; ++x) { w[x] = 1.0 / (static_cast<double>(x) + k); }
    auto sum = std::accumulate(w.begin(), w.end(), 0.0);
    for (auto& v : w) { v /= sum; }
    return w;
}

ParentSelector::ParentSelector(std::vector<Candidate const*> candidates, double k) : ranked_(std::move(candidates))
{
    if (ranked_.empty()) { throw std::invalid_argument("parent selection needs a non-empty grid"); }
    std::stable_sort(ranked_.begin(), ranked_.end(),
        [](Candidate const* a, Candidate const* b) { return a->fitness > b->fitness; });
    probs_ = rank_weights(ranked_.size(), k);
    cumulative_.resize(probs_.size());
    std::partial_sum(probs_.begin(), probs_.end(), cumulative_.begin());
    cumulative_.back() = 1.0;
}

std::size_t ParentSelector::draw_rank(Rng& rng) const
{
    auto u = uniform01(rng);
    auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), u);
    return std::min(static_cast<std::size_t>(it - cumulative_.begin()), cumulative_.size() - 1);
}

Candidate const& select_parent(QDGrid const& grid, SelectionConfig const& cfg, Rng& rng)
{
    if (grid.empty()) { throw std::invalid_argument("parent selection needs a non-empty grid"); }
    ParentSelector sel(grid, cfg.k);
    return sel.draw(rng);
}

std::optional<ExprTree> crossover(ExprTree const& a_in, ExprTree const& b_in, Vocabulary const& vocab,
    TreeLimits const& limits, Rng& rng)
{
    auto a = annotated(a_in, vocab);
    auto b = annotated(b_in, vocab);
    auto pa = a.parents();
    auto pb = b.parents();

    std::vector<std::size_t> b_size(b.length());
    std::vector<int> b_nest(b.length());
    for (std::size_t j = 0; j < b.length(); ++j) {
        b_size[j] = b.subtree_end(j) - j;
        b_nest[j] = nest_within(b, pb, j);
    }

    std::vector<std::pair<std::size_t, std::size_t>> pairs;
    for (std::size_t i = 0; i < a.length(); ++i) {
        auto a_size = a.subtree_end(i) - i;
        auto above = nest_above(a, pa, i);
        for (std::size_t j = 0; j < b.length(); ++j) {
            if (!(a[i].dim == b[j].dim)) { continue; }
            if (a.length() - a_size + b_size[j] > limits.max_len) { continue; }
            if (above + b_nest[j] > limits.max_nest) { continue; }
            // an integer exponent slot keeps its constant
            if (i > 0 && a[pa[i]].op == Op::Pow && is_integer_power(a, pa[i]) && i != pa[i] + 1) { continue; }
            pairs.emplace_back(i, j);
        }
    }
    if (pairs.empty()) { return std::nullopt; }
    auto [i, j] = pairs[uniform_index(rng, pairs.size())];
    return checked(a.replace_subtree(i, b.subtree(j)), vocab, limits, a.root().dim);
}

int depth(ExprTree const& t)
{
    if (t.empty()) { return 0; }
    auto parents = t.parents();
    std::vector<int> level(t.length(), 1);
    int best = 1;
    for (std::size_t i = 1; i < t.length(); ++i) {
        level[i] = level[parents[i]] + 1;
        best = std::max(best, level[i]);
    }
    return best;
}

std::optional<ExprTree> mutate(ExprTree const& t_in, TreeGenerator const& gen, TreeLimits const& limits, Rng& rng)
{
    auto const& vocab = gen.vocab();
    auto t = annotated(t_in, vocab);
    auto parents = t.parents();
    auto const root_dim = t.root().dim;

    if (uniform01(rng) < 0.5) {
        // token swap
        std::vector<std::size_t> order(t.length());
        std::iota(order.begin(), order.end(), 0);
        std::shuffle(order.begin(), order.end(), rng);
        for (auto i : order) {
            auto const& n = t[i];
            std::vector<Node> options;
            switch (n.op) {
            case Op::Var:
            case Op::Scalar: {
                for (auto v : vocab.variables_with_dim(n.dim)) {
                    if (n.op != Op::Var || v != n.index) { options.push_back(Node::var(v)); }
                }
                if (n.op == Op::Var && n.dim.is_zero()) { options.push_back(Node::scalar()); }
                break;
            }
            case Op::Constant: {
                // exponent of a dimensionless base
                if (i > 0 && t[parents[i]].op == Op::Pow && i != parents[i] + 1 && t[parents[i] + 1].dim.is_zero()) {
                    for (int k : vocab.integer_exponents()) {
                        if (k != n.value) { options.push_back(Node::constant(k)); }
                    }
                }
                break;
            }
            case Op::Add: options.push_back(Node::make(Op::Sub)); break;
            case Op::Sub: options.push_back(Node::make(Op::Add)); break;
            case Op::Mul:
            case Op::Div:
                if (t[t.child(i, 1)].dim.is_zero()) { options.push_back(Node::make(n.op == Op::Mul ? Op::Div : Op::Mul)); }
                break;
            default:
                if (is_unary(n.op) && t[i + 1].dim.is_zero()) {
                    for (auto f : vocab.unaries()) {
                        if (f != n.op) { options.push_back(Node::make(f)); }
                    }
                }
                break;
            }
            if (options.empty()) { continue; }
            auto out = t;
            auto& slot = out.mutable_nodes()[i];
            auto const& pick = options[uniform_index(rng, options.size())];
            slot.op = pick.op;
            slot.index = pick.index;
            slot.value = pick.value;
            out.renumber_scalars();
            return checked(std::move(out), vocab, limits, root_dim);
        }
        return std::nullopt;
    }

    // grow one leaf
    std::vector<std::size_t> leaves;
    for (std::size_t i = 0; i < t.length(); ++i) {
        bool exponent = i > 0 && t[parents[i]].op == Op::Pow && is_integer_power(t, parents[i]) && i != parents[i] + 1;
        if (is_leaf(t[i].op) && !exponent) { leaves.push_back(i); }
    }
    if (leaves.empty()) { return std::nullopt; }
    auto i = leaves[uniform_index(rng, leaves.size())];
    auto room = limits.max_len - (t.length() - 1);
    GenHyper base;
    base.max_len = std::min<std::size_t>(7, room);
    base.max_nest = limits.max_nest;
    auto hyper = HyperSampler(base).sample(rng);
    auto sub = gen.generate_subtree(t[i].dim, hyper, nest_above(t, parents, i), rng);
    if (!sub || depth(*sub) > 3) { return std::nullopt; }
    return checked(t.replace_subtree(i, *sub), vocab, limits, root_dim);
}

std::optional<ExprTree> remove_unary(ExprTree const& t_in, Vocabulary const& vocab, TreeLimits const& limits,
    Rng& rng)
{
    auto t = annotated(t_in, vocab);
    std::vector<std::size_t> removable;
    for (std::size_t i = 0; i < t.length(); ++i) {
        // sqrt changes the dimension unless its argument is dimensionless
        if (is_unary(t[i].op) && t[i + 1].dim == t[i].dim) { removable.push_back(i); }
    }
    if (removable.empty()) { return std::nullopt; }
    auto i = removable[uniform_index(rng, removable.size())];
    return checked(t.replace_subtree(i, t.subtree(i + 1)), vocab, limits, t.root().dim);
}

std::array<std::size_t, 3> class_counts(std::size_t n, std::array<double, 3> const& proportions)
{
    std::array<std::size_t, 3> counts{};
    std::array<double, 3> frac{};
    std::size_t assigned = 0;
    for (std::size_t c = 0; c < 3; ++c) {
        double exact = proportions[c] * static_cast<double>(n);
        counts[c] = static_cast<std::size_t>(std::floor(exact + 1e-9));
        frac[c] = exact - static_cast<double>(counts[c]);
        assigned += counts[c];
    }
    // remainder to the largest fractional parts, earlier classes first on ties
    while (assigned < n) {
        std::size_t best = 0;
        for (std::size_t c = 1; c < 3; ++c) {
            if (frac[c] > frac[best] + 1e-12) { best = c; }
        }
        ++counts[best];
        frac[best] = -1.0;
        ++assigned;
    }
    return counts;
}

std::vector<Offspring> next_generation(QDGrid const& grid, TreeGenerator const& gen, SelectionConfig const& cfg,
    TreeLimits const& limits, Rng& rng, GenerationStats* stats)
{
    auto const& vocab = gen.vocab();
    ParentSelector selector(grid, cfg.k);
    auto const n = grid.size();
    auto const counts = class_counts(n, cfg.proportions);
    auto const seed = rng();

    std::vector<Offspring> out;
    out.reserve(n);
    GenerationStats local;
    std::size_t slot = 0;
    for (std::size_t c = 0; c < 3; ++c) {
        for (std::size_t s = 0; s < counts[c]; ++s, ++slot) {
            auto srng = make_stream(seed, slot);
            auto const& parent = selector.draw(srng);
            auto kind = static_cast<Variation>(c);
            std::optional<ExprTree> child;
            for (int attempt = 0; attempt < cfg.retry_cap && !child; ++attempt) {
                switch (kind) {
                case Variation::Crossover:
                    child = crossover(parent.tree, selector.draw(srng).tree, vocab, limits, srng);
                    break;
                case Variation::UnaryRemoval: child = remove_unary(parent.tree, vocab, limits, srng); break;
                default: child = mutate(parent.tree, gen, limits, srng); break;
                }
            }
            if (!child && kind != Variation::Mutation) {
                ++local.fallbacks;
                kind = Variation::Mutation;
                for (int attempt = 0; attempt < cfg.retry_cap && !child; ++attempt) {
                    child = mutate(parent.tree, gen, limits, srng);
                }
            }
            if (!child) {
                kind = Variation::Clone;
                child = parent.tree;
            }
            ++local.produced[static_cast<std::size_t>(kind)];
            out.push_back({std::move(*child), kind});
        }
    }
    if (stats != nullptr) { *stats = local; }
    return out;
}

} // namespace qdsr
