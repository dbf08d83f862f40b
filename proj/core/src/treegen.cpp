#include "qdsr/treegen.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <functional>
#include <numeric>
#include <unordered_set>

#include "qdsr/error.hpp"

namespace qdsr {

namespace {
    constexpr std::size_t op_slot(Op op) { return static_cast<std::size_t>(op); }

    template <std::size_t N>
    double total(std::array<double, N> const& w)
    {
        return std::accumulate(w.begin(), w.end(), 0.0);
    }

    std::size_t weighted_pick(std::span<double const> w, Rng& rng)
    {
        double sum = std::accumulate(w.begin(), w.end(), 0.0);
        double u = uniform01(rng) * sum;
        for (std::size_t i = 0; i < w.size(); ++i) {
            if (w[i] <= 0.0) { continue; }
            if (u < w[i]) { return i; }
            u -= w[i];
        }
        // numerical leftover: last positive weight
        for (auto i = w.size(); i-- > 0;) {
            if (w[i] > 0.0) { return i; }
        }
        return 0;
    }

    struct TmpNode {
        Node node;
        int child[2] = {-1, -1};
    };

    struct Pending {
        int id;
        DimVector dim;
        int nest_above;
    };

    void flatten(std::vector<TmpNode> const& tmp, int id, std::vector<Node>& out)
    {
        auto const& t = tmp[static_cast<std::size_t>(id)];
        out.push_back(t.node);
        for (int c : t.child) {
            if (c >= 0) { flatten(tmp, c, out); }
        }
    }

    ExprTree join(Op op, ExprTree const& l, ExprTree const& r)
    {
        std::vector<Node> nodes;
        nodes.reserve(1 + l.length() + r.length());
        nodes.push_back(Node::make(op));
        nodes.insert(nodes.end(), l.nodes().begin(), l.nodes().end());
        nodes.insert(nodes.end(), r.nodes().begin(), r.nodes().end());
        ExprTree t(std::move(nodes));
        t.renumber_scalars();
        return t;
    }

    ExprTree join_unary(Op op, ExprTree const& arg)
    {
        std::vector<Node> nodes;
        nodes.reserve(1 + arg.length());
        nodes.push_back(Node::make(op));
        nodes.insert(nodes.end(), arg.nodes().begin(), arg.nodes().end());
        return ExprTree(std::move(nodes));
    }
} // namespace

bool GenHyper::valid() const
{
    auto positive = [](auto const& w) { return std::all_of(w.begin(), w.end(), [](double x) { return x > 0.0; }); };
    if (!positive(arity_weights) || !positive(op_weights)) { return false; }
    if (std::abs(total(arity_weights) - 1.0) > 1e-9 || std::abs(total(op_weights) - 1.0) > 1e-9) { return false; }
    auto const& w = op_weights;
    return w[op_slot(Op::Mul)] >= w[op_slot(Op::Div)] && w[op_slot(Op::Div)] >= w[op_slot(Op::Add)]
        && w[op_slot(Op::Div)] >= w[op_slot(Op::Sub)] && p >= 1 && max_nest >= 0 && max_len >= 1;
}

GenHyper HyperSampler::sample(Rng& rng) const
{
    GenHyper h = base_;
    h.p = 1 + static_cast<int>(uniform_index(rng, 3));
    h.max_len = 1 + uniform_index(rng, base_.max_len);
    auto jitter = [&](double x) { return x * (0.7 + 0.6 * uniform01(rng)); };

    for (auto& w : h.arity_weights) { w = jitter(w); }
    auto at = total(h.arity_weights);
    for (auto& w : h.arity_weights) { w /= at; }

    for (auto& w : h.op_weights) { w = jitter(w); }
    std::array<double, 4> arith{h.op_weights[op_slot(Op::Mul)], h.op_weights[op_slot(Op::Div)],
        h.op_weights[op_slot(Op::Add)], h.op_weights[op_slot(Op::Sub)]};
    std::sort(arith.begin(), arith.end(), std::greater<>());
    h.op_weights[op_slot(Op::Mul)] = arith[0];
    h.op_weights[op_slot(Op::Div)] = arith[1];
    h.op_weights[op_slot(Op::Add)] = arith[2];
    h.op_weights[op_slot(Op::Sub)] = arith[3];
    auto ot = total(h.op_weights);
    for (auto& w : h.op_weights) { w /= ot; }

    h.scalar_share = std::clamp(jitter(h.scalar_share), 0.01, 0.99);
    return h;
}

TreeGenerator::TreeGenerator(Vocabulary const& vocab) : vocab_(&vocab)
{
    for (int p = 1; p <= max_p; ++p) {
        try {
            auto signed_lookup = build_monomial_lookup(vocab.units(), p);
            auto split = build_monomial_lookup(vocab.units(), p, MonomialLookup::default_key_cap,
                ExponentRange::NonNegative);
            lookups_.emplace(p, std::move(signed_lookup));
            split_lookups_.emplace(p, std::move(split));
            top_p_ = p;
        } catch (ResourceError const&) {
            // many variables: larger p only adds keys, so stop at the last p that fit
            if (p == 1) { throw; }
            break;
        }
    }
}

MonomialLookup const& TreeGenerator::lookup(int p) const { return lookups_.at(std::clamp(p, 1, top_p_)); }

MonomialLookup const& TreeGenerator::split_lookup(int p) const
{
    return split_lookups_.at(std::clamp(p, 1, top_p_));
}

TreeGenerator::SplitList const& TreeGenerator::splits(DimVector const& parent, SplitOp op, int p) const
{
    std::lock_guard lock(cache_mutex_);
    SplitKey key{parent, op, p};
    auto it = split_cache_.find(key);
    if (it == split_cache_.end()) {
        auto list = valid_splits(parent, op, split_lookup(p));
        // exponents beyond p: allow signed factors, e.g. (m * q**3 / (e * h)) * (q / (e * h))
        if (list.empty()) { list = valid_splits(parent, op, lookup(p)); }
        it = split_cache_.emplace(key, std::make_unique<SplitList>(std::move(list))).first;
    }
    return *it->second;
}

bool TreeGenerator::expandable(DimVector const& d, int p) const
{
    return d.is_zero() || !vocab_->variables_with_dim(d).empty() || !splits(d, SplitOp::Mul, p).empty()
        || !splits(d, SplitOp::Div, p).empty();
}

std::optional<ExprTree> TreeGenerator::generate_tree(DimVector const& target, GenHyper const& hyper, Rng& rng) const
{
    return generate_subtree(target, hyper, 0, rng);
}

std::size_t TreeGenerator::monomial_len(DimVector const& d) const
{
    // shortest monomial x1**q1 * ... / (...) among the stored witnesses
    std::size_t best = unreachable_len;
    if (auto const* ws = lookup(top_p_).witnesses(d)) {
        for (auto const& q : *ws) {
            std::size_t len = 0;
            std::size_t factors = 0;
            bool any_positive = false;
            for (int e : q) {
                if (e == 0) { continue; }
                len += std::abs(e) == 1 ? 1 : 3;
                ++factors;
                any_positive = any_positive || e > 0;
            }
            len += factors - 1;
            if (!any_positive) { len += 2; }
            best = std::min(best, len);
        }
    }
    return best;
}

std::size_t TreeGenerator::min_len(DimVector const& d) const
{
    if (d.is_zero() || !vocab_->variables_with_dim(d).empty()) { return 1; }
    {
        std::lock_guard lock(cache_mutex_);
        if (auto it = len_cache_.find(d); it != len_cache_.end()) { return it->second; }
    }
    auto best = monomial_len(d);
    // some dimensions are only reachable as sqrt of a monomial, e.g. d**(3/2) / sqrt(G * m)
    if (best == unreachable_len) {
        auto twice = d * Rational(2);
        auto inner = vocab_->variables_with_dim(twice).empty() ? monomial_len(twice) : 1;
        if (inner < unreachable_len) { best = inner + 1; }
    }
    auto const& e = d.exponents();
    if (best == unreachable_len && std::all_of(e.begin(), e.end(), [](Rational const& q) { return q.is_integer(); })) {
        // product of two monomials
        auto const& signed_lookup = lookup(top_p_);
        for (auto const& a : signed_lookup.keys()) {
            auto rest = d - a;
            if (!signed_lookup.contains(rest)) { continue; }
            best = std::min(best, monomial_len(a) + monomial_len(rest) + 1);
        }
    }
    std::lock_guard lock(cache_mutex_);
    len_cache_.emplace(d, best);
    return best;
}

std::optional<ExprTree> TreeGenerator::generate_subtree(DimVector const& target, GenHyper const& hyper,
    int nest_above, Rng& rng) const
{
    auto const& vocab = *vocab_;
    auto const p = std::clamp(hyper.p, 1, top_p_);
    auto const zero = vocab.zero_dim();
    auto const max_len = hyper.max_len;

    // committed counts created nodes plus the shortest completion of every open node
    std::size_t committed = min_len(target);
    if (committed > max_len) { return std::nullopt; }

    std::vector<TmpNode> tmp(1);
    std::deque<Pending> queue{{0, target, nest_above}};

    std::vector<int> int_powers;
    std::vector<std::size_t> feasible;
    std::array<double, 5> op_w{};

    while (!queue.empty()) {
        auto pend = std::move(queue.front());
        queue.pop_front();
        auto const& d = pend.dim;
        // budget left once this node's own reservation is released
        auto const base = committed - min_len(d) + 1;
        auto fits = [&](std::size_t extra) { return base + extra <= max_len; };
        auto grows = [&](std::size_t extra) { return !hyper.budget_aware || fits(extra); };

        auto const& matching = vocab.variables_with_dim(d);
        bool const leaf_ok = d.is_zero() || !matching.empty();
        bool const nest_ok = pend.nest_above + 1 <= hyper.max_nest;
        DimVector const sqrt_child = d * Rational(2);
        bool const unary_ok = nest_ok && (d.is_zero() ? grows(1) : fits(min_len(sqrt_child)));

        op_w.fill(0.0);
        int_powers.clear();
        if (grows(2 * min_len(d))) {
            op_w[op_slot(Op::Add)] = hyper.op_weights[op_slot(Op::Add)];
            op_w[op_slot(Op::Sub)] = hyper.op_weights[op_slot(Op::Sub)];
        }
        auto any_split_fits = [&](SplitOp op) {
            auto const& s = splits(d, op, p);
            return std::any_of(s.begin(), s.end(),
                [&](auto const& lr) { return fits(min_len(lr.first) + min_len(lr.second)); });
        };
        if (any_split_fits(SplitOp::Mul)) { op_w[op_slot(Op::Mul)] = hyper.op_weights[op_slot(Op::Mul)]; }
        if (any_split_fits(SplitOp::Div)) { op_w[op_slot(Op::Div)] = hyper.op_weights[op_slot(Op::Div)]; }
        for (int k : vocab.integer_exponents()) {
            if (fits(min_len(d * Rational(1, k)) + 1)) { int_powers.push_back(k); }
        }
        bool const general_pow = d.is_zero() && nest_ok && grows(2);
        if (!int_powers.empty() || general_pow) { op_w[op_slot(Op::Pow)] = hyper.op_weights[op_slot(Op::Pow)]; }
        bool const binary_ok = std::any_of(op_w.begin(), op_w.end(), [](double w) { return w > 0.0; });

        std::array<double, 3> aw{binary_ok ? hyper.arity_weights[0] : 0.0, unary_ok ? hyper.arity_weights[1] : 0.0,
            leaf_ok ? hyper.arity_weights[2] : 0.0};
        if (aw[0] + aw[1] + aw[2] <= 0.0) { return std::nullopt; }

        auto const id = static_cast<std::size_t>(pend.id);
        auto open_child = [&](int which, DimVector dim, int nest) {
            auto cid = static_cast<int>(tmp.size());
            tmp[id].child[which] = cid;
            tmp.emplace_back();
            committed += min_len(dim);
            queue.push_back({cid, std::move(dim), nest});
            return cid;
        };
        committed = base;

        switch (weighted_pick(aw, rng)) {
        case 2: { // leaf
            bool scalar = matching.empty() || (d.is_zero() && uniform01(rng) < hyper.scalar_share);
            tmp[id].node = scalar ? Node::scalar() : Node::var(matching[uniform_index(rng, matching.size())]);
            break;
        }
        case 1: { // unary
            if (d.is_zero()) {
                auto u = vocab.unaries();
                tmp[id].node = Node::make(u[uniform_index(rng, u.size())]);
                open_child(0, zero, pend.nest_above + 1);
            } else {
                tmp[id].node = Node::make(Op::Sqrt);
                open_child(0, sqrt_child, pend.nest_above + 1);
            }
            break;
        }
        default: { // binary
            auto op = static_cast<Op>(weighted_pick(op_w, rng));
            tmp[id].node = Node::make(op);
            switch (op) {
            case Op::Add:
            case Op::Sub:
                open_child(0, d, pend.nest_above);
                open_child(1, d, pend.nest_above);
                break;
            case Op::Mul:
            case Op::Div: {
                auto const& s = splits(d, op == Op::Mul ? SplitOp::Mul : SplitOp::Div, p);
                feasible.clear();
                for (std::size_t i = 0; i < s.size(); ++i) {
                    if (fits(min_len(s[i].first) + min_len(s[i].second))) { feasible.push_back(i); }
                }
                auto const& [l, r] = s[feasible[uniform_index(rng, feasible.size())]];
                open_child(0, l, pend.nest_above);
                open_child(1, r, pend.nest_above);
                break;
            }
            default: { // Pow
                bool use_int = !int_powers.empty() && (!general_pow || uniform01(rng) < 0.5);
                if (use_int) {
                    int k = int_powers[uniform_index(rng, int_powers.size())];
                    open_child(0, d * Rational(1, k), pend.nest_above);
                    tmp[id].child[1] = static_cast<int>(tmp.size());
                    tmp.emplace_back().node = Node::constant(k);
                    committed += 1;
                } else {
                    open_child(0, zero, pend.nest_above + 1);
                    open_child(1, zero, pend.nest_above + 1);
                }
                break;
            }
            }
            break;
        }
        }
        if (committed > max_len) { return std::nullopt; }
    }

    std::vector<Node> nodes;
    nodes.reserve(tmp.size());
    flatten(tmp, 0, nodes);
    ExprTree tree(std::move(nodes));
    tree.renumber_scalars();
    if (validate(tree, vocab, {hyper.max_len, hyper.max_nest - nest_above}, &target)) { return std::nullopt; }
    return tree;
}

std::optional<ExprTree> TreeGenerator::generate_quotient(DimVector const& target, GenHyper const& hyper,
    Rng& rng) const
{
    auto const& s = splits(target, SplitOp::Div, std::clamp(hyper.p, 1, top_p_));
    if (s.empty() || hyper.max_len < 3) { return std::nullopt; }
    auto const& [num_dim, den_dim] = s[uniform_index(rng, s.size())];
    GenHyper half = hyper;
    half.max_len = (hyper.max_len - 1) / 2;
    auto num = generate_subtree(num_dim, half, 0, rng);
    if (!num) { return std::nullopt; }
    half.max_len = hyper.max_len - 1 - num->length();
    auto den = generate_subtree(den_dim, half, 0, rng);
    if (!den) { return std::nullopt; }
    auto t = join(Op::Div, *num, *den);
    if (validate(t, *vocab_, {hyper.max_len, hyper.max_nest}, &target)) { return std::nullopt; }
    return t;
}

ExprTree TreeGenerator::monomial(MonomialLookup::Assignment const& q) const
{
    // leaf exponents stop at 4; larger ones chain as x ** 4 * x ** (e - 4)
    std::function<ExprTree(std::size_t, int)> factor = [&factor](std::size_t var, int e) {
        if (e == 1) { return ExprTree({Node::var(var)}); }
        if (e > 4) { return join(Op::Mul, factor(var, 4), factor(var, e - 4)); }
        return ExprTree({Node::make(Op::Pow), Node::var(var), Node::constant(e)});
    };
    auto product = [&](bool positive) {
        std::optional<ExprTree> acc;
        for (std::size_t i = 0; i < q.size(); ++i) {
            if (q[i] == 0 || (q[i] > 0) != positive) { continue; }
            auto f = factor(i, std::abs(q[i]));
            acc = acc ? join(Op::Mul, *acc, f) : f;
        }
        return acc;
    };
    auto num = product(true);
    auto den = product(false);
    if (num && den) { return join(Op::Div, *num, *den); }
    if (num) { return *num; }
    if (den) { return join(Op::Div, ExprTree({Node::constant(1)}), *den); }
    return {};
}

std::optional<MonomialLookup::Assignment> TreeGenerator::prefactor_exponents(DimVector const& target, int p,
    Rng& rng) const
{
    auto pick = [&rng](std::vector<MonomialLookup::Assignment> const& ws) { return ws[uniform_index(rng, ws.size())]; };
    auto const* ws = lookup(p).witnesses(target);
    for (int q = 1; q <= top_p_ && ws == nullptr; ++q) { ws = lookup(q).witnesses(target); }
    if (ws != nullptr && !ws->empty()) { return pick(*ws); }

    // exponents past top_p: a product of two lookup monomials
    auto const& top = lookup(top_p_);
    std::vector<DimVector const*> halves;
    for (auto const& k : top.keys()) {
        if (top.contains(target - k)) { halves.push_back(&k); }
    }
    if (halves.empty()) { return std::nullopt; }
    auto const& k = *halves[uniform_index(rng, halves.size())];
    auto a = pick(*top.witnesses(k));
    auto b = pick(*top.witnesses(target - k));
    for (std::size_t i = 0; i < a.size(); ++i) { a[i] += b[i]; }
    return a;
}

std::optional<ExprTree> TreeGenerator::generate_prefactored(DimVector const& target, GenHyper const& hyper,
    Rng& rng) const
{
    // half-integer exponents (d ** (3/2)) only exist under a sqrt of the doubled target
    std::optional<ExprTree> prefactor;
    if (auto q = prefactor_exponents(target, hyper.p, rng)) {
        if (std::any_of(q->begin(), q->end(), [](int e) { return e != 0; })) { prefactor = monomial(*q); }
    } else {
        auto doubled = target;
        doubled *= Rational(2);
        auto q2 = prefactor_exponents(doubled, hyper.p, rng);
        if (!q2 || hyper.max_nest < 1) { return std::nullopt; }
        prefactor = join_unary(Op::Sqrt, monomial(*q2));
    }
    std::size_t used = prefactor ? prefactor->length() + 1 : 0;
    if (used + 1 > hyper.max_len) { return std::nullopt; }

    GenHyper rest = hyper;
    rest.max_len = hyper.max_len - used;
    auto f = generate_subtree(vocab_->zero_dim(), rest, 0, rng);
    if (!f) { return std::nullopt; }

    ExprTree t = prefactor ? join(Op::Mul, *prefactor, *f) : *f;
    if (validate(t, *vocab_, {hyper.max_len, hyper.max_nest}, &target)) { return std::nullopt; }
    return t;
}

std::optional<ExprTree> TreeGenerator::generate_with_strategies(DimVector const& target, GenHyper const& hyper,
    Rng& rng) const
{
    if (auto t = generate_tree(target, hyper, rng)) { return t; }
    if (auto t = generate_quotient(target, hyper, rng)) { return t; }
    return generate_prefactored(target, hyper, rng);
}

Pool generate_pool(std::size_t n, DimVector const& target, TreeGenerator const& gen, HyperSampler const& sampler,
    Rng& rng)
{
    Pool pool;
    std::unordered_set<std::string> seen;
    for (std::size_t i = 0; i < n; ++i) {
        ++pool.stats.requested;
        std::optional<ExprTree> t;
        for (int attempt = 0; attempt < pool_retry_cap && !t; ++attempt) {
            auto hyper = sampler.sample(rng);
            t = gen.generate_with_strategies(target, hyper, rng);
        }
        if (!t) {
            ++pool.stats.misses;
            continue;
        }
        if (!seen.insert(to_string(*t, gen.vocab())).second) {
            ++pool.stats.duplicates;
            continue;
        }
        ++pool.stats.length_histogram[t->length()];
        pool.trees.push_back(std::move(*t));
    }
    pool.stats.unique = pool.trees.size();
    return pool;
}

} // namespace qdsr
