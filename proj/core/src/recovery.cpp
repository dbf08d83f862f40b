#include "qdsr/recovery.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <map>
#include <numbers>
#include <stdexcept>
#include <tuple>

#include <fmt/format.h>

namespace qdsr {

namespace {
    constexpr long double pi_l = std::numbers::pi_v<long double>;
}

// ---------------------------------------------------------------- snapping

std::vector<int> squarefree_up_to(int max)
{
    std::vector<int> out;
    for (int n = 1; n <= max; ++n) {
        bool sf = true;
        for (int p = 2; p * p <= n && sf; ++p) { sf = n % (p * p) != 0; }
        if (sf) { out.push_back(n); }
    }
    return out;
}

long double ClosedForm::value() const
{
    auto rv = static_cast<long double>(r.num()) / static_cast<long double>(r.den());
    return rv * std::sqrt(static_cast<long double>(n))
        * std::pow(pi_l, static_cast<long double>(q.num()) / static_cast<long double>(q.den()));
}

std::string ClosedForm::str() const
{
    std::vector<std::string> parts;
    if (r != Rational(1) || (n == 1 && q.is_zero())) { parts.push_back(r.str()); }
    if (n != 1) { parts.push_back(fmt::format("sqrt({})", n)); }
    if (q == Rational(1)) {
        parts.emplace_back("pi");
    } else if (!q.is_zero()) {
        parts.push_back(q.is_integer() && q.num() > 0 ? fmt::format("pi ** {}", q.str())
                                                      : fmt::format("pi ** ({})", q.str()));
    }
    std::string out;
    for (std::size_t i = 0; i < parts.size(); ++i) { out += (i ? " * " : "") + parts[i]; }
    return out;
}

std::optional<ClosedForm> snap_constant(double v, SnapLattice const& lattice)
{
    if (!std::isfinite(v)) { return std::nullopt; }
    if (std::abs(v) <= lattice.tolerance) { return ClosedForm{Rational(0), 1, Rational(0)}; }

    auto const target = std::abs(static_cast<long double>(v));
    std::optional<ClosedForm> best;
    long double best_err = 0;
    std::tuple<int, int, int, long long> best_rank{};
    for (int n : squarefree_up_to(lattice.max_radicand)) {
        for (int q2 = -2 * lattice.max_pi_power; q2 <= 2 * lattice.max_pi_power; ++q2) {
            long double base = std::sqrt(static_cast<long double>(n)) * std::pow(pi_l, q2 / 2.0L);
            long double ratio = target / base;
            for (int b = 1; b <= lattice.max_denominator; ++b) {
                auto a = std::llround(ratio * b);
                if (a < 1 || a > lattice.max_numerator) { continue; }
                long double err = std::abs(target - static_cast<long double>(a) / b * base);
                if (err > lattice.tolerance) { continue; }
                Rational r(a, b);
                std::tuple<int, int, int, long long> rank{static_cast<int>(r.den()), n, std::abs(q2), r.num()};
                if (!best || err < best_err * (1 - 1e-6L) || (err <= best_err * (1 + 1e-6L) && rank < best_rank)) {
                    best = ClosedForm{v < 0 ? -r : r, n, Rational(q2, 2)};
                    best_err = err;
                    best_rank = rank;
                }
            }
        }
    }
    return best;
}

std::vector<long double> snapped_params(std::span<double const> params, std::vector<std::string>* notes)
{
    std::vector<long double> out;
    out.reserve(params.size());
    for (std::size_t i = 0; i < params.size(); ++i) {
        if (auto cf = snap_constant(params[i])) {
            out.push_back(cf->value());
            if (notes != nullptr) { notes->push_back(fmt::format("A{} = {:.17g} -> {}", i + 1, params[i], cf->str())); }
        } else {
            out.push_back(params[i]);
            if (notes != nullptr) { notes->push_back(fmt::format("A{} = {:.17g} (no closed form)", i + 1, params[i])); }
        }
    }
    return out;
}

// ---------------------------------------------------------------- canonical form

namespace {
    constexpr std::size_t expansion_cap = 128;

    std::string num_key(long double v)
    {
        if (v == 0) { v = 0; } // folds -0
        return fmt::format("{:.10g}", static_cast<double>(v));
    }

    SymPtr finish(Sym s)
    {
        switch (s.kind) {
        case Sym::Kind::Num: s.key = num_key(s.value); break;
        case Sym::Kind::Var: s.key = fmt::format("v{}", s.var); break;
        case Sym::Kind::Fn: s.key = fmt::format("{}({})", op_name(s.fn), s.args[0]->key); break;
        default: {
            s.key = s.kind == Sym::Kind::Add ? "+(" : s.kind == Sym::Kind::Mul ? "*(" : "^(";
            for (std::size_t i = 0; i < s.args.size(); ++i) { s.key += (i ? "," : "") + s.args[i]->key; }
            s.key += ")";
        }
        }
        return std::make_shared<Sym const>(std::move(s));
    }

    SymPtr num(long double v)
    {
        Sym s;
        s.kind = Sym::Kind::Num;
        s.value = v;
        return finish(std::move(s));
    }

    SymPtr var(std::size_t i)
    {
        Sym s;
        s.kind = Sym::Kind::Var;
        s.var = i;
        return finish(std::move(s));
    }

    bool is_num(SymPtr const& s) { return s->kind == Sym::Kind::Num; }

    bool near_integer(long double v) { return std::abs(v - std::round(v)) <= 1e-12L * std::max(1.0L, std::abs(v)); }

    SymPtr make_add(std::vector<SymPtr> terms);
    SymPtr make_mul(std::vector<SymPtr> factors);
    SymPtr make_pow(SymPtr const& base, SymPtr const& exponent);

    /// (coefficient, rest); rest is null for a pure number.
    std::pair<long double, SymPtr> split_coeff(SymPtr const& s)
    {
        if (is_num(s)) { return {s->value, nullptr}; }
        if (s->kind == Sym::Kind::Mul && is_num(s->args[0])) {
            if (s->args.size() == 2) { return {s->args[0]->value, s->args[1]}; }
            Sym rest;
            rest.kind = Sym::Kind::Mul;
            rest.args.assign(s->args.begin() + 1, s->args.end());
            return {s->args[0]->value, finish(std::move(rest))};
        }
        return {1, s};
    }

    SymPtr scaled(long double c, SymPtr const& rest)
    {
        if (c == 1) { return rest; }
        Sym s;
        s.kind = Sym::Kind::Mul;
        s.args.push_back(num(c));
        if (rest->kind == Sym::Kind::Mul) {
            s.args.insert(s.args.end(), rest->args.begin(), rest->args.end());
        } else {
            s.args.push_back(rest);
        }
        return finish(std::move(s));
    }

    SymPtr make_add(std::vector<SymPtr> terms)
    {
        std::vector<SymPtr> flat;
        for (auto& t : terms) {
            if (t->kind == Sym::Kind::Add) {
                flat.insert(flat.end(), t->args.begin(), t->args.end());
            } else {
                flat.push_back(std::move(t));
            }
        }
        long double constant = 0;
        long double constant_scale = 0;
        struct Group {
            long double coeff = 0;
            long double scale = 0;
            SymPtr rest;
        };
        std::map<std::string, Group> groups;
        for (auto const& t : flat) {
            auto [c, rest] = split_coeff(t);
            if (!rest) {
                constant += c;
                constant_scale = std::max(constant_scale, std::abs(c));
                continue;
            }
            auto& g = groups[rest->key];
            g.coeff += c;
            g.scale = std::max(g.scale, std::abs(c));
            g.rest = rest;
        }
        std::vector<SymPtr> out;
        if (std::abs(constant) > 1e-13L * constant_scale) { out.push_back(num(constant)); }
        for (auto const& [key, g] : groups) {
            if (std::abs(g.coeff) <= 1e-13L * g.scale) { continue; }
            out.push_back(scaled(g.coeff, g.rest));
        }
        if (out.empty()) { return num(0); }
        if (out.size() == 1) { return out[0]; }
        Sym s;
        s.kind = Sym::Kind::Add;
        s.args = std::move(out);
        return finish(std::move(s));
    }

    /// Numeric exponent of a power factor, 1 otherwise.
    std::pair<SymPtr, long double> split_power(SymPtr const& f)
    {
        if (f->kind == Sym::Kind::Pow && is_num(f->args[1])) { return {f->args[0], f->args[1]->value}; }
        return {f, 1};
    }

    SymPtr raw_pow(SymPtr const& base, long double e)
    {
        if (e == 1) { return base; }
        Sym s;
        s.kind = Sym::Kind::Pow;
        s.args = {base, num(e)};
        return finish(std::move(s));
    }

    SymPtr make_mul(std::vector<SymPtr> factors)
    {
        std::vector<SymPtr> flat;
        for (auto& f : factors) {
            if (f->kind == Sym::Kind::Mul) {
                flat.insert(flat.end(), f->args.begin(), f->args.end());
            } else {
                flat.push_back(std::move(f));
            }
        }
        long double coeff = 1;
        std::map<std::string, std::pair<SymPtr, long double>> powers;
        for (auto const& f : flat) {
            if (is_num(f)) {
                coeff *= f->value;
                continue;
            }
            auto [base, e] = split_power(f);
            auto& slot = powers[base->key];
            slot.first = base;
            slot.second += e;
        }
        if (coeff == 0) { return num(0); }

        std::vector<SymPtr> plain;
        std::vector<SymPtr> sums;
        for (auto const& [key, be] : powers) {
            auto [base, e] = be;
            if (std::abs(e) <= 1e-13L) { continue; }
            if (near_integer(e)) { e = std::round(e); }
            if (base->kind == Sym::Kind::Add && e >= 1 && e <= 4 && e == std::round(e)) {
                // small positive powers of sums are expanded
                for (int k = 0; k < static_cast<int>(e); ++k) { sums.push_back(base); }
            } else {
                plain.push_back(raw_pow(base, e));
            }
        }

        if (!sums.empty()) {
            std::size_t count = 1;
            for (auto const& s : sums) { count *= s->args.size(); }
            if (count <= expansion_cap) {
                std::vector<std::vector<SymPtr>> products{{num(coeff)}};
                products[0].insert(products[0].end(), plain.begin(), plain.end());
                for (auto const& s : sums) {
                    std::vector<std::vector<SymPtr>> next;
                    for (auto const& p : products) {
                        for (auto const& t : s->args) {
                            auto q = p;
                            q.push_back(t);
                            next.push_back(std::move(q));
                        }
                    }
                    products = std::move(next);
                }
                std::vector<SymPtr> terms;
                terms.reserve(products.size());
                for (auto& p : products) { terms.push_back(make_mul(std::move(p))); }
                return make_add(std::move(terms));
            }
            plain.insert(plain.end(), sums.begin(), sums.end());
        }

        std::sort(plain.begin(), plain.end(), [](auto const& a, auto const& b) { return a->key < b->key; });
        if (plain.empty()) { return num(coeff); }
        if (plain.size() == 1 && coeff == 1) { return plain[0]; }
        Sym s;
        s.kind = Sym::Kind::Mul;
        if (coeff != 1) { s.args.push_back(num(coeff)); }
        s.args.insert(s.args.end(), plain.begin(), plain.end());
        return finish(std::move(s));
    }

    SymPtr make_pow(SymPtr const& base, SymPtr const& exponent)
    {
        if (is_num(base) && std::abs(base->value - 1) <= 1e-12L) { return num(1); }
        if (!is_num(exponent)) {
            Sym s;
            s.kind = Sym::Kind::Pow;
            s.args = {base, exponent};
            return finish(std::move(s));
        }
        long double e = exponent->value;
        if (near_integer(e)) { e = std::round(e); }
        if (e == 0) { return num(1); }
        if (e == 1) { return base; }
        if (is_num(base)) {
            long double v = std::pow(base->value, e);
            if (std::isfinite(v)) { return num(v); }
            return raw_pow(base, e);
        }
        // variables are positive on the data, so exponents compose and distribute
        if (base->kind == Sym::Kind::Pow && is_num(base->args[1])) {
            return make_pow(base->args[0], num(base->args[1]->value * e));
        }
        if (base->kind == Sym::Kind::Mul) {
            bool negative = is_num(base->args[0]) && base->args[0]->value < 0;
            if (!negative || e == std::round(e)) {
                std::vector<SymPtr> fs;
                fs.reserve(base->args.size());
                for (auto const& f : base->args) { fs.push_back(make_pow(f, num(e))); }
                return make_mul(std::move(fs));
            }
        }
        if (base->kind == Sym::Kind::Add && e == std::round(e) && e >= 2 && e <= 4) {
            return make_mul(std::vector<SymPtr>(static_cast<std::size_t>(e), base));
        }
        return raw_pow(base, e);
    }

    std::optional<Op> inverse_of(Op op)
    {
        switch (op) {
        case Op::Sin: return Op::Asin;
        case Op::Cos: return Op::Acos;
        case Op::Tan: return Op::Atan;
        case Op::Sinh: return Op::Asinh;
        case Op::Cosh: return Op::Acosh;
        case Op::Tanh: return Op::Atanh;
        case Op::Exp: return Op::Log;
        case Op::Log: return Op::Exp;
        case Op::Asinh: return Op::Sinh;
        case Op::Atanh: return Op::Tanh;
        default: return std::nullopt;
        }
    }

    SymPtr make_fn(Op op, SymPtr const& arg)
    {
        if (op == Op::Sqrt) { return make_pow(arg, num(0.5L)); }
        if (is_num(arg)) {
            long double v = apply_unary(op, arg->value);
            if (std::isfinite(v)) { return num(v); }
        }
        // f(f^-1(u)) = u wherever the inner function is defined
        if (arg->kind == Sym::Kind::Fn && inverse_of(op) == arg->fn) { return arg->args[0]; }
        Sym s;
        s.kind = Sym::Kind::Fn;
        s.fn = op;
        s.args = {arg};
        return finish(std::move(s));
    }

    SymPtr aux_sym(AuxDefinition const& def)
    {
        auto const& v = def.vars;
        auto ratio = [&](std::size_t a, std::size_t b) { return make_mul({var(a), make_pow(var(b), num(-1))}); };
        switch (def.kind) {
        case AuxDefinition::Kind::Ratio: return ratio(v[0], v[1]);
        case AuxDefinition::Kind::RatioProduct: return make_mul({ratio(v[0], v[1]), ratio(v[2], v[3])});
        case AuxDefinition::Kind::Norm: {
            std::vector<SymPtr> terms;
            for (auto i : v) { terms.push_back(make_pow(var(i), num(2))); }
            return make_add(std::move(terms));
        }
        case AuxDefinition::Kind::PairDifferences: {
            std::vector<SymPtr> terms;
            for (std::size_t i = 0; i + 1 < v.size(); i += 2) {
                terms.push_back(make_pow(make_add({var(v[i]), make_mul({num(-1), var(v[i + 1])})}), num(2)));
            }
            return make_add(std::move(terms));
        }
        }
        return num(0);
    }

    SymPtr build(ExprTree const& t, std::size_t i, Vocabulary const& vocab, std::span<long double const> params)
    {
        auto const& n = t[i];
        switch (n.op) {
        case Op::Var:
            if (n.index < vocab.original_count()) { return var(n.index); }
            return aux_sym(*vocab.variables().at(n.index).definition);
        case Op::Scalar: return num(params[n.index]);
        case Op::Constant: return num(n.value == std::numbers::pi ? pi_l : static_cast<long double>(n.value));
        default: break;
        }
        if (is_unary(n.op)) { return make_fn(n.op, build(t, i + 1, vocab, params)); }
        auto a = build(t, i + 1, vocab, params);
        auto b = build(t, t.subtree_end(i + 1), vocab, params);
        switch (n.op) {
        case Op::Add: return make_add({a, b});
        case Op::Sub: return make_add({a, make_mul({num(-1), b})});
        case Op::Mul: return make_mul({a, b});
        case Op::Div: return make_mul({a, make_pow(b, num(-1))});
        default: return make_pow(a, b);
        }
    }

    void emit(SymPtr const& s, std::vector<Node>& out);

    void emit_num(long double v, std::vector<Node>& out)
    {
        auto d = static_cast<double>(v);
        out.push_back(Node::constant(std::abs(v - pi_l) <= 1e-15L ? std::numbers::pi : d));
    }

    /// base ** e with e > 0.
    void emit_positive_power(SymPtr const& base, long double e, std::vector<Node>& out)
    {
        if (e == 1) {
            emit(base, out);
        } else if (e == 0.5L) {
            out.push_back(Node::make(Op::Sqrt));
            emit(base, out);
        } else {
            out.push_back(Node::make(Op::Pow));
            emit(base, out);
            emit_num(e, out);
        }
    }

    void emit_product(std::vector<std::pair<SymPtr, long double>> const& fs, std::vector<Node>& out)
    {
        for (std::size_t i = 0; i + 1 < fs.size(); ++i) { out.push_back(Node::make(Op::Mul)); }
        for (auto const& [b, e] : fs) { emit_positive_power(b, e, out); }
    }

    void emit(SymPtr const& s, std::vector<Node>& out)
    {
        switch (s->kind) {
        case Sym::Kind::Num: emit_num(s->value, out); return;
        case Sym::Kind::Var: out.push_back(Node::var(s->var)); return;
        case Sym::Kind::Fn:
            out.push_back(Node::make(s->fn));
            emit(s->args[0], out);
            return;
        case Sym::Kind::Add: {
            // left-deep chain; negative coefficients become subtraction
            std::vector<std::pair<bool, SymPtr>> terms;
            for (auto const& t : s->args) {
                auto [c, rest] = split_coeff(t);
                if (c < 0) {
                    terms.emplace_back(true, rest ? scaled(-c, rest) : num(-c));
                } else {
                    terms.emplace_back(false, t);
                }
            }
            std::stable_partition(terms.begin(), terms.end(), [](auto const& t) { return !t.first; });
            for (std::size_t i = terms.size(); i-- > 1;) {
                out.push_back(Node::make(terms[i].first ? Op::Sub : Op::Add));
            }
            if (terms[0].first) {
                out.push_back(Node::make(Op::Mul));
                emit_num(-1, out);
            }
            emit(terms[0].second, out);
            for (std::size_t i = 1; i < terms.size(); ++i) { emit(terms[i].second, out); }
            return;
        }
        case Sym::Kind::Mul:
        case Sym::Kind::Pow: {
            long double coeff = 1;
            std::vector<std::pair<SymPtr, long double>> num_fs;
            std::vector<std::pair<SymPtr, long double>> den_fs;
            std::vector<SymPtr> general;
            auto take = [&](SymPtr const& f) {
                if (is_num(f)) {
                    coeff *= f->value;
                    return;
                }
                if (f->kind == Sym::Kind::Pow && !is_num(f->args[1])) {
                    general.push_back(f);
                    return;
                }
                auto [b, e] = split_power(f);
                (e < 0 ? den_fs : num_fs).emplace_back(b, std::abs(e));
            };
            if (s->kind == Sym::Kind::Mul) {
                for (auto const& f : s->args) { take(f); }
            } else {
                take(s);
            }
            bool const has_num = coeff != 1 || (num_fs.empty() && general.empty());
            std::size_t const top = num_fs.size() + general.size() + (has_num ? 1 : 0);
            if (!den_fs.empty()) { out.push_back(Node::make(Op::Div)); }
            for (std::size_t i = 0; i + 1 < top; ++i) { out.push_back(Node::make(Op::Mul)); }
            if (has_num) { emit_num(coeff, out); }
            for (auto const& [b, e] : num_fs) { emit_positive_power(b, e, out); }
            for (auto const& g : general) {
                out.push_back(Node::make(Op::Pow));
                emit(g->args[0], out);
                emit(g->args[1], out);
            }
            if (!den_fs.empty()) { emit_product(den_fs, out); }
            return;
        }
        }
    }
} // namespace

SymPtr canonical_form(ExprTree const& tree, Vocabulary const& vocab, std::span<long double const> params)
{
    if (tree.empty()) { return num(0); }
    return build(tree, 0, vocab, params);
}

ExprTree sym_to_tree(SymPtr const& s)
{
    std::vector<Node> nodes;
    emit(s, nodes);
    return ExprTree(std::move(nodes));
}

ExprTree simplify(ExprTree const& tree, Vocabulary const& vocab, std::span<double const> params)
{
    auto p = snapped_params(params);
    return sym_to_tree(canonical_form(tree, vocab, p));
}

// ---------------------------------------------------------------- verdicts

std::string verdict_name(VerdictKind k)
{
    switch (k) {
    case VerdictKind::Exact: return "exact";
    case VerdictKind::NumericallyEquivalent: return "numerically-equivalent";
    default: return "not-recovered";
    }
}

double halton(std::size_t i, unsigned base)
{
    double f = 1.0;
    double r = 0.0;
    while (i > 0) {
        f /= base;
        r += f * static_cast<double>(i % base);
        i /= base;
    }
    return r;
}

namespace {
    constexpr std::array<unsigned, 32> primes{2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53, 59, 61, 67,
        71, 73, 79, 83, 89, 97, 101, 103, 107, 109, 113, 127, 131};

    bool contains_alias(ExprTree const& t)
    {
        for (std::size_t i = 0; i + 1 < t.length(); ++i) {
            auto a = t[i].op;
            auto b = t[i + 1].op;
            if ((a == Op::Sin && b == Op::Acos) || (a == Op::Cos && b == Op::Asin)) { return true; }
        }
        return false;
    }
} // namespace

EquivalenceReport numerically_equivalent(ExprTree const& candidate, std::span<long double const> params,
    ExprTree const& truth, Vocabulary const& vocab, std::vector<std::pair<double, double>> const& ranges,
    EquivalenceOptions const& opts)
{
    auto const nv = vocab.original_count();
    if (ranges.size() != nv) { throw std::invalid_argument("one range per original variable is required"); }
    if (nv + 1 > primes.size()) { throw std::invalid_argument("too many variables for the Halton sequence"); }

    std::vector<long double> a_vals;
    std::vector<long double> b_vals;
    a_vals.reserve(opts.points);
    b_vals.reserve(opts.points);
    std::vector<long double> x(nv);
    std::vector<long double> row;
    auto const low_cut = static_cast<std::size_t>(std::llround(opts.low_share * 1000.0));
    for (std::size_t i = 0; i < opts.points; ++i) {
        bool low = (i % 1000) < low_cut;
        for (std::size_t v = 0; v < nv; ++v) {
            long double u = halton(i + 1, primes[v]);
            if (low) { u = u * u * u; }
            auto [lo, hi] = ranges[v];
            x[v] = static_cast<long double>(lo) + (static_cast<long double>(hi) - lo) * u;
        }
        expand_row<long double>(vocab, x, row);
        a_vals.push_back(evaluate_point<long double>(candidate, row, params));
        b_vals.push_back(evaluate_point<long double>(truth, row, {}));
    }

    long double ss = 0;
    std::size_t finite = 0;
    for (auto b : b_vals) {
        if (std::isfinite(b)) {
            ss += b * b;
            ++finite;
        }
    }
    EquivalenceReport rep;
    if (finite == 0) { return rep; }
    long double floor = 1e-6L * std::sqrt(ss / static_cast<long double>(finite));
    for (std::size_t i = 0; i < b_vals.size(); ++i) {
        if (!std::isfinite(b_vals[i])) { continue; }
        ++rep.compared;
        long double err = std::isfinite(a_vals[i])
            ? std::abs(a_vals[i] - b_vals[i])
                / std::max({std::abs(b_vals[i]), floor, std::numeric_limits<long double>::min()})
            : std::numeric_limits<long double>::infinity();
        if (rep.compared == 1 || err > rep.max_error) {
            rep.max_error = err;
            rep.worst_point = i;
        }
    }
    rep.equivalent = rep.compared > 0 && rep.max_error <= opts.tolerance;
    return rep;
}

Verdict exact_match(Candidate const& candidate, ExprTree const& truth, Vocabulary const& vocab,
    std::vector<std::pair<double, double>> const& ranges, EquivalenceOptions const& opts)
{
    Verdict v;
    std::vector<std::string> notes;
    auto params = snapped_params(candidate.params, &notes);
    auto cand_sym = canonical_form(candidate.tree, vocab, params);
    auto truth_sym = canonical_form(truth, vocab, {});
    v.simplified = to_string(sym_to_tree(cand_sym), vocab);

    auto numeric = numerically_equivalent(candidate.tree, params, truth, vocab, ranges, opts);
    if (!numeric.equivalent) {
        // a wrong snap must not hide a correct fit
        std::vector<long double> raw(candidate.params.begin(), candidate.params.end());
        auto unsnapped = numerically_equivalent(candidate.tree, raw, truth, vocab, ranges, opts);
        if (unsnapped.equivalent) {
            numeric = unsnapped;
            notes.emplace_back("equivalent only with unsnapped constants");
        }
    }
    bool const structural = cand_sym->key == truth_sym->key;

    if (structural && numeric.equivalent) {
        v.kind = VerdictKind::Exact;
    } else if (numeric.equivalent) {
        v.kind = VerdictKind::NumericallyEquivalent;
    }
    if (structural && !numeric.equivalent) { notes.emplace_back("canonical forms agree but sampled values differ"); }
    if (contains_alias(candidate.tree)) { notes.emplace_back("sin(arccos(u)) is an alias of sqrt(1 - u ** 2)"); }
    notes.push_back(fmt::format("max relative error {:.3g} over {} points", static_cast<double>(numeric.max_error),
        numeric.compared));
    for (std::size_t i = 0; i < notes.size(); ++i) { v.evidence += (i ? "; " : "") + notes[i]; }
    return v;
}

} // namespace qdsr
