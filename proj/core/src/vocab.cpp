#include "qdsr/vocab.hpp"

#include <algorithm>
#include <array>
#include <stdexcept>
#include <unordered_set>

#include <fmt/format.h>

#include "qdsr/error.hpp"

namespace qdsr {

namespace {
    struct OpInfo {
        Op op;
        std::string_view name;
        int complexity;
    };

    // complexity scores per operator family
    constexpr std::array<OpInfo, op_count> op_table{{
        {Op::Add, "+", 1},
        {Op::Sub, "-", 2},
        {Op::Mul, "*", 1},
        {Op::Div, "/", 2},
        {Op::Pow, "**", 3},
        {Op::Exp, "exp", 3},
        {Op::Log, "log", 3},
        {Op::Sqrt, "sqrt", 3},
        {Op::Sin, "sin", 4},
        {Op::Cos, "cos", 4},
        {Op::Tan, "tan", 4},
        {Op::Asin, "arcsin", 5},
        {Op::Acos, "arccos", 5},
        {Op::Atan, "arctan", 5},
        {Op::Sinh, "sinh", 5},
        {Op::Cosh, "cosh", 5},
        {Op::Tanh, "tanh", 5},
        {Op::Asinh, "arcsinh", 6},
        {Op::Acosh, "arccosh", 6},
        {Op::Atanh, "arctanh", 6},
        {Op::Var, "x", 1},
        {Op::Scalar, "A", 2},
        {Op::Constant, "c", 1},
    }};
} // namespace

std::string_view op_name(Op op) { return op_table[static_cast<std::size_t>(op)].name; }

int op_complexity(Op op) { return op_table[static_cast<std::size_t>(op)].complexity; }

std::optional<Op> function_by_name(std::string_view name)
{
    for (auto const& info : op_table) {
        if (is_unary(info.op) && info.name == name) { return info.op; }
    }
    return std::nullopt;
}

int token_complexity(std::string_view symbol)
{
    if (symbol == "A") { return op_complexity(Op::Scalar); }
    if (symbol == "×") { return op_complexity(Op::Mul); }
    if (symbol == "÷") { return op_complexity(Op::Div); }
    for (auto const& info : op_table) {
        if (!is_leaf(info.op) && info.name == symbol) { return info.complexity; }
    }
    throw std::out_of_range(fmt::format("unknown token '{}'", symbol));
}

std::vector<std::vector<std::size_t>> perfect_matchings(std::size_t n)
{
    std::vector<std::vector<std::size_t>> out;
    if (n % 2 != 0) { return out; }
    std::vector<std::size_t> current;
    std::vector<bool> used(n, false);
    auto rec = [&](auto&& self) -> void {
        auto first = std::find(used.begin(), used.end(), false);
        if (first == used.end()) {
            out.push_back(current);
            return;
        }
        auto i = static_cast<std::size_t>(first - used.begin());
        used[i] = true;
        for (std::size_t j = i + 1; j < n; ++j) {
            if (used[j]) { continue; }
            used[j] = true;
            current.push_back(i);
            current.push_back(j);
            self(self);
            current.resize(current.size() - 2);
            used[j] = false;
        }
        used[i] = false;
    };
    rec(rec);
    return out;
}

std::string definition_text(AuxDefinition const& def, UnitTable const& units)
{
    auto name = [&](std::size_t i) { return units.entries.at(i).name; };
    auto const& v = def.vars;
    switch (def.kind) {
    case AuxDefinition::Kind::Ratio:
        return fmt::format("{} / {}", name(v[0]), name(v[1]));
    case AuxDefinition::Kind::RatioProduct:
        return fmt::format("({} / {}) * ({} / {})", name(v[0]), name(v[1]), name(v[2]), name(v[3]));
    case AuxDefinition::Kind::Norm: {
        std::string s;
        for (std::size_t i = 0; i < v.size(); ++i) {
            s += fmt::format("{}{} ** 2", i ? " + " : "", name(v[i]));
        }
        return s;
    }
    case AuxDefinition::Kind::PairDifferences: {
        std::string s;
        for (std::size_t i = 0; i + 1 < v.size(); i += 2) {
            s += fmt::format("{}({} - {}) ** 2", i ? " + " : "", name(v[i]), name(v[i + 1]));
        }
        return s;
    }
    }
    return {};
}

std::vector<Token> dimensionless_ratios(UnitTable const& units, std::vector<VariableGroup> const& groups,
    bool with_products)
{
    auto const zero = DimVector(units.base_count());
    std::vector<Token> out;
    std::vector<AuxDefinition> anchored;
    for (auto const& g : groups) {
        if (g.members.size() < 2) { continue; }
        auto a = g.members.front();
        for (std::size_t k = 1; k < g.members.size(); ++k) {
            auto b = g.members[k];
            AuxDefinition fwd{AuxDefinition::Kind::Ratio, {a, b}};
            AuxDefinition rev{AuxDefinition::Kind::Ratio, {b, a}};
            anchored.push_back(fwd);
            out.push_back({"", TokenKind::Variable, zero, 1, fwd});
            out.push_back({"", TokenKind::Variable, zero, 1, rev});
        }
    }
    if (with_products) {
        for (std::size_t i = 0; i < anchored.size(); ++i) {
            for (std::size_t j = i; j < anchored.size(); ++j) {
                auto const& l = anchored[i].vars;
                auto const& r = anchored[j].vars;
                out.push_back({"", TokenKind::Variable, zero, 1,
                    AuxDefinition{AuxDefinition::Kind::RatioProduct, {l[0], l[1], r[0], r[1]}}});
            }
        }
    }
    std::size_t nr = 0;
    std::size_t np = 0;
    for (auto& t : out) {
        t.symbol = t.definition->kind == AuxDefinition::Kind::Ratio ? fmt::format("ratio{}", nr++)
                                                                      : fmt::format("rprod{}", np++);
    }
    return out;
}

std::vector<Token> norms(UnitTable const& units, std::vector<VariableGroup> const& groups)
{
    std::vector<Token> out;
    for (auto const& g : groups) {
        if (g.members.size() < 2) { continue; }
        out.push_back({fmt::format("norm{}", out.size()), TokenKind::Variable, g.dim * Rational(2), 1,
            AuxDefinition{AuxDefinition::Kind::Norm, g.members}});
    }
    (void)units;
    return out;
}

std::vector<Token> scalar_products(UnitTable const& units, VariableGroup const& group)
{
    (void)units;
    std::vector<Token> out;
    for (auto const& m : perfect_matchings(group.members.size())) {
        std::vector<std::size_t> vars;
        vars.reserve(m.size());
        for (auto i : m) { vars.push_back(group.members[i]); }
        out.push_back({"", TokenKind::Variable, group.dim * Rational(2), 1,
            AuxDefinition{AuxDefinition::Kind::PairDifferences, std::move(vars)}});
    }
    return out;
}

Vocabulary build_vocabulary(UnitTable const& units, VocabFlags const& flags)
{
    Vocabulary v;
    v.flags_ = flags;
    v.base_count_ = units.base_count();
    v.units_ = units;
    if (!flags.da_enabled) {
        for (auto& e : v.units_.entries) { e.dim = DimVector(units.base_count()); }
        v.units_.target_dim = DimVector(units.base_count());
    }
    v.target_dim_ = v.units_.target_dim;

    v.binaries_ = {Op::Add, Op::Sub, Op::Mul, Op::Div, Op::Pow};
    for (auto op = static_cast<int>(Op::Exp); op <= static_cast<int>(Op::Atanh); ++op) {
        v.unaries_.push_back(static_cast<Op>(op));
    }
    v.integer_exponents_ = {-4, -3, -2, -1, 2, 3, 4};
    v.scalar_ = {"A", TokenKind::Scalar, v.zero_dim(), op_complexity(Op::Scalar), std::nullopt};

    for (auto const& e : v.units_.entries) {
        v.variables_.push_back({e.name, TokenKind::Variable, e.dim, 1, std::nullopt});
    }
    v.original_count_ = v.variables_.size();

    auto groups = group_by_dimension(v.units_);
    std::vector<Token> aux;
    if (flags.aux_ratios) {
        auto r = dimensionless_ratios(v.units_, groups, flags.aux_ratio_products);
        aux.insert(aux.end(), r.begin(), r.end());
    }
    if (flags.aux_norms) {
        auto n = norms(v.units_, groups);
        aux.insert(aux.end(), n.begin(), n.end());
    }
    if (flags.aux_scalar_products) {
        std::size_t k = 0;
        for (auto const& g : groups) {
            if (g.members.size() < 4 && !(flags.aux_pair_difference && g.members.size() == 2)) { continue; }
            for (auto& t : scalar_products(v.units_, g)) {
                t.symbol = fmt::format("sprod{}", k++);
                aux.push_back(std::move(t));
            }
        }
    }
    if (aux.size() > flags.max_aux) {
        throw ResourceError(fmt::format("{} auxiliary variables exceed the cap of {}; disable ratio products or "
                                        "scalar products, or raise the cap",
            aux.size(), flags.max_aux));
    }
    v.variables_.insert(v.variables_.end(), aux.begin(), aux.end());

    std::unordered_set<std::string> seen{"A", "pi"};
    for (auto const& t : v.variables_) {
        if (!seen.insert(t.symbol).second) {
            throw ConfigError(fmt::format("vocabulary symbol '{}' is reserved or declared twice", t.symbol));
        }
    }

    for (std::size_t i = 0; i < v.variables_.size(); ++i) {
        auto const& d = v.variables_[i].dim;
        auto it = std::find_if(v.by_dim_.begin(), v.by_dim_.end(), [&](auto const& p) { return p.first == d; });
        if (it == v.by_dim_.end()) {
            v.by_dim_.push_back({d, {i}});
        } else {
            it->second.push_back(i);
        }
    }
    return v;
}

std::vector<std::size_t> const& Vocabulary::variables_with_dim(DimVector const& d) const
{
    static std::vector<std::size_t> const empty;
    for (auto const& [dim, idx] : by_dim_) {
        if (dim == d) { return idx; }
    }
    return empty;
}

std::optional<std::size_t> Vocabulary::variable_index(std::string_view symbol) const
{
    for (std::size_t i = 0; i < variables_.size(); ++i) {
        if (variables_[i].symbol == symbol) { return i; }
    }
    return std::nullopt;
}

int Vocabulary::complexity(std::string_view symbol) const
{
    if (auto i = variable_index(symbol)) { return variables_[*i].complexity; }
    return token_complexity(symbol);
}

std::string Vocabulary::dump() const
{
    std::string out = "symbol | kind | dims | complexity | definition\n";
    auto row = [&](std::string_view sym, std::string_view kind, std::string const& dims, int c, std::string const& def) {
        out += fmt::format("{} | {} | {} | {} | {}\n", sym, kind, dims, c, def);
    };
    for (auto op : binaries_) { row(op_name(op), "binary", "-", op_complexity(op), ""); }
    for (auto op : unaries_) { row(op_name(op), "unary", "-", op_complexity(op), ""); }
    row(scalar_.symbol, "leaf-scalar", scalar_.dim.str(), scalar_.complexity, "");
    for (auto e : integer_exponents_) { row(fmt::format("{}", e), "leaf-integer", zero_dim().str(), 1, ""); }
    for (auto const& t : variables_) {
        row(t.symbol, "leaf-variable", t.dim.str(), t.complexity,
            t.definition ? definition_text(*t.definition, units_) : "");
    }
    return out;
}

} // namespace qdsr
