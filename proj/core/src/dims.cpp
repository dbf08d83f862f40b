#include "qdsr/dims.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>
#include <unordered_set>

#include <fmt/format.h>

#include "qdsr/error.hpp"

namespace qdsr {

bool DimVector::is_zero() const
{
    return std::all_of(exps_.begin(), exps_.end(), [](auto const& e) { return e.is_zero(); });
}

DimVector& DimVector::operator+=(DimVector const& o)
{
    for (std::size_t i = 0; i < exps_.size(); ++i) { exps_[i] += o.exps_[i]; }
    return *this;
}

DimVector& DimVector::operator-=(DimVector const& o)
{
    for (std::size_t i = 0; i < exps_.size(); ++i) { exps_[i] -= o.exps_[i]; }
    return *this;
}

DimVector& DimVector::operator*=(Rational const& s)
{
    for (auto& e : exps_) { e *= s; }
    return *this;
}

std::string DimVector::str() const
{
    std::string out = "[";
    for (std::size_t i = 0; i < exps_.size(); ++i) {
        if (i > 0) { out += ", "; }
        out += exps_[i].str();
    }
    return out + "]";
}

std::size_t DimHash::operator()(DimVector const& d) const noexcept
{
    std::size_t h = d.size();
    for (auto const& e : d.exponents()) {
        h ^= std::hash<Rational>{}(e) + 0x9e3779b97f4a7c15ULL + (h << 6) + (h >> 2);
    }
    return h;
}

std::optional<std::size_t> UnitTable::index_of(std::string_view name) const
{
    for (std::size_t i = 0; i < entries.size(); ++i) {
        if (entries[i].name == name) { return i; }
    }
    return std::nullopt;
}

namespace {
    std::string_view trim(std::string_view s)
    {
        auto const* ws = " \t\r\n";
        auto b = s.find_first_not_of(ws);
        if (b == std::string_view::npos) { return {}; }
        auto e = s.find_last_not_of(ws);
        return s.substr(b, e - b + 1);
    }

    std::vector<std::string_view> split_commas(std::string_view s)
    {
        std::vector<std::string_view> parts;
        std::size_t start = 0;
        while (true) {
            auto pos = s.find(',', start);
            parts.push_back(trim(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start)));
            if (pos == std::string_view::npos) { break; }
            start = pos + 1;
        }
        return parts;
    }
} // namespace

UnitTable parse_unit_table(std::string_view text)
{
    UnitTable units;
    std::optional<std::size_t> width;
    bool have_target = false;
    std::unordered_set<std::string> seen;

    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos <= text.size()) {
        auto nl = text.find('\n', pos);
        auto raw = text.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
        pos = nl == std::string_view::npos ? text.size() + 1 : nl + 1;
        ++line_no;

        auto line = trim(raw);
        if (line.empty() || line.front() == '#') { continue; }

        auto fields = split_commas(line);
        if (fields.size() < 2 || fields[0].empty()) {
            throw ParseError(line_no, "expected 'name, e1, ..., ek'");
        }
        std::size_t k = fields.size() - 1;
        if (width && *width != k) {
            throw ParseError(line_no, fmt::format("expected {} exponents, found {}", *width, k));
        }
        width = k;

        DimVector dim(k);
        for (std::size_t i = 0; i < k; ++i) {
            try {
                dim[i] = Rational::parse(fields[i + 1]);
            } catch (std::exception const&) {
                throw ParseError(line_no, fmt::format("bad exponent '{}'", fields[i + 1]));
            }
        }

        std::string name(fields[0]);
        if (name == "TARGET") {
            if (have_target) { throw ParseError(line_no, "duplicate TARGET row"); }
            units.target_dim = std::move(dim);
            have_target = true;
            continue;
        }
        if (!seen.insert(name).second) {
            throw ParseError(line_no, fmt::format("duplicate variable '{}'", name));
        }
        units.entries.push_back({std::move(name), std::move(dim)});
    }

    if (units.entries.empty()) { throw ParseError(0, "unit table declares no variables"); }
    if (!have_target) { throw ParseError(0, "unit table has no TARGET row"); }
    return units;
}

UnitTable load_unit_table(std::string const& path)
{
    std::ifstream in(path);
    if (!in) { throw ParseError(0, fmt::format("cannot open unit table '{}'", path)); }
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_unit_table(ss.str());
}

std::string format_unit_table(UnitTable const& units)
{
    std::string out;
    auto row = [&](std::string const& name, DimVector const& d) {
        out += name;
        for (auto const& e : d.exponents()) { out += ", " + e.str(); }
        out += '\n';
    };
    for (auto const& e : units.entries) { row(e.name, e.dim); }
    row("TARGET", units.target_dim);
    return out;
}

std::optional<Monomial> solve_trivial(UnitTable const& units)
{
    auto const n = units.entries.size();
    auto const k = units.base_count();

    // augmented matrix [D | t], rows = base units, columns = variables
    std::vector<std::vector<Rational>> m(k, std::vector<Rational>(n + 1));
    for (std::size_t r = 0; r < k; ++r) {
        for (std::size_t c = 0; c < n; ++c) { m[r][c] = units.entries[c].dim[r]; }
        m[r][n] = units.target_dim[r];
    }

    std::vector<std::size_t> pivot_col;
    std::size_t row = 0;
    for (std::size_t col = 0; col < n && row < k; ++col) {
        auto piv = row;
        while (piv < k && m[piv][col].is_zero()) { ++piv; }
        if (piv == k) { continue; }
        std::swap(m[piv], m[row]);
        auto inv = Rational(1) / m[row][col];
        for (auto& v : m[row]) { v *= inv; }
        for (std::size_t r = 0; r < k; ++r) {
            if (r == row || m[r][col].is_zero()) { continue; }
            auto f = m[r][col];
            for (std::size_t c = col; c <= n; ++c) { m[r][c] -= f * m[row][c]; }
        }
        pivot_col.push_back(col);
        ++row;
    }

    if (pivot_col.size() < n) { return std::nullopt; } // nontrivial nullspace
    for (std::size_t r = row; r < k; ++r) {
        if (!m[r][n].is_zero()) { return std::nullopt; } // inconsistent
    }

    Monomial q(n);
    for (std::size_t r = 0; r < pivot_col.size(); ++r) { q[pivot_col[r]] = m[r][n]; }
    return q;
}

std::vector<VariableGroup> group_by_dimension(UnitTable const& units)
{
    std::vector<VariableGroup> groups;
    for (std::size_t i = 0; i < units.entries.size(); ++i) {
        auto const& d = units.entries[i].dim;
        auto it = std::find_if(groups.begin(), groups.end(), [&](auto const& g) { return g.dim == d; });
        if (it == groups.end()) {
            groups.push_back({d, {i}});
        } else {
            it->members.push_back(i);
        }
    }
    return groups;
}

MonomialLookup::MonomialLookup(std::vector<DimVector> const& variable_dims, std::size_t base_count, int p,
    std::size_t key_cap, ExponentRange range)
    : p_(p)
{
    if (p < 0) { throw std::invalid_argument("monomial lookup needs p >= 0"); }
    auto const n = variable_dims.size();

    // dynamic programming over variables; each key keeps a bounded witness list
    std::unordered_map<DimVector, std::vector<Assignment>, DimHash> current;
    std::vector<DimVector> order;
    current.emplace(DimVector(base_count), std::vector<Assignment>{Assignment{}});
    order.emplace_back(base_count);

    for (std::size_t v = 0; v < n; ++v) {
        std::unordered_map<DimVector, std::vector<Assignment>, DimHash> next;
        std::vector<DimVector> next_order;
        for (auto const& key : order) {
            auto const& ws = current.at(key);
            int const steps = range == ExponentRange::Signed ? 2 * p : p;
            for (int q = 0; q <= steps; ++q) {
                // visit 0, 1, -1, 2, -2, ... so small exponents become the first witnesses
                int e = range == ExponentRange::Signed ? ((q % 2 == 1) ? (q + 1) / 2 : -(q / 2)) : q;
                auto nk = key + variable_dims[v] * Rational(e);
                auto [it, inserted] = next.try_emplace(nk);
                if (inserted) {
                    next_order.push_back(nk);
                    if (next.size() > key_cap) {
                        throw ResourceError(fmt::format(
                            "monomial lookup exceeds {} keys; use a smaller max exponent p (currently {})", key_cap, p));
                    }
                }
                for (auto const& w : ws) {
                    if (it->second.size() >= witnesses_per_key) { break; }
                    auto nw = w;
                    nw.push_back(e);
                    it->second.push_back(std::move(nw));
                }
            }
        }
        current = std::move(next);
        order = std::move(next_order);
    }

    table_ = std::move(current);
    keys_ = std::move(order);
}

std::vector<MonomialLookup::Assignment> const* MonomialLookup::witnesses(DimVector const& d) const
{
    auto it = table_.find(d);
    return it == table_.end() ? nullptr : &it->second;
}

MonomialLookup build_monomial_lookup(UnitTable const& units, int p, std::size_t key_cap, ExponentRange range)
{
    std::vector<DimVector> dims;
    dims.reserve(units.entries.size());
    for (auto const& e : units.entries) { dims.push_back(e.dim); }
    return {dims, units.base_count(), p, key_cap, range};
}

std::vector<std::pair<DimVector, DimVector>> valid_splits(DimVector const& parent, SplitOp op,
    MonomialLookup const& lookup)
{
    std::vector<std::pair<DimVector, DimVector>> out;
    for (auto const& left : lookup.keys()) {
        auto right = op == SplitOp::Mul ? parent - left : left - parent;
        if (lookup.contains(right)) { out.emplace_back(left, std::move(right)); }
    }
    return out;
}

std::optional<std::pair<DimVector, DimVector>> split_dimension(DimVector const& parent, SplitOp op,
    MonomialLookup const& lookup, Rng& rng)
{
    auto splits = valid_splits(parent, op, lookup);
    if (splits.empty()) { return std::nullopt; }
    return splits[uniform_index(rng, splits.size())];
}

} // namespace qdsr
