#pragma once

#include <cstddef>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "qdsr/expr.hpp"
#include "qdsr/qdgrid.hpp"
#include "qdsr/rational.hpp"
#include "qdsr/vocab.hpp"

namespace qdsr {

/// r * sqrt(n) * pi^q with n squarefree and q a multiple of 1/2.
struct ClosedForm {
    Rational r;
    int n = 1;
    Rational q;

    [[nodiscard]] long double value() const;
    /// Infix text in the expression grammar, e.g. "1/4 * sqrt(2) * pi ** (1/2)".
    [[nodiscard]] std::string str() const;
    friend bool operator==(ClosedForm const&, ClosedForm const&) = default;
};

struct SnapLattice {
    int max_numerator = 64;
    int max_denominator = 12;
    int max_radicand = 30;
    /// q ranges over multiples of 1/2 in [-max_pi_power, max_pi_power].
    int max_pi_power = 2;
    double tolerance = 1e-9;
};

/// Nearest lattice value within the tolerance, if any; simpler forms win ties.
std::optional<ClosedForm> snap_constant(double v, SnapLattice const& lattice = {});

/// Squarefree integers in [1, max].
std::vector<int> squarefree_up_to(int max);

/// Canonical symbolic form used for exact comparison. Numbers are folded to
/// long double (pi included); variables are original-variable indices.
struct Sym {
    enum class Kind { Num, Var, Add, Mul, Pow, Fn };
    Kind kind = Kind::Num;
    long double value = 0;
    std::size_t var = 0;
    Op fn = Op::Exp;
    std::vector<std::shared_ptr<Sym const>> args;
    /// Canonical text with numbers rounded to 10 significant digits.
    std::string key;
};
using SymPtr = std::shared_ptr<Sym const>;

/// Canonical form of a tree with scalar slots bound to `params` and auxiliary
/// leaves inlined. Variables are assumed positive where that licenses a rewrite.
SymPtr canonical_form(ExprTree const& tree, Vocabulary const& vocab, std::span<long double const> params);

/// Canonical form rendered back as a tree over the original variables.
ExprTree sym_to_tree(SymPtr const& s);

/// Snaps each parameter, then canonicalizes. Scalars that do not snap keep their value.
ExprTree simplify(ExprTree const& tree, Vocabulary const& vocab, std::span<double const> params);

enum class VerdictKind { Exact, NumericallyEquivalent, NotRecovered };
std::string verdict_name(VerdictKind k);

struct Verdict {
    VerdictKind kind = VerdictKind::NotRecovered;
    std::string evidence;
    /// Candidate after snapping and simplification, over original variables.
    std::string simplified;

    [[nodiscard]] bool recovered() const { return kind != VerdictKind::NotRecovered; }
};

struct EquivalenceOptions {
    std::size_t points = 10000;
    /// Share of points pushed toward range minima by u -> u^3.
    double low_share = 0.2;
    double tolerance = 1e-12;
};

struct EquivalenceReport {
    bool equivalent = false;
    long double max_error = 0;
    std::size_t compared = 0;
    std::size_t worst_point = 0;
};

/// Halton points over the original-variable ranges, evaluated in long double.
/// Error per point: |a - b| / max(|b|, 1e-6 rms(b)).
EquivalenceReport numerically_equivalent(ExprTree const& candidate, std::span<long double const> params,
    ExprTree const& truth, Vocabulary const& vocab, std::vector<std::pair<double, double>> const& ranges,
    EquivalenceOptions const& opts = {});

/// Radical-inverse quasi-random value of index i in the given prime base.
double halton(std::size_t i, unsigned base);

/// Snap, canonicalize both sides and compare; otherwise fall back to the
/// numerical oracle. `truth` is parsed against `vocab`.
Verdict exact_match(Candidate const& candidate, ExprTree const& truth, Vocabulary const& vocab,
    std::vector<std::pair<double, double>> const& ranges, EquivalenceOptions const& opts = {});

/// Candidate parameters after snapping, in long double.
std::vector<long double> snapped_params(std::span<double const> params, std::vector<std::string>* notes = nullptr);

} // namespace qdsr
