#include <doctest.h>

#include <cmath>
#include <numbers>

#include "../support/fixtures.hpp"
#include "qdsr/recovery.hpp"

using namespace qdsr;

namespace {

/// Distance from v to the nearest lattice value, by exhaustive scan.
long double lattice_distance(long double v, SnapLattice const& lat)
{
    auto sf = squarefree_up_to(lat.max_radicand);
    long double best = INFINITY;
    for (int q2 = -2 * lat.max_pi_power; q2 <= 2 * lat.max_pi_power; ++q2) {
        long double pq = std::pow(std::numbers::pi_v<long double>, q2 / 2.0L);
        for (int n : sf) {
            long double base = std::sqrt(static_cast<long double>(n)) * pq;
            for (int b = 1; b <= lat.max_denominator; ++b) {
                for (int a = -lat.max_numerator; a <= lat.max_numerator; ++a) {
                    best = std::min(best, std::abs(v - base * a / b));
                }
            }
        }
    }
    return best;
}

Vocabulary ranged_scalar() { return build_vocabulary(test::scalar_units(), VocabFlags::none()); }

} // namespace

TEST_SUITE("recovery")
{
    TEST_CASE("the Gaussian normalizer snaps to sqrt(2 pi) / 4")
    {
        auto s = snap_constant(0.6266570686577501);
        REQUIRE(s.has_value());
        CHECK(s->r == Rational(1, 4));
        CHECK(s->n == 2);
        CHECK(s->q == Rational(1, 2));
        CHECK(std::abs(s->value() - std::sqrt(2 * std::numbers::pi_v<long double>) / 4) < 1e-18L);
    }

    TEST_CASE("integers and misses")
    {
        auto three = snap_constant(3.0000000000);
        REQUIRE(three.has_value());
        CHECK(three->r == Rational(3));
        CHECK(three->n == 1);
        CHECK(three->q == Rational(0));
        CHECK(three->str() == "3");

        CHECK(lattice_distance(0.123456789L, SnapLattice{}) > 1e-9L);
        CHECK_FALSE(snap_constant(0.123456789).has_value());
        CHECK_FALSE(snap_constant(1e6).has_value());
    }

    TEST_CASE("snapping agrees with the exhaustive scan")
    {
        Rng rng(13);
        SnapLattice lat;
        for (int i = 0; i < 60; ++i) {
            double v = -8 + 16 * uniform01(rng);
            auto s = snap_constant(v, lat);
            auto d = lattice_distance(v, lat);
            CHECK(s.has_value() == (d <= lat.tolerance));
        }
    }

    TEST_CASE("snapping is idempotent")
    {
        for (double v : {0.6266570686577501, 2 * std::numbers::pi, 1 / (4 * std::numbers::pi), 0.375, -1.5,
                 std::sqrt(2.0), 32.0 / 5.0, 8 * std::numbers::pi / 3}) {
            auto s = snap_constant(v);
            REQUIRE(s.has_value());
            auto again = snap_constant(static_cast<double>(s->value()));
            REQUIRE(again.has_value());
            CHECK(*again == *s);
        }
    }

    TEST_CASE("closed-form text parses back to its value")
    {
        auto v = ranged_scalar();
        for (double c : {0.6266570686577501, 1 / (4 * std::numbers::pi), -2.5, std::sqrt(3.0) / 2}) {
            auto s = snap_constant(c);
            REQUIRE(s.has_value());
            auto t = parse_expression(s->str(), v);
            std::vector<long double> none{0.0L};
            CHECK(std::abs(evaluate_point<long double>(t, none, {}) - s->value()) < 1e-15L);
        }
    }

    TEST_CASE("lattice helpers")
    {
        CHECK(squarefree_up_to(10) == std::vector<int>{1, 2, 3, 5, 6, 7, 10});
        CHECK(halton(1, 2) == 0.5);
        CHECK(halton(2, 2) == 0.25);
        CHECK(halton(3, 2) == 0.75);
        CHECK(halton(1, 3) == doctest::Approx(1.0 / 3.0));
        std::vector<std::string> notes;
        auto p = snapped_params(std::vector<double>{3.0000000000001, 0.1234567}, &notes);
        CHECK(p[0] == 3.0L);
        CHECK(p[1] == doctest::Approx(0.1234567));
    }

    TEST_CASE("simplification")
    {
        auto v = ranged_scalar();
        std::vector<double> two{2.0, 2.0};
        auto s = simplify(parse_expression("(A * x) / A", v), v, two);
        CHECK(to_string(s, v) == "x");

        auto const& t = find_target(test::feynman(), "I.8.14");
        auto fv = build_vocabulary(t.units(), {});
        auto plain = build_vocabulary(t.units(), VocabFlags::none());
        auto in = simplify(parse_expression("sqrt(sprod0)", fv), fv, {});
        auto text = to_string(in, plain);
        CHECK(text.find("sprod") == std::string::npos);
        CHECK(text.find("x1") != std::string::npos);
        CHECK(text.find("y2") != std::string::npos);
    }

    TEST_CASE("simplification preserves values")
    {
        auto v = build_vocabulary(test::fig1_units(), {});
        TreeGenerator gen(v);
        Rng rng(14);
        auto pool = generate_pool(150, v.target_dim(), gen, HyperSampler{}, rng);
        std::size_t compared = 0;
        for (auto const& tree : pool.trees) {
            std::vector<double> params(tree.scalar_slots());
            for (auto& p : params) { p = uniform01(rng) < 0.5 ? 0.5 + 2 * uniform01(rng) : 2.0; }
            auto snapped = snapped_params(params);
            auto simple = simplify(tree, v, params);
            for (int k = 0; k < 1000 / 50; ++k) {
                std::vector<long double> x(4);
                for (auto& xi : x) { xi = 1 + 4 * uniform01(rng); }
                std::vector<long double> row;
                expand_row<long double>(v, x, row);
                auto a = evaluate_point<long double>(tree, row, snapped);
                auto b = evaluate_point<long double>(simple, x, {});
                if (!std::isfinite(a)) { continue; }
                if (!std::isfinite(b)) {
                    // exact cancellation: the float path only sees rounding noise in a singular denominator
                    CHECK(std::abs(a) > 1e6L);
                    continue;
                }
                ++compared;
                CAPTURE(to_string(tree, v));
                CHECK(std::abs(a - b) <= 1e-12L * std::max(1.0L, std::abs(a)));
            }
        }
        CHECK(compared > 1000);
    }

    TEST_CASE("exact match verdicts")
    {
        auto const& t = find_target(test::feynman(), "I.12.2");
        auto v = build_vocabulary(t.units(), {});
        std::vector<std::pair<double, double>> ranges;
        for (auto const& var : t.variables) { ranges.emplace_back(var.lo, var.hi); }
        auto truth = parse_expression(t.truth, v);

        auto verbatim = make_candidate(truth, v, {}, 1.0);
        CHECK(exact_match(verbatim, truth, v, ranges).kind == VerdictKind::Exact);

        auto fitted = make_candidate(parse_expression("A * q2 * q1 / (r * r * epsilon)", v), v,
            {1 / (4 * std::numbers::pi)}, 1.0);
        auto verdict = exact_match(fitted, truth, v, ranges);
        CHECK(verdict.kind == VerdictKind::Exact);
        auto num = numerically_equivalent(fitted.tree, snapped_params(fitted.params), truth, v, ranges);
        CHECK(num.equivalent);

        auto wrong = make_candidate(parse_expression("A * q2 * q1 / (r * epsilon)", v), v, {0.08}, 1.0);
        CHECK(exact_match(wrong, truth, v, ranges).kind == VerdictKind::NotRecovered);
    }

    TEST_CASE("aliases are numerically equivalent")
    {
        auto v = ranged_scalar();
        std::vector<std::pair<double, double>> ranges{{-0.95, 0.95}};
        auto truth = parse_expression("sqrt(1 - x ** 2)", v);
        auto cand = make_candidate(parse_expression("sin(arccos(x))", v), v, {}, 1.0);
        auto verdict = exact_match(cand, truth, v, ranges);
        CHECK(verdict.kind == VerdictKind::NumericallyEquivalent);
        CHECK(verdict.evidence.find("alias") != std::string::npos);
    }

    TEST_CASE("steep tanh is not mistaken for zero")
    {
        auto v = ranged_scalar();
        std::vector<std::pair<double, double>> ranges{{0.0, 5.0}};
        auto truth = parse_expression("0 * x", v);
        auto cand = make_candidate(parse_expression("1 - tanh(A * x)", v), v, {1000.0}, 1.0);
        CHECK(exact_match(cand, truth, v, ranges).kind == VerdictKind::NotRecovered);
    }

    TEST_CASE("verdicts are deterministic and exact implies equivalent")
    {
        for (auto const* id : {"I.6.2a", "I.13.4", "II.6.11", "I.8.14"}) {
            auto const& t = find_target(test::feynman(), id);
            auto v = build_vocabulary(t.units(), {});
            std::vector<std::pair<double, double>> ranges;
            for (auto const& var : t.variables) { ranges.emplace_back(var.lo, var.hi); }
            auto truth = parse_expression(t.truth, v);
            auto cand = make_candidate(truth, v, {}, 1.0);
            auto a = exact_match(cand, truth, v, ranges);
            auto b = exact_match(cand, truth, v, ranges);
            CHECK(a.kind == b.kind);
            CHECK(a.evidence == b.evidence);
            CHECK(a.kind == VerdictKind::Exact);
            CHECK(numerically_equivalent(cand.tree, {}, truth, v, ranges).equivalent);
        }
    }

    TEST_CASE("canonical forms ignore operand order")
    {
        auto v = build_vocabulary(test::fig1_units(), VocabFlags::none());
        auto a = canonical_form(parse_expression("m1 * L1 + m2", v), v, {});
        auto b = canonical_form(parse_expression("m2 + L1 * m1", v), v, {});
        CHECK(a->key == b->key);
        auto c = canonical_form(parse_expression("m1 / m2 * m2", v), v, {});
        auto d = canonical_form(parse_expression("m1", v), v, {});
        CHECK(c->key == d->key);
    }
}
