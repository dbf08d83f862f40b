#include <doctest.h>

#include <algorithm>
#include <set>

#include "../support/fixtures.hpp"
#include "../support/oracles.hpp"
#include "qdsr/error.hpp"
#include "qdsr/expr.hpp"

using namespace qdsr;

namespace {

std::set<std::string> definitions(Vocabulary const& v)
{
    std::set<std::string> out;
    for (auto const& t : v.variables()) {
        if (t.definition) { out.insert(definition_text(*t.definition, v.units())); }
    }
    return out;
}

UnitTable four_lengths()
{
    return parse_unit_table("x1, 1, 0\nx2, 1, 0\ny1, 1, 0\ny2, 1, 0\nTARGET, 1, 0\n");
}

} // namespace

TEST_SUITE("vocab")
{
    TEST_CASE("complexity scores")
    {
        CHECK(token_complexity("sin") == 4);
        CHECK(token_complexity("cos") == 4);
        CHECK(token_complexity("tan") == 4);
        CHECK(token_complexity("A") == 2);
        CHECK(token_complexity("**") == 3);
        CHECK(token_complexity("+") == 1);
        CHECK(token_complexity("*") == 1);
        CHECK(token_complexity("-") == 2);
        CHECK(token_complexity("/") == 2);
        CHECK(token_complexity("exp") == 3);
        CHECK(token_complexity("arcsinh") == 6);
        CHECK_THROWS_AS(token_complexity("frob"), std::out_of_range);

        auto v = build_vocabulary(test::fig1_units(), {});
        CHECK(v.complexity("m1") == 1);
        CHECK(v.complexity("ratio0") == 1);
        CHECK(v.complexity("sin") == 4);
    }

    TEST_CASE("all flags off leaves originals and A")
    {
        auto v = build_vocabulary(test::fig1_units(), VocabFlags::none());
        CHECK(v.variables().size() == 4);
        CHECK(v.aux_count() == 0);
        CHECK(v.scalar().symbol == "A");
        CHECK(v.scalar().dim.is_zero());
    }

    TEST_CASE("disabling DA zeroes every dimension")
    {
        auto flags = VocabFlags::none();
        flags.da_enabled = false;
        auto v = build_vocabulary(test::fig1_units(), flags);
        for (auto const& t : v.variables()) { CHECK(t.dim.is_zero()); }
        CHECK(v.target_dim().is_zero());
    }

    TEST_CASE("Fig. 1 ratios")
    {
        VocabFlags flags = VocabFlags::none();
        flags.aux_ratios = true;
        auto v = build_vocabulary(test::fig1_units(), flags);
        auto defs = definitions(v);
        CHECK(defs == std::set<std::string>{"m1 / m2", "m2 / m1", "L1 / L2", "L2 / L1"});
        for (auto i = v.original_count(); i < v.variables().size(); ++i) { CHECK(v.variables()[i].dim.is_zero()); }
    }

    TEST_CASE("anchored ratios of a four-length group")
    {
        auto u = four_lengths();
        auto r = dimensionless_ratios(u, group_by_dimension(u), false);
        std::set<std::string> defs;
        for (auto const& t : r) { defs.insert(definition_text(*t.definition, u)); }
        CHECK(defs == std::set<std::string>{"x1 / x2", "x1 / y1", "x1 / y2", "x2 / x1", "y1 / x1", "y2 / x1"});

        auto single = parse_unit_table("x, 1\nTARGET, 1\n");
        CHECK(dimensionless_ratios(single, group_by_dimension(single), true).empty());
    }

    TEST_CASE("norms")
    {
        auto u = four_lengths();
        auto n = norms(u, group_by_dimension(u));
        REQUIRE(n.size() == 1);
        CHECK(definition_text(*n[0].definition, u) == "x1 ** 2 + x2 ** 2 + y1 ** 2 + y2 ** 2");
        CHECK(n[0].dim == DimVector{2, 0});

        auto b = parse_unit_table("Bx, 0, 1\nBy, 0, 1\nBz, 0, 1\nmu, 1, -1\nTARGET, 1, 0\n");
        auto bn = norms(b, group_by_dimension(b));
        REQUIRE(bn.size() == 1);
        CHECK(definition_text(*bn[0].definition, b) == "Bx ** 2 + By ** 2 + Bz ** 2");

        CHECK(norms(test::newton_trivial_units(), group_by_dimension(test::newton_trivial_units())).empty());
    }

    TEST_CASE("scalar product counts match brute-force matchings")
    {
        for (std::size_t n : {2U, 4U, 6U, 8U}) {
            CAPTURE(n);
            std::string text;
            for (std::size_t i = 0; i < n; ++i) { text += "x" + std::to_string(i) + ", 1\n"; }
            auto u = parse_unit_table(text + "TARGET, 1\n");
            auto g = group_by_dimension(u);
            REQUIRE(g.size() == 1);
            auto tokens = scalar_products(u, g[0]);
            CHECK(tokens.size() == test::brute_matching_count(n));
            // n! / (2^(n/2) (n/2)!)
            std::size_t fact = 1;
            std::size_t half_fact = 1;
            for (std::size_t i = 2; i <= n; ++i) { fact *= i; }
            for (std::size_t i = 2; i <= n / 2; ++i) { half_fact *= i; }
            CHECK(tokens.size() == fact / ((std::size_t{1} << (n / 2)) * half_fact));
        }
        auto u = parse_unit_table("a, 1\nb, 1\nc, 1\nTARGET, 1\n");
        CHECK(scalar_products(u, group_by_dimension(u)[0]).empty());
        CHECK(perfect_matchings(4).size() == 3);
        CHECK(perfect_matchings(6).size() == 15);

        auto two = parse_unit_table("a, 1\nb, 1\nTARGET, 1\n");
        auto t = scalar_products(two, group_by_dimension(two)[0]);
        REQUIRE(t.size() == 1);
        CHECK(definition_text(*t[0].definition, two) == "(a - b) ** 2");
    }

    TEST_CASE("pair-difference token for groups of two is opt-in")
    {
        auto flags = VocabFlags::none();
        flags.aux_scalar_products = true;
        CHECK(build_vocabulary(test::fig1_units(), flags).aux_count() == 0);
        flags.aux_pair_difference = true;
        CHECK(build_vocabulary(test::fig1_units(), flags).aux_count() == 2);
    }

    TEST_CASE("I.9.18 gains 50 auxiliary leaves")
    {
        auto const& t = find_target(test::feynman(), "I.9.18");
        auto v = build_vocabulary(t.units(), {});
        CHECK(v.original_count() == 9);
        CHECK(v.aux_count() == 50);
    }

    TEST_CASE("auxiliary dimensions match their definitions")
    {
        for (auto const* id : {"I.9.18", "I.8.14", "III.10.19", "II.36.38", "I.11.19"}) {
            CAPTURE(id);
            auto const& t = find_target(test::feynman(), id);
            auto v = build_vocabulary(t.units(), {});
            auto plain = build_vocabulary(t.units(), VocabFlags::none());
            for (auto i = v.original_count(); i < v.variables().size(); ++i) {
                auto const& tok = v.variables()[i];
                auto tree = parse_expression(definition_text(*tok.definition, v.units()), plain);
                REQUIRE_FALSE(infer_dims(tree, plain).has_value());
                CHECK(tree.root().dim == tok.dim);
            }
        }
    }

    TEST_CASE("construction is deterministic")
    {
        auto const& t = find_target(test::feynman(), "I.9.18");
        CHECK(build_vocabulary(t.units(), {}).dump() == build_vocabulary(t.units(), {}).dump());
    }

    TEST_CASE("aux cap and reserved names")
    {
        VocabFlags flags;
        flags.max_aux = 3;
        CHECK_THROWS_AS(build_vocabulary(test::fig1_units(), flags), ResourceError);
        CHECK_THROWS_AS(build_vocabulary(parse_unit_table("A, 1\nTARGET, 1\n"), {}), ConfigError);
        CHECK_THROWS_AS(build_vocabulary(parse_unit_table("pi, 1\nTARGET, 1\n"), {}), ConfigError);
    }

    TEST_CASE("aux values")
    {
        std::vector<double> x{3, 1, 4, 2};
        AuxDefinition ratio{AuxDefinition::Kind::Ratio, {0, 3}};
        AuxDefinition prod{AuxDefinition::Kind::RatioProduct, {0, 1, 2, 3}};
        AuxDefinition norm{AuxDefinition::Kind::Norm, {0, 2}};
        AuxDefinition pairs{AuxDefinition::Kind::PairDifferences, {0, 1, 2, 3}};
        std::span<double const> s(x);
        CHECK(aux_value(ratio, s) == doctest::Approx(1.5));
        CHECK(aux_value(prod, s) == doctest::Approx(6.0));
        CHECK(aux_value(norm, s) == doctest::Approx(25.0));
        CHECK(aux_value(pairs, s) == doctest::Approx(8.0));
    }

    TEST_CASE("dump lists every token")
    {
        auto v = build_vocabulary(test::fig1_units(), {});
        auto d = v.dump();
        CHECK(d.find("symbol | kind | dims | complexity | definition") == 0);
        CHECK(d.find("ratio0 | leaf-variable | [0, 0] | 1 | m1 / m2") != std::string::npos);
        CHECK(d.find("sin | unary") != std::string::npos);
    }
}
