#include <doctest.h>

#include <cmath>

#include "../support/fixtures.hpp"
#include "qdsr/genetics.hpp"

using namespace qdsr;

namespace {

struct Fig1World {
    Vocabulary vocab = build_vocabulary(test::fig1_units(), {});
    TreeGenerator gen{vocab};
    std::vector<ExprTree> pool;
    QDGrid grid;

    explicit Fig1World(std::uint64_t seed)
    {
        Rng rng(seed);
        pool = generate_pool(400, vocab.target_dim(), gen, HyperSampler{}, rng).trees;
        for (auto const& t : pool) { grid.insert(make_candidate(t, vocab, {}, uniform01(rng))); }
    }
};

bool sound(ExprTree t, Vocabulary const& v, TreeLimits const& limits)
{
    return !validate(t, v, limits, &v.target_dim()).has_value();
}

} // namespace

TEST_SUITE("genetics")
{
    TEST_CASE("rank weights")
    {
        auto w = rank_weights(2, 1.0);
        CHECK(w[0] == doctest::Approx(2.0 / 3.0));
        CHECK(w[1] == doctest::Approx(1.0 / 3.0));
        auto w5 = rank_weights(5, 3.0);
        double s = 0;
        for (std::size_t i = 0; i < w5.size(); ++i) {
            s += w5[i];
            if (i > 0) { CHECK(w5[i] < w5[i - 1]); }
        }
        CHECK(s == doctest::Approx(1.0));
        CHECK(SelectionConfig{}.valid());
        SelectionConfig bad;
        bad.proportions = {0.5, 0.5, 0.5};
        CHECK_FALSE(bad.valid());
    }

    TEST_CASE("selection edge cases")
    {
        QDGrid empty;
        Rng rng(1);
        CHECK_THROWS_AS(select_parent(empty, SelectionConfig{}, rng), std::invalid_argument);

        QDGrid one;
        Candidate c;
        c.features = {1, 1, 0, 0, false};
        c.fitness = 0.5;
        one.insert(c);
        for (int i = 0; i < 20; ++i) { CHECK(select_parent(one, SelectionConfig{}, rng).fitness == 0.5); }
    }

    TEST_CASE("selector ranks by fitness")
    {
        std::vector<Candidate> cs(4);
        std::vector<double> fit{0.1, 0.9, 0.5, 0.7};
        std::vector<Candidate const*> ptrs;
        for (std::size_t i = 0; i < cs.size(); ++i) {
            cs[i].fitness = fit[i];
            ptrs.push_back(&cs[i]);
        }
        ParentSelector sel(ptrs, 3.0);
        CHECK(sel.ranked()[0]->fitness == 0.9);
        CHECK(sel.ranked()[3]->fitness == 0.1);
        Rng rng(2);
        std::array<int, 4> hits{};
        constexpr int draws = 40000;
        for (int i = 0; i < draws; ++i) { ++hits[sel.draw_rank(rng)]; }
        auto w = rank_weights(4, 3.0);
        for (std::size_t i = 0; i < 4; ++i) {
            double expected = w[i] * draws;
            CHECK(std::abs(hits[i] - expected) < 5 * std::sqrt(expected));
        }
    }

    TEST_CASE("crossover")
    {
        auto v = build_vocabulary(test::fig1_units(), VocabFlags::none());
        TreeLimits limits;
        Rng rng(3);
        auto a = parse_expression("m1 * m2", v);
        auto b = parse_expression("L1 * L2", v);
        CHECK_FALSE(crossover(a, b, v, limits, rng).has_value());

        auto t = parse_expression(test::fig1_tree_text, v);
        for (int i = 0; i < 50; ++i) {
            auto child = crossover(t, t, v, limits, rng);
            REQUIRE(child.has_value());
            CHECK(sound(*child, v, limits));
        }
    }

    TEST_CASE("crossover, mutation and unary removal preserve every invariant")
    {
        Fig1World w(4);
        TreeLimits limits;
        Rng rng(5);
        std::size_t made = 0;
        for (int i = 0; i < 3000; ++i) {
            auto const& a = w.pool[uniform_index(rng, w.pool.size())];
            auto const& b = w.pool[uniform_index(rng, w.pool.size())];
            auto a_copy = a;
            auto b_copy = b;
            for (auto child : {crossover(a, b, w.vocab, limits, rng), mutate(a, w.gen, limits, rng),
                     remove_unary(a, w.vocab, limits, rng)}) {
                if (!child) { continue; }
                ++made;
                CHECK(sound(*child, w.vocab, limits));
            }
            CHECK(structurally_equal(a, a_copy));
            CHECK(structurally_equal(b, b_copy));
        }
        CHECK(made > 3000);
    }

    TEST_CASE("mutation swaps")
    {
        auto v = build_vocabulary(parse_unit_table("x, 1\ny, 1\nTARGET, 1\n"), VocabFlags::none());
        TreeGenerator gen(v);
        Rng rng(6);
        auto leaf = parse_expression("x", v);
        bool saw_y = false;
        for (int i = 0; i < 200; ++i) {
            auto m = mutate(leaf, gen, {}, rng);
            if (!m) { continue; }
            CHECK(sound(*m, v, {}));
            saw_y = saw_y || to_string(*m, v) == "y";
        }
        CHECK(saw_y);

        auto s = build_vocabulary(test::scalar_units(), VocabFlags::none());
        TreeGenerator sgen(s);
        auto sin_x = parse_expression("sin(x)", s);
        bool saw_cos = false;
        for (int i = 0; i < 400; ++i) {
            auto m = mutate(sin_x, sgen, {}, rng);
            if (m) { saw_cos = saw_cos || to_string(*m, s) == "cos(x)"; }
        }
        CHECK(saw_cos);
    }

    TEST_CASE("unary removal")
    {
        auto v = build_vocabulary(test::scalar_units(), VocabFlags::none());
        Rng rng(7);
        auto r = remove_unary(parse_expression("sin(x)", v), v, {}, rng);
        REQUIRE(r.has_value());
        CHECK(to_string(*r, v) == "x");
        CHECK_FALSE(remove_unary(parse_expression("x * x", v), v, {}, rng).has_value());

        auto const& t = find_target(test::feynman(), "I.8.14");
        auto fv = build_vocabulary(t.units(), {});
        CHECK_FALSE(remove_unary(parse_expression("sqrt(norm0)", fv), fv, {}, rng).has_value());
    }

    TEST_CASE("class counts")
    {
        CHECK(class_counts(3, SelectionConfig{}.proportions) == std::array<std::size_t, 3>{1, 1, 1});
        auto c = class_counts(1000, SelectionConfig{}.proportions);
        CHECK(c[0] + c[1] + c[2] == 1000);
        for (auto k : c) { CHECK(std::abs(static_cast<double>(k) - 1000.0 / 3.0) <= 2.0); }
        auto two = class_counts(2, SelectionConfig{}.proportions);
        CHECK(two[0] + two[1] + two[2] == 2);
    }

    TEST_CASE("one offspring per occupied cell, all sound")
    {
        Fig1World w(8);
        TreeLimits limits;
        Rng rng(9);
        GenerationStats stats;
        auto kids = next_generation(w.grid, w.gen, SelectionConfig{}, limits, rng, &stats);
        CHECK(kids.size() == w.grid.size());
        std::size_t produced = 0;
        for (auto n : stats.produced) { produced += n; }
        CHECK(produced == kids.size());
        for (auto const& k : kids) { CHECK(sound(k.tree, w.vocab, limits)); }

        Rng again(9);
        auto replay = next_generation(w.grid, w.gen, SelectionConfig{}, limits, again);
        REQUIRE(replay.size() == kids.size());
        for (std::size_t i = 0; i < kids.size(); ++i) { CHECK(structurally_equal(kids[i].tree, replay[i].tree)); }
    }

    TEST_CASE("depth")
    {
        auto v = build_vocabulary(test::scalar_units(), VocabFlags::none());
        CHECK(depth(parse_expression("x", v)) == 1);
        CHECK(depth(parse_expression("sin(x) * A", v)) == 3);
    }
}
