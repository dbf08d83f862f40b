#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "../support/fixtures.hpp"
#include "../support/oracles.hpp"
#include "qdsr/error.hpp"
#include "qdsr/fitness.hpp"

using namespace qdsr;

namespace {

std::vector<double> random_vector(Rng& rng, std::size_t n, double scale)
{
    std::normal_distribution<double> g(0.0, scale);
    std::vector<double> v(n);
    for (auto& x : v) { x = g(rng); }
    return v;
}

/// One dimensionless x drawn on [lo, hi] with y = f(x).
Dataset scalar_data(std::size_t n, double lo, double hi, double (*f)(double), std::uint64_t seed = 1)
{
    Dataset d;
    d.units = test::scalar_units();
    d.names = {"x"};
    d.columns.resize(1);
    Rng rng(seed);
    for (std::size_t i = 0; i < n; ++i) {
        double x = lo + (hi - lo) * uniform01(rng);
        d.columns[0].push_back(x);
        d.target.push_back(f(x));
    }
    d.compute_ranges();
    return d;
}

Batch whole(Dataset const& d, Vocabulary const& v)
{
    std::vector<std::size_t> rows(d.rows());
    std::iota(rows.begin(), rows.end(), 0);
    return make_batch(d, v, rows);
}

} // namespace

TEST_SUITE("fitness")
{
    TEST_CASE("metric edge values")
    {
        std::vector<double> y{1, 2, 3, 4, 5};
        CHECK(nrmse(y, y) == 0.0);
        CHECK(r2(y, y) == 1.0);

        // population sigma of 1..5 is sqrt(2)
        std::vector<double> shifted(y);
        for (auto& v : shifted) { v += std::sqrt(2.0); }
        CHECK(nrmse(shifted, y) == doctest::Approx(1.0).epsilon(1e-14));

        std::vector<double> mean(y.size(), 3.0);
        CHECK(r2(mean, y) == doctest::Approx(0.0).epsilon(1e-15));

        std::vector<double> flat(5, 2.0);
        CHECK_THROWS_AS(nrmse(y, flat), DegenerateVarianceError);
        CHECK_THROWS_AS(r2(y, flat), DegenerateVarianceError);
        CHECK_THROWS_AS(r2(std::vector<double>{1.0}, std::vector<double>{1.0}), DegenerateVarianceError);
        CHECK_THROWS_AS(r2(std::vector<double>{1.0, 2.0}, y), DegenerateVarianceError);
    }

    TEST_CASE("metrics match the long-double recomputation")
    {
        Rng rng(42);
        for (int trial = 0; trial < 300; ++trial) {
            auto n = 2 + uniform_index(rng, 300);
            double scale = std::pow(10.0, -3 + 6 * uniform01(rng));
            auto y = random_vector(rng, n, scale);
            auto p = y;
            auto noise = random_vector(rng, n, scale * uniform01(rng));
            for (std::size_t i = 0; i < n; ++i) { p[i] += noise[i]; }
            auto r = static_cast<double>(test::oracle_r2(p, y));
            auto e = static_cast<double>(test::oracle_nrmse(p, y));
            CHECK(std::abs(r2(p, y) - r) <= 1e-12 * std::max(1.0, std::abs(r)));
            CHECK(std::abs(nrmse(p, y) - e) <= 1e-12 * std::max(1.0, e));
            // both metrics use the population variance, so they are tied exactly
            CHECK(std::abs(r2(p, y) - (1.0 - nrmse(p, y) * nrmse(p, y))) <= 1e-12);
            CHECK(r2(p, y) <= 1.0);
            CHECK(nrmse(p, y) >= 0.0);
        }
    }

    TEST_CASE("metrics are invariant under joint permutation")
    {
        Rng rng(4);
        auto y = random_vector(rng, 100, 1.0);
        auto p = random_vector(rng, 100, 1.0);
        std::vector<std::size_t> idx(100);
        std::iota(idx.begin(), idx.end(), 0);
        std::shuffle(idx.begin(), idx.end(), rng);
        std::vector<double> ys;
        std::vector<double> ps;
        for (auto i : idx) {
            ys.push_back(y[i]);
            ps.push_back(p[i]);
        }
        CHECK(r2(ps, ys) == doctest::Approx(r2(p, y)).epsilon(1e-13));
        CHECK(nrmse(ps, ys) == doctest::Approx(nrmse(p, y)).epsilon(1e-13));
    }

    TEST_CASE("early stop threshold")
    {
        CHECK(early_stop(1.0));
        CHECK_FALSE(early_stop(1.0 - 1e-13));
        CHECK(early_stop(1.0 - 1e-15));
        CHECK(early_stop(early_stop_threshold));
        CHECK_FALSE(early_stop(std::nextafter(early_stop_threshold, 0.0)));
        CHECK_FALSE(early_stop(-INFINITY));
        CHECK_FALSE(early_stop(NAN));
    }

    TEST_CASE("score handles constant targets and non-finite predictions")
    {
        std::vector<double> five(10, 5.0);
        auto exact = score(five, five);
        CHECK(exact.r2 == 1.0);
        std::vector<double> off(10, 5.5);
        auto bad = score(off, five);
        CHECK(bad.r2 < 0.0);
        std::vector<double> with_nan(five);
        with_nan[3] = NAN;
        CHECK(score(with_nan, five).r2 == -INFINITY);
        CHECK_FALSE(score(with_nan, five).converged);
    }

    TEST_CASE("fitting a constant and a linear scale")
    {
        auto v = build_vocabulary(test::scalar_units(), VocabFlags::none());
        auto flat = scalar_data(50, 0, 1, [](double) { return 5.0; });
        auto fit = fit_scalars(parse_expression("A", v), whole(flat, v));
        REQUIRE(fit.converged);
        CHECK(fit.params[0] == doctest::Approx(5.0).epsilon(1e-12));
        CHECK(fit.r2 == 1.0);

        auto lin = scalar_data(100, -2, 2, [](double x) { return 3.0 * x; });
        auto fl = fit_scalars(parse_expression("A * x", v), whole(lin, v));
        REQUIRE(fl.converged);
        CHECK(std::abs(fl.params[0] - 3.0) < 1e-9);
        CHECK(fl.r2 == doctest::Approx(1.0).epsilon(1e-14));
        CHECK(early_stop(fl));
    }

    TEST_CASE("sin(A x) reaches the grid-search optimum")
    {
        auto v = build_vocabulary(test::scalar_units(), VocabFlags::none());
        auto d = scalar_data(250, 0, 1, [](double x) { return std::sin(2.0 * x); });
        auto b = whole(d, v);
        auto tree = parse_expression("sin(A * x)", v);
        auto fit = fit_scalars(tree, b);
        REQUIRE(fit.converged);
        auto pred = evaluate(tree, b.view(), fit.params);
        double mse = 0;
        for (std::size_t i = 0; i < pred.size(); ++i) { mse += (pred[i] - b.y[i]) * (pred[i] - b.y[i]); }
        mse /= static_cast<double>(pred.size());
        double oracle = test::grid_search_sin_mse(d.columns[0], d.target, -10, 10, 1e-4);
        CHECK(std::abs(mse - oracle) <= 1e-6);
        CHECK(fit.params[0] == doctest::Approx(2.0).epsilon(1e-6));
    }

    TEST_CASE("zero-slot trees and non-finite models")
    {
        auto v = build_vocabulary(test::scalar_units(), VocabFlags::none());
        auto d = scalar_data(60, -1, 1, [](double x) { return x * x; });
        auto b = whole(d, v);
        auto sq = fit_scalars(parse_expression("x ** 2", v), b);
        CHECK(sq.params.empty());
        CHECK(sq.r2 == 1.0);

        auto lg = fit_scalars(parse_expression("log(A * x)", v), b);
        CHECK_FALSE(lg.converged);
        CHECK(lg.r2 == -INFINITY);
    }

    TEST_CASE("converged fits carry finite parameters")
    {
        auto v = build_vocabulary(test::scalar_units(), VocabFlags::none());
        auto d = scalar_data(120, 0.1, 3, [](double x) { return std::exp(-x) + 0.5; });
        auto b = whole(d, v);
        for (auto const* text : {"A * exp(A * x) + A", "A / (x + A)", "A * x ** A", "tanh(A * x) * A", "A ** x"}) {
            auto fit = fit_scalars(parse_expression(text, v), b);
            if (!fit.converged) { continue; }
            for (auto p : fit.params) { CHECK(std::isfinite(p)); }
        }
    }

    TEST_CASE("subsampling")
    {
        auto v = build_vocabulary(test::scalar_units(), VocabFlags::none());
        auto d = scalar_data(400, 0, 1, [](double x) { return x; });
        Rng rng(3);
        auto all = subsample(d, v, d.rows(), rng);
        std::set<std::size_t> rows(all.rows.begin(), all.rows.end());
        CHECK(rows.size() == d.rows());

        Rng a(10);
        Rng b(10);
        CHECK(subsample(d, v, 250, a).rows == subsample(d, v, 250, b).rows);
        CHECK_THROWS_AS(subsample(d, v, 401, rng), std::invalid_argument);
        CHECK_THROWS_AS(subsample(d, v, 0, rng), std::invalid_argument);

        auto big = sample_rows(1'000'000, 250, rng);
        CHECK(std::set<std::size_t>(big.begin(), big.end()).size() == 250);
        for (auto r : big) { CHECK(r < 1'000'000); }
    }

    TEST_CASE("batches precompute auxiliary columns")
    {
        auto const& t = find_target(test::feynman(), "I.8.14");
        auto v = build_vocabulary(t.units(), {});
        Rng rng(5);
        auto d = make_feynman_dataset(t, 50, rng);
        auto b = subsample(d, v, 20, rng);
        REQUIRE(b.columns.size() == v.variables().size());
        auto norm = *v.variable_index("norm0");
        for (std::size_t i = 0; i < b.size(); ++i) {
            double s = 0;
            for (std::size_t k = 0; k < 4; ++k) { s += b.columns[k][i] * b.columns[k][i]; }
            CHECK(b.columns[norm][i] == doctest::Approx(s).epsilon(1e-14));
        }
    }

    TEST_CASE("noisy refit")
    {
        auto const& t = find_target(test::feynman(), "I.12.2");
        auto v = build_vocabulary(t.units(), {});
        Rng rng(6);
        auto clean = make_feynman_dataset(t, 600, rng);
        auto noisy = clean;
        noisy.target = add_noise(clean.target, 0.1, rng);
        auto clean_batch = subsample(clean, v, 250, rng);
        auto noisy_batch = make_batch(noisy, v, clean_batch.rows);

        CHECK_FALSE(noisy_refit_step(QDGrid{}, clean_batch, v).hit.has_value());

        // grid of candidates fitted on noisy data only
        TreeGenerator gen(v);
        auto pool = generate_pool(300, v.target_dim(), gen, HyperSampler{}, rng);
        pool.trees.push_back(parse_expression("A * q1 * q2 / (epsilon * r ** 2)", v));
        QDGrid grid;
        for (auto const& tree : pool.trees) {
            auto fit = fit_scalars(tree, noisy_batch);
            grid.insert(make_candidate(tree, v, fit.params, fit.r2));
        }
        auto front = pareto_front(grid);
        auto out = noisy_refit_step(front, clean_batch, v);

        // sequential oracle: same order, same warm starts
        std::optional<std::size_t> first;
        for (std::size_t i = 0; i < front.size() && !first; ++i) {
            FitOptions o;
            o.warm_start = front[i].params;
            auto fit = fit_scalars(front[i].tree, clean_batch, o);
            if (fit.converged && early_stop(fit)) { first = i; }
        }
        CHECK(out.hit.has_value() == first.has_value());
        if (first) {
            CHECK(structurally_equal(out.hit->tree, front[*first].tree));
            CHECK(out.refits == *first + 1);
            CHECK(out.hit->fitness >= early_stop_threshold);
        } else {
            CHECK(out.refits == front.size());
        }

        // a front holding the true monomial is always answered
        auto truth = make_candidate(parse_expression("A * q1 * q2 / (epsilon * r ** 2)", v), v, {0.07}, 0.9);
        auto hit = noisy_refit_step(std::vector<Candidate>{truth}, clean_batch, v);
        REQUIRE(hit.hit.has_value());
        CHECK(hit.hit->fitness >= early_stop_threshold);
    }
}
