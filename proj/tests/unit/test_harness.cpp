#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "../support/fixtures.hpp"
#include "qdsr/error.hpp"
#include "qdsr/harness.hpp"

using namespace qdsr;
using namespace std::chrono_literals;

namespace {

RunConfig quick(RunMode mode = RunMode::Main)
{
    auto cfg = desk_profile();
    cfg.mode = mode;
    cfg.pool_size = 400;
    cfg.max_generations = 3;
    return cfg;
}

Dataset feynman_data(std::string_view id, std::size_t rows, std::uint64_t seed)
{
    Rng rng(seed);
    return make_feynman_dataset(find_target(test::feynman(), id), rows, rng);
}

double population_sd(std::vector<double> const& v)
{
    double m = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
    double s = 0;
    for (auto x : v) { s += (x - m) * (x - m); }
    return std::sqrt(s / static_cast<double>(v.size()));
}

} // namespace

TEST_SUITE("harness")
{
    TEST_CASE("modes and durations")
    {
        for (auto m : {RunMode::Main, RunMode::Ab0, RunMode::Ab1, RunMode::Noise}) {
            CHECK(parse_mode(mode_name(m)) == m);
        }
        CHECK_THROWS_AS(parse_mode("ab2"), ConfigError);
        CHECK(parse_duration("90") == Duration(90'000));
        CHECK(parse_duration("90s") == Duration(90'000));
        CHECK(parse_duration("15m") == Duration(900'000));
        CHECK(parse_duration("6h") == Duration(21'600'000));
        CHECK(parse_duration("250ms") == Duration(250));
        CHECK_THROWS_AS(parse_duration("fast"), ConfigError);
        CHECK_THROWS_AS(parse_duration("5d"), ConfigError);
        CHECK(parse_duration(format_duration(Duration(900'000))) == Duration(900'000));
    }

    TEST_CASE("profiles and mode overrides")
    {
        auto p = paper_profile();
        CHECK(p.max_evals == 1'000'000);
        CHECK(p.phase1_timeout == 1h);
        CHECK(p.total_timeout == 6h);
        CHECK(p.batch_size == 250);
        auto d = desk_profile();
        CHECK(d.max_evals == 100'000);
        CHECK(d.phase1_timeout == 5min);
        CHECK(d.total_timeout == 15min);
        CHECK(profile_by_name("desk").max_evals == d.max_evals);
        CHECK_THROWS_AS(profile_by_name("laptop"), ConfigError);

        RunConfig cfg;
        cfg.mode = RunMode::Ab0;
        CHECK_FALSE(cfg.effective_vocab().da_enabled);
        CHECK_FALSE(cfg.effective_vocab().aux_ratios);
        CHECK_FALSE(cfg.effective_vocab().aux_scalar_products);
        cfg.mode = RunMode::Ab1;
        CHECK(cfg.effective_vocab().da_enabled);
        CHECK_FALSE(cfg.effective_vocab().aux_norms);
        cfg.mode = RunMode::Main;
        CHECK(cfg.effective_vocab().aux_norms);

        cfg.batch_size = 0;
        CHECK_THROWS_AS(cfg.check(), ConfigError);
        cfg = RunConfig{};
        cfg.train_ratio = 1.0;
        CHECK_THROWS_AS(cfg.check(), ConfigError);
    }

    TEST_CASE("config text overrides fields")
    {
        RunConfig cfg;
        apply_config_text(cfg, "# desk run\nprofile = desk\nmode = noise\nnoise_level = 0.05\nseed = 9\n"
                               "max_evals = 500\nphase1_timeout = 2m\naux = off\nmax_len = 30\n");
        CHECK(cfg.mode == RunMode::Noise);
        CHECK(cfg.noise_level == 0.05);
        CHECK(cfg.seed == 9);
        CHECK(cfg.max_evals == 500);
        CHECK(cfg.phase1_timeout == 2min);
        CHECK(cfg.total_timeout == 15min);
        CHECK_FALSE(cfg.vocab.aux_ratios);
        CHECK(cfg.grid.max_len == 30);
        CHECK_THROWS_AS(apply_config_text(cfg, "colour = blue\n"), ParseError);
        CHECK_THROWS_AS(apply_config_text(cfg, "seed 4\n"), ParseError);
        CHECK_THROWS_AS(apply_config_text(cfg, "seed = four\n"), ParseError);
    }

    TEST_CASE("dataset ingestion")
    {
        auto units = parse_unit_table("a, 1\nb, 1\nc, 1\nTARGET, 1\n");
        auto d = parse_dataset("1.0 2.0 3.0 6.0\n# note\n2, 2, 2, 6\n", units);
        CHECK(d.rows() == 2);
        CHECK(d.variables() == 3);
        CHECK(d.columns[2][0] == 3.0);
        CHECK(d.target[0] == 6.0);
        CHECK(d.ranges[0] == std::pair<double, double>{1.0, 2.0});
        try {
            (void)parse_dataset("1 2 3 6\n1 2 3\n", units);
            FAIL("no error");
        } catch (ParseError const& e) {
            CHECK(e.line() == 2);
        }
        CHECK_THROWS_AS(parse_dataset("1 2 x 6\n", units), ParseError);
        auto again = parse_dataset(format_dataset(d), units);
        CHECK(again.target == d.target);
    }

    TEST_CASE("noise")
    {
        Rng rng(1);
        std::vector<double> y(100'000);
        for (auto& v : y) { v = 3 + 2 * uniform01(rng); }
        CHECK(add_noise(y, 0.0, rng) == y);
        auto noisy = add_noise(y, 0.1, rng);
        std::vector<double> eta(y.size());
        for (std::size_t i = 0; i < y.size(); ++i) { eta[i] = noisy[i] - y[i]; }
        double ratio = population_sd(eta) / population_sd(y);
        CHECK(ratio >= 0.095);
        CHECK(ratio <= 0.105);
        std::vector<double> flat(100, 4.0);
        CHECK(add_noise(flat, 0.5, rng) == flat);
        CHECK_THROWS(add_noise(y, -0.1, rng));
    }

    TEST_CASE("train/test split")
    {
        auto d = feynman_data("I.12.4", 100, 2);
        Rng a(3);
        auto [train, test] = split_train_test(d, 0.75, a);
        CHECK(train.rows() == 75);
        CHECK(test.rows() == 25);
        std::multiset<double> all(d.target.begin(), d.target.end());
        std::multiset<double> joined(train.target.begin(), train.target.end());
        joined.insert(test.target.begin(), test.target.end());
        CHECK(all == joined);
        Rng b(3);
        auto again = split_train_test(d, 0.75, b);
        CHECK(again.first.target == train.target);
        CHECK_THROWS(split_train_test(d, 1.0, b));
    }

    TEST_CASE("Feynman assets")
    {
        auto const& all = test::feynman();
        CHECK(all.size() == 117);
        auto main_count = std::count_if(all.begin(), all.end(), [](auto const& t) { return t.set == "main"; });
        CHECK(main_count == 97);
        std::set<std::string> ids;
        for (auto const& t : all) { ids.insert(t.id); }
        CHECK(ids.size() == 117);
        CHECK_THROWS_AS(find_target(all, "I.99.99"), ConfigError);
        CHECK_THROWS_AS(parse_feynman_assets("@dim length 1 0\nX | main | nope | x | x:length:1:2\n"), ParseError);

        auto const& t = find_target(all, "I.12.4");
        auto d = feynman_data("I.12.4", 200, 4);
        auto v = build_vocabulary(t.units(), VocabFlags::none());
        auto truth = parse_expression(t.truth, v);
        for (std::size_t r = 0; r < d.rows(); ++r) {
            std::vector<double> x;
            for (std::size_t c = 0; c < d.variables(); ++c) {
                CHECK(d.columns[c][r] >= t.variables[c].lo);
                CHECK(d.columns[c][r] <= t.variables[c].hi);
                x.push_back(d.columns[c][r]);
            }
            CHECK(evaluate_point<double>(truth, x, {}) == doctest::Approx(d.target[r]).epsilon(1e-14));
        }
    }

    TEST_CASE("manifests")
    {
        auto m = parse_manifest("# easy\nI.8.14 main 5\nI.8.14 ab0 5\nI.12.2\n");
        REQUIRE(m.size() == 3);
        CHECK(m[1].mode == RunMode::Ab0);
        CHECK(m[1].seeds == 5);
        CHECK(m[2].seeds == 1);
        CHECK(m[2].mode == RunMode::Main);
        CHECK_THROWS_AS(parse_manifest("I.8.14 sideways 5\n"), ParseError);

        std::vector<BenchResult> r{{"I.8.14", RunMode::Main, 5, 5, 4, 10.0}, {"I.8.14", RunMode::Ab0, 5, 1, 0, 9.0}};
        auto table = format_bench(r);
        CHECK(table.find("I.8.14") != std::string::npos);
        CHECK(table.find("ab0") != std::string::npos);
    }

    TEST_CASE("monomial tree")
    {
        auto units = test::newton_trivial_units();
        auto v = build_vocabulary(units, VocabFlags::none());
        auto t = monomial_tree(*solve_trivial(units));
        REQUIRE_FALSE(infer_dims(t, v).has_value());
        CHECK(t.root().dim == units.target_dim);
        CHECK(t.scalar_slots() == 1);
    }

    TEST_CASE("dimensionally trivial fixture takes the fast path")
    {
        auto units = test::newton_trivial_units();
        Dataset d;
        d.units = units;
        d.names = {"G", "mm", "r"};
        d.columns.resize(3);
        Rng rng(5);
        for (int i = 0; i < 400; ++i) {
            double g = 1 + uniform01(rng);
            double mm = 1 + 4 * uniform01(rng);
            double r = 1 + 2 * uniform01(rng);
            d.columns[0].push_back(g);
            d.columns[1].push_back(mm);
            d.columns[2].push_back(r);
            d.target.push_back(g * mm / (r * r));
        }
        d.compute_ranges();
        auto rep = run(quick(), d, "G * mm / r ** 2", "gravity");
        CHECK(rep.fast_path);
        CHECK(rep.stop_reason == "fast-path");
        CHECK(rep.generations == 0);
        CHECK(rep.verdict.kind == VerdictKind::Exact);
        CHECK(rep.evaluations == 1);
    }

    TEST_CASE("constant target")
    {
        Dataset d;
        d.units = test::scalar_units();
        d.names = {"x"};
        d.columns.resize(1);
        for (int i = 0; i < 300; ++i) {
            d.columns[0].push_back(1 + i * 0.01);
            d.target.push_back(5.0);
        }
        d.compute_ranges();
        auto rep = run(quick(), d, "5", "constant");
        CHECK(rep.verdict.kind == VerdictKind::Exact);
        CHECK(rep.generations <= 1);
        CHECK(rep.early_stopped);
    }

    TEST_CASE("zero budget reports pool stats only")
    {
        auto cfg = quick();
        cfg.max_evals = 0;
        auto rep = run(cfg, feynman_data("I.8.14", 300, 6), find_target(test::feynman(), "I.8.14").truth);
        CHECK(rep.stop_reason == "budget-zero");
        CHECK(rep.verdict.kind == VerdictKind::NotRecovered);
        CHECK(rep.evaluations == 0);
        CHECK(rep.pool.requested == cfg.pool_size);
        CHECK(rep.pool.unique > 0);
    }

    TEST_CASE("inconsistent inputs fail before evolution")
    {
        auto d = feynman_data("I.12.2", 200, 7);
        CHECK_THROWS_AS(run(quick(), d, "q1 * q2 / r", "bad"), ConfigError);
        CHECK_THROWS_AS(run(quick(), d, "q1 + r", "bad"), ConfigError);
        CHECK_THROWS_AS(run(quick(), d, "q1 +", "bad"), ParseError);
        auto ragged = d;
        ragged.columns[0].pop_back();
        CHECK_THROWS_AS(run(quick(), ragged, "", "bad"), ConfigError);
    }

    TEST_CASE("budget accounting and determinism")
    {
        auto const& t = find_target(test::feynman(), "II.6.11");
        auto d = feynman_data(t.id, 1000, 8);
        auto cfg = quick();
        cfg.max_evals = 700;
        cfg.max_generations = 0;
        auto a = run(cfg, d, t.truth, t.id);
        auto b = run(cfg, d, t.truth, t.id);
        CHECK(a.evaluations <= cfg.max_evals);
        CHECK(a.evaluations == b.evaluations);
        CHECK(a.generations == b.generations);
        CHECK(a.best_expression == b.best_expression);
        CHECK(a.verdict.kind == b.verdict.kind);
        REQUIRE(a.history.size() == b.history.size());
        for (std::size_t i = 0; i < a.history.size(); ++i) {
            CHECK(a.history[i].evals == b.history[i].evals);
            CHECK(a.history[i].best_r2 == b.history[i].best_r2);
            CHECK(a.history[i].evals <= cfg.max_evals);
            if (i > 0) { CHECK(a.history[i].evals >= a.history[i - 1].evals); }
        }
        auto csv = format_history_csv(a);
        CHECK(csv.rfind("generation,evals,best_r2,occupancy,front_size,seconds", 0) == 0);
        CHECK(format_report(a).find("verdict") != std::string::npos);
    }

    TEST_CASE("noise mode touches clean data only to refit")
    {
        auto const& t = find_target(test::feynman(), "I.12.2");
        auto cfg = quick(RunMode::Noise);
        cfg.max_generations = 2;
        auto rep = run(cfg, feynman_data(t.id, 2000, 9), t.truth, t.id);
        CHECK_FALSE(rep.fast_path);
        CHECK_FALSE(rep.clean_log.empty());
        for (auto const& access : rep.clean_log) { CHECK(access.purpose == "refit"); }
    }
}
