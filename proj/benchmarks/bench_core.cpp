// Hot paths of a run: batch evaluation, scalar fitting, pool generation and grid insertion.

#include <benchmark/benchmark.h>

#include <numeric>

#include "qdsr/fitness.hpp"
#include "qdsr/harness.hpp"
#include "qdsr/qdgrid.hpp"
#include "qdsr/treegen.hpp"

using namespace qdsr;

namespace {

FeynmanTarget const& target(char const* id)
{
    static auto const targets = load_feynman_assets(feynman_asset_path());
    return find_target(targets, id);
}

struct Fixture {
    Vocabulary vocab;
    Batch batch;

    Fixture(char const* id, std::size_t rows)
    {
        auto const& t = target(id);
        vocab = build_vocabulary(t.units(), {});
        auto rng = make_stream(0, 0);
        auto data = make_feynman_dataset(t, rows, rng);
        std::vector<std::size_t> all(rows);
        std::iota(all.begin(), all.end(), 0);
        batch = make_batch(data, vocab, std::move(all));
    }
};

void BM_Evaluate(benchmark::State& state)
{
    Fixture f("I.12.2", static_cast<std::size_t>(state.range(0)));
    auto tree = parse_expression("A * q1 * q2 / (epsilon * r ** 2)", f.vocab);
    std::vector<double> params{0.0795774715459477};
    std::vector<double> out(f.batch.size());
    EvalScratch scratch;
    auto cols = f.batch.view();
    for (auto _ : state) {
        evaluate(tree, cols, params, out, scratch);
        benchmark::DoNotOptimize(out.data());
    }
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_Evaluate)->Arg(256)->Arg(4096);

void BM_FitScalars(benchmark::State& state)
{
    Fixture f("I.6.2a", 256);
    auto tree = parse_expression("A * exp(A * theta ** 2)", f.vocab);
    for (auto _ : state) { benchmark::DoNotOptimize(fit_scalars(tree, f.batch)); }
}
BENCHMARK(BM_FitScalars);

void BM_GeneratePool(benchmark::State& state)
{
    auto const& t = target("I.9.18");
    auto vocab = build_vocabulary(t.units(), {});
    TreeGenerator gen(vocab);
    auto rng = make_stream(1, 0);
    for (auto _ : state) {
        auto pool = generate_pool(static_cast<std::size_t>(state.range(0)), vocab.target_dim(), gen, HyperSampler{}, rng);
        benchmark::DoNotOptimize(pool.trees.size());
    }
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_GeneratePool)->Arg(1000);

void BM_GridInsert(benchmark::State& state)
{
    auto rng = make_stream(2, 0);
    std::vector<Candidate> cands(4096);
    for (auto& c : cands) {
        c.features = {1 + uniform_index(rng, 35), uniform_index(rng, 5), uniform_index(rng, 5),
            uniform_index(rng, 9), uniform01(rng) < 0.3};
        c.fitness = uniform01(rng);
        c.complexity = 1 + static_cast<int>(uniform_index(rng, 40));
    }
    for (auto _ : state) {
        QDGrid grid;
        for (auto const& c : cands) { grid.insert(c); }
        benchmark::DoNotOptimize(grid.size());
    }
    state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(cands.size()));
}
BENCHMARK(BM_GridInsert);

} // namespace

BENCHMARK_MAIN();
