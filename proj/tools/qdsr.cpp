// qdsr command-line front end: run, bench, gen-pool, verify, make-data, export-feynman.

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "qdsr/dataset.hpp"
#include "qdsr/error.hpp"
#include "qdsr/harness.hpp"
#include "qdsr/recovery.hpp"
#include "qdsr/treegen.hpp"

namespace fs = std::filesystem;
using namespace qdsr;

namespace {

std::string read_file(std::string const& path)
{
    std::ifstream in(path);
    if (!in) { throw ConfigError(fmt::format("cannot open '{}'", path)); }
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(std::string const& path, std::string const& text)
{
    std::ofstream out(path);
    if (!out) { throw ConfigError(fmt::format("cannot write '{}'", path)); }
    out << text;
}

std::string first_line(std::string const& text)
{
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) {
        auto b = line.find_first_not_of(" \t\r");
        if (b != std::string::npos && line[b] != '#') { return line.substr(b); }
    }
    return {};
}

/// Flags shared by run and bench. Empty strings and sentinels mean "keep the profile value".
struct RunFlags {
    std::string profile = "desk";
    std::string mode;
    double noise_level = -1;
    std::uint64_t seed = 0;
    unsigned workers = 1;
    long long max_evals = -1;
    std::string phase1;
    std::string total;
    long long max_generations = -1;
    long long pool_size = -1;
    std::string config;
    bool no_aux = false;

    void attach(CLI::App* app)
    {
        app->add_option("--profile", profile, "desk or paper")->check(CLI::IsMember({"desk", "paper"}));
        app->add_option("--mode", mode, "main, ab0, ab1 or noise")
            ->check(CLI::IsMember({"main", "ab0", "ab1", "noise"}));
        app->add_option("--noise-level", noise_level, "noise standard deviation relative to std(y)");
        app->add_option("--seed", seed, "run seed");
        app->add_option("--workers", workers, "fitting threads")->check(CLI::PositiveNumber);
        app->add_option("--max-evals", max_evals, "unique (expression, batch) fits");
        app->add_option("--phase1-timeout", phase1, "grid expansion time, e.g. 5m");
        app->add_option("--total-timeout", total, "wall-clock limit, e.g. 15m");
        app->add_option("--max-generations", max_generations, "stop after this many generations");
        app->add_option("--pool-size", pool_size, "initial pool requests");
        app->add_option("--config", config, "key = value file applied after the flags");
        app->add_flag("--no-aux", no_aux, "disable auxiliary variables in main mode");
    }

    [[nodiscard]] RunConfig build() const
    {
        auto cfg = profile_by_name(profile);
        if (!mode.empty()) { cfg.mode = parse_mode(mode); }
        if (noise_level >= 0) { cfg.noise_level = noise_level; }
        cfg.seed = seed;
        cfg.workers = workers;
        if (max_evals >= 0) { cfg.max_evals = static_cast<std::size_t>(max_evals); }
        if (!phase1.empty()) { cfg.phase1_timeout = parse_duration(phase1); }
        if (!total.empty()) { cfg.total_timeout = parse_duration(total); }
        if (max_generations >= 0) { cfg.max_generations = static_cast<std::size_t>(max_generations); }
        if (pool_size >= 0) { cfg.pool_size = static_cast<std::size_t>(pool_size); }
        if (no_aux) { apply_config_text(cfg, "aux = off"); }
        if (!config.empty()) { apply_config_text(cfg, read_file(config)); }
        cfg.check();
        return cfg;
    }
};

std::vector<FeynmanTarget> feynman_targets(std::string const& path)
{
    return load_feynman_assets(path.empty() ? feynman_asset_path() : path);
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Quality-diversity symbolic regression with dimensional analysis"};
    app.require_subcommand(1);
    std::string assets;
    app.add_option("--equations", assets, "Feynman equations asset (default: $QDSR_ASSETS/feynman/equations.txt)");

    // run
    auto* run_cmd = app.add_subcommand("run", "evolve one dataset and report the verdict");
    RunFlags run_flags;
    run_flags.attach(run_cmd);
    std::string data_path, units_path, truth_path, truth_text, report_path, csv_path, feynman_id;
    std::size_t rows = 100000;
    run_cmd->add_option("--data", data_path, "whitespace-separated rows, target last");
    run_cmd->add_option("--units", units_path, "unit table with a TARGET row");
    run_cmd->add_option("--truth", truth_path, "file holding the ground-truth expression");
    run_cmd->add_option("--truth-expr", truth_text, "ground-truth expression text");
    run_cmd->add_option("--feynman", feynman_id, "generate data for a Feynman target instead of --data/--units");
    run_cmd->add_option("--rows", rows, "rows generated with --feynman");
    run_cmd->add_option("--report", report_path, "write the text report here; CSV goes to <report>.csv");
    run_cmd->add_option("--csv", csv_path, "per-generation CSV path");

    // bench
    auto* bench_cmd = app.add_subcommand("bench", "run a manifest of Feynman targets and summarize");
    RunFlags bench_flags;
    bench_flags.attach(bench_cmd);
    std::string manifest_path, bench_out;
    std::size_t bench_rows = 100000;
    bool bench_verbose = false;
    bench_cmd->add_option("--manifest", manifest_path, "lines 'target [mode] [seeds]'")->required();
    bench_cmd->add_option("--rows", bench_rows, "rows generated per run");
    bench_cmd->add_option("--out", bench_out, "write the summary table here");
    bench_cmd->add_flag("--verbose", bench_verbose, "print one line per run");

    // gen-pool
    auto* pool_cmd = app.add_subcommand("gen-pool", "generate an initial pool and print its statistics");
    std::string pool_units, pool_feynman, pool_out;
    std::size_t pool_n = 10000;
    std::uint64_t pool_seed = 0;
    bool pool_no_aux = false;
    pool_cmd->add_option("--units", pool_units, "unit table");
    pool_cmd->add_option("--feynman", pool_feynman, "use a Feynman target's unit table");
    pool_cmd->add_option("-n,--count", pool_n, "requests");
    pool_cmd->add_option("--seed", pool_seed, "seed");
    pool_cmd->add_option("--out", pool_out, "write one expression per line");
    pool_cmd->add_flag("--no-aux", pool_no_aux, "vocabulary without auxiliary variables");

    // verify
    auto* verify_cmd = app.add_subcommand("verify", "compare a candidate with a ground truth, or snap a constant");
    std::string v_units, v_feynman, v_candidate, v_truth, v_data;
    std::vector<double> v_params;
    double v_constant = 0;
    verify_cmd->add_option("--units", v_units, "unit table");
    verify_cmd->add_option("--feynman", v_feynman, "use a Feynman target's units, ranges and truth");
    verify_cmd->add_option("--data", v_data, "dataset supplying variable ranges");
    verify_cmd->add_option("--candidate", v_candidate, "candidate expression; A1, A2 ... are free scalars");
    verify_cmd->add_option("--truth", v_truth, "ground-truth expression");
    verify_cmd->add_option("--params", v_params, "values of A1, A2, ...");
    auto* snap_opt = verify_cmd->add_option("--constant", v_constant, "snap a single constant and exit");

    // make-data
    auto* data_cmd = app.add_subcommand("make-data", "sample a Feynman target into data, units and truth files");
    std::string md_id, md_prefix;
    std::size_t md_rows = 100000;
    std::uint64_t md_seed = 0;
    double md_noise = 0;
    data_cmd->add_option("--feynman", md_id, "target id")->required();
    data_cmd->add_option("--rows", md_rows, "rows");
    data_cmd->add_option("--seed", md_seed, "seed");
    data_cmd->add_option("--noise-level", md_noise, "noise added to the written target");
    data_cmd->add_option("--out", md_prefix, "prefix for <prefix>.dat, <prefix>.units, <prefix>.truth")->required();

    // export-feynman
    auto* export_cmd = app.add_subcommand("export-feynman", "list Feynman targets or write their unit tables");
    std::string ex_dir;
    export_cmd->add_option("--dir", ex_dir, "write <id>.units and <id>.truth files here");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*run_cmd) {
            auto cfg = run_flags.build();
            Dataset data;
            std::string truth = truth_text;
            std::string name;
            if (!feynman_id.empty()) {
                auto targets = feynman_targets(assets);
                auto const& t = find_target(targets, feynman_id);
                auto rng = make_stream(cfg.seed, 0xda7a);
                data = make_feynman_dataset(t, rows, rng);
                if (truth.empty()) { truth = t.truth; }
                name = t.id;
            } else {
                if (data_path.empty() || units_path.empty()) {
                    throw ConfigError("run needs --data and --units, or --feynman");
                }
                data = load_dataset(data_path, units_path);
                name = fs::path(data_path).stem().string();
            }
            if (!truth_path.empty()) { truth = first_line(read_file(truth_path)); }
            auto rep = run(cfg, data, truth, name);
            auto text = format_report(rep);
            std::cout << text;
            if (!report_path.empty()) {
                write_file(report_path, text);
                if (csv_path.empty()) { csv_path = report_path + ".csv"; }
            }
            if (!csv_path.empty()) { write_file(csv_path, format_history_csv(rep)); }
            return rep.verdict.recovered() ? 0 : 2;
        }

        if (*bench_cmd) {
            auto cfg = bench_flags.build();
            auto targets = feynman_targets(assets);
            auto manifest = parse_manifest(read_file(manifest_path));
            auto results = run_bench(manifest, targets, cfg, bench_rows, [&](RunReport const& r) {
                if (bench_verbose) {
                    std::cout << fmt::format("{:<10} {:<6} seed {:<3} {:<22} {:>8} evals {:>7.1f} s\n", r.target,
                        mode_name(r.mode), r.seed, verdict_name(r.verdict.kind), r.evaluations, r.wall_seconds);
                    std::cout.flush();
                }
            });
            auto table = format_bench(results);
            std::cout << table;
            if (!bench_out.empty()) { write_file(bench_out, table); }
            return 0;
        }

        if (*pool_cmd) {
            UnitTable units;
            if (!pool_feynman.empty()) {
                units = find_target(feynman_targets(assets), pool_feynman).units();
            } else if (!pool_units.empty()) {
                units = load_unit_table(pool_units);
            } else {
                throw ConfigError("gen-pool needs --units or --feynman");
            }
            auto flags = pool_no_aux ? VocabFlags::none() : VocabFlags{};
            auto vocab = build_vocabulary(units, flags);
            TreeGenerator gen(vocab);
            HyperSampler sampler;
            Rng rng(pool_seed);
            auto pool = generate_pool(pool_n, vocab.target_dim(), gen, sampler, rng);
            auto const& s = pool.stats;
            std::cout << fmt::format("requested {}  unique {}  duplicates {}  misses {}  uniqueness {:.4f}\n",
                s.requested, s.unique, s.duplicates, s.misses, s.uniqueness());
            std::cout << "length histogram:";
            for (auto const& [len, n] : s.length_histogram) { std::cout << fmt::format(" {}:{}", len, n); }
            std::cout << '\n';
            if (!pool_out.empty()) {
                std::string text;
                for (auto const& t : pool.trees) { text += to_string(t, vocab) + '\n'; }
                write_file(pool_out, text);
            }
            return 0;
        }

        if (*verify_cmd) {
            if (snap_opt->count() > 0) {
                auto snap = snap_constant(v_constant);
                std::cout << (snap ? snap->str() : std::string("no closed form")) << '\n';
                return snap ? 0 : 2;
            }
            UnitTable units;
            std::vector<std::pair<double, double>> ranges;
            std::string truth = v_truth;
            if (!v_feynman.empty()) {
                auto const& t = find_target(feynman_targets(assets), v_feynman);
                units = t.units();
                for (auto const& v : t.variables) { ranges.emplace_back(v.lo, v.hi); }
                if (truth.empty()) { truth = t.truth; }
            } else if (!v_units.empty()) {
                units = load_unit_table(v_units);
            } else {
                throw ConfigError("verify needs --units or --feynman");
            }
            if (!v_data.empty()) { ranges = load_dataset(v_data, v_units.empty() ? "" : v_units).ranges; }
            if (ranges.size() != units.entries.size()) {
                throw ConfigError("verify needs variable ranges: pass --data or --feynman");
            }
            if (v_candidate.empty() || truth.empty()) { throw ConfigError("verify needs --candidate and a truth"); }
            auto vocab = build_vocabulary(units, VocabFlags{});
            auto cand_tree = parse_expression(v_candidate, vocab);
            if (v_params.size() != cand_tree.scalar_slots()) {
                throw ConfigError(fmt::format("candidate has {} free scalars but {} params were given",
                    cand_tree.scalar_slots(), v_params.size()));
            }
            auto cand = make_candidate(cand_tree, vocab, v_params, 0.0);
            auto verdict = exact_match(cand, parse_expression(truth, vocab), vocab, ranges);
            std::cout << fmt::format("verdict    : {}\nsimplified : {}\nevidence   : {}\n",
                verdict_name(verdict.kind), verdict.simplified, verdict.evidence);
            return verdict.recovered() ? 0 : 2;
        }

        if (*data_cmd) {
            auto const& t = find_target(feynman_targets(assets), md_id);
            Rng rng(md_seed);
            auto data = make_feynman_dataset(t, md_rows, rng);
            if (md_noise > 0) { data.target = add_noise(data.target, md_noise, rng); }
            write_file(md_prefix + ".dat", format_dataset(data));
            write_file(md_prefix + ".units", format_unit_table(data.units));
            write_file(md_prefix + ".truth", t.truth + '\n');
            std::cout << fmt::format("wrote {}.dat ({} rows), {}.units, {}.truth\n", md_prefix, md_rows, md_prefix,
                md_prefix);
            return 0;
        }

        if (*export_cmd) {
            auto targets = feynman_targets(assets);
            std::size_t trivial = 0;
            if (!ex_dir.empty()) { fs::create_directories(ex_dir); }
            for (auto const& t : targets) {
                auto units = t.units();
                bool is_trivial = solve_trivial(units).has_value();
                trivial += is_trivial ? 1 : 0;
                std::cout << fmt::format("{:<10} {:<6} {:<8} {}\n", t.id, t.set, is_trivial ? "trivial" : "-", t.truth);
                if (!ex_dir.empty()) {
                    write_file(ex_dir + "/" + t.id + ".units", format_unit_table(units));
                    write_file(ex_dir + "/" + t.id + ".truth", t.truth + '\n');
                }
            }
            std::cout << fmt::format("{} targets, {} dimensionally trivial\n", targets.size(), trivial);
            return 0;
        }
    } catch (std::exception const& e) {
        std::cerr << "qdsr: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
