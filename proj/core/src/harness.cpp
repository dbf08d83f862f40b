#include "qdsr/harness.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <map>
#include <numeric>
#include <set>
#include <sstream>
#include <thread>
#include <unordered_set>

#include <fmt/format.h>

#include "qdsr/error.hpp"

#ifndef QDSR_DEFAULT_ASSET_DIR
#define QDSR_DEFAULT_ASSET_DIR "assets"
#endif

namespace qdsr {

std::string_view mode_name(RunMode m)
{
    switch (m) {
    case RunMode::Main: return "main";
    case RunMode::Ab0: return "ab0";
    case RunMode::Ab1: return "ab1";
    case RunMode::Noise: return "noise";
    }
    return "?";
}

RunMode parse_mode(std::string_view name)
{
    for (auto m : {RunMode::Main, RunMode::Ab0, RunMode::Ab1, RunMode::Noise}) {
        if (mode_name(m) == name) { return m; }
    }
    throw ConfigError(fmt::format("unknown mode '{}' (expected main, ab0, ab1 or noise)", name));
}

namespace {
    std::string_view trim(std::string_view s)
    {
        auto b = s.find_first_not_of(" \t\r\n");
        if (b == std::string_view::npos) { return {}; }
        auto e = s.find_last_not_of(" \t\r\n");
        return s.substr(b, e - b + 1);
    }

    std::vector<std::string_view> split_ws(std::string_view s)
    {
        std::vector<std::string_view> out;
        std::size_t i = 0;
        while (i < s.size()) {
            while (i < s.size() && std::isspace(static_cast<unsigned char>(s[i])) != 0) { ++i; }
            auto start = i;
            while (i < s.size() && std::isspace(static_cast<unsigned char>(s[i])) == 0) { ++i; }
            if (i > start) { out.push_back(s.substr(start, i - start)); }
        }
        return out;
    }

    template <typename T>
    T parse_number(std::string_view text, std::string_view what)
    {
        T v{};
        auto t = trim(text);
        auto [p, ec] = std::from_chars(t.data(), t.data() + t.size(), v);
        if (ec != std::errc{} || p != t.data() + t.size()) {
            throw ConfigError(fmt::format("bad value '{}' for {}", text, what));
        }
        return v;
    }

    double parse_real(std::string_view text, std::string_view what)
    {
        std::string s(trim(text));
        char* end = nullptr;
        double v = std::strtod(s.c_str(), &end);
        if (s.empty() || end != s.c_str() + s.size() || !std::isfinite(v)) {
            throw ConfigError(fmt::format("bad value '{}' for {}", text, what));
        }
        return v;
    }

    bool parse_switch(std::string_view text, std::string_view what)
    {
        auto t = trim(text);
        if (t == "on" || t == "true" || t == "1" || t == "yes") { return true; }
        if (t == "off" || t == "false" || t == "0" || t == "no") { return false; }
        throw ConfigError(fmt::format("bad value '{}' for {}", text, what));
    }
} // namespace

Duration parse_duration(std::string_view text)
{
    auto t = trim(text);
    auto unit_at = t.find_first_not_of("0123456789.");
    auto number = t.substr(0, unit_at);
    auto unit = unit_at == std::string_view::npos ? std::string_view{"s"} : t.substr(unit_at);
    if (number.empty()) { throw ConfigError(fmt::format("bad duration '{}'", text)); }
    double v = parse_real(number, "duration");
    double ms_per = 0;
    if (unit == "ms") {
        ms_per = 1;
    } else if (unit == "s") {
        ms_per = 1e3;
    } else if (unit == "m" || unit == "min") {
        ms_per = 60e3;
    } else if (unit == "h") {
        ms_per = 3600e3;
    } else {
        throw ConfigError(fmt::format("bad duration unit in '{}'", text));
    }
    return Duration(static_cast<Duration::rep>(std::llround(v * ms_per)));
}

std::string format_duration(Duration d)
{
    auto ms = d.count();
    if (ms % 3600000 == 0 && ms != 0) { return fmt::format("{}h", ms / 3600000); }
    if (ms % 60000 == 0 && ms != 0) { return fmt::format("{}m", ms / 60000); }
    if (ms % 1000 == 0) { return fmt::format("{}s", ms / 1000); }
    return fmt::format("{}ms", ms);
}

VocabFlags RunConfig::effective_vocab() const
{
    switch (mode) {
    case RunMode::Ab0: {
        auto f = VocabFlags::none();
        f.da_enabled = false;
        return f;
    }
    case RunMode::Ab1: return VocabFlags::none();
    default: return vocab;
    }
}

void RunConfig::check() const
{
    if (batch_size == 0) { throw ConfigError("batch_size must be positive"); }
    if (!(noise_level >= 0.0)) { throw ConfigError("noise_level must be non-negative"); }
    if (!(train_ratio > 0.0 && train_ratio < 1.0)) { throw ConfigError("train_ratio must lie in (0, 1)"); }
    if (workers == 0) { throw ConfigError("workers must be positive"); }
    if (!selection.valid()) { throw ConfigError("selection config is inconsistent"); }
    if (!gen.valid()) { throw ConfigError("generator hyperparameters are inconsistent"); }
    if (grid.max_len == 0 || grid.length_bin < 1 || grid.scalar_bin < 1 || grid.function_bin < 1
        || grid.variable_bin < 1) {
        throw ConfigError("grid bins and max_len must be positive");
    }
    if (phase1_timeout.count() < 0 || total_timeout.count() < 0) { throw ConfigError("timeouts must be >= 0"); }
}

RunConfig paper_profile() { return RunConfig{}; }

RunConfig desk_profile()
{
    RunConfig cfg;
    cfg.max_evals = 100'000;
    cfg.phase1_timeout = std::chrono::minutes(5);
    cfg.total_timeout = std::chrono::minutes(15);
    return cfg;
}

RunConfig profile_by_name(std::string_view name)
{
    if (name == "paper") { return paper_profile(); }
    if (name == "desk") { return desk_profile(); }
    throw ConfigError(fmt::format("unknown profile '{}' (expected desk or paper)", name));
}

void apply_config_text(RunConfig& cfg, std::string_view text)
{
    std::size_t line_no = 0;
    std::istringstream in{std::string(text)};
    std::string raw;
    while (std::getline(in, raw)) {
        ++line_no;
        std::string_view line = raw;
        if (auto hash = line.find('#'); hash != std::string_view::npos) { line = line.substr(0, hash); }
        line = trim(line);
        if (line.empty()) { continue; }
        auto eq = line.find('=');
        if (eq == std::string_view::npos) { throw ParseError(line_no, "expected 'key = value'"); }
        auto key = trim(line.substr(0, eq));
        auto value = trim(line.substr(eq + 1));
        try {
            if (key == "mode") {
                cfg.mode = parse_mode(value);
            } else if (key == "profile") {
                auto p = profile_by_name(value);
                cfg.max_evals = p.max_evals;
                cfg.phase1_timeout = p.phase1_timeout;
                cfg.total_timeout = p.total_timeout;
            } else if (key == "noise_level") {
                cfg.noise_level = parse_real(value, key);
            } else if (key == "batch_size") {
                cfg.batch_size = parse_number<std::size_t>(value, key);
            } else if (key == "max_evals") {
                cfg.max_evals = parse_number<std::size_t>(value, key);
            } else if (key == "phase1_timeout") {
                cfg.phase1_timeout = parse_duration(value);
            } else if (key == "total_timeout") {
                cfg.total_timeout = parse_duration(value);
            } else if (key == "seed") {
                cfg.seed = parse_number<std::uint64_t>(value, key);
            } else if (key == "workers") {
                cfg.workers = parse_number<unsigned>(value, key);
            } else if (key == "pool_size") {
                cfg.pool_size = parse_number<std::size_t>(value, key);
            } else if (key == "train_ratio") {
                cfg.train_ratio = parse_real(value, key);
            } else if (key == "fast_path") {
                cfg.fast_path = parse_switch(value, key);
            } else if (key == "max_generations") {
                cfg.max_generations = parse_number<std::size_t>(value, key);
            } else if (key == "aux") {
                bool on = parse_switch(value, key);
                cfg.vocab.aux_ratios = on;
                cfg.vocab.aux_ratio_products = on;
                cfg.vocab.aux_norms = on;
                cfg.vocab.aux_scalar_products = on;
            } else if (key == "max_len") {
                cfg.grid.max_len = parse_number<std::size_t>(value, key);
            } else if (key == "max_nest") {
                cfg.gen.max_nest = parse_number<int>(value, key);
            } else {
                throw ConfigError(fmt::format("unknown key '{}'", key));
            }
        } catch (ConfigError const& e) {
            throw ParseError(line_no, e.what());
        }
    }
}

std::string format_report(RunReport const& r)
{
    std::string out;
    out += fmt::format("target       : {}\n", r.target.empty() ? "(unnamed)" : r.target);
    out += fmt::format("mode         : {}\n", mode_name(r.mode));
    out += fmt::format("seed         : {}\n", r.seed);
    out += fmt::format("verdict      : {}\n", verdict_name(r.verdict.kind));
    if (!r.verdict.simplified.empty()) { out += fmt::format("simplified   : {}\n", r.verdict.simplified); }
    if (!r.verdict.evidence.empty()) { out += fmt::format("evidence     : {}\n", r.verdict.evidence); }
    out += fmt::format("best         : {}\n", r.best_expression.empty() ? "(none)" : r.best_expression);
    if (r.best) { out += fmt::format("best fitness : {:.17g} (complexity {})\n", r.best->fitness, r.best->complexity); }
    out += fmt::format("test r2      : {:.17g}\n", r.test_r2);
    out += fmt::format("stop reason  : {}\n", r.stop_reason);
    out += fmt::format("fast path    : {}\n", r.fast_path ? "yes" : "no");
    out += fmt::format("evaluations  : {} (+{} clean refits)\n", r.evaluations, r.refit_evaluations);
    out += fmt::format("generations  : {}\n", r.generations);
    out += fmt::format("wall time    : {:.3f} s\n", r.wall_seconds);
    out += fmt::format("grid         : {} cells{}\n", r.grid_occupancy, r.expanded ? ", expanded" : "");
    out += fmt::format("vocabulary   : {} column leaves\n", r.vocabulary_size);
    out += fmt::format("initial pool : {} requested, {} unique, {} misses (uniqueness {:.3f})\n", r.pool.requested, r.pool.unique,
        r.pool.misses, r.pool.uniqueness());
    if (!r.front.empty()) {
        out += fmt::format("\nPareto front\n{:>10}  {:>22}  {}\n", "complexity", "fitness", "expression");
        for (auto const& row : r.front) { out += fmt::format("{:>10}  {:>22.17g}  {}\n", row.complexity, row.fitness, row.expression); }
    }
    if (!r.false_positives.empty()) {
        out += fmt::format("\nFalse positives\n");
        for (auto const& fp : r.false_positives) {
            out += fmt::format("  gen {:>5}  {:<16}  {}\n", fp.generation, fp.category, fp.expression);
        }
    }
    if (!r.clean_log.empty()) {
        out += fmt::format("\nClean-data accesses: {}\n", r.clean_log.size());
        std::map<std::string, std::size_t> by_purpose;
        for (auto const& a : r.clean_log) { ++by_purpose[a.purpose]; }
        for (auto const& [p, n] : by_purpose) { out += fmt::format("  {:<12} {}\n", p, n); }
    }
    return out;
}

std::string format_history_csv(RunReport const& r)
{
    std::string out = "generation,evals,best_r2,occupancy,front_size,seconds\n";
    for (auto const& h : r.history) {
        out += fmt::format("{},{},{:.17g},{},{},{:.3f}\n", h.generation, h.evals, h.best_r2, h.occupancy,
            h.front_size, h.seconds);
    }
    return out;
}

ExprTree monomial_tree(std::vector<Rational> const& exponents)
{
    std::vector<Node> nodes;
    std::vector<std::vector<Node>> factors;
    for (std::size_t i = 0; i < exponents.size(); ++i) {
        auto const& q = exponents[i];
        if (q.is_zero()) { continue; }
        if (q == Rational(1)) {
            factors.push_back({Node::var(i)});
        } else {
            factors.push_back({Node::make(Op::Pow), Node::var(i), Node::constant(q.to_double())});
        }
    }
    // left-leaning product A * f1 * f2 ... in prefix order
    for (std::size_t i = 0; i < factors.size(); ++i) { nodes.push_back(Node::make(Op::Mul)); }
    nodes.push_back(Node::scalar());
    // prefix of ((A * f1) * f2): Mul Mul A f1 f2
    for (auto const& f : factors) { nodes.insert(nodes.end(), f.begin(), f.end()); }
    ExprTree t(std::move(nodes));
    t.renumber_scalars();
    return t;
}

namespace {
    using Clock = std::chrono::steady_clock;

    double seconds_since(Clock::time_point t0)
    {
        return std::chrono::duration<double>(Clock::now() - t0).count();
    }

    /// Clean training targets in noise mode. Every read is logged with its purpose.
    class CleanTarget {
    public:
        explicit CleanTarget(std::vector<double> y) : y_(std::move(y)) {}

        Batch refit_batch(Batch const& noisy, std::size_t generation, std::vector<CleanAccess>& log) const
        {
            log.push_back({generation, "refit", noisy.rows.size()});
            Batch b = noisy;
            for (std::size_t i = 0; i < b.rows.size(); ++i) { b.y[i] = y_[b.rows[i]]; }
            return b;
        }

    private:
        std::vector<double> y_;
    };

    struct Evaluated {
        ExprTree tree;
        FitResult fit;
    };

    std::vector<Evaluated> fit_all(std::vector<ExprTree> trees, Batch const& batch, FitOptions const& opts,
        unsigned workers)
    {
        std::vector<Evaluated> out(trees.size());
        auto work = [&](std::atomic<std::size_t>& next) {
            EvalScratch scratch;
            for (auto i = next.fetch_add(1); i < trees.size(); i = next.fetch_add(1)) {
                out[i].fit = fit_scalars(trees[i], batch, opts, scratch);
                out[i].tree = std::move(trees[i]);
            }
        };
        std::atomic<std::size_t> next{0};
        auto n = std::min<std::size_t>(workers, std::max<std::size_t>(1, trees.size()));
        if (n <= 1) {
            work(next);
            return out;
        }
        std::vector<std::jthread> pool;
        pool.reserve(n);
        for (std::size_t w = 0; w < n; ++w) { pool.emplace_back([&] { work(next); }); }
        pool.clear(); // joins
        return out;
    }

    std::string false_positive_category(std::vector<double> const& params)
    {
        for (double p : params) {
            double a = std::abs(p);
            if (a > 1e4 || (a > 0.0 && a < 1e-4)) { return "extreme-constant"; }
        }
        return "structural";
    }

    double test_score(Candidate const& c, Dataset const& test, Vocabulary const& vocab)
    {
        if (test.rows() == 0) { return std::numeric_limits<double>::quiet_NaN(); }
        std::vector<std::size_t> rows(test.rows());
        std::iota(rows.begin(), rows.end(), 0);
        auto batch = make_batch(test, vocab, rows);
        auto pred = evaluate(c.tree, batch.view(), c.params);
        return score(pred, batch.y).r2;
    }

    void check_inputs(Dataset const& data)
    {
        if (data.variables() != data.units.entries.size()) {
            throw ConfigError(fmt::format("dataset has {} variables but the unit table lists {}", data.variables(),
                data.units.entries.size()));
        }
        for (std::size_t i = 0; i < data.variables(); ++i) {
            if (data.columns[i].size() != data.rows()) {
                throw ConfigError(fmt::format("column '{}' has {} rows, target has {}", data.names[i],
                    data.columns[i].size(), data.rows()));
            }
        }
        if (data.rows() < 2) { throw ConfigError("dataset needs at least 2 rows"); }
    }
} // namespace

RunReport run(RunConfig const& cfg, Dataset const& data, std::string const& truth, std::string target_name)
{
    auto const t0 = Clock::now();
    cfg.check();
    check_inputs(data);

    RunReport rep;
    rep.target = std::move(target_name);
    rep.mode = cfg.mode;
    rep.seed = cfg.seed;

    // independent streams so that changing one stage does not shift the others
    auto split_rng = make_stream(cfg.seed, 0);
    auto noise_rng = make_stream(cfg.seed, 1);
    auto batch_rng = make_stream(cfg.seed, 2);
    auto pool_rng = make_stream(cfg.seed, 3);
    auto var_rng = make_stream(cfg.seed, 4);

    Dataset observed = data;
    std::optional<CleanTarget> clean;
    if (cfg.mode == RunMode::Noise) { observed.target = add_noise(data.target, cfg.noise_level, noise_rng); }
    auto split_copy = split_rng;
    auto [train, test] = split_train_test(observed, cfg.train_ratio, split_rng);
    if (train.rows() < 2) {
        train = observed;
        test = Dataset{};
    }
    if (cfg.mode == RunMode::Noise) {
        // same partition as the observed split, clean values kept aside
        auto clean_split = split_train_test(data, cfg.train_ratio, split_copy).first;
        clean.emplace(train.rows() == clean_split.rows() ? clean_split.target : data.target);
    }

    auto vocab = build_vocabulary(train.units, cfg.effective_vocab());
    rep.vocabulary_size = vocab.variables().size();

    std::optional<ExprTree> truth_tree;
    if (!truth.empty()) {
        truth_tree = parse_expression(truth, vocab);
        if (auto v = infer_dims(*truth_tree, vocab)) {
            throw ConfigError(fmt::format("ground truth is inconsistent with the unit table: {}", v->rule));
        }
        if (!(truth_tree->root().dim == vocab.target_dim())) {
            throw ConfigError(fmt::format("ground truth has dimension {} but the target is {}",
                truth_tree->root().dim.str(), vocab.target_dim().str()));
        }
    }
    auto const& ranges = data.ranges;
    auto const batch_n = std::min(cfg.batch_size, train.rows());

    auto judge = [&](Candidate const& c) {
        if (!truth_tree) {
            Verdict v;
            v.evidence = "no ground truth supplied";
            v.simplified = to_string(simplify(c.tree, vocab, c.params), vocab);
            return v;
        }
        return exact_match(c, *truth_tree, vocab, ranges);
    };
    auto finish = [&](std::string reason) {
        rep.stop_reason = std::move(reason);
        if (rep.best) {
            rep.best_expression = to_string(rep.best->tree, vocab);
            rep.test_r2 = test_score(*rep.best, test, vocab);
        }
        rep.wall_seconds = seconds_since(t0);
        return rep;
    };

    // (0) dimensionally trivial targets
    if (cfg.fast_path && vocab.flags().da_enabled && cfg.max_evals > 0) {
        if (auto mono = solve_trivial(vocab.units())) {
            auto tree = monomial_tree(*mono);
            auto batch = subsample(train, vocab, batch_n, batch_rng);
            auto fit = fit_scalars(tree, batch, cfg.fit);
            rep.evaluations = 1;
            if (std::isfinite(fit.r2)) {
                auto cand = make_candidate(tree, vocab, fit.params, fit.r2);
                auto verdict = judge(cand);
                if (verdict.recovered() || !truth_tree) {
                    rep.fast_path = true;
                    rep.early_stopped = early_stop(fit);
                    rep.verdict = std::move(verdict);
                    rep.best = std::move(cand);
                    rep.front.push_back({rep.best->complexity, rep.best->fitness, to_string(tree, vocab)});
                    return finish("fast-path");
                }
            }
        }
    }

    // (1)-(2) vocabulary is built; initial pool
    TreeGenerator gen(vocab);
    GenHyper hyper = cfg.gen;
    hyper.max_len = cfg.grid.max_len;
    HyperSampler sampler(hyper);
    auto pool = generate_pool(cfg.pool_size, vocab.target_dim(), gen, sampler, pool_rng);
    rep.pool = pool.stats;
    if (cfg.max_evals == 0) { return finish("budget-zero"); }

    QDGrid grid(cfg.grid);
    TreeLimits limits{cfg.grid.max_len, cfg.gen.max_nest};
    std::vector<ExprTree> population = std::move(pool.trees);
    std::unordered_set<std::string> rejected; // early-stopped keys that failed the verdict
    std::optional<Candidate> success;
    std::string reason;

    for (std::size_t generation = 0;; ++generation) {
        auto elapsed = Clock::now() - t0;
        if (elapsed >= cfg.total_timeout) {
            reason = "timeout";
            break;
        }
        if (!rep.expanded && elapsed >= cfg.phase1_timeout) {
            grid = expand_grid(grid);
            limits.max_len = grid.config().max_len;
            rep.expanded = true;
        }

        auto batch = subsample(train, vocab, batch_n, batch_rng);

        // one fit per distinct expression on this batch, within the remaining budget
        std::vector<ExprTree> unique;
        std::unordered_set<std::string> seen;
        auto remaining = cfg.max_evals - rep.evaluations;
        for (auto& t : population) {
            if (unique.size() >= remaining) { break; }
            if (seen.insert(to_string(t, vocab)).second) { unique.push_back(std::move(t)); }
        }
        auto evaluated = fit_all(std::move(unique), batch, cfg.fit, cfg.workers);
        rep.evaluations += evaluated.size();

        std::vector<Candidate> cands;
        cands.reserve(evaluated.size());
        for (auto& e : evaluated) {
            if (!std::isfinite(e.fit.r2)) { continue; }
            cands.push_back(make_candidate(std::move(e.tree), vocab, std::move(e.fit.params), e.fit.r2));
        }

        if (cfg.mode != RunMode::Noise) {
            std::vector<Candidate const*> hits;
            for (auto const& c : cands) {
                if (early_stop(c.fitness)) { hits.push_back(&c); }
            }
            std::stable_sort(hits.begin(), hits.end(), [](auto* a, auto* b) {
                return std::pair(a->complexity, a->tree.length()) < std::pair(b->complexity, b->tree.length());
            });
            for (auto const* h : hits) {
                auto key = to_string(h->tree, vocab);
                if (rejected.contains(key)) { continue; }
                auto verdict = judge(*h);
                if (verdict.recovered() || !truth_tree) {
                    rep.verdict = std::move(verdict);
                    success = *h;
                    break;
                }
                rejected.insert(key);
                rep.false_positives.push_back(
                    {key, generation, false_positive_category(h->params), verdict.evidence});
            }
        }

        for (auto& c : cands) { grid.insert(std::move(c)); }

        auto front = pareto_front(grid);
        if (!success && cfg.mode == RunMode::Noise && !front.empty()) {
            std::erase_if(front, [&](Candidate const& c) { return rejected.contains(to_string(c.tree, vocab)); });
            auto clean_batch = clean->refit_batch(batch, generation, rep.clean_log);
            auto refit = noisy_refit_step(front, clean_batch, vocab, cfg.fit);
            rep.refit_evaluations += refit.refits;
            if (refit.hit) {
                auto key = to_string(refit.hit->tree, vocab);
                auto verdict = judge(*refit.hit);
                if (verdict.recovered() || !truth_tree) {
                    rep.verdict = std::move(verdict);
                    success = std::move(refit.hit);
                } else {
                    rejected.insert(key);
                    rep.false_positives.push_back(
                        {key, generation, false_positive_category(refit.hit->params), verdict.evidence});
                }
            }
            front = pareto_front(grid);
        }

        double best_r2 = -std::numeric_limits<double>::infinity();
        for (auto const& [cell, c] : grid.cells()) { best_r2 = std::max(best_r2, c.fitness); }
        rep.history.push_back(
            {generation, rep.evaluations, best_r2, grid.size(), front.size(), seconds_since(t0)});
        rep.generations = generation + 1;

        if (success) {
            rep.early_stopped = true;
            reason = "early-stop";
            break;
        }
        if (rep.evaluations >= cfg.max_evals) {
            reason = "max-evals";
            break;
        }
        if (cfg.max_generations != 0 && rep.generations >= cfg.max_generations) {
            reason = "max-generations";
            break;
        }

        if (grid.empty()) {
            population = generate_pool(cfg.pool_size, vocab.target_dim(), gen, sampler, pool_rng).trees;
        } else {
            auto kids = next_generation(grid, gen, cfg.selection, limits, var_rng);
            population.clear();
            population.reserve(kids.size());
            for (auto& k : kids) { population.push_back(std::move(k.tree)); }
        }
    }

    rep.grid_occupancy = grid.size();
    for (auto const& c : pareto_front(grid)) {
        rep.front.push_back({c.complexity, c.fitness, to_string(c.tree, vocab)});
    }

    if (success) {
        rep.best = std::move(success);
        return finish(reason);
    }

    // (6) final verdict over the front, most accurate first
    auto front = pareto_front(grid);
    std::stable_sort(front.begin(), front.end(),
        [](Candidate const& a, Candidate const& b) { return a.fitness > b.fitness; });
    if (!front.empty()) { rep.best = front.front(); }
    if (truth_tree) {
        for (auto const& c : front) {
            auto v = judge(c);
            if (v.recovered()) {
                rep.verdict = std::move(v);
                rep.best = c;
                break;
            }
        }
        if (!rep.verdict.recovered() && rep.best) { rep.verdict = judge(*rep.best); }
    }
    return finish(reason);
}

UnitTable FeynmanTarget::units() const
{
    UnitTable u;
    for (auto const& v : variables) { u.entries.push_back({v.name, v.dim}); }
    u.target_dim = output_dim;
    return u;
}

std::vector<FeynmanTarget> parse_feynman_assets(std::string_view text)
{
    std::map<std::string, DimVector, std::less<>> dims;
    std::vector<FeynmanTarget> out;
    std::istringstream in{std::string(text)};
    std::string raw;
    std::size_t line_no = 0;
    auto lookup = [&](std::string_view name) -> DimVector const& {
        auto it = dims.find(name);
        if (it == dims.end()) { throw ParseError(line_no, fmt::format("unknown dimension '{}'", name)); }
        return it->second;
    };
    while (std::getline(in, raw)) {
        ++line_no;
        auto line = trim(raw);
        if (line.empty() || line.front() == '#') { continue; }
        if (line.starts_with("@dim")) {
            auto parts = split_ws(line.substr(4));
            if (parts.size() < 2) { throw ParseError(line_no, "expected '@dim name e1 ... ek'"); }
            std::vector<Rational> e;
            try {
                for (std::size_t i = 1; i < parts.size(); ++i) { e.push_back(Rational::parse(parts[i])); }
            } catch (std::exception const& ex) {
                throw ParseError(line_no, ex.what());
            }
            if (!dims.empty() && dims.begin()->second.size() != e.size()) {
                throw ParseError(line_no, "dimension has a different number of base units");
            }
            dims.emplace(std::string(parts[0]), DimVector(std::move(e)));
            continue;
        }
        std::vector<std::string_view> fields;
        for (std::size_t start = 0;;) {
            auto bar = line.find('|', start);
            fields.push_back(trim(line.substr(start, bar == std::string_view::npos ? bar : bar - start)));
            if (bar == std::string_view::npos) { break; }
            start = bar + 1;
        }
        if (fields.size() != 5) { throw ParseError(line_no, fmt::format("expected 5 fields, got {}", fields.size())); }
        FeynmanTarget t;
        t.id = fields[0];
        t.set = fields[1];
        t.output_dim_name = fields[2];
        t.output_dim = lookup(fields[2]);
        t.truth = fields[3];
        for (auto spec : split_ws(fields[4])) {
            std::vector<std::string_view> p;
            for (std::size_t start = 0;;) {
                auto colon = spec.find(':', start);
                p.push_back(spec.substr(start, colon == std::string_view::npos ? colon : colon - start));
                if (colon == std::string_view::npos) { break; }
                start = colon + 1;
            }
            if (p.size() != 4) { throw ParseError(line_no, fmt::format("bad variable spec '{}'", spec)); }
            FeynmanVariable v;
            v.name = p[0];
            v.dim_name = p[1];
            v.dim = lookup(p[1]);
            try {
                v.lo = parse_real(p[2], "range");
                v.hi = parse_real(p[3], "range");
            } catch (ConfigError const& e) {
                throw ParseError(line_no, e.what());
            }
            if (!(v.lo < v.hi)) { throw ParseError(line_no, fmt::format("empty range for '{}'", v.name)); }
            t.variables.push_back(std::move(v));
        }
        if (t.variables.empty()) { throw ParseError(line_no, "target without variables"); }
        out.push_back(std::move(t));
    }
    return out;
}

std::vector<FeynmanTarget> load_feynman_assets(std::string const& path)
{
    std::ifstream f(path);
    if (!f) { throw ConfigError(fmt::format("cannot open '{}'", path)); }
    std::stringstream ss;
    ss << f.rdbuf();
    return parse_feynman_assets(ss.str());
}

FeynmanTarget const& find_target(std::vector<FeynmanTarget> const& targets, std::string_view id)
{
    auto it = std::find_if(targets.begin(), targets.end(), [&](auto const& t) { return t.id == id; });
    if (it == targets.end()) { throw ConfigError(fmt::format("unknown target '{}'", id)); }
    return *it;
}

std::string asset_dir()
{
    if (auto const* env = std::getenv("QDSR_ASSETS"); env != nullptr && *env != '\0') { return env; }
    return QDSR_DEFAULT_ASSET_DIR;
}

std::string feynman_asset_path() { return asset_dir() + "/feynman/equations.txt"; }

Dataset make_feynman_dataset(FeynmanTarget const& target, std::size_t rows, Rng& rng)
{
    auto units = target.units();
    auto vocab = build_vocabulary(units, VocabFlags::none());
    auto truth = parse_expression(target.truth, vocab);

    Dataset d;
    d.units = units;
    for (auto const& v : target.variables) { d.names.push_back(v.name); }
    d.columns.assign(target.variables.size(), std::vector<double>(rows));
    d.target.resize(rows);
    std::vector<double> x(target.variables.size());
    constexpr int redraw_cap = 1000;
    for (std::size_t r = 0; r < rows; ++r) {
        int attempts = 0;
        double y = 0;
        do {
            if (++attempts > redraw_cap) {
                throw ConfigError(fmt::format("{}: ground truth is not finite over the sampling ranges", target.id));
            }
            for (std::size_t i = 0; i < x.size(); ++i) {
                auto const& v = target.variables[i];
                x[i] = std::uniform_real_distribution<double>(v.lo, v.hi)(rng);
            }
            y = evaluate_point<double>(truth, x, {});
        } while (!std::isfinite(y));
        for (std::size_t i = 0; i < x.size(); ++i) { d.columns[i][r] = x[i]; }
        d.target[r] = y;
    }
    d.compute_ranges();
    return d;
}

std::vector<BenchEntry> parse_manifest(std::string_view text)
{
    std::vector<BenchEntry> out;
    std::istringstream in{std::string(text)};
    std::string raw;
    std::size_t line_no = 0;
    while (std::getline(in, raw)) {
        ++line_no;
        std::string_view line = raw;
        if (auto hash = line.find('#'); hash != std::string_view::npos) { line = line.substr(0, hash); }
        auto parts = split_ws(line);
        if (parts.empty()) { continue; }
        if (parts.size() > 3) { throw ParseError(line_no, "expected 'target [mode] [seeds]'"); }
        BenchEntry e;
        e.target = parts[0];
        try {
            if (parts.size() > 1) { e.mode = parse_mode(parts[1]); }
            if (parts.size() > 2) { e.seeds = parse_number<std::size_t>(parts[2], "seeds"); }
        } catch (ConfigError const& ex) {
            throw ParseError(line_no, ex.what());
        }
        out.push_back(std::move(e));
    }
    return out;
}

std::vector<BenchResult> run_bench(std::vector<BenchEntry> const& manifest, std::vector<FeynmanTarget> const& targets,
    RunConfig const& base, std::size_t rows, std::function<void(RunReport const&)> const& on_run)
{
    std::vector<BenchResult> out;
    for (auto const& e : manifest) {
        auto const& target = find_target(targets, e.target);
        BenchResult res{e.target, e.mode, 0, 0, 0, 0.0};
        for (std::size_t s = 0; s < e.seeds; ++s) {
            auto data_rng = make_stream(base.seed + s, 0xda7a);
            auto data = make_feynman_dataset(target, rows, data_rng);
            auto cfg = base;
            cfg.mode = e.mode;
            cfg.seed = base.seed + s;
            auto rep = run(cfg, data, target.truth, target.id);
            ++res.runs;
            if (rep.verdict.recovered()) { ++res.recovered; }
            if (rep.verdict.kind == VerdictKind::Exact) { ++res.exact; }
            res.seconds += rep.wall_seconds;
            if (on_run) { on_run(rep); }
        }
        out.push_back(res);
    }
    return out;
}

std::string format_bench(std::vector<BenchResult> const& results)
{
    std::string out = fmt::format("{:<12} {:<6} {:>5} {:>9} {:>6} {:>8} {:>10}\n", "target", "mode", "runs",
        "recovered", "exact", "rate", "seconds");
    std::map<RunMode, std::pair<std::size_t, std::size_t>> per_mode;
    for (auto const& r : results) {
        double rate = r.runs == 0 ? 0.0 : 100.0 * static_cast<double>(r.recovered) / static_cast<double>(r.runs);
        out += fmt::format("{:<12} {:<6} {:>5} {:>9} {:>6} {:>7.1f}% {:>10.1f}\n", r.target, mode_name(r.mode),
            r.runs, r.recovered, r.exact, rate, r.seconds);
        per_mode[r.mode].first += r.recovered;
        per_mode[r.mode].second += r.runs;
    }
    out += "\nrecovery rate per mode\n";
    for (auto const& [mode, counts] : per_mode) {
        double rate = counts.second == 0 ? 0.0
                                         : 100.0 * static_cast<double>(counts.first) / static_cast<double>(counts.second);
        out += fmt::format("{:<6} {:>7.1f}% ({} / {})\n", mode_name(mode), rate, counts.first, counts.second);
    }
    return out;
}

} // namespace qdsr
