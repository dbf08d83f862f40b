#pragma once

#include <chrono>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "qdsr/dataset.hpp"
#include "qdsr/fitness.hpp"
#include "qdsr/genetics.hpp"
#include "qdsr/qdgrid.hpp"
#include "qdsr/recovery.hpp"
#include "qdsr/treegen.hpp"
#include "qdsr/vocab.hpp"

namespace qdsr {

/// main: DA and auxiliary leaves; ab0: no DA, no aux; ab1: DA without aux;
/// noise: main on noisy targets with Pareto-front refits on clean data.
enum class RunMode { Main, Ab0, Ab1, Noise };

std::string_view mode_name(RunMode m);
/// Throws ConfigError for unknown names.
RunMode parse_mode(std::string_view name);

using Duration = std::chrono::milliseconds;

/// Accepts "90", "90s", "15m", "6h", "250ms". Throws ConfigError.
Duration parse_duration(std::string_view text);
std::string format_duration(Duration d);

struct RunConfig {
    RunMode mode = RunMode::Main;
    double noise_level = 0.1; // read only in noise mode
    std::size_t batch_size = default_batch_size;
    std::size_t max_evals = 1'000'000;
    Duration phase1_timeout = std::chrono::hours(1);
    Duration total_timeout = std::chrono::hours(6);
    std::uint64_t seed = 0;
    unsigned workers = 1;
    VocabFlags vocab;
    GridConfig grid;
    SelectionConfig selection;
    GenHyper gen;
    std::size_t pool_size = 10'000;
    double train_ratio = 0.75;
    bool fast_path = true;
    /// 0 means unbounded; a deterministic stop for tests.
    std::size_t max_generations = 0;
    FitOptions fit;

    /// Vocabulary flags after the mode's overrides.
    [[nodiscard]] VocabFlags effective_vocab() const;
    /// Throws ConfigError describing the first inconsistency.
    void check() const;
};

/// 10^6 evaluations, 1 h phase 1, 6 h total.
RunConfig paper_profile();
/// 10^5 evaluations, 5 min phase 1, 15 min total.
RunConfig desk_profile();
/// Throws ConfigError for unknown names.
RunConfig profile_by_name(std::string_view name);

/// `key = value` lines overriding fields of cfg; '#' starts a comment.
/// Keys: mode, noise_level, batch_size, max_evals, phase1_timeout,
/// total_timeout, seed, workers, pool_size, train_ratio, fast_path,
/// max_generations, aux (on|off), max_len, max_nest.
void apply_config_text(RunConfig& cfg, std::string_view text);

struct GenerationRecord {
    std::size_t generation = 0;
    std::size_t evals = 0;
    double best_r2 = 0;
    std::size_t occupancy = 0;
    std::size_t front_size = 0;
    double seconds = 0;
};

/// One read of the clean target. Only the noise-mode refit step reads it.
struct CleanAccess {
    std::size_t generation = 0;
    std::string purpose;
    std::size_t rows = 0;
};

struct FalsePositive {
    std::string expression;
    std::size_t generation = 0;
    /// "extreme-constant" when a snapped or raw constant exceeds 10^4 in
    /// magnitude or falls below 10^-4, otherwise "structural".
    std::string category;
    std::string evidence;
};

struct FrontRow {
    int complexity = 0;
    double fitness = 0;
    std::string expression;
};

struct RunReport {
    std::string target;
    RunMode mode = RunMode::Main;
    std::uint64_t seed = 0;
    Verdict verdict;
    bool fast_path = false;
    bool early_stopped = false;
    /// Why the loop ended: "early-stop", "fast-path", "max-evals", "timeout",
    /// "max-generations" or "budget-zero".
    std::string stop_reason;
    std::optional<Candidate> best;
    std::string best_expression;
    double test_r2 = 0;
    std::size_t evaluations = 0;
    std::size_t refit_evaluations = 0;
    std::size_t generations = 0;
    double wall_seconds = 0;
    bool expanded = false;
    std::size_t grid_occupancy = 0;
    PoolStats pool;
    std::size_t vocabulary_size = 0;
    std::vector<FrontRow> front;
    std::vector<GenerationRecord> history;
    std::vector<CleanAccess> clean_log;
    std::vector<FalsePositive> false_positives;
};

/// Human-readable summary.
std::string format_report(RunReport const& r);
/// `generation,evals,best_r2,occupancy,front_size,seconds` rows with a header.
std::string format_history_csv(RunReport const& r);

/// Monomial A * prod x_i^q_i over the originals.
ExprTree monomial_tree(std::vector<Rational> const& exponents);

/// Full run. `truth` is infix text over the dataset's variable names; an empty
/// truth skips the verdict. Throws ConfigError or ParseError on inconsistent
/// inputs before any evolution starts.
RunReport run(RunConfig const& cfg, Dataset const& data, std::string const& truth, std::string target_name = {});

/// Feynman benchmark entry from the equations asset.
struct FeynmanVariable {
    std::string name;
    std::string dim_name;
    DimVector dim;
    double lo = 1;
    double hi = 5;
};

struct FeynmanTarget {
    std::string id;
    std::string set; // "main" or "bonus"
    std::string output_dim_name;
    DimVector output_dim;
    std::string truth;
    std::vector<FeynmanVariable> variables;

    [[nodiscard]] UnitTable units() const;
};

/// Throws ParseError naming the line.
std::vector<FeynmanTarget> parse_feynman_assets(std::string_view text);
std::vector<FeynmanTarget> load_feynman_assets(std::string const& path);
FeynmanTarget const& find_target(std::vector<FeynmanTarget> const& targets, std::string_view id);

/// Directory from QDSR_ASSETS, else the build-time default.
std::string asset_dir();
std::string feynman_asset_path();

/// Rows drawn uniformly over each variable's range; rows where the truth is
/// not finite are redrawn.
Dataset make_feynman_dataset(FeynmanTarget const& target, std::size_t rows, Rng& rng);

/// `target mode seeds` lines, e.g. "I.8.14 main 5"; '#' starts a comment.
struct BenchEntry {
    std::string target;
    RunMode mode = RunMode::Main;
    std::size_t seeds = 1;
};
std::vector<BenchEntry> parse_manifest(std::string_view text);

struct BenchResult {
    std::string target;
    RunMode mode = RunMode::Main;
    std::size_t runs = 0;
    std::size_t recovered = 0;
    std::size_t exact = 0;
    double seconds = 0;
};

/// Runs every entry with seeds 0..seeds-1 on freshly generated data.
std::vector<BenchResult> run_bench(std::vector<BenchEntry> const& manifest, std::vector<FeynmanTarget> const& targets,
    RunConfig const& base, std::size_t rows,
    std::function<void(RunReport const&)> const& on_run = {});

/// Per-target rows plus a recovery rate per mode.
std::string format_bench(std::vector<BenchResult> const& results);

} // namespace qdsr
