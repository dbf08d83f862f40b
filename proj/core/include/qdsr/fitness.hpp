#pragma once

#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <vector>

#include "qdsr/dataset.hpp"
#include "qdsr/expr.hpp"
#include "qdsr/qdgrid.hpp"
#include "qdsr/random.hpp"
#include "qdsr/vocab.hpp"

namespace qdsr {

inline constexpr std::size_t default_batch_size = 250;
inline constexpr double early_stop_threshold = 1.0 - 1e-14;

/// Rows of the dataset with every vocabulary column (originals, then aux).
struct Batch {
    std::vector<std::vector<double>> columns;
    std::vector<double> y;
    std::vector<std::size_t> rows;

    [[nodiscard]] std::size_t size() const { return y.size(); }
    [[nodiscard]] Columns view() const;
};

/// Batch over the given rows; aux columns are computed here.
Batch make_batch(Dataset const& data, Vocabulary const& vocab, std::vector<std::size_t> rows);

/// n distinct rows drawn uniformly. Throws std::invalid_argument unless 1 <= n <= rows.
Batch subsample(Dataset const& data, Vocabulary const& vocab, std::size_t n, Rng& rng);

/// n distinct indices from [0, total), in draw order.
std::vector<std::size_t> sample_rows(std::size_t total, std::size_t n, Rng& rng);

struct FitResult {
    std::vector<double> params;
    double r2 = -std::numeric_limits<double>::infinity();
    double nrmse = std::numeric_limits<double>::infinity();
    bool converged = false;
};

struct FitOptions {
    std::vector<double> starts{1.0, -1.0, 0.1, 10.0};
    double jitter = 0.1;
    int max_iterations = 60;
    /// Tried before the standard starts when its size matches the slot count.
    std::vector<double> warm_start;
};

/// RMSE(pred, truth) / std(truth), population standard deviation.
/// Throws DegenerateVarianceError when std(truth) == 0 or sizes differ or n < 2.
double nrmse(std::span<double const> pred, std::span<double const> truth);

/// 1 - SSE / SST. Same preconditions as nrmse.
double r2(std::span<double const> pred, std::span<double const> truth);

bool early_stop(double r2);
inline bool early_stop(FitResult const& fit) { return early_stop(fit.r2); }

/// Metrics of a fixed prediction. A constant target counts as a perfect fit
/// iff max|pred - y| <= 1e-12 (1 + |y|); otherwise r2 = -nrmse with nrmse
/// the RMSE scaled by 1 + |y|. Non-finite predictions give r2 = -inf.
FitResult score(std::span<double const> pred, std::span<double const> truth);

/// Multi-start Levenberg-Marquardt on the mean squared error.
FitResult fit_scalars(ExprTree const& tree, Batch const& batch, FitOptions const& opts, EvalScratch& scratch);
FitResult fit_scalars(ExprTree const& tree, Batch const& batch, FitOptions const& opts = {});

struct RefitOutcome {
    std::optional<Candidate> hit;
    std::size_t refits = 0;
};

/// Refits each front member on the clean batch, in front order, starting from
/// its current parameters; returns the first that meets early_stop.
RefitOutcome noisy_refit_step(std::vector<Candidate> const& front, Batch const& clean, Vocabulary const& vocab,
    FitOptions const& opts = {});
RefitOutcome noisy_refit_step(QDGrid const& grid, Batch const& clean, Vocabulary const& vocab,
    FitOptions const& opts = {});

} // namespace qdsr
