#include "qdsr/fitness.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <unordered_set>

#include <Eigen/Dense>

#include "qdsr/error.hpp"

namespace qdsr {

Columns Batch::view() const
{
    Columns cols;
    cols.reserve(columns.size());
    for (auto const& c : columns) { cols.emplace_back(c); }
    return cols;
}

Batch make_batch(Dataset const& data, Vocabulary const& vocab, std::vector<std::size_t> rows)
{
    Batch b;
    auto const n = rows.size();
    auto const& vars = vocab.variables();
    b.columns.assign(vars.size(), std::vector<double>(n));
    b.y.resize(n);
    std::vector<double> x(data.variables());
    for (std::size_t r = 0; r < n; ++r) {
        auto row = rows[r];
        for (std::size_t v = 0; v < x.size(); ++v) { x[v] = data.columns[v][row]; }
        for (std::size_t v = 0; v < vocab.original_count(); ++v) { b.columns[v][r] = x[v]; }
        for (std::size_t v = vocab.original_count(); v < vars.size(); ++v) {
            b.columns[v][r] = aux_value<double>(*vars[v].definition, x);
        }
        b.y[r] = data.target[row];
    }
    b.rows = std::move(rows);
    return b;
}

std::vector<std::size_t> sample_rows(std::size_t total, std::size_t n, Rng& rng)
{
    if (n == 0 || n > total) {
        throw std::invalid_argument("subsample size must lie in [1, dataset rows]");
    }
    std::vector<std::size_t> out;
    out.reserve(n);
    if (n * 4 >= total) {
        // partial Fisher-Yates
        std::vector<std::size_t> idx(total);
        std::iota(idx.begin(), idx.end(), 0);
        for (std::size_t i = 0; i < n; ++i) {
            auto j = i + uniform_index(rng, total - i);
            std::swap(idx[i], idx[j]);
            out.push_back(idx[i]);
        }
        return out;
    }
    std::unordered_set<std::size_t> seen;
    while (out.size() < n) {
        auto r = uniform_index(rng, total);
        if (seen.insert(r).second) { out.push_back(r); }
    }
    return out;
}

Batch subsample(Dataset const& data, Vocabulary const& vocab, std::size_t n, Rng& rng)
{
    return make_batch(data, vocab, sample_rows(data.rows(), n, rng));
}

namespace {
    struct Moments {
        double sse = 0.0;
        double sst = 0.0;
        double max_abs = 0.0;
        double mean = 0.0;
        bool finite = true;
    };

    Moments moments(std::span<double const> pred, std::span<double const> truth)
    {
        Moments m;
        auto const n = truth.size();
        m.mean = std::accumulate(truth.begin(), truth.end(), 0.0) / static_cast<double>(n);
        for (std::size_t i = 0; i < n; ++i) {
            double e = pred[i] - truth[i];
            if (!std::isfinite(pred[i])) { m.finite = false; }
            m.sse += e * e;
            m.max_abs = std::max(m.max_abs, std::abs(e));
            double d = truth[i] - m.mean;
            m.sst += d * d;
        }
        return m;
    }

    Moments checked_moments(std::span<double const> pred, std::span<double const> truth)
    {
        if (pred.size() != truth.size() || truth.size() < 2) {
            throw DegenerateVarianceError("metrics need matching sizes of at least 2");
        }
        auto m = moments(pred, truth);
        if (m.sst == 0.0) { throw DegenerateVarianceError("target has zero variance"); }
        return m;
    }
} // namespace

double nrmse(std::span<double const> pred, std::span<double const> truth)
{
    auto m = checked_moments(pred, truth);
    return std::sqrt(m.sse / m.sst);
}

double r2(std::span<double const> pred, std::span<double const> truth)
{
    auto m = checked_moments(pred, truth);
    return 1.0 - m.sse / m.sst;
}

bool early_stop(double r2) { return r2 >= early_stop_threshold; }

FitResult score(std::span<double const> pred, std::span<double const> truth)
{
    FitResult f;
    if (truth.empty() || pred.size() != truth.size()) { return f; }
    auto m = moments(pred, truth);
    if (!m.finite || !std::isfinite(m.sse)) { return f; }
    f.converged = true;
    if (m.sst == 0.0) {
        double scale = 1.0 + std::abs(m.mean);
        if (m.max_abs <= 1e-12 * scale) {
            f.r2 = 1.0;
            f.nrmse = 0.0;
        } else {
            f.nrmse = std::sqrt(m.sse / static_cast<double>(truth.size())) / scale;
            f.r2 = -f.nrmse;
        }
        return f;
    }
    f.r2 = 1.0 - m.sse / m.sst;
    f.nrmse = std::sqrt(m.sse / m.sst);
    return f;
}

namespace {
    class LeastSquares {
    public:
        LeastSquares(ExprTree const& tree, Batch const& batch, EvalScratch& scratch)
            : tree_(tree), cols_(batch.view()), y_(batch.y), scratch_(scratch), pred_(batch.size())
        {
        }

        /// Residuals pred - y; false when any is non-finite.
        bool residual(Eigen::VectorXd const& theta, Eigen::VectorXd& r)
        {
            scratch_.reset();
            evaluate(tree_, cols_, std::span<double const>(theta.data(), static_cast<std::size_t>(theta.size())),
                pred_, scratch_);
            r.resize(static_cast<Eigen::Index>(y_.size()));
            for (std::size_t i = 0; i < y_.size(); ++i) {
                r[static_cast<Eigen::Index>(i)] = pred_[i] - y_[i];
                if (!std::isfinite(r[static_cast<Eigen::Index>(i)])) { return false; }
            }
            return true;
        }

        /// Levenberg-Marquardt from theta; returns the final sum of squares (inf on failure).
        double solve(Eigen::VectorXd& theta, int max_iterations, double sst)
        {
            auto const n = static_cast<Eigen::Index>(y_.size());
            auto const k = theta.size();
            Eigen::VectorXd r;
            Eigen::VectorXd rn;
            if (!residual(theta, r)) { return std::numeric_limits<double>::infinity(); }
            double cost = r.squaredNorm();
            double lambda = 1e-3;
            Eigen::MatrixXd jac(n, k);
            Eigen::MatrixXd aug(n + k, k);
            Eigen::VectorXd rhs(n + k);

            for (int it = 0; it < max_iterations; ++it) {
                if (cost <= 1e-28 * std::max(sst, 1e-300) || cost == 0.0) { break; }
                // forward-difference Jacobian
                for (Eigen::Index j = 0; j < k; ++j) {
                    double h = 1e-7 * std::max(1.0, std::abs(theta[j]));
                    Eigen::VectorXd tp = theta;
                    tp[j] += h;
                    if (!residual(tp, rn)) {
                        tp[j] = theta[j] - h;
                        h = -h;
                        if (!residual(tp, rn)) { return cost; }
                    }
                    jac.col(j) = (rn - r) / h;
                }
                Eigen::VectorXd diag = jac.colwise().squaredNorm().transpose();
                for (auto& d : diag) { d = std::max(d, 1e-12); }

                bool accepted = false;
                double step_norm = 0.0;
                for (int tries = 0; tries < 12; ++tries) {
                    aug.topRows(n) = jac;
                    aug.bottomRows(k) = (lambda * diag).cwiseSqrt().asDiagonal();
                    rhs.head(n) = -r;
                    rhs.tail(k).setZero();
                    Eigen::VectorXd delta = aug.colPivHouseholderQr().solve(rhs);
                    Eigen::VectorXd cand = theta + delta;
                    if (delta.allFinite() && residual(cand, rn)) {
                        double c = rn.squaredNorm();
                        if (c < cost) {
                            step_norm = delta.norm();
                            double gain = (cost - c) / cost;
                            theta = cand;
                            r = rn;
                            cost = c;
                            lambda = std::max(lambda / 3.0, 1e-15);
                            accepted = true;
                            if (gain < 1e-15) { return cost; }
                            break;
                        }
                    }
                    lambda *= 4.0;
                }
                if (!accepted || step_norm <= 1e-15 * (theta.norm() + 1e-15)) { break; }
            }
            return cost;
        }

        std::vector<double> const& prediction() const { return pred_; }

    private:
        ExprTree const& tree_;
        Columns cols_;
        std::vector<double> const& y_;
        EvalScratch& scratch_;
        std::vector<double> pred_;
    };
} // namespace

FitResult fit_scalars(ExprTree const& tree, Batch const& batch, FitOptions const& opts, EvalScratch& scratch)
{
    auto const k = tree.scalar_slots();
    if (batch.size() == 0) { return {}; }
    if (k == 0) {
        std::vector<double> pred(batch.size());
        scratch.reset();
        evaluate(tree, batch.view(), {}, pred, scratch);
        return score(pred, batch.y);
    }

    LeastSquares ls(tree, batch, scratch);
    double mean = std::accumulate(batch.y.begin(), batch.y.end(), 0.0) / static_cast<double>(batch.size());
    double sst = 0.0;
    for (double v : batch.y) { sst += (v - mean) * (v - mean); }

    std::vector<Eigen::VectorXd> starts;
    if (opts.warm_start.size() == k
        && std::all_of(opts.warm_start.begin(), opts.warm_start.end(), [](double v) { return std::isfinite(v); })) {
        starts.emplace_back(Eigen::Map<Eigen::VectorXd const>(opts.warm_start.data(), static_cast<Eigen::Index>(k)));
    }
    for (std::size_t s = 0; s < opts.starts.size(); ++s) {
        auto rng = make_stream(0x51ed5eedULL, s);
        Eigen::VectorXd theta(static_cast<Eigen::Index>(k));
        for (auto& t : theta) { t = opts.starts[s] * (1.0 + opts.jitter * (2.0 * uniform01(rng) - 1.0)); }
        starts.push_back(std::move(theta));
    }

    FitResult best;
    double best_cost = std::numeric_limits<double>::infinity();
    for (auto& theta : starts) {
        double cost = ls.solve(theta, opts.max_iterations, sst);
        if (!std::isfinite(cost) || !(cost < best_cost) || !theta.allFinite()) { continue; }
        best_cost = cost;
        best.params.assign(theta.begin(), theta.end());
        if (early_stop(sst > 0.0 ? 1.0 - cost / sst : (cost == 0.0 ? 1.0 : 0.0))) { break; }
    }
    if (best.params.empty()) { return {}; }

    std::vector<double> pred(batch.size());
    scratch.reset();
    evaluate(tree, batch.view(), best.params, pred, scratch);
    auto params = std::move(best.params);
    best = score(pred, batch.y);
    best.params = std::move(params);
    return best;
}

FitResult fit_scalars(ExprTree const& tree, Batch const& batch, FitOptions const& opts)
{
    EvalScratch scratch;
    return fit_scalars(tree, batch, opts, scratch);
}

RefitOutcome noisy_refit_step(std::vector<Candidate> const& front, Batch const& clean, Vocabulary const& vocab,
    FitOptions const& opts)
{
    RefitOutcome out;
    EvalScratch scratch;
    for (auto const& cand : front) {
        FitOptions o = opts;
        o.warm_start = cand.params;
        auto fit = fit_scalars(cand.tree, clean, o, scratch);
        ++out.refits;
        if (fit.converged && early_stop(fit)) {
            out.hit = make_candidate(cand.tree, vocab, fit.params, fit.r2);
            return out;
        }
    }
    return out;
}

RefitOutcome noisy_refit_step(QDGrid const& grid, Batch const& clean, Vocabulary const& vocab, FitOptions const& opts)
{
    return noisy_refit_step(pareto_front(grid), clean, vocab, opts);
}

} // namespace qdsr
