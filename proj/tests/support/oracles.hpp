#pragma once

// Independent re-implementations used to check library results. They share no
// code with the library beyond plain data types.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <numeric>
#include <set>
#include <span>
#include <utility>
#include <vector>

#include "qdsr/dims.hpp"
#include "qdsr/qdgrid.hpp"

namespace qdsr::test {

/// Two-pass long-double recomputation: RMSE over the population deviation.
inline long double oracle_nrmse(std::span<double const> pred, std::span<double const> truth)
{
    long double n = static_cast<long double>(truth.size());
    long double mean = 0;
    for (auto y : truth) { mean += y; }
    mean /= n;
    long double sse = 0;
    long double sst = 0;
    for (std::size_t i = 0; i < truth.size(); ++i) {
        long double e = static_cast<long double>(pred[i]) - truth[i];
        long double d = static_cast<long double>(truth[i]) - mean;
        sse += e * e;
        sst += d * d;
    }
    return std::sqrt(sse / n) / std::sqrt(sst / n);
}

inline long double oracle_r2(std::span<double const> pred, std::span<double const> truth)
{
    long double mean = 0;
    for (auto y : truth) { mean += y; }
    mean /= static_cast<long double>(truth.size());
    long double sse = 0;
    long double sst = 0;
    for (std::size_t i = 0; i < truth.size(); ++i) {
        long double e = static_cast<long double>(truth[i]) - pred[i];
        long double d = static_cast<long double>(truth[i]) - mean;
        sse += e * e;
        sst += d * d;
    }
    return 1.0L - sse / sst;
}

/// O(n^2) non-dominated filter under (lower complexity, higher fitness); exact
/// ties are mutually non-dominating. Returns (complexity, fitness) pairs sorted.
inline std::vector<std::pair<int, double>> brute_pareto(std::vector<std::pair<int, double>> const& pts)
{
    std::vector<std::pair<int, double>> out;
    for (auto const& a : pts) {
        bool dominated = false;
        for (auto const& b : pts) {
            bool weakly = b.first <= a.first && b.second >= a.second;
            bool strictly = b.first < a.first || b.second > a.second;
            if (weakly && strictly) {
                dominated = true;
                break;
            }
        }
        if (!dominated) { out.push_back(a); }
    }
    std::sort(out.begin(), out.end());
    return out;
}

/// Distinct perfect matchings of n points found by canonicalizing every permutation.
inline std::size_t brute_matching_count(std::size_t n)
{
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    std::set<std::vector<std::pair<std::size_t, std::size_t>>> seen;
    do {
        std::vector<std::pair<std::size_t, std::size_t>> pairs;
        for (std::size_t i = 0; i + 1 < n; i += 2) {
            pairs.emplace_back(std::min(perm[i], perm[i + 1]), std::max(perm[i], perm[i + 1]));
        }
        std::sort(pairs.begin(), pairs.end());
        seen.insert(pairs);
    } while (std::next_permutation(perm.begin(), perm.end()));
    return seen.size();
}

/// Every integer exponent vector with |q_i| <= bound solving sum q_i dim_i = target.
inline std::vector<std::vector<int>> brute_monomials(UnitTable const& units, int bound)
{
    std::vector<std::vector<int>> hits;
    std::vector<int> q(units.entries.size(), -bound);
    for (;;) {
        DimVector d(units.base_count());
        for (std::size_t i = 0; i < q.size(); ++i) { d += units.entries[i].dim * Rational(q[i]); }
        if (d == units.target_dim) { hits.push_back(q); }
        std::size_t k = 0;
        while (k < q.size() && q[k] == bound) { q[k++] = -bound; }
        if (k == q.size()) { break; }
        ++q[k];
    }
    return hits;
}

/// Mean squared error of sin(a x) against y minimized over a uniform grid of a.
inline double grid_search_sin_mse(std::vector<double> const& x, std::vector<double> const& y, double lo, double hi,
    double step)
{
    double best = INFINITY;
    for (long i = 0;; ++i) {
        double a = lo + static_cast<double>(i) * step;
        if (a > hi) { break; }
        double s = 0;
        for (std::size_t j = 0; j < x.size(); ++j) {
            double e = std::sin(a * x[j]) - y[j];
            s += e * e;
        }
        best = std::min(best, s / static_cast<double>(x.size()));
    }
    return best;
}

/// Feature vector of a tree recounted from its nodes.
inline std::vector<std::size_t> brute_features(ExprTree const& t)
{
    std::size_t scalars = 0;
    std::size_t functions = 0;
    std::size_t vars = 0;
    for (auto const& n : t.nodes()) {
        scalars += n.op == Op::Scalar ? 1 : 0;
        functions += is_unary(n.op) ? 1 : 0;
        vars += n.op == Op::Var ? 1 : 0;
    }
    return {t.length(), scalars, functions, vars};
}

} // namespace qdsr::test
