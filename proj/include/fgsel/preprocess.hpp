#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fgsel/dataset.hpp"
#include "fgsel/matrix.hpp"
#include "fgsel/random.hpp"

namespace fgsel {

// Normalization required by the estimator: per-feature centering and
// division by sqrt of the top eigenvalue of the sample covariance.
struct PreprocessStats {
    std::vector<double> means;
    double spectral_scale = 0.0; // top eigenvalue of (1/n) Xc' Xc
    std::size_t fitted_on = 0;   // rows used for the fit
};

namespace detail {

// y = X w for the CSR dataset (rows of ds restricted to `rows`).
inline void csr_matvec(const Dataset& ds, std::span<const std::size_t> rows,
                       std::span<const double> w, std::span<double> y) {
    for (std::size_t r = 0; r < rows.size(); ++r) {
        auto idx = ds.row_indices(rows[r]);
        auto val = ds.row_values(rows[r]);
        double acc = 0.0;
        for (std::size_t k = 0; k < idx.size(); ++k) acc += val[k] * w[idx[k]];
        y[r] = acc;
    }
}

// w += X' t.
inline void csr_matvec_transpose(const Dataset& ds, std::span<const std::size_t> rows,
                                 std::span<const double> t, std::span<double> w) {
    for (std::size_t r = 0; r < rows.size(); ++r) {
        auto idx = ds.row_indices(rows[r]);
        auto val = ds.row_values(rows[r]);
        for (std::size_t k = 0; k < idx.size(); ++k) w[idx[k]] += val[k] * t[r];
    }
}

} // namespace detail

// Column means plus power iteration for the covariance's top eigenvalue.
// The operator w -> (1/n) Xc'(Xc w) is applied matrix-free, so the cost is
// O(nnz + D) per iteration and the covariance is never materialized.
inline PreprocessStats fit_stats(const Dataset& ds,
                                 std::optional<std::size_t> subsample_size = std::nullopt,
                                 std::uint64_t seed = 0, double tol = 1e-6,
                                 int max_iterations = 200) {
    if (ds.n_rows() < 2) throw data_error("fit_stats needs at least 2 rows");

    std::vector<std::size_t> rows;
    if (subsample_size && *subsample_size < ds.n_rows()) {
        Rng sub_rng(seed);
        rows.resize(ds.n_rows());
        for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = i;
        sub_rng.shuffle(std::span<std::size_t>(rows));
        rows.resize(*subsample_size);
    } else {
        rows.resize(ds.n_rows());
        for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = i;
    }
    const std::size_t n = rows.size();
    const std::size_t d = ds.n_features();

    PreprocessStats stats;
    stats.fitted_on = n;
    stats.means.assign(d, 0.0);
    for (std::size_t r : rows) {
        auto idx = ds.row_indices(r);
        auto val = ds.row_values(r);
        for (std::size_t k = 0; k < idx.size(); ++k) stats.means[idx[k]] += val[k];
    }
    for (double& m : stats.means) m /= static_cast<double>(n);

    // Power iteration with a random unit start; the centering is folded in:
    // Xc w = X w - (means . w) 1,  Xc' t = X' t - means * sum(t).
    Rng rng(seed + 0x9e3779b97f4a7c15ull);
    std::vector<double> w(d), t(n), next(d);
    double norm = 0.0;
    for (std::size_t j = 0; j < d; ++j) {
        w[j] = rng.normal();
        norm += w[j] * w[j];
    }
    norm = std::sqrt(norm);
    for (double& x : w) x /= norm;

    double eig = 0.0;
    for (int it = 0; it < max_iterations; ++it) {
        double mw = 0.0;
        for (std::size_t j = 0; j < d; ++j) mw += stats.means[j] * w[j];
        detail::csr_matvec(ds, rows, w, t);
        double tsum = 0.0;
        for (double& x : t) {
            x -= mw;
            tsum += x;
        }
        std::fill(next.begin(), next.end(), 0.0);
        detail::csr_matvec_transpose(ds, rows, t, next);
        double out_norm = 0.0;
        for (std::size_t j = 0; j < d; ++j) {
            next[j] = (next[j] - stats.means[j] * tsum) / static_cast<double>(n);
            out_norm += next[j] * next[j];
        }
        out_norm = std::sqrt(out_norm);
        if (out_norm < 1e-300) throw data_error("degenerate data: covariance is zero");
        // w is unit, so the Rayleigh quotient is w . next.
        double rayleigh = 0.0;
        for (std::size_t j = 0; j < d; ++j) rayleigh += w[j] * next[j];
        for (std::size_t j = 0; j < d; ++j) w[j] = next[j] / out_norm;
        const double change = std::abs(rayleigh - eig) / std::max(std::abs(rayleigh), 1e-300);
        eig = rayleigh;
        if (it > 0 && change < tol) break;
    }
    if (!(eig > 0.0)) throw data_error("degenerate data: top covariance eigenvalue is 0");
    stats.spectral_scale = eig;
    return stats;
}

// Dense centered/scaled view of the given rows: out[r][d] = (x - mean_d) / sqrt(scale).
inline ColMatrix transform_batch(const Dataset& ds, std::span<const std::size_t> rows,
                                 const PreprocessStats& stats) {
    const std::size_t d = ds.n_features();
    if (stats.means.size() != d) throw config_error("stats dimension mismatch");
    const double inv_scale = 1.0 / std::sqrt(stats.spectral_scale);
    ColMatrix out(rows.size(), d);
    for (std::size_t j = 0; j < d; ++j) {
        auto col = out.col(j);
        const double base = -stats.means[j] * inv_scale;
        for (double& x : col) x = base;
    }
    for (std::size_t r = 0; r < rows.size(); ++r) {
        auto idx = ds.row_indices(rows[r]);
        auto val = ds.row_values(rows[r]);
        for (std::size_t k = 0; k < idx.size(); ++k)
            out.at(r, idx[k]) += val[k] * inv_scale;
    }
    return out;
}

inline ColMatrix transform_all(const Dataset& ds, const PreprocessStats& stats) {
    std::vector<std::size_t> rows(ds.n_rows());
    for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = i;
    return transform_batch(ds, rows, stats);
}

// Identity by default; optional centering subtracts the fit-sample label mean.
inline std::vector<double> transform_labels(std::span<const double> labels,
                                            bool center = false, double fit_mean = 0.0) {
    std::vector<double> out(labels.begin(), labels.end());
    if (center)
        for (double& y : out) y -= fit_mean;
    return out;
}

} // namespace fgsel
