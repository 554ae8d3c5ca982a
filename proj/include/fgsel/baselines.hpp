#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

#include "fgsel/common.hpp"
#include "fgsel/dataset.hpp"

namespace fgsel {

namespace detail {

struct ClassCounts {
    std::size_t n_pos = 0;
    std::size_t n_neg = 0;
};

inline ClassCounts count_classes(const Dataset& ds) {
    ClassCounts c;
    for (std::size_t i = 0; i < ds.n_rows(); ++i)
        (ds.label(i) > 0 ? c.n_pos : c.n_neg) += 1;
    if (c.n_pos == 0 || c.n_neg == 0)
        throw data_error("baseline scores need both classes present");
    return c;
}

} // namespace detail

// One-way two-group ANOVA F per feature: between-class mean square over
// within-class mean square. Implicit zeros of sparse rows count as values.
inline std::vector<double> anova_f_scores(const Dataset& ds) {
    const auto classes = detail::count_classes(ds);
    const std::size_t d = ds.n_features();
    const std::size_t n = ds.n_rows();

    // class sums -> means (implicit zeros contribute 0 to sums)
    std::vector<double> sum_pos(d, 0.0), sum_neg(d, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        auto& sums = ds.label(i) > 0 ? sum_pos : sum_neg;
        auto idx = ds.row_indices(i);
        auto val = ds.row_values(i);
        for (std::size_t k = 0; k < idx.size(); ++k) sums[idx[k]] += val[k];
    }
    std::vector<double> mean_pos(d), mean_neg(d);
    for (std::size_t j = 0; j < d; ++j) {
        mean_pos[j] = sum_pos[j] / static_cast<double>(classes.n_pos);
        mean_neg[j] = sum_neg[j] / static_cast<double>(classes.n_neg);
    }

    // within-class squared deviations; track per-class min/max to decide the
    // degenerate cases exactly instead of comparing float residuals to zero
    std::vector<double> ssw(d, 0.0);
    constexpr double inf = std::numeric_limits<double>::infinity();
    std::vector<double> min_pos(d, inf), max_pos(d, -inf), min_neg(d, inf), max_neg(d, -inf);
    std::vector<std::size_t> nnz_pos(d, 0), nnz_neg(d, 0);
    for (std::size_t i = 0; i < n; ++i) {
        const bool pos = ds.label(i) > 0;
        auto& mins = pos ? min_pos : min_neg;
        auto& maxs = pos ? max_pos : max_neg;
        auto& nnzs = pos ? nnz_pos : nnz_neg;
        const auto& means = pos ? mean_pos : mean_neg;
        auto idx = ds.row_indices(i);
        auto val = ds.row_values(i);
        for (std::size_t k = 0; k < idx.size(); ++k) {
            const std::size_t j = idx[k];
            const double dev = val[k] - means[j];
            ssw[j] += dev * dev;
            mins[j] = std::min(mins[j], val[k]);
            maxs[j] = std::max(maxs[j], val[k]);
            nnzs[j] += 1;
        }
    }
    // implicit zeros
    for (std::size_t j = 0; j < d; ++j) {
        const std::size_t zeros_pos = classes.n_pos - nnz_pos[j];
        const std::size_t zeros_neg = classes.n_neg - nnz_neg[j];
        ssw[j] += static_cast<double>(zeros_pos) * mean_pos[j] * mean_pos[j];
        ssw[j] += static_cast<double>(zeros_neg) * mean_neg[j] * mean_neg[j];
        if (zeros_pos > 0) {
            min_pos[j] = std::min(min_pos[j], 0.0);
            max_pos[j] = std::max(max_pos[j], 0.0);
        }
        if (zeros_neg > 0) {
            min_neg[j] = std::min(min_neg[j], 0.0);
            max_neg[j] = std::max(max_neg[j], 0.0);
        }
    }

    std::vector<double> f(d, 0.0);
    const double dfw = static_cast<double>(n - 2);
    for (std::size_t j = 0; j < d; ++j) {
        const bool const_pos = min_pos[j] == max_pos[j];
        const bool const_neg = min_neg[j] == max_neg[j];
        if (const_pos && const_neg && min_pos[j] == min_neg[j]) {
            f[j] = 0.0; // globally constant feature
            continue;
        }
        const double grand = (sum_pos[j] + sum_neg[j]) / static_cast<double>(n);
        const double dp = mean_pos[j] - grand;
        const double dn = mean_neg[j] - grand;
        const double ssb = static_cast<double>(classes.n_pos) * dp * dp +
                           static_cast<double>(classes.n_neg) * dn * dn;
        if (const_pos && const_neg) {
            f[j] = inf; // zero within-class variance, classes separated
            continue;
        }
        f[j] = (ssb / 1.0) / (ssw[j] / dfw);
    }
    return f;
}

// Per-feature mutual information with the label from an equal-width binning
// of the observed value range (constant features collapse to one bin, MI 0).
// Natural log; plug-in estimate with 0 log 0 = 0.
inline std::vector<double> mutual_info_scores(const Dataset& ds, std::size_t n_bins = 16) {
    if (n_bins < 1) throw config_error("n_bins must be >= 1");
    const auto classes = detail::count_classes(ds);
    const std::size_t d = ds.n_features();
    const std::size_t n = ds.n_rows();

    constexpr double inf = std::numeric_limits<double>::infinity();
    std::vector<double> mins(d, inf), maxs(d, -inf);
    std::vector<std::size_t> nnz(d, 0);
    for (std::size_t i = 0; i < n; ++i) {
        auto idx = ds.row_indices(i);
        auto val = ds.row_values(i);
        for (std::size_t k = 0; k < idx.size(); ++k) {
            mins[idx[k]] = std::min(mins[idx[k]], val[k]);
            maxs[idx[k]] = std::max(maxs[idx[k]], val[k]);
            nnz[idx[k]] += 1;
        }
    }
    for (std::size_t j = 0; j < d; ++j) {
        if (nnz[j] < n) { // implicit zeros present
            mins[j] = std::min(mins[j], 0.0);
            maxs[j] = std::max(maxs[j], 0.0);
        }
    }

    // joint histogram: per feature, n_bins x {neg,pos}
    std::vector<std::size_t> counts(d * n_bins * 2, 0);
    auto bin_of = [&](std::size_t j, double x) {
        const double range = maxs[j] - mins[j];
        auto b = static_cast<std::size_t>((x - mins[j]) / range * static_cast<double>(n_bins));
        return std::min(b, n_bins - 1);
    };
    std::vector<std::size_t> nnz_pos(d, 0), nnz_neg(d, 0);
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t c = ds.label(i) > 0 ? 1 : 0;
        auto& nnzc = ds.label(i) > 0 ? nnz_pos : nnz_neg;
        auto idx = ds.row_indices(i);
        auto val = ds.row_values(i);
        for (std::size_t k = 0; k < idx.size(); ++k) {
            const std::size_t j = idx[k];
            if (mins[j] == maxs[j]) continue;
            counts[(j * n_bins + bin_of(j, val[k])) * 2 + c] += 1;
            nnzc[j] += 1;
        }
    }

    std::vector<double> mi(d, 0.0);
    const auto total = static_cast<double>(n);
    const double p_pos = static_cast<double>(classes.n_pos) / total;
    const double p_neg = static_cast<double>(classes.n_neg) / total;
    for (std::size_t j = 0; j < d; ++j) {
        if (mins[j] == maxs[j]) continue; // single bin
        // fold implicit zeros into their bin (sentinel when the feature is fully explicit)
        const std::size_t zero_bin = nnz[j] < n ? bin_of(j, 0.0) : n_bins;
        const std::size_t pos_in_zero = classes.n_pos - nnz_pos[j];
        const std::size_t neg_in_zero = classes.n_neg - nnz_neg[j];
        double acc = 0.0;
        for (std::size_t b = 0; b < n_bins; ++b) {
            std::size_t c_neg = counts[(j * n_bins + b) * 2 + 0];
            std::size_t c_pos = counts[(j * n_bins + b) * 2 + 1];
            if (b == zero_bin) {
                c_neg += neg_in_zero;
                c_pos += pos_in_zero;
            }
            const double pb = static_cast<double>(c_neg + c_pos) / total;
            if (pb == 0.0) continue;
            if (c_neg > 0) {
                const double pbc = static_cast<double>(c_neg) / total;
                acc += pbc * std::log(pbc / (pb * p_neg));
            }
            if (c_pos > 0) {
                const double pbc = static_cast<double>(c_pos) / total;
                acc += pbc * std::log(pbc / (pb * p_pos));
            }
        }
        mi[j] = acc;
    }
    return mi;
}

} // namespace fgsel
