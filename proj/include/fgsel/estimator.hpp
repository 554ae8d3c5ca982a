#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "fgsel/common.hpp"
#include "fgsel/matrix.hpp"

namespace fgsel {

// How the sample count entering the binomial denominators C(n, i+2) is
// derived from the batch: exact, or clamped at sample_cap so the weight of
// high-order terms stays bounded away from underflow on huge batches.
enum class DenominatorPolicy { exact_log, capped };

struct EstimatorConfig {
    int order_k = 1;
    std::vector<double> coefficients; // one per series term
    DenominatorPolicy denominator_policy = DenominatorPolicy::exact_log;
    long long sample_cap = 1'000'000;

    void validate() const {
        if (order_k < 1) throw config_error("order_k must be >= 1");
        if (static_cast<int>(coefficients.size()) != order_k)
            throw config_error("coefficients length must equal order_k");
        for (double a : coefficients)
            if (!std::isfinite(a)) throw config_error("coefficients must be finite");
        if (denominator_policy == DenominatorPolicy::capped && sample_cap < 2)
            throw config_error("sample_cap must be >= 2");
    }

    // Truncated Neumann series for the inverse on a (0,1] spectrum,
    // sum_{i<k} (1-x)^i, written in the monomial basis: a_j = (-1)^j C(k,j+1).
    // Valid because the data is scaled so the covariance spectrum lies in (0,1].
    static EstimatorConfig neumann(int k) {
        if (k < 1) throw config_error("order_k must be >= 1");
        EstimatorConfig cfg;
        cfg.order_k = k;
        cfg.coefficients.resize(k);
        double binom = static_cast<double>(k); // C(k, 1)
        for (int j = 0; j < k; ++j) {
            cfg.coefficients[j] = (j % 2 == 0) ? binom : -binom;
            binom = binom * static_cast<double>(k - j - 1) / static_cast<double>(j + 2);
        }
        return cfg;
    }
};

// Non-owning view of one transformed batch. n_effective is the sample count
// used in every denominator of the objective.
struct BatchView {
    const ColMatrix* X = nullptr;
    std::span<const double> y;
    long long n_effective = 0;
};

// out_i = z_i * sum_{j>i} z_j v_j, i.e. triud(z z')v via one reverse
// exclusive cumulative sum. Never forms the N x N matrix.
inline std::vector<double> triud_outer_apply(std::span<const double> z,
                                             std::span<const double> v) {
    if (z.size() != v.size()) throw config_error("triud_outer_apply: length mismatch");
    std::vector<double> out(z.size());
    double acc = 0.0;
    for (std::size_t i = z.size(); i-- > 0;) {
        out[i] = z[i] * acc;
        acc += z[i] * v[i];
    }
    return out;
}

// out_i = z_i * sum_{j<i} z_j v_j, i.e. triud(z z')' v (forward scan).
inline std::vector<double> triud_outer_apply_transpose(std::span<const double> z,
                                                       std::span<const double> v) {
    if (z.size() != v.size())
        throw config_error("triud_outer_apply_transpose: length mismatch");
    std::vector<double> out(z.size());
    double acc = 0.0;
    for (std::size_t i = 0; i < z.size(); ++i) {
        out[i] = z[i] * acc;
        acc += z[i] * v[i];
    }
    return out;
}

namespace detail {

// out += M(s) v where M(s) = sum_d s_d triud(X_:d X_:d'). One fused scan per
// feature column; auxiliary state is a single scalar.
inline void accumulate_operator_apply(const ColMatrix& x, std::span<const double> s,
                                      std::span<const double> v, std::span<double> out) {
    const std::size_t n = x.n_rows();
    for (std::size_t d = 0; d < x.n_cols(); ++d) {
        const double sd = s[d];
        if (sd == 0.0) continue;
        auto z = x.col(d);
        double acc = 0.0;
        for (std::size_t i = n; i-- > 0;) {
            out[i] += sd * z[i] * acc;
            acc += z[i] * v[i];
        }
    }
}

inline void accumulate_operator_apply_transpose(const ColMatrix& x,
                                                std::span<const double> s,
                                                std::span<const double> v,
                                                std::span<double> out) {
    const std::size_t n = x.n_rows();
    for (std::size_t d = 0; d < x.n_cols(); ++d) {
        const double sd = s[d];
        if (sd == 0.0) continue;
        auto z = x.col(d);
        double acc = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            out[i] += sd * z[i] * acc;
            acc += z[i] * v[i];
        }
    }
}

inline double log_binomial(long long n, long long r) {
    return std::lgamma(static_cast<double>(n) + 1.0) -
           std::lgamma(static_cast<double>(r) + 1.0) -
           std::lgamma(static_cast<double>(n - r) + 1.0);
}

// b_i = a_i / C(n, i+2), evaluated in log space: C(N, 8) overflows 64-bit
// integers long before N gets interesting.
inline std::vector<double> term_weights(const BatchView& batch, const EstimatorConfig& cfg) {
    cfg.validate();
    if (batch.n_effective < cfg.order_k + 1)
        throw config_error("batch too small: n_effective=" + std::to_string(batch.n_effective) +
                           " but order " + std::to_string(cfg.order_k) + " needs n >= " +
                           std::to_string(cfg.order_k + 1));
    long long n = batch.n_effective;
    if (cfg.denominator_policy == DenominatorPolicy::capped) n = std::min(n, cfg.sample_cap);
    std::vector<double> b(cfg.order_k);
    for (int i = 0; i < cfg.order_k; ++i)
        b[i] = cfg.coefficients[i] * std::exp(-log_binomial(n, i + 2));
    return b;
}

inline double dot(std::span<const double> a, std::span<const double> b) {
    double acc = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
    return acc;
}

// The iterated vectors u_m = M(s)^m y for m = 0..count-1.
inline std::vector<std::vector<double>> operator_powers(const BatchView& batch,
                                                        std::span<const double> s, int count,
                                                        bool transpose) {
    std::vector<std::vector<double>> us;
    us.reserve(count);
    us.emplace_back(batch.y.begin(), batch.y.end());
    for (int m = 1; m < count; ++m) {
        std::vector<double> next(batch.y.size(), 0.0);
        if (transpose)
            accumulate_operator_apply_transpose(*batch.X, s, us.back(), next);
        else
            accumulate_operator_apply(*batch.X, s, us.back(), next);
        us.push_back(std::move(next));
    }
    return us;
}

} // namespace detail

// M(s) v as a fresh vector.
inline std::vector<double> operator_apply(const BatchView& batch, std::span<const double> s,
                                          std::span<const double> v) {
    std::vector<double> out(v.size(), 0.0);
    detail::accumulate_operator_apply(*batch.X, s, v, out);
    return out;
}

inline std::vector<double> operator_apply_transpose(const BatchView& batch,
                                                    std::span<const double> s,
                                                    std::span<const double> v) {
    std::vector<double> out(v.size(), 0.0);
    detail::accumulate_operator_apply_transpose(*batch.X, s, v, out);
    return out;
}

// Residual-variance estimate
//   f(s) = y'y/N - sum_{i<k} a_i / C(N, i+2) * y' M(s)^{i+1} y
// computed with two rotating N-vectors; O(NDk) time, O(N) extra space.
inline double objective(const BatchView& batch, std::span<const double> s,
                        const EstimatorConfig& cfg) {
    const auto b = detail::term_weights(batch, cfg);
    const std::size_t n = batch.y.size();
    std::vector<double> cur(batch.y.begin(), batch.y.end());
    std::vector<double> next(n);
    double series = 0.0;
    for (int i = 0; i < cfg.order_k; ++i) {
        std::fill(next.begin(), next.end(), 0.0);
        detail::accumulate_operator_apply(*batch.X, s, cur, next);
        series += b[i] * detail::dot(batch.y, next);
        std::swap(cur, next);
    }
    return detail::dot(batch.y, batch.y) / static_cast<double>(batch.n_effective) - series;
}

// Analytic gradient of the objective in s. Using u_m = M^m y and
// w_j = (M')^j y,
//   d/ds_d [y' M^{i+1} y] = sum_{j=0}^{i} w_j' G_d u_{i-j},
// and the double sum over (i, j) collapses into k combined left vectors
//   W_m = sum_j b_{m+j} w_j,   grad_d = -sum_m W_m' G_d u_m.
// Each scalar W'G_d u costs O(N) via the same suffix-sum scan, so the total
// is O(NDk) time with O(Nk + D) auxiliary space.
inline std::vector<double> gradient(const BatchView& batch, std::span<const double> s,
                                    const EstimatorConfig& cfg) {
    const auto b = detail::term_weights(batch, cfg);
    const int k = cfg.order_k;
    const std::size_t n = batch.y.size();
    const std::size_t d_count = batch.X->n_cols();

    const auto us = detail::operator_powers(batch, s, k, false);
    const auto ws = detail::operator_powers(batch, s, k, true);

    std::vector<std::vector<double>> combined(k, std::vector<double>(n, 0.0));
    for (int m = 0; m < k; ++m)
        for (int j = 0; j + m < k; ++j) {
            const double bw = b[m + j];
            const auto& w = ws[j];
            auto& out = combined[m];
            for (std::size_t i = 0; i < n; ++i) out[i] += bw * w[i];
        }

    std::vector<double> grad(d_count, 0.0);
    std::vector<double> suffix(k);
    for (std::size_t d = 0; d < d_count; ++d) {
        auto z = batch.X->col(d);
        std::fill(suffix.begin(), suffix.end(), 0.0);
        double g = 0.0;
        for (std::size_t i = n; i-- > 0;) {
            const double zi = z[i];
            for (int m = 0; m < k; ++m) {
                g += combined[m][i] * zi * suffix[m];
                suffix[m] += zi * us[m][i];
            }
        }
        grad[d] = -g;
    }
    return grad;
}

// Uncollapsed O(NDk^2) double-sum form, kept as an independent route for
// cross-checking the combined-left-vector gradient.
inline std::vector<double> gradient_reference(const BatchView& batch,
                                              std::span<const double> s,
                                              const EstimatorConfig& cfg) {
    const auto b = detail::term_weights(batch, cfg);
    const int k = cfg.order_k;
    const std::size_t n = batch.y.size();
    const std::size_t d_count = batch.X->n_cols();

    const auto us = detail::operator_powers(batch, s, k, false);
    const auto ws = detail::operator_powers(batch, s, k, true);

    std::vector<double> grad(d_count, 0.0);
    for (std::size_t d = 0; d < d_count; ++d) {
        auto z = batch.X->col(d);
        double g = 0.0;
        for (int i = 0; i < k; ++i) {
            for (int j = 0; j <= i; ++j) {
                const auto& w = ws[j];
                const auto& u = us[i - j];
                double suffix = 0.0;
                double term = 0.0;
                for (std::size_t r = n; r-- > 0;) {
                    term += w[r] * z[r] * suffix;
                    suffix += z[r] * u[r];
                }
                g += b[i] * term;
            }
        }
        grad[d] = -g;
    }
    return grad;
}

// Shared-work evaluation used by the training loop.
inline std::pair<double, std::vector<double>> objective_and_gradient(
    const BatchView& batch, std::span<const double> s, const EstimatorConfig& cfg) {
    const auto b = detail::term_weights(batch, cfg);
    const int k = cfg.order_k;
    const std::size_t n = batch.y.size();
    const std::size_t d_count = batch.X->n_cols();

    auto us = detail::operator_powers(batch, s, k + 1, false);
    double series = 0.0;
    for (int i = 0; i < k; ++i) series += b[i] * detail::dot(batch.y, us[i + 1]);
    const double value =
        detail::dot(batch.y, batch.y) / static_cast<double>(batch.n_effective) - series;
    us.pop_back();

    const auto ws = detail::operator_powers(batch, s, k, true);
    std::vector<std::vector<double>> combined(k, std::vector<double>(n, 0.0));
    for (int m = 0; m < k; ++m)
        for (int j = 0; j + m < k; ++j) {
            const double bw = b[m + j];
            const auto& w = ws[j];
            auto& out = combined[m];
            for (std::size_t i = 0; i < n; ++i) out[i] += bw * w[i];
        }

    std::vector<double> grad(d_count, 0.0);
    std::vector<double> suffix(k);
    for (std::size_t d = 0; d < d_count; ++d) {
        auto z = batch.X->col(d);
        std::fill(suffix.begin(), suffix.end(), 0.0);
        double g = 0.0;
        for (std::size_t i = n; i-- > 0;) {
            const double zi = z[i];
            for (int m = 0; m < k; ++m) {
                g += combined[m][i] * zi * suffix[m];
                suffix[m] += zi * us[m][i];
            }
        }
        grad[d] = -g;
    }
    return {value, std::move(grad)};
}

} // namespace fgsel
