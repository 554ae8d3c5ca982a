#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "fgsel/common.hpp"
#include "fgsel/dataset.hpp"
#include "fgsel/random.hpp"

namespace fgsel {

struct LogRegConfig {
    enum class Mode { batch, sgd };
    Mode mode = Mode::batch;
    long long epochs = 5;       // sgd only
    double learning_rate = 1.0; // batch: scales the Lipschitz-bounded step; sgd: raw step
    double l2 = 1e-6;
    long long max_iterations = 5000; // batch only
    double rel_tolerance = 1e-8;     // batch only
    std::uint64_t seed = 0;

    std::string digest() const {
        return std::string("mode=") + (mode == Mode::batch ? "batch" : "sgd") +
               " epochs=" + std::to_string(epochs) + " lr=" + std::to_string(learning_rate) +
               " l2=" + std::to_string(l2) + " max_iters=" + std::to_string(max_iterations) +
               " tol=" + std::to_string(rel_tolerance) + " seed=" + std::to_string(seed);
    }
};

struct LogRegModel {
    std::vector<double> weights; // one per subset feature, subset order
    double bias = 0.0;
};

namespace detail {

// Rows restricted to a feature subset, densified in subset order.
inline std::vector<double> restrict_rows(const Dataset& ds,
                                         std::span<const std::size_t> subset) {
    std::vector<std::uint32_t> cols(subset.size());
    for (std::size_t k = 0; k < subset.size(); ++k)
        cols[k] = static_cast<std::uint32_t>(subset[k]);
    std::vector<std::size_t> pos_of(ds.n_features(), SIZE_MAX);
    for (std::size_t k = 0; k < cols.size(); ++k) pos_of[cols[k]] = k;

    std::vector<double> out(ds.n_rows() * subset.size(), 0.0);
    for (std::size_t i = 0; i < ds.n_rows(); ++i) {
        auto idx = ds.row_indices(i);
        auto val = ds.row_values(i);
        double* row = out.data() + i * subset.size();
        for (std::size_t k = 0; k < idx.size(); ++k) {
            const std::size_t p = pos_of[idx[k]];
            if (p != SIZE_MAX) row[p] = val[k];
        }
    }
    return out;
}

inline double logistic_loss(std::span<const double> x, std::span<const double> y,
                            std::size_t m, const LogRegModel& model, double l2) {
    const std::size_t n = y.size();
    double loss = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double* row = x.data() + i * m;
        double margin = model.bias;
        for (std::size_t k = 0; k < m; ++k) margin += model.weights[k] * row[k];
        const double t = -y[i] * margin;
        // log(1 + exp(t)) without overflow
        loss += t > 0 ? t + std::log1p(std::exp(-t)) : std::log1p(std::exp(t));
    }
    loss /= static_cast<double>(n);
    double reg = 0.0;
    for (double w : model.weights) reg += w * w;
    return loss + 0.5 * l2 * reg;
}

} // namespace detail

// Binary loglogistic regression on the subset columns. Batch mode runs plain
// gradient descent with a fixed step sized from a Lipschitz bound of the
// loss, so it descends monotonically regardless of feature scale; SGD mode
// makes shuffled single-example updates for a fixed number of epochs.
inline LogRegModel fit_logreg(const Dataset& train, std::span<const std::size_t> subset,
                              const LogRegConfig& cfg = {}) {
    if (subset.empty()) throw config_error("empty subset");
    for (std::size_t j : subset)
        if (j >= train.n_features()) throw config_error("subset index out of range");
    const std::size_t n = train.n_rows();
    if (n == 0) throw data_error("fit_logreg: empty training set");
    bool has_pos = false, has_neg = false;
    for (std::size_t i = 0; i < n; ++i) (train.label(i) > 0 ? has_pos : has_neg) = true;
    if (!has_pos || !has_neg) throw data_error("fit_logreg needs both classes in train");

    const std::size_t m = subset.size();
    const std::vector<double> x = detail::restrict_rows(train, subset);
    const std::span<const double> y = train.labels();

    LogRegModel model;
    model.weights.assign(m, 0.0);

    if (cfg.mode == LogRegConfig::Mode::batch) {
        // Lipschitz bound via the trace: lambda_max((1/4n) Xa'Xa) <= (1/4n) ||Xa||_F^2
        // with the bias column included.
        double sq = static_cast<double>(n); // bias column of ones
        for (double v : x) sq += v * v;
        const double lipschitz = 0.25 * sq / static_cast<double>(n) + cfg.l2;
        const double step = cfg.learning_rate / lipschitz;

        std::vector<double> grad(m);
        double prev_loss = detail::logistic_loss(x, y, m, model, cfg.l2);
        for (long long it = 0; it < cfg.max_iterations; ++it) {
            std::fill(grad.begin(), grad.end(), 0.0);
            double grad_bias = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                const double* row = x.data() + i * m;
                double margin = model.bias;
                for (std::size_t k = 0; k < m; ++k) margin += model.weights[k] * row[k];
                const double t = y[i] * margin;
                const double sig = t >= 0 ? std::exp(-t) / (1.0 + std::exp(-t))
                                          : 1.0 / (1.0 + std::exp(t));
                const double coef = -y[i] * sig; // d/d margin of log(1+exp(-y margin))
                grad_bias += coef;
                for (std::size_t k = 0; k < m; ++k) grad[k] += coef * row[k];
            }
            const double inv_n = 1.0 / static_cast<double>(n);
            for (std::size_t k = 0; k < m; ++k) {
                grad[k] = grad[k] * inv_n + cfg.l2 * model.weights[k];
                model.weights[k] -= step * grad[k];
            }
            model.bias -= step * grad_bias * inv_n;

            const double loss = detail::logistic_loss(x, y, m, model, cfg.l2);
            if (!std::isfinite(loss))
                throw numeric_error("logistic loss diverged at iteration " +
                                    std::to_string(it));
            if (std::abs(loss - prev_loss) / std::max(std::abs(prev_loss), 1e-12) <
                cfg.rel_tolerance)
                break;
            prev_loss = loss;
        }
    } else {
        Rng rng(cfg.seed);
        std::vector<std::size_t> order(n);
        std::iota(order.begin(), order.end(), std::size_t{0});
        for (long long e = 0; e < cfg.epochs; ++e) {
            rng.shuffle(std::span<std::size_t>(order));
            for (std::size_t i : order) {
                const double* row = x.data() + i * m;
                double margin = model.bias;
                for (std::size_t k = 0; k < m; ++k) margin += model.weights[k] * row[k];
                const double t = y[i] * margin;
                const double sig = t >= 0 ? std::exp(-t) / (1.0 + std::exp(-t))
                                          : 1.0 / (1.0 + std::exp(t));
                const double coef = -y[i] * sig;
                for (std::size_t k = 0; k < m; ++k)
                    model.weights[k] -=
                        cfg.learning_rate * (coef * row[k] + cfg.l2 * model.weights[k]);
                model.bias -= cfg.learning_rate * coef;
                if (!std::isfinite(model.bias))
                    throw numeric_error("sgd diverged (non-finite bias)");
            }
        }
    }
    return model;
}

inline std::vector<double> predict_scores(const Dataset& ds,
                                          std::span<const std::size_t> subset,
                                          const LogRegModel& model) {
    const std::size_t m = subset.size();
    const std::vector<double> x = detail::restrict_rows(ds, subset);
    std::vector<double> scores(ds.n_rows());
    for (std::size_t i = 0; i < ds.n_rows(); ++i) {
        const double* row = x.data() + i * m;
        double margin = model.bias;
        for (std::size_t k = 0; k < m; ++k) margin += model.weights[k] * row[k];
        scores[i] = margin;
    }
    return scores;
}

// Mann-Whitney AUC: (#concordant + 1/2 #tied) / (n+ n-), computed via a sort
// and average ranks in O(n log n). The numerator is a half-integer, so the
// result matches exact pair counting bit for bit.
inline double auc(std::span<const double> scores, std::span<const double> labels) {
    if (scores.size() != labels.size()) throw config_error("auc: length mismatch");
    const std::size_t n = scores.size();
    std::size_t n_pos = 0;
    for (double y : labels)
        if (y > 0) ++n_pos;
    const std::size_t n_neg = n - n_pos;
    if (n_pos == 0 || n_neg == 0) throw data_error("auc needs both classes present");

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });

    double rank_sum_pos = 0.0;
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j < n && scores[order[j]] == scores[order[i]]) ++j;
        const double avg_rank = 0.5 * static_cast<double>(i + 1 + j); // (i+1 + j) / 2
        for (std::size_t t = i; t < j; ++t)
            if (labels[order[t]] > 0) rank_sum_pos += avg_rank;
        i = j;
    }
    const double numerator =
        rank_sum_pos - 0.5 * static_cast<double>(n_pos) * static_cast<double>(n_pos + 1);
    return numerator / (static_cast<double>(n_pos) * static_cast<double>(n_neg));
}

namespace detail {

// Regularized incomplete beta via Lentz's continued fraction.
inline double beta_cf(double a, double b, double x) {
    constexpr int max_iter = 300;
    constexpr double eps = 1e-15;
    constexpr double fpmin = 1e-300;
    const double qab = a + b, qap = a + 1.0, qam = a - 1.0;
    double c = 1.0;
    double d = 1.0 - qab * x / qap;
    if (std::abs(d) < fpmin) d = fpmin;
    d = 1.0 / d;
    double h = d;
    for (int m = 1; m <= max_iter; ++m) {
        const double m2 = 2.0 * m;
        double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if (std::abs(d) < fpmin) d = fpmin;
        c = 1.0 + aa / c;
        if (std::abs(c) < fpmin) c = fpmin;
        d = 1.0 / d;
        h *= d * c;
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if (std::abs(d) < fpmin) d = fpmin;
        c = 1.0 + aa / c;
        if (std::abs(c) < fpmin) c = fpmin;
        d = 1.0 / d;
        const double del = d * c;
        h *= del;
        if (std::abs(del - 1.0) < eps) break;
    }
    return h;
}

inline double incomplete_beta(double a, double b, double x) {
    if (x <= 0.0) return 0.0;
    if (x >= 1.0) return 1.0;
    const double ln_front = std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) +
                            a * std::log(x) + b * std::log1p(-x);
    const double front = std::exp(ln_front);
    if (x < (a + 1.0) / (a + b + 2.0)) return front * beta_cf(a, b, x) / a;
    return 1.0 - front * beta_cf(b, a, 1.0 - x) / b;
}

} // namespace detail

struct PairedTTest {
    double t = 0.0;
    double p = 1.0;
    bool degenerate = false; // all differences identical (zero variance)
};

// Two-sided paired t-test on element-wise differences a - b.
inline PairedTTest paired_ttest(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size() || a.size() < 2)
        throw config_error("paired_ttest needs equal lengths >= 2");
    const std::size_t n = a.size();
    double mean = 0.0;
    for (std::size_t i = 0; i < n; ++i) mean += a[i] - b[i];
    mean /= static_cast<double>(n);
    double ss = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double d = a[i] - b[i] - mean;
        ss += d * d;
    }
    PairedTTest res;
    if (ss == 0.0) {
        res.degenerate = true;
        if (mean == 0.0) {
            res.t = 0.0;
            res.p = 1.0;
        } else {
            res.t = mean > 0 ? std::numeric_limits<double>::infinity()
                             : -std::numeric_limits<double>::infinity();
            res.p = 0.0;
        }
        return res;
    }
    const double var = ss / static_cast<double>(n - 1);
    res.t = mean / std::sqrt(var / static_cast<double>(n));
    const double nu = static_cast<double>(n - 1);
    res.p = detail::incomplete_beta(0.5 * nu, 0.5, nu / (nu + res.t * res.t));
    return res;
}

struct EvalReport {
    std::string selector;
    std::vector<std::size_t> sizes;
    std::vector<double> aucs;
    std::vector<double> seconds;
    std::string config_digest;
};

// Top-m features per size -> fit on train -> AUC on test.
inline EvalReport evaluate_selector(const std::string& selector,
                                    std::span<const std::size_t> ranking,
                                    std::span<const std::size_t> sizes, const Dataset& train,
                                    const Dataset& test, const LogRegConfig& cfg = {}) {
    EvalReport report;
    report.selector = selector;
    report.config_digest = cfg.digest();
    std::vector<std::size_t> unique_sizes(sizes.begin(), sizes.end());
    std::sort(unique_sizes.begin(), unique_sizes.end());
    unique_sizes.erase(std::unique(unique_sizes.begin(), unique_sizes.end()),
                       unique_sizes.end());
    for (std::size_t m : unique_sizes) {
        if (m > ranking.size())
            throw config_error("size " + std::to_string(m) + " exceeds feature count " +
                               std::to_string(ranking.size()));
        const auto start = std::chrono::steady_clock::now();
        std::span<const std::size_t> subset(ranking.data(), m);
        const LogRegModel model = fit_logreg(train, subset, cfg);
        const std::vector<double> scores = predict_scores(test, subset, model);
        const double a = auc(scores, test.labels());
        const std::chrono::duration<double> elapsed = std::chrono::steady_clock::now() - start;
        report.sizes.push_back(m);
        report.aucs.push_back(a);
        report.seconds.push_back(elapsed.count());
    }
    return report;
}

} // namespace fgsel
