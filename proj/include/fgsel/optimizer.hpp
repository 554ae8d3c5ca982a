#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "fgsel/common.hpp"
#include "fgsel/dataset.hpp"
#include "fgsel/estimator.hpp"
#include "fgsel/preprocess.hpp"
#include "fgsel/random.hpp"

namespace fgsel {

struct OptimizerConfig {
    double learning_rate = 0.1;
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.999;
    double adam_eps = 1e-8;
    long long max_iterations = 1000;
    double rel_tolerance = 1e-5;
    // 0 = no epoch budget (small-data regime: run until max_iterations or
    // the tolerance stop); large-scale runs typically set 1.
    long long epochs = 0;
    std::size_t mini_batch_size = 0; // 0 = full batch
    std::size_t accumulation_target = 1000;
    std::uint64_t seed = 0;
    double ema_decay = 0.9;     // smoothing for the stopping criterion
    double label_offset = 0.0;  // subtracted from labels (optional centering)

    void validate() const {
        if (!(learning_rate > 0.0)) throw config_error("learning_rate must be > 0");
        if (!(adam_beta1 >= 0.0 && adam_beta1 < 1.0) ||
            !(adam_beta2 >= 0.0 && adam_beta2 < 1.0))
            throw config_error("adam betas must be in [0,1)");
        if (!(adam_eps > 0.0)) throw config_error("adam_eps must be > 0");
        if (max_iterations < 1) throw config_error("max_iterations must be >= 1");
        if (!(rel_tolerance > 0.0)) throw config_error("rel_tolerance must be > 0");
        if (epochs < 0) throw config_error("epochs must be >= 0");
        if (accumulation_target < 1) throw config_error("accumulation_target must be >= 1");
        if (!(ema_decay >= 0.0 && ema_decay < 1.0))
            throw config_error("ema_decay must be in [0,1)");
    }
};

struct TracePoint {
    long long step = 0;
    double objective = 0.0; // estimator part, batch estimate
    double penalty = 0.0;
    double mean_score = 0.0;
};

struct SelectionState {
    std::vector<double> v;
    std::vector<double> adam_m;
    std::vector<double> adam_v;
    long long step = 0;
    double lambda = 0.0;
    std::vector<TracePoint> trace;
    std::string stop_reason;
};

// s_d = sigmoid(2 v_d), clamped to the open interval at double precision so
// saturated gates never report exactly 0 or 1.
inline double squash_one(double v) {
    const double x = 2.0 * v;
    double s;
    if (x >= 0.0) {
        s = 1.0 / (1.0 + std::exp(-x));
    } else {
        const double e = std::exp(x);
        s = e / (1.0 + e);
    }
    constexpr double lo = std::numeric_limits<double>::min();
    constexpr double hi = 1.0 - std::numeric_limits<double>::epsilon() / 2.0;
    return std::clamp(s, lo, hi);
}

inline std::vector<double> squash(std::span<const double> v) {
    std::vector<double> s(v.size());
    for (std::size_t d = 0; d < v.size(); ++d) s[d] = squash_one(v[d]);
    return s;
}

// d/dv sigmoid(2v) = 2 sigmoid(2v) sigmoid(-2v), both factors evaluated in
// their stable branch so saturated gates keep their true (tiny) slope.
inline double squash_slope(double v) {
    const double x = 2.0 * std::abs(v);
    const double e = std::exp(-x);
    const double near_one = 1.0 / (1.0 + e);
    const double near_zero = e / (1.0 + e);
    return 2.0 * near_one * near_zero;
}

// Parsimony term (lambda/D) sum_d sigmoid(2 v_d) and its gradient in v.
inline std::pair<double, std::vector<double>> penalty_and_grad(std::span<const double> v,
                                                               double lambda) {
    if (!(lambda >= 0.0)) throw config_error("lambda must be >= 0");
    const double scale = v.empty() ? 0.0 : lambda / static_cast<double>(v.size());
    double value = 0.0;
    std::vector<double> grad(v.size(), 0.0);
    if (lambda == 0.0) return {0.0, std::move(grad)};
    for (std::size_t d = 0; d < v.size(); ++d) {
        value += scale * squash_one(v[d]);
        grad[d] = scale * squash_slope(v[d]);
    }
    return {value, std::move(grad)};
}

// Chain rule through the squashing: d s_d / d v_d = 2 s_d (1 - s_d).
inline std::vector<double> chain_gradient(std::span<const double> grad_s,
                                          std::span<const double> v) {
    if (grad_s.size() != v.size()) throw config_error("chain_gradient: length mismatch");
    std::vector<double> grad_v(v.size());
    for (std::size_t d = 0; d < v.size(); ++d) grad_v[d] = grad_s[d] * squash_slope(v[d]);
    return grad_v;
}

// One Adam update with bias correction.
inline void adam_step(SelectionState& state, std::span<const double> grad_v,
                      const OptimizerConfig& cfg) {
    for (std::size_t d = 0; d < grad_v.size(); ++d) {
        if (!std::isfinite(grad_v[d])) {
            std::string coords;
            int listed = 0;
            for (std::size_t j = 0; j < grad_v.size() && listed < 8; ++j)
                if (!std::isfinite(grad_v[j])) {
                    coords += (listed ? "," : "") + std::to_string(j);
                    ++listed;
                }
            throw numeric_error("non-finite gradient at step " +
                                std::to_string(state.step + 1) + ", coordinates [" + coords +
                                "]");
        }
    }
    state.step += 1;
    const double bc1 = 1.0 - std::pow(cfg.adam_beta1, static_cast<double>(state.step));
    const double bc2 = 1.0 - std::pow(cfg.adam_beta2, static_cast<double>(state.step));
    for (std::size_t d = 0; d < grad_v.size(); ++d) {
        state.adam_m[d] = cfg.adam_beta1 * state.adam_m[d] + (1.0 - cfg.adam_beta1) * grad_v[d];
        state.adam_v[d] =
            cfg.adam_beta2 * state.adam_v[d] + (1.0 - cfg.adam_beta2) * grad_v[d] * grad_v[d];
        const double m_hat = state.adam_m[d] / bc1;
        const double v_hat = state.adam_v[d] / bc2;
        state.v[d] -= cfg.learning_rate * m_hat / (std::sqrt(v_hat) + cfg.adam_eps);
    }
}

namespace detail {

struct MicroBatch {
    std::size_t begin = 0;
    std::size_t end = 0; // exclusive, into the epoch's shuffled order
};

// Partition one epoch into optimizer steps: micro-batches of mini_batch_size
// rows are grouped until accumulation_target rows are reached; a trailing
// runt smaller than min_rows is merged into its predecessor.
inline std::vector<std::vector<MicroBatch>> plan_epoch(std::size_t n_rows,
                                                       std::size_t batch_size,
                                                       std::size_t target,
                                                       std::size_t min_rows) {
    std::vector<MicroBatch> micro;
    for (std::size_t begin = 0; begin < n_rows; begin += batch_size)
        micro.push_back({begin, std::min(begin + batch_size, n_rows)});
    if (micro.size() > 1) {
        auto& last = micro.back();
        if (last.end - last.begin < min_rows) {
            micro[micro.size() - 2].end = last.end;
            micro.pop_back();
        }
    }
    std::vector<std::vector<MicroBatch>> steps;
    std::size_t accumulated = 0;
    for (const auto& mb : micro) {
        if (steps.empty() || accumulated >= target) {
            steps.emplace_back();
            accumulated = 0;
        }
        steps.back().push_back(mb);
        accumulated += mb.end - mb.begin;
    }
    return steps;
}

} // namespace detail

// Minimize f(squash(v)) + (lambda/D) ||squash(v)||_1 with Adam over
// mini-batches. Deterministic given (dataset, configs, seeds). Pass `resume`
// to continue from a checkpointed state.
inline SelectionState fit(const Dataset& train, const PreprocessStats& stats,
                          const EstimatorConfig& est_cfg, const OptimizerConfig& opt_cfg,
                          double lambda, const SelectionState* resume = nullptr) {
    est_cfg.validate();
    opt_cfg.validate();
    if (!(lambda >= 0.0)) throw config_error("lambda must be >= 0");
    if (train.n_rows() == 0) throw data_error("fit: empty training set");

    const std::size_t n = train.n_rows();
    const std::size_t d = train.n_features();
    const std::size_t min_rows = static_cast<std::size_t>(est_cfg.order_k) + 1;
    const std::size_t batch_size = opt_cfg.mini_batch_size == 0
                                       ? n
                                       : std::min(opt_cfg.mini_batch_size, n);
    if (batch_size < min_rows)
        throw config_error("mini_batch_size (" + std::to_string(batch_size) +
                           ") must be >= order_k + 1 = " + std::to_string(min_rows));

    SelectionState state;
    if (resume) {
        if (resume->v.size() != d) throw config_error("resume state dimension mismatch");
        state = *resume;
        state.stop_reason.clear();
    } else {
        state.v.assign(d, 0.0);
        state.adam_m.assign(d, 0.0);
        state.adam_v.assign(d, 0.0);
    }
    state.lambda = lambda;

    Rng rng(opt_cfg.seed);
    std::vector<std::size_t> order(n);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;

    // The stop watches the EMA of per-step relative changes of the penalized
    // batch objective, so a single noisy batch landing near the previous
    // level cannot end the run.
    double prev_total = 0.0;
    double change_ema = 0.0;
    long long totals_seen = 0;
    constexpr long long stop_warmup = 10;
    const long long step_budget = opt_cfg.max_iterations;
    long long steps_done = 0;

    for (long long epoch = 0; opt_cfg.epochs == 0 || epoch < opt_cfg.epochs; ++epoch) {
        rng.shuffle(std::span<std::size_t>(order));
        const auto steps =
            detail::plan_epoch(n, batch_size, opt_cfg.accumulation_target, min_rows);
        for (const auto& step_batches : steps) {
            const auto s = squash(state.v);
            std::size_t rows_total = 0;
            for (const auto& mb : step_batches) rows_total += mb.end - mb.begin;

            double value = 0.0;
            std::vector<double> grad_s(d, 0.0);
            for (const auto& mb : step_batches) {
                const std::size_t rows = mb.end - mb.begin;
                std::span<const std::size_t> ids(order.data() + mb.begin, rows);
                const ColMatrix x = transform_batch(train, ids, stats);
                std::vector<double> y(rows);
                for (std::size_t i = 0; i < rows; ++i)
                    y[i] = train.label(ids[i]) - opt_cfg.label_offset;
                const BatchView batch{&x, y, static_cast<long long>(rows)};
                auto [f_b, g_b] = objective_and_gradient(batch, s, est_cfg);
                const double weight =
                    static_cast<double>(rows) / static_cast<double>(rows_total);
                value += weight * f_b;
                for (std::size_t j = 0; j < d; ++j) grad_s[j] += weight * g_b[j];
            }

            auto [pen_value, pen_grad] = penalty_and_grad(state.v, lambda);
            auto grad_v = chain_gradient(grad_s, state.v);
            for (std::size_t j = 0; j < d; ++j) grad_v[j] += pen_grad[j];

            double mean_s = 0.0;
            for (double sj : s) mean_s += sj;
            mean_s /= static_cast<double>(d);
            adam_step(state, grad_v, opt_cfg);
            state.trace.push_back({state.step, value, pen_value, mean_s});
            ++steps_done;

            const double total = value + pen_value;
            ++totals_seen;
            if (totals_seen > 1) {
                const double rel =
                    std::abs(total - prev_total) / std::max(std::abs(prev_total), 1e-12);
                change_ema = totals_seen == 2
                                 ? rel
                                 : opt_cfg.ema_decay * change_ema +
                                       (1.0 - opt_cfg.ema_decay) * rel;
                if (totals_seen > stop_warmup && change_ema < opt_cfg.rel_tolerance) {
                    prev_total = total;
                    state.stop_reason = "rel_tolerance";
                    return state;
                }
            }
            prev_total = total;
            if (steps_done >= step_budget) {
                state.stop_reason = "max_iterations";
                return state;
            }
        }
    }
    state.stop_reason = "epoch_budget";
    return state;
}

} // namespace fgsel
