#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "fgsel/optimizer.hpp"
#include "fgsel/preprocess.hpp"
#include "fgsel/synthetic.hpp"
#include "oracles.hpp"

using namespace fgsel;

namespace {

double rel_err(double a, double b, double floor = 1e-300) {
    return std::abs(a - b) / std::max({std::abs(a), std::abs(b), floor});
}

SelectionState fresh_state(std::size_t d) {
    SelectionState st;
    st.v.assign(d, 0.0);
    st.adam_m.assign(d, 0.0);
    st.adam_v.assign(d, 0.0);
    return st;
}

} // namespace

TEST(Squash, ZeroMapsToHalf) {
    const std::vector<double> v(5, 0.0);
    for (double s : squash(v)) EXPECT_DOUBLE_EQ(s, 0.5);
}

TEST(Squash, Asymptotes) {
    const std::vector<double> v{-700.0, -30.0, 30.0, 700.0};
    const auto s = squash(v);
    EXPECT_GT(s[0], 0.0);
    EXPECT_LT(s[0], 1e-300);
    EXPECT_LT(s[1], 1e-20);
    EXPECT_GT(s[2], 1.0 - 1e-15); // clamped to the open interval
    EXPECT_LT(s[3], 1.0);
    for (double x : s) {
        EXPECT_GT(x, 0.0);
        EXPECT_LT(x, 1.0);
    }
}

TEST(Squash, MatchesTanhForm) {
    Rng rng(2);
    std::vector<double> v(64);
    for (double& x : v) x = 8.0 * (rng.uniform() - 0.5);
    const auto s = squash(v);
    for (std::size_t i = 0; i < v.size(); ++i)
        EXPECT_NEAR(s[i], 0.5 * (std::tanh(v[i]) + 1.0), 1e-12);
}

TEST(Penalty, ZeroLambdaIsZero) {
    const std::vector<double> v{0.3, -1.0, 2.0};
    const auto [value, grad] = penalty_and_grad(v, 0.0);
    EXPECT_DOUBLE_EQ(value, 0.0);
    for (double g : grad) EXPECT_DOUBLE_EQ(g, 0.0);
}

TEST(Penalty, AtZeroParameters) {
    const std::size_t d = 8;
    const std::vector<double> v(d, 0.0);
    const double lambda = 3.0;
    const auto [value, grad] = penalty_and_grad(v, lambda);
    EXPECT_NEAR(value, lambda / 2.0, 1e-15);
    for (double g : grad) EXPECT_NEAR(g, lambda / (2.0 * static_cast<double>(d)), 1e-15);
}

TEST(Penalty, FiniteDifferenceCheck) {
    Rng rng(3);
    std::vector<double> v(10);
    for (double& x : v) x = 3.0 * (rng.uniform() - 0.5);
    const double lambda = 1.7;
    const auto [value, grad] = penalty_and_grad(v, lambda);
    const auto fd = oracle::central_fd(
        [&](std::span<const double> p) { return penalty_and_grad(p, lambda).first; }, v, 1e-6);
    for (std::size_t i = 0; i < v.size(); ++i) EXPECT_LE(rel_err(grad[i], fd[i], 1e-9), 1e-7);
}

TEST(ChainGradient, SaturatedGateKillsGradient) {
    const std::vector<double> grad_s{1.0, 1.0};
    const std::vector<double> v{40.0, -40.0};
    const auto grad_v = chain_gradient(grad_s, v);
    EXPECT_LT(std::abs(grad_v[0]), 1e-30);
    EXPECT_LT(std::abs(grad_v[1]), 1e-30);
}

TEST(ChainGradient, HalfAtZero) {
    const std::vector<double> grad_s{2.0, -3.0};
    const std::vector<double> v{0.0, 0.0};
    const auto grad_v = chain_gradient(grad_s, v);
    EXPECT_DOUBLE_EQ(grad_v[0], 1.0);
    EXPECT_DOUBLE_EQ(grad_v[1], -1.5);
}

TEST(ChainGradient, CompositeFiniteDifference) {
    // d/dv [ f(squash(v)) + penalty(v) ] against central differences
    Rng rng(4);
    const std::size_t n = 30, d = 6;
    ColMatrix x(n, d);
    for (std::size_t c = 0; c < d; ++c)
        for (std::size_t r = 0; r < n; ++r) x.at(r, c) = rng.normal();
    std::vector<double> y(n);
    for (double& yy : y) yy = rng.uniform() < 0.5 ? -1.0 : 1.0;
    const BatchView batch{&x, y, static_cast<long long>(n)};
    const auto cfg = EstimatorConfig::neumann(3);
    const double lambda = 0.8;

    const auto composite = [&](std::span<const double> v) {
        const auto s = squash(v);
        return objective(batch, s, cfg) + penalty_and_grad(v, lambda).first;
    };
    for (int trial = 0; trial < 5; ++trial) {
        std::vector<double> v(d);
        for (double& vv : v) vv = 2.0 * (rng.uniform() - 0.5);
        const auto s = squash(v);
        const auto grad_s = gradient(batch, s, cfg);
        auto analytic = chain_gradient(grad_s, v);
        const auto pen = penalty_and_grad(v, lambda);
        for (std::size_t j = 0; j < d; ++j) analytic[j] += pen.second[j];
        const auto fd = oracle::central_fd(composite, v, 1e-5);
        for (std::size_t j = 0; j < d; ++j)
            EXPECT_LE(rel_err(analytic[j], fd[j], 1e-4), 1e-5);
    }
}

TEST(AdamStep, ZeroGradientLeavesFreshStateUnchanged) {
    auto st = fresh_state(4);
    const std::vector<double> zero(4, 0.0);
    OptimizerConfig cfg;
    adam_step(st, zero, cfg);
    for (double v : st.v) EXPECT_DOUBLE_EQ(v, 0.0);
    EXPECT_EQ(st.step, 1);
}

TEST(AdamStep, ConstantGradientStepApproachesLearningRate) {
    auto st = fresh_state(3);
    OptimizerConfig cfg;
    cfg.learning_rate = 0.1;
    const std::vector<double> grad{0.5, -2.0, 0.01};
    std::vector<double> prev = st.v;
    double last_step = 0.0;
    for (int i = 0; i < 500; ++i) {
        prev = st.v;
        adam_step(st, grad, cfg);
    }
    for (std::size_t j = 0; j < 3; ++j) {
        last_step = std::abs(st.v[j] - prev[j]);
        EXPECT_NEAR(last_step, cfg.learning_rate, 0.05 * cfg.learning_rate);
    }
}

TEST(AdamStep, DeterministicTrajectories) {
    OptimizerConfig cfg;
    auto a = fresh_state(2);
    auto b = fresh_state(2);
    Rng rng(5);
    for (int i = 0; i < 50; ++i) {
        const std::vector<double> grad{rng.normal(), rng.normal()};
        adam_step(a, grad, cfg);
        adam_step(b, grad, cfg);
    }
    EXPECT_EQ(a.v, b.v);
    EXPECT_EQ(a.adam_m, b.adam_m);
    EXPECT_EQ(a.adam_v, b.adam_v);
}

TEST(AdamStep, NonFiniteGradientAborts) {
    auto st = fresh_state(3);
    st.step = 41;
    const std::vector<double> grad{0.0, std::nan(""), 0.0};
    OptimizerConfig cfg;
    try {
        adam_step(st, grad, cfg);
        FAIL() << "expected numeric_error";
    } catch (const numeric_error& e) {
        const std::string msg = e.what();
        EXPECT_NE(msg.find("step 42"), std::string::npos) << msg;
        EXPECT_NE(msg.find("1"), std::string::npos) << msg;
    }
}

namespace {

struct FitFixture {
    Dataset data;
    PreprocessStats stats;
    std::vector<std::size_t> support;

    explicit FitFixture(const SynthSpec& spec) {
        auto synth = generate_synthetic(spec);
        data = std::move(synth.data);
        support = std::move(synth.true_support);
        stats = fit_stats(data);
    }
};

} // namespace

TEST(Fit, HugeLambdaSuppressesEverything) {
    FitFixture fx({.n_rows = 60, .n_features = 10, .support_size = 2, .noise_std = 1.0,
                   .feature_correlation = 0.0, .seed = 21});
    OptimizerConfig opt;
    opt.max_iterations = 400;
    opt.rel_tolerance = 1e-9;
    const auto state = fit(fx.data, fx.stats, EstimatorConfig::neumann(1), opt, 1e6);
    const auto s = squash(state.v);
    double mean = std::accumulate(s.begin(), s.end(), 0.0) / static_cast<double>(s.size());
    EXPECT_LT(mean, 0.05);
    for (double x : s) {
        EXPECT_GT(x, 0.0);
        EXPECT_LT(x, 1.0);
    }
}

TEST(Fit, PerfectFeatureWinsWithoutPenalty) {
    // mini-batches matter here: noise features see sign-flipping gradients,
    // so Adam's normalized step stays small for them while the predictive
    // feature climbs at the full rate
    FitFixture fx({.n_rows = 500, .n_features = 8, .support_size = 1, .noise_std = 0.0,
                   .feature_correlation = 0.0, .seed = 22});
    OptimizerConfig opt;
    opt.max_iterations = 200;
    opt.mini_batch_size = 64;
    opt.accumulation_target = 64;
    const auto state = fit(fx.data, fx.stats, EstimatorConfig::neumann(2), opt, 0.0);
    const auto s = squash(state.v);
    const std::size_t target = fx.support[0];
    for (std::size_t j = 0; j < s.size(); ++j)
        if (j != target) EXPECT_LT(s[j], s[target]);
}

TEST(Fit, PlateauTriggersToleranceStop) {
    // no informative features: the objective flatlines immediately
    FitFixture fx({.n_rows = 200, .n_features = 6, .support_size = 0, .noise_std = 1.0,
                   .feature_correlation = 0.0, .seed = 23});
    OptimizerConfig opt;
    opt.max_iterations = 1000;
    const auto state = fit(fx.data, fx.stats, EstimatorConfig::neumann(1), opt, 0.0);
    EXPECT_EQ(state.stop_reason, "rel_tolerance");
    EXPECT_LT(state.step, 1000);
    EXPECT_EQ(state.trace.size(), static_cast<std::size_t>(state.step));
}

TEST(Fit, DeterministicGivenSeeds) {
    FitFixture fx({.n_rows = 150, .n_features = 7, .support_size = 2, .noise_std = 0.5,
                   .feature_correlation = 0.2, .seed = 24});
    OptimizerConfig opt;
    opt.max_iterations = 60;
    opt.mini_batch_size = 32;
    opt.accumulation_target = 64;
    opt.seed = 9;
    const auto a = fit(fx.data, fx.stats, EstimatorConfig::neumann(2), opt, 0.05);
    const auto b = fit(fx.data, fx.stats, EstimatorConfig::neumann(2), opt, 0.05);
    EXPECT_EQ(a.v, b.v);
    ASSERT_EQ(a.trace.size(), b.trace.size());
    for (std::size_t i = 0; i < a.trace.size(); ++i) {
        EXPECT_DOUBLE_EQ(a.trace[i].objective, b.trace[i].objective);
        EXPECT_DOUBLE_EQ(a.trace[i].penalty, b.trace[i].penalty);
    }
}

TEST(Fit, FullBatchObjectiveDescendsToAStablePlateau) {
    // Adam's normalized steps keep a 1-2% bounce once the run reaches its
    // plateau, so per-step monotonicity only holds through the descent
    // phase; what must hold throughout is steady net progress and a bounded
    // plateau.
    FitFixture fx({.n_rows = 300, .n_features = 10, .support_size = 3, .noise_std = 1.0,
                   .feature_correlation = 0.0, .seed = 25});
    const OptimizerConfig opt;
    const auto state = fit(fx.data, fx.stats, EstimatorConfig::neumann(2), opt, 0.1);
    ASSERT_GT(state.trace.size(), 30u);
    std::vector<double> total(state.trace.size());
    for (std::size_t i = 0; i < total.size(); ++i)
        total[i] = state.trace[i].objective + state.trace[i].penalty;
    for (std::size_t i = 1; i < 9; ++i) EXPECT_LT(total[i], total[i - 1]);
    const double best = *std::min_element(total.begin(), total.end());
    EXPECT_LT(best, 0.8 * total[0]);
    double tail = 0.0;
    for (std::size_t i = total.size() - 20; i < total.size(); ++i) tail += total[i];
    tail /= 20.0;
    EXPECT_LT(tail, best + 0.1 * (total[0] - best));
}

TEST(Fit, EpochBudgetAndAccumulationPlan) {
    FitFixture fx({.n_rows = 100, .n_features = 5, .support_size = 1, .noise_std = 1.0,
                   .feature_correlation = 0.0, .seed = 26});
    OptimizerConfig opt;
    opt.mini_batch_size = 32;
    opt.accumulation_target = 64;
    opt.epochs = 3;
    opt.max_iterations = 1000;
    opt.rel_tolerance = 1e-15;
    const auto state = fit(fx.data, fx.stats, EstimatorConfig::neumann(1), opt, 0.0);
    // micro-batches 32/32/32/4 -> runt merged -> 32/32/36; steps: (32+32), 36
    EXPECT_EQ(state.stop_reason, "epoch_budget");
    EXPECT_EQ(state.trace.size(), 6u);
}

TEST(Fit, PermutedColumnsGivePermutedParameters) {
    const SynthSpec spec{.n_rows = 80, .n_features = 12, .support_size = 3, .noise_std = 0.5,
                         .feature_correlation = 0.2, .seed = 27};
    const auto synth = generate_synthetic(spec);
    const auto stats = fit_stats(synth.data);

    // permutation: reverse the columns
    const std::size_t d = spec.n_features;
    std::vector<std::size_t> perm(d);
    for (std::size_t j = 0; j < d; ++j) perm[j] = d - 1 - j;

    Dataset permuted;
    permuted.set_n_features(d);
    std::vector<double> dense(d), dense_p(d);
    for (std::size_t i = 0; i < synth.data.n_rows(); ++i) {
        std::fill(dense.begin(), dense.end(), 0.0);
        auto idx = synth.data.row_indices(i);
        auto val = synth.data.row_values(i);
        for (std::size_t k = 0; k < idx.size(); ++k) dense[idx[k]] = val[k];
        for (std::size_t j = 0; j < d; ++j) dense_p[perm[j]] = dense[j];
        permuted.append_dense_row(dense_p, synth.data.label(i));
    }
    PreprocessStats stats_p = stats;
    for (std::size_t j = 0; j < d; ++j) stats_p.means[perm[j]] = stats.means[j];

    OptimizerConfig opt;
    opt.max_iterations = 120;
    opt.rel_tolerance = 1e-12;
    const auto base = fit(synth.data, stats, EstimatorConfig::neumann(2), opt, 0.0);
    const auto mirrored = fit(permuted, stats_p, EstimatorConfig::neumann(2), opt, 0.0);
    for (std::size_t j = 0; j < d; ++j)
        EXPECT_NEAR(mirrored.v[perm[j]], base.v[j], 1e-9);
}

TEST(Fit, TooSmallBatchIsConfigError) {
    FitFixture fx({.n_rows = 50, .n_features = 4, .support_size = 1, .noise_std = 1.0,
                   .feature_correlation = 0.0, .seed = 28});
    OptimizerConfig opt;
    opt.mini_batch_size = 3; // order 4 needs >= 5 rows
    EXPECT_THROW(fit(fx.data, fx.stats, EstimatorConfig::neumann(4), opt, 0.0), config_error);
}
