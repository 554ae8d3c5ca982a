#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "fgsel/common.hpp"
#include "fgsel/dataset.hpp"
#include "fgsel/estimator.hpp"
#include "fgsel/eval.hpp"
#include "fgsel/optimizer.hpp"
#include "fgsel/preprocess.hpp"

namespace fgsel {

struct SelectionResult {
    std::vector<double> scores;              // squash(v), in (0,1)^D
    std::vector<std::size_t> ranking;        // descending score, ties by index
    std::map<std::size_t, std::vector<std::size_t>> subsets; // size -> top-m indices
    double lambda_used = 0.0;

    void build_subsets(std::span<const std::size_t> sizes) {
        for (std::size_t m : sizes) {
            if (m > ranking.size()) throw config_error("subset size exceeds feature count");
            subsets[m] = {ranking.begin(), ranking.begin() + m};
        }
    }
};

// Descending-score ranking with ascending-index tie break.
inline std::vector<std::size_t> rank_by_score(std::span<const double> scores) {
    std::vector<std::size_t> ranking(scores.size());
    std::iota(ranking.begin(), ranking.end(), std::size_t{0});
    std::sort(ranking.begin(), ranking.end(), [&](std::size_t a, std::size_t b) {
        if (scores[a] != scores[b]) return scores[a] > scores[b];
        return a < b;
    });
    return ranking;
}

inline SelectionResult rank_features(const SelectionState& state) {
    SelectionResult result;
    result.scores = squash(state.v);
    result.ranking = rank_by_score(result.scores);
    result.lambda_used = state.lambda;
    return result;
}

// Default penalty grid; the (1/D) normalization already lives inside the
// penalty term.
inline std::vector<double> default_lambda_grid() { return {0.01, 0.1, 1.0, 10.0}; }

struct GridSearchOutcome {
    double best_lambda = 0.0;
    SelectionResult result;
    std::vector<std::pair<double, double>> grid_auc; // (lambda, mean validation AUC)
};

// Fit once per lambda, score each by mean validation AUC over target_sizes,
// return the best (ties go to the smaller lambda).
inline GridSearchOutcome grid_search_lambda(const Dataset& train, const Dataset& validation,
                                            std::vector<double> lambdas,
                                            std::vector<std::size_t> target_sizes,
                                            const EstimatorConfig& est_cfg,
                                            const OptimizerConfig& opt_cfg,
                                            const LogRegConfig& logreg_cfg = {}) {
    if (lambdas.empty()) throw config_error("lambda grid is empty");
    if (validation.n_rows() == 0) throw data_error("validation set is empty");
    std::sort(lambdas.begin(), lambdas.end());
    lambdas.erase(std::unique(lambdas.begin(), lambdas.end()), lambdas.end());
    if (target_sizes.empty()) throw config_error("target_sizes is empty");

    const PreprocessStats stats = fit_stats(train, std::nullopt, opt_cfg.seed);

    GridSearchOutcome outcome;
    bool have_best = false;
    double best_auc = 0.0;
    std::vector<std::string> failures;
    for (double lambda : lambdas) {
        try {
            const SelectionState state = fit(train, stats, est_cfg, opt_cfg, lambda);
            SelectionResult result = rank_features(state);
            const EvalReport report =
                evaluate_selector("fg", result.ranking, target_sizes, train, validation,
                                  logreg_cfg);
            double mean_auc = 0.0;
            for (double a : report.aucs) mean_auc += a;
            mean_auc /= static_cast<double>(report.aucs.size());
            outcome.grid_auc.emplace_back(lambda, mean_auc);
            if (!have_best || mean_auc > best_auc) {
                have_best = true;
                best_auc = mean_auc;
                outcome.best_lambda = lambda;
                outcome.result = std::move(result);
            }
        } catch (const std::exception& e) {
            failures.push_back("lambda=" + std::to_string(lambda) + ": " + e.what());
        }
    }
    if (!have_best) {
        std::string msg = "grid search failed for every lambda:";
        for (const auto& f : failures) msg += "\n  " + f;
        throw data_error(msg);
    }
    return outcome;
}

} // namespace fgsel
