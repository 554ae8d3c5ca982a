// Feature-selection toolkit driver. Subcommands cover the full pipeline:
//   synth    - generate benchmark datasets with known ground-truth support
//   select   - preprocess + gradient search + ranking artifacts
//   baseline - ANOVA-F / mutual-information filter rankings
//   evaluate - AUC-vs-size curves for a ranking, optional paired comparison
// Exit codes: 0 success, 2 usage/config error, 3 data error, 4 numerical
// failure.
#include <cstdio>
#include <exception>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "fgsel/baselines.hpp"
#include "fgsel/common.hpp"
#include "fgsel/dataset.hpp"
#include "fgsel/estimator.hpp"
#include "fgsel/eval.hpp"
#include "fgsel/io.hpp"
#include "fgsel/optimizer.hpp"
#include "fgsel/preprocess.hpp"
#include "fgsel/selection.hpp"
#include "fgsel/serialize.hpp"
#include "fgsel/synthetic.hpp"

namespace {

using nlohmann::json;

struct DataArgs {
    std::string path;
    std::string format = "auto"; // svmlight | csv | auto (by extension)
    std::size_t label_col = 0;
    std::size_t d_hint = 0;

    void attach(CLI::App* cmd, bool required = true) {
        auto* opt = cmd->add_option("data", path, "dataset file (svmlight or csv)");
        if (required) opt->required();
        cmd->add_option("--format", format, "dataset format: svmlight|csv|auto")
            ->check(CLI::IsMember({"svmlight", "csv", "auto"}));
        cmd->add_option("--label-col", label_col, "csv label column (0-based)");
        cmd->add_option("--d-hint", d_hint, "minimum feature count");
    }

    fgsel::Dataset load() const {
        std::string fmt = format;
        if (fmt == "auto")
            fmt = std::filesystem::path(path).extension() == ".csv" ? "csv" : "svmlight";
        if (fmt == "csv") return fgsel::load_csv(path, label_col);
        return fgsel::load_svmlight(
            path, d_hint > 0 ? std::optional<std::size_t>(d_hint) : std::nullopt);
    }

    json digest() const {
        return {{"data", path}, {"format", format}, {"label_col", label_col},
                {"d_hint", d_hint}};
    }
};

fgsel::Dataset load_named(const std::string& path) {
    if (std::filesystem::path(path).extension() == ".csv") return fgsel::load_csv(path, 0);
    return fgsel::load_svmlight(path);
}

int run_synth(const std::string& out_prefix, const fgsel::SynthSpec& spec) {
    const auto synth = fgsel::generate_synthetic(spec);
    fgsel::save_svmlight(synth.data, out_prefix + ".svm");
    fgsel::save_ranking(synth.true_support, out_prefix + ".support.txt");
    json digest{{"command", "synth"},
                {"n", spec.n_rows},
                {"d", spec.n_features},
                {"support", spec.support_size},
                {"noise", spec.noise_std},
                {"corr", spec.feature_correlation},
                {"seed", spec.seed},
                {"out", out_prefix}};
    fgsel::detail::write_json(digest, out_prefix + ".config.json");
    std::cout << "wrote " << out_prefix << ".svm (" << synth.data.n_rows() << " rows, "
              << synth.data.n_features() << " features), support size "
              << synth.true_support.size() << "\n";
    return 0;
}

struct SelectArgs {
    DataArgs data;
    int order = 4;
    std::vector<double> coeffs;
    std::string denominator = "exact";
    long long sample_cap = 1'000'000;
    double lambda = 0.0;
    std::vector<double> lambda_grid;
    std::vector<std::size_t> sizes;
    double val_fraction = 0.2;
    std::size_t batch_size = 0;
    std::size_t accumulate = 1000;
    long long epochs = 0;
    long long max_iters = 1000;
    double tol = 1e-5;
    double lr = 0.1;
    std::uint64_t seed = 0;
    std::size_t subsample_stats = 0;
    bool center_labels = false;
    std::string resume_path;
    std::string stats_in;
    std::string out_dir = ".";
    std::size_t max_scores_in_report = 100000;
};

int run_select(const SelectArgs& args) {
    namespace fs = std::filesystem;
    fs::create_directories(args.out_dir);
    const auto out = [&](const std::string& name) {
        return (fs::path(args.out_dir) / name).string();
    };

    fgsel::EstimatorConfig est = args.coeffs.empty()
                                     ? fgsel::EstimatorConfig::neumann(args.order)
                                     : fgsel::EstimatorConfig{};
    if (!args.coeffs.empty()) {
        est.order_k = args.order;
        est.coefficients = args.coeffs;
    }
    est.denominator_policy = args.denominator == "capped"
                                 ? fgsel::DenominatorPolicy::capped
                                 : fgsel::DenominatorPolicy::exact_log;
    est.sample_cap = args.sample_cap;
    est.validate();

    fgsel::OptimizerConfig opt;
    opt.learning_rate = args.lr;
    opt.max_iterations = args.max_iters;
    opt.rel_tolerance = args.tol;
    opt.epochs = args.epochs;
    opt.mini_batch_size = args.batch_size;
    opt.accumulation_target = args.accumulate;
    opt.seed = args.seed;

    const fgsel::Dataset train = args.data.load();
    if (args.center_labels) {
        double mean = 0.0;
        for (double y : train.labels()) mean += y;
        opt.label_offset = mean / static_cast<double>(std::max<std::size_t>(1, train.n_rows()));
    }

    json digest{{"command", "select"},
                {"dataset", args.data.digest()},
                {"order", est.order_k},
                {"coefficients", est.coefficients},
                {"denominator", args.denominator},
                {"sample_cap", args.sample_cap},
                {"lambda", args.lambda},
                {"lambda_grid", args.lambda_grid},
                {"sizes", args.sizes},
                {"val_fraction", args.val_fraction},
                {"batch_size", args.batch_size},
                {"accumulate", args.accumulate},
                {"epochs", args.epochs},
                {"max_iters", args.max_iters},
                {"tol", args.tol},
                {"lr", args.lr},
                {"seed", args.seed},
                {"subsample_stats", args.subsample_stats},
                {"center_labels", args.center_labels},
                {"resume", args.resume_path},
                {"stats_in", args.stats_in},
                {"out_dir", args.out_dir}};
    fgsel::detail::write_json(digest, out("config.json"));

    const auto obtain_stats = [&]() {
        if (!args.stats_in.empty()) return fgsel::load_stats(args.stats_in);
        return fgsel::fit_stats(train,
                                args.subsample_stats > 0
                                    ? std::optional<std::size_t>(args.subsample_stats)
                                    : std::nullopt,
                                args.seed);
    };

    fgsel::SelectionResult result;
    fgsel::SelectionState state;
    if (!args.lambda_grid.empty()) {
        // hold out a validation slice for the penalty grid search
        const auto parts = fgsel::split(
            train, {.train_fraction = 1.0 - args.val_fraction,
                    .validation_fraction = args.val_fraction - 1e-9, .seed = args.seed});
        std::vector<std::size_t> sizes = args.sizes;
        if (sizes.empty())
            sizes.push_back(std::max<std::size_t>(1, train.n_features() / 10));
        auto outcome = fgsel::grid_search_lambda(parts.train, parts.validation,
                                                 args.lambda_grid, sizes, est, opt);
        // refit on the full training data with the winning penalty
        const auto stats = obtain_stats();
        fgsel::save_stats(stats, out("stats.json"));
        state = fgsel::fit(train, stats, est, opt, outcome.best_lambda);
        result = fgsel::rank_features(state);
        std::cout << "grid search: best lambda " << outcome.best_lambda << "\n";
        for (const auto& [l, a] : outcome.grid_auc)
            std::cout << "  lambda " << l << " -> mean validation AUC " << a << "\n";
    } else {
        const auto stats = obtain_stats();
        fgsel::save_stats(stats, out("stats.json"));
        std::optional<fgsel::SelectionState> resume;
        if (!args.resume_path.empty()) resume = fgsel::load_checkpoint(args.resume_path);
        state = fgsel::fit(train, stats, est, opt, args.lambda,
                           resume ? &*resume : nullptr);
        result = fgsel::rank_features(state);
    }

    if (!args.sizes.empty()) result.build_subsets(args.sizes);
    fgsel::save_trace_csv(state.trace, out("trace.csv"));
    fgsel::save_checkpoint(state, out("checkpoint.json"));
    fgsel::save_ranking(result.ranking, out("ranking.txt"));
    fgsel::save_selection_report(result, out("report.json"), args.max_scores_in_report);
    for (const auto& [size, subset] : result.subsets)
        fgsel::save_ranking(subset, out("subset_" + std::to_string(size) + ".txt"));
    std::cout << "selection finished: " << state.step << " steps, stop: " << state.stop_reason
              << ", outputs in " << args.out_dir << "\n";
    return 0;
}

int run_baseline(const DataArgs& data, const std::string& method, std::size_t bins,
                 const std::string& out_path) {
    const fgsel::Dataset ds = data.load();
    std::vector<double> scores;
    if (method == "anova")
        scores = fgsel::anova_f_scores(ds);
    else
        scores = fgsel::mutual_info_scores(ds, bins);
    const auto ranking = fgsel::rank_by_score(scores);
    fgsel::save_ranking(ranking, out_path);
    json digest{{"command", "baseline"}, {"dataset", data.digest()}, {"method", method},
                {"bins", bins},          {"out", out_path}};
    fgsel::detail::write_json(digest, out_path + ".config.json");
    std::cout << "wrote ranking for " << ds.n_features() << " features to " << out_path
              << "\n";
    return 0;
}

struct EvaluateArgs {
    std::string ranking_path;
    std::string compare_path;
    std::string train_path;
    std::string test_path;
    std::vector<std::size_t> sizes;
    std::string out_path = "eval.csv";
    std::string mode = "batch";
    long long epochs = 5;
    double lr = 1.0;
    double l2 = 1e-6;
    std::uint64_t seed = 0;
};

int run_evaluate(const EvaluateArgs& args) {
    const fgsel::Dataset train = load_named(args.train_path);
    const fgsel::Dataset test = load_named(args.test_path);
    for (std::size_t m : args.sizes)
        if (m > train.n_features())
            throw fgsel::config_error("size " + std::to_string(m) +
                                      " exceeds feature count " +
                                      std::to_string(train.n_features()));

    fgsel::LogRegConfig cfg;
    cfg.mode = args.mode == "sgd" ? fgsel::LogRegConfig::Mode::sgd
                                  : fgsel::LogRegConfig::Mode::batch;
    cfg.epochs = args.epochs;
    cfg.learning_rate = args.lr;
    cfg.l2 = args.l2;
    cfg.seed = args.seed;

    std::vector<fgsel::EvalReport> reports;
    const auto ranking = fgsel::load_ranking(args.ranking_path);
    reports.push_back(
        fgsel::evaluate_selector(std::filesystem::path(args.ranking_path).stem().string(),
                                 ranking, args.sizes, train, test, cfg));
    if (!args.compare_path.empty()) {
        const auto other = fgsel::load_ranking(args.compare_path);
        reports.push_back(fgsel::evaluate_selector(
            std::filesystem::path(args.compare_path).stem().string(), other, args.sizes,
            train, test, cfg));
        if (reports[0].aucs.size() >= 2) {
            const auto ttest = fgsel::paired_ttest(reports[0].aucs, reports[1].aucs);
            std::printf("paired t-test (%s vs %s): t=%.6f p=%.6g%s\n",
                        reports[0].selector.c_str(), reports[1].selector.c_str(), ttest.t,
                        ttest.p, ttest.degenerate ? " (degenerate)" : "");
        } else {
            std::printf("paired t-test skipped: needs at least 2 subset sizes\n");
        }
    }
    fgsel::save_eval_csv(reports, args.out_path);
    json digest{{"command", "evaluate"}, {"ranking", args.ranking_path},
                {"compare", args.compare_path}, {"train", args.train_path},
                {"test", args.test_path},       {"sizes", args.sizes},
                {"mode", args.mode},            {"epochs", args.epochs},
                {"lr", args.lr},                {"l2", args.l2},
                {"seed", args.seed},            {"out", args.out_path}};
    fgsel::detail::write_json(digest, args.out_path + ".config.json");
    for (const auto& r : reports)
        for (std::size_t i = 0; i < r.sizes.size(); ++i)
            std::cout << r.selector << " size " << r.sizes[i] << ": AUC " << r.aucs[i]
                      << "\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"feature selection via gradient search over relaxed subset indicators"};
    app.require_subcommand(1);

    // synth
    auto* synth = app.add_subcommand("synth", "generate a synthetic benchmark dataset");
    fgsel::SynthSpec synth_spec;
    std::string synth_out = "synthetic";
    synth->add_option("--n", synth_spec.n_rows, "rows")->required();
    synth->add_option("--d", synth_spec.n_features, "features")->required();
    synth->add_option("--support", synth_spec.support_size, "informative feature count")
        ->required();
    synth->add_option("--noise", synth_spec.noise_std, "latent noise std");
    synth->add_option("--corr", synth_spec.feature_correlation, "equicorrelation in [0,1)");
    synth->add_option("--seed", synth_spec.seed, "rng seed");
    synth->add_option("--out", synth_out, "output prefix");

    // select
    auto* select = app.add_subcommand("select", "run the gradient feature search");
    SelectArgs sel;
    sel.data.attach(select);
    select->add_option("--order", sel.order, "estimator order k");
    select->add_option("--coeffs", sel.coeffs,
                       "series coefficients (default: truncated Neumann set)")
        ->delimiter(',');
    select->add_option("--denominator", sel.denominator, "binomial policy: exact|capped")
        ->check(CLI::IsMember({"exact", "capped"}));
    select->add_option("--sample-cap", sel.sample_cap, "sample cap for capped policy");
    select->add_option("--lambda", sel.lambda, "penalty weight");
    select->add_option("--lambda-grid", sel.lambda_grid, "grid-searched penalty weights")
        ->delimiter(',');
    select->add_option("--sizes", sel.sizes, "subset sizes to emit / grid-search target")
        ->delimiter(',');
    select->add_option("--val-fraction", sel.val_fraction,
                       "validation fraction for the grid search");
    select->add_option("--batch-size", sel.batch_size, "mini-batch rows (0 = full batch)");
    select->add_option("--accumulate", sel.accumulate,
                       "accumulate gradients up to this many rows per step");
    select->add_option("--epochs", sel.epochs, "epoch budget (0 = none)");
    select->add_option("--max-iters", sel.max_iters, "max optimizer steps");
    select->add_option("--tol", sel.tol, "relative-change stopping tolerance");
    select->add_option("--lr", sel.lr, "learning rate");
    select->add_option("--seed", sel.seed, "rng seed");
    select->add_option("--subsample-stats", sel.subsample_stats,
                       "fit normalization stats on this many rows (0 = all)");
    select->add_flag("--center-labels", sel.center_labels, "subtract the label mean");
    select->add_option("--resume", sel.resume_path, "checkpoint to resume from");
    select->add_option("--stats-in", sel.stats_in,
                       "reuse a stats sidecar instead of refitting");
    select->add_option("--out-dir", sel.out_dir, "output directory");
    select->add_option("--max-scores-in-report", sel.max_scores_in_report,
                       "omit scores from report.json above this feature count");

    // baseline
    auto* baseline = app.add_subcommand("baseline", "rank features with a filter method");
    DataArgs base_data;
    base_data.attach(baseline);
    std::string base_method;
    std::size_t base_bins = 16;
    std::string base_out = "baseline_ranking.txt";
    baseline->add_option("--method", base_method, "anova|mi")
        ->required()
        ->check(CLI::IsMember({"anova", "mi"}));
    baseline->add_option("--bins", base_bins, "histogram bins for mi");
    baseline->add_option("--out", base_out, "ranking output path");

    // evaluate
    auto* evaluate = app.add_subcommand("evaluate", "AUC-vs-size curve for a ranking");
    EvaluateArgs ev;
    evaluate->add_option("--ranking", ev.ranking_path, "ranking file")->required();
    evaluate->add_option("--compare", ev.compare_path, "second ranking for a paired t-test");
    evaluate->add_option("--train", ev.train_path, "training dataset")->required();
    evaluate->add_option("--test", ev.test_path, "test dataset")->required();
    evaluate->add_option("--sizes", ev.sizes, "subset sizes")->required()->delimiter(',');
    evaluate->add_option("--out", ev.out_path, "output CSV");
    evaluate->add_option("--mode", ev.mode, "batch|sgd")
        ->check(CLI::IsMember({"batch", "sgd"}));
    evaluate->add_option("--epochs", ev.epochs, "sgd epochs");
    evaluate->add_option("--lr", ev.lr, "learning rate");
    evaluate->add_option("--l2", ev.l2, "l2 regularization");
    evaluate->add_option("--seed", ev.seed, "rng seed");

    try {
        app.parse(argc, argv);
        if (*synth) return run_synth(synth_out, synth_spec);
        if (*select) return run_select(sel);
        if (*baseline) return run_baseline(base_data, base_method, base_bins, base_out);
        if (*evaluate) return run_evaluate(ev);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return 0; // --help
        app.exit(e);
        return 2;
    } catch (const fgsel::config_error& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return 2;
    } catch (const fgsel::data_error& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return 3;
    } catch (const fgsel::numeric_error& e) {
        std::cerr << "numerical failure: " << e.what() << "\n";
        return 4;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 4;
    }
    return 2;
}
