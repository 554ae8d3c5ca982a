#pragma once

#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "fgsel/common.hpp"
#include "fgsel/eval.hpp"
#include "fgsel/optimizer.hpp"
#include "fgsel/preprocess.hpp"
#include "fgsel/selection.hpp"

namespace fgsel {

namespace detail {

inline nlohmann::json load_json(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw data_error("cannot open '" + path + "'");
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw parse_error("bad JSON in '" + path + "': " + e.what());
    }
    return j;
}

inline void write_json(const nlohmann::json& j, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw data_error("cannot write '" + path + "'");
    out << j.dump(2) << '\n';
    if (!out) throw data_error("write failed for '" + path + "'");
}

} // namespace detail

inline void save_stats(const PreprocessStats& stats, const std::string& path) {
    nlohmann::json j;
    j["means"] = stats.means;
    j["spectral_scale"] = stats.spectral_scale;
    j["fitted_on"] = stats.fitted_on;
    detail::write_json(j, path);
}

inline PreprocessStats load_stats(const std::string& path) {
    const auto j = detail::load_json(path);
    PreprocessStats stats;
    stats.means = j.at("means").get<std::vector<double>>();
    stats.spectral_scale = j.at("spectral_scale").get<double>();
    stats.fitted_on = j.at("fitted_on").get<std::size_t>();
    if (!(stats.spectral_scale > 0.0)) throw data_error("stats: spectral_scale must be > 0");
    return stats;
}

inline void save_checkpoint(const SelectionState& state, const std::string& path) {
    nlohmann::json j;
    j["v"] = state.v;
    j["adam_m"] = state.adam_m;
    j["adam_v"] = state.adam_v;
    j["step"] = state.step;
    j["lambda"] = state.lambda;
    j["stop_reason"] = state.stop_reason;
    detail::write_json(j, path);
}

inline SelectionState load_checkpoint(const std::string& path) {
    const auto j = detail::load_json(path);
    SelectionState state;
    state.v = j.at("v").get<std::vector<double>>();
    state.adam_m = j.at("adam_m").get<std::vector<double>>();
    state.adam_v = j.at("adam_v").get<std::vector<double>>();
    state.step = j.at("step").get<long long>();
    state.lambda = j.at("lambda").get<double>();
    if (state.adam_m.size() != state.v.size() || state.adam_v.size() != state.v.size())
        throw data_error("checkpoint: moment/parameter size mismatch");
    return state;
}

inline void save_trace_csv(const std::vector<TracePoint>& trace, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw data_error("cannot write '" + path + "'");
    out << "step,objective,penalty,mean_s\n";
    char buf[128];
    for (const auto& p : trace) {
        std::snprintf(buf, sizeof(buf), "%lld,%.17g,%.17g,%.17g\n", p.step, p.objective,
                      p.penalty, p.mean_score);
        out << buf;
    }
}

// Ranked feature list, one 0-based index per line; shared by every selector.
inline void save_ranking(std::span<const std::size_t> ranking, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw data_error("cannot write '" + path + "'");
    for (std::size_t j : ranking) out << j << '\n';
    if (!out) throw data_error("write failed for '" + path + "'");
}

inline std::vector<std::size_t> load_ranking(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw data_error("cannot open '" + path + "'");
    std::vector<std::size_t> ranking;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        try {
            ranking.push_back(std::stoull(line));
        } catch (const std::exception&) {
            throw parse_error("line " + std::to_string(line_no) + ": bad index '" + line +
                              "'");
        }
    }
    if (ranking.empty()) throw data_error("ranking file '" + path + "' is empty");
    return ranking;
}

// scores_limit: omit per-feature scores above this feature count to keep
// reports small on wide data.
inline void save_selection_report(const SelectionResult& result, const std::string& path,
                                  std::size_t scores_limit = 100000) {
    nlohmann::json j;
    j["lambda_used"] = result.lambda_used;
    j["n_features"] = result.scores.size();
    j["ranking"] = result.ranking;
    if (result.scores.size() <= scores_limit) j["scores"] = result.scores;
    nlohmann::json subsets = nlohmann::json::object();
    for (const auto& [size, subset] : result.subsets) subsets[std::to_string(size)] = subset;
    j["subsets"] = subsets;
    detail::write_json(j, path);
}

inline void save_eval_csv(const std::vector<EvalReport>& reports, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw data_error("cannot write '" + path + "'");
    out << "selector,size,auc,seconds\n";
    char buf[160];
    for (const auto& r : reports)
        for (std::size_t i = 0; i < r.sizes.size(); ++i) {
            std::snprintf(buf, sizeof(buf), "%s,%zu,%.17g,%.6f\n", r.selector.c_str(),
                          r.sizes[i], r.aucs[i], r.seconds[i]);
            out << buf;
        }
}

} // namespace fgsel
