#pragma once

#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "fgsel/dataset.hpp"

namespace fgsel {

namespace detail {

inline double parse_double(std::string_view tok, std::size_t line_no, const char* what) {
    if (tok.size() > 1 && tok.front() == '+') tok.remove_prefix(1); // from_chars rejects '+'
    double out = 0.0;
    const auto* end = tok.data() + tok.size();
    auto res = std::from_chars(tok.data(), end, out);
    if (res.ec != std::errc{} || res.ptr != end)
        throw parse_error("line " + std::to_string(line_no) + ": bad " + what + " '" +
                          std::string(tok) + "'");
    return out;
}

inline long long parse_int(std::string_view tok, std::size_t line_no, const char* what) {
    if (tok.size() > 1 && tok.front() == '+') tok.remove_prefix(1);
    long long out = 0;
    const auto* end = tok.data() + tok.size();
    auto res = std::from_chars(tok.data(), end, out);
    if (res.ec != std::errc{} || res.ptr != end)
        throw parse_error("line " + std::to_string(line_no) + ": bad " + what + " '" +
                          std::string(tok) + "'");
    return out;
}

inline std::vector<std::string_view> split_ws(std::string_view line) {
    std::vector<std::string_view> toks;
    std::size_t i = 0;
    while (i < line.size()) {
        while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
        std::size_t j = i;
        while (j < line.size() && line[j] != ' ' && line[j] != '\t') ++j;
        if (j > i) toks.push_back(line.substr(i, j - i));
        i = j;
    }
    return toks;
}

} // namespace detail

// svmlight/libsvm text: `label idx:val ...` with 1-based indices. Trailing
// `# comment` is stripped. Nonpositive labels map to -1, positive to +1.
inline Dataset load_svmlight(const std::string& path,
                             std::optional<std::size_t> d_hint = std::nullopt) {
    std::ifstream in(path);
    if (!in) throw data_error("cannot open '" + path + "'");
    Dataset ds;
    ds.name = std::filesystem::path(path).stem().string();

    std::string line;
    std::size_t line_no = 0;
    std::vector<std::uint32_t> idx;
    std::vector<double> val;
    while (std::getline(in, line)) {
        ++line_no;
        std::string_view sv(line);
        if (auto hash = sv.find('#'); hash != std::string_view::npos) sv = sv.substr(0, hash);
        auto toks = detail::split_ws(sv);
        if (toks.empty()) continue;

        const double raw_label = detail::parse_double(toks[0], line_no, "label");
        idx.clear();
        val.clear();
        std::uint32_t prev = 0;
        for (std::size_t t = 1; t < toks.size(); ++t) {
            const auto colon = toks[t].find(':');
            if (colon == std::string_view::npos)
                throw parse_error("line " + std::to_string(line_no) +
                                  ": expected idx:val, got '" + std::string(toks[t]) + "'");
            const long long one_based =
                detail::parse_int(toks[t].substr(0, colon), line_no, "index");
            if (one_based <= 0)
                throw parse_error("line " + std::to_string(line_no) +
                                  ": index must be >= 1, got " + std::to_string(one_based));
            const auto zero_based = static_cast<std::uint32_t>(one_based - 1);
            if (!idx.empty() && zero_based <= prev)
                throw parse_error("line " + std::to_string(line_no) +
                                  ": indices must be strictly increasing");
            prev = zero_based;
            idx.push_back(zero_based);
            val.push_back(detail::parse_double(toks[t].substr(colon + 1), line_no, "value"));
        }
        ds.append_row(idx, val, raw_label > 0 ? 1.0 : -1.0);
    }
    if (d_hint && *d_hint > ds.n_features()) ds.set_n_features(*d_hint);
    return ds;
}

inline void save_svmlight(const Dataset& ds, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw data_error("cannot write '" + path + "'");
    char buf[64];
    for (std::size_t i = 0; i < ds.n_rows(); ++i) {
        out << (ds.label(i) > 0 ? "+1" : "-1");
        auto idx = ds.row_indices(i);
        auto val = ds.row_values(i);
        for (std::size_t k = 0; k < idx.size(); ++k) {
            std::snprintf(buf, sizeof(buf), " %u:%.17g", idx[k] + 1, val[k]);
            out << buf;
        }
        out << '\n';
    }
    if (!out) throw data_error("write failed for '" + path + "'");
}

// Rectangular numeric CSV with a header row; label_column is 0-based.
inline Dataset load_csv(const std::string& path, std::size_t label_column) {
    std::ifstream in(path);
    if (!in) throw data_error("cannot open '" + path + "'");
    Dataset ds;
    ds.name = std::filesystem::path(path).stem().string();

    std::string line;
    if (!std::getline(in, line)) throw parse_error("empty file '" + path + "'");
    std::size_t n_cols = 1;
    for (char c : line)
        if (c == ',') ++n_cols;
    if (label_column >= n_cols) throw config_error("label_column out of range");

    std::size_t line_no = 1;
    std::size_t n_rows = 0;
    std::vector<double> row(n_cols - 1);
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        std::string_view sv(line);
        if (!sv.empty() && sv.back() == '\r') sv.remove_suffix(1);
        std::size_t col = 0;
        std::size_t feat = 0;
        double label = 0.0;
        std::size_t start = 0;
        for (std::size_t i = 0; i <= sv.size(); ++i) {
            if (i != sv.size() && sv[i] != ',') continue;
            if (col >= n_cols)
                throw parse_error("line " + std::to_string(line_no) + ": too many columns");
            const double v =
                detail::parse_double(sv.substr(start, i - start), line_no, "cell");
            if (col == label_column)
                label = v;
            else
                row[feat++] = v;
            ++col;
            start = i + 1;
        }
        if (col != n_cols)
            throw parse_error("line " + std::to_string(line_no) + ": expected " +
                              std::to_string(n_cols) + " columns, got " + std::to_string(col));
        ds.append_dense_row(row, label > 0 ? 1.0 : -1.0);
        ++n_rows;
    }
    if (n_rows == 0) throw parse_error("no data rows in '" + path + "'");
    if (ds.n_features() < n_cols - 1) ds.set_n_features(n_cols - 1);
    return ds;
}

} // namespace fgsel
