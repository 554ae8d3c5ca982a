#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "fgsel/common.hpp"
#include "fgsel/random.hpp"

namespace fgsel {

// Row-major sparse example matrix with {-1,+1} labels. Dense sources are
// stored the same way (explicit zeros are dropped on load, so an absent
// entry always means 0). Immutable after construction; safe to share.
class Dataset {
public:
    std::string name;

    Dataset() { row_offsets_.push_back(0); }

    std::size_t n_rows() const { return labels_.size(); }
    std::size_t n_features() const { return n_features_; }

    void set_n_features(std::size_t d) {
        if (d < n_features_) throw data_error("n_features below max stored index");
        n_features_ = d;
    }

    // Entries must be sorted by index with no duplicates; zeros are dropped.
    void append_row(std::span<const std::uint32_t> idx, std::span<const double> val,
                    double label) {
        if (idx.size() != val.size()) throw data_error("index/value length mismatch");
        if (label != 1.0 && label != -1.0) throw data_error("label must be -1 or +1");
        std::uint32_t prev = 0;
        bool first = true;
        for (std::size_t k = 0; k < idx.size(); ++k) {
            if (!first && idx[k] <= prev)
                throw data_error("row indices must be strictly increasing");
            prev = idx[k];
            first = false;
            if (val[k] == 0.0) continue;
            indices_.push_back(idx[k]);
            values_.push_back(val[k]);
            if (idx[k] >= n_features_) n_features_ = idx[k] + 1;
        }
        row_offsets_.push_back(indices_.size());
        labels_.push_back(label);
    }

    void append_dense_row(std::span<const double> row, double label) {
        for (std::size_t d = 0; d < row.size(); ++d) {
            if (row[d] == 0.0) continue;
            indices_.push_back(static_cast<std::uint32_t>(d));
            values_.push_back(row[d]);
        }
        if (row.size() > n_features_) n_features_ = row.size();
        if (label != 1.0 && label != -1.0) throw data_error("label must be -1 or +1");
        row_offsets_.push_back(indices_.size());
        labels_.push_back(label);
    }

    std::span<const std::uint32_t> row_indices(std::size_t i) const {
        return {indices_.data() + row_offsets_[i], row_offsets_[i + 1] - row_offsets_[i]};
    }
    std::span<const double> row_values(std::size_t i) const {
        return {values_.data() + row_offsets_[i], row_offsets_[i + 1] - row_offsets_[i]};
    }
    std::span<const double> labels() const { return labels_; }
    double label(std::size_t i) const { return labels_[i]; }
    std::size_t nnz() const { return values_.size(); }

    Dataset select_rows(std::span<const std::size_t> rows) const {
        Dataset out;
        out.name = name;
        out.n_features_ = n_features_;
        std::size_t total = 0;
        for (std::size_t r : rows) total += row_offsets_[r + 1] - row_offsets_[r];
        out.indices_.reserve(total);
        out.values_.reserve(total);
        out.labels_.reserve(rows.size());
        out.row_offsets_.reserve(rows.size() + 1);
        for (std::size_t r : rows) {
            auto idx = row_indices(r);
            auto val = row_values(r);
            out.indices_.insert(out.indices_.end(), idx.begin(), idx.end());
            out.values_.insert(out.values_.end(), val.begin(), val.end());
            out.row_offsets_.push_back(out.indices_.size());
            out.labels_.push_back(labels_[r]);
        }
        return out;
    }

    bool same_data(const Dataset& other, double tol = 0.0) const {
        if (n_features_ != other.n_features_ || labels_ != other.labels_ ||
            row_offsets_ != other.row_offsets_ || indices_ != other.indices_)
            return false;
        if (values_.size() != other.values_.size()) return false;
        for (std::size_t k = 0; k < values_.size(); ++k) {
            const double diff = values_[k] - other.values_[k];
            if (diff > tol || diff < -tol) return false;
        }
        return true;
    }

private:
    std::size_t n_features_ = 0;
    std::vector<std::size_t> row_offsets_;
    std::vector<std::uint32_t> indices_;
    std::vector<double> values_;
    std::vector<double> labels_;
};

struct SplitSpec {
    double train_fraction = 0.8;
    double validation_fraction = 0.0;
    std::uint64_t seed = 0;

    void validate() const {
        if (!(train_fraction > 0.0 && train_fraction < 1.0))
            throw config_error("train_fraction must be in (0,1)");
        if (!(validation_fraction >= 0.0 && validation_fraction < 1.0))
            throw config_error("validation_fraction must be in [0,1)");
        if (!(train_fraction + validation_fraction < 1.0))
            throw config_error("train_fraction + validation_fraction must be < 1");
    }
};

struct SplitResult {
    Dataset train;
    Dataset validation;
    Dataset test;
};

// Stratified shuffle split. Rows are partitioned per class so each part's
// class ratio tracks the whole; within each part the original row order is
// kept.
inline SplitResult split(const Dataset& ds, const SplitSpec& spec) {
    spec.validate();
    if (ds.n_rows() < 3) throw data_error("split needs at least 3 rows");

    std::vector<std::size_t> pos, neg;
    for (std::size_t i = 0; i < ds.n_rows(); ++i)
        (ds.label(i) > 0 ? pos : neg).push_back(i);

    Rng rng(spec.seed);
    std::vector<std::size_t> train_rows, val_rows, test_rows;
    for (auto* clazz : {&pos, &neg}) {
        if (clazz->empty()) continue;
        rng.shuffle(std::span<std::size_t>(*clazz));
        const std::size_t n = clazz->size();
        const auto n_train =
            static_cast<std::size_t>(std::llround(spec.train_fraction * static_cast<double>(n)));
        const auto n_val = static_cast<std::size_t>(
            std::llround(spec.validation_fraction * static_cast<double>(n)));
        for (std::size_t i = 0; i < n; ++i) {
            if (i < n_train)
                train_rows.push_back((*clazz)[i]);
            else if (i < n_train + n_val)
                val_rows.push_back((*clazz)[i]);
            else
                test_rows.push_back((*clazz)[i]);
        }
    }
    std::sort(train_rows.begin(), train_rows.end());
    std::sort(val_rows.begin(), val_rows.end());
    std::sort(test_rows.begin(), test_rows.end());
    return {ds.select_rows(train_rows), ds.select_rows(val_rows), ds.select_rows(test_rows)};
}

// min(m, n_rows) rows drawn without replacement; output order is the
// permuted draw order.
inline Dataset subsample(const Dataset& ds, std::size_t m, std::uint64_t seed) {
    if (m < 1) throw config_error("subsample size must be >= 1");
    std::vector<std::size_t> rows(ds.n_rows());
    std::iota(rows.begin(), rows.end(), std::size_t{0});
    Rng rng(seed);
    rng.shuffle(std::span<std::size_t>(rows));
    rows.resize(std::min(m, ds.n_rows()));
    return ds.select_rows(rows);
}

} // namespace fgsel
