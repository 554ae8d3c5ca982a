#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace fgsel {

// Dense column-major matrix. The estimator walks one feature column at a
// time, so columns are kept contiguous.
class ColMatrix {
public:
    ColMatrix() = default;
    ColMatrix(std::size_t n_rows, std::size_t n_cols, double fill = 0.0)
        : n_rows_(n_rows), n_cols_(n_cols), data_(n_rows * n_cols, fill) {}

    std::size_t n_rows() const { return n_rows_; }
    std::size_t n_cols() const { return n_cols_; }

    double& at(std::size_t r, std::size_t c) { return data_[c * n_rows_ + r]; }
    double at(std::size_t r, std::size_t c) const { return data_[c * n_rows_ + r]; }

    std::span<double> col(std::size_t c) { return {data_.data() + c * n_rows_, n_rows_}; }
    std::span<const double> col(std::size_t c) const {
        return {data_.data() + c * n_rows_, n_rows_};
    }

    std::span<const double> data() const { return data_; }

private:
    std::size_t n_rows_ = 0;
    std::size_t n_cols_ = 0;
    std::vector<double> data_;
};

} // namespace fgsel
