#ifndef MSVQ_MATRIX_HPP
#define MSVQ_MATRIX_HPP

#include <cassert>
#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

#include "msvq/error.hpp"

namespace msvq {

// Half-open row interval [begin, end).
struct RowRange {
    std::size_t begin = 0;
    std::size_t end = 0;

    std::size_t size() const noexcept { return end - begin; }
    friend bool operator==(const RowRange&, const RowRange&) = default;
};

// Non-owning view over contiguous row-major rows.
class RowBlock {
public:
    RowBlock() = default;
    RowBlock(std::span<const double> data, std::size_t cols) : data_(data), cols_(cols) {
        assert(cols_ == 0 || data_.size() % cols_ == 0);
    }

    std::size_t rows() const noexcept { return cols_ ? data_.size() / cols_ : 0; }
    std::size_t cols() const noexcept { return cols_; }
    bool empty() const noexcept { return rows() == 0; }

    std::span<const double> row(std::size_t i) const { return data_.subspan(i * cols_, cols_); }
    std::span<const double> data() const noexcept { return data_; }

    RowBlock block(RowRange r) const {
        return RowBlock(data_.subspan(r.begin * cols_, r.size() * cols_), cols_);
    }

private:
    std::span<const double> data_;
    std::size_t cols_ = 0;
};

// Dense row-major matrix of doubles. Rows are feature vectors or centroids.
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
    Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
        : rows_(rows), cols_(cols), data_(std::move(data)) {
        if (data_.size() != rows_ * cols_) throw InvalidInput("matrix data size does not match shape");
    }

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }
    bool empty() const noexcept { return rows_ == 0; }

    double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
    double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

    std::span<double> row(std::size_t i) { return {data_.data() + i * cols_, cols_}; }
    std::span<const double> row(std::size_t i) const { return {data_.data() + i * cols_, cols_}; }

    const std::vector<double>& data() const noexcept { return data_; }

    RowBlock view() const { return RowBlock(data_, cols_); }
    RowBlock block(RowRange r) const { return view().block(r); }
    operator RowBlock() const { return view(); }

    void append_rows(RowBlock rows) {
        if (rows.empty()) return;
        if (rows_ == 0 && cols_ == 0) cols_ = rows.cols();
        if (rows.cols() != cols_) throw InvalidInput("row dimension mismatch while concatenating");
        data_.insert(data_.end(), rows.data().begin(), rows.data().end());
        rows_ += rows.rows();
    }

    std::vector<double> column(std::size_t j) const {
        std::vector<double> out(rows_);
        for (std::size_t i = 0; i < rows_; ++i) out[i] = (*this)(i, j);
        return out;
    }

    friend bool operator==(const Matrix&, const Matrix&) = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

inline double euclidean(std::span<const double> a, std::span<const double> b) {
    assert(a.size() == b.size());
    double acc = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) {
        const double d = a[k] - b[k];
        acc += d * d;
    }
    return std::sqrt(acc);
}

inline double squared_euclidean(std::span<const double> a, std::span<const double> b) {
    assert(a.size() == b.size());
    double acc = 0.0;
    for (std::size_t k = 0; k < a.size(); ++k) {
        const double d = a[k] - b[k];
        acc += d * d;
    }
    return acc;
}

} // namespace msvq

#endif
