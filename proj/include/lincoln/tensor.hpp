#ifndef LINCOLN_TENSOR_HPP
#define LINCOLN_TENSOR_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <string>
#include <vector>

#include "lincoln/errors.hpp"

namespace lincoln {

// Dense row-major matrix of doubles. Vectors are n×1 (column) or 1×n (row).
class Tensor {
public:
    Tensor() : rows_(0), cols_(0) {}

    Tensor(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

    Tensor(std::size_t rows, std::size_t cols, std::vector<double> data)
        : rows_(rows), cols_(cols), data_(std::move(data)) {
        if (data_.size() != rows_ * cols_)
            raise(ErrorCode::ShapeMismatch, "data length does not match shape");
    }

    static Tensor row(std::initializer_list<double> xs) {
        return Tensor(1, xs.size(), std::vector<double>(xs));
    }

    static Tensor column(std::initializer_list<double> xs) {
        return Tensor(xs.size(), 1, std::vector<double>(xs));
    }

    static Tensor from_rows(std::initializer_list<std::initializer_list<double>> rows) {
        std::size_t r = rows.size();
        std::size_t c = r == 0 ? 0 : rows.begin()->size();
        Tensor t(r, c);
        std::size_t i = 0;
        for (const auto& row : rows) {
            if (row.size() != c)
                raise(ErrorCode::ShapeMismatch, "ragged rows");
            std::size_t j = 0;
            for (double x : row) t(i, j++) = x;
            ++i;
        }
        return t;
    }

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    std::size_t size() const { return data_.size(); }
    std::vector<std::size_t> shape() const { return {rows_, cols_}; }

    bool same_shape(const Tensor& o) const { return rows_ == o.rows_ && cols_ == o.cols_; }

    double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
    double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

    double* data() { return data_.data(); }
    const double* data() const { return data_.data(); }
    std::vector<double>& raw() { return data_; }
    const std::vector<double>& raw() const { return data_; }

    bool all_finite() const {
        for (double x : data_)
            if (!std::isfinite(x)) return false;
        return true;
    }

    void assert_finite(const std::string& where) const {
        if (!all_finite()) raise(ErrorCode::NonFiniteValue, where);
    }

    void fill(double x) { std::fill(data_.begin(), data_.end(), x); }

    void add_in_place(const Tensor& o) {
        if (!same_shape(o)) raise(ErrorCode::ShapeMismatch, "add_in_place");
        for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += o.data_[i];
    }

    bool operator==(const Tensor& o) const {
        return rows_ == o.rows_ && cols_ == o.cols_ && data_ == o.data_;
    }
    bool operator!=(const Tensor& o) const { return !(*this == o); }

private:
    std::size_t rows_, cols_;
    std::vector<double> data_;
};

// COO sparse matrix with constant entries; holds incidence matrices,
// normalized adjacencies and candidate/selection pooling matrices.
class SparseMatrix {
public:
    struct Entry {
        std::size_t row, col;
        double value;
    };

    SparseMatrix() : rows_(0), cols_(0) {}
    SparseMatrix(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols) {}

    static SparseMatrix from_entries(std::size_t rows, std::size_t cols, std::vector<Entry> entries) {
        SparseMatrix m(rows, cols);
        std::sort(entries.begin(), entries.end(), [](const Entry& a, const Entry& b) {
            return a.row != b.row ? a.row < b.row : a.col < b.col;
        });
        for (std::size_t i = 0; i < entries.size(); ++i) {
            const Entry& e = entries[i];
            if (e.row >= rows || e.col >= cols)
                raise(ErrorCode::IndexOutOfRange, "sparse entry out of range");
            if (!std::isfinite(e.value))
                raise(ErrorCode::NonFiniteValue, "sparse entry");
            if (i > 0 && entries[i - 1].row == e.row && entries[i - 1].col == e.col)
                raise(ErrorCode::ShapeMismatch, "duplicate sparse coordinate");
        }
        m.entries_ = std::move(entries);
        return m;
    }

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    const std::vector<Entry>& entries() const { return entries_; }
    std::size_t nnz() const { return entries_.size(); }

    // this (r×c) times dense x (c×k) -> (r×k)
    Tensor multiply(const Tensor& x) const {
        if (x.rows() != cols_) raise(ErrorCode::ShapeMismatch, "spmm");
        Tensor out(rows_, x.cols(), 0.0);
        const std::size_t k = x.cols();
        for (const Entry& e : entries_) {
            const double v = e.value;
            const double* xr = x.data() + e.col * k;
            double* outr = out.data() + e.row * k;
            for (std::size_t j = 0; j < k; ++j) outr[j] += v * xr[j];
        }
        return out;
    }

    // thisᵀ (c×r) times dense x (r×k) -> (c×k); used by spmm backward.
    Tensor multiply_transposed(const Tensor& x) const {
        if (x.rows() != rows_) raise(ErrorCode::ShapeMismatch, "spmm_t");
        Tensor out(cols_, x.cols(), 0.0);
        const std::size_t k = x.cols();
        for (const Entry& e : entries_) {
            const double v = e.value;
            const double* xr = x.data() + e.row * k;
            double* outr = out.data() + e.col * k;
            for (std::size_t j = 0; j < k; ++j) outr[j] += v * xr[j];
        }
        return out;
    }

    Tensor to_dense() const {
        Tensor out(rows_, cols_, 0.0);
        for (const Entry& e : entries_) out(e.row, e.col) = e.value;
        return out;
    }

private:
    std::size_t rows_, cols_;
    std::vector<Entry> entries_;
};

} // namespace lincoln

#endif // LINCOLN_TENSOR_HPP
