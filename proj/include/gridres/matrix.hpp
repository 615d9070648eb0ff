#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

namespace gridres {

/// Row-major dense matrix of doubles.
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
    Matrix(std::initializer_list<std::initializer_list<double>> rows);

    static Matrix identity(std::size_t n);
    static Matrix row_vector(std::span<const double> values);

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    std::size_t size() const { return data_.size(); }
    bool empty() const { return data_.empty(); }

    double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
    double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

    std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
    std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

    std::vector<double>& data() { return data_; }
    const std::vector<double>& data() const { return data_; }

    bool same_shape(const Matrix& other) const
    {
        return rows_ == other.rows_ && cols_ == other.cols_;
    }
    bool all_finite() const;
    void fill(double value);

    Matrix transposed() const;
    /// Columns [first, first + count).
    Matrix columns(std::size_t first, std::size_t count) const;

    bool operator==(const Matrix&) const = default;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

std::string shape_string(const Matrix& m);

/// C = op(A) * op(B) (+ C when accumulate).
void gemm(const Matrix& a, bool trans_a, const Matrix& b, bool trans_b, Matrix& c,
          bool accumulate = false);
Matrix matmul(const Matrix& a, const Matrix& b);

/// Compressed-row sparse matrix; used for constant structure operators
/// (normalized adjacency, incidence matrices).
class SparseMatrix {
public:
    struct Entry {
        std::size_t row;
        std::size_t col;
        double value;
    };

    SparseMatrix() = default;
    SparseMatrix(std::size_t rows, std::size_t cols, std::vector<Entry> entries);
    static SparseMatrix from_dense(const Matrix& dense);

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    std::size_t nonzeros() const { return values_.size(); }

    /// this * x
    Matrix multiply(const Matrix& x) const;
    /// this^T * x
    Matrix transpose_multiply(const Matrix& x) const;
    /// out += this * x  /  out += this^T * x
    void multiply_add(const Matrix& x, Matrix& out) const;
    void transpose_multiply_add(const Matrix& x, Matrix& out) const;

    Matrix to_dense() const;
    SparseMatrix transposed() const;

    std::span<const std::size_t> row_offsets() const { return row_offsets_; }
    std::span<const std::size_t> col_indices() const { return col_indices_; }
    std::span<const double> values() const { return values_; }

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<std::size_t> row_offsets_{0};
    std::vector<std::size_t> col_indices_;
    std::vector<double> values_;
};

} // namespace gridres
