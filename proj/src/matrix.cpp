#include "gridres/matrix.hpp"

#include "gridres/errors.hpp"

#include <algorithm>
#include <cmath>

namespace gridres {

Matrix::Matrix(std::initializer_list<std::initializer_list<double>> rows)
{
    rows_ = rows.size();
    cols_ = rows_ ? rows.begin()->size() : 0;
    data_.reserve(rows_ * cols_);
    for (const auto& r : rows) {
        if (r.size() != cols_) throw ShapeMismatch("ragged matrix initializer");
        data_.insert(data_.end(), r.begin(), r.end());
    }
}

Matrix Matrix::identity(std::size_t n)
{
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
}

Matrix Matrix::row_vector(std::span<const double> values)
{
    Matrix m(1, values.size());
    std::copy(values.begin(), values.end(), m.data_.begin());
    return m;
}

bool Matrix::all_finite() const
{
    return std::all_of(data_.begin(), data_.end(), [](double x) { return std::isfinite(x); });
}

void Matrix::fill(double value)
{
    std::fill(data_.begin(), data_.end(), value);
}

Matrix Matrix::transposed() const
{
    Matrix t(cols_, rows_);
    for (std::size_t r = 0; r < rows_; ++r)
        for (std::size_t c = 0; c < cols_; ++c) t(c, r) = (*this)(r, c);
    return t;
}

Matrix Matrix::columns(std::size_t first, std::size_t count) const
{
    if (first + count > cols_) throw ShapeMismatch("column range out of bounds");
    Matrix out(rows_, count);
    for (std::size_t r = 0; r < rows_; ++r)
        for (std::size_t c = 0; c < count; ++c) out(r, c) = (*this)(r, first + c);
    return out;
}

std::string shape_string(const Matrix& m)
{
    return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
}

void gemm(const Matrix& a, bool trans_a, const Matrix& b, bool trans_b, Matrix& c, bool accumulate)
{
    const std::size_t m = trans_a ? a.cols() : a.rows();
    const std::size_t k = trans_a ? a.rows() : a.cols();
    const std::size_t kb = trans_b ? b.cols() : b.rows();
    const std::size_t n = trans_b ? b.rows() : b.cols();
    if (k != kb)
        throw ShapeMismatch("gemm: inner dimensions differ (" + shape_string(a) + " vs " +
                            shape_string(b) + ")");
    if (!accumulate || c.rows() != m || c.cols() != n) {
        if (accumulate && !c.empty()) throw ShapeMismatch("gemm: accumulator shape mismatch");
        c = Matrix(m, n);
    }

    const double* pa = a.data().data();
    const double* pb = b.data().data();
    double* pc = c.data().data();
    const std::size_t lda = a.cols();
    const std::size_t ldb = b.cols();

    if (!trans_a && !trans_b) {
        for (std::size_t i = 0; i < m; ++i) {
            double* crow = pc + i * n;
            for (std::size_t p = 0; p < k; ++p) {
                const double aip = pa[i * lda + p];
                if (aip == 0.0) continue;
                const double* brow = pb + p * ldb;
                for (std::size_t j = 0; j < n; ++j) crow[j] += aip * brow[j];
            }
        }
    } else if (trans_a && !trans_b) {
        // C[i][j] += sum_p A[p][i] * B[p][j]
        for (std::size_t p = 0; p < k; ++p) {
            const double* arow = pa + p * lda;
            const double* brow = pb + p * ldb;
            for (std::size_t i = 0; i < m; ++i) {
                const double api = arow[i];
                if (api == 0.0) continue;
                double* crow = pc + i * n;
                for (std::size_t j = 0; j < n; ++j) crow[j] += api * brow[j];
            }
        }
    } else if (!trans_a && trans_b) {
        // C[i][j] += dot(A row i, B row j)
        for (std::size_t i = 0; i < m; ++i) {
            const double* arow = pa + i * lda;
            for (std::size_t j = 0; j < n; ++j) {
                const double* brow = pb + j * ldb;
                double acc = 0.0;
                for (std::size_t p = 0; p < k; ++p) acc += arow[p] * brow[p];
                pc[i * n + j] += acc;
            }
        }
    } else {
        for (std::size_t i = 0; i < m; ++i)
            for (std::size_t j = 0; j < n; ++j) {
                double acc = 0.0;
                for (std::size_t p = 0; p < k; ++p) acc += pa[p * lda + i] * pb[j * ldb + p];
                pc[i * n + j] += acc;
            }
    }
}

Matrix matmul(const Matrix& a, const Matrix& b)
{
    Matrix c;
    gemm(a, false, b, false, c);
    return c;
}

SparseMatrix::SparseMatrix(std::size_t rows, std::size_t cols, std::vector<Entry> entries)
    : rows_(rows), cols_(cols)
{
    std::sort(entries.begin(), entries.end(), [](const Entry& x, const Entry& y) {
        return x.row != y.row ? x.row < y.row : x.col < y.col;
    });
    row_offsets_.assign(rows + 1, 0);
    for (const Entry& e : entries) {
        if (e.row >= rows || e.col >= cols) throw ShapeMismatch("sparse entry out of bounds");
        col_indices_.push_back(e.col);
        values_.push_back(e.value);
        ++row_offsets_[e.row + 1];
    }
    for (std::size_t r = 0; r < rows; ++r) row_offsets_[r + 1] += row_offsets_[r];
}

SparseMatrix SparseMatrix::from_dense(const Matrix& dense)
{
    std::vector<Entry> entries;
    for (std::size_t r = 0; r < dense.rows(); ++r)
        for (std::size_t c = 0; c < dense.cols(); ++c)
            if (dense(r, c) != 0.0) entries.push_back({r, c, dense(r, c)});
    return SparseMatrix(dense.rows(), dense.cols(), std::move(entries));
}

void SparseMatrix::multiply_add(const Matrix& x, Matrix& out) const
{
    if (x.rows() != cols_ || out.rows() != rows_ || out.cols() != x.cols())
        throw ShapeMismatch("sparse multiply: shape mismatch");
    const std::size_t n = x.cols();
    for (std::size_t r = 0; r < rows_; ++r) {
        double* orow = out.row(r).data();
        for (std::size_t p = row_offsets_[r]; p < row_offsets_[r + 1]; ++p) {
            const double v = values_[p];
            const double* xrow = x.row(col_indices_[p]).data();
            for (std::size_t j = 0; j < n; ++j) orow[j] += v * xrow[j];
        }
    }
}

void SparseMatrix::transpose_multiply_add(const Matrix& x, Matrix& out) const
{
    if (x.rows() != rows_ || out.rows() != cols_ || out.cols() != x.cols())
        throw ShapeMismatch("sparse transpose multiply: shape mismatch");
    const std::size_t n = x.cols();
    for (std::size_t r = 0; r < rows_; ++r) {
        const double* xrow = x.row(r).data();
        for (std::size_t p = row_offsets_[r]; p < row_offsets_[r + 1]; ++p) {
            const double v = values_[p];
            double* orow = out.row(col_indices_[p]).data();
            for (std::size_t j = 0; j < n; ++j) orow[j] += v * xrow[j];
        }
    }
}

Matrix SparseMatrix::multiply(const Matrix& x) const
{
    Matrix out(rows_, x.cols());
    multiply_add(x, out);
    return out;
}

Matrix SparseMatrix::transpose_multiply(const Matrix& x) const
{
    Matrix out(cols_, x.cols());
    transpose_multiply_add(x, out);
    return out;
}

Matrix SparseMatrix::to_dense() const
{
    Matrix out(rows_, cols_);
    for (std::size_t r = 0; r < rows_; ++r)
        for (std::size_t p = row_offsets_[r]; p < row_offsets_[r + 1]; ++p)
            out(r, col_indices_[p]) += values_[p];
    return out;
}

SparseMatrix SparseMatrix::transposed() const
{
    std::vector<Entry> entries;
    entries.reserve(values_.size());
    for (std::size_t r = 0; r < rows_; ++r)
        for (std::size_t p = row_offsets_[r]; p < row_offsets_[r + 1]; ++p)
            entries.push_back({col_indices_[p], r, values_[p]});
    return SparseMatrix(cols_, rows_, std::move(entries));
}

} // namespace gridres
