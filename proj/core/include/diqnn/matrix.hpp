#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace diqnn {

using Vec = std::vector<double>;

/// Dense row-major matrix of 64-bit reals.
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0);
    Matrix(std::size_t rows, std::size_t cols, Vec data);

    static Matrix identity(std::size_t n);
    /// Builds a matrix from nested initializer-style rows (test convenience).
    static Matrix from_rows(const std::vector<Vec>& rows);

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    std::size_t size() const { return data_.size(); }

    double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
    double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

    double* data() { return data_.data(); }
    const double* data() const { return data_.data(); }
    std::span<double> row(std::size_t i) { return {data_.data() + i * cols_, cols_}; }
    std::span<const double> row(std::size_t i) const { return {data_.data() + i * cols_, cols_}; }

    /// Throws ContractViolation if any entry is NaN or infinite.
    void require_finite(const char* context) const;

    bool same_shape(const Matrix& o) const { return rows_ == o.rows_ && cols_ == o.cols_; }

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    Vec data_;
};

// ---- vector arithmetic -----------------------------------------------------

double dot(std::span<const double> u, std::span<const double> v);
double norm2(std::span<const double> v);
double norm1(std::span<const double> v);
/// y += a * x
void axpy(double a, std::span<const double> x, std::span<double> y);
void scale(std::span<double> v, double a);

/// cos of the angle between u and v, clamped to [-1, 1].
/// Throws DegenerateInput on a zero vector, DimensionError on length mismatch.
double cosine(std::span<const double> u, std::span<const double> v);

// ---- matrix arithmetic -----------------------------------------------------

Vec matvec(const Matrix& a, std::span<const double> x);
Matrix transpose(const Matrix& a);
/// u v^T
Matrix outer(std::span<const double> u, std::span<const double> v);
double frobenius_norm(const Matrix& a);
/// Largest |a_ij - a_ji|; 0 for a symmetric matrix.
double asymmetry(const Matrix& a);

Matrix operator+(const Matrix& a, const Matrix& b);
Matrix operator-(const Matrix& a, const Matrix& b);
Matrix operator*(double s, const Matrix& a);

/// c = a * b with a simple blocked kernel.
Matrix matmul(const Matrix& a, const Matrix& b);

/// c = a * b^T via a dot-product kernel; both operands are walked along
/// contiguous rows, which makes this the fast path for batched layers.
Matrix matmul_nt(const Matrix& a, const Matrix& b);

/// out += a^T * diag(w) * a  where a is n x d, w has n entries and out is a
/// row-major d x d buffer. The batched outer-product accumulation.
void accumulate_weighted_gram(const Matrix& a, std::span<const double> w,
                              std::span<double> out);

} // namespace diqnn
