#include "diqnn/matrix.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>

#include "diqnn/error.hpp"

namespace diqnn {

Matrix::Matrix(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

Matrix::Matrix(std::size_t rows, std::size_t cols, Vec data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
    if (data_.size() != rows_ * cols_)
        throw DimensionError("matrix data length does not match rows*cols");
}

Matrix Matrix::identity(std::size_t n) {
    Matrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
}

Matrix Matrix::from_rows(const std::vector<Vec>& rows) {
    if (rows.empty()) return {};
    Matrix m(rows.size(), rows.front().size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (rows[i].size() != m.cols())
            throw DimensionError("ragged rows in matrix literal");
        std::copy(rows[i].begin(), rows[i].end(), m.row(i).begin());
    }
    return m;
}

void Matrix::require_finite(const char* context) const {
    for (double v : data_)
        if (!std::isfinite(v))
            throw ContractViolation(std::string(context) + ": non-finite matrix entry");
}

double dot(std::span<const double> u, std::span<const double> v) {
    if (u.size() != v.size()) throw DimensionError("dot: length mismatch");
    double s = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) s += u[i] * v[i];
    return s;
}

double norm2(std::span<const double> v) { return std::sqrt(dot(v, v)); }

double norm1(std::span<const double> v) {
    double s = 0.0;
    for (double x : v) s += std::abs(x);
    return s;
}

void axpy(double a, std::span<const double> x, std::span<double> y) {
    if (x.size() != y.size()) throw DimensionError("axpy: length mismatch");
    for (std::size_t i = 0; i < x.size(); ++i) y[i] += a * x[i];
}

void scale(std::span<double> v, double a) {
    for (double& x : v) x *= a;
}

double cosine(std::span<const double> u, std::span<const double> v) {
    if (u.size() != v.size()) throw DimensionError("cosine: length mismatch");
    const double nu = norm2(u), nv = norm2(v);
    if (nu == 0.0 || nv == 0.0) throw DegenerateInput("cosine: zero vector");
    return std::clamp(dot(u, v) / (nu * nv), -1.0, 1.0);
}

Vec matvec(const Matrix& a, std::span<const double> x) {
    if (a.cols() != x.size()) throw DimensionError("matvec: shape mismatch");
    Vec y(a.rows(), 0.0);
    for (std::size_t i = 0; i < a.rows(); ++i) y[i] = dot(a.row(i), x);
    return y;
}

Matrix transpose(const Matrix& a) {
    Matrix t(a.cols(), a.rows());
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < a.cols(); ++j) t(j, i) = a(i, j);
    return t;
}

Matrix outer(std::span<const double> u, std::span<const double> v) {
    Matrix m(u.size(), v.size());
    for (std::size_t i = 0; i < u.size(); ++i) {
        double* r = m.row(i).data();
        for (std::size_t j = 0; j < v.size(); ++j) r[j] = u[i] * v[j];
    }
    return m;
}

double frobenius_norm(const Matrix& a) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a.data()[i] * a.data()[i];
    return std::sqrt(s);
}

double asymmetry(const Matrix& a) {
    if (a.rows() != a.cols()) throw DimensionError("asymmetry: non-square matrix");
    double worst = 0.0;
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = i + 1; j < a.cols(); ++j)
            worst = std::max(worst, std::abs(a(i, j) - a(j, i)));
    return worst;
}

Matrix operator+(const Matrix& a, const Matrix& b) {
    if (!a.same_shape(b)) throw DimensionError("matrix +: shape mismatch");
    Matrix c = a;
    for (std::size_t i = 0; i < c.size(); ++i) c.data()[i] += b.data()[i];
    return c;
}

Matrix operator-(const Matrix& a, const Matrix& b) {
    if (!a.same_shape(b)) throw DimensionError("matrix -: shape mismatch");
    Matrix c = a;
    for (std::size_t i = 0; i < c.size(); ++i) c.data()[i] -= b.data()[i];
    return c;
}

Matrix operator*(double s, const Matrix& a) {
    Matrix c = a;
    for (std::size_t i = 0; i < c.size(); ++i) c.data()[i] *= s;
    return c;
}

// Tiled j-k-i ordering keeps the inner loop contiguous in both b and c.
Matrix matmul(const Matrix& a, const Matrix& b) {
    if (a.cols() != b.rows()) throw DimensionError("matmul: inner dimension mismatch");
    const std::size_t n = a.rows(), m = b.cols(), p = a.cols();
    Matrix c(n, m);
    constexpr std::size_t kTile = 64;
    for (std::size_t i0 = 0; i0 < n; i0 += kTile) {
        const std::size_t i1 = std::min(i0 + kTile, n);
        for (std::size_t k0 = 0; k0 < p; k0 += kTile) {
            const std::size_t k1 = std::min(k0 + kTile, p);
            for (std::size_t i = i0; i < i1; ++i) {
                const double* ar = a.data() + i * p;
                double* cr = c.data() + i * m;
                for (std::size_t k = k0; k < k1; ++k) {
                    const double aik = ar[k];
                    const double* br = b.data() + k * m;
                    for (std::size_t j = 0; j < m; ++j) cr[j] += aik * br[j];
                }
            }
        }
    }
    return c;
}

// One row of a against four rows of b at a time; the four independent
// accumulator chains keep the FMA pipeline busy.
Matrix matmul_nt(const Matrix& a, const Matrix& b) {
    if (a.cols() != b.cols()) throw DimensionError("matmul_nt: inner dimension mismatch");
    const std::size_t n = a.rows(), m = b.rows(), d = a.cols();
    Matrix c(n, m);
    for (std::size_t i = 0; i < n; ++i) {
        const double* ar = a.data() + i * d;
        double* cr = c.data() + i * m;
        std::size_t j = 0;
        for (; j + 4 <= m; j += 4) {
            const double* b0 = b.data() + j * d;
            const double* b1 = b0 + d;
            const double* b2 = b1 + d;
            const double* b3 = b2 + d;
            double s0 = 0.0, s1 = 0.0, s2 = 0.0, s3 = 0.0;
            for (std::size_t t = 0; t < d; ++t) {
                const double av = ar[t];
                s0 += av * b0[t];
                s1 += av * b1[t];
                s2 += av * b2[t];
                s3 += av * b3[t];
            }
            cr[j] = s0;
            cr[j + 1] = s1;
            cr[j + 2] = s2;
            cr[j + 3] = s3;
        }
        for (; j < m; ++j) {
            const double* br = b.data() + j * d;
            double s = 0.0;
            for (std::size_t t = 0; t < d; ++t) s += ar[t] * br[t];
            cr[j] = s;
        }
    }
    return c;
}

void accumulate_weighted_gram(const Matrix& a, std::span<const double> w,
                              std::span<double> out) {
    if (w.size() != a.rows()) throw DimensionError("weighted gram: weight count mismatch");
    const std::size_t n = a.rows(), d = a.cols();
    if (out.size() != d * d) throw DimensionError("weighted gram: output size mismatch");
    for (std::size_t s = 0; s < n; ++s) {
        const double* x = a.data() + s * d;
        const double ws = w[s];
        if (ws == 0.0) continue;
        for (std::size_t i = 0; i < d; ++i) {
            const double wx = ws * x[i];
            double* cr = out.data() + i * d;
            for (std::size_t j = 0; j < d; ++j) cr[j] += wx * x[j];
        }
    }
}

} // namespace diqnn
