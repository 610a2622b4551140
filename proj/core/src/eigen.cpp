#include "diqnn/eigen.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "diqnn/error.hpp"

namespace diqnn {

Vec EigenDecomposition::eigenvector(std::size_t i) const {
    Vec v(eigenvectors.rows());
    for (std::size_t r = 0; r < v.size(); ++r) v[r] = eigenvectors(r, i);
    return v;
}

Matrix EigenDecomposition::reconstruct(std::size_t rank) const {
    const std::size_t n = eigenvectors.rows();
    const std::size_t r = std::min(rank, eigenvalues.size());
    Matrix m(n, n);
    for (std::size_t t = 0; t < r; ++t) {
        const double lam = eigenvalues[t];
        for (std::size_t i = 0; i < n; ++i) {
            const double li = lam * eigenvectors(i, t);
            double* row = m.row(i).data();
            for (std::size_t j = 0; j < n; ++j) row[j] += li * eigenvectors(j, t);
        }
    }
    return m;
}

namespace {

double offdiag_frobenius(const Matrix& a) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = i + 1; j < a.cols(); ++j) s += 2.0 * a(i, j) * a(i, j);
    return std::sqrt(s);
}

} // namespace

EigenDecomposition sym_eigen(const Matrix& input) {
    if (input.rows() != input.cols())
        throw DimensionError("sym_eigen: matrix is not square");
    if (input.rows() == 0) throw DimensionError("sym_eigen: empty matrix");
    if (asymmetry(input) > 1e-9)
        throw ContractViolation("sym_eigen: input asymmetric beyond 1e-9");

    const std::size_t n = input.rows();
    Matrix a = input;
    // vt holds eigenvector candidates as ROWS so rotations touch contiguous
    // memory; rows are transposed into columns at extraction.
    Matrix vt = Matrix::identity(n);
    const double norm = frobenius_norm(a);
    const double stop = 1e-12 * norm;

    for (int sweep = 0; sweep < 100; ++sweep) {
        const double off = offdiag_frobenius(a);
        if (off <= stop) break;
        // Early sweeps skip elements below a coarse threshold; this is the
        // classic accelerated cyclic scheme and does not change the fixpoint.
        const double thresh = sweep < 3 ? 0.2 * off / double(n * n) : 0.0;
        for (std::size_t p = 0; p + 1 < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                const double apq = a(p, q);
                if (std::abs(apq) <= thresh) continue;
                const double app = a(p, p), aqq = a(q, q);
                if (std::abs(apq) < 1e-300) { a(p, q) = a(q, p) = 0.0; continue; }
                const double theta = 0.5 * (aqq - app) / apq;
                double t = 1.0 / (std::abs(theta) + std::sqrt(1.0 + theta * theta));
                if (theta < 0.0) t = -t;
                const double c = 1.0 / std::sqrt(1.0 + t * t);
                const double s = t * c;
                const double tau = s / (1.0 + c);
                const double h = t * apq;
                a(p, p) = app - h;
                a(q, q) = aqq + h;
                a(p, q) = a(q, p) = 0.0;
                // rotate rows p and q in place (contiguous), then mirror the
                // changed entries into the columns to keep a symmetric
                double* rp = a.row(p).data();
                double* rq = a.row(q).data();
                for (std::size_t j = 0; j < n; ++j) {
                    if (j == p || j == q) continue;
                    const double g = rp[j], w = rq[j];
                    rp[j] = g - s * (w + g * tau);
                    rq[j] = w + s * (g - w * tau);
                }
                for (std::size_t j = 0; j < n; ++j) {
                    if (j == p || j == q) continue;
                    a(j, p) = rp[j];
                    a(j, q) = rq[j];
                }
                double* vp = vt.row(p).data();
                double* vq = vt.row(q).data();
                for (std::size_t j = 0; j < n; ++j) {
                    const double g = vp[j], w = vq[j];
                    vp[j] = g - s * (w + g * tau);
                    vq[j] = w + s * (g - w * tau);
                }
            }
        }
    }

    // Order by |lambda| descending, stable in the original diagonal index.
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) {
        return std::abs(a(i, i)) > std::abs(a(j, j));
    });

    EigenDecomposition dec;
    dec.eigenvalues.resize(n);
    dec.eigenvectors = Matrix(n, n);
    for (std::size_t t = 0; t < n; ++t) {
        dec.eigenvalues[t] = a(order[t], order[t]);
        for (std::size_t r = 0; r < n; ++r) dec.eigenvectors(r, t) = vt(order[t], r);
    }
    return dec;
}

double condition_number(const Matrix& a) {
    const EigenDecomposition dec = sym_eigen(a);
    double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
    for (double lam : dec.eigenvalues) {
        const double clamped = std::max(lam, 0.0);
        lo = std::min(lo, clamped);
        hi = std::max(hi, clamped);
    }
    if (lo <= 1e-12 * hi) return std::numeric_limits<double>::infinity();
    return hi / lo;
}

} // namespace diqnn
