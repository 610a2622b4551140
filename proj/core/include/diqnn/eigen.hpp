#pragma once

#include <vector>

#include "diqnn/matrix.hpp"

namespace diqnn {

/// Result of a symmetric eigendecomposition, ordered by |eigenvalue|
/// descending (ties keep the pre-sort diagonal order).
struct EigenDecomposition {
    Vec eigenvalues;
    Matrix eigenvectors; // column i pairs with eigenvalues[i], unit length

    /// Column i as a vector copy.
    Vec eigenvector(std::size_t i) const;
    /// sum_i lambda_i a_i a_i^T over the leading `rank` terms
    /// (all terms when rank >= n).
    Matrix reconstruct(std::size_t rank) const;
    Matrix reconstruct() const { return reconstruct(eigenvalues.size()); }
};

/// Cyclic Jacobi eigensolver for symmetric matrices.
///
/// Converges when the off-diagonal Frobenius norm drops below
/// 1e-12 * ||A||_F, capped at 100 sweeps. Input must be square and symmetric
/// within 1e-9 (absolute); symmetrize first if needed.
EigenDecomposition sym_eigen(const Matrix& a);

/// lambda_max / lambda_min with eigenvalues clamped below at zero.
/// Returns +infinity when lambda_min <= 1e-12 * lambda_max.
double condition_number(const Matrix& a);

} // namespace diqnn
