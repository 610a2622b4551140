#pragma once

#include <cstdint>
#include <vector>

#include "diqnn/dataset.hpp"
#include "diqnn/matrix.hpp"
#include "diqnn/model.hpp"

namespace diqnn {

/// Margin bookkeeping for one sample.
struct SampleMargin {
    std::size_t index = 0;
    double s = 0.0;               // output gap to the runner-up class
    int runner_up = -1;           // argmax over i != y, lowest index on ties
    double normalized = 0.0;      // s / ||Phi||_2, 0 for degenerate samples
    double softmax_runner_up = 0.0;
};

/// Dataset-level normalized margin (the mu1 - mu2 average) plus the
/// per-sample breakdown at one parameter point.
struct MarginReport {
    double delta_mu = 0.0;
    double mu1 = 0.0;
    double mu2 = 0.0;
    double theta_norm = 0.0;
    std::vector<SampleMargin> per_sample;
    /// Samples whose output norm fell below 1e-12; they contribute margin 0.
    std::size_t degenerate_count = 0;
};

MarginReport compute_margin(const Network& net, const Dataset& data);

/// Exact gradient of the normalized margin with respect to all parameters,
/// assembled from the tangential per-sample components
///   alpha_n = d_theta s_n - (s_n / ||Phi_n||) d_theta ||Phi_n||,
/// each of which is orthogonal to theta on homogeneous stacks.
/// Returns (1/N) sum_n alpha_n / ||Phi_n||.
/// Requires a homogeneous network (no bias, no inner ReLU).
Vec margin_gradient(const Network& net, const Dataset& data);

/// Quantities appearing in the almost-monotonicity bound: the separation
/// epsilon, the gradient bound M, the Gram matrix of the tangential
/// components, its condition number, the normalized-output coefficients,
/// and the bound itself.
struct TheoremDiagnostics {
    double epsilon_sep = 0.0;     // +inf when k = 2 or separation undefined
    double M = 0.0;               // max_nj ||d_theta s_nj||
    Matrix gram;                  // dS dS^T - (L^2/||theta||^2) S S^T
    double cond_c = 0.0;          // condition number of gram (+inf sentinel)
    Vec a_vec;                    // (1/a_1, ..., 1/a_N), a_n = ||Phi_n|| / ||theta||^L
    Vec v_vec;                    // runner-up softmax probabilities
    double m_cos = 0.0;           // cos(a_vec, v_vec)
    double bound = 0.0;           // -M^2 (k-2) ||a||_1 e^{-1/eps} / (N ||theta||^L)
    bool assumption3_ok = false;  // c - 1 <= 2m / sqrt(1 - m^2) with m > 0
    int degree = 0;               // homogeneity degree L used
};

/// Memory note: materializes per-sample gradients in blocks; cost grows with
/// N^2 backward passes when N * param_count exceeds the internal block budget.
TheoremDiagnostics theorem_diagnostics(const Network& net, const Dataset& data);

struct MarginDerivativeCheck {
    double predicted = 0.0; // <margin_gradient, direction> * step
    double observed = 0.0;  // delta_mu(theta + step*direction) - delta_mu(theta)
};

/// First-order prediction vs. actual margin change for a parameter step.
/// The step is applied to a copy; `net` is left untouched.
MarginDerivativeCheck check_margin_derivative(const Network& net, const Dataset& data,
                                              std::span<const double> direction,
                                              double step);

} // namespace diqnn
