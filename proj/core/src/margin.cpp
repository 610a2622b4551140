#include "diqnn/margin.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "diqnn/eigen.hpp"
#include "diqnn/error.hpp"

namespace diqnn {

namespace {

constexpr double kDegenerateNorm = 1e-12;
constexpr std::size_t kChunk = 512;

struct Kahan {
    double sum = 0.0, carry = 0.0;
    void add(double x) {
        const double y = x - carry;
        const double t = sum + y;
        carry = (t - sum) - y;
        sum = t;
    }
};

int runner_up_class(std::span<const double> phi, int y) {
    int best = -1;
    for (int i = 0; i < int(phi.size()); ++i) {
        if (i == y) continue;
        if (best < 0 || phi[i] > phi[std::size_t(best)]) best = i;
    }
    return best;
}

double softmax_of(std::span<const double> phi, int cls) {
    double m = phi[0];
    for (double v : phi) m = std::max(m, v);
    double denom = 0.0;
    for (double v : phi) denom += std::exp(v - m);
    return std::exp(phi[std::size_t(cls)] - m) / denom;
}

Matrix chunk_features(const Dataset& data, std::size_t start, std::size_t count) {
    Matrix x(count, data.dim());
    for (std::size_t i = 0; i < count; ++i) {
        const auto src = data.features.row(start + i);
        std::copy(src.begin(), src.end(), x.row(i).begin());
    }
    return x;
}

void require_homogeneous(const Network& net, const char* op) {
    if (!net.homogeneity_degree())
        throw UnsupportedModel(std::string(op) +
                               ": network is not a homogeneous stack");
}

} // namespace

MarginReport compute_margin(const Network& net, const Dataset& data) {
    data.validate();
    const std::size_t n = data.size();
    MarginReport rep;
    rep.per_sample.reserve(n);
    rep.theta_norm = net.theta_norm();

    Kahan mu1, mu2;
    for (std::size_t start = 0; start < n; start += kChunk) {
        const std::size_t count = std::min(kChunk, n - start);
        const Matrix z = net.forward_batch(chunk_features(data, start, count));
        for (std::size_t i = 0; i < count; ++i) {
            const auto phi = z.row(i);
            const int y = data.labels[start + i];
            SampleMargin sm;
            sm.index = start + i;
            sm.runner_up = runner_up_class(phi, y);
            sm.s = phi[std::size_t(y)] - phi[std::size_t(sm.runner_up)];
            sm.softmax_runner_up = softmax_of(phi, sm.runner_up);
            const double nrm = norm2(phi);
            if (nrm <= kDegenerateNorm) {
                ++rep.degenerate_count;
                sm.normalized = 0.0;
            } else {
                sm.normalized = sm.s / nrm;
                mu1.add(phi[std::size_t(y)] / nrm);
                mu2.add(phi[std::size_t(sm.runner_up)] / nrm);
            }
            rep.per_sample.push_back(sm);
        }
    }
    rep.mu1 = mu1.sum / double(n);
    rep.mu2 = mu2.sum / double(n);
    rep.delta_mu = rep.mu1 - rep.mu2;
    return rep;
}

Vec margin_gradient(const Network& net, const Dataset& data) {
    require_homogeneous(net, "margin_gradient");
    data.validate();
    const std::size_t n = data.size();
    Vec grad(net.param_count(), 0.0);

    for (std::size_t start = 0; start < n; start += kChunk) {
        const std::size_t count = std::min(kChunk, n - start);
        BatchTrace trace;
        const Matrix z = net.forward_batch(chunk_features(data, start, count), trace);
        Matrix gout(count, z.cols());
        for (std::size_t i = 0; i < count; ++i) {
            const auto phi = z.row(i);
            const int y = data.labels[start + i];
            const int j = runner_up_class(phi, y);
            const double nrm = norm2(phi);
            if (nrm <= kDegenerateNorm) continue; // skipped with margin 0
            const double s = phi[std::size_t(y)] - phi[std::size_t(j)];
            // d/dPhi of s/||Phi||: basis part then the radial correction
            double* g = gout.row(i).data();
            g[y] += 1.0 / nrm;
            g[j] -= 1.0 / nrm;
            const double radial = s / (nrm * nrm * nrm);
            for (std::size_t c = 0; c < z.cols(); ++c) g[c] -= radial * phi[c];
            for (std::size_t c = 0; c < z.cols(); ++c) g[c] /= double(n);
        }
        net.backward_batch(trace, gout, grad);
    }
    return grad;
}

namespace {

/// d_theta s_n for one sample: backward with output grad e_y - e_j.
Vec sample_gap_gradient(const Network& net, const ForwardTrace& trace,
                        std::size_t k, int y, int j) {
    Vec gout(k, 0.0);
    gout[std::size_t(y)] = 1.0;
    gout[std::size_t(j)] -= 1.0; // j == y never happens (j != y by construction)
    return net.backward(trace, gout);
}

} // namespace

TheoremDiagnostics theorem_diagnostics(const Network& net, const Dataset& data) {
    require_homogeneous(net, "theorem_diagnostics");
    data.validate();
    const std::size_t n = data.size();
    const std::size_t k = net.output_dim();
    if (k < 2) throw SpecError("theorem_diagnostics: needs k >= 2");

    TheoremDiagnostics diag;
    diag.degree = *net.homogeneity_degree();
    const double theta_norm = net.theta_norm();
    const double theta_pow = std::pow(theta_norm, double(diag.degree));

    // Pass 1: outputs, margins, separation, softmax vector, M.
    std::vector<int> runner(n);
    Vec s_values(n);
    Vec norms(n);
    std::vector<ForwardTrace> traces(n);
    double min_gap = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < n; ++i) {
        const Vec phi = net.forward(data.sample(i), traces[i]);
        const int y = data.labels[i];
        const int j = runner_up_class(phi, y);
        runner[i] = j;
        s_values[i] = phi[std::size_t(y)] - phi[std::size_t(j)];
        norms[i] = norm2(phi);
        diag.v_vec.push_back(softmax_of(phi, j));
        for (int c = 0; c < int(k); ++c) {
            if (c == y || c == j) continue;
            const double snj = phi[std::size_t(y)] - phi[std::size_t(c)];
            min_gap = std::min(min_gap, snj - s_values[i]);
        }
        if (norms[i] > kDegenerateNorm)
            diag.a_vec.push_back(theta_pow / norms[i]); // 1 / a_n
        else
            diag.a_vec.push_back(0.0); // degenerate sample, dropped from the bound
    }
    diag.epsilon_sep = (k == 2 || !(min_gap > 0.0))
                           ? std::numeric_limits<double>::infinity()
                           : 1.0 / min_gap;

    // M = max over n and j != y_n of ||d_theta s_nj||.
    for (std::size_t i = 0; i < n; ++i) {
        const int y = data.labels[i];
        for (int c = 0; c < int(k); ++c) {
            if (c == y) continue;
            const Vec g = sample_gap_gradient(net, traces[i], k, y, c);
            diag.M = std::max(diag.M, norm2(g));
        }
    }

    // Gram matrix of the tangential components, assembled in blocks so the
    // N x P gradient matrix never has to exist at once.
    const std::size_t params = net.param_count();
    const std::size_t block =
        std::clamp<std::size_t>((std::size_t{1} << 27) / std::max<std::size_t>(params, 1), 1, n);
    diag.gram = Matrix(n, n);
    auto block_grads = [&](std::size_t b0, std::size_t b1) {
        Matrix g(b1 - b0, params);
        for (std::size_t i = b0; i < b1; ++i) {
            const Vec gi = sample_gap_gradient(net, traces[i], k, data.labels[i], runner[i]);
            std::copy(gi.begin(), gi.end(), g.row(i - b0).begin());
        }
        return g;
    };
    const double l2_over = double(diag.degree) * double(diag.degree) /
                           (theta_norm * theta_norm);
    for (std::size_t b0 = 0; b0 < n; b0 += block) {
        const std::size_t b1 = std::min(b0 + block, n);
        const Matrix gi = block_grads(b0, b1);
        for (std::size_t c0 = b0; c0 < n; c0 += block) {
            const std::size_t c1 = std::min(c0 + block, n);
            const Matrix gj = (c0 == b0) ? gi : block_grads(c0, c1);
            const Matrix prod = matmul_nt(gi, gj);
            for (std::size_t i = b0; i < b1; ++i)
                for (std::size_t j = c0; j < c1; ++j) {
                    const double v = prod(i - b0, j - c0) -
                                     l2_over * s_values[i] * s_values[j];
                    diag.gram(i, j) = v;
                    diag.gram(j, i) = v;
                }
        }
    }

    // Condition number wants an exactly symmetric input; the assembly above
    // fills both triangles from the same value already.
    diag.cond_c = condition_number(diag.gram);

    const double m = cosine(diag.a_vec, diag.v_vec);
    diag.m_cos = m;
    diag.assumption3_ok =
        m > 0.0 && std::isfinite(diag.cond_c) &&
        diag.cond_c - 1.0 <= 2.0 * m / std::sqrt(std::max(1.0 - m * m, 1e-300));

    const double eps_term =
        std::isinf(diag.epsilon_sep) ? 1.0 : std::exp(-1.0 / diag.epsilon_sep);
    diag.bound = -(diag.M * diag.M) * double(k - 2) * norm1(diag.a_vec) * eps_term /
                 (double(n) * theta_pow);
    if (k == 2) diag.bound = 0.0; // exact, the k-2 factor vanishes
    return diag;
}

MarginDerivativeCheck check_margin_derivative(const Network& net, const Dataset& data,
                                              std::span<const double> direction,
                                              double step) {
    MarginDerivativeCheck out;
    const Vec mg = margin_gradient(net, data);
    out.predicted = dot(mg, direction) * step;

    // The step is split symmetrically around theta so the comparison measures
    // the derivative at the point where the gradient was taken; the full
    // parameter displacement between the two copies is step * direction.
    Network fwd = net, bwd = net;
    fwd.axpy_theta(0.5 * step, direction);
    bwd.axpy_theta(-0.5 * step, direction);
    const double before = compute_margin(bwd, data).delta_mu;
    const double after = compute_margin(fwd, data).delta_mu;
    out.observed = after - before;
    return out;
}

} // namespace diqnn
