#include "diqnn/analysis.hpp"

#include <algorithm>
#include <cmath>

#include "diqnn/eigen.hpp"
#include "diqnn/error.hpp"

namespace diqnn {

RankCurve truncate_and_eval(const Network& net, const Dataset& data,
                            const std::vector<std::size_t>& ranks) {
    data.validate();
    const auto* quad = std::get_if<QuadraticLayer>(&net.layers().back());
    if (!quad)
        throw UnsupportedModel("truncate_and_eval: classifier must be a quadratic layer");
    const std::size_t d = quad->in_dim();
    for (std::size_t i = 0; i + 1 < ranks.size(); ++i)
        if (ranks[i] >= ranks[i + 1])
            throw SpecError("truncate_and_eval: ranks must be strictly increasing");
    if (!ranks.empty() && ranks.back() > d)
        throw SpecError("truncate_and_eval: rank exceeds input dimension");

    RankCurve curve;
    curve.full_rank_accuracy = evaluate_accuracy(net, data);

    std::vector<EigenDecomposition> decs;
    const bool any_truncation =
        std::any_of(ranks.begin(), ranks.end(), [d](std::size_t r) { return r < d; });
    if (any_truncation) {
        decs.reserve(quad->out_dim());
        for (const Matrix& a : quad->weights) decs.push_back(sym_eigen(a));
    }

    for (const std::size_t r : ranks) {
        if (r >= d) {
            // full rank keeps the original matrices, so predictions are
            // bit-identical to the untruncated net
            curve.points.push_back({r, curve.full_rank_accuracy});
            continue;
        }
        Network copy = net;
        auto& layers = copy.mutable_layers();
        auto& q = std::get<QuadraticLayer>(layers.back());
        for (std::size_t i = 0; i < q.weights.size(); ++i)
            q.weights[i] = decs[i].reconstruct(r);
        curve.points.push_back({r, evaluate_accuracy(copy, data)});
    }
    return curve;
}

StaReport spike_triggered_average(const Network& net, const Dataset& data) {
    data.validate();
    const std::size_t k = net.output_dim();
    const std::size_t d = data.dim();
    if (net.input_dim() != d)
        throw DimensionError("spike_triggered_average: dataset dimension mismatch");

    StaReport rep;
    std::vector<Vec> sums(k, Vec(d, 0.0));
    std::vector<std::size_t> counts(k, 0);
    constexpr std::size_t kChunk = 512;
    for (std::size_t start = 0; start < data.size(); start += kChunk) {
        const std::size_t count = std::min(kChunk, data.size() - start);
        Matrix x(count, d);
        for (std::size_t i = 0; i < count; ++i) {
            const auto src = data.features.row(start + i);
            std::copy(src.begin(), src.end(), x.row(i).begin());
        }
        const Matrix z = net.forward_batch(x);
        for (std::size_t i = 0; i < count; ++i) {
            const std::size_t cls = argmax_lowest(z.row(i));
            axpy(1.0, x.row(i), sums[cls]);
            ++counts[cls];
        }
    }

    const Layer& last = net.layers().back();
    for (std::size_t c = 0; c < k; ++c) {
        StaReport::PerClass pc;
        pc.cls = int(c);
        if (counts[c] == 0) {
            rep.classes.push_back(std::move(pc)); // STA undefined for this class
            continue;
        }
        pc.defined = true;
        pc.sta = sums[c];
        scale(pc.sta, 1.0 / double(counts[c]));
        Matrix weight;
        if (const auto* q = std::get_if<QuadraticLayer>(&last))
            weight = q->weights[c];
        else if (const auto* lr = std::get_if<LowRankLayer>(&last))
            weight = lr->effective_matrix(c);
        else
            throw UnsupportedModel("spike_triggered_average: classifier must be quadratic");
        pc.leading_eigenvector = sym_eigen(weight).eigenvector(0);
        pc.abs_cosine = std::abs(cosine(pc.sta, pc.leading_eigenvector));
        rep.classes.push_back(std::move(pc));
    }
    return rep;
}

HomogeneityReport check_homogeneity(const Network& net, std::span<const double> x,
                                    std::span<const double> scales) {
    const auto degree = net.homogeneity_degree();
    if (!degree)
        throw UnsupportedModel("check_homogeneity: network is not a homogeneous stack");
    HomogeneityReport rep;
    rep.degree = *degree;

    const Vec base = net.forward(x);
    const Vec theta = net.get_theta();
    for (const double alpha : scales) {
        Network scaled = net;
        Vec th = theta;
        scale(th, alpha);
        scaled.set_theta(th);
        const Vec out = scaled.forward(x);
        const double factor = std::pow(alpha, double(*degree));
        double num = 0.0, den = 0.0;
        for (std::size_t i = 0; i < out.size(); ++i) {
            num += (out[i] - factor * base[i]) * (out[i] - factor * base[i]);
            den += factor * base[i] * factor * base[i];
        }
        const double rel = den > 0.0 ? std::sqrt(num / den) : std::sqrt(num);
        rep.cases.push_back({alpha, rel});
        rep.worst_rel_error = std::max(rep.worst_rel_error, rel);
    }
    return rep;
}

EulerReport check_euler_identity(const Network& net, std::span<const double> x) {
    const auto degree = net.homogeneity_degree();
    if (!degree)
        throw UnsupportedModel("check_euler_identity: network is not a homogeneous stack");
    EulerReport rep;
    rep.degree = *degree;

    ForwardTrace trace;
    const Vec phi = net.forward(x, trace);
    const Vec theta = net.get_theta();
    const std::size_t k = phi.size();
    for (std::size_t i = 0; i < k; ++i) {
        Vec onehot(k, 0.0);
        onehot[i] = 1.0;
        const Vec g = net.backward(trace, onehot);
        const double lhs = dot(g, theta);
        const double rhs = double(*degree) * phi[i];
        rep.lhs.push_back(lhs);
        rep.rhs.push_back(rhs);
        const double denom = std::max(std::abs(lhs), std::abs(rhs));
        const double rel = denom > 0.0 ? std::abs(lhs - rhs) / denom : 0.0;
        rep.worst_rel_error = std::max(rep.worst_rel_error, rel);
    }
    return rep;
}

} // namespace diqnn
