#include "diqnn/train.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>

#include "diqnn/error.hpp"
#include "diqnn/margin.hpp"
#include "diqnn/rng.hpp"

namespace diqnn {

LossGrad cross_entropy(std::span<const double> outputs, int label) {
    if (label < 0 || label >= int(outputs.size()))
        throw SpecError("cross_entropy: label out of range");
    double m = outputs[0];
    for (double v : outputs) m = std::max(m, v);
    double denom = 0.0;
    LossGrad out;
    out.grad.resize(outputs.size());
    for (std::size_t i = 0; i < outputs.size(); ++i) {
        out.grad[i] = std::exp(outputs[i] - m);
        denom += out.grad[i];
    }
    for (double& g : out.grad) g /= denom;
    out.loss = -(outputs[std::size_t(label)] - m - std::log(denom));
    out.grad[std::size_t(label)] -= 1.0;
    return out;
}

double cross_entropy_batch(const Matrix& outputs, std::span<const int> labels,
                           Matrix& grads) {
    if (outputs.rows() != labels.size())
        throw DimensionError("cross_entropy_batch: label count mismatch");
    grads = Matrix(outputs.rows(), outputs.cols());
    const double inv_n = 1.0 / double(outputs.rows());
    double total = 0.0;
    for (std::size_t i = 0; i < outputs.rows(); ++i) {
        const LossGrad lg = cross_entropy(outputs.row(i), labels[i]);
        total += lg.loss;
        double* g = grads.row(i).data();
        for (std::size_t c = 0; c < outputs.cols(); ++c) g[c] = lg.grad[c] * inv_n;
    }
    return total * inv_n;
}

namespace {

constexpr double kDegenerateNorm = 1e-12;
constexpr double kDivergenceCap = 1e6;

struct BatchStats {
    double ce_loss = 0.0;
    double delta_mu = 0.0;
    std::size_t correct = 0;
};

/// Forward + combined cross-entropy / margin output-gradient + backward over
/// one batch; accumulates the parameter gradient of
///   mean CE - lambda * delta_mu(batch)
/// into `grad` (sized param_count, zeroed by the caller).
BatchStats batch_gradient(const Network& net, const Matrix& x,
                          std::span<const int> labels, double lambda,
                          std::size_t margin_denominator, Vec& grad) {
    BatchStats stats;
    BatchTrace trace;
    const Matrix z = net.forward_batch(x, trace);
    Matrix gout;
    stats.ce_loss = cross_entropy_batch(z, labels, gout);

    const std::size_t n = z.rows(), k = z.cols();
    double margin_sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const auto phi = z.row(i);
        const int y = labels[i];
        if (argmax_lowest(phi) == std::size_t(y)) ++stats.correct;
        int j = -1;
        for (int c = 0; c < int(k); ++c) {
            if (c == y) continue;
            if (j < 0 || phi[std::size_t(c)] > phi[std::size_t(j)]) j = c;
        }
        const double nrm = norm2(phi);
        if (nrm <= kDegenerateNorm) continue;
        const double s = phi[std::size_t(y)] - phi[std::size_t(j)];
        margin_sum += s / nrm;
        if (lambda != 0.0) {
            double* g = gout.row(i).data();
            const double scale = lambda / double(margin_denominator);
            g[y] -= scale / nrm;
            g[j] += scale / nrm;
            const double radial = scale * s / (nrm * nrm * nrm);
            for (std::size_t c = 0; c < k; ++c) g[c] += radial * phi[c];
        }
    }
    stats.delta_mu = margin_sum / double(margin_denominator);
    net.backward_batch(trace, gout, grad);
    return stats;
}

Matrix gather_rows(const Dataset& data, std::span<const std::size_t> idx) {
    Matrix x(idx.size(), data.dim());
    for (std::size_t i = 0; i < idx.size(); ++i) {
        const auto src = data.features.row(idx[i]);
        std::copy(src.begin(), src.end(), x.row(i).begin());
    }
    return x;
}

/// Margin of a deterministic subsample (first `cap` of a seeded permutation)
/// so that large-model traces stay affordable.
std::vector<std::size_t> margin_probe_indices(std::size_t n, std::size_t cap,
                                              std::uint64_t seed) {
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    if (cap < n) {
        Rng rng(seed ^ 0x9e3779b97f4a7c15ull);
        rng.shuffle(idx);
        idx.resize(cap);
        std::sort(idx.begin(), idx.end());
    }
    return idx;
}

} // namespace

std::pair<double, Vec> regularized_loss(const Network& net, const Dataset& batch,
                                        double lambda) {
    if (lambda < 0.0) throw SpecError("regularized_loss: lambda must be >= 0");
    if (lambda > 0.0 && !net.homogeneity_degree())
        throw UnsupportedModel("regularized_loss: margin term needs a homogeneous stack");
    batch.validate();
    Vec grad(net.param_count(), 0.0);
    const Matrix x = [&] {
        std::vector<std::size_t> all(batch.size());
        std::iota(all.begin(), all.end(), std::size_t{0});
        return gather_rows(batch, all);
    }();
    const BatchStats stats =
        batch_gradient(net, x, batch.labels, lambda, batch.size(), grad);
    return {stats.ce_loss - lambda * stats.delta_mu, std::move(grad)};
}

void TrainConfig::validate() const {
    if (!(learning_rate > 0.0)) throw SpecError("train config: learning rate must be > 0");
    if (epochs < 1) throw SpecError("train config: epochs must be >= 1");
    if (optimizer == Optimizer::SGD && batch_size == 0)
        throw SpecError("train config: batch size must be >= 1");
    if (optimizer == Optimizer::GradientFlow && !(flow_step > 0.0))
        throw SpecError("train config: flow step must be > 0");
    if (lambda_margin < 0.0) throw SpecError("train config: lambda must be >= 0");
}

TrainTrace train(Network& net, const Dataset& train_data, const Dataset* test_data,
                 const TrainConfig& config, const StepObserver& observer) {
    config.validate();
    train_data.validate();
    if (config.optimizer == Optimizer::GradientFlow) {
        Network copy = net; // same entry point, different integrator
        TrainTrace trace = gradient_flow(copy, train_data,
                                         config.total_time, config.flow_step, observer);
        net = std::move(copy);
        return trace;
    }
    if (config.lambda_margin > 0.0 && !net.homogeneity_degree())
        throw UnsupportedModel("train: margin regularization needs a homogeneous stack");

    const auto t0 = std::chrono::steady_clock::now();
    auto wall_ms = [&t0] {
        return std::chrono::duration<double, std::milli>(
                   std::chrono::steady_clock::now() - t0)
            .count();
    };

    const std::size_t n = train_data.size();
    const bool full_batch = config.optimizer == Optimizer::GD;
    const std::size_t margin_cap = 2048;
    const auto probe =
        margin_probe_indices(n, full_batch ? n : margin_cap, config.seed);
    Dataset probe_storage;
    const Dataset* margin_probe = &train_data;
    if (probe.size() != n) {
        probe_storage = train_data.subset(probe, "/probe");
        margin_probe = &probe_storage;
    }
    const Dataset& margin_probe_set = *margin_probe;

    TrainTrace trace;
    // delta_mu, theta_norm and test_acc describe the post-update parameters;
    // loss and train_acc are the values observed while taking the steps.
    auto record = [&](long step, long epoch, double loss, double tacc) {
        const MarginReport mrep = compute_margin(net, margin_probe_set);
        TraceRecord r;
        r.step = step;
        r.epoch = epoch;
        r.loss = loss;
        r.train_acc = tacc;
        r.test_acc = test_data ? evaluate_accuracy(net, *test_data) : 0.0;
        r.delta_mu = mrep.delta_mu;
        r.theta_norm = net.theta_norm();
        r.wall_ms = wall_ms();
        trace.records.push_back(r);
        if (observer) observer(step, net, r, mrep);
    };

    // Initial record before any update.
    {
        const Matrix x0 = gather_rows(margin_probe_set, [&] {
            std::vector<std::size_t> all(margin_probe_set.size());
            std::iota(all.begin(), all.end(), std::size_t{0});
            return all;
        }());
        const Matrix z = net.forward_batch(x0);
        Matrix gout;
        const double ce = cross_entropy_batch(z, margin_probe_set.labels, gout);
        std::size_t correct = 0;
        for (std::size_t i = 0; i < z.rows(); ++i)
            if (argmax_lowest(z.row(i)) == std::size_t(margin_probe_set.labels[i]))
                ++correct;
        record(0, 0, ce, double(correct) / double(z.rows()));
    }

    Rng rng(config.seed);
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    Vec grad(net.param_count());
    long step = 0;

    for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
        if (!full_batch) rng.shuffle(order);
        const std::size_t stride = full_batch ? n : config.batch_size;
        std::size_t correct_since_record = 0, seen_since_record = 0;
        for (std::size_t start = 0; start < n; start += stride) {
            const std::size_t count = std::min(stride, n - start);
            std::fill(grad.begin(), grad.end(), 0.0);
            std::span<const std::size_t> idx(order.data() + start, count);
            const Matrix x = gather_rows(train_data, idx);
            std::vector<int> labels(count);
            for (std::size_t i = 0; i < count; ++i)
                labels[i] = train_data.labels[idx[i]];
            const BatchStats stats =
                batch_gradient(net, x, labels, config.lambda_margin, count, grad);
            const double loss = stats.ce_loss - config.lambda_margin * stats.delta_mu;
            if (!std::isfinite(loss) || loss > kDivergenceCap)
                throw DivergedTraining(
                    "training diverged at step " + std::to_string(step + 1), step + 1);
            net.axpy_theta(-config.learning_rate, grad);
            ++step;
            correct_since_record += stats.correct;
            seen_since_record += count;

            const bool epoch_end = start + stride >= n;
            const bool step_record = full_batch || config.record_every == 0
                                         ? full_batch
                                         : step % long(config.record_every) == 0;
            if (step_record || (!full_batch && epoch_end)) {
                const double tacc =
                    double(correct_since_record) / double(seen_since_record);
                correct_since_record = seen_since_record = 0;
                record(step, long(epoch), loss, tacc);
            }
        }
    }
    return trace;
}

TrainTrace gradient_flow(Network& net, const Dataset& data, double total_time,
                         double flow_step, const StepObserver& observer) {
    if (!(flow_step > 0.0)) throw SpecError("gradient_flow: flow step must be > 0");
    data.validate();
    const auto t0 = std::chrono::steady_clock::now();
    auto wall_ms = [&t0] {
        return std::chrono::duration<double, std::milli>(
                   std::chrono::steady_clock::now() - t0)
            .count();
    };

    const std::size_t n = data.size();
    std::vector<std::size_t> all(n);
    std::iota(all.begin(), all.end(), std::size_t{0});
    const Matrix x = gather_rows(data, all);

    // velocity = -grad of the mean cross-entropy at theta
    Vec grad(net.param_count());
    auto velocity_at = [&](const Vec& theta, Network& scratch, Vec& out) {
        scratch.set_theta(theta);
        std::fill(grad.begin(), grad.end(), 0.0);
        const BatchStats stats =
            batch_gradient(scratch, x, data.labels, 0.0, n, grad);
        out.resize(grad.size());
        for (std::size_t i = 0; i < grad.size(); ++i) out[i] = -grad[i];
        return stats;
    };

    TrainTrace trace;
    Network scratch = net;
    Vec theta = net.get_theta();
    Vec k1, k2, k3, k4, tmp(theta.size());
    const long steps = std::max<long>(0, long(std::llround(total_time / flow_step)));

    auto record = [&](long step, const BatchStats& stats) {
        const MarginReport mrep = compute_margin(net, data);
        TraceRecord r;
        r.step = step;
        r.epoch = 0;
        r.loss = stats.ce_loss;
        r.train_acc = double(stats.correct) / double(n);
        r.test_acc = 0.0;
        r.delta_mu = mrep.delta_mu;
        r.theta_norm = net.theta_norm();
        r.wall_ms = wall_ms();
        trace.records.push_back(r);
        if (observer) observer(step, net, r, mrep);
        if (!std::isfinite(r.loss) || r.loss > kDivergenceCap)
            throw DivergedTraining(
                "gradient flow diverged at step " + std::to_string(step), step);
    };

    record(0, velocity_at(theta, scratch, k1));
    const double h = flow_step;
    for (long s = 1; s <= steps; ++s) {
        velocity_at(theta, scratch, k1);
        for (std::size_t i = 0; i < theta.size(); ++i) tmp[i] = theta[i] + 0.5 * h * k1[i];
        velocity_at(tmp, scratch, k2);
        for (std::size_t i = 0; i < theta.size(); ++i) tmp[i] = theta[i] + 0.5 * h * k2[i];
        velocity_at(tmp, scratch, k3);
        for (std::size_t i = 0; i < theta.size(); ++i) tmp[i] = theta[i] + h * k3[i];
        velocity_at(tmp, scratch, k4);
        for (std::size_t i = 0; i < theta.size(); ++i)
            theta[i] += h / 6.0 * (k1[i] + 2.0 * (k2[i] + k3[i]) + k4[i]);
        net.set_theta(theta);
        record(s, velocity_at(theta, scratch, k1));
    }
    return trace;
}

} // namespace diqnn
