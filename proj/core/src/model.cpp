#include "diqnn/model.hpp"

#include <algorithm>
#include <cmath>

#include "diqnn/dataset.hpp"
#include "diqnn/error.hpp"
#include "diqnn/rng.hpp"

namespace diqnn {

double QuadraticLayer::worst_asymmetry() const {
    double worst = 0.0;
    for (const Matrix& a : weights) worst = std::max(worst, asymmetry(a));
    return worst;
}

Matrix LowRankLayer::effective_matrix(std::size_t unit) const {
    if (unit >= units) throw SpecError("effective_matrix: unit index out of range");
    const std::size_t d = in_dim();
    Matrix m(d, d);
    for (std::size_t j = 0; j < rank; ++j) {
        const auto c = factor(unit, j);
        for (std::size_t r = 0; r < d; ++r) {
            double* row = m.row(r).data();
            const double cr = c[r];
            for (std::size_t t = 0; t < d; ++t) row[t] += cr * c[t];
        }
    }
    return m;
}

namespace {

std::size_t layer_in(const Layer& l) {
    return std::visit([](const auto& x) { return x.in_dim(); }, l);
}
std::size_t layer_out(const Layer& l) {
    return std::visit([](const auto& x) { return x.out_dim(); }, l);
}
std::size_t layer_params(const Layer& l) {
    return std::visit([](const auto& x) { return x.param_count(); }, l);
}

} // namespace

void Network::check_chain() const {
    if (layers_.empty()) throw SpecError("network has no layers");
    for (std::size_t i = 0; i + 1 < layers_.size(); ++i)
        if (layer_out(layers_[i]) != layer_in(layers_[i + 1]))
            throw SpecError("network: layer dimensions do not chain");
}

std::size_t Network::input_dim() const { return layer_in(layers_.front()); }
std::size_t Network::output_dim() const { return layer_out(layers_.back()); }

std::size_t Network::param_count() const {
    std::size_t n = 0;
    for (const Layer& l : layers_) n += layer_params(l);
    return n;
}

Network Network::init(const NetSpec& spec, std::uint64_t seed, const InitOptions& opts) {
    if (spec.input_dim == 0) throw SpecError("network spec: zero input dimension");
    if (spec.layers.empty()) throw SpecError("network spec: no layers");
    for (const LayerSpec& ls : spec.layers) {
        if (ls.out == 0) throw SpecError("network spec: zero layer width");
        if (ls.kind == LayerKind::LowRank && ls.rank == 0)
            throw SpecError("network spec: zero rank");
    }

    Rng rng(seed);
    Network net;
    net.activation_ = spec.activation;
    std::size_t in = spec.input_dim;
    for (const LayerSpec& ls : spec.layers) {
        switch (ls.kind) {
        case LayerKind::Linear:
        case LayerKind::LinearNoBias: {
            LinearLayer l;
            l.weight = Matrix(ls.out, in);
            const double std_w = opts.linear_std.value_or(std::sqrt(1.0 / double(in)));
            for (std::size_t i = 0; i < l.weight.size(); ++i)
                l.weight.data()[i] = rng.normal(0.0, std_w);
            if (ls.kind == LayerKind::Linear) l.bias.assign(ls.out, 0.0);
            net.layers_.emplace_back(std::move(l));
            break;
        }
        case LayerKind::Quadratic: {
            QuadraticLayer l;
            const double std_w = opts.quadratic_std.value_or(1.0 / double(in));
            for (std::size_t u = 0; u < ls.out; ++u) {
                Matrix g(in, in);
                for (std::size_t i = 0; i < g.size(); ++i)
                    g.data()[i] = rng.normal(0.0, std_w);
                Matrix a(in, in);
                for (std::size_t r = 0; r < in; ++r)
                    for (std::size_t c = 0; c < in; ++c)
                        a(r, c) = 0.5 * (g(r, c) + g(c, r));
                l.weights.push_back(std::move(a));
            }
            net.layers_.emplace_back(std::move(l));
            break;
        }
        case LayerKind::LowRank: {
            LowRankLayer l;
            l.rank = ls.rank;
            l.units = ls.out;
            l.factors = Matrix(ls.out * ls.rank, in);
            const double std_w = opts.lowrank_std.value_or(std::sqrt(1.0 / double(in)));
            for (std::size_t i = 0; i < l.factors.size(); ++i)
                l.factors.data()[i] = rng.normal(0.0, std_w);
            net.layers_.emplace_back(std::move(l));
            break;
        }
        }
        in = ls.out;
    }
    if (opts.xor_paper_init) {
        if (net.layers_.size() != 1) throw SpecError("xor paper init: need a single layer");
        auto* lr = std::get_if<LowRankLayer>(&net.layers_.front());
        if (!lr || lr->rank != 1 || lr->units != 2 || lr->in_dim() != 2)
            throw SpecError("xor paper init: need lowrank:1 with 2 inputs and 2 units");
        lr->factors = Matrix::from_rows({{1.0, 0.0}, {0.0, 1.0}});
    }
    net.check_chain();
    net.version_ = 1;
    return net;
}

Network Network::assemble(std::vector<Layer> layers, Activation act) {
    Network net;
    net.layers_ = std::move(layers);
    net.activation_ = act;
    net.check_chain();
    net.version_ = 1;
    return net;
}

Vec Network::get_theta() const {
    Vec theta;
    theta.reserve(param_count());
    for (const Layer& l : layers_) {
        if (const auto* lin = std::get_if<LinearLayer>(&l)) {
            theta.insert(theta.end(), lin->weight.data(),
                         lin->weight.data() + lin->weight.size());
            theta.insert(theta.end(), lin->bias.begin(), lin->bias.end());
        } else if (const auto* q = std::get_if<QuadraticLayer>(&l)) {
            for (const Matrix& a : q->weights)
                theta.insert(theta.end(), a.data(), a.data() + a.size());
        } else if (const auto* lr = std::get_if<LowRankLayer>(&l)) {
            theta.insert(theta.end(), lr->factors.data(),
                         lr->factors.data() + lr->factors.size());
        }
    }
    return theta;
}

void Network::set_theta(std::span<const double> theta) {
    if (theta.size() != param_count())
        throw DimensionError("set_theta: length does not match parameter count");
    const double* p = theta.data();
    for (Layer& l : layers_) {
        if (auto* lin = std::get_if<LinearLayer>(&l)) {
            std::copy(p, p + lin->weight.size(), lin->weight.data());
            p += lin->weight.size();
            std::copy(p, p + lin->bias.size(), lin->bias.begin());
            p += lin->bias.size();
        } else if (auto* q = std::get_if<QuadraticLayer>(&l)) {
            for (Matrix& a : q->weights) {
                std::copy(p, p + a.size(), a.data());
                p += a.size();
            }
        } else if (auto* lr = std::get_if<LowRankLayer>(&l)) {
            std::copy(p, p + lr->factors.size(), lr->factors.data());
            p += lr->factors.size();
        }
    }
    ++version_;
}

void Network::axpy_theta(double a, std::span<const double> dir) {
    if (dir.size() != param_count())
        throw DimensionError("axpy_theta: length does not match parameter count");
    const double* p = dir.data();
    auto apply = [&](double* dst, std::size_t n) {
        for (std::size_t i = 0; i < n; ++i) dst[i] += a * p[i];
        p += n;
    };
    for (Layer& l : layers_) {
        if (auto* lin = std::get_if<LinearLayer>(&l)) {
            apply(lin->weight.data(), lin->weight.size());
            apply(lin->bias.data(), lin->bias.size());
        } else if (auto* q = std::get_if<QuadraticLayer>(&l)) {
            for (Matrix& m : q->weights) apply(m.data(), m.size());
        } else if (auto* lr = std::get_if<LowRankLayer>(&l)) {
            apply(lr->factors.data(), lr->factors.size());
        }
    }
    ++version_;
}

double Network::theta_norm() const {
    double s = 0.0;
    auto acc = [&s](const double* p, std::size_t n) {
        for (std::size_t i = 0; i < n; ++i) s += p[i] * p[i];
    };
    for (const Layer& l : layers_) {
        if (const auto* lin = std::get_if<LinearLayer>(&l)) {
            acc(lin->weight.data(), lin->weight.size());
            acc(lin->bias.data(), lin->bias.size());
        } else if (const auto* q = std::get_if<QuadraticLayer>(&l)) {
            for (const Matrix& m : q->weights) acc(m.data(), m.size());
        } else if (const auto* lr = std::get_if<LowRankLayer>(&l)) {
            acc(lr->factors.data(), lr->factors.size());
        }
    }
    return std::sqrt(s);
}

// ---- per-sample forward/backward -------------------------------------------

Vec Network::forward(std::span<const double> x) const {
    ForwardTrace scratch;
    return forward(x, scratch);
}

Vec Network::forward(std::span<const double> x, ForwardTrace& trace) const {
    if (x.size() != input_dim())
        throw DimensionError("forward: input length does not match first layer");
    for (double v : x)
        if (!std::isfinite(v)) throw ContractViolation("forward: non-finite input");

    trace.inputs.assign(layers_.size(), {});
    trace.inner.assign(layers_.size(), {});
    trace.net_version = version_;

    Vec cur(x.begin(), x.end());
    for (std::size_t li = 0; li < layers_.size(); ++li) {
        trace.inputs[li] = cur;
        const bool last = li + 1 == layers_.size();
        Vec next;
        if (const auto* lin = std::get_if<LinearLayer>(&layers_[li])) {
            next = matvec(lin->weight, cur);
            if (lin->has_bias()) axpy(1.0, lin->bias, next);
            trace.inner[li] = next; // pre-activation
            if (!last && activation_ == Activation::ReLU)
                for (double& v : next) v = std::max(v, 0.0);
        } else if (const auto* q = std::get_if<QuadraticLayer>(&layers_[li])) {
            const std::size_t k = q->out_dim(), d = q->in_dim();
            next.resize(k);
            trace.inner[li].resize(k * d);
            for (std::size_t i = 0; i < k; ++i) {
                Vec u = matvec(q->weights[i], cur);
                next[i] = dot(u, cur);
                std::copy(u.begin(), u.end(), trace.inner[li].begin() + i * d);
            }
        } else if (const auto* lr = std::get_if<LowRankLayer>(&layers_[li])) {
            const std::size_t k = lr->units, r = lr->rank;
            next.assign(k, 0.0);
            trace.inner[li].resize(k * r);
            for (std::size_t i = 0; i < k; ++i)
                for (std::size_t j = 0; j < r; ++j) {
                    const double t = dot(lr->factor(i, j), cur);
                    trace.inner[li][i * r + j] = t;
                    next[i] += t * t;
                }
        }
        cur = std::move(next);
    }
    trace.output = cur;
    return cur;
}

Vec Network::backward(const ForwardTrace& trace, std::span<const double> output_grad,
                      Vec* input_grad) const {
    if (trace.net_version != version_)
        throw ContractViolation("backward: trace is stale (parameters changed)");
    if (trace.inputs.size() != layers_.size())
        throw ContractViolation("backward: trace does not match this network");
    if (output_grad.size() != output_dim())
        throw DimensionError("backward: output gradient length mismatch");

    // layer offsets into the theta view
    std::vector<std::size_t> offset(layers_.size() + 1, 0);
    for (std::size_t i = 0; i < layers_.size(); ++i)
        offset[i + 1] = offset[i] + layer_params(layers_[i]);
    Vec grad(offset.back(), 0.0);

    Vec gout(output_grad.begin(), output_grad.end());
    for (std::size_t li = layers_.size(); li-- > 0;) {
        const Vec& x = trace.inputs[li];
        const bool last = li + 1 == layers_.size();
        double* gp = grad.data() + offset[li];
        Vec gin;
        if (const auto* lin = std::get_if<LinearLayer>(&layers_[li])) {
            if (!last && activation_ == Activation::ReLU) {
                const Vec& pre = trace.inner[li];
                for (std::size_t i = 0; i < gout.size(); ++i)
                    if (pre[i] <= 0.0) gout[i] = 0.0;
            }
            const std::size_t out = lin->out_dim(), in = lin->in_dim();
            for (std::size_t i = 0; i < out; ++i)
                for (std::size_t j = 0; j < in; ++j)
                    gp[i * in + j] += gout[i] * x[j];
            if (lin->has_bias())
                for (std::size_t i = 0; i < out; ++i) gp[out * in + i] += gout[i];
            gin.assign(in, 0.0);
            for (std::size_t i = 0; i < out; ++i)
                axpy(gout[i], lin->weight.row(i), gin);
        } else if (const auto* q = std::get_if<QuadraticLayer>(&layers_[li])) {
            const std::size_t k = q->out_dim(), d = q->in_dim();
            for (std::size_t i = 0; i < k; ++i) {
                const double g = gout[i];
                if (g != 0.0) {
                    double* a = gp + i * d * d;
                    for (std::size_t r = 0; r < d; ++r) {
                        const double gx = g * x[r];
                        for (std::size_t c = 0; c < d; ++c) a[r * d + c] += gx * x[c];
                    }
                }
            }
            gin.assign(d, 0.0);
            for (std::size_t i = 0; i < k; ++i) {
                std::span<const double> u(trace.inner[li].data() + i * d, d);
                axpy(2.0 * gout[i], u, gin);
            }
        } else if (const auto* lr = std::get_if<LowRankLayer>(&layers_[li])) {
            const std::size_t k = lr->units, r = lr->rank, d = lr->in_dim();
            gin.assign(d, 0.0);
            for (std::size_t i = 0; i < k; ++i)
                for (std::size_t j = 0; j < r; ++j) {
                    const double coef = 2.0 * gout[i] * trace.inner[li][i * r + j];
                    double* row = gp + (i * r + j) * d;
                    for (std::size_t c = 0; c < d; ++c) row[c] += coef * x[c];
                    axpy(coef, lr->factor(i, j), gin);
                }
        }
        gout = std::move(gin);
    }
    if (input_grad) *input_grad = std::move(gout);
    return grad;
}

// ---- batched forward/backward ------------------------------------------------

Matrix Network::forward_batch(const Matrix& x) const {
    BatchTrace scratch;
    return forward_batch(x, scratch);
}

Matrix Network::forward_batch(const Matrix& x, BatchTrace& trace) const {
    if (x.cols() != input_dim())
        throw DimensionError("forward_batch: input width does not match first layer");
    const std::size_t n = x.rows();
    trace.inputs.assign(layers_.size(), {});
    trace.inner.assign(layers_.size(), {});
    trace.lifted.assign(layers_.size(), {});
    trace.net_version = version_;

    Matrix cur = x;
    for (std::size_t li = 0; li < layers_.size(); ++li) {
        trace.inputs[li] = cur;
        const bool last = li + 1 == layers_.size();
        Matrix next;
        if (const auto* lin = std::get_if<LinearLayer>(&layers_[li])) {
            next = matmul_nt(cur, lin->weight);
            if (lin->has_bias())
                for (std::size_t s = 0; s < n; ++s)
                    axpy(1.0, lin->bias, next.row(s));
            trace.inner[li] = next;
            if (!last && activation_ == Activation::ReLU)
                for (std::size_t i = 0; i < next.size(); ++i)
                    next.data()[i] = std::max(next.data()[i], 0.0);
        } else if (const auto* q = std::get_if<QuadraticLayer>(&layers_[li])) {
            const std::size_t k = q->out_dim();
            next = Matrix(n, k);
            trace.lifted[li].reserve(k);
            for (std::size_t i = 0; i < k; ++i) {
                Matrix u = matmul_nt(cur, q->weights[i]); // A symmetric
                for (std::size_t s = 0; s < n; ++s)
                    next(s, i) = dot(u.row(s), cur.row(s));
                trace.lifted[li].push_back(std::move(u));
            }
        } else if (const auto* lr = std::get_if<LowRankLayer>(&layers_[li])) {
            const std::size_t k = lr->units, r = lr->rank;
            Matrix t = matmul_nt(cur, lr->factors); // n x (k*r)
            next = Matrix(n, k);
            for (std::size_t s = 0; s < n; ++s) {
                const double* tr = t.row(s).data();
                double* nr = next.row(s).data();
                for (std::size_t i = 0; i < k; ++i) {
                    double acc = 0.0;
                    for (std::size_t j = 0; j < r; ++j)
                        acc += tr[i * r + j] * tr[i * r + j];
                    nr[i] = acc;
                }
            }
            trace.inner[li] = std::move(t);
        }
        cur = std::move(next);
    }
    trace.outputs = cur;
    return cur;
}

void Network::backward_batch(const BatchTrace& trace, const Matrix& output_grads,
                             std::span<double> param_grad) const {
    if (trace.net_version != version_)
        throw ContractViolation("backward_batch: trace is stale (parameters changed)");
    if (param_grad.size() != param_count())
        throw DimensionError("backward_batch: gradient buffer size mismatch");
    const std::size_t n = output_grads.rows();
    if (trace.inputs.empty() || trace.inputs.front().rows() != n)
        throw ContractViolation("backward_batch: trace does not match gradient batch");

    std::vector<std::size_t> offset(layers_.size() + 1, 0);
    for (std::size_t i = 0; i < layers_.size(); ++i)
        offset[i + 1] = offset[i] + layer_params(layers_[i]);

    Matrix gout = output_grads;
    for (std::size_t li = layers_.size(); li-- > 0;) {
        const Matrix& x = trace.inputs[li];
        const bool last = li + 1 == layers_.size();
        double* gp = param_grad.data() + offset[li];
        Matrix gin;
        if (const auto* lin = std::get_if<LinearLayer>(&layers_[li])) {
            if (!last && activation_ == Activation::ReLU) {
                const Matrix& pre = trace.inner[li];
                for (std::size_t i = 0; i < gout.size(); ++i)
                    if (pre.data()[i] <= 0.0) gout.data()[i] = 0.0;
            }
            const std::size_t out = lin->out_dim(), in = lin->in_dim();
            for (std::size_t s = 0; s < n; ++s) {
                const double* gr = gout.row(s).data();
                const double* xr = x.row(s).data();
                for (std::size_t i = 0; i < out; ++i) {
                    const double g = gr[i];
                    if (g == 0.0) continue;
                    double* w = gp + i * in;
                    for (std::size_t j = 0; j < in; ++j) w[j] += g * xr[j];
                }
                if (lin->has_bias())
                    for (std::size_t i = 0; i < out; ++i) gp[out * in + i] += gr[i];
            }
            if (li > 0) gin = matmul(gout, lin->weight);
        } else if (const auto* q = std::get_if<QuadraticLayer>(&layers_[li])) {
            const std::size_t k = q->out_dim(), d = q->in_dim();
            Vec w(n);
            for (std::size_t i = 0; i < k; ++i) {
                for (std::size_t s = 0; s < n; ++s) w[s] = gout(s, i);
                accumulate_weighted_gram(x, w, {gp + i * d * d, d * d});
            }
            if (li > 0) {
                gin = Matrix(n, d);
                for (std::size_t i = 0; i < k; ++i) {
                    const Matrix& u = trace.lifted[li][i];
                    for (std::size_t s = 0; s < n; ++s)
                        axpy(2.0 * gout(s, i), u.row(s), gin.row(s));
                }
            }
        } else if (const auto* lr = std::get_if<LowRankLayer>(&layers_[li])) {
            const std::size_t k = lr->units, r = lr->rank, d = lr->in_dim();
            const Matrix& t = trace.inner[li];
            // scaled inner products m_n,(ir+j) = 2 g_ni t_n,(ir+j)
            Matrix m(n, k * r);
            for (std::size_t s = 0; s < n; ++s) {
                const double* tr = t.row(s).data();
                const double* gr = gout.row(s).data();
                double* mr = m.row(s).data();
                for (std::size_t i = 0; i < k; ++i)
                    for (std::size_t j = 0; j < r; ++j)
                        mr[i * r + j] = 2.0 * gr[i] * tr[i * r + j];
            }
            for (std::size_t s = 0; s < n; ++s) {
                const double* mr = m.row(s).data();
                const double* xr = x.row(s).data();
                for (std::size_t q2 = 0; q2 < k * r; ++q2) {
                    const double coef = mr[q2];
                    if (coef == 0.0) continue;
                    double* row = gp + q2 * d;
                    for (std::size_t c = 0; c < d; ++c) row[c] += coef * xr[c];
                }
            }
            if (li > 0) gin = matmul(m, lr->factors);
        }
        if (li > 0) gout = std::move(gin);
    }
}

std::optional<int> Network::homogeneity_degree() const {
    if (activation_ == Activation::ReLU && layers_.size() > 1) return std::nullopt;
    long deg = 0;
    for (const Layer& l : layers_) {
        if (const auto* lin = std::get_if<LinearLayer>(&l)) {
            if (lin->has_bias()) return std::nullopt;
            deg = deg + 1;
        } else if (std::holds_alternative<QuadraticLayer>(l)) {
            deg = 2 * deg + 1;
        } else {
            deg = 2 * deg + 2;
        }
        if (deg > 1 << 20) return std::nullopt; // absurd depth
    }
    return int(deg);
}

std::size_t argmax_lowest(std::span<const double> v) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < v.size(); ++i)
        if (v[i] > v[best]) best = i;
    return best;
}

double evaluate_accuracy(const Network& net, const Dataset& data, std::size_t batch) {
    std::size_t correct = 0;
    const std::size_t n = data.size();
    for (std::size_t start = 0; start < n; start += batch) {
        const std::size_t count = std::min(batch, n - start);
        Matrix x(count, data.dim());
        for (std::size_t i = 0; i < count; ++i) {
            const auto src = data.features.row(start + i);
            std::copy(src.begin(), src.end(), x.row(i).begin());
        }
        const Matrix z = net.forward_batch(x);
        for (std::size_t i = 0; i < count; ++i)
            if (argmax_lowest(z.row(i)) == std::size_t(data.labels[start + i]))
                ++correct;
    }
    return double(correct) / double(n);
}

} // namespace diqnn
