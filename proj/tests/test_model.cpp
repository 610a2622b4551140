#include <doctest.h>

#include <cmath>

#include "diqnn/eigen.hpp"
#include "diqnn/error.hpp"
#include "diqnn/model.hpp"
#include "diqnn/rng.hpp"
#include "diqnn/train.hpp"
#include "test_util.hpp"

using namespace diqnn;
using namespace diqnn::testutil;

namespace {

Network single_lowrank(std::size_t in, std::size_t units, std::size_t rank,
                       const Vec& factors_rowmajor) {
    LowRankLayer l;
    l.rank = rank;
    l.units = units;
    l.factors = Matrix(units * rank, in, factors_rowmajor);
    return Network::assemble({Layer{std::move(l)}}, Activation::None);
}

Network single_quadratic(const std::vector<Matrix>& weights) {
    QuadraticLayer l;
    l.weights = weights;
    return Network::assemble({Layer{std::move(l)}}, Activation::None);
}

} // namespace

TEST_CASE("quadratic forward: identity matrix gives the squared norm") {
    Network net = single_quadratic({Matrix::identity(2)});
    const Vec out = net.forward(Vec{1.0, 2.0});
    CHECK(out == Vec{5.0});
}

TEST_CASE("low-rank forward squares the factor inner product") {
    Network net = single_lowrank(2, 1, 1, {1.0, 1.0});
    CHECK(net.forward(Vec{1.0, 2.0}) == Vec{9.0});
}

TEST_CASE("xor paper initialization forwards to (1,1) on x1") {
    NetSpec spec;
    spec.input_dim = 2;
    spec.layers.push_back({LayerKind::LowRank, 2, 1});
    InitOptions opts;
    opts.xor_paper_init = true;
    Network net = Network::init(spec, 99, opts);
    CHECK(net.forward(Vec{1.0, 1.0}) == Vec{1.0, 1.0});
}

TEST_CASE("quadratic backward produces the outer product x x^T") {
    Network net = single_quadratic({Matrix::identity(2)});
    ForwardTrace trace;
    net.forward(Vec{1.0, 2.0}, trace);
    const Vec grad = net.backward(trace, Vec{1.0});
    CHECK(grad == Vec{1.0, 2.0, 2.0, 4.0});
}

TEST_CASE("low-rank backward gives 2<c,x> x") {
    Network net = single_lowrank(2, 1, 1, {1.0, 1.0});
    ForwardTrace trace;
    net.forward(Vec{1.0, 2.0}, trace);
    const Vec grad = net.backward(trace, Vec{1.0});
    CHECK(grad == Vec{6.0, 12.0});
}

TEST_CASE("init is deterministic and symmetric") {
    NetSpec spec;
    spec.input_dim = 6;
    spec.layers.push_back({LayerKind::Quadratic, 3, 1});
    const Network a = Network::init(spec, 1234);
    const Network b = Network::init(spec, 1234);
    CHECK(a.get_theta() == b.get_theta());
    const auto& q = std::get<QuadraticLayer>(a.layers().front());
    CHECK(q.worst_asymmetry() == 0.0);
    const Network c = Network::init(spec, 1235);
    CHECK(a.get_theta() != c.get_theta());
}

TEST_CASE("init rejects degenerate specs") {
    NetSpec spec;
    spec.input_dim = 0;
    spec.layers.push_back({LayerKind::Linear, 2, 1});
    CHECK_THROWS_AS(Network::init(spec, 0), SpecError);
    spec.input_dim = 4;
    spec.layers[0].out = 0;
    CHECK_THROWS_AS(Network::init(spec, 0), SpecError);
    spec.layers[0] = {LayerKind::LowRank, 2, 0};
    CHECK_THROWS_AS(Network::init(spec, 0), SpecError);
}

TEST_CASE("theta view round trips bit-exactly") {
    Rng rng(31);
    Network net = random_stack(rng, 5, 3);
    const Vec theta = net.get_theta();
    CHECK(theta.size() == net.param_count());
    Network other = net;
    Vec tweaked = theta;
    for (auto& v : tweaked) v += 0.125;
    other.set_theta(tweaked);
    CHECK(other.get_theta() == tweaked);
    other.axpy_theta(-1.0, Vec(theta.size(), 0.125));
    const Vec back = other.get_theta();
    for (std::size_t i = 0; i < theta.size(); ++i)
        CHECK(back[i] == doctest::Approx(theta[i]).epsilon(1e-15));
}

TEST_CASE("stale traces are rejected after parameter writes") {
    Rng rng(32);
    Network net = random_stack(rng, 4, 2);
    ForwardTrace trace;
    Vec x(4, 0.5);
    net.forward(x, trace);
    net.axpy_theta(0.1, Vec(net.param_count(), 1.0));
    CHECK_THROWS_AS(net.backward(trace, Vec(net.output_dim(), 1.0)),
                    ContractViolation);
}

TEST_CASE("forward rejects dimension mismatches and non-finite input") {
    Network net = single_lowrank(2, 1, 1, {1.0, 1.0});
    CHECK_THROWS_AS(net.forward(Vec{1.0}), DimensionError);
    CHECK_THROWS_AS(net.forward(Vec{1.0, std::nan("")}), ContractViolation);
}

TEST_CASE("layer dimension chain is validated") {
    NetSpec spec;
    spec.input_dim = 3;
    spec.layers.push_back({LayerKind::LowRank, 4, 1});
    spec.layers.push_back({LayerKind::LowRank, 2, 1});
    CHECK_NOTHROW(Network::init(spec, 0));
    LowRankLayer a;
    a.rank = 1;
    a.units = 4;
    a.factors = Matrix(4, 3, Vec(12, 0.1));
    LowRankLayer b;
    b.rank = 1;
    b.units = 2;
    b.factors = Matrix(2, 5, Vec(10, 0.1)); // expects width 4, gets 5
    CHECK_THROWS_AS(Network::assemble({Layer{a}, Layer{b}}, Activation::None),
                    SpecError);
}

TEST_CASE("analytic gradients match central finite differences") {
    Rng rng(77);
    int checked = 0;
    for (int trial = 0; trial < 30; ++trial) {
        const std::size_t d = 2 + rng.below(5);
        const int k = 2 + int(rng.below(3));
        Network net = random_stack(rng, d, std::size_t(k));
        const Dataset data = random_dataset(4, d, k, rng);

        const auto [loss, grad] = regularized_loss(net, data, 0.0);
        const Vec fd = fd_gradient(net, [&](const Network& n) {
            return regularized_loss(n, data, 0.0).first;
        });
        CHECK(rel_error(grad, fd) < 1e-5);
        ++checked;
    }
    CHECK(checked == 30);
}

TEST_CASE("linear baseline with ReLU also passes the gradient oracle") {
    NetSpec spec;
    spec.input_dim = 5;
    spec.layers.push_back({LayerKind::Linear, 7, 1});
    spec.layers.push_back({LayerKind::Linear, 3, 1});
    spec.activation = Activation::ReLU;
    Network net = Network::init(spec, 4);
    Rng rng(4);
    const Dataset data = random_dataset(6, 5, 3, rng);
    const auto [loss, grad] = regularized_loss(net, data, 0.0);
    const Vec fd = fd_gradient(net, [&](const Network& n) {
        return regularized_loss(n, data, 0.0).first;
    });
    CHECK(rel_error(grad, fd) < 1e-5);
}

TEST_CASE("batch paths agree with per-sample paths") {
    Rng rng(55);
    for (int trial = 0; trial < 10; ++trial) {
        const std::size_t d = 2 + rng.below(4);
        const int k = 2 + int(rng.below(3));
        Network net = random_stack(rng, d, std::size_t(k));
        const Dataset data = random_dataset(5, d, k, rng);

        BatchTrace bt;
        const Matrix z = net.forward_batch(data.features, bt);
        Matrix gout(z.rows(), z.cols());
        Rng grng(trial);
        for (std::size_t i = 0; i < gout.size(); ++i) gout.data()[i] = grng.normal();

        Vec batch_grad(net.param_count(), 0.0);
        net.backward_batch(bt, gout, batch_grad);

        Vec sum_grad(net.param_count(), 0.0);
        for (std::size_t i = 0; i < data.size(); ++i) {
            ForwardTrace ft;
            const Vec out = net.forward(data.sample(i), ft);
            for (std::size_t c = 0; c < out.size(); ++c)
                CHECK(out[c] == doctest::Approx(z(i, c)).epsilon(1e-12));
            const Vec g = net.backward(ft, gout.row(i));
            axpy(1.0, g, sum_grad);
        }
        CHECK(rel_error(batch_grad, sum_grad) < 1e-12);
    }
}

TEST_CASE("quadratic symmetry survives gradient descent updates") {
    NetSpec spec;
    spec.input_dim = 6;
    spec.layers.push_back({LayerKind::Quadratic, 3, 1});
    Network net = Network::init(spec, 8);
    Rng rng(8);
    const Dataset data = random_dataset(16, 6, 3, rng);
    TrainConfig cfg;
    cfg.learning_rate = 0.05;
    cfg.batch_size = 4;
    cfg.epochs = 3;
    cfg.seed = 8;
    cfg.record_every = 1000;
    train(net, data, nullptr, cfg);
    const auto& q = std::get<QuadraticLayer>(net.layers().front());
    CHECK(q.worst_asymmetry() <= 1e-9);
}

TEST_CASE("low-rank outputs are non-negative by construction") {
    Rng rng(21);
    for (int trial = 0; trial < 20; ++trial) {
        const std::size_t d = 2 + rng.below(6);
        Network net = random_stack(rng, d, 3, nullptr, /*lowrank_only=*/true);
        Vec x(d);
        for (auto& v : x) v = rng.normal();
        for (double o : net.forward(x)) CHECK(o >= 0.0);
    }
}

TEST_CASE("homogeneity degrees follow the layer recursion") {
    auto degree_of = [](NetSpec spec) {
        return Network::init(spec, 0).homogeneity_degree();
    };
    NetSpec lr1{4, {{LayerKind::LowRank, 3, 2}}, Activation::None};
    CHECK(degree_of(lr1) == 2);
    NetSpec lr2{4, {{LayerKind::LowRank, 5, 1}, {LayerKind::LowRank, 3, 1}},
                Activation::None};
    CHECK(degree_of(lr2) == 6);
    NetSpec q1{4, {{LayerKind::Quadratic, 3, 1}}, Activation::None};
    CHECK(degree_of(q1) == 1);
    NetSpec q2{4, {{LayerKind::Quadratic, 5, 1}, {LayerKind::Quadratic, 3, 1}},
               Activation::None};
    CHECK(degree_of(q2) == 3);
    NetSpec lin{4, {{LayerKind::Linear, 3, 1}}, Activation::None};
    CHECK_FALSE(degree_of(lin).has_value()); // bias breaks homogeneity
    NetSpec lin_nb{4, {{LayerKind::LinearNoBias, 3, 1}}, Activation::None};
    CHECK(degree_of(lin_nb) == 1);
    NetSpec relu{4, {{LayerKind::Linear, 5, 1}, {LayerKind::Linear, 3, 1}},
                 Activation::ReLU};
    CHECK_FALSE(degree_of(relu).has_value());
}

TEST_CASE("effective_matrix reconstructs the factor sum") {
    Network net1 = single_lowrank(2, 1, 1, {1.0, 0.0});
    const auto& l1 = std::get<LowRankLayer>(net1.layers().front());
    const Matrix m1 = l1.effective_matrix(0);
    CHECK(m1(0, 0) == 1.0);
    CHECK(m1(0, 1) == 0.0);
    CHECK(m1(1, 1) == 0.0);

    Network net2 = single_lowrank(2, 1, 2, {1.0, 0.0, 0.0, 1.0});
    const auto& l2 = std::get<LowRankLayer>(net2.layers().front());
    const Matrix m2 = l2.effective_matrix(0);
    CHECK(m2(0, 0) == 1.0);
    CHECK(m2(1, 1) == 1.0);
    CHECK(m2(0, 1) == 0.0);

    CHECK_THROWS_AS(l2.effective_matrix(3), SpecError);
}

TEST_CASE("effective_matrix of a rank-3 layer has at most three components") {
    Rng rng(61);
    Vec factors(3 * 5);
    for (auto& v : factors) v = rng.normal();
    Network net = single_lowrank(5, 1, 3, factors);
    const auto& l = std::get<LowRankLayer>(net.layers().front());
    const auto dec = sym_eigen(l.effective_matrix(0));
    for (std::size_t i = 3; i < 5; ++i)
        CHECK(std::abs(dec.eigenvalues[i]) < 1e-10);
    for (std::size_t i = 0; i < 5; ++i) CHECK(dec.eigenvalues[i] >= -1e-10);
}
