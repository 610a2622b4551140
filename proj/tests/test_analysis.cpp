#include <doctest.h>

#include <cmath>

#include "diqnn/analysis.hpp"
#include "diqnn/error.hpp"
#include "diqnn/train.hpp"
#include "test_util.hpp"

using namespace diqnn;
using namespace diqnn::testutil;

TEST_CASE("homogeneity: scaling theta by 2 scales outputs by 2^L") {
    Rng rng(71);
    // single low-rank layer: L = 2
    {
        NetSpec spec{4, {{LayerKind::LowRank, 3, 2}}, Activation::None};
        Network net = Network::init(spec, 1);
        Vec x{0.3, -0.7, 1.1, 0.2};
        const auto rep = check_homogeneity(net, x, Vec{2.0});
        CHECK(rep.degree == 2);
        CHECK(rep.worst_rel_error < 1e-10);
    }
    // two low-rank layers: L = 6, factor 64 at scale 2
    {
        NetSpec spec{4, {{LayerKind::LowRank, 5, 1}, {LayerKind::LowRank, 3, 1}},
                     Activation::None};
        Network net = Network::init(spec, 2);
        Vec x{0.3, -0.7, 1.1, 0.2};
        const Vec base = net.forward(x);
        Network doubled = net;
        Vec theta = net.get_theta();
        scale(theta, 2.0);
        doubled.set_theta(theta);
        const Vec big = doubled.forward(x);
        for (std::size_t i = 0; i < base.size(); ++i)
            CHECK(big[i] == doctest::Approx(64.0 * base[i]).epsilon(1e-10));
        const auto rep = check_homogeneity(net, x, Vec{2.0});
        CHECK(rep.degree == 6);
        CHECK(rep.worst_rel_error < 1e-10);
    }
}

TEST_CASE("homogeneity at scale 1 is the identity") {
    Rng rng(72);
    Network net = random_stack(rng, 5, 3);
    Vec x(5);
    for (auto& v : x) v = rng.normal();
    const auto rep = check_homogeneity(net, x, Vec{1.0});
    CHECK(rep.worst_rel_error == 0.0);
}

TEST_CASE("homogeneity and euler hold across random pure stacks") {
    Rng rng(73);
    const Vec scales{0.25, 0.5, 2.0, 4.0};
    for (int trial = 0; trial < 25; ++trial) {
        const std::size_t d = 2 + rng.below(5);
        Network net = random_stack(rng, d, 2 + rng.below(3));
        Vec x(d);
        for (auto& v : x) v = rng.normal();
        CHECK(check_homogeneity(net, x, scales).worst_rel_error < 1e-10);
        CHECK(check_euler_identity(net, x).worst_rel_error < 1e-8);
    }
}

TEST_CASE("euler identity on a zero-parameter net is trivially satisfied") {
    LowRankLayer l;
    l.rank = 1;
    l.units = 2;
    l.factors = Matrix(2, 3, Vec(6, 0.0));
    Network net = Network::assemble({Layer{std::move(l)}}, Activation::None);
    const auto rep = check_euler_identity(net, Vec{1.0, 2.0, 3.0});
    for (std::size_t i = 0; i < rep.lhs.size(); ++i) {
        CHECK(rep.lhs[i] == 0.0);
        CHECK(rep.rhs[i] == 0.0);
    }
    CHECK(rep.worst_rel_error == 0.0);
}

TEST_CASE("hybrid nets are rejected by the identity checks") {
    NetSpec spec{4, {{LayerKind::Linear, 3, 1}}, Activation::None};
    Network net = Network::init(spec, 1);
    Vec x(4, 0.5);
    CHECK_THROWS_AS(check_homogeneity(net, x, Vec{2.0}), UnsupportedModel);
    CHECK_THROWS_AS(check_euler_identity(net, x), UnsupportedModel);
}

namespace {

/// Small trained-ish quadratic net and data for the truncation tests.
std::pair<Network, Dataset> quadratic_problem(std::uint64_t seed) {
    Rng rng(seed);
    const std::size_t d = 8;
    const int k = 3;
    Dataset data = random_dataset(60, d, k, rng);
    // make classes separable-ish: shift features by the label
    for (std::size_t i = 0; i < data.size(); ++i)
        data.features(i, std::size_t(data.labels[i])) += 2.0;
    NetSpec spec{d, {{LayerKind::Quadratic, std::size_t(k), 1}}, Activation::None};
    Network net = Network::init(spec, seed);
    TrainConfig cfg;
    cfg.learning_rate = 0.05;
    cfg.batch_size = 10;
    cfg.epochs = 10;
    cfg.seed = seed;
    cfg.record_every = 1000;
    train(net, data, nullptr, cfg);
    return {std::move(net), std::move(data)};
}

} // namespace

TEST_CASE("full-rank truncation reproduces the baseline exactly") {
    auto [net, data] = quadratic_problem(81);
    const RankCurve curve = truncate_and_eval(net, data, {1, 4, 8});
    CHECK(curve.points.size() == 3);
    CHECK(curve.points.back().accuracy == curve.full_rank_accuracy);
    for (const auto& p : curve.points) {
        CHECK(p.accuracy >= 0.0);
        CHECK(p.accuracy <= 1.0);
    }
}

TEST_CASE("rank-zero truncation collapses to the tie-break class frequency") {
    auto [net, data] = quadratic_problem(82);
    const RankCurve curve = truncate_and_eval(net, data, {0});
    std::size_t zeros = 0;
    for (int y : data.labels) zeros += y == 0 ? 1 : 0;
    CHECK(curve.points[0].accuracy ==
          doctest::Approx(double(zeros) / double(data.size())).epsilon(1e-12));
}

TEST_CASE("truncation input validation") {
    auto [net, data] = quadratic_problem(83);
    CHECK_THROWS_AS(truncate_and_eval(net, data, {2, 2}), SpecError);
    CHECK_THROWS_AS(truncate_and_eval(net, data, {4, 9}), SpecError);
    NetSpec spec{8, {{LayerKind::LowRank, 3, 1}}, Activation::None};
    Network lr = Network::init(spec, 1);
    CHECK_THROWS_AS(truncate_and_eval(lr, data, {1}), UnsupportedModel);
}

TEST_CASE("sta equals the class mean when predictions are perfect") {
    // rank-1 net whose factors are the class directions: predictions match
    // the construction, so the STA of class i is the mean of its inputs
    const std::size_t d = 6;
    Vec factors;
    Matrix rows(3, d);
    for (std::size_t c = 0; c < 3; ++c) {
        Vec f(d, 0.0);
        f[c] = 1.0;
        factors.insert(factors.end(), f.begin(), f.end());
    }
    LowRankLayer l;
    l.rank = 1;
    l.units = 3;
    l.factors = Matrix(3, d, factors);
    Network net = Network::assemble({Layer{std::move(l)}}, Activation::None);

    Dataset data;
    std::vector<Vec> feats;
    std::vector<int> labels;
    Rng rng(84);
    for (int i = 0; i < 30; ++i) {
        const int c = i % 3;
        Vec x(d, 0.0);
        x[std::size_t(c)] = 3.0 + rng.uniform(); // dominant coordinate
        for (std::size_t q = 0; q < d; ++q) x[q] += 0.01 * rng.normal();
        feats.push_back(x);
        labels.push_back(c);
    }
    data.features = Matrix::from_rows(feats);
    data.labels = labels;
    data.num_classes = 3;
    data.name = "clusters";

    const StaReport rep = spike_triggered_average(net, data);
    REQUIRE(rep.classes.size() == 3);
    for (const auto& pc : rep.classes) {
        REQUIRE(pc.defined);
        // verify the STA is the mean of the samples predicted as pc.cls
        Vec mean(d, 0.0);
        std::size_t count = 0;
        for (std::size_t i = 0; i < data.size(); ++i) {
            const Vec out = net.forward(data.sample(i));
            if (int(argmax_lowest(out)) == pc.cls) {
                axpy(1.0, data.sample(i), mean);
                ++count;
            }
        }
        scale(mean, 1.0 / double(count));
        for (std::size_t q = 0; q < d; ++q)
            CHECK(pc.sta[q] == doctest::Approx(mean[q]).epsilon(1e-12));
        CHECK(pc.abs_cosine > 0.99); // factor direction dominates the cluster
    }
}

TEST_CASE("sta cosine beats a label-shuffled baseline on aligned clusters") {
    // same construction, but compare against shuffling which class each
    // cluster is assigned to (mismatched eigenvector should score lower)
    const std::size_t d = 8;
    Vec factors;
    for (std::size_t c = 0; c < 4; ++c) {
        Vec f(d, 0.0);
        f[c] = 1.0;
        factors.insert(factors.end(), f.begin(), f.end());
    }
    LowRankLayer l;
    l.rank = 1;
    l.units = 4;
    l.factors = Matrix(4, d, factors);
    Network net = Network::assemble({Layer{std::move(l)}}, Activation::None);

    Rng rng(85);
    std::vector<Vec> feats;
    std::vector<int> labels;
    for (int i = 0; i < 40; ++i) {
        const int c = i % 4;
        Vec x(d, 0.0);
        x[std::size_t(c)] = 2.0 + rng.uniform();
        for (std::size_t q = 0; q < d; ++q) x[q] += 0.05 * rng.normal();
        feats.push_back(x);
        labels.push_back(c);
    }
    Dataset data;
    data.features = Matrix::from_rows(feats);
    data.labels = labels;
    data.num_classes = 4;
    data.name = "clusters4";

    const StaReport rep = spike_triggered_average(net, data);
    double mean_cos = 0.0;
    for (const auto& pc : rep.classes) mean_cos += pc.abs_cosine;
    mean_cos /= 4.0;

    // shuffled baseline: STA of class i against eigenvector of class (i+1)%4
    double shuffled = 0.0;
    for (std::size_t c = 0; c < 4; ++c) {
        const auto& sta = rep.classes[c].sta;
        const auto& eig = rep.classes[(c + 1) % 4].leading_eigenvector;
        shuffled += std::abs(cosine(sta, eig));
    }
    shuffled /= 4.0;
    CHECK(mean_cos > shuffled + 0.5);
}

TEST_CASE("classes with no predicted samples are reported missing") {
    // all outputs favor class 0: class 1 never predicted
    LowRankLayer l;
    l.rank = 1;
    l.units = 2;
    l.factors = Matrix(2, 2, {5.0, 5.0, 0.0, 0.0});
    Network net = Network::assemble({Layer{std::move(l)}}, Activation::None);
    Dataset data;
    data.features = Matrix::from_rows({{1.0, 1.0}, {2.0, 1.0}});
    data.labels = {0, 1};
    data.num_classes = 2;
    data.name = "skewed";
    const StaReport rep = spike_triggered_average(net, data);
    CHECK(rep.classes[0].defined);
    CHECK_FALSE(rep.classes[1].defined);
}
