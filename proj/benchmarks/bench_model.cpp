#include <benchmark/benchmark.h>

#include "diqnn/margin.hpp"
#include "diqnn/model.hpp"
#include "diqnn/rng.hpp"
#include "diqnn/train.hpp"

using namespace diqnn;

namespace {

Dataset bench_dataset(std::size_t n, std::size_t d, int k, std::uint64_t seed) {
    Rng rng(seed);
    Dataset data;
    data.features = Matrix(n, d);
    for (std::size_t i = 0; i < data.features.size(); ++i)
        data.features.data()[i] = rng.normal();
    data.labels.resize(n);
    for (auto& y : data.labels) y = int(rng.below(std::uint64_t(k)));
    data.num_classes = k;
    data.name = "bench";
    return data;
}

Network make_net(LayerKind kind, std::size_t d, std::size_t k, std::size_t rank,
                 std::uint64_t seed) {
    NetSpec spec;
    spec.input_dim = d;
    spec.layers.push_back({kind, k, rank});
    return Network::init(spec, seed);
}

} // namespace

static void BM_QuadraticStep(benchmark::State& state) {
    const std::size_t d = std::size_t(state.range(0));
    Network net = make_net(LayerKind::Quadratic, d, 10, 1, 7);
    const Dataset batch = bench_dataset(100, d, 10, 8);
    for (auto _ : state) {
        auto [loss, grad] = regularized_loss(net, batch, 0.0);
        net.axpy_theta(-0.01, grad);
        benchmark::DoNotOptimize(loss);
    }
    // forward + backward are each ~2*B*k*d^2 flops
    state.SetItemsProcessed(int64_t(state.iterations()) *
                            int64_t(4 * 100 * 10 * d * d));
}
BENCHMARK(BM_QuadraticStep)->Arg(784)->Arg(256)->Unit(benchmark::kMillisecond);

static void BM_LowRankStep(benchmark::State& state) {
    const std::size_t d = std::size_t(state.range(0));
    const std::size_t rank = std::size_t(state.range(1));
    Network net = make_net(LayerKind::LowRank, d, 10, rank, 9);
    const Dataset batch = bench_dataset(100, d, 10, 10);
    for (auto _ : state) {
        auto [loss, grad] = regularized_loss(net, batch, 0.0);
        net.axpy_theta(-0.01, grad);
        benchmark::DoNotOptimize(loss);
    }
}
BENCHMARK(BM_LowRankStep)->Args({784, 1})->Args({784, 8})
    ->Unit(benchmark::kMillisecond);

static void BM_MarginReport(benchmark::State& state) {
    const std::size_t n = std::size_t(state.range(0));
    Network net = make_net(LayerKind::LowRank, 784, 10, 1, 11);
    const Dataset data = bench_dataset(n, 784, 10, 12);
    for (auto _ : state) {
        MarginReport rep = compute_margin(net, data);
        benchmark::DoNotOptimize(rep.delta_mu);
    }
}
BENCHMARK(BM_MarginReport)->Arg(1000)->Arg(4000)->Unit(benchmark::kMillisecond);

static void BM_MarginGradient(benchmark::State& state) {
    const std::size_t n = std::size_t(state.range(0));
    Network net = make_net(LayerKind::LowRank, 784, 10, 1, 13);
    const Dataset data = bench_dataset(n, 784, 10, 14);
    for (auto _ : state) {
        Vec g = margin_gradient(net, data);
        benchmark::DoNotOptimize(g.data());
    }
}
BENCHMARK(BM_MarginGradient)->Arg(1000)->Unit(benchmark::kMillisecond);
