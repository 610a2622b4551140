#include <benchmark/benchmark.h>

#include "diqnn/eigen.hpp"
#include "diqnn/matrix.hpp"
#include "diqnn/rng.hpp"

using namespace diqnn;

namespace {

Matrix random_matrix(std::size_t r, std::size_t c, std::uint64_t seed) {
    Rng rng(seed);
    Matrix m(r, c);
    for (std::size_t i = 0; i < m.size(); ++i) m.data()[i] = rng.normal();
    return m;
}

Matrix random_symmetric(std::size_t n, std::uint64_t seed) {
    Rng rng(seed);
    Matrix a(n, n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i; j < n; ++j) a(i, j) = a(j, i) = rng.normal();
    return a;
}

} // namespace

static void BM_MatmulNT(benchmark::State& state) {
    const std::size_t n = std::size_t(state.range(0));
    const std::size_t d = std::size_t(state.range(1));
    const Matrix a = random_matrix(n, d, 1);
    const Matrix b = random_matrix(d, d, 2);
    for (auto _ : state) {
        Matrix c = matmul_nt(a, b);
        benchmark::DoNotOptimize(c.data());
    }
    state.SetItemsProcessed(int64_t(state.iterations()) * int64_t(2 * n * d * d));
}
BENCHMARK(BM_MatmulNT)->Args({100, 784})->Args({100, 256})->Args({512, 64})
    ->Unit(benchmark::kMillisecond);

static void BM_WeightedGram(benchmark::State& state) {
    const std::size_t n = std::size_t(state.range(0));
    const std::size_t d = std::size_t(state.range(1));
    const Matrix x = random_matrix(n, d, 3);
    Rng rng(4);
    Vec w(n);
    for (auto& v : w) v = rng.normal();
    Matrix out(d, d);
    for (auto _ : state) {
        accumulate_weighted_gram(x, w, {out.data(), out.size()});
        benchmark::DoNotOptimize(out.data());
    }
    state.SetItemsProcessed(int64_t(state.iterations()) * int64_t(2 * n * d * d));
}
BENCHMARK(BM_WeightedGram)->Args({100, 784})->Args({100, 256})
    ->Unit(benchmark::kMillisecond);

static void BM_SymEigen(benchmark::State& state) {
    const std::size_t n = std::size_t(state.range(0));
    const Matrix a = random_symmetric(n, 5);
    for (auto _ : state) {
        EigenDecomposition dec = sym_eigen(a);
        benchmark::DoNotOptimize(dec.eigenvalues.data());
    }
}
BENCHMARK(BM_SymEigen)->Arg(16)->Arg(64)->Arg(128)->Arg(256)
    ->Unit(benchmark::kMillisecond);
