// Serial reference vs OpenMP block kernels on an autoencoder-sized problem.

#include "aefrc/kernels.hpp"
#include "aefrc/random.hpp"

#include <benchmark/benchmark.h>

using namespace aefrc;

namespace {

struct Problem {
    Network net;
    Matrix x;
};

Problem make(std::int64_t rows) {
    Rng rng(17);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    Problem p{Network::random({30, 12, 30}, 5), Matrix(rows, 30)};
    for (Eigen::Index i = 0; i < p.x.rows(); ++i)
        for (Eigen::Index j = 0; j < p.x.cols(); ++j) p.x(i, j) = u(rng);
    return p;
}

void BM_serial(benchmark::State& state) {
    const Problem p = make(state.range(0));
    for (auto _ : state) benchmark::DoNotOptimize(kernels::serial::cost_grad(p.net, p.x, p.x, 1e-4, SparsityTerm{0.1, 3.0}));
    state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_parallel(benchmark::State& state) {
    const Problem p = make(state.range(0));
    for (auto _ : state) benchmark::DoNotOptimize(kernels::parallel::cost_grad(p.net, p.x, p.x, 1e-4, SparsityTerm{0.1, 3.0}));
    state.SetItemsProcessed(state.iterations() * state.range(0));
}

}  // namespace

BENCHMARK(BM_serial)->Arg(256)->Arg(4096)->Arg(32768);
BENCHMARK(BM_parallel)->Arg(256)->Arg(4096)->Arg(32768);
BENCHMARK_MAIN();
