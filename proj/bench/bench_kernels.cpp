#include <benchmark/benchmark.h>

#include <vector>

#include "gmbm/eigensolver.hpp"
#include "gmbm/kernels.hpp"
#include "gmbm/model.hpp"
#include "gmbm/rng.hpp"

namespace {

gmbm::LatentEmbedding latents(std::size_t n, int d) {
    gmbm::ModelParams P;
    P.n = n;
    P.d = d;
    P.mu = 0.3;
    P.p = 0.2;
    return gmbm::sample_latents(P, gmbm::RngStream(3));
}

gmbm::GraphSample graph(std::size_t n, int d) { return gmbm::connect_graph(latents(n, d), 0.1); }

void BM_ThresholdGramSerial(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    const auto L = latents(n, 64);
    std::vector<std::uint64_t> bits(n * gmbm::kernels::row_words(n));
    for (auto _ : state) {
        gmbm::kernels::serial::threshold_gram({L.U.data(), static_cast<std::size_t>(L.U.size())}, n, 64, 0.1, bits);
        benchmark::DoNotOptimize(bits.data());
    }
}

void BM_ThresholdGramParallel(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    const auto L = latents(n, 64);
    std::vector<std::uint64_t> bits(n * gmbm::kernels::row_words(n));
    for (auto _ : state) {
        gmbm::kernels::threshold_gram({L.U.data(), static_cast<std::size_t>(L.U.size())}, n, 64, 0.1, bits);
        benchmark::DoNotOptimize(bits.data());
    }
}

void BM_CsrMatvecSerial(benchmark::State& state) {
    const auto G = graph(static_cast<std::size_t>(state.range(0)), 64);
    std::vector<double> x(G.n, 1.0), y(G.n);
    for (auto _ : state) {
        gmbm::kernels::serial::csr_matvec(G.offsets, G.neighbors, x, y);
        benchmark::DoNotOptimize(y.data());
    }
}

void BM_CsrMatvecParallel(benchmark::State& state) {
    const auto G = graph(static_cast<std::size_t>(state.range(0)), 64);
    std::vector<double> x(G.n, 1.0), y(G.n);
    for (auto _ : state) {
        gmbm::kernels::csr_matvec(G.offsets, G.neighbors, x, y);
        benchmark::DoNotOptimize(y.data());
    }
}

void BM_MixtureSamplesSerial(benchmark::State& state) {
    std::vector<double> out(static_cast<std::size_t>(state.range(0)));
    for (auto _ : state) {
        gmbm::kernels::serial::mixture_inner_products(64, 0.3, gmbm::RngStream(5), out);
        benchmark::DoNotOptimize(out.data());
    }
}

void BM_MixtureSamplesParallel(benchmark::State& state) {
    std::vector<double> out(static_cast<std::size_t>(state.range(0)));
    for (auto _ : state) {
        gmbm::kernels::mixture_inner_products(64, 0.3, gmbm::RngStream(5), out);
        benchmark::DoNotOptimize(out.data());
    }
}

void BM_EigentopDense(benchmark::State& state) {
    const auto G = graph(static_cast<std::size_t>(state.range(0)), 16);
    gmbm::EigenOptions options;
    options.path = gmbm::EigenPath::dense;
    for (auto _ : state) benchmark::DoNotOptimize(gmbm::eigentop(G, 17, options).eigenvalues.data());
}

void BM_EigentopIterative(benchmark::State& state) {
    const auto G = graph(static_cast<std::size_t>(state.range(0)), 16);
    gmbm::EigenOptions options;
    options.path = gmbm::EigenPath::iterative;
    for (auto _ : state) benchmark::DoNotOptimize(gmbm::eigentop(G, 17, options).eigenvalues.data());
}

}  // namespace

BENCHMARK(BM_ThresholdGramSerial)->Arg(1000)->Arg(4000)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_ThresholdGramParallel)->Arg(1000)->Arg(4000)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_CsrMatvecSerial)->Arg(4000)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_CsrMatvecParallel)->Arg(4000)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_MixtureSamplesSerial)->Arg(1 << 20)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_MixtureSamplesParallel)->Arg(1 << 20)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_EigentopDense)->Arg(256)->Arg(512)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_EigentopIterative)->Arg(256)->Arg(512)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
