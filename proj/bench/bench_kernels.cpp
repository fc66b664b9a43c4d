// Serial reference kernels against the OpenMP versions.
#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "undermine/kernels.hpp"

namespace k = undermine::kernels;

namespace {

std::vector<double> random_values(std::size_t n, unsigned seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> dist;
  std::vector<double> v(n);
  for (auto& x : v) x = dist(rng);
  return v;
}

template <auto Kernel>
void BM_matmul(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto a = random_values(n * n, 1);
  const auto b = random_values(n * n, 2);
  std::vector<double> out(n * n);
  for (auto _ : state) {
    Kernel(k::ConstView{a, n, n}, k::ConstView{b, n, n}, k::MutView{out, n, n}, false);
    benchmark::DoNotOptimize(out.data());
    benchmark::ClobberMemory();
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(n * n * n));
}

template <auto Kernel>
void BM_softmax(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto src = random_values(n * n, 3);
  std::vector<double> x(n * n);
  for (auto _ : state) {
    x = src;
    Kernel(k::MutView{x, n, n}, true);
    benchmark::DoNotOptimize(x.data());
  }
}

void serial_matmul(k::ConstView a, k::ConstView b, k::MutView o, bool acc) { k::serial::matmul(a, b, o, acc); }
void parallel_matmul(k::ConstView a, k::ConstView b, k::MutView o, bool acc) { k::matmul(a, b, o, acc); }
void serial_matmul_nt(k::ConstView a, k::ConstView b, k::MutView o, bool acc) { k::serial::matmul_nt(a, b, o, acc); }
void parallel_matmul_nt(k::ConstView a, k::ConstView b, k::MutView o, bool acc) { k::matmul_nt(a, b, o, acc); }
void serial_softmax(k::MutView x, bool causal) { k::serial::softmax_rows(x, causal); }
void parallel_softmax(k::MutView x, bool causal) { k::softmax_rows(x, causal); }

}  // namespace

BENCHMARK(BM_matmul<serial_matmul>)->Name("matmul/serial")->RangeMultiplier(2)->Range(32, 256);
BENCHMARK(BM_matmul<parallel_matmul>)->Name("matmul/omp")->RangeMultiplier(2)->Range(32, 256)->UseRealTime();
BENCHMARK(BM_matmul<serial_matmul_nt>)->Name("matmul_nt/serial")->RangeMultiplier(2)->Range(32, 256);
BENCHMARK(BM_matmul<parallel_matmul_nt>)->Name("matmul_nt/omp")->RangeMultiplier(2)->Range(32, 256)->UseRealTime();
BENCHMARK(BM_softmax<serial_softmax>)->Name("softmax_rows/serial")->Arg(64)->Arg(256);
BENCHMARK(BM_softmax<parallel_softmax>)->Name("softmax_rows/omp")->Arg(64)->Arg(256)->UseRealTime();

BENCHMARK_MAIN();
