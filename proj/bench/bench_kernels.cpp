// Serial reference vs OpenMP kernels. Thread count follows OMP_NUM_THREADS.

#include <benchmark/benchmark.h>

#include <numeric>
#include <vector>

#include "gcnpsn/gcnpsn.hpp"

using namespace gcnpsn;

namespace {

struct Fixture {
  EmbeddingModel model = init_model(kDefaultGcnHidden, 7, Variant::kGcn);
  std::vector<PosePair> pairs;
  std::vector<std::size_t> indices;

  Fixture() {
    SynthConfig sc;
    sc.seed = 7;
    pairs = generate_synthetic_corpus(sc).pairs;
    indices.resize(pairs.size());
    std::iota(indices.begin(), indices.end(), 0);
  }
};

const Fixture& fixture() {
  static const Fixture f;
  return f;
}

template <auto Kernel>
void BM_BatchGradient(benchmark::State& state) {
  const auto& f = fixture();
  const auto n = static_cast<std::size_t>(state.range(0));
  const std::span<const std::size_t> idx(f.indices.data(), n);
  const TrainConfig cfg;
  for (auto _ : state) {
    auto g = Kernel(f.model, build_skeleton_topology(), f.pairs, idx, cfg, Variant::kGcn);
    benchmark::DoNotOptimize(g.losses.data());
  }
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * n));
}

template <auto Kernel>
void BM_PairDistances(benchmark::State& state) {
  const auto& f = fixture();
  for (auto _ : state) {
    auto d = Kernel(f.model, build_skeleton_topology(), f.pairs, Variant::kGcn);
    benchmark::DoNotOptimize(d.data());
  }
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * f.pairs.size()));
}

}  // namespace

BENCHMARK(BM_BatchGradient<batch_gradient_serial>)->Arg(64)->Arg(512);
BENCHMARK(BM_BatchGradient<batch_gradient_parallel>)->Arg(64)->Arg(512);
BENCHMARK(BM_PairDistances<pair_distances_serial>);
BENCHMARK(BM_PairDistances<pair_distances_parallel>);

BENCHMARK_MAIN();
