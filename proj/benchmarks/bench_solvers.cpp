// Copyright 2026 The balopt Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <benchmark/benchmark.h>

#include "balopt/designs.hpp"
#include "balopt/matching.hpp"
#include "balopt/pure_opt.hpp"

namespace {

using namespace balopt;

CovariateMatrix random_covariates(int n, int d, std::uint64_t seed) {
  Rng rng = make_rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix x(n, d);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < d; ++j) x(i, j) = normal(rng);
  }
  return CovariateMatrix(x);
}

void BM_PartitionBnB(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const int d = static_cast<int>(state.range(1));
  CovariateMatrix x = random_covariates(n, d, 1);
  SymMatrix k = gram_matrix(Kernel::linear(), x);
  std::uint64_t nodes = 0;
  for (auto _ : state) {
    OptimizerResult result = bb_partition_quadratic(k);
    nodes += result.nodes;
    benchmark::DoNotOptimize(result.value);
  }
  state.counters["nodes"] = static_cast<double>(nodes) /
                            static_cast<double>(state.iterations());
}
BENCHMARK(BM_PartitionBnB)
    ->Args({16, 4})
    ->Args({24, 4})
    ->Args({32, 4})
    ->Args({16, 16});

void BM_BlossomMatching(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  CovariateMatrix x = random_covariates(n, 3, 2);
  SymMatrix d = pairwise_distances(DistanceMetric::euclidean(), x);
  for (auto _ : state) {
    Matching m = blossom_matching(d);
    benchmark::DoNotOptimize(m.weight);
  }
}
BENCHMARK(BM_BlossomMatching)->Arg(32)->Arg(64)->Arg(128);

void BM_Hungarian(benchmark::State& state) {
  const int p = static_cast<int>(state.range(0));
  Rng rng = make_rng(3);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  Matrix cost(p, p);
  for (int i = 0; i < p; ++i) {
    for (int j = 0; j < p; ++j) cost(i, j) = unif(rng);
  }
  for (auto _ : state) {
    benchmark::DoNotOptimize(hungarian_min_cost(cost));
  }
}
BENCHMARK(BM_Hungarian)->Arg(32)->Arg(128);

void BM_GramMatrix(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  CovariateMatrix x = random_covariates(n, 10, 4);
  for (auto _ : state) {
    benchmark::DoNotOptimize(gram_matrix(Kernel::gaussian(), x));
  }
}
BENCHMARK(BM_GramMatrix)->Arg(64)->Arg(256);

void BM_MixedWeights(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  CovariateMatrix x = random_covariates(n, 3, 5);
  SymMatrix k = gram_matrix(Kernel::gaussian(), x);
  auto us = top_t_solutions(k, 5);
  for (auto _ : state) {
    auto result =
        algorithm2_weights(k, us, std::numeric_limits<double>::infinity());
    benchmark::DoNotOptimize(result.objective);
  }
}
BENCHMARK(BM_MixedWeights)->Arg(12)->Arg(20);

void BM_RerandThreshold(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  CovariateMatrix x = random_covariates(n, 4, 6);
  for (auto _ : state) {
    Rng rng = make_rng(7);
    benchmark::DoNotOptimize(rerandomization_threshold(x, 0.01, 1000, rng));
  }
}
BENCHMARK(BM_RerandThreshold)->Arg(32);

}  // namespace

BENCHMARK_MAIN();
