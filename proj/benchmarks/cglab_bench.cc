// Copyright 2026 The cglab Authors.
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

#include <random>

#include <benchmark/benchmark.h>

#include "cglab/factor_model.h"
#include "cglab/metrics.h"
#include "cglab/probe_trainer.h"
#include "cglab/synthetic_lab.h"
#include "cglab/theory_oracles.h"

namespace cglab {
namespace {

void BM_HardMarginSvm(benchmark::State& state) {
  const int points = static_cast<int>(state.range(0));
  std::mt19937_64 rng(1);
  Eigen::MatrixXd pos = gaussian_matrix(points, 16, rng);
  Eigen::MatrixXd neg = gaussian_matrix(points, 16, rng);
  pos.col(0).array() += 4.0;
  neg.col(0).array() -= 4.0;
  for (auto _ : state) benchmark::DoNotOptimize(hard_margin_svm(pos, neg));
  state.SetComplexityN(points);
}
BENCHMARK(BM_HardMarginSvm)->RangeMultiplier(4)->Range(16, 1024)->Complexity();

void BM_LossAndGradient(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const FactorizedData data = generate_factorized(ConceptSpace({n, n, n}), 32, false, 1.0, 2);
  const ProbeBank bank = ProbeBank::Init(data.set.space(), 32, Geometry::kEuclidean, 3);
  const Eigen::MatrixXd z = data.set.data_double();
  ProbeGradient g;
  for (auto _ : state) {
    benchmark::DoNotOptimize(loss_and_gradient(bank, z, data.set.labels(), Loss::kCrossEntropy, &g));
  }
  state.SetItemsProcessed(state.iterations() * z.rows());
}
BENCHMARK(BM_LossAndGradient)->Arg(4)->Arg(8)->Arg(16);

void BM_BruteForceRegionCount(benchmark::State& state) {
  const Eigen::MatrixXd h = random_arrangement(static_cast<int>(state.range(0)), 3, 4);
  for (auto _ : state) benchmark::DoNotOptimize(brute_force_region_count(h, 50'000, 5));
}
BENCHMARK(BM_BruteForceRegionCount)->Arg(3)->Arg(6)->Unit(benchmark::kMillisecond);

void BM_ProjectedWhitenedR2(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const FactorizedData data = generate_factorized(ConceptSpace({n, n, n}), 64, false, 1.0, 6);
  const FactorSet fit = recover_by_least_squares(data.set);
  const ProbeBank probes = ProbeBank::Init(data.set.space(), 64, Geometry::kSpherical, 7);
  for (auto _ : state) benchmark::DoNotOptimize(projected_whitened_r2(data.set, fit, &probes));
}
BENCHMARK(BM_ProjectedWhitenedR2)->Arg(4)->Arg(10)->Unit(benchmark::kMillisecond);

void BM_LeastSquaresRecovery(benchmark::State& state) {
  const int n = static_cast<int>(state.range(0));
  const FactorizedData data = generate_factorized(ConceptSpace({n, n, n}), 64, false, 1.0, 8);
  for (auto _ : state) benchmark::DoNotOptimize(recover_by_least_squares(data.set));
}
BENCHMARK(BM_LeastSquaresRecovery)->Arg(4)->Arg(10)->Unit(benchmark::kMillisecond);

}  // namespace
}  // namespace cglab

BENCHMARK_MAIN();
