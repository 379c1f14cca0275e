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
#ifndef CGLAB_SYNTHETIC_LAB_H_
#define CGLAB_SYNTHETIC_LAB_H_

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "cglab/concept_space.h"
#include "cglab/embedding_store.h"
#include "cglab/factor_model.h"
#include "cglab/probe_trainer.h"
#include "cglab/theory_oracles.h"

namespace cglab {

struct FactorizedData {
  EmbeddingSet set;
  FactorSet truth;  // canonical form
};

// z_c = mean + sum_i u_{i,c_i}, one row per tuple. With orthogonal = true each
// concept's differences live on its own set of coordinates under a random
// signed permutation, which needs d >= sum(n_i - 1). Otherwise factors are
// i.i.d. Gaussian. Values sit on a dyadic grid so the f32 rows are exactly
// additive.
FactorizedData generate_factorized(const ConceptSpace& space, int d,
                                   bool orthogonal, double scale,
                                   std::uint64_t seed);

// Binary grid whose cross-dataset SVMs are well defined but whose
// per-concept differences vary with the other concepts.
EmbeddingSet generate_unstable_binary(int k, int d, std::uint64_t seed);

// 2D, 2 concepts: a large concept-0 axis and a weak concept-1 axis buried in
// concept-independent noise. Whitening lowers R^2 on this set.
EmbeddingSet generate_dominant_noise(int n, std::uint64_t seed);

struct SeparableCounterexample {
  EmbeddingSet set;
  ProbeBank witness;  // accuracy 1.0 on set
};

// 2D, 2 concepts with n >= 3 values: points in the cells of two line families,
// with some boundary points pushed far out along unbounded cells. The
// perturbations keep cell membership, so the witness stays perfect while the
// additive fit degrades. perturb = false gives the unperturbed grid.
SeparableCounterexample generate_separable_nonfactorized(int n, std::uint64_t seed,
                                                         bool perturb = true);

// z_c = sum_i alpha_{i,c_i} d_i with nearest-prototype probes
// w_{i,j} = 2 p_{i,j}, b_{i,j} = -|p_{i,j}|^2 where p_{i,j} is the mean of the
// embeddings with c_i = j. directions is d x k; empty draws orthonormal
// directions from seed. coefficients[i] has n distinct entries; empty means
// alpha_{i,j} = j.
Construction generate_lrh_grid(int k, int n, int d,
                               std::vector<std::vector<double>> coefficients,
                               std::uint64_t seed,
                               const Eigen::MatrixXd& directions = {});

struct FreeTrainConfig {
  Loss loss = Loss::kCrossEntropy;
  Geometry geometry = Geometry::kEuclidean;
  int epochs = 5000;
  double lr = 0.1;
  std::uint64_t seed = 0;
  std::uint64_t grid_cap = 100'000;
  // Sample grid_cap tuples instead of failing when the grid is larger.
  bool allow_sampling = false;
};

struct LabRun {
  int d = 0;
  FreeTrainConfig config;
  EmbeddingSet embeddings;
  ProbeBank probes;
  std::vector<double> loss_history;
  AccuracyReport accuracy;
  bool sampled_grid = false;
};

// Embeddings z_c ~ N(0, I) and probes optimized jointly with the probe
// trainer's Adam and cosine schedule.
LabRun train_free_embeddings(const ConceptSpace& space, int d,
                             const FreeTrainConfig& config);

struct MinDimConfig {
  std::vector<int> ks{2, 3, 4};
  std::vector<int> ns{2, 6};
  int restarts = 3;
  int d_max = 32;
  double success = 0.99;
  FreeTrainConfig train;
  int jobs = 1;
};

struct MinDimCell {
  int k = 0;
  int n = 0;
  std::optional<int> min_dim;  // empty: not found up to d_max
  // Best mean and min per-concept accuracy over restarts at d = 1, 2, ...
  std::vector<double> best_mean_accuracy;
  std::vector<double> best_min_accuracy;
  bool approximate = false;  // grid was sampled
  // No success below d = k.
  bool bound_holds = true;
};

struct MinDimTable {
  MinDimConfig config;
  std::vector<MinDimCell> cells;  // ordered by (k, n) as listed in config

  const MinDimCell& cell(int k, int n) const;
};

// Scans d = 1, 2, ... per (k, n) cell; a d succeeds when any restart reaches
// mean per-concept accuracy >= success. Cells run on config.jobs threads.
MinDimTable min_dim_scan(const MinDimConfig& config);

enum class Readout { kSvm, kGradientDescent };

const char* to_string(Readout readout);
Readout parse_readout(const std::string& name);

struct StabilityConfig {
  SupportRule::Kind rule = SupportRule::Kind::kBinaryMajority;
  int trials = 10;
  Readout readout = Readout::kSvm;
  TrainConfig gd;  // used for kGradientDescent
  std::uint64_t seed = 0;
};

struct StabilityReport {
  int supports = 0;
  double max_posterior_tv = 0.0;  // over support pairs, tuples and concepts
  // Per concept: smallest pairwise cosine between readout directions
  // (w_{i,1} - w_{i,0}) across supports.
  std::vector<double> min_direction_cosine;
  std::vector<double> min_accuracy;  // per support, on the full grid
  int non_separable = 0;             // SVM supports skipped
};

// Binary space with one row per tuple. kCrossAt uses trials distinct random
// centers (capped at the grid size); kBinaryMajority draws trials supports.
StabilityReport stability_experiment(const EmbeddingSet& set,
                                     const StabilityConfig& config);

}  // namespace cglab

#endif  // CGLAB_SYNTHETIC_LAB_H_
