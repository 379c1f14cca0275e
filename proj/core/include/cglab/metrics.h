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
#ifndef CGLAB_METRICS_H_
#define CGLAB_METRICS_H_

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "cglab/embedding_store.h"
#include "cglab/factor_model.h"
#include "cglab/probe_trainer.h"

namespace cglab {

enum class WhitenOrder { kProjectThenWhiten, kWhitenThenProject };

struct R2Options {
  bool whiten = true;
  // Projection happens only when probes are supplied.
  bool project = true;
  WhitenOrder order = WhitenOrder::kProjectThenWhiten;
  double whiten_rel_tol = 1e-8;
};

struct R2Result {
  double r2 = 0.0;
  double numerator_ss = 0.0;
  double denominator_ss = 0.0;
  std::vector<std::string> pipeline;  // stages applied, in order
  int projected_rank = -1;            // -1 when no projection
  int whitened_rank = -1;             // -1 when not whitened
};

// R^2 of the additive reconstruction after optional probe-span projection and
// PCA whitening, with the transform fitted on the data and applied to both
// data and reconstructions.
R2Result projected_whitened_r2(const EmbeddingSet& set, const FactorSet& factors,
                               const ProbeBank* probes = nullptr,
                               const R2Options& options = {});

struct OrthReport {
  std::vector<double> within;  // k
  Eigen::MatrixXd across;      // k x k, diagonal = within
  int excluded_directions = 0;
};

// Mean |cos| between centered, normalized factor directions. An optional
// projector is applied to the factors first.
OrthReport orthogonality(const FactorSet& factors,
                         const SpanProjector* projector = nullptr);

struct EffectiveRank {
  int rank = 0;
  std::vector<double> cumulative;  // cumulative explained variance ratio
};

// Smallest number of principal components of the row-centered n_i x d factor
// block whose cumulative explained variance reaches threshold.
EffectiveRank effective_rank(const FactorSet& factors, int i,
                             double threshold = 0.95);
EffectiveRank effective_rank(const Eigen::MatrixXd& block, double threshold = 0.95);

// Per-concept argmax accuracy over rows whose tuple lies in heldout.
AccuracyReport compositional_accuracy(const ProbeBank& probes,
                                      const EmbeddingSet& set,
                                      const TrainingSupport& heldout);

}  // namespace cglab

#endif  // CGLAB_METRICS_H_
