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
#ifndef CGLAB_FACTOR_MODEL_H_
#define CGLAB_FACTOR_MODEL_H_

#include <filesystem>
#include <vector>

#include <Eigen/Dense>

#include "cglab/concept_space.h"
#include "cglab/embedding_store.h"

namespace cglab {

// Additive model z_c = mean + sum_i u_{i,c_i}. factors[i] is n_i x d.
class FactorSet {
 public:
  FactorSet(ConceptSpace space, Eigen::VectorXd mean,
            std::vector<Eigen::MatrixXd> factors);
  static FactorSet Zero(const ConceptSpace& space, int d);

  const ConceptSpace& space() const { return space_; }
  const Eigen::VectorXd& mean() const { return mean_; }
  const std::vector<Eigen::MatrixXd>& factors() const { return factors_; }
  const Eigen::MatrixXd& factor(int i) const { return factors_.at(i); }
  int dim() const { return static_cast<int>(mean_.size()); }

  Eigen::VectorXd reconstruct(const ConceptTuple& t) const;
  // One reconstruction per row of the label matrix.
  Eigen::MatrixXd reconstruct_rows(const LabelMatrix& labels) const;

  // Moves per-concept means into the global offset so every block sums to
  // zero. Reconstructions are unchanged.
  FactorSet canonical() const;
  // Largest |sum_j u_{i,j}| entry relative to the factor scale.
  double centering_residual() const;

 private:
  ConceptSpace space_;
  Eigen::VectorXd mean_;
  std::vector<Eigen::MatrixXd> factors_;
};

// One-hot design over sum_i n_i columns, one row per label row.
struct DesignMatrix {
  Eigen::MatrixXd a;
  std::vector<int> offsets;  // column offset of each concept block

  int rank(double rel_tol = 1e-10) const;
};

DesignMatrix build_design_matrix(const ConceptSpace& space,
                                 const LabelMatrix& labels);

// Conditional means minus the global mean, rows weighted equally, then
// re-centered per concept. Throws if some concept value has no rows.
FactorSet recover_by_averaging(const EmbeddingSet& set);

// Minimum-norm least squares on the one-hot design, then canonical centering.
// Throws RankDeficientError unless the design reaches rank 1 + sum(n_i - 1).
FactorSet recover_by_least_squares(const EmbeddingSet& set,
                                   double rel_tol = 1e-10);

// True if every concept value has the same number of rows.
bool has_balanced_counts(const EmbeddingSet& set);

struct ReconstructionError {
  double max_row_error = 0.0;  // max Euclidean norm of z - z_hat
  double rms = 0.0;
};

ReconstructionError reconstruction_error(const EmbeddingSet& set,
                                         const FactorSet& factors);

// Factor section of the dump layout: factors.f32 holds the mean row followed
// by each concept block; the manifest records the block sizes.
void write_factors(const FactorSet& factors, const std::filesystem::path& dir);
FactorSet read_factors(const std::filesystem::path& dir);

}  // namespace cglab

#endif  // CGLAB_FACTOR_MODEL_H_
