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
#ifndef CGLAB_THEORY_ORACLES_H_
#define CGLAB_THEORY_ORACLES_H_

#include <cstdint>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "cglab/concept_space.h"
#include "cglab/embedding_store.h"
#include "cglab/factor_model.h"
#include "cglab/probe_trainer.h"

namespace cglab {

// ---------------------------------------------------------------------------
// Hard-margin SVM via the closest pair of points between the two convex hulls.

struct SvmOptions {
  // Stop once the Frank-Wolfe duality gap falls below gap_tol * |v|^2.
  double gap_tol = 1e-12;
  long max_iterations = 1'000'000;
  // Refine on the affine hull of the active points; kept only when the
  // refined coefficients stay non-negative.
  bool polish = true;
};

struct SvmSolution {
  Eigen::VectorXd w;
  double b = 0.0;
  double margin = 0.0;     // 1 / |w|
  Eigen::VectorXd lambda;  // convex weights on positives
  Eigen::VectorXd gamma;   // convex weights on negatives
  double gap = 0.0;        // final duality gap, relative to |v|^2
  long iterations = 0;
  bool polished = false;

  double decision(const Eigen::VectorXd& z) const { return w.dot(z) + b; }
};

// Rows of positives and negatives are points. Canonical scaling puts the
// closest points at w.z + b = +1 and -1. Throws NumericalError when the hulls
// intersect.
SvmSolution hard_margin_svm(const Eigen::MatrixXd& positives,
                            const Eigen::MatrixXd& negatives,
                            const SvmOptions& options = {});

// SVM of concept i on the given tuples of a binary factor model: positives
// are the tuples with c_i = 1.
SvmSolution concept_svm(const Eigen::MatrixXd& rows,
                        const std::vector<ConceptTuple>& tuples, int i,
                        const SvmOptions& options = {});

// ---------------------------------------------------------------------------
// Necessity: compositional generalization forces linear, orthogonal factors.

struct NecessityReport {
  bool clause_a = false;  // support vectors are the counterfactual points
  bool clause_b = false;  // per-concept differences constant across tuples
  bool clause_c = false;  // cross-concept differences orthogonal
  double worst_off_support_coeff = 0.0;
  double worst_difference_residual = 0.0;  // relative to the mean difference
  double worst_cross_cosine = 0.0;
  int svm_solves = 0;
  int skipped_cross_datasets = 0;  // non-separable, clause (a) skipped
  std::vector<std::string> notes;

  bool passed() const { return clause_a && clause_b && clause_c; }
};

// set must cover a binary grid with exactly one row per tuple.
NecessityReport verify_necessity(const EmbeddingSet& set, double tol = 1e-6);

// ---------------------------------------------------------------------------
// Sufficiency: orthogonal linear factors generalize from valid supports.

struct SufficiencyReport {
  int supports_checked = 0;
  int supports_passed = 0;
  double worst_accuracy = 1.0;          // over supports and concepts
  double worst_direction_cosine = 1.0;  // SVM w vs u_{i,1} - u_{i,0}
  double max_posterior_tv = 0.0;        // over support pairs, tuples, concepts
  bool counterfactual_pairs_ok = true;
  std::vector<std::string> notes;

  bool passed(double cosine_tol = 1e-6, double tv_tol = 1e-9) const;
};

// Trains one SVM per concept and support. Supports are every cross-dataset
// center for kCrossAt, or trials random sets for kBinaryMajority.
SufficiencyReport verify_sufficiency(const FactorSet& factors,
                                     SupportRule::Kind rule, int trials,
                                     std::uint64_t seed);

// Two-value probe bank equivalent to per-concept SVM readouts: the posterior
// of value 1 is sigmoid(w.z + b).
ProbeBank svm_probe_bank(const ConceptSpace& space,
                         const std::vector<SvmSolution>& per_concept);

// ---------------------------------------------------------------------------
// On-off score patterns.

struct OnOffSpec {
  int k = 2;
  int n = 3;
  double alpha = 1.0;
  double beta = 0.0;

  OnOffSpec(int k, int n, double alpha, double beta);
  double delta() const { return (alpha + (n - 1) * beta) / n; }
  int predicted_rank() const { return 1 + k * (n - 1); }
};

// kn x n^k matrix, rows (i, j) concept-major, columns in canonical tuple
// order: alpha where j = c_i, beta elsewhere.
Eigen::MatrixXd onoff_matrix(const OnOffSpec& spec);
int onoff_rank(const OnOffSpec& spec, double rel_tol = 1e-9);
// Rank without the alpha != -beta (n - 1) guard, for the excluded case.
int onoff_rank_unchecked(int k, int n, double alpha, double beta,
                         double rel_tol = 1e-9);

struct OnOffConstruction {
  EmbeddingSet set;  // d = 1 + k(n - 1), one row per tuple
  ProbeBank probes;  // Euclidean, zero biases
};

// Explicit embeddings and bias-free probes whose scores realize the pattern.
OnOffConstruction onoff_construction(const OnOffSpec& spec);

struct OnOffReconstruction {
  FactorSet factors;
  double max_pattern_error = 0.0;  // scores of reconstructions vs alpha/beta
  double max_delta_error = 0.0;    // |w_{i,j}.zbar - delta|
};

// Checks the pattern on set (within tol), builds the averaged additive
// reconstruction and verifies its scores and the mean score delta within
// 10 * tol. Throws NumericalError on violation.
OnOffReconstruction onoff_additive_reconstruction(const ProbeBank& probes,
                                                  const EmbeddingSet& set,
                                                  const OnOffSpec& spec,
                                                  double tol = 1e-9);

// ---------------------------------------------------------------------------
// Packing bound constructions and region counting.

struct Construction {
  EmbeddingSet set;
  ProbeBank probes;
};

// z_c = sum_i c_i e_i in d = k; w_{i,j} = 2j e_i, b_{i,j} = -j^2.
Construction min_dim_construction(int k, int n);

// Exact integer scores c_i^2 - (j - c_i)^2 of the construction above.
long long min_dim_construction_score(int c_i, int j);

std::uint64_t region_count_affine(int m, int d);
std::uint64_t region_count_central(int m, int d);

struct RegionCount {
  std::uint64_t count = 0;
  bool general_position = true;
};

// hyperplanes is m x (d + 1): normal in the first d columns, offset last, so
// the sign of a.x + b labels the side. Samples a box 10x the largest vertex
// or offset scale plus small balls around every vertex.
RegionCount brute_force_region_count(const Eigen::MatrixXd& hyperplanes,
                                     long samples = 200'000,
                                     std::uint64_t seed = 0);

// Gaussian normals and offsets uniform in [-1, 1].
Eigen::MatrixXd random_arrangement(int m, int d, std::uint64_t seed);

}  // namespace cglab

#endif  // CGLAB_THEORY_ORACLES_H_
