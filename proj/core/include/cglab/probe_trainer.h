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
#ifndef CGLAB_PROBE_TRAINER_H_
#define CGLAB_PROBE_TRAINER_H_

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "cglab/concept_space.h"
#include "cglab/embedding_store.h"

namespace cglab {

enum class Loss { kCrossEntropy, kBinaryCrossEntropy };
enum class Geometry { kEuclidean, kSpherical };

const char* to_string(Loss loss);
const char* to_string(Geometry geometry);
Loss parse_loss(const std::string& name);          // "ce" | "bce"
Geometry parse_geometry(const std::string& name);  // "euclidean" | "spherical"

// Affine readouts h_{i,j}(z) = tau * w_{i,j}.z + b_{i,j}. In spherical
// geometry both z and w are normalized at score time and tau is learned as
// exp(log_temperature); in Euclidean geometry tau is fixed at 1.
struct ProbeBank {
  ConceptSpace space;
  Geometry geometry = Geometry::kEuclidean;
  std::vector<Eigen::MatrixXd> weights;  // n_i x d
  std::vector<Eigen::VectorXd> biases;   // n_i
  double log_temperature = 0.0;

  // Zero weights and biases (Euclidean) or seeded random unit rows
  // (spherical).
  static ProbeBank Init(const ConceptSpace& space, int d, Geometry geometry,
                        std::uint64_t seed = 0);

  int dim() const { return static_cast<int>(weights.at(0).cols()); }
  double temperature() const;

  // Logits of concept i for each row of z: rows x n_i.
  Eigen::MatrixXd logits(int i, const Eigen::MatrixXd& z) const;
  // One logit vector per concept for a single embedding.
  std::vector<Eigen::VectorXd> score(const Eigen::VectorXd& z) const;
  Eigen::VectorXd posterior(const Eigen::VectorXd& z, int i) const;
  // Argmax per concept, ties to the lowest value index.
  LabelMatrix predict(const Eigen::MatrixXd& z) const;

  // (sum n_i) x d, concept blocks in order.
  Eigen::MatrixXd stacked_weights() const;
  // Rescales every weight row to unit norm (spherical invariant).
  void normalize_weights();
  void validate() const;
};

// Row softmax with max subtraction.
Eigen::MatrixXd softmax_rows(const Eigen::MatrixXd& logits);

struct ProbeGradient {
  std::vector<Eigen::MatrixXd> weights;
  std::vector<Eigen::VectorXd> biases;
  double log_temperature = 0.0;
};

// Mean over rows of the per-row loss summed over concepts. Fills grad and
// dz (gradient with respect to z) when non-null.
double loss_and_gradient(const ProbeBank& bank, const Eigen::MatrixXd& z,
                         const LabelMatrix& labels, Loss loss,
                         ProbeGradient* grad = nullptr,
                         Eigen::MatrixXd* dz = nullptr);

double loss_value(const ProbeBank& bank, const EmbeddingSet& set,
                  const TrainingSupport& support, Loss loss);

struct TrainConfig {
  Loss loss = Loss::kCrossEntropy;
  Geometry geometry = Geometry::kEuclidean;
  int epochs = 5000;
  double lr = 0.1;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  std::uint64_t seed = 0;
  // Stop early once no weight block changes direction by more than this
  // (1 - cosine) over 100 epochs. Zero disables the check.
  double direction_tol = 0.0;

  void validate() const;
};

// Learning rate at epoch t of a cosine schedule decaying to zero.
double cosine_lr(double lr, int epoch, int epochs);

// Adam moments for one parameter block.
struct AdamSlot {
  Eigen::MatrixXd m;
  Eigen::MatrixXd v;

  void step(Eigen::MatrixXd& param, const Eigen::MatrixXd& grad, double lr,
            int t, const TrainConfig& cfg);
};

struct TrainResult {
  ProbeBank bank;
  std::vector<double> loss_history;  // loss before each update
  int epochs_run = 0;
};

// Full-batch Adam with cosine decay on the rows of z. Embeddings are read
// only.
TrainResult train_probes_on(const ConceptSpace& space, const Eigen::MatrixXd& z,
                            const LabelMatrix& labels, const TrainConfig& config);

TrainResult train_probes(const EmbeddingSet& set, const TrainingSupport& support,
                         const TrainConfig& config);

// Max relative error between analytic and central-difference gradients over
// every probe parameter. Denominator is max(|analytic|, |numeric|, 1e-3).
double gradient_check(const ProbeBank& bank, const EmbeddingSet& set,
                      const TrainingSupport& support, Loss loss,
                      double step = 1e-5);

struct AccuracyReport {
  std::vector<double> per_concept;
  double mean = 0.0;
  double min = 0.0;
  Eigen::Index rows = 0;
};

AccuracyReport accuracy(const ProbeBank& bank, const Eigen::MatrixXd& z,
                        const LabelMatrix& labels);

// Probe section of the dump layout: probe_weights.f32 and probe_biases.f32
// with geometry and temperature in the manifest.
void write_probes(const ProbeBank& bank, const std::filesystem::path& dir);
ProbeBank read_probes(const std::filesystem::path& dir);

}  // namespace cglab

#endif  // CGLAB_PROBE_TRAINER_H_
