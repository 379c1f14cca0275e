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
#ifndef CGLAB_EMBEDDING_STORE_H_
#define CGLAB_EMBEDDING_STORE_H_

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "cglab/concept_space.h"
#include "cglab/linalg.h"

namespace cglab {

using LabelMatrix =
    Eigen::Matrix<std::uint16_t, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Embeddings (rows x d, stored as f32) with one concept tuple per row.
class EmbeddingSet {
 public:
  EmbeddingSet(ConceptSpace space, RowMatrixXf data, LabelMatrix labels,
               std::map<std::string, std::string> meta = {});

  // One row per tuple, converted from double.
  static EmbeddingSet FromTuples(const ConceptSpace& space,
                                 const std::vector<ConceptTuple>& tuples,
                                 const Eigen::MatrixXd& rows);

  const ConceptSpace& space() const { return space_; }
  const RowMatrixXf& data() const { return data_; }
  const LabelMatrix& labels() const { return labels_; }
  const std::map<std::string, std::string>& meta() const { return meta_; }
  std::map<std::string, std::string>& mutable_meta() { return meta_; }

  Eigen::Index rows() const { return data_.rows(); }
  int dim() const { return static_cast<int>(data_.cols()); }

  ConceptTuple label(Eigen::Index row) const;
  Eigen::MatrixXd data_double() const { return data_.cast<double>(); }

  // Row indices whose tuple lies in the support, in row order.
  std::vector<Eigen::Index> rows_in(const TrainingSupport& support) const;

 private:
  ConceptSpace space_;
  RowMatrixXf data_;
  LabelMatrix labels_;
  std::map<std::string, std::string> meta_;
};

// Ordered key=value manifest. The first line is always magic=CGLAB1.
class Manifest {
 public:
  static constexpr const char* kMagic = "CGLAB1";
  static constexpr const char* kFileName = "manifest.txt";

  static Manifest Read(const std::filesystem::path& dir);
  void Write(const std::filesystem::path& dir) const;

  bool has(const std::string& key) const;
  const std::string& get(const std::string& key) const;
  std::int64_t get_int(const std::string& key) const;
  std::vector<int> get_int_list(const std::string& key) const;
  void set(const std::string& key, const std::string& value);
  void erase_prefix(const std::string& prefix);

  const std::vector<std::pair<std::string, std::string>>& entries() const {
    return entries_;
  }

 private:
  std::vector<std::pair<std::string, std::string>> entries_;
};

// Writes manifest.txt, embeddings.f32 and labels.u16 into dir (created if
// needed). Rejects empty sets.
void write_dump(const EmbeddingSet& set, const std::filesystem::path& dir);
EmbeddingSet read_dump(const std::filesystem::path& dir);

// Validated concept space from the manifest's k and cardinalities keys.
ConceptSpace manifest_space(const Manifest& m);
// Manifest for dir if present, else a fresh one carrying the space and d.
// Throws FormatError when an existing manifest disagrees.
Manifest open_or_create_manifest(const std::filesystem::path& dir,
                                 const ConceptSpace& space, int d);

// Raw little-endian f32 payload helpers shared by the dump sections.
void write_f32(const std::filesystem::path& file, const Eigen::MatrixXd& rows);
Eigen::MatrixXd read_f32(const std::filesystem::path& file, Eigen::Index rows,
                         Eigen::Index cols);

// PCA whitening: x -> diag(inv_scales) * basis^T * (x - mean).
struct WhitenTransform {
  Eigen::VectorXd mean;
  Eigen::MatrixXd basis;       // d x r, orthonormal columns
  Eigen::VectorXd inv_scales;  // r, sqrt(rows - 1) / singular value
  double rel_tol = 1e-8;

  int rank() const { return static_cast<int>(basis.cols()); }
  // rows x d -> rows x r.
  Eigen::MatrixXd apply(const Eigen::MatrixXd& x) const;
};

WhitenTransform whiten_fit(const Eigen::MatrixXd& x, double rel_tol = 1e-8);

// Orthogonal projector onto the span of probe weight rows.
struct SpanProjector {
  Eigen::MatrixXd basis;  // d x r

  int rank() const { return static_cast<int>(basis.cols()); }
  Eigen::MatrixXd matrix() const { return basis * basis.transpose(); }
  // rows x d -> rows x d, each row projected.
  Eigen::MatrixXd apply(const Eigen::MatrixXd& x) const;
};

SpanProjector fit_span_projector(const Eigen::MatrixXd& probe_weights,
                                 double rel_tol = 1e-10);

}  // namespace cglab

#endif  // CGLAB_EMBEDDING_STORE_H_
