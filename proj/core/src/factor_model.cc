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
#include "cglab/factor_model.h"

#include <cmath>
#include <string>

#include "cglab/error.h"

namespace cglab {

namespace fs = std::filesystem;

FactorSet::FactorSet(ConceptSpace space, Eigen::VectorXd mean,
                     std::vector<Eigen::MatrixXd> factors)
    : space_(std::move(space)), mean_(std::move(mean)), factors_(std::move(factors)) {
  if (mean_.size() < 1) throw InvalidArgument("factor dimension must be >= 1");
  if (static_cast<int>(factors_.size()) != space_.k()) {
    throw InvalidArgument("need one factor block per concept");
  }
  for (int i = 0; i < space_.k(); ++i) {
    if (factors_[i].rows() != space_.cardinality(i) ||
        factors_[i].cols() != mean_.size()) {
      throw InvalidArgument("factor block " + std::to_string(i) + " has the wrong shape");
    }
  }
}

FactorSet FactorSet::Zero(const ConceptSpace& space, int d) {
  std::vector<Eigen::MatrixXd> f;
  for (int n : space.cardinalities()) f.push_back(Eigen::MatrixXd::Zero(n, d));
  return FactorSet(space, Eigen::VectorXd::Zero(d), std::move(f));
}

Eigen::VectorXd FactorSet::reconstruct(const ConceptTuple& t) const {
  if (!space_.contains(t)) throw InvalidArgument("tuple not in factor space");
  Eigen::VectorXd z = mean_;
  for (int i = 0; i < space_.k(); ++i) z += factors_[i].row(t[i]).transpose();
  return z;
}

Eigen::MatrixXd FactorSet::reconstruct_rows(const LabelMatrix& labels) const {
  if (labels.cols() != space_.k()) throw InvalidArgument("label width mismatch");
  Eigen::MatrixXd out(labels.rows(), dim());
  for (Eigen::Index r = 0; r < labels.rows(); ++r) {
    Eigen::VectorXd z = mean_;
    for (int i = 0; i < space_.k(); ++i) {
      if (labels(r, i) >= space_.cardinality(i)) throw InvalidArgument("label out of range");
      z += factors_[i].row(labels(r, i)).transpose();
    }
    out.row(r) = z.transpose();
  }
  return out;
}

FactorSet FactorSet::canonical() const {
  Eigen::VectorXd mean = mean_;
  std::vector<Eigen::MatrixXd> f = factors_;
  for (auto& block : f) {
    const Eigen::RowVectorXd s = block.colwise().mean();
    block.rowwise() -= s;
    mean += s.transpose();
  }
  return FactorSet(space_, std::move(mean), std::move(f));
}

double FactorSet::centering_residual() const {
  double scale = 0.0;
  double worst = 0.0;
  for (const auto& block : factors_) {
    scale = std::max(scale, block.cwiseAbs().maxCoeff());
    worst = std::max(worst, block.colwise().sum().cwiseAbs().maxCoeff());
  }
  return scale > 0.0 ? worst / scale : worst;
}

int DesignMatrix::rank(double rel_tol) const { return numerical_rank(a, rel_tol); }

DesignMatrix build_design_matrix(const ConceptSpace& space,
                                 const LabelMatrix& labels) {
  if (labels.cols() != space.k()) throw InvalidArgument("label width mismatch");
  DesignMatrix dm;
  int offset = 0;
  for (int n : space.cardinalities()) {
    dm.offsets.push_back(offset);
    offset += n;
  }
  dm.a = Eigen::MatrixXd::Zero(labels.rows(), offset);
  for (Eigen::Index r = 0; r < labels.rows(); ++r) {
    for (int i = 0; i < space.k(); ++i) {
      if (labels(r, i) >= space.cardinality(i)) throw InvalidArgument("label out of range");
      dm.a(r, dm.offsets[i] + labels(r, i)) = 1.0;
    }
  }
  return dm;
}

FactorSet recover_by_averaging(const EmbeddingSet& set) {
  const ConceptSpace& space = set.space();
  const int d = set.dim();
  const Eigen::MatrixXd x = set.data_double();
  const Eigen::VectorXd mean = x.colwise().mean().transpose();

  std::vector<Eigen::MatrixXd> f;
  for (int i = 0; i < space.k(); ++i) {
    Eigen::MatrixXd sums = Eigen::MatrixXd::Zero(space.cardinality(i), d);
    Eigen::VectorXd counts = Eigen::VectorXd::Zero(space.cardinality(i));
    for (Eigen::Index r = 0; r < x.rows(); ++r) {
      sums.row(set.labels()(r, i)) += x.row(r);
      counts(set.labels()(r, i)) += 1.0;
    }
    for (int j = 0; j < space.cardinality(i); ++j) {
      if (counts(j) == 0.0) {
        throw InvalidArgument("concept " + std::to_string(i) + " value " +
                              std::to_string(j) + " has no rows");
      }
      sums.row(j) /= counts(j);
    }
    sums.rowwise() -= mean.transpose();
    sums.rowwise() -= sums.colwise().mean();
    f.push_back(std::move(sums));
  }
  return FactorSet(space, mean, std::move(f));
}

FactorSet recover_by_least_squares(const EmbeddingSet& set, double rel_tol) {
  const ConceptSpace& space = set.space();
  const DesignMatrix dm = build_design_matrix(space, set.labels());
  const Eigen::MatrixXd x = set.data_double();
  const Eigen::VectorXd mean = x.colwise().mean().transpose();
  const Eigen::MatrixXd centered = x.rowwise() - mean.transpose();

  int rank = 0;
  const Eigen::MatrixXd u = pinv_solve(dm.a, centered, rel_tol, &rank);
  const int required = space.free_parameters();
  if (rank < required) {
    throw RankDeficientError("design matrix has rank " + std::to_string(rank) +
                                 ", factors need " + std::to_string(required) +
                                 " (deficiency " + std::to_string(required - rank) + ")",
                             rank, required);
  }
  std::vector<Eigen::MatrixXd> f;
  for (int i = 0; i < space.k(); ++i) {
    f.push_back(u.middleRows(dm.offsets[i], space.cardinality(i)));
  }
  return FactorSet(space, mean, std::move(f)).canonical();
}

bool has_balanced_counts(const EmbeddingSet& set) {
  const ConceptSpace& space = set.space();
  for (int i = 0; i < space.k(); ++i) {
    std::vector<Eigen::Index> counts(space.cardinality(i), 0);
    for (Eigen::Index r = 0; r < set.rows(); ++r) ++counts[set.labels()(r, i)];
    for (auto c : counts) {
      if (c != counts[0]) return false;
    }
  }
  return true;
}

ReconstructionError reconstruction_error(const EmbeddingSet& set,
                                         const FactorSet& factors) {
  if (!(factors.space() == set.space()) || factors.dim() != set.dim()) {
    throw InvalidArgument("factors do not match the embedding set");
  }
  const Eigen::MatrixXd diff =
      set.data_double() - factors.reconstruct_rows(set.labels());
  ReconstructionError e;
  const Eigen::VectorXd norms = diff.rowwise().norm();
  e.max_row_error = norms.size() ? norms.maxCoeff() : 0.0;
  e.rms = norms.size() ? std::sqrt(norms.squaredNorm() / static_cast<double>(norms.size())) : 0.0;
  return e;
}

void write_factors(const FactorSet& factors, const fs::path& dir) {
  Manifest m = open_or_create_manifest(dir, factors.space(), factors.dim());
  m.erase_prefix("factors.");
  std::string blocks;
  Eigen::Index rows = 1;
  for (int i = 0; i < factors.space().k(); ++i) {
    if (i) blocks += ',';
    blocks += std::to_string(factors.space().cardinality(i));
    rows += factors.space().cardinality(i);
  }
  m.set("factors.blocks", blocks);
  m.set("factors.rows", std::to_string(rows));
  m.set("factors.dtype", "f32le");

  Eigen::MatrixXd stacked(rows, factors.dim());
  stacked.row(0) = factors.mean().transpose();
  Eigen::Index r = 1;
  for (const auto& block : factors.factors()) {
    stacked.middleRows(r, block.rows()) = block;
    r += block.rows();
  }
  write_f32(dir / "factors.f32", stacked);
  m.Write(dir);
}

FactorSet read_factors(const fs::path& dir) {
  const Manifest m = Manifest::Read(dir);
  const ConceptSpace space = manifest_space(m);
  if (m.get_int_list("factors.blocks") != space.cardinalities()) {
    throw FormatError("factor blocks disagree with the manifest cardinalities");
  }
  const auto rows = m.get_int("factors.rows");
  if (rows != 1 + space.total_values()) throw FormatError("factor row count mismatch");
  const auto d = m.get_int("d");
  const Eigen::MatrixXd stacked = read_f32(dir / "factors.f32", rows, d);
  std::vector<Eigen::MatrixXd> f;
  Eigen::Index r = 1;
  for (int n : space.cardinalities()) {
    f.push_back(stacked.middleRows(r, n));
    r += n;
  }
  return FactorSet(space, stacked.row(0).transpose(), std::move(f));
}

}  // namespace cglab
