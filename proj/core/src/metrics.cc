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
#include "cglab/metrics.h"

#include <cmath>

#include "cglab/error.h"

namespace cglab {

R2Result projected_whitened_r2(const EmbeddingSet& set, const FactorSet& factors,
                               const ProbeBank* probes, const R2Options& options) {
  if (!(factors.space() == set.space()) || factors.dim() != set.dim()) {
    throw InvalidArgument("factors do not match the embedding set");
  }
  if (probes && probes->dim() != set.dim()) {
    throw InvalidArgument("probe dimension differs from the embeddings");
  }
  R2Result out;
  Eigen::MatrixXd x = set.data_double();
  Eigen::MatrixXd xhat = factors.reconstruct_rows(set.labels());
  const bool project = probes && options.project;

  if (project && (!options.whiten || options.order == WhitenOrder::kProjectThenWhiten)) {
    const SpanProjector p = fit_span_projector(probes->stacked_weights());
    x = p.apply(x);
    xhat = p.apply(xhat);
    out.projected_rank = p.rank();
    out.pipeline.push_back("project");
  }
  if (options.whiten) {
    const WhitenTransform t = whiten_fit(x, options.whiten_rel_tol);
    if (project && options.order == WhitenOrder::kWhitenThenProject) {
      // A probe functional w.x equals (S B^T w).y on whitened y, so the probe
      // span in whitened coordinates is spanned by S B^T w.
      const Eigen::MatrixXd whitened_probes =
          probes->stacked_weights() * t.basis * t.inv_scales.cwiseInverse().asDiagonal();
      x = t.apply(x);
      xhat = t.apply(xhat);
      out.whitened_rank = t.rank();
      out.pipeline.push_back("whiten");
      const SpanProjector p = fit_span_projector(whitened_probes);
      x = p.apply(x);
      xhat = p.apply(xhat);
      out.projected_rank = p.rank();
      out.pipeline.push_back("project");
    } else {
      x = t.apply(x);
      xhat = t.apply(xhat);
      out.whitened_rank = t.rank();
      out.pipeline.push_back("whiten");
    }
  }
  const Eigen::RowVectorXd mean = x.colwise().mean();
  out.numerator_ss = (x - xhat).squaredNorm();
  out.denominator_ss = (x.rowwise() - mean).squaredNorm();
  if (!(out.denominator_ss > 0.0)) throw NumericalError("R^2 undefined: zero total variance");
  out.r2 = 1.0 - out.numerator_ss / out.denominator_ss;
  return out;
}

OrthReport orthogonality(const FactorSet& factors, const SpanProjector* projector) {
  const int k = factors.space().k();
  std::vector<Eigen::MatrixXd> dirs(k);
  std::vector<std::vector<bool>> valid(k);
  OrthReport out;
  double scale = 0.0;
  for (int i = 0; i < k; ++i) {
    Eigen::MatrixXd f = factors.factor(i);
    if (projector) f = projector->apply(f);
    f.rowwise() -= f.colwise().mean();
    dirs[i] = f;
    scale = std::max(scale, f.rowwise().norm().maxCoeff());
  }
  const double zero_tol = 1e-12 * std::max(scale, 1e-300);
  for (int i = 0; i < k; ++i) {
    valid[i].assign(dirs[i].rows(), false);
    int kept = 0;
    for (Eigen::Index a = 0; a < dirs[i].rows(); ++a) {
      const double n = dirs[i].row(a).norm();
      if (n > zero_tol) {
        dirs[i].row(a) /= n;
        valid[i][a] = true;
        ++kept;
      } else {
        ++out.excluded_directions;
      }
    }
    if (kept == 0) {
      throw NumericalError("concept " + std::to_string(i) + " has only zero-norm directions");
    }
  }
  out.within.assign(k, 0.0);
  out.across = Eigen::MatrixXd::Zero(k, k);
  for (int i = 0; i < k; ++i) {
    for (int j = i; j < k; ++j) {
      const Eigen::MatrixXd cos = (dirs[i] * dirs[j].transpose()).cwiseAbs();
      double sum = 0.0;
      long count = 0;
      for (Eigen::Index a = 0; a < cos.rows(); ++a) {
        if (!valid[i][a]) continue;
        for (Eigen::Index b = 0; b < cos.cols(); ++b) {
          if (!valid[j][b] || (i == j && a == b)) continue;
          sum += std::min(cos(a, b), 1.0);
          ++count;
        }
      }
      const double mean = count ? sum / static_cast<double>(count) : 0.0;
      out.across(i, j) = out.across(j, i) = mean;
      if (i == j) out.within[i] = mean;
    }
  }
  return out;
}

EffectiveRank effective_rank(const Eigen::MatrixXd& block, double threshold) {
  if (block.rows() < 2) throw InvalidArgument("effective rank needs at least two factors");
  if (!(threshold > 0.0 && threshold <= 1.0)) {
    throw InvalidArgument("threshold must lie in (0, 1]");
  }
  const Eigen::MatrixXd centered = block.rowwise() - block.colwise().mean();
  Eigen::BDCSVD<Eigen::MatrixXd> svd(centered);
  const Eigen::VectorXd var = svd.singularValues().cwiseAbs2();
  EffectiveRank out;
  const double total = var.sum();
  if (!(total > 0.0)) return out;
  double acc = 0.0;
  for (Eigen::Index j = 0; j < var.size(); ++j) {
    acc += var(j);
    out.cumulative.push_back(acc / total);
  }
  // Absorb rounding so a threshold of exactly 1 is reachable.
  const double slack = 1e-12;
  out.rank = static_cast<int>(out.cumulative.size());
  for (std::size_t j = 0; j < out.cumulative.size(); ++j) {
    if (out.cumulative[j] >= threshold - slack) {
      out.rank = static_cast<int>(j) + 1;
      break;
    }
  }
  return out;
}

EffectiveRank effective_rank(const FactorSet& factors, int i, double threshold) {
  if (i < 0 || i >= factors.space().k()) throw InvalidArgument("concept index out of range");
  return effective_rank(factors.factor(i), threshold);
}

AccuracyReport compositional_accuracy(const ProbeBank& probes,
                                      const EmbeddingSet& set,
                                      const TrainingSupport& heldout) {
  if (heldout.size() == 0) throw InvalidArgument("held-out support is empty");
  const auto rows = set.rows_in(heldout);
  if (rows.empty()) throw InvalidArgument("no embedding rows for the held-out tuples");
  Eigen::MatrixXd z(rows.size(), set.dim());
  LabelMatrix labels(rows.size(), set.space().k());
  for (std::size_t j = 0; j < rows.size(); ++j) {
    const auto r = static_cast<Eigen::Index>(j);
    z.row(r) = set.data().row(rows[j]).cast<double>();
    labels.row(r) = set.labels().row(rows[j]);
  }
  return accuracy(probes, z, labels);
}

}  // namespace cglab
