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
#include <algorithm>
#include <cmath>
#include <limits>

#include "cglab/error.h"
#include "cglab/linalg.h"
#include "cglab/theory_oracles.h"

namespace cglab {

namespace {

struct HullState {
  Eigen::VectorXd lambda;
  Eigen::VectorXd gamma;
  Eigen::VectorXd v;
};

// Relative duality gap of the closest-point problem at v.
double relative_gap(const Eigen::MatrixXd& p, const Eigen::MatrixXd& n,
                    const Eigen::VectorXd& v) {
  const double vv = v.squaredNorm();
  const double gap = vv - ((p * v).minCoeff() - (n * v).maxCoeff());
  return vv > 0.0 ? gap / vv : std::numeric_limits<double>::infinity();
}

// Minimum-norm point of aff(active positives) - aff(active negatives). Returns
// false when the affine solution leaves the hulls.
bool polish(const Eigen::MatrixXd& p, const Eigen::MatrixXd& n, double prune,
            HullState* state) {
  std::vector<Eigen::Index> ap, an;
  const double lmax = state->lambda.maxCoeff();
  const double gmax = state->gamma.maxCoeff();
  for (Eigen::Index a = 0; a < state->lambda.size(); ++a) {
    if (state->lambda(a) > prune * lmax) ap.push_back(a);
  }
  for (Eigen::Index b = 0; b < state->gamma.size(); ++b) {
    if (state->gamma(b) > prune * gmax) an.push_back(b);
  }
  const Eigen::Index cols = static_cast<Eigen::Index>(ap.size() + an.size()) - 2;
  const Eigen::VectorXd r0 = (p.row(ap[0]) - n.row(an[0])).transpose();
  Eigen::VectorXd mu = Eigen::VectorXd::Zero(std::max<Eigen::Index>(cols, 0));
  Eigen::VectorXd v = r0;
  if (cols > 0) {
    Eigen::MatrixXd dirs(p.cols(), cols);
    Eigen::Index c = 0;
    for (std::size_t a = 1; a < ap.size(); ++a) dirs.col(c++) = (p.row(ap[a]) - p.row(ap[0])).transpose();
    for (std::size_t b = 1; b < an.size(); ++b) dirs.col(c++) = (n.row(an[0]) - n.row(an[b])).transpose();
    mu = -pinv_solve(dirs, r0, 1e-12);
    v = r0 + dirs * mu;
  }
  HullState out{Eigen::VectorXd::Zero(p.rows()), Eigen::VectorXd::Zero(n.rows()), v};
  Eigen::Index c = 0;
  double rest = 1.0;
  for (std::size_t a = 1; a < ap.size(); ++a) {
    out.lambda(ap[a]) = mu(c++);
    rest -= out.lambda(ap[a]);
  }
  out.lambda(ap[0]) = rest;
  rest = 1.0;
  for (std::size_t b = 1; b < an.size(); ++b) {
    out.gamma(an[b]) = mu(c++);
    rest -= out.gamma(an[b]);
  }
  out.gamma(an[0]) = rest;
  const double neg_tol = -1e-12;
  if (out.lambda.minCoeff() < neg_tol || out.gamma.minCoeff() < neg_tol) return false;
  out.lambda = out.lambda.cwiseMax(0.0);
  out.gamma = out.gamma.cwiseMax(0.0);
  *state = std::move(out);
  return true;
}

}  // namespace

SvmSolution hard_margin_svm(const Eigen::MatrixXd& positives,
                            const Eigen::MatrixXd& negatives,
                            const SvmOptions& options) {
  const Eigen::MatrixXd& p = positives;
  const Eigen::MatrixXd& n = negatives;
  if (p.rows() == 0 || n.rows() == 0) throw InvalidArgument("SVM needs points in both classes");
  if (p.cols() != n.cols() || p.cols() == 0) throw InvalidArgument("SVM class dimensions differ");

  // Scale for the separability test.
  double diameter2 = 0.0;
  {
    Eigen::MatrixXd all(p.rows() + n.rows(), p.cols());
    all << p, n;
    const Eigen::RowVectorXd c = all.colwise().mean();
    diameter2 = 4.0 * (all.rowwise() - c).rowwise().squaredNorm().maxCoeff();
  }

  // Start from the positive closest to the negative centroid and its nearest
  // negative.
  HullState s{Eigen::VectorXd::Zero(p.rows()), Eigen::VectorXd::Zero(n.rows()), {}};
  Eigen::Index a0, b0;
  (p.rowwise() - n.colwise().mean()).rowwise().squaredNorm().minCoeff(&a0);
  (n.rowwise() - p.row(a0)).rowwise().squaredNorm().minCoeff(&b0);
  s.lambda(a0) = 1.0;
  s.gamma(b0) = 1.0;
  s.v = (p.row(a0) - n.row(b0)).transpose();

  SvmSolution sol;
  long it = 0;
  double gap = std::numeric_limits<double>::infinity();
  for (; it < options.max_iterations; ++it) {
    if (it % 1000 == 999) s.v = p.transpose() * s.lambda - n.transpose() * s.gamma;
    const double vv = s.v.squaredNorm();
    if (vv <= 1e-24 * std::max(diameter2, 1e-300)) {
      throw NumericalError("SVM classes are not linearly separable");
    }
    const Eigen::VectorXd sp = p * s.v;
    const Eigen::VectorXd sn = n * s.v;
    Eigen::Index a_fw, b_fw;
    const double min_p = sp.minCoeff(&a_fw);
    const double max_n = sn.maxCoeff(&b_fw);
    gap = (vv - (min_p - max_n)) / vv;
    if (gap <= options.gap_tol) break;
    if (min_p - max_n <= 0.0 && vv <= 1e-16 * diameter2) {
      throw NumericalError("SVM classes are not linearly separable");
    }

    Eigen::Index a_aw = -1, b_aw = -1;
    for (Eigen::Index a = 0; a < sp.size(); ++a) {
      if (s.lambda(a) > 0.0 && (a_aw < 0 || sp(a) > sp(a_aw))) a_aw = a;
    }
    for (Eigen::Index b = 0; b < sn.size(); ++b) {
      if (s.gamma(b) > 0.0 && (b_aw < 0 || sn(b) < sn(b_aw))) b_aw = b;
    }
    const double gp = sp(a_aw) - sp(a_fw);
    const double gn = sn(b_fw) - sn(b_aw);
    if (gp >= gn) {
      const Eigen::VectorXd dir = (p.row(a_fw) - p.row(a_aw)).transpose();
      const double dd = dir.squaredNorm();
      if (dd == 0.0) break;
      const double held = s.lambda(a_aw);
      const double t = std::min(gp / dd, held);
      s.lambda(a_aw) = t >= held ? 0.0 : held - t;
      s.lambda(a_fw) += t;
      s.v += t * dir;
    } else {
      const Eigen::VectorXd dir = (n.row(b_aw) - n.row(b_fw)).transpose();
      const double dd = dir.squaredNorm();
      if (dd == 0.0) break;
      const double held = s.gamma(b_aw);
      const double t = std::min(gn / dd, held);
      s.gamma(b_aw) = t >= held ? 0.0 : held - t;
      s.gamma(b_fw) += t;
      s.v += t * dir;
    }
  }
  s.v = p.transpose() * s.lambda - n.transpose() * s.gamma;
  gap = relative_gap(p, n, s.v);

  if (options.polish) {
    for (double prune : {1e-9, 1e-6, 0.0}) {
      HullState trial = s;
      if (!polish(p, n, prune, &trial)) continue;
      const double trial_gap = relative_gap(p, n, trial.v);
      if (trial_gap <= gap || trial_gap <= options.gap_tol) {
        s = std::move(trial);
        gap = trial_gap;
        sol.polished = true;
        break;
      }
    }
  }

  const double vv = s.v.squaredNorm();
  sol.w = 2.0 * s.v / vv;
  sol.b = -((p * sol.w).minCoeff() + (n * sol.w).maxCoeff()) / 2.0;
  sol.margin = 1.0 / sol.w.norm();
  sol.lambda = std::move(s.lambda);
  sol.gamma = std::move(s.gamma);
  sol.gap = gap;
  sol.iterations = it;
  return sol;
}

SvmSolution concept_svm(const Eigen::MatrixXd& rows,
                        const std::vector<ConceptTuple>& tuples, int i,
                        const SvmOptions& options) {
  if (static_cast<Eigen::Index>(tuples.size()) != rows.rows()) {
    throw InvalidArgument("concept_svm: one tuple per row required");
  }
  std::vector<Eigen::Index> pos, neg;
  for (std::size_t r = 0; r < tuples.size(); ++r) {
    (tuples[r].at(i) == 1 ? pos : neg).push_back(static_cast<Eigen::Index>(r));
  }
  Eigen::MatrixXd p(pos.size(), rows.cols()), n(neg.size(), rows.cols());
  for (std::size_t r = 0; r < pos.size(); ++r) p.row(r) = rows.row(pos[r]);
  for (std::size_t r = 0; r < neg.size(); ++r) n.row(r) = rows.row(neg[r]);
  return hard_margin_svm(p, n, options);
}

}  // namespace cglab
