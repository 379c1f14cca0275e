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

// Independent reference computations used to check library results. None of
// these call into the code under test beyond plain data access.

#ifndef CGLAB_TESTS_SUPPORT_ORACLES_H_
#define CGLAB_TESTS_SUPPORT_ORACLES_H_

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include <Eigen/Dense>

namespace cglab::testing {

// Affine region count from the deletion-restriction recurrence
// R(m, d) = R(m - 1, d) + R(m - 1, d - 1), R(0, d) = R(m, 0) = 1.
inline std::uint64_t recurrence_regions_affine(int m, int d) {
  std::vector<std::vector<std::uint64_t>> r(m + 1, std::vector<std::uint64_t>(d + 1, 1));
  for (int i = 1; i <= m; ++i) {
    for (int j = 1; j <= d; ++j) r[i][j] = r[i - 1][j] + r[i - 1][j - 1];
  }
  return r[m][d];
}

// Central arrangements through the origin: C(m, d) = R_aff(m - 1, d - 1) * 2.
inline std::uint64_t recurrence_regions_central(int m, int d) {
  if (m == 0 || d == 0) return 1;
  return 2 * recurrence_regions_affine(m - 1, d - 1);
}

// Rank over Z/p of an integer-valued matrix by Gaussian elimination.
inline int modular_rank(const Eigen::MatrixXd& m, std::int64_t p) {
  std::vector<std::vector<std::int64_t>> a(m.rows(), std::vector<std::int64_t>(m.cols()));
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      const auto v = static_cast<std::int64_t>(std::llround(m(i, j)));
      a[i][j] = ((v % p) + p) % p;
    }
  }
  auto inv = [p](std::int64_t x) {
    std::int64_t r = 1;
    for (std::int64_t e = p - 2; e > 0; e >>= 1) {
      if (e & 1) r = r * x % p;
      x = x * x % p;
    }
    return r;
  };
  int rank = 0;
  const auto rows = static_cast<int>(a.size());
  for (Eigen::Index col = 0; col < m.cols() && rank < rows; ++col) {
    int pivot = -1;
    for (int i = rank; i < rows; ++i) {
      if (a[i][col] != 0) {
        pivot = i;
        break;
      }
    }
    if (pivot < 0) continue;
    std::swap(a[pivot], a[rank]);
    const std::int64_t s = inv(a[rank][col]);
    for (auto& v : a[rank]) v = v * s % p;
    for (int i = 0; i < rows; ++i) {
      if (i == rank || a[i][col] == 0) continue;
      const std::int64_t f = a[i][col];
      for (Eigen::Index j = 0; j < m.cols(); ++j) {
        a[i][j] = ((a[i][j] - f * a[rank][j]) % p + p) % p;
      }
    }
    ++rank;
  }
  return rank;
}

// Whitening from the eigendecomposition of the sample covariance. Columns of
// the result span the same space as an SVD-based whitening up to rotation.
// Eigenvalues carry squared rounding noise, so the cutoff never drops below
// 1e-12 of the largest; test data keeps its spectrum well clear of that.
struct EigenWhitening {
  Eigen::RowVectorXd mean;
  Eigen::MatrixXd map;  // d x r
};

inline EigenWhitening eigen_whitening(const Eigen::MatrixXd& x, double rel_tol) {
  EigenWhitening w;
  w.mean = x.colwise().mean();
  const Eigen::MatrixXd c = x.rowwise() - w.mean;
  const Eigen::MatrixXd cov = c.transpose() * c / static_cast<double>(x.rows() - 1);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(cov);
  const Eigen::VectorXd lambda = es.eigenvalues();
  const double cutoff = std::max(rel_tol * rel_tol, 1e-12) * lambda.maxCoeff();
  std::vector<int> keep;
  for (Eigen::Index j = 0; j < lambda.size(); ++j) {
    if (lambda(j) > cutoff) keep.push_back(static_cast<int>(j));
  }
  w.map.resize(x.cols(), static_cast<Eigen::Index>(keep.size()));
  for (std::size_t j = 0; j < keep.size(); ++j) {
    w.map.col(static_cast<Eigen::Index>(j)) = es.eigenvectors().col(keep[j]) / std::sqrt(lambda(keep[j]));
  }
  return w;
}

// Orthogonal projector onto the row space of w, from the eigenvectors of w^T w.
inline Eigen::MatrixXd eigen_projector(const Eigen::MatrixXd& w, double rel_tol) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(w.transpose() * w);
  const double cutoff = std::max(rel_tol * rel_tol, 1e-12) * es.eigenvalues().maxCoeff();
  Eigen::MatrixXd p = Eigen::MatrixXd::Zero(w.cols(), w.cols());
  for (Eigen::Index j = 0; j < es.eigenvalues().size(); ++j) {
    if (es.eigenvalues()(j) > cutoff) p += es.eigenvectors().col(j) * es.eigenvectors().col(j).transpose();
  }
  return p;
}

inline double r2_from(const Eigen::MatrixXd& x, const Eigen::MatrixXd& xhat) {
  const Eigen::RowVectorXd mean = x.colwise().mean();
  return 1.0 - (x - xhat).squaredNorm() / (x.rowwise() - mean).squaredNorm();
}

// R^2 with optional projection then optional whitening, all via eigensolvers.
inline double reference_r2(Eigen::MatrixXd x, Eigen::MatrixXd xhat, const Eigen::MatrixXd* probe_rows,
                           bool whiten) {
  if (probe_rows) {
    const Eigen::MatrixXd p = eigen_projector(*probe_rows, 1e-10);
    x = x * p;
    xhat = xhat * p;
  }
  if (whiten) {
    const EigenWhitening w = eigen_whitening(x, 1e-8);
    x = (x.rowwise() - w.mean) * w.map;
    xhat = (xhat.rowwise() - w.mean) * w.map;
  }
  return r2_from(x, xhat);
}

// Largest KKT violation of a hard-margin solution: primal feasibility,
// convex weights, w proportional to the hull difference, and complementary
// slackness on the support points.
inline double svm_kkt_violation(const Eigen::MatrixXd& pos, const Eigen::MatrixXd& neg,
                                const Eigen::VectorXd& w, double b, const Eigen::VectorXd& lambda,
                                const Eigen::VectorXd& gamma) {
  double worst = 0.0;
  for (Eigen::Index r = 0; r < pos.rows(); ++r) worst = std::max(worst, 1.0 - (pos.row(r).dot(w) + b));
  for (Eigen::Index r = 0; r < neg.rows(); ++r) worst = std::max(worst, 1.0 + (neg.row(r).dot(w) + b));
  worst = std::max(worst, std::abs(lambda.sum() - 1.0));
  worst = std::max(worst, std::abs(gamma.sum() - 1.0));
  worst = std::max(worst, -std::min(lambda.minCoeff(), gamma.minCoeff()));
  const Eigen::VectorXd v = pos.transpose() * lambda - neg.transpose() * gamma;
  worst = std::max(worst, (w - 2.0 * v / v.squaredNorm()).norm() / w.norm());
  for (Eigen::Index r = 0; r < pos.rows(); ++r) {
    worst = std::max(worst, lambda(r) * std::abs(pos.row(r).dot(w) + b - 1.0));
  }
  for (Eigen::Index r = 0; r < neg.rows(); ++r) {
    worst = std::max(worst, gamma(r) * std::abs(neg.row(r).dot(w) + b + 1.0));
  }
  return worst;
}

}  // namespace cglab::testing

#endif  // CGLAB_TESTS_SUPPORT_ORACLES_H_
