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
#include "cglab/linalg.h"

#include <algorithm>

#include "cglab/error.h"

namespace cglab {

namespace {

int count_above(const Eigen::VectorXd& s, double rel_tol) {
  if (s.size() == 0) return 0;
  const double cutoff = rel_tol * s.maxCoeff();
  int r = 0;
  for (Eigen::Index i = 0; i < s.size(); ++i) r += s(i) > cutoff;
  return r;
}

}  // namespace

int numerical_rank(const Eigen::MatrixXd& m, double rel_tol) {
  if (m.size() == 0) return 0;
  Eigen::BDCSVD<Eigen::MatrixXd> svd(m);
  const Eigen::VectorXd s = svd.singularValues();
  if (s.maxCoeff() == 0.0) return 0;
  return count_above(s, rel_tol);
}

Eigen::MatrixXd row_space_basis(const Eigen::MatrixXd& m, double rel_tol) {
  Eigen::BDCSVD<Eigen::MatrixXd> svd(m, Eigen::ComputeThinV);
  const Eigen::VectorXd s = svd.singularValues();
  if (s.size() == 0 || s.maxCoeff() == 0.0) return Eigen::MatrixXd(m.cols(), 0);
  const int r = count_above(s, rel_tol);
  return svd.matrixV().leftCols(r);
}

Eigen::MatrixXd pinv_solve(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b,
                           double rel_tol, int* rank) {
  if (a.rows() != b.rows()) throw InvalidArgument("pinv_solve: row mismatch");
  Eigen::BDCSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Eigen::VectorXd s = svd.singularValues();
  const double cutoff = s.size() ? rel_tol * s.maxCoeff() : 0.0;
  Eigen::VectorXd inv = Eigen::VectorXd::Zero(s.size());
  int r = 0;
  for (Eigen::Index i = 0; i < s.size(); ++i) {
    if (s(i) > cutoff && s(i) > 0.0) {
      inv(i) = 1.0 / s(i);
      ++r;
    }
  }
  if (rank) *rank = r;
  return svd.matrixV() * (inv.asDiagonal() * (svd.matrixU().transpose() * b));
}

Eigen::MatrixXd gaussian_matrix(int rows, int cols, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::MatrixXd m(rows, cols);
  // Fill row by row so the stream order does not depend on storage order.
  for (int i = 0; i < rows; ++i) {
    for (int j = 0; j < cols; ++j) m(i, j) = normal(rng);
  }
  return m;
}

Eigen::MatrixXd random_orthonormal(int d, int cols, std::mt19937_64& rng) {
  if (cols > d) throw InvalidArgument("cannot fit that many orthonormal columns");
  const Eigen::MatrixXd g = gaussian_matrix(d, cols, rng);
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(g);
  Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(d, cols);
  // Sign fix makes the distribution Haar.
  const Eigen::MatrixXd r = qr.matrixQR().topRows(cols).triangularView<Eigen::Upper>();
  for (int j = 0; j < cols; ++j) {
    if (r(j, j) < 0) q.col(j) = -q.col(j);
  }
  return q;
}

double cosine(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  const double na = a.norm();
  const double nb = b.norm();
  if (na == 0.0 || nb == 0.0) return 0.0;
  return a.dot(b) / (na * nb);
}

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

}  // namespace cglab
