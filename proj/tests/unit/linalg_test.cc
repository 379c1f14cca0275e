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

#include <random>
#include <set>

#include <gtest/gtest.h>

#include "oracles.h"

namespace cglab {
namespace {

TEST(LinalgTest, NumericalRankMatchesModularRank) {
  std::mt19937_64 rng(1);
  std::uniform_int_distribution<int> entry(-3, 3);
  for (int trial = 0; trial < 20; ++trial) {
    const int r = 1 + trial % 4;
    Eigen::MatrixXd a(6, r), b(r, 7);
    for (Eigen::Index i = 0; i < a.size(); ++i) a.data()[i] = entry(rng);
    for (Eigen::Index i = 0; i < b.size(); ++i) b.data()[i] = entry(rng);
    const Eigen::MatrixXd m = a * b;
    EXPECT_EQ(numerical_rank(m, 1e-9), testing::modular_rank(m, 1'000'000'007LL));
  }
}

TEST(LinalgTest, RowSpaceBasisIsOrthonormal) {
  std::mt19937_64 rng(2);
  const Eigen::MatrixXd m = gaussian_matrix(5, 2, rng) * gaussian_matrix(2, 6, rng);
  const Eigen::MatrixXd b = row_space_basis(m, 1e-10);
  ASSERT_EQ(b.cols(), 2);
  EXPECT_LT((b.transpose() * b - Eigen::MatrixXd::Identity(2, 2)).norm(), 1e-12);
  EXPECT_LT((m - m * b * b.transpose()).norm(), 1e-10 * m.norm());
}

TEST(LinalgTest, PinvSolveGivesMinimumNormSolution) {
  std::mt19937_64 rng(3);
  const Eigen::MatrixXd a = gaussian_matrix(4, 2, rng) * gaussian_matrix(2, 5, rng);
  const Eigen::MatrixXd b = gaussian_matrix(4, 1, rng);
  int rank = 0;
  const Eigen::MatrixXd x = pinv_solve(a, b, 1e-10, &rank);
  EXPECT_EQ(rank, 2);
  // Normal equations hold and x lies in the row space of a.
  EXPECT_LT((a.transpose() * (a * x - b)).norm(), 1e-9);
  const Eigen::MatrixXd p = testing::eigen_projector(a, 1e-10);
  EXPECT_LT((p * x - x).norm(), 1e-9);
}

TEST(LinalgTest, RandomOrthonormalColumns) {
  std::mt19937_64 rng(4);
  const Eigen::MatrixXd q = random_orthonormal(7, 3, rng);
  EXPECT_LT((q.transpose() * q - Eigen::MatrixXd::Identity(3, 3)).norm(), 1e-12);
}

TEST(LinalgTest, GaussianMatrixIsSeedDeterministic) {
  std::mt19937_64 a(5), b(5);
  EXPECT_EQ(gaussian_matrix(3, 4, a), gaussian_matrix(3, 4, b));
}

TEST(LinalgTest, CosineHandlesZero) {
  Eigen::VectorXd a(2), z = Eigen::VectorXd::Zero(2);
  a << 1.0, 1.0;
  EXPECT_DOUBLE_EQ(cosine(a, z), 0.0);
  EXPECT_NEAR(cosine(a, 2.0 * a), 1.0, 1e-15);
  EXPECT_NEAR(cosine(a, -a), -1.0, 1e-15);
}

TEST(LinalgTest, MixSeedSeparatesStreams) {
  std::set<std::uint64_t> seen;
  for (std::uint64_t s = 0; s < 100; ++s) seen.insert(mix_seed(42, s));
  EXPECT_EQ(seen.size(), 100u);
  EXPECT_EQ(mix_seed(1, 2), mix_seed(1, 2));
}

}  // namespace
}  // namespace cglab
