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

#include <random>

#include <gtest/gtest.h>

#include "cglab/error.h"
#include "cglab/synthetic_lab.h"
#include "cglab/theory_oracles.h"
#include "oracles.h"

namespace cglab {
namespace {

struct NoisyFixture {
  EmbeddingSet set;
  FactorSet fit;
};

NoisyFixture noisy(const ConceptSpace& space, int d, double noise, std::uint64_t seed) {
  const FactorizedData clean = generate_factorized(space, d, false, 1.0, seed);
  std::mt19937_64 rng(seed + 17);
  const Eigen::MatrixXd x = clean.set.data_double() + noise * gaussian_matrix(static_cast<int>(clean.set.rows()), d, rng);
  EmbeddingSet set(space, x.cast<float>(), clean.set.labels());
  FactorSet fit = recover_by_least_squares(set);
  return {std::move(set), std::move(fit)};
}

TEST(R2Test, MatchesEigenReferenceProperty) {
  for (std::uint64_t seed = 0; seed < 8; ++seed) {
    const NoisyFixture f = noisy(ConceptSpace({3, 4}), 6, 0.3, seed);
    const Eigen::MatrixXd x = f.set.data_double();
    const Eigen::MatrixXd xhat = f.fit.reconstruct_rows(f.set.labels());
    std::mt19937_64 rng(seed);
    ProbeBank probes = ProbeBank::Init(f.set.space(), 6, Geometry::kEuclidean);
    probes.weights[0] = gaussian_matrix(3, 6, rng);
    probes.weights[1] = gaussian_matrix(4, 6, rng) * 0.0;
    probes.weights[1].row(0) = probes.weights[0].row(0) + probes.weights[0].row(1);
    const Eigen::MatrixXd w = probes.stacked_weights();

    R2Options plain;
    plain.whiten = false;
    EXPECT_NEAR(projected_whitened_r2(f.set, f.fit, nullptr, plain).r2,
                testing::reference_r2(x, xhat, nullptr, false), 1e-9);
    EXPECT_NEAR(projected_whitened_r2(f.set, f.fit).r2, testing::reference_r2(x, xhat, nullptr, true), 1e-9);
    const R2Result both = projected_whitened_r2(f.set, f.fit, &probes);
    EXPECT_NEAR(both.r2, testing::reference_r2(x, xhat, &w, true), 1e-9);
    EXPECT_EQ(both.projected_rank, 3);
    EXPECT_EQ(both.whitened_rank, 3);
    EXPECT_EQ(both.pipeline, (std::vector<std::string>{"project", "whiten"}));
    EXPECT_NEAR(projected_whitened_r2(f.set, f.fit, &probes, plain).r2,
                testing::reference_r2(x, xhat, &w, false), 1e-9);
  }
}

TEST(R2Test, ExactlyAdditiveDataScoresOne) {
  const FactorizedData data = generate_factorized(ConceptSpace({2, 3, 2}), 5, false, 1.0, 3);
  const FactorSet fit = recover_by_least_squares(data.set);
  R2Options opts;
  for (bool whiten : {false, true}) {
    opts.whiten = whiten;
    EXPECT_NEAR(projected_whitened_r2(data.set, fit, nullptr, opts).r2, 1.0, 1e-10);
  }
}

TEST(R2Test, WhitenThenProjectUsesTransformedProbes) {
  const NoisyFixture f = noisy(ConceptSpace({3, 3}), 5, 0.2, 4);
  std::mt19937_64 rng(4);
  ProbeBank probes = ProbeBank::Init(f.set.space(), 5, Geometry::kEuclidean);
  probes.weights[0] = gaussian_matrix(3, 5, rng);
  R2Options opts;
  opts.order = WhitenOrder::kWhitenThenProject;
  const R2Result r = projected_whitened_r2(f.set, f.fit, &probes, opts);
  EXPECT_EQ(r.pipeline, (std::vector<std::string>{"whiten", "project"}));
  EXPECT_EQ(r.projected_rank, 3);

  // Reference: a probe functional on raw x is a linear functional on the
  // whitened coordinates y, recovered by least squares.
  const Eigen::MatrixXd x = f.set.data_double();
  const Eigen::MatrixXd xhat = f.fit.reconstruct_rows(f.set.labels());
  const testing::EigenWhitening w = testing::eigen_whitening(x, 1e-8);
  const Eigen::MatrixXd y = (x.rowwise() - w.mean) * w.map;
  const Eigen::MatrixXd yhat = (xhat.rowwise() - w.mean) * w.map;
  const Eigen::MatrixXd scores = (x.rowwise() - w.mean) * probes.stacked_weights().transpose();
  const Eigen::MatrixXd in_y = y.colPivHouseholderQr().solve(scores).transpose();
  const Eigen::MatrixXd p = testing::eigen_projector(in_y, 1e-10);
  EXPECT_NEAR(r.r2, testing::r2_from(y * p, yhat * p), 1e-8);
}

TEST(R2Test, RejectsMismatchedInputs) {
  const NoisyFixture f = noisy(ConceptSpace({2, 2}), 3, 0.1, 1);
  EXPECT_THROW(projected_whitened_r2(f.set, FactorSet::Zero(f.set.space(), 4)), InvalidArgument);
  EXPECT_THROW(projected_whitened_r2(f.set, FactorSet::Zero(ConceptSpace({2, 3}), 3)), InvalidArgument);
  const ProbeBank wrong = ProbeBank::Init(f.set.space(), 4, Geometry::kEuclidean);
  EXPECT_THROW(projected_whitened_r2(f.set, f.fit, &wrong), InvalidArgument);
  const EmbeddingSet flat(f.set.space(), RowMatrixXf::Ones(4, 3), f.set.labels());
  R2Options plain;
  plain.whiten = false;
  EXPECT_THROW(projected_whitened_r2(flat, f.fit, nullptr, plain), NumericalError);
}

double naive_mean_abs_cos(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, bool same) {
  const Eigen::MatrixXd ca = a.rowwise() - a.colwise().mean();
  const Eigen::MatrixXd cb = b.rowwise() - b.colwise().mean();
  double sum = 0.0;
  int count = 0;
  for (Eigen::Index i = 0; i < ca.rows(); ++i) {
    for (Eigen::Index j = 0; j < cb.rows(); ++j) {
      if (same && i == j) continue;
      sum += std::abs(ca.row(i).dot(cb.row(j))) / (ca.row(i).norm() * cb.row(j).norm());
      ++count;
    }
  }
  return sum / count;
}

TEST(OrthogonalityTest, MatchesNaiveMeansProperty) {
  std::mt19937_64 rng(8);
  for (int trial = 0; trial < 10; ++trial) {
    const ConceptSpace space({2 + trial % 3, 3});
    std::vector<Eigen::MatrixXd> blocks{gaussian_matrix(space.cardinality(0), 4, rng),
                                        gaussian_matrix(3, 4, rng)};
    const FactorSet f(space, Eigen::VectorXd::Zero(4), blocks);
    const OrthReport r = orthogonality(f);
    for (int i = 0; i < 2; ++i) {
      EXPECT_NEAR(r.within[i], naive_mean_abs_cos(blocks[i], blocks[i], true), 1e-12);
      EXPECT_DOUBLE_EQ(r.across(i, i), r.within[i]);
    }
    EXPECT_NEAR(r.across(0, 1), naive_mean_abs_cos(blocks[0], blocks[1], false), 1e-12);
    EXPECT_DOUBLE_EQ(r.across(0, 1), r.across(1, 0));
    EXPECT_EQ(r.excluded_directions, 0);
  }
}

TEST(OrthogonalityTest, OrthogonalGeneratorHasZeroCrossCosine) {
  const FactorizedData data = generate_factorized(ConceptSpace({3, 4, 2}), 9, true, 1.0, 2);
  const OrthReport r = orthogonality(data.truth);
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) {
      if (i != j) EXPECT_LT(r.across(i, j), 1e-12);
    }
  }
}

TEST(OrthogonalityTest, ProjectorAndZeroDirections) {
  const ConceptSpace space({2, 2});
  Eigen::MatrixXd u0(2, 2), u1(2, 2);
  u0 << 1, 1, -1, -1;
  u1 << 1, -1, -1, 1;
  const FactorSet f(space, Eigen::VectorXd::Zero(2), {u0, u1});
  EXPECT_NEAR(orthogonality(f).across(0, 1), 0.0, 1e-15);
  SpanProjector p;
  p.basis = Eigen::MatrixXd::Identity(2, 1);
  const OrthReport projected = orthogonality(f, &p);
  EXPECT_NEAR(projected.across(0, 1), 1.0, 1e-15);

  Eigen::MatrixXd v(3, 2);
  v << 1, 0, 1, 0, -2, 0;  // centered rows: 1/3,1/3,-2/3 times e_0
  const FactorSet g(ConceptSpace({3, 2}), Eigen::VectorXd::Zero(2), {v, u1});
  EXPECT_NEAR(orthogonality(g).within[0], 1.0, 1e-15);
  const FactorSet zero(space, Eigen::VectorXd::Zero(2), {Eigen::MatrixXd::Ones(2, 2), u1});
  EXPECT_THROW(orthogonality(zero), NumericalError);
}

TEST(EffectiveRankTest, MatchesEigenvaluesProperty) {
  std::mt19937_64 rng(12);
  for (int trial = 0; trial < 10; ++trial) {
    const int n = 3 + trial % 4;
    Eigen::MatrixXd block = gaussian_matrix(n, 6, rng);
    block.col(0) *= 10.0;
    const EffectiveRank r = effective_rank(block, 0.9);
    const Eigen::MatrixXd c = block.rowwise() - block.colwise().mean();
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(c.transpose() * c);
    Eigen::VectorXd lambda = es.eigenvalues().reverse().cwiseMax(0.0);
    double acc = 0.0;
    int expect = 0;
    for (Eigen::Index j = 0; j < lambda.size(); ++j) {
      acc += lambda(j);
      if (expect == 0 && acc / lambda.sum() >= 0.9) expect = static_cast<int>(j) + 1;
    }
    EXPECT_EQ(r.rank, expect);
    EXPECT_NEAR(r.cumulative.back(), 1.0, 1e-12);
    EXPECT_LE(r.rank, n - 1);
  }
}

TEST(EffectiveRankTest, ThresholdEdges) {
  Eigen::MatrixXd block(3, 3);
  block << 1, 0, 0, 0, 1, 0, 0, 0, 1;
  EXPECT_EQ(effective_rank(block, 1.0).rank, 2);
  EXPECT_EQ(effective_rank(block, 0.5).rank, 1);
  EXPECT_EQ(effective_rank(Eigen::MatrixXd::Ones(3, 3)).rank, 0);
  EXPECT_THROW(effective_rank(block, 0.0), InvalidArgument);
  EXPECT_THROW(effective_rank(block, 1.5), InvalidArgument);
  EXPECT_THROW(effective_rank(Eigen::MatrixXd::Ones(1, 3)), InvalidArgument);
  const FactorizedData data = generate_factorized(ConceptSpace({4, 2}), 6, true, 1.0, 1);
  EXPECT_THROW(effective_rank(data.truth, 2), InvalidArgument);
  EXPECT_EQ(effective_rank(data.truth, 1, 1.0).rank, 1);
}

TEST(CompositionalAccuracyTest, HeldOutRowsOnly) {
  Construction c = min_dim_construction(2, 3);
  const TrainingSupport train = cross_dataset(c.set.space(), {0, 0});
  const TrainingSupport held = complement(train);
  AccuracyReport acc = compositional_accuracy(c.probes, c.set, held);
  EXPECT_EQ(acc.rows, static_cast<Eigen::Index>(held.size()));
  EXPECT_EQ(acc.min, 1.0);

  // Swapping two probes of concept 1 breaks exactly the rows with c_1 in {1, 2}.
  c.probes.weights[1].row(1).swap(c.probes.weights[1].row(2));
  c.probes.biases[1].row(1).swap(c.probes.biases[1].row(2));
  acc = compositional_accuracy(c.probes, c.set, held);
  EXPECT_DOUBLE_EQ(acc.per_concept[0], 1.0);
  EXPECT_DOUBLE_EQ(acc.per_concept[1], 0.0);
  acc = compositional_accuracy(c.probes, c.set, train);
  EXPECT_DOUBLE_EQ(acc.per_concept[1], 0.6);

  const TrainingSupport none(c.set.space(), {}, train.rule());
  EXPECT_THROW(compositional_accuracy(c.probes, c.set, none), InvalidArgument);
}

}  // namespace
}  // namespace cglab
