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

#include "cglab/concept_space.h"

#include <random>
#include <set>

#include <gtest/gtest.h>

#include "cglab/error.h"

namespace cglab {
namespace {

TEST(ConceptSpaceTest, CountsAndParameters) {
  const ConceptSpace space({3, 4, 2});
  EXPECT_EQ(space.k(), 3);
  EXPECT_EQ(space.grid_size(), 24u);
  EXPECT_EQ(space.total_values(), 9);
  EXPECT_EQ(space.free_parameters(), 1 + 2 + 3 + 1);
  EXPECT_FALSE(space.is_binary());
  EXPECT_TRUE(ConceptSpace({2, 2}).is_binary());
}

TEST(ConceptSpaceTest, RejectsBadCardinalities) {
  EXPECT_THROW(ConceptSpace({}), InvalidArgument);
  EXPECT_THROW(ConceptSpace({1, 3}), InvalidArgument);
  EXPECT_THROW(ConceptSpace({65537}), InvalidArgument);
  EXPECT_NO_THROW(ConceptSpace({65536}));
}

TEST(ConceptSpaceTest, GridSizeOverflowIsReported) {
  EXPECT_THROW(ConceptSpace(std::vector<int>(5, 65536)), InvalidArgument);
  EXPECT_EQ(ConceptSpace(std::vector<int>(4, 65535)).k(), 4);
}

TEST(ConceptSpaceTest, LastConceptVariesFastest) {
  const ConceptSpace space({2, 3});
  const auto all = space.enumerate();
  ASSERT_EQ(all.size(), 6u);
  EXPECT_EQ(all[0], (ConceptTuple{0, 0}));
  EXPECT_EQ(all[1], (ConceptTuple{0, 1}));
  EXPECT_EQ(all[3], (ConceptTuple{1, 0}));
  EXPECT_EQ(space.index_of({1, 2}), 5u);
}

TEST(ConceptSpaceTest, IndexRoundTripProperty) {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<int> card(1 + rng() % 4);
    for (int& n : card) n = 2 + static_cast<int>(rng() % 5);
    const ConceptSpace space(card);
    const auto all = space.enumerate();
    ASSERT_EQ(all.size(), space.grid_size());
    for (std::uint64_t i = 0; i < all.size(); ++i) {
      EXPECT_EQ(space.index_of(all[i]), i);
      EXPECT_EQ(space.tuple_at(i), all[i]);
    }
  }
}

TEST(ConceptSpaceTest, ContainsChecksShapeAndRange) {
  const ConceptSpace space({2, 3});
  EXPECT_TRUE(space.contains({1, 2}));
  EXPECT_FALSE(space.contains({1, 3}));
  EXPECT_FALSE(space.contains({1}));
  EXPECT_FALSE(space.contains({-1, 0}));
  EXPECT_THROW(space.index_of({2, 0}), InvalidArgument);
  EXPECT_THROW(space.tuple_at(6), InvalidArgument);
}

TEST(SupportRuleTest, KindNamesRoundTrip) {
  for (auto kind : {SupportRule::Kind::kFull, SupportRule::Kind::kCrossAt,
                    SupportRule::Kind::kBinaryMajority, SupportRule::Kind::kFraction,
                    SupportRule::Kind::kFixedSize}) {
    EXPECT_EQ(parse_support_kind(to_string(kind)), kind);
  }
  EXPECT_THROW(parse_support_kind("nope"), InvalidArgument);
}

TEST(TrainingSupportTest, SortsAndRejectsDuplicates) {
  const ConceptSpace space({2, 2});
  const TrainingSupport s(space, {{1, 1}, {0, 0}}, SupportRule::Full());
  ASSERT_EQ(s.size(), 2u);
  EXPECT_THROW(TrainingSupport(space, {{1, 1}, {1, 1}}, SupportRule::Full()), InvalidArgument);
  EXPECT_EQ(s.tuples()[0], (ConceptTuple{0, 0}));
  EXPECT_TRUE(s.contains({1, 1}));
  EXPECT_FALSE(s.contains({0, 1}));
  EXPECT_THROW(TrainingSupport(space, {{2, 0}}, SupportRule::Full()), InvalidArgument);
}

TEST(TrainingSupportTest, MarginalCounts) {
  const ConceptSpace space({2, 3});
  const auto counts = full_support(space).marginal_counts();
  EXPECT_EQ(counts[0], (std::vector<std::uint64_t>{3, 3}));
  EXPECT_EQ(counts[1], (std::vector<std::uint64_t>{2, 2, 2}));
}

TEST(CrossDatasetTest, SizeAndNeighborhood) {
  const ConceptSpace space({3, 4, 2});
  const ConceptTuple center{1, 3, 0};
  const TrainingSupport cross = cross_dataset(space, center);
  EXPECT_EQ(cross.size(), static_cast<std::size_t>(space.free_parameters()));
  EXPECT_TRUE(cross.contains(center));
  for (const auto& t : cross.tuples()) EXPECT_LE(hamming_distance(t, center), 1);
  for (int i = 0; i < space.k(); ++i) EXPECT_TRUE(cross.has_counterfactual_pair(i));
}

TEST(BinaryMajorityTest, SizeAndCounterfactualPairsProperty) {
  for (int k = 1; k <= 6; ++k) {
    const ConceptSpace space(std::vector<int>(k, 2));
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      const TrainingSupport s = binary_majority_support(space, seed);
      EXPECT_EQ(s.size(), (std::size_t{1} << (k - 1)) + 1);
      for (int i = 0; i < k; ++i) EXPECT_TRUE(s.has_counterfactual_pair(i)) << "k=" << k;
    }
  }
  EXPECT_THROW(binary_majority_support(ConceptSpace({2, 3}), 0), InvalidArgument);
}

TEST(SampleSupportTest, DeterministicInSeed) {
  const ConceptSpace space({4, 5, 3});
  const auto a = sample_support(space, SupportRule::Fraction(0.25), 7);
  const auto b = sample_support(space, SupportRule::Fraction(0.25), 7);
  const auto c = sample_support(space, SupportRule::Fraction(0.25), 8);
  EXPECT_EQ(a.tuples(), b.tuples());
  EXPECT_NE(a.tuples(), c.tuples());
  EXPECT_EQ(a.size(), 15u);
}

TEST(SampleSupportTest, RuleDispatch) {
  const ConceptSpace space({3, 3});
  EXPECT_EQ(sample_support(space, SupportRule::Full(), 0).size(), 9u);
  EXPECT_EQ(sample_support(space, SupportRule::FixedSize(4), 0).size(), 4u);
  EXPECT_EQ(sample_support(space, SupportRule::CrossAt({0, 2}), 0).size(), 5u);
  EXPECT_THROW(sample_support(space, SupportRule::Fraction(0.05), 0), InvalidArgument);
  EXPECT_THROW(SupportRule::Fraction(1.5), InvalidArgument);
  EXPECT_THROW(sample_support(space, SupportRule::FixedSize(10), 0), InvalidArgument);
}

TEST(SampleSupportTest, ComplementPartitionsTheGrid) {
  const ConceptSpace space({3, 4});
  const auto s = sample_support(space, SupportRule::FixedSize(5), 3);
  const auto c = complement(s);
  EXPECT_EQ(s.size() + c.size(), space.grid_size());
  for (const auto& t : c.tuples()) EXPECT_FALSE(s.contains(t));
}

TEST(InterventionTest, ChangesOneConcept) {
  const ConceptSpace space({3, 3});
  const ConceptTuple t{0, 2};
  const ConceptTuple u = intervene(space, t, 0, 2);
  EXPECT_EQ(u, (ConceptTuple{2, 2}));
  EXPECT_EQ(hamming_distance(t, u), 1);
  EXPECT_THROW(intervene(space, t, 1, 3), InvalidArgument);
  EXPECT_THROW(intervene(space, t, 2, 0), InvalidArgument);
}

}  // namespace
}  // namespace cglab
