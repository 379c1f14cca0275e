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

#ifndef CGLAB_CONCEPT_SPACE_H_
#define CGLAB_CONCEPT_SPACE_H_

#include <cstdint>
#include <string>
#include <unordered_set>
#include <vector>

namespace cglab {

// A concept tuple holds one 0-based value per concept.
using ConceptTuple = std::vector<int>;

// Product grid of k concepts with cardinalities n_1..n_k. Tuples are ordered
// mixed-radix with the last concept varying fastest.
class ConceptSpace {
 public:
  // Labels are stored as u16, so every cardinality must lie in [2, 65536].
  explicit ConceptSpace(std::vector<int> cardinalities);

  int k() const { return static_cast<int>(cardinalities_.size()); }
  int cardinality(int i) const { return cardinalities_.at(i); }
  const std::vector<int>& cardinalities() const { return cardinalities_; }

  // Throws InvalidArgument if the grid does not fit in 64 bits.
  std::uint64_t grid_size() const;
  // Sum of cardinalities, i.e. the width of the one-hot design.
  int total_values() const;
  // 1 + sum(n_i - 1).
  int free_parameters() const;

  bool contains(const ConceptTuple& c) const;
  std::uint64_t index_of(const ConceptTuple& c) const;
  ConceptTuple tuple_at(std::uint64_t index) const;

  // All tuples in canonical order. Refuses grids above max_size.
  std::vector<ConceptTuple> enumerate(std::uint64_t max_size = 50'000'000) const;

  bool is_binary() const;
  std::string to_string() const;

  bool operator==(const ConceptSpace& other) const = default;

 private:
  std::vector<int> cardinalities_;
};

struct SupportRule {
  enum class Kind { kFull, kCrossAt, kBinaryMajority, kFraction, kFixedSize };

  Kind kind = Kind::kFull;
  ConceptTuple center;       // kCrossAt
  double fraction = 1.0;     // kFraction
  std::uint64_t count = 0;   // kFixedSize

  static SupportRule Full() { return {}; }
  static SupportRule CrossAt(ConceptTuple c);
  static SupportRule BinaryMajority();
  static SupportRule Fraction(double f);
  static SupportRule FixedSize(std::uint64_t n);
};

const char* to_string(SupportRule::Kind kind);
SupportRule::Kind parse_support_kind(const std::string& name);

// Set of tuples used for training, kept in canonical order. Duplicates are
// rejected.
class TrainingSupport {
 public:
  TrainingSupport(const ConceptSpace& space, std::vector<ConceptTuple> tuples,
                  SupportRule rule);

  const ConceptSpace& space() const { return space_; }
  const std::vector<ConceptTuple>& tuples() const { return tuples_; }
  const SupportRule& rule() const { return rule_; }
  std::size_t size() const { return tuples_.size(); }
  bool contains(const ConceptTuple& c) const;
  bool contains_index(std::uint64_t index) const;

  // counts[i][v] = number of tuples with concept i at value v.
  std::vector<std::vector<std::uint64_t>> marginal_counts() const;

  // True if some pair of tuples differs exactly in concept i.
  bool has_counterfactual_pair(int i) const;

 private:
  ConceptSpace space_;
  std::vector<ConceptTuple> tuples_;
  std::unordered_set<std::uint64_t> index_;
  SupportRule rule_;
};

// The center plus every tuple differing from it in exactly one concept.
TrainingSupport cross_dataset(const ConceptSpace& space,
                              const ConceptTuple& center);

// Binary grids only: 2^(k-1) + 1 tuples drawn uniformly without replacement.
// Any such set holds a counterfactual pair for every concept (pigeonhole).
TrainingSupport binary_majority_support(const ConceptSpace& space,
                                        std::uint64_t seed);

TrainingSupport full_support(const ConceptSpace& space);

// Dispatches on rule.kind. Random rules sample without replacement and are
// deterministic in seed.
TrainingSupport sample_support(const ConceptSpace& space,
                               const SupportRule& rule, std::uint64_t seed);

// Tuples of the grid not in the support, in canonical order.
TrainingSupport complement(const TrainingSupport& support);

// Copy of t with concept i set to value j.
ConceptTuple intervene(const ConceptSpace& space, const ConceptTuple& t, int i,
                       int j);

int hamming_distance(const ConceptTuple& a, const ConceptTuple& b);

}  // namespace cglab

#endif  // CGLAB_CONCEPT_SPACE_H_
