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

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>

#include "cglab/error.h"

namespace cglab {

ConceptSpace::ConceptSpace(std::vector<int> cardinalities)
    : cardinalities_(std::move(cardinalities)) {
  if (cardinalities_.empty()) {
    throw InvalidArgument("concept space needs at least one concept");
  }
  for (int n : cardinalities_) {
    if (n < 2 || n > 65536) {
      throw InvalidArgument("cardinality " + std::to_string(n) +
                            " outside [2, 65536]");
    }
  }
  grid_size();
}

std::uint64_t ConceptSpace::grid_size() const {
  std::uint64_t size = 1;
  for (int n : cardinalities_) {
    if (__builtin_mul_overflow(size, static_cast<std::uint64_t>(n), &size)) {
      throw InvalidArgument("grid size overflows 64 bits for " + to_string());
    }
  }
  return size;
}

int ConceptSpace::total_values() const {
  return std::accumulate(cardinalities_.begin(), cardinalities_.end(), 0);
}

int ConceptSpace::free_parameters() const { return 1 + total_values() - k(); }

bool ConceptSpace::contains(const ConceptTuple& c) const {
  if (c.size() != cardinalities_.size()) return false;
  for (std::size_t i = 0; i < c.size(); ++i) {
    if (c[i] < 0 || c[i] >= cardinalities_[i]) return false;
  }
  return true;
}

std::uint64_t ConceptSpace::index_of(const ConceptTuple& c) const {
  if (!contains(c)) throw InvalidArgument("tuple not in " + to_string());
  std::uint64_t index = 0;
  for (std::size_t i = 0; i < c.size(); ++i) {
    index = index * static_cast<std::uint64_t>(cardinalities_[i]) +
            static_cast<std::uint64_t>(c[i]);
  }
  return index;
}

ConceptTuple ConceptSpace::tuple_at(std::uint64_t index) const {
  if (index >= grid_size()) {
    throw InvalidArgument("tuple index " + std::to_string(index) +
                          " out of range");
  }
  ConceptTuple c(cardinalities_.size());
  for (int i = k() - 1; i >= 0; --i) {
    const auto n = static_cast<std::uint64_t>(cardinalities_[i]);
    c[i] = static_cast<int>(index % n);
    index /= n;
  }
  return c;
}

std::vector<ConceptTuple> ConceptSpace::enumerate(std::uint64_t max_size) const {
  const std::uint64_t size = grid_size();
  if (size > max_size) {
    throw InvalidArgument("grid of size " + std::to_string(size) +
                          " is too large to enumerate");
  }
  std::vector<ConceptTuple> out;
  out.reserve(size);
  ConceptTuple c(cardinalities_.size(), 0);
  for (std::uint64_t idx = 0; idx < size; ++idx) {
    out.push_back(c);
    for (int i = k() - 1; i >= 0; --i) {
      if (++c[i] < cardinalities_[i]) break;
      c[i] = 0;
    }
  }
  return out;
}

bool ConceptSpace::is_binary() const {
  return std::all_of(cardinalities_.begin(), cardinalities_.end(),
                     [](int n) { return n == 2; });
}

std::string ConceptSpace::to_string() const {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < cardinalities_.size(); ++i) {
    if (i) os << ',';
    os << cardinalities_[i];
  }
  os << ']';
  return os.str();
}

SupportRule SupportRule::CrossAt(ConceptTuple c) {
  SupportRule r;
  r.kind = Kind::kCrossAt;
  r.center = std::move(c);
  return r;
}

SupportRule SupportRule::BinaryMajority() {
  SupportRule r;
  r.kind = Kind::kBinaryMajority;
  return r;
}

SupportRule SupportRule::Fraction(double f) {
  SupportRule r;
  if (!(f > 0.0 && f <= 1.0)) throw InvalidArgument("support fraction must lie in (0, 1]");
  r.kind = Kind::kFraction;
  r.fraction = f;
  return r;
}

SupportRule SupportRule::FixedSize(std::uint64_t n) {
  SupportRule r;
  r.kind = Kind::kFixedSize;
  r.count = n;
  return r;
}

const char* to_string(SupportRule::Kind kind) {
  switch (kind) {
    case SupportRule::Kind::kFull:
      return "full";
    case SupportRule::Kind::kCrossAt:
      return "cross";
    case SupportRule::Kind::kBinaryMajority:
      return "majority";
    case SupportRule::Kind::kFraction:
      return "fraction";
    case SupportRule::Kind::kFixedSize:
      return "fixed";
  }
  return "unknown";
}

SupportRule::Kind parse_support_kind(const std::string& name) {
  for (auto kind : {SupportRule::Kind::kFull, SupportRule::Kind::kCrossAt,
                    SupportRule::Kind::kBinaryMajority,
                    SupportRule::Kind::kFraction,
                    SupportRule::Kind::kFixedSize}) {
    if (name == to_string(kind)) return kind;
  }
  throw InvalidArgument("unknown support rule '" + name + "'");
}

TrainingSupport::TrainingSupport(const ConceptSpace& space,
                                 std::vector<ConceptTuple> tuples,
                                 SupportRule rule)
    : space_(space), rule_(std::move(rule)) {
  std::vector<std::uint64_t> indices;
  indices.reserve(tuples.size());
  for (const auto& t : tuples) indices.push_back(space_.index_of(t));
  std::sort(indices.begin(), indices.end());
  if (std::adjacent_find(indices.begin(), indices.end()) != indices.end()) {
    throw InvalidArgument("training support contains duplicate tuples");
  }
  tuples_.reserve(indices.size());
  for (auto idx : indices) {
    tuples_.push_back(space_.tuple_at(idx));
    index_.insert(idx);
  }
}

bool TrainingSupport::contains(const ConceptTuple& c) const {
  return space_.contains(c) && index_.count(space_.index_of(c)) > 0;
}

bool TrainingSupport::contains_index(std::uint64_t index) const {
  return index_.count(index) > 0;
}

std::vector<std::vector<std::uint64_t>> TrainingSupport::marginal_counts()
    const {
  std::vector<std::vector<std::uint64_t>> counts(space_.k());
  for (int i = 0; i < space_.k(); ++i) counts[i].assign(space_.cardinality(i), 0);
  for (const auto& t : tuples_) {
    for (int i = 0; i < space_.k(); ++i) ++counts[i][t[i]];
  }
  return counts;
}

bool TrainingSupport::has_counterfactual_pair(int i) const {
  if (i < 0 || i >= space_.k()) throw InvalidArgument("concept index out of range");
  for (const auto& t : tuples_) {
    for (int v = t[i] + 1; v < space_.cardinality(i); ++v) {
      ConceptTuple other = t;
      other[i] = v;
      if (contains(other)) return true;
    }
  }
  return false;
}

TrainingSupport cross_dataset(const ConceptSpace& space,
                              const ConceptTuple& center) {
  if (!space.contains(center)) throw InvalidArgument("invalid cross-dataset center");
  std::vector<ConceptTuple> tuples{center};
  for (int i = 0; i < space.k(); ++i) {
    for (int v = 0; v < space.cardinality(i); ++v) {
      if (v == center[i]) continue;
      ConceptTuple t = center;
      t[i] = v;
      tuples.push_back(std::move(t));
    }
  }
  return TrainingSupport(space, std::move(tuples), SupportRule::CrossAt(center));
}

namespace {

// Uniform sample of count distinct indices from [0, size), sorted.
std::vector<std::uint64_t> sample_indices(std::uint64_t size,
                                          std::uint64_t count,
                                          std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<std::uint64_t> out;
  if (count * 2 >= size) {
    std::vector<std::uint64_t> all(size);
    std::iota(all.begin(), all.end(), 0);
    std::shuffle(all.begin(), all.end(), rng);
    out.assign(all.begin(), all.begin() + static_cast<std::ptrdiff_t>(count));
  } else {
    // Floyd's algorithm.
    std::unordered_set<std::uint64_t> chosen;
    for (std::uint64_t j = size - count; j < size; ++j) {
      std::uniform_int_distribution<std::uint64_t> dist(0, j);
      std::uint64_t t = dist(rng);
      if (!chosen.insert(t).second) chosen.insert(j);
    }
    out.assign(chosen.begin(), chosen.end());
  }
  std::sort(out.begin(), out.end());
  return out;
}

TrainingSupport sampled(const ConceptSpace& space, std::uint64_t count,
                        std::uint64_t seed, SupportRule rule) {
  const std::uint64_t size = space.grid_size();
  if (count == 0) throw InvalidArgument("sampled support would be empty");
  if (count > size) {
    throw InvalidArgument("requested " + std::to_string(count) +
                          " tuples from a grid of " + std::to_string(size));
  }
  std::vector<ConceptTuple> tuples;
  tuples.reserve(count);
  for (auto idx : sample_indices(size, count, seed)) {
    tuples.push_back(space.tuple_at(idx));
  }
  return TrainingSupport(space, std::move(tuples), std::move(rule));
}

}  // namespace

TrainingSupport binary_majority_support(const ConceptSpace& space,
                                        std::uint64_t seed) {
  if (!space.is_binary()) {
    throw InvalidArgument("majority support requires a binary space, got " +
                          space.to_string());
  }
  if (space.k() > 62) throw InvalidArgument("too many binary concepts");
  const std::uint64_t count = (std::uint64_t{1} << (space.k() - 1)) + 1;
  return sampled(space, count, seed, SupportRule::BinaryMajority());
}

TrainingSupport full_support(const ConceptSpace& space) {
  return TrainingSupport(space, space.enumerate(), SupportRule::Full());
}

TrainingSupport sample_support(const ConceptSpace& space,
                               const SupportRule& rule, std::uint64_t seed) {
  switch (rule.kind) {
    case SupportRule::Kind::kFull:
      return full_support(space);
    case SupportRule::Kind::kCrossAt:
      return cross_dataset(space, rule.center);
    case SupportRule::Kind::kBinaryMajority:
      return binary_majority_support(space, seed);
    case SupportRule::Kind::kFraction: {
      if (!(rule.fraction > 0.0 && rule.fraction <= 1.0)) {
        throw InvalidArgument("support fraction must lie in (0, 1]");
      }
      const auto count = static_cast<std::uint64_t>(
          std::floor(rule.fraction * static_cast<double>(space.grid_size())));
      return sampled(space, count, seed, rule);
    }
    case SupportRule::Kind::kFixedSize:
      return sampled(space, rule.count, seed, rule);
  }
  throw InvalidArgument("unknown support rule");
}

TrainingSupport complement(const TrainingSupport& support) {
  const ConceptSpace& space = support.space();
  std::vector<ConceptTuple> rest;
  const std::uint64_t size = space.grid_size();
  for (std::uint64_t idx = 0; idx < size; ++idx) {
    if (!support.contains_index(idx)) rest.push_back(space.tuple_at(idx));
  }
  SupportRule rule;
  rule.kind = SupportRule::Kind::kFixedSize;
  rule.count = rest.size();
  return TrainingSupport(space, std::move(rest), rule);
}

ConceptTuple intervene(const ConceptSpace& space, const ConceptTuple& t, int i,
                       int j) {
  if (!space.contains(t)) throw InvalidArgument("invalid tuple");
  if (i < 0 || i >= space.k()) throw InvalidArgument("concept index out of range");
  if (j < 0 || j >= space.cardinality(i)) {
    throw InvalidArgument("value out of range for concept " + std::to_string(i));
  }
  ConceptTuple out = t;
  out[i] = j;
  return out;
}

int hamming_distance(const ConceptTuple& a, const ConceptTuple& b) {
  if (a.size() != b.size()) throw InvalidArgument("tuple lengths differ");
  int d = 0;
  for (std::size_t i = 0; i < a.size(); ++i) d += a[i] != b[i];
  return d;
}

}  // namespace cglab
