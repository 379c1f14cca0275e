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
#include "cglab/theory_oracles.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <unordered_set>

#include "cglab/error.h"
#include "cglab/linalg.h"

namespace cglab {

namespace {

double sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

// Rows of a binary one-row-per-tuple set, indexed by tuple index.
Eigen::MatrixXd grid_rows(const EmbeddingSet& set) {
  const ConceptSpace& space = set.space();
  const auto size = static_cast<Eigen::Index>(space.grid_size());
  if (set.rows() != size) {
    throw InvalidArgument("expected exactly one row per grid tuple");
  }
  Eigen::MatrixXd z(size, set.dim());
  std::vector<bool> seen(size, false);
  for (Eigen::Index r = 0; r < set.rows(); ++r) {
    const auto idx = static_cast<Eigen::Index>(space.index_of(set.label(r)));
    if (seen[idx]) throw InvalidArgument("duplicate tuple in embedding set");
    seen[idx] = true;
    z.row(idx) = set.data().row(r).cast<double>();
  }
  return z;
}

Eigen::MatrixXd gather(const Eigen::MatrixXd& z, const ConceptSpace& space,
                       const std::vector<ConceptTuple>& tuples) {
  Eigen::MatrixXd out(tuples.size(), z.cols());
  for (std::size_t r = 0; r < tuples.size(); ++r) {
    out.row(r) = z.row(static_cast<Eigen::Index>(space.index_of(tuples[r])));
  }
  return out;
}

std::uint64_t checked_add(std::uint64_t a, std::uint64_t b) {
  std::uint64_t out;
  if (__builtin_add_overflow(a, b, &out)) throw InvalidArgument("region count overflows 64 bits");
  return out;
}

std::uint64_t binomial(int m, int r) {
  if (r < 0 || r > m) return 0;
  r = std::min(r, m - r);
  std::uint64_t c = 1;
  for (int j = 1; j <= r; ++j) {
    // c * (m - r + j) / j is an integer; divide first so only the result can overflow.
    const std::uint64_t num = static_cast<std::uint64_t>(m - r + j);
    const std::uint64_t g = std::gcd(c, static_cast<std::uint64_t>(j));
    const std::uint64_t den = static_cast<std::uint64_t>(j) / g;
    if (__builtin_mul_overflow(c / g, num / den, &c)) {
      throw InvalidArgument("binomial coefficient overflows 64 bits");
    }
  }
  return c;
}

}  // namespace

// ---------------------------------------------------------------------------

NecessityReport verify_necessity(const EmbeddingSet& set, double tol) {
  const ConceptSpace& space = set.space();
  if (!space.is_binary()) throw InvalidArgument("necessity check needs a binary space");
  if (!(tol > 0.0)) throw InvalidArgument("tolerance must be positive");
  const Eigen::MatrixXd z = grid_rows(set);
  const int k = space.k();
  const auto tuples = space.enumerate();
  NecessityReport rep;

  // Clause (a): on the cross dataset at either end of a counterfactual pair,
  // the majority-side closest point is the center itself.
  for (int i = 0; i < k; ++i) {
    for (const auto& c : tuples) {
      const TrainingSupport cross = cross_dataset(space, c);
      const Eigen::MatrixXd pts = gather(z, space, cross.tuples());
      try {
        const SvmSolution sol = concept_svm(pts, cross.tuples(), i);
        ++rep.svm_solves;
        const bool center_positive = c[i] == 1;
        const Eigen::VectorXd& coeffs = center_positive ? sol.lambda : sol.gamma;
        // Coefficients are ordered like the class members inside concept_svm.
        Eigen::Index pos = 0;
        double off = 0.0;
        for (const auto& t : cross.tuples()) {
          if ((t[i] == 1) != center_positive) continue;
          if (t != c) off = std::max(off, std::abs(coeffs(pos)));
          ++pos;
        }
        rep.worst_off_support_coeff = std::max(rep.worst_off_support_coeff, off);
      } catch (const NumericalError&) {
        ++rep.skipped_cross_datasets;
      }
    }
  }
  if (rep.skipped_cross_datasets > 0) {
    rep.notes.push_back(std::to_string(rep.skipped_cross_datasets) +
                        " cross datasets were not separable; clause (a) skipped there");
  }
  rep.clause_a = rep.worst_off_support_coeff <= tol;

  // Clause (b): z_{c, c_i=1} - z_{c, c_i=0} is the same for every c.
  std::vector<std::vector<Eigen::VectorXd>> diffs(k);
  std::vector<Eigen::VectorXd> mean_diff(k);
  for (int i = 0; i < k; ++i) {
    mean_diff[i] = Eigen::VectorXd::Zero(z.cols());
    for (const auto& c : tuples) {
      if (c[i] != 0) continue;
      ConceptTuple flip = c;
      flip[i] = 1;
      diffs[i].push_back((z.row(static_cast<Eigen::Index>(space.index_of(flip))) -
                          z.row(static_cast<Eigen::Index>(space.index_of(c))))
                             .transpose());
      mean_diff[i] += diffs[i].back();
    }
    mean_diff[i] /= static_cast<double>(diffs[i].size());
    const double scale = mean_diff[i].norm();
    for (const auto& d : diffs[i]) {
      const double res = scale > 0.0 ? (d - mean_diff[i]).norm() / scale
                                     : std::numeric_limits<double>::infinity();
      rep.worst_difference_residual = std::max(rep.worst_difference_residual, res);
    }
  }
  rep.clause_b = rep.worst_difference_residual <= tol;

  // Clause (c): difference directions of distinct concepts are orthogonal.
  for (int i = 0; i < k; ++i) {
    for (int j = i + 1; j < k; ++j) {
      for (const auto& a : diffs[i]) {
        for (const auto& b : diffs[j]) {
          rep.worst_cross_cosine = std::max(rep.worst_cross_cosine, std::abs(cosine(a, b)));
        }
      }
    }
  }
  rep.clause_c = rep.worst_cross_cosine <= tol;
  if (k == 1) rep.notes.push_back("single concept: orthogonality clause is vacuous");
  return rep;
}

// ---------------------------------------------------------------------------

bool SufficiencyReport::passed(double cosine_tol, double tv_tol) const {
  return supports_checked > 0 && supports_passed == supports_checked &&
         counterfactual_pairs_ok && worst_direction_cosine > 1.0 - cosine_tol &&
         max_posterior_tv <= tv_tol;
}

ProbeBank svm_probe_bank(const ConceptSpace& space,
                         const std::vector<SvmSolution>& per_concept) {
  if (!space.is_binary() || static_cast<int>(per_concept.size()) != space.k()) {
    throw InvalidArgument("need one SVM per binary concept");
  }
  const int d = static_cast<int>(per_concept[0].w.size());
  ProbeBank bank = ProbeBank::Init(space, d, Geometry::kEuclidean);
  for (int i = 0; i < space.k(); ++i) {
    bank.weights[i].row(0) = -0.5 * per_concept[i].w.transpose();
    bank.weights[i].row(1) = 0.5 * per_concept[i].w.transpose();
    bank.biases[i] << -0.5 * per_concept[i].b, 0.5 * per_concept[i].b;
  }
  return bank;
}

SufficiencyReport verify_sufficiency(const FactorSet& factors,
                                     SupportRule::Kind rule, int trials,
                                     std::uint64_t seed) {
  const ConceptSpace& space = factors.space();
  if (!space.is_binary()) throw InvalidArgument("sufficiency check needs a binary space");
  const int k = space.k();
  std::vector<Eigen::VectorXd> delta(k);
  for (int i = 0; i < k; ++i) {
    delta[i] = (factors.factor(i).row(1) - factors.factor(i).row(0)).transpose();
    if (delta[i].norm() == 0.0) throw InvalidArgument("concept factors coincide");
  }
  for (int i = 0; i < k; ++i) {
    for (int j = i + 1; j < k; ++j) {
      if (std::abs(cosine(delta[i], delta[j])) > 1e-8) {
        throw InvalidArgument("factors are not cross-concept orthogonal within 1e-8");
      }
    }
  }

  const auto tuples = space.enumerate();
  Eigen::MatrixXd z(tuples.size(), factors.dim());
  for (std::size_t r = 0; r < tuples.size(); ++r) z.row(r) = factors.reconstruct(tuples[r]).transpose();

  std::vector<TrainingSupport> supports;
  if (rule == SupportRule::Kind::kCrossAt) {
    for (const auto& c : tuples) supports.push_back(cross_dataset(space, c));
  } else if (rule == SupportRule::Kind::kBinaryMajority) {
    if (trials < 1) throw InvalidArgument("need at least one trial");
    for (int t = 0; t < trials; ++t) {
      supports.push_back(binary_majority_support(space, mix_seed(seed, t)));
    }
  } else {
    throw InvalidArgument("sufficiency supports must be cross or majority");
  }

  SufficiencyReport rep;
  // posteriors[s] is grid x k, the probability of value 1.
  std::vector<Eigen::MatrixXd> posteriors;
  for (const auto& support : supports) {
    ++rep.supports_checked;
    bool ok = true;
    Eigen::MatrixXd post(tuples.size(), k);
    const Eigen::MatrixXd pts = gather(z, space, support.tuples());
    for (int i = 0; i < k; ++i) {
      if (!support.has_counterfactual_pair(i)) {
        rep.counterfactual_pairs_ok = false;
        rep.notes.push_back("support without a counterfactual pair for concept " +
                            std::to_string(i));
      }
      const SvmSolution sol = concept_svm(pts, support.tuples(), i);
      long correct = 0;
      for (std::size_t r = 0; r < tuples.size(); ++r) {
        const double s = sol.decision(z.row(r).transpose());
        correct += (s > 0.0) == (tuples[r][i] == 1);
        post(static_cast<Eigen::Index>(r), i) = sigmoid(s);
      }
      const double acc = static_cast<double>(correct) / static_cast<double>(tuples.size());
      const double cos = cosine(sol.w, delta[i]);
      rep.worst_accuracy = std::min(rep.worst_accuracy, acc);
      rep.worst_direction_cosine = std::min(rep.worst_direction_cosine, cos);
      ok = ok && acc == 1.0 && cos > 1.0 - 1e-6;
    }
    rep.supports_passed += ok;
    posteriors.push_back(std::move(post));
  }
  for (std::size_t a = 0; a < posteriors.size(); ++a) {
    for (std::size_t b = a + 1; b < posteriors.size(); ++b) {
      rep.max_posterior_tv =
          std::max(rep.max_posterior_tv, (posteriors[a] - posteriors[b]).cwiseAbs().maxCoeff());
    }
  }
  return rep;
}

// ---------------------------------------------------------------------------

OnOffSpec::OnOffSpec(int k_, int n_, double alpha_, double beta_)
    : k(k_), n(n_), alpha(alpha_), beta(beta_) {
  if (k < 1 || n < 2) throw InvalidArgument("on-off pattern needs k >= 1 and n >= 2");
  if (!(alpha > beta)) throw InvalidArgument("on-off pattern needs alpha > beta");
  const double scale = std::max({std::abs(alpha), std::abs(beta), 1e-300});
  if (std::abs(alpha + (n - 1) * beta) <= 1e-12 * scale * n) {
    throw InvalidArgument("alpha = -beta (n - 1) is the excluded degenerate case");
  }
  ConceptSpace space(std::vector<int>(k, n));
  if (space.grid_size() > 100'000) throw InvalidArgument("on-off grid exceeds 1e5 tuples");
}

namespace {

Eigen::MatrixXd build_onoff(int k, int n, double alpha, double beta) {
  const ConceptSpace space(std::vector<int>(k, n));
  if (space.grid_size() > 100'000) throw InvalidArgument("on-off grid exceeds 1e5 tuples");
  const auto tuples = space.enumerate();
  Eigen::MatrixXd y(k * n, tuples.size());
  for (std::size_t c = 0; c < tuples.size(); ++c) {
    for (int i = 0; i < k; ++i) {
      for (int j = 0; j < n; ++j) {
        y(i * n + j, static_cast<Eigen::Index>(c)) = tuples[c][i] == j ? alpha : beta;
      }
    }
  }
  return y;
}

}  // namespace

Eigen::MatrixXd onoff_matrix(const OnOffSpec& spec) {
  return build_onoff(spec.k, spec.n, spec.alpha, spec.beta);
}

int onoff_rank(const OnOffSpec& spec, double rel_tol) {
  return numerical_rank(onoff_matrix(spec), rel_tol);
}

int onoff_rank_unchecked(int k, int n, double alpha, double beta, double rel_tol) {
  return numerical_rank(build_onoff(k, n, alpha, beta), rel_tol);
}

OnOffConstruction onoff_construction(const OnOffSpec& spec) {
  const int k = spec.k;
  const int n = spec.n;
  const int d = spec.predicted_rank();
  const ConceptSpace space(std::vector<int>(k, n));
  const auto tuples = space.enumerate();

  // Coordinate 0 is constant 1; block i holds the one-hot code of c_i without
  // its last entry. Entries are 0/1, so f32 storage is exact.
  Eigen::MatrixXd z = Eigen::MatrixXd::Zero(tuples.size(), d);
  for (std::size_t r = 0; r < tuples.size(); ++r) {
    z(static_cast<Eigen::Index>(r), 0) = 1.0;
    for (int i = 0; i < k; ++i) {
      if (tuples[r][i] < n - 1) z(static_cast<Eigen::Index>(r), 1 + i * (n - 1) + tuples[r][i]) = 1.0;
    }
  }
  ProbeBank probes = ProbeBank::Init(space, d, Geometry::kEuclidean);
  const double gap = spec.alpha - spec.beta;
  for (int i = 0; i < k; ++i) {
    for (int j = 0; j < n; ++j) {
      Eigen::RowVectorXd w = Eigen::RowVectorXd::Zero(d);
      if (j < n - 1) {
        w(0) = spec.beta;
        w(1 + i * (n - 1) + j) = gap;
      } else {
        // Last value: on exactly when the block is all zero.
        w(0) = spec.alpha;
        w.segment(1 + i * (n - 1), n - 1).setConstant(-gap);
      }
      probes.weights[i].row(j) = w;
    }
  }
  return {EmbeddingSet::FromTuples(space, tuples, z), std::move(probes)};
}

OnOffReconstruction onoff_additive_reconstruction(const ProbeBank& probes,
                                                  const EmbeddingSet& set,
                                                  const OnOffSpec& spec,
                                                  double tol) {
  const ConceptSpace& space = set.space();
  if (space.k() != spec.k || !(space == ConceptSpace(std::vector<int>(spec.k, spec.n)))) {
    throw InvalidArgument("embedding space does not match the on-off spec");
  }
  if (!(probes.space == space) || probes.dim() != set.dim()) {
    throw InvalidArgument("probes do not match the embedding set");
  }
  auto pattern_error = [&](const Eigen::MatrixXd& z) {
    double worst = 0.0;
    for (int i = 0; i < space.k(); ++i) {
      const Eigen::MatrixXd h = probes.logits(i, z);
      for (Eigen::Index r = 0; r < h.rows(); ++r) {
        for (Eigen::Index j = 0; j < h.cols(); ++j) {
          const double target = set.labels()(r, i) == j ? spec.alpha : spec.beta;
          worst = std::max(worst, std::abs(h(r, j) - target));
        }
      }
    }
    return worst;
  };
  const double input_error = pattern_error(set.data_double());
  if (input_error > tol) {
    throw NumericalError("probe scores miss the on-off pattern by " +
                         std::to_string(input_error));
  }
  OnOffReconstruction out{recover_by_averaging(set), 0.0, 0.0};
  out.max_pattern_error = pattern_error(out.factors.reconstruct_rows(set.labels()));
  const Eigen::MatrixXd zbar = out.factors.mean().transpose();
  for (int i = 0; i < space.k(); ++i) {
    const Eigen::MatrixXd h = probes.logits(i, zbar);
    out.max_delta_error =
        std::max(out.max_delta_error, (h.array() - spec.delta()).abs().maxCoeff());
  }
  if (out.max_pattern_error > 10.0 * tol || out.max_delta_error > 10.0 * tol) {
    throw NumericalError("additive reconstruction breaks the on-off pattern (error " +
                         std::to_string(std::max(out.max_pattern_error, out.max_delta_error)) +
                         ")");
  }
  return out;
}

// ---------------------------------------------------------------------------

Construction min_dim_construction(int k, int n) {
  if (k < 1 || n < 1) throw InvalidArgument("construction needs k, n >= 1");
  if (n == 1) throw InvalidArgument("concepts need at least two values");
  const ConceptSpace space(std::vector<int>(k, n));
  if (space.grid_size() > 100'000) throw InvalidArgument("construction grid exceeds 1e5 tuples");
  const auto tuples = space.enumerate();
  Eigen::MatrixXd z(tuples.size(), k);
  for (std::size_t r = 0; r < tuples.size(); ++r) {
    for (int i = 0; i < k; ++i) z(static_cast<Eigen::Index>(r), i) = tuples[r][i];
  }
  ProbeBank probes = ProbeBank::Init(space, k, Geometry::kEuclidean);
  for (int i = 0; i < k; ++i) {
    for (int j = 0; j < n; ++j) {
      probes.weights[i](j, i) = 2.0 * j;
      probes.biases[i](j) = -static_cast<double>(j) * j;
    }
  }
  return {EmbeddingSet::FromTuples(space, tuples, z), std::move(probes)};
}

long long min_dim_construction_score(int c_i, int j) {
  const long long c = c_i;
  const long long dj = j - c_i;
  return c * c - dj * dj;
}

std::uint64_t region_count_affine(int m, int d) {
  if (m < 0 || d < 0) throw InvalidArgument("region counts need m, d >= 0");
  std::uint64_t total = 0;
  for (int r = 0; r <= std::min(m, d); ++r) total = checked_add(total, binomial(m, r));
  return total;
}

std::uint64_t region_count_central(int m, int d) {
  if (m < 0 || d < 0) throw InvalidArgument("region counts need m, d >= 0");
  if (m == 0 || d == 0) return 1;
  std::uint64_t total = 0;
  for (int r = 0; r <= std::min(m - 1, d - 1); ++r) total = checked_add(total, binomial(m - 1, r));
  return checked_add(total, total);
}

Eigen::MatrixXd random_arrangement(int m, int d, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  Eigen::MatrixXd h = gaussian_matrix(m, d + 1, rng);
  std::uniform_real_distribution<double> offset(-1.0, 1.0);
  for (int r = 0; r < m; ++r) h(r, d) = offset(rng);
  return h;
}

RegionCount brute_force_region_count(const Eigen::MatrixXd& hyperplanes,
                                     long samples, std::uint64_t seed) {
  const int m = static_cast<int>(hyperplanes.rows());
  const int d = static_cast<int>(hyperplanes.cols()) - 1;
  if (m < 0 || m > 12 || d < 1 || d > 4) {
    throw InvalidArgument("brute-force counting supports m <= 12 and 1 <= d <= 4");
  }
  if (samples < 1) throw InvalidArgument("need at least one sample");
  RegionCount out;
  if (m == 0) {
    out.count = 1;
    return out;
  }
  const Eigen::MatrixXd a = hyperplanes.leftCols(d);
  const Eigen::VectorXd b = hyperplanes.col(d);
  const Eigen::VectorXd norms = a.rowwise().norm();
  if (norms.minCoeff() == 0.0) throw InvalidArgument("hyperplane with a zero normal");

  auto signature = [&](const Eigen::VectorXd& x) {
    std::uint32_t mask = 0;
    for (int j = 0; j < m; ++j) {
      if (a.row(j).dot(x) + b(j) > 0.0) mask |= 1u << j;
    }
    return mask;
  };

  // Vertices: intersections of d hyperplanes.
  struct Vertex {
    Eigen::VectorXd x;
    Eigen::MatrixXd inv;  // inverse of the incident normals
    double radius;
  };
  std::vector<Vertex> vertices;
  double scale = 1.0;
  for (int j = 0; j < m; ++j) scale = std::max(scale, std::abs(b(j)) / norms(j));
  if (m >= d) {
    std::vector<int> pick(d);
    std::iota(pick.begin(), pick.end(), 0);
    while (true) {
      Eigen::MatrixXd as(d, d);
      Eigen::VectorXd bs(d);
      for (int r = 0; r < d; ++r) {
        as.row(r) = a.row(pick[r]) / norms(pick[r]);
        bs(r) = b(pick[r]) / norms(pick[r]);
      }
      Eigen::JacobiSVD<Eigen::MatrixXd> svd(as);
      const Eigen::VectorXd s = svd.singularValues();
      if (s(d - 1) <= 1e-9 * s(0)) {
        out.general_position = false;
      } else {
        Vertex v{as.fullPivLu().solve(-bs), as.inverse(), 0.0};
        double nearest = std::numeric_limits<double>::infinity();
        int incident = 0;
        for (int j = 0; j < m; ++j) {
          const double dist = std::abs(a.row(j).dot(v.x) + b(j)) / norms(j);
          if (dist <= 1e-9 * std::max(1.0, v.x.norm())) {
            ++incident;
          } else {
            nearest = std::min(nearest, dist);
          }
        }
        if (incident != d) out.general_position = false;
        v.radius = std::isfinite(nearest) ? 0.5 * nearest : 1.0;
        scale = std::max(scale, v.x.cwiseAbs().maxCoeff());
        vertices.push_back(std::move(v));
      }
      int r = d - 1;
      while (r >= 0 && pick[r] == m - d + r) --r;
      if (r < 0) break;
      ++pick[r];
      for (int q = r + 1; q < d; ++q) pick[q] = pick[q - 1] + 1;
    }
  }

  std::unordered_set<std::uint32_t> seen;
  std::mt19937_64 rng(seed);
  const double box = 10.0 * scale;
  std::uniform_real_distribution<double> unif(-box, box);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const long local = vertices.empty() ? 0 : samples / 2;
  Eigen::VectorXd x(d);
  for (long s = 0; s < samples - local; ++s) {
    for (int c = 0; c < d; ++c) x(c) = unif(rng);
    seen.insert(signature(x));
  }
  for (long s = 0; s < local; ++s) {
    const Vertex& v = vertices[static_cast<std::size_t>(s) % vertices.size()];
    for (int c = 0; c < d; ++c) x(c) = normal(rng);
    x *= v.radius * std::pow(unit(rng), 1.0 / d) / std::max(x.norm(), 1e-300);
    seen.insert(signature(v.x + x));
  }
  // Probe each of the 2^d cones at every vertex directly.
  for (const Vertex& v : vertices) {
    for (int mask = 0; mask < (1 << d); ++mask) {
      Eigen::VectorXd sgn(d);
      for (int c = 0; c < d; ++c) sgn(c) = (mask >> c) & 1 ? 1.0 : -1.0;
      Eigen::VectorXd step = v.inv * sgn;
      step *= 0.5 * v.radius / std::max(step.norm(), 1e-300);
      seen.insert(signature(v.x + step));
    }
  }
  out.count = seen.size();
  return out;
}

}  // namespace cglab
