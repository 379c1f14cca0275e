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

#include "verify_suite.h"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <exception>
#include <random>
#include <sstream>
#include <thread>

#include "cglab/error.h"
#include "cglab/factor_model.h"
#include "cglab/linalg.h"
#include "cglab/metrics.h"
#include "cglab/synthetic_lab.h"
#include "cglab/theory_oracles.h"

namespace cglab::cli {

namespace {

struct Outcome {
  bool passed = true;
  std::ostringstream detail;
};

Outcome check_region(std::uint64_t seed) {
  Outcome o;
  int matched = 0;
  int redraws = 0;
  for (int t = 0; t < 20; ++t) {
    const int m = 1 + t % 6;
    const int d = 1 + (t / 6) % 3;
    for (std::uint64_t s = mix_seed(seed, t);; s = mix_seed(s, 1), ++redraws) {
      const RegionCount rc = brute_force_region_count(random_arrangement(m, d, s), 200'000, s);
      if (!rc.general_position) continue;
      if (rc.count == region_count_affine(m, d)) {
        ++matched;
      } else {
        o.passed = false;
        o.detail << "m=" << m << " d=" << d << " counted " << rc.count << " expected "
                 << region_count_affine(m, d) << "; ";
      }
      break;
    }
  }
  const bool seven = region_count_affine(3, 2) == 7;
  o.passed = o.passed && seven;
  o.detail << matched << "/20 arrangements match, R_aff(3,2)=" << region_count_affine(3, 2)
           << ", " << redraws << " redraws";
  return o;
}

Outcome check_onoff_rank() {
  Outcome o;
  int ok = 0;
  for (int k = 2; k <= 5; ++k) {
    for (int n = 2; n <= 5; ++n) {
      const OnOffSpec spec(k, n, 1.0, 0.0);
      const int r = onoff_rank(spec, 1e-9);
      if (r == spec.predicted_rank()) {
        ++ok;
      } else {
        o.passed = false;
        o.detail << "k=" << k << " n=" << n << " rank " << r << "; ";
      }
    }
  }
  const int r23 = onoff_rank(OnOffSpec(2, 3, 1.0, 0.0), 1e-9);
  o.passed = o.passed && r23 == 5;
  o.detail << ok << "/16 cells match 1+k(n-1), k=2 n=3 rank " << r23;
  return o;
}

Outcome check_packing() {
  Outcome o;
  for (auto [k, n] : {std::pair{2, 20}, std::pair{3, 12}, std::pair{4, 6}}) {
    const Construction c = min_dim_construction(k, n);
    const AccuracyReport acc = accuracy(c.probes, c.set.data_double(), c.set.labels());
    o.passed = o.passed && acc.min == 1.0;
    o.detail << "(" << k << "," << n << ") min acc " << acc.min << "; ";
  }
  return o;
}

Outcome check_necessity(std::uint64_t seed) {
  Outcome o;
  for (int k = 2; k <= 5; ++k) {
    const FactorizedData data =
        generate_factorized(ConceptSpace(std::vector<int>(k, 2)), k, true, 1.0, mix_seed(seed, k));
    const NecessityReport rep = verify_necessity(data.set, 1e-6);
    o.passed = o.passed && rep.passed();
    o.detail << "k=" << k << (rep.passed() ? " pass" : " FAIL") << "; ";
  }
  const NecessityReport bad = verify_necessity(generate_unstable_binary(3, 3, seed), 1e-6);
  o.passed = o.passed && !bad.clause_b;
  o.detail << "unstable witness clause (b) " << (bad.clause_b ? "passed (unexpected)" : "fails");
  return o;
}

Outcome check_sufficiency(std::uint64_t seed) {
  Outcome o;
  const FactorizedData data =
      generate_factorized(ConceptSpace(std::vector<int>(4, 2)), 6, true, 1.0, seed);
  for (auto [rule, trials] : {std::pair{SupportRule::Kind::kBinaryMajority, 10},
                              std::pair{SupportRule::Kind::kCrossAt, 16}}) {
    const SufficiencyReport rep = verify_sufficiency(data.truth, rule, trials, seed);
    const bool ok = rep.passed(1e-6, 1e-9) && rep.supports_checked == trials;
    o.passed = o.passed && ok;
    o.detail << to_string(rule) << ": " << rep.supports_passed << "/" << rep.supports_checked
             << " supports, cos " << rep.worst_direction_cosine << ", tv " << rep.max_posterior_tv
             << "; ";
  }
  return o;
}

Outcome check_scan(std::uint64_t seed) {
  Outcome o;
  MinDimConfig cfg;
  cfg.ks = {2, 3, 4};
  cfg.ns = {2, 6};
  cfg.restarts = 3;
  cfg.train.epochs = 5000;
  cfg.train.seed = seed;
  const MinDimTable ce = min_dim_scan(cfg);
  cfg.train.loss = Loss::kBinaryCrossEntropy;
  const MinDimTable bce = min_dim_scan(cfg);
  for (const auto& c : ce.cells) {
    const MinDimCell& b = bce.cell(c.k, c.n);
    const bool ce_ok = c.min_dim && *c.min_dim == c.k;
    const bool order_ok = !b.min_dim || (c.min_dim && *b.min_dim >= *c.min_dim);
    o.passed = o.passed && ce_ok && order_ok && c.bound_holds && b.bound_holds;
    o.detail << "(" << c.k << "," << c.n << ") ce=" << (c.min_dim ? std::to_string(*c.min_dim) : "-")
             << " bce=" << (b.min_dim ? std::to_string(*b.min_dim) : "-") << "; ";
  }
  return o;
}

Outcome check_recovery(std::uint64_t seed) {
  Outcome o;
  const ConceptSpace space({3, 4, 2});
  const FactorizedData data = generate_factorized(space, 7, false, 1.0, seed);
  const FactorSet avg = recover_by_averaging(data.set);
  const FactorSet lsq = recover_by_least_squares(data.set);
  double diff = (avg.mean() - lsq.mean()).cwiseAbs().maxCoeff();
  for (int i = 0; i < space.k(); ++i) {
    diff = std::max(diff, (avg.factor(i) - lsq.factor(i)).cwiseAbs().maxCoeff());
  }
  const TrainingSupport cross = cross_dataset(space, {1, 2, 0});
  const auto rows = data.set.rows_in(cross);
  Eigen::MatrixXd z(rows.size(), data.set.dim());
  std::vector<ConceptTuple> tuples;
  for (std::size_t r = 0; r < rows.size(); ++r) {
    z.row(r) = data.set.data().row(rows[r]).cast<double>();
    tuples.push_back(data.set.label(rows[r]));
  }
  const FactorSet single = recover_by_least_squares(EmbeddingSet::FromTuples(space, tuples, z));
  double err = (single.mean() - data.truth.mean()).cwiseAbs().maxCoeff();
  for (int i = 0; i < space.k(); ++i) {
    err = std::max(err, (single.factor(i) - data.truth.factor(i)).cwiseAbs().maxCoeff());
  }
  o.passed = diff <= 1e-8 && err <= 1e-8 &&
             static_cast<int>(rows.size()) == space.free_parameters();
  o.detail << "averaging vs lstsq " << diff << ", cross-support recovery error " << err
           << " from " << rows.size() << " rows";
  return o;
}

Outcome check_metrics(std::uint64_t seed) {
  Outcome o;
  const FactorizedData data = generate_factorized(ConceptSpace({3, 4, 2}), 8, true, 1.0, seed);
  const double r2 = projected_whitened_r2(data.set, recover_by_averaging(data.set)).r2;
  o.passed = std::abs(r2 - 1.0) <= 1e-9;
  o.detail << "factorized R2 " << r2 << "; ";
  for (int n : {8, 24}) {
    const SeparableCounterexample cx = generate_separable_nonfactorized(n, seed);
    const double acc = accuracy(cx.witness, cx.set.data_double(), cx.set.labels()).min;
    const double r = projected_whitened_r2(cx.set, recover_by_averaging(cx.set), &cx.witness).r2;
    o.passed = o.passed && acc == 1.0 && r < 0.9;
    o.detail << "counterexample n=" << n << " acc " << acc << " R2 " << r << "; ";
  }
  const EmbeddingSet noisy = generate_dominant_noise(10, seed);
  const FactorSet f = recover_by_averaging(noisy);
  R2Options raw;
  raw.whiten = false;
  const double r_raw = projected_whitened_r2(noisy, f, nullptr, raw).r2;
  const double r_white = projected_whitened_r2(noisy, f).r2;
  o.passed = o.passed && r_white < r_raw;
  o.detail << "dominant noise R2 " << r_raw << " -> whitened " << r_white;
  return o;
}

Outcome check_gradient(std::uint64_t seed) {
  Outcome o;
  double worst = 0.0;
  struct Mode {
    Loss loss;
    Geometry geometry;
    const char* name;
  };
  for (const Mode& mode : {Mode{Loss::kCrossEntropy, Geometry::kEuclidean, "ce"},
                           Mode{Loss::kBinaryCrossEntropy, Geometry::kEuclidean, "bce"},
                           Mode{Loss::kCrossEntropy, Geometry::kSpherical, "spherical"}}) {
    double mode_worst = 0.0;
    for (int t = 0; t < 20; ++t) {
      const std::uint64_t s = mix_seed(seed, 100 * t + static_cast<int>(mode.geometry) * 10 +
                                                 static_cast<int>(mode.loss));
      const ConceptSpace space({2 + t % 3, 2 + (t / 3) % 2});
      const int d = 2 + t % 4;
      const FactorizedData data = generate_factorized(space, d, false, 1.0, s);
      ProbeBank bank = ProbeBank::Init(space, d, mode.geometry, s);
      std::mt19937_64 rng(mix_seed(s, 9));
      for (int i = 0; i < space.k(); ++i) {
        bank.weights[i] = gaussian_matrix(space.cardinality(i), d, rng);
        bank.biases[i] = gaussian_matrix(space.cardinality(i), 1, rng).col(0);
      }
      if (mode.geometry == Geometry::kSpherical) {
        bank.normalize_weights();
        bank.log_temperature = 0.5;
      }
      const double err = gradient_check(bank, data.set, full_support(space), mode.loss);
      mode_worst = std::max(mode_worst, err);
    }
    worst = std::max(worst, mode_worst);
    o.detail << mode.name << " " << mode_worst << "; ";
  }
  o.passed = worst <= 1e-4;
  return o;
}

Outcome check_reconstruction() {
  Outcome o;
  double worst_pattern = 0.0;
  double worst_delta = 0.0;
  int cells = 0;
  for (int k = 2; k <= 4; ++k) {
    for (int n = 2; n <= 4; ++n) {
      for (auto [alpha, beta] : {std::pair{1.0, 0.0}, std::pair{2.5, -0.5}}) {
        const OnOffSpec spec(k, n, alpha, beta);
        const OnOffConstruction c = onoff_construction(spec);
        const OnOffReconstruction rec = onoff_additive_reconstruction(c.probes, c.set, spec, 1e-9);
        worst_pattern = std::max(worst_pattern, rec.max_pattern_error);
        worst_delta = std::max(worst_delta, rec.max_delta_error);
        ++cells;
      }
    }
  }
  o.passed = worst_pattern <= 1e-9 && worst_delta <= 1e-9;
  o.detail << cells << " constructions, pattern error " << worst_pattern << ", delta error "
           << worst_delta;
  return o;
}

}  // namespace

const std::vector<std::string>& check_names() {
  static const std::vector<std::string> names = {
      "region", "onoff", "packing", "necessity", "sufficiency",
      "scan", "recovery", "metrics", "gradient", "reconstruction"};
  return names;
}

CheckResult run_check(const std::string& name, std::uint64_t seed) {
  const auto start = std::chrono::steady_clock::now();
  Outcome o;
  try {
    if (name == "region") {
      o = check_region(seed);
    } else if (name == "onoff") {
      o = check_onoff_rank();
    } else if (name == "packing") {
      o = check_packing();
    } else if (name == "necessity") {
      o = check_necessity(seed);
    } else if (name == "sufficiency") {
      o = check_sufficiency(seed);
    } else if (name == "scan") {
      o = check_scan(seed);
    } else if (name == "recovery") {
      o = check_recovery(seed);
    } else if (name == "metrics") {
      o = check_metrics(seed);
    } else if (name == "gradient") {
      o = check_gradient(seed);
    } else if (name == "reconstruction") {
      o = check_reconstruction();
    } else {
      throw InvalidArgument("unknown check '" + name + "'");
    }
  } catch (const InvalidArgument&) {
    throw;
  } catch (const Error& e) {
    o.passed = false;
    o.detail << "error: " << e.what();
  }
  const std::chrono::duration<double> dt = std::chrono::steady_clock::now() - start;
  std::string detail = o.detail.str();
  while (detail.ends_with("; ") || detail.ends_with(' ')) detail.erase(detail.size() - (detail.ends_with("; ") ? 2 : 1));
  return {name, o.passed, detail, dt.count()};
}

std::vector<CheckResult> run_suite(const std::string& suite, std::uint64_t seed, int jobs) {
  std::vector<std::string> selected;
  if (suite == "all") {
    for (const auto& n : check_names()) {
      if (n != "scan") selected.push_back(n);
    }
  } else if (std::find(check_names().begin(), check_names().end(), suite) != check_names().end()) {
    selected.push_back(suite);
  } else {
    throw InvalidArgument("unknown suite '" + suite + "'");
  }
  std::vector<CheckResult> results(selected.size());
  std::vector<std::exception_ptr> errors(selected.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < selected.size(); i = next++) {
      try {
        results[i] = run_check(selected[i], seed);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const int threads = std::clamp(jobs, 1, static_cast<int>(selected.size()));
  std::vector<std::thread> pool;
  for (int t = 1; t < threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  return results;
}

}  // namespace cglab::cli
