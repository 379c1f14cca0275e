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

// Acceptance suite: one PASS/FAIL line per criterion, exit 1 if any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <Eigen/Dense>

#include "cglab/error.h"
#include "cglab/factor_model.h"
#include "cglab/metrics.h"
#include "cglab/probe_trainer.h"
#include "cglab/synthetic_lab.h"
#include "cglab/theory_oracles.h"
#include "oracles.h"

namespace cglab {
namespace {

struct Outcome {
  bool passed = true;
  std::ostringstream detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      passed = false;
      detail << "[failed: " << what << "] ";
    }
  }
};

struct Criterion {
  int id;
  std::string name;
  double limit_seconds;
  std::function<void(Outcome&)> body;
};

// Argmax of explicit affine scores, lowest index on ties.
LabelMatrix argmax_labels(const ProbeBank& bank, const Eigen::MatrixXd& z) {
  const int k = bank.space.k();
  LabelMatrix out(z.rows(), k);
  for (int i = 0; i < k; ++i) {
    for (Eigen::Index r = 0; r < z.rows(); ++r) {
      int best = 0;
      double best_score = -std::numeric_limits<double>::infinity();
      for (Eigen::Index j = 0; j < bank.weights[i].rows(); ++j) {
        const double s = bank.weights[i].row(j).dot(z.row(r)) + bank.biases[i](j);
        if (s > best_score) {
          best_score = s;
          best = static_cast<int>(j);
        }
      }
      out(r, i) = static_cast<std::uint16_t>(best);
    }
  }
  return out;
}

void region_counts(Outcome& o) {
  o.require(region_count_affine(3, 2) == 7, "R_aff(3,2) = 7");
  std::mt19937_64 rng(0);
  int matched = 0;
  int redrawn = 0;
  std::uint64_t seed = 1000;
  for (int t = 0; t < 20; ++t) {
    const int m = 1 + static_cast<int>(rng() % 6);
    const int d = 1 + static_cast<int>(rng() % 3);
    while (true) {
      const Eigen::MatrixXd h = random_arrangement(m, d, seed);
      const RegionCount r = brute_force_region_count(h, 200'000, seed++);
      if (!r.general_position) {
        ++redrawn;
        continue;
      }
      const std::uint64_t expect = testing::recurrence_regions_affine(m, d);
      if (r.count == expect && region_count_affine(m, d) == expect) {
        ++matched;
      } else {
        o.require(false, "m=" + std::to_string(m) + " d=" + std::to_string(d) + " counted " +
                             std::to_string(r.count) + " expected " + std::to_string(expect));
      }
      break;
    }
  }
  o.detail << matched << "/20 arrangements match, R_aff(3,2)=" << region_count_affine(3, 2);
  if (redrawn) o.detail << ", " << redrawn << " redrawn";
}

void onoff_ranks(Outcome& o) {
  // k, n in {2..6}: a superset of the 16 cells of {2..5}.
  int cells = 0;
  for (int k = 2; k <= 6; ++k) {
    for (int n = 2; n <= 6; ++n) {
      const OnOffSpec spec(k, n, 1.0, 0.0);
      const int rank = onoff_rank(spec, 1e-9);
      const Eigen::MatrixXd y = onoff_matrix(spec);
      const int oracle = k * n <= 20 ? testing::modular_rank(y, 1'000'003) : rank;
      if (rank == 1 + k * (n - 1) && oracle == rank) {
        ++cells;
      } else {
        o.require(false, "k=" + std::to_string(k) + " n=" + std::to_string(n) + " rank " + std::to_string(rank));
      }
    }
  }
  const int example = onoff_rank(OnOffSpec(2, 3, 1.0, 0.0), 1e-9);
  o.require(example == 5, "k=2 n=3 rank 5");
  o.detail << cells << "/25 cells rank 1+k(n-1), k=2 n=3 rank " << example;
}

void packing(Outcome& o) {
  for (auto [k, n] : {std::pair{2, 20}, std::pair{3, 12}, std::pair{4, 6}}) {
    const Construction c = min_dim_construction(k, n);
    const Eigen::MatrixXd z = c.set.data_double();
    const LabelMatrix predicted = argmax_labels(c.probes, z);
    const long wrong = (predicted.cast<int>() - c.set.labels().cast<int>()).cwiseAbs().count();
    o.require(c.set.dim() == k && wrong == 0, "(" + std::to_string(k) + "," + std::to_string(n) + ")");
    o.detail << "(" << k << "," << n << ") d=" << c.set.dim() << " errors " << wrong << "; ";
  }
}

void necessity(Outcome& o) {
  for (int k = 2; k <= 5; ++k) {
    const FactorizedData data =
        generate_factorized(ConceptSpace(std::vector<int>(k, 2)), k + 2, true, 1.0, 40 + k);
    const NecessityReport r = verify_necessity(data.set, 1e-6);
    o.require(r.passed(), "orthogonal k=" + std::to_string(k));
    o.detail << "k=" << k << " " << (r.passed() ? "pass" : "fail") << "; ";
  }
  const NecessityReport bad = verify_necessity(generate_unstable_binary(3, 5, 7), 1e-6);
  o.require(!bad.clause_b, "unstable witness fails clause (b)");
  o.detail << "unstable clause (b) " << (bad.clause_b ? "passes" : "fails");
}

void sufficiency(Outcome& o) {
  const FactorizedData data = generate_factorized(ConceptSpace({2, 2, 2, 2}), 6, true, 1.0, 5);
  const SufficiencyReport majority = verify_sufficiency(data.truth, SupportRule::Kind::kBinaryMajority, 10, 11);
  const SufficiencyReport cross = verify_sufficiency(data.truth, SupportRule::Kind::kCrossAt, 1, 11);
  o.require(majority.passed(1e-6, 1e-9) && majority.supports_checked == 10, "majority supports");
  o.require(cross.passed(1e-6, 1e-9) && cross.supports_checked == 16, "cross-dataset centers");

  // Independent direction check on every cross-dataset support.
  const ConceptSpace& space = data.set.space();
  const Eigen::MatrixXd z = data.set.data_double();
  double worst_cos = 1.0;
  for (const ConceptTuple& center : space.enumerate()) {
    const TrainingSupport t = cross_dataset(space, center);
    const std::vector<Eigen::Index> rows = data.set.rows_in(t);
    for (int i = 0; i < 4; ++i) {
      std::vector<Eigen::Index> pos, neg;
      for (Eigen::Index r : rows) (data.set.labels()(r, i) == 1 ? pos : neg).push_back(r);
      const SvmSolution s = hard_margin_svm(z(pos, Eigen::all), z(neg, Eigen::all));
      const Eigen::VectorXd u = (data.truth.factor(i).row(1) - data.truth.factor(i).row(0)).transpose();
      worst_cos = std::min(worst_cos, s.w.dot(u) / (s.w.norm() * u.norm()));
    }
  }
  o.require(worst_cos > 1.0 - 1e-6, "SVM direction cosine");
  o.detail << "majority " << majority.supports_passed << "/" << majority.supports_checked << " tv "
           << majority.max_posterior_tv << "; cross " << cross.supports_passed << "/" << cross.supports_checked
           << " tv " << cross.max_posterior_tv << "; worst 1 - cosine " << 1.0 - worst_cos;
}

void min_dim(Outcome& o) {
  MinDimConfig cfg;
  cfg.ks = {2, 3, 4};
  cfg.ns = {2, 6};
  cfg.restarts = 3;
  cfg.d_max = 16;
  cfg.success = 0.99;
  cfg.train.epochs = 5000;
  cfg.train.lr = 0.1;
  cfg.jobs = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  MinDimConfig bce_cfg = cfg;
  bce_cfg.train.loss = Loss::kBinaryCrossEntropy;
  const MinDimTable ce = min_dim_scan(cfg);
  const MinDimTable bce = min_dim_scan(bce_cfg);
  for (int k : cfg.ks) {
    for (int n : cfg.ns) {
      const MinDimCell& c = ce.cell(k, n);
      const MinDimCell& b = bce.cell(k, n);
      const std::string cell = "(" + std::to_string(k) + "," + std::to_string(n) + ")";
      o.require(c.min_dim && *c.min_dim == k, "CE min d = k at " + cell);
      o.require(b.min_dim && (!c.min_dim || *b.min_dim >= *c.min_dim), "BCE >= CE at " + cell);
      o.require(c.bound_holds && b.bound_holds && (!b.min_dim || *b.min_dim >= k), "d >= k at " + cell);
      auto show = [](const MinDimCell& x) { return x.min_dim ? std::to_string(*x.min_dim) : std::string("none"); };
      o.detail << cell << " ce=" << show(c) << " bce=" << show(b) << "; ";
    }
  }
}

void recovery(Outcome& o) {
  double worst_agree = 0.0;
  double worst_cross = 0.0;
  for (const ConceptSpace& space : {ConceptSpace({2, 3, 4}), ConceptSpace({5, 2}), ConceptSpace({3, 3, 3, 2})}) {
    const FactorizedData data = generate_factorized(space, 7, false, 1.0, space.k());
    const FactorSet a = recover_by_averaging(data.set);
    const FactorSet l = recover_by_least_squares(data.set);
    worst_agree = std::max(worst_agree, (a.mean() - l.mean()).cwiseAbs().maxCoeff());
    for (int i = 0; i < space.k(); ++i) {
      worst_agree = std::max(worst_agree, (a.factor(i) - l.factor(i)).cwiseAbs().maxCoeff());
    }

    const TrainingSupport t = cross_dataset(space, space.enumerate().back());
    std::size_t expect_size = 1;
    for (int i = 0; i < space.k(); ++i) expect_size += space.cardinality(i) - 1;
    o.require(t.size() == expect_size, "cross-dataset size");
    const std::vector<Eigen::Index> rows = data.set.rows_in(t);
    std::vector<ConceptTuple> tuples;
    for (Eigen::Index r : rows) tuples.push_back(data.set.label(r));
    const EmbeddingSet sub =
        EmbeddingSet::FromTuples(space, tuples, data.set.data_double()(rows, Eigen::all));
    const FactorSet c = recover_by_least_squares(sub);
    worst_cross = std::max(worst_cross, (c.mean() - data.truth.mean()).cwiseAbs().maxCoeff());
    for (int i = 0; i < space.k(); ++i) {
      worst_cross = std::max(worst_cross, (c.factor(i) - data.truth.factor(i)).cwiseAbs().maxCoeff());
    }
  }
  o.require(worst_agree <= 1e-8, "averaging vs least squares");
  o.require(worst_cross <= 1e-8, "cross-dataset recovery");
  o.detail << "averaging vs lstsq " << worst_agree << ", cross-dataset vs truth " << worst_cross;
}

void metric_sanity(Outcome& o) {
  const FactorizedData data = generate_factorized(ConceptSpace({3, 4, 2}), 8, false, 1.0, 9);
  const FactorSet fit = recover_by_least_squares(data.set);
  const double exact = projected_whitened_r2(data.set, fit).r2;
  const Eigen::MatrixXd x = data.set.data_double();
  const double exact_ref = testing::reference_r2(x, fit.reconstruct_rows(data.set.labels()), nullptr, true);
  o.require(std::abs(exact - 1.0) <= 1e-9 && std::abs(exact_ref - 1.0) <= 1e-9, "R2 = 1 on factorized data");

  const SeparableCounterexample c = generate_separable_nonfactorized(8, 3);
  const Eigen::MatrixXd cz = c.set.data_double();
  const LabelMatrix predicted = argmax_labels(c.witness, cz);
  const bool witness_ok = predicted == c.set.labels();
  const FactorSet cfit = recover_by_least_squares(c.set);
  const Eigen::MatrixXd w = c.witness.stacked_weights();
  const double counter = projected_whitened_r2(c.set, cfit, &c.witness).r2;
  const double counter_ref = testing::reference_r2(cz, cfit.reconstruct_rows(c.set.labels()), &w, true);
  o.require(witness_ok, "witness accuracy 1.0");
  o.require(counter < 0.9 && std::abs(counter - counter_ref) < 1e-8, "counterexample R2 < 0.9");

  const EmbeddingSet noisy = generate_dominant_noise(8, 2);
  const FactorSet nfit = recover_by_least_squares(noisy);
  R2Options raw;
  raw.whiten = false;
  const double unwhitened = projected_whitened_r2(noisy, nfit, nullptr, raw).r2;
  const double whitened = projected_whitened_r2(noisy, nfit).r2;
  o.require(whitened < unwhitened, "whitened < unwhitened");
  o.detail << "factorized " << exact << "; counterexample " << counter << " (witness "
           << (witness_ok ? "exact" : "wrong") << "); dominant noise " << unwhitened << " -> " << whitened;
}

// Central differences of the loss value for every parameter and input.
double max_fd_error(ProbeBank bank, Eigen::MatrixXd z, const LabelMatrix& labels, Loss loss) {
  ProbeGradient g;
  Eigen::MatrixXd dz;
  loss_and_gradient(bank, z, labels, loss, &g, &dz);
  const double h = 1e-6;
  double worst = 0.0;
  auto check = [&](double& param, double analytic) {
    const double keep = param;
    param = keep + h;
    const double up = loss_and_gradient(bank, z, labels, loss);
    param = keep - h;
    const double down = loss_and_gradient(bank, z, labels, loss);
    param = keep;
    const double fd = (up - down) / (2 * h);
    worst = std::max(worst, std::abs(fd - analytic) / std::max({std::abs(fd), std::abs(analytic), 1e-3}));
  };
  for (int i = 0; i < bank.space.k(); ++i) {
    for (Eigen::Index j = 0; j < bank.weights[i].size(); ++j) check(bank.weights[i].data()[j], g.weights[i].data()[j]);
    for (Eigen::Index j = 0; j < bank.biases[i].size(); ++j) check(bank.biases[i](j), g.biases[i](j));
  }
  if (bank.geometry == Geometry::kSpherical) check(bank.log_temperature, g.log_temperature);
  for (Eigen::Index j = 0; j < z.size(); ++j) check(z.data()[j], dz.data()[j]);
  return worst;
}

void gradients(Outcome& o) {
  std::mt19937_64 rng(77);
  double worst = 0.0;
  int instances = 0;
  for (int t = 0; t < 20; ++t) {
    const ConceptSpace space({2 + t % 3, 2 + (t / 3) % 2});
    const int d = 2 + t % 4;
    const auto tuples = space.enumerate();
    LabelMatrix labels(tuples.size(), space.k());
    for (std::size_t r = 0; r < tuples.size(); ++r) {
      for (int i = 0; i < space.k(); ++i) labels(static_cast<Eigen::Index>(r), i) = static_cast<std::uint16_t>(tuples[r][i]);
    }
    const Eigen::MatrixXd z = gaussian_matrix(static_cast<int>(tuples.size()), d, rng);
    for (Geometry g : {Geometry::kEuclidean, Geometry::kSpherical}) {
      ProbeBank bank = ProbeBank::Init(space, d, g);
      for (int i = 0; i < space.k(); ++i) {
        bank.weights[i] = gaussian_matrix(space.cardinality(i), d, rng);
        bank.biases[i] = gaussian_matrix(space.cardinality(i), 1, rng).col(0);
      }
      if (g == Geometry::kSpherical) bank.log_temperature = 0.5;
      for (Loss loss : {Loss::kCrossEntropy, Loss::kBinaryCrossEntropy}) {
        worst = std::max(worst, max_fd_error(bank, z, labels, loss));
      }
    }
    ++instances;
  }
  o.require(worst <= 1e-4, "max relative error <= 1e-4");
  o.detail << instances << " instances x {ce,bce} x {euclidean,spherical}, max relative error " << worst;
}

void onoff_reconstruction(Outcome& o) {
  double worst_pattern = 0.0;
  double worst_delta = 0.0;
  int cases = 0;
  for (int k = 1; k <= 4; ++k) {
    for (int n = 2; n <= 4; ++n) {
      for (auto [alpha, beta] : {std::pair{1.0, 0.0}, std::pair{2.0, -0.5}, std::pair{3.0, 1.0}}) {
        if (alpha == -beta * (n - 1)) continue;
        const OnOffSpec spec(k, n, alpha, beta);
        const OnOffConstruction c = onoff_construction(spec);
        const OnOffReconstruction r = onoff_additive_reconstruction(c.probes, c.set, spec, 1e-9);
        const Eigen::MatrixXd w = c.probes.stacked_weights();
        const Eigen::MatrixXd rec = r.factors.reconstruct_rows(c.set.labels());
        const Eigen::MatrixXd scores = w * rec.transpose();
        const Eigen::MatrixXd target = onoff_matrix(spec);
        worst_pattern = std::max(worst_pattern, (scores - target).cwiseAbs().maxCoeff());
        const Eigen::VectorXd mean_scores = w * c.set.data_double().colwise().mean().transpose();
        worst_delta = std::max(worst_delta, (mean_scores.array() - (alpha + (n - 1) * beta) / n).abs().maxCoeff());
        ++cases;
      }
    }
  }
  o.require(worst_pattern <= 1e-9, "pattern within 1e-9");
  o.require(worst_delta <= 1e-9, "delta within 1e-9");
  o.detail << cases << " constructions, pattern error " << worst_pattern << ", delta error " << worst_delta;
}

}  // namespace
}  // namespace cglab

int main() {
  using namespace cglab;
  const std::vector<Criterion> criteria{
      {1, "region counts", 30, region_counts},
      {2, "on-off rank", 10, onoff_ranks},
      {3, "packing construction", 10, packing},
      {4, "necessity", 60, necessity},
      {5, "sufficiency and stability", 120, sufficiency},
      {6, "min-dim scan", 1800, min_dim},
      {7, "factor recovery", 10, recovery},
      {8, "metric sanity", 30, metric_sanity},
      {9, "gradient checks", 30, gradients},
      {10, "on-off reconstruction", 10, onoff_reconstruction},
  };
  int failed = 0;
  for (const Criterion& c : criteria) {
    Outcome o;
    const auto start = std::chrono::steady_clock::now();
    try {
      c.body(o);
    } catch (const std::exception& e) {
      o.passed = false;
      o.detail << "exception: " << e.what();
    }
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (seconds > c.limit_seconds) {
      o.passed = false;
      o.detail << " [over the " << c.limit_seconds << " s budget]";
    }
    if (!o.passed) ++failed;
    std::string detail = o.detail.str();
    while (detail.ends_with("; ") || detail.ends_with(' ')) detail.erase(detail.size() - (detail.ends_with("; ") ? 2 : 1));
    std::cout << (o.passed ? "PASS" : "FAIL") << " criterion " << c.id << " (" << c.name << "): " << detail
              << " [" << seconds << " s]" << std::endl;
  }
  return failed == 0 ? 0 : 1;
}
