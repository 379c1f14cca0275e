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
#include "cglab/synthetic_lab.h"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <numeric>
#include <random>
#include <thread>

#include "cglab/error.h"
#include "cglab/linalg.h"

namespace cglab {

namespace {

// Dyadic grid fine enough for the generators yet coarse enough that sums of a
// few terms stay exact in f32.
constexpr double kQuantum = 1.0 / 4096.0;

double quantize(double x) { return std::round(x / kQuantum) * kQuantum; }

Eigen::MatrixXd quantize(const Eigen::MatrixXd& m) {
  return m.unaryExpr([](double x) { return quantize(x); });
}

// n x cols block with quantized rows summing exactly to zero.
Eigen::MatrixXd centered_block(int n, int cols, double scale, std::mt19937_64& rng) {
  Eigen::MatrixXd g = quantize(scale * gaussian_matrix(n, cols, rng));
  g.row(n - 1) = -g.topRows(n - 1).colwise().sum();
  return g;
}

Eigen::MatrixXd one_row_per_tuple(const EmbeddingSet& set) {
  const ConceptSpace& space = set.space();
  const auto size = static_cast<Eigen::Index>(space.grid_size());
  if (set.rows() != size) throw InvalidArgument("expected exactly one row per grid tuple");
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

LabelMatrix labels_of(const ConceptSpace& space, const std::vector<ConceptTuple>& tuples) {
  LabelMatrix labels(tuples.size(), space.k());
  for (std::size_t r = 0; r < tuples.size(); ++r) {
    for (int i = 0; i < space.k(); ++i) {
      labels(static_cast<Eigen::Index>(r), i) = static_cast<std::uint16_t>(tuples[r][i]);
    }
  }
  return labels;
}

}  // namespace

FactorizedData generate_factorized(const ConceptSpace& space, int d,
                                   bool orthogonal, double scale,
                                   std::uint64_t seed) {
  if (d < 1) throw InvalidArgument("dimension must be >= 1");
  if (!(scale > 0.0)) throw InvalidArgument("scale must be positive");
  const int needed = space.total_values() - space.k();
  if (orthogonal && d < needed) {
    throw InvalidArgument("orthogonal factors need d >= " + std::to_string(needed) +
                          ", got " + std::to_string(d));
  }
  std::mt19937_64 rng(seed);
  const Eigen::VectorXd mean = quantize(scale * gaussian_matrix(d, 1, rng)).col(0);
  std::vector<Eigen::MatrixXd> factors;
  if (orthogonal) {
    // Disjoint coordinate blocks under a random signed permutation, which keeps
    // the values exactly representable.
    std::vector<int> perm(d);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    std::bernoulli_distribution flip(0.5);
    int next = 0;
    for (int i = 0; i < space.k(); ++i) {
      const int n = space.cardinality(i);
      const Eigen::MatrixXd coeffs = centered_block(n, n - 1, scale, rng);
      Eigen::MatrixXd u = Eigen::MatrixXd::Zero(n, d);
      for (int c = 0; c < n - 1; ++c) {
        const double sign = flip(rng) ? -1.0 : 1.0;
        u.col(perm[next++]) = sign * coeffs.col(c);
      }
      factors.push_back(std::move(u));
    }
  } else {
    for (int n : space.cardinalities()) factors.push_back(centered_block(n, d, scale, rng));
  }
  FactorSet truth(space, mean, std::move(factors));
  const auto tuples = space.enumerate();
  Eigen::MatrixXd z(tuples.size(), d);
  for (std::size_t r = 0; r < tuples.size(); ++r) z.row(r) = truth.reconstruct(tuples[r]).transpose();
  EmbeddingSet set = EmbeddingSet::FromTuples(space, tuples, z);
  set.mutable_meta()["generator"] = orthogonal ? "factorized_orthogonal" : "factorized";
  set.mutable_meta()["seed"] = std::to_string(seed);
  return {std::move(set), std::move(truth)};
}

EmbeddingSet generate_unstable_binary(int k, int d, std::uint64_t seed) {
  if (d < k) throw InvalidArgument("unstable witness needs d >= k");
  const ConceptSpace space(std::vector<int>(k, 2));
  FactorizedData base = generate_factorized(space, d, true, 1.0, seed);
  double min_gap = std::numeric_limits<double>::infinity();
  for (int i = 0; i < k; ++i) {
    min_gap = std::min(min_gap, (base.truth.factor(i).row(1) - base.truth.factor(i).row(0)).norm());
  }
  std::mt19937_64 rng(mix_seed(seed, 7));
  Eigen::VectorXd dir = gaussian_matrix(d, 1, rng).col(0);
  dir *= 0.3 * min_gap / dir.norm();
  // Move the all-ones tuple only: its differences to every neighbor change.
  Eigen::MatrixXd z = base.set.data_double();
  z.row(z.rows() - 1) += quantize(dir).transpose();
  EmbeddingSet out = EmbeddingSet::FromTuples(space, space.enumerate(), z);
  out.mutable_meta()["generator"] = "unstable_binary";
  out.mutable_meta()["seed"] = std::to_string(seed);
  return out;
}

EmbeddingSet generate_dominant_noise(int n, std::uint64_t seed) {
  if (n < 2) throw InvalidArgument("need at least two values per concept");
  const ConceptSpace space({n, n});
  const auto tuples = space.enumerate();
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> noise(0.0, 1.0);
  const double center = (n - 1) / 2.0;
  Eigen::MatrixXd z(tuples.size(), 2);
  for (std::size_t r = 0; r < tuples.size(); ++r) {
    z(static_cast<Eigen::Index>(r), 0) = 3.0 * (tuples[r][0] - center) + noise(rng);
    z(static_cast<Eigen::Index>(r), 1) = 0.3 * (tuples[r][1] - center) + noise(rng);
  }
  EmbeddingSet set = EmbeddingSet::FromTuples(space, tuples, z);
  set.mutable_meta()["generator"] = "dominant_noise";
  return set;
}

SeparableCounterexample generate_separable_nonfactorized(int n, std::uint64_t seed,
                                                         bool perturb) {
  if (n < 3) throw InvalidArgument("counterexample needs n >= 3");
  const ConceptSpace space({n, n});
  const auto tuples = space.enumerate();
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> jitter(-0.3, 0.3);
  std::uniform_real_distribution<double> reach(1.0, 2.0);
  std::bernoulli_distribution pushed(0.5);

  // Cell (a, b) is |x - a| < 1/2 by |y - b| < 1/2, with the outer cells
  // unbounded. Points of outer cells may move arbitrarily far outward.
  Eigen::MatrixXd z(tuples.size(), 2);
  for (std::size_t r = 0; r < tuples.size(); ++r) {
    const int a = tuples[r][0];
    const int b = tuples[r][1];
    double x = a;
    double y = b;
    if (perturb) {
      x += jitter(rng);
      y += jitter(rng);
      if (a == n - 1 && pushed(rng)) x += 2.0 * n * reach(rng);
      if (b == n - 1 && pushed(rng)) y += 2.0 * n * reach(rng);
    }
    z(static_cast<Eigen::Index>(r), 0) = x;
    z(static_cast<Eigen::Index>(r), 1) = y;
  }
  // Nearest-integer readouts: argmax_j 2 j x - j^2 = argmin_j |x - j|.
  ProbeBank witness = ProbeBank::Init(space, 2, Geometry::kEuclidean);
  for (int i = 0; i < 2; ++i) {
    for (int j = 0; j < n; ++j) {
      witness.weights[i](j, i) = 2.0 * j;
      witness.biases[i](j) = -static_cast<double>(j) * j;
    }
  }
  EmbeddingSet set = EmbeddingSet::FromTuples(space, tuples, z);
  set.mutable_meta()["generator"] = perturb ? "separable_nonfactorized" : "separable_grid";
  return {std::move(set), std::move(witness)};
}

Construction generate_lrh_grid(int k, int n, int d,
                               std::vector<std::vector<double>> coefficients,
                               std::uint64_t seed, const Eigen::MatrixXd& directions) {
  if (k < 1 || n < 2) throw InvalidArgument("grid needs k >= 1 and n >= 2");
  if (d < k) throw InvalidArgument("grid needs d >= k");
  const ConceptSpace space(std::vector<int>(k, n));
  if (coefficients.empty()) {
    std::vector<double> ramp(n);
    std::iota(ramp.begin(), ramp.end(), 0.0);
    coefficients.assign(k, ramp);
  }
  if (static_cast<int>(coefficients.size()) != k) throw InvalidArgument("need coefficients per concept");
  for (const auto& c : coefficients) {
    if (static_cast<int>(c.size()) != n) throw InvalidArgument("need n coefficients per concept");
    std::vector<double> sorted = c;
    std::sort(sorted.begin(), sorted.end());
    if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
      throw InvalidArgument("duplicate coefficients within a concept");
    }
  }
  Eigen::MatrixXd dirs = directions;
  if (dirs.size() == 0) {
    std::mt19937_64 rng(seed);
    dirs = random_orthonormal(d, k, rng);
  }
  if (dirs.rows() != d || dirs.cols() != k) throw InvalidArgument("directions must be d x k");

  const auto tuples = space.enumerate();
  Eigen::MatrixXd z = Eigen::MatrixXd::Zero(tuples.size(), d);
  for (std::size_t r = 0; r < tuples.size(); ++r) {
    for (int i = 0; i < k; ++i) {
      z.row(static_cast<Eigen::Index>(r)) += coefficients[i][tuples[r][i]] * dirs.col(i).transpose();
    }
  }
  ProbeBank probes = ProbeBank::Init(space, d, Geometry::kEuclidean);
  for (int i = 0; i < k; ++i) {
    Eigen::MatrixXd proto = Eigen::MatrixXd::Zero(n, d);
    Eigen::VectorXd counts = Eigen::VectorXd::Zero(n);
    for (std::size_t r = 0; r < tuples.size(); ++r) {
      proto.row(tuples[r][i]) += z.row(static_cast<Eigen::Index>(r));
      counts(tuples[r][i]) += 1.0;
    }
    proto = counts.cwiseInverse().asDiagonal() * proto;
    probes.weights[i] = 2.0 * proto;
    probes.biases[i] = -proto.rowwise().squaredNorm();
  }
  return {EmbeddingSet::FromTuples(space, tuples, z), std::move(probes)};
}

LabRun train_free_embeddings(const ConceptSpace& space, int d,
                             const FreeTrainConfig& config) {
  if (d < 1) throw InvalidArgument("dimension must be >= 1");
  TrainConfig tc;
  tc.loss = config.loss;
  tc.geometry = config.geometry;
  tc.epochs = config.epochs;
  tc.lr = config.lr;
  tc.seed = config.seed;
  tc.validate();

  std::vector<ConceptTuple> tuples;
  bool sampled = false;
  if (space.grid_size() > config.grid_cap) {
    if (!config.allow_sampling) {
      throw InvalidArgument("grid of " + std::to_string(space.grid_size()) +
                            " tuples exceeds the cap of " + std::to_string(config.grid_cap));
    }
    tuples = sample_support(space, SupportRule::FixedSize(config.grid_cap),
                            mix_seed(config.seed, 3))
                 .tuples();
    sampled = true;
  } else {
    tuples = space.enumerate();
  }
  const LabelMatrix labels = labels_of(space, tuples);

  std::mt19937_64 rng(mix_seed(config.seed, 1));
  Eigen::MatrixXd z = gaussian_matrix(static_cast<int>(tuples.size()), d, rng);
  ProbeBank bank = ProbeBank::Init(space, d, config.geometry, mix_seed(config.seed, 2));

  const int k = space.k();
  std::vector<AdamSlot> w_slots(k), b_slots(k);
  AdamSlot t_slot, z_slot;
  std::vector<double> history;
  history.reserve(config.epochs);
  ProbeGradient g;
  Eigen::MatrixXd dz;
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    const double loss = loss_and_gradient(bank, z, labels, config.loss, &g, &dz);
    if (!std::isfinite(loss)) {
      throw NumericalError("free-embedding training diverged at epoch " + std::to_string(epoch));
    }
    history.push_back(loss);
    const double lr = cosine_lr(config.lr, epoch, config.epochs);
    const int t = epoch + 1;
    for (int i = 0; i < k; ++i) {
      w_slots[i].step(bank.weights[i], g.weights[i], lr, t, tc);
      Eigen::MatrixXd b = bank.biases[i];
      b_slots[i].step(b, g.biases[i], lr, t, tc);
      bank.biases[i] = b;
    }
    z_slot.step(z, dz, lr, t, tc);
    if (config.geometry == Geometry::kSpherical) {
      Eigen::MatrixXd lt(1, 1);
      lt(0, 0) = bank.log_temperature;
      Eigen::MatrixXd gt(1, 1);
      gt(0, 0) = g.log_temperature;
      t_slot.step(lt, gt, lr, t, tc);
      bank.log_temperature = lt(0, 0);
      bank.normalize_weights();
      z = z.rowwise().normalized();
    }
  }
  LabRun run{d, config, EmbeddingSet::FromTuples(space, tuples, z), bank, std::move(history),
             accuracy(bank, z, labels), sampled};
  run.embeddings.mutable_meta()["generator"] = "free_embeddings";
  return run;
}

const MinDimCell& MinDimTable::cell(int k, int n) const {
  for (const auto& c : cells) {
    if (c.k == k && c.n == n) return c;
  }
  throw InvalidArgument("no scan cell for k=" + std::to_string(k) + ", n=" + std::to_string(n));
}

MinDimTable min_dim_scan(const MinDimConfig& config) {
  if (config.ks.empty() || config.ns.empty()) throw InvalidArgument("scan lists must be non-empty");
  if (config.restarts < 1 || config.d_max < 1) throw InvalidArgument("need restarts, d_max >= 1");
  MinDimTable table;
  table.config = config;
  for (int k : config.ks) {
    for (int n : config.ns) {
      MinDimCell c;
      c.k = k;
      c.n = n;
      table.cells.push_back(c);
    }
  }
  auto run_cell = [&](MinDimCell& cell) {
    const ConceptSpace space(std::vector<int>(cell.k, cell.n));
    for (int d = 1; d <= config.d_max; ++d) {
      double best_mean = 0.0;
      double best_min = 0.0;
      bool success = false;
      for (int r = 0; r < config.restarts && !success; ++r) {
        FreeTrainConfig fc = config.train;
        const std::uint64_t stream =
            (static_cast<std::uint64_t>(cell.k) << 48) ^ (static_cast<std::uint64_t>(cell.n) << 32) ^
            (static_cast<std::uint64_t>(d) << 16) ^ static_cast<std::uint64_t>(r);
        fc.seed = mix_seed(config.train.seed, stream);
        fc.allow_sampling = true;
        const LabRun run = train_free_embeddings(space, d, fc);
        cell.approximate = cell.approximate || run.sampled_grid;
        best_mean = std::max(best_mean, run.accuracy.mean);
        best_min = std::max(best_min, run.accuracy.min);
        success = run.accuracy.mean >= config.success;
      }
      cell.best_mean_accuracy.push_back(best_mean);
      cell.best_min_accuracy.push_back(best_min);
      if (success) {
        cell.min_dim = d;
        break;
      }
    }
    cell.bound_holds = !cell.min_dim || *cell.min_dim >= cell.k;
  };

  const int jobs = std::max(1, std::min<int>(config.jobs, static_cast<int>(table.cells.size())));
  if (jobs == 1) {
    for (auto& cell : table.cells) run_cell(cell);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::exception_ptr> errors(jobs);
    std::vector<std::thread> workers;
    for (int w = 0; w < jobs; ++w) {
      workers.emplace_back([&, w] {
        try {
          for (std::size_t c = next++; c < table.cells.size(); c = next++) run_cell(table.cells[c]);
        } catch (...) {
          errors[w] = std::current_exception();
        }
      });
    }
    for (auto& t : workers) t.join();
    for (auto& e : errors) {
      if (e) std::rethrow_exception(e);
    }
  }
  return table;
}

const char* to_string(Readout readout) {
  return readout == Readout::kSvm ? "svm" : "gd";
}

Readout parse_readout(const std::string& name) {
  if (name == "svm") return Readout::kSvm;
  if (name == "gd") return Readout::kGradientDescent;
  throw InvalidArgument("unknown readout '" + name + "' (expected svm or gd)");
}

StabilityReport stability_experiment(const EmbeddingSet& set,
                                     const StabilityConfig& config) {
  const ConceptSpace& space = set.space();
  if (!space.is_binary()) throw InvalidArgument("stability experiment needs a binary space");
  if (config.trials < 2) throw InvalidArgument("stability experiment needs at least two trials");
  const Eigen::MatrixXd z = one_row_per_tuple(set);
  const auto tuples = space.enumerate();
  const LabelMatrix grid_labels = labels_of(space, tuples);
  const int k = space.k();

  std::vector<TrainingSupport> supports;
  if (config.rule == SupportRule::Kind::kBinaryMajority) {
    for (int t = 0; t < config.trials; ++t) {
      supports.push_back(binary_majority_support(space, mix_seed(config.seed, t)));
    }
  } else if (config.rule == SupportRule::Kind::kCrossAt) {
    std::vector<std::size_t> order(tuples.size());
    std::iota(order.begin(), order.end(), 0);
    std::mt19937_64 rng(config.seed);
    std::shuffle(order.begin(), order.end(), rng);
    const std::size_t count = std::min<std::size_t>(config.trials, tuples.size());
    for (std::size_t t = 0; t < count; ++t) supports.push_back(cross_dataset(space, tuples[order[t]]));
  } else {
    throw InvalidArgument("stability supports must be cross or majority");
  }

  StabilityReport rep;
  std::vector<Eigen::MatrixXd> posteriors;          // grid x k, P(value 1)
  std::vector<std::vector<Eigen::VectorXd>> dirs;  // per support, per concept
  for (const auto& support : supports) {
    Eigen::MatrixXd pts(support.size(), z.cols());
    for (std::size_t r = 0; r < support.size(); ++r) {
      pts.row(r) = z.row(static_cast<Eigen::Index>(space.index_of(support.tuples()[r])));
    }
    ProbeBank bank = ProbeBank::Init(space, set.dim(), Geometry::kEuclidean);
    if (config.readout == Readout::kSvm) {
      std::vector<SvmSolution> sols;
      try {
        for (int i = 0; i < k; ++i) sols.push_back(concept_svm(pts, support.tuples(), i));
      } catch (const NumericalError&) {
        ++rep.non_separable;
        continue;
      }
      bank = svm_probe_bank(space, sols);
    } else {
      bank = train_probes_on(space, pts, labels_of(space, support.tuples()), config.gd).bank;
    }
    Eigen::MatrixXd post(tuples.size(), k);
    std::vector<Eigen::VectorXd> d(k);
    for (int i = 0; i < k; ++i) {
      post.col(i) = softmax_rows(bank.logits(i, z)).col(1);
      d[i] = (bank.weights[i].row(1) - bank.weights[i].row(0)).transpose();
    }
    rep.min_accuracy.push_back(accuracy(bank, z, grid_labels).min);
    posteriors.push_back(std::move(post));
    dirs.push_back(std::move(d));
  }
  rep.supports = static_cast<int>(posteriors.size());
  rep.min_direction_cosine.assign(k, 1.0);
  for (std::size_t a = 0; a < posteriors.size(); ++a) {
    for (std::size_t b = a + 1; b < posteriors.size(); ++b) {
      rep.max_posterior_tv =
          std::max(rep.max_posterior_tv, (posteriors[a] - posteriors[b]).cwiseAbs().maxCoeff());
      for (int i = 0; i < k; ++i) {
        rep.min_direction_cosine[i] = std::min(rep.min_direction_cosine[i], cosine(dirs[a][i], dirs[b][i]));
      }
    }
  }
  return rep;
}

}  // namespace cglab
