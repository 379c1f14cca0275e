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
#include "cglab/probe_trainer.h"

#include <charconv>
#include <cmath>
#include <numbers>
#include <random>
#include <unordered_set>

#include "cglab/error.h"
#include "cglab/linalg.h"

namespace cglab {

namespace fs = std::filesystem;

namespace {

// log(1 + exp(x)) without overflow.
double softplus(double x) { return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x))); }

double sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

Eigen::VectorXd safe_row_norms(const Eigen::MatrixXd& m) {
  Eigen::VectorXd n = m.rowwise().norm();
  for (Eigen::Index r = 0; r < n.size(); ++r) {
    if (n(r) == 0.0) n(r) = 1.0;
  }
  return n;
}

void check_labels(const ProbeBank& bank, const Eigen::MatrixXd& z,
                  const LabelMatrix& labels) {
  if (z.cols() != bank.dim()) throw InvalidArgument("embedding dimension differs from probes");
  if (labels.rows() != z.rows() || labels.cols() != bank.space.k()) {
    throw InvalidArgument("labels do not match the embedding rows");
  }
}

}  // namespace

const char* to_string(Loss loss) {
  return loss == Loss::kCrossEntropy ? "ce" : "bce";
}

const char* to_string(Geometry geometry) {
  return geometry == Geometry::kEuclidean ? "euclidean" : "spherical";
}

Loss parse_loss(const std::string& name) {
  if (name == "ce") return Loss::kCrossEntropy;
  if (name == "bce") return Loss::kBinaryCrossEntropy;
  throw InvalidArgument("unknown loss '" + name + "' (expected ce or bce)");
}

Geometry parse_geometry(const std::string& name) {
  if (name == "euclidean") return Geometry::kEuclidean;
  if (name == "spherical") return Geometry::kSpherical;
  throw InvalidArgument("unknown geometry '" + name + "' (expected euclidean or spherical)");
}

ProbeBank ProbeBank::Init(const ConceptSpace& space, int d, Geometry geometry,
                          std::uint64_t seed) {
  if (d < 1) throw InvalidArgument("probe dimension must be >= 1");
  ProbeBank bank{space, geometry, {}, {}, 0.0};
  std::mt19937_64 rng(seed);
  for (int n : space.cardinalities()) {
    if (geometry == Geometry::kSpherical) {
      bank.weights.push_back(gaussian_matrix(n, d, rng));
    } else {
      bank.weights.push_back(Eigen::MatrixXd::Zero(n, d));
    }
    bank.biases.push_back(Eigen::VectorXd::Zero(n));
  }
  if (geometry == Geometry::kSpherical) bank.normalize_weights();
  return bank;
}

double ProbeBank::temperature() const {
  return geometry == Geometry::kSpherical ? std::exp(log_temperature) : 1.0;
}

Eigen::MatrixXd ProbeBank::logits(int i, const Eigen::MatrixXd& z) const {
  if (z.cols() != dim()) throw InvalidArgument("embedding dimension differs from probes");
  if (geometry == Geometry::kEuclidean) {
    return (z * weights.at(i).transpose()).rowwise() + biases.at(i).transpose();
  }
  const Eigen::MatrixXd zn = safe_row_norms(z).cwiseInverse().asDiagonal() * z;
  const Eigen::MatrixXd wn =
      safe_row_norms(weights.at(i)).cwiseInverse().asDiagonal() * weights.at(i);
  return (temperature() * (zn * wn.transpose())).rowwise() + biases.at(i).transpose();
}

std::vector<Eigen::VectorXd> ProbeBank::score(const Eigen::VectorXd& z) const {
  std::vector<Eigen::VectorXd> out;
  const Eigen::MatrixXd row = z.transpose();
  for (int i = 0; i < space.k(); ++i) out.push_back(logits(i, row).row(0).transpose());
  return out;
}

Eigen::VectorXd ProbeBank::posterior(const Eigen::VectorXd& z, int i) const {
  return softmax_rows(logits(i, z.transpose())).row(0).transpose();
}

LabelMatrix ProbeBank::predict(const Eigen::MatrixXd& z) const {
  LabelMatrix out(z.rows(), space.k());
  for (int i = 0; i < space.k(); ++i) {
    const Eigen::MatrixXd h = logits(i, z);
    for (Eigen::Index r = 0; r < h.rows(); ++r) {
      Eigen::Index best = 0;
      for (Eigen::Index j = 1; j < h.cols(); ++j) {
        if (h(r, j) > h(r, best)) best = j;
      }
      out(r, i) = static_cast<std::uint16_t>(best);
    }
  }
  return out;
}

Eigen::MatrixXd ProbeBank::stacked_weights() const {
  Eigen::MatrixXd out(space.total_values(), dim());
  Eigen::Index r = 0;
  for (const auto& w : weights) {
    out.middleRows(r, w.rows()) = w;
    r += w.rows();
  }
  return out;
}

void ProbeBank::normalize_weights() {
  for (auto& w : weights) w = safe_row_norms(w).cwiseInverse().asDiagonal() * w;
}

void ProbeBank::validate() const {
  if (static_cast<int>(weights.size()) != space.k() ||
      static_cast<int>(biases.size()) != space.k()) {
    throw InvalidArgument("probe bank needs one block per concept");
  }
  for (int i = 0; i < space.k(); ++i) {
    if (weights[i].rows() != space.cardinality(i) || weights[i].cols() != dim() ||
        biases[i].size() != space.cardinality(i)) {
      throw InvalidArgument("probe block " + std::to_string(i) + " has the wrong shape");
    }
    if (geometry == Geometry::kSpherical &&
        (weights[i].rowwise().norm().array() - 1.0).abs().maxCoeff() > 1e-8) {
      throw InvalidArgument("spherical probe rows must be unit norm");
    }
  }
  if (!std::isfinite(log_temperature)) throw InvalidArgument("non-finite temperature");
}

Eigen::MatrixXd softmax_rows(const Eigen::MatrixXd& logits) {
  Eigen::MatrixXd p = logits.colwise() - logits.rowwise().maxCoeff();
  p = p.array().exp();
  return p.array().colwise() / p.rowwise().sum().array();
}

double loss_and_gradient(const ProbeBank& bank, const Eigen::MatrixXd& z,
                         const LabelMatrix& labels, Loss loss,
                         ProbeGradient* grad, Eigen::MatrixXd* dz) {
  check_labels(bank, z, labels);
  const Eigen::Index rows = z.rows();
  if (rows == 0) throw InvalidArgument("loss over zero rows");
  const bool spherical = bank.geometry == Geometry::kSpherical;
  const double tau = bank.temperature();
  const double inv_rows = 1.0 / static_cast<double>(rows);

  Eigen::VectorXd z_norms;
  Eigen::MatrixXd zn;
  if (spherical) {
    z_norms = safe_row_norms(z);
    zn = z_norms.cwiseInverse().asDiagonal() * z;
  }
  const Eigen::MatrixXd& zin = spherical ? zn : z;

  if (grad) {
    grad->weights.assign(bank.space.k(), Eigen::MatrixXd());
    grad->biases.assign(bank.space.k(), Eigen::VectorXd());
    grad->log_temperature = 0.0;
  }
  Eigen::MatrixXd dzin;
  if (dz) dzin = Eigen::MatrixXd::Zero(rows, z.cols());

  double total = 0.0;
  double dtau = 0.0;
  for (int i = 0; i < bank.space.k(); ++i) {
    const Eigen::MatrixXd& w = bank.weights[i];
    const Eigen::Index n = w.rows();
    Eigen::VectorXd w_norms;
    Eigen::MatrixXd wn;
    if (spherical) {
      w_norms = safe_row_norms(w);
      wn = w_norms.cwiseInverse().asDiagonal() * w;
    }
    const Eigen::MatrixXd& win = spherical ? wn : w;
    const Eigen::MatrixXd s = zin * win.transpose();
    const Eigen::MatrixXd h = (tau * s).rowwise() + bank.biases[i].transpose();

    Eigen::MatrixXd g(rows, n);
    if (loss == Loss::kCrossEntropy) {
      const Eigen::VectorXd mx = h.rowwise().maxCoeff();
      const Eigen::MatrixXd e = (h.colwise() - mx).array().exp();
      const Eigen::VectorXd sums = e.rowwise().sum();
      for (Eigen::Index r = 0; r < rows; ++r) {
        const int c = labels(r, i);
        total += mx(r) + std::log(sums(r)) - h(r, c);
        g.row(r) = e.row(r) / sums(r);
        g(r, c) -= 1.0;
      }
    } else {
      const double inv_n = 1.0 / static_cast<double>(n);
      for (Eigen::Index r = 0; r < rows; ++r) {
        const int c = labels(r, i);
        double row_loss = 0.0;
        for (Eigen::Index j = 0; j < n; ++j) {
          const double y = j == c ? 1.0 : 0.0;
          row_loss += j == c ? softplus(-h(r, j)) : softplus(h(r, j));
          g(r, j) = (sigmoid(h(r, j)) - y) * inv_n;
        }
        total += row_loss * inv_n;
      }
    }
    g *= inv_rows;

    if (grad) {
      Eigen::MatrixXd gw = tau * (g.transpose() * zin);
      if (spherical) {
        // Jacobian of w / |w|.
        for (Eigen::Index j = 0; j < n; ++j) {
          const double along = gw.row(j).dot(wn.row(j));
          gw.row(j) = (gw.row(j) - along * wn.row(j)) / w_norms(j);
        }
        dtau += (g.array() * s.array()).sum();
      }
      grad->weights[i] = std::move(gw);
      grad->biases[i] = g.colwise().sum().transpose();
    }
    if (dz) dzin += tau * (g * win);
  }
  if (grad && spherical) grad->log_temperature = tau * dtau;
  if (dz) {
    if (spherical) {
      for (Eigen::Index r = 0; r < rows; ++r) {
        const double along = dzin.row(r).dot(zn.row(r));
        dzin.row(r) = (dzin.row(r) - along * zn.row(r)) / z_norms(r);
      }
    }
    *dz = std::move(dzin);
  }
  return total * inv_rows;
}

namespace {

struct SupportRows {
  Eigen::MatrixXd z;
  LabelMatrix labels;
};

SupportRows select_rows(const EmbeddingSet& set, const TrainingSupport& support) {
  if (support.size() == 0) throw InvalidArgument("training support is empty");
  const auto rows = set.rows_in(support);
  // Every support tuple needs at least one row.
  std::unordered_set<std::uint64_t> seen;
  for (auto r : rows) seen.insert(set.space().index_of(set.label(r)));
  if (seen.size() != support.size()) {
    throw InvalidArgument("some support tuples have no embedding rows");
  }
  SupportRows out{Eigen::MatrixXd(rows.size(), set.dim()),
                  LabelMatrix(rows.size(), set.space().k())};
  for (std::size_t j = 0; j < rows.size(); ++j) {
    const auto r = static_cast<Eigen::Index>(j);
    out.z.row(r) = set.data().row(rows[j]).cast<double>();
    out.labels.row(r) = set.labels().row(rows[j]);
  }
  return out;
}

}  // namespace

double loss_value(const ProbeBank& bank, const EmbeddingSet& set,
                  const TrainingSupport& support, Loss loss) {
  const SupportRows s = select_rows(set, support);
  return loss_and_gradient(bank, s.z, s.labels, loss);
}

void TrainConfig::validate() const {
  if (epochs < 1) throw InvalidArgument("epochs must be >= 1");
  if (!(lr > 0.0)) throw InvalidArgument("learning rate must be positive");
  if (!(beta1 >= 0.0 && beta1 < 1.0 && beta2 >= 0.0 && beta2 < 1.0)) {
    throw InvalidArgument("Adam betas must lie in [0, 1)");
  }
  if (!(eps > 0.0)) throw InvalidArgument("Adam eps must be positive");
  if (direction_tol < 0.0) throw InvalidArgument("direction tolerance must be >= 0");
}

double cosine_lr(double lr, int epoch, int epochs) {
  return 0.5 * lr * (1.0 + std::cos(std::numbers::pi * epoch / epochs));
}

void AdamSlot::step(Eigen::MatrixXd& param, const Eigen::MatrixXd& grad,
                    double lr, int t, const TrainConfig& cfg) {
  if (m.size() == 0) {
    m = Eigen::MatrixXd::Zero(param.rows(), param.cols());
    v = Eigen::MatrixXd::Zero(param.rows(), param.cols());
  }
  m = cfg.beta1 * m + (1.0 - cfg.beta1) * grad;
  v = cfg.beta2 * v + (1.0 - cfg.beta2) * grad.cwiseAbs2();
  const double c1 = 1.0 - std::pow(cfg.beta1, t);
  const double c2 = 1.0 - std::pow(cfg.beta2, t);
  param.array() -= lr * (m.array() / c1) / ((v.array() / c2).sqrt() + cfg.eps);
}

// Euclidean probes train on inputs centered at the training mean and fold
// the shift into the biases at the end; the model class is unchanged. Without
// this, Adam moves weights on offset coordinates as fast as the biases.
TrainResult train_probes_on(const ConceptSpace& space, const Eigen::MatrixXd& z_in,
                            const LabelMatrix& labels, const TrainConfig& config) {
  config.validate();
  const bool center = config.geometry == Geometry::kEuclidean && z_in.rows() > 0;
  const Eigen::RowVectorXd shift =
      center ? Eigen::RowVectorXd(z_in.colwise().mean()) : Eigen::RowVectorXd::Zero(z_in.cols());
  const Eigen::MatrixXd z = z_in.rowwise() - shift;
  TrainResult result{ProbeBank::Init(space, static_cast<int>(z.cols()), config.geometry,
                                     config.seed),
                     {}, 0};
  ProbeBank& bank = result.bank;
  const int k = space.k();
  std::vector<AdamSlot> w_slots(k), b_slots(k);
  AdamSlot t_slot;
  std::vector<Eigen::MatrixXd> reference = bank.weights;
  result.loss_history.reserve(config.epochs);

  ProbeGradient g;
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    const double loss = loss_and_gradient(bank, z, labels, config.loss, &g);
    if (!std::isfinite(loss)) {
      throw NumericalError("probe training diverged at epoch " + std::to_string(epoch) +
                           " (loss " + std::to_string(loss) + ")");
    }
    result.loss_history.push_back(loss);
    const double lr = cosine_lr(config.lr, epoch, config.epochs);
    const int t = epoch + 1;
    for (int i = 0; i < k; ++i) {
      w_slots[i].step(bank.weights[i], g.weights[i], lr, t, config);
      Eigen::MatrixXd b = bank.biases[i];
      b_slots[i].step(b, g.biases[i], lr, t, config);
      bank.biases[i] = b;
    }
    if (config.geometry == Geometry::kSpherical) {
      Eigen::MatrixXd lt(1, 1);
      lt(0, 0) = bank.log_temperature;
      Eigen::MatrixXd gt(1, 1);
      gt(0, 0) = g.log_temperature;
      t_slot.step(lt, gt, lr, t, config);
      bank.log_temperature = lt(0, 0);
      bank.normalize_weights();
    }
    result.epochs_run = epoch + 1;
    if (config.direction_tol > 0.0 && t % 100 == 0) {
      double worst = 0.0;
      for (int i = 0; i < k; ++i) {
        const double na = bank.weights[i].norm();
        const double nb = reference[i].norm();
        const double cos =
            na > 0 && nb > 0 ? (bank.weights[i].array() * reference[i].array()).sum() / (na * nb)
                             : 0.0;
        worst = std::max(worst, 1.0 - cos);
      }
      if (worst < config.direction_tol) break;
      reference = bank.weights;
    }
  }
  if (center) {
    for (int i = 0; i < k; ++i) bank.biases[i] -= bank.weights[i] * shift.transpose();
  }
  return result;
}

TrainResult train_probes(const EmbeddingSet& set, const TrainingSupport& support,
                         const TrainConfig& config) {
  const SupportRows s = select_rows(set, support);
  return train_probes_on(set.space(), s.z, s.labels, config);
}

double gradient_check(const ProbeBank& bank, const EmbeddingSet& set,
                      const TrainingSupport& support, Loss loss, double step) {
  const SupportRows s = select_rows(set, support);
  ProbeGradient g;
  loss_and_gradient(bank, s.z, s.labels, loss, &g);

  double worst = 0.0;
  auto compare = [&](double analytic, double numeric) {
    const double denom = std::max({std::abs(analytic), std::abs(numeric), 1e-3});
    worst = std::max(worst, std::abs(analytic - numeric) / denom);
  };
  ProbeBank probe = bank;
  auto central = [&](double& param) {
    const double saved = param;
    param = saved + step;
    const double up = loss_and_gradient(probe, s.z, s.labels, loss);
    param = saved - step;
    const double down = loss_and_gradient(probe, s.z, s.labels, loss);
    param = saved;
    return (up - down) / (2.0 * step);
  };
  for (int i = 0; i < bank.space.k(); ++i) {
    for (Eigen::Index r = 0; r < probe.weights[i].rows(); ++r) {
      for (Eigen::Index c = 0; c < probe.weights[i].cols(); ++c) {
        compare(g.weights[i](r, c), central(probe.weights[i](r, c)));
      }
      compare(g.biases[i](r), central(probe.biases[i](r)));
    }
  }
  if (bank.geometry == Geometry::kSpherical) {
    compare(g.log_temperature, central(probe.log_temperature));
  }
  return worst;
}

AccuracyReport accuracy(const ProbeBank& bank, const Eigen::MatrixXd& z,
                        const LabelMatrix& labels) {
  check_labels(bank, z, labels);
  if (z.rows() == 0) throw InvalidArgument("accuracy over zero rows");
  const LabelMatrix pred = bank.predict(z);
  AccuracyReport out;
  out.rows = z.rows();
  out.min = 1.0;
  for (int i = 0; i < bank.space.k(); ++i) {
    const double acc =
        static_cast<double>((pred.col(i).array() == labels.col(i).array()).count()) /
        static_cast<double>(z.rows());
    out.per_concept.push_back(acc);
    out.mean += acc;
    out.min = std::min(out.min, acc);
  }
  out.mean /= bank.space.k();
  return out;
}

void write_probes(const ProbeBank& bank, const fs::path& dir) {
  bank.validate();
  Manifest m = open_or_create_manifest(dir, bank.space, bank.dim());
  m.erase_prefix("probes.");
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), bank.log_temperature);
  m.set("probes.geometry", to_string(bank.geometry));
  m.set("probes.log_temperature", std::string(buf, res.ptr));
  m.set("probes.rows", std::to_string(bank.space.total_values()));
  m.set("probes.dtype", "f32le");
  Eigen::MatrixXd biases(bank.space.total_values(), 1);
  Eigen::Index r = 0;
  for (const auto& b : bank.biases) {
    biases.middleRows(r, b.size()) = b;
    r += b.size();
  }
  write_f32(dir / "probe_weights.f32", bank.stacked_weights());
  write_f32(dir / "probe_biases.f32", biases);
  m.Write(dir);
}

ProbeBank read_probes(const fs::path& dir) {
  const Manifest m = Manifest::Read(dir);
  const ConceptSpace space = manifest_space(m);
  const auto rows = m.get_int("probes.rows");
  if (rows != space.total_values()) throw FormatError("probe row count mismatch");
  const auto d = m.get_int("d");
  ProbeBank bank{space, parse_geometry(m.get("probes.geometry")), {}, {}, 0.0};
  const std::string& lt = m.get("probes.log_temperature");
  auto [ptr, ec] = std::from_chars(lt.data(), lt.data() + lt.size(), bank.log_temperature);
  if (ec != std::errc() || ptr != lt.data() + lt.size()) {
    throw FormatError("bad probes.log_temperature '" + lt + "'");
  }
  const Eigen::MatrixXd w = read_f32(dir / "probe_weights.f32", rows, d);
  const Eigen::MatrixXd b = read_f32(dir / "probe_biases.f32", rows, 1);
  Eigen::Index r = 0;
  for (int n : space.cardinalities()) {
    bank.weights.push_back(w.middleRows(r, n));
    bank.biases.push_back(b.middleRows(r, n).col(0));
    r += n;
  }
  // f32 storage perturbs unit norms in the last bits.
  if (bank.geometry == Geometry::kSpherical) bank.normalize_weights();
  bank.validate();
  return bank;
}

}  // namespace cglab
