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

#include "cli.h"

#include <charconv>
#include <filesystem>
#include <fstream>
#include <memory>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "cglab/concept_space.h"
#include "cglab/embedding_store.h"
#include "cglab/error.h"
#include "cglab/factor_model.h"
#include "cglab/metrics.h"
#include "cglab/probe_trainer.h"
#include "cglab/synthetic_lab.h"
#include "cglab/theory_oracles.h"
#include "report.h"
#include "verify_suite.h"

namespace cglab::cli {

namespace {

namespace fs = std::filesystem;

// ---------------------------------------------------------------------------
// Option plumbing shared by every subcommand.

struct CommonOptions {
  std::uint64_t seed = 0;
  std::string report;
  std::string csv;
  std::string config;
};

void add_common(CLI::App* sub, CommonOptions& c, const char* csv_help) {
  sub->add_option("--seed", c.seed, "Random seed (default from CGLAB_SEED, else 0)")
      ->envname("CGLAB_SEED");
  sub->add_option("--report", c.report, "Write the JSON report to this file");
  if (csv_help) sub->add_option("--csv", c.csv, csv_help);
  sub->add_option("--config", c.config, "JSON object of option values; flags take precedence");
}

bool is_flag(const CLI::Option* opt) { return opt->get_expected_max() == 0; }

bool is_list(const CLI::Option* opt) { return opt->get_items_expected_max() > 1; }

Json typed_scalar(const std::string& s) {
  if (s == "true") return true;
  if (s == "false") return false;
  long long i = 0;
  auto [pi, ei] = std::from_chars(s.data(), s.data() + s.size(), i);
  if (ei == std::errc() && pi == s.data() + s.size() && !s.empty()) return i;
  double d = 0.0;
  auto [pd, ed] = std::from_chars(s.data(), s.data() + s.size(), d);
  if (ed == std::errc() && pd == s.data() + s.size() && !s.empty()) return d;
  return s;
}

// Every option of the subcommand with its effective value.
Json resolved_config(const CLI::App* sub) {
  Json cfg = Json::object();
  for (const CLI::Option* opt : sub->get_options()) {
    if (opt->get_lnames().empty()) continue;
    const std::string& name = opt->get_lnames().front();
    if (name == "help") continue;
    if (is_flag(opt)) {
      cfg[name] = opt->count() > 0;
      continue;
    }
    std::vector<std::string> values;
    if (opt->count() > 0) {
      values = opt->results();
    } else {
      std::string def = opt->get_default_str();
      if (is_list(opt)) {
        if (def.size() >= 2 && def.front() == '[' && def.back() == ']') def = def.substr(1, def.size() - 2);
        std::stringstream ss(def);
        for (std::string item; std::getline(ss, item, ',');) {
          if (!item.empty()) values.push_back(item);
        }
      } else {
        values.push_back(def);
      }
    }
    if (is_list(opt)) {
      Json arr = Json::array();
      for (const auto& v : values) arr.push_back(typed_scalar(v));
      cfg[name] = arr;
    } else {
      cfg[name] = values.empty() ? Json(nullptr) : typed_scalar(values.back());
    }
  }
  return cfg;
}

bool given_on_command_line(const std::vector<std::string>& args, const std::string& flag) {
  for (const auto& a : args) {
    if (a == flag || a.starts_with(flag + "=")) return true;
  }
  return false;
}

// Appends config-file values as flags for every option not given explicitly.
void inject_config(CLI::App& app, std::vector<std::string>& args) {
  std::string path;
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) path = args[i + 1];
    if (args[i].starts_with("--config=")) path = args[i].substr(9);
  }
  if (path.empty()) return;
  CLI::App* sub = nullptr;
  for (const auto& a : args) {
    if (!a.starts_with("-")) {
      sub = app.get_subcommand_no_throw(a);
      break;
    }
  }
  if (!sub) return;
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file " + path);
  Json cfg;
  try {
    in >> cfg;
  } catch (const Json::parse_error& e) {
    throw InvalidArgument("config file " + path + " is not valid JSON");
  }
  if (!cfg.is_object()) throw InvalidArgument("config file must hold a JSON object");
  std::vector<std::string> extra;
  for (const auto& [key, value] : cfg.items()) {
    const std::string flag = "--" + key;
    const CLI::Option* opt = sub->get_option_no_throw(flag);
    if (!opt || key == "config" || key == "help") {
      throw InvalidArgument("unknown config key '" + key + "' for " + sub->get_name());
    }
    if (given_on_command_line(args, flag)) continue;
    if (is_flag(opt)) {
      if (!value.is_boolean()) throw InvalidArgument("config key '" + key + "' must be a boolean");
      if (value.get<bool>()) extra.push_back(flag);
      continue;
    }
    std::string text;
    if (value.is_array()) {
      for (const auto& item : value) {
        if (!text.empty()) text += ',';
        text += item.is_string() ? item.get<std::string>() : item.dump();
      }
    } else if (value.is_string()) {
      text = value.get<std::string>();
    } else {
      text = value.dump();
    }
    extra.push_back(flag + "=" + text);
  }
  args.insert(args.end(), extra.begin(), extra.end());
}

// Report goes to --report when given, otherwise to out.
void emit_report(const ExperimentReport& report, const CommonOptions& c, std::ostream& out) {
  if (!c.report.empty()) {
    report.write(c.report);
  } else {
    out << report.to_json().dump(2) << '\n';
  }
}

void emit_csv(const CsvTable& table, const std::string& path) {
  if (!path.empty()) table.write(fs::path(path));
}

ExperimentReport start_report(const CLI::App* sub, const CommonOptions& c) {
  ExperimentReport r;
  r.command = sub->get_name();
  r.config = resolved_config(sub);
  r.seed = c.seed;
  return r;
}

Json to_json(const AccuracyReport& a) {
  return {{"per_concept", a.per_concept}, {"mean", a.mean}, {"min", a.min}, {"rows", a.rows}};
}

Json loss_summary(const std::vector<double>& history) {
  if (history.empty()) return {{"initial", nullptr}, {"final", nullptr}};
  return {{"initial", history.front()}, {"final", history.back()}};
}

CsvTable loss_table(const std::vector<double>& history) {
  CsvTable t({"epoch", "loss"});
  for (std::size_t e = 0; e < history.size(); ++e) {
    t.add_row({std::to_string(e), format_double(history[e])});
  }
  return t;
}

FactorSet recover(const EmbeddingSet& set, const std::string& method, double rel_tol,
                  std::string* used) {
  std::string m = method;
  if (m == "auto") m = has_balanced_counts(set) ? "averaging" : "lstsq";
  if (used) *used = m;
  return m == "averaging" ? recover_by_averaging(set) : recover_by_least_squares(set, rel_tol);
}

bool dump_has_probes(const fs::path& dir) { return Manifest::Read(dir).has("probes.rows"); }

// ---------------------------------------------------------------------------
// synth-train

struct SynthOptions {
  CommonOptions common;
  int k = 2;
  int n = 2;
  int d = 2;
  std::string loss = "ce";
  std::string geometry = "euclidean";
  int epochs = 5000;
  double lr = 0.1;
  std::uint64_t grid_cap = 100'000;
  bool allow_sampling = false;
  std::string write_dump;
};

void add_synth(CLI::App& app, SynthOptions& o) {
  CLI::App* s = app.add_subcommand("synth-train", "Train free embeddings and probes jointly");
  add_common(s, o.common, "Write the loss history CSV to this file");
  s->add_option("--k", o.k, "Number of concepts");
  s->add_option("--n", o.n, "Values per concept");
  s->add_option("--d", o.d, "Embedding dimension");
  s->add_option("--loss", o.loss, "ce or bce")->check(CLI::IsMember({"ce", "bce"}));
  s->add_option("--geometry", o.geometry, "euclidean or spherical")
      ->check(CLI::IsMember({"euclidean", "spherical"}));
  s->add_option("--epochs", o.epochs, "Full-batch epochs");
  s->add_option("--lr", o.lr, "Peak learning rate");
  s->add_option("--grid-cap", o.grid_cap, "Largest grid trained in full");
  s->add_flag("--allow-sampling", o.allow_sampling, "Sample grid-cap tuples from larger grids");
  s->add_option("--write-dump", o.write_dump, "Write embeddings and probes as a dump directory");
}

int run_synth(const CLI::App* sub, const SynthOptions& o, std::ostream& out) {
  ExperimentReport report = start_report(sub, o.common);
  const ConceptSpace space(std::vector<int>(o.k, o.n));
  FreeTrainConfig fc;
  fc.loss = parse_loss(o.loss);
  fc.geometry = parse_geometry(o.geometry);
  fc.epochs = o.epochs;
  fc.lr = o.lr;
  fc.seed = o.common.seed;
  fc.grid_cap = o.grid_cap;
  fc.allow_sampling = o.allow_sampling;
  std::optional<LabRun> run;
  {
    StageTimer t(report, "train");
    run.emplace(train_free_embeddings(space, o.d, fc));
  }
  report.results = {{"space", space.to_string()},
                    {"d", o.d},
                    {"accuracy", to_json(run->accuracy)},
                    {"loss", loss_summary(run->loss_history)},
                    {"sampled_grid", run->sampled_grid}};
  if (!o.write_dump.empty()) {
    StageTimer t(report, "write_dump");
    write_dump(run->embeddings, o.write_dump);
    write_probes(run->probes, o.write_dump);
  }
  emit_csv(loss_table(run->loss_history), o.common.csv);
  emit_report(report, o.common, out);
  return kExitOk;
}

// ---------------------------------------------------------------------------
// min-dim-scan

struct ScanOptions {
  CommonOptions common;
  std::vector<int> ks{2, 3, 4};
  std::vector<int> ns{2, 6};
  std::string loss = "ce";
  std::string geometry = "euclidean";
  int restarts = 3;
  int d_max = 32;
  int epochs = 5000;
  double lr = 0.1;
  double success = 0.99;
  std::uint64_t grid_cap = 100'000;
  int jobs = 1;
  std::string curve_csv;
};

void add_scan(CLI::App& app, ScanOptions& o) {
  CLI::App* s = app.add_subcommand("min-dim-scan", "Scan the smallest dimension reaching the success criterion");
  add_common(s, o.common, "Write the table CSV here instead of stdout");
  s->add_option("--k", o.ks, "Comma-separated concept counts")->delimiter(',');
  s->add_option("--n", o.ns, "Comma-separated values per concept")->delimiter(',');
  s->add_option("--loss", o.loss, "ce or bce")->check(CLI::IsMember({"ce", "bce"}));
  s->add_option("--geometry", o.geometry, "euclidean or spherical")
      ->check(CLI::IsMember({"euclidean", "spherical"}));
  s->add_option("--restarts", o.restarts, "Restarts per (k, n, d)");
  s->add_option("--d-max", o.d_max, "Largest dimension tried");
  s->add_option("--epochs", o.epochs, "Full-batch epochs per run");
  s->add_option("--lr", o.lr, "Peak learning rate");
  s->add_option("--success", o.success, "Mean per-concept accuracy counted as success");
  s->add_option("--grid-cap", o.grid_cap, "Grids above this size are sampled");
  s->add_option("--jobs", o.jobs, "Worker threads over cells");
  s->add_option("--curve-csv", o.curve_csv, "Write per-dimension accuracy curves to this file");
}

int run_scan(const CLI::App* sub, const ScanOptions& o, std::ostream& out, std::ostream& err) {
  ExperimentReport report = start_report(sub, o.common);
  MinDimConfig cfg;
  cfg.ks = o.ks;
  cfg.ns = o.ns;
  cfg.restarts = o.restarts;
  cfg.d_max = o.d_max;
  cfg.success = o.success;
  cfg.jobs = o.jobs;
  cfg.train.loss = parse_loss(o.loss);
  cfg.train.geometry = parse_geometry(o.geometry);
  cfg.train.epochs = o.epochs;
  cfg.train.lr = o.lr;
  cfg.train.seed = o.common.seed;
  cfg.train.grid_cap = o.grid_cap;
  std::optional<MinDimTable> table;
  {
    StageTimer t(report, "scan");
    table.emplace(min_dim_scan(cfg));
  }
  CsvTable csv({"k", "n", "loss", "geometry", "min_dim", "found", "best_mean_accuracy",
                "best_min_accuracy", "approximate", "bound_holds"});
  CsvTable curve({"k", "n", "d", "best_mean_accuracy", "best_min_accuracy"});
  Json cells = Json::array();
  bool bound_ok = true;
  for (const MinDimCell& c : table->cells) {
    bound_ok = bound_ok && c.bound_holds;
    const double mean = c.best_mean_accuracy.empty() ? 0.0 : c.best_mean_accuracy.back();
    const double min = c.best_min_accuracy.empty() ? 0.0 : c.best_min_accuracy.back();
    csv.add_row({std::to_string(c.k), std::to_string(c.n), o.loss, o.geometry,
                 c.min_dim ? std::to_string(*c.min_dim) : "", c.min_dim ? "true" : "false",
                 format_double(mean), format_double(min), c.approximate ? "true" : "false",
                 c.bound_holds ? "true" : "false"});
    for (std::size_t d = 0; d < c.best_mean_accuracy.size(); ++d) {
      curve.add_row({std::to_string(c.k), std::to_string(c.n), std::to_string(d + 1),
                     format_double(c.best_mean_accuracy[d]), format_double(c.best_min_accuracy[d])});
    }
    cells.push_back({{"k", c.k},
                     {"n", c.n},
                     {"min_dim", c.min_dim ? Json(*c.min_dim) : Json(nullptr)},
                     {"best_mean_accuracy", c.best_mean_accuracy},
                     {"best_min_accuracy", c.best_min_accuracy},
                     {"approximate", c.approximate},
                     {"bound_holds", c.bound_holds}});
  }
  report.results = {{"cells", cells}, {"bound_holds", bound_ok}};
  if (o.common.csv.empty()) {
    csv.write(out);
  } else {
    csv.write(fs::path(o.common.csv));
  }
  emit_csv(curve, o.curve_csv);
  if (!o.common.report.empty()) report.write(o.common.report);
  if (!bound_ok) {
    err << "cglab min-dim-scan: a cell succeeded below d = k\n";
    return kExitVerification;
  }
  return kExitOk;
}

// ---------------------------------------------------------------------------
// recover-factors

struct RecoverOptions {
  CommonOptions common;
  std::string dump;
  std::string method = "auto";
  double rel_tol = 1e-10;
  bool write = false;
};

void add_recover(CLI::App& app, RecoverOptions& o) {
  CLI::App* s = app.add_subcommand("recover-factors", "Fit the additive factor model to a dump");
  add_common(s, o.common, "Write per-value factor norms to this file");
  s->add_option("--dump", o.dump, "Dump directory")->required();
  s->add_option("--method", o.method, "auto, averaging or lstsq")
      ->check(CLI::IsMember({"auto", "averaging", "lstsq"}));
  s->add_option("--rel-tol", o.rel_tol, "Relative singular value cutoff for least squares");
  s->add_flag("--write", o.write, "Store the factors in the dump");
}

int run_recover(const CLI::App* sub, const RecoverOptions& o, std::ostream& out) {
  ExperimentReport report = start_report(sub, o.common);
  const EmbeddingSet set = read_dump(o.dump);
  report.add_dump_provenance(o.dump, "dump");
  std::string used;
  std::optional<FactorSet> f;
  {
    StageTimer t(report, "recover");
    f.emplace(recover(set, o.method, o.rel_tol, &used));
  }
  const ReconstructionError e = reconstruction_error(set, *f);
  const DesignMatrix design = build_design_matrix(set.space(), set.labels());
  report.results = {{"method", used},
                    {"rows", set.rows()},
                    {"dim", set.dim()},
                    {"free_parameters", set.space().free_parameters()},
                    {"design_rank", design.rank(o.rel_tol)},
                    {"balanced", has_balanced_counts(set)},
                    {"max_row_error", e.max_row_error},
                    {"rms", e.rms},
                    {"centering_residual", f->centering_residual()}};
  CsvTable norms({"concept", "value", "norm"});
  for (int i = 0; i < f->space().k(); ++i) {
    for (int j = 0; j < f->space().cardinality(i); ++j) {
      norms.add_row({std::to_string(i), std::to_string(j), format_double(f->factor(i).row(j).norm())});
    }
  }
  if (o.write) write_factors(*f, o.dump);
  emit_csv(norms, o.common.csv);
  emit_report(report, o.common, out);
  return kExitOk;
}

// ---------------------------------------------------------------------------
// metrics

struct MetricsOptions {
  CommonOptions common;
  std::string dump;
  double heldout_fraction = 0.1;
  bool no_whiten = false;
  bool no_project = false;
  std::string order = "project-then-whiten";
  double threshold = 0.95;
  bool retrain = false;
  std::string loss = "ce";
  std::string geometry = "euclidean";
  int epochs = 2000;
  double lr = 0.1;
  std::string model;
  std::string plot_csv;
};

void add_metrics(CLI::App& app, MetricsOptions& o) {
  CLI::App* s = app.add_subcommand("metrics", "Factorization metrics and compositional accuracy of a dump");
  add_common(s, o.common, "Write one row per metric value to this file");
  s->add_option("--dump", o.dump, "Dump directory")->required();
  s->add_option("--heldout-fraction", o.heldout_fraction, "Fraction of grid tuples held out");
  s->add_flag("--no-whiten", o.no_whiten, "Skip PCA whitening in R2");
  s->add_flag("--no-project", o.no_project, "Skip the probe-span projection in R2");
  s->add_option("--order", o.order, "project-then-whiten or whiten-then-project")
      ->check(CLI::IsMember({"project-then-whiten", "whiten-then-project"}));
  s->add_option("--threshold", o.threshold, "Explained variance for effective rank");
  s->add_flag("--retrain", o.retrain, "Train probes even when the dump has some");
  s->add_option("--loss", o.loss, "Probe loss, ce or bce")->check(CLI::IsMember({"ce", "bce"}));
  s->add_option("--geometry", o.geometry, "Probe geometry")
      ->check(CLI::IsMember({"euclidean", "spherical"}));
  s->add_option("--epochs", o.epochs, "Probe training epochs");
  s->add_option("--lr", o.lr, "Probe learning rate");
  s->add_option("--model", o.model, "Model label for plot data (default meta.model or dump name)");
  s->add_option("--plot-csv", o.plot_csv, "Append-free CSV of (model, R2, compositional accuracy)");
}

int run_metrics(const CLI::App* sub, const MetricsOptions& o, std::ostream& out) {
  ExperimentReport report = start_report(sub, o.common);
  const EmbeddingSet set = read_dump(o.dump);
  report.add_dump_provenance(o.dump, "dump");
  const ConceptSpace& space = set.space();

  std::optional<TrainingSupport> heldout;
  TrainingSupport train = full_support(space);
  if (o.heldout_fraction > 0.0) {
    heldout.emplace(sample_support(space, SupportRule::Fraction(o.heldout_fraction), o.common.seed));
    train = complement(*heldout);
  }

  std::string method;
  std::optional<FactorSet> factors;
  {
    StageTimer t(report, "recover");
    factors.emplace(recover(set, "auto", 1e-10, &method));
  }
  std::optional<ProbeBank> probes;
  std::string probe_source;
  if (!o.retrain && dump_has_probes(o.dump)) {
    probes.emplace(read_probes(o.dump));
    probe_source = "dump";
  } else {
    StageTimer t(report, "train_probes");
    TrainConfig tc;
    tc.loss = parse_loss(o.loss);
    tc.geometry = parse_geometry(o.geometry);
    tc.epochs = o.epochs;
    tc.lr = o.lr;
    tc.seed = o.common.seed;
    probes.emplace(train_probes(set, train, tc).bank);
    probe_source = "trained";
  }

  R2Options ro;
  ro.whiten = !o.no_whiten;
  ro.project = !o.no_project;
  ro.order = o.order == "project-then-whiten" ? WhitenOrder::kProjectThenWhiten
                                              : WhitenOrder::kWhitenThenProject;
  std::optional<R2Result> r2;
  std::optional<OrthReport> orth;
  std::optional<SpanProjector> projector;
  {
    StageTimer t(report, "metrics");
    r2.emplace(projected_whitened_r2(set, *factors, &*probes, ro));
    if (ro.project) projector.emplace(fit_span_projector(probes->stacked_weights()));
    orth.emplace(orthogonality(*factors, projector ? &*projector : nullptr));
  }
  Json ranks = Json::array();
  CsvTable csv({"metric", "i", "j", "value"});
  csv.add_row({"r2", "", "", format_double(r2->r2)});
  for (int i = 0; i < space.k(); ++i) {
    const EffectiveRank er = effective_rank(*factors, i, o.threshold);
    ranks.push_back({{"rank", er.rank}, {"cumulative", er.cumulative}});
    csv.add_row({"effective_rank", std::to_string(i), "", std::to_string(er.rank)});
    csv.add_row({"orthogonality_within", std::to_string(i), "", format_double(orth->within[i])});
    for (int j = 0; j < space.k(); ++j) {
      if (j != i) {
        csv.add_row({"orthogonality_across", std::to_string(i), std::to_string(j),
                      format_double(orth->across(i, j))});
      }
    }
  }
  Json across = Json::array();
  for (int i = 0; i < space.k(); ++i) {
    Eigen::RowVectorXd r = orth->across.row(i);
    across.push_back(std::vector<double>(r.data(), r.data() + r.size()));
  }
  const AccuracyReport train_acc = compositional_accuracy(*probes, set, train);
  Json comp = nullptr;
  double comp_mean = train_acc.mean;
  if (heldout) {
    const AccuracyReport h = compositional_accuracy(*probes, set, *heldout);
    comp = to_json(h);
    comp_mean = h.mean;
    csv.add_row({"compositional_accuracy", "", "", format_double(h.mean)});
  }
  csv.add_row({"train_accuracy", "", "", format_double(train_acc.mean)});
  report.results = {
      {"factor_method", method},
      {"probe_source", probe_source},
      {"r2", {{"value", r2->r2},
              {"numerator_ss", r2->numerator_ss},
              {"denominator_ss", r2->denominator_ss},
              {"pipeline", r2->pipeline},
              {"projected_rank", r2->projected_rank},
              {"whitened_rank", r2->whitened_rank}}},
      {"orthogonality", {{"within", orth->within},
                         {"across", across},
                         {"excluded_directions", orth->excluded_directions}}},
      {"effective_rank", ranks},
      {"train_accuracy", to_json(train_acc)},
      {"compositional_accuracy", comp},
      {"heldout_tuples", heldout ? Json(heldout->size()) : Json(0)}};
  if (!o.plot_csv.empty()) {
    std::string model = o.model;
    if (model.empty()) {
      const auto it = set.meta().find("model");
      model = it != set.meta().end() ? it->second : fs::path(o.dump).filename().string();
    }
    CsvTable plot({"model", "r2", "compositional_accuracy"});
    plot.add_row({model, format_double(r2->r2), format_double(comp_mean)});
    plot.write(fs::path(o.plot_csv));
  }
  emit_csv(csv, o.common.csv);
  emit_report(report, o.common, out);
  return kExitOk;
}

// ---------------------------------------------------------------------------
// verify

struct VerifyOptions {
  CommonOptions common;
  std::string suite = "all";
  int jobs = 1;
};

void add_verify(CLI::App& app, VerifyOptions& o) {
  CLI::App* s = app.add_subcommand("verify", "Run the theory oracle checks");
  add_common(s, o.common, nullptr);
  std::vector<std::string> names{"all"};
  for (const auto& n : check_names()) names.push_back(n);
  s->add_option("--suite", o.suite, "all (every check but scan) or one check name")
      ->check(CLI::IsMember(names));
  s->add_option("--jobs", o.jobs, "Worker threads over checks");
}

int run_verify(const CLI::App* sub, const VerifyOptions& o, std::ostream& out) {
  ExperimentReport report = start_report(sub, o.common);
  const std::vector<CheckResult> results = run_suite(o.suite, o.common.seed, o.jobs);
  bool all = true;
  Json checks = Json::array();
  for (const auto& r : results) {
    all = all && r.passed;
    out << (r.passed ? "PASS " : "FAIL ") << r.name << ": " << r.detail << '\n';
    checks.push_back({{"name", r.name}, {"passed", r.passed}, {"detail", r.detail}});
    report.timings.emplace_back(r.name, r.seconds);
  }
  report.results = {{"checks", checks}, {"passed", all}};
  if (!o.common.report.empty()) report.write(o.common.report);
  return all ? kExitOk : kExitVerification;
}

// ---------------------------------------------------------------------------
// probe-train

struct ProbeOptions {
  CommonOptions common;
  std::string dump;
  std::string loss = "ce";
  std::string geometry = "euclidean";
  int epochs = 5000;
  double lr = 0.1;
  double train_fraction = 1.0;
  double direction_tol = 0.0;
  bool write = false;
};

void add_probe(CLI::App& app, ProbeOptions& o) {
  CLI::App* s = app.add_subcommand("probe-train", "Train per-concept probes on a dump");
  add_common(s, o.common, "Write the loss history CSV to this file");
  s->add_option("--dump", o.dump, "Dump directory")->required();
  s->add_option("--loss", o.loss, "ce or bce")->check(CLI::IsMember({"ce", "bce"}));
  s->add_option("--geometry", o.geometry, "euclidean or spherical")
      ->check(CLI::IsMember({"euclidean", "spherical"}));
  s->add_option("--epochs", o.epochs, "Full-batch epochs");
  s->add_option("--lr", o.lr, "Peak learning rate");
  s->add_option("--train-fraction", o.train_fraction, "Fraction of grid tuples used for training");
  s->add_option("--direction-tol", o.direction_tol, "Early stop on weight direction change");
  s->add_flag("--write", o.write, "Store the probes in the dump");
}

int run_probe(const CLI::App* sub, const ProbeOptions& o, std::ostream& out) {
  ExperimentReport report = start_report(sub, o.common);
  const EmbeddingSet set = read_dump(o.dump);
  report.add_dump_provenance(o.dump, "dump");
  const ConceptSpace& space = set.space();
  TrainingSupport train = full_support(space);
  std::optional<TrainingSupport> heldout;
  if (o.train_fraction < 1.0) {
    train = sample_support(space, SupportRule::Fraction(o.train_fraction), o.common.seed);
    heldout.emplace(complement(train));
  }
  TrainConfig tc;
  tc.loss = parse_loss(o.loss);
  tc.geometry = parse_geometry(o.geometry);
  tc.epochs = o.epochs;
  tc.lr = o.lr;
  tc.seed = o.common.seed;
  tc.direction_tol = o.direction_tol;
  std::optional<TrainResult> res;
  {
    StageTimer t(report, "train");
    res.emplace(train_probes(set, train, tc));
  }
  report.results = {
      {"epochs_run", res->epochs_run},
      {"loss", loss_summary(res->loss_history)},
      {"train_accuracy", to_json(compositional_accuracy(res->bank, set, train))},
      {"heldout_accuracy",
       heldout ? to_json(compositional_accuracy(res->bank, set, *heldout)) : Json(nullptr)},
      {"temperature", res->bank.temperature()}};
  if (o.write) write_probes(res->bank, o.dump);
  emit_csv(loss_table(res->loss_history), o.common.csv);
  emit_report(report, o.common, out);
  return kExitOk;
}

// ---------------------------------------------------------------------------
// stability

struct StabilityOptions {
  CommonOptions common;
  std::string dump;
  std::string generate = "factorized";
  int k = 4;
  int d = 0;
  std::string rule = "majority";
  int trials = 10;
  std::string readout = "svm";
  int epochs = 2000;
  double lr = 0.1;
};

void add_stability(CLI::App& app, StabilityOptions& o) {
  CLI::App* s = app.add_subcommand("stability", "Posterior stability of readouts across supports");
  add_common(s, o.common, "Write per-concept direction cosines to this file");
  s->add_option("--dump", o.dump, "Binary-grid dump; overrides --generate");
  s->add_option("--generate", o.generate, "factorized or unstable")
      ->check(CLI::IsMember({"factorized", "unstable"}));
  s->add_option("--k", o.k, "Concepts of the generated grid");
  s->add_option("--d", o.d, "Dimension of the generated grid (0: smallest valid)");
  s->add_option("--rule", o.rule, "majority or cross")->check(CLI::IsMember({"majority", "cross"}));
  s->add_option("--trials", o.trials, "Number of supports");
  s->add_option("--readout", o.readout, "svm or gd")->check(CLI::IsMember({"svm", "gd"}));
  s->add_option("--epochs", o.epochs, "Epochs for gd readouts");
  s->add_option("--lr", o.lr, "Learning rate for gd readouts");
}

int run_stability(const CLI::App* sub, const StabilityOptions& o, std::ostream& out) {
  ExperimentReport report = start_report(sub, o.common);
  std::optional<EmbeddingSet> set;
  if (!o.dump.empty()) {
    set.emplace(read_dump(o.dump));
    report.add_dump_provenance(o.dump, "dump");
  } else {
    const int d = o.d > 0 ? o.d : o.k;
    if (o.generate == "factorized") {
      set.emplace(generate_factorized(ConceptSpace(std::vector<int>(o.k, 2)), d, true, 1.0,
                                      o.common.seed)
                      .set);
    } else {
      set.emplace(generate_unstable_binary(o.k, d, o.common.seed));
    }
  }
  StabilityConfig cfg;
  cfg.rule = parse_support_kind(o.rule);
  cfg.trials = o.trials;
  cfg.readout = parse_readout(o.readout);
  cfg.gd.epochs = o.epochs;
  cfg.gd.lr = o.lr;
  cfg.gd.seed = o.common.seed;
  cfg.seed = o.common.seed;
  std::optional<StabilityReport> rep;
  {
    StageTimer t(report, "stability");
    rep.emplace(stability_experiment(*set, cfg));
  }
  report.results = {{"supports", rep->supports},
                    {"max_posterior_tv", rep->max_posterior_tv},
                    {"min_direction_cosine", rep->min_direction_cosine},
                    {"min_accuracy", rep->min_accuracy},
                    {"non_separable", rep->non_separable}};
  CsvTable csv({"concept", "min_direction_cosine"});
  for (std::size_t i = 0; i < rep->min_direction_cosine.size(); ++i) {
    csv.add_row({std::to_string(i), format_double(rep->min_direction_cosine[i])});
  }
  emit_csv(csv, o.common.csv);
  emit_report(report, o.common, out);
  return kExitOk;
}

// ---------------------------------------------------------------------------
// report

struct ReportOptions {
  std::vector<std::string> inputs;
  std::string csv;
  bool canonical = false;
};

void add_report(CLI::App& app, ReportOptions& o) {
  CLI::App* s = app.add_subcommand("report", "Validate reports and flatten their results to CSV");
  s->add_option("inputs", o.inputs, "Report JSON files")->required();
  s->add_option("--csv", o.csv, "Write the CSV here instead of stdout");
  s->add_flag("--canonical", o.canonical, "Print each report without timings instead");
}

void flatten(const Json& j, const std::string& prefix, std::vector<std::pair<std::string, std::string>>& out) {
  if (j.is_object()) {
    for (const auto& [key, value] : j.items()) flatten(value, prefix.empty() ? key : prefix + "." + key, out);
  } else if (j.is_array()) {
    for (std::size_t i = 0; i < j.size(); ++i) flatten(j[i], prefix + "[" + std::to_string(i) + "]", out);
  } else if (j.is_number_float()) {
    out.emplace_back(prefix, format_double(j.get<double>()));
  } else if (j.is_string()) {
    out.emplace_back(prefix, j.get<std::string>());
  } else {
    out.emplace_back(prefix, j.dump());
  }
}

int run_report(const ReportOptions& o, std::ostream& out) {
  CsvTable csv({"file", "command", "seed", "key", "value"});
  for (const auto& path : o.inputs) {
    const ExperimentReport r = ExperimentReport::Read(path);
    if (o.canonical) {
      out << r.to_json(false).dump(2) << '\n';
      continue;
    }
    std::vector<std::pair<std::string, std::string>> rows;
    flatten(r.results, "", rows);
    for (const auto& [key, value] : rows) {
      csv.add_row({path, r.command, std::to_string(r.seed), key, value});
    }
  }
  if (o.canonical) return kExitOk;
  if (o.csv.empty()) {
    csv.write(out);
  } else {
    csv.write(fs::path(o.csv));
  }
  return kExitOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app("Compositional geometry lab: factorization metrics and theory oracles", "cglab");
  app.option_defaults()->always_capture_default();
  app.require_subcommand(1);

  SynthOptions synth;
  ScanOptions scan;
  RecoverOptions recover_opts;
  MetricsOptions metrics;
  VerifyOptions verify;
  ProbeOptions probe;
  StabilityOptions stability;
  ReportOptions report;
  add_synth(app, synth);
  add_scan(app, scan);
  add_recover(app, recover_opts);
  add_metrics(app, metrics);
  add_verify(app, verify);
  add_probe(app, probe);
  add_stability(app, stability);
  add_report(app, report);

  std::string command = "cglab";
  try {
    std::vector<std::string> full = args;
    inject_config(app, full);
    std::vector<std::string> argv_store{"cglab"};
    argv_store.insert(argv_store.end(), full.begin(), full.end());
    std::vector<const char*> argv;
    for (const auto& a : argv_store) argv.push_back(a.c_str());
    try {
      app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::CallForHelp& e) {
      return app.exit(e, out, err);
    } catch (const CLI::CallForAllHelp& e) {
      return app.exit(e, out, err);
    } catch (const CLI::ParseError& e) {
      err << "cglab: error: " << e.what() << '\n';
      return kExitUsage;
    }
    const CLI::App* sub = app.get_subcommands().front();
    command = "cglab " + sub->get_name();
    const std::string& name = sub->get_name();
    if (name == "synth-train") return run_synth(sub, synth, out);
    if (name == "min-dim-scan") return run_scan(sub, scan, out, err);
    if (name == "recover-factors") return run_recover(sub, recover_opts, out);
    if (name == "metrics") return run_metrics(sub, metrics, out);
    if (name == "verify") return run_verify(sub, verify, out);
    if (name == "probe-train") return run_probe(sub, probe, out);
    if (name == "stability") return run_stability(sub, stability, out);
    return run_report(report, out);
  } catch (const IoError& e) {
    err << command << ": error: " << e.what() << '\n';
    return kExitIo;
  } catch (const FormatError& e) {
    err << command << ": error: " << e.what() << '\n';
    return kExitIo;
  } catch (const std::exception& e) {
    err << command << ": error: " << e.what() << '\n';
    return kExitUsage;
  }
}

}  // namespace cglab::cli
