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
#include "cglab/embedding_store.h"

#include <algorithm>
#include <array>
#include <bit>
#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

#include "cglab/error.h"

namespace cglab {

namespace fs = std::filesystem;

namespace {

constexpr const char* kEmbeddingsFile = "embeddings.f32";
constexpr const char* kLabelsFile = "labels.u16";

template <typename T>
T to_little_endian(T v) {
  if constexpr (std::endian::native == std::endian::little) {
    return v;
  } else {
    auto bytes = std::bit_cast<std::array<unsigned char, sizeof(T)>>(v);
    std::reverse(bytes.begin(), bytes.end());
    return std::bit_cast<T>(bytes);
  }
}

std::string read_file(const fs::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw IoError("cannot open " + file.string());
  std::ostringstream os;
  os << in.rdbuf();
  if (in.bad()) throw IoError("failed reading " + file.string());
  return os.str();
}

void write_file(const fs::path& file, const std::string& bytes) {
  std::ofstream out(file, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot create " + file.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("failed writing " + file.string());
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create directory " + dir.string() + ": " + ec.message());
}

std::string join_ints(const std::vector<int>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) s += ',';
    s += std::to_string(v[i]);
  }
  return s;
}

std::int64_t parse_int(const std::string& key, const std::string& text) {
  std::int64_t v = 0;
  const char* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, v);
  if (ec != std::errc() || ptr != end) {
    throw FormatError("manifest key '" + key + "' is not an integer: '" + text + "'");
  }
  return v;
}

}  // namespace

EmbeddingSet::EmbeddingSet(ConceptSpace space, RowMatrixXf data,
                           LabelMatrix labels,
                           std::map<std::string, std::string> meta)
    : space_(std::move(space)),
      data_(std::move(data)),
      labels_(std::move(labels)),
      meta_(std::move(meta)) {
  if (data_.cols() < 1) throw InvalidArgument("embedding dimension must be >= 1");
  if (labels_.rows() != data_.rows()) {
    throw InvalidArgument("label rows (" + std::to_string(labels_.rows()) +
                          ") differ from data rows (" +
                          std::to_string(data_.rows()) + ")");
  }
  if (labels_.cols() != space_.k()) {
    throw InvalidArgument("label width differs from the number of concepts");
  }
  for (Eigen::Index r = 0; r < labels_.rows(); ++r) {
    for (int i = 0; i < space_.k(); ++i) {
      if (labels_(r, i) >= space_.cardinality(i)) {
        throw FormatError("label out of range at row " + std::to_string(r) +
                          ", concept " + std::to_string(i));
      }
    }
  }
}

EmbeddingSet EmbeddingSet::FromTuples(const ConceptSpace& space,
                                      const std::vector<ConceptTuple>& tuples,
                                      const Eigen::MatrixXd& rows) {
  if (static_cast<Eigen::Index>(tuples.size()) != rows.rows()) {
    throw InvalidArgument("tuple count differs from row count");
  }
  LabelMatrix labels(rows.rows(), space.k());
  for (std::size_t r = 0; r < tuples.size(); ++r) {
    if (!space.contains(tuples[r])) throw InvalidArgument("tuple not in space");
    for (int i = 0; i < space.k(); ++i) {
      labels(static_cast<Eigen::Index>(r), i) = static_cast<std::uint16_t>(tuples[r][i]);
    }
  }
  return EmbeddingSet(space, rows.cast<float>(), std::move(labels));
}

ConceptTuple EmbeddingSet::label(Eigen::Index row) const {
  ConceptTuple c(space_.k());
  for (int i = 0; i < space_.k(); ++i) c[i] = labels_(row, i);
  return c;
}

std::vector<Eigen::Index> EmbeddingSet::rows_in(
    const TrainingSupport& support) const {
  if (!(support.space() == space_)) {
    throw InvalidArgument("support belongs to a different concept space");
  }
  std::vector<Eigen::Index> out;
  for (Eigen::Index r = 0; r < rows(); ++r) {
    if (support.contains(label(r))) out.push_back(r);
  }
  return out;
}

Manifest Manifest::Read(const fs::path& dir) {
  const fs::path file = dir / kFileName;
  if (!fs::exists(file)) throw IoError("missing manifest " + file.string());
  std::istringstream in(read_file(file));
  Manifest m;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos || eq == 0) {
      throw FormatError("manifest line " + std::to_string(lineno) +
                        " is not key=value");
    }
    const std::string key = line.substr(0, eq);
    if (m.has(key)) throw FormatError("duplicate manifest key '" + key + "'");
    m.entries_.emplace_back(key, line.substr(eq + 1));
  }
  if (!m.has("magic") || m.get("magic") != kMagic) {
    throw FormatError("manifest magic is not " + std::string(kMagic));
  }
  return m;
}

void Manifest::Write(const fs::path& dir) const {
  ensure_dir(dir);
  std::string text = "magic=" + std::string(kMagic) + "\n";
  for (const auto& [key, value] : entries_) {
    if (key == "magic") continue;
    if (key.find_first_of("=\n") != std::string::npos ||
        value.find('\n') != std::string::npos) {
      throw InvalidArgument("manifest entry '" + key + "' contains a separator");
    }
    text += key + "=" + value + "\n";
  }
  write_file(dir / kFileName, text);
}

bool Manifest::has(const std::string& key) const {
  return std::any_of(entries_.begin(), entries_.end(),
                     [&](const auto& e) { return e.first == key; });
}

const std::string& Manifest::get(const std::string& key) const {
  for (const auto& e : entries_) {
    if (e.first == key) return e.second;
  }
  throw FormatError("manifest lacks key '" + key + "'");
}

std::int64_t Manifest::get_int(const std::string& key) const {
  return parse_int(key, get(key));
}

std::vector<int> Manifest::get_int_list(const std::string& key) const {
  std::vector<int> out;
  std::stringstream ss(get(key));
  std::string item;
  while (std::getline(ss, item, ',')) {
    const std::int64_t v = parse_int(key, item);
    if (v < 0 || v > (1 << 30)) throw FormatError("manifest key '" + key + "' out of range");
    out.push_back(static_cast<int>(v));
  }
  return out;
}

void Manifest::set(const std::string& key, const std::string& value) {
  for (auto& e : entries_) {
    if (e.first == key) {
      e.second = value;
      return;
    }
  }
  entries_.emplace_back(key, value);
}

void Manifest::erase_prefix(const std::string& prefix) {
  std::erase_if(entries_, [&](const auto& e) { return e.first.starts_with(prefix); });
}

ConceptSpace manifest_space(const Manifest& m) {
  const auto k = m.get_int("k");
  const auto cards = m.get_int_list("cardinalities");
  if (k < 1 || static_cast<std::size_t>(k) != cards.size()) {
    throw FormatError("manifest k disagrees with cardinalities");
  }
  try {
    return ConceptSpace(cards);
  } catch (const InvalidArgument& e) {
    throw FormatError(std::string("bad manifest cardinalities: ") + e.what());
  }
}

Manifest open_or_create_manifest(const fs::path& dir, const ConceptSpace& space,
                                 int d) {
  if (fs::exists(dir / Manifest::kFileName)) {
    Manifest m = Manifest::Read(dir);
    if (!(manifest_space(m) == space) || m.get_int("d") != d) {
      throw FormatError("existing manifest in " + dir.string() +
                        " describes a different space or dimension");
    }
    return m;
  }
  Manifest m;
  m.set("magic", Manifest::kMagic);
  m.set("k", std::to_string(space.k()));
  m.set("cardinalities", join_ints(space.cardinalities()));
  m.set("d", std::to_string(d));
  m.set("dtype", "f32le");
  return m;
}

void write_f32(const fs::path& file, const Eigen::MatrixXd& rows) {
  std::string bytes(static_cast<std::size_t>(rows.size()) * 4, '\0');
  std::size_t pos = 0;
  for (Eigen::Index r = 0; r < rows.rows(); ++r) {
    for (Eigen::Index c = 0; c < rows.cols(); ++c) {
      const float v = to_little_endian(static_cast<float>(rows(r, c)));
      std::memcpy(bytes.data() + pos, &v, 4);
      pos += 4;
    }
  }
  write_file(file, bytes);
}

Eigen::MatrixXd read_f32(const fs::path& file, Eigen::Index rows,
                         Eigen::Index cols) {
  const std::string bytes = read_file(file);
  if (bytes.size() != static_cast<std::size_t>(rows * cols) * 4) {
    throw FormatError("payload " + file.filename().string() + " holds " +
                      std::to_string(bytes.size()) + " bytes, manifest implies " +
                      std::to_string(rows * cols * 4));
  }
  Eigen::MatrixXd out(rows, cols);
  std::size_t pos = 0;
  for (Eigen::Index r = 0; r < rows; ++r) {
    for (Eigen::Index c = 0; c < cols; ++c) {
      float v;
      std::memcpy(&v, bytes.data() + pos, 4);
      out(r, c) = to_little_endian(v);
      pos += 4;
    }
  }
  return out;
}

void write_dump(const EmbeddingSet& set, const fs::path& dir) {
  if (set.rows() == 0) throw InvalidArgument("refusing to write an empty embedding set");
  ensure_dir(dir);
  Manifest m;
  m.set("magic", Manifest::kMagic);
  m.set("k", std::to_string(set.space().k()));
  m.set("cardinalities", join_ints(set.space().cardinalities()));
  m.set("d", std::to_string(set.dim()));
  m.set("rows", std::to_string(set.rows()));
  m.set("dtype", "f32le");
  m.set("label_dtype", "u16le");
  for (const auto& [key, value] : set.meta()) m.set("meta." + key, value);

  const auto& data = set.data();
  std::string payload(static_cast<std::size_t>(data.size()) * 4, '\0');
  for (Eigen::Index i = 0; i < data.size(); ++i) {
    const float v = to_little_endian(data.data()[i]);
    std::memcpy(payload.data() + i * 4, &v, 4);
  }
  const auto& labels = set.labels();
  std::string label_bytes(static_cast<std::size_t>(labels.size()) * 2, '\0');
  for (Eigen::Index i = 0; i < labels.size(); ++i) {
    const std::uint16_t v = to_little_endian(labels.data()[i]);
    std::memcpy(label_bytes.data() + i * 2, &v, 2);
  }
  // Section files from an earlier dump would no longer match the manifest.
  for (const char* stale : {"factors.f32", "probe_weights.f32", "probe_biases.f32"}) {
    std::error_code ec;
    fs::remove(dir / stale, ec);
  }
  write_file(dir / kEmbeddingsFile, payload);
  write_file(dir / kLabelsFile, label_bytes);
  m.Write(dir);
}

EmbeddingSet read_dump(const fs::path& dir) {
  const Manifest m = Manifest::Read(dir);
  const ConceptSpace space = manifest_space(m);
  if (m.get("dtype") != "f32le") throw FormatError("unsupported dtype " + m.get("dtype"));
  if (m.has("label_dtype") && m.get("label_dtype") != "u16le") {
    throw FormatError("unsupported label dtype " + m.get("label_dtype"));
  }
  const auto d = m.get_int("d");
  const auto rows = m.get_int("rows");
  if (d < 1 || rows < 1) throw FormatError("manifest declares an empty set");

  const std::string payload = read_file(dir / kEmbeddingsFile);
  const auto expected = static_cast<std::size_t>(rows * d) * 4;
  if (payload.size() != expected) {
    throw FormatError("embedding payload holds " + std::to_string(payload.size()) +
                      " bytes, manifest implies " + std::to_string(expected) +
                      " (rows=" + std::to_string(rows) + ", d=" + std::to_string(d) + ")");
  }
  const std::string label_bytes = read_file(dir / kLabelsFile);
  const auto expected_labels = static_cast<std::size_t>(rows * space.k()) * 2;
  if (label_bytes.size() != expected_labels) {
    throw FormatError("label payload holds " + std::to_string(label_bytes.size()) +
                      " bytes, manifest implies " + std::to_string(expected_labels));
  }

  RowMatrixXf data(rows, d);
  for (Eigen::Index i = 0; i < data.size(); ++i) {
    float v;
    std::memcpy(&v, payload.data() + i * 4, 4);
    data.data()[i] = to_little_endian(v);
    if (!std::isfinite(data.data()[i])) {
      throw FormatError("non-finite embedding value at row " + std::to_string(i / d));
    }
  }
  LabelMatrix labels(rows, space.k());
  for (Eigen::Index i = 0; i < labels.size(); ++i) {
    std::uint16_t v;
    std::memcpy(&v, label_bytes.data() + i * 2, 2);
    labels.data()[i] = to_little_endian(v);
  }
  std::map<std::string, std::string> meta;
  for (const auto& [key, value] : m.entries()) {
    if (key.starts_with("meta.")) meta[key.substr(5)] = value;
  }
  return EmbeddingSet(space, std::move(data), std::move(labels), std::move(meta));
}

Eigen::MatrixXd WhitenTransform::apply(const Eigen::MatrixXd& x) const {
  if (x.cols() != mean.size()) throw InvalidArgument("whiten: dimension mismatch");
  return ((x.rowwise() - mean.transpose()) * basis) * inv_scales.asDiagonal();
}

WhitenTransform whiten_fit(const Eigen::MatrixXd& x, double rel_tol) {
  if (x.rows() < 2) throw InvalidArgument("whitening needs at least two rows");
  if (!(rel_tol > 0.0 && rel_tol < 1.0)) throw InvalidArgument("rel_tol must lie in (0, 1)");
  WhitenTransform t;
  t.rel_tol = rel_tol;
  t.mean = x.colwise().mean().transpose();
  const Eigen::MatrixXd centered = x.rowwise() - t.mean.transpose();
  Eigen::BDCSVD<Eigen::MatrixXd> svd(centered, Eigen::ComputeThinV);
  const Eigen::VectorXd s = svd.singularValues();
  if (s.size() == 0 || !(s.maxCoeff() > 0.0)) {
    throw NumericalError("whitening input has zero variance");
  }
  const double cutoff = rel_tol * s.maxCoeff();
  int r = 0;
  while (r < s.size() && s(r) > cutoff) ++r;
  t.basis = svd.matrixV().leftCols(r);
  t.inv_scales.resize(r);
  const double root = std::sqrt(static_cast<double>(x.rows() - 1));
  for (int j = 0; j < r; ++j) t.inv_scales(j) = root / s(j);
  return t;
}

Eigen::MatrixXd SpanProjector::apply(const Eigen::MatrixXd& x) const {
  if (x.cols() != basis.rows()) throw InvalidArgument("project: dimension mismatch");
  return (x * basis) * basis.transpose();
}

SpanProjector fit_span_projector(const Eigen::MatrixXd& probe_weights,
                                 double rel_tol) {
  if (probe_weights.rows() < 1) throw InvalidArgument("no probe weights to span");
  SpanProjector p;
  p.basis = row_space_basis(probe_weights, rel_tol);
  if (p.rank() == 0) throw NumericalError("probe weights are all zero");
  return p;
}

}  // namespace cglab
