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

#include "report.h"

#include <array>
#include <charconv>
#include <fstream>

#include "cglab/embedding_store.h"
#include "cglab/error.h"

namespace cglab::cli {

std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t hash) {
  for (unsigned char c : bytes) {
    hash ^= c;
    hash *= 0x100000001b3ULL;
  }
  return hash;
}

std::uint64_t fnv1a64_file(const std::filesystem::path& file) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw IoError("cannot open " + file.string());
  std::uint64_t hash = 0xcbf29ce484222325ULL;
  std::array<char, 1 << 16> buf;
  while (in) {
    in.read(buf.data(), buf.size());
    hash = fnv1a64(std::string_view(buf.data(), static_cast<std::size_t>(in.gcount())), hash);
  }
  if (in.bad()) throw IoError("read failed for " + file.string());
  return hash;
}

std::string hex64(std::uint64_t value) {
  std::array<char, 17> buf{};
  auto [end, ec] = std::to_chars(buf.data(), buf.data() + 16, value, 16);
  std::string s(buf.data(), end);
  return std::string(16 - s.size(), '0') + s;
}

std::string format_double(double value) {
  std::array<char, 32> buf{};
  auto [end, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), value);
  return std::string(buf.data(), end);
}

void ExperimentReport::add_dump_provenance(const std::filesystem::path& dir,
                                           const std::string& label) {
  for (const char* name : {Manifest::kFileName, "embeddings.f32", "labels.u16", "factors.f32",
                           "probe_weights.f32", "probe_biases.f32"}) {
    const auto file = dir / name;
    if (std::filesystem::exists(file)) add_file_provenance(file, label + "/" + name);
  }
}

void ExperimentReport::add_file_provenance(const std::filesystem::path& file,
                                           const std::string& label) {
  provenance[label] = "fnv1a64:" + hex64(fnv1a64_file(file));
}

Json ExperimentReport::to_json(bool include_timings) const {
  Json j = {{"schema_version", kSchemaVersion},
            {"command", command},
            {"config", config},
            {"seed", seed},
            {"results", results},
            {"provenance", provenance}};
  if (include_timings) {
    Json t = Json::object();
    for (const auto& [stage, seconds] : timings) t[stage] = seconds;
    j["timings"] = t;
  }
  return j;
}

ExperimentReport ExperimentReport::FromJson(const Json& j) {
  if (!j.is_object()) throw FormatError("report must be a JSON object");
  for (const char* key : {"schema_version", "command", "config", "seed", "results", "provenance"}) {
    if (!j.contains(key)) throw FormatError(std::string("report lacks field '") + key + "'");
  }
  if (j["schema_version"] != kSchemaVersion) {
    throw FormatError("unsupported report schema_version " + j["schema_version"].dump());
  }
  ExperimentReport r;
  try {
    r.command = j["command"].get<std::string>();
    r.config = j["config"];
    r.seed = j["seed"].get<std::uint64_t>();
    r.results = j["results"];
    r.provenance = j["provenance"];
    if (j.contains("timings")) {
      for (const auto& [stage, seconds] : j["timings"].items()) {
        r.timings.emplace_back(stage, seconds.get<double>());
      }
    }
  } catch (const Json::exception& e) {
    throw FormatError(std::string("malformed report: ") + e.what());
  }
  return r;
}

void ExperimentReport::write(const std::filesystem::path& file) const {
  std::ofstream out(file);
  if (!out) throw IoError("cannot write " + file.string());
  out << to_json().dump(2) << '\n';
  if (!out) throw IoError("write failed for " + file.string());
}

ExperimentReport ExperimentReport::Read(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) throw IoError("cannot open " + file.string());
  Json j;
  try {
    in >> j;
  } catch (const Json::parse_error& e) {
    throw FormatError(file.string() + ": " + e.what());
  }
  return FromJson(j);
}

StageTimer::StageTimer(ExperimentReport& report, std::string stage)
    : report_(report), stage_(std::move(stage)), start_(std::chrono::steady_clock::now()) {}

StageTimer::~StageTimer() {
  const std::chrono::duration<double> dt = std::chrono::steady_clock::now() - start_;
  report_.timings.emplace_back(stage_, dt.count());
}

CsvTable::CsvTable(std::vector<std::string> columns) : columns_(std::move(columns)) {}

void CsvTable::add_row(std::vector<std::string> row) {
  if (row.size() != columns_.size()) throw InvalidArgument("CSV row width mismatch");
  rows_.push_back(std::move(row));
}

namespace {

void write_cell(std::ostream& out, const std::string& cell) {
  if (cell.find_first_of(",\"\n") == std::string::npos) {
    out << cell;
    return;
  }
  out << '"';
  for (char c : cell) {
    if (c == '"') out << '"';
    out << c;
  }
  out << '"';
}

void write_line(std::ostream& out, const std::vector<std::string>& cells) {
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (i) out << ',';
    write_cell(out, cells[i]);
  }
  out << '\n';
}

}  // namespace

void CsvTable::write(std::ostream& out) const {
  write_line(out, columns_);
  for (const auto& row : rows_) write_line(out, row);
}

void CsvTable::write(const std::filesystem::path& file) const {
  std::ofstream out(file);
  if (!out) throw IoError("cannot write " + file.string());
  write(out);
  if (!out) throw IoError("write failed for " + file.string());
}

}  // namespace cglab::cli
