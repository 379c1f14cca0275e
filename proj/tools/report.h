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

#ifndef CGLAB_TOOLS_REPORT_H_
#define CGLAB_TOOLS_REPORT_H_

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <ostream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "json.hpp"

namespace cglab::cli {

using Json = nlohmann::json;

std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t hash = 0xcbf29ce484222325ULL);
std::uint64_t fnv1a64_file(const std::filesystem::path& file);
std::string hex64(std::uint64_t value);

// Shortest round-trip decimal form.
std::string format_double(double value);

struct ExperimentReport {
  static constexpr int kSchemaVersion = 1;

  std::string command;
  Json config = Json::object();
  std::uint64_t seed = 0;
  Json results = Json::object();
  Json provenance = Json::object();  // file label -> "fnv1a64:<hex>"
  std::vector<std::pair<std::string, double>> timings;  // stage -> seconds

  // Digests every dump file present in dir under "<label>/<file>".
  void add_dump_provenance(const std::filesystem::path& dir, const std::string& label);
  void add_file_provenance(const std::filesystem::path& file, const std::string& label);

  Json to_json(bool include_timings = true) const;
  // Throws FormatError on a missing field or schema mismatch.
  static ExperimentReport FromJson(const Json& j);
  void write(const std::filesystem::path& file) const;
  static ExperimentReport Read(const std::filesystem::path& file);
};

// Adds the elapsed wall time to the report when destroyed.
class StageTimer {
 public:
  StageTimer(ExperimentReport& report, std::string stage);
  ~StageTimer();
  StageTimer(const StageTimer&) = delete;
  StageTimer& operator=(const StageTimer&) = delete;

 private:
  ExperimentReport& report_;
  std::string stage_;
  std::chrono::steady_clock::time_point start_;
};

// Fixed-column CSV with minimal quoting.
class CsvTable {
 public:
  explicit CsvTable(std::vector<std::string> columns);
  void add_row(std::vector<std::string> row);
  std::size_t rows() const { return rows_.size(); }
  void write(std::ostream& out) const;
  void write(const std::filesystem::path& file) const;

 private:
  std::vector<std::string> columns_;
  std::vector<std::vector<std::string>> rows_;
};

}  // namespace cglab::cli

#endif  // CGLAB_TOOLS_REPORT_H_
