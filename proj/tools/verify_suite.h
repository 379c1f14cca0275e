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

#ifndef CGLAB_TOOLS_VERIFY_SUITE_H_
#define CGLAB_TOOLS_VERIFY_SUITE_H_

#include <cstdint>
#include <string>
#include <vector>

namespace cglab::cli {

struct CheckResult {
  std::string name;
  bool passed = false;
  std::string detail;
  double seconds = 0.0;
};

// Check names in run order. "scan" is slow and only runs when named.
const std::vector<std::string>& check_names();

CheckResult run_check(const std::string& name, std::uint64_t seed);

// suite is "all" or one check name. Results keep check_names() order
// regardless of jobs.
std::vector<CheckResult> run_suite(const std::string& suite, std::uint64_t seed,
                                   int jobs);

}  // namespace cglab::cli

#endif  // CGLAB_TOOLS_VERIFY_SUITE_H_
