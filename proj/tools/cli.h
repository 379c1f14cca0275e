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

#ifndef CGLAB_TOOLS_CLI_H_
#define CGLAB_TOOLS_CLI_H_

#include <ostream>
#include <string>
#include <vector>

namespace cglab::cli {

enum ExitCode : int {
  kExitOk = 0,
  kExitUsage = 1,
  kExitVerification = 2,
  kExitIo = 3,
};

// args excludes the program name. Primary output goes to out, one-line
// diagnostics to err.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace cglab::cli

#endif  // CGLAB_TOOLS_CLI_H_
