// Copyright 2026 The TPGN Authors.
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

#ifndef TPGN_TOOLS_CLI_HPP_
#define TPGN_TOOLS_CLI_HPP_

#include <ostream>

namespace tpgn_cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitRuntime = 1;
inline constexpr int kExitUsage = 2;

// Gradient checks pass below this relative error.
inline constexpr double kGradCheckTolerance = 1e-4;

// Parses argv and runs one subcommand through the C API.
int run_command(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace tpgn_cli

#endif  // TPGN_TOOLS_CLI_HPP_
