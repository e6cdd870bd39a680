// Copyright 2026 The MODSM Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <stdexcept>
#include <string>

namespace modsm {

/// Every hard error raised by the library. Callers at the CLI boundary turn
/// it into a nonzero exit code.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

#define MODSM_REQUIRE(cond, msg)                         \
  do {                                                   \
    if (!(cond)) throw ::modsm::Error(std::string(msg)); \
  } while (0)

}  // namespace modsm
