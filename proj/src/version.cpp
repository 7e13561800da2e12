// Copyright 2026 The DKN Filtering Authors. All Rights Reserved.
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


#include "dkn/version.hpp"

#include <Eigen/Core>

namespace dkn {

std::vector<std::pair<std::string, std::string>> build_info() {
  std::vector<std::pair<std::string, std::string>> out;
  out.emplace_back("dkn_version", kVersion);
#if defined(__clang__)
  out.emplace_back("compiler", "clang " __clang_version__);
#elif defined(__GNUC__)
  out.emplace_back("compiler", "gcc " __VERSION__);
#else
  out.emplace_back("compiler", "unknown");
#endif
  out.emplace_back("cxx_standard", std::to_string(__cplusplus));
  out.emplace_back("eigen_version", std::to_string(EIGEN_WORLD_VERSION) + "." +
                                        std::to_string(EIGEN_MAJOR_VERSION) + "." +
                                        std::to_string(EIGEN_MINOR_VERSION));
#ifdef NDEBUG
  out.emplace_back("assertions", "off");
#else
  out.emplace_back("assertions", "on");
#endif
  return out;
}

}  // namespace dkn
