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


// Build identification recorded in run metadata.

#pragma once

#include <string>
#include <utility>
#include <vector>

namespace dkn {

inline constexpr const char* kVersion = "1.0.0";

/// (key, value) pairs: library version, compiler, C++ standard, Eigen
/// version, build type.
std::vector<std::pair<std::string, std::string>> build_info();

}  // namespace dkn
