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


// Fast end-to-end invariant checks run by `dkn selftest`.

#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace dkn {

struct SelfTestCheck {
  std::string name;
  bool passed = false;
  std::string detail;  // measured value and bound
};

/// Kernel constraints on random head inputs, resampling round trips,
/// receptive fields, shift-and-stitch against the per-pixel oracle, pass
/// counts and primitive gradients. Takes a few seconds.
std::vector<SelfTestCheck> run_self_test(std::uint64_t seed);

}  // namespace dkn
