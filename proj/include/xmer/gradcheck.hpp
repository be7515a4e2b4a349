// Copyright 2026 The xmer authors
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

#pragma once

#include <functional>

#include "xmer/tensor.hpp"

namespace xmer {

/// Compares the analytic gradient of a scalar function against central
/// finite differences (f(x + h e_i) - f(x - h e_i)) / (2h), coordinate by
/// coordinate, and returns the worst relative error with denominator
/// max(|analytic|, |numeric|, 1e-8).
///
/// `f` must rebuild its graph from the leaf it receives; the leaf is
/// re-created for every perturbed evaluation so stateful closures (e.g.
/// RNG-consuming ones) must reset their own state per call.
double grad_check(const std::function<TensorPtr(const TensorPtr&)>& f,
                  const TensorPtr& x, double h);

}  // namespace xmer
