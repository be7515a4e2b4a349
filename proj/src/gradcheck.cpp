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

#include "xmer/gradcheck.hpp"

#include <algorithm>
#include <cmath>

namespace xmer {

double grad_check(const std::function<TensorPtr(const TensorPtr&)>& f,
                  const TensorPtr& x, double h) {
  if (!(h > 0.0)) throw InvalidArgument("grad_check: step must be positive");

  auto leaf = Tensor::create(x->shape(), x->values(), /*requires_grad=*/true);
  auto out = f(leaf);
  if (!out->is_scalar()) {
    throw InvalidArgument("grad_check: f must return a scalar");
  }
  out->backward();
  const std::vector<double> analytic = leaf->grad();

  auto eval_at = [&](std::size_t i, double delta) {
    std::vector<double> vals = x->values();
    vals[i] += delta;
    auto probe = Tensor::create(x->shape(), std::move(vals), false);
    return f(probe)->value();
  };

  double worst = 0.0;
  for (std::size_t i = 0; i < x->size(); ++i) {
    const double numeric = (eval_at(i, h) - eval_at(i, -h)) / (2.0 * h);
    const double denom =
        std::max({std::abs(analytic[i]), std::abs(numeric), 1e-8});
    worst = std::max(worst, std::abs(analytic[i] - numeric) / denom);
  }
  return worst;
}

}  // namespace xmer
