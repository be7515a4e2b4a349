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

#include <stdexcept>
#include <string>

namespace xmer {

/// Base class for all xmer errors.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Shape or width mismatch between tensors / configured layers.
struct DimensionError : Error {
  using Error::Error;
};

/// A parameter outside its documented domain (rate >= 1, alpha <= 0, ...).
struct InvalidArgument : Error {
  using Error::Error;
};

/// Dataset, manifest, config-file or pairing problems. Maps to exit code 2.
struct DataError : Error {
  using Error::Error;
};

/// Numerical failure: eigensolver non-convergence, non-PSD input,
/// NaN/Inf loss, diverged training. Maps to exit code 3.
struct NumericError : Error {
  using Error::Error;
};

/// Similarity undefined for this query (constant vector, zero norm).
/// Callers skip the query with a warning rather than aborting a sweep.
struct UndefinedSimilarity : Error {
  using Error::Error;
};

}  // namespace xmer
