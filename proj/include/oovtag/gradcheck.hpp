// Copyright 2026 The oovtag Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef OOVTAG_GRADCHECK_HPP_
#define OOVTAG_GRADCHECK_HPP_

#include <algorithm>
#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "oovtag/rng.hpp"
#include "oovtag/tensor.hpp"

namespace oovtag {

// A tensor under test and its analytic gradient.
struct CheckedTensor {
  std::string name;
  Matrix* value;
  const Matrix* gradient;
};

struct TensorCheck {
  std::string name;
  std::size_t coordinates = 0;
  double max_rel_error = 0.0;
  double max_abs_error = 0.0;
};

struct GradCheckReport {
  std::vector<TensorCheck> tensors;
  double tolerance = 0.0;
  bool passed = true;

  double max_rel_error() const {
    double worst = 0.0;
    for (const auto& t : tensors) worst = std::max(worst, t.max_rel_error);
    return worst;
  }
};

// Relative error with a floor on the denominator so that coordinates whose
// true gradient is ~0 are judged on absolute error.
inline double relative_error(double analytic, double numeric, double floor = 1e-6) {
  return std::abs(analytic - numeric) /
         std::max({std::abs(analytic), std::abs(numeric), floor});
}

// Central differences of `loss` against the analytic gradients. Tensors with
// at most `samples` entries are checked exhaustively; larger ones at
// `samples` random coordinates. `loss` must read the tensors through the
// pointers in `tensors`.
inline GradCheckReport grad_check(const std::function<double()>& loss,
                                  const std::vector<CheckedTensor>& tensors,
                                  double epsilon, double tolerance, Rng& rng,
                                  std::size_t samples = 50) {
  GradCheckReport report;
  report.tolerance = tolerance;
  for (const auto& t : tensors) {
    TensorCheck check{t.name, 0, 0.0, 0.0};
    const auto size = static_cast<std::size_t>(t.value->size());
    std::vector<std::size_t> coords;
    if (size <= samples) {
      for (std::size_t i = 0; i < size; ++i) coords.push_back(i);
    } else {
      for (std::size_t i = 0; i < samples; ++i) coords.push_back(rng.index(size));
    }
    for (std::size_t flat : coords) {
      double& x = t.value->data()[flat];
      const double saved = x;
      x = saved + epsilon;
      const double up = loss();
      x = saved - epsilon;
      const double down = loss();
      x = saved;
      const double numeric = (up - down) / (2.0 * epsilon);
      const double analytic = t.gradient->data()[flat];
      check.max_rel_error = std::max(check.max_rel_error, relative_error(analytic, numeric));
      check.max_abs_error = std::max(check.max_abs_error, std::abs(analytic - numeric));
      ++check.coordinates;
    }
    report.passed = report.passed && check.max_rel_error <= tolerance;
    report.tensors.push_back(std::move(check));
  }
  return report;
}

}  // namespace oovtag

#endif  // OOVTAG_GRADCHECK_HPP_
