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

#ifndef OOVTAG_OPTIM_HPP_
#define OOVTAG_OPTIM_HPP_

#include <cmath>
#include <cstdint>

#include "oovtag/errors.hpp"
#include "oovtag/tensor.hpp"

namespace oovtag {

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

template <typename Params>
struct OptimizerState {
  Params first_moment;
  Params second_moment;
  std::int64_t step = 0;

  static OptimizerState for_params(const Params& params) {
    return {zeros_like(params), zeros_like(params), 0};
  }
};

// One Adam update with bias correction.
template <typename Params>
void adam_step(Params& params, const Params& grads, OptimizerState<Params>& state,
               const AdamConfig& cfg) {
  state.step += 1;
  const double t = static_cast<double>(state.step);
  const double c1 = 1.0 - std::pow(cfg.beta1, t);
  const double c2 = 1.0 - std::pow(cfg.beta2, t);

  auto weights = tensor_list(params);
  auto gradients = tensor_list(const_cast<Params&>(grads));
  auto first = tensor_list(state.first_moment);
  auto second = tensor_list(state.second_moment);
  if (gradients.size() != weights.size() || first.size() != weights.size() ||
      second.size() != weights.size()) {
    throw ShapeError("gradient and parameter sets differ");
  }
  for (std::size_t i = 0; i < weights.size(); ++i) {
    Matrix& w = *weights[i].tensor;
    const Matrix& g = *gradients[i].tensor;
    Matrix& m = *first[i].tensor;
    Matrix& v = *second[i].tensor;
    for (const Matrix* other : {&g, static_cast<const Matrix*>(&m),
                                static_cast<const Matrix*>(&v)}) {
      if (other->rows() != w.rows() || other->cols() != w.cols()) {
        throw ShapeError("shape mismatch for '" + weights[i].name + "'");
      }
    }
    m = cfg.beta1 * m + (1.0 - cfg.beta1) * g;
    v = cfg.beta2 * v + (1.0 - cfg.beta2) * g.cwiseProduct(g);
    w.array() -= cfg.learning_rate * (m.array() / c1) /
                 ((v.array() / c2).sqrt() + cfg.epsilon);
  }
}

}  // namespace oovtag

#endif  // OOVTAG_OPTIM_HPP_
