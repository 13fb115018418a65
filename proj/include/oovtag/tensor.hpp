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

#ifndef OOVTAG_TENSOR_HPP_
#define OOVTAG_TENSOR_HPP_

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "oovtag/errors.hpp"
#include "oovtag/rng.hpp"

namespace oovtag {

// All training math runs in double precision.
using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

inline void fill_uniform(Matrix& m, double lo, double hi, Rng& rng) {
  // Column-major traversal keeps the draw order tied to storage order.
  for (Eigen::Index j = 0; j < m.cols(); ++j) {
    for (Eigen::Index i = 0; i < m.rows(); ++i) m(i, j) = rng.uniform(lo, hi);
  }
}

inline void require_shape(const Matrix& m, Eigen::Index rows, Eigen::Index cols,
                          const std::string& what) {
  if (m.rows() != rows || m.cols() != cols) {
    throw ShapeError(what + ": expected " + std::to_string(rows) + "x" +
                     std::to_string(cols) + ", got " + std::to_string(m.rows()) +
                     "x" + std::to_string(m.cols()));
  }
}

inline void require_finite(const Matrix& m, const std::string& what) {
  if (!m.allFinite()) throw NumericError(what + " contains NaN or Inf");
}

inline double log_sum_exp(const Eigen::Ref<const Vector>& v) {
  const double top = v.maxCoeff();
  if (top == -std::numeric_limits<double>::infinity()) return top;
  return top + std::log((v.array() - top).exp().sum());
}

inline double sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

struct NamedTensor {
  std::string name;
  Matrix* tensor;
};

// Flat list of the tensors of a parameter struct, in visit order.
template <typename Params>
std::vector<NamedTensor> tensor_list(Params& params) {
  std::vector<NamedTensor> out;
  params.visit([&](const std::string& name, Matrix& m) { out.push_back({name, &m}); });
  return out;
}

template <typename Params>
Params zeros_like(const Params& params) {
  Params out = params;
  out.visit([](const std::string&, Matrix& m) { m.setZero(); });
  return out;
}

}  // namespace oovtag

#endif  // OOVTAG_TENSOR_HPP_
