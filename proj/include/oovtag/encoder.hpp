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

#ifndef OOVTAG_ENCODER_HPP_
#define OOVTAG_ENCODER_HPP_

#include <cmath>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "oovtag/errors.hpp"
#include "oovtag/rng.hpp"
#include "oovtag/tensor.hpp"

namespace oovtag {

// Weights of one LSTM direction. Gate blocks are stacked in the order
// input, forget, cell, output.
struct LstmWeights {
  Matrix input;      // 4h x e
  Matrix recurrent;  // 4h x h
  Matrix bias;       // 4h x 1
};

struct EncoderParams {
  Matrix embedding;  // V x e
  LstmWeights forward;
  LstmWeights backward;

  Eigen::Index vocab_size() const { return embedding.rows(); }
  Eigen::Index embed_dim() const { return embedding.cols(); }
  Eigen::Index hidden_dim() const { return forward.recurrent.cols(); }

  template <typename F>
  void visit(F&& f) {
    f("embedding", embedding);
    f("lstm_fw_input", forward.input);
    f("lstm_fw_recurrent", forward.recurrent);
    f("lstm_fw_bias", forward.bias);
    f("lstm_bw_input", backward.input);
    f("lstm_bw_recurrent", backward.recurrent);
    f("lstm_bw_bias", backward.bias);
  }
  template <typename F>
  void visit(F&& f) const {
    const_cast<EncoderParams*>(this)->visit(
        [&](const std::string& name, Matrix& m) { f(name, static_cast<const Matrix&>(m)); });
  }
};

enum class Pooling { kMean, kFinalStates };

inline std::string_view to_string(Pooling p) {
  return p == Pooling::kMean ? "mean" : "final";
}

inline Pooling pooling_from_string(std::string_view s) {
  if (s == "mean") return Pooling::kMean;
  if (s == "final" || s == "final-states-concat") return Pooling::kFinalStates;
  throw Error("unknown pooling '" + std::string(s) + "'");
}

// Embeddings uniform(-0.1, 0.1); LSTM weights uniform(-1/sqrt(h), 1/sqrt(h)).
inline EncoderParams init_encoder(Eigen::Index vocab_size, Eigen::Index embed_dim,
                                  Eigen::Index hidden_dim, Rng& rng) {
  EncoderParams p;
  p.embedding.resize(vocab_size, embed_dim);
  fill_uniform(p.embedding, -0.1, 0.1, rng);
  const double k = 1.0 / std::sqrt(static_cast<double>(hidden_dim));
  for (LstmWeights* w : {&p.forward, &p.backward}) {
    w->input.resize(4 * hidden_dim, embed_dim);
    w->recurrent.resize(4 * hidden_dim, hidden_dim);
    w->bias.resize(4 * hidden_dim, 1);
    fill_uniform(w->input, -k, k, rng);
    fill_uniform(w->recurrent, -k, k, rng);
    fill_uniform(w->bias, -k, k, rng);
  }
  return p;
}

inline Matrix embed(const std::vector<std::int32_t>& ids, const EncoderParams& params) {
  Matrix out(static_cast<Eigen::Index>(ids.size()), params.embed_dim());
  for (std::size_t t = 0; t < ids.size(); ++t) {
    if (ids[t] < 0 || ids[t] >= params.vocab_size()) {
      throw Error("token id " + std::to_string(ids[t]) + " out of range [0, " +
                  std::to_string(params.vocab_size()) + ")");
    }
    out.row(static_cast<Eigen::Index>(t)) = params.embedding.row(ids[t]);
  }
  return out;
}

// Adds the rows of d_input into the embedding gradient at `ids`.
inline void embed_backward(const std::vector<std::int32_t>& ids, const Matrix& d_input,
                           Matrix& d_embedding) {
  for (std::size_t t = 0; t < ids.size(); ++t) {
    d_embedding.row(ids[t]) += d_input.row(static_cast<Eigen::Index>(t));
  }
}

// Activations of one direction, indexed by time step.
struct DirectionTape {
  Matrix gates;      // T x 4h, post-activation
  Matrix cell;       // T x h
  Matrix cell_tanh;  // T x h
  Matrix hidden;     // T x h
};

// Everything the backward pass needs from one forward pass.
struct EncoderTape {
  Matrix input;  // T x e
  DirectionTape forward;
  DirectionTape backward;
  Matrix dropout_mask;  // T x 2h scale factors; empty when dropout is off
  Pooling pooling = Pooling::kMean;
};

struct HiddenStates {
  Matrix states;  // T x 2h; row t = [forward_t, backward_t]
  Vector pooled;  // 2h
};

namespace internal {

inline DirectionTape run_direction(const Matrix& x, const LstmWeights& w, bool reverse) {
  const Eigen::Index steps = x.rows();
  const Eigen::Index h = w.recurrent.cols();
  DirectionTape tape;
  tape.gates.resize(steps, 4 * h);
  tape.cell.resize(steps, h);
  tape.cell_tanh.resize(steps, h);
  tape.hidden.resize(steps, h);

  Matrix pre = x * w.input.transpose();
  pre.rowwise() += w.bias.col(0).transpose();

  Vector h_prev = Vector::Zero(h);
  Vector c_prev = Vector::Zero(h);
  Vector z(4 * h);
  for (Eigen::Index s = 0; s < steps; ++s) {
    const Eigen::Index t = reverse ? steps - 1 - s : s;
    z.noalias() = w.recurrent * h_prev;
    z += pre.row(t).transpose();
    for (Eigen::Index k = 0; k < h; ++k) {
      const double i = sigmoid(z(k));
      const double f = sigmoid(z(h + k));
      const double g = std::tanh(z(2 * h + k));
      const double o = sigmoid(z(3 * h + k));
      const double c = f * c_prev(k) + i * g;
      const double tc = std::tanh(c);
      tape.gates(t, k) = i;
      tape.gates(t, h + k) = f;
      tape.gates(t, 2 * h + k) = g;
      tape.gates(t, 3 * h + k) = o;
      tape.cell(t, k) = c;
      tape.cell_tanh(t, k) = tc;
      c_prev(k) = c;
      h_prev(k) = o * tc;
    }
    tape.hidden.row(t) = h_prev.transpose();
  }
  return tape;
}

// Accumulates weight gradients into `grad`; returns d_input.
inline Matrix backprop_direction(const Matrix& x, const LstmWeights& w,
                                 const DirectionTape& tape, const Matrix& d_hidden,
                                 bool reverse, LstmWeights& grad) {
  const Eigen::Index steps = x.rows();
  const Eigen::Index h = w.recurrent.cols();
  Matrix dz_all(steps, 4 * h);
  Vector dh_next = Vector::Zero(h);
  Vector dc_next = Vector::Zero(h);
  Vector dz(4 * h);
  for (Eigen::Index s = steps - 1; s >= 0; --s) {
    const Eigen::Index t = reverse ? steps - 1 - s : s;
    const bool first = s == 0;
    const Eigen::Index t_prev = reverse ? t + 1 : t - 1;
    for (Eigen::Index k = 0; k < h; ++k) {
      const double i = tape.gates(t, k);
      const double f = tape.gates(t, h + k);
      const double g = tape.gates(t, 2 * h + k);
      const double o = tape.gates(t, 3 * h + k);
      const double tc = tape.cell_tanh(t, k);
      const double c_prev = first ? 0.0 : tape.cell(t_prev, k);
      const double dh = d_hidden(t, k) + dh_next(k);
      const double dc = dh * o * (1.0 - tc * tc) + dc_next(k);
      dz(k) = dc * g * i * (1.0 - i);
      dz(h + k) = dc * c_prev * f * (1.0 - f);
      dz(2 * h + k) = dc * i * (1.0 - g * g);
      dz(3 * h + k) = dh * tc * o * (1.0 - o);
      dc_next(k) = dc * f;
    }
    dz_all.row(t) = dz.transpose();
    dh_next.noalias() = w.recurrent.transpose() * dz;
    if (!first) grad.recurrent.noalias() += dz * tape.hidden.row(t_prev);
  }
  grad.input.noalias() += dz_all.transpose() * x;
  grad.bias.col(0) += dz_all.colwise().sum().transpose();
  return dz_all * w.input;
}

}  // namespace internal

// Bidirectional LSTM over `input` (T x e). When `dropout` > 0 an inverted
// dropout mask drawn from `rng` scales the output states. `tape` may be null
// for inference.
inline HiddenStates encode(const Matrix& input, const EncoderParams& params,
                           Pooling pooling = Pooling::kMean, double dropout = 0.0,
                           Rng* rng = nullptr, EncoderTape* tape = nullptr) {
  if (input.rows() < 1) throw Error("cannot encode an empty sequence");
  require_shape(input, input.rows(), params.embed_dim(), "encoder input");
  const Eigen::Index steps = input.rows();
  const Eigen::Index h = params.hidden_dim();

  auto fw = internal::run_direction(input, params.forward, false);
  auto bw = internal::run_direction(input, params.backward, true);

  HiddenStates out;
  out.states.resize(steps, 2 * h);
  out.states.leftCols(h) = fw.hidden;
  out.states.rightCols(h) = bw.hidden;

  Matrix mask;
  if (dropout > 0.0) {
    if (rng == nullptr) throw Error("dropout requires a random source");
    const double keep = 1.0 - dropout;
    mask.resize(steps, 2 * h);
    for (Eigen::Index t = 0; t < steps; ++t) {
      for (Eigen::Index k = 0; k < 2 * h; ++k) {
        mask(t, k) = rng->bernoulli(keep) ? 1.0 / keep : 0.0;
      }
    }
    out.states.array() *= mask.array();
  }
  require_finite(out.states, "encoder states");

  if (pooling == Pooling::kMean) {
    out.pooled = out.states.colwise().mean().transpose();
  } else {
    out.pooled.resize(2 * h);
    out.pooled.head(h) = out.states.row(steps - 1).head(h).transpose();
    out.pooled.tail(h) = out.states.row(0).tail(h).transpose();
  }

  if (tape != nullptr) {
    tape->input = input;
    tape->forward = std::move(fw);
    tape->backward = std::move(bw);
    tape->dropout_mask = std::move(mask);
    tape->pooling = pooling;
  }
  return out;
}

inline Vector mean_pool(const Matrix& states) {
  if (states.rows() < 1) throw Error("cannot pool an empty sequence");
  return states.colwise().mean().transpose();
}

// Reverse mode through pooling, dropout and both directions. Adds weight
// gradients into `grads` (embedding excluded) and returns d_input (T x e).
inline Matrix encoder_backward(const EncoderTape& tape, const EncoderParams& params,
                               const Matrix& d_states, const Vector& d_pooled,
                               EncoderParams& grads) {
  const Eigen::Index steps = tape.input.rows();
  const Eigen::Index h = params.hidden_dim();
  if (tape.forward.hidden.rows() != steps || tape.forward.hidden.cols() != h) {
    throw ShapeError("encoder tape does not match the parameters");
  }
  require_shape(d_states, steps, 2 * h, "d_states");
  if (d_pooled.size() != 2 * h) throw ShapeError("d_pooled has the wrong size");

  Matrix d = d_states;
  if (tape.pooling == Pooling::kMean) {
    d.rowwise() += (d_pooled / static_cast<double>(steps)).transpose();
  } else {
    d.row(steps - 1).head(h) += d_pooled.head(h).transpose();
    d.row(0).tail(h) += d_pooled.tail(h).transpose();
  }
  if (tape.dropout_mask.size() > 0) d.array() *= tape.dropout_mask.array();

  Matrix d_input = internal::backprop_direction(tape.input, params.forward, tape.forward,
                                                d.leftCols(h), false, grads.forward);
  d_input += internal::backprop_direction(tape.input, params.backward, tape.backward,
                                          d.rightCols(h), true, grads.backward);
  return d_input;
}

}  // namespace oovtag

#endif  // OOVTAG_ENCODER_HPP_
