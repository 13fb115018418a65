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

#ifndef OOVTAG_CRF_HPP_
#define OOVTAG_CRF_HPP_

#include <cmath>
#include <limits>
#include <map>
#include <string>
#include <unordered_map>
#include <vector>

#include "oovtag/corpus.hpp"
#include "oovtag/errors.hpp"
#include "oovtag/rng.hpp"
#include "oovtag/tensor.hpp"

namespace oovtag {

// Bijection between tag strings and 0..K-1. "O" is always tag 0, followed by
// B-/I- pairs for each slot in sorted order.
class TagIndex {
 public:
  TagIndex() : TagIndex(std::vector<std::string>{std::string(kOutsideTag)}) {}

  explicit TagIndex(std::vector<std::string> tags) : tags_(std::move(tags)) {
    for (std::size_t k = 0; k < tags_.size(); ++k) {
      if (!index_.emplace(tags_[k], static_cast<int>(k)).second) {
        throw Error("duplicate tag '" + tags_[k] + "'");
      }
    }
  }

  static TagIndex from_slots(const std::set<std::string>& slots) {
    std::vector<std::string> tags{std::string(kOutsideTag)};
    for (const auto& s : slots) {
      tags.push_back("B-" + s);
      tags.push_back("I-" + s);
    }
    return TagIndex(std::move(tags));
  }

  std::size_t size() const { return tags_.size(); }
  const std::string& tag(int k) const { return tags_.at(static_cast<std::size_t>(k)); }
  const std::vector<std::string>& tags() const { return tags_; }

  // Unknown tags raise Error.
  int id(const std::string& tag) const {
    auto it = index_.find(tag);
    if (it == index_.end()) throw Error("unknown tag '" + tag + "'");
    return it->second;
  }
  bool contains(const std::string& tag) const { return index_.count(tag) > 0; }

  std::vector<int> encode(const std::vector<std::string>& labels) const {
    std::vector<int> out;
    out.reserve(labels.size());
    for (const auto& l : labels) out.push_back(id(l));
    return out;
  }
  std::vector<std::string> decode(const std::vector<int>& path) const {
    std::vector<std::string> out;
    out.reserve(path.size());
    for (int k : path) out.push_back(tag(k));
    return out;
  }

  bool operator==(const TagIndex& other) const { return tags_ == other.tags_; }

 private:
  std::vector<std::string> tags_;
  std::unordered_map<std::string, int> index_;
};

struct CrfParams {
  Matrix transitions;  // K x K, row = from tag, column = to tag
  Matrix start;        // K x 1
  Matrix end;          // K x 1
  Matrix projection;   // 2h x K
  Matrix bias;         // K x 1

  Eigen::Index num_tags() const { return transitions.rows(); }

  template <typename F>
  void visit(F&& f) {
    f("crf_transitions", transitions);
    f("crf_start", start);
    f("crf_end", end);
    f("crf_projection", projection);
    f("crf_bias", bias);
  }
  template <typename F>
  void visit(F&& f) const {
    const_cast<CrfParams*>(this)->visit(
        [&](const std::string& name, Matrix& m) { f(name, static_cast<const Matrix&>(m)); });
  }
};

// Transition, start and end scores start at zero; the projection is
// uniform(-0.1, 0.1).
inline CrfParams init_crf(Eigen::Index state_dim, Eigen::Index num_tags, Rng& rng) {
  CrfParams p;
  p.transitions = Matrix::Zero(num_tags, num_tags);
  p.start = Matrix::Zero(num_tags, 1);
  p.end = Matrix::Zero(num_tags, 1);
  p.projection.resize(state_dim, num_tags);
  fill_uniform(p.projection, -0.1, 0.1, rng);
  p.bias = Matrix::Zero(num_tags, 1);
  return p;
}

inline constexpr double kIllegalTransitionPenalty = -1e4;

// Copy of `crf` with a large penalty on transitions that BIO forbids
// (I-x after anything but B-x or I-x, and I-x at the start).
inline CrfParams with_bio_constraints(const CrfParams& crf, const TagIndex& tags) {
  CrfParams out = crf;
  const auto k = static_cast<int>(tags.size());
  for (int to = 0; to < k; ++to) {
    const auto to_tag = parse_tag(tags.tag(to));
    if (!to_tag || to_tag->prefix != 'I') continue;
    out.start(to, 0) += kIllegalTransitionPenalty;
    for (int from = 0; from < k; ++from) {
      const auto from_tag = parse_tag(tags.tag(from));
      if (from_tag->prefix == 'O' || from_tag->slot != to_tag->slot) {
        out.transitions(from, to) += kIllegalTransitionPenalty;
      }
    }
  }
  return out;
}

// T x K emission scores: states * projection + bias.
inline Matrix emissions(const Matrix& states, const CrfParams& crf) {
  require_shape(states, states.rows(), crf.projection.rows(), "crf input states");
  Matrix em = states * crf.projection;
  em.rowwise() += crf.bias.col(0).transpose();
  return em;
}

inline double score_sequence(const Matrix& em, const CrfParams& crf,
                             const std::vector<int>& path) {
  if (static_cast<Eigen::Index>(path.size()) != em.rows()) {
    throw Error("path length " + std::to_string(path.size()) +
                " does not match sequence length " + std::to_string(em.rows()));
  }
  if (path.empty()) throw Error("empty path");
  double score = crf.start(path.front(), 0) + crf.end(path.back(), 0);
  for (std::size_t t = 0; t < path.size(); ++t) {
    score += em(static_cast<Eigen::Index>(t), path[t]);
    if (t > 0) score += crf.transitions(path[t - 1], path[t]);
  }
  return score;
}

namespace internal {

// alpha(t, k): log-sum of scores of all prefixes ending in tag k at t.
inline Matrix forward_scores(const Matrix& em, const CrfParams& crf) {
  const Eigen::Index steps = em.rows();
  const Eigen::Index k = em.cols();
  Matrix alpha(steps, k);
  alpha.row(0) = crf.start.col(0).transpose() + em.row(0);
  Vector scratch(k);
  for (Eigen::Index t = 1; t < steps; ++t) {
    for (Eigen::Index to = 0; to < k; ++to) {
      scratch = alpha.row(t - 1).transpose() + crf.transitions.col(to);
      alpha(t, to) = log_sum_exp(scratch) + em(t, to);
    }
  }
  return alpha;
}

// beta(t, k): log-sum of scores of all suffixes after tag k at t.
inline Matrix backward_scores(const Matrix& em, const CrfParams& crf) {
  const Eigen::Index steps = em.rows();
  const Eigen::Index k = em.cols();
  Matrix beta(steps, k);
  beta.row(steps - 1) = crf.end.col(0).transpose();
  Vector scratch(k);
  for (Eigen::Index t = steps - 2; t >= 0; --t) {
    for (Eigen::Index from = 0; from < k; ++from) {
      scratch = crf.transitions.row(from).transpose() + em.row(t + 1).transpose() +
                beta.row(t + 1).transpose();
      beta(t, from) = log_sum_exp(scratch);
    }
  }
  return beta;
}

}  // namespace internal

inline double log_partition(const Matrix& em, const CrfParams& crf) {
  if (em.rows() < 1) throw Error("log_partition needs at least one step");
  Matrix alpha = internal::forward_scores(em, crf);
  Vector last = alpha.row(em.rows() - 1).transpose() + crf.end.col(0);
  return log_sum_exp(last);
}

inline double crf_nll(const Matrix& em, const CrfParams& crf, const std::vector<int>& gold) {
  const double gold_score = score_sequence(em, crf, gold);
  return log_partition(em, crf) - gold_score;
}

// Highest-scoring path. Ties go to the lowest tag index, both at each
// backpointer and at the final step.
inline std::vector<int> viterbi(const Matrix& em, const CrfParams& crf) {
  const Eigen::Index steps = em.rows();
  const Eigen::Index k = em.cols();
  if (steps < 1) throw Error("viterbi needs at least one step");
  Matrix delta(steps, k);
  Eigen::MatrixXi back(steps, k);
  delta.row(0) = crf.start.col(0).transpose() + em.row(0);
  for (Eigen::Index t = 1; t < steps; ++t) {
    for (Eigen::Index to = 0; to < k; ++to) {
      double best = -std::numeric_limits<double>::infinity();
      int arg = 0;
      for (Eigen::Index from = 0; from < k; ++from) {
        const double s = delta(t - 1, from) + crf.transitions(from, to);
        if (s > best) {
          best = s;
          arg = static_cast<int>(from);
        }
      }
      delta(t, to) = best + em(t, to);
      back(t, to) = arg;
    }
  }
  double best = -std::numeric_limits<double>::infinity();
  int last = 0;
  for (Eigen::Index to = 0; to < k; ++to) {
    const double s = delta(steps - 1, to) + crf.end(to, 0);
    if (s > best) {
      best = s;
      last = static_cast<int>(to);
    }
  }
  std::vector<int> path(static_cast<std::size_t>(steps));
  path.back() = last;
  for (Eigen::Index t = steps - 1; t > 0; --t) {
    path[static_cast<std::size_t>(t - 1)] = back(t, path[static_cast<std::size_t>(t)]);
  }
  return path;
}

struct CrfMarginals {
  double log_z = 0.0;
  Matrix unary;                 // T x K, P(y_t = k)
  std::vector<Matrix> pairwise; // T-1 matrices, P(y_t = i, y_{t+1} = j)
};

inline CrfMarginals crf_marginals(const Matrix& em, const CrfParams& crf) {
  const Eigen::Index steps = em.rows();
  const Eigen::Index k = em.cols();
  if (steps < 1) throw Error("marginals need at least one step");
  Matrix alpha = internal::forward_scores(em, crf);
  Matrix beta = internal::backward_scores(em, crf);
  CrfMarginals out;
  Vector last = alpha.row(steps - 1).transpose() + crf.end.col(0);
  out.log_z = log_sum_exp(last);
  out.unary = ((alpha + beta).array() - out.log_z).exp().matrix();
  out.pairwise.reserve(static_cast<std::size_t>(steps > 0 ? steps - 1 : 0));
  for (Eigen::Index t = 0; t + 1 < steps; ++t) {
    Matrix p(k, k);
    for (Eigen::Index i = 0; i < k; ++i) {
      for (Eigen::Index j = 0; j < k; ++j) {
        p(i, j) = std::exp(alpha(t, i) + crf.transitions(i, j) + em(t + 1, j) +
                           beta(t + 1, j) - out.log_z);
      }
    }
    out.pairwise.push_back(std::move(p));
  }
  return out;
}

// Gradients of crf_nll.
struct CrfGrads {
  double nll = 0.0;
  Matrix d_emissions;   // T x K
  Matrix d_transitions; // K x K
  Matrix d_start;       // K x 1
  Matrix d_end;         // K x 1
};

// Expected minus observed feature counts, from forward-backward marginals.
inline CrfGrads crf_backward(const Matrix& em, const CrfParams& crf,
                             const std::vector<int>& gold) {
  const Eigen::Index steps = em.rows();
  const Eigen::Index k = em.cols();
  const double gold_score = score_sequence(em, crf, gold);
  CrfMarginals m = crf_marginals(em, crf);
  CrfGrads g;
  g.nll = m.log_z - gold_score;
  g.d_emissions = m.unary;
  g.d_transitions = Matrix::Zero(k, k);
  for (const auto& p : m.pairwise) g.d_transitions += p;
  g.d_start = m.unary.row(0).transpose();
  g.d_end = m.unary.row(steps - 1).transpose();
  for (Eigen::Index t = 0; t < steps; ++t) {
    g.d_emissions(t, gold[static_cast<std::size_t>(t)]) -= 1.0;
    if (t > 0) {
      g.d_transitions(gold[static_cast<std::size_t>(t - 1)],
                      gold[static_cast<std::size_t>(t)]) -= 1.0;
    }
  }
  g.d_start(gold.front(), 0) -= 1.0;
  g.d_end(gold.back(), 0) -= 1.0;
  return g;
}

// Chains d_emissions through the projection. Adds parameter gradients into
// `grads` and returns d_states.
inline Matrix emissions_backward(const Matrix& states, const CrfParams& crf,
                                 const CrfGrads& g, CrfParams& grads) {
  grads.projection.noalias() += states.transpose() * g.d_emissions;
  grads.bias.col(0) += g.d_emissions.colwise().sum().transpose();
  grads.transitions += g.d_transitions;
  grads.start += g.d_start;
  grads.end += g.d_end;
  return g.d_emissions * crf.projection.transpose();
}

}  // namespace oovtag

#endif  // OOVTAG_CRF_HPP_
