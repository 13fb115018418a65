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

#ifndef OOVTAG_CONTRASTIVE_HPP_
#define OOVTAG_CONTRASTIVE_HPP_

#include <cmath>
#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "oovtag/errors.hpp"
#include "oovtag/tensor.hpp"

namespace oovtag {

enum class InfoNceDenominator {
  kAsWritten,  // sum over the anchors h_j, j = 1..N (includes j = i)
  kPositives,  // sum over the positives h_j+
};

inline std::string_view to_string(InfoNceDenominator d) {
  return d == InfoNceDenominator::kAsWritten ? "as-written" : "positives";
}

inline InfoNceDenominator infonce_denominator_from_string(std::string_view s) {
  if (s == "as-written") return InfoNceDenominator::kAsWritten;
  if (s == "positives") return InfoNceDenominator::kPositives;
  throw Error("unknown infonce_denominator '" + std::string(s) + "'");
}

struct ObjectiveConfig {
  double tau1 = 0.1;   // supervised contrastive temperature
  double tau2 = 0.1;   // InfoNCE temperature
  double alpha = 0.5;  // weight of the supervised term
  InfoNceDenominator infonce_denominator = InfoNceDenominator::kAsWritten;

  void validate() const {
    if (!(tau1 > 0.0)) throw Error("tau1 must be positive");
    if (!(tau2 > 0.0)) throw Error("tau2 must be positive");
    if (!(alpha >= 0.0 && alpha <= 1.0)) throw Error("alpha must be in [0, 1]");
  }
};

// Sentence representations plus the structure the two losses need.
//   group_ids: views of the same original share an id (supervised term).
//   pairs: (anchor, positive) indices into reps (InfoNCE term).
struct ContrastiveBatch {
  std::vector<Vector> reps;
  std::vector<std::int64_t> group_ids;
  std::vector<std::pair<std::size_t, std::size_t>> pairs;

  std::size_t size() const { return reps.size(); }
};

inline double cosine_sim(const Vector& a, const Vector& b) {
  const double na = a.norm();
  const double nb = b.norm();
  if (!(na > 0.0) || !(nb > 0.0)) throw NumericError("cosine of a zero-norm vector");
  if (a.size() != b.size()) throw ShapeError("cosine of vectors of different size");
  return a.dot(b) / (na * nb);
}

namespace internal {

// Adds g * d cos(a, b) / da and g * d cos(a, b) / db.
inline void cosine_backward(const Vector& a, const Vector& b, double g, Vector& da,
                            Vector& db) {
  const double na = a.norm();
  const double nb = b.norm();
  const double cos = a.dot(b) / (na * nb);
  da += g * (b / (na * nb) - cos * a / (na * na));
  db += g * (a / (na * nb) - cos * b / (nb * nb));
}

inline void check_reps(const ContrastiveBatch& batch) {
  for (std::size_t i = 0; i < batch.reps.size(); ++i) {
    if (!(batch.reps[i].norm() > 0.0)) {
      throw NumericError("representation " + std::to_string(i) + " has zero norm");
    }
  }
}

// Positives of each anchor: same group, different index.
inline std::vector<std::vector<std::size_t>> positives_by_anchor(
    const ContrastiveBatch& batch) {
  if (batch.group_ids.size() != batch.reps.size()) {
    throw ShapeError("group_ids and reps differ in length");
  }
  std::map<std::int64_t, std::vector<std::size_t>> members;
  for (std::size_t i = 0; i < batch.reps.size(); ++i) {
    members[batch.group_ids[i]].push_back(i);
  }
  std::vector<std::vector<std::size_t>> out(batch.reps.size());
  for (std::size_t i = 0; i < batch.reps.size(); ++i) {
    const auto& group = members[batch.group_ids[i]];
    if (group.size() < 2) {
      throw Error("anchor " + std::to_string(i) + " is alone in group " +
                  std::to_string(batch.group_ids[i]));
    }
    for (std::size_t j : group) {
      if (j != i) out[i].push_back(j);
    }
  }
  return out;
}

inline Matrix similarity_matrix(const std::vector<Vector>& reps) {
  const auto n = static_cast<Eigen::Index>(reps.size());
  Matrix sim(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i; j < n; ++j) {
      sim(i, j) = sim(j, i) = cosine_sim(reps[static_cast<std::size_t>(i)],
                                         reps[static_cast<std::size_t>(j)]);
    }
  }
  return sim;
}

// Supervised loss and d loss / d sim.
inline double scl_with_sim_grad(const ContrastiveBatch& batch, const ObjectiveConfig& cfg,
                                Matrix* d_sim) {
  const std::size_t n = batch.reps.size();
  if (n < 2) throw Error("supervised contrastive loss needs at least 2 examples");
  check_reps(batch);
  const auto positives = positives_by_anchor(batch);
  const Matrix sim = similarity_matrix(batch.reps);
  const auto nn = static_cast<Eigen::Index>(n);
  if (d_sim != nullptr) *d_sim = Matrix::Zero(nn, nn);

  double total = 0.0;
  Vector logits(nn - 1);
  for (Eigen::Index i = 0; i < nn; ++i) {
    Eigen::Index c = 0;
    for (Eigen::Index k = 0; k < nn; ++k) {
      if (k != i) logits(c++) = sim(i, k) / cfg.tau1;
    }
    const double log_denominator = log_sum_exp(logits);
    const auto& pos = positives[static_cast<std::size_t>(i)];
    const double inv_pos = 1.0 / static_cast<double>(pos.size());
    double anchor = 0.0;
    for (std::size_t j : pos) {
      anchor -= sim(i, static_cast<Eigen::Index>(j)) / cfg.tau1 - log_denominator;
    }
    total += anchor * inv_pos;

    if (d_sim != nullptr) {
      const double scale = 1.0 / (static_cast<double>(n) * cfg.tau1);
      for (Eigen::Index k = 0; k < nn; ++k) {
        if (k == i) continue;
        (*d_sim)(i, k) += scale * std::exp(sim(i, k) / cfg.tau1 - log_denominator);
      }
      for (std::size_t j : pos) {
        (*d_sim)(i, static_cast<Eigen::Index>(j)) -= scale * inv_pos;
      }
    }
  }
  return total / static_cast<double>(n);
}

inline void check_pairs(const ContrastiveBatch& batch) {
  if (batch.pairs.empty()) throw Error("InfoNCE needs at least one pair");
  for (const auto& [a, p] : batch.pairs) {
    if (a >= batch.reps.size() || p >= batch.reps.size()) {
      throw Error("InfoNCE pair (" + std::to_string(a) + ", " + std::to_string(p) +
                  ") is out of range");
    }
  }
}

// InfoNCE loss; fills d loss / d cos(reps[a], reps[b]) as a list of
// (a, b, gradient) triples.
struct SimGrad {
  std::size_t a;
  std::size_t b;
  double g;
};

inline double infonce_with_sim_grad(const ContrastiveBatch& batch,
                                    const ObjectiveConfig& cfg,
                                    std::vector<SimGrad>* d_sim) {
  check_pairs(batch);
  check_reps(batch);
  const std::size_t n = batch.pairs.size();
  const double tau = cfg.tau2;
  double total = 0.0;
  Vector logits(static_cast<Eigen::Index>(n));
  std::vector<std::size_t> others(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto [anchor, positive] = batch.pairs[i];
    for (std::size_t j = 0; j < n; ++j) {
      others[j] = cfg.infonce_denominator == InfoNceDenominator::kAsWritten
                      ? batch.pairs[j].first
                      : batch.pairs[j].second;
      logits(static_cast<Eigen::Index>(j)) =
          cosine_sim(batch.reps[anchor], batch.reps[others[j]]) / tau;
    }
    const double log_denominator = log_sum_exp(logits);
    const double positive_sim = cosine_sim(batch.reps[anchor], batch.reps[positive]);
    total += log_denominator - positive_sim / tau;
    if (d_sim != nullptr) {
      const double scale = 1.0 / (static_cast<double>(n) * tau);
      d_sim->push_back({anchor, positive, -scale});
      for (std::size_t j = 0; j < n; ++j) {
        const double p = std::exp(logits(static_cast<Eigen::Index>(j)) - log_denominator);
        d_sim->push_back({anchor, others[j], scale * p});
      }
    }
  }
  return total / static_cast<double>(n);
}

}  // namespace internal

// Supervised contrastive loss. For each anchor i: the mean over its
// positives j (same group, j != i) of
//   -log( exp(sim(i,j)/tau1) / sum_{k != i} exp(sim(i,k)/tau1) ),
// averaged over all anchors.
inline double scl_loss(const ContrastiveBatch& batch, const ObjectiveConfig& cfg) {
  return internal::scl_with_sim_grad(batch, cfg, nullptr);
}

// InfoNCE over batch.pairs: mean over anchors of
//   -log( exp(sim(h_i, h_i+)/tau2) / sum_j exp(sim(h_i, h_j)/tau2) )
// where h_j ranges over anchors or positives per cfg.infonce_denominator.
inline double infonce_loss(const ContrastiveBatch& batch, const ObjectiveConfig& cfg) {
  return internal::infonce_with_sim_grad(batch, cfg, nullptr);
}

inline double combined_loss(double scl, double infonce, const ObjectiveConfig& cfg) {
  return cfg.alpha * scl + (1.0 - cfg.alpha) * infonce;
}

// Gradient of `weight * scl_loss` with respect to every rep.
inline std::vector<Vector> scl_backward(const ContrastiveBatch& batch,
                                        const ObjectiveConfig& cfg, double weight = 1.0) {
  Matrix d_sim;
  internal::scl_with_sim_grad(batch, cfg, &d_sim);
  std::vector<Vector> grads;
  for (const auto& r : batch.reps) grads.push_back(Vector::Zero(r.size()));
  for (std::size_t i = 0; i < batch.reps.size(); ++i) {
    for (std::size_t k = 0; k < batch.reps.size(); ++k) {
      const double g = weight * d_sim(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(k));
      if (g == 0.0) continue;
      internal::cosine_backward(batch.reps[i], batch.reps[k], g, grads[i], grads[k]);
    }
  }
  return grads;
}

// Gradient of `weight * infonce_loss` with respect to every rep.
inline std::vector<Vector> infonce_backward(const ContrastiveBatch& batch,
                                            const ObjectiveConfig& cfg,
                                            double weight = 1.0) {
  std::vector<internal::SimGrad> d_sim;
  internal::infonce_with_sim_grad(batch, cfg, &d_sim);
  std::vector<Vector> grads;
  for (const auto& r : batch.reps) grads.push_back(Vector::Zero(r.size()));
  for (const auto& [a, b, g] : d_sim) {
    internal::cosine_backward(batch.reps[a], batch.reps[b], weight * g, grads[a], grads[b]);
  }
  return grads;
}

struct ContrastiveResult {
  double scl = 0.0;
  double infonce = 0.0;
  double combined = 0.0;
  std::vector<Vector> scl_grads;      // one per rep of the supervised batch
  std::vector<Vector> infonce_grads;  // one per rep of the InfoNCE batch
};

// combined_loss over two batches and its gradients. An empty batch
// contributes zero.
inline ContrastiveResult contrastive_backward(const ContrastiveBatch& scl_batch,
                                              const ContrastiveBatch& infonce_batch,
                                              const ObjectiveConfig& cfg) {
  cfg.validate();
  ContrastiveResult r;
  if (!scl_batch.reps.empty()) {
    r.scl = scl_loss(scl_batch, cfg);
    r.scl_grads = scl_backward(scl_batch, cfg, cfg.alpha);
  }
  if (!infonce_batch.pairs.empty()) {
    r.infonce = infonce_loss(infonce_batch, cfg);
    r.infonce_grads = infonce_backward(infonce_batch, cfg, 1.0 - cfg.alpha);
  } else {
    for (const auto& rep : infonce_batch.reps) r.infonce_grads.push_back(Vector::Zero(rep.size()));
  }
  r.combined = combined_loss(r.scl, r.infonce, cfg);
  return r;
}

}  // namespace oovtag

#endif  // OOVTAG_CONTRASTIVE_HPP_
