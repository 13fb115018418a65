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


#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "oovtag/crf.hpp"
#include "oracles.hpp"

namespace oovtag {
namespace {

CrfParams random_crf(Eigen::Index k, Rng& rng, Eigen::Index state_dim = 2) {
  CrfParams c;
  c.transitions.resize(k, k);
  c.start.resize(k, 1);
  c.end.resize(k, 1);
  c.projection.resize(state_dim, k);
  c.bias.resize(k, 1);
  c.visit([&](const std::string&, Matrix& m) { fill_uniform(m, -2, 2, rng); });
  return c;
}

Matrix random_em(Eigen::Index t, Eigen::Index k, Rng& rng) {
  Matrix em(t, k);
  fill_uniform(em, -3, 3, rng);
  return em;
}

CrfParams zero_crf(Eigen::Index k) {
  Rng rng(0);
  CrfParams c = random_crf(k, rng);
  c.visit([](const std::string&, Matrix& m) { m.setZero(); });
  return c;
}

TEST(TagIndex, Layout) {
  TagIndex tags = TagIndex::from_slots({"b", "a"});
  EXPECT_EQ(tags.tags(), (std::vector<std::string>{"O", "B-a", "I-a", "B-b", "I-b"}));
  EXPECT_EQ(tags.id("I-b"), 4);
  EXPECT_THROW(tags.id("B-c"), Error);
  EXPECT_EQ(tags.decode(tags.encode({"O", "B-b", "I-b"})),
            (std::vector<std::string>{"O", "B-b", "I-b"}));
}

TEST(Emissions, Examples) {
  Rng rng(0);
  CrfParams c = random_crf(3, rng, 4);
  Matrix states(2, 4);
  fill_uniform(states, -1, 1, rng);
  c.projection.setZero();
  c.bias.setZero();
  EXPECT_TRUE(emissions(states, c).isZero(0.0));
  c.bias << 1, 2, 3;
  for (Eigen::Index t = 0; t < 2; ++t) {
    EXPECT_EQ(emissions(states, c).row(t), c.bias.transpose());
  }
  // Independent multiply.
  fill_uniform(c.projection, -1, 1, rng);
  Matrix em = emissions(states, c);
  for (Eigen::Index t = 0; t < 2; ++t) {
    for (Eigen::Index j = 0; j < 3; ++j) {
      double acc = c.bias(j, 0);
      for (Eigen::Index d = 0; d < 4; ++d) acc += states(t, d) * c.projection(d, j);
      EXPECT_NEAR(em(t, j), acc, 1e-12);
    }
  }
  EXPECT_THROW(emissions(Matrix::Zero(2, 3), c), ShapeError);
}

TEST(ScoreSequence, Examples) {
  Rng rng(1);
  EXPECT_EQ(score_sequence(Matrix::Zero(3, 2), zero_crf(2), {0, 1, 1}), 0.0);
  CrfParams c = random_crf(2, rng);
  Matrix em = random_em(1, 2, rng);
  EXPECT_DOUBLE_EQ(score_sequence(em, c, {1}), c.start(1, 0) + em(0, 1) + c.end(1, 0));
  em = random_em(3, 2, rng);
  const double hand = c.start(1, 0) + em(0, 1) + c.transitions(1, 0) + em(1, 0) +
                      c.transitions(0, 0) + em(2, 0) + c.end(0, 0);
  EXPECT_NEAR(score_sequence(em, c, {1, 0, 0}), hand, 1e-12);
  EXPECT_THROW(score_sequence(em, c, {1, 0}), Error);
}

TEST(LogPartition, ClosedForms) {
  EXPECT_NEAR(log_partition(Matrix::Zero(1, 2), zero_crf(2)), std::log(2.0), 1e-15);
  for (int t = 1; t <= 4; ++t) {
    for (int k = 1; k <= 4; ++k) {
      EXPECT_NEAR(log_partition(Matrix::Zero(t, k), zero_crf(k)), t * std::log(k), 1e-12);
      EXPECT_NEAR(crf_nll(Matrix::Zero(t, k), zero_crf(k), std::vector<int>(t, 0)),
                  t * std::log(k), 1e-12);
    }
  }
}

TEST(LogPartition, MatchesEnumeration) {
  Rng rng(2);
  CrfParams c = random_crf(3, rng);
  Matrix em = random_em(4, 3, rng);
  EXPECT_NEAR(log_partition(em, c), oracle::log_partition(em, c.transitions, c.start, c.end),
              1e-8);
  // Large scores stay finite.
  em *= 500.0;
  EXPECT_TRUE(std::isfinite(log_partition(em, c)));
  EXPECT_NEAR(log_partition(em, c), oracle::log_partition(em, c.transitions, c.start, c.end),
              1e-8);
}

TEST(CrfNll, SingleTagIsZero) {
  Rng rng(3);
  CrfParams c = random_crf(1, rng);
  EXPECT_NEAR(crf_nll(random_em(4, 1, rng), c, {0, 0, 0, 0}), 0.0, 1e-12);
}

TEST(Viterbi, Examples) {
  Rng rng(4);
  CrfParams c = zero_crf(3);
  Matrix em = Matrix::Zero(4, 3);
  const std::vector<int> want = {2, 0, 1, 1};
  for (int t = 0; t < 4; ++t) em(t, want[static_cast<std::size_t>(t)]) = 50;
  EXPECT_EQ(viterbi(em, c), want);

  CrfParams r = random_crf(3, rng);
  Matrix one = random_em(1, 3, rng);
  Vector total = r.start.col(0) + one.row(0).transpose() + r.end.col(0);
  Eigen::Index best;
  total.maxCoeff(&best);
  EXPECT_EQ(viterbi(one, r), (std::vector<int>{static_cast<int>(best)}));

  r = random_crf(3, rng);
  Matrix em5 = random_em(5, 3, rng);
  EXPECT_EQ(viterbi(em5, r), oracle::best_path(em5, r.transitions, r.start, r.end));
}

TEST(Viterbi, TiesGoToLowestIndex) {
  EXPECT_EQ(viterbi(Matrix::Zero(3, 3), zero_crf(3)), (std::vector<int>{0, 0, 0}));
  // Tags 1 and 2 tie everywhere; 0 is worse.
  Matrix em = Matrix::Zero(3, 3);
  em.col(0).setConstant(-1);
  EXPECT_EQ(viterbi(em, zero_crf(3)), (std::vector<int>{1, 1, 1}));
}

TEST(Viterbi, TieRuleStartsFromTheLastPosition) {
  // Paths 0-1 and 1-0 both score 1. The last tag is decided first (0), then
  // its best predecessor (1).
  CrfParams c = zero_crf(2);
  c.transitions << 0, 1, 1, 0;
  const Matrix em = Matrix::Zero(2, 2);
  EXPECT_EQ(viterbi(em, c), (std::vector<int>{1, 0}));
  EXPECT_EQ(oracle::best_path(em, c.transitions, c.start, c.end), (std::vector<int>{1, 0}));
}

TEST(Viterbi, IntegerScoresWithTiesMatchEnumeration) {
  Rng rng(12);
  for (int trial = 0; trial < 100; ++trial) {
    CrfParams c = random_crf(3, rng);
    c.visit([](const std::string&, Matrix& m) { m = m.array().round(); });
    Matrix em = random_em(4, 3, rng).array().round();
    EXPECT_EQ(viterbi(em, c), oracle::best_path(em, c.transitions, c.start, c.end)) << trial;
  }
}

TEST(Viterbi, BioConstraintsForbidOrphanInside) {
  TagIndex tags = TagIndex::from_slots({"a"});
  Matrix em = Matrix::Zero(2, 3);
  em(0, 0) = 1;  // O
  em(1, 2) = 5;  // I-a
  CrfParams c = with_bio_constraints(zero_crf(3), tags);
  // Best legal path is B-a I-a (score 5); unconstrained, O I-a (score 6) wins.
  EXPECT_EQ(tags.decode(viterbi(em, c)), (std::vector<std::string>{"B-a", "I-a"}));
  EXPECT_EQ(tags.decode(viterbi(em, zero_crf(3))), (std::vector<std::string>{"O", "I-a"}));
}

TEST(CrfMarginals, SumToOneAndMatchEnumeration) {
  Rng rng(5);
  CrfParams c = random_crf(3, rng);
  Matrix em = random_em(3, 3, rng);
  CrfMarginals m = crf_marginals(em, c);
  const double log_z = oracle::log_partition(em, c.transitions, c.start, c.end);
  Matrix unary = Matrix::Zero(3, 3);
  for (const auto& p : oracle::all_paths(3, 3)) {
    const double prob = std::exp(oracle::path_score(em, c.transitions, c.start, c.end, p) - log_z);
    for (int t = 0; t < 3; ++t) unary(t, p[static_cast<std::size_t>(t)]) += prob;
  }
  EXPECT_LT((m.unary - unary).cwiseAbs().maxCoeff(), 1e-10);
  for (const auto& p : m.pairwise) EXPECT_NEAR(p.sum(), 1.0, 1e-12);
}

TEST(CrfBackward, SingleTagHasZeroGradients) {
  Rng rng(6);
  CrfGrads g = crf_backward(random_em(3, 1, rng), random_crf(1, rng), {0, 0, 0});
  EXPECT_LT(g.d_emissions.cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_LT(g.d_transitions.cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_LT(g.d_start.cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_LT(g.d_end.cwiseAbs().maxCoeff(), 1e-12);
}

double rel(double a, double b) { return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-6}); }

TEST(CrfBackward, FiniteDifferences) {
  Rng rng(7);
  CrfParams c = random_crf(3, rng, 4);
  Matrix states(3, 4);
  fill_uniform(states, -1, 1, rng);
  const std::vector<int> gold = {0, 2, 1};
  auto loss = [&] { return crf_nll(emissions(states, c), c, gold); };
  CrfParams grads = zero_crf(3);
  grads.projection = Matrix::Zero(4, 3);
  CrfGrads g = crf_backward(emissions(states, c), c, gold);
  Matrix d_states = emissions_backward(states, c, g, grads);
  EXPECT_NEAR(g.nll, loss(), 1e-12);

  const double eps = 1e-5;
  auto check = [&](Matrix& m, const Matrix& analytic, const char* name) {
    for (Eigen::Index i = 0; i < m.size(); ++i) {
      const double saved = m.data()[i];
      m.data()[i] = saved + eps;
      const double up = loss();
      m.data()[i] = saved - eps;
      const double down = loss();
      m.data()[i] = saved;
      EXPECT_LE(rel(analytic.data()[i], (up - down) / (2 * eps)), 1e-4) << name << i;
    }
  };
  check(c.transitions, grads.transitions, "transitions");
  check(c.start, grads.start, "start");
  check(c.end, grads.end, "end");
  check(c.projection, grads.projection, "projection");
  check(c.bias, grads.bias, "bias");
  check(states, d_states, "states");
}

}  // namespace
}  // namespace oovtag
