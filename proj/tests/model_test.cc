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
#include <string>

#include <gtest/gtest.h>

#include "oovtag/gradcheck.hpp"
#include "oovtag/model.hpp"
#include "oovtag/optim.hpp"

namespace oovtag {
namespace {

Model tiny_model(std::uint64_t seed) {
  Dataset ds = parse_conll("play O\nbeth B-artist\n\nadd O\nkim B-artist\nlee I-artist\n");
  ModelConfig cfg;
  cfg.embed_dim = 4;
  cfg.hidden_dim = 3;
  Rng rng(seed);
  return Model::create(cfg, build_vocab(ds, 1), TagIndex::from_slots(ds.slot_types), rng);
}

TEST(AdamStep, ZeroGradientLeavesParameters) {
  Model m = tiny_model(1);
  const Parameters before = m.params;
  auto state = OptimizerState<Parameters>::for_params(m.params);
  adam_step(m.params, zeros_like(m.params), state, AdamConfig{});
  EXPECT_EQ(state.step, 1);
  auto a = tensor_list(m.params);
  auto b = tensor_list(const_cast<Parameters&>(before));
  for (std::size_t i = 0; i < a.size(); ++i) EXPECT_EQ(*a[i].tensor, *b[i].tensor);
}

TEST(AdamStep, FirstStepMovesByLearningRateAgainstSign) {
  Model m = tiny_model(2);
  Parameters before = m.params;
  Parameters g = zeros_like(m.params);
  Rng rng(3);
  g.visit([&](const std::string&, Matrix& x) { fill_uniform(x, -1, 1, rng); });
  AdamConfig cfg;
  cfg.learning_rate = 0.01;
  auto state = OptimizerState<Parameters>::for_params(m.params);
  adam_step(m.params, g, state, cfg);
  auto after = tensor_list(m.params);
  auto start = tensor_list(before);
  auto grads = tensor_list(g);
  for (std::size_t k = 0; k < after.size(); ++k) {
    for (Eigen::Index i = 0; i < after[k].tensor->size(); ++i) {
      const double gi = grads[k].tensor->data()[i];
      const double want = -cfg.learning_rate * gi / (std::abs(gi) + cfg.epsilon);
      EXPECT_NEAR(after[k].tensor->data()[i] - start[k].tensor->data()[i], want, 1e-15);
    }
  }
}

TEST(AdamStep, DeterministicTrajectoryAndShapeCheck) {
  auto run = [] {
    Model m = tiny_model(4);
    auto state = OptimizerState<Parameters>::for_params(m.params);
    Rng rng(5);
    for (int s = 0; s < 5; ++s) {
      Parameters g = zeros_like(m.params);
      g.visit([&](const std::string&, Matrix& x) { fill_uniform(x, -1, 1, rng); });
      adam_step(m.params, g, state, AdamConfig{});
    }
    return serialize_model(m);
  };
  EXPECT_EQ(run(), run());
  Model m = tiny_model(6);
  Parameters bad = zeros_like(m.params);
  bad.crf.bias.resize(7, 1);
  auto state = OptimizerState<Parameters>::for_params(m.params);
  EXPECT_THROW(adam_step(m.params, bad, state, AdamConfig{}), ShapeError);
}

TEST(GradCheck, QuadraticIsExact) {
  Matrix x(3, 2), coef(3, 2);
  Rng rng(7);
  fill_uniform(x, -2, 2, rng);
  fill_uniform(coef, 0.5, 3, rng);
  Matrix grad = 2 * coef.cwiseProduct(x);
  auto loss = [&] { return (coef.array() * x.array().square()).sum(); };
  GradCheckReport r = grad_check(loss, {{"x", &x, &grad}}, 1e-5, 1e-9, rng);
  EXPECT_TRUE(r.passed);
  EXPECT_LE(r.max_rel_error(), 1e-9);
  EXPECT_EQ(r.tensors[0].coordinates, 6u);
}

TEST(GradCheck, DetectsCorruptedEntry) {
  Matrix x(2, 2), coef(2, 2);
  Rng rng(8);
  fill_uniform(x, 1, 2, rng);
  fill_uniform(coef, 1, 2, rng);
  Matrix grad = 2 * coef.cwiseProduct(x);
  grad(1, 0) *= 2;
  auto loss = [&] { return (coef.array() * x.array().square()).sum(); };
  GradCheckReport r = grad_check(loss, {{"x", &x, &grad}}, 1e-5, 1e-4, rng);
  EXPECT_FALSE(r.passed);
  EXPECT_GE(r.max_rel_error(), 0.3);
}

TEST(GradCheck, RelativeErrorFloor) {
  EXPECT_EQ(relative_error(0.0, 0.0), 0.0);
  EXPECT_NEAR(relative_error(1e-9, 0.0), 1e-3, 1e-15);
  EXPECT_NEAR(relative_error(2.0, 1.0), 0.5, 1e-15);
}

TEST(Checkpoint, RoundTripIsExact) {
  Model m = tiny_model(9);
  m.config.bio_constraints = true;
  m.config.pooling = Pooling::kFinalStates;
  const std::string text = serialize_model(m, {{"note", "x"}});
  EXPECT_EQ(text.rfind("OOVTAG1\n", 0), 0u);
  LoadedModel back = deserialize_model(text);
  EXPECT_EQ(serialize_model(back.model, {{"note", "x"}}), text);
  EXPECT_EQ(back.meta["note"], "x");
  EXPECT_EQ(back.model.vocab.tokens(), m.vocab.tokens());
  EXPECT_EQ(back.model.tags.tags(), m.tags.tags());
  EXPECT_EQ(back.model.params.encoder.embedding, m.params.encoder.embedding);
  EXPECT_EQ(back.model.predict({"add", "kim", "lee"}), m.predict({"add", "kim", "lee"}));
}

TEST(Checkpoint, RejectsDamagedFiles) {
  Model m = tiny_model(10);
  const std::string text = serialize_model(m);
  EXPECT_THROW(deserialize_model("OOVTAG0\n{}"), CheckpointError);
  EXPECT_THROW(deserialize_model("OOVTAG1\nnot json"), CheckpointError);

  auto j = nlohmann::json::parse(text.substr(text.find('\n') + 1));
  auto tampered = j;
  tampered["vocab"]["tokens"][0] = "zzz";
  EXPECT_THROW(deserialize_model("OOVTAG1\n" + tampered.dump()), CheckpointError);
  tampered = j;
  tampered["tensors"]["crf_bias"]["shape"] = {2, 1};
  EXPECT_THROW(deserialize_model("OOVTAG1\n" + tampered.dump()), CheckpointError);
  tampered = j;
  tampered["tensors"].erase("lstm_bw_bias");
  EXPECT_THROW(deserialize_model("OOVTAG1\n" + tampered.dump()), CheckpointError);
}

}  // namespace
}  // namespace oovtag
