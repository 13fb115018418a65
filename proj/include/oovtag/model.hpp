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

#ifndef OOVTAG_MODEL_HPP_
#define OOVTAG_MODEL_HPP_

#include <cstdint>
#include <cstdio>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "oovtag/corpus.hpp"
#include "oovtag/crf.hpp"
#include "oovtag/encoder.hpp"
#include "oovtag/errors.hpp"
#include "oovtag/rng.hpp"
#include "oovtag/tensor.hpp"

namespace oovtag {

inline constexpr std::string_view kCheckpointMagic = "OOVTAG1";

struct ModelConfig {
  int embed_dim = 64;
  int hidden_dim = 128;
  double dropout = 0.4;
  Pooling pooling = Pooling::kMean;
  bool bio_constraints = false;
};

// Every trainable tensor of the tagger.
struct Parameters {
  EncoderParams encoder;
  CrfParams crf;

  template <typename F>
  void visit(F&& f) {
    encoder.visit(f);
    crf.visit(f);
  }
  template <typename F>
  void visit(F&& f) const {
    encoder.visit(f);
    crf.visit(f);
  }
};

struct Model {
  ModelConfig config;
  VocabIndex vocab;
  TagIndex tags;
  Parameters params;

  static Model create(const ModelConfig& config, VocabIndex vocab, TagIndex tags,
                      Rng& rng) {
    Model m{config, std::move(vocab), std::move(tags), {}};
    m.params.encoder = init_encoder(static_cast<Eigen::Index>(m.vocab.size()),
                                    config.embed_dim, config.hidden_dim, rng);
    m.params.crf = init_crf(2 * config.hidden_dim,
                            static_cast<Eigen::Index>(m.tags.size()), rng);
    return m;
  }

  // CRF parameters as used for scoring, with BIO penalties when enabled.
  CrfParams scoring_crf() const {
    return config.bio_constraints ? with_bio_constraints(params.crf, tags) : params.crf;
  }

  // Viterbi labels for `tokens` (no dropout).
  std::vector<std::string> predict(const std::vector<std::string>& tokens) const {
    return predict(tokens, scoring_crf());
  }

  std::vector<std::string> predict(const std::vector<std::string>& tokens,
                                   const CrfParams& crf) const {
    Matrix x = embed(vocab.lookup(tokens), params.encoder);
    HiddenStates hs = encode(x, params.encoder, config.pooling);
    return tags.decode(viterbi(emissions(hs.states, crf), crf));
  }
};

namespace internal {

inline nlohmann::json tensor_json(const Matrix& m) {
  nlohmann::json j;
  j["shape"] = {m.rows(), m.cols()};
  std::vector<double> data;
  data.reserve(static_cast<std::size_t>(m.size()));
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) data.push_back(m(r, c));
  }
  j["data"] = std::move(data);
  return j;
}

inline Matrix tensor_from_json(const nlohmann::json& j, const std::string& name) {
  const auto rows = j.at("shape").at(0).get<Eigen::Index>();
  const auto cols = j.at("shape").at(1).get<Eigen::Index>();
  const auto& data = j.at("data");
  if (static_cast<Eigen::Index>(data.size()) != rows * cols) {
    throw CheckpointError("tensor '" + name + "' has " + std::to_string(data.size()) +
                          " values for shape " + std::to_string(rows) + "x" +
                          std::to_string(cols));
  }
  Matrix m(rows, cols);
  std::size_t i = 0;
  for (Eigen::Index r = 0; r < rows; ++r) {
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = data[i++].get<double>();
  }
  return m;
}

inline std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

}  // namespace internal

inline nlohmann::json model_config_json(const ModelConfig& c) {
  return {{"embed_dim", c.embed_dim},
          {"hidden_dim", c.hidden_dim},
          {"dropout", c.dropout},
          {"pooling", std::string(to_string(c.pooling))},
          {"bio_constraints", c.bio_constraints}};
}

inline ModelConfig model_config_from_json(const nlohmann::json& j) {
  ModelConfig c;
  c.embed_dim = j.value("embed_dim", c.embed_dim);
  c.hidden_dim = j.value("hidden_dim", c.hidden_dim);
  c.dropout = j.value("dropout", c.dropout);
  c.pooling = pooling_from_string(j.value("pooling", std::string("mean")));
  c.bio_constraints = j.value("bio_constraints", c.bio_constraints);
  return c;
}

// Serialized checkpoint: the magic line, then one JSON document holding the
// tensors (named, with shapes), tag list, vocabulary and its hash, and any
// extra metadata the trainer attaches. Doubles round-trip exactly.
inline std::string serialize_model(const Model& model, const nlohmann::json& extra = {}) {
  nlohmann::json j;
  j["format_version"] = 1;
  j["model_config"] = model_config_json(model.config);
  j["tags"] = model.tags.tags();
  std::vector<std::string> vocab_tokens(model.vocab.tokens().begin() + 2,
                                        model.vocab.tokens().end());
  j["vocab"] = {{"tokens", vocab_tokens},
                {"min_count", model.vocab.min_count()},
                {"hash", internal::hex64(model.vocab.hash())}};
  nlohmann::json tensors = nlohmann::json::object();
  model.params.visit([&](const std::string& name, const Matrix& m) {
    tensors[name] = internal::tensor_json(m);
  });
  j["tensors"] = std::move(tensors);
  j["meta"] = extra.is_null() ? nlohmann::json::object() : extra;
  return std::string(kCheckpointMagic) + "\n" + j.dump() + "\n";
}

struct LoadedModel {
  Model model;
  nlohmann::json meta;
};

// Parses a checkpoint. Throws CheckpointError on a bad magic line, a vocab
// hash mismatch, or tensors inconsistent with the stored config.
inline LoadedModel deserialize_model(std::string_view text) {
  const std::size_t eol = text.find('\n');
  if (eol == std::string_view::npos || text.substr(0, eol) != kCheckpointMagic) {
    throw CheckpointError("not an oovtag checkpoint (missing " +
                          std::string(kCheckpointMagic) + " header)");
  }
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text.substr(eol + 1));
  } catch (const nlohmann::json::exception& e) {
    throw CheckpointError(std::string("checkpoint body: ") + e.what());
  }
  LoadedModel out;
  try {
    out.model.config = model_config_from_json(j.at("model_config"));
    out.model.tags = TagIndex(j.at("tags").get<std::vector<std::string>>());
    const auto& v = j.at("vocab");
    out.model.vocab = VocabIndex(v.at("tokens").get<std::vector<std::string>>(),
                                 v.at("min_count").get<int>());
    if (internal::hex64(out.model.vocab.hash()) != v.at("hash").get<std::string>()) {
      throw CheckpointError("vocabulary hash mismatch");
    }
    const auto& tensors = j.at("tensors");
    out.model.params.visit([&](const std::string& name, Matrix& m) {
      if (!tensors.contains(name)) throw CheckpointError("missing tensor '" + name + "'");
      m = internal::tensor_from_json(tensors.at(name), name);
    });
    out.meta = j.value("meta", nlohmann::json::object());
  } catch (const nlohmann::json::exception& e) {
    throw CheckpointError(std::string("checkpoint field: ") + e.what());
  }

  const auto& p = out.model.params;
  const auto h = static_cast<Eigen::Index>(out.model.config.hidden_dim);
  const auto e = static_cast<Eigen::Index>(out.model.config.embed_dim);
  const auto k = static_cast<Eigen::Index>(out.model.tags.size());
  require_shape(p.encoder.embedding, static_cast<Eigen::Index>(out.model.vocab.size()), e,
                "embedding");
  for (const LstmWeights* w : {&p.encoder.forward, &p.encoder.backward}) {
    require_shape(w->input, 4 * h, e, "lstm input");
    require_shape(w->recurrent, 4 * h, h, "lstm recurrent");
    require_shape(w->bias, 4 * h, 1, "lstm bias");
  }
  require_shape(p.crf.transitions, k, k, "crf transitions");
  require_shape(p.crf.start, k, 1, "crf start");
  require_shape(p.crf.end, k, 1, "crf end");
  require_shape(p.crf.projection, 2 * h, k, "crf projection");
  require_shape(p.crf.bias, k, 1, "crf bias");
  return out;
}

}  // namespace oovtag

#endif  // OOVTAG_MODEL_HPP_
