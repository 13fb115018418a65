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

#ifndef OOVTAG_TRAINER_HPP_
#define OOVTAG_TRAINER_HPP_

#include <cmath>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <ostream>
#include <string>
#include <thread>
#include <vector>

#include "json.hpp"
#include "oovtag/augment.hpp"
#include "oovtag/contrastive.hpp"
#include "oovtag/corpus.hpp"
#include "oovtag/crf.hpp"
#include "oovtag/encoder.hpp"
#include "oovtag/errors.hpp"
#include "oovtag/eval.hpp"
#include "oovtag/gradcheck.hpp"
#include "oovtag/infill.hpp"
#include "oovtag/model.hpp"
#include "oovtag/optim.hpp"
#include "oovtag/rng.hpp"

namespace oovtag {

struct TrainConfig {
  int epochs = 30;
  int batch_size = 16;
  AdamConfig adam;
  std::uint64_t seed = 0;
  double lambda_ce = 1.0;
  ObjectiveConfig objective;
  bool word_aug = true;
  bool slot_aug = true;
  // Also train the CRF on augmented views (their labels equal the original's).
  bool tag_augmented = false;
  double token_rate = 0.3;
  double mask_rate = 0.5;
  ModelConfig model;
  int min_count = 1;
  int patience = 10;
  int threads = 1;

  // File locations used by the command-line tool.
  std::string train_file;
  std::string dev_file;
  std::string checkpoint;
  std::string log_file;
  std::string infill_endpoint;
  std::string tables_file;

  bool contrastive_enabled() const { return word_aug || slot_aug; }

  void validate() const {
    if (epochs < 0) throw Error("epochs must be >= 0");
    if (batch_size < 1) throw Error("batch_size must be >= 1");
    if (!(adam.learning_rate > 0.0)) throw Error("learning_rate must be positive");
    if (!(adam.beta1 >= 0.0 && adam.beta1 < 1.0)) throw Error("beta1 must be in [0, 1)");
    if (!(adam.beta2 >= 0.0 && adam.beta2 < 1.0)) throw Error("beta2 must be in [0, 1)");
    if (!(adam.epsilon > 0.0)) throw Error("epsilon must be positive");
    if (!(lambda_ce >= 0.0)) throw Error("lambda_ce must be >= 0");
    objective.validate();
    if (!(token_rate > 0.0 && token_rate <= 1.0)) throw Error("token_rate must be in (0, 1]");
    if (!(mask_rate > 0.0 && mask_rate <= 1.0)) throw Error("mask_rate must be in (0, 1]");
    if (!(model.dropout >= 0.0 && model.dropout < 1.0)) throw Error("dropout must be in [0, 1)");
    if (model.embed_dim < 1 || model.hidden_dim < 1) throw Error("dims must be positive");
    if (min_count < 1) throw Error("min_count must be >= 1");
    if (threads < 1) throw Error("threads must be >= 1");
    if (patience < 1) throw Error("patience must be >= 1");
  }
};

inline nlohmann::json train_config_json(const TrainConfig& c) {
  return {{"epochs", c.epochs},
          {"batch_size", c.batch_size},
          {"learning_rate", c.adam.learning_rate},
          {"beta1", c.adam.beta1},
          {"beta2", c.adam.beta2},
          {"epsilon", c.adam.epsilon},
          {"seed", c.seed},
          {"lambda_ce", c.lambda_ce},
          {"objective",
           {{"tau1", c.objective.tau1},
            {"tau2", c.objective.tau2},
            {"alpha", c.objective.alpha},
            {"infonce_denominator", std::string(to_string(c.objective.infonce_denominator))}}},
          {"word_aug", c.word_aug},
          {"slot_aug", c.slot_aug},
          {"tag_augmented", c.tag_augmented},
          {"token_rate", c.token_rate},
          {"mask_rate", c.mask_rate},
          {"embed_dim", c.model.embed_dim},
          {"hidden_dim", c.model.hidden_dim},
          {"dropout", c.model.dropout},
          {"pooling", std::string(to_string(c.model.pooling))},
          {"bio_constraints", c.model.bio_constraints},
          {"min_count", c.min_count},
          {"patience", c.patience},
          {"threads", c.threads},
          {"train_file", c.train_file},
          {"dev_file", c.dev_file},
          {"checkpoint", c.checkpoint},
          {"log_file", c.log_file},
          {"infill_endpoint", c.infill_endpoint},
          {"tables_file", c.tables_file}};
}

// Reads a config document. Missing keys keep their defaults; unknown keys
// are rejected so that typos do not silently fall back to defaults.
inline TrainConfig train_config_from_json(const nlohmann::json& j) {
  static const std::set<std::string> known = {
      "epochs",     "batch_size", "learning_rate", "beta1",         "beta2",
      "epsilon",    "seed",       "lambda_ce",     "objective",     "word_aug",
      "slot_aug",   "tag_augmented", "token_rate", "mask_rate",     "embed_dim",
      "hidden_dim", "dropout",    "pooling",       "bio_constraints", "min_count",
      "patience",   "threads",    "train_file",    "dev_file",      "checkpoint",
      "log_file",   "infill_endpoint", "tables_file"};
  if (!j.is_object()) throw Error("train config must be a JSON object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (!known.count(it.key())) throw Error("unknown config key '" + it.key() + "'");
  }
  TrainConfig c;
  try {
    c.epochs = j.value("epochs", c.epochs);
    c.batch_size = j.value("batch_size", c.batch_size);
    c.adam.learning_rate = j.value("learning_rate", c.adam.learning_rate);
    c.adam.beta1 = j.value("beta1", c.adam.beta1);
    c.adam.beta2 = j.value("beta2", c.adam.beta2);
    c.adam.epsilon = j.value("epsilon", c.adam.epsilon);
    c.seed = j.value("seed", c.seed);
    c.lambda_ce = j.value("lambda_ce", c.lambda_ce);
    if (j.contains("objective")) {
      const auto& o = j["objective"];
      c.objective.tau1 = o.value("tau1", c.objective.tau1);
      c.objective.tau2 = o.value("tau2", c.objective.tau2);
      c.objective.alpha = o.value("alpha", c.objective.alpha);
      c.objective.infonce_denominator = infonce_denominator_from_string(
          o.value("infonce_denominator", std::string("as-written")));
    }
    c.word_aug = j.value("word_aug", c.word_aug);
    c.slot_aug = j.value("slot_aug", c.slot_aug);
    c.tag_augmented = j.value("tag_augmented", c.tag_augmented);
    c.token_rate = j.value("token_rate", c.token_rate);
    c.mask_rate = j.value("mask_rate", c.mask_rate);
    c.model.embed_dim = j.value("embed_dim", c.model.embed_dim);
    c.model.hidden_dim = j.value("hidden_dim", c.model.hidden_dim);
    c.model.dropout = j.value("dropout", c.model.dropout);
    c.model.pooling = pooling_from_string(j.value("pooling", std::string("mean")));
    c.model.bio_constraints = j.value("bio_constraints", c.model.bio_constraints);
    c.min_count = j.value("min_count", c.min_count);
    c.patience = j.value("patience", c.patience);
    c.threads = j.value("threads", c.threads);
    c.train_file = j.value("train_file", c.train_file);
    c.dev_file = j.value("dev_file", c.dev_file);
    c.checkpoint = j.value("checkpoint", c.checkpoint);
    c.log_file = j.value("log_file", c.log_file);
    c.infill_endpoint = j.value("infill_endpoint", c.infill_endpoint);
    c.tables_file = j.value("tables_file", c.tables_file);
  } catch (const nlohmann::json::exception& e) {
    throw Error(std::string("train config: ") + e.what());
  }
  c.validate();
  return c;
}

// Everything encoded in one optimization step. Indices refer to `inputs`.
struct TrainingBatch {
  std::vector<Utterance> inputs;
  std::vector<AugmentMethod> sources;  // kRandom is also used for originals
  std::vector<bool> is_original;
  std::vector<std::size_t> tagged;
  std::vector<std::size_t> scl_members;
  std::vector<std::int64_t> scl_groups;
  std::vector<std::pair<std::size_t, std::size_t>> infonce_pairs;

  std::size_t originals() const {
    return static_cast<std::size_t>(std::count(is_original.begin(), is_original.end(), true));
  }
};

// Per original: three word-level views (keyboard, OCR, random) grouped with
// the original for the supervised term when word_aug is on; one slot-infill
// view paired with the original for InfoNCE when slot_aug is on and the
// utterance has a slot.
inline TrainingBatch assemble_batch(const std::vector<Utterance>& originals,
                                    const TrainConfig& cfg, const ConfusionTables& tables,
                                    Infiller* infiller, Rng& rng) {
  if (originals.empty()) throw Error("cannot assemble an empty batch");
  TrainingBatch b;
  auto add = [&](Utterance u, AugmentMethod source, bool original) {
    b.inputs.push_back(std::move(u));
    b.sources.push_back(source);
    b.is_original.push_back(original);
    return b.inputs.size() - 1;
  };
  for (const auto& u : originals) {
    const std::size_t self = add(u, AugmentMethod::kRandom, true);
    b.tagged.push_back(self);
    if (cfg.word_aug) {
      b.scl_members.push_back(self);
      b.scl_groups.push_back(u.id);
      for (PerturbMethod method :
           {PerturbMethod::keyboard(), PerturbMethod::ocr(), PerturbMethod::random()}) {
        AugmentedPair pair;
        try {
          pair = word_augment(u, method, cfg.token_rate, tables, rng);
        } catch (const Error& e) {
          throw Error("utterance " + std::to_string(u.id) + ": " + e.what());
        }
        const std::size_t view = add(std::move(pair.augmented), pair.method, false);
        b.scl_members.push_back(view);
        b.scl_groups.push_back(u.id);
        if (cfg.tag_augmented) b.tagged.push_back(view);
      }
    }
    if (cfg.slot_aug && u.has_slot()) {
      if (infiller == nullptr) throw Error("slot augmentation needs an infiller");
      AugmentedPair pair = slot_augment(u, *infiller, cfg.mask_rate, rng);
      const std::size_t view = add(std::move(pair.augmented), AugmentMethod::kSlotInfill, false);
      b.infonce_pairs.emplace_back(self, view);
      if (cfg.tag_augmented) b.tagged.push_back(view);
    }
  }
  return b;
}

struct StepLosses {
  double total = 0.0;
  double scl = 0.0;
  double infonce = 0.0;
  double ce = 0.0;  // mean CRF NLL over tagged inputs
};

// combined contrastive term plus lambda_ce times the mean CRF NLL; disabled
// components are passed as 0.
inline double total_loss(double scl, double infonce, double ce, const TrainConfig& cfg) {
  return combined_loss(scl, infonce, cfg.objective) + cfg.lambda_ce * ce;
}

namespace internal {

template <typename Fn>
void parallel_chunks(std::size_t n, int threads, Fn&& fn) {
  const std::size_t workers = std::min<std::size_t>(static_cast<std::size_t>(threads), n);
  if (workers <= 1) {
    fn(std::size_t{0}, std::size_t{0}, n);
    return;
  }
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    const std::size_t lo = n * w / workers;
    const std::size_t hi = n * (w + 1) / workers;
    pool.emplace_back([&, w, lo, hi] {
      try {
        fn(w, lo, hi);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

}  // namespace internal

// Forward pass over the batch and, when `grads` is given, the exact gradient
// of the total loss added into it. Dropout masks come from streams derived
// from `step_seed`, so the loss is a deterministic function of the params.
inline StepLosses run_step(const Model& model, const TrainingBatch& batch,
                           const TrainConfig& cfg, std::uint64_t step_seed,
                           Parameters* grads, bool train_mode = true) {
  const std::size_t n = batch.inputs.size();
  const CrfParams crf = model.scoring_crf();
  const double dropout = train_mode ? model.config.dropout : 0.0;

  std::vector<std::vector<std::int32_t>> ids(n);
  std::vector<EncoderTape> tapes(n);
  std::vector<HiddenStates> hidden(n);
  internal::parallel_chunks(n, cfg.threads, [&](std::size_t, std::size_t lo, std::size_t hi) {
    for (std::size_t i = lo; i < hi; ++i) {
      ids[i] = model.vocab.lookup(batch.inputs[i].tokens);
      Rng rng(derive_seed(step_seed, {i}));
      hidden[i] = encode(embed(ids[i], model.params.encoder), model.params.encoder,
                         model.config.pooling, dropout, &rng, &tapes[i]);
    }
  });

  StepLosses losses;
  ContrastiveBatch scl_batch;
  for (std::size_t k = 0; k < batch.scl_members.size(); ++k) {
    scl_batch.reps.push_back(hidden[batch.scl_members[k]].pooled);
    scl_batch.group_ids.push_back(batch.scl_groups[k]);
  }
  ContrastiveBatch nce_batch;
  if (!batch.infonce_pairs.empty()) {
    for (const auto& h : hidden) nce_batch.reps.push_back(h.pooled);
    nce_batch.pairs = batch.infonce_pairs;
  }
  ContrastiveResult contrastive = contrastive_backward(scl_batch, nce_batch, cfg.objective);
  losses.scl = contrastive.scl;
  losses.infonce = contrastive.infonce;

  std::vector<Vector> d_pooled(n);
  for (std::size_t i = 0; i < n; ++i) d_pooled[i] = Vector::Zero(hidden[i].pooled.size());
  for (std::size_t k = 0; k < batch.scl_members.size(); ++k) {
    d_pooled[batch.scl_members[k]] += contrastive.scl_grads[k];
  }
  if (!batch.infonce_pairs.empty()) {
    for (std::size_t i = 0; i < n; ++i) d_pooled[i] += contrastive.infonce_grads[i];
  }

  std::vector<int> tagged_slot(n, -1);
  for (std::size_t k = 0; k < batch.tagged.size(); ++k) {
    tagged_slot[batch.tagged[k]] = static_cast<int>(k);
  }
  const double ce_weight =
      batch.tagged.empty() ? 0.0 : cfg.lambda_ce / static_cast<double>(batch.tagged.size());

  const int workers = static_cast<int>(std::min<std::size_t>(
      static_cast<std::size_t>(cfg.threads), std::max<std::size_t>(n, 1)));
  std::vector<Parameters> partial;
  if (grads != nullptr) partial.assign(static_cast<std::size_t>(workers), zeros_like(*grads));
  std::vector<double> nll(batch.tagged.size(), 0.0);

  internal::parallel_chunks(n, workers, [&](std::size_t w, std::size_t lo, std::size_t hi) {
    for (std::size_t i = lo; i < hi; ++i) {
      const auto& states = hidden[i].states;
      Matrix d_states = Matrix::Zero(states.rows(), states.cols());
      if (tagged_slot[i] >= 0) {
        const Matrix em = emissions(states, crf);
        const auto gold = model.tags.encode(batch.inputs[i].labels);
        if (grads == nullptr) {
          nll[static_cast<std::size_t>(tagged_slot[i])] = crf_nll(em, crf, gold);
          continue;
        }
        CrfGrads g = crf_backward(em, crf, gold);
        nll[static_cast<std::size_t>(tagged_slot[i])] = g.nll;
        g.d_emissions *= ce_weight;
        g.d_transitions *= ce_weight;
        g.d_start *= ce_weight;
        g.d_end *= ce_weight;
        d_states = emissions_backward(states, crf, g, partial[w].crf);
      }
      if (grads == nullptr) continue;
      Matrix d_input = encoder_backward(tapes[i], model.params.encoder, d_states, d_pooled[i],
                                        partial[w].encoder);
      embed_backward(ids[i], d_input, partial[w].encoder.embedding);
    }
  });

  double ce_sum = 0.0;
  for (double v : nll) ce_sum += v;
  losses.ce = batch.tagged.empty() ? 0.0 : ce_sum / static_cast<double>(batch.tagged.size());
  losses.total = total_loss(losses.scl, losses.infonce, losses.ce, cfg);
  if (!std::isfinite(losses.total)) {
    throw NumericError("non-finite loss (scl=" + std::to_string(losses.scl) +
                       ", infonce=" + std::to_string(losses.infonce) +
                       ", ce=" + std::to_string(losses.ce) + ")");
  }
  if (grads != nullptr) {
    auto dst = tensor_list(*grads);
    for (auto& p : partial) {
      auto src = tensor_list(p);
      for (std::size_t t = 0; t < dst.size(); ++t) *dst[t].tensor += *src[t].tensor;
    }
  }
  return losses;
}

// Finite-difference check of run_step's gradient for every tensor of the model.
inline GradCheckReport model_grad_check(Model& model, const TrainingBatch& batch,
                                        const TrainConfig& cfg, std::uint64_t step_seed,
                                        double epsilon, double tolerance, Rng& rng,
                                        std::size_t samples = 50,
                                        Parameters* corrupt = nullptr) {
  Parameters grads = zeros_like(model.params);
  run_step(model, batch, cfg, step_seed, &grads);
  if (corrupt != nullptr) grads = *corrupt;
  std::vector<CheckedTensor> tensors;
  auto values = tensor_list(model.params);
  auto analytic = tensor_list(grads);
  for (std::size_t i = 0; i < values.size(); ++i) {
    tensors.push_back({values[i].name, values[i].tensor, analytic[i].tensor});
  }
  auto loss = [&] { return run_step(model, batch, cfg, step_seed, nullptr).total; };
  return grad_check(loss, tensors, epsilon, tolerance, rng, samples);
}

struct EpochMetrics {
  int epoch = 0;
  double loss_total = 0.0;
  double loss_scl = 0.0;
  double loss_nce = 0.0;
  double loss_ce = 0.0;
  double dev_f1 = 0.0;

  bool operator==(const EpochMetrics&) const = default;
};

inline nlohmann::json epoch_json(const EpochMetrics& m) {
  return {{"epoch", m.epoch},       {"loss_total", m.loss_total}, {"loss_scl", m.loss_scl},
          {"loss_nce", m.loss_nce}, {"loss_ce", m.loss_ce},       {"dev_f1", m.dev_f1}};
}

struct TrainResult {
  Model model;  // best-dev parameters
  int best_epoch = 0;
  double best_dev_f1 = 0.0;
  std::vector<EpochMetrics> history;
  bool aborted = false;
  std::string abort_reason;
};

// Checkpoint text for a training result: model plus config, history and
// best epoch.
inline std::string serialize_checkpoint(const TrainResult& r, const TrainConfig& cfg) {
  nlohmann::json meta;
  meta["train_config"] = train_config_json(cfg);
  meta["best_epoch"] = r.best_epoch;
  meta["best_dev_f1"] = r.best_dev_f1;
  nlohmann::json history = nlohmann::json::array();
  for (const auto& m : r.history) history.push_back(epoch_json(m));
  meta["history"] = std::move(history);
  meta["aborted"] = r.aborted;
  return serialize_model(r.model, meta);
}

struct TrainHooks {
  std::ostream* log = nullptr;  // receives one JSON line per epoch
  std::unique_ptr<Infiller> infiller;  // defaults to a lexicon built from train
  ConfusionTables tables = ConfusionTables::standard();
};

namespace internal {
enum StreamKey : std::uint64_t { kInitStream = 1, kShuffleStream, kAugmentStream, kStepStream };
}

// Runs shuffled minibatch epochs with fresh augmentations each epoch, scores
// dev F1 after each epoch and keeps the best parameters. Stops early after
// `patience` epochs without dev improvement. A non-finite loss ends training
// with the last good parameters.
inline TrainResult train(const TrainConfig& cfg, const Dataset& train_ds,
                         const Dataset& dev_ds, TrainHooks hooks = {}) {
  cfg.validate();
  if (train_ds.empty()) throw Error("training set is empty");
  Rng init_rng(derive_seed(cfg.seed, {internal::kInitStream}));
  Model model = Model::create(cfg.model, build_vocab(train_ds, cfg.min_count),
                              TagIndex::from_slots(train_ds.slot_types), init_rng);
  if (!hooks.infiller) hooks.infiller = std::make_unique<LexiconInfiller>(build_lexicon(train_ds));

  TrainResult result;
  result.model = model;
  auto state = OptimizerState<Parameters>::for_params(model.params);
  int since_best = 0;
  std::uint64_t global_step = 0;

  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    std::vector<std::size_t> order(train_ds.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    Rng shuffle_rng(derive_seed(cfg.seed, {internal::kShuffleStream,
                                           static_cast<std::uint64_t>(epoch)}));
    shuffle_rng.shuffle(order);
    Rng aug_rng(derive_seed(cfg.seed, {internal::kAugmentStream,
                                       static_cast<std::uint64_t>(epoch)}));

    EpochMetrics metrics;
    metrics.epoch = epoch;
    std::size_t batches = 0;
    try {
      for (std::size_t start = 0; start < order.size();
           start += static_cast<std::size_t>(cfg.batch_size)) {
        const std::size_t stop =
            std::min(order.size(), start + static_cast<std::size_t>(cfg.batch_size));
        std::vector<Utterance> originals;
        for (std::size_t k = start; k < stop; ++k) {
          originals.push_back(train_ds.utterances[order[k]]);
        }
        TrainingBatch batch = assemble_batch(originals, cfg, hooks.tables,
                                             hooks.infiller.get(), aug_rng);
        Parameters grads = zeros_like(model.params);
        const auto step_seed = derive_seed(cfg.seed, {internal::kStepStream, ++global_step});
        StepLosses losses = run_step(model, batch, cfg, step_seed, &grads);
        for (const auto& t : tensor_list(grads)) require_finite(*t.tensor, t.name + " gradient");
        adam_step(model.params, grads, state, cfg.adam);
        metrics.loss_total += losses.total;
        metrics.loss_scl += losses.scl;
        metrics.loss_nce += losses.infonce;
        metrics.loss_ce += losses.ce;
        ++batches;
      }
    } catch (const NumericError& e) {
      result.aborted = true;
      result.abort_reason = "epoch " + std::to_string(epoch) + ": " + e.what();
      break;
    }
    const double denom = static_cast<double>(std::max<std::size_t>(batches, 1));
    metrics.loss_total /= denom;
    metrics.loss_scl /= denom;
    metrics.loss_nce /= denom;
    metrics.loss_ce /= denom;
    metrics.dev_f1 = dev_ds.empty() ? 0.0 : evaluate(model, dev_ds, {}).overall.f1;
    result.history.push_back(metrics);
    if (hooks.log != nullptr) *hooks.log << epoch_json(metrics).dump() << "\n" << std::flush;

    if (result.best_epoch == 0 || metrics.dev_f1 > result.best_dev_f1 || dev_ds.empty()) {
      result.best_epoch = epoch;
      result.best_dev_f1 = metrics.dev_f1;
      result.model = model;
      since_best = 0;
    } else if (++since_best >= cfg.patience) {
      break;
    }
  }
  return result;
}

}  // namespace oovtag

#endif  // OOVTAG_TRAINER_HPP_
