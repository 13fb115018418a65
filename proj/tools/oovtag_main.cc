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

// Command-line front end: augment, perturb, train, eval, gradcheck.
//
// Exit codes: 0 success, 1 usage error, 2 runtime error.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <set>
#include <sstream>
#include <string>

#include "oovtag/oovtag.hpp"
#include "CLI11.hpp"

namespace {

using namespace oovtag;

constexpr int kUsageError = 1;
constexpr int kRuntimeError = 2;

ConfusionTables load_tables(const std::string& path) {
  return path.empty() ? ConfusionTables::standard()
                      : ConfusionTables::from_json(read_file(path));
}

std::string infill_endpoint(const std::string& flag) {
  if (!flag.empty()) return flag;
  const char* env = std::getenv("OOVTAG_INFILL_URL");
  return env == nullptr ? "" : env;
}

std::unique_ptr<Infiller> make_infiller(const Dataset& ds, const std::string& endpoint) {
  auto lexicon = std::make_unique<LexiconInfiller>(build_lexicon(ds));
  if (endpoint.empty()) return lexicon;
  return std::make_unique<FallbackInfiller>(std::make_unique<RemoteInfiller>(endpoint),
                                            std::move(lexicon));
}

// Accepts "snips", "mr", a JSON array of slot names, or an object with an
// "oov_slots" array.
std::set<std::string> load_oov_slots(const std::string& source) {
  if (source.empty()) return {};
  if (source == "snips") return snips_oov_slots();
  if (source == "mr" || source == "mit-restaurant") return mit_restaurant_oov_slots();
  auto j = nlohmann::json::parse(read_file(source));
  if (j.is_object()) j = j.at("oov_slots");
  return j.get<std::set<std::string>>();
}

struct AugmentArgs {
  std::string in;
  std::string out;
  std::string method = "random";
  double rate = 0.3;
  double mask_rate = 0.5;
  std::uint64_t seed = 0;
  std::string endpoint;
  int threads = 1;
};

int run_augment(const AugmentArgs& a) {
  const Dataset ds = parse_conll(read_file(a.in));
  const ConfusionTables tables = ConfusionTables::standard();
  std::unique_ptr<Infiller> infiller;
  if (a.method == "slot") infiller = make_infiller(ds, infill_endpoint(a.endpoint));

  std::vector<Utterance> out;
  out.reserve(ds.size());
  for (const auto& u : ds.utterances) {
    Rng rng(derive_seed(a.seed, {static_cast<std::uint64_t>(u.id)}));
    if (a.method == "slot") {
      // Utterances without a slot are copied so the output stays aligned.
      out.push_back(u.has_slot() ? slot_augment(u, *infiller, a.mask_rate, rng).augmented : u);
      continue;
    }
    PerturbMethod method = a.method == "keyboard" ? PerturbMethod::keyboard()
                           : a.method == "ocr"    ? PerturbMethod::ocr()
                                                  : PerturbMethod::random();
    out.push_back(word_augment(u, method, a.rate, tables, rng).augmented);
  }
  write_file_atomic(a.out, serialize_conll(Dataset::from(std::move(out))));
  return 0;
}

struct PerturbArgs {
  std::string in;
  std::string out;
  double noise = 0.2;
  std::uint64_t seed = 0;
};

int run_perturb(const PerturbArgs& a) {
  const Dataset ds = parse_conll(read_file(a.in));
  const Dataset noised = noise_test_set(ds, a.noise, ConfusionTables::standard(), a.seed);
  write_file_atomic(a.out, serialize_conll(noised));
  return 0;
}

struct TrainArgs {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<int> threads;
  std::string out;
  std::string endpoint;
};

int run_train(const TrainArgs& a) {
  TrainConfig cfg = train_config_from_json(nlohmann::json::parse(read_file(a.config)));
  if (a.seed) cfg.seed = *a.seed;
  if (a.threads) cfg.threads = *a.threads;
  if (!a.out.empty()) cfg.checkpoint = a.out;
  if (!a.endpoint.empty()) cfg.infill_endpoint = a.endpoint;
  if (cfg.train_file.empty()) throw Error("config lacks train_file");
  if (cfg.checkpoint.empty()) throw Error("config lacks checkpoint (or pass --out)");

  // Relative paths in the config resolve against the config's directory.
  const auto base = std::filesystem::path(a.config).parent_path();
  auto resolve = [&](const std::string& p) {
    return p.empty() || std::filesystem::path(p).is_absolute() ? p : (base / p).string();
  };
  const Dataset train_ds = parse_conll(read_file(resolve(cfg.train_file)));
  const Dataset dev_ds =
      cfg.dev_file.empty() ? Dataset{} : parse_conll(read_file(resolve(cfg.dev_file)));

  std::ostringstream log;
  TrainHooks hooks;
  hooks.log = &log;
  hooks.tables = load_tables(resolve(cfg.tables_file));
  hooks.infiller = make_infiller(train_ds, infill_endpoint(cfg.infill_endpoint));
  TrainResult result = train(cfg, train_ds, dev_ds, std::move(hooks));

  std::cout << log.str();
  if (!cfg.log_file.empty()) write_file_atomic(resolve(cfg.log_file), log.str());
  const std::string ckpt_path = a.out.empty() ? resolve(cfg.checkpoint) : a.out;
  write_file_atomic(ckpt_path, serialize_checkpoint(result, cfg));
  if (result.aborted) {
    std::cerr << "training aborted: " << result.abort_reason
              << "; wrote last good checkpoint to " << ckpt_path << "\n";
    return kRuntimeError;
  }
  std::cerr << "best epoch " << result.best_epoch << ", dev F1 " << result.best_dev_f1
            << "; wrote " << ckpt_path << "\n";
  return 0;
}

struct EvalArgs {
  std::string ckpt;
  std::string test;
  std::string oov_slots;
  std::optional<double> noise;
  std::uint64_t seed = 0;
  std::string report;
};

int run_eval(const EvalArgs& a) {
  const LoadedModel loaded = deserialize_model(read_file(a.ckpt));
  const Dataset ds = parse_conll(read_file(a.test));
  std::optional<NoiseConfig> noise;
  if (a.noise) noise = NoiseConfig{*a.noise, a.seed, ConfusionTables::standard()};
  EvalReport report = evaluate(loaded.model, ds, load_oov_slots(a.oov_slots), noise);
  report.meta["dataset"] = a.test;
  report.meta["checkpoint"] = a.ckpt;
  if (!a.report.empty()) {
    report_emit(report, a.report, &std::cout);
  } else {
    std::cout << format_report_table(report);
  }
  return 0;
}

int run_gradcheck(std::uint64_t seed, double epsilon, double tolerance) {
  // Small model so that every coordinate of most tensors is checked.
  Dataset ds = parse_conll(
      "play O\nbeth B-artist\nnow O\n\nadd O\nkim B-artist\nsong O\n\n"
      "play O\nthe O\nsong O\n\nadd O\nbeth B-artist\nlee I-artist\n");
  TrainConfig cfg;
  cfg.model.embed_dim = 4;
  cfg.model.hidden_dim = 3;
  Rng rng(seed);
  Model model = Model::create(cfg.model, build_vocab(ds, 1),
                              TagIndex::from_slots(ds.slot_types), rng);
  LexiconInfiller infiller(build_lexicon(ds));
  TrainingBatch batch =
      assemble_batch(ds.utterances, cfg, ConfusionTables::standard(), &infiller, rng);
  GradCheckReport report = model_grad_check(model, batch, cfg, seed, epsilon, tolerance, rng);
  for (const auto& t : report.tensors) {
    std::printf("%-20s coords=%4zu max_rel_err=%.3e\n", t.name.c_str(), t.coordinates,
                t.max_rel_error);
  }
  std::printf("%s (tolerance %.1e)\n", report.passed ? "PASS" : "FAIL", tolerance);
  return report.passed ? 0 : kRuntimeError;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"oovtag: OOV-robust slot filling with multi-level augmentation"};
  app.require_subcommand(1);

  AugmentArgs aug;
  auto* augment = app.add_subcommand("augment", "Write one augmented copy of a corpus");
  augment->add_option("--in", aug.in, "Input CoNLL file")->required();
  augment->add_option("--out", aug.out, "Output CoNLL file")->required();
  augment->add_option("--method", aug.method, "Augmentation method")
      ->check(CLI::IsMember({"keyboard", "ocr", "random", "slot"}))
      ->capture_default_str();
  augment->add_option("--rate", aug.rate, "Token selection rate for word-level methods")
      ->check(CLI::Range(0.0, 1.0))
      ->capture_default_str();
  augment->add_option("--mask-rate", aug.mask_rate, "Slot-word mask rate for --method slot")
      ->check(CLI::Range(0.0, 1.0))
      ->capture_default_str();
  augment->add_option("--seed", aug.seed, "Random seed")->capture_default_str();
  augment->add_option("--infill-endpoint", aug.endpoint,
                      "Infill service base URL (default: $OOVTAG_INFILL_URL, else lexicon)");
  augment->add_option("--threads", aug.threads, "Worker threads")->capture_default_str();

  PerturbArgs pert;
  auto* perturb = app.add_subcommand("perturb", "Write a character-noised copy of a test set");
  perturb->add_option("--in", pert.in, "Input CoNLL file")->required();
  perturb->add_option("--out", pert.out, "Output CoNLL file")->required();
  perturb->add_option("--noise", pert.noise, "Fraction of tokens to perturb")
      ->check(CLI::Range(0.0, 1.0))
      ->capture_default_str();
  perturb->add_option("--seed", pert.seed, "Random seed")->capture_default_str();

  TrainArgs tr;
  int train_threads = 0;
  std::uint64_t train_seed = 0;
  auto* train_cmd = app.add_subcommand("train", "Train a tagger from a JSON config");
  train_cmd->add_option("--config", tr.config, "Training config (JSON)")->required();
  auto* seed_opt = train_cmd->add_option("--seed", train_seed, "Override the config seed");
  auto* threads_opt = train_cmd->add_option("--threads", train_threads, "Worker threads");
  train_cmd->add_option("--out", tr.out, "Checkpoint path (overrides the config)");
  train_cmd->add_option("--infill-endpoint", tr.endpoint, "Infill service base URL");

  EvalArgs ev;
  double eval_noise = 0.0;
  auto* eval_cmd = app.add_subcommand("eval", "Evaluate a checkpoint");
  eval_cmd->add_option("--ckpt", ev.ckpt, "Checkpoint file")->required();
  eval_cmd->add_option("--test", ev.test, "Test CoNLL file")->required();
  eval_cmd->add_option("--oov-slots", ev.oov_slots,
                       "OOV slot list: JSON file, or 'snips' / 'mr' presets");
  auto* noise_opt = eval_cmd->add_option("--noise", eval_noise,
                                         "Also score a noised copy at this level")
                        ->check(CLI::Range(0.0, 1.0));
  eval_cmd->add_option("--seed", ev.seed, "Noise seed")->capture_default_str();
  eval_cmd->add_option("--report", ev.report, "Write the JSON report here");
  int eval_threads = 1;
  eval_cmd->add_option("--threads", eval_threads, "Worker threads");

  std::uint64_t gc_seed = 7;
  double gc_eps = 1e-5;
  double gc_tol = 1e-4;
  auto* gradcheck = app.add_subcommand("gradcheck", "Finite-difference check of all gradients");
  gradcheck->add_option("--seed", gc_seed, "Random seed")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n\n";
    CLI::App* context = &app;
    for (auto* sub : app.get_subcommands()) context = sub;
    std::cerr << context->help();
    return kUsageError;
  }

  try {
    if (*augment) return run_augment(aug);
    if (*perturb) return run_perturb(pert);
    if (*train_cmd) {
      if (*seed_opt) tr.seed = train_seed;
      if (*threads_opt) tr.threads = train_threads;
      return run_train(tr);
    }
    if (*eval_cmd) {
      if (*noise_opt) ev.noise = eval_noise;
      return run_eval(ev);
    }
    if (*gradcheck) return run_gradcheck(gc_seed, gc_eps, gc_tol);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kRuntimeError;
  }
  return kUsageError;
}
