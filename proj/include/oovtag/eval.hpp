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

#ifndef OOVTAG_EVAL_HPP_
#define OOVTAG_EVAL_HPP_

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "json.hpp"
#include "oovtag/augment.hpp"
#include "oovtag/corpus.hpp"
#include "oovtag/errors.hpp"
#include "oovtag/io.hpp"
#include "oovtag/model.hpp"

namespace oovtag {

// OOV slot sets of the Snips and MIT-restaurant benchmarks.
inline const std::set<std::string>& snips_oov_slots() {
  static const std::set<std::string> slots = {
      "playlist", "object_name", "entity_name",   "album",          "movie_name",
      "track",    "poi",         "geographic_poi", "restaurant_name"};
  return slots;
}

inline const std::set<std::string>& mit_restaurant_oov_slots() {
  static const std::set<std::string> slots = {"restaurant_name", "dish", "amenity",
                                              "location"};
  return slots;
}

struct PRF {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;

  // Rates are 0 when their denominator is 0.
  static PRF from_counts(std::size_t tp, std::size_t fp, std::size_t fn) {
    PRF r{0.0, 0.0, 0.0, tp, fp, fn};
    if (tp + fp > 0) r.precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
    if (tp + fn > 0) r.recall = static_cast<double>(tp) / static_cast<double>(tp + fn);
    if (r.precision + r.recall > 0) {
      r.f1 = 2.0 * r.precision * r.recall / (r.precision + r.recall);
    }
    return r;
  }

  bool operator==(const PRF&) const = default;
};

struct SpanCounts {
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;
};

struct SpanScores {
  PRF overall;
  std::map<std::string, PRF> per_slot;
};

using LabelSequences = std::vector<std::vector<std::string>>;

// Exact-match span scoring: a predicted span counts only when slot, start and
// end all match a gold span. `keep` restricts scoring to some slots.
template <typename Keep>
SpanScores score_spans(const LabelSequences& pred, const LabelSequences& gold, Keep&& keep) {
  if (pred.size() != gold.size()) {
    throw Error("prediction and gold counts differ: " + std::to_string(pred.size()) +
                " vs " + std::to_string(gold.size()));
  }
  std::map<std::string, SpanCounts> counts;
  for (std::size_t i = 0; i < gold.size(); ++i) {
    if (pred[i].size() != gold[i].size()) {
      throw Error("utterance " + std::to_string(i) + ": prediction length " +
                  std::to_string(pred[i].size()) + " != gold length " +
                  std::to_string(gold[i].size()));
    }
    std::set<Span> g;
    for (auto& s : extract_spans(gold[i])) {
      if (keep(s.slot)) g.insert(std::move(s));
    }
    std::set<Span> p;
    for (auto& s : extract_spans(pred[i])) {
      if (keep(s.slot)) p.insert(std::move(s));
    }
    for (const auto& s : p) {
      if (g.count(s)) {
        ++counts[s.slot].tp;
      } else {
        ++counts[s.slot].fp;
      }
    }
    for (const auto& s : g) {
      if (!p.count(s)) ++counts[s.slot].fn;
    }
  }
  SpanScores out;
  SpanCounts total;
  for (const auto& [slot, c] : counts) {
    out.per_slot[slot] = PRF::from_counts(c.tp, c.fp, c.fn);
    total.tp += c.tp;
    total.fp += c.fp;
    total.fn += c.fn;
  }
  out.overall = PRF::from_counts(total.tp, total.fp, total.fn);
  return out;
}

// Micro-averaged span P/R/F1 plus per-slot scores. Predictions must already
// be valid BIO.
inline SpanScores span_f1(const LabelSequences& pred, const LabelSequences& gold) {
  return score_spans(pred, gold, [](const std::string&) { return true; });
}

namespace internal {

// Aligns two datasets by utterance id.
inline std::pair<LabelSequences, LabelSequences> aligned_labels(const Dataset& pred,
                                                                const Dataset& gold) {
  std::map<std::int64_t, const Utterance*> by_id;
  for (const auto& u : pred.utterances) by_id[u.id] = &u;
  if (by_id.size() != gold.utterances.size()) {
    throw Error("prediction set has " + std::to_string(by_id.size()) +
                " utterances, gold has " + std::to_string(gold.utterances.size()));
  }
  LabelSequences p;
  LabelSequences g;
  for (const auto& u : gold.utterances) {
    auto it = by_id.find(u.id);
    if (it == by_id.end()) throw Error("no prediction for utterance " + std::to_string(u.id));
    p.push_back(it->second->labels);
    g.push_back(u.labels);
  }
  return {std::move(p), std::move(g)};
}

}  // namespace internal

inline SpanScores span_f1(const Dataset& pred, const Dataset& gold) {
  auto [p, g] = internal::aligned_labels(pred, gold);
  return span_f1(p, g);
}

// Span F1 over spans whose slot is in `oov_slots`. Slot names that never
// occur in the gold data are reported through `unknown` and otherwise
// ignored.
inline PRF f1_ov(const LabelSequences& pred, const LabelSequences& gold,
                 const std::set<std::string>& oov_slots,
                 std::vector<std::string>* unknown = nullptr) {
  if (unknown != nullptr) {
    std::set<std::string> seen;
    for (const auto& labels : gold) {
      for (const auto& l : labels) {
        auto slot = slot_of(l);
        if (!slot.empty()) seen.emplace(slot);
      }
    }
    for (const auto& s : oov_slots) {
      if (!seen.count(s)) unknown->push_back(s);
    }
  }
  return score_spans(pred, gold, [&](const std::string& slot) {
           return oov_slots.count(slot) > 0;
         }).overall;
}

inline PRF f1_ov(const Dataset& pred, const Dataset& gold,
                 const std::set<std::string>& oov_slots,
                 std::vector<std::string>* unknown = nullptr) {
  auto [p, g] = internal::aligned_labels(pred, gold);
  return f1_ov(p, g, oov_slots, unknown);
}

struct EvalReport {
  PRF overall;
  std::map<std::string, PRF> per_slot;
  PRF f1_ov;
  std::optional<PRF> f1_noise;
  nlohmann::json meta = nlohmann::json::object();

  bool operator==(const EvalReport&) const = default;
};

struct NoiseConfig {
  double level = 0.2;
  std::uint64_t seed = 0;
  ConfusionTables tables = ConfusionTables::standard();
};

struct Predictions {
  Dataset dataset;          // gold tokens and ids with predicted labels
  std::size_t repairs = 0;  // labels rewritten by BIO repair
};

// Viterbi-decodes every utterance and repairs the predicted BIO.
inline Predictions predict_dataset(const Model& model, const Dataset& ds) {
  Predictions out;
  const CrfParams crf = model.scoring_crf();
  std::vector<Utterance> utterances;
  utterances.reserve(ds.size());
  for (const auto& u : ds.utterances) {
    Utterance p = u;
    auto raw = model.predict(u.tokens, crf);
    p.labels = validate_bio(raw, BioMode::kRepair);
    out.repairs += count_repairs(raw, p.labels);
    utterances.push_back(std::move(p));
  }
  out.dataset = Dataset::from(std::move(utterances));
  return out;
}

// Scores `model` on `ds`; with `noise`, also on a noised copy of `ds`.
inline EvalReport evaluate(const Model& model, const Dataset& ds,
                           const std::set<std::string>& oov_slots,
                           const std::optional<NoiseConfig>& noise = std::nullopt) {
  EvalReport report;
  Predictions pred = predict_dataset(model, ds);
  auto [p, g] = internal::aligned_labels(pred.dataset, ds);
  SpanScores scores = span_f1(p, g);
  report.overall = scores.overall;
  report.per_slot = scores.per_slot;
  std::vector<std::string> unknown;
  report.f1_ov = f1_ov(p, g, oov_slots, &unknown);
  report.meta["utterances"] = ds.size();
  report.meta["bio_repairs"] = pred.repairs;
  report.meta["oov_slots"] = oov_slots;
  report.meta["unknown_oov_slots"] = unknown;
  if (noise) {
    Dataset noised = noise_test_set(ds, noise->level, noise->tables, noise->seed);
    Predictions noisy = predict_dataset(model, noised);
    report.f1_noise = span_f1(noisy.dataset, noised).overall;
    report.meta["noise_level"] = noise->level;
    report.meta["noise_seed"] = noise->seed;
    report.meta["noise_bio_repairs"] = noisy.repairs;
  }
  return report;
}

namespace internal {

inline double round6(double x) { return std::round(x * 1e6) / 1e6; }

inline nlohmann::json prf_json(const PRF& r) {
  return {{"p", round6(r.precision)}, {"r", round6(r.recall)}, {"f1", round6(r.f1)},
          {"tp", r.tp},               {"fp", r.fp},            {"fn", r.fn}};
}

inline PRF prf_from_json(const nlohmann::json& j) {
  PRF r;
  r.precision = j.at("p").get<double>();
  r.recall = j.at("r").get<double>();
  r.f1 = j.at("f1").get<double>();
  r.tp = j.at("tp").get<std::size_t>();
  r.fp = j.at("fp").get<std::size_t>();
  r.fn = j.at("fn").get<std::size_t>();
  return r;
}

}  // namespace internal

// Canonical report JSON: keys sorted, rates rounded to 6 decimals.
inline nlohmann::json report_to_json(const EvalReport& report) {
  nlohmann::json j;
  j["overall"] = internal::prf_json(report.overall);
  nlohmann::json per_slot = nlohmann::json::object();
  for (const auto& [slot, r] : report.per_slot) per_slot[slot] = internal::prf_json(r);
  j["per_slot"] = std::move(per_slot);
  j["f1_ov"] = internal::prf_json(report.f1_ov);
  j["f1_noise"] = report.f1_noise ? internal::prf_json(*report.f1_noise) : nlohmann::json();
  j["meta"] = report.meta;
  return j;
}

inline EvalReport report_from_json(const nlohmann::json& j) {
  EvalReport r;
  r.overall = internal::prf_from_json(j.at("overall"));
  for (auto it = j.at("per_slot").begin(); it != j.at("per_slot").end(); ++it) {
    r.per_slot[it.key()] = internal::prf_from_json(it.value());
  }
  r.f1_ov = internal::prf_from_json(j.at("f1_ov"));
  if (!j.at("f1_noise").is_null()) r.f1_noise = internal::prf_from_json(j.at("f1_noise"));
  r.meta = j.value("meta", nlohmann::json::object());
  return r;
}

inline std::string report_json_text(const EvalReport& report) {
  return report_to_json(report).dump(2) + "\n";
}

inline std::string format_report_table(const EvalReport& report) {
  std::string out;
  char line[160];
  auto row = [&](const std::string& name, const PRF& r) {
    std::snprintf(line, sizeof(line), "%-24s %8.4f %8.4f %8.4f %6zu %6zu %6zu\n",
                  name.c_str(), r.precision, r.recall, r.f1, r.tp, r.fp, r.fn);
    out += line;
  };
  std::snprintf(line, sizeof(line), "%-24s %8s %8s %8s %6s %6s %6s\n", "", "P", "R", "F1",
                "tp", "fp", "fn");
  out += line;
  row("overall", report.overall);
  row("f1_ov", report.f1_ov);
  if (report.f1_noise) row("f1_noise", *report.f1_noise);
  for (const auto& [slot, r] : report.per_slot) row("  " + slot, r);
  return out;
}

// Writes the canonical JSON to `path` and the table to `table_out`.
inline void report_emit(const EvalReport& report, const std::filesystem::path& path,
                        std::ostream* table_out = &std::cout) {
  write_file_atomic(path, report_json_text(report));
  if (table_out != nullptr) *table_out << format_report_table(report);
}

}  // namespace oovtag

#endif  // OOVTAG_EVAL_HPP_
