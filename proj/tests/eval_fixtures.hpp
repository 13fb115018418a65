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


// Helpers shared by the eval tests and the acceptance binary.

#ifndef OOVTAG_TESTS_EVAL_FIXTURES_HPP_
#define OOVTAG_TESTS_EVAL_FIXTURES_HPP_

#include <cmath>
#include <string>
#include <vector>

#include "json.hpp"
#include "oovtag/corpus.hpp"
#include "oovtag/eval.hpp"
#include "oovtag/io.hpp"
#include "oovtag/rng.hpp"

namespace fixtures {

inline std::string data_path(const std::string& name) {
  return std::string(OOVTAG_TEST_DATA_DIR) + "/" + name;
}

// Checks span_f1 against every case of the golden file. Returns one message
// per mismatch; empty means all cases agree.
inline std::vector<std::string> check_span_golden(const std::string& path, std::size_t* cases) {
  std::vector<std::string> failures;
  const auto doc = nlohmann::json::parse(oovtag::read_file(path));
  *cases = doc.at("cases").size();
  for (const auto& c : doc.at("cases")) {
    const std::string name = c.at("name");
    const auto pred = c.at("pred").get<oovtag::LabelSequences>();
    const auto gold = c.at("gold").get<oovtag::LabelSequences>();
    const oovtag::SpanScores s = oovtag::span_f1(pred, gold);
    auto near = [](double a, double b) { return std::abs(a - b) <= 1e-12; };
    if (s.overall.tp != c.at("tp").get<std::size_t>() ||
        s.overall.fp != c.at("fp").get<std::size_t>() ||
        s.overall.fn != c.at("fn").get<std::size_t>() ||
        !near(s.overall.precision, c.at("p")) || !near(s.overall.recall, c.at("r")) ||
        !near(s.overall.f1, c.at("f1"))) {
      failures.push_back(name + ": overall mismatch");
    }
    if (c.contains("per_slot")) {
      if (s.per_slot.size() != c.at("per_slot").size()) failures.push_back(name + ": slot count");
      for (const auto& [slot, counts] : c.at("per_slot").items()) {
        auto it = s.per_slot.find(slot);
        if (it == s.per_slot.end() || it->second.tp != counts.at(0).get<std::size_t>() ||
            it->second.fp != counts.at(1).get<std::size_t>() ||
            it->second.fn != counts.at(2).get<std::size_t>()) {
          failures.push_back(name + ": per-slot mismatch for " + slot);
        }
      }
    }
    // Restricting to every slot must reproduce the overall score.
    std::set<std::string> all;
    for (const auto* seqs : {&pred, &gold}) {
      for (const auto& labels : *seqs) {
        for (const auto& l : labels) {
          if (l != "O") all.insert(l.substr(2));
        }
      }
    }
    if (!(oovtag::f1_ov(pred, gold, all) == s.overall)) failures.push_back(name + ": f1_ov(all)");
  }
  return failures;
}

// Random valid BIO sequence over `slots`.
inline std::vector<std::string> random_bio(oovtag::Rng& rng, std::size_t length,
                                           const std::vector<std::string>& slots) {
  std::vector<std::string> out;
  for (std::size_t t = 0; t < length; ++t) {
    const double u = rng.uniform();
    if (u < 0.4) {
      out.push_back("O");
    } else if (u < 0.7 || out.empty() || out.back() == "O") {
      out.push_back("B-" + slots[rng.index(slots.size())]);
    } else {
      out.push_back("I-" + out.back().substr(2));
    }
  }
  return out;
}

// On random prediction sets: per-slot counts sum to the overall counts,
// f1_ov over a partition of the slots adds up, and f1_ov over all slots
// equals the overall score. Returns the number of violated sets.
inline int check_restriction_sums(std::uint64_t seed, int sets) {
  const std::vector<std::string> slots = {"a", "b", "c", "d"};
  oovtag::Rng rng(seed);
  int violations = 0;
  for (int s = 0; s < sets; ++s) {
    oovtag::LabelSequences pred, gold;
    const std::size_t n = 1 + rng.index(8);
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t len = 1 + rng.index(8);
      gold.push_back(random_bio(rng, len, slots));
      pred.push_back(rng.bernoulli(0.3) ? gold.back() : random_bio(rng, len, slots));
    }
    const auto scores = oovtag::span_f1(pred, gold);
    std::size_t tp = 0, fp = 0, fn = 0;
    for (const auto& [slot, r] : scores.per_slot) {
      tp += r.tp;
      fp += r.fp;
      fn += r.fn;
    }
    std::set<std::string> left, right;
    for (const auto& slot : slots) (rng.bernoulli(0.5) ? left : right).insert(slot);
    const auto l = oovtag::f1_ov(pred, gold, left);
    const auto r = oovtag::f1_ov(pred, gold, right);
    const std::set<std::string> all(slots.begin(), slots.end());
    const bool ok = tp == scores.overall.tp && fp == scores.overall.fp &&
                    fn == scores.overall.fn && l.tp + r.tp == scores.overall.tp &&
                    l.fp + r.fp == scores.overall.fp && l.fn + r.fn == scores.overall.fn &&
                    oovtag::f1_ov(pred, gold, all) == scores.overall;
    violations += ok ? 0 : 1;
  }
  return violations;
}

}  // namespace fixtures

#endif  // OOVTAG_TESTS_EVAL_FIXTURES_HPP_
