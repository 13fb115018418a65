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

#ifndef OOVTAG_AUGMENT_HPP_
#define OOVTAG_AUGMENT_HPP_

#include <array>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "oovtag/corpus.hpp"
#include "oovtag/errors.hpp"
#include "oovtag/infill.hpp"
#include "oovtag/masking.hpp"
#include "oovtag/rng.hpp"
#include "oovtag/utf8.hpp"

namespace oovtag {

enum class RandomEdit { kInsert, kSubstitute, kSwap, kDelete, kUniformMix };

struct PerturbMethod {
  enum class Kind { kKeyboard, kOcr, kRandom };
  Kind kind = Kind::kRandom;
  RandomEdit edit = RandomEdit::kUniformMix;

  static PerturbMethod keyboard() { return {Kind::kKeyboard, RandomEdit::kUniformMix}; }
  static PerturbMethod ocr() { return {Kind::kOcr, RandomEdit::kUniformMix}; }
  static PerturbMethod random(RandomEdit edit = RandomEdit::kUniformMix) {
    return {Kind::kRandom, edit};
  }
};

enum class AugmentMethod { kKeyboard, kOcr, kRandom, kSlotInfill };

inline std::string_view to_string(AugmentMethod m) {
  switch (m) {
    case AugmentMethod::kKeyboard: return "keyboard";
    case AugmentMethod::kOcr: return "ocr";
    case AugmentMethod::kRandom: return "random";
    case AugmentMethod::kSlotInfill: return "slot";
  }
  return "unknown";
}

inline AugmentMethod augment_method_of(PerturbMethod p) {
  switch (p.kind) {
    case PerturbMethod::Kind::kKeyboard: return AugmentMethod::kKeyboard;
    case PerturbMethod::Kind::kOcr: return AugmentMethod::kOcr;
    case PerturbMethod::Kind::kRandom: return AugmentMethod::kRandom;
  }
  return AugmentMethod::kRandom;
}

using ConfusionMap = std::map<char32_t, std::vector<char32_t>>;

struct ConfusionTables {
  ConfusionMap keyboard;
  ConfusionMap ocr;

  // Lowercase QWERTY neighbours and the single-character OCR confusions.
  static ConfusionTables standard();

  // {"keyboard": {"a": ["q", ...]}, "ocr": {"o": ["0"]}}; keys and entries
  // are single characters.
  static ConfusionTables from_json(std::string_view text);
  std::string to_json() const;

  // Throws Error when a map is empty, a character maps to itself, or the
  // keyboard table is not symmetric.
  void validate() const;

  bool operator==(const ConfusionTables&) const = default;
};

namespace internal {

inline void add_pair(ConfusionMap& map, char32_t a, char32_t b) {
  auto& ea = map[a];
  if (std::find(ea.begin(), ea.end(), b) == ea.end()) ea.push_back(b);
  auto& eb = map[b];
  if (std::find(eb.begin(), eb.end(), a) == eb.end()) eb.push_back(a);
}

inline ConfusionMap parse_confusion_map(const nlohmann::json& j,
                                        std::string_view name) {
  if (!j.is_object()) throw Error(std::string(name) + " table must be an object");
  ConfusionMap map;
  for (auto it = j.begin(); it != j.end(); ++it) {
    auto key = utf8::decode(it.key());
    if (key.size() != 1) {
      throw Error(std::string(name) + " key '" + it.key() + "' is not one character");
    }
    auto& entry = map[key[0]];
    for (const auto& v : it.value()) {
      auto ch = utf8::decode(v.get<std::string>());
      if (ch.size() != 1) {
        throw Error(std::string(name) + " entry for '" + it.key() +
                    "' is not one character");
      }
      entry.push_back(ch[0]);
    }
  }
  return map;
}

inline nlohmann::json confusion_map_json(const ConfusionMap& map) {
  nlohmann::json j = nlohmann::json::object();
  for (const auto& [key, values] : map) {
    nlohmann::json arr = nlohmann::json::array();
    for (char32_t v : values) arr.push_back(utf8::encode(v));
    j[utf8::encode(key)] = arr;
  }
  return j;
}

}  // namespace internal

inline ConfusionTables ConfusionTables::standard() {
  ConfusionTables tables;
  const std::array<std::u32string_view, 3> rows = {U"qwertyuiop", U"asdfghjkl",
                                                   U"zxcvbnm"};
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const auto row = rows[r];
    for (std::size_t c = 0; c < row.size(); ++c) {
      if (c + 1 < row.size()) internal::add_pair(tables.keyboard, row[c], row[c + 1]);
      if (r + 1 < rows.size()) {
        // The row below is shifted right by half a key.
        const auto below = rows[r + 1];
        if (c >= 1 && c - 1 < below.size()) {
          internal::add_pair(tables.keyboard, row[c], below[c - 1]);
        }
        if (c < below.size()) internal::add_pair(tables.keyboard, row[c], below[c]);
      }
    }
  }
  for (auto& [key, values] : tables.keyboard) std::sort(values.begin(), values.end());

  const std::array<std::pair<char32_t, char32_t>, 7> ocr_pairs = {{
      {U'o', U'0'}, {U'l', U'1'}, {U'i', U'l'}, {U's', U'5'},
      {U'b', U'6'}, {U'g', U'9'}, {U'e', U'c'},
  }};
  for (auto [a, b] : ocr_pairs) internal::add_pair(tables.ocr, a, b);
  for (auto& [key, values] : tables.ocr) std::sort(values.begin(), values.end());
  return tables;
}

inline ConfusionTables ConfusionTables::from_json(std::string_view text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw Error(std::string("confusion tables: ") + e.what());
  }
  if (!j.contains("keyboard") || !j.contains("ocr")) {
    throw Error("confusion tables need 'keyboard' and 'ocr' objects");
  }
  ConfusionTables tables;
  tables.keyboard = internal::parse_confusion_map(j["keyboard"], "keyboard");
  tables.ocr = internal::parse_confusion_map(j["ocr"], "ocr");
  tables.validate();
  return tables;
}

inline std::string ConfusionTables::to_json() const {
  nlohmann::json j;
  j["keyboard"] = internal::confusion_map_json(keyboard);
  j["ocr"] = internal::confusion_map_json(ocr);
  return j.dump(2) + "\n";
}

inline void ConfusionTables::validate() const {
  for (const auto* map : {&keyboard, &ocr}) {
    const char* name = map == &keyboard ? "keyboard" : "ocr";
    if (map->empty()) throw Error(std::string(name) + " table is empty");
    for (const auto& [key, values] : *map) {
      if (values.empty()) {
        throw Error(std::string(name) + " entry '" + utf8::encode(key) + "' is empty");
      }
      if (std::find(values.begin(), values.end(), key) != values.end()) {
        throw Error(std::string(name) + " entry '" + utf8::encode(key) +
                    "' maps to itself");
      }
    }
  }
  for (const auto& [key, values] : keyboard) {
    for (char32_t v : values) {
      auto it = keyboard.find(v);
      if (it == keyboard.end() ||
          std::find(it->second.begin(), it->second.end(), key) == it->second.end()) {
        throw Error("keyboard table is not symmetric at '" + utf8::encode(key) +
                    "' -> '" + utf8::encode(v) + "'");
      }
    }
  }
}

namespace internal {

inline char32_t ascii_lower(char32_t c) { return (c >= U'A' && c <= U'Z') ? c + 32 : c; }
inline bool ascii_upper(char32_t c) { return c >= U'A' && c <= U'Z'; }

inline char32_t random_letter(Rng& rng) {
  return static_cast<char32_t>(U'a' + rng.index(26));
}

// One substitution drawn from `map`. Uppercase ASCII uses the lowercase entry
// and keeps its case.
inline std::u32string table_substitute(std::u32string chars, const ConfusionMap& map,
                                       Rng& rng) {
  std::vector<std::size_t> positions;
  for (std::size_t i = 0; i < chars.size(); ++i) {
    if (map.count(ascii_lower(chars[i]))) positions.push_back(i);
  }
  if (positions.empty()) return chars;
  const std::size_t pos = positions[rng.index(positions.size())];
  const auto& options = map.at(ascii_lower(chars[pos]));
  char32_t replacement = options[rng.index(options.size())];
  if (ascii_upper(chars[pos]) && replacement >= U'a' && replacement <= U'z') {
    replacement -= 32;
  }
  chars[pos] = replacement;
  return chars;
}

inline std::u32string random_edit(std::u32string chars, RandomEdit edit, Rng& rng) {
  if (edit == RandomEdit::kUniformMix) {
    edit = static_cast<RandomEdit>(rng.index(4));
  }
  switch (edit) {
    case RandomEdit::kInsert: {
      const std::size_t pos = rng.index(chars.size() + 1);
      chars.insert(chars.begin() + static_cast<std::ptrdiff_t>(pos), random_letter(rng));
      break;
    }
    case RandomEdit::kSubstitute: {
      const std::size_t pos = rng.index(chars.size());
      const char32_t current = chars[pos];
      if (current >= U'a' && current <= U'z') {
        // 25 choices: every letter except the current one.
        char32_t letter = static_cast<char32_t>(U'a' + rng.index(25));
        if (letter >= current) ++letter;
        chars[pos] = letter;
      } else {
        chars[pos] = random_letter(rng);
      }
      break;
    }
    case RandomEdit::kSwap: {
      if (chars.size() < 2) break;
      const std::size_t pos = rng.index(chars.size() - 1);
      std::swap(chars[pos], chars[pos + 1]);
      break;
    }
    case RandomEdit::kDelete: {
      if (chars.size() < 2) break;
      chars.erase(chars.begin() + static_cast<std::ptrdiff_t>(rng.index(chars.size())));
      break;
    }
    case RandomEdit::kUniformMix:
      break;
  }
  return chars;
}

}  // namespace internal

// Applies one character edit to `token`.
//   Keyboard/Ocr: substitutes one character that has a table entry; tokens
//   with no such character come back unchanged.
//   Random: one insert, substitute, swap or delete; swap and delete leave a
//   one-character token unchanged.
inline std::string char_perturb(const std::string& token, PerturbMethod method,
                                const ConfusionTables& tables, Rng& rng) {
  if (token.empty()) throw Error("cannot perturb an empty token");
  auto chars = utf8::decode(token);
  switch (method.kind) {
    case PerturbMethod::Kind::kKeyboard:
      return utf8::encode(internal::table_substitute(chars, tables.keyboard, rng));
    case PerturbMethod::Kind::kOcr:
      return utf8::encode(internal::table_substitute(chars, tables.ocr, rng));
    case PerturbMethod::Kind::kRandom:
      return utf8::encode(internal::random_edit(chars, method.edit, rng));
  }
  return token;
}

struct AugmentedPair {
  Utterance original;
  Utterance augmented;
  AugmentMethod method = AugmentMethod::kRandom;
  std::int64_t group_id = 0;
};

namespace internal {

// Enough that a changeable token fails to change with probability < 2^-64.
inline constexpr int kPerturbAttempts = 64;

// Perturbs each token with probability `rate`. With `force_change`, keeps
// trying other tokens until at least one token differs from the original,
// unless no token can be changed by `method_for`.
template <typename MethodFn>
std::vector<std::string> perturb_tokens(const Utterance& u, double rate,
                                        bool force_change,
                                        const ConfusionTables& tables, Rng& rng,
                                        MethodFn&& method_for) {
  std::vector<std::string> out = u.tokens;
  bool changed = false;
  for (std::size_t t = 0; t < u.size(); ++t) {
    if (!rng.bernoulli(rate)) continue;
    out[t] = char_perturb(u.tokens[t], method_for(rng), tables, rng);
    changed = changed || out[t] != u.tokens[t];
  }
  if (changed || !force_change) return out;

  std::vector<std::size_t> order(u.size());
  for (std::size_t t = 0; t < order.size(); ++t) order[t] = t;
  rng.shuffle(order);
  for (std::size_t t : order) {
    for (int attempt = 0; attempt < kPerturbAttempts; ++attempt) {
      out[t] = char_perturb(u.tokens[t], method_for(rng), tables, rng);
      if (out[t] != u.tokens[t]) return out;
    }
  }
  return out;
}

}  // namespace internal

// Word-level augmentation: each token is perturbed with probability
// token_rate. At least one token is changed whenever the method can change
// any token of the utterance. Labels are copied unchanged.
inline AugmentedPair word_augment(const Utterance& u, PerturbMethod method,
                                  double token_rate, const ConfusionTables& tables,
                                  Rng& rng) {
  if (u.tokens.empty()) throw Error("cannot augment an empty utterance");
  if (!(token_rate > 0.0 && token_rate <= 1.0)) {
    throw Error("token_rate must be in (0, 1]");
  }
  AugmentedPair pair{u, u, augment_method_of(method), u.id};
  pair.augmented.tokens = internal::perturb_tokens(
      u, token_rate, true, tables, rng, [method](Rng&) { return method; });
  return pair;
}

// Slot-level augmentation: masks slot words and asks `infiller` for
// replacements. The infiller's answer is checked against the fill contract.
inline AugmentedPair slot_augment(const Utterance& u, Infiller& infiller,
                                  double mask_rate, Rng& rng) {
  if (!u.has_slot()) {
    throw Error("utterance " + std::to_string(u.id) + " has no slot to infill");
  }
  MaskedUtterance masked = mask_slot_words(u, mask_rate, rng);
  std::vector<std::string> filled;
  try {
    filled = infiller.fill(masked, rng);
    validate_fill(masked, filled);
  } catch (const InfillError& e) {
    throw InfillError("utterance " + std::to_string(u.id) + ": " + e.what());
  }
  AugmentedPair pair{u, u, AugmentMethod::kSlotInfill, u.id};
  pair.augmented.tokens = std::move(filled);
  return pair;
}

// Builds a noised copy of a test set. Every token is selected with
// probability noise_level and receives one edit from a uniformly drawn
// method (keyboard, OCR, or a random edit). A selected token that the drawn
// method cannot change gets a random substitution instead, so the expected
// fraction of changed tokens equals noise_level. Each utterance draws from
// its own stream derived from (seed, id).
inline Dataset noise_test_set(const Dataset& ds, double noise_level,
                              const ConfusionTables& tables, std::uint64_t seed) {
  if (ds.empty()) throw Error("cannot noise an empty dataset");
  if (!(noise_level > 0.0 && noise_level <= 1.0)) {
    throw Error("noise_level must be in (0, 1]");
  }
  std::vector<Utterance> noised;
  noised.reserve(ds.size());
  for (const auto& u : ds.utterances) {
    if (u.tokens.empty()) throw Error("cannot noise an empty utterance");
    Rng rng(derive_seed(seed, {static_cast<std::uint64_t>(u.id)}));
    Utterance out = u;
    for (std::size_t t = 0; t < u.size(); ++t) {
      if (!rng.bernoulli(noise_level)) continue;
      PerturbMethod method;
      switch (rng.index(3)) {
        case 0: method = PerturbMethod::keyboard(); break;
        case 1: method = PerturbMethod::ocr(); break;
        default: method = PerturbMethod::random(); break;
      }
      out.tokens[t] = char_perturb(u.tokens[t], method, tables, rng);
      if (out.tokens[t] == u.tokens[t]) {
        out.tokens[t] = char_perturb(u.tokens[t],
                                     PerturbMethod::random(RandomEdit::kSubstitute),
                                     tables, rng);
      }
    }
    noised.push_back(std::move(out));
  }
  Dataset result = Dataset::from(std::move(noised));
  return result;
}

}  // namespace oovtag

#endif  // OOVTAG_AUGMENT_HPP_
