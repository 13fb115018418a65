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

#ifndef OOVTAG_INFILL_HPP_
#define OOVTAG_INFILL_HPP_

#include <algorithm>
#include <map>
#include <memory>
#include <set>
#include <string>
#include <vector>

#include "json.hpp"
#include "oovtag/corpus.hpp"
#include "oovtag/errors.hpp"
#include "oovtag/masking.hpp"
#include "oovtag/rng.hpp"

namespace oovtag {

// Fills every masked position of a MaskedUtterance with one token.
class Infiller {
 public:
  virtual ~Infiller() = default;
  virtual std::vector<std::string> fill(const MaskedUtterance& m, Rng& rng) = 0;
};

// Checks the contract shared by every infiller: same length, masked positions
// filled, everything else untouched. Throws ProtocolError.
inline void validate_fill(const MaskedUtterance& m,
                          const std::vector<std::string>& filled) {
  if (filled.size() != m.tokens.size()) {
    throw ProtocolError("infill returned " + std::to_string(filled.size()) +
                        " tokens, expected " + std::to_string(m.tokens.size()));
  }
  for (std::size_t t = 0; t < filled.size(); ++t) {
    if (filled[t] == kMaskToken) {
      throw ProtocolError("mask left at position " + std::to_string(t));
    }
    if (filled[t].empty()) {
      throw ProtocolError("empty token at position " + std::to_string(t));
    }
    const bool masked = std::binary_search(m.mask_positions.begin(),
                                           m.mask_positions.end(), t);
    if (!masked && filled[t] != m.tokens[t]) {
      throw ProtocolError("unmasked token changed at position " +
                          std::to_string(t));
    }
  }
}

// slot name -> sorted, deduplicated words observed under that slot.
using SlotLexicon = std::map<std::string, std::vector<std::string>>;

inline SlotLexicon build_lexicon(const Dataset& ds) {
  std::map<std::string, std::set<std::string>> words;
  for (const auto& u : ds.utterances) {
    for (std::size_t t = 0; t < u.size(); ++t) {
      auto slot = slot_of(u.labels[t]);
      if (!slot.empty()) words[std::string(slot)].insert(u.tokens[t]);
    }
  }
  SlotLexicon lex;
  for (auto& [slot, set] : words) lex[slot].assign(set.begin(), set.end());
  return lex;
}

// Replaces each mask with a uniform draw from its slot's words, excluding the
// original word when there is another choice. A slot missing from the lexicon
// gets its original word back.
inline std::vector<std::string> lexicon_fill(const MaskedUtterance& m,
                                             const SlotLexicon& lex, Rng& rng) {
  std::vector<std::string> out = m.tokens;
  for (std::size_t t : m.mask_positions) {
    const std::string& original = m.original.tokens[t];
    auto it = lex.find(std::string(slot_of(m.original.labels[t])));
    if (it == lex.end() || it->second.empty()) {
      out[t] = original;
      continue;
    }
    const auto& words = it->second;
    if (words.size() == 1) {
      out[t] = words.front();
      continue;
    }
    std::vector<const std::string*> choices;
    for (const auto& w : words) {
      if (w != original) choices.push_back(&w);
    }
    out[t] = *choices[rng.index(choices.size())];
  }
  return out;
}

class LexiconInfiller : public Infiller {
 public:
  explicit LexiconInfiller(SlotLexicon lexicon) : lexicon_(std::move(lexicon)) {}

  std::vector<std::string> fill(const MaskedUtterance& m, Rng& rng) override {
    return lexicon_fill(m, lexicon_, rng);
  }

  const SlotLexicon& lexicon() const { return lexicon_; }

 private:
  SlotLexicon lexicon_;
};

// Tries `primary`; on any InfillError uses `fallback`.
class FallbackInfiller : public Infiller {
 public:
  FallbackInfiller(std::unique_ptr<Infiller> primary,
                   std::unique_ptr<Infiller> fallback)
      : primary_(std::move(primary)), fallback_(std::move(fallback)) {}

  std::vector<std::string> fill(const MaskedUtterance& m, Rng& rng) override {
    try {
      return primary_->fill(m, rng);
    } catch (const InfillError&) {
      ++fallbacks_;
      return fallback_->fill(m, rng);
    }
  }

  std::size_t fallbacks() const { return fallbacks_; }

 private:
  std::unique_ptr<Infiller> primary_;
  std::unique_ptr<Infiller> fallback_;
  std::size_t fallbacks_ = 0;
};

}  // namespace oovtag

#endif  // OOVTAG_INFILL_HPP_
