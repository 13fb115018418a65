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

#ifndef OOVTAG_MASKING_HPP_
#define OOVTAG_MASKING_HPP_

#include <string>
#include <string_view>
#include <vector>

#include "oovtag/corpus.hpp"
#include "oovtag/rng.hpp"

namespace oovtag {

inline constexpr std::string_view kMaskToken = "[MASK]";

// An utterance with some slot words replaced by kMaskToken.
struct MaskedUtterance {
  std::vector<std::string> tokens;
  std::vector<std::size_t> mask_positions;  // sorted
  Utterance original;
};

// Masks slot words (non-O positions), each with probability mask_rate. At
// least one is masked when the utterance has any slot; an all-O utterance
// yields empty mask_positions, which callers treat as "skip".
inline MaskedUtterance mask_slot_words(const Utterance& u, double mask_rate,
                                       Rng& rng) {
  if (!(mask_rate > 0.0 && mask_rate <= 1.0)) {
    throw Error("mask_rate must be in (0, 1]");
  }
  MaskedUtterance m{u.tokens, {}, u};
  std::vector<std::size_t> candidates;
  for (std::size_t t = 0; t < u.size(); ++t) {
    if (u.labels[t] != kOutsideTag) candidates.push_back(t);
  }
  if (candidates.empty()) return m;
  for (std::size_t t : candidates) {
    if (rng.bernoulli(mask_rate)) m.mask_positions.push_back(t);
  }
  if (m.mask_positions.empty()) {
    m.mask_positions.push_back(candidates[rng.index(candidates.size())]);
  }
  for (std::size_t t : m.mask_positions) m.tokens[t] = std::string(kMaskToken);
  return m;
}

}  // namespace oovtag

#endif  // OOVTAG_MASKING_HPP_
