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

#ifndef OOVTAG_SYNTHETIC_HPP_
#define OOVTAG_SYNTHETIC_HPP_

#include <array>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "oovtag/corpus.hpp"
#include "oovtag/rng.hpp"

namespace oovtag::synthetic {

// A small slot-filling grammar with three closed-vocabulary slots (city,
// cuisine, time) and two open-vocabulary ones (restaurant_name, playlist).
// Open values are freshly generated pseudo-words, sometimes mixed with
// ordinary in-vocabulary words ("the tokyo garden"), so test values are
// almost never seen in training and their words carry no reliable signal.
inline const std::set<std::string>& open_slots() {
  static const std::set<std::string> slots = {"restaurant_name", "playlist"};
  return slots;
}

namespace internal {

inline const std::vector<std::vector<std::string>>& closed_values(std::string_view slot) {
  static const std::vector<std::vector<std::string>> city = {
      {"paris"}, {"london"}, {"tokyo"}, {"berlin"}, {"rome"},
      {"madrid"}, {"boston"}, {"denver"}, {"new", "york"}, {"san", "diego"}};
  static const std::vector<std::vector<std::string>> cuisine = {
      {"italian"}, {"thai"}, {"mexican"}, {"chinese"}, {"indian"},
      {"french"}, {"korean"}, {"greek"}};
  static const std::vector<std::vector<std::string>> time = {
      {"tonight"}, {"tomorrow"}, {"today"}, {"at", "noon"}, {"this", "weekend"},
      {"at", "seven"}, {"next", "friday"}};
  if (slot == "city") return city;
  if (slot == "cuisine") return cuisine;
  return time;
}

inline std::string pseudo_word(Rng& rng) {
  static constexpr std::array<std::string_view, 16> onsets = {
      "b", "d", "f", "g", "k", "l", "m", "n", "p", "r", "s", "t", "v", "z", "br", "st"};
  static constexpr std::array<std::string_view, 6> vowels = {"a", "e", "i", "o", "u", "ai"};
  std::string w;
  const std::size_t syllables = 2 + rng.index(2);
  for (std::size_t s = 0; s < syllables; ++s) {
    w += onsets[rng.index(onsets.size())];
    w += vowels[rng.index(vowels.size())];
  }
  return w;
}

// Ordinary words that open-slot values borrow.
inline const std::vector<std::string>& borrowed_words() {
  static const std::vector<std::string> words = {
      "the",  "my",    "tokyo", "paris", "thai", "tonight", "garden", "blue",
      "song", "house", "table", "green", "night", "golden", "italian", "old"};
  return words;
}

struct Template {
  std::string_view text;  // words and {slot} placeholders
};

inline const std::vector<Template>& templates() {
  static const std::vector<Template> t = {
      {"book a table at {restaurant_name} in {city} {time}"},
      {"find a {cuisine} restaurant in {city}"},
      {"add this song to my {playlist} playlist"},
      {"play the {playlist} playlist {time}"},
      {"is {restaurant_name} open {time}"},
      {"i want {cuisine} food in {city} {time}"},
      {"put {playlist} on please"},
      {"reserve {restaurant_name} for {time}"},
      {"show me {cuisine} places near {city}"},
      {"start my playlist called {playlist}"},
      {"how far is {restaurant_name} from {city}"},
      {"does {restaurant_name} serve {cuisine} food"},
  };
  return t;
}

}  // namespace internal

// Generates `count` utterances with ids starting at `first_id`.
inline Dataset generate(std::size_t count, std::uint64_t seed, std::int64_t first_id = 0) {
  Rng rng(seed);
  std::vector<Utterance> out;
  out.reserve(count);
  const auto& tpl = internal::templates();
  for (std::size_t n = 0; n < count; ++n) {
    Utterance u;
    u.id = first_id + static_cast<std::int64_t>(n);
    std::string_view text = tpl[rng.index(tpl.size())].text;
    std::size_t pos = 0;
    while (pos < text.size()) {
      std::size_t end = text.find(' ', pos);
      if (end == std::string_view::npos) end = text.size();
      std::string_view word = text.substr(pos, end - pos);
      pos = end + 1;
      if (word.front() != '{') {
        u.tokens.emplace_back(word);
        u.labels.emplace_back(kOutsideTag);
        continue;
      }
      const std::string slot(word.substr(1, word.size() - 2));
      std::vector<std::string> value;
      if (open_slots().count(slot)) {
        const std::size_t words = 1 + rng.index(3);
        for (std::size_t w = 0; w < words; ++w) {
          if (words > 1 && rng.bernoulli(0.35)) {
            const auto& borrowed = internal::borrowed_words();
            value.push_back(borrowed[rng.index(borrowed.size())]);
          } else {
            value.push_back(internal::pseudo_word(rng));
          }
        }
      } else {
        const auto& values = internal::closed_values(slot);
        value = values[rng.index(values.size())];
      }
      for (std::size_t w = 0; w < value.size(); ++w) {
        u.tokens.push_back(value[w]);
        u.labels.push_back((w == 0 ? "B-" : "I-") + slot);
      }
    }
    out.push_back(std::move(u));
  }
  return Dataset::from(std::move(out));
}

}  // namespace oovtag::synthetic

#endif  // OOVTAG_SYNTHETIC_HPP_
