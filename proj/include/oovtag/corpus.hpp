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

#ifndef OOVTAG_CORPUS_HPP_
#define OOVTAG_CORPUS_HPP_

#include <algorithm>
#include <compare>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "oovtag/errors.hpp"

namespace oovtag {

inline constexpr std::string_view kOutsideTag = "O";

// One labeled example: aligned tokens and BIO tags.
struct Utterance {
  std::vector<std::string> tokens;
  std::vector<std::string> labels;
  std::int64_t id = 0;

  std::size_t size() const { return tokens.size(); }
  bool has_slot() const {
    return std::any_of(labels.begin(), labels.end(),
                       [](const std::string& l) { return l != kOutsideTag; });
  }
  bool operator==(const Utterance&) const = default;
};

struct Dataset {
  std::vector<Utterance> utterances;
  std::set<std::string> slot_types;

  // Builds a dataset and derives slot_types from the labels.
  static Dataset from(std::vector<Utterance> utterances);

  std::size_t size() const { return utterances.size(); }
  bool empty() const { return utterances.empty(); }
  bool operator==(const Dataset&) const = default;
};

// Half-open token range [start, end) carrying one slot.
struct Span {
  std::string slot;
  std::size_t start = 0;
  std::size_t end = 0;

  auto operator<=>(const Span&) const = default;
};

enum class BioMode { kStrict, kRepair };

// A parsed tag: prefix is 'O', 'B' or 'I'; slot is empty for 'O'.
struct BioTag {
  char prefix = 'O';
  std::string_view slot;
};

// Parses one label. Returns nullopt when the label is not O, B-x or I-x.
inline std::optional<BioTag> parse_tag(std::string_view label) {
  if (label == kOutsideTag) return BioTag{'O', {}};
  if (label.size() < 3 || label[1] != '-') return std::nullopt;
  if (label[0] != 'B' && label[0] != 'I') return std::nullopt;
  return BioTag{label[0], label.substr(2)};
}

inline std::string_view slot_of(std::string_view label) {
  auto tag = parse_tag(label);
  return tag ? tag->slot : std::string_view{};
}

// Checks the BIO transition rules. In repair mode an orphan I-x (after O, at
// the start, or after a tag of another slot) becomes B-x; in strict mode it
// raises ValidationError. Malformed labels raise in both modes.
inline std::vector<std::string> validate_bio(
    const std::vector<std::string>& labels, BioMode mode) {
  std::vector<std::string> out = labels;
  std::string_view previous_slot;
  bool previous_inside = false;
  for (std::size_t t = 0; t < out.size(); ++t) {
    auto tag = parse_tag(out[t]);
    if (!tag) throw ValidationError(t, "malformed label '" + out[t] + "'");
    if (tag->prefix == 'I' && (!previous_inside || previous_slot != tag->slot)) {
      if (mode == BioMode::kStrict) {
        throw ValidationError(t, "'" + out[t] + "' does not continue a span");
      }
      out[t] = "B-" + std::string(tag->slot);
      tag = parse_tag(out[t]);
    }
    previous_inside = tag->prefix != 'O';
    previous_slot = previous_inside ? slot_of(out[t]) : std::string_view{};
  }
  return out;
}

inline std::size_t count_repairs(const std::vector<std::string>& before,
                                 const std::vector<std::string>& after) {
  std::size_t n = 0;
  for (std::size_t t = 0; t < before.size(); ++t) n += before[t] != after[t];
  return n;
}

// Maximal B-then-I runs, sorted by start. Input must already be valid BIO.
inline std::vector<Span> extract_spans(const std::vector<std::string>& labels) {
  validate_bio(labels, BioMode::kStrict);
  std::vector<Span> spans;
  for (std::size_t t = 0; t < labels.size(); ++t) {
    const BioTag tag = *parse_tag(labels[t]);
    if (tag.prefix == 'B') {
      spans.push_back(Span{std::string(tag.slot), t, t + 1});
    } else if (tag.prefix == 'I') {
      spans.back().end = t + 1;
    }
  }
  return spans;
}

inline Dataset Dataset::from(std::vector<Utterance> utterances) {
  Dataset ds;
  ds.utterances = std::move(utterances);
  for (const auto& u : ds.utterances) {
    for (const auto& label : u.labels) {
      auto slot = slot_of(label);
      if (!slot.empty()) ds.slot_types.emplace(slot);
    }
  }
  return ds;
}

namespace internal {

inline std::vector<std::string_view> split_whitespace(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t')) ++i;
    const std::size_t start = i;
    while (i < line.size() && line[i] != ' ' && line[i] != '\t') ++i;
    if (i > start) fields.push_back(line.substr(start, i - start));
  }
  return fields;
}

}  // namespace internal

// Reads the two-column CoNLL format: `<token> <label>` per line, blank lines
// between utterances. Ids are assigned in file order starting at 0.
inline Dataset parse_conll(std::string_view text,
                           BioMode mode = BioMode::kRepair) {
  std::vector<Utterance> utterances;
  Utterance current;
  std::size_t block_start = 1;
  auto flush = [&]() {
    if (current.tokens.empty()) return;
    try {
      current.labels = validate_bio(current.labels, mode);
    } catch (const ValidationError& e) {
      throw ParseError(block_start + e.position(), e.what());
    }
    current.id = static_cast<std::int64_t>(utterances.size());
    utterances.push_back(std::move(current));
    current = Utterance{};
  };

  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t eol = text.find('\n', pos);
    if (eol == std::string_view::npos) eol = text.size();
    std::string_view line = text.substr(pos, eol - pos);
    pos = eol + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);

    auto fields = internal::split_whitespace(line);
    if (fields.empty()) {
      flush();
      continue;
    }
    if (fields.size() != 2) {
      throw ParseError(line_no, "expected 2 fields, found " +
                                    std::to_string(fields.size()));
    }
    if (!parse_tag(fields[1])) {
      throw ParseError(line_no, "malformed label '" + std::string(fields[1]) + "'");
    }
    if (current.tokens.empty()) block_start = line_no;
    current.tokens.emplace_back(fields[0]);
    current.labels.emplace_back(fields[1]);
  }
  flush();
  return Dataset::from(std::move(utterances));
}

inline std::string serialize_conll(const Dataset& ds) {
  std::string out;
  for (std::size_t i = 0; i < ds.utterances.size(); ++i) {
    if (i > 0) out += '\n';
    const auto& u = ds.utterances[i];
    for (std::size_t t = 0; t < u.size(); ++t) {
      out += u.tokens[t];
      out += ' ';
      out += u.labels[t];
      out += '\n';
    }
  }
  return out;
}

// Token index with fixed specials: 0 is padding, 1 is unknown.
class VocabIndex {
 public:
  static constexpr std::int32_t kPad = 0;
  static constexpr std::int32_t kUnk = 1;
  static constexpr std::string_view kPadToken = "<pad>";
  static constexpr std::string_view kUnkToken = "<unk>";

  VocabIndex() : VocabIndex(std::vector<std::string>{}, 1) {}

  // `tokens` excludes the two specials; they are prepended.
  VocabIndex(const std::vector<std::string>& tokens, int min_count)
      : min_count_(min_count) {
    tokens_.emplace_back(kPadToken);
    tokens_.emplace_back(kUnkToken);
    for (const auto& t : tokens) {
      index_.emplace(t, static_cast<std::int32_t>(tokens_.size()));
      tokens_.push_back(t);
    }
  }

  std::int32_t lookup(const std::string& token) const {
    auto it = index_.find(token);
    return it == index_.end() ? kUnk : it->second;
  }

  std::vector<std::int32_t> lookup(const std::vector<std::string>& tokens) const {
    std::vector<std::int32_t> ids;
    ids.reserve(tokens.size());
    for (const auto& t : tokens) ids.push_back(lookup(t));
    return ids;
  }

  bool contains(const std::string& token) const { return index_.count(token) > 0; }
  std::size_t size() const { return tokens_.size(); }
  int min_count() const { return min_count_; }
  const std::vector<std::string>& tokens() const { return tokens_; }

  // FNV-1a over the ordered token list.
  std::uint64_t hash() const {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (const auto& t : tokens_) {
      for (unsigned char c : t) {
        h ^= c;
        h *= 0x100000001b3ULL;
      }
      h ^= 0xff;
      h *= 0x100000001b3ULL;
    }
    return h;
  }

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, std::int32_t> index_;
  int min_count_ = 1;
};

// Indexes tokens seen at least min_count times, by descending frequency with
// lexicographic tie-break.
inline VocabIndex build_vocab(const Dataset& ds, int min_count) {
  if (min_count < 1) throw Error("min_count must be >= 1");
  std::map<std::string, std::size_t> counts;
  for (const auto& u : ds.utterances) {
    for (const auto& t : u.tokens) ++counts[t];
  }
  std::vector<std::pair<std::string, std::size_t>> kept;
  for (auto& [token, n] : counts) {
    if (n >= static_cast<std::size_t>(min_count)) kept.emplace_back(token, n);
  }
  std::stable_sort(kept.begin(), kept.end(), [](const auto& a, const auto& b) {
    return a.second > b.second;
  });
  std::vector<std::string> tokens;
  tokens.reserve(kept.size());
  for (auto& [token, n] : kept) tokens.push_back(token);
  return VocabIndex(tokens, min_count);
}

}  // namespace oovtag

#endif  // OOVTAG_CORPUS_HPP_
