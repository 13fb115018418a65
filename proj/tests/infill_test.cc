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


#include <atomic>
#include <set>
#include <string>
#include <thread>
#include <vector>

#include <gtest/gtest.h>

#include "oovtag/augment.hpp"
#include "oovtag/remote_infill.hpp"

namespace oovtag {
namespace {

using Tokens = std::vector<std::string>;

MaskedUtterance masked_example() {
  Utterance u{{"add", "kim", "playlist"}, {"O", "B-artist", "O"}, 0};
  return MaskedUtterance{{"add", "[MASK]", "playlist"}, {1}, u};
}

TEST(BuildLexicon, Examples) {
  EXPECT_EQ(build_lexicon(parse_conll("x B-a\n")), (SlotLexicon{{"a", {"x"}}}));
  EXPECT_TRUE(build_lexicon(parse_conll("x O\ny O\n")).empty());
  EXPECT_EQ(build_lexicon(parse_conll("x B-a\ny I-a\nx B-a\n")), (SlotLexicon{{"a", {"x", "y"}}}));
}

TEST(LexiconFill, Rules) {
  Rng rng(0);
  MaskedUtterance m{{"[MASK]"}, {0}, Utterance{{"x"}, {"B-a"}, 0}};
  EXPECT_EQ(lexicon_fill(m, {{"a", {"x"}}}, rng), (Tokens{"x"}));
  for (int i = 0; i < 100; ++i) EXPECT_EQ(lexicon_fill(m, {{"a", {"x", "y"}}}, rng), (Tokens{"y"}));
  EXPECT_EQ(lexicon_fill(m, {{"b", {"z"}}}, rng), (Tokens{"x"}));
}

TEST(LexiconFill, DrawsAreUniformOverOtherWords) {
  MaskedUtterance m{{"[MASK]"}, {0}, Utterance{{"w"}, {"B-a"}, 0}};
  const SlotLexicon lex{{"a", {"w", "x", "y", "z"}}};
  std::map<std::string, int> counts;
  Rng rng(4);
  for (int i = 0; i < 30000; ++i) ++counts[lexicon_fill(m, lex, rng)[0]];
  EXPECT_EQ(counts.count("w"), 0u);
  for (const char* w : {"x", "y", "z"}) EXPECT_NEAR(counts[w] / 30000.0, 1.0 / 3.0, 0.015);
}

TEST(ValidateFill, AcceptsConformantAndRejectsViolations) {
  const MaskedUtterance m = masked_example();
  EXPECT_NO_THROW(validate_fill(m, {"add", "beth", "playlist"}));
  EXPECT_THROW(validate_fill(m, {"add", "beth"}), ProtocolError);
  EXPECT_THROW(validate_fill(m, {"add", "[MASK]", "playlist"}), ProtocolError);
  EXPECT_THROW(validate_fill(m, {"add", "", "playlist"}), ProtocolError);
}

// Every single-position mutation of an unmasked token must be rejected; every
// replacement at the masked position must be accepted.
TEST(ValidateFill, SinglePositionMutationFuzz) {
  const MaskedUtterance m = masked_example();
  const Tokens good = {"add", "beth", "playlist"};
  for (std::size_t pos = 0; pos < good.size(); ++pos) {
    for (const std::string& replacement : {"Add", "x", "playlists", "beth", "add"}) {
      Tokens t = good;
      if (t[pos] == replacement) continue;
      t[pos] = replacement;
      if (pos == 1) {
        EXPECT_NO_THROW(validate_fill(m, t));
      } else {
        EXPECT_THROW(validate_fill(m, t), ProtocolError) << pos << " " << replacement;
      }
    }
  }
}

TEST(WireFormat, RequestAndResponseParsing) {
  const MaskedUtterance m = masked_example();
  auto body = nlohmann::json::parse(infill_request_body(m));
  EXPECT_EQ(body, nlohmann::json::parse(
                      R"({"tokens":["add","[MASK]","playlist"],"mask_positions":[1]})"));
  EXPECT_EQ(parse_infill_response(m, R"({"tokens":["add","beth","playlist"]})"),
            (Tokens{"add", "beth", "playlist"}));
  EXPECT_THROW(parse_infill_response(m, "not json"), ProtocolError);
  EXPECT_THROW(parse_infill_response(m, R"({"error":"x"})"), ProtocolError);
  EXPECT_THROW(parse_infill_response(m, R"({"tokens":["add",3,"playlist"]})"), ProtocolError);
}

// In-process stand-in for the infill service with one route per behaviour.
class FakeService : public ::testing::Test {
 protected:
  void SetUp() override {
    auto route = [this](const std::string& prefix, auto respond) {
      server_.Post(prefix + "/v1/infill", [this, respond](const httplib::Request& req,
                                                          httplib::Response& res) {
        ++requests_;
        auto j = nlohmann::json::parse(req.body, nullptr, false);
        if (j.is_discarded() || !j.contains("tokens") || !j.contains("mask_positions")) {
          res.status = 400;
          res.set_content(R"({"error":"malformed request"})", "application/json");
          return;
        }
        last_request_ = j;
        respond(j, res);
      });
    };
    auto reply = [](httplib::Response& res, const Tokens& tokens) {
      res.set_content(nlohmann::json{{"tokens", tokens}}.dump(), "application/json");
    };
    route("/good", [reply](const nlohmann::json& j, httplib::Response& res) {
      Tokens t = j["tokens"];
      for (std::size_t p : j["mask_positions"]) t[p] = "beth";
      reply(res, t);
    });
    route("/short", [reply](const nlohmann::json& j, httplib::Response& res) {
      Tokens t = j["tokens"];
      t.pop_back();
      reply(res, t);
    });
    route("/mutate", [reply](const nlohmann::json& j, httplib::Response& res) {
      Tokens t = j["tokens"];
      for (std::size_t p : j["mask_positions"]) t[p] = "beth";
      t[0] = "remove";
      reply(res, t);
    });
    route("/residue", [reply](const nlohmann::json& j, httplib::Response& res) {
      reply(res, j["tokens"]);
    });
    route("/reject", [](const nlohmann::json&, httplib::Response& res) {
      res.status = 400;
      res.set_content(R"({"error":"bad request"})", "application/json");
    });
    port_ = server_.bind_to_any_port("127.0.0.1");
    ASSERT_GT(port_, 0);
    thread_ = std::thread([this] { server_.listen_after_bind(); });
    server_.wait_until_ready();
  }

  void TearDown() override {
    server_.stop();
    if (thread_.joinable()) thread_.join();
  }

  std::string url(const std::string& route) const {
    return "http://127.0.0.1:" + std::to_string(port_) + route;
  }

  httplib::Server server_;
  std::thread thread_;
  int port_ = 0;
  std::atomic<int> requests_{0};
  nlohmann::json last_request_;
};

TEST_F(FakeService, ConformantResponseIsAccepted) {
  RemoteInfiller client(url("/good"));
  EXPECT_EQ(client.remote_fill(masked_example()), (Tokens{"add", "beth", "playlist"}));
  EXPECT_EQ(last_request_["tokens"], (Tokens{"add", "[MASK]", "playlist"}));
  EXPECT_EQ(last_request_["mask_positions"], (std::vector<int>{1}));
}

TEST_F(FakeService, TrailingSlashInEndpoint) {
  RemoteInfiller client(url("/good/"));
  EXPECT_NO_THROW(client.remote_fill(masked_example()));
}

TEST_F(FakeService, ContractViolationsAreProtocolErrors) {
  for (const char* route : {"/short", "/mutate", "/residue", "/reject", "/missing"}) {
    RemoteInfiller client(url(route));
    EXPECT_THROW(client.remote_fill(masked_example()), ProtocolError) << route;
  }
}

TEST_F(FakeService, EmptyMaskIsRejectedBeforeSending) {
  RemoteInfiller client(url("/good"));
  MaskedUtterance m = masked_example();
  m.tokens[1] = "kim";
  m.mask_positions.clear();
  EXPECT_THROW(client.remote_fill(m), ProtocolError);
  EXPECT_EQ(requests_.load(), 0);
}

TEST_F(FakeService, SlotAugmentThroughRemote) {
  RemoteInfiller client(url("/good"));
  Rng rng(0);
  auto pair = slot_augment(masked_example().original, client, 1.0, rng);
  EXPECT_EQ(pair.augmented.tokens, (Tokens{"add", "beth", "playlist"}));
}

TEST(RemoteInfiller, UnreachableIsTransportErrorAndFallsBack) {
  // Bind and release a port so that nothing listens on it.
  int port = 0;
  {
    httplib::Server probe;
    port = probe.bind_to_any_port("127.0.0.1");
  }
  const std::string endpoint = "http://127.0.0.1:" + std::to_string(port);
  RemoteInfiller client(endpoint, std::chrono::milliseconds(500));
  EXPECT_THROW(client.remote_fill(masked_example()), TransportError);

  FallbackInfiller fallback(std::make_unique<RemoteInfiller>(endpoint, std::chrono::milliseconds(500)),
                            std::make_unique<LexiconInfiller>(SlotLexicon{{"artist", {"lee"}}}));
  Rng rng(0);
  EXPECT_EQ(fallback.fill(masked_example(), rng), (Tokens{"add", "lee", "playlist"}));
  EXPECT_EQ(fallback.fallbacks(), 1u);
}

}  // namespace
}  // namespace oovtag
