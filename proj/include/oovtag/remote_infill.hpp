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

#ifndef OOVTAG_REMOTE_INFILL_HPP_
#define OOVTAG_REMOTE_INFILL_HPP_

// Eigen must precede httplib.h: glibc's <resolv.h> defines a `_res` macro
// that collides with identifiers inside Eigen.
#include <Eigen/Core>

#include <chrono>
#include <string>
#include <vector>

#include "httplib.h"
#include "json.hpp"
#include "oovtag/errors.hpp"
#include "oovtag/infill.hpp"
#include "oovtag/masking.hpp"

namespace oovtag {

// Wire format of POST /v1/infill.
inline std::string infill_request_body(const MaskedUtterance& m) {
  nlohmann::json body;
  body["tokens"] = m.tokens;
  body["mask_positions"] = m.mask_positions;
  return body.dump();
}

// Parses and validates a /v1/infill response body.
inline std::vector<std::string> parse_infill_response(const MaskedUtterance& m,
                                                      const std::string& body) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(body);
  } catch (const nlohmann::json::exception& e) {
    throw ProtocolError(std::string("response is not JSON: ") + e.what());
  }
  if (!j.is_object() || !j.contains("tokens") || !j["tokens"].is_array()) {
    throw ProtocolError("response lacks a 'tokens' array");
  }
  std::vector<std::string> tokens;
  for (const auto& t : j["tokens"]) {
    if (!t.is_string()) throw ProtocolError("non-string token in response");
    tokens.push_back(t.get<std::string>());
  }
  validate_fill(m, tokens);
  return tokens;
}

// Client for a remote mask-infilling service. The endpoint is a base URL such
// as "http://localhost:8571"; requests go to <endpoint>/v1/infill. One retry
// on transport failure.
class RemoteInfiller : public Infiller {
 public:
  explicit RemoteInfiller(std::string endpoint,
                          std::chrono::milliseconds timeout = std::chrono::seconds(10))
      : timeout_(timeout) {
    auto scheme = endpoint.find("://");
    std::size_t host_start = scheme == std::string::npos ? 0 : scheme + 3;
    std::size_t path_start = endpoint.find('/', host_start);
    base_ = endpoint.substr(0, path_start);
    prefix_ = path_start == std::string::npos ? "" : endpoint.substr(path_start);
    while (!prefix_.empty() && prefix_.back() == '/') prefix_.pop_back();
  }

  std::vector<std::string> fill(const MaskedUtterance& m, Rng&) override {
    return remote_fill(m);
  }

  std::vector<std::string> remote_fill(const MaskedUtterance& m) const {
    if (m.mask_positions.empty()) throw ProtocolError("request has no mask");
    httplib::Client client(base_);
    const auto seconds = std::chrono::duration_cast<std::chrono::seconds>(timeout_);
    const auto micros = std::chrono::duration_cast<std::chrono::microseconds>(
        timeout_ - seconds);
    client.set_connection_timeout(seconds.count(), micros.count());
    client.set_read_timeout(seconds.count(), micros.count());
    client.set_write_timeout(seconds.count(), micros.count());
    const std::string body = infill_request_body(m);
    const std::string path = prefix_ + "/v1/infill";

    std::string last_error;
    for (int attempt = 0; attempt < 2; ++attempt) {
      auto res = client.Post(path, body, "application/json");
      if (!res) {
        last_error = httplib::to_string(res.error());
        continue;
      }
      if (res->status != 200) {
        throw ProtocolError("infill service returned status " +
                            std::to_string(res->status) + ": " + res->body);
      }
      return parse_infill_response(m, res->body);
    }
    throw TransportError("infill request to " + base_ + path +
                         " failed: " + last_error);
  }

 private:
  std::string base_;
  std::string prefix_;
  std::chrono::milliseconds timeout_;
};

}  // namespace oovtag

#endif  // OOVTAG_REMOTE_INFILL_HPP_
