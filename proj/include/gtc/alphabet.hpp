// gtc/alphabet.hpp

// Copyright 2026  The GTC Authors

// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.
#pragma once

#include <istream>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "gtc/error.hpp"

namespace gtc {

/// Output symbol set. Index 0 is always the blank; label tokens follow in
/// the order they were given.
class Alphabet {
 public:
  static constexpr int kBlank = 0;
  static constexpr std::string_view kBlankToken = "<b>";

  Alphabet() : Alphabet(std::vector<std::string>{}) {}

  /// `tokens` excludes the blank. Tokens must be unique, non-empty, free of
  /// whitespace, and must not collide with the reserved markers.
  explicit Alphabet(const std::vector<std::string>& tokens) {
    tokens_.emplace_back(kBlankToken);
    index_.emplace(std::string(kBlankToken), kBlank);
    for (const auto& tok : tokens) {
      if (tok.empty() || tok.find_first_of(" \t\r\n") != std::string::npos)
        throw Error("alphabet: invalid token '" + tok + "'");
      if (is_reserved(tok)) throw Error("alphabet: reserved token '" + tok + "'");
      if (!index_.emplace(tok, static_cast<int>(tokens_.size())).second)
        throw Error("alphabet: duplicate token '" + tok + "'");
      tokens_.push_back(tok);
    }
  }

  static bool is_reserved(std::string_view tok) {
    return tok == kBlankToken || tok == "<s>" || tok == "</s>" || tok == "<eps>";
  }

  /// Reads one token per line; blank lines are skipped, the blank is implied.
  static Alphabet read(std::istream& in, const std::string& source = "alphabet") {
    std::vector<std::string> tokens;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.empty()) continue;
      if (line.find_first_of(" \t") != std::string::npos)
        throw ParseError(source, lineno, "token contains whitespace");
      if (line == kBlankToken) continue;
      try {
        Alphabet probe(std::vector<std::string>{line});
      } catch (const Error& e) {
        throw ParseError(source, lineno, e.what());
      }
      tokens.push_back(line);
    }
    try {
      return Alphabet(tokens);
    } catch (const Error& e) {
      throw ParseError(source, 0, e.what());
    }
  }

  int size() const { return static_cast<int>(tokens_.size()); }
  const std::string& token(int index) const { return tokens_.at(index); }

  std::optional<int> find(std::string_view tok) const {
    auto it = index_.find(std::string(tok));
    if (it == index_.end()) return std::nullopt;
    return it->second;
  }

  int index(std::string_view tok) const {
    if (auto i = find(tok)) return *i;
    throw Error("alphabet: unknown token '" + std::string(tok) + "'");
  }

  /// Label tokens, blank excluded.
  std::vector<std::string> labels() const {
    return {tokens_.begin() + 1, tokens_.end()};
  }

  std::vector<int> encode(const std::vector<std::string>& toks) const {
    std::vector<int> out;
    out.reserve(toks.size());
    for (const auto& t : toks) out.push_back(index(t));
    return out;
  }

  std::string decode(const std::vector<int>& ids, std::string_view sep = " ") const {
    std::string out;
    for (std::size_t i = 0; i < ids.size(); ++i) {
      if (i) out += sep;
      out += token(ids[i]);
    }
    return out;
  }

  friend bool operator==(const Alphabet& a, const Alphabet& b) {
    return a.tokens_ == b.tokens_;
  }

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, int> index_;
};

using AlphabetPtr = std::shared_ptr<const Alphabet>;

inline AlphabetPtr make_alphabet(const std::vector<std::string>& tokens) {
  return std::make_shared<const Alphabet>(tokens);
}

}  // namespace gtc
