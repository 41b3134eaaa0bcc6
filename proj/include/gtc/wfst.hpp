// gtc/wfst.hpp

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

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <optional>
#include <ostream>
#include <queue>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "gtc/alphabet.hpp"
#include "gtc/error.hpp"
#include "gtc/semiring.hpp"

namespace gtc {

/// Label 0 is reserved for epsilon. Real labels coincide with alphabet
/// indices; the blank never appears on an automaton arc.
inline constexpr int kEpsilon = 0;

struct Arc {
  int ilabel = kEpsilon;
  int olabel = kEpsilon;
  double weight = 0.0;  // cost, i.e. negative log probability
  int nextstate = -1;

  bool is_epsilon() const { return ilabel == kEpsilon && olabel == kEpsilon; }
};

/// Weighted finite-state transducer with cost-valued weights. Acceptors
/// keep ilabel == olabel on every arc. A final weight of +inf means the
/// state is not final.
class Wfst {
 public:
  int add_state() {
    arcs_.emplace_back();
    finals_.push_back(kInfinity);
    return num_states() - 1;
  }

  void set_start(int s) {
    check_state(s);
    start_ = s;
  }

  void set_final(int s, double weight = 0.0) {
    check_state(s);
    finals_[s] = weight;
  }

  void add_arc(int s, const Arc& arc) {
    check_state(s);
    check_state(arc.nextstate);
    if (arc.ilabel < 0 || arc.olabel < 0) throw Error("wfst: negative label");
    arcs_[s].push_back(arc);
  }

  /// Acceptor convenience.
  void add_arc(int s, int label, double weight, int next) {
    add_arc(s, Arc{label, label, weight, next});
  }

  int start() const { return start_; }
  int num_states() const { return static_cast<int>(arcs_.size()); }
  double final_weight(int s) const { return finals_.at(s); }
  bool is_final(int s) const { return finals_.at(s) != kInfinity; }
  std::span<const Arc> arcs(int s) const { return arcs_.at(s); }
  std::vector<Arc>& mutable_arcs(int s) { return arcs_.at(s); }

  std::size_t num_arcs() const {
    std::size_t n = 0;
    for (const auto& a : arcs_) n += a.size();
    return n;
  }

  bool is_acceptor() const {
    for (const auto& v : arcs_)
      for (const auto& a : v)
        if (a.ilabel != a.olabel) return false;
    return true;
  }

  bool has_epsilons() const {
    for (const auto& v : arcs_)
      for (const auto& a : v)
        if (a.is_epsilon()) return true;
    return false;
  }

  /// Optional symbol tables; compose() refuses to join mismatched ones.
  AlphabetPtr input_symbols;
  AlphabetPtr output_symbols;

 private:
  void check_state(int s) const {
    if (s < 0 || s >= num_states()) throw Error("wfst: invalid state id " + std::to_string(s));
  }

  std::vector<std::vector<Arc>> arcs_;
  std::vector<double> finals_;
  int start_ = -1;
};

/// Topological order of all states, or nullopt if the machine has a cycle.
inline std::optional<std::vector<int>> topological_order(const Wfst& fst) {
  const int n = fst.num_states();
  std::vector<int> indeg(n, 0);
  for (int s = 0; s < n; ++s)
    for (const auto& a : fst.arcs(s)) ++indeg[a.nextstate];
  std::vector<int> order;
  order.reserve(n);
  std::queue<int> ready;
  for (int s = 0; s < n; ++s)
    if (indeg[s] == 0) ready.push(s);
  while (!ready.empty()) {
    int s = ready.front();
    ready.pop();
    order.push_back(s);
    for (const auto& a : fst.arcs(s))
      if (--indeg[a.nextstate] == 0) ready.push(a.nextstate);
  }
  if (static_cast<int>(order.size()) != n) return std::nullopt;
  return order;
}

inline bool is_acyclic(const Wfst& fst) { return topological_order(fst).has_value(); }

inline bool is_deterministic(const Wfst& fst) {
  for (int s = 0; s < fst.num_states(); ++s) {
    std::vector<int> labels;
    for (const auto& a : fst.arcs(s)) labels.push_back(a.ilabel);
    std::sort(labels.begin(), labels.end());
    if (std::adjacent_find(labels.begin(), labels.end()) != labels.end()) return false;
  }
  return true;
}

/// Removes states that are not on a start-to-final path. Surviving states
/// keep their relative order. Arcs with zero weight are dropped.
inline Wfst connect(const Wfst& fst) {
  const int n = fst.num_states();
  Wfst out;
  out.input_symbols = fst.input_symbols;
  out.output_symbols = fst.output_symbols;
  if (fst.start() < 0) return out;

  std::vector<char> access(n, 0), coaccess(n, 0);
  std::vector<std::vector<int>> preds(n);
  for (int s = 0; s < n; ++s)
    for (const auto& a : fst.arcs(s))
      if (a.weight != kInfinity) preds[a.nextstate].push_back(s);

  std::vector<int> stack{fst.start()};
  access[fst.start()] = 1;
  while (!stack.empty()) {
    int s = stack.back();
    stack.pop_back();
    for (const auto& a : fst.arcs(s))
      if (a.weight != kInfinity && !access[a.nextstate]) {
        access[a.nextstate] = 1;
        stack.push_back(a.nextstate);
      }
  }
  for (int s = 0; s < n; ++s)
    if (fst.is_final(s)) {
      coaccess[s] = 1;
      stack.push_back(s);
    }
  while (!stack.empty()) {
    int s = stack.back();
    stack.pop_back();
    for (int p : preds[s])
      if (!coaccess[p]) {
        coaccess[p] = 1;
        stack.push_back(p);
      }
  }

  std::vector<int> remap(n, -1);
  for (int s = 0; s < n; ++s)
    if (access[s] && coaccess[s]) remap[s] = out.add_state();
  if (remap[fst.start()] < 0) return out;  // empty language
  out.set_start(remap[fst.start()]);
  for (int s = 0; s < n; ++s) {
    if (remap[s] < 0) continue;
    if (fst.is_final(s)) out.set_final(remap[s], fst.final_weight(s));
    for (Arc a : fst.arcs(s)) {
      if (a.weight == kInfinity || remap[a.nextstate] < 0) continue;
      a.nextstate = remap[a.nextstate];
      out.add_arc(remap[s], a);
    }
  }
  return out;
}

/// Single-path acceptor spelling `labels` with zero cost.
inline Wfst string_acceptor(std::span<const int> labels, AlphabetPtr symbols = nullptr) {
  Wfst fst;
  fst.input_symbols = fst.output_symbols = std::move(symbols);
  int s = fst.add_state();
  fst.set_start(s);
  for (int l : labels) {
    int n = fst.add_state();
    fst.add_arc(s, l, 0.0, n);
    s = n;
  }
  fst.set_final(s, 0.0);
  return fst;
}

inline std::string format_weight(double w) {
  if (w == kInfinity) return "inf";
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", w);
  return buf;
}

inline double parse_weight(const std::string& tok, const std::string& source, std::size_t line) {
  if (tok == "inf" || tok == "Infinity") return kInfinity;
  try {
    std::size_t used = 0;
    double v = std::stod(tok, &used);
    if (used != tok.size()) throw std::invalid_argument(tok);
    return v;
  } catch (const std::exception&) {
    throw ParseError(source, line, "bad number '" + tok + "'");
  }
}

/// Text acceptor format, one record per line:
///   start <state>
///   arc <src> <dst> <label> <neglog_weight>
///   final <state> <neglog_weight>
/// `<eps>` is the epsilon label; other labels are alphabet tokens.
inline void write_wfst(std::ostream& out, const Wfst& fst, const Alphabet& symbols) {
  if (!fst.is_acceptor()) throw Error("write_wfst: only acceptors have a text form");
  if (fst.start() >= 0) out << "start " << fst.start() << '\n';
  for (int s = 0; s < fst.num_states(); ++s)
    for (const auto& a : fst.arcs(s))
      out << "arc " << s << ' ' << a.nextstate << ' '
          << (a.ilabel == kEpsilon ? std::string("<eps>") : symbols.token(a.ilabel)) << ' '
          << format_weight(a.weight) << '\n';
  for (int s = 0; s < fst.num_states(); ++s)
    if (fst.is_final(s)) out << "final " << s << ' ' << format_weight(fst.final_weight(s)) << '\n';
}

inline Wfst read_wfst(std::istream& in, const AlphabetPtr& symbols,
                      const std::string& source = "wfst") {
  Wfst fst;
  fst.input_symbols = fst.output_symbols = symbols;
  auto ensure = [&](long id, std::size_t line) {
    if (id < 0 || id > 10'000'000) throw ParseError(source, line, "bad state id");
    while (fst.num_states() <= id) fst.add_state();
    return static_cast<int>(id);
  };
  auto parse_id = [&](const std::string& tok, std::size_t line) -> long {
    try {
      std::size_t used = 0;
      long v = std::stol(tok, &used);
      if (used != tok.size()) throw std::invalid_argument(tok);
      return v;
    } catch (const std::exception&) {
      throw ParseError(source, line, "bad state id '" + tok + "'");
    }
  };
  std::string line;
  std::size_t lineno = 0;
  bool have_start = false;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::istringstream fields(line);
    std::vector<std::string> f;
    for (std::string tok; fields >> tok;) f.push_back(tok);
    if (f.empty()) continue;
    if (f[0] == "start" && f.size() == 2) {
      if (have_start) throw ParseError(source, lineno, "duplicate start record");
      fst.set_start(ensure(parse_id(f[1], lineno), lineno));
      have_start = true;
    } else if (f[0] == "arc" && f.size() == 5) {
      int src = ensure(parse_id(f[1], lineno), lineno);
      int dst = ensure(parse_id(f[2], lineno), lineno);
      int label = kEpsilon;
      if (f[3] != "<eps>") {
        auto idx = symbols->find(f[3]);
        if (!idx || *idx == Alphabet::kBlank)
          throw ParseError(source, lineno, "unknown token '" + f[3] + "'");
        label = *idx;
      }
      fst.add_arc(src, label, parse_weight(f[4], source, lineno), dst);
    } else if (f[0] == "final" && f.size() == 3) {
      fst.set_final(ensure(parse_id(f[1], lineno), lineno), parse_weight(f[2], source, lineno));
    } else {
      throw ParseError(source, lineno, "unrecognized record");
    }
  }
  if (!have_start) throw ParseError(source, 0, "missing start record");
  return fst;
}

}  // namespace gtc
