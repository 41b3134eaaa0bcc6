// gtc/confusion_network.hpp

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
#include <istream>
#include <map>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "gtc/alphabet.hpp"
#include "gtc/error.hpp"
#include "gtc/semiring.hpp"
#include "gtc/wfst.hpp"
#include "gtc/wfst_ops.hpp"

namespace gtc {

struct Hypothesis {
  std::vector<int> tokens;  // alphabet indices, blank excluded
  double score = 0.0;       // natural-log probability
};

struct NBestList {
  std::string utt_id;
  std::vector<Hypothesis> hyps;  // best first
};

/// Sausage: a sequence of bins, each a distribution over tokens where key
/// kEpsilon (0) stands for "no token here".
struct ConfusionNetwork {
  using Bin = std::map<int, double>;
  std::vector<Bin> bins;
};

/// N-best file: `<utt_id>\t<score>\t<token token ...>` per line. Lines of
/// one utterance need not be adjacent; utterances keep first-seen order.
inline std::vector<NBestList> read_nbest(std::istream& in, const Alphabet& alphabet,
                                         const std::string& source = "nbest") {
  std::vector<NBestList> lists;
  std::map<std::string, std::size_t> index;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::istringstream fields(line);
    for (std::string tok; std::getline(fields, tok, '\t');) f.push_back(tok);
    if (f.size() == 2) f.emplace_back();
    if (f.size() != 3 || f[0].empty()) throw ParseError(source, lineno, "expected <utt_id>\\t<score>\\t<tokens>");
    Hypothesis h;
    h.score = parse_weight(f[1], source, lineno);
    if (!std::isfinite(h.score)) throw ParseError(source, lineno, "score must be finite");
    std::istringstream toks(f[2]);
    for (std::string tok; toks >> tok;) {
      auto id = alphabet.find(tok);
      if (!id || *id == Alphabet::kBlank) throw ParseError(source, lineno, "token '" + tok + "' not in alphabet");
      h.tokens.push_back(*id);
    }
    auto [it, fresh] = index.try_emplace(f[0], lists.size());
    if (fresh) lists.push_back({f[0], {}});
    lists[it->second].hyps.push_back(std::move(h));
  }
  return lists;
}

inline void write_nbest(std::ostream& out, const NBestList& nbest, const Alphabet& alphabet) {
  for (const auto& h : nbest.hyps) out << nbest.utt_id << '\t' << format_weight(h.score) << '\t' << alphabet.decode(h.tokens) << '\n';
}

/// Hypothesis weights proportional to exp(mu * score), normalized.
inline std::vector<double> hypothesis_weights(const NBestList& nbest, double mu) {
  std::vector<double> w;
  double hi = -kInfinity;
  for (const auto& h : nbest.hyps) hi = std::max(hi, mu * h.score);
  double z = 0.0;
  for (const auto& h : nbest.hyps) z += std::exp(mu * h.score - hi);
  for (const auto& h : nbest.hyps) w.push_back(std::exp(mu * h.score - hi) / z);
  return w;
}

/// Sausage construction by iterative alignment. Hypotheses are added in
/// order of decreasing weight; each one is aligned to the current network
/// by dynamic programming where matching token x against a bin costs
/// 1 - P(x), leaving a bin empty costs 1 - P(eps), and opening a new bin
/// costs 1. Ties prefer match/substitution, then insertion, then deletion.
inline ConfusionNetwork nbest_to_cn(const NBestList& nbest, double mu) {
  if (nbest.hyps.empty()) throw Error("nbest_to_cn: empty hypothesis list");
  if (!(mu >= 0.0) || !std::isfinite(mu)) throw Error("nbest_to_cn: mu must be finite and >= 0");
  const std::vector<double> weight = hypothesis_weights(nbest, mu);
  std::vector<std::size_t> order(nbest.hyps.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return weight[a] > weight[b]; });

  using Bin = ConfusionNetwork::Bin;
  std::vector<Bin> bins;
  double mass = 0.0;  // total weight aligned so far
  enum Move : char { kDiag, kIns, kDel };

  for (std::size_t idx : order) {
    const auto& tokens = nbest.hyps[idx].tokens;
    const double w = weight[idx];
    const std::size_t n = bins.size(), m = tokens.size();
    auto prob = [&](const Bin& bin, int key) {
      auto it = bin.find(key);
      return (it == bin.end() || mass <= 0.0) ? 0.0 : it->second / mass;
    };
    // cost[i][j]: first i tokens against first j bins.
    std::vector<std::vector<double>> cost(m + 1, std::vector<double>(n + 1, 0.0));
    std::vector<std::vector<Move>> move(m + 1, std::vector<Move>(n + 1, kDiag));
    for (std::size_t j = 1; j <= n; ++j) {
      cost[0][j] = cost[0][j - 1] + (1.0 - prob(bins[j - 1], kEpsilon));
      move[0][j] = kDel;
    }
    for (std::size_t i = 1; i <= m; ++i) {
      cost[i][0] = cost[i - 1][0] + 1.0;
      move[i][0] = kIns;
      for (std::size_t j = 1; j <= n; ++j) {
        const double diag = cost[i - 1][j - 1] + (1.0 - prob(bins[j - 1], tokens[i - 1]));
        const double ins = cost[i - 1][j] + 1.0;
        const double del = cost[i][j - 1] + (1.0 - prob(bins[j - 1], kEpsilon));
        cost[i][j] = diag;
        move[i][j] = kDiag;
        if (ins < cost[i][j]) {
          cost[i][j] = ins;
          move[i][j] = kIns;
        }
        if (del < cost[i][j]) {
          cost[i][j] = del;
          move[i][j] = kDel;
        }
      }
    }
    std::vector<Move> path;
    for (std::size_t i = m, j = n; i > 0 || j > 0;) {
      path.push_back(move[i][j]);
      if (move[i][j] == kDiag) --i, --j;
      else if (move[i][j] == kIns) --i;
      else --j;
    }
    std::reverse(path.begin(), path.end());

    std::vector<Bin> merged;
    merged.reserve(n + m);
    std::size_t i = 0, j = 0;
    for (Move mv : path) {
      if (mv == kDiag) {
        merged.push_back(std::move(bins[j++]));
        merged.back()[tokens[i++]] += w;
      } else if (mv == kDel) {
        merged.push_back(std::move(bins[j++]));
        merged.back()[kEpsilon] += w;
      } else {
        Bin fresh{{tokens[i++], w}};
        if (mass > 0.0) fresh[kEpsilon] += mass;
        merged.push_back(std::move(fresh));
      }
    }
    bins = std::move(merged);
    mass += w;
  }

  ConfusionNetwork cn;
  for (auto& bin : bins) {
    std::erase_if(bin, [](const auto& kv) { return kv.second <= 0.0; });
    if (bin.size() == 1 && bin.begin()->first == kEpsilon) continue;
    double z = 0.0;
    for (const auto& [k, p] : bin) z += p;
    for (auto& [k, p] : bin) p /= z;
    cn.bins.push_back(std::move(bin));
  }
  return cn;
}

/// Drops entries below `eta` in every bin and renormalizes. The most
/// probable entry of a bin always survives.
inline ConfusionNetwork prune_cn(const ConfusionNetwork& cn, double eta) {
  if (!(eta >= 0.0 && eta < 1.0)) throw Error("prune_cn: eta must lie in [0, 1)");
  ConfusionNetwork out;
  for (const auto& bin : cn.bins) {
    auto best = std::max_element(bin.begin(), bin.end(), [](const auto& a, const auto& b) { return a.second < b.second; });
    ConfusionNetwork::Bin kept;
    double z = 0.0;
    for (const auto& [k, p] : bin)
      if (p >= eta || k == best->first) {
        kept[k] = p;
        z += p;
      }
    for (auto& [k, p] : kept) p /= z;
    if (kept.size() == 1 && kept.begin()->first == kEpsilon) continue;
    out.bins.push_back(std::move(kept));
  }
  return out;
}

/// Linear chain acceptor with one arc per bin entry (cost -ln p), before
/// any optimization.
inline Wfst cn_to_chain(const ConfusionNetwork& cn, AlphabetPtr symbols = nullptr) {
  Wfst fst;
  fst.input_symbols = fst.output_symbols = symbols;
  int s = fst.add_state();
  fst.set_start(s);
  for (const auto& bin : cn.bins) {
    const int next = fst.add_state();
    for (const auto& [k, p] : bin)
      if (p > 0.0) fst.add_arc(s, k, -std::log(p), next);
    s = next;
  }
  fst.set_final(s, 0.0);
  return fst;
}

/// Chain acceptor optimized in the log semiring: epsilon removal,
/// determinization, minimization.
inline Wfst cn_to_wfst(const ConfusionNetwork& cn, AlphabetPtr symbols = nullptr) {
  return optimize<LogSemiring>(cn_to_chain(cn, std::move(symbols)));
}

}  // namespace gtc
