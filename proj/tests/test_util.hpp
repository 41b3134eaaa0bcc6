// tests/test_util.hpp

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

#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "gtc/alphabet.hpp"
#include "gtc/confusion_network.hpp"
#include "gtc/graph.hpp"
#include "gtc/matrix.hpp"
#include "gtc/wfst.hpp"

namespace gtc::testing {

using Rng = std::mt19937_64;

inline AlphabetPtr letters(int n) {
  std::vector<std::string> toks;
  for (int i = 0; i < n; ++i) toks.push_back(std::string(1, static_cast<char>('a' + i)));
  return make_alphabet(toks);
}

inline double uniform(Rng& rng, double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); }
inline int uniform_int(Rng& rng, int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); }
inline bool coin(Rng& rng, double p) { return std::bernoulli_distribution(p)(rng); }

/// Random acyclic acceptor: arcs only go from lower to higher state ids.
/// Labels are drawn from 1..num_labels; with probability eps_prob an arc is
/// an epsilon arc instead.
inline Wfst random_acyclic_wfst(Rng& rng, int num_states, int num_labels, double eps_prob, double arc_prob = 0.35) {
  Wfst fst;
  for (int s = 0; s < num_states; ++s) fst.add_state();
  fst.set_start(0);
  for (int s = 0; s < num_states; ++s) {
    for (int d = s + 1; d < num_states; ++d) {
      if (!coin(rng, arc_prob)) continue;
      int arcs = uniform_int(rng, 1, 2);
      for (int i = 0; i < arcs; ++i) {
        int label = coin(rng, eps_prob) ? kEpsilon : uniform_int(rng, 1, num_labels);
        fst.add_arc(s, label, uniform(rng, 0.05, 2.5), d);
      }
    }
    if (s == num_states - 1 || coin(rng, 0.25)) fst.set_final(s, uniform(rng, 0.0, 1.5));
  }
  // A guaranteed path start -> last state.
  for (int s = 0; s + 1 < num_states; ++s)
    fst.add_arc(s, uniform_int(rng, 1, num_labels), uniform(rng, 0.05, 2.5), s + 1);
  return fst;
}

/// Random valid GTC graph with `emitting` nodes over labels 0..num_symbols-1.
inline GtcGraph random_graph(Rng& rng, int emitting, int num_symbols, double self_loop_prob = 0.6,
                             double edge_prob = 0.35, bool unit = false) {
  GraphBuilder b(letters(num_symbols - 1));
  std::vector<int> ids;
  for (int i = 0; i < emitting; ++i) ids.push_back(b.add_node(uniform_int(rng, 0, num_symbols - 1)));
  auto w = [&] { return unit ? 1.0 : uniform(rng, 0.1, 1.0); };
  std::vector<char> has_in(emitting, 0), has_out(emitting, 0);
  for (int i = 0; i < emitting; ++i) {
    if (coin(rng, self_loop_prob)) b.add_edge(ids[i], ids[i], w());
    for (int j = i + 1; j < emitting; ++j)
      if (coin(rng, edge_prob)) {
        b.add_edge(ids[i], ids[j], w());
        has_out[i] = has_in[j] = 1;
      }
  }
  for (int i = 0; i < emitting; ++i) {
    if (!has_in[i] || coin(rng, 0.2)) b.add_edge(GraphBuilder::kStart, ids[i], w());
    if (!has_out[i] || coin(rng, 0.2)) b.add_edge(ids[i], GraphBuilder::kEnd, w());
  }
  return b.build();
}

inline Matrix random_logits(Rng& rng, std::size_t T, std::size_t U, double scale = 1.5) {
  Matrix u(T, U);
  std::normal_distribution<double> n(0.0, scale);
  for (auto& x : u.data()) x = n(rng);
  return u;
}

inline PosteriorMatrix random_posteriors(Rng& rng, std::size_t T, std::size_t U, double scale = 1.5) {
  return LogitMatrix(random_logits(rng, T, U, scale)).softmax();
}

/// Reference of length [min_len, max_len] over labels 1..num_labels.
inline std::vector<int> random_labels(Rng& rng, int num_labels, int min_len, int max_len) {
  std::vector<int> out(uniform_int(rng, min_len, max_len));
  for (auto& l : out) l = uniform_int(rng, 1, num_labels);
  return out;
}

/// Noisy copy of `ref`: each position is substituted, deleted or followed
/// by an insertion with probability `err` each.
inline std::vector<int> corrupt(Rng& rng, const std::vector<int>& ref, int num_labels, double err) {
  std::vector<int> out;
  for (int l : ref) {
    if (coin(rng, err)) continue;
    out.push_back(coin(rng, err) ? uniform_int(rng, 1, num_labels) : l);
    if (coin(rng, err)) out.push_back(uniform_int(rng, 1, num_labels));
  }
  return out;
}

/// N-best list of distinct noisy copies of `ref` with descending scores.
inline NBestList random_nbest(Rng& rng, const std::vector<int>& ref, int num_labels, int n, double err) {
  NBestList nb{"utt", {}};
  double score = -uniform(rng, 0.1, 2.0);
  for (int tries = 0; static_cast<int>(nb.hyps.size()) < n && tries < 50 * n; ++tries) {
    std::vector<int> h = corrupt(rng, ref, num_labels, err);
    bool dup = false;
    for (const auto& x : nb.hyps) dup = dup || x.tokens == h;
    if (dup) continue;
    nb.hyps.push_back({h, score});
    score -= uniform(rng, 0.0, 1.0);
  }
  return nb;
}

inline double rel_err(double a, double b) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-300});
}

}  // namespace gtc::testing
