// gtc/pipeline.hpp

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
#include <cstdint>
#include <span>
#include <vector>

#include "gtc/confusion_network.hpp"
#include "gtc/error.hpp"
#include "gtc/graph.hpp"
#include "gtc/wfst_ops.hpp"

namespace gtc {

struct PipelineConfig {
  double mu = 0.6;    // score scaling
  double eta = 0.0;   // pruning threshold, 0 disables pruning
  bool unit_weights = false;
  bool prune_after_step1 = true;  // on the confusion network
  bool prune_after_step2 = true;  // on the optimized automaton

  void validate() const {
    if (!(mu >= 0.0) || !std::isfinite(mu)) throw Error("pipeline: mu must be finite and >= 0");
    if (!(eta >= 0.0 && eta < 1.0)) throw Error("pipeline: eta must lie in [0, 1)");
  }
};

/// Drops arcs whose share of their state's outgoing mass (arcs plus final
/// weight) is below `eta`, then renormalizes every state. The best entry
/// of each state always survives.
inline Wfst prune_wfst(const Wfst& fst, double eta) {
  if (!(eta >= 0.0 && eta < 1.0)) throw Error("prune_wfst: eta must lie in [0, 1)");
  Wfst out;
  out.input_symbols = fst.input_symbols;
  out.output_symbols = fst.output_symbols;
  for (int s = 0; s < fst.num_states(); ++s) out.add_state();
  if (fst.start() < 0) return out;
  out.set_start(fst.start());
  for (int s = 0; s < fst.num_states(); ++s) {
    const auto arcs = fst.arcs(s);
    // Entry i < arcs.size() is an arc; the last entry is the final weight.
    std::vector<double> cost;
    for (const auto& a : arcs) cost.push_back(a.weight);
    cost.push_back(fst.final_weight(s));
    double total = kInfinity;
    for (double c : cost) total = neg_log_add(total, c);
    if (total == kInfinity) continue;
    const std::size_t best = std::min_element(cost.begin(), cost.end()) - cost.begin();
    std::vector<char> keep(cost.size(), 0);
    double kept = kInfinity;
    for (std::size_t i = 0; i < cost.size(); ++i) {
      if (cost[i] == kInfinity) continue;
      if (std::exp(total - cost[i]) >= eta || i == best) {
        keep[i] = 1;
        kept = neg_log_add(kept, cost[i]);
      }
    }
    for (std::size_t i = 0; i < arcs.size(); ++i)
      if (keep[i]) {
        Arc a = arcs[i];
        a.weight = cost[i] - kept;
        out.add_arc(s, a);
      }
    if (keep.back()) out.set_final(s, cost.back() - kept);
  }
  return connect(out);
}

/// Automaton for a confusion network: the log-semiring optimized chain when
/// it has no more label arcs than the chain itself, else the chain with
/// its epsilon arcs. Both carry the same weighted language; on a small
/// alphabet, epsilon entries next to repeated tokens make the
/// determinized sausage grow exponentially.
inline Wfst compact_cn_wfst(const ConfusionNetwork& cn, AlphabetPtr symbols) {
  Wfst chain = cn_to_chain(cn, std::move(symbols));
  std::size_t labels = 0;
  for (int s = 0; s < chain.num_states(); ++s)
    for (const auto& a : chain.arcs(s)) labels += a.ilabel != kEpsilon;
  // A connected machine has at least (states - 1) arcs.
  auto opt = optimize_bounded<LogSemiring>(chain, labels + 2);
  if (opt && opt->num_arcs() <= labels) return *opt;
  return chain;
}

/// N-best list to CTC-style supervision graph: confusion network, optional
/// pruning, compact automaton, optional pruning, graph conversion.
inline GtcGraph build_supervision_graph(const NBestList& nbest, const PipelineConfig& config, AlphabetPtr alphabet) {
  config.validate();
  ConfusionNetwork cn = nbest_to_cn(nbest, config.mu);
  const bool prune = config.eta > 0.0;
  if (prune && config.prune_after_step1) cn = prune_cn(cn, config.eta);
  Wfst fst = compact_cn_wfst(cn, alphabet);
  if (prune && config.prune_after_step2) fst = prune_wfst(fst, config.eta);
  GtcGraph graph = wfst_to_ctc_graph(fst, alphabet);
  return config.unit_weights ? with_unit_weights(graph) : graph;
}

/// Levenshtein distance with unit costs.
inline std::size_t edit_distance(std::span<const int> hyp, std::span<const int> ref) {
  std::vector<std::size_t> prev(ref.size() + 1), cur(ref.size() + 1);
  for (std::size_t j = 0; j <= ref.size(); ++j) prev[j] = j;
  for (std::size_t i = 1; i <= hyp.size(); ++i) {
    cur[0] = i;
    for (std::size_t j = 1; j <= ref.size(); ++j)
      cur[j] = std::min({prev[j - 1] + (hyp[i - 1] == ref[j - 1] ? 0 : 1), prev[j] + 1, cur[j - 1] + 1});
    std::swap(prev, cur);
  }
  return prev[ref.size()];
}

/// Fewest edits between any hypothesis of the list and the reference.
inline std::size_t oracle_errors(const NBestList& nbest, std::span<const int> ref) {
  if (nbest.hyps.empty()) throw Error("oracle_errors: empty hypothesis list");
  std::size_t best = SIZE_MAX;
  for (const auto& h : nbest.hyps) best = std::min(best, edit_distance(h.tokens, ref));
  return best;
}

/// Fewest edits between any label string of the graph and the reference:
/// the graph's label acceptor composed with the edit-distance transducer
/// and the reference acceptor, then a tropical shortest distance.
inline std::size_t oracle_errors(const GtcGraph& graph, std::span<const int> ref) {
  const AlphabetPtr& symbols = graph.alphabet();
  const Wfst labels = graph_to_acceptor<TropicalSemiring>(graph, /*unit_weights=*/true);
  const Wfst edits = compose<TropicalSemiring>(labels, edit_distance_fst(symbols));
  const Wfst lattice = compose<TropicalSemiring>(edits, string_acceptor(ref, symbols));
  return static_cast<std::size_t>(std::llround(shortest_distance<TropicalSemiring>(lattice)));
}

inline double oracle_ler(const NBestList& nbest, std::span<const int> ref) {
  if (ref.empty()) throw Error("oracle_ler: empty reference");
  return static_cast<double>(oracle_errors(nbest, ref)) / static_cast<double>(ref.size());
}

inline double oracle_ler(const GtcGraph& graph, std::span<const int> ref) {
  if (ref.empty()) throw Error("oracle_ler: empty reference");
  return static_cast<double>(oracle_errors(graph, ref)) / static_cast<double>(ref.size());
}

}  // namespace gtc
