// gtc/wfst_ops.hpp

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
#include <limits>
#include <map>
#include <optional>
#include <queue>
#include <tuple>
#include <utility>
#include <vector>

#include "gtc/error.hpp"
#include "gtc/semiring.hpp"
#include "gtc/wfst.hpp"

namespace gtc {

// Optimization algorithms for acyclic machines. Cyclic input is rejected;
// the pseudo-label pipeline never produces cycles.

/// Epsilon removal. The weight of every (input, output) string pair is
/// preserved. Throws on cyclic input.
template <Semiring S>
Wfst remove_epsilon(const Wfst& fst) {
  auto order = topological_order(fst);
  if (!order) throw Error("remove_epsilon: cyclic input");
  const int n = fst.num_states();
  std::vector<int> position(n);
  for (int i = 0; i < n; ++i) position[(*order)[i]] = i;

  Wfst out;
  out.input_symbols = fst.input_symbols;
  out.output_symbols = fst.output_symbols;
  for (int s = 0; s < n; ++s) out.add_state();
  if (fst.start() >= 0) out.set_start(fst.start());

  std::vector<double> dist(n, S::zero());
  for (int s = 0; s < n; ++s) {
    // Epsilon closure of s by a sweep in topological order.
    std::fill(dist.begin(), dist.end(), S::zero());
    dist[s] = S::one();
    double final_weight = S::zero();
    for (int i = position[s]; i < n; ++i) {
      const int q = (*order)[i];
      if (dist[q] == S::zero()) continue;
      if (fst.is_final(q)) final_weight = S::plus(final_weight, S::times(dist[q], fst.final_weight(q)));
      for (const auto& a : fst.arcs(q)) {
        if (a.is_epsilon()) {
          dist[a.nextstate] = S::plus(dist[a.nextstate], S::times(dist[q], a.weight));
        } else {
          Arc b = a;
          b.weight = S::times(dist[q], a.weight);
          out.add_arc(s, b);
        }
      }
    }
    if (final_weight != S::zero()) out.set_final(s, final_weight);
  }
  return connect(out);
}

/// Weighted subset construction for epsilon-free acyclic acceptors. Each
/// subset element carries the residual weight of its state. Returns
/// nullopt once more than `max_states` subsets have been created.
template <Semiring S>
std::optional<Wfst> determinize_bounded(const Wfst& fst, std::size_t max_states) {
  if (!fst.is_acceptor()) throw Error("determinize: acceptor required");
  if (fst.has_epsilons()) throw Error("determinize: epsilon-free input required");
  if (!is_acyclic(fst)) throw Error("determinize: cyclic input");

  using Subset = std::vector<std::pair<int, double>>;  // sorted by state
  Wfst out;
  out.input_symbols = fst.input_symbols;
  out.output_symbols = fst.output_symbols;
  if (fst.start() < 0) return out;

  std::map<Subset, int> ids;
  std::vector<Subset> subsets;
  auto lookup = [&](Subset&& sub) {
    auto [it, inserted] = ids.try_emplace(sub, static_cast<int>(subsets.size()));
    if (inserted) {
      subsets.push_back(std::move(sub));
      out.add_state();
    }
    return it->second;
  };
  bool overflow = false;

  out.set_start(lookup(Subset{{fst.start(), S::one()}}));
  for (std::size_t cur = 0; cur < subsets.size(); ++cur) {
    const Subset sub = subsets[cur];
    double final_weight = S::zero();
    // label -> destination -> accumulated residual-times-arc weight
    std::map<int, std::map<int, double>> moves;
    for (const auto& [q, residual] : sub) {
      if (fst.is_final(q)) final_weight = S::plus(final_weight, S::times(residual, fst.final_weight(q)));
      for (const auto& a : fst.arcs(q)) {
        auto [it, fresh] = moves[a.ilabel].try_emplace(a.nextstate, S::zero());
        it->second = S::plus(it->second, S::times(residual, a.weight));
      }
    }
    if (final_weight != S::zero()) out.set_final(static_cast<int>(cur), final_weight);
    for (const auto& [label, dests] : moves) {
      double total = S::zero();
      for (const auto& [r, w] : dests) total = S::plus(total, w);
      if (total == S::zero()) continue;
      Subset next;
      next.reserve(dests.size());
      for (const auto& [r, w] : dests) next.emplace_back(r, S::divide(w, total));
      int dst = lookup(std::move(next));
      out.add_arc(static_cast<int>(cur), label, total, dst);
    }
    if (subsets.size() > max_states) {
      overflow = true;
      break;
    }
  }
  if (overflow) return std::nullopt;
  return out;
}

template <Semiring S>
Wfst determinize(const Wfst& fst) {
  return *determinize_bounded<S>(fst, std::numeric_limits<std::size_t>::max());
}

/// Per-state distance to the final states: the plus-sum over all paths of
/// the path weight times the final weight. Acyclic input only.
template <Semiring S>
std::vector<double> distance_to_final(const Wfst& fst) {
  auto order = topological_order(fst);
  if (!order) throw Error("distance_to_final: cyclic input");
  std::vector<double> d(fst.num_states(), S::zero());
  for (auto it = order->rbegin(); it != order->rend(); ++it) {
    const int q = *it;
    double acc = fst.final_weight(q);
    for (const auto& a : fst.arcs(q)) acc = S::plus(acc, S::times(a.weight, d[a.nextstate]));
    d[q] = acc;
  }
  return d;
}

inline constexpr double kMinimizeQuantum = 1e-9;

/// Minimization of a deterministic epsilon-free acyclic acceptor: weights
/// are pushed toward the start, then states are merged bottom-up on
/// (final weight, arcs) signatures with weights quantized to 1e-9.
template <Semiring S>
Wfst minimize(const Wfst& input) {
  if (!input.is_acceptor()) throw Error("minimize: acceptor required");
  if (input.has_epsilons()) throw Error("minimize: epsilon-free input required");
  if (!is_deterministic(input)) throw Error("minimize: nondeterministic input");
  const Wfst fst = connect(input);
  Wfst out;
  out.input_symbols = fst.input_symbols;
  out.output_symbols = fst.output_symbols;
  if (fst.start() < 0) return out;

  auto order = topological_order(fst);
  if (!order) throw Error("minimize: cyclic input");
  const std::vector<double> d = distance_to_final<S>(fst);
  const int n = fst.num_states();

  auto pushed_arc = [&](int q, const Arc& a) { return S::divide(S::times(a.weight, d[a.nextstate]), d[q]); };
  auto pushed_final = [&](int q) {
    return fst.is_final(q) ? S::divide(fst.final_weight(q), d[q]) : S::zero();
  };
  auto quantize = [](double w) -> std::int64_t {
    if (w == kInfinity) return INT64_MAX;
    return std::llround(w / kMinimizeQuantum);
  };

  using Signature = std::tuple<bool, std::int64_t, std::vector<std::tuple<int, std::int64_t, int>>>;
  std::map<Signature, int> classes;
  std::vector<int> block(n, -1);
  for (auto it = order->rbegin(); it != order->rend(); ++it) {
    const int q = *it;
    std::vector<std::tuple<int, std::int64_t, int>> arcs;
    for (const auto& a : fst.arcs(q)) arcs.emplace_back(a.ilabel, quantize(pushed_arc(q, a)), block[a.nextstate]);
    std::sort(arcs.begin(), arcs.end());
    Signature sig{q == fst.start(), quantize(pushed_final(q)), std::move(arcs)};
    auto [cls, fresh] = classes.try_emplace(std::move(sig), static_cast<int>(classes.size()));
    block[q] = cls->second;
  }

  // Number output states by the smallest member state id.
  std::vector<int> representative(classes.size(), -1);
  for (int q = 0; q < n; ++q)
    if (representative[block[q]] < 0) representative[block[q]] = q;
  std::vector<int> reps;
  for (int r : representative) reps.push_back(r);
  std::sort(reps.begin(), reps.end());
  std::vector<int> out_id(classes.size());
  for (std::size_t i = 0; i < reps.size(); ++i) {
    out_id[block[reps[i]]] = static_cast<int>(i);
    out.add_state();
  }
  const int start = out_id[block[fst.start()]];
  out.set_start(start);
  const double start_weight = d[fst.start()];
  for (int q : reps) {
    const int s = out_id[block[q]];
    const double scale = (s == start) ? start_weight : S::one();
    if (fst.is_final(q)) out.set_final(s, S::times(scale, pushed_final(q)));
    for (const auto& a : fst.arcs(q))
      out.add_arc(s, a.ilabel, S::times(scale, pushed_arc(q, a)), out_id[block[a.nextstate]]);
  }
  for (int s = 0; s < out.num_states(); ++s) {
    auto& arcs = out.mutable_arcs(s);
    std::sort(arcs.begin(), arcs.end(), [](const Arc& x, const Arc& y) { return x.ilabel < y.ilabel; });
  }
  return out;
}

/// Epsilon removal, determinization and minimization in sequence.
template <Semiring S>
Wfst optimize(const Wfst& fst) {
  return minimize<S>(determinize<S>(remove_epsilon<S>(fst)));
}

/// As optimize(), but gives up when determinization exceeds `max_states`.
template <Semiring S>
std::optional<Wfst> optimize_bounded(const Wfst& fst, std::size_t max_states) {
  auto det = determinize_bounded<S>(remove_epsilon<S>(fst), max_states);
  if (!det) return std::nullopt;
  return minimize<S>(*det);
}

/// Composition of transducers matching a's output labels with b's input
/// labels. A three-way epsilon filter admits exactly one interleaving of
/// unmatched epsilon moves: between two matched symbols, every move of `a`
/// alone precedes every move of `b` alone.
template <Semiring S>
Wfst compose(const Wfst& a, const Wfst& b) {
  if (a.output_symbols && b.input_symbols && !(*a.output_symbols == *b.input_symbols))
    throw Error("compose: alphabet mismatch between output of left and input of right operand");
  Wfst out;
  out.input_symbols = a.input_symbols;
  out.output_symbols = b.output_symbols;
  if (a.start() < 0 || b.start() < 0) return out;

  // b's arcs indexed by input label per state.
  std::vector<std::multimap<int, const Arc*>> b_index(b.num_states());
  for (int s = 0; s < b.num_states(); ++s)
    for (const auto& arc : b.arcs(s)) b_index[s].emplace(arc.ilabel, &arc);

  using Triple = std::tuple<int, int, int>;
  std::map<Triple, int> ids;
  std::vector<Triple> states;
  auto lookup = [&](int qa, int qb, int filter) {
    Triple key{qa, qb, filter};
    auto [it, fresh] = ids.try_emplace(key, static_cast<int>(states.size()));
    if (fresh) {
      states.push_back(key);
      out.add_state();
    }
    return it->second;
  };

  out.set_start(lookup(a.start(), b.start(), 0));
  for (std::size_t cur = 0; cur < states.size(); ++cur) {
    const auto [qa, qb, filter] = states[cur];
    const int s = static_cast<int>(cur);
    if (a.is_final(qa) && b.is_final(qb)) out.set_final(s, S::times(a.final_weight(qa), b.final_weight(qb)));
    for (const auto& x : a.arcs(qa)) {
      if (x.olabel == kEpsilon) {
        if (filter == 0) {
          int dst = lookup(x.nextstate, qb, 0);
          out.add_arc(s, Arc{x.ilabel, kEpsilon, x.weight, dst});
        }
        continue;
      }
      auto [lo, hi] = b_index[qb].equal_range(x.olabel);
      for (auto it = lo; it != hi; ++it) {
        const Arc& y = *it->second;
        int dst = lookup(x.nextstate, y.nextstate, 0);
        out.add_arc(s, Arc{x.ilabel, y.olabel, S::times(x.weight, y.weight), dst});
      }
    }
    auto [lo, hi] = b_index[qb].equal_range(kEpsilon);
    for (auto it = lo; it != hi; ++it) {
      const Arc& y = *it->second;
      int dst = lookup(qa, y.nextstate, 1);
      out.add_arc(s, Arc{kEpsilon, y.olabel, y.weight, dst});
    }
  }
  return connect(out);
}

/// Plus-sum over all accepting paths of an acyclic machine. Under the
/// tropical semiring this is the single-source shortest distance. Throws
/// EmptyLanguageError when nothing is accepted.
template <Semiring S = TropicalSemiring>
double shortest_distance(const Wfst& fst) {
  if (fst.start() < 0) throw EmptyLanguageError();
  auto order = topological_order(fst);
  if (!order) throw Error("shortest_distance: cyclic input");
  std::vector<double> dist(fst.num_states(), S::zero());
  dist[fst.start()] = S::one();
  double total = S::zero();
  for (int q : *order) {
    if (dist[q] == S::zero()) continue;
    if (fst.is_final(q)) total = S::plus(total, S::times(dist[q], fst.final_weight(q)));
    for (const auto& a : fst.arcs(q))
      dist[a.nextstate] = S::plus(dist[a.nextstate], S::times(dist[q], a.weight));
  }
  if (total == S::zero()) throw EmptyLanguageError();
  return total;
}

/// Input-label string of the lowest-cost accepting path (epsilons skipped).
inline std::vector<int> shortest_path_labels(const Wfst& fst) {
  if (fst.start() < 0) throw EmptyLanguageError();
  auto order = topological_order(fst);
  if (!order) throw Error("shortest_path_labels: cyclic input");
  const int n = fst.num_states();
  std::vector<double> dist(n, kInfinity);
  std::vector<std::pair<int, int>> back(n, {-1, kEpsilon});
  dist[fst.start()] = 0.0;
  int best = -1;
  double best_cost = kInfinity;
  for (int q : *order) {
    if (dist[q] == kInfinity) continue;
    if (fst.is_final(q) && dist[q] + fst.final_weight(q) < best_cost) {
      best_cost = dist[q] + fst.final_weight(q);
      best = q;
    }
    for (const auto& a : fst.arcs(q))
      if (dist[q] + a.weight < dist[a.nextstate]) {
        dist[a.nextstate] = dist[q] + a.weight;
        back[a.nextstate] = {q, a.ilabel};
      }
  }
  if (best < 0) throw EmptyLanguageError();
  std::vector<int> labels;
  for (int q = best; back[q].first >= 0; q = back[q].first)
    if (back[q].second != kEpsilon) labels.push_back(back[q].second);
  std::reverse(labels.begin(), labels.end());
  return labels;
}

/// One-state transducer over labels 1..num_symbols-1 with unit
/// substitution, insertion and deletion costs and free matches.
inline Wfst edit_distance_fst(AlphabetPtr symbols) {
  Wfst fst;
  fst.input_symbols = fst.output_symbols = symbols;
  const int s = fst.add_state();
  fst.set_start(s);
  fst.set_final(s, 0.0);
  const int n = symbols->size();
  for (int x = 1; x < n; ++x) {
    for (int y = 1; y < n; ++y) fst.add_arc(s, Arc{x, y, x == y ? 0.0 : 1.0, s});
    fst.add_arc(s, Arc{x, kEpsilon, 1.0, s});
    fst.add_arc(s, Arc{kEpsilon, x, 1.0, s});
  }
  return fst;
}

inline Wfst identity_transducer(AlphabetPtr symbols) {
  Wfst fst;
  fst.input_symbols = fst.output_symbols = symbols;
  const int s = fst.add_state();
  fst.set_start(s);
  fst.set_final(s, 0.0);
  for (int x = 1; x < symbols->size(); ++x) fst.add_arc(s, x, 0.0, s);
  return fst;
}

/// Structural equality of two deterministic acceptors up to state
/// renumbering, with weights compared at absolute tolerance `tol`.
inline bool isomorphic(const Wfst& a, const Wfst& b, double tol = 1e-9) {
  if (a.num_states() != b.num_states() || a.num_arcs() != b.num_arcs()) return false;
  if (a.start() < 0 || b.start() < 0) return a.start() == b.start();
  auto close = [tol](double x, double y) {
    if (x == kInfinity || y == kInfinity) return x == y;
    return std::abs(x - y) <= tol;
  };
  std::vector<int> map_ab(a.num_states(), -1), map_ba(b.num_states(), -1);
  std::queue<std::pair<int, int>> todo;
  map_ab[a.start()] = b.start();
  map_ba[b.start()] = a.start();
  todo.emplace(a.start(), b.start());
  while (!todo.empty()) {
    auto [qa, qb] = todo.front();
    todo.pop();
    if (!close(a.final_weight(qa), b.final_weight(qb))) return false;
    auto sorted = [](std::span<const Arc> arcs) {
      std::vector<Arc> v(arcs.begin(), arcs.end());
      std::sort(v.begin(), v.end(), [](const Arc& x, const Arc& y) { return x.ilabel < y.ilabel; });
      return v;
    };
    auto xa = sorted(a.arcs(qa));
    auto xb = sorted(b.arcs(qb));
    if (xa.size() != xb.size()) return false;
    for (std::size_t i = 0; i < xa.size(); ++i) {
      if (xa[i].ilabel != xb[i].ilabel || !close(xa[i].weight, xb[i].weight)) return false;
      int na = xa[i].nextstate, nb = xb[i].nextstate;
      if (map_ab[na] < 0 && map_ba[nb] < 0) {
        map_ab[na] = nb;
        map_ba[nb] = na;
        todo.emplace(na, nb);
      } else if (map_ab[na] != nb || map_ba[nb] != na) {
        return false;
      }
    }
  }
  return true;
}

}  // namespace gtc
