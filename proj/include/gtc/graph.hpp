// gtc/graph.hpp

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
#include <istream>
#include <limits>
#include <map>
#include <ostream>
#include <queue>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "gtc/alphabet.hpp"
#include "gtc/error.hpp"
#include "gtc/wfst.hpp"
#include "gtc/wfst_ops.hpp"

namespace gtc {

struct GraphEdge {
  int src = 0;
  int dst = 0;
  double weight = 1.0;  // transition probability

  friend bool operator==(const GraphEdge&, const GraphEdge&) = default;
};

/// Node-labelled weighted digraph used as GTC supervision.
///
/// Nodes are numbered 0..G+1. Node 0 is the non-emitting start and node G+1
/// the non-emitting end; every other node emits one alphabet symbol (the
/// blank included). Ids follow a breadth-first topological order of the
/// graph with self-loops ignored, so every other edge goes from a smaller
/// to a larger id. Instances are immutable; build them with GraphBuilder.
class GtcGraph {
 public:
  static constexpr int kNoLabel = -1;

  int num_nodes() const { return static_cast<int>(labels_.size()); }
  /// G, the number of emitting nodes.
  int num_emitting() const { return num_nodes() - 2; }
  int start() const { return 0; }
  int end() const { return num_nodes() - 1; }
  bool is_emitting(int g) const { return g > 0 && g < end(); }
  int label(int g) const { return labels_.at(g); }
  const AlphabetPtr& alphabet() const { return alphabet_; }

  /// Edges sorted by (src, dst).
  std::span<const GraphEdge> edges() const { return edges_; }
  /// Indices into edges() of the edges entering / leaving `g`.
  std::span<const int> incoming(int g) const { return in_.at(g); }
  std::span<const int> outgoing(int g) const { return out_.at(g); }

  friend bool operator==(const GtcGraph& a, const GtcGraph& b) {
    return a.labels_ == b.labels_ && a.edges_ == b.edges_;
  }

 private:
  friend class GraphBuilder;
  AlphabetPtr alphabet_;
  std::vector<int> labels_;
  std::vector<GraphEdge> edges_;
  std::vector<std::vector<int>> in_, out_;
};

/// Collects nodes and edges in any order and produces a validated GtcGraph.
/// Builder ids: 0 is the start, 1 is the end, emitting nodes follow.
class GraphBuilder {
 public:
  static constexpr int kStart = 0;
  static constexpr int kEnd = 1;

  explicit GraphBuilder(AlphabetPtr alphabet) : alphabet_(std::move(alphabet)) {
    if (!alphabet_) throw Error("graph: null alphabet");
    labels_ = {GtcGraph::kNoLabel, GtcGraph::kNoLabel};
  }

  int add_node(int label) {
    if (label < 0 || label >= alphabet_->size())
      throw Error("graph: label " + std::to_string(label) + " outside alphabet");
    labels_.push_back(label);
    return static_cast<int>(labels_.size()) - 1;
  }

  void add_edge(int src, int dst, double weight) {
    const int n = static_cast<int>(labels_.size());
    if (src < 0 || src >= n || dst < 0 || dst >= n) throw Error("graph: edge endpoint out of range");
    edges_.push_back({src, dst, weight});
  }

  /// Renumbers nodes in breadth-first topological order (ties broken by
  /// builder id) and checks every graph invariant.
  GtcGraph build() const {
    const int n = static_cast<int>(labels_.size());
    for (const auto& e : edges_) {
      if (!std::isfinite(e.weight) || e.weight <= 0.0)
        throw Error("graph: transition weights must be finite and positive");
      if (e.dst == kStart) throw Error("graph: start node has an incoming edge");
      if (e.src == kEnd) throw Error("graph: end node has an outgoing edge");
    }
    std::vector<int> indeg(n, 0);
    std::vector<std::vector<int>> succ(n);
    for (const auto& e : edges_) {
      if (e.src == e.dst) continue;
      succ[e.src].push_back(e.dst);
      ++indeg[e.dst];
    }
    std::priority_queue<int, std::vector<int>, std::greater<int>> ready;
    std::vector<int> order;
    order.reserve(n);
    for (int v = 0; v < n; ++v)
      if (indeg[v] == 0 && v != kEnd) ready.push(v);
    if (ready.empty() || ready.top() != kStart) throw Error("graph: malformed start");
    while (!ready.empty()) {
      int v = ready.top();
      ready.pop();
      order.push_back(v);
      for (int w : succ[v])
        if (--indeg[w] == 0 && w != kEnd) ready.push(w);
    }
    if (indeg[kEnd] == 0) order.push_back(kEnd);
    if (static_cast<int>(order.size()) != n) throw Error("graph: cycle through non-self-loop edges");
    if (order.front() != kStart) throw Error("graph: node without a path from the start");

    std::vector<int> id(n);
    for (int i = 0; i < n; ++i) id[order[i]] = i;

    GtcGraph g;
    g.alphabet_ = alphabet_;
    g.labels_.resize(n);
    for (int v = 0; v < n; ++v) g.labels_[id[v]] = labels_[v];
    g.edges_.reserve(edges_.size());
    for (const auto& e : edges_) g.edges_.push_back({id[e.src], id[e.dst], e.weight});
    std::sort(g.edges_.begin(), g.edges_.end(), [](const GraphEdge& a, const GraphEdge& b) {
      return std::pair(a.src, a.dst) < std::pair(b.src, b.dst);
    });
    for (std::size_t i = 1; i < g.edges_.size(); ++i)
      if (g.edges_[i].src == g.edges_[i - 1].src && g.edges_[i].dst == g.edges_[i - 1].dst)
        throw Error("graph: duplicate edge");
    g.in_.assign(n, {});
    g.out_.assign(n, {});
    for (int i = 0; i < static_cast<int>(g.edges_.size()); ++i) {
      g.out_[g.edges_[i].src].push_back(i);
      g.in_[g.edges_[i].dst].push_back(i);
    }
    check_graph(g);
    return g;
  }

  /// Throws if `g` violates any structural invariant.
  static void check_graph(const GtcGraph& g) {
    const int n = g.num_nodes();
    if (n < 2) throw Error("graph: missing start or end");
    if (g.label(g.start()) != GtcGraph::kNoLabel || g.label(g.end()) != GtcGraph::kNoLabel)
      throw Error("graph: start and end carry no label");
    for (int v = 1; v < g.end(); ++v)
      if (g.label(v) < 0 || g.label(v) >= g.alphabet()->size()) throw Error("graph: bad node label");
    if (!g.incoming(g.start()).empty()) throw Error("graph: start node has an incoming edge");
    if (!g.outgoing(g.end()).empty()) throw Error("graph: end node has an outgoing edge");
    std::vector<char> fwd(n, 0), bwd(n, 0);
    fwd[g.start()] = 1;
    bwd[g.end()] = 1;
    for (const auto& e : g.edges()) {
      if (e.src != e.dst && e.src > e.dst) throw Error("graph: node order is not topological");
      if (!std::isfinite(e.weight) || e.weight <= 0.0) throw Error("graph: bad transition weight");
    }
    for (const auto& e : g.edges())
      if (fwd[e.src]) fwd[e.dst] = 1;
    for (auto it = g.edges().rbegin(); it != g.edges().rend(); ++it)
      if (bwd[it->dst]) bwd[it->src] = 1;
    for (int v = 0; v < n; ++v)
      if (!fwd[v] || !bwd[v]) throw Error("graph: node " + std::to_string(v) + " is not on a start-end path");
  }

 private:
  AlphabetPtr alphabet_;
  std::vector<int> labels_;
  std::vector<GraphEdge> edges_;
};

inline void check_graph(const GtcGraph& g) { GraphBuilder::check_graph(g); }

/// CTC topology for a label sequence: blanks interleaved with the labels,
/// a self-loop on every node, and a blank-skip edge between consecutive
/// labels that differ. All weights are 1.
inline GtcGraph ctc_linear_graph(std::span<const int> labels, AlphabetPtr alphabet) {
  if (labels.empty()) throw Error("ctc_linear_graph: empty label sequence");
  for (int l : labels)
    if (l <= Alphabet::kBlank || l >= alphabet->size())
      throw Error("ctc_linear_graph: label " + std::to_string(l) + " not in alphabet");
  GraphBuilder b(alphabet);
  std::vector<int> blank, label;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    blank.push_back(b.add_node(Alphabet::kBlank));
    label.push_back(b.add_node(labels[i]));
  }
  blank.push_back(b.add_node(Alphabet::kBlank));
  const std::size_t L = labels.size();
  b.add_edge(GraphBuilder::kStart, blank[0], 1.0);
  b.add_edge(GraphBuilder::kStart, label[0], 1.0);
  for (std::size_t i = 0; i <= L; ++i) b.add_edge(blank[i], blank[i], 1.0);
  for (std::size_t i = 0; i < L; ++i) {
    b.add_edge(label[i], label[i], 1.0);
    b.add_edge(blank[i], label[i], 1.0);
    b.add_edge(label[i], blank[i + 1], 1.0);
    if (i + 1 < L && labels[i] != labels[i + 1]) b.add_edge(label[i], label[i + 1], 1.0);
  }
  b.add_edge(label[L - 1], GraphBuilder::kEnd, 1.0);
  b.add_edge(blank[L], GraphBuilder::kEnd, 1.0);
  return b.build();
}

/// CTC-style graph from an acyclic acceptor whose weights are negative log
/// probabilities.
///
/// Each non-epsilon arc becomes a non-blank node, and each state entered
/// by one (plus the start state) a blank node; all of them get self-loops.
/// An edge into an arc node carries the arc probability, an edge into the
/// end node the final probability of the state it leaves, every other edge
/// weight 1. A blank node may be skipped when the arc nodes on either side
/// have different labels. Epsilon arcs are folded into the edges: leaving
/// state q behaves like leaving any state of its epsilon closure, scaled by
/// the closure probability.
inline GtcGraph wfst_to_ctc_graph(const Wfst& input, AlphabetPtr alphabet) {
  if (!input.is_acceptor()) throw Error("wfst_to_ctc_graph: acceptor required");
  if (!is_acyclic(input)) throw Error("wfst_to_ctc_graph: cyclic input");
  const Wfst fst = connect(input);
  if (fst.start() < 0) throw EmptyLanguageError();
  const auto order = topological_order(fst);

  const int n = fst.num_states();
  // closure[q]: (state, cost) reachable from q over epsilon arcs, q included.
  std::vector<std::map<int, double>> closure(n);
  for (auto it = order->rbegin(); it != order->rend(); ++it) {
    const int q = *it;
    closure[q][q] = 0.0;
    for (const auto& a : fst.arcs(q)) {
      if (a.ilabel != kEpsilon) continue;
      for (const auto& [r, c] : closure[a.nextstate]) {
        auto [slot, fresh] = closure[q].try_emplace(r, a.weight + c);
        if (!fresh) slot->second = neg_log_add(slot->second, a.weight + c);
      }
    }
  }

  std::vector<char> entered(n, 0);
  entered[fst.start()] = 1;
  // into[q]: non-epsilon arcs (source state, arc index) entering q.
  std::vector<std::vector<std::pair<int, std::size_t>>> into(n);
  for (int q = 0; q < n; ++q) {
    const auto arcs = fst.arcs(q);
    for (std::size_t i = 0; i < arcs.size(); ++i)
      if (arcs[i].ilabel != kEpsilon) {
        entered[arcs[i].nextstate] = 1;
        into[arcs[i].nextstate].emplace_back(q, i);
      }
  }

  GraphBuilder b(alphabet);
  std::vector<int> blank(n, -1);
  std::vector<std::vector<int>> arc_node(n);
  for (int q = 0; q < n; ++q) {
    if (entered[q]) blank[q] = b.add_node(Alphabet::kBlank);
    for (const auto& a : fst.arcs(q)) arc_node[q].push_back(a.ilabel == kEpsilon ? -1 : b.add_node(a.ilabel));
  }
  // Probabilities this small only arise from underflow; keep the edge.
  auto prob = [](double cost) { return std::max(std::exp(-cost), std::numeric_limits<double>::min()); };

  struct Exit {
    int node;
    int label;
    double cost;
  };
  // Arc nodes reachable when leaving q, and q's final cost over its closure.
  auto exits = [&](int q) {
    std::vector<Exit> out;
    for (const auto& [r, c] : closure[q]) {
      const auto arcs = fst.arcs(r);
      for (std::size_t j = 0; j < arcs.size(); ++j)
        if (arcs[j].ilabel != kEpsilon) out.push_back({arc_node[r][j], arcs[j].ilabel, c + arcs[j].weight});
    }
    return out;
  };
  auto final_cost = [&](int q) {
    double acc = kInfinity;
    for (const auto& [r, c] : closure[q])
      if (fst.is_final(r)) acc = neg_log_add(acc, c + fst.final_weight(r));
    return acc;
  };

  const int s0 = fst.start();
  b.add_edge(GraphBuilder::kStart, blank[s0], 1.0);
  for (const Exit& x : exits(s0)) b.add_edge(GraphBuilder::kStart, x.node, prob(x.cost));
  for (int q = 0; q < n; ++q) {
    if (!entered[q]) continue;
    const std::vector<Exit> next = exits(q);
    const double fin = final_cost(q);
    b.add_edge(blank[q], blank[q], 1.0);
    for (const Exit& x : next) b.add_edge(blank[q], x.node, prob(x.cost));
    if (fin != kInfinity) b.add_edge(blank[q], GraphBuilder::kEnd, prob(fin));
    for (const auto& [p, i] : into[q]) {
      const int node = arc_node[p][i];
      const int label = fst.arcs(p)[i].ilabel;
      b.add_edge(node, node, 1.0);
      b.add_edge(node, blank[q], 1.0);
      for (const Exit& x : next)
        if (x.label != label) b.add_edge(node, x.node, prob(x.cost));
      if (fin != kInfinity) b.add_edge(node, GraphBuilder::kEnd, prob(fin));
    }
  }
  return b.build();
}

/// Copy of `g` with every transition weight set to 1.
inline GtcGraph with_unit_weights(const GtcGraph& g) {
  GraphBuilder b(g.alphabet());
  for (int v = 1; v < g.end(); ++v) b.add_node(g.label(v));
  // Builder ids put the end at 1 and shift emitting nodes by one.
  auto bid = [&](int v) { return v == g.start() ? 0 : v == g.end() ? 1 : v + 1; };
  for (const auto& e : g.edges()) b.add_edge(bid(e.src), bid(e.dst), 1.0);
  return b.build();
}

struct UnfoldedPath {
  std::vector<int> nodes;  // start, T emitting nodes, end

  friend bool operator==(const UnfoldedPath&, const UnfoldedPath&) = default;
  friend auto operator<=>(const UnfoldedPath&, const UnfoldedPath&) = default;
};

/// All walks start -> (T emitting nodes) -> end. Throws BudgetExceeded
/// once more than `max_paths` walks have been found.
inline std::vector<UnfoldedPath> unfold(const GtcGraph& g, int T, std::size_t max_paths = 1'000'000) {
  std::vector<UnfoldedPath> out;
  if (T < 1) return out;
  std::vector<int> path{g.start()};
  // reach[t][v]: v can finish the walk with t more emitting steps after it.
  std::vector<std::vector<char>> reach(T + 1, std::vector<char>(g.num_nodes(), 0));
  for (int ei : g.incoming(g.end())) reach[0][g.edges()[ei].src] = 1;
  for (int t = 1; t <= T; ++t)
    for (const auto& e : g.edges())
      if (e.dst != g.end() && g.is_emitting(e.src) && reach[t - 1][e.dst]) reach[t][e.src] = 1;

  auto dfs = [&](auto&& self, int v, int depth) -> void {
    if (depth == T) {
      path.push_back(g.end());
      out.push_back({path});
      path.pop_back();
      if (out.size() > max_paths) throw BudgetExceeded("unfold produced more than " + std::to_string(max_paths) + " paths");
      return;
    }
    for (int ei : g.outgoing(v)) {
      int w = g.edges()[ei].dst;
      if (w == g.end() || !reach[T - depth - 1][w]) continue;
      path.push_back(w);
      self(self, w, depth + 1);
      path.pop_back();
    }
  };
  dfs(dfs, g.start(), 0);
  return out;
}

/// Ratio of non-blank emitting nodes to the reference length.
inline double graph_density(const GtcGraph& g, std::size_t ref_len) {
  if (ref_len == 0) throw Error("graph_density: reference length must be positive");
  std::size_t nonblank = 0;
  for (int v = 1; v < g.end(); ++v)
    if (g.label(v) != Alphabet::kBlank) ++nonblank;
  return static_cast<double>(nonblank) / static_cast<double>(ref_len);
}

/// Collapses a supervision graph to an epsilon-free acceptor of the label
/// strings its paths spell under the CTC collapse rule (drop self-loop
/// repeats, merge equal adjacent labels, drop blanks). Arc weights are
/// -ln W, or zero with `unit_weights`. Epsilons are removed in semiring S,
/// so with the log semiring parallel routes spelling one string add up and
/// with the tropical semiring the best route is kept.
template <Semiring S = LogSemiring>
Wfst graph_to_acceptor(const GtcGraph& g, bool unit_weights = false) {
  Wfst fst;
  fst.input_symbols = fst.output_symbols = g.alphabet();
  for (int v = 0; v < g.num_nodes(); ++v) fst.add_state();
  fst.set_start(g.start());
  fst.set_final(g.end(), 0.0);
  for (const auto& e : g.edges()) {
    if (e.src == e.dst) continue;
    int label = kEpsilon;
    if (e.dst != g.end() && g.label(e.dst) != Alphabet::kBlank) {
      const bool merged = g.is_emitting(e.src) && g.label(e.src) == g.label(e.dst);
      if (!merged) label = g.label(e.dst);
    }
    fst.add_arc(e.src, label, unit_weights ? 0.0 : -std::log(e.weight), e.dst);
  }
  return remove_epsilon<S>(fst);
}

/// Text graph format:
///   node <id> <label>        labels: <b> blank, <s> start, </s> end, else token
///   edge <src> <dst> <weight> weights are decimal probabilities
inline void write_graph(std::ostream& out, const GtcGraph& g) {
  for (int v = 0; v < g.num_nodes(); ++v) {
    out << "node " << v << ' ';
    if (v == g.start()) out << "<s>";
    else if (v == g.end()) out << "</s>";
    else out << g.alphabet()->token(g.label(v));
    out << '\n';
  }
  for (const auto& e : g.edges()) out << "edge " << e.src << ' ' << e.dst << ' ' << format_weight(e.weight) << '\n';
}

inline std::string graph_to_string(const GtcGraph& g) {
  std::ostringstream os;
  write_graph(os, g);
  return os.str();
}

inline GtcGraph read_graph(std::istream& in, AlphabetPtr alphabet, const std::string& source = "graph") {
  GraphBuilder b(alphabet);
  std::map<long, int> ids;  // file id -> builder id
  std::vector<std::tuple<long, long, double, std::size_t>> edges;
  bool have_start = false, have_end = false;
  std::string line;
  std::size_t lineno = 0;
  auto parse_long = [&](const std::string& tok) {
    try {
      std::size_t used = 0;
      long v = std::stol(tok, &used);
      if (used != tok.size()) throw std::invalid_argument(tok);
      return v;
    } catch (const std::exception&) {
      throw ParseError(source, lineno, "bad node id '" + tok + "'");
    }
  };
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::istringstream fields(line);
    std::vector<std::string> f;
    for (std::string tok; fields >> tok;) f.push_back(tok);
    if (f.empty()) continue;
    if (f[0] == "node" && f.size() == 3) {
      long id = parse_long(f[1]);
      int bid;
      if (f[2] == "<s>") {
        if (have_start) throw ParseError(source, lineno, "duplicate start node");
        have_start = true;
        bid = GraphBuilder::kStart;
      } else if (f[2] == "</s>") {
        if (have_end) throw ParseError(source, lineno, "duplicate end node");
        have_end = true;
        bid = GraphBuilder::kEnd;
      } else {
        auto label = alphabet->find(f[2]);
        if (!label) throw ParseError(source, lineno, "token '" + f[2] + "' not in alphabet");
        bid = b.add_node(*label);
      }
      if (!ids.emplace(id, bid).second) throw ParseError(source, lineno, "duplicate node id");
    } else if (f[0] == "edge" && f.size() == 4) {
      edges.emplace_back(parse_long(f[1]), parse_long(f[2]), parse_weight(f[3], source, lineno), lineno);
    } else {
      throw ParseError(source, lineno, "unrecognized record");
    }
  }
  if (!have_start || !have_end) throw ParseError(source, 0, "graph needs one <s> and one </s> node");
  for (const auto& [src, dst, w, at] : edges) {
    auto s = ids.find(src), d = ids.find(dst);
    if (s == ids.end() || d == ids.end()) throw ParseError(source, at, "edge references unknown node");
    b.add_edge(s->second, d->second, w);
  }
  try {
    return b.build();
  } catch (const ParseError&) {
    throw;
  } catch (const Error& e) {
    throw ParseError(source, 0, e.what());
  }
}

}  // namespace gtc
