// gtc/gtc_loss.hpp

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
#include <span>
#include <string>
#include <vector>

#include "gtc/error.hpp"
#include "gtc/graph.hpp"
#include "gtc/matrix.hpp"
#include "gtc/parallel.hpp"
#include "gtc/semiring.hpp"

namespace gtc {

// Graph-based temporal classification. All trellis arithmetic is carried
// out on negative-log costs: zero probability is +inf.

/// Posteriors are clamped to at least this before taking logs.
inline constexpr double kPosteriorFloor = 1e-30;

/// Forward and backward variables, both (T+2) x (G+2) cost matrices.
///
/// alpha(t, g) for 1 <= t <= T covers the first t frames and ends in g;
/// beta(t, g) covers frames t..T and starts in g. Both include the
/// posterior of g at frame t. The non-emitting corners hold the totals:
/// alpha(0, start) = beta(T+1, end) = 0 and
/// alpha(T+1, end) = beta(0, start) = -ln p(G|X).
struct Trellis {
  Matrix alpha;
  Matrix beta;
  double neg_log_prob = kInfinity;

  bool feasible() const { return neg_log_prob != kInfinity; }
  std::size_t frames() const { return alpha.rows() - 2; }
};

namespace internal {

inline void check_compatible(const GtcGraph& graph, const PosteriorMatrix& post) {
  for (int g = 1; g < graph.end(); ++g)
    if (graph.label(g) >= static_cast<int>(post.num_symbols()))
      throw Error("gtc: graph label " + std::to_string(graph.label(g)) + " outside posterior alphabet of size " +
                  std::to_string(post.num_symbols()));
}

inline Matrix neg_log_posteriors(const PosteriorMatrix& post) {
  Matrix c(post.frames(), post.num_symbols());
  for (std::size_t t = 0; t < post.frames(); ++t)
    for (std::size_t k = 0; k < post.num_symbols(); ++k) c(t, k) = -std::log(std::max(post(t, k), kPosteriorFloor));
  return c;
}

inline std::vector<double> edge_costs(const GtcGraph& graph) {
  std::vector<double> c;
  c.reserve(graph.edges().size());
  for (const auto& e : graph.edges()) c.push_back(-std::log(e.weight));
  return c;
}

}  // namespace internal

/// Forward recursion. Frames form the outer loop and nodes the inner loop
/// in id order; a self-loop reads the previous frame only.
inline Matrix forward(const GtcGraph& graph, const PosteriorMatrix& post) {
  internal::check_compatible(graph, post);
  const std::size_t T = post.frames();
  const int end = graph.end();
  const Matrix ly = internal::neg_log_posteriors(post);
  const std::vector<double> w = internal::edge_costs(graph);
  const auto edges = graph.edges();

  Matrix alpha(T + 2, graph.num_nodes(), kInfinity);
  alpha(0, graph.start()) = 0.0;
  for (std::size_t t = 1; t <= T; ++t) {
    for (int g = 1; g < end; ++g) {
      double acc = kInfinity;
      for (int ei : graph.incoming(g)) {
        const double prev = alpha(t - 1, edges[ei].src);
        if (prev != kInfinity) acc = neg_log_add(acc, prev + w[ei]);
      }
      if (acc != kInfinity) alpha(t, g) = acc + ly(t - 1, graph.label(g));
    }
  }
  double total = kInfinity;
  for (int ei : graph.incoming(end)) {
    const double prev = alpha(T, edges[ei].src);
    if (prev != kInfinity) total = neg_log_add(total, prev + w[ei]);
  }
  alpha(T + 1, end) = total;
  return alpha;
}

/// Backward recursion, the mirror image of forward().
inline Matrix backward(const GtcGraph& graph, const PosteriorMatrix& post) {
  internal::check_compatible(graph, post);
  const std::size_t T = post.frames();
  const int end = graph.end();
  const Matrix ly = internal::neg_log_posteriors(post);
  const std::vector<double> w = internal::edge_costs(graph);
  const auto edges = graph.edges();

  Matrix beta(T + 2, graph.num_nodes(), kInfinity);
  beta(T + 1, end) = 0.0;
  for (std::size_t t = T; t >= 1; --t) {
    for (int g = end - 1; g >= 1; --g) {
      double acc = kInfinity;
      for (int ei : graph.outgoing(g)) {
        const double next = beta(t + 1, edges[ei].dst);
        if (next != kInfinity) acc = neg_log_add(acc, next + w[ei]);
      }
      if (acc != kInfinity) beta(t, g) = acc + ly(t - 1, graph.label(g));
    }
  }
  double total = kInfinity;
  for (int ei : graph.outgoing(graph.start())) {
    const double next = beta(1, edges[ei].dst);
    if (next != kInfinity) total = neg_log_add(total, next + w[ei]);
  }
  beta(0, graph.start()) = total;
  return beta;
}

inline Trellis compute_trellis(const GtcGraph& graph, const PosteriorMatrix& post) {
  Trellis tr{forward(graph, post), backward(graph, post), kInfinity};
  tr.neg_log_prob = tr.alpha(post.frames() + 1, graph.end());
  return tr;
}

/// -ln p(G|X) assembled at frame t (1-based) from alpha * beta / y summed
/// over the emitting nodes. Equal for every t.
inline double probability_at(const Trellis& tr, const PosteriorMatrix& post, const GtcGraph& graph, std::size_t t) {
  if (tr.alpha.rows() != post.frames() + 2 || tr.beta.rows() != tr.alpha.rows() ||
      tr.alpha.cols() != static_cast<std::size_t>(graph.num_nodes()) || tr.beta.cols() != tr.alpha.cols())
    throw Error("probability_at: trellis shape does not match graph and posteriors");
  if (t < 1 || t > post.frames()) throw Error("probability_at: frame index out of range");
  double acc = kInfinity;
  for (int g = 1; g < graph.end(); ++g) {
    const double a = tr.alpha(t, g), b = tr.beta(t, g);
    if (a == kInfinity || b == kInfinity) continue;
    const double ly = -std::log(std::max(post(t - 1, graph.label(g)), kPosteriorFloor));
    acc = neg_log_add(acc, a + b - ly);
  }
  return acc;
}

/// -ln p(G|X); +inf when the graph has no length-T unfolding.
inline double loss(const GtcGraph& graph, const PosteriorMatrix& post) {
  return forward(graph, post)(post.frames() + 1, graph.end());
}

/// Gradient of the loss with respect to the pre-softmax outputs, given a
/// trellis computed from (graph, post).
inline Matrix gradient(const GtcGraph& graph, const PosteriorMatrix& post, const Trellis& tr) {
  if (!tr.feasible()) throw InfeasibleError();
  const std::size_t T = post.frames(), U = post.num_symbols();
  Matrix grad(T, U);
  std::vector<double> occupancy(U);
  for (std::size_t t = 1; t <= T; ++t) {
    std::fill(occupancy.begin(), occupancy.end(), kInfinity);
    for (int g = 1; g < graph.end(); ++g) {
      const double a = tr.alpha(t, g), b = tr.beta(t, g);
      if (a != kInfinity && b != kInfinity) occupancy[graph.label(g)] = neg_log_add(occupancy[graph.label(g)], a + b);
    }
    for (std::size_t k = 0; k < U; ++k) {
      const double y = post(t - 1, k);
      double g = y;
      if (occupancy[k] != kInfinity) {
        const double ly = -std::log(std::max(y, kPosteriorFloor));
        g -= std::exp(-occupancy[k] + ly + tr.neg_log_prob);
      }
      grad(t - 1, k) = g;
    }
  }
  return grad;
}

inline Matrix gradient(const GtcGraph& graph, const PosteriorMatrix& post) {
  return gradient(graph, post, compute_trellis(graph, post));
}

enum class ItemStatus { kOk, kInfeasible, kError };

struct ItemResult {
  ItemStatus status = ItemStatus::kError;
  double loss = kInfinity;
  Matrix grad;  // empty unless status == kOk
  std::string message;
};

/// Softmax, loss and logit gradient for each (graph, logits) pair. Items
/// are processed on `workers` threads; a failing item is reported in its
/// own slot and does not affect the others.
inline std::vector<ItemResult> loss_and_grad_batch(std::span<const GtcGraph> graphs,
                                                   std::span<const LogitMatrix> logits,
                                                   std::size_t workers = 1) {
  if (graphs.size() != logits.size()) throw Error("loss_and_grad_batch: batch size mismatch");
  std::vector<ItemResult> results(graphs.size());
  parallel_for(graphs.size(), workers, [&](std::size_t i) {
    ItemResult& r = results[i];
    try {
      const PosteriorMatrix post = logits[i].softmax();
      const Trellis tr = compute_trellis(graphs[i], post);
      r.loss = tr.neg_log_prob;
      if (!tr.feasible()) {
        r.status = ItemStatus::kInfeasible;
        r.message = InfeasibleError().what();
        return;
      }
      r.grad = gradient(graphs[i], post, tr);
      r.status = ItemStatus::kOk;
    } catch (const std::exception& e) {
      r.status = ItemStatus::kError;
      r.message = e.what();
    }
  });
  return results;
}

}  // namespace gtc
