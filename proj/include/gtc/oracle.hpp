// gtc/oracle.hpp

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

// Brute-force reference computations for tests. Nothing here calls into
// the trellis, automaton-optimization or pipeline code; only the data
// types are shared. Sums are taken in linear space with compensation so
// that the results are numerically independent of the log-space code.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "gtc/confusion_network.hpp"
#include "gtc/error.hpp"
#include "gtc/graph.hpp"
#include "gtc/matrix.hpp"
#include "gtc/wfst.hpp"

namespace gtc::oracle {

struct EnumerationBudget {
  std::size_t max_paths = 1'000'000;
  std::size_t max_strings = 100'000;
};

template <class T>
struct OracleResult {
  T value{};
  std::size_t consumed = 0;  // paths (or strings) actually enumerated
};

/// Neumaier-compensated accumulator in extended precision.
class CompensatedSum {
 public:
  void add(long double x) {
    const long double t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x)) comp_ += (sum_ - t) + x;
    else comp_ += (x - t) + sum_;
    sum_ = t;
  }
  long double value() const { return sum_ + comp_; }

 private:
  long double sum_ = 0.0L;
  long double comp_ = 0.0L;
};

/// p(G|X) as the sum over every length-T node walk of the product of its
/// transition weights and posteriors.
inline OracleResult<long double> brute_force_pG(const GtcGraph& graph, const PosteriorMatrix& post,
                                                EnumerationBudget budget = {}) {
  const int T = static_cast<int>(post.frames());
  const int end = graph.end();
  // Plain adjacency, rebuilt from the edge list.
  std::vector<std::vector<std::pair<int, double>>> succ(graph.num_nodes());
  for (const auto& e : graph.edges()) succ[e.src].emplace_back(e.dst, e.weight);

  OracleResult<long double> out;
  CompensatedSum total;
  auto walk = [&](auto&& self, int v, int t, long double product) -> void {
    if (t == T) {
      for (const auto& [w, weight] : succ[v])
        if (w == end) {
          if (++out.consumed > budget.max_paths) throw BudgetExceeded("brute_force_pG path budget");
          total.add(product * weight);
        }
      return;
    }
    for (const auto& [w, weight] : succ[v]) {
      if (w == end) continue;
      const long double y = post(t, graph.label(w));
      self(self, w, t + 1, product * weight * y);
    }
  };
  walk(walk, graph.start(), 0, 1.0L);
  out.value = total.value();
  return out;
}

/// Number of length-T start-to-end walks, from powers of the adjacency
/// matrix restricted to emitting nodes.
inline long double walk_count(const GtcGraph& graph, int T) {
  const int n = graph.num_nodes();
  std::vector<long double> v(n, 0.0L);
  for (const auto& e : graph.edges())
    if (e.src == graph.start() && e.dst != graph.end()) v[e.dst] += 1.0L;
  for (int t = 1; t < T; ++t) {
    std::vector<long double> next(n, 0.0L);
    for (const auto& e : graph.edges())
      if (graph.is_emitting(e.src) && graph.is_emitting(e.dst)) next[e.dst] += v[e.src];
    v = std::move(next);
  }
  long double count = 0.0L;
  for (const auto& e : graph.edges())
    if (e.dst == graph.end() && graph.is_emitting(e.src)) count += v[e.src];
  return T >= 1 ? count : 0.0L;
}

/// Central finite differences (L(u + d) - L(u - d)) / 2d of an arbitrary
/// loss of the logits.
inline Matrix finite_diff_grad(const LogitMatrix& logits, double step,
                               const std::function<double(const LogitMatrix&)>& loss_of) {
  if (!(step >= 1e-7 && step <= 1e-3)) throw Error("finite_diff_grad: step must lie in [1e-7, 1e-3]");
  const double base = loss_of(logits);
  if (!std::isfinite(base)) throw InfeasibleError();
  Matrix grad(logits.frames(), logits.num_symbols());
  Matrix u = logits.values();
  for (std::size_t t = 0; t < u.rows(); ++t)
    for (std::size_t k = 0; k < u.cols(); ++k) {
      const double keep = u(t, k);
      u(t, k) = keep + step;
      const double up = loss_of(LogitMatrix(u));
      u(t, k) = keep - step;
      const double down = loss_of(LogitMatrix(u));
      u(t, k) = keep;
      grad(t, k) = (up - down) / (2.0 * step);
    }
  return grad;
}

/// Finite-difference gradient of -ln p(G|X) with p computed by a caller
/// supplied routine taking (graph, posteriors).
inline Matrix finite_diff_grad(const GtcGraph& graph, const LogitMatrix& logits, double step,
                               const std::function<double(const GtcGraph&, const PosteriorMatrix&)>& loss_fn) {
  return finite_diff_grad(logits, step, [&](const LogitMatrix& u) { return loss_fn(graph, u.softmax()); });
}

/// Textbook CTC: forward variables over the blank-extended label sequence
/// in linear space with per-frame rescaling. Returns -ln p(labels | Y).
inline double reference_ctc(std::span<const int> labels, const PosteriorMatrix& post, int blank = 0) {
  const std::size_t T = post.frames();
  const std::size_t S = 2 * labels.size() + 1;
  std::vector<int> ext(S, blank);
  for (std::size_t i = 0; i < labels.size(); ++i) ext[2 * i + 1] = labels[i];
  if (labels.empty()) throw Error("reference_ctc: empty label sequence");
  std::size_t repeats = 0;
  for (std::size_t i = 1; i < labels.size(); ++i) repeats += labels[i] == labels[i - 1];
  if (T < labels.size() + repeats) throw InfeasibleError();

  std::vector<long double> a(S, 0.0L), next(S);
  a[0] = post(0, ext[0]);
  a[1] = post(0, ext[1]);
  long double log_scale = 0.0L;
  auto rescale = [&](std::vector<long double>& v) {
    long double c = 0.0L;
    for (auto x : v) c += x;
    if (c <= 0.0L) throw InfeasibleError();
    for (auto& x : v) x /= c;
    log_scale += std::log(c);
  };
  rescale(a);
  for (std::size_t t = 1; t < T; ++t) {
    for (std::size_t s = 0; s < S; ++s) {
      long double v = a[s];
      if (s >= 1) v += a[s - 1];
      if (s >= 2 && ext[s] != blank && ext[s] != ext[s - 2]) v += a[s - 2];
      next[s] = v * post(t, ext[s]);
    }
    a.swap(next);
    rescale(a);
  }
  const long double p = a[S - 1] + a[S - 2];
  if (p <= 0.0L) throw InfeasibleError();
  return -static_cast<double>(std::log(p) + log_scale);
}

/// Every accepted string of an acyclic acceptor with its weight as a cost.
/// With `log_plus` the weights of all paths spelling the same string are
/// summed as probabilities; otherwise the minimum cost is kept.
inline OracleResult<std::map<std::vector<int>, double>> enumerate_strings(const Wfst& fst, bool log_plus,
                                                                         EnumerationBudget budget = {}) {
  OracleResult<std::map<std::vector<int>, double>> out;
  if (fst.start() < 0) return out;
  std::map<std::vector<int>, CompensatedSum> sums;
  std::map<std::vector<int>, double> mins;
  std::vector<int> labels;
  auto visit = [&](auto&& self, int s, double cost, int depth) -> void {
    if (depth > 10'000) throw Error("enumerate_strings: cyclic input");
    if (fst.is_final(s)) {
      if (++out.consumed > budget.max_paths) throw BudgetExceeded("enumerate_strings path budget");
      const double c = cost + fst.final_weight(s);
      if (log_plus) sums[labels].add(std::exp(-static_cast<long double>(c)));
      else {
        auto [it, fresh] = mins.try_emplace(labels, c);
        if (!fresh) it->second = std::min(it->second, c);
      }
    }
    for (const auto& a : fst.arcs(s)) {
      if (a.ilabel != kEpsilon) labels.push_back(a.ilabel);
      self(self, a.nextstate, cost + a.weight, depth + 1);
      if (a.ilabel != kEpsilon) labels.pop_back();
    }
  };
  visit(visit, fst.start(), 0.0, 0);
  if (log_plus)
    for (const auto& [s, sum] : sums) out.value[s] = -static_cast<double>(std::log(sum.value()));
  else out.value = std::move(mins);
  if (out.value.size() > budget.max_strings) throw BudgetExceeded("enumerate_strings string budget");
  return out;
}

/// Every label string a sausage can spell (epsilons dropped) with the total
/// probability of the bin-entry combinations spelling it.
inline OracleResult<std::map<std::vector<int>, long double>> enumerate_sausage(const ConfusionNetwork& cn,
                                                                              EnumerationBudget budget = {}) {
  OracleResult<std::map<std::vector<int>, long double>> out;
  std::map<std::vector<int>, CompensatedSum> sums;
  std::vector<int> labels;
  auto visit = [&](auto&& self, std::size_t bin, long double p) -> void {
    if (bin == cn.bins.size()) {
      if (++out.consumed > budget.max_paths) throw BudgetExceeded("enumerate_sausage path budget");
      sums[labels].add(p);
      return;
    }
    for (const auto& [k, q] : cn.bins[bin]) {
      if (k != kEpsilon) labels.push_back(k);
      self(self, bin + 1, p * q);
      if (k != kEpsilon) labels.pop_back();
    }
  };
  visit(visit, 0, 1.0L);
  for (const auto& [s, sum] : sums) out.value[s] = sum.value();
  return out;
}

inline std::size_t levenshtein(std::span<const int> a, std::span<const int> b) {
  std::vector<std::vector<std::size_t>> d(a.size() + 1, std::vector<std::size_t>(b.size() + 1));
  for (std::size_t i = 0; i <= a.size(); ++i) d[i][0] = i;
  for (std::size_t j = 0; j <= b.size(); ++j) d[0][j] = j;
  for (std::size_t i = 1; i <= a.size(); ++i)
    for (std::size_t j = 1; j <= b.size(); ++j)
      d[i][j] = std::min({d[i - 1][j] + 1, d[i][j - 1] + 1, d[i - 1][j - 1] + (a[i - 1] == b[j - 1] ? 0u : 1u)});
  return d[a.size()][b.size()];
}

/// CTC collapse: merge repeats, then drop blanks.
inline std::vector<int> ctc_collapse(std::span<const int> frames, int blank = 0) {
  std::vector<int> out;
  int prev = -1;
  for (int k : frames) {
    if (k != prev && k != blank) out.push_back(k);
    prev = k;
  }
  return out;
}

/// Probability of every collapsed string, by enumerating all |U|^T frame
/// alignments. Sorted by decreasing probability, ties by string.
inline std::vector<std::pair<std::vector<int>, long double>> exhaustive_ctc_strings(const PosteriorMatrix& post,
                                                                                    EnumerationBudget budget = {}) {
  const std::size_t T = post.frames(), U = post.num_symbols();
  long double total_paths = std::pow(static_cast<long double>(U), static_cast<long double>(T));
  if (total_paths > static_cast<long double>(budget.max_paths)) throw BudgetExceeded("exhaustive_ctc_strings");
  std::map<std::vector<int>, CompensatedSum> sums;
  std::vector<int> frames(T, 0);
  for (;;) {
    long double p = 1.0L;
    for (std::size_t t = 0; t < T; ++t) p *= post(t, frames[t]);
    sums[ctc_collapse(frames)].add(p);
    std::size_t t = 0;
    while (t < T && ++frames[t] == static_cast<int>(U)) frames[t++] = 0;
    if (t == T) break;
  }
  std::vector<std::pair<std::vector<int>, long double>> out;
  for (const auto& [s, sum] : sums) out.emplace_back(s, sum.value());
  std::stable_sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
  return out;
}

}  // namespace gtc::oracle
