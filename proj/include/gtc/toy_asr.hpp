// gtc/toy_asr.hpp

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
#include <map>
#include <numeric>
#include <ostream>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "gtc/confusion_network.hpp"
#include "gtc/error.hpp"
#include "gtc/graph.hpp"
#include "gtc/gtc_loss.hpp"
#include "gtc/matrix.hpp"
#include "gtc/parallel.hpp"
#include "gtc/pipeline.hpp"

namespace gtc {

// Desk-scale stand-in for speech: each label emits a run of frames, each
// frame being the one-hot code of its label plus Gaussian noise.

struct SyntheticTask {
  int num_labels = 8;  // blank excluded; also the feature dimension
  int min_labels = 5;
  int max_labels = 10;
  int min_duration = 4;  // frames per label
  int max_duration = 6;
  double noise = 0.6;  // standard deviation
  std::uint64_t seed = 1;

  int feature_dim() const { return num_labels; }

  void validate() const {
    if (num_labels < 2) throw Error("task: at least two labels required");
    if (min_labels < 1 || max_labels < min_labels) throw Error("task: bad label-length range");
    if (min_duration < 1 || max_duration < min_duration) throw Error("task: bad duration range");
    if (!(noise >= 0.0) || !std::isfinite(noise)) throw Error("task: noise must be finite and >= 0");
  }
};

struct Utterance {
  std::string id;
  Matrix features;               // T' x D
  std::vector<int> labels;       // 1..num_labels
  std::vector<int> frame_labels; // label of every frame
};

inline AlphabetPtr task_alphabet(const SyntheticTask& task) {
  std::vector<std::string> toks;
  for (int k = 1; k <= task.num_labels; ++k) toks.push_back("L" + std::to_string(k));
  return make_alphabet(toks);
}

/// Corpus of `n` utterances. `stream` selects an independent split drawn
/// from the same task seed. Consecutive labels always differ, so that label
/// boundaries stay visible in the frames.
inline std::vector<Utterance> generate_dataset(const SyntheticTask& task, std::size_t n, std::uint64_t stream = 0,
                                               const std::string& prefix = "utt") {
  task.validate();
  if (n < 1) throw Error("generate_dataset: at least one utterance required");
  std::seed_seq seq{static_cast<std::uint32_t>(task.seed), static_cast<std::uint32_t>(task.seed >> 32),
                    static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)};
  std::mt19937_64 rng(seq);
  std::uniform_int_distribution<int> len(task.min_labels, task.max_labels);
  std::uniform_int_distribution<int> dur(task.min_duration, task.max_duration);
  std::uniform_int_distribution<int> first(1, task.num_labels);
  std::uniform_int_distribution<int> step(1, task.num_labels - 1);
  std::normal_distribution<double> gauss(0.0, 1.0);

  std::vector<Utterance> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    Utterance u;
    u.id = prefix + std::to_string(i);
    const int L = len(rng);
    for (int j = 0; j < L; ++j) {
      int k = j == 0 ? first(rng) : (u.labels.back() - 1 + step(rng)) % task.num_labels + 1;
      u.labels.push_back(k);
      const int d = dur(rng);
      for (int f = 0; f < d; ++f) u.frame_labels.push_back(k);
    }
    u.features = Matrix(u.frame_labels.size(), task.feature_dim());
    for (std::size_t t = 0; t < u.frame_labels.size(); ++t)
      for (int d = 0; d < task.feature_dim(); ++d)
        u.features(t, d) = (d == u.frame_labels[t] - 1 ? 1.0 : 0.0) + task.noise * gauss(rng);
    out.push_back(std::move(u));
  }
  return out;
}

/// Two-layer perceptron S -> H (tanh) -> U applied frame by frame. The
/// input is first averaged over blocks of `stride` frames, then each block
/// is spliced with `context` neighbours on either side (edges repeat), so
/// S = D * (2 * context + 1). Parameters live in one flat vector:
/// W1 (H x S), b1, W2 (U x H), b2.
class FrameModel {
 public:
  struct Cache {
    Matrix input;   // T x S after striding and splicing
    Matrix hidden;  // T x H
  };

  FrameModel(int input_dim, int hidden_dim, int output_dim, int stride, std::uint64_t seed, int context = 0)
      : d_(input_dim), h_(hidden_dim), u_(output_dim), stride_(stride), context_(context) {
    if (d_ < 1 || h_ < 1 || u_ < 2 || stride_ < 1 || context_ < 0) throw Error("model: bad dimensions");
    s_ = d_ * (2 * context_ + 1);
    params_.assign(static_cast<std::size_t>(h_ * s_ + h_ + u_ * h_ + u_), 0.0);
    std::mt19937_64 rng(seed);
    const double a1 = std::sqrt(6.0 / (s_ + h_)), a2 = std::sqrt(6.0 / (h_ + u_));
    std::uniform_real_distribution<double> w1(-a1, a1), w2(-a2, a2);
    for (int i = 0; i < h_ * s_; ++i) params_[i] = w1(rng);
    for (int i = 0; i < u_ * h_; ++i) params_[off_w2() + i] = w2(rng);
  }

  int input_dim() const { return d_; }
  int hidden_dim() const { return h_; }
  int output_dim() const { return u_; }
  int stride() const { return stride_; }
  int context() const { return context_; }
  std::size_t num_params() const { return params_.size(); }
  std::span<double> params() { return params_; }
  std::span<const double> params() const { return params_; }

  std::size_t output_frames(std::size_t input_frames) const { return (input_frames + stride_ - 1) / stride_; }

  Matrix forward(const Matrix& features, Cache* cache = nullptr) const {
    if (static_cast<int>(features.cols()) != d_) throw Error("model: feature dimension mismatch");
    if (features.rows() < 1) throw Error("model: empty feature sequence");
    const std::size_t T = output_frames(features.rows());
    Matrix blocks(T, d_);
    for (std::size_t t = 0; t < T; ++t) {
      const std::size_t lo = t * stride_, hi = std::min(features.rows(), lo + stride_);
      for (std::size_t r = lo; r < hi; ++r)
        for (int d = 0; d < d_; ++d) blocks(t, d) += features(r, d);
      for (int d = 0; d < d_; ++d) blocks(t, d) /= static_cast<double>(hi - lo);
    }
    Matrix x(T, s_);
    for (std::size_t t = 0; t < T; ++t)
      for (int c = -context_; c <= context_; ++c) {
        const long src = std::clamp<long>(static_cast<long>(t) + c, 0, static_cast<long>(T) - 1);
        for (int d = 0; d < d_; ++d) x(t, (c + context_) * d_ + d) = blocks(src, d);
      }
    Matrix h(T, h_), z(T, u_);
    const double* W1 = params_.data();
    const double* b1 = W1 + h_ * s_;
    const double* W2 = params_.data() + off_w2();
    const double* b2 = W2 + u_ * h_;
    for (std::size_t t = 0; t < T; ++t) {
      for (int j = 0; j < h_; ++j) {
        double a = b1[j];
        for (int d = 0; d < s_; ++d) a += W1[j * s_ + d] * x(t, d);
        h(t, j) = std::tanh(a);
      }
      for (int k = 0; k < u_; ++k) {
        double a = b2[k];
        for (int j = 0; j < h_; ++j) a += W2[k * h_ + j] * h(t, j);
        z(t, k) = a;
      }
    }
    if (cache) {
      cache->input = std::move(x);
      cache->hidden = std::move(h);
    }
    return z;
  }

  LogitMatrix logits(const Matrix& features) const { return LogitMatrix(forward(features)); }

  /// Adds the parameter gradient for logit gradient `dz` to `grad`.
  void backward(const Cache& cache, const Matrix& dz, std::span<double> grad) const {
    if (grad.size() != params_.size()) throw Error("model: gradient size mismatch");
    const std::size_t T = dz.rows();
    const double* W2 = params_.data() + off_w2();
    double* gW1 = grad.data();
    double* gb1 = gW1 + h_ * s_;
    double* gW2 = grad.data() + off_w2();
    double* gb2 = gW2 + u_ * h_;
    std::vector<double> da(h_);
    for (std::size_t t = 0; t < T; ++t) {
      std::fill(da.begin(), da.end(), 0.0);
      for (int k = 0; k < u_; ++k) {
        const double g = dz(t, k);
        if (g == 0.0) continue;
        gb2[k] += g;
        for (int j = 0; j < h_; ++j) {
          gW2[k * h_ + j] += g * cache.hidden(t, j);
          da[j] += g * W2[k * h_ + j];
        }
      }
      for (int j = 0; j < h_; ++j) {
        const double hj = cache.hidden(t, j);
        const double a = da[j] * (1.0 - hj * hj);
        gb1[j] += a;
        for (int d = 0; d < s_; ++d) gW1[j * s_ + d] += a * cache.input(t, d);
      }
    }
  }

 private:
  std::size_t off_w2() const { return static_cast<std::size_t>(h_ * s_ + h_); }

  int d_, h_, u_, stride_, context_;
  int s_ = 0;
  std::vector<double> params_;
};

struct TrainItem {
  const Matrix* features = nullptr;
  const GtcGraph* graph = nullptr;
};

struct BatchGradient {
  double loss = 0.0;          // mean over feasible items
  std::size_t used = 0;
  std::size_t infeasible = 0;
  std::vector<double> grad;   // mean over feasible items
};

/// Mean GTC loss and its parameter gradient over `items`. Per-item work
/// runs on `workers` threads; the reduction is sequential in item order.
inline BatchGradient batch_gradient(const FrameModel& model, std::span<const TrainItem> items, std::size_t workers = 1) {
  struct Slot {
    double loss = kInfinity;
    std::vector<double> grad;
  };
  std::vector<Slot> slots(items.size());
  parallel_for(items.size(), workers, [&](std::size_t i) {
    FrameModel::Cache cache;
    const LogitMatrix z(model.forward(*items[i].features, &cache));
    const PosteriorMatrix post = z.softmax();
    const Trellis tr = compute_trellis(*items[i].graph, post);
    if (!tr.feasible()) return;
    slots[i].loss = tr.neg_log_prob;
    slots[i].grad.assign(model.num_params(), 0.0);
    model.backward(cache, gradient(*items[i].graph, post, tr), slots[i].grad);
  });
  BatchGradient out;
  out.grad.assign(model.num_params(), 0.0);
  for (const Slot& s : slots) {
    if (s.loss == kInfinity) {
      ++out.infeasible;
      continue;
    }
    ++out.used;
    out.loss += s.loss;
    for (std::size_t p = 0; p < s.grad.size(); ++p) out.grad[p] += s.grad[p];
  }
  if (out.used) {
    out.loss /= static_cast<double>(out.used);
    for (double& g : out.grad) g /= static_cast<double>(out.used);
  }
  return out;
}

struct TrainConfig {
  int epochs = 10;
  double learning_rate = 0.05;
  std::size_t batch_size = 16;
  double clip_norm = 5.0;
  std::size_t workers = 1;
  std::uint64_t seed = 1;  // shuffling
};

struct TrainReport {
  std::vector<double> epoch_loss;  // mean item loss seen during each epoch
  std::size_t skipped = 0;         // infeasible items, skipped every epoch
};

/// Mini-batch SGD with gradient-norm clipping. Items are reshuffled every
/// epoch from a generator seeded by `config.seed`.
inline TrainReport train(FrameModel& model, std::span<const TrainItem> items, const TrainConfig& config,
                         std::ostream* log = nullptr) {
  if (config.batch_size < 1) throw Error("train: batch size must be positive");
  if (!(config.learning_rate >= 0.0) || !(config.clip_norm > 0.0)) throw Error("train: bad optimizer settings");
  TrainReport report;
  std::mt19937_64 rng(config.seed);
  std::vector<std::size_t> order(items.size());
  std::iota(order.begin(), order.end(), 0);
  std::vector<TrainItem> batch;
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double total = 0.0;
    std::size_t used = 0, skipped = 0;
    for (std::size_t lo = 0; lo < order.size(); lo += config.batch_size) {
      batch.clear();
      for (std::size_t i = lo; i < std::min(order.size(), lo + config.batch_size); ++i) batch.push_back(items[order[i]]);
      BatchGradient g = batch_gradient(model, batch, config.workers);
      skipped += g.infeasible;
      if (!g.used) continue;
      total += g.loss * static_cast<double>(g.used);
      used += g.used;
      double norm = 0.0;
      for (double x : g.grad) norm += x * x;
      norm = std::sqrt(norm);
      const double scale = norm > config.clip_norm ? config.clip_norm / norm : 1.0;
      auto params = model.params();
      for (std::size_t p = 0; p < params.size(); ++p) params[p] -= config.learning_rate * scale * g.grad[p];
    }
    report.epoch_loss.push_back(used ? total / static_cast<double>(used) : kInfinity);
    report.skipped = skipped;
    if (log) *log << "epoch " << epoch + 1 << " loss " << report.epoch_loss.back() << " skipped " << skipped << '\n';
  }
  return report;
}

/// Best path decoding: frame-wise argmax, then the CTC collapse.
inline std::vector<int> greedy_decode(const PosteriorMatrix& post) {
  std::vector<int> out;
  int prev = -1;
  for (std::size_t t = 0; t < post.frames(); ++t) {
    int best = 0;
    for (std::size_t k = 1; k < post.num_symbols(); ++k)
      if (post(t, k) > post(t, best)) best = static_cast<int>(k);
    if (best != prev && best != Alphabet::kBlank) out.push_back(best);
    prev = best;
  }
  return out;
}

namespace internal {

inline double log_add(double a, double b) { return -neg_log_add(-a, -b); }

}  // namespace internal

/// CTC prefix beam search without a language model. Each prefix keeps the
/// log probability of its blank- and non-blank-ending alignments; after
/// every frame the `beam` most probable prefixes survive (ties broken by
/// label order). Returns up to `n` prefixes, best first, each scored by
/// the log of its total alignment probability.
inline NBestList decode_nbest(const PosteriorMatrix& post, std::size_t n, std::size_t beam,
                              const std::string& utt_id = "utt") {
  if (n < 1 || beam < n) throw Error("decode_nbest: need 1 <= n <= beam");
  struct Score {
    double blank = -kInfinity;
    double label = -kInfinity;
    double total() const { return internal::log_add(blank, label); }
  };
  using Prefix = std::vector<int>;
  std::vector<std::pair<Prefix, Score>> beams{{Prefix{}, Score{0.0, -kInfinity}}};
  auto ly = [&](std::size_t t, std::size_t k) { return std::log(std::max(post(t, k), kPosteriorFloor)); };
  auto ranked = [](std::vector<std::pair<Prefix, Score>>& v) {
    std::vector<double> tot(v.size());
    std::vector<std::size_t> idx(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) tot[i] = v[i].second.total();
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
      if (tot[a] != tot[b]) return tot[a] > tot[b];
      return v[a].first < v[b].first;
    });
    std::vector<std::pair<Prefix, Score>> out;
    out.reserve(v.size());
    for (std::size_t i : idx) out.push_back(std::move(v[i]));
    return out;
  };

  for (std::size_t t = 0; t < post.frames(); ++t) {
    std::map<Prefix, Score> next;
    for (const auto& [prefix, s] : beams) {
      const double total = s.total();
      Score& same = next[prefix];
      same.blank = internal::log_add(same.blank, total + ly(t, Alphabet::kBlank));
      for (std::size_t k = 1; k < post.num_symbols(); ++k) {
        const double p = ly(t, k);
        const int label = static_cast<int>(k);
        Prefix ext = prefix;
        ext.push_back(label);
        Score& grown = next[ext];
        if (!prefix.empty() && prefix.back() == label) {
          Score& stay = next[prefix];
          stay.label = internal::log_add(stay.label, s.label + p);
          grown.label = internal::log_add(grown.label, s.blank + p);
        } else {
          grown.label = internal::log_add(grown.label, total + p);
        }
      }
    }
    std::vector<std::pair<Prefix, Score>> all(next.begin(), next.end());
    beams = ranked(all);
    if (beams.size() > beam) beams.resize(beam);
  }
  NBestList out{utt_id, {}};
  for (std::size_t i = 0; i < std::min(n, beams.size()); ++i)
    out.hyps.push_back({beams[i].first, std::min(0.0, beams[i].second.total())});
  return out;
}

/// Corpus label error rate: total edit distance over total reference length.
inline double corpus_ler(std::span<const std::vector<int>> hyps, std::span<const std::vector<int>> refs) {
  if (hyps.size() != refs.size()) throw Error("corpus_ler: size mismatch");
  std::size_t errors = 0, length = 0;
  for (std::size_t i = 0; i < refs.size(); ++i) {
    errors += edit_distance(hyps[i], refs[i]);
    length += refs[i].size();
  }
  if (length == 0) throw Error("corpus_ler: empty references");
  return static_cast<double>(errors) / static_cast<double>(length);
}

}  // namespace gtc
