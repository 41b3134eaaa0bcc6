// gtc/experiment.hpp

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

#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <functional>
#include <istream>
#include <limits>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "gtc/error.hpp"
#include "gtc/parallel.hpp"
#include "gtc/pipeline.hpp"
#include "gtc/toy_asr.hpp"

namespace gtc {

struct ExperimentConfig {
  SyntheticTask task;
  std::size_t labeled = 200;
  std::size_t unlabeled = 800;
  std::size_t test = 1000;
  std::size_t nbest = 20;
  std::size_t beam = 30;
  double mu = 0.6;
  double eta_low = 0.02;
  double eta_high = 0.05;
  int hidden = 64;
  int stride = 1;
  int context = 2;
  int seed_epochs = 10;
  int epochs = 10;
  double learning_rate = 0.05;
  std::size_t batch_size = 16;
  double clip_norm = 5.0;
  int labeled_repeat = 1;  // copies of the labeled split per epoch
  std::size_t workers = 1;
  std::uint64_t seed = 1;
  int runs = 3;

  void validate() const {
    task.validate();
    if (labeled < 1 || unlabeled < 1 || test < 1) throw Error("config: every split needs at least one utterance");
    if (nbest < 1 || beam < nbest) throw Error("config: need 1 <= nbest <= beam");
    if (!(eta_low >= 0.0 && eta_low < 1.0) || !(eta_high >= 0.0 && eta_high < 1.0))
      throw Error("config: eta values must lie in [0, 1)");
    if (!(mu >= 0.0)) throw Error("config: mu must be >= 0");
    if (hidden < 1 || stride < 1 || context < 0) throw Error("config: bad model shape");
    if (seed_epochs < 0 || epochs < 0 || batch_size < 1 || !(learning_rate >= 0.0) || !(clip_norm > 0.0))
      throw Error("config: bad optimizer settings");
    if (labeled_repeat < 1 || workers < 1 || runs < 1) throw Error("config: counts must be positive");
  }
};

namespace internal {

template <class T>
void parse_number(const std::string& text, T& out, const std::string& source, std::size_t line) {
  const char* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, out);
  if (ec != std::errc() || ptr != end) throw ParseError(source, line, "bad number '" + text + "'");
}

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  return s.substr(b, s.find_last_not_of(" \t\r") - b + 1);
}

}  // namespace internal

/// Flat key=value file; '#' starts a comment. Keys not given keep their
/// defaults, unknown keys are an error.
inline ExperimentConfig read_experiment_config(std::istream& in, const std::string& source = "config") {
  ExperimentConfig c;
  using internal::parse_number;
  std::map<std::string, std::function<void(const std::string&, std::size_t)>> keys{
      {"num_labels", [&](auto& v, auto l) { parse_number(v, c.task.num_labels, source, l); }},
      {"min_labels", [&](auto& v, auto l) { parse_number(v, c.task.min_labels, source, l); }},
      {"max_labels", [&](auto& v, auto l) { parse_number(v, c.task.max_labels, source, l); }},
      {"min_duration", [&](auto& v, auto l) { parse_number(v, c.task.min_duration, source, l); }},
      {"max_duration", [&](auto& v, auto l) { parse_number(v, c.task.max_duration, source, l); }},
      {"noise", [&](auto& v, auto l) { parse_number(v, c.task.noise, source, l); }},
      {"labeled", [&](auto& v, auto l) { parse_number(v, c.labeled, source, l); }},
      {"unlabeled", [&](auto& v, auto l) { parse_number(v, c.unlabeled, source, l); }},
      {"test", [&](auto& v, auto l) { parse_number(v, c.test, source, l); }},
      {"nbest", [&](auto& v, auto l) { parse_number(v, c.nbest, source, l); }},
      {"beam", [&](auto& v, auto l) { parse_number(v, c.beam, source, l); }},
      {"mu", [&](auto& v, auto l) { parse_number(v, c.mu, source, l); }},
      {"eta_low", [&](auto& v, auto l) { parse_number(v, c.eta_low, source, l); }},
      {"eta_high", [&](auto& v, auto l) { parse_number(v, c.eta_high, source, l); }},
      {"hidden", [&](auto& v, auto l) { parse_number(v, c.hidden, source, l); }},
      {"stride", [&](auto& v, auto l) { parse_number(v, c.stride, source, l); }},
      {"context", [&](auto& v, auto l) { parse_number(v, c.context, source, l); }},
      {"seed_epochs", [&](auto& v, auto l) { parse_number(v, c.seed_epochs, source, l); }},
      {"epochs", [&](auto& v, auto l) { parse_number(v, c.epochs, source, l); }},
      {"learning_rate", [&](auto& v, auto l) { parse_number(v, c.learning_rate, source, l); }},
      {"batch_size", [&](auto& v, auto l) { parse_number(v, c.batch_size, source, l); }},
      {"clip_norm", [&](auto& v, auto l) { parse_number(v, c.clip_norm, source, l); }},
      {"labeled_repeat", [&](auto& v, auto l) { parse_number(v, c.labeled_repeat, source, l); }},
      {"workers", [&](auto& v, auto l) { parse_number(v, c.workers, source, l); }},
      {"seed", [&](auto& v, auto l) { parse_number(v, c.seed, source, l); }},
      {"runs", [&](auto& v, auto l) { parse_number(v, c.runs, source, l); }},
  };
  std::string raw;
  std::size_t line = 0;
  while (std::getline(in, raw)) {
    ++line;
    const std::string text = internal::trim(raw.substr(0, raw.find('#')));
    if (text.empty()) continue;
    const auto eq = text.find('=');
    if (eq == std::string::npos) throw ParseError(source, line, "expected key=value");
    const std::string key = internal::trim(text.substr(0, eq)), value = internal::trim(text.substr(eq + 1));
    auto it = keys.find(key);
    if (it == keys.end()) throw ParseError(source, line, "unknown key '" + key + "'");
    it->second(value, line);
  }
  try {
    c.validate();
  } catch (const ParseError&) {
    throw;
  } catch (const Error& e) {
    throw ParseError(source, 0, e.what());
  }
  return c;
}

inline ExperimentConfig read_experiment_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path + "'");
  return read_experiment_config(in, path);
}

/// Conditions in report order.
inline const std::vector<std::string>& experiment_conditions() {
  static const std::vector<std::string> names{"seed",       "1best",     "cn_w1_none",   "cn_p_low",
                                              "cn_w1_high", "cn_p_high", "oracle_nbest", "ground_truth"};
  return names;
}

struct ConditionResult {
  int run = 0;
  std::string condition;
  double test_ler = std::numeric_limits<double>::quiet_NaN();
  double oracle_ler = std::numeric_limits<double>::quiet_NaN();    // of the pseudo-labels, unlabeled split
  double mean_density = std::numeric_limits<double>::quiet_NaN();  // of the pseudo-label graphs
  std::size_t dropped = 0;  // unlabeled utterances without a usable pseudo-label
  std::string error;        // empty on success
};

/// Corpus oracle LERs of the unlabeled split for one run.
struct OracleRates {
  double one_best = 0.0;
  double nbest = 0.0;
  double cn = 0.0;  // unpruned confusion-network graph
};

struct TrendCheck {
  bool seed_worse_than_1best = false;
  bool cn_not_worse_than_1best = false;  // best CN condition
  bool weighted_pruned_beats_unit_unpruned = false;
  bool holds() const { return seed_worse_than_1best && cn_not_worse_than_1best && weighted_pruned_beats_unit_unpruned; }
};

struct ExperimentReport {
  std::vector<ConditionResult> rows;
  std::vector<OracleRates> oracles;  // one per run

  const ConditionResult* find(int run, const std::string& condition) const {
    for (const auto& r : rows)
      if (r.run == run && r.condition == condition) return &r;
    return nullptr;
  }

  /// Test-LER ordering for one run: seed > 1-best >= best CN graph, and
  /// weighted highly pruned CN <= unit-weight unpruned CN. Missing or
  /// failed conditions count as a violation.
  TrendCheck trend(int run) const {
    auto ler = [&](const std::string& c) {
      const ConditionResult* r = find(run, c);
      return r && r->error.empty() ? r->test_ler : std::numeric_limits<double>::quiet_NaN();
    };
    const double seed = ler("seed"), one = ler("1best");
    double best_cn = std::numeric_limits<double>::quiet_NaN();
    for (const char* c : {"cn_w1_none", "cn_p_low", "cn_w1_high", "cn_p_high"}) {
      const double v = ler(c);
      if (std::isnan(v)) continue;
      if (std::isnan(best_cn) || v < best_cn) best_cn = v;
    }
    TrendCheck t;
    t.seed_worse_than_1best = seed > one;
    t.cn_not_worse_than_1best = one >= best_cn;
    t.weighted_pruned_beats_unit_unpruned = ler("cn_p_high") <= ler("cn_w1_none");
    return t;
  }

  int runs() const { return static_cast<int>(oracles.size()); }

  /// Whether the ordering holds in a strict majority of runs.
  bool trend_majority() const {
    int yes = 0;
    for (int r = 0; r < runs(); ++r) yes += trend(r).holds();
    return 2 * yes > runs();
  }

  /// Oracle LER strictly falls from 1-best to N-best list to CN graph, in
  /// every run.
  bool oracle_ordering() const {
    for (const auto& o : oracles)
      if (!(o.one_best > o.nbest && o.nbest > o.cn)) return false;
    return !oracles.empty();
  }
};

namespace internal {

struct Pseudo {
  std::vector<GtcGraph> graphs;  // parallel to `index`
  std::vector<std::size_t> index;
  std::size_t errors = 0, length = 0;
  double density = 0.0;
};

inline FrameModel fresh_model(const ExperimentConfig& c, std::uint64_t seed) {
  return FrameModel(c.task.feature_dim(), c.hidden, c.task.num_labels + 1, c.stride, seed, c.context);
}

inline double test_ler(const FrameModel& model, const std::vector<Utterance>& test, std::size_t workers) {
  std::vector<std::vector<int>> hyps(test.size()), refs(test.size());
  parallel_for(test.size(), workers, [&](std::size_t i) {
    hyps[i] = greedy_decode(model.logits(test[i].features).softmax());
    refs[i] = test[i].labels;
  });
  return corpus_ler(hyps, refs);
}

inline std::string format_rate(double v) {
  if (std::isnan(v)) return "NA";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4f", v);
  return buf;
}

}  // namespace internal

/// Self-training on a synthetic task, repeated `runs` times with seeds
/// seed, seed + 1, ...: a seed model trained on the labeled split decodes
/// N-best lists for the unlabeled split; each condition then retrains a
/// fresh model on the labeled split plus that condition's pseudo-labels.
/// Ground truth of the unlabeled split is read only for the oracle rows
/// and for reporting.
inline ExperimentReport run_experiment(const ExperimentConfig& config, std::ostream* log = nullptr) {
  config.validate();
  ExperimentReport report;
  const AlphabetPtr alphabet = task_alphabet(config.task);
  for (int run = 0; run < config.runs; ++run) {
    SyntheticTask task = config.task;
    task.seed = config.seed + static_cast<std::uint64_t>(run);
    const auto labeled = generate_dataset(task, config.labeled, 0, "lab");
    const auto unlabeled = generate_dataset(task, config.unlabeled, 1, "unl");
    const auto test = generate_dataset(task, config.test, 2, "tst");
    const std::uint64_t init_seed = task.seed * 7919 + 17;

    std::vector<GtcGraph> truth_graphs;
    for (const auto& u : labeled) truth_graphs.push_back(ctc_linear_graph(u.labels, alphabet));
    std::vector<TrainItem> base;
    for (int k = 0; k < config.labeled_repeat; ++k)
      for (std::size_t i = 0; i < labeled.size(); ++i) base.push_back({&labeled[i].features, &truth_graphs[i]});

    TrainConfig tc;
    tc.learning_rate = config.learning_rate;
    tc.batch_size = config.batch_size;
    tc.clip_norm = config.clip_norm;
    tc.workers = config.workers;
    tc.seed = task.seed;

    FrameModel seed_model = internal::fresh_model(config, init_seed);
    tc.epochs = config.seed_epochs;
    train(seed_model, base, tc);
    ConditionResult seed_row;
    seed_row.run = run;
    seed_row.condition = "seed";
    seed_row.test_ler = internal::test_ler(seed_model, test, config.workers);
    report.rows.push_back(seed_row);
    if (log) *log << "run " << run << " seed test_ler " << internal::format_rate(seed_row.test_ler) << '\n';

    std::vector<NBestList> lists(unlabeled.size());
    parallel_for(unlabeled.size(), config.workers, [&](std::size_t i) {
      lists[i] = decode_nbest(seed_model.logits(unlabeled[i].features).softmax(), config.nbest, config.beam,
                              unlabeled[i].id);
    });

    OracleRates rates;
    std::size_t ref_len = 0, one_err = 0, list_err = 0;
    for (std::size_t i = 0; i < unlabeled.size(); ++i) {
      ref_len += unlabeled[i].labels.size();
      one_err += edit_distance(lists[i].hyps.front().tokens, unlabeled[i].labels);
      list_err += oracle_errors(lists[i], unlabeled[i].labels);
    }
    rates.one_best = static_cast<double>(one_err) / static_cast<double>(ref_len);
    rates.nbest = static_cast<double>(list_err) / static_cast<double>(ref_len);
    rates.cn = std::numeric_limits<double>::quiet_NaN();

    for (std::size_t ci = 1; ci < experiment_conditions().size(); ++ci) {
      const std::string& name = experiment_conditions()[ci];
      ConditionResult row;
      row.run = run;
      row.condition = name;
      try {
        // Per-utterance pseudo-label graph, or nothing when unusable.
        std::function<std::optional<GtcGraph>(std::size_t)> make;
        auto linear = [&](const std::vector<int>& labels) -> std::optional<GtcGraph> {
          if (labels.empty()) return std::nullopt;
          return ctc_linear_graph(labels, alphabet);
        };
        auto graph = [&](double eta, bool unit) {
          PipelineConfig pc;
          pc.mu = config.mu;
          pc.eta = eta;
          pc.unit_weights = unit;
          return [&, pc](std::size_t i) -> std::optional<GtcGraph> {
            return build_supervision_graph(lists[i], pc, alphabet);
          };
        };
        if (name == "1best") {
          make = [&](std::size_t i) { return linear(lists[i].hyps.front().tokens); };
        } else if (name == "cn_w1_none") {
          make = graph(0.0, true);
        } else if (name == "cn_p_low") {
          make = graph(config.eta_low, false);
        } else if (name == "cn_w1_high") {
          make = graph(config.eta_high, true);
        } else if (name == "cn_p_high") {
          make = graph(config.eta_high, false);
        } else if (name == "oracle_nbest") {
          make = [&](std::size_t i) {
            const auto& hyps = lists[i].hyps;
            std::size_t best = 0, best_err = SIZE_MAX;
            for (std::size_t h = 0; h < hyps.size(); ++h) {
              const std::size_t e = edit_distance(hyps[h].tokens, unlabeled[i].labels);
              if (e < best_err) best_err = e, best = h;
            }
            return linear(hyps[best].tokens);
          };
        } else {
          make = [&](std::size_t i) { return linear(unlabeled[i].labels); };
        }

        std::vector<std::optional<GtcGraph>> built(unlabeled.size());
        std::vector<std::size_t> errors(unlabeled.size(), 0);
        parallel_for(unlabeled.size(), config.workers, [&](std::size_t i) {
          built[i] = make(i);
          if (built[i]) errors[i] = oracle_errors(*built[i], unlabeled[i].labels);
        });
        std::vector<TrainItem> items = base;
        std::size_t used_len = 0, used_err = 0;
        double density = 0.0;
        for (std::size_t i = 0; i < unlabeled.size(); ++i) {
          if (!built[i]) {
            ++row.dropped;
            used_len += unlabeled[i].labels.size();
            used_err += unlabeled[i].labels.size();
            continue;
          }
          items.push_back({&unlabeled[i].features, &*built[i]});
          used_len += unlabeled[i].labels.size();
          used_err += errors[i];
          density += graph_density(*built[i], unlabeled[i].labels.size());
        }
        row.oracle_ler = static_cast<double>(used_err) / static_cast<double>(used_len);
        const std::size_t kept = unlabeled.size() - row.dropped;
        if (kept) row.mean_density = density / static_cast<double>(kept);
        if (name == "cn_w1_none") rates.cn = row.oracle_ler;

        FrameModel model = internal::fresh_model(config, init_seed);
        tc.epochs = config.epochs;
        const TrainReport tr = train(model, items, tc);
        row.dropped += tr.skipped;
        row.test_ler = internal::test_ler(model, test, config.workers);
      } catch (const std::exception& e) {
        row.error = e.what();
      }
      if (log) {
        *log << "run " << run << ' ' << name << " test_ler " << internal::format_rate(row.test_ler) << " oracle_ler "
             << internal::format_rate(row.oracle_ler) << " density " << internal::format_rate(row.mean_density);
        if (!row.error.empty()) *log << " error: " << row.error;
        *log << '\n';
      }
      report.rows.push_back(row);
    }
    report.oracles.push_back(rates);
  }
  return report;
}

/// Columns: run, condition, test_ler, oracle_ler, mean_density, dropped,
/// error. Unavailable values are written as NA.
inline void write_report_tsv(std::ostream& out, const ExperimentReport& report) {
  out << "run\tcondition\ttest_ler\toracle_ler\tmean_density\tdropped\terror\n";
  for (const auto& r : report.rows)
    out << r.run << '\t' << r.condition << '\t' << internal::format_rate(r.test_ler) << '\t'
        << internal::format_rate(r.oracle_ler) << '\t' << internal::format_rate(r.mean_density) << '\t' << r.dropped
        << '\t' << (r.error.empty() ? "-" : r.error) << '\n';
}

inline void write_summary(std::ostream& out, const ExperimentReport& report, const ExperimentConfig& config) {
  out << "oracle LER on the unlabeled split (1-best / " << config.nbest << "-best / CN graph)\n";
  for (int r = 0; r < report.runs(); ++r) {
    const auto& o = report.oracles[r];
    out << "  run " << r << ": " << internal::format_rate(o.one_best) << " / " << internal::format_rate(o.nbest)
        << " / " << internal::format_rate(o.cn) << '\n';
  }
  out << "oracle ordering 1-best > N-best > CN in every run: " << (report.oracle_ordering() ? "yes" : "no") << "\n\n";
  out << "test LER\n  condition";
  for (int r = 0; r < report.runs(); ++r) out << "\trun" << r;
  out << "\tmean\n";
  for (const auto& c : experiment_conditions()) {
    out << "  " << c;
    double sum = 0.0;
    int n = 0;
    for (int r = 0; r < report.runs(); ++r) {
      const ConditionResult* row = report.find(r, c);
      const double v = row ? row->test_ler : std::numeric_limits<double>::quiet_NaN();
      out << '\t' << internal::format_rate(v);
      if (!std::isnan(v)) sum += v, ++n;
    }
    out << '\t' << internal::format_rate(n ? sum / n : std::numeric_limits<double>::quiet_NaN()) << '\n';
  }
  out << '\n';
  for (int r = 0; r < report.runs(); ++r) {
    const TrendCheck t = report.trend(r);
    out << "run " << r << ": seed > 1best " << (t.seed_worse_than_1best ? "yes" : "no") << ", 1best >= best CN "
        << (t.cn_not_worse_than_1best ? "yes" : "no") << ", cn_p_high <= cn_w1_none "
        << (t.weighted_pruned_beats_unit_unpruned ? "yes" : "no") << '\n';
  }
  out << "ordering holds in a majority of runs: " << (report.trend_majority() ? "yes" : "no") << '\n';
}

}  // namespace gtc
