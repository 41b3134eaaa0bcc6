// tools/gtc_main.cpp

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
// Command-line front end: graph building, loss evaluation, gradient
// checking, oracle error rates and the self-training demo.
//
// Exit codes: 0 success, 1 usage, 2 I/O or parse error, 3 infeasible or
// numeric failure.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "gtc/experiment.hpp"
#include "gtc/graph.hpp"
#include "gtc/gtc_loss.hpp"
#include "gtc/oracle.hpp"
#include "gtc/pipeline.hpp"

namespace fs = std::filesystem;
using namespace gtc;

namespace {

constexpr int kExitUsage = 1;
constexpr int kExitIo = 2;
constexpr int kExitNumeric = 3;

/// Numeric failure with its own exit code.
class NumericError : public Error {
 public:
  explicit NumericError(const std::string& what) : Error(what) {}
};

std::ifstream open_in(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open '" + path + "'");
  return in;
}

/// Writes through a temporary file renamed into place.
void write_atomically(const fs::path& path, const std::string& content) {
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw IoError("cannot write '" + tmp.string() + "'");
    out << content;
    if (!out.flush()) throw IoError("cannot write '" + tmp.string() + "'");
  }
  std::error_code ec;
  fs::rename(tmp, path, ec);
  if (ec) throw IoError("cannot write '" + path.string() + "': " + ec.message());
}

AlphabetPtr load_alphabet(const std::string& path) {
  auto in = open_in(path);
  return std::make_shared<const Alphabet>(Alphabet::read(in, path));
}

GtcGraph load_graph(const std::string& path, AlphabetPtr alphabet) {
  auto in = open_in(path);
  return read_graph(in, std::move(alphabet), path);
}

/// Matrix file whose header names the alphabet. With `alphabet` given the
/// header must list exactly its tokens; otherwise the alphabet is taken
/// from the header, which must start with the blank.
Matrix load_matrix(const std::string& path, AlphabetPtr& alphabet) {
  auto in = open_in(path);
  std::vector<std::string> header;
  Matrix m = read_matrix_tsv(in, header, path);
  if (alphabet) {
    bool same = static_cast<int>(header.size()) == alphabet->size();
    for (std::size_t k = 0; same && k < header.size(); ++k) same = header[k] == alphabet->token(static_cast<int>(k));
    if (!same) throw ParseError(path, 1, "shape mismatch: header does not match the alphabet");
  } else {
    if (header.empty() || header[0] != Alphabet::kBlankToken)
      throw ParseError(path, 1, "header must start with the blank token <b>");
    try {
      alphabet = make_alphabet(std::vector<std::string>(header.begin() + 1, header.end()));
    } catch (const Error& e) {
      throw ParseError(path, 1, e.what());
    }
  }
  if (m.rows() < 1) throw ParseError(path, 0, "no frames");
  return m;
}

std::vector<std::string> header_of(const Alphabet& a) {
  std::vector<std::string> h;
  for (int k = 0; k < a.size(); ++k) h.push_back(a.token(k));
  return h;
}

/// Reference file: `<utt_id>\t<token token ...>` per line.
std::map<std::string, std::vector<int>> load_refs(const std::string& path, const Alphabet& alphabet) {
  auto in = open_in(path);
  std::map<std::string, std::vector<int>> refs;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto tab = line.find('\t');
    if (tab == std::string::npos || tab == 0) throw ParseError(path, lineno, "expected <utt_id>\\t<tokens>");
    std::vector<int> tokens;
    std::istringstream toks(line.substr(tab + 1));
    for (std::string tok; toks >> tok;) {
      auto id = alphabet.find(tok);
      if (!id || *id == Alphabet::kBlank) throw ParseError(path, lineno, "token '" + tok + "' not in alphabet");
      tokens.push_back(*id);
    }
    if (tokens.empty()) throw ParseError(path, lineno, "empty reference");
    if (!refs.emplace(line.substr(0, tab), std::move(tokens)).second)
      throw ParseError(path, lineno, "duplicate utterance '" + line.substr(0, tab) + "'");
  }
  return refs;
}

std::string fmt(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string fmt4(double v) {
  if (std::isnan(v)) return "NA";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.4f", v);
  return buf;
}

struct BuildArgs {
  std::string nbest, alphabet, out, ref;
  double mu = 0.6, eta = 0.0;
  bool unit_weights = false;
  std::size_t workers = 1;
};

int cmd_build_graph(const BuildArgs& a) {
  const AlphabetPtr alphabet = load_alphabet(a.alphabet);
  auto in = open_in(a.nbest);
  const auto lists = read_nbest(in, *alphabet, a.nbest);
  std::map<std::string, std::vector<int>> refs;
  if (!a.ref.empty()) refs = load_refs(a.ref, *alphabet);
  PipelineConfig pc;
  pc.mu = a.mu;
  pc.eta = a.eta;
  pc.unit_weights = a.unit_weights;
  pc.validate();
  std::error_code ec;
  fs::create_directories(a.out, ec);
  if (ec || !fs::is_directory(a.out)) throw IoError("cannot create output directory '" + a.out + "'");

  std::vector<std::optional<GtcGraph>> graphs(lists.size());
  std::vector<std::string> errors(lists.size());
  parallel_for(lists.size(), a.workers, [&](std::size_t i) {
    try {
      graphs[i] = build_supervision_graph(lists[i], pc, alphabet);
      write_atomically(fs::path(a.out) / (lists[i].utt_id + ".gtc"), graph_to_string(*graphs[i]));
    } catch (const std::exception& e) {
      errors[i] = lists[i].utt_id + ": " + e.what();
    }
  });
  for (const auto& e : errors)
    if (!e.empty()) throw Error(e);

  std::cout << "utt\tnodes\tedges\tdensity\n";
  for (std::size_t i = 0; i < lists.size(); ++i) {
    std::size_t len = 0;
    if (!a.ref.empty()) {
      auto it = refs.find(lists[i].utt_id);
      if (it == refs.end()) throw ParseError(a.ref, 0, "no reference for '" + lists[i].utt_id + "'");
      len = it->second.size();
    } else if (!lists[i].hyps.empty()) {
      len = lists[i].hyps.front().tokens.size();
    }
    const double density = len ? graph_density(*graphs[i], len) : std::nan("");
    std::cout << lists[i].utt_id << '\t' << graphs[i]->num_nodes() << '\t' << graphs[i]->edges().size() << '\t'
              << fmt4(density) << '\n';
  }
  return 0;
}

int cmd_loss(const std::string& graph_path, const std::string& post_path, const std::string& alphabet_path,
             const std::string& grad_path) {
  AlphabetPtr alphabet = alphabet_path.empty() ? nullptr : load_alphabet(alphabet_path);
  const Matrix m = load_matrix(post_path, alphabet);
  const GtcGraph graph = load_graph(graph_path, alphabet);
  PosteriorMatrix post = [&] {
    try {
      return PosteriorMatrix(m);
    } catch (const Error& e) {
      throw ParseError(post_path, 0, e.what());
    }
  }();
  const Trellis tr = compute_trellis(graph, post);
  if (!tr.feasible()) throw InfeasibleError();
  std::cout << fmt(tr.neg_log_prob) << '\n';
  if (!grad_path.empty()) {
    std::ostringstream os;
    write_matrix_tsv(os, gradient(graph, post, tr), header_of(*alphabet));
    write_atomically(grad_path, os.str());
  }
  return 0;
}

int cmd_gradcheck(const std::string& graph_path, const std::string& logit_path, const std::string& alphabet_path,
                  double step) {
  AlphabetPtr alphabet = alphabet_path.empty() ? nullptr : load_alphabet(alphabet_path);
  const Matrix m = load_matrix(logit_path, alphabet);
  const GtcGraph graph = load_graph(graph_path, alphabet);
  const LogitMatrix logits = [&] {
    try {
      return LogitMatrix(m);
    } catch (const Error& e) {
      throw ParseError(logit_path, 0, e.what());
    }
  }();
  const PosteriorMatrix post = logits.softmax();
  const Matrix analytic = gradient(graph, post);
  const Matrix numeric = oracle::finite_diff_grad(graph, logits, step, [](const GtcGraph& g, const PosteriorMatrix& p) {
    return loss(g, p);
  });
  double worst = 0.0;
  for (std::size_t t = 0; t < analytic.rows(); ++t)
    for (std::size_t k = 0; k < analytic.cols(); ++k) {
      const double a = analytic(t, k), n = numeric(t, k);
      worst = std::max(worst, std::abs(a - n) / std::max({std::abs(a), std::abs(n), 1e-8}));
    }
  std::cout << fmt(worst) << '\n';
  if (!(worst <= 1e-4)) throw NumericError("gradient check failed: max relative error " + fmt(worst));
  return 0;
}

int cmd_oracle_ler(const std::vector<std::string>& graph_paths, const std::string& nbest_path,
                   const std::string& ref_path, const std::string& alphabet_path, bool per_utt) {
  const AlphabetPtr alphabet = load_alphabet(alphabet_path);
  const auto refs = load_refs(ref_path, *alphabet);
  auto ref_of = [&](const std::string& utt) -> const std::vector<int>& {
    auto it = refs.find(utt);
    if (it == refs.end()) throw ParseError(ref_path, 0, "no reference for '" + utt + "'");
    return it->second;
  };
  std::size_t errors = 0, length = 0;
  auto report = [&](const std::string& utt, std::size_t e, std::size_t n) {
    errors += e;
    length += n;
    if (per_utt) std::cout << utt << '\t' << fmt4(static_cast<double>(e) / static_cast<double>(n)) << '\n';
  };
  if (!nbest_path.empty()) {
    auto in = open_in(nbest_path);
    for (const auto& list : read_nbest(in, *alphabet, nbest_path)) {
      const auto& ref = ref_of(list.utt_id);
      report(list.utt_id, oracle_errors(list, ref), ref.size());
    }
  } else {
    for (const auto& path : graph_paths) {
      const std::string utt = fs::path(path).stem().string();
      const auto& ref = ref_of(utt);
      report(utt, oracle_errors(load_graph(path, alphabet), ref), ref.size());
    }
  }
  if (length == 0) throw ParseError(nbest_path.empty() ? ref_path : nbest_path, 0, "nothing to score");
  std::cout << (per_utt ? "total\t" : "") << fmt(static_cast<double>(errors) / static_cast<double>(length)) << '\n';
  return 0;
}

int cmd_demo(const std::string& config_path, const std::string& out_dir, std::optional<std::uint64_t> seed,
             std::optional<std::size_t> workers) {
  ExperimentConfig config = read_experiment_config(config_path);
  if (seed) config.seed = *seed;
  if (workers) config.workers = *workers;
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec || !fs::is_directory(out_dir)) throw IoError("cannot create output directory '" + out_dir + "'");
  const ExperimentReport report = run_experiment(config, &std::cerr);
  std::ostringstream tsv, summary;
  write_report_tsv(tsv, report);
  write_summary(summary, report, config);
  write_atomically(fs::path(out_dir) / "report.tsv", tsv.str());
  write_atomically(fs::path(out_dir) / "summary.txt", summary.str());
  std::cout << summary.str();
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Graph-based temporal classification tools"};
  app.require_subcommand(1);

  BuildArgs build;
  auto* sc_build = app.add_subcommand("build-graph", "N-best lists to CTC-style supervision graphs");
  sc_build->add_option("--nbest", build.nbest, "N-best file")->required()->check(CLI::ExistingFile);
  sc_build->add_option("--alphabet", build.alphabet, "alphabet file")->required()->check(CLI::ExistingFile);
  sc_build->add_option("--mu", build.mu, "score scaling factor")->capture_default_str();
  sc_build->add_option("--eta", build.eta, "pruning threshold, 0 disables")->capture_default_str();
  sc_build->add_flag("--unit-weights", build.unit_weights, "set every transition weight to 1");
  sc_build->add_option("--out", build.out, "output directory for <utt>.gtc files")->required();
  sc_build->add_option("--ref", build.ref, "reference file for densities")->check(CLI::ExistingFile);
  sc_build->add_option("--workers", build.workers, "worker threads")->check(CLI::PositiveNumber);

  std::string graph, posteriors, logits, alphabet, grad_out, nbest, ref, config, out;
  std::vector<std::string> graphs;
  double step = 1e-5;
  bool per_utt = false;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> workers;

  auto* sc_loss = app.add_subcommand("loss", "GTC loss of a graph under a posterior matrix");
  sc_loss->add_option("--graph", graph, "graph file")->required()->check(CLI::ExistingFile);
  sc_loss->add_option("--posteriors", posteriors, "posterior TSV")->required()->check(CLI::ExistingFile);
  sc_loss->add_option("--alphabet", alphabet, "alphabet file; default: matrix header")->check(CLI::ExistingFile);
  sc_loss->add_option("--grad", grad_out, "write the logit gradient TSV here");

  auto* sc_check = app.add_subcommand("gradcheck", "analytic gradient against central differences");
  sc_check->add_option("--graph", graph, "graph file")->required()->check(CLI::ExistingFile);
  sc_check->add_option("--logits", logits, "logit TSV")->required()->check(CLI::ExistingFile);
  sc_check->add_option("--alphabet", alphabet, "alphabet file; default: matrix header")->check(CLI::ExistingFile);
  sc_check->add_option("--step", step, "finite-difference step")
      ->capture_default_str()
      ->check(CLI::Range(1e-7, 1e-3));

  auto* sc_oracle = app.add_subcommand("oracle-ler", "oracle label error rate against references");
  auto* o_graph = sc_oracle->add_option("--graph", graphs, "graph files, utterance id = file stem")
                      ->check(CLI::ExistingFile);
  auto* o_nbest = sc_oracle->add_option("--nbest", nbest, "N-best file")->check(CLI::ExistingFile);
  o_graph->excludes(o_nbest);
  sc_oracle->add_option("--ref", ref, "reference file")->required()->check(CLI::ExistingFile);
  sc_oracle->add_option("--alphabet", alphabet, "alphabet file")->required()->check(CLI::ExistingFile);
  sc_oracle->add_flag("--per-utt", per_utt, "also print one rate per utterance");

  auto* sc_demo = app.add_subcommand("demo", "self-training experiment on synthetic data");
  sc_demo->add_option("--config", config, "experiment config")->required();
  sc_demo->add_option("--out", out, "output directory")->required();
  sc_demo->add_option("--seed", seed, "override the config seed");
  sc_demo->add_option("--workers", workers, "override the worker count")->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitUsage;
  }

  try {
    if (*sc_build) return cmd_build_graph(build);
    if (*sc_loss) return cmd_loss(graph, posteriors, alphabet, grad_out);
    if (*sc_check) return cmd_gradcheck(graph, logits, alphabet, step);
    if (*sc_oracle) {
      if (graphs.empty() && nbest.empty()) {
        std::cerr << "oracle-ler: one of --graph or --nbest is required\n";
        return kExitUsage;
      }
      return cmd_oracle_ler(graphs, nbest, ref, alphabet, per_utt);
    }
    if (*sc_demo) return cmd_demo(config, out, seed, workers);
  } catch (const InfeasibleError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitNumeric;
  } catch (const NumericError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitNumeric;
  } catch (const BudgetExceeded& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitNumeric;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitIo;
  }
  return kExitUsage;
}
