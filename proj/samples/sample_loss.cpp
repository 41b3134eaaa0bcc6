// samples/sample_loss.cpp

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
// Builds a supervision graph from a three-entry N-best list, then evaluates
// the GTC loss and its gradient for a random logit matrix.

#include <cstdio>
#include <iostream>
#include <random>

#include "gtc/gtc.hpp"

int main() {
  using namespace gtc;
  const AlphabetPtr alphabet = make_alphabet({"a", "b", "c", "d"});

  NBestList nbest{"demo", {}};
  nbest.hyps.push_back({alphabet->encode({"a", "b", "c"}), -1.0});
  nbest.hyps.push_back({alphabet->encode({"a", "d", "c"}), -1.8});
  nbest.hyps.push_back({alphabet->encode({"a", "b", "b", "c"}), -2.4});

  PipelineConfig config;
  config.mu = 0.6;
  config.eta = 0.05;
  const GtcGraph graph = build_supervision_graph(nbest, config, alphabet);
  std::cout << "graph: " << graph.num_nodes() << " nodes, " << graph.edges().size() << " edges\n";
  write_graph(std::cout, graph);

  std::mt19937_64 rng(7);
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix z(10, static_cast<std::size_t>(alphabet->size()));
  for (double& x : z.data()) x = normal(rng);
  const PosteriorMatrix post = LogitMatrix(z).softmax();

  const Trellis trellis = compute_trellis(graph, post);
  std::printf("loss -ln p(G|X) = %.12f\n", trellis.neg_log_prob);
  const Matrix grad = gradient(graph, post, trellis);
  std::printf("gradient, first frame:");
  for (double g : grad.row(0)) std::printf(" %+.6f", g);
  std::printf("\n");
  return 0;
}
