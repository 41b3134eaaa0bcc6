// tests/test_pipeline.cpp

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
#include <gtest/gtest.h>

#include <cmath>
#include <sstream>
#include <vector>

#include "gtc/oracle.hpp"
#include "gtc/pipeline.hpp"
#include "test_util.hpp"

namespace gtc {
namespace {

using testing::Rng;
using V = std::vector<int>;

NBestList make_nbest(std::vector<std::pair<V, double>> hyps) {
  NBestList nb{"utt", {}};
  for (auto& [t, s] : hyps) nb.hyps.push_back({t, s});
  return nb;
}

// Most probable label string of a sausage, reading the argmax of each bin.
V argmax_string(const ConfusionNetwork& cn) {
  V out;
  for (const auto& bin : cn.bins) {
    auto best = std::max_element(bin.begin(), bin.end(), [](auto& a, auto& b) { return a.second < b.second; });
    if (best->first != kEpsilon) out.push_back(best->first);
  }
  return out;
}

TEST(NbestToCn, SingleHypothesis) {
  ConfusionNetwork cn = nbest_to_cn(make_nbest({{{1, 2}, -0.3}}), 0.6);
  ASSERT_EQ(cn.bins.size(), 2u);
  EXPECT_EQ(cn.bins[0], (ConfusionNetwork::Bin{{1, 1.0}}));
  EXPECT_EQ(cn.bins[1], (ConfusionNetwork::Bin{{2, 1.0}}));
}

TEST(NbestToCn, SymmetricSubstitution) {
  for (double mu : {0.0, 0.6, 5.0}) {
    ConfusionNetwork cn = nbest_to_cn(make_nbest({{{1, 2}, -1.0}, {{1, 3}, -1.0}}), mu);
    ASSERT_EQ(cn.bins.size(), 2u);
    EXPECT_EQ(cn.bins[0], (ConfusionNetwork::Bin{{1, 1.0}}));
    EXPECT_EQ(cn.bins[1], (ConfusionNetwork::Bin{{2, 0.5}, {3, 0.5}}));
  }
}

TEST(NbestToCn, ScaledScores) {
  ConfusionNetwork cn = nbest_to_cn(make_nbest({{{1}, 0.0}, {{2}, std::log(3.0)}}), 1.0);
  ASSERT_EQ(cn.bins.size(), 1u);
  EXPECT_NEAR(cn.bins[0].at(1), 0.25, 1e-15);
  EXPECT_NEAR(cn.bins[0].at(2), 0.75, 1e-15);
}

TEST(NbestToCn, ZeroMuIgnoresScores) {
  NBestList nb = make_nbest({{{1}, -0.1}, {{2}, -7.0}, {{3}, -30.0}});
  for (double w : hypothesis_weights(nb, 0.0)) EXPECT_DOUBLE_EQ(w, 1.0 / 3.0);
  ConfusionNetwork cn = nbest_to_cn(nb, 0.0);
  for (int k : {1, 2, 3}) EXPECT_NEAR(cn.bins[0].at(k), 1.0 / 3.0, 1e-15);
}

TEST(NbestToCn, Errors) {
  EXPECT_THROW(nbest_to_cn(NBestList{"u", {}}, 0.6), Error);
  EXPECT_THROW(nbest_to_cn(make_nbest({{{1}, 0.0}}), -1.0), Error);
}

TEST(NbestToCn, InsertionsBecomeEpsilonMass) {
  ConfusionNetwork cn = nbest_to_cn(make_nbest({{{1, 2}, 0.0}, {{1, 3, 2}, 0.0}}), 1.0);
  ASSERT_EQ(cn.bins.size(), 3u);
  EXPECT_EQ(cn.bins[1], (ConfusionNetwork::Bin{{kEpsilon, 0.5}, {3, 0.5}}));
}

TEST(NbestToCn, EveryHypothesisIsASausagePath) {
  Rng rng(1);
  for (int trial = 0; trial < 100; ++trial) {
    V ref = testing::random_labels(rng, 5, 1, 8);
    NBestList nb = testing::random_nbest(rng, ref, 5, testing::uniform_int(rng, 1, 10), 0.2);
    ConfusionNetwork cn = nbest_to_cn(nb, testing::uniform(rng, 0.0, 2.0));
    auto strings = oracle::enumerate_sausage(cn).value;
    for (const auto& h : nb.hyps) EXPECT_TRUE(strings.count(h.tokens)) << "trial " << trial;
    for (const auto& bin : cn.bins) {
      double z = 0.0;
      for (const auto& [k, p] : bin) z += p;
      EXPECT_NEAR(z, 1.0, 1e-12);
    }
  }
}

TEST(NbestToCn, LargeMuFollowsBestHypothesis) {
  Rng rng(2);
  for (int trial = 0; trial < 50; ++trial) {
    V ref = testing::random_labels(rng, 5, 2, 8);
    NBestList nb = testing::random_nbest(rng, ref, 5, 8, 0.25);
    // Keep the scores well separated.
    for (std::size_t i = 0; i < nb.hyps.size(); ++i) nb.hyps[i].score = -0.5 * static_cast<double>(i);
    ConfusionNetwork cn = nbest_to_cn(nb, 1e3);
    EXPECT_EQ(argmax_string(cn), nb.hyps[0].tokens);
    for (const auto& bin : cn.bins) {
      double top = 0.0;
      for (const auto& [k, p] : bin) top = std::max(top, p);
      EXPECT_GT(top, 1.0 - 1e-12);
    }
    NBestList one{"utt", {nb.hyps[0]}};
    ConfusionNetwork pruned = prune_cn(cn, 0.5);
    if (!nb.hyps[0].tokens.empty()) {
      EXPECT_EQ(pruned.bins, nbest_to_cn(one, 1e3).bins);
    }
  }
}

TEST(NbestToCn, FigureOneTranscriptRecoverable) {
  auto chars = make_alphabet({"H", "E", "L", "O", "W", "R", "D", "|"});
  auto enc = [&](const std::string& s) {
    V out;
    for (char c : s) out.push_back(chars->index(c == ' ' ? "|" : std::string(1, c)));
    return out;
  };
  NBestList nb{"fig1", {}};
  double score = -1.0;
  for (const char* h : {"HELO WORLD", "HELLO WOLD", "HELO WOLD", "HELLOWLD"}) {
    nb.hyps.push_back({enc(h), score});
    score -= 0.5;
  }
  const V truth = enc("HELLO WORLD");
  EXPECT_GT(oracle_errors(nb, truth), 0u);
  for (double mu : {0.0, 0.6}) {
    ConfusionNetwork cn = nbest_to_cn(nb, mu);
    EXPECT_EQ(cn.bins.size(), truth.size());
    EXPECT_TRUE(oracle::enumerate_sausage(cn).value.count(truth));
    GtcGraph g = build_supervision_graph(nb, {.mu = mu}, chars);
    EXPECT_EQ(oracle_errors(g, truth), 0u);
  }
}

TEST(PruneCn, Example) {
  ConfusionNetwork cn{{{{1, 0.9}, {2, 0.06}, {3, 0.04}}}};
  ConfusionNetwork p = prune_cn(cn, 0.05);
  ASSERT_EQ(p.bins.size(), 1u);
  ASSERT_EQ(p.bins[0].size(), 2u);
  EXPECT_NEAR(p.bins[0].at(1), 0.9375, 1e-15);
  EXPECT_NEAR(p.bins[0].at(2), 0.0625, 1e-15);
}

TEST(PruneCn, ZeroIsIdentityAndBestSurvives) {
  ConfusionNetwork cn{{{{1, 0.5}, {2, 0.3}, {kEpsilon, 0.2}}, {{1, 0.34}, {2, 0.33}, {3, 0.33}}}};
  EXPECT_EQ(prune_cn(cn, 0.0).bins, cn.bins);
  ConfusionNetwork p = prune_cn(cn, 0.9);
  ASSERT_EQ(p.bins.size(), 2u);
  EXPECT_EQ(p.bins[0], (ConfusionNetwork::Bin{{1, 1.0}}));
  EXPECT_EQ(p.bins[1], (ConfusionNetwork::Bin{{1, 1.0}}));
  EXPECT_THROW(prune_cn(cn, 1.0), Error);
  EXPECT_THROW(prune_cn(cn, -0.1), Error);
}

TEST(CnToWfst, SingleBin) {
  Wfst f = cn_to_wfst(ConfusionNetwork{{{{1, 1.0}}}});
  ASSERT_EQ(f.num_arcs(), 1u);
  EXPECT_EQ(f.arcs(f.start())[0].ilabel, 1);
  EXPECT_NEAR(f.arcs(f.start())[0].weight, 0.0, 1e-15);
  const int dst = f.arcs(f.start())[0].nextstate;
  EXPECT_NEAR(f.final_weight(dst), 0.0, 1e-15);
}

TEST(CnToWfst, OptionalSecondToken) {
  Wfst f = cn_to_wfst(ConfusionNetwork{{{{1, 1.0}}, {{2, 0.5}, {kEpsilon, 0.5}}}});
  EXPECT_FALSE(f.has_epsilons());
  auto s = oracle::enumerate_strings(f, true).value;
  ASSERT_EQ(s.size(), 2u);
  EXPECT_NEAR(s.at({1, 2}), std::log(2.0), 1e-12);
  EXPECT_NEAR(s.at({1}), std::log(2.0), 1e-12);
}

TEST(CnToWfst, StringWeightsMatchSausageEnumeration) {
  Rng rng(3);
  for (int trial = 0; trial < 200; ++trial) {
    ConfusionNetwork cn;
    const int bins = testing::uniform_int(rng, 1, 5);
    for (int b = 0; b < bins; ++b) {
      ConfusionNetwork::Bin bin;
      const int entries = testing::uniform_int(rng, 1, 3);
      for (int e = 0; e < entries; ++e) bin[testing::uniform_int(rng, 0, 3)] += testing::uniform(rng, 0.05, 1.0);
      double z = 0.0;
      for (auto& [k, p] : bin) z += p;
      for (auto& [k, p] : bin) p /= z;
      cn.bins.push_back(bin);
    }
    Wfst f = cn_to_wfst(cn);
    EXPECT_TRUE(is_deterministic(f));
    EXPECT_FALSE(f.has_epsilons());
    auto got = oracle::enumerate_strings(f, true).value;
    auto want = oracle::enumerate_sausage(cn).value;
    ASSERT_EQ(got.size(), want.size());
    long double total = 0.0L;
    for (const auto& [s, p] : want) {
      total += p;
      ASSERT_TRUE(got.count(s));
      EXPECT_NEAR(got.at(s), -std::log(static_cast<double>(p)), 1e-10);
    }
    EXPECT_NEAR(static_cast<double>(total), 1.0, 1e-12);
    double mass = kInfinity;
    for (const auto& [s, c] : got) mass = neg_log_add(mass, c);
    EXPECT_NEAR(mass, 0.0, 1e-9);
  }
}

TEST(CompactCnWfst, KeepsWeightsAndNeverGrowsPastTheChain) {
  Rng rng(9);
  auto abc = testing::letters(3);
  int optimized = 0, chains = 0;
  for (int trial = 0; trial < 100; ++trial) {
    V ref = testing::random_labels(rng, 3, 2, 7);
    NBestList nb = testing::random_nbest(rng, ref, 3, testing::uniform_int(rng, 1, 10), 0.2);
    ConfusionNetwork cn = nbest_to_cn(nb, 0.6);
    Wfst chain = cn_to_chain(cn, abc);
    Wfst fst = compact_cn_wfst(cn, abc);
    std::size_t labels = 0;
    for (int q = 0; q < chain.num_states(); ++q)
      for (const auto& a : chain.arcs(q)) labels += a.ilabel != kEpsilon;
    EXPECT_LE(fst.num_arcs(), chain.num_arcs());
    (fst.has_epsilons() ? chains : optimized)++;
    if (!fst.has_epsilons()) {
      EXPECT_LE(fst.num_arcs(), labels);
    }
    auto got = oracle::enumerate_strings(fst, true).value;
    auto want = oracle::enumerate_sausage(cn).value;
    ASSERT_EQ(got.size(), want.size());
    for (const auto& [str, p] : want) EXPECT_NEAR(got.at(str), -std::log(static_cast<double>(p)), 1e-10);
  }
  EXPECT_GT(optimized, 0);
  EXPECT_GT(chains, 0);
}

TEST(CompactCnWfst, EpsilonFreeSausageIsOptimized) {
  ConfusionNetwork cn{{{{1, 0.5}, {2, 0.5}}, {{3, 1.0}}}};
  Wfst fst = compact_cn_wfst(cn, testing::letters(3));
  EXPECT_TRUE(is_deterministic(fst));
  EXPECT_EQ(fst.num_arcs(), 3u);
}

TEST(PruneWfst, RenormalizesAndKeepsBest) {
  Wfst f;
  for (int i = 0; i < 2; ++i) f.add_state();
  f.set_start(0);
  f.add_arc(0, 1, -std::log(0.9), 1);
  f.add_arc(0, 2, -std::log(0.06), 1);
  f.add_arc(0, 3, -std::log(0.04), 1);
  f.set_final(1, 0.0);
  Wfst p = prune_wfst(f, 0.05);
  ASSERT_EQ(p.arcs(0).size(), 2u);
  EXPECT_NEAR(std::exp(-p.arcs(0)[0].weight), 0.9375, 1e-12);
  EXPECT_NEAR(std::exp(-p.arcs(0)[1].weight), 0.0625, 1e-12);
  Wfst q = prune_wfst(f, 0.95);
  ASSERT_EQ(q.arcs(0).size(), 1u);
  EXPECT_NEAR(q.arcs(0)[0].weight, 0.0, 1e-15);
  EXPECT_THROW(prune_wfst(f, 1.0), Error);
}

TEST(SupervisionGraph, SingleHypothesisIsCtcGraph) {
  auto abc = testing::letters(3);
  for (const V& h : {V{1}, V{1, 2, 3}, V{2, 2, 1, 1}}) {
    NBestList nb = make_nbest({{h, -2.0}});
    for (bool unit : {false, true}) {
      GtcGraph g = build_supervision_graph(nb, {.mu = 0.6, .eta = 0.05, .unit_weights = unit}, abc);
      EXPECT_EQ(graph_to_string(g), graph_to_string(ctc_linear_graph(h, abc)));
    }
  }
}

TEST(SupervisionGraph, UnitWeights) {
  Rng rng(4);
  NBestList nb = testing::random_nbest(rng, testing::random_labels(rng, 4, 3, 6), 4, 10, 0.3);
  GtcGraph g = build_supervision_graph(nb, {.unit_weights = true}, testing::letters(4));
  for (const auto& e : g.edges()) EXPECT_EQ(e.weight, 1.0);
  GtcGraph w = build_supervision_graph(nb, {}, testing::letters(4));
  EXPECT_EQ(g.num_nodes(), w.num_nodes());
}

TEST(SupervisionGraph, Deterministic) {
  Rng rng(5);
  auto abcde = testing::letters(5);
  for (int trial = 0; trial < 20; ++trial) {
    NBestList nb = testing::random_nbest(rng, testing::random_labels(rng, 5, 2, 9), 5, 20, 0.25);
    PipelineConfig cfg{.mu = 0.6, .eta = 0.02};
    EXPECT_EQ(graph_to_string(build_supervision_graph(nb, cfg, abcde)),
              graph_to_string(build_supervision_graph(nb, cfg, abcde)));
  }
}

TEST(SupervisionGraph, ConfigValidation) {
  NBestList nb = make_nbest({{{1}, 0.0}});
  EXPECT_THROW(build_supervision_graph(nb, {.mu = -0.5}, testing::letters(1)), Error);
  EXPECT_THROW(build_supervision_graph(nb, {.eta = 1.0}, testing::letters(1)), Error);
  EXPECT_THROW(build_supervision_graph(nb, {.mu = kInfinity}, testing::letters(1)), Error);
}

TEST(OracleLer, Examples) {
  NBestList nb = make_nbest({{{1, 2}, -1.0}, {{1, 4}, -2.0}});
  EXPECT_DOUBLE_EQ(oracle_ler(nb, V{1, 3}), 0.5);
  EXPECT_DOUBLE_EQ(oracle_ler(nb, V{1, 4}), 0.0);
  EXPECT_THROW(oracle_ler(nb, V{}), Error);
  auto abcd = testing::letters(4);
  GtcGraph g = build_supervision_graph(make_nbest({{{1, 3}, 0.0}}), {}, abcd);
  EXPECT_DOUBLE_EQ(oracle_ler(g, V{1, 3}), 0.0);
  EXPECT_DOUBLE_EQ(oracle_ler(g, V{1, 3, 3, 3}), 0.5);
  EXPECT_DOUBLE_EQ(oracle_ler(g, V{2}), 2.0);
  EXPECT_THROW(oracle_ler(g, V{}), Error);
}

TEST(OracleLer, GraphMatchesStringEnumeration) {
  Rng rng(6);
  auto abcde = testing::letters(5);
  for (int trial = 0; trial < 60; ++trial) {
    V ref = testing::random_labels(rng, 5, 1, 7);
    NBestList nb = testing::random_nbest(rng, ref, 5, testing::uniform_int(rng, 1, 8), 0.3);
    ConfusionNetwork cn = nbest_to_cn(nb, 0.6);
    GtcGraph g = build_supervision_graph(nb, {.mu = 0.6}, abcde);
    std::size_t best = SIZE_MAX;
    for (const auto& [s, p] : oracle::enumerate_sausage(cn).value) best = std::min(best, oracle::levenshtein(s, ref));
    EXPECT_EQ(oracle_errors(g, ref), best) << "trial " << trial;
  }
}

TEST(OracleLer, GraphBeatsListBeatsFirstBest) {
  Rng rng(7);
  auto alpha = testing::letters(6);
  double sum_graph = 0, sum_list = 0, sum_first = 0;
  for (int trial = 0; trial < 100; ++trial) {
    V ref = testing::random_labels(rng, 6, 3, 10);
    NBestList nb = testing::random_nbest(rng, ref, 6, 20, 0.15);
    GtcGraph g = build_supervision_graph(nb, {.mu = 0.6}, alpha);
    const double lg = oracle_ler(g, ref), ll = oracle_ler(nb, ref);
    const double l1 = static_cast<double>(edit_distance(nb.hyps[0].tokens, ref)) / ref.size();
    EXPECT_LE(lg, ll);
    EXPECT_LE(ll, l1);
    sum_graph += lg;
    sum_list += ll;
    sum_first += l1;
  }
  EXPECT_LT(sum_graph, sum_list);
  EXPECT_LT(sum_list, sum_first);
}

TEST(Pruning, DensityAndOracleMonotoneInEta) {
  Rng rng(8);
  auto alpha = testing::letters(6);
  for (int trial = 0; trial < 60; ++trial) {
    V ref = testing::random_labels(rng, 6, 3, 10);
    NBestList nb = testing::random_nbest(rng, ref, 6, 20, 0.2);
    double last_density = kInfinity, last_ler = -1.0;
    for (double eta : {0.0, 0.02, 0.05, 0.2}) {
      GtcGraph g = build_supervision_graph(nb, {.mu = 0.6, .eta = eta}, alpha);
      const double d = graph_density(g, ref.size()), l = oracle_ler(g, ref);
      EXPECT_LE(d, last_density);
      EXPECT_GE(l, last_ler);
      last_density = d;
      last_ler = l;
    }
  }
}

TEST(NbestFile, ParseAndRoundTrip) {
  auto abc = testing::letters(3);
  std::istringstream in("u1\t-0.5\ta b\nu2\t-1\t\nu1\t-2.25\tc\n");
  auto lists = read_nbest(in, *abc, "x.nbest");
  ASSERT_EQ(lists.size(), 2u);
  EXPECT_EQ(lists[0].utt_id, "u1");
  ASSERT_EQ(lists[0].hyps.size(), 2u);
  EXPECT_EQ(lists[0].hyps[0].tokens, (V{1, 2}));
  EXPECT_EQ(lists[0].hyps[1].score, -2.25);
  EXPECT_TRUE(lists[1].hyps[0].tokens.empty());
  std::ostringstream out;
  for (const auto& nb : lists) write_nbest(out, nb, *abc);
  std::istringstream again(out.str());
  auto back = read_nbest(again, *abc);
  ASSERT_EQ(back.size(), 2u);
  EXPECT_EQ(back[0].hyps[1].tokens, lists[0].hyps[1].tokens);
  EXPECT_EQ(back[0].hyps[1].score, lists[0].hyps[1].score);
}

TEST(NbestFile, UnknownTokenNamesTokenAndLine) {
  auto abc = testing::letters(3);
  std::istringstream in("u1\t-0.5\ta b\nu1\t-0.7\ta zz\n");
  try {
    read_nbest(in, *abc, "x.nbest");
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 2u);
    EXPECT_NE(std::string(e.what()).find("zz"), std::string::npos);
    EXPECT_NE(std::string(e.what()).find("x.nbest"), std::string::npos);
  }
  std::istringstream bad("u1 -0.5 a\n");
  EXPECT_THROW(read_nbest(bad, *abc), ParseError);
  std::istringstream nan_score("u1\tnan\ta\n");
  EXPECT_THROW(read_nbest(nan_score, *abc), ParseError);
}

}  // namespace
}  // namespace gtc
