// tests/test_oracle.cpp

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
#include <numeric>
#include <vector>

#include "gtc/gtc_loss.hpp"
#include "gtc/oracle.hpp"
#include "test_util.hpp"

namespace gtc {
namespace {

using testing::Rng;

PosteriorMatrix rows(std::vector<std::vector<double>> r) {
  Matrix m(r.size(), r[0].size());
  for (std::size_t t = 0; t < r.size(); ++t)
    for (std::size_t k = 0; k < r[t].size(); ++k) m(t, k) = r[t][k];
  return PosteriorMatrix(m);
}

TEST(BruteForce, SinglePathProduct) {
  GraphBuilder b(testing::letters(2));
  const int a = b.add_node(1), c = b.add_node(2);
  b.add_edge(GraphBuilder::kStart, a, 0.5);
  b.add_edge(a, c, 0.8);
  b.add_edge(c, GraphBuilder::kEnd, 0.9);
  auto post = rows({{0.1, 0.6, 0.3}, {0.2, 0.2, 0.6}});
  auto r = oracle::brute_force_pG(b.build(), post);
  EXPECT_NEAR(static_cast<double>(r.value), 0.5 * 0.6 * 0.8 * 0.6 * 0.9, 1e-16);
  EXPECT_EQ(r.consumed, 1u);
}

TEST(BruteForce, EmptyUnfoldingIsZero) {
  GtcGraph g = ctc_linear_graph(std::vector<int>{1, 2, 1}, testing::letters(2));
  Rng rng(1);
  auto r = oracle::brute_force_pG(g, testing::random_posteriors(rng, 2, 3));
  EXPECT_EQ(r.value, 0.0L);
  EXPECT_EQ(r.consumed, 0u);
}

TEST(BruteForce, ConsumedMatchesWalkCount) {
  Rng rng(2);
  for (int trial = 0; trial < 30; ++trial) {
    GtcGraph g = testing::random_graph(rng, testing::uniform_int(rng, 1, 6), 3);
    const int T = testing::uniform_int(rng, 1, 7);
    auto r = oracle::brute_force_pG(g, testing::random_posteriors(rng, T, 3));
    EXPECT_EQ(static_cast<long double>(r.consumed), oracle::walk_count(g, T));
  }
}

TEST(BruteForce, BudgetExceededIsReported) {
  GtcGraph g = ctc_linear_graph(std::vector<int>{1, 2}, testing::letters(2));
  Rng rng(3);
  auto post = testing::random_posteriors(rng, 10, 3);
  EXPECT_THROW(oracle::brute_force_pG(g, post, {.max_paths = 5, .max_strings = 5}), BudgetExceeded);
  try {
    oracle::brute_force_pG(g, post, {.max_paths = 5, .max_strings = 5});
  } catch (const BudgetExceeded& e) {
    EXPECT_NE(std::string(e.what()).find("instance too large for oracle"), std::string::npos);
  }
}

TEST(ReferenceCtc, SingleFrame) {
  auto post = rows({{0.25, 0.75}});
  EXPECT_DOUBLE_EQ(oracle::reference_ctc(std::vector<int>{1}, post), -std::log(0.75));
}

TEST(ReferenceCtc, TwoFramesEnumerated) {
  auto post = rows({{0.2, 0.5, 0.3}, {0.6, 0.1, 0.3}});
  const double y1a = 0.5, y2a = 0.1, y1b = 0.2, y2b = 0.6;
  const double want = -std::log(y1a * y2a + y1b * y2a + y1a * y2b);
  EXPECT_NEAR(oracle::reference_ctc(std::vector<int>{1}, post), want, 1e-15);
}

TEST(ReferenceCtc, InfeasibleAndEmpty) {
  auto post = rows({{0.2, 0.8}, {0.5, 0.5}});
  EXPECT_THROW(oracle::reference_ctc(std::vector<int>{1, 1}, post), InfeasibleError);
  EXPECT_THROW(oracle::reference_ctc(std::vector<int>{}, post), Error);
}

TEST(ReferenceCtc, AgreesWithAlignmentEnumeration) {
  Rng rng(4);
  for (int trial = 0; trial < 20; ++trial) {
    const int T = testing::uniform_int(rng, 1, 6);
    auto post = testing::random_posteriors(rng, T, 3);
    for (const auto& [s, p] : oracle::exhaustive_ctc_strings(post)) {
      if (s.empty()) continue;
      EXPECT_NEAR(oracle::reference_ctc(s, post), -std::log(static_cast<double>(p)), 1e-12);
    }
  }
}

TEST(FiniteDiff, StepRange) {
  LogitMatrix u(Matrix(1, 2));
  auto f = [](const LogitMatrix&) { return 0.0; };
  EXPECT_THROW(oracle::finite_diff_grad(u, 1e-8, f), Error);
  EXPECT_THROW(oracle::finite_diff_grad(u, 2e-3, f), Error);
  EXPECT_NO_THROW(oracle::finite_diff_grad(u, 1e-7, f));
  EXPECT_NO_THROW(oracle::finite_diff_grad(u, 1e-3, f));
}

TEST(FiniteDiff, InfeasibleInstance) {
  GtcGraph g = ctc_linear_graph(std::vector<int>{1, 1}, testing::letters(1));
  Rng rng(5);
  LogitMatrix u(testing::random_logits(rng, 2, 2));
  EXPECT_THROW(oracle::finite_diff_grad(g, u, 1e-5, [](const GtcGraph& gg, const PosteriorMatrix& p) {
    return loss(gg, p);
  }), InfeasibleError);
}

TEST(FiniteDiff, AbsentSymbolComponentIsPosterior) {
  GtcGraph g = ctc_linear_graph(std::vector<int>{1}, testing::letters(3));
  Rng rng(6);
  LogitMatrix u(testing::random_logits(rng, 3, 4));
  auto post = u.softmax();
  Matrix fd = oracle::finite_diff_grad(g, u, 1e-5, [](const GtcGraph& gg, const PosteriorMatrix& p) {
    return loss(gg, p);
  });
  for (std::size_t t = 0; t < 3; ++t)
    for (std::size_t k : {2u, 3u}) EXPECT_NEAR(fd(t, k), post(t, k), 1e-5);
}

TEST(FiniteDiff, CentralDifferenceIsSecondOrder) {
  // Halving the step cuts the truncation error by about four.
  Rng rng(7);
  GtcGraph g = testing::random_graph(rng, 5, 3, 0.9, 0.6);
  LogitMatrix u(testing::random_logits(rng, 4, 3));
  auto post = u.softmax();
  ASSERT_NE(loss(g, post), kInfinity);
  Matrix analytic = gradient(g, post);
  auto lf = [](const GtcGraph& gg, const PosteriorMatrix& p) { return loss(gg, p); };
  auto max_err = [&](double step) {
    Matrix fd = oracle::finite_diff_grad(g, u, step, lf);
    double e = 0.0;
    for (std::size_t i = 0; i < fd.data().size(); ++i) e = std::max(e, std::abs(fd.data()[i] - analytic.data()[i]));
    return e;
  };
  const double coarse = max_err(1e-3), fine = max_err(5e-4);
  EXPECT_GT(coarse / fine, 3.0);
  EXPECT_LT(coarse / fine, 5.0);
}

TEST(Enumerate, StringsLogAndTropical) {
  auto ab = testing::letters(2);
  Wfst f;
  f.input_symbols = f.output_symbols = ab;
  for (int i = 0; i < 3; ++i) f.add_state();
  f.set_start(0);
  f.add_arc(0, 1, -std::log(0.25), 1);
  f.add_arc(0, 1, -std::log(0.5), 1);
  f.add_arc(0, kEpsilon, -std::log(0.25), 2);
  f.add_arc(1, 2, 0.0, 2);
  f.set_final(2, 0.0);
  f.set_final(1, -std::log(0.5));
  auto lg = oracle::enumerate_strings(f, true);
  EXPECT_EQ(lg.consumed, 5u);
  EXPECT_NEAR(lg.value.at({1}), -std::log(0.375), 1e-15);
  EXPECT_NEAR(lg.value.at({1, 2}), -std::log(0.75), 1e-15);
  EXPECT_NEAR(lg.value.at({}), -std::log(0.25), 1e-15);
  auto tr = oracle::enumerate_strings(f, false);
  EXPECT_NEAR(tr.value.at({1, 2}), -std::log(0.5), 1e-15);
  EXPECT_THROW(oracle::enumerate_strings(f, true, {.max_paths = 2, .max_strings = 10}), BudgetExceeded);
  EXPECT_THROW(oracle::enumerate_strings(f, true, {.max_paths = 10, .max_strings = 2}), BudgetExceeded);
}

TEST(Enumerate, SausageTotalsAndEpsilons) {
  ConfusionNetwork cn;
  cn.bins = {{{1, 1.0}}, {{2, 0.5}, {kEpsilon, 0.5}}, {{2, 0.2}, {kEpsilon, 0.8}}};
  auto r = oracle::enumerate_sausage(cn);
  EXPECT_EQ(r.consumed, 4u);
  EXPECT_NEAR(static_cast<double>(r.value.at({1, 2})), 0.5, 1e-18);
  EXPECT_NEAR(static_cast<double>(r.value.at({1})), 0.4, 1e-18);
  EXPECT_NEAR(static_cast<double>(r.value.at({1, 2, 2})), 0.1, 1e-18);
}

TEST(Enumerate, ExhaustiveCtcStringsSumToOne) {
  Rng rng(8);
  auto post = testing::random_posteriors(rng, 4, 3);
  auto all = oracle::exhaustive_ctc_strings(post);
  long double total = 0.0L;
  for (std::size_t i = 0; i < all.size(); ++i) {
    total += all[i].second;
    if (i) {
      EXPECT_GE(all[i - 1].second, all[i].second);
    }
  }
  EXPECT_NEAR(static_cast<double>(total), 1.0, 1e-15);
  EXPECT_THROW(oracle::exhaustive_ctc_strings(testing::random_posteriors(rng, 20, 3)), BudgetExceeded);
}

TEST(Levenshtein, SmallCases) {
  using V = std::vector<int>;
  EXPECT_EQ(oracle::levenshtein(V{1, 2}, V{1, 3}), 1u);
  EXPECT_EQ(oracle::levenshtein(V{}, V{1, 2, 3}), 3u);
  EXPECT_EQ(oracle::levenshtein(V{1, 2, 3}, V{2, 3, 1}), 2u);
  EXPECT_EQ(oracle::ctc_collapse(V{0, 1, 1, 0, 1, 2, 2, 0}), (V{1, 1, 2}));
}

}  // namespace
}  // namespace gtc
