#include <gtest/gtest.h>

#include <cmath>

#include "zenosde/error.hpp"
#include "zenosde/markov.hpp"

using namespace zenosde;

namespace {

template <class F>
ErrorCode code_of(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error thrown";
  return ErrorCode::Io;
}

}  // namespace

TEST(Generator, AcceptsSymmetricAndZero) {
  auto g = validate_generator({{-1, 1}, {1, -1}});
  EXPECT_EQ(g.n_states(), 2u);
  EXPECT_DOUBLE_EQ(g.exit_rate(1), 1.0);
  EXPECT_DOUBLE_EQ(g.jump_probability(1, 2), 1.0);
  auto z = validate_generator({{0, 0}, {0, 0}});
  EXPECT_DOUBLE_EQ(z.jump_probability(1, 2), 0.0);
}

TEST(Generator, RejectsBadMatrices) {
  EXPECT_EQ(code_of([] { validate_generator({{-1, 0.5}, {1, -1}}); }), ErrorCode::RowSumNonZero);
  EXPECT_EQ(code_of([] { validate_generator({{-1, 1}}); }), ErrorCode::NonSquare);
  EXPECT_EQ(code_of([] { validate_generator({{1, -1}, {1, -1}}); }), ErrorCode::NegativeOffDiagonal);
}

TEST(Transition, RejectsNonStochastic) {
  EXPECT_EQ(code_of([] { validate_transition(Matrix{{0.5, 0.6}, {0.5, 0.5}}); }), ErrorCode::NotStochastic);
  EXPECT_EQ(code_of([] { validate_transition(Matrix{{1.5, -0.5}, {0.5, 0.5}}); }), ErrorCode::NotStochastic);
  EXPECT_EQ(code_of([] { validate_transition(Matrix{{1, 0}}); }), ErrorCode::NonSquare);
}

TEST(Transition, PerStepMatricesReuseLast) {
  auto tm = validate_transition(std::vector<Matrix>{{{0, 1}, {1, 0}}, {{1, 0}, {0, 1}}});
  EXPECT_EQ(tm.at_step(1)[0][1], 1.0);
  EXPECT_EQ(tm.at_step(2)[0][0], 1.0);
  EXPECT_EQ(tm.at_step(50)[0][0], 1.0);
}

TEST(Ctmc, ZeroGeneratorHoldsToHorizon) {
  Rng rng(1);
  auto path = sample_ctmc(validate_generator({{0, 0}, {0, 0}}), 1, 10.0, rng);
  EXPECT_TRUE(path.switch_times.empty());
  ASSERT_EQ(path.states.size(), 1u);
  EXPECT_EQ(path.state_at(7.5), 1);
}

TEST(Ctmc, HoldingTimeMeanMatchesRate) {
  auto g = validate_generator({{-1, 1}, {1, -1}});
  Rng rng(42);
  const int n = 100000;
  double sum = 0.0, sum_sq = 0.0;
  for (int i = 0; i < n; ++i) {
    int next = 0;
    double hold = sample_holding(g, 1, rng, next);
    EXPECT_EQ(next, 2);
    sum += hold;
    sum_sq += hold * hold;
  }
  double mean = sum / n;
  double se = std::sqrt((sum_sq / n - mean * mean) / n);
  EXPECT_NEAR(mean, 1.0, 0.02);
  EXPECT_LT(std::abs(mean - 1.0), 3 * se);
}

TEST(Ctmc, PathInvariantsAndRightContinuity) {
  auto g = validate_generator({{-2, 1, 1}, {0.5, -1, 0.5}, {3, 0, -3}});
  Rng rng(9);
  for (int rep = 0; rep < 200; ++rep) {
    auto path = sample_ctmc(g, 2, 5.0, rng);
    ASSERT_EQ(path.states.size(), path.switch_times.size() + 1);
    for (std::size_t i = 0; i < path.switch_times.size(); ++i) {
      if (i > 0) EXPECT_LT(path.switch_times[i - 1], path.switch_times[i]);
      EXPECT_NE(path.states[i], path.states[i + 1]);
      EXPECT_EQ(path.state_at(path.switch_times[i]), path.states[i + 1]);
      EXPECT_LE(path.switch_times[i], 5.0);
    }
    EXPECT_EQ(path.state_at(0.0), 2);
  }
}

TEST(Ctmc, SameSeedSamePath) {
  auto g = validate_generator({{-1, 1}, {1, -1}});
  Rng a(77), b(77);
  auto p1 = sample_ctmc(g, 1, 20.0, a);
  auto p2 = sample_ctmc(g, 1, 20.0, b);
  EXPECT_EQ(p1.switch_times, p2.switch_times);
  EXPECT_EQ(p1.states, p2.states);
}

TEST(Ctmc, RejectsBadStart) {
  auto g = validate_generator({{-1, 1}, {1, -1}});
  Rng rng(1);
  EXPECT_EQ(code_of([&] { sample_ctmc(g, 3, 1.0, rng); }), ErrorCode::IndexOutOfRange);
}

TEST(Dtmc, DeterministicRows) {
  Rng rng(3);
  auto id = validate_transition(Matrix{{1, 0}, {0, 1}});
  EXPECT_EQ(sample_dtmc_step(id, 2, 1, rng), 2);
  auto cyc = validate_transition(Matrix{{0, 1}, {1, 0}});
  for (int i = 0; i < 100; ++i) EXPECT_EQ(sample_dtmc_step(cyc, 1, i + 1, rng), 2);
}

TEST(Dtmc, UniformRowFrequency) {
  auto tm = validate_transition(Matrix{{0.5, 0.5}, {0.5, 0.5}});
  Rng rng(5);
  const int n = 100000;
  int ones = 0;
  for (int i = 0; i < n; ++i) ones += sample_dtmc_step(tm, 1, 1, rng) == 1;
  EXPECT_NEAR(static_cast<double>(ones) / n, 0.5, 0.01);
}

TEST(Dtmc, IndexOutOfRange) {
  auto tm = validate_transition(Matrix{{0.5, 0.5}, {0.5, 0.5}});
  Rng rng(5);
  EXPECT_EQ(code_of([&] { sample_dtmc_step(tm, 3, 1, rng); }), ErrorCode::IndexOutOfRange);
  EXPECT_EQ(code_of([&] { sample_dtmc_step(tm, 0, 1, rng); }), ErrorCode::IndexOutOfRange);
}

TEST(Rng, StreamsDependOnlyOnKey) {
  RngPolicy p{123};
  auto a = p.stream({1, 2});
  auto b = p.stream({1, 3});
  auto c = p.stream({1, 2});
  auto x = a();
  EXPECT_NE(x, b());
  EXPECT_EQ(x, c());
}
