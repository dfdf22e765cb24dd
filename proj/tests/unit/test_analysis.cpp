#include <gtest/gtest.h>

#include <cmath>

#include "helpers.hpp"
#include "zenosde/analysis.hpp"
#include "zenosde/error.hpp"

using namespace zt;

TEST(Bound, TrivialSolution) {
  Simulator sim(frozen(0.0, {0.5, 1.0}), IntegratorConfig{});
  auto r = verify_segment_bound(sim, 1, 50, RngPolicy{1});
  EXPECT_EQ(r.lhs.mean, 0.0);
  EXPECT_EQ(r.rhs, 0.0);
  EXPECT_TRUE(r.pass);
}

TEST(Bound, FrozenSystem) {
  Simulator sim(frozen(3.0, {0.5, 1.0}), IntegratorConfig{});
  auto r = verify_segment_bound(sim, 1, 50, RngPolicy{1});
  EXPECT_EQ(r.lhs.mean, 9.0);
  EXPECT_EQ(r.rhs, 81.0);
  EXPECT_TRUE(r.pass);
}

TEST(Bound, Case2FirstSegment) {
  Simulator sim(case_preset("case2"), IntegratorConfig{});
  auto r = verify_segment_bound(sim, 1, 2000, RngPolicy{1}, 4);
  EXPECT_TRUE(r.pass);
  EXPECT_DOUBLE_EQ(r.t_start, 1.0);
  EXPECT_DOUBLE_EQ(r.t_end, 1.5);
  EXPECT_EQ(r.next_jump_k, 2);
}

TEST(Bound, Errors) {
  auto s = frozen(1.0, {0.5, 1.0});
  s.jump.kind = JumpFamily::Kind::CustomSequence;
  s.jump.maps = {{1, 0.0, 1.0}};
  Simulator sim(s, IntegratorConfig{});
  try {
    verify_segment_bound(sim, 1, 10, RngPolicy{1});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::ConstantsUnavailable);
  }
  Simulator sim2(frozen(1.0, {0.5}), IntegratorConfig{});
  EXPECT_THROW(verify_segment_bound(sim2, 1, 10, RngPolicy{1}), Error);
}

TEST(ProbProbe, FrozenNeverExceeds) {
  std::vector<double> deltas{1.0, 0.5, 0.1};
  auto r = probe_stability_in_probability(frozen(1.0), IntegratorConfig{}, 2.0, 3.0, 50, deltas, RngPolicy{1});
  for (const auto& p : r.points) {
    EXPECT_EQ(p.estimate, 0.0);
  }
  EXPECT_TRUE(r.verdict);
  EXPECT_FALSE(r.note.empty());
}

TEST(ProbProbe, ProbabilitiesInUnitInterval) {
  std::vector<double> deltas{1.0, 0.1, 0.01};
  auto r = probe_stability_in_probability(case_preset("case2"), IntegratorConfig{}, 5.0, 5.0, 300, deltas,
                                          RngPolicy{2}, 4);
  ASSERT_EQ(r.points.size(), 3u);
  EXPECT_DOUBLE_EQ(r.points[0].param, 1.0);
  for (const auto& p : r.points) {
    EXPECT_GE(p.estimate, 0.0);
    EXPECT_LE(p.estimate, 1.0);
  }
}

TEST(MeanSquare, FrozenFlat) {
  std::vector<double> t{0.5, 1.0, 2.0};
  auto r = probe_mean_square(frozen(3.0), IntegratorConfig{}, t, 20, RngPolicy{1});
  for (const auto& p : r.points) EXPECT_EQ(p.estimate, 9.0);
  EXPECT_FALSE(r.verdict);
}

TEST(MeanSquare, GbmClosedForm) {
  std::vector<double> t{0.25, 0.5, 1.0};
  auto r = probe_mean_square(linear(-1.0, 0.3, 3.0), IntegratorConfig{}, t, 20000, RngPolicy{3}, 4);
  for (const auto& p : r.points) {
    double exact = 9.0 * std::exp(-1.91 * p.param);
    EXPECT_LT(std::abs(p.estimate - exact), 3 * p.std_error + 1e-3 * exact) << p.param;
  }
  EXPECT_TRUE(r.verdict);
}

TEST(MeanSquare, RejectsUnsortedGrid) {
  std::vector<double> t{1.0, 0.5};
  EXPECT_THROW(probe_mean_square(frozen(3.0), IntegratorConfig{}, t, 5, RngPolicy{1}), Error);
}

TEST(Supermartingale, ConstantFunctionExact) {
  SmoothFunction f;
  f.value = [](double, int, int, std::span<const double>) { return 1.0; };
  Simulator sim(case_preset("case2"), IntegratorConfig{});
  auto r = probe_supermartingale(sim, LyapunovSpec::custom(f), 1, 3, 20, 5, RngPolicy{1}, 2);
  for (const auto& row : r.rows) EXPECT_EQ(row.diff.mean, 0.0);
  EXPECT_TRUE(r.verdict);
}

TEST(Supermartingale, FrozenQuadratic) {
  Simulator sim(frozen(2.0, {0.2, 0.4, 0.6, 0.8}), IntegratorConfig{});
  auto r = probe_supermartingale(sim, LyapunovSpec::quadratic(1.0), 1, 3, 10, 4, RngPolicy{1});
  for (const auto& row : r.rows) {
    EXPECT_EQ(row.v_now.mean, 4.0);
    EXPECT_EQ(row.v_next.mean, 4.0);
  }
  EXPECT_TRUE(r.verdict);
}

TEST(Supermartingale, RangeChecked) {
  Simulator sim(frozen(2.0, {0.2, 0.4}), IntegratorConfig{});
  EXPECT_THROW(probe_supermartingale(sim, LyapunovSpec::quadratic(1.0), 1, 2, 10, 4, RngPolicy{1}), Error);
}

TEST(Blowup, IntroGrows) {
  std::vector<long> ks{5, 10, 20};
  auto r = detect_blowup(case_preset("intro"), IntegratorConfig{}, ks, 1.0, 5, RngPolicy{1});
  ASSERT_EQ(r.rows.size(), 3u);
  EXPECT_TRUE(r.growth);
  EXPECT_LT(r.rows[0].median_sup, r.rows[1].median_sup);
  EXPECT_LT(r.rows[1].median_sup, r.rows[2].median_sup);
  EXPECT_TRUE(std::isfinite(r.rows[2].median_sup));
  EXPECT_EQ(r.rows[2].exploded_fraction, 1.0);
  EXPECT_EQ(r.rows[0].exploded_fraction, 0.0);
}

TEST(Blowup, ZeroJumpFlat) {
  auto s = case_preset("intro");
  s.jump.kind = JumpFamily::Kind::Zero;
  std::vector<long> ks{5, 10, 20};
  auto r = detect_blowup(s, IntegratorConfig{}, ks, 1.0, 3, RngPolicy{1});
  EXPECT_FALSE(r.growth);
  for (const auto& row : r.rows) EXPECT_NEAR(row.median_sup, 10.0, 1e-12);
}

TEST(Blowup, NeedsAccumulatingSchedule) {
  std::vector<long> ks{5};
  EXPECT_THROW(detect_blowup(frozen(1.0, {0.5}), IntegratorConfig{}, ks, 1.0, 3, RngPolicy{1}), Error);
}

TEST(Analysis, ThreadCountDoesNotChangeResults) {
  Simulator sim(case_preset("case2"), IntegratorConfig{});
  auto a = verify_segment_bound(sim, 2, 200, RngPolicy{9}, 1);
  auto b = verify_segment_bound(sim, 2, 200, RngPolicy{9}, 6);
  EXPECT_EQ(a.lhs.mean, b.lhs.mean);
  EXPECT_EQ(a.start_mean_sq, b.start_mean_sq);
  auto v = LyapunovSpec::power(1.0, 0.025);
  auto s1 = probe_supermartingale(sim, v, 1, 2, 30, 5, RngPolicy{9}, 1);
  auto s2 = probe_supermartingale(sim, v, 1, 2, 30, 5, RngPolicy{9}, 3);
  for (std::size_t i = 0; i < s1.rows.size(); ++i) EXPECT_EQ(s1.rows[i].diff.mean, s2.rows[i].diff.mean);
}
