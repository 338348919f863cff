#include <gtest/gtest.h>

#include <cmath>

#include "cfmix/cf_builder.hpp"

using namespace cfmix;

namespace {

// c(0)=0; c(i)=c(i-1)+h for 0<i<i_n; c(i)=c(i-1)+h+(i-i_n) afterwards
std::vector<std::int64_t> rec3(std::int64_t h, std::int64_t in, std::int64_t r) {
  std::vector<std::int64_t> c{0};
  for (std::int64_t i = 1; i < r; ++i) c.push_back(c.back() + h + (i < in ? 0 : i - in));
  return c;
}

std::vector<std::int64_t> rec4(std::int64_t h, std::int64_t in, std::int64_t r) {
  std::vector<std::int64_t> c{0};
  for (std::int64_t i = 1; i < r; ++i) c.push_back(c.back() + h + (i < in ? 0 : i < 2 * in ? 1 : i - 2 * in));
  return c;
}

}  // namespace

TEST(RigidStaircaseCut, MatchesRecursion) {
  EXPECT_EQ(section3_cut(5, 2, 4).cuts, (std::vector<std::int64_t>{0, 5, 10, 16}));
  EXPECT_EQ(section3_cut(1, 1, 3).cuts, (std::vector<std::int64_t>{0, 1, 3}));
  for (std::int64_t h = 1; h < 6; ++h)
    for (std::int64_t r = 2; r < 9; ++r)
      for (std::int64_t i = 1; i <= r; ++i) EXPECT_EQ(section3_cut(h, i, r).cuts, rec3(h, i, r));
}

TEST(RigidStaircaseCut, FullRigidIsArithmetic) {
  const auto s = section3_cut(7, 5, 5);
  EXPECT_EQ(s.cuts, (std::vector<std::int64_t>{0, 7, 14, 21, 28}));
  EXPECT_THROW(section3_cut(3, 0, 4), Error);
  EXPECT_THROW(section3_cut(3, 5, 4), Error);
  EXPECT_THROW(section3_cut(3, 1, 1), Error);
}

TEST(DelayedStaircaseCut, MatchesRecursion) {
  EXPECT_EQ(section4_cut(5, 2, 6).cuts, (std::vector<std::int64_t>{0, 5, 11, 17, 22, 28}));
  EXPECT_EQ(section4_cut(1, 1, 4).cuts, (std::vector<std::int64_t>{0, 2, 3, 5}));
  for (std::int64_t h = 1; h < 5; ++h)
    for (std::int64_t r = 2; r < 10; ++r)
      for (std::int64_t i = 1; 2 * i <= r; ++i) EXPECT_EQ(section4_cut(h, i, r).cuts, rec4(h, i, r));
  // r = 2i: no staircase regime
  const auto s = section4_cut(3, 2, 4);
  EXPECT_EQ(std::count(s.regimes.begin(), s.regimes.end(), Regime::Staircase), 0);
  EXPECT_THROW(section4_cut(5, 4, 7), Error);
}

TEST(StaircaseCut, ClosedForm) {
  const auto s = staircase_cut(4, 5);
  for (std::int64_t i = 0; i < 5; ++i) EXPECT_EQ(s.cuts[static_cast<std::size_t>(i)], 4 * i + i * (i - 1) / 2);
  EXPECT_EQ(s.next_height(), 4 + 16 + 6);
  EXPECT_THROW(staircase_cut(1, 1), Error);
}

TEST(Schedule, HeightsChain) {
  CFSchedule s;
  s.h0 = 1;
  s.stages.push_back(staircase_cut(1, 3));
  s.stages.push_back(staircase_cut(s.heights().back(), 4));
  // 1 + max{0,1,3} = 4, 4 + max{0,4,9,15} = 19
  EXPECT_EQ(s.heights(), (std::vector<std::int64_t>{1, 4, 19}));
}

TEST(ConcatDeltaPairs, RatiosTrackDelta) {
  std::vector<DeltaBlock> blocks;
  for (int j = 1; j <= 4; ++j) blocks.push_back({std::pow(2.0, -j), 2, CutShape::Section3, {}});
  const auto s = concat_delta_pairs(blocks, 1, 2);
  ASSERT_EQ(s.depth(), 8u);
  // block 1: r = 2, 3; block j >= 2: r = j, j + 1
  const std::vector<std::int64_t> expect_r{2, 3, 2, 3, 3, 4, 4, 5};
  std::int64_t h = 1;
  for (std::size_t n = 0; n < s.depth(); ++n) {
    const auto& st = s.stages[n];
    EXPECT_EQ(st.r_n, expect_r[n]);
    EXPECT_EQ(st.h, h);
    EXPECT_EQ(st.i_n, std::max<std::int64_t>(1, std::lround(st.delta * static_cast<double>(st.r_n))));
    EXPECT_LE(std::abs(static_cast<double>(st.i_n) / st.r_n - st.delta), 1.0 / st.r_n);
    h = st.next_height();
  }
  EXPECT_TRUE(validate(s).ok());
}

TEST(ConcatDeltaPairs, ExplicitCutCountsAndErrors) {
  const auto s = concat_delta_pairs({{0.5, 2, CutShape::Section3, {4, 64}}, {0.1, 1, CutShape::Section3, {10}}});
  EXPECT_EQ(s.stages[1].r_n, 64);
  EXPECT_EQ(s.stages[1].i_n, 32);
  EXPECT_EQ(s.stages[2].i_n, 1);
  EXPECT_THROW(concat_delta_pairs({{0.25, 1}, {0.5, 1}}), Error);
  EXPECT_THROW(concat_delta_pairs({{1.0, 1}}), Error);
  EXPECT_THROW(concat_delta_pairs({{0.5, 2, CutShape::Section3, {4}}}), Error);
  EXPECT_THROW(concat_delta_pairs({}), Error);
}

TEST(ConcatDeltaPairs, DelayedShapeClampsI) {
  const auto s = concat_delta_pairs({{0.9, 1, CutShape::Section4, {6}}});
  EXPECT_EQ(s.stages[0].i_n, 3);
  EXPECT_EQ(s.stages[0].cuts, rec4(1, 3, 6));
}

TEST(Validate, StaircaseRatioBoundedAndAdamsDecreasing) {
  // r_n = n for n >= 2; h_{n+1} = h_n + (r-1) h_n + (r-1)(r-2)/2
  CFSchedule s;
  s.h0 = 1;
  std::vector<std::int64_t> h{1};
  for (std::int64_t r = 2; r <= 12; ++r) {
    s.stages.push_back(staircase_cut(h.back(), r));
    h.push_back(h.back() * r + (r - 1) * (r - 2) / 2);
  }
  EXPECT_EQ(s.heights(), h);
  const auto rep = validate(s);
  EXPECT_TRUE(rep.ok());
  EXPECT_TRUE(rep.ratio_bounded);
  EXPECT_TRUE(rep.adams_decreasing_beyond);
  for (std::size_t n = 0; n < rep.stages.size(); ++n) {
    const double run = static_cast<double>(n + 1);  // r - 1
    EXPECT_DOUBLE_EQ(rep.stages[n].adams, run * run / static_cast<double>(h[n]));
  }
  // measure ratio h_{n+1} / prod #C never exceeds 2 here
  for (const auto& c : rep.stages) EXPECT_LT(c.ratio, 2.0);
}

TEST(Validate, DetectsBrokenStages) {
  CFSchedule s;
  s.h0 = 3;
  s.stages.push_back(custom_stage(3, {0, 2, 5}));  // gap 2 < h: copies overlap
  auto rep = validate(s);
  EXPECT_FALSE(rep.ok());
  s.stages[0] = custom_stage(3, {1, 5});
  EXPECT_FALSE(validate(s).ok());
  s.stages[0] = custom_stage(3, {0, 3, 7});
  EXPECT_TRUE(validate(s).ok());
  EXPECT_NEAR(validate(s).spacer_fraction, 1.0 - 9.0 / 10.0, 1e-12);
}
