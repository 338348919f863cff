#include <gtest/gtest.h>

#include <random>

#include "cfmix/cocycle_engine.hpp"
#include "cfmix/module_factory.hpp"

using namespace cfmix;

namespace {

ModuleAction z7_action() {
  const auto z7 = FiniteAbelianGroup::cyclic(7);
  return ModuleAction::cyclic(z7, GroupAutomorphism(z7, {{2}}), 3);
}

CFSchedule single(const CFStage& st, std::int64_t h0) {
  CFSchedule s;
  s.h0 = h0;
  s.stages.push_back(st);
  return s;
}

}  // namespace

TEST(StageMaps, TranslateUnrolled) {
  const auto a = FiniteAbelianGroup::cyclic(11);
  const auto m = stage_maps(StageLabel::translate({1}), section3_cut(1, 3, 5), a, 1);
  EXPECT_EQ(m.alpha, (std::vector<Element>{{0}, {10}, {9}, {9}, {9}}));
  EXPECT_EQ(m.beta, (std::vector<std::int64_t>{0, 0, 0, 0, 0}));
}

TEST(StageMaps, DelayedUnrolled) {
  const auto a = FiniteAbelianGroup::cyclic(11);
  const auto m = stage_maps(StageLabel::delayed({1}), section4_cut(1, 2, 6), a, 1);
  EXPECT_EQ(m.alpha, (std::vector<Element>{{0}, {0}, {10}, {9}, {9}, {9}}));
  EXPECT_THROW(stage_maps(StageLabel::delayed({1}), section3_cut(1, 2, 6), a, 1), Error);
}

TEST(StageMaps, RotateShapes) {
  const auto a = FiniteAbelianGroup::cyclic(5);
  const auto m = stage_maps(StageLabel::rotate(2), section3_cut(3, 1, 4), a, 6);
  EXPECT_EQ(m.beta, (std::vector<std::int64_t>{0, 0, 0, 0}));
  const auto m2 = stage_maps(StageLabel::rotate(2), section3_cut(3, 3, 5), a, 6);
  EXPECT_EQ(m2.beta, (std::vector<std::int64_t>{0, 4, 2, 2, 2}));
  EXPECT_THROW(stage_maps(StageLabel::rotate(6), section3_cut(3, 3, 5), a, 6), Error);
  EXPECT_THROW(stage_maps(StageLabel::rotate(1), staircase_cut(3, 5), a, 6), Error);
  const auto p = stage_maps(StageLabel::plain(), staircase_cut(3, 5), a, 6);
  EXPECT_EQ(p.beta, std::vector<std::int64_t>(5, 0));
}

TEST(Labels, RoundRobin) {
  CFSchedule s;
  s.h0 = 1;
  for (int n = 0; n < 6; ++n) s.stages.push_back(section4_cut(s.heights().back(), 1, 4));
  const LabelTargets one_a{{{3}}, {}};
  for (const auto& l : schedule_labels(s, one_a, Mode::Section3)) EXPECT_EQ(l, StageLabel::translate({3}));
  const LabelTargets ak{{{3}}, {1}};
  const auto alt = schedule_labels(s, ak, Mode::Section3);
  for (std::size_t n = 0; n < alt.size(); ++n)
    EXPECT_EQ(alt[n].kind, n % 2 == 0 ? LabelKind::RigidTranslate : LabelKind::RigidRotate);
  const auto three = schedule_labels(s, ak, Mode::Section4);
  const std::vector<LabelKind> cyc{LabelKind::RigidTranslate, LabelKind::DelayedTranslate, LabelKind::RigidRotate};
  for (std::size_t n = 0; n < three.size(); ++n) EXPECT_EQ(three[n].kind, cyc[n % 3]);
  EXPECT_THROW(schedule_labels(s, LabelTargets{}, Mode::Section3), Error);
  s.stages.push_back(staircase_cut(s.heights().back(), 3));
  EXPECT_EQ(schedule_labels(s, ak, Mode::Section3).back(), StageLabel::plain());
}

TEST(PiNormalize, WordsAndSpacers) {
  const auto s = single(custom_stage(1, {0, 2, 5}), 1);
  const auto w0 = pi_normalize(0, s);
  EXPECT_EQ(w0.least_n, 0u);
  EXPECT_EQ(w0.idx, (std::vector<std::int32_t>{0}));
  const auto w5 = pi_normalize(5, s);
  EXPECT_EQ(w5.idx, (std::vector<std::int32_t>{2}));
  EXPECT_FALSE(w5.spacer());
  const auto w3 = pi_normalize(3, s);
  EXPECT_TRUE(w3.spacer());
  EXPECT_EQ(w3.least_n, 1u);
  // F_0 + C_1 = {0, 2, 5}: every other level is a spacer
  for (std::int64_t l = 0; l < 6; ++l) EXPECT_EQ(pi_normalize(l, s).spacer(), !(l == 0 || l == 2 || l == 5)) << l;
  EXPECT_THROW(pi_normalize(6, s), Error);
}

TEST(PiNormalize, LevelRoundTrip) {
  CFSchedule s;
  s.h0 = 2;
  s.stages.push_back(section3_cut(2, 2, 4));
  s.stages.push_back(section4_cut(s.heights().back(), 2, 5));
  s.stages.push_back(staircase_cut(s.heights().back(), 3));
  const TowerGeometry g(s, s.depth());
  for (std::int64_t l = 0; l < g.top(); ++l) EXPECT_EQ(g.level_of(g.word(l)), l);
  // a cut value at the last stage decomposes as (0, ..., 0, index)
  const auto w = g.word(s.stages[2].cuts[2]);
  EXPECT_EQ(w.idx, (std::vector<std::int32_t>{0, 0, 2}));
}

TEST(Semidirect, GroupLaws) {
  const auto act = z7_action();
  const Semidirect g(&act);
  std::vector<KA> all;
  for (std::int64_t k = 0; k < 3; ++k)
    for (std::int64_t a = 0; a < 7; ++a) all.push_back({k, {a}});
  for (const auto& x : all) {
    EXPECT_EQ(g.mul(x, g.inv(x)), g.identity());
    EXPECT_EQ(g.mul(g.inv(x), x), g.identity());
    for (const auto& y : all)
      for (const auto& z : {all[4], all[10], all[20]}) EXPECT_EQ(g.mul(g.mul(x, y), z), g.mul(x, g.mul(y, z)));
  }
  // (k, a)(k', a') = (k + k', a + 2^k a')
  EXPECT_EQ(g.mul({1, {3}}, {2, {1}}), (KA{0, {5}}));
}

TEST(Cocycle, DiagonalAndAbelianDegeneration) {
  const auto act = z7_action();
  CFSchedule s;
  s.h0 = 1;
  s.stages.push_back(section3_cut(1, 2, 4));
  s.stages.push_back(section3_cut(s.heights().back(), 3, 5));
  const CocycleModel model(s, {StageLabel::translate({1}), StageLabel::translate({3})}, act);
  const TowerGeometry geom(s, 2);
  for (std::int64_t l = 0; l < geom.top(); ++l)
    for (std::int64_t l2 = 0; l2 < geom.top(); ++l2) {
      const auto x = geom.word(l), y = geom.word(l2);
      const KA v = evaluate_cocycle(x, y, model);
      if (l == l2) EXPECT_EQ(v, model.group().identity());
      EXPECT_EQ(v.k, 0);
      std::int64_t expect = 0;
      for (std::size_t j = 0; j < 2; ++j) {
        if (j >= x.least_n) expect += model.maps()[j].alpha[static_cast<std::size_t>(x.idx[j])][0];
        if (j >= y.least_n) expect -= model.maps()[j].alpha[static_cast<std::size_t>(y.idx[j])][0];
      }
      EXPECT_EQ(v.a[0], floor_mod(expect, 7));
    }
}

TEST(Cocycle, DepthTwoHandExpansion) {
  // stage 1 rotates by k = 1, stage 2 translates by a = 1; Gamma = (b1 + b2, a1 + 2^{b1} a2)
  const auto act = z7_action();
  CFSchedule s;
  s.h0 = 1;
  s.stages.push_back(section3_cut(1, 2, 3));
  s.stages.push_back(section3_cut(s.heights().back(), 3, 4));
  const CocycleModel model(s, {StageLabel::rotate(1), StageLabel::translate({1})}, act);
  const TowerGeometry geom(s, 2);
  auto gamma = [&](const CoordinateWord& w) {
    std::int64_t b1 = 0, a1 = 0, b2 = 0, a2 = 0;
    if (w.least_n == 0) {
      const auto i = w.idx[0];
      b1 = -std::min<std::int64_t>(i, 1);
    }
    if (w.least_n <= 1) {
      const auto i = w.idx[1];
      a2 = -std::min<std::int64_t>(i, 2);
    }
    std::int64_t mult = 1;
    for (std::int64_t t = 0; t < floor_mod(b1, 3); ++t) mult *= 2;
    return std::pair<std::int64_t, std::int64_t>{floor_mod(b1 + b2, 3), floor_mod(a1 + mult * a2, 7)};
  };
  for (std::int64_t l = 0; l < geom.top(); ++l)
    for (std::int64_t l2 = 0; l2 < geom.top(); ++l2) {
      const auto [kx, ax] = gamma(geom.word(l));
      const auto [ky, ay] = gamma(geom.word(l2));
      const std::int64_t k = floor_mod(kx - ky, 3);
      std::int64_t mult = 1;
      for (std::int64_t t = 0; t < k; ++t) mult *= 2;
      const KA v = evaluate_cocycle(geom.word(l), geom.word(l2), model);
      EXPECT_EQ(v.k, k);
      EXPECT_EQ(v.a[0], floor_mod(ax - mult * ay, 7));
    }
}

TEST(Cocycle, IdentityOnRandomTriples) {
  const auto t = assemble_lemma42({1, 2});
  const auto a_act = dual_action(t.action);
  const auto sched = concat_delta_pairs({{0.5, 3}, {0.25, 2}});
  const auto labels = schedule_labels(sched, all_targets(a_act.module(), t.k_order), Mode::Section3);
  const CocycleModel model(sched, labels, a_act);
  const TowerGeometry geom(sched, sched.depth());
  std::mt19937_64 rng(7);
  std::uniform_int_distribution<std::int64_t> pick(0, geom.top() - 1);
  for (int i = 0; i < 10000; ++i) {
    const auto x = geom.word(pick(rng)), y = geom.word(pick(rng)), z = geom.word(pick(rng));
    ASSERT_EQ(evaluate_cocycle(x, z, model), model.group().mul(evaluate_cocycle(x, y, model), evaluate_cocycle(y, z, model)));
  }
  EXPECT_THROW(evaluate_cocycle(geom.word(0), TowerGeometry(sched, 2).word(0), model), Error);
}

TEST(Transitions, SingleRotateStage) {
  // h0 = 2, cuts {0, 2, 4}: copies at 0-1, 2-3, 4-5; beta = (0, -k, -k), copy jumps carry beta_i - beta_{i+1}
  const auto act = z7_action();
  const auto s = single(section3_cut(2, 2, 3), 2);
  const CocycleModel model(s, {StageLabel::rotate(1)}, act);
  const LevelTable table(model, 1, 1000);
  std::vector<std::int64_t> ks;
  for (const auto& t : transition_values(table)) ks.push_back(t.k);
  EXPECT_EQ(ks, (std::vector<std::int64_t>{0, 1, 0, 0, 0, 2}));
}

TEST(Transitions, PlainLabelsAreTrivialAndCycleTelescopes) {
  const auto act = z7_action();
  CFSchedule s;
  s.h0 = 1;
  s.stages.push_back(staircase_cut(1, 3));
  s.stages.push_back(staircase_cut(s.heights().back(), 4));
  const CocycleModel plain(s, {StageLabel::plain(), StageLabel::plain()}, act);
  const LevelTable t1(plain, 2, 1000);
  for (const auto& v : transition_values(t1)) EXPECT_EQ(v, plain.group().identity());

  CFSchedule s2;
  s2.h0 = 1;
  s2.stages.push_back(section4_cut(1, 2, 5));
  s2.stages.push_back(section3_cut(s2.heights().back(), 2, 4));
  const CocycleModel m(s2, {StageLabel::delayed({3}), StageLabel::rotate(2)}, act);
  const LevelTable t2(m, 2, 1000);
  KA total = m.group().identity();
  for (const auto& v : transition_values(t2)) total = m.group().mul(total, v);
  EXPECT_EQ(total, m.group().identity());
  // the wraparound edge is gamma(top, bottom)
  const auto& g = t2.geometry();
  EXPECT_EQ(t2.transition(g.top() - 1), evaluate_cocycle(g.word(g.top() - 1), g.word(0), m));
}

TEST(LevelTable, RespectsCap) {
  const auto act = z7_action();
  const auto s = single(section3_cut(2, 2, 3), 2);
  const CocycleModel model(s, {StageLabel::rotate(1)}, act);
  EXPECT_THROW(LevelTable(model, 1, 5), Error);
}
