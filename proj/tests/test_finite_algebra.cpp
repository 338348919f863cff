#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "cfmix/finite_algebra.hpp"

using namespace cfmix;

namespace {

// chi_t(b) = exp(2 pi i sum_j t_j b_j / n_j), evaluated in floating point
std::complex<double> pairing(const FiniteAbelianGroup& g, const Element& t, const Element& b) {
  double x = 0.0;
  for (std::size_t j = 0; j < g.rank(); ++j) x += static_cast<double>(t[j] * b[j]) / static_cast<double>(g.order(j));
  return std::polar(1.0, 2.0 * std::numbers::pi * x);
}

std::int64_t expect_kind(ErrorKind kind, auto&& f) {
  try {
    f();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), kind) << e.what();
    return 1;
  }
  ADD_FAILURE() << "no error thrown";
  return 0;
}

}  // namespace

TEST(FiniteAbelianGroup, ArithmeticAndIndexing) {
  const FiniteAbelianGroup g({2, 3, 4});
  EXPECT_EQ(g.size(), 24);
  EXPECT_EQ(g.exponent(), 12);
  EXPECT_EQ(g.add({1, 2, 3}, {1, 2, 3}), (Element{0, 1, 2}));
  EXPECT_EQ(g.neg({1, 1, 1}), (Element{1, 2, 3}));
  EXPECT_EQ(g.scale(5, {1, 1, 1}), (Element{1, 2, 1}));
  EXPECT_EQ(g.element_at(1), (Element{1, 0, 0}));
  EXPECT_EQ(g.element_at(2), (Element{0, 1, 0}));
  for (std::int64_t i = 0; i < g.size(); ++i) EXPECT_EQ(g.index_of(g.element_at(i)), i);
  EXPECT_FALSE(g.contains({2, 0, 0}));
  expect_kind(ErrorKind::InvalidElement, [&] { g.require({0, 3, 0}); });
  expect_kind(ErrorKind::SizeLimit, [&] { FiniteAbelianGroup({1000, 1000, 1000}).elements(); });
}

TEST(GroupAutomorphism, MultiplicationMapsOnCyclicGroups) {
  const auto z5 = FiniteAbelianGroup::cyclic(5);
  const GroupAutomorphism two(z5, {{2}});
  EXPECT_EQ(two.order(), 4);
  EXPECT_EQ(two.apply({3}), (Element{1}));
  EXPECT_TRUE(two.power(4).is_identity());
  EXPECT_EQ(two.compose(two).apply({1}), (Element{4}));
  expect_kind(ErrorKind::InvalidParameter, [] { GroupAutomorphism(FiniteAbelianGroup::cyclic(4), {{2}}); });
}

TEST(GroupAutomorphism, RejectsNonHomomorphism) {
  // Z/2 -> Z/4 coordinate images must respect orders: e_1 of order 2 cannot map to (0,1)
  const FiniteAbelianGroup g({2, 4});
  EXPECT_THROW(GroupAutomorphism(g, {{0, 1}, {1, 0}}), Error);
  // a genuine swap on Z/3 + Z/3
  const FiniteAbelianGroup h({3, 3});
  const GroupAutomorphism swap(h, {{0, 1}, {1, 0}});
  EXPECT_EQ(swap.order(), 2);
  EXPECT_EQ(swap.apply({1, 2}), (Element{2, 1}));
}

TEST(Character, ValuesMatchPairing) {
  const FiniteAbelianGroup g({3, 4, 6});
  for (const auto& t : g.elements()) {
    const Character chi(g, t);
    for (std::int64_t i = 0; i < g.size(); i += 7) {
      const auto b = g.element_at(i);
      EXPECT_LT(std::abs(chi(b).to_complex() - pairing(g, t, b)), 1e-12);
    }
  }
  const Character a(g, {1, 1, 1}), b(g, {2, 3, 5});
  EXPECT_EQ((a * b).exponents(), (Element{0, 0, 0}));
  EXPECT_TRUE(Character::trivial(g).is_trivial());
  EXPECT_EQ(dual_characters(g).size(), 72u);
}

TEST(ModuleAction, OrbitsAndLChi) {
  const auto z7 = FiniteAbelianGroup::cyclic(7);
  const auto act = ModuleAction::cyclic(z7, GroupAutomorphism(z7, {{2}}), 3);  // 2 has order 3 mod 7
  const auto orb = orbit(act, {1});
  EXPECT_EQ(orb, (std::vector<Element>{{1}, {2}, {4}}));
  EXPECT_EQ(orbit(act, {0}).size(), 1u);
  const Character chi(z7, {1});
  const auto l = l_chi(act, chi, {1});
  const auto direct = (pairing(z7, {1}, {1}) + pairing(z7, {1}, {2}) + pairing(z7, {1}, {4})) / 3.0;
  EXPECT_LT(std::abs(l.to_complex() - direct), 1e-12);
  EXPECT_EQ(l.denominator(), 3);
  EXPECT_THROW(ModuleAction::cyclic(z7, GroupAutomorphism(z7, {{2}}), 2), Error);
}

TEST(Subgroup, GeneratedAndValidated) {
  const FiniteAbelianGroup g({4, 6});
  const auto s = Subgroup::from_generators(g, {{2, 0}, {0, 3}});
  EXPECT_EQ(s.size(), 4);
  EXPECT_TRUE(s.contains({2, 3}));
  EXPECT_FALSE(s.contains({1, 0}));
  const auto t = Subgroup::from_elements(g, s.elements());
  EXPECT_EQ(t.size(), 4);
  expect_kind(ErrorKind::InvalidSubgroup, [&] { Subgroup::from_elements(g, {{0, 0}, {1, 0}}); });
  expect_kind(ErrorKind::InvalidSubgroup, [&] { Subgroup::from_elements(g, {{1, 0}}); });
  expect_kind(ErrorKind::InvalidSubgroup, [&] { Subgroup::from_generators(g, {{4, 0}}); });
}

TEST(LSet, OrbitIntersectionCounts) {
  // Z/3 + Z/3 with K = Z/2 swapping coordinates; D = whole group
  const FiniteAbelianGroup g({3, 3});
  const auto act = ModuleAction::cyclic(g, GroupAutomorphism(g, {{0, 1}, {1, 0}}), 2);
  const auto d = Subgroup::from_generators(g, {{1, 0}, {0, 1}});
  EXPECT_EQ(l_set(act, d).values, (std::set<std::int64_t>{1, 2}));
  // D = diagonal: every orbit meets D once
  const auto diag = Subgroup::from_generators(g, {{1, 1}});
  EXPECT_EQ(l_set(act, diag).values, (std::set<std::int64_t>{1}));
  // D = first axis: orbits {(a,0),(0,a)} meet D once
  const auto axis = Subgroup::from_generators(g, {{1, 0}});
  EXPECT_EQ(l_set(act, axis).values, (std::set<std::int64_t>{1}));
  const auto trivial = Subgroup::from_generators(g, {});
  EXPECT_TRUE(l_set(act, trivial).values.empty());
  EXPECT_TRUE(l_set(act, trivial).warning.has_value());
}

TEST(Duality, DualAutomorphismIsAdjoint) {
  // (theta^ t)(b) = t(theta b) for every t, b
  const FiniteAbelianGroup g({2, 4, 4});
  const GroupAutomorphism theta(g, {{1, 2, 0}, {0, 1, 1}, {0, 0, 1}});
  const auto dual = dual_automorphism(theta);
  for (const auto& t : g.elements())
    for (const auto& b : g.elements())
      EXPECT_LT(std::abs(pairing(g, dual.apply(t), b) - pairing(g, t, theta.apply(b))), 1e-9);
  EXPECT_EQ(dual_automorphism(dual), theta);
}

TEST(ModuleAction, NegationOnZ3ByHand) {
  const auto z3 = FiniteAbelianGroup::cyclic(3);
  const auto neg = ModuleAction::cyclic(z3, GroupAutomorphism(z3, {{2}}), 2);
  const auto orb = orbit(neg, {1});
  EXPECT_EQ(std::set<Element>(orb.begin(), orb.end()), (std::set<Element>{{1}, {2}}));
  // (zeta_3 + zeta_3^2) / 2 = -1/2
  const auto l = l_chi(neg, Character(z3, {1}), {1});
  EXPECT_TRUE(cyclo_equal(l, CyclotomicSum::from_counts({-1, 0, 0}, 2)));
  // orbits {d, -d} sit inside D = B
  EXPECT_EQ(l_set(neg, Subgroup::from_generators(z3, {{1}})).values, (std::set<std::int64_t>{2}));
  // t = 3 at 2 on Z/7: 6/7
  const auto z7 = FiniteAbelianGroup::cyclic(7);
  EXPECT_EQ(Character(z7, {3})({2}), RootOfUnity(6, 7));
}
