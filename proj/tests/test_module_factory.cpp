#include <gtest/gtest.h>

#include <chrono>

#include "cfmix/module_factory.hpp"
#include "oracle.hpp"

using namespace cfmix;

TEST(OrbitBlock, SmallestPrimeAndOrbitLengths) {
  for (std::int64_t p = 1; p <= 12; ++p) {
    const auto b = orbit_block(p);
    if (p == 1) {
      EXPECT_EQ(b.q, 2);
      EXPECT_EQ(b.multiplier, 1);
      continue;
    }
    EXPECT_EQ(b.q, oracle::smallest_prime_1_mod(p)) << p;
    for (std::int64_t x = 1; x < b.q; ++x) {
      std::int64_t y = x, len = 0;
      do {
        y = y * b.multiplier % b.q;
        ++len;
      } while (y != x);
      EXPECT_EQ(len, p);
    }
  }
  EXPECT_THROW(orbit_block(0), Error);
}

TEST(PSequence, ListAndGenerator) {
  EXPECT_EQ(PSequence::arithmetic(2, 3).take(4), (std::vector<std::int64_t>{2, 5, 8, 11}));
  EXPECT_EQ(PSequence::list({1, 4}).take(1), (std::vector<std::int64_t>{1}));
  EXPECT_THROW(PSequence::list({1, 4}).take(3), Error);
}

class OrbitModule : public ::testing::TestWithParam<std::vector<std::int64_t>> {};

TEST_P(OrbitModule, LSetEqualsPByOrbitEnumeration) {
  const auto p = GetParam();
  const auto t0 = std::chrono::steady_clock::now();
  const auto t = assemble_lemma42(p);
  const std::vector<std::int64_t> orders(t.b.orders().begin(), t.b.orders().end());
  const auto d = oracle::span(orders, t.d.generators());
  EXPECT_EQ(static_cast<std::int64_t>(d.size()), t.d.size());
  EXPECT_EQ(oracle::orbit_counts(t.theta, d), std::set<std::int64_t>(p.begin(), p.end()));
  EXPECT_EQ(oracle::theta_order(t.theta), t.k_order);
  EXPECT_LT(std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count(), 5.0);
}

INSTANTIATE_TEST_SUITE_P(Sets, OrbitModule,
                         ::testing::Values(std::vector<std::int64_t>{1}, std::vector<std::int64_t>{2},
                                           std::vector<std::int64_t>{1, 2}, std::vector<std::int64_t>{2, 3},
                                           std::vector<std::int64_t>{1, 3, 5}, std::vector<std::int64_t>{2, 4, 6}));

TEST(OrbitModule, LayoutOfTwoThree) {
  // B = Z/3 + (Z/7)^2, D on coordinates 0 and 1
  const auto t = assemble_lemma42({2, 3});
  EXPECT_EQ(t.b.orders().size(), 3u);
  EXPECT_EQ(t.b.order(0), 3);
  EXPECT_EQ(t.b.order(1), 7);
  EXPECT_EQ(t.b.order(2), 7);
  EXPECT_EQ(t.d_coordinates, (std::vector<std::size_t>{0, 1}));
  EXPECT_EQ(t.k_order, 6);
  EXPECT_EQ(t.d.size(), 21);
}

TEST(OrbitModule, RejectsBadInput) {
  EXPECT_THROW(assemble_lemma42({}), Error);
  EXPECT_THROW(assemble_lemma42({2, 2}), Error);
  EXPECT_THROW(assemble_lemma42({3, 2}), Error);
}

TEST(Duality, AnnihilatorSizeByPairing) {
  for (const auto& p : std::vector<std::vector<std::int64_t>>{{1}, {2}, {1, 2}, {2, 3}, {1, 3, 5}}) {
    const auto t = assemble_lemma42(p);
    const auto rec = dualize(t);
    const std::vector<std::int64_t> orders(t.b.orders().begin(), t.b.orders().end());
    EXPECT_EQ(rec.h_size, oracle::annihilator_size(orders, t.d.generators()));
    EXPECT_TRUE(rec.size_identity);
    EXPECT_EQ(rec.h_method, "enumeration");
    EXPECT_EQ(rec.l_dual, std::set<std::int64_t>(p.begin(), p.end()));
  }
}

TEST(Duality, CoordinateFormulaBeyondCap) {
  const auto t = assemble_lemma42({2, 4, 6});
  const auto rec = dualize(t);
  EXPECT_EQ(rec.h_method, "coordinates");
  EXPECT_TRUE(rec.size_identity);
  EXPECT_EQ(static_cast<__int128>(rec.h_size) * rec.d_size, static_cast<__int128>(t.b.size()));
}

TEST(Compactify, ProjectionsAreEquivariant) {
  const auto t = assemble_lemma42({1, 2, 3});
  const auto tower = compactify(t);
  ASSERT_EQ(tower.levels.size(), 3u);
  EXPECT_EQ(tower.a0_size(), t.b.size());
  for (std::size_t j = 0; j + 1 < tower.levels.size(); ++j) {
    const auto& hi = tower.levels[j + 1];
    const auto& lo = tower.levels[j];
    EXPECT_EQ(hi.k_order % lo.k_order, 0);
    for (std::int64_t i = 0; i < hi.module.size(); i += 3) {
      const auto e = hi.module.element_at(i);
      EXPECT_EQ(tower.project(j, hi.theta.apply(e)), lo.theta.apply(tower.project(j, e)));
    }
  }
}

TEST(OrbitModule, SmallTriplesByHand) {
  // p = 3: multiplication by 2 on Z/7, since 2^3 = 8 = 1 mod 7
  const auto b3 = orbit_block(3);
  EXPECT_EQ(b3.q, 7);
  EXPECT_EQ(b3.multiplier, 2);
  // {2}: Z/3 with x -> 2x = -x, D = B
  const auto t2 = assemble_lemma42({2});
  EXPECT_EQ(t2.b.size(), 3);
  EXPECT_EQ(t2.theta.apply({1}), (Element{2}));
  EXPECT_EQ(t2.d.size(), 3);
  EXPECT_EQ(t2.k_order, 2);
  // {1, 2}: Z/2 + Z/3 with theta = id x (-1)
  const auto t12 = assemble_lemma42({1, 2});
  EXPECT_EQ(t12.b.order(0), 2);
  EXPECT_EQ(t12.b.order(1), 3);
  EXPECT_EQ(t12.theta.apply({1, 1}), (Element{1, 2}));
  EXPECT_EQ(t12.d.size(), 6);
  EXPECT_EQ(l_set(t12.action, t12.d).values, (std::set<std::int64_t>{1, 2}));
  // {2, 3}: |H| = |B| / |D| = 147 / 21
  const auto t23 = assemble_lemma42({2, 3});
  EXPECT_EQ(dualize(t23).h_size, 7);
  const auto tower = compactify(t23);
  ASSERT_EQ(tower.levels.size(), 2u);
  EXPECT_EQ(tower.levels[0].k_order, 2);
  EXPECT_EQ(tower.levels[1].k_order, 6);
  for (std::int64_t k = 0; k < 6; ++k) EXPECT_EQ(tower.project_k(0, k), k % 2);
}
