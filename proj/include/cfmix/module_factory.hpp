#pragma once

// Algebraic triples (K, B, D) with prescribed L(K, B, D), their tower of
// truncations, and the duality bookkeeping A = B^, H = annihilator of D.

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "cfmix/finite_algebra.hpp"

namespace cfmix {

struct OrbitBlock {
  std::int64_t p = 1;           // orbit length of every nonzero element
  std::int64_t q = 2;           // prime modulus
  std::int64_t multiplier = 1;  // theta_p = multiplication by this unit
};

namespace detail {

inline std::vector<std::int64_t> prime_factors(std::int64_t n) {
  std::vector<std::int64_t> out;
  for (std::int64_t p = 2; p * p <= n; ++p) {
    if (n % p) continue;
    out.push_back(p);
    while (n % p == 0) n /= p;
  }
  if (n > 1) out.push_back(n);
  return out;
}

inline std::int64_t primitive_root(std::int64_t q) {
  const auto factors = prime_factors(q - 1);
  for (std::int64_t g = 2; g < q; ++g) {
    bool ok = true;
    for (auto f : factors)
      if (pow_mod(g, (q - 1) / f, q) == 1) ok = false;
    if (ok) return g;
  }
  return 1;  // q = 2
}

}  // namespace detail

inline constexpr std::int64_t kPrimeSearchBound = 1'000'000;

inline OrbitBlock orbit_block(std::int64_t p) {
  if (p < 1) fail(ErrorKind::InvalidParameter, "orbit length must be positive");
  OrbitBlock block;
  block.p = p;
  if (p > 1) {
    std::int64_t q = p + 1;
    while (q < kPrimeSearchBound && !detail::is_prime(q)) q += p;
    if (q >= kPrimeSearchBound)
      fail(ErrorKind::ConstructionFailure, "no prime q = 1 mod " + std::to_string(p) + " below the search bound");
    block.q = q;
    block.multiplier = detail::pow_mod(detail::primitive_root(q), (q - 1) / p, q);
  }
  for (std::int64_t b = 1; b < block.q; ++b) {
    std::int64_t x = b, len = 0;
    do {
      x = x * block.multiplier % block.q;
      ++len;
    } while (x != b);
    if (len != p) fail(ErrorKind::Consistency, "orbit block has an orbit of the wrong length");
  }
  return block;
}

/// Source of the values p_1 < p_2 < ...; finite list or arithmetic progression.
struct PSequence {
  std::vector<std::int64_t> values;
  std::optional<std::int64_t> start, step;

  static PSequence list(std::vector<std::int64_t> v) { return {std::move(v), std::nullopt, std::nullopt}; }
  static PSequence arithmetic(std::int64_t start, std::int64_t step) { return {{}, start, step}; }

  bool finite() const { return !start.has_value(); }

  std::vector<std::int64_t> take(std::size_t m) const {
    if (finite()) {
      if (m > values.size()) fail(ErrorKind::InvalidParameter, "depth exceeds the length of P");
      return {values.begin(), values.begin() + static_cast<std::ptrdiff_t>(m)};
    }
    if (*step <= 0 || *start < 1) fail(ErrorKind::InvalidParameter, "generator needs start >= 1 and step > 0");
    std::vector<std::int64_t> out;
    for (std::size_t i = 0; i < m; ++i) out.push_back(*start + static_cast<std::int64_t>(i) * *step);
    return out;
  }
};

struct BlockLayout {
  OrbitBlock block;
  std::size_t first_coordinate = 0;  // 0-based
  std::int64_t copies = 1;           // p_1 ... p_{i-1}
};

struct AlgebraicTriple {
  std::vector<std::int64_t> p;  // p_1, ..., p_m
  FiniteAbelianGroup b;
  GroupAutomorphism theta;
  std::int64_t k_order = 1;
  ModuleAction action;
  std::vector<std::size_t> d_coordinates;
  Subgroup d;
  std::vector<BlockLayout> layout;

  std::size_t depth() const { return p.size(); }
};

namespace detail {

inline std::int64_t checked_mul(std::int64_t a, std::int64_t b) {
  const __int128 r = static_cast<__int128>(a) * b;
  if (r > INT64_MAX) fail(ErrorKind::SizeLimit, "group size overflows 64 bits");
  return static_cast<std::int64_t>(r);
}

}  // namespace detail

/// B = B_1 + B_2^{p_1} + B_3^{p_1 p_2} + ..., theta = theta_1 x theta_2' sigma_2 x ...,
/// D generated by the first copy of every block.
inline AlgebraicTriple assemble_lemma42(const std::vector<std::int64_t>& p, std::int64_t group_cap = 4'000'000'000LL,
                                        std::int64_t enumeration_cap = kDefaultEnumerationCap) {
  if (p.empty()) fail(ErrorKind::InvalidParameter, "P must be non-empty");
  for (std::size_t i = 1; i < p.size(); ++i)
    if (p[i] <= p[i - 1]) fail(ErrorKind::InvalidParameter, "P must be strictly increasing");
  AlgebraicTriple t;
  t.p = p;
  std::vector<std::int64_t> orders;
  std::int64_t copies = 1, size = 1;
  for (std::size_t i = 0; i < p.size(); ++i) {
    BlockLayout lay{orbit_block(p[i]), orders.size(), copies};
    for (std::int64_t c = 0; c < copies; ++c) {
      orders.push_back(lay.block.q);
      size = detail::checked_mul(size, lay.block.q);
      if (size > group_cap) fail(ErrorKind::SizeLimit, "depth " + std::to_string(p.size()) + " exceeds the group size cap");
    }
    t.d_coordinates.push_back(lay.first_coordinate);
    t.layout.push_back(lay);
    copies = detail::checked_mul(copies, p[i]);
  }
  t.b = FiniteAbelianGroup(orders);
  std::vector<Element> images(orders.size(), t.b.zero());
  for (const auto& lay : t.layout) {
    for (std::int64_t c = 0; c < lay.copies; ++c) {
      // sigma moves copy c to copy c+1; theta_i then acts on the first copy only
      const std::int64_t target = (c + 1) % lay.copies;
      const auto coord = lay.first_coordinate + static_cast<std::size_t>(target);
      images[lay.first_coordinate + static_cast<std::size_t>(c)][coord] = target == 0 ? lay.block.multiplier : 1;
    }
  }
  t.theta = GroupAutomorphism(t.b, images, enumeration_cap);
  for (std::size_t i = 0; i < p.size(); ++i) t.k_order = std::lcm(t.k_order, t.layout[i].copies * p[i]);
  t.action = ModuleAction::cyclic(t.b, t.theta, t.k_order);
  for (auto f : detail::prime_factors(t.k_order))
    if (t.theta.power(t.k_order / f).is_identity()) fail(ErrorKind::Consistency, "theta has smaller order than expected");

  std::vector<Element> gens;
  for (auto c : t.d_coordinates) {
    Element g = t.b.zero();
    g[c] = 1;
    gens.push_back(g);
  }
  t.d = Subgroup::from_generators(t.b, gens, enumeration_cap);
  const auto ls = l_set(t.action, t.d);
  const std::set<std::int64_t> want(p.begin(), p.end());
  if (ls.values != want) fail(ErrorKind::Consistency, "L(K,B,D) differs from P");
  return t;
}

/// Builds a triple from stored data, checking theta and D.
inline AlgebraicTriple triple_from_parts(const std::vector<std::int64_t>& p, const std::vector<std::int64_t>& orders,
                                         const std::vector<Element>& theta_images, std::int64_t k_order,
                                         const Subgroup& d, std::int64_t enumeration_cap = kDefaultEnumerationCap) {
  AlgebraicTriple t;
  t.p = p;
  t.b = FiniteAbelianGroup(orders);
  t.theta = GroupAutomorphism(t.b, theta_images, enumeration_cap);
  t.k_order = k_order;
  t.action = ModuleAction::cyclic(t.b, t.theta, k_order);
  if (!(d.group() == t.b)) fail(ErrorKind::InvalidSubgroup, "D lives in a different group");
  t.d = d;
  return t;
}

struct TowerLevel {
  std::size_t depth = 0;
  std::int64_t k_order = 1;
  FiniteAbelianGroup module;
  GroupAutomorphism theta;
};

struct CompactTower {
  std::vector<TowerLevel> levels;  // depth 1..m
  /// Elements of the deepest module, i.e. the dense submodule A_0 at this truncation.
  std::int64_t a0_size() const { return levels.empty() ? 0 : levels.back().module.size(); }

  /// Projection from level j+1 to level j (0-based indices): drop the deeper blocks.
  Element project(std::size_t j, const Element& e) const {
    return {e.begin(), e.begin() + static_cast<std::ptrdiff_t>(levels[j].module.rank())};
  }
  std::int64_t project_k(std::size_t j, std::int64_t k) const { return floor_mod(k, levels[j].k_order); }
};

inline CompactTower compactify(const AlgebraicTriple& triple, std::int64_t enumeration_cap = kDefaultEnumerationCap) {
  CompactTower tower;
  for (std::size_t j = 1; j <= triple.depth(); ++j) {
    const auto t = assemble_lemma42({triple.p.begin(), triple.p.begin() + static_cast<std::ptrdiff_t>(j)},
                                    4'000'000'000LL, enumeration_cap);
    tower.levels.push_back({j, t.k_order, t.b, t.theta});
  }
  for (std::size_t j = 0; j + 1 < tower.levels.size(); ++j) {
    const auto& lo = tower.levels[j];
    const auto& hi = tower.levels[j + 1];
    if (hi.k_order % lo.k_order != 0) fail(ErrorKind::Consistency, "K projection is not a homomorphism");
    for (std::size_t g = 0; g < hi.module.rank(); ++g) {
      Element e = hi.module.zero();
      e[g] = 1;
      if (tower.project(j, hi.theta.apply(e)) != lo.theta.apply(tower.project(j, e)))
        fail(ErrorKind::Consistency, "tower projection is not equivariant");
    }
  }
  return tower;
}

struct DualityRecord {
  FiniteAbelianGroup a;       // A = B^, same orders as B
  ModuleAction dual_action;   // K acting on A
  std::int64_t b_size = 0;
  std::int64_t d_size = 0;
  std::int64_t h_size = 0;
  std::string h_method;       // "enumeration" or "coordinates"
  bool size_identity = false; // |H| |D| = |B|
  std::set<std::int64_t> l_dual;
};

inline bool coordinate_supported(const Subgroup& d, const std::vector<std::size_t>& coords) {
  std::int64_t want = 1;
  for (auto c : coords) want *= d.group().order(c);
  if (want != d.size()) return false;
  for (const auto& e : d.elements())
    for (std::size_t i = 0; i < e.size(); ++i)
      if (e[i] != 0 && std::find(coords.begin(), coords.end(), i) == coords.end()) return false;
  return true;
}

inline DualityRecord dualize(const AlgebraicTriple& t, std::int64_t enumeration_cap = kDefaultEnumerationCap) {
  DualityRecord rec;
  rec.a = t.b;
  rec.dual_action = dual_action(t.action);
  rec.b_size = t.b.size();
  rec.d_size = t.d.size();
  const auto d_elems = t.d.elements();
  const std::int64_t n = t.b.exponent();
  if (t.b.size() <= enumeration_cap) {
    std::vector<Element> h;
    for (std::int64_t i = 0; i < t.b.size(); ++i) {
      Character chi(t.b, t.b.element_at(i));
      bool kills = true;
      for (const auto& g : t.d.generators())
        if (chi.exponent_at(g, n) != 0) { kills = false; break; }
      if (kills) h.push_back(chi.exponents());
    }
    rec.h_size = static_cast<std::int64_t>(h.size());
    rec.h_method = "enumeration";
    // the annihilator of H inside the dual of A, under the evaluation pairing, is D again
    const auto hsub = Subgroup::from_elements(rec.a, h);
    std::vector<Element> ann;
    for (std::int64_t i = 0; i < t.b.size(); ++i) {
      const Element x = t.b.element_at(i);
      bool kills = true;
      for (const auto& y : hsub.generators())
        if (Character(t.b, y).exponent_at(x, n) != 0) { kills = false; break; }
      if (kills) ann.push_back(x);
    }
    const auto dd = Subgroup::from_elements(t.b, ann);
    const auto back = dual_action(rec.dual_action);
    rec.l_dual = l_set(back, dd).values;
  } else {
    if (!coordinate_supported(t.d, t.d_coordinates))
      fail(ErrorKind::SizeLimit, "annihilator of a non-coordinate subgroup beyond the enumeration cap");
    std::int64_t h = 1;
    for (std::size_t i = 0; i < t.b.rank(); ++i)
      if (std::find(t.d_coordinates.begin(), t.d_coordinates.end(), i) == t.d_coordinates.end())
        h = detail::checked_mul(h, t.b.order(i));
    rec.h_size = h;
    rec.h_method = "coordinates";
    rec.l_dual = l_set(dual_action(rec.dual_action), t.d).values;
  }
  rec.size_identity = static_cast<__int128>(rec.h_size) * rec.d_size == rec.b_size;
  return rec;
}

}  // namespace cfmix
