#pragma once

// Finite abelian groups as residue vectors, automorphisms given by their
// generator images, module actions of a finite abelian group, characters,
// orbits, the orbit averages l_chi(a) and the set L(K, B, D).

#include <algorithm>
#include <cstdint>
#include <functional>
#include <numeric>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "cfmix/cyclotomic.hpp"
#include "cfmix/error.hpp"

namespace cfmix {

using Element = std::vector<std::int64_t>;

inline constexpr std::int64_t kDefaultEnumerationCap = 1'000'000;

inline std::string to_string(const Element& e) {
  std::string s = "(";
  for (std::size_t i = 0; i < e.size(); ++i) {
    if (i) s += ",";
    s += std::to_string(e[i]);
  }
  return s + ")";
}

class FiniteAbelianGroup {
 public:
  FiniteAbelianGroup() = default;
  explicit FiniteAbelianGroup(std::vector<std::int64_t> orders) : orders_(std::move(orders)) {
    for (auto n : orders_)
      if (n <= 0) fail(ErrorKind::InvalidParameter, "group orders must be positive");
  }

  static FiniteAbelianGroup cyclic(std::int64_t n) { return FiniteAbelianGroup({n}); }

  std::size_t rank() const { return orders_.size(); }
  std::span<const std::int64_t> orders() const { return orders_; }
  std::int64_t order(std::size_t i) const { return orders_[i]; }

  /// Group size, saturated at INT64_MAX.
  std::int64_t size() const {
    __int128 s = 1;
    for (auto n : orders_) {
      s *= n;
      if (s > INT64_MAX) return INT64_MAX;
    }
    return static_cast<std::int64_t>(s);
  }

  std::int64_t exponent() const {
    std::int64_t e = 1;
    for (auto n : orders_) e = std::lcm(e, n);
    return e;
  }

  bool contains(const Element& e) const {
    if (e.size() != orders_.size()) return false;
    for (std::size_t i = 0; i < e.size(); ++i)
      if (e[i] < 0 || e[i] >= orders_[i]) return false;
    return true;
  }

  void require(const Element& e) const {
    if (!contains(e)) fail(ErrorKind::InvalidElement, to_string(e) + " is not an element of the group");
  }

  Element zero() const { return Element(orders_.size(), 0); }

  Element add(const Element& a, const Element& b) const {
    Element out(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) out[i] = floor_mod(a[i] + b[i], orders_[i]);
    return out;
  }
  Element neg(const Element& a) const {
    Element out(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) out[i] = floor_mod(-a[i], orders_[i]);
    return out;
  }
  Element sub(const Element& a, const Element& b) const { return add(a, neg(b)); }
  Element scale(std::int64_t m, const Element& a) const {
    Element out(a.size());
    for (std::size_t i = 0; i < a.size(); ++i) out[i] = floor_mod((m % orders_[i]) * a[i], orders_[i]);
    return out;
  }
  Element normalize(Element e) const {
    for (std::size_t i = 0; i < e.size(); ++i) e[i] = floor_mod(e[i], orders_[i]);
    return e;
  }

  /// Mixed-radix index, first coordinate varying fastest.
  std::int64_t index_of(const Element& e) const {
    std::int64_t idx = 0;
    for (std::size_t i = orders_.size(); i-- > 0;) idx = idx * orders_[i] + e[i];
    return idx;
  }
  Element element_at(std::int64_t idx) const {
    Element e(orders_.size());
    for (std::size_t i = 0; i < orders_.size(); ++i) {
      e[i] = idx % orders_[i];
      idx /= orders_[i];
    }
    return e;
  }

  void require_enumerable(std::int64_t cap) const {
    if (size() > cap)
      fail(ErrorKind::SizeLimit, "group of size " + std::to_string(size()) + " exceeds enumeration cap " + std::to_string(cap));
  }

  std::vector<Element> elements(std::int64_t cap = kDefaultEnumerationCap) const {
    require_enumerable(cap);
    std::vector<Element> out;
    out.reserve(static_cast<std::size_t>(size()));
    for (std::int64_t i = 0; i < size(); ++i) out.push_back(element_at(i));
    return out;
  }

  bool operator==(const FiniteAbelianGroup&) const = default;

  std::string str() const {
    std::string s;
    for (std::size_t i = 0; i < orders_.size(); ++i) s += (i ? "+Z/" : "Z/") + std::to_string(orders_[i]);
    return s.empty() ? "0" : s;
  }

 private:
  std::vector<std::int64_t> orders_;
};

namespace detail {

inline bool is_prime(std::int64_t n) {
  if (n < 2) return false;
  for (std::int64_t p = 2; p * p <= n; ++p)
    if (n % p == 0) return false;
  return true;
}

inline std::int64_t pow_mod(std::int64_t base, std::int64_t e, std::int64_t m) {
  __int128 result = 1 % m, b = floor_mod(base, m);
  while (e > 0) {
    if (e & 1) result = result * b % m;
    b = b * b % m;
    e >>= 1;
  }
  return static_cast<std::int64_t>(result);
}

// Determinant of a square matrix over the prime field Z/p.
inline std::int64_t det_mod_prime(std::vector<std::vector<std::int64_t>> m, std::int64_t p) {
  const std::size_t n = m.size();
  std::int64_t det = 1;
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t pivot = col;
    while (pivot < n && floor_mod(m[pivot][col], p) == 0) ++pivot;
    if (pivot == n) return 0;
    if (pivot != col) {
      std::swap(m[pivot], m[col]);
      det = floor_mod(-det, p);
    }
    const std::int64_t piv = floor_mod(m[col][col], p);
    det = static_cast<std::int64_t>(static_cast<__int128>(det) * piv % p);
    const std::int64_t inv = pow_mod(piv, p - 2, p);
    for (std::size_t r = col + 1; r < n; ++r) {
      const std::int64_t f = static_cast<std::int64_t>(static_cast<__int128>(floor_mod(m[r][col], p)) * inv % p);
      if (f == 0) continue;
      for (std::size_t c = col; c < n; ++c) m[r][c] = floor_mod(m[r][c] - f * floor_mod(m[col][c], p), p);
    }
  }
  return det;
}

}  // namespace detail

/// Endomorphism of a finite abelian group, stored as the matrix whose column j
/// is the image of the j-th generator. Construction checks that it is a
/// well-defined bijective homomorphism.
class GroupAutomorphism {
 public:
  GroupAutomorphism() = default;

  GroupAutomorphism(FiniteAbelianGroup group, const std::vector<Element>& generator_images,
                    std::int64_t cap = kDefaultEnumerationCap)
      : group_(std::move(group)), r_(group_.rank()), matrix_(r_ * r_, 0) {
    if (generator_images.size() != r_) fail(ErrorKind::InvalidParameter, "need one image per generator");
    for (std::size_t j = 0; j < r_; ++j) {
      group_.require(generator_images[j]);
      for (std::size_t i = 0; i < r_; ++i) matrix_[i * r_ + j] = generator_images[j][i];
    }
    // n_j * image(gen_j) = 0, i.e. n_i | n_j * M[i][j]
    for (std::size_t j = 0; j < r_; ++j)
      for (std::size_t i = 0; i < r_; ++i)
        if ((static_cast<__int128>(group_.order(j)) * matrix_[i * r_ + j]) % group_.order(i) != 0)
          fail(ErrorKind::InvalidParameter, "generator images do not respect the order relations");
    if (!verify_bijective(cap)) fail(ErrorKind::InvalidParameter, "map is not bijective");
  }

  static GroupAutomorphism identity(const FiniteAbelianGroup& g) {
    GroupAutomorphism a;
    a.group_ = g;
    a.r_ = g.rank();
    a.matrix_.assign(a.r_ * a.r_, 0);
    for (std::size_t i = 0; i < a.r_; ++i) a.matrix_[i * a.r_ + i] = g.order(i) == 1 ? 0 : 1;
    return a;
  }

  const FiniteAbelianGroup& group() const { return group_; }
  std::int64_t coefficient(std::size_t row, std::size_t col) const { return matrix_[row * r_ + col]; }

  Element image_of_generator(std::size_t j) const {
    Element e(r_);
    for (std::size_t i = 0; i < r_; ++i) e[i] = matrix_[i * r_ + j];
    return e;
  }

  Element apply(const Element& e) const {
    Element out(r_, 0);
    for (std::size_t i = 0; i < r_; ++i) {
      __int128 acc = 0;
      for (std::size_t j = 0; j < r_; ++j) acc += static_cast<__int128>(matrix_[i * r_ + j]) * e[j];
      out[i] = static_cast<std::int64_t>(((acc % group_.order(i)) + group_.order(i)) % group_.order(i));
    }
    return out;
  }

  /// (this o other)(e) = this(other(e)).
  GroupAutomorphism compose(const GroupAutomorphism& other) const {
    GroupAutomorphism out;
    out.group_ = group_;
    out.r_ = r_;
    out.matrix_.assign(r_ * r_, 0);
    for (std::size_t j = 0; j < r_; ++j) {
      const Element col = apply(other.image_of_generator(j));
      for (std::size_t i = 0; i < r_; ++i) out.matrix_[i * r_ + j] = col[i];
    }
    return out;
  }

  GroupAutomorphism power(std::int64_t e) const {
    if (e < 0) fail(ErrorKind::InvalidParameter, "negative automorphism power");
    GroupAutomorphism result = identity(group_), base = *this;
    while (e > 0) {
      if (e & 1) result = result.compose(base);
      base = base.compose(base);
      e >>= 1;
    }
    return result;
  }

  /// Agreement on generators, i.e. equality as maps.
  bool operator==(const GroupAutomorphism& o) const {
    if (group_ != o.group_) return false;
    for (std::size_t j = 0; j < r_; ++j)
      if (group_.normalize(image_of_generator(j)) != group_.normalize(o.image_of_generator(j))) return false;
    return true;
  }

  bool is_identity() const { return *this == identity(group_); }

  /// Multiplicative order, searched up to `limit`.
  std::int64_t order(std::int64_t limit = 1'000'000) const {
    GroupAutomorphism cur = *this;
    for (std::int64_t k = 1; k <= limit; ++k) {
      if (cur.is_identity()) return k;
      cur = compose(cur);
    }
    fail(ErrorKind::SizeLimit, "automorphism order exceeds " + std::to_string(limit));
  }

 private:
  bool verify_bijective(std::int64_t cap) const {
    if (group_.size() <= cap) {
      // finite: injective iff trivial kernel
      for (std::int64_t idx = 1; idx < group_.size(); ++idx)
        if (apply(group_.element_at(idx)) == group_.zero()) return false;
      return true;
    }
    // Beyond the cap: coordinates of prime order p must map among themselves
    // and the induced matrix over Z/p must be invertible.
    std::set<std::int64_t> primes(group_.orders().begin(), group_.orders().end());
    for (auto p : primes) {
      if (!detail::is_prime(p))
        fail(ErrorKind::SizeLimit, "bijectivity of a group beyond the enumeration cap needs prime-order coordinates");
      std::vector<std::size_t> coords;
      for (std::size_t i = 0; i < r_; ++i)
        if (group_.order(i) == p) coords.push_back(i);
      for (auto j : coords)
        for (std::size_t i = 0; i < r_; ++i)
          if (group_.order(i) != p && matrix_[i * r_ + j] % group_.order(i) != 0) return false;
      std::vector<std::vector<std::int64_t>> sub(coords.size(), std::vector<std::int64_t>(coords.size()));
      for (std::size_t a = 0; a < coords.size(); ++a)
        for (std::size_t b = 0; b < coords.size(); ++b) sub[a][b] = matrix_[coords[a] * r_ + coords[b]];
      if (detail::det_mod_prime(std::move(sub), p) == 0) return false;
    }
    return true;
  }

  FiniteAbelianGroup group_;
  std::size_t r_ = 0;
  std::vector<std::int64_t> matrix_;
};

/// A character of a finite abelian group: b -> exp(2 pi i sum_i t_i b_i / n_i).
class Character {
 public:
  Character() = default;
  Character(const FiniteAbelianGroup& group, Element exponents) : orders_(group.orders().begin(), group.orders().end()) {
    group.require(exponents);
    exponents_ = std::move(exponents);
  }

  static Character trivial(const FiniteAbelianGroup& group) { return Character(group, group.zero()); }

  const Element& exponents() const { return exponents_; }
  std::span<const std::int64_t> orders() const { return orders_; }
  bool is_trivial() const {
    return std::all_of(exponents_.begin(), exponents_.end(), [](auto t) { return t == 0; });
  }
  bool belongs_to(const FiniteAbelianGroup& group) const {
    return std::equal(orders_.begin(), orders_.end(), group.orders().begin(), group.orders().end());
  }

  /// Exponent j of the value zeta_n^j, where n is any multiple of the group exponent.
  std::int64_t exponent_at(const Element& e, std::int64_t n) const {
    __int128 acc = 0;
    for (std::size_t i = 0; i < orders_.size(); ++i) acc += static_cast<__int128>(exponents_[i]) * e[i] * (n / orders_[i]);
    return static_cast<std::int64_t>(((acc % n) + n) % n);
  }

  RootOfUnity operator()(const Element& e) const {
    std::int64_t n = 1;
    for (auto o : orders_) n = std::lcm(n, o);
    return {exponent_at(e, n), n};
  }

  Character operator*(const Character& o) const {
    Character out = *this;
    for (std::size_t i = 0; i < orders_.size(); ++i) out.exponents_[i] = floor_mod(exponents_[i] + o.exponents_[i], orders_[i]);
    return out;
  }

  bool operator==(const Character&) const = default;

 private:
  std::vector<std::int64_t> orders_;
  Element exponents_;
};

/// All characters of `group`, in mixed-radix order of their exponent vectors.
inline std::vector<Character> dual_characters(const FiniteAbelianGroup& group, std::int64_t cap = kDefaultEnumerationCap) {
  std::vector<Character> out;
  for (auto& e : group.elements(cap)) out.emplace_back(group, std::move(e));
  return out;
}

/// Action of a finite abelian group K (given by its generator orders) on a
/// module by automorphisms; K-generator i acts by generator_actions[i].
class ModuleAction {
 public:
  ModuleAction() = default;
  ModuleAction(FiniteAbelianGroup acting, FiniteAbelianGroup module, std::vector<GroupAutomorphism> generator_actions)
      : acting_(std::move(acting)), module_(std::move(module)), generators_(std::move(generator_actions)) {
    if (generators_.size() != acting_.rank()) fail(ErrorKind::InvalidParameter, "one automorphism per acting generator");
    for (std::size_t i = 0; i < generators_.size(); ++i) {
      if (generators_[i].group() != module_) fail(ErrorKind::InvalidParameter, "automorphism acts on a different group");
      if (!generators_[i].power(acting_.order(i)).is_identity())
        fail(ErrorKind::InvalidParameter, "generator action does not respect the acting group's order");
      for (std::size_t j = 0; j < i; ++j)
        if (!(generators_[i].compose(generators_[j]) == generators_[j].compose(generators_[i])))
          fail(ErrorKind::InvalidParameter, "generator actions do not commute");
    }
    build_power_tables();
  }

  static ModuleAction trivial(const FiniteAbelianGroup& module) {
    return ModuleAction(FiniteAbelianGroup({1}), module, {GroupAutomorphism::identity(module)});
  }
  static ModuleAction cyclic(const FiniteAbelianGroup& module, const GroupAutomorphism& theta, std::int64_t order) {
    return ModuleAction(FiniteAbelianGroup::cyclic(order), module, {theta});
  }

  const FiniteAbelianGroup& acting() const { return acting_; }
  const FiniteAbelianGroup& module() const { return module_; }
  const std::vector<GroupAutomorphism>& generators() const { return generators_; }
  bool is_cyclic() const { return acting_.rank() == 1; }
  std::int64_t cyclic_order() const { return acting_.order(0); }

  /// k . a for k in the acting group.
  Element apply(const Element& k, const Element& a) const {
    Element out = a;
    for (std::size_t i = 0; i < generators_.size(); ++i) {
      const auto e = floor_mod(k[i], acting_.order(i));
      if (e != 0) out = powers_[i][static_cast<std::size_t>(e)].apply(out);
    }
    return out;
  }
  /// theta^k . a for cyclic actions.
  Element apply(std::int64_t k, const Element& a) const { return apply(Element{k}, a); }

  const GroupAutomorphism& power(std::size_t generator, std::int64_t e) const {
    return powers_[generator][static_cast<std::size_t>(floor_mod(e, acting_.order(generator)))];
  }

 private:
  void build_power_tables() {
    powers_.clear();
    for (std::size_t i = 0; i < generators_.size(); ++i) {
      std::vector<GroupAutomorphism> table{GroupAutomorphism::identity(module_)};
      for (std::int64_t e = 1; e < acting_.order(i); ++e) table.push_back(generators_[i].compose(table.back()));
      powers_.push_back(std::move(table));
    }
  }

  FiniteAbelianGroup acting_;
  FiniteAbelianGroup module_;
  std::vector<GroupAutomorphism> generators_;
  std::vector<std::vector<GroupAutomorphism>> powers_;
};

/// Full K-orbit of a, sorted by mixed-radix index.
inline std::vector<Element> orbit(const ModuleAction& action, const Element& a) {
  action.module().require(a);
  std::set<Element> seen{a};
  std::vector<Element> frontier{a};
  while (!frontier.empty()) {
    std::vector<Element> next;
    for (const auto& x : frontier)
      for (const auto& g : action.generators()) {
        auto y = g.apply(x);
        if (seen.insert(y).second) next.push_back(std::move(y));
      }
    frontier = std::move(next);
  }
  std::vector<Element> out(seen.begin(), seen.end());
  const auto& m = action.module();
  std::sort(out.begin(), out.end(), [&](const Element& x, const Element& y) { return m.index_of(x) < m.index_of(y); });
  return out;
}

/// Average of chi over the K-orbit of a; the denominator is the orbit size.
inline CyclotomicSum l_chi(const ModuleAction& action, const Character& chi, const Element& a) {
  if (!chi.belongs_to(action.module())) fail(ErrorKind::TypeMismatch, "character of a different group");
  const auto orb = orbit(action, a);
  std::vector<RootOfUnity> terms;
  terms.reserve(orb.size());
  for (const auto& b : orb) terms.push_back(chi(b));
  return CyclotomicSum::from_terms(terms, static_cast<std::int64_t>(orb.size()));
}

/// Explicitly enumerated subgroup, kept sorted by mixed-radix index.
class Subgroup {
 public:
  Subgroup() = default;

  static Subgroup from_generators(const FiniteAbelianGroup& group, const std::vector<Element>& generators,
                                  std::int64_t cap = kDefaultEnumerationCap) {
    for (const auto& g : generators)
      if (!group.contains(g)) fail(ErrorKind::InvalidSubgroup, "generator " + to_string(g) + " lies outside the group");
    Subgroup s;
    s.group_ = group;
    s.generators_ = generators;
    std::set<std::int64_t> seen{group.index_of(group.zero())};
    std::vector<Element> frontier{group.zero()};
    while (!frontier.empty()) {
      std::vector<Element> next;
      for (const auto& x : frontier)
        for (const auto& g : generators) {
          auto y = group.add(x, g);
          if (seen.insert(group.index_of(y)).second) {
            if (static_cast<std::int64_t>(seen.size()) > cap) fail(ErrorKind::SizeLimit, "subgroup exceeds enumeration cap");
            next.push_back(std::move(y));
          }
        }
      frontier = std::move(next);
    }
    s.indices_.assign(seen.begin(), seen.end());
    return s;
  }

  /// Validates closure under addition and negation.
  static Subgroup from_elements(const FiniteAbelianGroup& group, const std::vector<Element>& elements) {
    Subgroup s;
    s.group_ = group;
    std::set<std::int64_t> idx;
    for (const auto& e : elements) {
      if (!group.contains(e)) fail(ErrorKind::InvalidSubgroup, to_string(e) + " lies outside the group");
      idx.insert(group.index_of(e));
    }
    if (!idx.count(group.index_of(group.zero()))) fail(ErrorKind::InvalidSubgroup, "subset does not contain zero");
    for (auto i : idx) {
      const auto x = group.element_at(i);
      if (!idx.count(group.index_of(group.neg(x)))) fail(ErrorKind::InvalidSubgroup, "subset not closed under negation");
      for (auto j : idx)
        if (!idx.count(group.index_of(group.add(x, group.element_at(j)))))
          fail(ErrorKind::InvalidSubgroup, "subset not closed under addition");
    }
    s.indices_.assign(idx.begin(), idx.end());
    for (auto i : s.indices_) s.generators_.push_back(group.element_at(i));
    return s;
  }

  const FiniteAbelianGroup& group() const { return group_; }
  const std::vector<Element>& generators() const { return generators_; }
  std::int64_t size() const { return static_cast<std::int64_t>(indices_.size()); }
  bool contains(const Element& e) const {
    return group_.contains(e) && std::binary_search(indices_.begin(), indices_.end(), group_.index_of(e));
  }
  std::vector<Element> elements() const {
    std::vector<Element> out;
    out.reserve(indices_.size());
    for (auto i : indices_) out.push_back(group_.element_at(i));
    return out;
  }

 private:
  FiniteAbelianGroup group_;
  std::vector<Element> generators_;
  std::vector<std::int64_t> indices_;
};

struct LSet {
  std::set<std::int64_t> values;
  std::optional<std::string> warning;
};

/// L(K, B, D) = { #(Orb_K(d) cap D) : d in D \ {0} }.
inline LSet l_set(const ModuleAction& action, const Subgroup& d) {
  if (!(d.group() == action.module())) fail(ErrorKind::InvalidSubgroup, "D is not a subgroup of the acting module");
  LSet out;
  if (d.size() <= 1) {
    out.warning = "D = {0}: L is defined over D \\ {0}, result is empty";
    return out;
  }
  const auto zero = action.module().zero();
  for (const auto& x : d.elements()) {
    if (x == zero) continue;
    const auto orb = orbit(action, x);
    const auto count = std::count_if(orb.begin(), orb.end(), [&](const Element& y) { return d.contains(y); });
    out.values.insert(static_cast<std::int64_t>(count));
  }
  return out;
}

/// Dual module: A = B^ with (k . t)(b) = t(k . b), written against the same orders.
inline GroupAutomorphism dual_automorphism(const GroupAutomorphism& theta) {
  const auto& g = theta.group();
  const std::size_t r = g.rank();
  std::vector<Element> images(r, Element(r, 0));
  // t'_j = sum_i t_i * M[i][j] * n_j / n_i  (mod n_j); image of generator e_i is column i of the dual matrix
  for (std::size_t i = 0; i < r; ++i)
    for (std::size_t j = 0; j < r; ++j) {
      const __int128 num = static_cast<__int128>(theta.coefficient(i, j)) * g.order(j);
      images[i][j] = floor_mod(static_cast<std::int64_t>((num / g.order(i)) % g.order(j)), g.order(j));
    }
  return GroupAutomorphism(g, images);
}

inline ModuleAction dual_action(const ModuleAction& action) {
  std::vector<GroupAutomorphism> gens;
  for (const auto& g : action.generators()) gens.push_back(dual_automorphism(g));
  return ModuleAction(action.acting(), action.module(), std::move(gens));
}

}  // namespace cfmix
