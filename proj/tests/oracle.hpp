#pragma once

// Brute-force reference computations shared by the test binaries.

#include <algorithm>
#include <cstdint>
#include <set>
#include <vector>

#include "cfmix/module_factory.hpp"

namespace oracle {

using cfmix::Element;

inline bool is_prime(std::int64_t n) {
  if (n < 2) return false;
  for (std::int64_t d = 2; d * d <= n; ++d)
    if (n % d == 0) return false;
  return true;
}

inline std::int64_t smallest_prime_1_mod(std::int64_t p) {
  for (std::int64_t q = 2;; ++q)
    if (is_prime(q) && (q - 1) % p == 0) return q;
}

/// Every combination sum_i c_i g_i, by nested counting over generator orders.
inline std::set<Element> span(const std::vector<std::int64_t>& orders, const std::vector<Element>& gens) {
  std::set<Element> out{Element(orders.size(), 0)};
  for (const auto& g : gens) {
    std::set<Element> next;
    for (const auto& x : out) {
      Element y = x;
      do {
        next.insert(y);
        for (std::size_t i = 0; i < y.size(); ++i) y[i] = (y[i] + g[i]) % orders[i];
      } while (y != x);
    }
    out = std::move(next);
  }
  return out;
}

/// #(theta-orbit of d) cap D for every nonzero d in D.
inline std::set<std::int64_t> orbit_counts(const cfmix::GroupAutomorphism& theta, const std::set<Element>& d) {
  std::set<std::int64_t> out;
  for (const auto& x : d) {
    if (std::all_of(x.begin(), x.end(), [](std::int64_t v) { return v == 0; })) continue;
    std::int64_t hits = 0;
    Element y = x;
    do {
      hits += d.count(y) ? 1 : 0;
      y = theta.apply(y);
    } while (y != x);
    out.insert(hits);
  }
  return out;
}

/// First k > 0 with theta^k = id, by repeated application to the generators.
inline std::int64_t theta_order(const cfmix::GroupAutomorphism& theta) {
  const auto& g = theta.group();
  std::vector<Element> cur;
  for (std::size_t i = 0; i < g.rank(); ++i) {
    Element e(g.rank(), 0);
    e[i] = 1;
    cur.push_back(e);
  }
  const auto start = cur;
  for (std::int64_t k = 1;; ++k) {
    for (auto& e : cur) e = theta.apply(e);
    if (cur == start) return k;
  }
}

/// Number of t in B^ with t(d) = 1 for every generator d, by direct pairing arithmetic.
inline std::int64_t annihilator_size(const std::vector<std::int64_t>& orders, const std::vector<Element>& gens) {
  const cfmix::FiniteAbelianGroup g(orders);
  std::int64_t lcm = 1;
  for (auto n : orders) lcm = std::lcm(lcm, n);
  std::int64_t count = 0;
  for (std::int64_t i = 0; i < g.size(); ++i) {
    const auto t = g.element_at(i);
    bool ok = true;
    for (const auto& d : gens) {
      std::int64_t s = 0;
      for (std::size_t j = 0; j < orders.size(); ++j) s += t[j] * d[j] * (lcm / orders[j]);
      if (s % lcm != 0) ok = false;
    }
    count += ok;
  }
  return count;
}

}  // namespace oracle
