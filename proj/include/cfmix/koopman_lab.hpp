#pragma once

// Finite-level Koopman operators as phased permutations, their exact spectra,
// weak-limit probes, correlation decay, and the multiplicity report.

#include <Eigen/Dense>

#include <algorithm>
#include <bit>
#include <complex>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <unordered_map>
#include <variant>
#include <vector>

#include "cfmix/cocycle_engine.hpp"
#include "cfmix/module_factory.hpp"

namespace cfmix {

inline constexpr std::int64_t kDefaultStateCap = 2'000'000;

/// Permutation of states with an edge phase zeta_N^{phase[s]} on s -> succ[s].
struct PhasedCycleOperator {
  std::int64_t n = 0;
  std::int64_t root_order = 1;
  std::vector<std::int64_t> succ;
  std::vector<std::int64_t> phase;
  std::string component;

  /// (U f)(s) = phase(s) f(succ(s)).
  std::vector<std::complex<double>> apply(const std::vector<std::complex<double>>& f) const {
    std::vector<std::complex<double>> out(f.size());
    for (std::int64_t s = 0; s < n; ++s) {
      const auto i = static_cast<std::size_t>(s);
      out[i] = RootOfUnity(phase[i], root_order).to_complex() * f[static_cast<std::size_t>(succ[i])];
    }
    return out;
  }

  Eigen::MatrixXcd dense() const {
    Eigen::MatrixXcd m = Eigen::MatrixXcd::Zero(n, n);
    for (std::int64_t s = 0; s < n; ++s)
      m(s, succ[static_cast<std::size_t>(s)]) = RootOfUnity(phase[static_cast<std::size_t>(s)], root_order).to_complex();
    return m;
  }
};

inline PhasedCycleOperator build_eta_component(const LevelTable& table, std::int64_t eta) {
  const std::int64_t h = table.levels(), kk = table.k_order();
  PhasedCycleOperator op{h, kk, std::vector<std::int64_t>(static_cast<std::size_t>(h)),
                         std::vector<std::int64_t>(static_cast<std::size_t>(h)), "eta=" + std::to_string(floor_mod(eta, kk))};
  for (std::int64_t l = 0; l < h; ++l) {
    const auto i = static_cast<std::size_t>(l);
    op.succ[i] = (l + 1) % h;
    op.phase[i] = floor_mod(eta * table.transition(l).k, kk);
  }
  return op;
}

/// chi-component of the double extension: states (l, k), (l, k) -> (l+1, k + beta_l), phase chi(k . alpha_l).
inline PhasedCycleOperator build_chi_component(const LevelTable& table, const Character& chi, std::int64_t cap = kDefaultStateCap) {
  const auto& a = table.model().a_group();
  if (!chi.belongs_to(a)) fail(ErrorKind::TypeMismatch, "character is not a character of A");
  const std::int64_t h = table.levels(), kk = table.k_order();
  if (static_cast<__int128>(h) * kk > cap) fail(ErrorKind::SizeLimit, "state count exceeds the cap");
  const std::int64_t n_root = a.exponent();
  PhasedCycleOperator op{h * kk, n_root, std::vector<std::int64_t>(static_cast<std::size_t>(h * kk)),
                         std::vector<std::int64_t>(static_cast<std::size_t>(h * kk)), "chi=" + to_string(chi.exponents())};
  const auto& action = table.model().group().action();
  std::unordered_map<std::int64_t, std::vector<std::int64_t>> cache;  // A index -> chi(k . alpha) for all k
  for (std::int64_t l = 0; l < h; ++l) {
    const KA t = table.transition(l);
    const auto key = a.index_of(t.a);
    auto it = cache.find(key);
    if (it == cache.end()) {
      std::vector<std::int64_t> ph(static_cast<std::size_t>(kk));
      for (std::int64_t k = 0; k < kk; ++k) ph[static_cast<std::size_t>(k)] = chi.exponent_at(action.apply(k, t.a), n_root);
      it = cache.emplace(key, std::move(ph)).first;
    }
    for (std::int64_t k = 0; k < kk; ++k) {
      const auto s = static_cast<std::size_t>(l * kk + k);
      op.succ[s] = ((l + 1) % h) * kk + floor_mod(k + t.k, kk);
      op.phase[s] = it->second[static_cast<std::size_t>(k)];
    }
  }
  return op;
}

/// Eigenvalue multiset.
struct SpectralSet {
  std::map<RootOfUnity, std::int64_t> mult;

  std::int64_t total() const {
    std::int64_t t = 0;
    for (const auto& [_, m] : mult) t += m;
    return t;
  }
  std::int64_t max_multiplicity() const {
    std::int64_t t = 0;
    for (const auto& [_, m] : mult) t = std::max(t, m);
    return t;
  }
  bool operator==(const SpectralSet&) const = default;
};

/// Cycle type: (length, total phase exponent over root_order) -> count.
inline std::map<std::pair<std::int64_t, std::int64_t>, std::int64_t> cycle_type(const PhasedCycleOperator& op) {
  std::map<std::pair<std::int64_t, std::int64_t>, std::int64_t> out;
  std::vector<char> seen(static_cast<std::size_t>(op.n), 0);
  for (std::int64_t s0 = 0; s0 < op.n; ++s0) {
    if (seen[static_cast<std::size_t>(s0)]) continue;
    std::int64_t len = 0, t = 0, s = s0;
    do {
      seen[static_cast<std::size_t>(s)] = 1;
      t = (t + op.phase[static_cast<std::size_t>(s)]) % op.root_order;
      s = op.succ[static_cast<std::size_t>(s)];
      ++len;
    } while (s != s0);
    ++out[{len, t}];
  }
  return out;
}

/// A cycle of length L with total phase zeta_N^t contributes the L roots of z^L = zeta_N^t.
inline SpectralSet exact_spectrum(const PhasedCycleOperator& op) {
  SpectralSet out;
  for (const auto& [key, count] : cycle_type(op)) {
    const auto [len, t] = key;
    for (std::int64_t j = 0; j < len; ++j) out.mult[RootOfUnity(t + j * op.root_order, len * op.root_order)] += count;
  }
  return out;
}

inline SpectralSet spectrum_union(const std::vector<SpectralSet>& parts) {
  SpectralSet out;
  for (const auto& p : parts)
    for (const auto& [z, m] : p.mult) out.mult[z] += m;
  return out;
}

/// Fraction of eigenvalue mass shared by two spectra.
inline double spectral_overlap(const SpectralSet& x, const SpectralSet& y) {
  std::int64_t common = 0;
  for (const auto& [z, m] : x.mult) {
    const auto it = y.mult.find(z);
    if (it != y.mult.end()) common += std::min(m, it->second);
  }
  const auto denom = std::min(x.total(), y.total());
  return denom == 0 ? 0.0 : static_cast<double>(common) / static_cast<double>(denom);
}

/// chi o phi for an automorphism phi of the character's group.
inline Character compose(const Character& chi, const GroupAutomorphism& phi) {
  return Character(phi.group(), dual_automorphism(phi).apply(chi.exponents()));
}

struct EquivalenceVerdict {
  std::int64_t k = 0;
  Element chi_k;
  bool equal = false;
};

class SpectrumCache {
 public:
  SpectrumCache(const LevelTable& table, std::int64_t cap) : table_(&table), cap_(cap) {}
  const SpectralSet& chi(const Character& c) {
    auto it = chi_.find(c.exponents());
    if (it == chi_.end()) it = chi_.emplace(c.exponents(), exact_spectrum(build_chi_component(*table_, c, cap_))).first;
    return it->second;
  }
  const SpectralSet& eta(std::int64_t e) {
    auto it = eta_.find(e);
    if (it == eta_.end()) it = eta_.emplace(e, exact_spectrum(build_eta_component(*table_, e))).first;
    return it->second;
  }
  const LevelTable& table() const { return *table_; }

 private:
  const LevelTable* table_;
  std::int64_t cap_;
  std::map<Element, SpectralSet> chi_;
  std::map<std::int64_t, SpectralSet> eta_;
};

inline std::vector<EquivalenceVerdict> class_equivalence_check(SpectrumCache& cache, const Character& chi) {
  const auto& action = cache.table().model().group().action();
  std::vector<EquivalenceVerdict> out;
  const SpectralSet base = cache.chi(chi);
  for (std::int64_t k = 0; k < action.cyclic_order(); ++k) {
    const Character ck = compose(chi, action.power(0, k));
    out.push_back({k, ck.exponents(), cache.chi(ck) == base});
  }
  return out;
}

/// Atom index of every level at depth `depth` for the level-n0 partition; -1 on spacers above n0.
inline std::vector<std::int32_t> level_atoms(const TowerGeometry& g, std::size_t n0) {
  if (n0 > g.depth()) fail(ErrorKind::OutOfRange, "test level beyond depth");
  std::vector<std::int32_t> arr(static_cast<std::size_t>(g.height(n0)));
  for (std::size_t i = 0; i < arr.size(); ++i) arr[i] = static_cast<std::int32_t>(i);
  for (std::size_t j = n0; j < g.depth(); ++j) {
    std::vector<std::int32_t> next(static_cast<std::size_t>(g.height(j + 1)), -1);
    for (auto c : g.cuts(j)) std::copy(arr.begin(), arr.end(), next.begin() + c);
    arr = std::move(next);
  }
  return arr;
}

enum class Prediction { Rigid, Rotate, Delayed, RigidChi, DelayedChi };

inline std::string to_string(Prediction p) {
  switch (p) {
    case Prediction::Rigid: return "delta*I + (1-delta)*P0";
    case Prediction::Rotate: return "delta*eta(k)*I + (1-delta)*P0";
    case Prediction::Delayed: return "delta*(I + U*) + (1-2delta)*P0";
    case Prediction::RigidChi: return "delta*l_chi(a)*I";
    case Prediction::DelayedChi: return "delta*(I + l_chi(a)*U*)";
  }
  return "";
}

struct FamilyEntry {
  std::int32_t atom = 0;
  std::int64_t eta = 0;
};

struct WeakLimitEntry {
  std::size_t u = 0, v = 0;  // family indices
  std::complex<double> value, predicted;
  double deviation = 0.0;
};

struct WeakLimitReport {
  std::size_t stage = 0;
  StageLabel label;
  Prediction prediction = Prediction::Rigid;
  Element chi;
  double delta = 0.0;
  std::int64_t r = 0;
  std::int64_t h = 0;
  std::int64_t model_levels = 0;
  std::size_t test_level = 1;
  std::vector<FamilyEntry> family;
  std::vector<WeakLimitEntry> entries;
  std::optional<CyclotomicSum> l_value;
  double max_deviation_all = 0.0;
  double max_deviation_diagonal = 0.0;
  std::optional<double> max_deviation_subsets;  // over all pairs of level-n0 cylinders, eta = 0
  double gated_deviation = 0.0;
  double bound = 0.0;
  bool diagonal_gate = false;
  std::optional<double> weak_mixing_excess;  // max |<U^h v, v>| - delta |v|^2 over mean-zero v (N_0 stages)
  bool pass = false;
};

namespace detail {

/// Exact <U^s u, v> for u = 1_{f} x eta_e over the family, as cyclotomic counts over zeta_root.
struct GramCounts {
  std::int64_t root = 1;
  std::int64_t denom = 1;
  std::size_t fam = 0;
  std::vector<std::int64_t> counts;  // [(u * fam + v) * root + exponent]

  CyclotomicSum sum(std::size_t u, std::size_t v) const {
    const auto* p = counts.data() + (u * fam + v) * static_cast<std::size_t>(root);
    return CyclotomicSum::from_counts({p, p + root}, denom);
  }
};

inline GramCounts shifted_gram(const LevelTable& table, const std::vector<std::int32_t>& atoms, std::int64_t atoms_count,
                               std::int64_t shift, const Character* chi) {
  const std::int64_t h = table.levels(), kk = table.k_order();
  const auto& a = table.model().a_group();
  const auto& action = table.model().group().action();
  const std::int64_t n_chi = chi ? a.exponent() : 1;
  GramCounts g;
  g.root = std::lcm(n_chi, kk);
  g.denom = h * kk;
  g.fam = static_cast<std::size_t>(atoms_count * kk);
  g.counts.assign(g.fam * g.fam * static_cast<std::size_t>(g.root), 0);
  const std::int64_t sk = g.root / kk, sc = g.root / n_chi;
  std::unordered_map<std::int64_t, std::vector<std::int64_t>> cache;
  std::vector<std::int64_t> ph(static_cast<std::size_t>(kk), 0);
  for (std::int64_t l = 0; l < h; ++l) {
    const std::int64_t l2 = floor_mod(l + shift, h);
    const auto f_v = atoms[static_cast<std::size_t>(l)];
    const auto f_u = atoms[static_cast<std::size_t>(l2)];
    if (f_v < 0 || f_u < 0) continue;
    const KA t = table.value(l, l2);
    if (chi) {
      const auto key = a.index_of(t.a);
      auto it = cache.find(key);
      if (it == cache.end()) {
        std::vector<std::int64_t> p(static_cast<std::size_t>(kk));
        for (std::int64_t r = 0; r < kk; ++r) p[static_cast<std::size_t>(r)] = chi->exponent_at(action.apply(r, t.a), n_chi);
        it = cache.emplace(key, std::move(p)).first;
      }
      ph = it->second;
    }
    // (U^s u)(l, r) = chi(r . alpha) u(l2, r + beta); u = 1_{f_u} eta_e, v = 1_{f_v} eta_e2
    for (std::int64_t e = 0; e < kk; ++e)
      for (std::int64_t e2 = 0; e2 < kk; ++e2) {
        const std::size_t u = static_cast<std::size_t>(f_u * kk + e), v = static_cast<std::size_t>(f_v * kk + e2);
        auto* c = g.counts.data() + (u * g.fam + v) * static_cast<std::size_t>(g.root);
        for (std::int64_t r = 0; r < kk; ++r) {
          const std::int64_t ex = ph[static_cast<std::size_t>(r)] * sc + (e * floor_mod(r + t.k, kk) - e2 * r) * sk;
          ++c[floor_mod(ex, g.root)];
        }
      }
  }
  return g;
}

}  // namespace detail

struct ProbeOptions {
  std::size_t test_level = 1;
  std::int64_t cap = kDefaultStateCap;
  double bound_constant = 3.0;
  std::size_t subset_limit = 10;  // exact subset maximum when h_{n0} <= this
};

/// <U^{h_n} u, v> on the depth-(n+1) model against the limit predicted by the stage's label.
inline WeakLimitReport weak_limit_probe(const CocycleModel& full, std::size_t stage, const Character* chi,
                                        const ProbeOptions& opt = {}) {
  if (stage >= full.schedule().depth()) fail(ErrorKind::OutOfRange, "probed stage beyond the schedule");
  const bool nontrivial = chi && !chi->is_trivial();
  const auto& label = full.labels()[stage];
  WeakLimitReport rep;
  rep.stage = stage;
  rep.label = label;
  rep.test_level = opt.test_level;
  switch (label.kind) {
    case LabelKind::RigidTranslate: rep.prediction = nontrivial ? Prediction::RigidChi : Prediction::Rigid; break;
    case LabelKind::DelayedTranslate: rep.prediction = nontrivial ? Prediction::DelayedChi : Prediction::Delayed; break;
    case LabelKind::RigidRotate:
      if (nontrivial) fail(ErrorKind::Mismatch, "no prediction for a nontrivial chi on an L stage");
      rep.prediction = Prediction::Rotate;
      break;
    case LabelKind::Plain: fail(ErrorKind::Mismatch, "plain stages carry no weak-limit prediction");
  }
  if (opt.test_level > stage) fail(ErrorKind::OutOfRange, "test level must not exceed the probed stage");
  const auto& st = full.schedule().stages[stage];
  rep.delta = st.delta;
  rep.r = st.r_n;
  rep.h = st.h;
  rep.bound = opt.bound_constant / static_cast<double>(st.r_n);
  rep.diagonal_gate = nontrivial;
  if (chi) rep.chi = chi->exponents();

  const CocycleModel model = truncate(full, stage + 1);
  const std::int64_t kk = model.k_order();
  LevelTable table(model, stage + 1, std::max<std::int64_t>(1, opt.cap / kk));
  rep.model_levels = table.levels();
  const auto atoms = level_atoms(table.geometry(), opt.test_level);
  const std::int64_t n_atoms = table.geometry().height(opt.test_level);
  std::vector<std::int64_t> atom_count(static_cast<std::size_t>(n_atoms), 0);
  for (auto a : atoms)
    if (a >= 0) ++atom_count[static_cast<std::size_t>(a)];
  for (std::int32_t f = 0; f < n_atoms; ++f)
    for (std::int64_t e = 0; e < kk; ++e) rep.family.push_back({f, e});

  const Character* used = nontrivial ? chi : nullptr;
  const auto g_h = detail::shifted_gram(table, atoms, n_atoms, st.h, used);
  std::optional<detail::GramCounts> g_back;
  if (rep.prediction == Prediction::Delayed || rep.prediction == Prediction::DelayedChi)
    g_back = detail::shifted_gram(table, atoms, n_atoms, -1, used);
  std::complex<double> lval{1.0, 0.0};
  if (nontrivial) {
    rep.l_value = l_chi(model.group().action(), *chi, label.a);
    lval = rep.l_value->to_complex();
  }
  const double h_total = static_cast<double>(table.levels());
  const double delta = rep.delta;
  const std::size_t fam = rep.family.size();
  std::vector<double> dev_real(static_cast<std::size_t>(n_atoms * n_atoms), 0.0);  // eta = 0 block, for subsets
  for (std::size_t u = 0; u < fam; ++u)
    for (std::size_t v = 0; v < fam; ++v) {
      const auto& fu = rep.family[u];
      const auto& fv = rep.family[v];
      const double mu_u = static_cast<double>(atom_count[static_cast<std::size_t>(fu.atom)]) / h_total;
      const double mu_v = static_cast<double>(atom_count[static_cast<std::size_t>(fv.atom)]) / h_total;
      const double ip = (u == v) ? mu_u : 0.0;
      const double p0 = (fu.eta == 0 && fv.eta == 0) ? mu_u * mu_v : 0.0;
      std::complex<double> pred;
      switch (rep.prediction) {
        case Prediction::Rigid: pred = delta * ip + (1 - delta) * p0; break;
        case Prediction::Rotate:
          pred = delta * RootOfUnity(fu.eta * label.k, kk).to_complex() * ip + (1 - delta) * p0;
          break;
        case Prediction::Delayed: pred = delta * (ip + g_back->sum(u, v).to_complex()) + (1 - 2 * delta) * p0; break;
        case Prediction::RigidChi: pred = delta * lval * ip; break;
        case Prediction::DelayedChi: pred = delta * (ip + lval * g_back->sum(u, v).to_complex()); break;
      }
      const auto value = g_h.sum(u, v).to_complex();
      const double d = std::abs(value - pred);
      rep.entries.push_back({u, v, value, pred, d});
      rep.max_deviation_all = std::max(rep.max_deviation_all, d);
      if (u == v) rep.max_deviation_diagonal = std::max(rep.max_deviation_diagonal, d);
      if (fu.eta == 0 && fv.eta == 0) dev_real[static_cast<std::size_t>(fu.atom * n_atoms + fv.atom)] = (value - pred).real();
    }
  if (!nontrivial && n_atoms <= static_cast<std::int64_t>(opt.subset_limit)) {
    // deviation is additive over atoms, so every cylinder pair is a sum of atom deviations
    const std::size_t na = static_cast<std::size_t>(n_atoms);
    double best = 0.0;
    std::vector<double> row(na);
    for (std::uint64_t bu = 1; bu < (1ULL << na); ++bu) {
      std::fill(row.begin(), row.end(), 0.0);
      for (std::size_t f = 0; f < na; ++f)
        if (bu >> f & 1)
          for (std::size_t f2 = 0; f2 < na; ++f2) row[f2] += dev_real[f * na + f2];
      for (std::uint64_t bv = 1; bv < (1ULL << na); ++bv) {
        double s = 0.0;
        for (std::size_t f2 = 0; f2 < na; ++f2)
          if (bv >> f2 & 1) s += row[f2];
        best = std::max(best, std::abs(s));
      }
    }
    rep.max_deviation_subsets = best;
  }
  if (!nontrivial && label.kind == LabelKind::RigidTranslate && label.a == model.a_group().zero()) {
    double excess = -1e300;
    for (std::size_t u = 0; u < fam; ++u) {
      const auto& fu = rep.family[u];
      const double mu = static_cast<double>(atom_count[static_cast<std::size_t>(fu.atom)]) / h_total;
      std::complex<double> val = g_h.sum(u, u).to_complex();
      double norm2 = mu;
      if (fu.eta == 0) {  // v = 1_f - mu(f)
        val -= mu * mu;
        norm2 = mu - mu * mu;
      }
      excess = std::max(excess, std::abs(val) - delta * norm2);
    }
    rep.weak_mixing_excess = excess;
  }
  rep.gated_deviation = nontrivial ? rep.max_deviation_diagonal : rep.max_deviation_all;
  if (rep.max_deviation_subsets) rep.gated_deviation = std::max(rep.gated_deviation, *rep.max_deviation_subsets);
  rep.pass = rep.gated_deviation <= rep.bound;
  if (rep.weak_mixing_excess && *rep.weak_mixing_excess > rep.bound) rep.pass = false;
  return rep;
}

/// <U^s u, v> by s explicit steps of the phased permutation; cross-check for the gram counts.
inline std::complex<double> stepped_inner_product(const PhasedCycleOperator& op, const std::vector<std::complex<double>>& u,
                                                  const std::vector<std::complex<double>>& v, std::int64_t steps) {
  auto w = u;
  for (std::int64_t i = 0; i < steps; ++i) w = op.apply(w);
  std::complex<double> s{0.0, 0.0};
  for (std::size_t i = 0; i < w.size(); ++i) s += w[i] * std::conj(v[i]);
  return s / static_cast<double>(w.size());
}

// ---------------------------------------------------------------------------
// correlation decay

struct DecayRow {
  std::int64_t lag = 0;
  std::size_t pair = 0;  // a * atoms + b
  std::int64_t numerator = 0;
  std::int64_t denominator = 1;
  double value() const { return static_cast<double>(numerator) / static_cast<double>(denominator); }
};

struct DecayBucket {
  std::size_t scale = 0;  // lags in [h_scale, 2 h_scale]
  std::int64_t lo = 0, hi = 0;
  double max_value = 0.0;
};

struct DecayTable {
  std::int64_t levels = 0;
  std::size_t test_level = 1;
  std::int64_t atoms = 0;
  std::vector<DecayRow> rows;
  std::vector<DecayBucket> buckets;
  double ratio = 0.0;  // last bucket / first bucket
  bool no_decay = false;
};

namespace detail {

class Bits {
 public:
  explicit Bits(std::int64_t n) : n_(n), w_(static_cast<std::size_t>(n / 64 + 2), 0) {}
  void set(std::int64_t i) { w_[static_cast<std::size_t>(i >> 6)] |= 1ULL << (i & 63); }
  std::int64_t count() const {
    std::int64_t c = 0;
    for (auto x : w_) c += std::popcount(x);
    return c;
  }
  std::uint64_t window(std::int64_t pos) const {
    const auto q = static_cast<std::size_t>(pos >> 6);
    const int s = static_cast<int>(pos & 63);
    return s == 0 ? w_[q] : (w_[q] >> s) | (w_[q + 1] << (64 - s));
  }
  /// popcount of (this[a..a+len) & o[b..b+len))
  std::int64_t and_count(std::int64_t a, const Bits& o, std::int64_t b, std::int64_t len) const {
    std::int64_t c = 0;
    for (std::int64_t off = 0; off < len; off += 64) {
      std::uint64_t x = window(a + off) & o.window(b + off);
      const std::int64_t rem = len - off;
      if (rem < 64) x &= (1ULL << rem) - 1;
      c += std::popcount(x);
    }
    return c;
  }

 private:
  std::int64_t n_;
  std::vector<std::uint64_t> w_;
};

}  // namespace detail

inline std::vector<std::int64_t> dyadic_lags(std::int64_t h, std::int64_t points) {
  std::vector<std::int64_t> out;
  for (std::int64_t t = 0; t < points; ++t) out.push_back(h + (h * t) / (points - 1));
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

namespace detail {

/// Indicator bitsets of the level-n0 atoms inside the depth-m tower.
struct AtomBits {
  std::int64_t levels = 0;
  std::vector<Bits> bits;
  std::vector<std::int64_t> sizes;
};

inline AtomBits atom_bits(const TowerGeometry& g, std::size_t n0, std::int64_t level_cap) {
  if (g.top() > level_cap) fail(ErrorKind::SizeLimit, "tower too tall for the decay computation");
  if (n0 > g.depth()) fail(ErrorKind::OutOfRange, "test level beyond the depth");
  const std::int64_t na = g.height(n0);
  if (na > 64) fail(ErrorKind::SizeLimit, "too many atoms for the decay computation");
  std::vector<std::uint8_t> arr(static_cast<std::size_t>(na));
  for (std::int64_t i = 0; i < na; ++i) arr[static_cast<std::size_t>(i)] = static_cast<std::uint8_t>(i);
  for (std::size_t j = n0; j < g.depth(); ++j) {
    std::vector<std::uint8_t> next(static_cast<std::size_t>(g.height(j + 1)), 255);
    for (auto c : g.cuts(j)) std::copy(arr.begin(), arr.end(), next.begin() + c);
    arr = std::move(next);
  }
  AtomBits out;
  out.levels = g.top();
  out.bits.assign(static_cast<std::size_t>(na), Bits(out.levels));
  for (std::int64_t l = 0; l < out.levels; ++l)
    if (arr[static_cast<std::size_t>(l)] != 255) out.bits[arr[static_cast<std::size_t>(l)]].set(l);
  for (const auto& b : out.bits) out.sizes.push_back(b.count());
  return out;
}

/// Rows for one lag, every ordered pair (a, b): |#{l in B, l + lag in A} h - |A||B|| / h^2, reduced.
inline void lag_rows(const AtomBits& ab, std::int64_t lag, std::vector<DecayRow>& out) {
  const std::int64_t h = ab.levels;
  const auto na = static_cast<std::int64_t>(ab.bits.size());
  lag = floor_mod(lag, h);
  for (std::int64_t a = 0; a < na; ++a)
    for (std::int64_t b = 0; b < na; ++b) {
      const auto& A = ab.bits[static_cast<std::size_t>(a)];
      const auto& B = ab.bits[static_cast<std::size_t>(b)];
      const std::int64_t cnt = B.and_count(0, A, lag, h - lag) + B.and_count(h - lag, A, 0, lag);
      __int128 num = static_cast<__int128>(cnt) * h -
                     static_cast<__int128>(ab.sizes[static_cast<std::size_t>(a)]) * ab.sizes[static_cast<std::size_t>(b)];
      if (num < 0) num = -num;
      __int128 den = static_cast<__int128>(h) * h;
      __int128 x = num, y = den;
      while (y) {
        const __int128 r = x % y;
        x = y;
        y = r;
      }
      if (x > 1) {
        num /= x;
        den /= x;
      }
      out.push_back({lag, static_cast<std::size_t>(a * na + b), static_cast<std::int64_t>(num), static_cast<std::int64_t>(den)});
    }
}

}  // namespace detail

/// |mu(T^lag A cap B) - mu(A) mu(B)| for every pair of level-n0 atoms and every given lag.
inline std::vector<DecayRow> correlation_rows(const CFSchedule& s, std::size_t depth, std::size_t n0,
                                              const std::vector<std::int64_t>& lags, std::int64_t level_cap = 1LL << 27) {
  const auto ab = detail::atom_bits(TowerGeometry(s, depth), n0, level_cap);
  std::vector<DecayRow> out;
  for (auto lag : lags) detail::lag_rows(ab, lag, out);
  return out;
}

/// Decay table over the buckets [h_j, 2 h_j], j = 1, 2, ..., for level-n0 atoms on the depth-m tower.
inline DecayTable correlation_decay(const CFSchedule& s, std::size_t depth, std::size_t n0 = 1, std::int64_t level_cap = 1LL << 27,
                                    std::int64_t points = 9) {
  const TowerGeometry g(s, depth);
  if (n0 >= depth) fail(ErrorKind::OutOfRange, "test level must be below the depth");
  const auto ab = detail::atom_bits(g, n0, level_cap);
  const std::int64_t h = g.top();

  DecayTable out;
  out.levels = h;
  out.test_level = n0;
  out.atoms = static_cast<std::int64_t>(ab.bits.size());
  for (std::size_t j = 1; j < depth; ++j) {
    if (2 * g.height(j) >= h) break;
    DecayBucket bucket{j, g.height(j), 2 * g.height(j), 0.0};
    const std::size_t first = out.rows.size();
    for (auto lag : dyadic_lags(g.height(j), points)) detail::lag_rows(ab, lag, out.rows);
    for (std::size_t i = first; i < out.rows.size(); ++i) bucket.max_value = std::max(bucket.max_value, out.rows[i].value());
    out.buckets.push_back(bucket);
  }
  if (out.buckets.size() >= 2) {
    const double first = out.buckets.front().max_value;
    out.ratio = first > 0 ? out.buckets.back().max_value / first : 1.0;
  } else {
    out.ratio = 1.0;
  }
  out.no_decay = out.ratio > 0.5;
  return out;
}

// ---------------------------------------------------------------------------
// disjointness certificates and the multiplicity report

struct EquivalenceWitness {
  std::int64_t k = 0;
};
struct DisjointnessCertificate {
  Element a;
  CyclotomicSum l_chi, l_chi2;
};
using CertificateResult = std::variant<EquivalenceWitness, DisjointnessCertificate>;

inline CertificateResult disjointness_certificate(const ModuleAction& action, const Character& chi, const Character& chi2,
                                                  std::int64_t cap = kDefaultEnumerationCap) {
  if (!action.is_cyclic()) fail(ErrorKind::InvalidAlgebra, "cyclic acting group expected");
  for (std::int64_t k = 0; k < action.cyclic_order(); ++k)
    if (compose(chi, action.power(0, k)) == chi2) return EquivalenceWitness{k};
  const auto& a = action.module();
  a.require_enumerable(cap);
  std::set<std::int64_t> done;
  for (std::int64_t i = 1; i < a.size(); ++i) {
    if (done.count(i)) continue;
    const Element x = a.element_at(i);
    const auto orb = orbit(action, x);
    for (const auto& y : orb) done.insert(a.index_of(y));  // l values are constant on orbits
    auto l1 = l_chi(action, chi, x);
    auto l2 = l_chi(action, chi2, x);
    if (!cyclo_equal(l1, l2)) return DisjointnessCertificate{x, std::move(l1), std::move(l2)};
  }
  fail(ErrorKind::Consistency, "no element separates two inequivalent characters");
}

struct CharacterClass {
  std::vector<Element> members;  // characters of A, i.e. elements of D
  std::int64_t size() const { return static_cast<std::int64_t>(members.size()); }
};

struct PairCertificate {
  std::size_t class1 = 0, class2 = 0;
  Element a;
  std::string l1, l2;
  double overlap = -1.0;  // spectral overlap of the representatives, when computed
};

struct MultiplicityReport {
  Mode mode = Mode::Section3;
  std::set<std::int64_t> requested;
  std::set<std::int64_t> l_set;
  std::vector<CharacterClass> classes;
  std::set<std::int64_t> class_sizes;  // over nonzero characters
  std::set<std::int64_t> multiplicities;
  std::vector<PairCertificate> certificates;
  std::int64_t equivalence_checks = 0;
  std::int64_t equivalence_failures = 0;
  std::optional<std::size_t> spectral_depth;
  bool sizes_match = false;
  bool matches_request = false;
  bool ok() const { return sizes_match && matches_request && equivalence_failures == 0; }
};

inline std::string describe(const CyclotomicSum& s) {
  const auto z = s.to_complex();
  char buf[96];
  std::snprintf(buf, sizeof buf, "%.12g%+.12gi", z.real(), z.imag());
  return buf;
}

/// Classes chi ~ chi o k on the characters of A/H (identified with D), their sizes,
/// spectra evidence (optional) and a certificate for every pair of classes.
inline MultiplicityReport multiplicity_report(const AlgebraicTriple& triple, const ModuleAction& a_action, Mode mode,
                                              const std::set<std::int64_t>& requested, SpectrumCache* spectra = nullptr,
                                              std::int64_t cap = kDefaultEnumerationCap) {
  MultiplicityReport rep;
  rep.mode = mode;
  rep.requested = requested;
  rep.l_set = l_set(triple.action, triple.d).values;
  const auto& b = triple.b;
  std::set<std::int64_t> assigned;
  for (const auto& d : triple.d.elements()) {
    const auto idx = b.index_of(d);
    if (assigned.count(idx)) continue;
    CharacterClass c;
    for (const auto& y : orbit(triple.action, d))
      if (triple.d.contains(y)) {
        c.members.push_back(y);
        assigned.insert(b.index_of(y));
      }
    rep.classes.push_back(std::move(c));
  }
  const auto zero = b.zero();
  for (const auto& c : rep.classes)
    if (c.members.front() != zero) rep.class_sizes.insert(c.size());
  rep.sizes_match = rep.class_sizes == rep.l_set;
  rep.multiplicities = rep.class_sizes;
  if (mode == Mode::Section4) rep.multiplicities.insert(2);
  rep.matches_request = rep.multiplicities == requested;

  for (std::size_t i = 0; i < rep.classes.size(); ++i)
    for (std::size_t j = i + 1; j < rep.classes.size(); ++j) {
      const Character c1(a_action.module(), rep.classes[i].members.front());
      const Character c2(a_action.module(), rep.classes[j].members.front());
      const auto res = disjointness_certificate(a_action, c1, c2, cap);
      if (std::holds_alternative<EquivalenceWitness>(res))
        fail(ErrorKind::Consistency, "characters from different classes are equivalent");
      const auto& cert = std::get<DisjointnessCertificate>(res);
      PairCertificate pc{i, j, cert.a, describe(cert.l_chi), describe(cert.l_chi2)};
      if (spectra) pc.overlap = spectral_overlap(spectra->chi(c1), spectra->chi(c2));
      rep.certificates.push_back(std::move(pc));
    }
  if (spectra) {
    rep.spectral_depth = spectra->table().geometry().depth();
    for (const auto& c : rep.classes)
      for (const auto& m : c.members)
        for (const auto& v : class_equivalence_check(*spectra, Character(a_action.module(), m))) {
          ++rep.equivalence_checks;
          if (!v.equal) ++rep.equivalence_failures;
        }
  }
  if (!rep.sizes_match) fail(ErrorKind::Consistency, "class sizes differ from L(K,B,D)");
  return rep;
}

// ---------------------------------------------------------------------------
// simplicity probe

struct SimplicityRow {
  std::size_t basis = 0;
  double residual = 0.0;
  bool ill_conditioned = false;
};

/// Residual of each standard basis vector w after least-squares projection onto
/// span{(op_1^q + ... + op_n^q) v : |q| <= Q}, relative to |w| = 1.
inline std::vector<SimplicityRow> simplicity_probe(const std::vector<PhasedCycleOperator>& ops,
                                                   const std::vector<std::vector<std::complex<double>>>& vs, std::int64_t q_max) {
  if (ops.size() != vs.size() || ops.empty()) fail(ErrorKind::InvalidParameter, "one test vector per operator");
  std::int64_t dim = 0;
  for (std::size_t i = 0; i < ops.size(); ++i) {
    if (static_cast<std::int64_t>(vs[i].size()) != ops[i].n) fail(ErrorKind::InvalidParameter, "vector size mismatch");
    dim += ops[i].n;
  }
  q_max = std::min(q_max, dim / 2);
  Eigen::MatrixXcd basis(dim, 2 * q_max + 1);
  std::int64_t off = 0;
  for (std::size_t i = 0; i < ops.size(); ++i) {
    const Eigen::MatrixXcd u = ops[i].dense();
    const Eigen::MatrixXcd uinv = u.adjoint();
    Eigen::VectorXcd v(ops[i].n);
    for (std::int64_t s = 0; s < ops[i].n; ++s) v(s) = vs[i][static_cast<std::size_t>(s)];
    Eigen::VectorXcd fwd = v, bwd = v;
    basis.block(off, q_max, ops[i].n, 1) = v;
    for (std::int64_t q = 1; q <= q_max; ++q) {
      fwd = u * fwd;
      bwd = uinv * bwd;
      basis.block(off, q_max + q, ops[i].n, 1) = fwd;
      basis.block(off, q_max - q, ops[i].n, 1) = bwd;
    }
    off += ops[i].n;
  }
  Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXcd> cod;
  cod.setThreshold(1e-9);
  cod.compute(basis);
  const bool singular = cod.rank() == 0;
  std::vector<SimplicityRow> out;
  for (std::int64_t w = 0; w < dim; ++w) {
    Eigen::VectorXcd e = Eigen::VectorXcd::Zero(dim);
    e(w) = 1.0;
    if (singular) {
      out.push_back({static_cast<std::size_t>(w), 1.0, true});
      continue;
    }
    const Eigen::VectorXcd coef = cod.solve(e);
    out.push_back({static_cast<std::size_t>(w), (e - basis * coef).norm(), false});
  }
  return out;
}

}  // namespace cfmix
