#pragma once

// Stage labels, per-stage maps (beta, alpha), coordinate words and the
// (C,F)-cocycle with values in the semidirect product K x| A (K cyclic).

#include <algorithm>
#include <cstdint>
#include <string>
#include <vector>

#include "cfmix/cf_builder.hpp"
#include "cfmix/finite_algebra.hpp"

namespace cfmix {

enum class Mode { Section3, Section4 };

inline std::string to_string(Mode m) { return m == Mode::Section3 ? "section3" : "section4"; }
inline Mode mode_from_string(const std::string& s) {
  if (s == "section3") return Mode::Section3;
  if (s == "section4") return Mode::Section4;
  fail(ErrorKind::InvalidConfig, "mode must be section3 or section4");
}

enum class LabelKind { Plain, RigidTranslate, RigidRotate, DelayedTranslate };

inline std::string to_string(LabelKind k) {
  switch (k) {
    case LabelKind::Plain: return "plain";
    case LabelKind::RigidTranslate: return "N";
    case LabelKind::RigidRotate: return "L";
    case LabelKind::DelayedTranslate: return "M";
  }
  return "plain";
}
inline LabelKind label_kind_from_string(const std::string& s) {
  if (s == "plain") return LabelKind::Plain;
  if (s == "N") return LabelKind::RigidTranslate;
  if (s == "L") return LabelKind::RigidRotate;
  if (s == "M") return LabelKind::DelayedTranslate;
  fail(ErrorKind::InvalidLabel, "unknown label kind '" + s + "'");
}

struct StageLabel {
  LabelKind kind = LabelKind::Plain;
  Element a;           // payload for N and M
  std::int64_t k = 0;  // payload for L

  static StageLabel plain() { return {}; }
  static StageLabel translate(Element a) { return {LabelKind::RigidTranslate, std::move(a), 0}; }
  static StageLabel rotate(std::int64_t k) { return {LabelKind::RigidRotate, {}, k}; }
  static StageLabel delayed(Element a) { return {LabelKind::DelayedTranslate, std::move(a), 0}; }

  bool operator==(const StageLabel&) const = default;
  std::string str() const {
    switch (kind) {
      case LabelKind::Plain: return "plain";
      case LabelKind::RigidRotate: return "L" + std::to_string(k);
      default: return to_string(kind) + to_string(a);
    }
  }
};

struct LabelTargets {
  std::vector<Element> a;       // A_0 enumeration
  std::vector<std::int64_t> k;  // K_0 enumeration
};

/// Targets = every element of A and of K, in mixed-radix order.
inline LabelTargets all_targets(const FiniteAbelianGroup& a, std::int64_t k_order, std::int64_t cap = kDefaultEnumerationCap) {
  LabelTargets t;
  t.a = a.elements(cap);
  for (std::int64_t k = 0; k < k_order; ++k) t.k.push_back(k);
  return t;
}

/// Kinds visited in turn by stage index; kinds without targets are skipped.
inline std::vector<LabelKind> kind_cycle(Mode mode, const LabelTargets& targets) {
  std::vector<LabelKind> out;
  if (!targets.a.empty()) out.push_back(LabelKind::RigidTranslate);
  if (mode == Mode::Section4 && !targets.a.empty()) out.push_back(LabelKind::DelayedTranslate);
  if (!targets.k.empty()) out.push_back(LabelKind::RigidRotate);
  if (out.empty()) fail(ErrorKind::InvalidAlgebra, "empty target enumeration");
  return out;
}

inline bool labelable(const CFStage& s) { return s.shape == CutShape::Section3 || s.shape == CutShape::Section4; }

/// Round-robin labels: the kind cycles with the (labelable) stage index, and each
/// kind walks through its own targets in order. Staircase and custom stages are plain.
inline std::vector<StageLabel> schedule_labels(const CFSchedule& sched, const LabelTargets& targets, Mode mode) {
  const auto kinds = kind_cycle(mode, targets);
  std::vector<StageLabel> out;
  std::size_t slot = 0, next_a = 0, next_m = 0, next_k = 0;
  for (const auto& st : sched.stages) {
    if (!labelable(st)) {
      out.push_back(StageLabel::plain());
      continue;
    }
    switch (kinds[slot++ % kinds.size()]) {
      case LabelKind::RigidTranslate: out.push_back(StageLabel::translate(targets.a[next_a++ % targets.a.size()])); break;
      case LabelKind::DelayedTranslate: out.push_back(StageLabel::delayed(targets.a[next_m++ % targets.a.size()])); break;
      case LabelKind::RigidRotate: out.push_back(StageLabel::rotate(targets.k[next_k++ % targets.k.size()])); break;
      case LabelKind::Plain: break;
    }
  }
  return out;
}

/// Label kinds for `count` labelable stages, without payloads.
inline std::vector<LabelKind> kind_sequence(std::size_t count, Mode mode, const LabelTargets& targets) {
  const auto kinds = kind_cycle(mode, targets);
  std::vector<LabelKind> out;
  for (std::size_t i = 0; i < count; ++i) out.push_back(kinds[i % kinds.size()]);
  return out;
}

struct CocycleStageMaps {
  std::vector<std::int64_t> beta;
  std::vector<Element> alpha;
};

inline CocycleStageMaps stage_maps(const StageLabel& label, const CFStage& stage, const FiniteAbelianGroup& a_group,
                                   std::int64_t k_order) {
  const auto r = static_cast<std::int64_t>(stage.cuts.size());
  CocycleStageMaps m{std::vector<std::int64_t>(static_cast<std::size_t>(r), 0),
                     std::vector<Element>(static_cast<std::size_t>(r), a_group.zero())};
  const std::int64_t i_n = stage.i_n;
  switch (label.kind) {
    case LabelKind::Plain: break;
    case LabelKind::RigidTranslate:
      if (!labelable(stage)) fail(ErrorKind::InvalidLabel, "N label needs a section3/section4 stage");
      a_group.require(label.a);
      for (std::int64_t i = 1; i < r; ++i) m.alpha[i] = a_group.scale(-std::min(i, i_n - 1), label.a);
      break;
    case LabelKind::RigidRotate:
      if (!labelable(stage)) fail(ErrorKind::InvalidLabel, "L label needs a section3/section4 stage");
      if (label.k < 0 || label.k >= k_order) fail(ErrorKind::InvalidLabel, "L payload outside K");
      for (std::int64_t i = 1; i < r; ++i) m.beta[i] = floor_mod(-std::min(i, i_n - 1) * label.k, k_order);
      break;
    case LabelKind::DelayedTranslate:
      if (stage.shape != CutShape::Section4) fail(ErrorKind::InvalidLabel, "M label needs a section4 stage");
      a_group.require(label.a);
      for (std::int64_t i = i_n; i < r; ++i) m.alpha[i] = a_group.scale(-std::min(i - i_n + 1, i_n), label.a);
      break;
  }
  return m;
}

/// Element of the semidirect product K x| A with (k,a)(k',a') = (k+k', a + k.a').
struct KA {
  std::int64_t k = 0;
  Element a;
  bool operator==(const KA&) const = default;
};

class Semidirect {
 public:
  explicit Semidirect(const ModuleAction* action) : action_(action) {
    if (!action_->is_cyclic()) fail(ErrorKind::InvalidAlgebra, "the cocycle engine needs a cyclic acting group");
  }
  std::int64_t k_order() const { return action_->cyclic_order(); }
  const FiniteAbelianGroup& a_group() const { return action_->module(); }
  const ModuleAction& action() const { return *action_; }

  KA identity() const { return {0, a_group().zero()}; }
  KA mul(const KA& x, const KA& y) const {
    return {floor_mod(x.k + y.k, k_order()), a_group().add(x.a, action_->apply(x.k, y.a))};
  }
  KA inv(const KA& x) const {
    return {floor_mod(-x.k, k_order()), a_group().neg(action_->apply(floor_mod(-x.k, k_order()), x.a))};
  }

 private:
  const ModuleAction* action_;
};

/// Level of an h_m tower written as f_n + c_{n+1} + ... + c_m with the least n.
struct CoordinateWord {
  std::size_t least_n = 0;         // 0 for points of F_0 + C_1 + ... + C_m
  std::int64_t f = 0;              // residual, in F_{least_n}
  std::vector<std::int32_t> idx;   // cut index for stages 1..m; 0 below least_n
  bool spacer() const { return least_n > 0; }
  std::size_t depth() const { return idx.size(); }
  bool operator==(const CoordinateWord&) const = default;
};

/// Heights and cut tables for fast decomposition of levels.
class TowerGeometry {
 public:
  TowerGeometry() = default;
  TowerGeometry(const CFSchedule& s, std::size_t depth) : heights_(s.heights()) {
    if (depth > s.depth()) fail(ErrorKind::OutOfRange, "depth beyond the schedule");
    heights_.resize(depth + 1);
    for (std::size_t j = 0; j < depth; ++j) cuts_.push_back(s.stages[j].cuts);
  }
  std::size_t depth() const { return cuts_.size(); }
  std::int64_t height(std::size_t n) const { return heights_[n]; }
  std::int64_t top() const { return heights_.back(); }
  const std::vector<std::int64_t>& cuts(std::size_t stage) const { return cuts_[stage]; }

  /// Greedy decomposition from the top; the least n is where the residual falls in a spacer.
  CoordinateWord word(std::int64_t level) const {
    if (level < 0 || level >= top()) fail(ErrorKind::OutOfRange, "level outside the tower");
    CoordinateWord w;
    w.idx.assign(depth(), 0);
    std::int64_t res = level;
    for (std::size_t j = depth(); j-- > 0;) {
      const auto& c = cuts_[j];
      const auto it = std::upper_bound(c.begin(), c.end(), res);
      const auto t = static_cast<std::size_t>(it - c.begin()) - 1;
      if (res - c[t] >= heights_[j]) {
        w.least_n = j + 1;
        w.f = res;
        std::fill(w.idx.begin(), w.idx.begin() + static_cast<std::ptrdiff_t>(j + 1), 0);
        return w;
      }
      w.idx[j] = static_cast<std::int32_t>(t);
      res -= c[t];
    }
    w.f = res;
    return w;
  }

  std::int64_t level_of(const CoordinateWord& w) const {
    std::int64_t l = w.f;
    for (std::size_t j = w.least_n; j < w.idx.size(); ++j) l += cuts_[j][static_cast<std::size_t>(w.idx[j])];
    return l;
  }

 private:
  std::vector<std::int64_t> heights_;
  std::vector<std::vector<std::int64_t>> cuts_;
};

inline CoordinateWord pi_normalize(std::int64_t level, const CFSchedule& s) { return TowerGeometry(s, s.depth()).word(level); }

/// Labels and maps for every stage, plus the algebra they live in.
class CocycleModel {
 public:
  CocycleModel(const CFSchedule& sched, std::vector<StageLabel> labels, const ModuleAction& a_action)
      : sched_(sched), labels_(std::move(labels)), group_(&a_action) {
    if (labels_.size() != sched.depth()) fail(ErrorKind::InvalidLabel, "one label per stage required");
    for (std::size_t j = 0; j < sched.depth(); ++j)
      maps_.push_back(stage_maps(labels_[j], sched.stages[j], a_action.module(), group_.k_order()));
  }

  const CFSchedule& schedule() const { return sched_; }
  const std::vector<StageLabel>& labels() const { return labels_; }
  const std::vector<CocycleStageMaps>& maps() const { return maps_; }
  const Semidirect& group() const { return group_; }
  std::int64_t k_order() const { return group_.k_order(); }
  const FiniteAbelianGroup& a_group() const { return group_.a_group(); }

  KA stage_value(std::size_t stage, std::int32_t index) const {
    const auto i = static_cast<std::size_t>(index);
    return {maps_[stage].beta[i], maps_[stage].alpha[i]};
  }

  /// gamma_1(c_1) ... gamma_m(c_m) for the pi-image of w (coordinates below least_n are 0).
  KA word_value(const CoordinateWord& w) const {
    KA g = group_.identity();
    for (std::size_t j = w.least_n; j < w.idx.size(); ++j) {
      const auto i = static_cast<std::size_t>(w.idx[j]);
      g.a = group_.a_group().add(g.a, group_.action().apply(g.k, maps_[j].alpha[i]));
      g.k = floor_mod(g.k + maps_[j].beta[i], k_order());
    }
    return g;
  }

 private:
  CFSchedule sched_;
  std::vector<StageLabel> labels_;
  std::vector<CocycleStageMaps> maps_;
  Semidirect group_;
};

/// gamma(x, y) = Gamma(pi x) Gamma(pi y)^{-1}, written out as
/// (B_x - B_y, A_x - theta^{B_x - B_y} A_y).
inline KA combine_words(const Semidirect& g, const KA& gx, const KA& gy) {
  const std::int64_t k = floor_mod(gx.k - gy.k, g.k_order());
  return {k, g.a_group().sub(gx.a, g.action().apply(k, gy.a))};
}

inline KA evaluate_cocycle(const CoordinateWord& x, const CoordinateWord& y, const CocycleModel& model) {
  if (x.depth() != y.depth() || x.depth() > model.schedule().depth())
    fail(ErrorKind::InvalidPair, "words of different depths");
  return combine_words(model.group(), model.word_value(x), model.word_value(y));
}

/// Per-level cocycle data at a fixed depth: Gamma(pi x_l) as (K exponent, A index).
class LevelTable {
 public:
  LevelTable(const CocycleModel& model, std::size_t depth, std::int64_t cap)
      : model_(&model), geom_(model.schedule(), depth) {
    const std::int64_t h = geom_.top();
    if (h > cap) fail(ErrorKind::SizeLimit, "tower height " + std::to_string(h) + " exceeds the state cap");
    big_k_.resize(static_cast<std::size_t>(h));
    a_idx_.resize(static_cast<std::size_t>(h));
    for (std::int64_t l = 0; l < h; ++l) {
      auto w = geom_.word(l);
      // words at this depth: evaluate only the first `depth` stages
      const KA g = model.word_value(w);
      big_k_[static_cast<std::size_t>(l)] = g.k;
      a_idx_[static_cast<std::size_t>(l)] = model.a_group().index_of(g.a);
    }
  }

  const CocycleModel& model() const { return *model_; }
  const TowerGeometry& geometry() const { return geom_; }
  std::int64_t levels() const { return geom_.top(); }
  std::int64_t k_order() const { return model_->k_order(); }

  KA gamma_at(std::int64_t l) const {
    const auto i = static_cast<std::size_t>(l);
    return {big_k_[i], model_->a_group().element_at(a_idx_[i])};
  }
  /// gamma(x_l, x_{l'}) for any two levels.
  KA value(std::int64_t l, std::int64_t l2) const { return combine_words(model_->group(), gamma_at(l), gamma_at(l2)); }
  /// Value on the edge l -> l+1 (mod the tower height).
  KA transition(std::int64_t l) const { return value(l, (l + 1) % levels()); }

 private:
  const CocycleModel* model_;
  TowerGeometry geom_;
  std::vector<std::int64_t> big_k_;
  std::vector<std::int64_t> a_idx_;
};

inline std::vector<KA> transition_values(const LevelTable& table) {
  std::vector<KA> out;
  out.reserve(static_cast<std::size_t>(table.levels()));
  for (std::int64_t l = 0; l < table.levels(); ++l) out.push_back(table.transition(l));
  return out;
}

/// Model restricted to the first `depth` stages.
inline CocycleModel truncate(const CocycleModel& model, std::size_t depth) {
  CFSchedule s = model.schedule();
  if (depth > s.depth()) fail(ErrorKind::OutOfRange, "depth beyond the schedule");
  s.stages.resize(depth);
  return CocycleModel(s, {model.labels().begin(), model.labels().begin() + static_cast<std::ptrdiff_t>(depth)},
                      model.group().action());
}

}  // namespace cfmix
