#pragma once

// Cut sets, heights and validation for rank-one (C,F) towers.

#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "cfmix/error.hpp"

namespace cfmix {

enum class CutShape { Section3, Section4, Staircase, Custom };

inline std::string to_string(CutShape s) {
  switch (s) {
    case CutShape::Section3: return "section3";
    case CutShape::Section4: return "section4";
    case CutShape::Staircase: return "staircase";
    case CutShape::Custom: return "custom";
  }
  return "custom";
}

inline CutShape cut_shape_from_string(const std::string& s) {
  if (s == "section3") return CutShape::Section3;
  if (s == "section4") return CutShape::Section4;
  if (s == "staircase") return CutShape::Staircase;
  if (s == "custom") return CutShape::Custom;
  fail(ErrorKind::InvalidParameter, "unknown cut shape '" + s + "'");
}

enum class Regime { Rigid, Offset, Staircase };

struct CFStage {
  std::int64_t h = 1;  // height of the tower being cut
  std::vector<std::int64_t> cuts;
  std::vector<Regime> regimes;  // regime of each gap c(i) - c(i-1), i >= 1; regimes[0] refers to c(0)
  std::int64_t i_n = 0;
  std::int64_t r_n = 0;
  CutShape shape = CutShape::Custom;
  double delta = 0.0;
  std::size_t block = 0;

  std::int64_t next_height() const { return h + cuts.back(); }
  /// Length of the run whose gaps grow by one per step.
  std::int64_t staircase_run() const {
    switch (shape) {
      case CutShape::Section3: return r_n - i_n;
      case CutShape::Section4: return r_n - 2 * i_n;
      case CutShape::Staircase: return r_n - 1;
      case CutShape::Custom: return 0;
    }
    return 0;
  }
};

inline CFStage section3_cut(std::int64_t h, std::int64_t i_n, std::int64_t r_n) {
  if (h < 1 || r_n < 2 || i_n < 1 || i_n > r_n)
    fail(ErrorKind::InvalidParameter, "section3 cut needs h >= 1, r > 1, 0 < i <= r");
  CFStage s{h, {0}, {Regime::Rigid}, i_n, r_n, CutShape::Section3};
  for (std::int64_t i = 1; i < r_n; ++i) {
    if (i < i_n) {
      s.cuts.push_back(s.cuts.back() + h);
      s.regimes.push_back(Regime::Rigid);
    } else {
      s.cuts.push_back(s.cuts.back() + h + (i - i_n));
      s.regimes.push_back(Regime::Staircase);
    }
  }
  return s;
}

inline CFStage section4_cut(std::int64_t h, std::int64_t i_n, std::int64_t r_n) {
  if (h < 1 || i_n < 1 || 2 * i_n > r_n) fail(ErrorKind::InvalidParameter, "section4 cut needs h >= 1 and 0 < 2i <= r");
  CFStage s{h, {0}, {Regime::Rigid}, i_n, r_n, CutShape::Section4};
  for (std::int64_t i = 1; i < r_n; ++i) {
    if (i < i_n) {
      s.cuts.push_back(s.cuts.back() + h);
      s.regimes.push_back(Regime::Rigid);
    } else if (i < 2 * i_n) {
      s.cuts.push_back(s.cuts.back() + h + 1);
      s.regimes.push_back(Regime::Offset);
    } else {
      s.cuts.push_back(s.cuts.back() + h + (i - 2 * i_n));
      s.regimes.push_back(Regime::Staircase);
    }
  }
  return s;
}

inline CFStage staircase_cut(std::int64_t h, std::int64_t r_n) {
  if (h < 1 || r_n < 2) fail(ErrorKind::InvalidParameter, "staircase cut needs h >= 1, r > 1");
  CFStage s{h, {}, {}, 0, r_n, CutShape::Staircase};
  for (std::int64_t i = 0; i < r_n; ++i) {
    s.cuts.push_back(i * h + i * (i - 1) / 2);
    s.regimes.push_back(Regime::Staircase);
  }
  return s;
}

/// Arbitrary cut set; checked only by validate().
inline CFStage custom_stage(std::int64_t h, std::vector<std::int64_t> cuts) {
  if (cuts.empty()) fail(ErrorKind::InvalidParameter, "empty cut set");
  CFStage s{h, std::move(cuts), {}, 0, 0, CutShape::Custom};
  s.r_n = static_cast<std::int64_t>(s.cuts.size());
  s.regimes.assign(s.cuts.size(), Regime::Rigid);
  return s;
}

struct CFSchedule {
  std::int64_t h0 = 1;
  std::vector<CFStage> stages;

  std::size_t depth() const { return stages.size(); }
  /// h_0, ..., h_m.
  std::vector<std::int64_t> heights() const {
    std::vector<std::int64_t> h{h0};
    for (const auto& s : stages) h.push_back(h.back() + s.cuts.back());
    return h;
  }
  std::int64_t height(std::size_t n) const { return heights().at(n); }
};

inline std::int64_t i_from_delta(double delta, std::int64_t r, CutShape shape) {
  std::int64_t i = std::max<std::int64_t>(1, std::lround(delta * static_cast<double>(r)));
  if (shape == CutShape::Section4) i = std::min(i, r / 2);
  return std::min(i, r);
}

inline CFStage make_stage(CutShape shape, std::int64_t h, std::int64_t r, double delta) {
  switch (shape) {
    case CutShape::Section3: return section3_cut(h, i_from_delta(delta, r, shape), r);
    case CutShape::Section4: return section4_cut(h, i_from_delta(delta, r, shape), r);
    case CutShape::Staircase: return staircase_cut(h, r);
    case CutShape::Custom: break;
  }
  fail(ErrorKind::InvalidParameter, "custom stages cannot be generated from delta");
}

struct DeltaBlock {
  double delta = 0.5;
  std::size_t stages = 1;
  CutShape shape = CutShape::Section3;
  std::vector<std::int64_t> r;  // explicit cut counts; empty means the default rule
};

/// Concatenates delta-blocks into one schedule. Block 1 uses r = t + r_offset,
/// block j >= 2 uses r = j + t (t = 0, 1, ... inside the block). `shape_override`,
/// if non-empty, fixes the cut shape of each global stage.
inline CFSchedule concat_delta_pairs(const std::vector<DeltaBlock>& blocks, std::int64_t h0 = 1, std::int64_t r_offset = 2,
                                     const std::vector<CutShape>& shape_override = {}) {
  if (blocks.empty()) fail(ErrorKind::InvalidSchedule, "no blocks");
  if (h0 < 1) fail(ErrorKind::InvalidSchedule, "h0 must be positive");
  for (std::size_t j = 0; j < blocks.size(); ++j) {
    if (blocks[j].stages < 1) fail(ErrorKind::InvalidSchedule, "every block needs at least one stage");
    if (!(blocks[j].delta > 0.0 && blocks[j].delta < 1.0)) fail(ErrorKind::InvalidSchedule, "delta must lie in (0,1)");
    if (j > 0 && !(blocks[j].delta < blocks[j - 1].delta)) fail(ErrorKind::InvalidSchedule, "delta must be strictly decreasing");
    if (!blocks[j].r.empty() && blocks[j].r.size() != blocks[j].stages)
      fail(ErrorKind::InvalidSchedule, "explicit r list length differs from the stage count");
  }
  CFSchedule sched;
  sched.h0 = h0;
  std::int64_t h = h0;
  for (std::size_t j = 0; j < blocks.size(); ++j) {
    const auto& b = blocks[j];
    for (std::size_t t = 0; t < b.stages; ++t) {
      const auto ti = static_cast<std::int64_t>(t);
      const std::int64_t r = !b.r.empty() ? b.r[t] : (j == 0 ? ti + r_offset : static_cast<std::int64_t>(j + 1) + ti);
      const std::size_t global = sched.stages.size();
      const CutShape shape = global < shape_override.size() ? shape_override[global] : b.shape;
      if (r < 2) fail(ErrorKind::InvalidSchedule, "cut count must exceed 1");
      CFStage s = make_stage(shape, h, r, b.delta);
      s.delta = b.delta;
      s.block = j;
      h = s.next_height();
      sched.stages.push_back(std::move(s));
    }
  }
  return sched;
}

struct StageCheck {
  std::size_t stage = 0;
  bool zero_member = false;
  bool increasing = false;
  bool disjoint = false;     // min gap >= h
  bool containment = false;  // F_n + C_{n+1} inside F_{n+1}
  bool delta_consistent = true;
  bool diagnostic_only = false;  // pure staircase stage, i_n = 0
  std::int64_t min_gap = 0;
  double adams = 0.0;  // run^2 / h_n
  double ratio = 0.0;  // h_{n+1} / (#C_1 ... #C_{n+1})
};

struct ValidationReport {
  std::vector<StageCheck> stages;
  double spacer_fraction = 0.0;
  bool ratio_bounded = true;
  bool ratio_nondecreasing = true;
  std::vector<double> ratio_increments;
  bool adams_decreasing_beyond = true;
  std::size_t adams_from = 3;
  std::vector<std::string> failures;

  bool ok() const { return failures.empty(); }
};

inline ValidationReport validate(const CFSchedule& s, double ratio_bound = 1e12, std::size_t adams_from = 3) {
  ValidationReport rep;
  rep.adams_from = adams_from;
  long double prod = 1.0L;
  std::int64_t h = s.h0;
  double prev_ratio = static_cast<double>(s.h0);
  for (std::size_t n = 0; n < s.stages.size(); ++n) {
    const auto& st = s.stages[n];
    StageCheck c;
    c.stage = n;
    c.zero_member = !st.cuts.empty() && st.cuts.front() == 0;
    c.increasing = true;
    c.min_gap = st.cuts.size() > 1 ? INT64_MAX : 0;
    for (std::size_t i = 1; i < st.cuts.size(); ++i) {
      const auto gap = st.cuts[i] - st.cuts[i - 1];
      if (gap <= 0) c.increasing = false;
      c.min_gap = std::min(c.min_gap, gap);
    }
    c.disjoint = st.cuts.size() > 1 && c.min_gap >= h && st.h == h;
    const std::int64_t next = st.cuts.empty() ? h : h + st.cuts.back();
    c.containment = !st.cuts.empty() && st.cuts.back() + h <= next && st.h == h;
    if (st.shape == CutShape::Section3 || st.shape == CutShape::Section4) {
      const double ratio = static_cast<double>(st.i_n) / static_cast<double>(st.r_n);
      c.delta_consistent = std::abs(ratio - st.delta) <= 1.0 / static_cast<double>(st.r_n) + 1e-12;
    }
    c.diagnostic_only = st.shape == CutShape::Staircase;
    const auto run = static_cast<double>(st.staircase_run());
    c.adams = run * run / static_cast<double>(h);
    prod *= static_cast<long double>(st.cuts.size());
    h = next;
    c.ratio = static_cast<double>(static_cast<long double>(h) / prod);
    rep.ratio_increments.push_back(c.ratio - prev_ratio);
    if (c.ratio < prev_ratio) rep.ratio_nondecreasing = false;
    if (!std::isfinite(c.ratio) || c.ratio > ratio_bound) rep.ratio_bounded = false;
    prev_ratio = c.ratio;

    const std::string tag = "stage " + std::to_string(n) + ": ";
    if (!c.zero_member) rep.failures.push_back(tag + "0 is not a cut");
    if (!c.increasing) rep.failures.push_back(tag + "cuts are not strictly increasing");
    if (!c.disjoint) rep.failures.push_back(tag + "copies overlap (gap < h)");
    if (!c.containment) rep.failures.push_back(tag + "F_n + C_{n+1} is not inside F_{n+1}");
    if (!c.delta_consistent) rep.failures.push_back(tag + "i/r is farther than 1/r from delta");
    rep.stages.push_back(c);
  }
  rep.spacer_fraction = 1.0 - static_cast<double>(static_cast<long double>(s.h0) * prod / static_cast<long double>(h));
  for (std::size_t n = adams_from + 1; n < rep.stages.size(); ++n)
    if (!(rep.stages[n].adams < rep.stages[n - 1].adams)) rep.adams_decreasing_beyond = false;
  if (!rep.ratio_bounded) rep.failures.push_back("measure ratio exceeds its bound");
  return rep;
}

}  // namespace cfmix
