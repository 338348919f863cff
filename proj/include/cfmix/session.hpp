#pragma once

// Configuration, bundle persistence and the verification suites behind the CLI.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include <json.hpp>

#include "cfmix/koopman_lab.hpp"

namespace cfmix {

using json = nlohmann::json;

inline constexpr int kSchemaVersion = 1;

struct SessionConfig {
  Mode mode = Mode::Section3;
  PSequence e;
  std::size_t algebra_depth = 0;
  std::int64_t h0 = 1;
  std::int64_t r_offset = 2;
  std::vector<DeltaBlock> blocks;
  std::vector<StageLabel> labels;  // optional explicit labels
  std::size_t test_level = 1;
  std::int64_t state_cap = kDefaultStateCap;
  std::int64_t group_cap = kDefaultEnumerationCap;
  std::int64_t probe_min_r = 64;
  std::int64_t chi_probe_limit = 32;
  std::int64_t decay_level_cap = 1LL << 27;
  std::int64_t cocycle_samples = 10'000;
  double mixing_ratio = 0.5;

  std::size_t tower_depth() const {
    std::size_t n = 0;
    for (const auto& b : blocks) n += b.stages;
    return n;
  }
  /// p_1, ..., p_m in increasing order.
  std::vector<std::int64_t> p_values() const { return e.take(algebra_depth); }
};

namespace detail {

template <class T>
T get_or(const json& j, const char* key, T fallback) {
  return j.contains(key) ? j.at(key).get<T>() : fallback;
}

inline StageLabel label_from_json(const json& j) {
  StageLabel l;
  l.kind = label_kind_from_string(j.at("kind").get<std::string>());
  if (l.kind == LabelKind::RigidTranslate || l.kind == LabelKind::DelayedTranslate) l.a = j.at("a").get<Element>();
  if (l.kind == LabelKind::RigidRotate) l.k = j.at("k").get<std::int64_t>();
  return l;
}

inline json label_to_json(const StageLabel& l) {
  json j{{"kind", to_string(l.kind)}};
  if (l.kind == LabelKind::RigidTranslate || l.kind == LabelKind::DelayedTranslate) j["a"] = l.a;
  if (l.kind == LabelKind::RigidRotate) j["k"] = l.k;
  return j;
}

}  // namespace detail

inline SessionConfig config_from_json(const json& j) {
  try {
    SessionConfig c;
    c.mode = mode_from_string(j.at("mode").get<std::string>());
    const auto& e = j.at("E");
    if (e.is_array()) {
      auto v = e.get<std::vector<std::int64_t>>();
      std::sort(v.begin(), v.end());
      if (v.empty() || std::adjacent_find(v.begin(), v.end()) != v.end() || v.front() < 1)
        fail(ErrorKind::InvalidConfig, "E must be a non-empty set of positive integers");
      c.e = PSequence::list(v);
    } else {
      c.e = PSequence::arithmetic(e.at("start").get<std::int64_t>(), e.at("step").get<std::int64_t>());
      if (*c.e.start < 1 || *c.e.step < 1) fail(ErrorKind::InvalidConfig, "E generator needs start >= 1 and step >= 1");
    }
    if (j.contains("algebra_depth")) c.algebra_depth = j.at("algebra_depth").get<std::size_t>();
    else if (c.e.finite()) c.algebra_depth = c.e.values.size();
    else fail(ErrorKind::InvalidConfig, "an E generator needs algebra_depth");
    if (c.algebra_depth < 1) fail(ErrorKind::InvalidConfig, "algebra_depth must be positive");
    const auto p = c.p_values();
    const bool has1 = std::find(p.begin(), p.end(), 1) != p.end();
    const bool has2 = std::find(p.begin(), p.end(), 2) != p.end();
    if (c.mode == Mode::Section3 && !has1) fail(ErrorKind::InvalidConfig, "section3 mode needs 1 in E");
    if (c.mode == Mode::Section4 && !has2) fail(ErrorKind::InvalidConfig, "section4 mode needs 2 in E");
    c.h0 = detail::get_or<std::int64_t>(j, "h0", 1);
    c.r_offset = detail::get_or<std::int64_t>(j, "r_offset", 2);
    for (const auto& b : j.at("blocks")) {
      DeltaBlock d;
      d.delta = b.at("delta").get<double>();
      d.stages = b.at("stages").get<std::size_t>();
      d.shape = c.mode == Mode::Section3 ? CutShape::Section3 : CutShape::Section4;
      if (b.contains("shape")) d.shape = cut_shape_from_string(b.at("shape").get<std::string>());
      if (b.contains("r")) d.r = b.at("r").get<std::vector<std::int64_t>>();
      c.blocks.push_back(d);
    }
    if (j.contains("labels"))
      for (const auto& l : j.at("labels")) c.labels.push_back(detail::label_from_json(l));
    if (j.contains("tower_depth") && j.at("tower_depth").get<std::size_t>() != c.tower_depth())
      fail(ErrorKind::InvalidConfig, "tower_depth differs from the total number of block stages");
    c.test_level = detail::get_or<std::size_t>(j, "test_level", 1);
    c.state_cap = detail::get_or<std::int64_t>(j, "state_cap", kDefaultStateCap);
    c.group_cap = detail::get_or<std::int64_t>(j, "group_cap", kDefaultEnumerationCap);
    c.probe_min_r = detail::get_or<std::int64_t>(j, "probe_min_r", 64);
    c.chi_probe_limit = detail::get_or<std::int64_t>(j, "chi_probe_limit", 32);
    c.decay_level_cap = detail::get_or<std::int64_t>(j, "decay_level_cap", 1LL << 27);
    c.cocycle_samples = detail::get_or<std::int64_t>(j, "cocycle_samples", 10'000);
    c.mixing_ratio = detail::get_or<double>(j, "mixing_ratio", 0.5);
    if (!c.labels.empty() && c.labels.size() != c.tower_depth())
      fail(ErrorKind::InvalidConfig, "explicit labels must cover every stage");
    return c;
  } catch (const json::exception& ex) {
    fail(ErrorKind::InvalidConfig, ex.what());
  }
}

inline json config_to_json(const SessionConfig& c) {
  json j;
  j["schema_version"] = kSchemaVersion;
  j["mode"] = to_string(c.mode);
  if (c.e.finite()) j["E"] = c.e.values;
  else j["E"] = {{"start", *c.e.start}, {"step", *c.e.step}};
  j["algebra_depth"] = c.algebra_depth;
  j["tower_depth"] = c.tower_depth();
  j["h0"] = c.h0;
  j["r_offset"] = c.r_offset;
  j["blocks"] = json::array();
  for (const auto& b : c.blocks) {
    json jb{{"delta", b.delta}, {"stages", b.stages}, {"shape", to_string(b.shape)}};
    if (!b.r.empty()) jb["r"] = b.r;
    j["blocks"].push_back(jb);
  }
  if (!c.labels.empty()) {
    j["labels"] = json::array();
    for (const auto& l : c.labels) j["labels"].push_back(detail::label_to_json(l));
  }
  j["test_level"] = c.test_level;
  j["state_cap"] = c.state_cap;
  j["group_cap"] = c.group_cap;
  j["probe_min_r"] = c.probe_min_r;
  j["chi_probe_limit"] = c.chi_probe_limit;
  j["decay_level_cap"] = c.decay_level_cap;
  j["cocycle_samples"] = c.cocycle_samples;
  j["mixing_ratio"] = c.mixing_ratio;
  return j;
}

inline std::uint64_t fnv1a64(std::string_view data) {
  std::uint64_t h = 14695981039346656037ULL;
  for (unsigned char ch : data) {
    h ^= ch;
    h *= 1099511628211ULL;
  }
  return h;
}

inline std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

/// Everything verify needs, rebuilt from a bundle or freshly synthesized.
struct Session {
  SessionConfig config;
  AlgebraicTriple triple;
  ModuleAction a_action;  // K acting on A = B^
  CFSchedule schedule;
  std::vector<StageLabel> labels;

  std::set<std::int64_t> requested() const {
    const auto p = config.p_values();
    std::set<std::int64_t> out(p.begin(), p.end());
    if (config.mode == Mode::Section4) out.insert(2);
    return out;
  }
  CocycleModel model() const { return CocycleModel(schedule, labels, a_action); }
};

/// Builds the schedule for a config whose algebra is known.
inline void build_schedule(Session& s) {
  const auto& c = s.config;
  LabelTargets targets = all_targets(s.a_action.module(), s.triple.k_order, c.group_cap);
  std::vector<CutShape> shapes;
  if (c.mode == Mode::Section4) {
    // N and L stages use the three-term cut, M stages the four-regime cut
    std::vector<LabelKind> kinds;
    if (!c.labels.empty()) {
      for (const auto& l : c.labels) kinds.push_back(l.kind);
    } else {
      std::size_t labelable_count = 0;
      for (const auto& b : c.blocks)
        if (b.shape == CutShape::Section3 || b.shape == CutShape::Section4) labelable_count += b.stages;
      kinds = kind_sequence(labelable_count, c.mode, targets);
      std::vector<LabelKind> full;
      std::size_t next = 0;
      for (const auto& b : c.blocks)
        for (std::size_t t = 0; t < b.stages; ++t)
          full.push_back(b.shape == CutShape::Section3 || b.shape == CutShape::Section4 ? kinds[next++] : LabelKind::Plain);
      kinds = std::move(full);
    }
    std::size_t g = 0;
    for (const auto& b : c.blocks)
      for (std::size_t t = 0; t < b.stages; ++t, ++g) {
        if (b.shape != CutShape::Section3 && b.shape != CutShape::Section4) shapes.push_back(b.shape);
        else shapes.push_back(kinds[g] == LabelKind::DelayedTranslate ? CutShape::Section4 : CutShape::Section3);
      }
  }
  s.schedule = concat_delta_pairs(c.blocks, c.h0, c.r_offset, shapes);
  s.labels = c.labels.empty() ? schedule_labels(s.schedule, targets, c.mode) : c.labels;
}

inline Session synth_session(const SessionConfig& c) {
  Session s;
  s.config = c;
  s.triple = assemble_lemma42(c.p_values(), 4'000'000'000LL, c.group_cap);
  s.a_action = dual_action(s.triple.action);
  build_schedule(s);
  (void)s.model();  // label/stage compatibility
  return s;
}

inline json bundle_to_json(const Session& s) {
  json j;
  j["schema_version"] = kSchemaVersion;
  j["config"] = config_to_json(s.config);
  const auto& t = s.triple;
  json alg;
  alg["P"] = t.p;
  alg["depth"] = t.depth();
  alg["orders"] = std::vector<std::int64_t>(t.b.orders().begin(), t.b.orders().end());
  std::vector<Element> images;
  for (std::size_t i = 0; i < t.b.rank(); ++i) images.push_back(t.theta.image_of_generator(i));
  alg["theta_images"] = images;
  alg["k_order"] = t.k_order;
  alg["D"] = {{"generators", t.d.generators()}};
  alg["d_coordinates"] = t.d_coordinates;
  alg["blocks"] = json::array();
  for (const auto& lay : t.layout)
    alg["blocks"].push_back({{"p", lay.block.p}, {"q", lay.block.q}, {"multiplier", lay.block.multiplier},
                             {"first_coordinate", lay.first_coordinate}, {"copies", lay.copies}});
  j["algebra"] = alg;
  json sch;
  sch["h0"] = s.schedule.h0;
  sch["heights"] = s.schedule.heights();
  sch["stages"] = json::array();
  for (std::size_t n = 0; n < s.schedule.depth(); ++n) {
    const auto& st = s.schedule.stages[n];
    sch["stages"].push_back({{"h", st.h}, {"cuts", st.cuts}, {"shape", to_string(st.shape)}, {"i", st.i_n}, {"r", st.r_n},
                             {"delta", st.delta}, {"block", st.block}, {"label", detail::label_to_json(s.labels[n])}});
  }
  j["schedule"] = sch;
  return j;
}

/// Rebuilds a session from bundle JSON. Algebra problems surface as algebra errors.
inline Session session_from_json(const json& j) {
  Session s;
  try {
    s.config = config_from_json(j.at("config"));
    const auto& alg = j.at("algebra");
    const auto orders = alg.at("orders").get<std::vector<std::int64_t>>();
    const FiniteAbelianGroup b(orders);
    const auto& d = alg.at("D");
    Subgroup sub = d.contains("elements") ? Subgroup::from_elements(b, d.at("elements").get<std::vector<Element>>())
                                          : Subgroup::from_generators(b, d.at("generators").get<std::vector<Element>>(),
                                                                      s.config.group_cap);
    s.triple = triple_from_parts(alg.at("P").get<std::vector<std::int64_t>>(), orders,
                                 alg.at("theta_images").get<std::vector<Element>>(), alg.at("k_order").get<std::int64_t>(),
                                 sub, s.config.group_cap);
    s.triple.d_coordinates = alg.at("d_coordinates").get<std::vector<std::size_t>>();
    if (alg.contains("blocks"))
      for (const auto& lay : alg.at("blocks"))
        s.triple.layout.push_back({{lay.at("p").get<std::int64_t>(), lay.at("q").get<std::int64_t>(),
                                    lay.at("multiplier").get<std::int64_t>()},
                                   lay.at("first_coordinate").get<std::size_t>(), lay.at("copies").get<std::int64_t>()});
    s.a_action = dual_action(s.triple.action);
    const auto& sch = j.at("schedule");
    s.schedule.h0 = sch.at("h0").get<std::int64_t>();
    for (const auto& st : sch.at("stages")) {
      CFStage stage = custom_stage(st.at("h").get<std::int64_t>(), st.at("cuts").get<std::vector<std::int64_t>>());
      stage.shape = cut_shape_from_string(st.at("shape").get<std::string>());
      stage.i_n = st.at("i").get<std::int64_t>();
      stage.r_n = st.at("r").get<std::int64_t>();
      stage.delta = st.at("delta").get<double>();
      stage.block = st.at("block").get<std::size_t>();
      s.schedule.stages.push_back(std::move(stage));
      s.labels.push_back(detail::label_from_json(st.at("label")));
    }
  } catch (const json::exception& ex) {
    fail(ErrorKind::InvalidConfig, std::string("malformed bundle: ") + ex.what());
  }
  return s;
}

namespace fs = std::filesystem;

inline std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) fail(ErrorKind::Io, "cannot read " + p.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_file(const fs::path& p, const std::string& data) {
  std::error_code ec;
  if (p.has_parent_path()) fs::create_directories(p.parent_path(), ec);
  std::ofstream out(p, std::ios::binary);
  if (!out) fail(ErrorKind::Io, "cannot write " + p.string());
  out << data;
}

inline json parse_json(const std::string& text, const std::string& what) {
  try {
    return json::parse(text);
  } catch (const json::exception& ex) {
    fail(ErrorKind::InvalidConfig, what + ": " + ex.what());
  }
}

/// Writes bundle.json and manifest.json; returns the bundle hash.
inline std::string synth(const json& config, const fs::path& out_dir) {
  const Session s = synth_session(config_from_json(config));
  const std::string text = bundle_to_json(s).dump(1) + "\n";
  const std::string hash = hex64(fnv1a64(text));
  write_file(out_dir / "bundle.json", text);
  json manifest{{"schema_version", kSchemaVersion}, {"files", {{"bundle.json", {{"fnv1a64", hash}, {"bytes", text.size()}}}}}};
  write_file(out_dir / "manifest.json", manifest.dump(1) + "\n");
  return hash;
}

struct LoadedBundle {
  Session session;
  bool manifest_ok = false;
};

inline LoadedBundle load_bundle(const fs::path& dir) {
  const std::string text = read_file(dir / "bundle.json");
  LoadedBundle lb;
  std::error_code ec;
  if (fs::exists(dir / "manifest.json", ec)) {
    const auto m = parse_json(read_file(dir / "manifest.json"), "manifest");
    lb.manifest_ok = m.value("/files/bundle.json/fnv1a64"_json_pointer, std::string{}) == hex64(fnv1a64(text));
  }
  lb.session = session_from_json(parse_json(text, "bundle"));
  return lb;
}

// ---------------------------------------------------------------------------
// verification suites

enum class Suite { Algebra, WeakLimits, Mixing, Multiplicity };

inline int exit_code(Suite s) {
  switch (s) {
    case Suite::Algebra: return 2;
    case Suite::WeakLimits: return 3;
    case Suite::Mixing: return 4;
    case Suite::Multiplicity: return 5;
  }
  return 1;
}

inline std::string to_string(Suite s) {
  switch (s) {
    case Suite::Algebra: return "algebra";
    case Suite::WeakLimits: return "weaklimits";
    case Suite::Mixing: return "mixing";
    case Suite::Multiplicity: return "multiplicity";
  }
  return "";
}

struct SuiteResult {
  Suite suite = Suite::Algebra;
  bool pass = false;
  json report;
};

/// Deepest truncation whose double-extension state count fits the cap.
inline std::size_t spectral_depth(const Session& s) {
  const auto h = s.schedule.heights();
  std::size_t d = 0;
  for (std::size_t m = 1; m < h.size(); ++m)
    if (static_cast<__int128>(h[m]) * s.triple.k_order <= s.config.state_cap) d = m;
  return d;
}

inline json lset_json(const std::set<std::int64_t>& v) { return std::vector<std::int64_t>(v.begin(), v.end()); }

inline SuiteResult run_algebra(const Session& s) {
  SuiteResult r{Suite::Algebra, true, json::object()};
  auto& rep = r.report;
  auto check = [&](const std::string& name, bool ok, json detail = nullptr) {
    rep["checks"].push_back({{"name", name}, {"pass", ok}, {"detail", detail}});
    if (!ok) r.pass = false;
  };
  const auto ls = l_set(s.triple.action, s.triple.d);
  const std::set<std::int64_t> p(s.triple.p.begin(), s.triple.p.end());
  check("l_set_equals_P", ls.values == p, {{"L", lset_json(ls.values)}, {"P", lset_json(p)}});
  const auto dual = dualize(s.triple, s.config.group_cap);
  check("duality_sizes", dual.size_identity,
        {{"B", dual.b_size}, {"D", dual.d_size}, {"H", dual.h_size}, {"method", dual.h_method}});
  check("dual_l_set", dual.l_dual == ls.values, {{"L_dual", lset_json(dual.l_dual)}});

  const auto v = validate(s.schedule);
  check("schedule_valid", v.ok(), {{"failures", v.failures}, {"spacer_fraction", v.spacer_fraction}});

  const CocycleModel model = s.model();
  const Semidirect& g = model.group();
  const TowerGeometry geom(s.schedule, s.schedule.depth());
  std::mt19937_64 rng(0x5eed);
  std::uniform_int_distribution<std::int64_t> pick(0, geom.top() - 1);
  std::int64_t bad = 0;
  for (std::int64_t i = 0; i < s.config.cocycle_samples; ++i) {
    const auto x = geom.word(pick(rng)), y = geom.word(pick(rng)), z = geom.word(pick(rng));
    if (!(evaluate_cocycle(x, z, model) == g.mul(evaluate_cocycle(x, y, model), evaluate_cocycle(y, z, model)))) ++bad;
  }
  check("cocycle_identity", bad == 0, {{"samples", s.config.cocycle_samples}, {"failures", bad}});

  const std::size_t depth = spectral_depth(s);
  rep["spectral_depth"] = depth;
  if (depth == 0) {
    check("spectral_depth_available", false, "no truncation fits the state cap");
    return r;
  }
  const CocycleModel trunc = truncate(model, depth);
  const LevelTable table(trunc, depth, s.config.state_cap);
  // telescoping around the cycle and the equivariance of the double-extension cocycle
  KA total = g.identity();
  std::int64_t equiv_bad = 0;
  for (std::int64_t l = 0; l < table.levels(); ++l) {
    const KA t = table.transition(l);
    total = g.mul(total, t);
    if (l % 97 == 0)
      for (std::int64_t k = 0; k < g.k_order(); ++k)
        for (std::int64_t k0 = 0; k0 < g.k_order(); ++k0)
          if (g.action().apply(k0 + k, t.a) != g.action().apply(k, g.action().apply(k0, t.a))) ++equiv_bad;
  }
  check("cycle_telescopes", total == g.identity());
  check("double_extension_equivariance", equiv_bad == 0);

  SpectrumCache cache(table, s.config.state_cap);
  std::vector<SpectralSet> etas;
  bool eta_simple = true;
  for (std::int64_t e = 0; e < g.k_order(); ++e) {
    etas.push_back(cache.eta(e));
    if (etas.back().max_multiplicity() != 1) eta_simple = false;
  }
  check("eta_components_simple", eta_simple);
  check("fourier_consistency", spectrum_union(etas) == cache.chi(Character::trivial(s.a_action.module())));

  std::int64_t checks = 0, fails = 0;
  for (const auto& d : s.triple.d.elements())
    for (const auto& verdict : class_equivalence_check(cache, Character(s.a_action.module(), d))) {
      ++checks;
      if (!verdict.equal) ++fails;
    }
  check("class_equivalence", fails == 0, {{"comparisons", checks}, {"failures", fails}, {"depth", depth}});
  return r;
}

inline json probe_json(const WeakLimitReport& w) {
  json j{{"stage", w.stage},
         {"label", w.label.str()},
         {"prediction", to_string(w.prediction)},
         {"chi", w.chi},
         {"delta", w.delta},
         {"r", w.r},
         {"h", w.h},
         {"model_levels", w.model_levels},
         {"family_size", w.family.size()},
         {"max_deviation_all", w.max_deviation_all},
         {"max_deviation_diagonal", w.max_deviation_diagonal},
         {"gated_deviation", w.gated_deviation},
         {"gate", w.diagonal_gate ? "diagonal" : "all pairs"},
         {"bound", w.bound},
         {"pass", w.pass}};
  if (w.max_deviation_subsets) j["max_deviation_subsets"] = *w.max_deviation_subsets;
  if (w.weak_mixing_excess) j["weak_mixing_excess"] = *w.weak_mixing_excess;
  if (w.l_value) j["l_chi"] = describe(*w.l_value);
  if (w.bound < w.gated_deviation) j["note"] = "deviation exceeds C/r_n: enlarge r_n rather than the tolerance";
  return j;
}

/// Nontrivial characters probed on N and M stages.
inline std::vector<Character> probe_characters(const Session& s) {
  std::vector<Character> out;
  const auto& a = s.a_action.module();
  if (a.size() <= s.config.chi_probe_limit) {
    for (std::int64_t i = 1; i < a.size(); ++i) out.emplace_back(a, a.element_at(i));
  } else {
    for (const auto& d : s.triple.d.elements())
      if (d != a.zero()) out.emplace_back(a, d);
  }
  return out;
}

inline SuiteResult run_weaklimits(const Session& s) {
  SuiteResult r{Suite::WeakLimits, true, json::object()};
  const CocycleModel model = s.model();
  const auto h = s.schedule.heights();
  ProbeOptions opt;
  opt.test_level = s.config.test_level;
  opt.cap = s.config.state_cap;
  r.report["probes"] = json::array();
  const auto chis = probe_characters(s);
  for (std::size_t n = 0; n < s.schedule.depth(); ++n) {
    const auto& st = s.schedule.stages[n];
    const auto& lab = s.labels[n];
    if (lab.kind == LabelKind::Plain || st.r_n < s.config.probe_min_r || n < opt.test_level) continue;
    if (static_cast<__int128>(h[n + 1]) * s.triple.k_order > s.config.state_cap) {
      r.report["skipped"].push_back({{"stage", n}, {"reason", "state cap"}});
      continue;
    }
    const auto t0 = std::chrono::steady_clock::now();
    auto base = weak_limit_probe(model, n, nullptr, opt);
    r.report["probes"].push_back(probe_json(base));
    if (!base.pass) r.pass = false;
    if (lab.kind != LabelKind::RigidRotate)
      for (const auto& chi : chis) {
        auto w = weak_limit_probe(model, n, &chi, opt);
        r.report["probes"].push_back(probe_json(w));
        if (!w.pass) r.pass = false;
      }
    r.report["seconds"][std::to_string(n)] =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  }
  if (r.report["probes"].empty()) r.report["note"] = "no stage with r_n >= probe_min_r fits the state cap";
  return r;
}

inline json decay_json(const DecayTable& d) {
  json j{{"levels", d.levels}, {"test_level", d.test_level}, {"atoms", d.atoms}, {"ratio", d.ratio}, {"no_decay", d.no_decay}};
  j["buckets"] = json::array();
  for (const auto& b : d.buckets) j["buckets"].push_back({{"scale", b.scale}, {"lo", b.lo}, {"hi", b.hi}, {"max", b.max_value}});
  return j;
}

/// Deepest truncation the decay computation accepts.
inline std::size_t decay_depth(const Session& s) {
  const auto h = s.schedule.heights();
  std::size_t d = 0;
  for (std::size_t m = 1; m < h.size(); ++m)
    if (h[m] <= s.config.decay_level_cap) d = m;
  return d;
}

inline SuiteResult run_mixing(const Session& s) {
  SuiteResult r{Suite::Mixing, true, json::object()};
  const std::size_t depth = decay_depth(s);
  r.report["depth"] = depth;
  if (depth < s.config.test_level + 3) {
    r.pass = false;
    r.report["note"] = "tower too shallow for a decay trend";
    return r;
  }
  const auto table = correlation_decay(s.schedule, depth, s.config.test_level, s.config.decay_level_cap);
  r.report["decay"] = decay_json(table);
  const bool decays = table.ratio <= s.config.mixing_ratio;
  if (!decays) r.report["diagnostic"] = "no decay";
  const auto v = validate(s.schedule);
  std::vector<double> adams;
  for (const auto& c : v.stages) adams.push_back(c.adams);
  r.report["adams"] = adams;
  r.report["adams_decreasing_beyond"] = v.adams_from;
  r.report["adams_ok"] = v.adams_decreasing_beyond;
  std::vector<double> ratios;
  for (const auto& c : v.stages) ratios.push_back(c.ratio);
  r.report["measure_ratio"] = ratios;
  r.report["measure_ratio_bounded"] = v.ratio_bounded;
  r.report["spacer_fraction"] = v.spacer_fraction;
  r.pass = decays && v.adams_decreasing_beyond && v.ratio_bounded;
  return r;
}

inline json multiplicity_json(const MultiplicityReport& m) {
  json j{{"mode", to_string(m.mode)},
         {"requested", lset_json(m.requested)},
         {"l_set", lset_json(m.l_set)},
         {"class_sizes", lset_json(m.class_sizes)},
         {"multiplicities", lset_json(m.multiplicities)},
         {"sizes_match", m.sizes_match},
         {"matches_request", m.matches_request},
         {"equivalence_checks", m.equivalence_checks},
         {"equivalence_failures", m.equivalence_failures}};
  if (m.spectral_depth) j["spectral_depth"] = *m.spectral_depth;
  j["classes"] = json::array();
  for (const auto& c : m.classes) j["classes"].push_back(c.members);
  j["certificates"] = json::array();
  for (const auto& c : m.certificates)
    j["certificates"].push_back(
        {{"classes", {c.class1, c.class2}}, {"a", c.a}, {"l_chi", c.l1}, {"l_chi_prime", c.l2}, {"spectral_overlap", c.overlap}});
  return j;
}

inline MultiplicityReport session_multiplicity(const Session& s, std::optional<LevelTable>& table_slot,
                                               std::optional<CocycleModel>& model_slot) {
  const std::size_t depth = spectral_depth(s);
  std::optional<SpectrumCache> cache;
  if (depth > 0) {
    model_slot.emplace(truncate(s.model(), depth));
    table_slot.emplace(*model_slot, depth, s.config.state_cap);
    cache.emplace(*table_slot, s.config.state_cap);
  }
  return multiplicity_report(s.triple, s.a_action, s.config.mode, s.requested(), cache ? &*cache : nullptr, s.config.group_cap);
}

inline SuiteResult run_multiplicity(const Session& s) {
  SuiteResult r{Suite::Multiplicity, true, json::object()};
  std::optional<LevelTable> table;
  std::optional<CocycleModel> model;
  const auto m = session_multiplicity(s, table, model);
  r.report = multiplicity_json(m);
  const std::size_t expected_pairs = m.classes.size() * (m.classes.size() - 1) / 2;
  r.pass = m.ok() && m.certificates.size() == expected_pairs;
  return r;
}

inline SuiteResult run_suite(const Session& s, Suite suite) {
  switch (suite) {
    case Suite::Algebra: return run_algebra(s);
    case Suite::WeakLimits: return run_weaklimits(s);
    case Suite::Mixing: return run_mixing(s);
    case Suite::Multiplicity: return run_multiplicity(s);
  }
  return {};
}

/// Runs the requested suites, writes reports/<suite>.json, returns the exit code.
inline int verify(const fs::path& dir, const std::string& which) {
  std::vector<Suite> suites;
  if (which == "algebra") suites = {Suite::Algebra};
  else if (which == "weaklimits") suites = {Suite::WeakLimits};
  else if (which == "mixing") suites = {Suite::Mixing};
  else if (which == "multiplicity") suites = {Suite::Multiplicity};
  else if (which == "all") suites = {Suite::Algebra, Suite::WeakLimits, Suite::Mixing, Suite::Multiplicity};
  else fail(ErrorKind::InvalidConfig, "unknown suite '" + which + "'");

  const std::string text = read_file(dir / "bundle.json");
  json summary{{"schema_version", kSchemaVersion}, {"suite", which}};
  std::optional<LoadedBundle> lb;
  try {
    lb = load_bundle(dir);
  } catch (const Error& e) {
    const bool algebraic = e.kind() != ErrorKind::InvalidConfig && e.kind() != ErrorKind::Io;
    summary["error"] = e.what();
    summary["exit_code"] = algebraic ? 2 : 1;
    write_file(dir / "reports" / "summary.json", summary.dump(1) + "\n");
    return algebraic ? 2 : 1;
  }
  summary["manifest_ok"] = lb->manifest_ok;
  int code = 0;
  for (auto suite : suites) {
    SuiteResult res;
    try {
      res = run_suite(lb->session, suite);
    } catch (const Error& e) {
      res = {suite, false, {{"error", e.what()}}};
    }
    res.report["schema_version"] = kSchemaVersion;
    res.report["suite"] = to_string(suite);
    res.report["pass"] = res.pass;
    write_file(dir / "reports" / (to_string(suite) + ".json"), res.report.dump(1) + "\n");
    summary["results"][to_string(suite)] = res.pass;
    if (!res.pass && code == 0) code = exit_code(suite);
  }
  summary["exit_code"] = code;
  write_file(dir / "reports" / "summary.json", summary.dump(1) + "\n");
  return code;
}

// ---------------------------------------------------------------------------
// dumps

inline std::string csv_escape(const std::string& s) { return s.find(',') == std::string::npos ? s : "\"" + s + "\""; }

inline fs::path dump(const fs::path& dir, const std::string& what, const std::string& format) {
  if (format != "json" && format != "csv") fail(ErrorKind::InvalidConfig, "format must be json or csv");
  const Session s = load_bundle(dir).session;
  std::string out;
  if (what == "spectra") {
    const std::size_t depth = spectral_depth(s);
    if (depth == 0) fail(ErrorKind::SizeLimit, "no truncation fits the state cap");
    const CocycleModel model = truncate(s.model(), depth);
    const LevelTable table(model, depth, s.config.state_cap);
    std::vector<std::pair<std::string, SpectralSet>> comps;
    for (std::int64_t e = 0; e < s.triple.k_order; ++e) comps.emplace_back("eta=" + std::to_string(e), exact_spectrum(build_eta_component(table, e)));
    for (const auto& d : s.triple.d.elements())
      comps.emplace_back("chi=" + to_string(d), exact_spectrum(build_chi_component(table, Character(s.a_action.module(), d), s.config.state_cap)));
    if (format == "json") {
      json j{{"schema_version", kSchemaVersion}, {"depth", depth}, {"levels", table.levels()}, {"components", json::array()}};
      for (const auto& [name, spec] : comps) {
        json ev = json::array();
        for (const auto& [z, m] : spec.mult) ev.push_back({z.numerator(), z.denominator(), m});
        j["components"].push_back({{"component", name}, {"eigenvalues", ev}});
      }
      out = j.dump(1) + "\n";
    } else {
      out = "component,numerator,denominator,multiplicity\n";
      for (const auto& [name, spec] : comps)
        for (const auto& [z, m] : spec.mult)
          out += csv_escape(name) + "," + std::to_string(z.numerator()) + "," + std::to_string(z.denominator()) + "," + std::to_string(m) + "\n";
    }
  } else if (what == "decay") {
    const std::size_t depth = decay_depth(s);
    if (depth <= s.config.test_level) fail(ErrorKind::SizeLimit, "tower too shallow for decay");
    const auto table = correlation_decay(s.schedule, depth, s.config.test_level, s.config.decay_level_cap);
    if (format == "json") {
      json j = decay_json(table);
      j["schema_version"] = kSchemaVersion;
      j["rows"] = json::array();
      for (const auto& r : table.rows) j["rows"].push_back({r.lag, r.pair, r.numerator, r.denominator});
      out = j.dump(1) + "\n";
    } else {
      out = "lag,pairId,value_numerator,value_denominator\n";
      for (const auto& r : table.rows)
        out += std::to_string(r.lag) + "," + std::to_string(r.pair) + "," + std::to_string(r.numerator) + "," + std::to_string(r.denominator) + "\n";
    }
  } else if (what == "report") {
    std::optional<LevelTable> table;
    std::optional<CocycleModel> model;
    const auto m = session_multiplicity(s, table, model);
    if (format == "json") {
      json j = multiplicity_json(m);
      j["schema_version"] = kSchemaVersion;
      out = j.dump(1) + "\n";
    } else {
      out = "class,size,members\n";
      for (std::size_t i = 0; i < m.classes.size(); ++i) {
        std::string members;
        for (const auto& e : m.classes[i].members) members += (members.empty() ? "" : " ") + to_string(e);
        out += std::to_string(i) + "," + std::to_string(m.classes[i].size()) + "," + csv_escape(members) + "\n";
      }
    }
  } else {
    fail(ErrorKind::InvalidConfig, "unknown dump target '" + what + "'");
  }
  const fs::path path = dir / "dumps" / (what + "." + format);
  write_file(path, out);
  return path;
}

}  // namespace cfmix
