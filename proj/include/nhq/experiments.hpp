#pragma once

// Scenario runner (prepare -> evolve -> measure) for both engines, record
// persistence, sweeps with resume, and the summary tables.

#include "nhq/config.hpp"
#include "nhq/ed.hpp"
#include "nhq/observables.hpp"
#include "nhq/records.hpp"

#include <atomic>
#include <mutex>
#include <thread>

namespace nhq {

/// Double-valued views of the tables, used for features and summaries.
struct Series {
  std::vector<double> times;             // sample times
  std::vector<std::vector<double>> n;    // density[t][site], empty if not measured
  std::vector<double> total;
  std::map<std::string, std::vector<double>> s_vn, s2, ds2;  // per region label
};

struct RunRecord {
  ScenarioConfig config;
  Manifest manifest;
  std::vector<Table> tables;  // features last
  Series series;

  const Table* table(const std::string& name) const {
    for (const auto& t : tables)
      if (t.name == name) return &t;
    return nullptr;
  }
  bool ok() const { return manifest.status == "ok"; }

  std::map<std::string, std::string> features() const {
    std::map<std::string, std::string> out;
    if (const Table* f = table("features"))
      for (const auto& r : f->rows) out[r[0]] = r[1];
    return out;
  }
};

inline int print_digits(const PrecisionContext& ctx) { return std::min(30, ctx.tolerance_exponent()); }

inline std::string table_name(const std::string& kind, const std::vector<Region>& regions, std::size_t k) {
  return k == 0 ? kind : kind + "_" + regions[k].label();
}

/// "# key=value" lines echoed into every CSV.
inline std::vector<std::pair<std::string, std::string>> echo_lines(const ScenarioConfig& c) {
  auto p = c.precision();
  std::vector<std::pair<std::string, std::string>> e{
      {"name", c.name},        {"L", std::to_string(c.L)},       {"prep_boundary", to_string(c.prep)},
      {"evo_boundary", to_string(c.evo)}, {"theta", c.theta},    {"pattern", to_string(c.pattern)},
      {"J", c.J},              {"gamma", c.gamma},               {"dt", c.dt},
      {"t_max", c.t_max},      {"renorm_every", std::to_string(c.renorm_every)},
      {"stride", std::to_string(c.m.stride)}, {"n_alpha", std::to_string(c.m.n_alpha)},
      {"digits", std::to_string(p.digits)},   {"safety_margin", std::to_string(p.safety_margin)},
      {"engine", to_string(c.engine)},        {"code_version", kCodeVersion}};
  for (std::size_t k = 0; k < c.m.entropy.size(); ++k) e.push_back({"entropy_region_" + std::to_string(k), c.m.entropy[k].label()});
  for (std::size_t k = 0; k < c.m.asymmetry.size(); ++k)
    e.push_back({"asymmetry_region_" + std::to_string(k), c.m.asymmetry[k].label()});
  return e;
}

// ------------------------------------------------------------ features

inline Series series_from_tables(const ScenarioConfig& c, const std::vector<Table>& tables) {
  Series s;
  auto find = [&](const std::string& n) -> const Table* {
    for (const auto& t : tables)
      if (t.name == n) return &t;
    return nullptr;
  };
  if (const Table* t = find("total")) {
    s.times = t->doubles("t");
    s.total = t->doubles("N_total");
  }
  if (const Table* t = find("density")) {
    auto n = t->doubles("n");
    const std::size_t L = static_cast<std::size_t>(c.L);
    for (std::size_t k = 0; k + L <= n.size(); k += L) s.n.emplace_back(n.begin() + k, n.begin() + k + L);
  }
  for (std::size_t k = 0; k < c.m.entropy.size(); ++k)
    if (const Table* t = find(table_name("entropy", c.m.entropy, k))) {
      s.s_vn[c.m.entropy[k].label()] = t->doubles("S_vN");
      s.s2[c.m.entropy[k].label()] = t->doubles("S_2");
    }
  for (std::size_t k = 0; k < c.m.asymmetry.size(); ++k)
    if (const Table* t = find(table_name("asymmetry", c.m.asymmetry, k)))
      s.ds2[c.m.asymmetry[k].label()] = t->doubles("dS2");
  return s;
}

inline Table feature_table(const ScenarioConfig& c, const Series& s, const FeatureSettings& fs = {}) {
  Table t{"features", {"metric", "value"}, {}};
  auto add = [&](const std::string& k, const std::string& v) { t.rows.push_back({k, v}); };
  auto none = std::string("none");
  if (!s.total.empty()) {
    add("N_total_initial", format_double(s.total.front()));
    add("N_total_final", format_double(s.total.back()));
  }
  if (!s.n.empty()) {
    std::vector<double> tn(s.times.begin(), s.times.begin() + static_cast<long>(s.n.size()));
    auto fr = extract_front(tn, s.n, fs);
    add("front_detected", fr.detected ? "1" : "0");
    add("wavefront_speed", fr.detected ? format_double(fr.speed) : none);
    add("tau1", fr.detected ? format_double(fr.tau1) : none);
    auto t2 = extract_tau2(tn, s.n, fs);
    add("tau2", t2 ? format_double(*t2) : none);
  }
  for (const auto& r : c.m.entropy) {
    auto it = s.s_vn.find(r.label());
    if (it == s.s_vn.end() || it->second.empty()) continue;
    const auto& v = it->second;
    std::size_t km = static_cast<std::size_t>(std::max_element(v.begin(), v.end()) - v.begin());
    std::string p = c.m.entropy.size() > 1 ? "_" + r.label() : "";
    add("ee_max" + p, format_double(v[km]));
    add("ee_max_time" + p, format_double(s.times[km]));
    add("ee_final" + p, format_double(v.back()));
  }
  for (const auto& r : c.m.asymmetry) {
    auto it = s.ds2.find(r.label());
    if (it == s.ds2.end() || it->second.empty()) continue;
    const auto& v = it->second;
    std::string p = c.m.asymmetry.size() > 1 ? "_" + r.label() : "";
    add("ds2_initial" + p, format_double(v.front()));
    add("ds2_final" + p, format_double(v.back()));
    add("ds2_min" + p, format_double(*std::min_element(v.begin(), v.end())));
  }
  return t;
}

// ------------------------------------------------------- state caching

namespace detail {
/// Initial Gaussian states keyed by everything that determines them.
inline std::mutex& state_cache_mutex() {
  static std::mutex m;
  return m;
}
inline std::map<std::string, BogoliubovState<Mp>>& state_cache() {
  static std::map<std::string, BogoliubovState<Mp>> c;
  return c;
}

inline BogoliubovState<Mp> cached_ground_state(const ScenarioConfig& c, const PrecisionContext& ctx) {
  const std::string key = std::to_string(c.L) + "|" + to_string(c.prep) + "|" + c.theta + "|" + c.J + "|" +
                          std::to_string(ctx.digits) + "|" + std::to_string(ctx.safety_margin);
  {
    std::lock_guard<std::mutex> lk(state_cache_mutex());
    auto it = state_cache().find(key);
    if (it != state_cache().end()) return it->second;
  }
  auto st = ground_state(initial_bdg_matrix(initial_params(parse_angle<Mp>(c.theta), Mp(c.J)), LatticeSpec{c.L, c.prep}),
                         ctx);
  std::lock_guard<std::mutex> lk(state_cache_mutex());
  if (state_cache().size() > 32) state_cache().clear();
  state_cache().emplace(key, st);
  return st;
}
}  // namespace detail

// ------------------------------------------------------------ run loop

namespace detail {
/// Accumulates formatted rows while the engine runs.
struct Collector {
  const ScenarioConfig& c;
  int pd;
  Table density{"density", {"t", "site", "n"}, {}};
  Table current{"current", {"t", "bond", "I"}, {}};
  Table total{"total", {"t", "N_total"}, {}};
  Table purity{"purity", {"t", "orthonormality", "projector"}, {}};
  std::vector<Table> entropy, asymmetry;
  std::vector<std::vector<Mp>> n_hist, I_hist;
  std::vector<std::string> t_text;
  Mp max_orth = 0, max_proj = 0;

  Collector(const ScenarioConfig& cfg, int digits) : c(cfg), pd(digits) {
    for (std::size_t k = 0; k < c.m.entropy.size(); ++k)
      entropy.push_back(Table{table_name("entropy", c.m.entropy, k), {"t", "S_vN", "S_2"}, {}});
    for (std::size_t k = 0; k < c.m.asymmetry.size(); ++k)
      asymmetry.push_back(Table{table_name("asymmetry", c.m.asymmetry, k), {"t", "dS2"}, {}});
  }

  std::string f(const Mp& v) const { return format_number(v, pd); }

  void profiles(const std::string& t, const DensityCurrent<Mp>& dc) {
    t_text.push_back(t);
    total.rows.push_back({t, f(dc.total)});
    if (c.m.density)
      for (std::size_t j = 0; j < dc.n.size(); ++j) density.rows.push_back({t, std::to_string(j + 1), f(dc.n[j])});
    if (c.m.current)
      for (std::size_t j = 0; j < dc.I.size(); ++j) current.rows.push_back({t, std::to_string(j + 1), f(dc.I[j])});
    if (c.m.inflow) {
      n_hist.push_back(dc.n);
      I_hist.push_back(dc.I);
    }
  }

  void purity_row(const std::string& t, const Mp& orth, const std::optional<Mp>& proj) {
    if (orth > max_orth) max_orth = orth;
    if (proj && *proj > max_proj) max_proj = *proj;
    purity.rows.push_back({t, f(orth), proj ? f(*proj) : std::string("")});
  }

  std::vector<Table> finish(const Mp& delta) {
    std::vector<Table> out;
    out.push_back(total);
    if (c.m.density) out.push_back(density);
    if (c.m.current) out.push_back(current);
    if (c.m.inflow) {
      Table inflow_t{"inflow", {"t", "site", "sigma"}, {}};
      for (std::size_t k = 1; k + 1 < n_hist.size(); ++k) {
        auto s = inflow(n_hist[k - 1], n_hist[k + 1], I_hist[k], delta);
        for (std::size_t j = 0; j < s.size(); ++j) inflow_t.rows.push_back({t_text[k], std::to_string(j + 1), f(s[j])});
      }
      out.push_back(inflow_t);
    }
    for (auto& t : entropy) out.push_back(t);
    for (auto& t : asymmetry) out.push_back(t);
    out.push_back(purity);
    return out;
  }
};

inline void run_gaussian(const ScenarioConfig& c, const PrecisionContext& ctx, Collector& col, Mp& t_now,
                         long& steps_done) {
  const Mp J(c.J), gamma(c.gamma), dt(c.dt);
  auto st = cached_ground_state(c, ctx);
  if (c.pattern == Pattern::AFM) st.W = afm_transform(st.W);
  const auto h = hn_matrix(EvolutionParams<Mp>(J, gamma), LatticeSpec{c.L, c.evo});
  const long n = c.n_steps();
  std::optional<Stepper<Mp>> stepper;
  if (n > 0) stepper.emplace(make_propagator(h, dt, ctx), c.renorm_every, ctx);
  long sample = 0;
  for (long k = 0; k <= n; ++k) {
    t_now = dt * k;
    if (k % c.m.stride == 0) {
      BogoliubovState<Mp> s = st;
      if (s.steps % c.renorm_every != 0) s.W = thin_qr(s.W, ctx);
      const std::string t = col.f(t_now);
      Mp orth = orthonormality_defect(s.W);
      if (orth > ctx.tolerance<Mp>() * c.L) throw NumericalError("orthonormality lost");
      std::optional<Mp> proj;
      if (sample % c.m.purity_every == 0 || k + c.m.stride > n) proj = purity(s, true).projector;
      col.purity_row(t, orth, proj);
      col.profiles(t, density_current(s, J));
      for (std::size_t r = 0; r < c.m.entropy.size(); ++r) {
        auto e = ee_from_projector(subsystem_projector(s, c.m.entropy[r].sites(c.L)), ctx);
        col.entropy[r].rows.push_back({t, col.f(e.s_vn), col.f(e.s2)});
      }
      for (std::size_t r = 0; r < c.m.asymmetry.size(); ++r) {
        auto a = ea_renyi2(subsystem_projector(s, c.m.asymmetry[r].sites(c.L)), c.m.n_alpha, ctx);
        col.asymmetry[r].rows.push_back({t, col.f(a.delta_s2)});
      }
      ++sample;
    }
    if (k < n) {
      t_now = dt * (k + 1);
      stepper->step(st);
      steps_done = st.steps;
    }
  }
}

inline void run_ed(const ScenarioConfig& c, const PrecisionContext& ctx, Collector& col, Mp& t_now, long& steps_done) {
  const Mp J(c.J), gamma(c.gamma), dt(c.dt);
  const Mp theta = parse_angle<Mp>(c.theta);
  auto how = c.pattern == Pattern::AFM ? InitialConstruction::Cat : InitialConstruction::GroundState;
  FockVector<Mp> psi = build_initial_state(theta, c.pattern, LatticeSpec{c.L, c.prep}, how, J);
  const auto h = hn_matrix(EvolutionParams<Mp>(J, gamma), LatticeSpec{c.L, c.evo});
  const long n = c.n_steps();
  std::optional<EdPropagator<Mp>> u;
  if (n > 0) u.emplace(build_evolution_hamiltonian(h), dt, ctx);
  for (long k = 0; k <= n; ++k) {
    t_now = dt * k;
    if (k % c.m.stride == 0) {
      const std::string t = col.f(t_now);
      using std::abs;
      Mp nd = abs(psi.norm() - 1);
      col.purity_row(t, nd, std::optional<Mp>(nd));
      NambuCorrelations<Mp> g{ed_normal_correlations(psi), CMatrix<Mp>()};
      col.profiles(t, density_current(g, J, ctx));
      for (std::size_t r = 0; r < c.m.entropy.size(); ++r) {
        auto em = exact_measures(reduced_density_matrix(psi, c.m.entropy[r].sites(c.L)), ctx);
        col.entropy[r].rows.push_back({t, col.f(em.s_vn), col.f(em.s2)});
      }
      for (std::size_t r = 0; r < c.m.asymmetry.size(); ++r) {
        auto em = exact_measures(reduced_density_matrix(psi, c.m.asymmetry[r].sites(c.L)), ctx);
        col.asymmetry[r].rows.push_back({t, col.f(em.delta_s2)});
      }
    }
    if (k < n) {
      t_now = dt * (k + 1);
      psi = step_normalized(psi, *u, ctx);
      steps_done = k + 1;
    }
  }
}
}  // namespace detail

/// Runs one scenario. Numerical failures do not throw: the record carries
/// status "failed", the failure time, and every row sampled before it.
inline RunRecord run_scenario(const ScenarioConfig& cfg, const FeatureSettings& fs = {}) {
  cfg.validate();
  const auto t_start = std::chrono::steady_clock::now();
  const PrecisionContext ctx = cfg.precision();
  std::optional<PrecisionScope> scope;
  if (Mp::default_precision() != static_cast<unsigned>(ctx.digits)) scope.emplace(ctx);

  RunRecord rec;
  rec.config = cfg;
  rec.manifest.config = to_json(cfg);
  rec.manifest.config_hash = config_hash(cfg);
  rec.manifest.started = utc_timestamp();
  rec.manifest.digits = ctx.digits;
  rec.manifest.safety_margin = ctx.safety_margin;

  detail::Collector col(cfg, print_digits(ctx));
  Mp t_now = 0;
  long steps = 0;
  try {
    if (cfg.engine == Engine::Gaussian) detail::run_gaussian(cfg, ctx, col, t_now, steps);
    else detail::run_ed(cfg, ctx, col, t_now, steps);
    rec.manifest.status = "ok";
  } catch (const NumericalError& e) {
    rec.manifest.status = "failed";
    rec.manifest.failure_time = format_number(t_now, 12);
    rec.manifest.message = e.what();
  } catch (const std::invalid_argument& e) {
    rec.manifest.status = "failed";
    rec.manifest.failure_time = format_number(t_now, 12);
    rec.manifest.message = e.what();
  }
  rec.manifest.steps = steps;
  rec.manifest.max_orthonormality_defect = format_number(col.max_orth, 6);
  rec.manifest.max_projector_defect = format_number(col.max_proj, 6);
  rec.tables = col.finish(Mp(cfg.dt) * cfg.m.stride);
  rec.series = series_from_tables(cfg, rec.tables);
  rec.tables.push_back(feature_table(cfg, rec.series, fs));
  rec.manifest.finished = utc_timestamp();
  rec.manifest.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
  return rec;
}

// --------------------------------------------------------------- export

inline Json record_json(const RunRecord& r) {
  Json tables = Json::object();
  for (const auto& t : r.tables) tables[t.name] = Json{{"columns", t.columns}, {"rows", t.rows}};
  return Json{{"manifest", r.manifest.to_json()}, {"tables", tables}};
}

inline void write_svg(const RunRecord& r, const fs::path& dir) {
  const auto& s = r.series;
  std::string tag = "L=" + std::to_string(r.config.L) + " gamma=" + r.config.gamma + " theta=" + r.config.theta;
  if (!s.n.empty())
    write_file(dir / "density.svg", svg_heat_map("n_j(t), " + tag, std::vector<double>(s.times.begin(), s.times.begin() + static_cast<long>(s.n.size())), s.n, 0.0, 1.0));
  if (!s.total.empty())
    write_file(dir / "total.svg", svg_line_plot("N_total, " + tag, "t", "N", {{"N_total", s.times, s.total}}));
  if (!s.s_vn.empty()) {
    std::vector<SvgSeries> v;
    for (const auto& [k, y] : s.s_vn) v.push_back({"S_vN " + k, s.times, y});
    write_file(dir / "entropy.svg", svg_line_plot("Entanglement entropy, " + tag, "t", "S", v));
  }
  if (!s.ds2.empty()) {
    std::vector<SvgSeries> v;
    for (const auto& [k, y] : s.ds2) v.push_back({"dS2 " + k, s.times, y});
    write_file(dir / "asymmetry.svg", svg_line_plot("Renyi-2 asymmetry, " + tag, "t", "dS2", v));
  }
}

/// Writes manifest.json plus the requested formats into `dir`.
inline void export_record(const RunRecord& r, const fs::path& dir, const std::vector<std::string>& formats) {
  const auto echo = echo_lines(r.config);
  for (const auto& f : formats) {
    if (f == "csv") {
      for (const auto& t : r.tables) write_file(dir / (t.name + ".csv"), csv_text(t, echo));
    } else if (f == "json") {
      write_file(dir / "record.json", record_json(r).dump(1) + "\n");
    } else if (f == "svg") {
      write_svg(r, dir);
    } else {
      throw OutputError("unknown export format '" + f + "'");
    }
  }
  write_file(dir / "manifest.json", r.manifest.to_json().dump(1) + "\n");
}

inline void write_record(const RunRecord& r, const fs::path& dir) { export_record(r, dir, r.config.formats); }

/// Reloads a record written by write_record (CSV tables + manifest).
inline RunRecord load_record(const fs::path& dir) {
  RunRecord r;
  r.manifest = Manifest::from_json(Json::parse(read_file(dir / "manifest.json")));
  r.config = ScenarioConfig{};
  apply_json(r.config, r.manifest.config);
  std::vector<std::string> order{"total", "density", "current", "inflow"};
  for (std::size_t k = 0; k < r.config.m.entropy.size(); ++k) order.push_back(table_name("entropy", r.config.m.entropy, k));
  for (std::size_t k = 0; k < r.config.m.asymmetry.size(); ++k)
    order.push_back(table_name("asymmetry", r.config.m.asymmetry, k));
  order.push_back("purity");
  order.push_back("features");
  for (const auto& n : order)
    if (fs::exists(dir / (n + ".csv"))) r.tables.push_back(load_csv(dir / (n + ".csv")));
  r.series = series_from_tables(r.config, r.tables);
  return r;
}

// ---------------------------------------------------------------- sweeps

struct SweepOptions {
  fs::path out;            // empty: nothing is written
  int threads = 1;
  bool resume = false;
  FeatureSettings features;
  std::function<void(const std::string&)> log;
};

struct SweepResult {
  std::vector<RunRecord> records;  // same order as the points
  std::vector<bool> resumed;
  Table summary, mpemba;
  int failures = 0;
};

inline Table summary_table(const std::vector<RunRecord>& recs) {
  Table t{"summary",
          {"point", "L", "theta", "gamma", "pattern", "engine", "status", "N_total_final", "ee_max", "ee_max_time",
           "ds2_initial", "ds2_final", "wavefront_speed", "tau1", "tau2"},
          {}};
  for (const auto& r : recs) {
    auto f = r.features();
    auto get = [&](const char* k) { return f.count(k) ? f[k] : std::string(""); };
    t.rows.push_back({r.config.name, std::to_string(r.config.L), r.config.theta, r.config.gamma,
                      to_string(r.config.pattern), to_string(r.config.engine), r.manifest.status,
                      get("N_total_final"), get("ee_max"), get("ee_max_time"), get("ds2_initial"), get("ds2_final"),
                      get("wavefront_speed"), get("tau1"), get("tau2")});
  }
  return t;
}

/// Crossings of dS2(theta_a) - dS2(theta_b) for runs that differ only in theta.
inline Table mpemba_table(const std::vector<RunRecord>& recs, const std::vector<ThetaPair>& pairs) {
  Table t{"mpemba", {"gamma", "L", "region", "theta_a", "theta_b", "crossing_time", "n_crossings"}, {}};
  auto group_key = [](const ScenarioConfig& c) {
    Json j = to_json(c);
    j.erase("name");
    j["initial"].erase("theta");
    return j.dump();
  };
  std::vector<std::string> groups;
  for (const auto& r : recs) {
    auto k = group_key(r.config);
    if (std::find(groups.begin(), groups.end(), k) == groups.end()) groups.push_back(k);
  }
  for (const auto& p : pairs)
    for (const auto& g : groups) {
      const RunRecord *a = nullptr, *b = nullptr;
      for (const auto& r : recs) {
        if (group_key(r.config) != g || !r.ok()) continue;
        if (r.config.theta == p.a) a = &r;
        if (r.config.theta == p.b) b = &r;
      }
      if (!a || !b) continue;
      for (const auto& reg : a->config.m.asymmetry) {
        auto ia = a->series.ds2.find(reg.label()), ib = b->series.ds2.find(reg.label());
        if (ia == a->series.ds2.end() || ib == b->series.ds2.end()) continue;
        auto x = crossings(a->series.times, ia->second, ib->second);
        // a crossing at t = 0 is not a Mpemba crossing
        x.erase(std::remove_if(x.begin(), x.end(), [](double v) { return v <= 0; }), x.end());
        t.rows.push_back({a->config.gamma, std::to_string(a->config.L), reg.label(), p.a, p.b,
                          x.empty() ? std::string("none") : format_double(x.front()), std::to_string(x.size())});
      }
    }
  return t;
}

inline void write_sweep_svg(const SweepConfig& s, const SweepResult& res, const fs::path& dir) {
  std::vector<SvgSeries> ee, ea, tot;
  for (const auto& r : res.records) {
    std::string lab = "g=" + r.config.gamma + " th=" + r.config.theta + (r.config.pattern == Pattern::AFM ? " AFM" : "");
    for (const auto& [k, y] : r.series.s_vn) ee.push_back({lab, r.series.times, y});
    for (const auto& [k, y] : r.series.ds2) ea.push_back({lab, r.series.times, y});
    if (!r.series.total.empty()) tot.push_back({lab, r.series.times, r.series.total});
  }
  if (!tot.empty()) write_file(dir / "total.svg", svg_line_plot(s.name + ": N_total", "t", "N", tot));
  if (!ee.empty()) write_file(dir / "entropy.svg", svg_line_plot(s.name + ": S_vN", "t", "S", ee));
  if (!ea.empty()) write_file(dir / "asymmetry.svg", svg_line_plot(s.name + ": dS2", "t", "dS2", ea));
}

/// Runs every point over a worker pool. With `resume`, points whose
/// manifest reports status ok under the same config hash are reloaded
/// instead of recomputed.
inline SweepResult run_sweep(const SweepConfig& s, const SweepOptions& opt = {}) {
  if (s.points.empty()) throw ConfigError("sweep has no points");
  {
    std::vector<std::string> names;
    for (const auto& p : s.points) {
      p.validate();
      if (std::find(names.begin(), names.end(), p.name) != names.end())
        throw ConfigError("duplicate point name '" + p.name + "'");
      names.push_back(p.name);
    }
  }
  const std::size_t N = s.points.size();
  SweepResult res;
  res.records.resize(N);
  res.resumed.assign(N, false);
  std::vector<std::string> errors(N);
  const fs::path root = opt.out.empty() ? fs::path() : opt.out / s.name;

  // MPFR's default precision is process-wide: concurrent workers need a
  // common precision, otherwise points run one at a time.
  int threads = std::max(1, opt.threads);
  const PrecisionContext ctx0 = s.points.front().precision();
  for (const auto& p : s.points)
    if (p.precision() != ctx0) threads = 1;
  threads = static_cast<int>(std::min<std::size_t>(static_cast<std::size_t>(threads), N));
  std::optional<PrecisionScope> scope;
  if (threads > 1) scope.emplace(ctx0);

  std::mutex log_mutex;
  auto log = [&](const std::string& m) {
    if (!opt.log) return;
    std::lock_guard<std::mutex> lk(log_mutex);
    opt.log(m);
  };

  std::atomic<std::size_t> next{0};
  auto worker = [&]() {
    for (;;) {
      std::size_t i = next.fetch_add(1);
      if (i >= N) return;
      const auto& p = s.points[i];
      const fs::path dir = root.empty() ? fs::path() : root / p.name;
      try {
        if (opt.resume && !dir.empty() && fs::exists(dir / "manifest.json")) {
          auto m = Manifest::from_json(Json::parse(read_file(dir / "manifest.json")));
          if (m.status == "ok" && m.config_hash == config_hash(p)) {
            res.records[i] = load_record(dir);
            res.records[i].config = p;
            res.resumed[i] = true;
            log("resume " + p.name);
            continue;
          }
        }
        log("run    " + p.name);
        res.records[i] = run_scenario(p, opt.features);
        if (!dir.empty()) write_record(res.records[i], dir);
        log("done   " + p.name + " [" + res.records[i].manifest.status + "] " +
            format_double(std::round(res.records[i].manifest.wall_seconds * 10) / 10) + " s");
      } catch (const std::exception& e) {
        errors[i] = e.what();
        log("error  " + p.name + ": " + e.what());
      }
    }
  };
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int k = 0; k < threads; ++k) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  for (std::size_t i = 0; i < N; ++i) {
    if (!errors[i].empty()) {
      res.records[i].config = s.points[i];
      res.records[i].manifest.config = to_json(s.points[i]);
      res.records[i].manifest.status = "failed";
      res.records[i].manifest.message = errors[i];
    }
    if (!res.records[i].ok()) ++res.failures;
  }
  res.summary = summary_table(res.records);
  res.mpemba = mpemba_table(res.records, s.pairs);
  if (!root.empty()) {
    std::vector<std::pair<std::string, std::string>> echo{{"sweep", s.name}, {"code_version", kCodeVersion}};
    write_file(root / "summary.csv", csv_text(res.summary, echo));
    write_file(root / "mpemba.csv", csv_text(res.mpemba, echo));
    write_file(root / "sweep.json", to_json(s).dump(1) + "\n");
    bool svg = false;
    for (const auto& p : s.points)
      svg = svg || std::find(p.formats.begin(), p.formats.end(), "svg") != p.formats.end();
    if (svg) write_sweep_svg(s, res, root);
  }
  return res;
}

// -------------------------------------------------- oracle equivalence

/// Largest deviation per quantity between matching tables of two runs.
struct TableDeviation {
  std::string quantity;
  double max_abs = 0;
  std::size_t compared = 0;
};

inline std::vector<TableDeviation> compare_records(const RunRecord& a, const RunRecord& b) {
  std::vector<std::pair<std::string, std::string>> q{{"density", "n"}, {"current", "I"}, {"total", "N_total"}};
  for (std::size_t k = 0; k < a.config.m.entropy.size(); ++k) {
    q.push_back({table_name("entropy", a.config.m.entropy, k), "S_vN"});
    q.push_back({table_name("entropy", a.config.m.entropy, k), "S_2"});
  }
  for (std::size_t k = 0; k < a.config.m.asymmetry.size(); ++k)
    q.push_back({table_name("asymmetry", a.config.m.asymmetry, k), "dS2"});
  std::vector<TableDeviation> out;
  for (const auto& [tn, col] : q) {
    const Table *ta = a.table(tn), *tb = b.table(tn);
    if (!ta || !tb) continue;
    TableDeviation d{tn + "." + col};
    auto va = ta->doubles(col), vb = tb->doubles(col);
    if (va.size() != vb.size()) {
      d.max_abs = std::numeric_limits<double>::infinity();
    } else {
      // compare at full printed precision
      const std::size_t k = ta->column(col);
      for (std::size_t i = 0; i < va.size(); ++i) {
        Mp x(ta->rows[i][k]), y(tb->rows[i][k]);
        using std::abs;
        d.max_abs = std::max(d.max_abs, to_double(Mp(abs(x - y))));
      }
      d.compared = va.size();
    }
    out.push_back(d);
  }
  return out;
}

}  // namespace nhq
