#pragma once

// Scenario and sweep configuration, JSON (de)serialization and the named
// presets for the figure runs.

#include "nhq/model.hpp"

#include <json.hpp>
#include <openssl/evp.h>

#include <map>
#include <optional>
#include <string>
#include <vector>

namespace nhq {

inline constexpr const char* kCodeVersion = "1.0.0";

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

using Json = nlohmann::json;

/// Contiguous block [start, start+length), or its complement.
struct Region {
  int start = 0;
  int length = 6;
  bool complement = false;

  std::vector<int> sites(int L) const {
    std::vector<int> out;
    for (int j = 0; j < L; ++j) {
      bool in = j >= start && j < start + length;
      if (in != complement) out.push_back(j);
    }
    return out;
  }

  std::string label() const {
    std::string s = "s" + std::to_string(start) + "l" + std::to_string(length);
    return complement ? s + "c" : s;
  }

  void validate(int L) const {
    if (length < 1 || start < 0 || start + length > L)
      throw ConfigError("region [" + std::to_string(start) + ", " + std::to_string(start + length) +
                        ") outside the chain");
    if (length == L) throw ConfigError("region must be a proper subset of the chain");
  }

  friend bool operator==(const Region&, const Region&) = default;
};

enum class Engine { Gaussian, ED };

inline std::string to_string(Engine e) { return e == Engine::Gaussian ? "gaussian" : "ed"; }
inline Engine parse_engine(const std::string& s) {
  if (s == "gaussian") return Engine::Gaussian;
  if (s == "ed") return Engine::ED;
  throw ConfigError("unknown engine '" + s + "'");
}

struct Measurements {
  bool density = true;
  bool current = true;
  bool inflow = true;
  std::vector<Region> entropy;
  std::vector<Region> asymmetry;
  int n_alpha = 64;
  int stride = 1;        // sample every stride steps
  int purity_every = 40; // explicit G^2 - G check every k samples (and at the end)
};

/// One run. Physical parameters are kept as the decimal strings the user
/// gave, so they are parsed exactly at whatever precision the run uses.
struct ScenarioConfig {
  std::string name = "scenario";
  int L = 64;
  Boundary prep = Boundary::APBC;
  Boundary evo = Boundary::OBC;
  std::string theta = "pi/6";
  Pattern pattern = Pattern::FM;
  std::string J = "1";
  std::string gamma = "0.8";
  std::string dt = "0.01";
  std::string t_max = "40";
  int renorm_every = 1;
  int digits = 0;         // 0: chosen from L
  int safety_margin = 0;  // 0: digits / 4
  Engine engine = Engine::Gaussian;
  Measurements m;
  std::vector<std::string> formats{"csv", "json"};

  PrecisionContext precision() const {
    PrecisionContext p = digits > 0 ? PrecisionContext(digits) : PrecisionContext::for_size(L);
    if (safety_margin > 0) p = PrecisionContext(p.digits, safety_margin);
    return p;
  }

  /// Number of dt steps to reach t_max; t_max must be a multiple of dt.
  long n_steps() const {
    double d = std::stod(dt), t = std::stod(t_max);
    double k = t / d;
    long n = std::lround(k);
    if (std::abs(k - static_cast<double>(n)) > 1e-9) throw ConfigError("t_max must be an integer multiple of dt");
    return n;
  }

  void validate() const {
    auto num = [](const std::string& key, const std::string& v) {
      try {
        std::size_t pos = 0;
        (void)std::stod(v, &pos);
        if (pos != v.size()) throw ConfigError("");
      } catch (const std::exception&) {
        throw ConfigError("'" + key + "' is not a number: " + v);
      }
    };
    try {
      LatticeSpec{L, prep}.validate();
    } catch (const std::invalid_argument& e) {
      throw ConfigError(e.what());
    }
    if (L < 2) throw ConfigError("L must be >= 2");
    try {
      (void)parse_angle<double>(theta);
    } catch (const std::exception&) {
      throw ConfigError("bad theta: " + theta);
    }
    num("J", J);
    num("gamma", gamma);
    num("dt", dt);
    num("t_max", t_max);
    if (std::stod(gamma) < 0) throw ConfigError("gamma must be >= 0");
    if (!(std::stod(dt) > 0)) throw ConfigError("dt must be > 0");
    if (std::stod(t_max) < 0) throw ConfigError("t_max must be >= 0");
    (void)n_steps();
    if (renorm_every < 1) throw ConfigError("renorm_every must be >= 1");
    if (digits != 0 && digits < 16) throw ConfigError("digits must be >= 16");
    if (safety_margin < 0 || (safety_margin > 0 && safety_margin >= precision().digits))
      throw ConfigError("safety_margin must lie in [1, digits)");
    if (engine == Engine::ED && L > 12) throw ConfigError("ed engine is limited to L <= 12");
    if (m.stride < 1) throw ConfigError("stride must be >= 1");
    if (m.n_alpha < 16 || m.n_alpha % 2) throw ConfigError("n_alpha must be even and >= 16");
    if (m.purity_every < 1) throw ConfigError("purity_every must be >= 1");
    for (const auto& r : m.entropy) r.validate(L);
    for (const auto& r : m.asymmetry) r.validate(L);
    for (const auto& f : formats)
      if (f != "csv" && f != "json" && f != "svg") throw ConfigError("unknown output format '" + f + "'");
    if (std::find(formats.begin(), formats.end(), "csv") == formats.end())
      throw ConfigError("csv output is required");
  }
};

// ------------------------------------------------------------------ JSON

inline Json region_to_json(const Region& r) {
  return Json{{"start", r.start}, {"length", r.length}, {"complement", r.complement}};
}

inline Region region_from_json(const Json& j) {
  Region r;
  r.start = j.value("start", 0);
  r.length = j.value("length", 6);
  r.complement = j.value("complement", false);
  return r;
}

inline Json to_json(const ScenarioConfig& c) {
  Json ent = Json::array(), asy = Json::array();
  for (const auto& r : c.m.entropy) ent.push_back(region_to_json(r));
  for (const auto& r : c.m.asymmetry) asy.push_back(region_to_json(r));
  return Json{
      {"name", c.name},
      {"lattice", {{"L", c.L}, {"prep_boundary", to_string(c.prep)}, {"evo_boundary", to_string(c.evo)}}},
      {"initial", {{"theta", c.theta}, {"pattern", to_string(c.pattern)}}},
      {"evolution",
       {{"J", c.J}, {"gamma", c.gamma}, {"dt", c.dt}, {"t_max", c.t_max}, {"renorm_every", c.renorm_every}}},
      {"precision", {{"digits", c.precision().digits}, {"safety_margin", c.precision().safety_margin}}},
      {"engine", to_string(c.engine)},
      {"measurements",
       {{"density", c.m.density},
        {"current", c.m.current},
        {"inflow", c.m.inflow},
        {"entropy", ent},
        {"asymmetry", asy},
        {"n_alpha", c.m.n_alpha},
        {"stride", c.m.stride},
        {"purity_every", c.m.purity_every}}},
      {"output", {{"formats", c.formats}}},
  };
}

namespace detail {
/// Numbers may be written as JSON numbers or strings; both become strings.
inline std::string number_text(const Json& v, const std::string& key) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_number_integer()) return std::to_string(v.get<long long>());
  if (v.is_number()) return shortest_decimal(v.get<double>());
  throw ConfigError("'" + key + "' must be a number or a string");
}

inline void check_keys(const Json& j, std::initializer_list<const char*> allowed, const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + " must be an object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool ok = false;
    for (auto a : allowed) ok = ok || it.key() == a;
    if (!ok) throw ConfigError("unknown key '" + it.key() + "' in " + where);
  }
}
}  // namespace detail

/// Fills `c` from a (possibly partial) JSON object.
inline void apply_json(ScenarioConfig& c, const Json& j) {
  using detail::number_text;
  try {
    detail::check_keys(j, {"name", "lattice", "initial", "evolution", "precision", "engine", "measurements", "output"},
                       "scenario");
    if (j.contains("name")) c.name = j["name"].get<std::string>();
    if (j.contains("lattice")) {
      const auto& s = j["lattice"];
      detail::check_keys(s, {"L", "prep_boundary", "evo_boundary"}, "lattice");
      if (s.contains("L")) c.L = s["L"].get<int>();
      if (s.contains("prep_boundary")) c.prep = parse_boundary(s["prep_boundary"].get<std::string>());
      if (s.contains("evo_boundary")) c.evo = parse_boundary(s["evo_boundary"].get<std::string>());
    }
    if (j.contains("initial")) {
      const auto& s = j["initial"];
      detail::check_keys(s, {"theta", "pattern"}, "initial");
      if (s.contains("theta")) c.theta = number_text(s["theta"], "theta");
      if (s.contains("pattern")) c.pattern = parse_pattern(s["pattern"].get<std::string>());
    }
    if (j.contains("evolution")) {
      const auto& s = j["evolution"];
      detail::check_keys(s, {"J", "gamma", "dt", "t_max", "renorm_every"}, "evolution");
      if (s.contains("J")) c.J = number_text(s["J"], "J");
      if (s.contains("gamma")) c.gamma = number_text(s["gamma"], "gamma");
      if (s.contains("dt")) c.dt = number_text(s["dt"], "dt");
      if (s.contains("t_max")) c.t_max = number_text(s["t_max"], "t_max");
      if (s.contains("renorm_every")) c.renorm_every = s["renorm_every"].get<int>();
    }
    if (j.contains("precision")) {
      const auto& s = j["precision"];
      detail::check_keys(s, {"digits", "safety_margin"}, "precision");
      if (s.contains("digits")) c.digits = s["digits"].get<int>();
      if (s.contains("safety_margin")) c.safety_margin = s["safety_margin"].get<int>();
    }
    if (j.contains("engine")) c.engine = parse_engine(j["engine"].get<std::string>());
    if (j.contains("measurements")) {
      const auto& s = j["measurements"];
      detail::check_keys(s, {"density", "current", "inflow", "entropy", "asymmetry", "n_alpha", "stride", "purity_every"},
                         "measurements");
      if (s.contains("density")) c.m.density = s["density"].get<bool>();
      if (s.contains("current")) c.m.current = s["current"].get<bool>();
      if (s.contains("inflow")) c.m.inflow = s["inflow"].get<bool>();
      if (s.contains("entropy")) {
        c.m.entropy.clear();
        for (const auto& r : s["entropy"]) c.m.entropy.push_back(region_from_json(r));
      }
      if (s.contains("asymmetry")) {
        c.m.asymmetry.clear();
        for (const auto& r : s["asymmetry"]) c.m.asymmetry.push_back(region_from_json(r));
      }
      if (s.contains("n_alpha")) c.m.n_alpha = s["n_alpha"].get<int>();
      if (s.contains("stride")) c.m.stride = s["stride"].get<int>();
      if (s.contains("purity_every")) c.m.purity_every = s["purity_every"].get<int>();
    }
    if (j.contains("output")) {
      const auto& s = j["output"];
      detail::check_keys(s, {"formats"}, "output");
      if (s.contains("formats")) c.formats = s["formats"].get<std::vector<std::string>>();
    }
  } catch (const Json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
}

inline ScenarioConfig scenario_from_json(const Json& j) {
  ScenarioConfig c;
  apply_json(c, j);
  c.validate();
  return c;
}

/// SHA-256 of a byte string as lowercase hex.
inline std::string sha256_hex(const std::string& bytes) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), md, &len, EVP_sha256(), nullptr) != 1)
    throw std::runtime_error("sha256 failed");
  static const char* hex = "0123456789abcdef";
  std::string out;
  for (unsigned i = 0; i < len; ++i) {
    out.push_back(hex[md[i] >> 4]);
    out.push_back(hex[md[i] & 15]);
  }
  return out;
}

/// Hash of the canonical (key-sorted) config JSON plus the code version.
inline std::string config_hash(const ScenarioConfig& c) {
  return sha256_hex(to_json(c).dump() + "|" + kCodeVersion).substr(0, 16);
}

// ---------------------------------------------------------------- sweeps

struct ThetaPair {
  std::string a, b;
};

struct SweepConfig {
  std::string name = "sweep";
  std::vector<ScenarioConfig> points;
  std::vector<ThetaPair> pairs;  // for Mpemba crossings
};

/// File-system friendly angle text: "pi/6" -> "pi_6".
inline std::string slug(const std::string& s) {
  std::string out;
  for (char c : s) {
    if (std::isalnum(static_cast<unsigned char>(c)) || c == '.' || c == '-') out.push_back(c);
    else if (c == '/' || c == '*') out.push_back('_');
  }
  return out;
}

inline std::string point_label(const ScenarioConfig& c) {
  std::string s = "L" + std::to_string(c.L) + "_g" + slug(c.gamma) + "_th" + slug(c.theta);
  if (c.pattern == Pattern::AFM) s += "_afm";
  if (!c.m.entropy.empty() && c.m.entropy.front().start != 0) s += "_" + c.m.entropy.front().label();
  return s;
}

/// Cartesian grid over theta, gamma, L and subsystem start on top of a base.
struct Grid {
  std::vector<std::string> theta, gamma;
  std::vector<int> L, subsystem_start;
};

inline std::vector<ScenarioConfig> expand_grid(const ScenarioConfig& base, const Grid& g) {
  auto or_base = [](const auto& v, const auto& b) {
    using V = std::decay_t<decltype(v)>;
    return v.empty() ? V{b} : v;
  };
  auto thetas = or_base(g.theta, base.theta);
  auto gammas = or_base(g.gamma, base.gamma);
  auto Ls = or_base(g.L, base.L);
  std::vector<int> starts = g.subsystem_start;
  if (starts.empty()) starts.push_back(-1);
  std::vector<ScenarioConfig> out;
  for (int L : Ls)
    for (const auto& ga : gammas)
      for (const auto& th : thetas)
        for (int st : starts) {
          ScenarioConfig c = base;
          c.L = L;
          c.gamma = ga;
          c.theta = th;
          if (st >= 0) {
            for (auto& r : c.m.entropy) r.start = st;
            for (auto& r : c.m.asymmetry) r.start = st;
          }
          c.name = point_label(c);
          out.push_back(c);
        }
  return out;
}

/// {"name", "base": scenario, "grid": {...}, "points": [overrides], "pairs": [[a, b]]}
inline SweepConfig sweep_from_json(const Json& j) {
  try {
    detail::check_keys(j, {"name", "base", "grid", "points", "pairs"}, "sweep");
    SweepConfig s;
    s.name = j.value("name", std::string("sweep"));
    ScenarioConfig base;
    if (j.contains("base")) apply_json(base, j["base"]);
    if (j.contains("grid")) {
      const auto& g = j["grid"];
      detail::check_keys(g, {"theta", "gamma", "L", "subsystem_start"}, "grid");
      Grid grid;
      if (g.contains("theta"))
        for (const auto& v : g["theta"]) grid.theta.push_back(detail::number_text(v, "theta"));
      if (g.contains("gamma"))
        for (const auto& v : g["gamma"]) grid.gamma.push_back(detail::number_text(v, "gamma"));
      if (g.contains("L")) grid.L = g["L"].get<std::vector<int>>();
      if (g.contains("subsystem_start")) grid.subsystem_start = g["subsystem_start"].get<std::vector<int>>();
      s.points = expand_grid(base, grid);
    }
    if (j.contains("points"))
      for (const auto& p : j["points"]) {
        ScenarioConfig c = base;
        apply_json(c, p);
        if (!p.contains("name")) c.name = point_label(c);
        s.points.push_back(c);
      }
    if (s.points.empty()) throw ConfigError("sweep has no points");
    if (j.contains("pairs"))
      for (const auto& p : j["pairs"]) {
        if (!p.is_array() || p.size() != 2) throw ConfigError("pairs entries must be [theta_a, theta_b]");
        s.pairs.push_back({detail::number_text(p[0], "theta"), detail::number_text(p[1], "theta")});
      }
    for (auto& c : s.points) c.validate();
    return s;
  } catch (const Json::exception& e) {
    throw ConfigError(std::string("sweep config: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("sweep config: ") + e.what());
  }
}

inline Json to_json(const SweepConfig& s) {
  Json pts = Json::array(), pairs = Json::array();
  for (const auto& c : s.points) pts.push_back(to_json(c));
  for (const auto& p : s.pairs) pairs.push_back({p.a, p.b});
  return Json{{"name", s.name}, {"points", pts}, {"pairs", pairs}};
}

// --------------------------------------------------------------- presets

/// Theta grid of the fig1 preset. A guessed grid, not a measured one.
inline std::vector<std::string> preset_theta_grid() { return {"0", "pi/12", "pi/6", "pi/4", "pi/3"}; }

inline ScenarioConfig preset_base_l64() {
  ScenarioConfig c;
  c.L = 64;
  c.prep = Boundary::APBC;
  c.evo = Boundary::OBC;
  c.J = "1";
  c.dt = "0.25";
  c.m.density = c.m.current = c.m.inflow = false;
  return c;
}

inline std::vector<std::string> preset_names() {
  return {"fig1", "fronts", "fig2", "fig3", "conservation", "subsystems", "oracle8", "gauss8"};
}

inline SweepConfig preset(const std::string& name) {
  SweepConfig s;
  s.name = name;
  if (name == "fig1") {
    ScenarioConfig b = preset_base_l64();
    b.gamma = "0.8";
    b.t_max = "60";
    b.m.density = b.m.current = b.m.inflow = true;
    Grid g;
    g.theta = preset_theta_grid();
    s.points = expand_grid(b, g);
    ScenarioConfig one = b;
    one.gamma = "1";
    one.theta = "pi/6";
    one.m.current = one.m.inflow = false;
    one.name = point_label(one);
    s.points.push_back(one);
  } else if (name == "fronts") {
    ScenarioConfig b = preset_base_l64();
    b.theta = "pi/6";
    b.t_max = "24";
    b.m.density = true;
    Grid g;
    g.gamma = {"0.4", "0.6", "0.8"};
    s.points = expand_grid(b, g);
    ScenarioConfig afm = b;
    afm.gamma = "0.8";
    afm.pattern = Pattern::AFM;
    afm.name = point_label(afm);
    s.points.push_back(afm);
  } else if (name == "fig2") {
    ScenarioConfig b = preset_base_l64();
    b.t_max = "40";
    b.m.entropy = {Region{0, 6, false}};
    Grid g;
    g.gamma = {"0", "0.2", "0.6"};
    g.theta = {"pi/12", "pi/6", "pi/4", "pi/3"};
    s.points = expand_grid(b, g);
  } else if (name == "fig3") {
    ScenarioConfig b = preset_base_l64();
    b.t_max = "24";
    b.m.asymmetry = {Region{0, 12, false}};
    b.m.n_alpha = 64;
    Grid g;
    g.gamma = {"0", "0.2", "0.6"};
    g.theta = {"pi/6", "pi/3"};
    s.points = expand_grid(b, g);
    s.pairs = {{"pi/6", "pi/3"}};
  } else if (name == "conservation") {
    ScenarioConfig b = preset_base_l64();
    b.theta = "0";
    b.t_max = "20";
    Grid g;
    g.gamma = {"0", "0.2", "0.4", "0.6", "1"};
    s.points = expand_grid(b, g);
  } else if (name == "subsystems") {
    ScenarioConfig b = preset_base_l64();
    b.theta = "pi/3";
    b.gamma = "0.6";
    b.t_max = "40";
    b.m.entropy = {Region{0, 6, false}};
    Grid g;
    g.subsystem_start = {0, 29};
    s.points = expand_grid(b, g);
  } else if (name == "oracle8" || name == "gauss8") {
    ScenarioConfig b;
    b.L = 8;
    b.prep = Boundary::APBC;
    b.evo = Boundary::OBC;
    b.dt = "0.1";
    b.t_max = "8";
    b.digits = 64;
    b.engine = name == "oracle8" ? Engine::ED : Engine::Gaussian;
    b.m.entropy = {Region{0, 3, false}};
    b.m.asymmetry = {Region{0, 4, false}};
    b.m.n_alpha = 64;
    b.m.purity_every = 20;
    Grid g;
    g.gamma = {"0", "0.4", "0.8"};
    g.theta = {"pi/12", "pi/6", "pi/3"};
    s.points = expand_grid(b, g);
    s.pairs = {{"pi/6", "pi/3"}};
  } else {
    throw ConfigError("unknown preset '" + name + "'");
  }
  for (auto& c : s.points) c.validate();
  return s;
}

}  // namespace nhq
