#include "test_util.hpp"

#include <fstream>
#include <sstream>

using namespace nhq;
using namespace nhq::testing;

namespace {

ScenarioConfig small(Engine e = Engine::Gaussian) {
  ScenarioConfig c;
  c.name = "small";
  c.L = 6;
  c.theta = "pi/6";
  c.gamma = "0.6";
  c.dt = "0.5";
  c.t_max = "2";
  c.digits = 32;
  c.engine = e;
  c.m.entropy = {Region{0, 3, false}};
  c.m.asymmetry = {Region{0, 2, false}};
  c.m.n_alpha = 16;
  c.m.purity_every = 2;
  return c;
}

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& tag) {
    path = fs::temp_directory_path() / ("nhq_test_" + tag + "_" + std::to_string(::getpid()));
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

bool same_tables(const RunRecord& a, const RunRecord& b) {
  if (a.tables.size() != b.tables.size()) return false;
  for (std::size_t i = 0; i < a.tables.size(); ++i)
    if (a.tables[i].name != b.tables[i].name || a.tables[i].columns != b.tables[i].columns ||
        a.tables[i].rows != b.tables[i].rows)
      return false;
  return true;
}

}  // namespace

TEST(Config, JsonRoundTripKeepsHash) {
  auto c = small();
  auto back = scenario_from_json(to_json(c));
  EXPECT_EQ(to_json(back), to_json(c));
  EXPECT_EQ(config_hash(back), config_hash(c));
  EXPECT_EQ(config_hash(c).size(), 16u);
  auto g = c;
  g.gamma = "0.61";
  EXPECT_NE(config_hash(g), config_hash(c));
}

TEST(Config, NumbersMayBeGivenAsJsonNumbers) {
  auto c = scenario_from_json(Json::parse(R"({"lattice": {"L": 8}, "evolution": {"gamma": 0.8, "dt": 0.5, "t_max": 4}})"));
  EXPECT_EQ(c.gamma, "0.8");
  EXPECT_EQ(c.dt, "0.5");
  EXPECT_EQ(c.n_steps(), 8);
}

TEST(Config, InvalidConfigsAreRejected) {
  auto bad = [](const char* text) { return scenario_from_json(Json::parse(text)); };
  EXPECT_THROW(bad(R"({"lattice": {"L": 8, "size": 3}})"), ConfigError);
  EXPECT_THROW(bad(R"({"colour": 1})"), ConfigError);
  EXPECT_THROW(bad(R"({"lattice": {"L": 7}})"), ConfigError);
  EXPECT_THROW(bad(R"({"lattice": {"L": 8}, "evolution": {"dt": "0.3", "t_max": "1"}})"), ConfigError);
  EXPECT_THROW(bad(R"({"lattice": {"L": 14}, "engine": "ed"})"), ConfigError);
  EXPECT_THROW(bad(R"({"lattice": {"L": 8}, "initial": {"theta": "pi/0"}})"), ConfigError);
  EXPECT_THROW(bad(R"({"lattice": {"L": 8}, "initial": {"theta": "tau/3"}})"), ConfigError);
  EXPECT_THROW(bad(R"({"lattice": {"L": 8}, "evolution": {"gamma": "-1"}})"), ConfigError);
  EXPECT_THROW(bad(R"({"lattice": {"L": 8}, "output": {"formats": ["json"]}})"), ConfigError);
  EXPECT_THROW(bad(R"({"lattice": {"L": 8}, "measurements": {"n_alpha": 17}})"), ConfigError);
  EXPECT_THROW(bad(R"({"lattice": {"L": 8}, "measurements": {"entropy": [{"start": 4, "length": 6}]}})"), ConfigError);
  EXPECT_THROW(bad(R"({"lattice": {"L": 8}, "precision": {"digits": 8}})"), ConfigError);
  EXPECT_THROW(bad(R"({"lattice": {"L": 8}, "engine": "dmrg"})"), ConfigError);
  EXPECT_THROW(bad(R"({"lattice": {"L": "eight"}})"), ConfigError);
}

TEST(Config, Sha256KnownVector) {
  EXPECT_EQ(sha256_hex("abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
  EXPECT_EQ(sha256_hex(""), "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
}

TEST(Config, SweepGridAndPairs) {
  auto s = sweep_from_json(Json::parse(R"({
    "name": "g",
    "base": {"lattice": {"L": 8}, "evolution": {"dt": "0.5", "t_max": "1"}},
    "grid": {"theta": ["pi/6", "pi/3"], "gamma": [0, "0.4"]},
    "points": [{"initial": {"pattern": "AFM"}}],
    "pairs": [["pi/6", "pi/3"]]})"));
  ASSERT_EQ(s.points.size(), 5u);
  EXPECT_EQ(s.points[0].name, "L8_g0_thpi_6");
  EXPECT_EQ(s.points[3].gamma, "0.4");
  EXPECT_EQ(s.points[3].theta, "pi/3");
  EXPECT_EQ(s.points[4].pattern, Pattern::AFM);
  EXPECT_EQ(s.points[4].name, "L8_g0.8_thpi_6_afm");
  ASSERT_EQ(s.pairs.size(), 1u);
  EXPECT_EQ(s.pairs[0].b, "pi/3");
  EXPECT_THROW(sweep_from_json(Json::parse(R"({"name": "empty"})")), ConfigError);
  EXPECT_THROW(sweep_from_json(Json::parse(R"({"grid": {"theta": ["0"]}, "pairs": [["0"]]})")), ConfigError);
}

TEST(Config, PresetsValidate) {
  for (const auto& n : preset_names()) {
    auto s = preset(n);
    EXPECT_FALSE(s.points.empty()) << n;
    std::vector<std::string> names;
    for (const auto& p : s.points) names.push_back(p.name);
    std::sort(names.begin(), names.end());
    EXPECT_EQ(std::adjacent_find(names.begin(), names.end()), names.end()) << n;
  }
  EXPECT_THROW(preset("fig9"), ConfigError);
}

TEST(Config, ShippedConfigsParse) {
  const fs::path dir = fs::path(NHQ_SOURCE_DIR) / "configs";
  ASSERT_TRUE(fs::exists(dir));
  int n = 0;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.path().extension() != ".json") continue;
    auto j = Json::parse(read_file(e.path()));
    if (j.contains("grid") || j.contains("points")) EXPECT_NO_THROW(sweep_from_json(j)) << e.path();
    else EXPECT_NO_THROW(scenario_from_json(j)) << e.path();
    ++n;
  }
  EXPECT_GT(n, 0);
}

TEST(Records, CsvRoundTrip) {
  Table t{"x", {"t", "site", "n"}, {{"0", "1", "0.5"}, {"0.25", "2", "-1e-30"}}};
  std::string text = csv_text(t, {{"L", "8"}, {"theta", "pi/6"}});
  EXPECT_EQ(text.rfind("# L=8\n# theta=pi/6\nt,site,n\n", 0), 0u);
  std::istringstream in(text);
  auto back = parse_csv("x", in);
  EXPECT_EQ(back.columns, t.columns);
  EXPECT_EQ(back.rows, t.rows);
  EXPECT_EQ(back.doubles("t"), (std::vector<double>{0, 0.25}));
  EXPECT_THROW(back.column("missing"), std::exception);
}

TEST(Runs, ZeroDurationGivesOneRow) {
  auto c = small();
  c.t_max = "0";
  auto r = run_scenario(c);
  ASSERT_TRUE(r.ok()) << r.manifest.message;
  ASSERT_NE(r.table("total"), nullptr);
  EXPECT_EQ(r.table("total")->rows.size(), 1u);
  EXPECT_EQ(r.table("density")->rows.size(), 6u);
  EXPECT_EQ(r.manifest.steps, 0);
}

TEST(Runs, TablesHaveExpectedShape) {
  auto r = run_scenario(small());
  ASSERT_TRUE(r.ok()) << r.manifest.message;
  EXPECT_EQ(r.manifest.steps, 4);
  EXPECT_EQ(r.table("total")->rows.size(), 5u);
  EXPECT_EQ(r.table("density")->rows.size(), 30u);
  EXPECT_EQ(r.table("current")->rows.size(), 25u);
  EXPECT_NE(r.table("entropy"), nullptr);
  EXPECT_NE(r.table("asymmetry"), nullptr);
  EXPECT_NE(r.table("purity"), nullptr);
  EXPECT_EQ(r.tables.back().name, "features");
  auto f = r.features();
  EXPECT_TRUE(f.count("N_total_final"));
  EXPECT_TRUE(f.count("ds2_initial"));
}

TEST(Runs, RerunIsDeterministic) {
  auto a = run_scenario(small()), b = run_scenario(small());
  EXPECT_TRUE(same_tables(a, b));
  auto ea = echo_lines(a.config);
  for (std::size_t i = 0; i < a.tables.size(); ++i) EXPECT_EQ(csv_text(a.tables[i], ea), csv_text(b.tables[i], ea));
}

TEST(Runs, NumericalFailureIsRecorded) {
  ScenarioConfig c;
  c.L = 8;
  c.digits = 16;
  c.safety_margin = 2;
  c.gamma = "50";
  c.dt = "1";
  c.t_max = "20";
  c.m.inflow = c.m.current = false;
  auto r = run_scenario(c);
  EXPECT_EQ(r.manifest.status, "failed");
  ASSERT_TRUE(r.manifest.failure_time.has_value());
  EXPECT_EQ(*r.manifest.failure_time, "1");
  EXPECT_FALSE(r.manifest.message.empty());
  EXPECT_EQ(r.table("total")->rows.size(), 1u);
}

TEST(Runs, WriteAndLoadRecord) {
  TempDir tmp("record");
  auto r = run_scenario(small());
  write_record(r, tmp.path / "run");
  EXPECT_TRUE(fs::exists(tmp.path / "run" / "record.json"));
  auto back = load_record(tmp.path / "run");
  EXPECT_EQ(back.manifest.config_hash, r.manifest.config_hash);
  EXPECT_EQ(back.manifest.status, "ok");
  EXPECT_TRUE(same_tables(back, r));
  EXPECT_EQ(back.series.total, r.series.total);
  auto text = read_file(tmp.path / "run" / "density.csv");
  EXPECT_NE(text.find("# gamma=0.6\n"), std::string::npos);
  EXPECT_NE(text.find("# code_version="), std::string::npos);
}

TEST(Runs, ExportWritesRequestedFormats) {
  TempDir tmp("export");
  auto r = run_scenario(small());
  export_record(r, tmp.path, {"csv", "svg"});
  EXPECT_TRUE(fs::exists(tmp.path / "density.svg"));
  EXPECT_TRUE(fs::exists(tmp.path / "entropy.svg"));
  EXPECT_FALSE(fs::exists(tmp.path / "record.json"));
  EXPECT_THROW(export_record(r, tmp.path, {"xlsx"}), OutputError);
}

TEST(Sweeps, SinglePointMatchesDirectRun) {
  SweepConfig s;
  s.name = "one";
  s.points = {small()};
  auto res = run_sweep(s);
  ASSERT_EQ(res.records.size(), 1u);
  EXPECT_EQ(res.failures, 0);
  EXPECT_TRUE(same_tables(res.records[0], run_scenario(small())));
  ASSERT_EQ(res.summary.rows.size(), 1u);
  EXPECT_EQ(res.summary.rows[0][res.summary.column("status")], "ok");
}

TEST(Sweeps, ResumeSkipsMatchingPointsOnly) {
  TempDir tmp("resume");
  SweepConfig s;
  s.name = "res";
  auto a = small(), b = small();
  b.theta = "pi/3";
  a.name = "a";
  b.name = "b";
  s.points = {a, b};
  SweepOptions opt;
  opt.out = tmp.path;
  auto first = run_sweep(s, opt);
  EXPECT_EQ(first.failures, 0);
  EXPECT_TRUE(fs::exists(tmp.path / "res" / "summary.csv"));
  opt.resume = true;
  s.points[1].gamma = "0.7";
  auto second = run_sweep(s, opt);
  EXPECT_TRUE(second.resumed[0]);
  EXPECT_FALSE(second.resumed[1]);
  EXPECT_TRUE(same_tables(second.records[0], first.records[0]));
  EXPECT_EQ(second.records[1].config.gamma, "0.7");
}

TEST(Sweeps, DuplicateNamesRejected) {
  SweepConfig s;
  s.points = {small(), small()};
  EXPECT_THROW(run_sweep(s), ConfigError);
}

TEST(Sweeps, MpembaTableFindsCrossing) {
  RunRecord a, b;
  a.config = small();
  b.config = small();
  b.config.theta = "pi/3";
  a.manifest.status = b.manifest.status = "ok";
  a.series.times = b.series.times = {0, 1, 2, 3};
  const auto lab = a.config.m.asymmetry[0].label();
  a.series.ds2[lab] = {0.2, 0.15, 0.1, 0.05};
  b.series.ds2[lab] = {0.5, 0.2, 0.05, 0.01};
  auto t = mpemba_table({a, b}, {{"pi/6", "pi/3"}});
  ASSERT_EQ(t.rows.size(), 1u);
  EXPECT_EQ(t.rows[0][t.column("crossing_time")], "1.5");
  EXPECT_EQ(t.rows[0][t.column("n_crossings")], "1");
}

TEST(Oracle, ExactAndGaussianRecordsAgree) {
  auto g = run_scenario(small(Engine::Gaussian));
  auto e = run_scenario(small(Engine::ED));
  ASSERT_TRUE(g.ok() && e.ok());
  auto dev = compare_records(g, e);
  EXPECT_GE(dev.size(), 6u);
  for (const auto& d : dev) {
    EXPECT_GT(d.compared, 0u) << d.quantity;
    EXPECT_LT(d.max_abs, 1e-18) << d.quantity;
  }
}
