// Command-line front end: prepare, run, sweep, export, verify.

#include "nhq/experiments.hpp"

#include <CLI11.hpp>

#include <iostream>

using namespace nhq;

namespace {

enum Exit { kOk = 0, kConfig = 2, kNumerical = 3, kPartial = 4 };

struct Common {
  std::string config, preset, out = "out";
  int digits = 0, threads = 1;
  std::string dt;
  bool resume = false;
};

void add_common(CLI::App* app, Common& c, bool with_out) {
  app->add_option("--config", c.config, "scenario or sweep JSON file");
  app->add_option("--preset", c.preset, "named preset")->check(CLI::IsMember(preset_names()));
  app->add_option("--digits", c.digits, "working precision in decimal digits");
  app->add_option("--dt", c.dt, "time step");
  if (with_out) {
    app->add_option("--out", c.out, "output directory");
    app->add_option("--threads", c.threads, "worker threads for sweeps");
    app->add_flag("--resume", c.resume, "skip points already completed with the same config hash");
  }
}

/// A config file holding "points", "grid" or "base" is a sweep; anything
/// else is a single scenario.
SweepConfig load_sweep(const Common& c) {
  if (c.config.empty() == c.preset.empty()) throw ConfigError("give exactly one of --config or --preset");
  SweepConfig s;
  if (!c.preset.empty()) {
    s = preset(c.preset);
  } else {
    Json j;
    try {
      j = Json::parse(read_file(c.config));
    } catch (const Json::exception& e) {
      throw ConfigError(std::string("cannot parse ") + c.config + ": " + e.what());
    } catch (const OutputError& e) {
      throw ConfigError(e.what());
    }
    if (j.is_object() && (j.contains("points") || j.contains("grid") || j.contains("base"))) {
      s = sweep_from_json(j);
    } else {
      s.points.push_back(scenario_from_json(j));
      s.name = s.points.front().name;
    }
  }
  for (auto& p : s.points) {
    if (c.digits) p.digits = c.digits;
    if (!c.dt.empty()) p.dt = c.dt;
    p.validate();
  }
  return s;
}

void print_table(const Table& t) {
  for (std::size_t k = 0; k < t.columns.size(); ++k) std::cout << (k ? "  " : "") << t.columns[k];
  std::cout << "\n";
  for (const auto& r : t.rows) {
    for (std::size_t k = 0; k < r.size(); ++k) std::cout << (k ? "  " : "") << r[k];
    std::cout << "\n";
  }
}

int cmd_prepare(const Common& c) {
  auto s = load_sweep(c);
  for (const auto& p : s.points) {
    auto ctx = p.precision();
    PrecisionScope scope(ctx);
    Mp theta = parse_angle<Mp>(p.theta), J(p.J), gamma(p.gamma);
    auto ip = initial_params(theta, J);
    EvolutionParams<Mp> ep(J, gamma);
    std::cout << p.name << "\n"
              << "  L=" << p.L << " prep=" << to_string(p.prep) << " evo=" << to_string(p.evo)
              << " pattern=" << to_string(p.pattern) << " engine=" << to_string(p.engine) << "\n"
              << "  theta=" << p.theta << " = " << format_number(theta, 20) << "\n"
              << "  Delta=" << format_number(ip.delta, 20) << " mu=" << format_number(ip.mu, 20) << "\n"
              << "  t_L=" << format_number(ep.t_left(), 20) << " t_R=" << format_number(ep.t_right(), 20) << "\n"
              << "  v_max=" << format_number(max_group_velocity(ep), 20)
              << " front_speed=" << format_number(front_speed(ep), 20)
              << " tau1=" << format_number(Mp(p.L) / front_speed(ep), 20) << "\n"
              << "  dt=" << p.dt << " t_max=" << p.t_max << " steps=" << p.n_steps() << " digits=" << ctx.digits
              << " margin=" << ctx.safety_margin << "\n"
              << "  hash=" << config_hash(p) << "\n";
  }
  return kOk;
}

int cmd_run(const Common& c) {
  auto s = load_sweep(c);
  SweepOptions opt;
  opt.out = c.out;
  opt.threads = c.threads;
  opt.resume = c.resume;
  opt.log = [](const std::string& m) { std::cerr << m << "\n"; };
  auto res = run_sweep(s, opt);
  print_table(res.summary);
  if (!res.mpemba.rows.empty()) {
    std::cout << "\n";
    print_table(res.mpemba);
  }
  for (const auto& r : res.records)
    if (!r.ok())
      std::cerr << r.config.name << ": " << r.manifest.message
                << (r.manifest.failure_time ? " (t=" + *r.manifest.failure_time + ")" : "") << "\n";
  if (res.failures == 0) return kOk;
  if (s.points.size() == 1) return kNumerical;
  return kPartial;
}

int cmd_export(const std::string& in, const std::vector<std::string>& formats, const std::string& out) {
  auto rec = load_record(in);
  export_record(rec, out.empty() ? fs::path(in) : fs::path(out), formats);
  return kOk;
}

int cmd_verify(int digits) {
  auto ed = preset("oracle8"), ga = preset("gauss8");
  for (auto* s : {&ed, &ga})
    for (auto& p : s->points)
      if (digits) p.digits = digits;
  SweepOptions opt;
  opt.log = [](const std::string& m) { std::cerr << m << "\n"; };
  auto re = run_sweep(ed, opt);
  auto rg = run_sweep(ga, opt);
  bool ok = re.failures == 0 && rg.failures == 0;
  for (std::size_t i = 0; i < re.records.size(); ++i) {
    for (const auto& d : compare_records(re.records[i], rg.records[i])) {
      double tol = d.quantity.rfind("asymmetry", 0) == 0 ? 1e-6 : 1e-8;
      bool pass = d.max_abs < tol;
      ok = ok && pass;
      std::cout << (pass ? "PASS " : "FAIL ") << re.records[i].config.name << " " << d.quantity
                << " max|diff|=" << format_double(d.max_abs) << " (" << d.compared << " values)\n";
    }
  }
  return ok ? kOk : kNumerical;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Non-Hermitian quench dynamics of U(1)-breaking Gaussian states"};
  app.require_subcommand(1);
  Common c;
  auto* prepare = app.add_subcommand("prepare", "validate a config and print derived parameters");
  add_common(prepare, c, false);
  auto* run = app.add_subcommand("run", "run a scenario or preset");
  add_common(run, c, true);
  auto* sweep = app.add_subcommand("sweep", "run a sweep config or preset");
  add_common(sweep, c, true);
  auto* exp = app.add_subcommand("export", "re-export a stored run");
  std::string in, out_dir;
  std::vector<std::string> formats{"csv", "json", "svg"};
  exp->add_option("--in", in, "run directory")->required();
  exp->add_option("--format", formats, "csv, json, svg")->check(CLI::IsMember({"csv", "json", "svg"}));
  exp->add_option("--out", out_dir, "destination directory (default: the run directory)");
  auto* verify = app.add_subcommand("verify", "Gaussian engine against exact diagonalization at L = 8");
  verify->add_option("--digits", c.digits, "working precision");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? kOk : kConfig;
  }
  try {
    if (*prepare) return cmd_prepare(c);
    if (*run || *sweep) return cmd_run(c);
    if (*exp) return cmd_export(in, formats, out_dir);
    if (*verify) return cmd_verify(c.digits);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfig;
  } catch (const std::invalid_argument& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfig;
  } catch (const OutputError& e) {
    std::cerr << "output error: " << e.what() << "\n";
    return kConfig;
  } catch (const NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << "\n";
    return kNumerical;
  } catch (const Json::exception& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kConfig;
  }
  return kOk;
}
