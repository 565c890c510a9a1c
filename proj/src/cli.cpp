#include "mesa/cli.hpp"

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <future>
#include <sstream>
#include <thread>

#include "CLI11.hpp"
#include "mesa/output.hpp"

namespace mesa {

namespace {

ScenarioConfig load_config(const std::string& config_path,
                           const std::string& preset) {
  if (!preset.empty()) return preset_scenario(preset);
  if (config_path.empty())
    throw ConfigError("either --config or --preset is required");
  std::string text;
  try {
    text = read_text_file(config_path);
  } catch (const SolverError& e) {
    throw ConfigError(e.what());
  }
  return scenario_from_json_text(text);
}

int thread_budget() {
  if (const char* env = std::getenv("MESA_THREADS")) {
    int v = std::atoi(env);
    if (v > 0) return v;
  }
  unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

DiagnosticsReport prefixed(const DiagnosticsReport& rep, const std::string& tag) {
  DiagnosticsReport out;
  for (auto c : rep.checks()) {
    c.name = tag + c.name;
    out.add(std::move(c));
  }
  return out;
}

struct TimedRun {
  RunArtifacts artifacts;
  double wall_seconds;
};

TimedRun timed_execute(const ScenarioConfig& cfg) {
  auto start = std::chrono::steady_clock::now();
  TimedRun r{execute_scenario(cfg), 0.0};
  r.wall_seconds = std::chrono::duration<double>(
                       std::chrono::steady_clock::now() - start)
                       .count();
  return r;
}

int cmd_run(const std::string& config_path, const std::string& preset,
            const std::string& out_dir, bool strict) {
  auto cfg = load_config(config_path, preset);
  auto run = timed_execute(cfg);
  if (!out_dir.empty()) write_run_outputs(run.artifacts, out_dir, run.wall_seconds);
  std::fputs(run.artifacts.diagnostics.to_text().c_str(), stdout);
  if (strict && !run.artifacts.diagnostics.all_pass()) return 4;
  return 0;
}

std::vector<double> parse_m_list(const std::string& text) {
  std::vector<double> ms;
  std::stringstream ss(text);
  std::string cell;
  while (std::getline(ss, cell, ',')) {
    try {
      std::size_t used = 0;
      double v = std::stod(cell, &used);
      if (used != cell.size() || !(v > 1.0)) throw std::invalid_argument(cell);
      ms.push_back(v);
    } catch (const std::exception&) {
      throw ConfigError("bad m list entry '" + cell + "'");
    }
  }
  if (ms.empty()) throw ConfigError("empty m list");
  return ms;
}

int cmd_sweep(const std::string& config_path, const std::string& preset,
              const std::string& m_list, const std::string& out_dir,
              bool strict) {
  auto base = load_config(config_path, preset);
  auto ms = parse_m_list(m_list);

  std::vector<ScenarioConfig> configs;
  for (double m : ms) {
    ScenarioConfig c = base;
    c.solver = "pme";
    c.m = m;
    c.name = base.name + "-m" + std::to_string(static_cast<long>(m));
    configs.push_back(std::move(c));
  }
  ScenarioConfig limit_cfg = base;
  limit_cfg.solver = "limit";
  limit_cfg.name = base.name + "-limit";
  configs.push_back(std::move(limit_cfg));

  const int budget = thread_budget();
  std::vector<TimedRun> runs(configs.size());
  std::size_t next = 0;
  while (next < configs.size()) {
    std::size_t batch = std::min<std::size_t>(budget, configs.size() - next);
    std::vector<std::future<TimedRun>> futs;
    for (std::size_t k = 0; k < batch; ++k)
      futs.push_back(std::async(std::launch::async, timed_execute,
                                configs[next + k]));
    for (std::size_t k = 0; k < batch; ++k) runs[next + k] = futs[k].get();
    next += batch;
  }

  DiagnosticsReport all;
  std::vector<const PMERunResult*> sweep;
  for (std::size_t k = 0; k < runs.size(); ++k) {
    std::string label = configs[k].name + ".";
    all.merge(prefixed(runs[k].artifacts.diagnostics, label));
    if (!out_dir.empty())
      write_run_outputs(runs[k].artifacts, out_dir + "/runs/" + configs[k].name,
                        runs[k].wall_seconds);
    if (runs[k].artifacts.pme) sweep.push_back(&*runs[k].artifacts.pme);
  }
  const auto& limit_run = *runs.back().artifacts.limit;
  auto table = convergence_table(sweep, limit_run);
  all.add(convergence_check(table));
  std::vector<const PMERunResult*> msweep = sweep;
  auto bounds = bounds_report(msweep);
  all.add({"sweep_pressure_bound", bounds.pressure_bound.pass,
           bounds.pressure_bound.measured, bounds.pressure_bound.threshold,
           bounds.pressure_bound.context});
  all.add(tv_report(msweep, 5.0 * limit_run.grid->h()));

  if (!out_dir.empty()) {
    write_text_file(out_dir + "/convergence.csv", table.to_csv());
    write_text_file(out_dir + "/diagnostics.json", all.to_json());
    write_text_file(out_dir + "/diagnostics.txt", all.to_text());
  }
  std::fputs(all.to_text().c_str(), stdout);
  std::fputs(table.to_csv().c_str(), stdout);
  if (strict && !all.all_pass()) return 4;
  return 0;
}

int cmd_oracle_compare(const std::string& config_path, const std::string& preset,
                       const std::string& out_dir) {
  auto cfg = load_config(config_path, preset);
  cfg.solver = "limit";
  auto run = timed_execute(cfg);
  const auto& limit_run = *run.artifacts.limit;

  auto lambda = cfg.make_source();
  auto grid = limit_run.grid;
  ScenarioConfig ext_cfg = cfg;
  auto rho0_fn = [ext_cfg](double r) {
    if (ext_cfg.rho0.preset == "block_band" && r > ext_cfg.rho0.band_from &&
        r <= ext_cfg.rho0.band_to)
      return ext_cfg.rho0.external;
    return 0.0;
  };
  auto traj = integrate_radial(cfg.inner + cfg.rho0.radius, lambda, rho0_fn,
                               cfg.f_value, cfg.dim, cfg.inner, cfg.t_end,
                               cfg.oracle_dt);

  double max_gap = 0.0;
  std::ostringstream os;
  os << "t,R_oracle,front_numeric,gap\n";
  for (const auto& fr : limit_run.frames) {
    double numeric = front_position(fr.p, limit_run.p_tol);
    double oracle = traj.position(fr.t);
    double gap = std::abs(numeric - oracle);
    max_gap = std::max(max_gap, gap);
    char line[160];
    std::snprintf(line, sizeof(line), "%.17g,%.17g,%.17g,%.17g\n", fr.t, oracle,
                  numeric, gap);
    os << line;
  }
  bool ok = max_gap <= 2.0 * grid->h();
  std::printf("oracle-compare %s: max front gap %.5g (allowance %.5g) [%s]\n",
              cfg.name.c_str(), max_gap, 2.0 * grid->h(), ok ? "PASS" : "FAIL");
  if (!out_dir.empty()) {
    write_run_outputs(run.artifacts, out_dir, run.wall_seconds);
    write_text_file(out_dir + "/oracle.csv", os.str());
  }
  return ok ? 0 : 4;
}

int cmd_verify(const std::string& out_dir) {
  auto rep = verify_output_dir(out_dir);
  std::fputs(rep.to_text().c_str(), stdout);
  return rep.all_pass() ? 0 : 4;
}

}  // namespace

int cli_main(int argc, const char* const* argv) {
  CLI::App app{"mesa: porous-medium / Hele-Shaw limit simulator"};
  app.require_subcommand(1);

  std::string config_path, preset, out_dir, m_list;
  bool strict = false;

  auto add_scenario_opts = [&](CLI::App* cmd) {
    cmd->add_option("--config", config_path, "scenario config JSON (or a manifest)");
    cmd->add_option("--preset", preset, "named preset scenario");
  };

  auto* run = app.add_subcommand("run", "run one scenario");
  add_scenario_opts(run);
  run->add_option("--out", out_dir, "output directory");
  run->add_flag("--strict", strict, "exit 4 when a diagnostic fails");

  auto* sweep = app.add_subcommand("sweep-m", "finite-m sweep plus the limit run");
  add_scenario_opts(sweep);
  sweep->add_option("--m", m_list, "comma separated m values")->required();
  sweep->add_option("--out", out_dir, "output directory");
  sweep->add_flag("--strict", strict, "exit 4 when a diagnostic fails");

  auto* oracle = app.add_subcommand("oracle-compare",
                                    "limit solver vs the radial front oracle");
  add_scenario_opts(oracle);
  oracle->add_option("--out", out_dir, "output directory");

  auto* verify = app.add_subcommand("verify", "re-check an output directory");
  verify->add_option("--out", out_dir, "output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (run->parsed()) return cmd_run(config_path, preset, out_dir, strict);
    if (sweep->parsed()) return cmd_sweep(config_path, preset, m_list, out_dir, strict);
    if (oracle->parsed()) return cmd_oracle_compare(config_path, preset, out_dir);
    if (verify->parsed()) return cmd_verify(out_dir);
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const SolverError& e) {
    std::fprintf(stderr, "solver error: %s\n", e.what());
    return 3;
  }
  return 0;
}

}  // namespace mesa
