#include <filesystem>

#include "doctest.h"
#include "mesa/cli.hpp"
#include "mesa/output.hpp"

using namespace mesa;
namespace fs = std::filesystem;

namespace {

int run_cli(std::initializer_list<const char*> args) {
  std::vector<const char*> argv{"mesa"};
  argv.insert(argv.end(), args.begin(), args.end());
  return cli_main(static_cast<int>(argv.size()), argv.data());
}

std::string fresh_dir(const std::string& tag) {
  auto dir = (fs::temp_directory_path() / ("mesa_test_" + tag)).string();
  fs::remove_all(dir);
  return dir;
}

ScenarioConfig small_limit_scenario() {
  ScenarioConfig c = preset_scenario("radial-hs");
  c.n_cells = 110;
  c.t_end = 0.3;
  c.output_times.clear();
  c.frame_count = 6;
  c.limit_dt = 5e-4;
  return c;
}

}  // namespace

TEST_CASE("scenario json round-trips") {
  auto c = preset_scenario("stepped");
  auto text = scenario_to_json_text(c);
  auto back = scenario_from_json_text(text);
  CHECK(back.solver == c.solver);
  CHECK(back.n_cells == c.n_cells);
  CHECK(back.m == c.m);
  CHECK(back.lambda_stages == c.lambda_stages);
  CHECK(back.output_times == c.output_times);
  CHECK(back.rho0.radius == c.rho0.radius);
  CHECK(scenario_to_json_text(back) == text);
}

TEST_CASE("all presets construct valid configs") {
  for (const auto& name : preset_names()) CHECK_NOTHROW(preset_scenario(name));
  CHECK_THROWS_AS(preset_scenario("missing"), ConfigError);
}

TEST_CASE("stepped preset pins the stepped coefficient and resolution") {
  auto c = preset_scenario("stepped");
  CHECK(c.m == 40.0);
  CHECK(c.f_value == 1.0);
  CHECK((c.outer - c.inner) / c.n_cells <= 1.0 / 200.0 + 1e-15);
  REQUIRE(c.lambda_stages.size() == 3);
  CHECK(c.lambda_stages[1] == std::pair<double, double>{0.75, -5.0});
  CHECK(c.lambda_stages[2] == std::pair<double, double>{1.0, -1.0});
}

TEST_CASE("run writes a complete output directory and verify accepts it") {
  auto dir = fresh_dir("run");
  auto cfg = small_limit_scenario();
  auto cfg_path = dir + "_config.json";
  write_text_file(cfg_path, scenario_to_json_text(cfg));

  CHECK(run_cli({"run", "--config", cfg_path.c_str(), "--out", dir.c_str()}) == 0);
  for (const char* f : {"manifest.json", "grid.json", "ledger.csv",
                        "diagnostics.json", "diagnostics.txt", "plot.gp"})
    CHECK(fs::exists(fs::path(dir) / f));
  CHECK(fs::exists(fs::path(dir) / "frames" / "index.csv"));
  CHECK(run_cli({"verify", "--out", dir.c_str()}) == 0);
  // verify twice: pure function of the files
  CHECK(run_cli({"verify", "--out", dir.c_str()}) == 0);
}

TEST_CASE("manifest re-runs are bit-identical") {
  auto dir_a = fresh_dir("det_a");
  auto dir_b = fresh_dir("det_b");
  auto cfg = small_limit_scenario();
  auto cfg_path = dir_a + "_config.json";
  write_text_file(cfg_path, scenario_to_json_text(cfg));

  REQUIRE(run_cli({"run", "--config", cfg_path.c_str(), "--out", dir_a.c_str()}) == 0);
  // re-run straight from the manifest echo
  auto manifest_path = (fs::path(dir_a) / "manifest.json").string();
  REQUIRE(run_cli({"run", "--config", manifest_path.c_str(), "--out",
                   dir_b.c_str()}) == 0);
  CHECK(outputs_bit_identical(dir_a, dir_b));
}

TEST_CASE("cli error codes") {
  CHECK(run_cli({"run", "--config", "/no/such/file.json"}) == 2);
  CHECK(run_cli({"run", "--preset", "missing"}) == 2);
  CHECK(run_cli({"sweep-m", "--preset", "radial-hs", "--m", "10,abc"}) == 2);
  CHECK(run_cli({"run"}) == 2);

  auto dir = fresh_dir("corrupt");
  auto cfg = small_limit_scenario();
  auto cfg_path = dir + "_config.json";
  write_text_file(cfg_path, scenario_to_json_text(cfg));
  REQUIRE(run_cli({"run", "--config", cfg_path.c_str(), "--out", dir.c_str()}) == 0);
  auto frame = (fs::path(dir) / "frames" / "frame_0001.csv").string();
  write_text_file(frame, "x,rho,p,active\n0.0,garbage,0,1\n");
  CHECK(run_cli({"verify", "--out", dir.c_str()}) == 3);
}

TEST_CASE("oracle-compare agrees on the classical preset") {
  auto cfg = small_limit_scenario();
  auto cfg_path = fresh_dir("oc") + "_config.json";
  write_text_file(cfg_path, scenario_to_json_text(cfg));
  CHECK(run_cli({"oracle-compare", "--config", cfg_path.c_str()}) == 0);
}
