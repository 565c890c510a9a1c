#include <cmath>

#include "doctest.h"
#include "mesa/diagnostics.hpp"

using namespace mesa;

namespace {

Field ramp_block(const GridPtr& g, double radius, double f, double m) {
  Field p0(g, 0.0);
  for (std::size_t i = 0; i < p0.size(); ++i) {
    double x = g->node(i) - g->inner();
    p0[i] = std::max(0.0, f * (1.0 - x / radius));
  }
  Field rho(g, 0.0);
  for (std::size_t i = 0; i < p0.size(); ++i) rho[i] = std::pow(p0[i], 1.0 / m);
  return rho;
}

Field char_block(const GridPtr& g, double radius) {
  Field rho(g, 0.0);
  for (std::size_t i = 0; i < rho.size(); ++i)
    if (g->node(i) - g->inner() < radius) rho[i] = 1.0;
  return rho;
}

}  // namespace

TEST_CASE("report rejects duplicate names and renders both formats") {
  DiagnosticsReport rep;
  rep.add({"alpha", true, 1.0, 2.0, "ctx"});
  CHECK_THROWS_AS(rep.add({"alpha", false, 0.0, 0.0, ""}), std::invalid_argument);
  rep.add({"beta", false, 3.0, 1.0, ""});
  CHECK_FALSE(rep.all_pass());
  CHECK(rep.to_text().find("[FAIL] beta") != std::string::npos);
  CHECK(rep.to_json().find("\"measured\"") != std::string::npos);
}

TEST_CASE("closed box with lambda = 0 conserves mass to round-off") {
  auto g = build_grid(Geometry::cartesian(-2.0, 2.0), 150);
  Field rho0(g, 0.0);
  for (std::size_t i = 0; i < rho0.size(); ++i)
    rho0[i] = std::max(0.0, 0.3 - std::abs(g->node(i)));
  PMEParams params;
  params.m = 3.0;
  params.t_end = 0.3;
  auto lam = SourceCoefficient::constant(0.0, 1.0);
  auto run = run_pme(rho0, params, lam, nullptr, {0.3});
  CHECK(std::abs(run.ledger.back().mass - run.ledger.front().mass) <=
        1e-12 * run.ledger.front().mass);
  CHECK(mass_balance(run, 0.0).pass);
}

TEST_CASE("pure absorption decays mass below the exponential bound") {
  auto g = build_grid(Geometry::cartesian(-2.0, 2.0), 150);
  Field rho0(g, 0.0);
  for (std::size_t i = 0; i < rho0.size(); ++i)
    rho0[i] = std::max(0.0, 0.3 - std::abs(g->node(i)));
  PMEParams params;
  params.m = 3.0;
  params.t_end = 0.5;
  auto lam = SourceCoefficient::constant(-1.0, 1.0);
  auto run = run_pme(rho0, params, lam, nullptr, {0.5});
  double bound = run.ledger.front().mass * std::exp(-0.5 * (1.0 - 1e-6));
  CHECK(run.ledger.back().mass <= bound);
  CHECK(mass_balance(run, 1.0).pass);
}

TEST_CASE("stepped scenario satisfies the Gronwall envelope") {
  auto g = build_grid(Geometry::cartesian(0.0, 2.0), 150);
  PMEParams params;
  params.m = 20.0;
  params.t_end = 0.9;
  SourceCoefficient lam({{0.0, -1.0}, {0.75, -5.0}}, 5.0);
  auto f = BoundaryData::constant(1.0, 5.0);
  auto run = run_pme(ramp_block(g, 0.25, 1.0, params.m), params, lam, &f,
                     {0.3, 0.6, 0.9});
  auto check = mass_balance(run, lam.bound());
  CHECK(check.pass);
}

TEST_CASE("bounds and total variation across a small sweep") {
  auto g = build_grid(Geometry::cartesian(0.0, 2.0), 120);
  auto lam = SourceCoefficient::constant(-1.0, 5.0);
  auto f = BoundaryData::constant(1.0, 5.0);
  std::vector<PMERunResult> runs;
  for (double m : {10.0, 20.0, 40.0}) {
    PMEParams params;
    params.m = m;
    params.t_end = 0.25;
    runs.push_back(
        run_pme(ramp_block(g, 0.25, 1.0, m), params, lam, &f, {0.25}));
  }
  std::vector<const PMERunResult*> sweep{&runs[0], &runs[1], &runs[2]};
  auto rep = bounds_report(sweep);
  CHECK(rep.pressure_bound.pass);
  CHECK(rep.positivity.pass);
  CHECK(rep.support_envelope.pass);
  CHECK(rep.density_ceiling.pass);
  CHECK(tv_report(sweep, 0.05).pass);
}

TEST_CASE("total variation identities") {
  auto g = build_grid(Geometry::cartesian(-2.0, 2.0), 100);
  Field block(g, 0.0);
  for (std::size_t i = 0; i < block.size(); ++i)
    if (std::abs(g->node(i)) < 0.8) block[i] = 1.0;
  CHECK(total_variation(block, 0.0) == doctest::Approx(2.0));

  Field bump(g, 0.0);
  for (std::size_t i = 0; i < bump.size(); ++i)
    bump[i] = std::max(0.0, 0.45 - std::abs(g->node(i)) * 0.3);
  CHECK(total_variation(bump, 0.0) == doctest::Approx(2.0 * 0.45).epsilon(1e-9));
}

TEST_CASE("velocity law holds on the classical scenario") {
  auto g = build_grid(Geometry::cartesian(1.0, 3.0), 100);
  LimitParams params;
  params.dt = 2e-4;
  auto lam = SourceCoefficient::constant(0.0, 1.0);
  auto f = BoundaryData::constant(1.0, 1.0);
  std::vector<double> times;
  for (int k = 1; k <= 10; ++k) times.push_back(0.05 * k);
  auto run = run_limit(char_block(g, 0.5), lam, f, params, times);
  auto rep = velocity_law_check(run);
  CHECK(rep.advancing_frames > 0);
  CHECK(rep.receding_frames == 0);
  CHECK(rep.advancing.pass);
}

TEST_CASE("velocity law sees the receding front with zero gradient") {
  auto g = build_grid(Geometry::cartesian(0.0, 2.5), 125);
  LimitParams params;
  params.dt = 2e-4;
  SourceCoefficient lam({{0.0, -1.0}, {0.75, -5.0}}, 5.0);
  auto f = BoundaryData::constant(1.0, 5.0);
  std::vector<double> times;
  for (int k = 1; k <= 19; ++k) times.push_back(0.05 * k);
  auto run = run_limit(char_block(g, 0.25), lam, f, params, times);
  auto rep = velocity_law_check(run);
  CHECK(rep.receding_frames > 0);
  CHECK(rep.receding.pass);
  CHECK(rep.advancing.pass);
}

TEST_CASE("small m-sweep converges to the limit run") {
  auto g = build_grid(Geometry::cartesian(0.0, 2.0), 100);
  auto lam = SourceCoefficient::constant(-1.0, 5.0);
  auto f = BoundaryData::constant(1.0, 5.0);
  std::vector<double> times;
  for (int k = 1; k <= 8; ++k) times.push_back(0.05 * k);

  std::vector<PMERunResult> runs;
  for (double m : {10.0, 20.0}) {
    PMEParams params;
    params.m = m;
    params.t_end = 0.4;
    runs.push_back(run_pme(ramp_block(g, 0.3, 1.0, m), params, lam, &f, times));
  }
  LimitParams lp;
  lp.dt = 2e-4;
  auto limit_run = run_limit(char_block(g, 0.3), lam, f, lp, times);

  std::vector<const PMERunResult*> sweep{&runs[0], &runs[1]};
  auto table = convergence_table(sweep, limit_run);
  REQUIRE(table.m_values.size() == 2);
  CHECK(table.l1_rho[1] < table.l1_rho[0]);
  CHECK(table.l1_graph[1] < table.l1_graph[0]);
  CHECK(convergence_check(table).pass);
  CHECK(table.to_csv().find("m,l1_rho") == 0);

  auto pair = run_pme_ordered_pair(runs[0].frames.front().rho,
                                   char_block(g, 0.6), runs[0].params, lam, &f, &f);
  CHECK(ordering_check(pair).pass);
  CHECK(ordering_check(limit_run, limit_run, 2.0 * lp.eps_sat).pass);

  // a singleton list emits the table without asserting monotonicity
  std::vector<const PMERunResult*> single{&runs[0]};
  auto single_table = convergence_table(single, limit_run);
  CHECK(convergence_check(single_table).pass);
}
