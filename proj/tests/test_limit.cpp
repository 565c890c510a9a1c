#include <cmath>

#include "doctest.h"
#include "mesa/limit.hpp"

using namespace mesa;

namespace {

Field block_density(const GridPtr& g, double edge, double external = 0.0,
                    double band_to = -1.0) {
  Field rho(g, 0.0);
  for (std::size_t i = 0; i < rho.size(); ++i) {
    double x = g->node(i);
    if (x < edge) rho[i] = 1.0;
    else if (band_to > 0.0 && x <= band_to) rho[i] = external;
  }
  return rho;
}

std::vector<double> linspace_times(double from, double to, int count) {
  std::vector<double> ts;
  for (int i = 0; i < count; ++i)
    ts.push_back(from + (to - from) * (i + 1) / count);
  return ts;
}

}  // namespace

TEST_CASE("saturated_set thresholds") {
  auto g = build_grid(Geometry::cartesian(1.0, 2.0), 10);
  Field ones(g, 1.0);
  Mask m = saturated_set(ones, 1e-6);
  CHECK(std::count(m.begin(), m.end(), 1) == static_cast<long>(m.size()));

  Field half(g, 0.5);
  m = saturated_set(half, 1e-6);
  CHECK(m[0] == 1);  // inner boundary node always included
  CHECK(std::count(m.begin(), m.end(), 1) == 1);

  Field edge(g, 0.5);
  edge[4] = 1.0 - 0.5e-6;
  m = saturated_set(edge, 1e-6);
  CHECK(m[4] == 1);  // threshold is inclusive
}

TEST_CASE("decay sub-step integrates the source exactly") {
  auto g = build_grid(Geometry::cartesian(1.0, 3.0), 100);
  Field rho0 = block_density(g, 1.2, 0.9, 2.6);
  LimitParams params;
  params.dt = 0.01;
  auto lam = SourceCoefficient::constant(-5.0, 5.0);
  auto f = BoundaryData::constant(1.0, 5.0);
  LimitState s;
  s.t = 0.0;
  s.rho = rho0;
  s.sat = saturated_set(rho0, params.eps_sat);
  ObstacleProblem pb;
  pb.grid = g;
  pb.mask = s.sat;
  std::vector<double> lam0;
  lam.values_on(*g, 0.0, lam0);
  pb.source = Field(g, lam0);
  pb.dirichlet_inner = f(0.0);
  s.p = solve_obstacle(pb).p;
  auto out = step_limit(s, lam, f, params);
  // probe a band node away from the active front
  std::size_t probe = g->nearest_node(2.0);
  CHECK(out.rho[probe] == doctest::Approx(0.9 * std::exp(-0.05)).epsilon(1e-10));
  CHECK(out.rho[probe] == doctest::Approx(0.856106).epsilon(1e-5));
}

TEST_CASE("classical Hele-Shaw front follows the separable law") {
  // lambda = 0, f = 1, R0 = 1.5: R(t) = 1 + sqrt(0.25 + 2t)
  auto g = build_grid(Geometry::cartesian(1.0, 3.0), 100);
  LimitParams params;
  params.dt = 2e-4;
  auto lam = SourceCoefficient::constant(0.0, 1.0);
  auto f = BoundaryData::constant(1.0, 1.0);
  auto run =
      run_limit(block_density(g, 1.5), lam, f, params, linspace_times(0.0, 0.5, 10));
  for (const auto& fr : run.frames) {
    double expected = 1.0 + std::sqrt(0.25 + 2.0 * fr.t);
    double measured = front_position(fr.p, run.p_tol);
    CHECK(std::abs(measured - expected) <= 2.0 * g->h());
  }
  CHECK(run.max_graph_residual <= params.eps_sat * 1.01);
  CHECK(run.min_mu >= -1e-9);
  CHECK(run.max_mass_identity_error <= 1e-10);
}

TEST_CASE("stage drop forces instantaneous recession of the active set") {
  // lambda: -1 then -5 at t = 0.75; smooth-fit radius drops to sqrt(2/5)
  auto g = build_grid(Geometry::cartesian(0.0, 2.5), 125);
  LimitParams params;
  params.dt = 2e-4;
  SourceCoefficient lam({{0.0, -1.0}, {0.75, -5.0}, {1.0, -1.0}}, 5.0);
  auto f = BoundaryData::constant(1.0, 5.0);
  auto run = run_limit(block_density(g, 0.25), lam, f, params,
                       {0.3, 0.5, 0.7, 0.74, 0.76, 0.8, 0.9, 1.05, 1.2});

  auto frame_at = [&](double t) -> const LimitFrame& {
    for (const auto& fr : run.frames)
      if (std::abs(fr.t - t) < 1e-12) return fr;
    throw std::runtime_error("missing frame");
  };

  auto active_count = [&](const LimitFrame& fr) {
    int c = 0;
    for (std::size_t i = 0; i < fr.p.size(); ++i)
      if (fr.p[i] > run.p_tol) ++c;
    return c;
  };

  // expanding before the switch
  CHECK(active_count(frame_at(0.74)) >= active_count(frame_at(0.5)));
  CHECK(active_count(frame_at(0.5)) >= active_count(frame_at(0.3)));
  // instantaneous recession after it
  CHECK(active_count(frame_at(0.76)) < active_count(frame_at(0.74)));
  double target = std::sqrt(2.0 / 5.0);
  CHECK(std::abs(front_position(frame_at(0.8).p, run.p_tol) - target) <=
        2.0 * g->h());
  // density in the desaturated region decays at rate -5
  std::size_t probe = g->nearest_node(0.8);
  const auto& f08 = frame_at(0.8);
  const auto& f09 = frame_at(0.9);
  REQUIRE(f08.rho[probe] > 0.1);
  double rate = std::log(f09.rho[probe] / f08.rho[probe]) / 0.1;
  CHECK(rate == doctest::Approx(-5.0).epsilon(1e-6));
  // re-expansion after lambda returns to -1
  CHECK(active_count(frame_at(1.2)) > active_count(frame_at(1.05)));
}

TEST_CASE("external density reconstruction") {
  auto g = build_grid(Geometry::cartesian(1.0, 3.0), 100);
  LimitParams params;
  params.dt = 1e-3;
  auto lam = SourceCoefficient::constant(-1.0, 5.0);
  auto f = BoundaryData::constant(1.0, 5.0);
  Field rho0 = block_density(g, 1.2, 0.5, 2.8);
  auto run = run_limit(rho0, lam, f, params, linspace_times(0.0, 0.4, 8));

  SUBCASE("never-saturated node decays from rho0") {
    std::size_t node = g->nearest_node(2.5);
    auto series = external_density(run, node, lam);
    REQUIRE(series.intervals.size() == 1);
    CHECK(series.intervals[0].from_initial);
    for (std::size_t k = 0; k < series.times.size(); ++k)
      CHECK(series.values[k] ==
            doctest::Approx(0.5 * std::exp(-series.times[k])).epsilon(1e-10));
  }
  SUBCASE("always-saturated node has no intervals") {
    auto series = external_density(run, g->nearest_node(1.05), lam);
    CHECK(series.intervals.empty());
  }
}

TEST_CASE("desaturating node restarts from density one") {
  auto g = build_grid(Geometry::cartesian(0.0, 2.0), 100);
  LimitParams params;
  params.dt = 2e-4;
  SourceCoefficient lam({{0.0, -1.0}, {0.5, -2.0}}, 2.0);
  auto f = BoundaryData::constant(1.0, 2.0);
  auto run = run_limit(block_density(g, 1.2), lam, f, params,
                       linspace_times(0.0, 0.8, 16));
  // with |lambda| growing the fit radius sqrt(2f/|lambda|) = 1 shrinks below
  // the initial block edge, so outer block nodes desaturate at t = 0.5
  std::size_t node = g->nearest_node(1.15);
  auto series = external_density(run, node, lam);
  REQUIRE(!series.intervals.empty());
  const auto& iv = series.intervals.back();
  CHECK_FALSE(iv.from_initial);
  CHECK(iv.t_start == doctest::Approx(0.5));
  for (std::size_t j = iv.first_frame; j <= iv.last_frame; ++j) {
    double t = run.frames[j].t;
    // trajectory and reconstruction both follow the closed form e^{-2(t-a)}
    double expected = std::exp(-2.0 * (t - iv.t_start));
    CHECK(run.frames[j].rho[node] == doctest::Approx(expected).epsilon(1e-9));
  }
  auto check_series = external_density(run, node, lam);
  for (std::size_t k = 0; k < check_series.times.size(); ++k) {
    if (check_series.times[k] < 0.5) continue;
    CHECK(check_series.values[k] ==
          doctest::Approx(std::exp(-2.0 * (check_series.times[k] - 0.5)))
              .epsilon(1e-10));
  }
}

TEST_CASE("ordered data produce ordered limit solutions") {
  auto g = build_grid(Geometry::cartesian(1.0, 3.5), 125);
  LimitParams params;
  params.dt = 2e-4;
  auto lam = SourceCoefficient::constant(-0.5, 5.0);
  auto fa = BoundaryData::constant(1.0, 5.0);
  auto fb = BoundaryData::constant(1.2, 5.0);
  Field a = block_density(g, 1.4, 0.2, 2.0);
  Field b = block_density(g, 1.6, 0.4, 2.2);
  auto times = linspace_times(0.0, 0.5, 5);
  auto ra = run_limit(a, lam, fa, params, times);
  auto rb = run_limit(b, lam, fb, params, times);
  REQUIRE(ra.frames.size() == rb.frames.size());
  for (std::size_t k = 0; k < ra.frames.size(); ++k)
    for (std::size_t i = 0; i < a.size(); ++i)
      CHECK(ra.frames[k].rho[i] <= rb.frames[k].rho[i] + 2.0 * params.eps_sat);
}

TEST_CASE("monotone lambda: characteristic data stay characteristic and grow") {
  auto g = build_grid(Geometry::cartesian(1.0, 3.0), 100);
  LimitParams params;
  params.dt = 2e-4;
  SourceCoefficient lam({{0.0, -1.0}, {0.3, -0.5}, {0.6, -0.25}}, 1.0);
  auto f = BoundaryData::constant(1.0, 1.0);
  auto run = run_limit(block_density(g, 1.3), lam, f, params,
                       linspace_times(0.0, 0.9, 9));

  for (std::size_t k = 1; k < run.frames.size(); ++k) {
    const auto& prev = run.frames[k - 1];
    const auto& cur = run.frames[k];
    for (std::size_t i = 0; i < cur.rho.size(); ++i) {
      CHECK(cur.rho[i] >= prev.rho[i] - 1e-12);
      CHECK(cur.p[i] >= prev.p[i] - 1e-7);
      CHECK(cur.sat[i] >= prev.sat[i]);
    }
  }
  // representation: rho is a characteristic function away from the partially
  // filled cells bordering the saturated set
  for (const auto& fr : run.frames) {
    for (std::size_t i = 1; i + 1 < fr.rho.size(); ++i) {
      bool front_cell = !fr.sat[i] && (fr.sat[i - 1] || fr.sat[i + 1]);
      if (front_cell) continue;
      bool zero = fr.rho[i] <= params.eps_sat;
      bool one = fr.rho[i] >= 1.0 - params.eps_sat;
      CHECK((zero || one));
    }
  }
}

TEST_CASE("positive lambda nucleates the grown band") {
  auto g = build_grid(Geometry::cartesian(1.0, 3.2), 110);
  LimitParams params;
  params.dt = 2e-4;
  auto lam = SourceCoefficient::constant(0.5, 1.0);
  auto f = BoundaryData::constant(1.0, 2.0);
  Field rho0 = block_density(g, 1.2, 0.6, 1.8);
  auto run = run_limit(rho0, lam, f, params, linspace_times(0.0, 1.2, 12));

  // the band rhoE = 0.6 e^{0.5 t} hits 1 at t = 2 ln(5/3) ~ 1.0217
  double t_nuc = 2.0 * std::log(1.0 / 0.6);
  std::size_t probe = g->nearest_node(1.7);
  for (const auto& fr : run.frames) {
    if (fr.t < t_nuc - 0.05 && fr.p[probe] <= run.p_tol) {
      double expected = 0.6 * std::exp(0.5 * fr.t);
      CHECK(fr.rho[probe] == doctest::Approx(expected).epsilon(1e-9));
    }
    if (fr.t > t_nuc + 0.05) CHECK(fr.rho[probe] >= 1.0 - params.eps_sat);
  }
  // saturated set is monotone for non-decreasing lambda
  for (std::size_t k = 1; k < run.frames.size(); ++k)
    for (std::size_t i = 0; i < rho0.size(); ++i)
      CHECK(run.frames[k].sat[i] >= run.frames[k - 1].sat[i]);
}

TEST_CASE("negative lambda never expands the front discontinuously") {
  auto g = build_grid(Geometry::cartesian(1.0, 3.0), 100);
  LimitParams params;
  params.dt = 2e-4;
  auto lam = SourceCoefficient::constant(-1.0, 5.0);
  auto f = BoundaryData::constant(1.0, 5.0);
  auto run = run_limit(block_density(g, 1.3), lam, f, params,
                       linspace_times(0.0, 0.6, 6));
  for (std::size_t k = 1; k < run.ledger.size(); ++k) {
    double jump = run.ledger[k].front - run.ledger[k - 1].front;
    CHECK(jump <= 2.0 * g->h());
  }
}

TEST_CASE("splitting order changes the answer only at O(dt)") {
  auto g = build_grid(Geometry::cartesian(1.0, 3.0), 100);
  auto lam = SourceCoefficient::constant(-1.0, 5.0);
  auto f = BoundaryData::constant(1.0, 5.0);
  Field rho0 = block_density(g, 1.3, 0.5, 2.2);

  auto gap_for = [&](double dt) {
    LimitParams params;
    params.dt = dt;
    auto std_run = run_limit(rho0, lam, f, params, {0.3});
    params.reversed_split = true;
    auto rev_run = run_limit(rho0, lam, f, params, {0.3});
    long double acc = 0.0L;
    const auto& a = std_run.frames.back().rho;
    const auto& b = rev_run.frames.back().rho;
    for (std::size_t i = 0; i < a.size(); ++i) acc += std::abs(a[i] - b[i]);
    return static_cast<double>(acc) * g->h();
  };
  double coarse = gap_for(4e-4);
  double fine = gap_for(2e-4);
  CHECK(coarse < 0.05);
  CHECK(fine <= 0.75 * coarse + 1e-9);
}
