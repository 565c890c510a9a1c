#include "mesa/limit.hpp"

#include <algorithm>
#include <cmath>

namespace mesa {

void LimitParams::validate() const {
  if (!(eps_sat > 0.0 && eps_sat < 0.1))
    throw std::invalid_argument("limit: eps_sat must be small and positive");
  if (!(dt > 0.0)) throw std::invalid_argument("limit: dt must be positive");
}

Mask saturated_set(const Field& rho, double eps_sat, bool include_inner) {
  Mask m(rho.size(), 0);
  for (std::size_t i = 0; i < rho.size(); ++i)
    m[i] = rho[i] >= 1.0 - eps_sat ? 1 : 0;
  if (include_inner) m[0] = 1;
  return m;
}

namespace {

struct StepScratch {
  std::vector<double> lam;
  std::size_t lam_stage = static_cast<std::size_t>(-1);
};

double resolve_p_tol(const LimitParams& params, const BoundaryData& f) {
  return params.p_tol > 0.0 ? params.p_tol : 1e-8 * f(0.0);
}

// Pressure and boundary measure for the given mask and time; reuses the cache
// when neither the mask nor the lambda stage changed.
void solve_pressure(const Field& rho_grid_ref, const Mask& sat,
                    const SourceCoefficient& lambda, const BoundaryData& f,
                    const LimitParams& params, double t_new, double p_tol,
                    ObstacleCache& cache, StepScratch& scratch,
                    const Field* warm) {
  std::size_t stage = lambda.stage_index(t_new);
  if (cache.valid && cache.stage == stage && cache.mask == sat) return;

  const GridPtr grid = rho_grid_ref.grid_ptr();
  if (scratch.lam_stage != stage) {
    lambda.values_on(*grid, t_new, scratch.lam);
    scratch.lam_stage = stage;
  }
  ObstacleProblem pb;
  pb.grid = grid;
  pb.mask = sat;
  pb.source = Field(grid, std::vector<double>(scratch.lam));
  pb.dirichlet_inner = f(t_new);
  ObstacleParams op = params.obstacle;
  auto sol = solve_obstacle(pb, op, warm);
  cache.valid = true;
  cache.stage = stage;
  cache.mask = sat;
  cache.p = std::move(sol.p);
  cache.active = std::move(sol.active);
  cache.iterations = sol.iterations;
  cache.mu = boundary_measure(cache.p, scratch.lam, sat, p_tol);
}

double interior_mass(const Field& rho) {
  long double s = 0.0L;
  for (std::size_t i = 1; i + 1 < rho.size(); ++i) s += rho[i];
  return static_cast<double>(s) * rho.grid().h();
}

struct SubStepSums {
  double decay_mass = 0.0;
  double mu_mass = 0.0;
};

// Exponential growth/decay on nodes where the pressure vanishes; saturated
// values are capped at 1. Nodes that saturated after the last obstacle solve
// (sat but absent from last_mask) are skipped: the solve has not yet had the
// chance to give them pressure, and evicting them here would keep the
// pressure support from ever expanding. Nodes the solve did exclude decay
// normally, which is how desaturation works.
double decay_substep(Field& rho, const Field& p, const Mask& sat,
                     const Mask* last_mask, const std::vector<double>& lam,
                     double dt, double p_tol) {
  long double dmass = 0.0L;
  for (std::size_t i = 1; i + 1 < rho.size(); ++i) {
    if (p[i] > p_tol) continue;
    if (sat[i] && last_mask && !(*last_mask)[i]) continue;
    double before = rho[i];
    double after = std::min(1.0, before * std::exp(lam[i] * dt));
    rho[i] = after;
    dmass += after - before;
  }
  return static_cast<double>(dmass) * rho.grid().h();
}

// Deposit dt*mu on unsaturated nodes adjacent to the active set; overshoot
// above 1 cascades outward so the deposited mass is conserved exactly.
double expansion_substep(Field& rho, Mask& sat, const Field& mu, const Mask& active,
                         double dt, double eps_sat, std::size_t margin) {
  const std::size_t n = rho.size();
  long double added = 0.0L;
  for (std::size_t i = 1; i + 1 < n; ++i) {
    if (sat[i] || mu[i] <= 0.0) continue;
    if (!(active[i - 1] || active[i + 1])) continue;
    double deposit = dt * mu[i];
    added += deposit;
    std::size_t j = i;
    while (deposit > 0.0) {
      if (j + 1 >= n - margin)
        throw SolverError("limit: overshoot cascade reached the outer margin; reduce dt");
      double room = 1.0 - rho[j];
      double take = std::min(room, deposit);
      rho[j] += take;
      deposit -= take;
      if (rho[j] >= 1.0 - eps_sat) sat[j] = 1;
      ++j;
    }
  }
  return static_cast<double>(added) * rho.grid().h();
}

}  // namespace

LimitState step_limit(const LimitState& state, const SourceCoefficient& lambda,
                      const BoundaryData& f, const LimitParams& params,
                      LimitLedgerRow* row, ObstacleCache* cache, double t_exact) {
  params.validate();
  ObstacleCache local_cache;
  if (!cache) cache = &local_cache;
  StepScratch scratch;

  const double dt = params.dt;
  const double t_new = t_exact >= 0.0 ? t_exact : state.t + dt;
  if (auto sw = lambda.next_switch(state.t))
    if (t_new > *sw + 1e-15)
      throw std::invalid_argument("limit: step would straddle a lambda switch");

  const double p_tol = resolve_p_tol(params, f);
  LimitState out;
  out.t = t_new;
  out.rho = state.rho;
  out.rho[0] = 1.0;
  out.rho[out.rho.size() - 1] = 0.0;

  const double mass_before = interior_mass(out.rho);
  SubStepSums sums;
  const Mask* last_mask = cache->valid ? &cache->mask : nullptr;

  // lambda on [t, t+dt) for the decay sub-step (stage constant on the step)
  std::vector<double> lam_old;
  lambda.values_on(out.rho.grid(), state.t, lam_old);

  if (!params.reversed_split)
    sums.decay_mass = decay_substep(out.rho, state.p, state.sat, last_mask,
                                    lam_old, dt, p_tol);

  out.sat = saturated_set(out.rho, params.eps_sat);
  solve_pressure(out.rho, out.sat, lambda, f, params, t_new, p_tol, *cache,
                 scratch, &state.p);
  out.p = cache->p;

  sums.mu_mass =
      expansion_substep(out.rho, out.sat, cache->mu, cache->active, dt,
                        params.eps_sat,
                        static_cast<std::size_t>(params.support_margin_cells));

  if (params.reversed_split)
    sums.decay_mass = decay_substep(out.rho, out.p, out.sat, &cache->mask,
                                    lam_old, dt, p_tol);

  if (row) {
    const double mass_after = interior_mass(out.rho);
    row->t = t_new;
    row->mass = mass_after;
    row->decay_mass = sums.decay_mass;
    row->mu_mass = sums.mu_mass;
    row->mu_min = 0.0;
    row->graph_residual = 0.0;
    for (std::size_t i = 1; i + 1 < out.rho.size(); ++i) {
      row->mu_min = std::min(row->mu_min, cache->mu[i]);
      row->graph_residual =
          std::max(row->graph_residual, out.p[i] * (1.0 - out.rho[i]));
    }
    if (scratch.lam_stage == static_cast<std::size_t>(-1))
      lambda.values_on(out.rho.grid(), t_new, scratch.lam);
    row->comp_residual = complementarity_residual(out.p, scratch.lam);
    row->front = front_position(out.p, p_tol);
    // sub-cell front: saturated cells plus the fill fraction of the next one
    {
      const Grid& g = out.rho.grid();
      const std::size_t n = out.rho.size();
      std::size_t j = 0;
      for (std::size_t i = 0; i + 1 < n; ++i)
        if (out.sat[i]) j = i;
      double fill = 0.0;
      if (j + 2 < n) {
        double ext = out.rho[j + 2];
        double den = std::max(1.0 - ext, 1e-9);
        fill = std::clamp((out.rho[j + 1] - ext) / den, 0.0, 1.0);
      }
      row->front_mass = g.node(j) + g.h() * (0.5 + fill);
    }
    row->active_count = static_cast<int>(
        std::count(cache->active.begin(), cache->active.end(), 1));
    row->sat_count =
        static_cast<int>(std::count(out.sat.begin(), out.sat.end(), 1));
    row->psor_iterations = cache->iterations;
    double scale = std::max(std::abs(mass_before), 1e-30);
    row->mass_identity_error =
        std::abs((mass_after - mass_before) - sums.decay_mass - sums.mu_mass) /
        scale;
  }
  return out;
}

LimitRunResult run_limit(Field rho0, const SourceCoefficient& lambda,
                         const BoundaryData& f, const LimitParams& params,
                         std::vector<double> output_times) {
  params.validate();
  const GridPtr grid = rho0.grid_ptr();
  if (rho0.min() < 0.0 || rho0.max() > 1.0 + 1e-12)
    throw std::invalid_argument("limit: rho0 must take values in [0, 1]");

  LimitRunResult res;
  res.grid = grid;
  res.params = params;
  res.p_tol = resolve_p_tol(params, f);

  // The run extends to the last output time; stage switches are internal
  // events so no step straddles them.
  std::sort(output_times.begin(), output_times.end());
  const double t_end = output_times.empty() ? 0.0 : output_times.back();
  std::vector<double> events;
  for (double t : output_times)
    if (t > 0.0) events.push_back(t);
  for (const auto& s : lambda.stages())
    if (s.t_start > 0.0 && s.t_start < t_end) events.push_back(s.t_start);
  std::sort(events.begin(), events.end());
  events.erase(std::unique(events.begin(), events.end()), events.end());

  auto is_frame_time = [&](double t) {
    auto it = std::lower_bound(output_times.begin(), output_times.end(), t);
    return it != output_times.end() && *it == t;
  };

  LimitState state;
  state.t = 0.0;
  state.rho = std::move(rho0);
  state.rho[0] = 1.0;
  state.rho[state.rho.size() - 1] = 0.0;
  state.sat = saturated_set(state.rho, params.eps_sat);

  ObstacleCache cache;
  StepScratch scratch;
  solve_pressure(state.rho, state.sat, lambda, f, params, 0.0, res.p_tol, cache,
                 scratch, nullptr);
  state.p = cache.p;

  res.frames.push_back({0.0, state.rho, state.p, state.sat});

  const std::size_t margin = static_cast<std::size_t>(params.support_margin_cells);
  for (double target : events) {
    while (state.t < target) {
      LimitParams step_params = params;
      double t_exact = -1.0;
      if (params.dt >= target - state.t) {
        step_params.dt = target - state.t;
        t_exact = target;
      }
      LimitLedgerRow row{};
      state = step_limit(state, lambda, f, step_params, &row, &cache, t_exact);
      ++res.steps;
      res.ledger.push_back(row);
      res.max_graph_residual = std::max(res.max_graph_residual, row.graph_residual);
      res.min_mu = std::min(res.min_mu, row.mu_min);
      res.max_p = std::max(res.max_p, state.p.max());
      res.max_mass_identity_error =
          std::max(res.max_mass_identity_error, row.mass_identity_error);
      // margin guard on the saturated set itself
      const std::size_t n = state.sat.size();
      for (std::size_t i = n > margin + 1 ? n - 1 - margin : 1; i + 1 < n; ++i)
        if (state.sat[i])
          throw SolverError("limit: saturated set reached the outer margin");
    }
    if (is_frame_time(state.t))
      res.frames.push_back({state.t, state.rho, state.p, state.sat});
  }
  return res;
}

ExternalDensitySeries external_density(const LimitRunResult& run, std::size_t node,
                                       const SourceCoefficient& lambda) {
  ExternalDensitySeries out;
  const double x = run.grid->node(node);
  const double rho0 = run.frames.front().rho[node];
  std::size_t k = 0;
  const std::size_t nf = run.frames.size();
  while (k < nf) {
    if (run.frames[k].p[node] > run.p_tol) {
      ++k;
      continue;
    }
    ExternalDensitySeries::Interval iv;
    iv.first_frame = k;
    while (k < nf && run.frames[k].p[node] <= run.p_tol) ++k;
    iv.last_frame = k - 1;
    iv.t_start = run.frames[iv.first_frame].t;
    iv.from_initial = iv.first_frame == 0;
    double start_value = iv.from_initial ? rho0 : 1.0;
    for (std::size_t j = iv.first_frame; j <= iv.last_frame; ++j) {
      double t = run.frames[j].t;
      out.times.push_back(t);
      out.values.push_back(start_value *
                           std::exp(lambda.time_integral(x, iv.t_start, t)));
    }
    out.intervals.push_back(iv);
  }
  return out;
}

}  // namespace mesa
