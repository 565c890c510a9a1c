#include "mesa/pme.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace mesa {

namespace {

// x^e with a fast path for integral exponents (the m-sweeps use m in
// {10, 20, 40, 80} and pow dominates the step cost otherwise).
struct Pow {
  double e = 1.0;
  bool integral = false;
  long ei = 1;

  static Pow make(double e) {
    Pow p;
    p.e = e;
    p.integral = e > 0 && e == std::nearbyint(e) && e <= 1024.0;
    p.ei = static_cast<long>(e);
    return p;
  }
  double operator()(double x) const {
    if (!integral) return std::pow(x, e);
    double r = 1.0, b = x;
    long k = ei;
    while (k) {
      if (k & 1) r *= b;
      b *= b;
      k >>= 1;
    }
    return r;
  }
};

struct Stepper {
  const GridPtr grid;
  const PMEParams params;
  const SourceCoefficient& lambda;
  const BoundaryData* f;
  Pow pow_m, pow_bc;
  std::vector<double> u;    // rho^m
  std::vector<double> lam;  // active stage values per node
  std::size_t cached_stage = static_cast<std::size_t>(-1);
  std::size_t lo = 0, hi = 0;  // support bounds (nodes with rho != 0)

  Pow pow_m1;

  Stepper(GridPtr g, const PMEParams& p, const SourceCoefficient& lam_,
          const BoundaryData* f_)
      : grid(std::move(g)), params(p), lambda(lam_), f(f_) {
    pow_m = Pow::make(p.m);
    pow_bc = Pow::make(1.0 / (p.m - 1.0));
    pow_m1 = Pow::make(p.m - 1.0);
    u.assign(grid->n_nodes(), 0.0);
  }

  void locate_support(const std::vector<double>& rho) {
    const std::size_t n = rho.size();
    lo = 0;
    while (lo + 1 < n && rho[lo] == 0.0) ++lo;
    hi = n - 1;
    while (hi > 0 && rho[hi] == 0.0) --hi;
    if (hi < lo) hi = lo;
  }

  void refresh_source(double t) {
    std::size_t k = lambda.stage_index(t);
    if (k != cached_stage) {
      lambda.values_on(*grid, t, lam);
      cached_stage = k;
    }
  }

  double max_rho(const std::vector<double>& rho) const {
    double m = 0.0;
    for (std::size_t i = lo; i <= hi; ++i) m = std::max(m, rho[i]);
    return m;
  }

  double cfl_dt(double rho_max) const {
    if (rho_max <= 0.0) return params.max_dt;
    double diff = params.m * pow_m1(rho_max);
    double dt = params.cfl_safety * grid->h() * grid->h() / (2.0 * diff);
    return std::min(dt, params.max_dt);
  }

  // One explicit update over the support window; t advances by dt.
  void advance(std::vector<double>& rho, double& t, double dt, PMEStepInfo* info) {
    const Grid& g = *grid;
    const std::size_t n = rho.size();
    const double h = g.h();
    refresh_source(t);

    const std::size_t wlo = lo > 2 ? lo - 2 : 0;
    const std::size_t whi = std::min(hi + 2, n - 1);
    for (std::size_t i = wlo; i <= whi; ++i) u[i] = pow_m(rho[i]);

    const std::size_t is = std::max<std::size_t>(1, wlo + 1);
    const std::size_t ie = std::min(whi - 1, n - 2);

    const bool radial = g.is_radial() && g.dim() > 1;
    const double inv_h2 = 1.0 / (h * h);
    long double diff_sum = 0.0L, src_sum = 0.0L, dmass = 0.0L, clip_gain = 0.0L;
    int clipped = 0;
    for (std::size_t i = is; i <= ie; ++i) {
      double lap = (u[i - 1] - 2.0 * u[i] + u[i + 1]) * inv_h2;
      if (radial)
        lap += (g.dim() - 1) / g.node(i) * (u[i + 1] - u[i - 1]) / (2.0 * h);
      double src = lam[i] * rho[i];
      double next = rho[i] + dt * (lap + src);
      diff_sum += lap;
      src_sum += src;
      if (next < 0.0) {
        clip_gain += -next;
        next = 0.0;
        ++clipped;
      }
      dmass += next - rho[i];
      rho[i] = next;
    }

    t += dt;
    rho[0] = f ? pow_bc((*f)(t)) : 0.0;
    rho[n - 1] = 0.0;

    // Window bookkeeping: the support spreads at most one node per step.
    std::size_t up = std::min(hi + 1, n - 2);
    if (rho[up] != 0.0) hi = std::max(hi, up);
    while (hi > 0 && rho[hi] == 0.0) --hi;
    if (rho[0] != 0.0) {
      lo = 0;
    } else {
      std::size_t dn = lo > 1 ? lo - 1 : 1;
      if (rho[dn] != 0.0) lo = std::min(lo, dn);
      while (lo + 1 < n && rho[lo] == 0.0) ++lo;
    }
    if (hi < lo) hi = lo;

    if (info) {
      info->dt = dt;
      info->clipped = clipped;
      info->dmass = static_cast<double>(dmass) * h;
      info->diffusion_sum = static_cast<double>(diff_sum) * h;
      info->source_sum = static_cast<double>(src_sum) * h;
      info->clip_gain = static_cast<double>(clip_gain) * h;
      info->flux_inner = (u[0] - u[1]) / h;
      info->flux_outer = (u[n - 1] - u[n - 2]) / h;
    }
  }

  void check_health(const std::vector<double>& rho, double rho_max) const {
    if (!std::isfinite(rho_max))
      throw SolverError("pme: non-finite density (blow-up)");
    const std::size_t n = rho.size();
    const std::size_t margin = static_cast<std::size_t>(params.support_margin_cells);
    if (hi + margin >= n - 1 && rho[hi] != 0.0)
      throw SolverError("pme: support reached the outer margin, enlarge the domain");
    if (!f && lo <= margin && rho[lo] != 0.0)
      throw SolverError("pme: support reached the inner margin, enlarge the domain");
  }
};

double interior_mass(const std::vector<double>& rho, double h) {
  long double s = 0.0L;
  for (std::size_t i = 1; i + 1 < rho.size(); ++i) s += rho[i];
  return static_cast<double>(s) * h;
}

}  // namespace

void PMEParams::validate() const {
  if (!(m > 1.0)) throw std::invalid_argument("pme: m must be > 1");
  if (!(cfl_safety > 0.0 && cfl_safety <= 1.0))
    throw std::invalid_argument("pme: cfl_safety must be in (0, 1]");
  if (!(t_end >= 0.0)) throw std::invalid_argument("pme: t_end must be >= 0");
}

Field pressure_of_density(const Field& rho, double m) {
  if (!(m > 1.0)) throw std::invalid_argument("pressure: m must be > 1");
  Pow pw = Pow::make(m - 1.0);
  Field p(rho.grid_ptr(), 0.0);
  const double c = m / (m - 1.0);
  for (std::size_t i = 0; i < rho.size(); ++i) {
    if (rho[i] < 0.0) throw std::invalid_argument("pressure: negative density");
    p[i] = c * pw(rho[i]);
  }
  return p;
}

PMEState step_pme(const PMEState& state, const PMEParams& params,
                  const SourceCoefficient& lambda, const BoundaryData* f,
                  PMEStepInfo* info) {
  params.validate();
  if (!state.rho.all_finite()) throw SolverError("pme: non-finite state");
  Stepper st(state.rho.grid_ptr(), params, lambda, f);
  PMEState out = state;
  auto& rho = out.rho.data();
  st.locate_support(rho);
  double rho_max = st.max_rho(rho);
  st.check_health(rho, rho_max);
  double dt = st.cfl_dt(rho_max);
  if (auto sw = lambda.next_switch(state.t)) dt = std::min(dt, *sw - state.t);
  st.advance(rho, out.t, dt, info);
  return out;
}

PMERunResult run_pme(Field rho0, const PMEParams& params,
                     const SourceCoefficient& lambda, const BoundaryData* f,
                     std::vector<double> output_times) {
  params.validate();
  const GridPtr grid = rho0.grid_ptr();
  const double h = grid->h();
  if (rho0.min() < 0.0) throw std::invalid_argument("pme: negative initial density");

  PMERunResult res;
  res.grid = grid;
  res.params = params;

  // Event times: frame outputs, stage switches, final time.
  std::sort(output_times.begin(), output_times.end());
  std::vector<double> events;
  if (output_times.empty() || output_times.front() > 0.0) events.push_back(0.0);
  for (double t : output_times)
    if (t >= 0.0 && t <= params.t_end) events.push_back(t);
  for (const auto& s : lambda.stages())
    if (s.t_start > 0.0 && s.t_start < params.t_end) events.push_back(s.t_start);
  events.push_back(params.t_end);
  std::sort(events.begin(), events.end());
  events.erase(std::unique(events.begin(), events.end()), events.end());

  auto is_frame_time = [&](double t) {
    if (t == 0.0) return true;
    auto it = std::lower_bound(output_times.begin(), output_times.end(), t);
    return it != output_times.end() && *it == t;
  };

  Stepper st(grid, params, lambda, f);
  Field rho = std::move(rho0);
  if (f) rho[0] = Pow::make(1.0 / (params.m - 1.0))((*f)(0.0));
  double t = 0.0;
  st.locate_support(rho.data());

  const double sample_dt = params.t_end / std::max(1, params.ledger_samples);
  double next_sample = 0.0;
  const double c_p = params.m / (params.m - 1.0);
  Pow pw_m1 = Pow::make(params.m - 1.0);
  // rho threshold equivalent to p > support_tol
  const double rho_thresh =
      std::pow(params.support_tol / c_p, 1.0 / (params.m - 1.0));

  long double flux_in_int = 0.0L, flux_out_int = 0.0L, src_int = 0.0L;

  auto record_ledger = [&]() {
    while (next_sample <= t + 1e-15) next_sample += sample_dt;
    PMELedgerRow row{};
    row.t = t;
    row.mass = interior_mass(rho.data(), h);
    long count = 0;
    double edge = grid->inner();
    double mx = 0.0;
    for (std::size_t i = st.lo; i <= st.hi; ++i) {
      double v = rho[i];
      mx = std::max(mx, v);
      if (v > rho_thresh) {
        ++count;
        edge = grid->node(i);
      }
    }
    row.support_measure = h * static_cast<double>(count);
    row.support_edge = edge;
    row.rho_edge = grid->node(st.hi);
    row.max_rho = mx;
    row.max_p = c_p * pw_m1(mx);
    res.max_p = std::max(res.max_p, row.max_p);
    res.max_rho = std::max(res.max_rho, mx);
    res.ledger.push_back(row);
  };
  auto record_frame = [&]() {
    res.frames.push_back({t, rho, pressure_of_density(rho, params.m)});
  };

  record_frame();
  record_ledger();
  next_sample = sample_dt;

  PMEStepInfo info;
  long double running_mass = interior_mass(rho.data(), h);
  for (std::size_t ev = 0; ev < events.size(); ++ev) {
    const double target = events[ev];
    if (target <= 0.0) continue;
    while (t < target) {
      double rho_max = st.max_rho(rho.data());
      st.check_health(rho.data(), rho_max);
      double dt = st.cfl_dt(rho_max);
      bool land = false;
      if (dt >= target - t) {
        dt = target - t;
        land = true;
      }
      st.advance(rho.data(), t, dt, &info);
      if (land) t = target;
      ++res.steps;
      res.clip_count += info.clipped;
      flux_in_int += static_cast<long double>(info.flux_inner) * dt;
      flux_out_int += static_cast<long double>(info.flux_outer) * dt;
      src_int += static_cast<long double>(info.source_sum) * dt;
      res.max_abs_flux = std::max(
          res.max_abs_flux, std::abs(info.flux_inner) + std::abs(info.flux_outer));
      double lhs = info.dmass;
      double rhs = dt * (info.diffusion_sum + info.source_sum) + info.clip_gain;
      double scale = std::max(std::abs(static_cast<double>(running_mass)), 1e-30);
      res.max_mass_identity_error =
          std::max(res.max_mass_identity_error, std::abs(lhs - rhs) / scale);
      running_mass += info.dmass;
      if (t >= next_sample - 1e-15 && t < target) record_ledger();
    }
    record_ledger();
    if (is_frame_time(t)) record_frame();
  }

  res.flux_inner_integral = static_cast<double>(flux_in_int);
  res.flux_outer_integral = static_cast<double>(flux_out_int);
  res.source_integral = static_cast<double>(src_int);
  return res;
}

Field prepare_initial_density(const Field& p0, const Field& rhoE, double m) {
  const double e = std::exp(1.0);
  if (!(m > e)) throw std::invalid_argument("initial density: m must exceed e");
  if (p0.size() != rhoE.size())
    throw std::invalid_argument("initial density: size mismatch");
  const double a_m = 1.0 / std::log(m);
  Field rho(p0.grid_ptr(), 0.0);
  for (std::size_t i = 0; i < p0.size(); ++i) {
    if (p0[i] < 0.0) throw std::invalid_argument("initial density: p0 must be >= 0");
    if (rhoE[i] < 0.0 || rhoE[i] >= 1.0)
      throw std::invalid_argument("initial density: rhoE must be in [0, 1)");
    rho[i] = std::max(std::pow(p0[i], 1.0 / m), std::max(rhoE[i] - a_m, 0.0));
  }
  return rho;
}

InitialDataReport validate_initial_data(const Field& rho0, double m,
                                        const SourceCoefficient& lambda,
                                        const BoundaryData& f, double r_upper,
                                        double r_lower) {
  const GridPtr grid = rho0.grid_ptr();
  const Grid& g = *grid;
  const double Lambda = lambda.bound();
  const double fval = std::pow(f(0.0), m / (m - 1.0));

  std::vector<double> rhs_up(g.n_nodes(), Lambda + 1.0);
  std::vector<double> rhs_lo(g.n_nodes(), -Lambda);
  InitialDataReport rep;
  rep.barrier_upper =
      solve_dirichlet_poisson(grid, rhs_up, fval, 0.0, g.nearest_node(r_upper));
  rep.barrier_lower =
      solve_dirichlet_poisson(grid, rhs_lo, fval, 0.0, g.nearest_node(r_lower));

  rep.lower_barrier_positive = true;
  const std::size_t lo_last = g.nearest_node(r_lower);
  for (std::size_t i = 1; i < lo_last; ++i)
    if (rep.barrier_lower[i] < -1e-12) rep.lower_barrier_positive = false;

  const double tol = 1e-12;
  for (std::size_t i = 0; i < rho0.size(); ++i) {
    double lo_bound =
        rep.barrier_lower[i] > 0.0 ? std::pow(rep.barrier_lower[i], 1.0 / m) : 0.0;
    double up_bound =
        rep.barrier_upper[i] > 0.0 ? std::pow(rep.barrier_upper[i], 1.0 / m) : 0.0;
    if (rho0[i] < lo_bound - tol) {
      ++rep.lower_violations;
      rep.max_lower_violation = std::max(rep.max_lower_violation, lo_bound - rho0[i]);
    }
    if (rho0[i] > up_bound + tol) {
      ++rep.upper_violations;
      rep.max_upper_violation = std::max(rep.max_upper_violation, rho0[i] - up_bound);
    }
  }
  rep.lower_ok = rep.lower_violations == 0;
  rep.upper_ok = rep.upper_violations == 0;

  // L1 surrogates of the regularity assumption on the initial data.
  Field u0(grid, 0.0);
  for (std::size_t i = 0; i < rho0.size(); ++i) u0[i] = std::pow(rho0[i], m);
  Field lap = laplacian(u0, {fval, 0.0});
  std::vector<double> lam0;
  lambda.values_on(g, 0.0, lam0);
  long double l1 = 0.0L;
  for (std::size_t i = 1; i + 1 < rho0.size(); ++i)
    l1 += std::abs(lap[i] + lam0[i] * rho0[i]);
  rep.l1_time_derivative = static_cast<double>(l1) * g.h();
  long double tv = 0.0L;
  for (std::size_t i = 0; i + 1 < rho0.size(); ++i)
    tv += std::abs(rho0[i + 1] - rho0[i]);
  rep.l1_gradient = static_cast<double>(tv);
  return rep;
}

PMEOrderedPairResult run_pme_ordered_pair(Field rho0_a, Field rho0_b,
                                          const PMEParams& params,
                                          const SourceCoefficient& lambda,
                                          const BoundaryData* f_a,
                                          const BoundaryData* f_b) {
  params.validate();
  Stepper sa(rho0_a.grid_ptr(), params, lambda, f_a);
  Stepper sb(rho0_b.grid_ptr(), params, lambda, f_b);
  PMEOrderedPairResult res;
  Field a = std::move(rho0_a), b = std::move(rho0_b);
  Pow bc = Pow::make(1.0 / (params.m - 1.0));
  if (f_a) a[0] = bc((*f_a)(0.0));
  if (f_b) b[0] = bc((*f_b)(0.0));
  double t = 0.0;
  sa.locate_support(a.data());
  sb.locate_support(b.data());
  while (t < params.t_end) {
    double ma = sa.max_rho(a.data()), mb = sb.max_rho(b.data());
    sa.check_health(a.data(), ma);
    sb.check_health(b.data(), mb);
    double dt = std::min(sa.cfl_dt(ma), sb.cfl_dt(mb));
    if (auto sw = lambda.next_switch(t)) dt = std::min(dt, *sw - t);
    if (dt >= params.t_end - t) dt = params.t_end - t;
    double ta = t, tb = t;
    sa.advance(a.data(), ta, dt, nullptr);
    sb.advance(b.data(), tb, dt, nullptr);
    t = ta;
    for (std::size_t i = 0; i < a.size(); ++i)
      res.max_violation = std::max(res.max_violation, a[i] - b[i]);
  }
  res.final_a = {t, std::move(a)};
  res.final_b = {t, std::move(b)};
  return res;
}

}  // namespace mesa
