#include "mesa/tumor.hpp"

#include <algorithm>
#include <cmath>

namespace mesa {

GrowthLaw GrowthLaw::linear(double alpha, double beta, double k0, double c_B) {
  GrowthLaw law;
  law.G = [alpha, beta](double p, double c) { return alpha * c - beta * p; };
  law.dG_dp = [beta](double, double) { return -beta; };
  law.antiderivative = [alpha, beta](double p, double c) {
    return alpha * c * p - 0.5 * beta * p * p;
  };
  law.H = [](double c) { return c; };
  law.K = [k0](double) { return k0; };
  law.c_B = c_B;
  law.beta = beta;
  law.reaction_rate_cap = std::max({1.0, k0, alpha * c_B});
  return law;
}

GrowthLaw::ValidationReport GrowthLaw::validate(double p_max, int lattice) const {
  ValidationReport rep;
  const double dp = 1e-5;
  for (int i = 0; i <= lattice; ++i) {
    double p = p_max * i / lattice;
    for (int j = 0; j <= lattice; ++j) {
      double c = c_B * j / lattice;
      double slope = (G(p + dp, c) - G(p, c)) / dp;
      rep.worst_dG_dp = std::max(rep.worst_dG_dp, slope);
      if (slope > -beta + 1e-6) rep.decreasing_in_p = false;
      if (antiderivative) {
        double a0 = antiderivative(p, c);
        double a1 = antiderivative(p + dp, c);
        double a2 = antiderivative(p + 2 * dp, c);
        if (a2 - 2 * a1 + a0 > 1e-12) rep.antiderivative_concave = false;
      }
    }
  }
  if (std::abs(H(0.0)) > 1e-12) rep.h_vanishes_at_zero = false;
  for (int i = 0; i <= lattice; ++i)
    if (K(p_max * i / lattice) < 0.0) rep.k_nonnegative = false;
  return rep;
}

void TumorParams::validate() const {
  if (!(m > 1.0)) throw std::invalid_argument("tumor: m must be > 1");
  if (!(cfl_safety > 0.0 && cfl_safety <= 1.0))
    throw std::invalid_argument("tumor: cfl_safety must be in (0, 1]");
}

namespace {

double int_pow(double x, long e) {
  double r = 1.0, b = x;
  while (e) {
    if (e & 1) r *= b;
    b *= b;
    e >>= 1;
  }
  return r;
}

struct TumorPow {
  double e;
  bool integral;
  long ei;
  explicit TumorPow(double exp_)
      : e(exp_), integral(exp_ > 0 && exp_ == std::nearbyint(exp_) && exp_ <= 1024.0),
        ei(static_cast<long>(exp_)) {}
  double operator()(double x) const { return integral ? int_pow(x, ei) : std::pow(x, e); }
};

double tumor_dt(const TumorState& s, const TumorParams& params,
                const GrowthLaw& law) {
  const Grid& g = s.rho.grid();
  TumorPow pm1(params.m - 1.0);
  double rho_max = s.rho.max();
  double dt = params.max_dt;
  if (rho_max > 0.0) {
    double diff = params.m * pm1(rho_max);
    dt = std::min(dt, params.cfl_safety * g.h() * g.h() / (2.0 * diff));
  }
  if (law.reaction_rate_cap > 0.0)
    dt = std::min(dt, params.cfl_safety / law.reaction_rate_cap);
  return dt;
}

TumorState advance(const TumorState& state, const TumorParams& params,
                   const GrowthLaw& law, double dt, TumorStepInfo* info) {
  const Grid& g = state.rho.grid();
  if (g.is_radial())
    throw std::invalid_argument("tumor: whole-line cartesian geometry required");
  const std::size_t n = g.n_nodes();
  const double h = g.h();
  const double inv_h2 = 1.0 / (h * h);
  TumorPow pm(params.m);
  TumorPow pm1(params.m - 1.0);
  const double c_p = params.m / (params.m - 1.0);

  TumorState out;
  out.t = state.t + dt;
  out.rho = state.rho;
  out.c = state.c;

  // density: explicit porous-medium update with source rho G(p, c)
  std::vector<double> u(n);
  for (std::size_t i = 0; i < n; ++i) u[i] = pm(state.rho[i]);
  int rho_clipped = 0;
  for (std::size_t i = 1; i + 1 < n; ++i) {
    double lap = (u[i - 1] - 2.0 * u[i] + u[i + 1]) * inv_h2;
    double p = c_p * pm1(state.rho[i]);
    double src = state.rho[i] * law.G(p, state.c[i]);
    double next = state.rho[i] + dt * (lap + src);
    if (next < 0.0) {
      next = 0.0;
      ++rho_clipped;
    }
    out.rho[i] = next;
  }
  out.rho[0] = 0.0;
  out.rho[n - 1] = 0.0;

  // nutrient: (I - dt lap) c_new = c + dt (-rho H(c) + (c_B - c) K(p)),
  // Dirichlet c = c_B at both truncated ends
  int c_clipped = 0;
  if (!params.freeze_nutrient) {
    const std::size_t mdim = n - 2;
    std::vector<double> lo(mdim, -dt * inv_h2), di(mdim, 1.0 + 2.0 * dt * inv_h2),
        up(mdim, -dt * inv_h2), rhs(mdim);
    for (std::size_t k = 0; k < mdim; ++k) {
      std::size_t i = k + 1;
      double p = c_p * pm1(state.rho[i]);
      rhs[k] = state.c[i] + dt * (-state.rho[i] * law.H(state.c[i]) +
                                  (law.c_B - state.c[i]) * law.K(p));
    }
    rhs[0] += dt * inv_h2 * law.c_B;
    rhs[mdim - 1] += dt * inv_h2 * law.c_B;
    auto sol = solve_tridiagonal(lo, di, up, rhs);
    out.c[0] = law.c_B;
    out.c[n - 1] = law.c_B;
    // the semi-implicit step obeys the maximum principle; excursions at
    // round-off scale are clamped without counting as clips
    const double slack = 1e-13 * std::max(1.0, law.c_B);
    for (std::size_t k = 0; k < mdim; ++k) {
      double v = sol[k];
      if (v < 0.0) {
        if (v < -slack) ++c_clipped;
        v = 0.0;
      } else if (v > law.c_B) {
        if (v > law.c_B + slack) ++c_clipped;
        v = law.c_B;
      }
      out.c[k + 1] = v;
    }
  }

  if (info) {
    info->dt = dt;
    info->rho_clipped = rho_clipped;
    info->c_clipped = c_clipped;
  }
  return out;
}

void check_margins(const TumorState& s, int margin_cells) {
  const std::size_t n = s.rho.size();
  const std::size_t margin = static_cast<std::size_t>(margin_cells);
  if (!s.rho.all_finite()) throw SolverError("tumor: non-finite density");
  for (std::size_t i = 0; i <= margin && i < n; ++i)
    if (s.rho[i] != 0.0)
      throw SolverError("tumor: support reached the left margin");
  for (std::size_t i = n - 1 - margin; i < n; ++i)
    if (s.rho[i] != 0.0)
      throw SolverError("tumor: support reached the right margin");
}

}  // namespace

TumorState step_tumor(const TumorState& state, const TumorParams& params,
                      const GrowthLaw& law, TumorStepInfo* info) {
  params.validate();
  check_margins(state, params.support_margin_cells);
  return advance(state, params, law, tumor_dt(state, params, law), info);
}

ObstacleSolution tumor_obstacle(const Mask& mask, const Field& c,
                                const GrowthLaw& law,
                                const ObstacleParams& params) {
  ObstacleProblem pb;
  pb.grid = c.grid_ptr();
  pb.mask = mask;
  ConcaveSource src;
  src.G = law.G;
  src.dG_dp = law.dG_dp;
  src.antiderivative = law.antiderivative;
  src.c = c;
  pb.source = std::move(src);
  pb.dirichlet_inner = std::nullopt;
  return solve_obstacle(pb, params);
}

TumorRunResult run_tumor(Field rho0, Field c0, const TumorParams& params,
                         const GrowthLaw& law, std::vector<double> output_times) {
  params.validate();
  if (rho0.min() < 0.0) throw std::invalid_argument("tumor: negative density");
  if (c0.min() < 0.0 || c0.max() > law.c_B + 1e-12)
    throw std::invalid_argument("tumor: nutrient outside [0, c_B]");

  TumorRunResult res;
  res.grid = rho0.grid_ptr();
  res.params = params;

  std::sort(output_times.begin(), output_times.end());
  std::vector<double> events;
  for (double t : output_times)
    if (t > 0.0 && t <= params.t_end) events.push_back(t);
  if (events.empty() || events.back() < params.t_end)
    events.push_back(params.t_end);

  TumorState s;
  s.rho = std::move(rho0);
  s.c = std::move(c0);

  const double c_p = params.m / (params.m - 1.0);
  TumorPow pm1(params.m - 1.0);
  auto record = [&](const TumorState& st) {
    Field p(st.rho.grid_ptr(), 0.0);
    for (std::size_t i = 0; i < st.rho.size(); ++i)
      p[i] = c_p * pm1(st.rho[i]);
    ConcaveSource src{law.G, law.dG_dp, law.antiderivative, st.c};
    double comp = complementarity_residual(p, src);
    res.max_p = std::max(res.max_p, p.max());
    res.frames.push_back({st.t, st.rho, p, st.c, comp});
  };
  record(s);

  TumorStepInfo info;
  for (double target : events) {
    while (s.t < target) {
      check_margins(s, params.support_margin_cells);
      double dt = tumor_dt(s, params, law);
      bool land = false;
      if (dt >= target - s.t) {
        dt = target - s.t;
        land = true;
      }
      s = advance(s, params, law, dt, &info);
      if (land) s.t = target;
      ++res.steps;
      res.rho_clip_count += info.rho_clipped;
      res.c_clip_count += info.c_clipped;
      res.c_min = std::min(res.c_min, s.c.min());
      res.c_max = std::max(res.c_max, s.c.max());
    }
    record(s);
  }
  return res;
}

}  // namespace mesa
