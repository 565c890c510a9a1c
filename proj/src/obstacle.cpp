#include "mesa/obstacle.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

namespace mesa {

double ObstacleProblem::source_at(std::size_t i, double p) const {
  if (linear()) return std::get<Field>(source)[i];
  const auto& cs = std::get<ConcaveSource>(source);
  return cs.G(p, cs.c[i]);
}

void ObstacleProblem::validate() const {
  if (!grid) throw std::invalid_argument("obstacle: missing grid");
  if (mask.size() != grid->n_nodes())
    throw std::invalid_argument("obstacle: mask size mismatch");
  if (dirichlet_inner) {
    if (!(*dirichlet_inner > 0.0))
      throw std::invalid_argument("obstacle: inner Dirichlet value must be positive");
    if (!mask[0])
      throw std::invalid_argument("obstacle: inner boundary node must be masked");
  }
  if (linear()) {
    const Field& lam = std::get<Field>(source);
    if (lam.size() != grid->n_nodes())
      throw std::invalid_argument("obstacle: source size mismatch");
    if (!lam.all_finite()) throw std::invalid_argument("obstacle: source not finite");
  } else {
    const auto& cs = std::get<ConcaveSource>(source);
    if (!cs.G || !cs.dG_dp) throw std::invalid_argument("obstacle: missing G or dG/dp");
    if (cs.c.size() != grid->n_nodes())
      throw std::invalid_argument("obstacle: nutrient field size mismatch");
  }
}

namespace {

// Stencil weights at node i for lap(p) = cl*p[i-1] - (cl+cu)*p[i] + cu*p[i+1].
inline void stencil_weights(const Grid& g, std::size_t i, double& cl, double& cu) {
  const double h = g.h();
  cl = cu = 1.0 / (h * h);
  if (g.is_radial() && g.dim() > 1) {
    double c1 = (g.dim() - 1) / g.node(i) / (2.0 * h);
    cl -= c1;
    cu += c1;
  }
}

// Root of diag*p - nb - G(p, c) = 0; G strictly decreasing in p makes the
// function strictly increasing, so the root is unique.
inline double newton_node(const ConcaveSource& cs, double c, double diag, double nb,
                          double p0, int iters) {
  double p = p0;
  for (int k = 0; k < iters; ++k) {
    double g = diag * p - nb - cs.G(p, c);
    double dg = diag - cs.dG_dp(p, c);
    p -= g / dg;
  }
  return p;
}

}  // namespace

ObstacleSolution solve_obstacle(const ObstacleProblem& problem,
                                const ObstacleParams& params,
                                const Field* warm_start) {
  problem.validate();
  const Grid& g = *problem.grid;
  const std::size_t n = g.n_nodes();
  const double f_inner = problem.dirichlet_inner.value_or(0.0);
  const double scale = problem.dirichlet_inner ? *problem.dirichlet_inner : 1.0;
  const double p_tol = params.p_tol_rel * scale;

  ObstacleSolution sol;
  sol.p = warm_start ? *warm_start : Field(problem.grid, 0.0);
  sol.p_tol = p_tol;
  auto& p = sol.p.data();
  if (p.size() != n) throw std::invalid_argument("obstacle: warm start size mismatch");

  // Enforce admissibility of the start.
  p[0] = problem.dirichlet_inner ? f_inner : 0.0;
  p[n - 1] = 0.0;
  for (std::size_t i = 1; i + 1 < n; ++i) {
    if (!problem.mask[i]) p[i] = 0.0;
    else p[i] = std::max(p[i], 0.0);
  }

  const Field* lam = problem.linear() ? &std::get<Field>(problem.source) : nullptr;
  const ConcaveSource* cs = problem.linear() ? nullptr : &std::get<ConcaveSource>(problem.source);

  // omega <= 0 selects the near-optimal SOR factor for the 1D Laplacian.
  double omega = params.omega;
  if (omega <= 0.0) omega = 2.0 / (1.0 + std::sin(std::acos(-1.0) / static_cast<double>(n)));
  if (omega >= 2.0) throw std::invalid_argument("obstacle: omega must be < 2");

  int iter = 0;
  double residual = std::numeric_limits<double>::infinity();
  while (iter < params.max_iter) {
    ++iter;
    for (std::size_t i = 1; i + 1 < n; ++i) {
      if (!problem.mask[i]) continue;
      double cl, cu;
      stencil_weights(g, i, cl, cu);
      const double diag = cl + cu;
      const double nb = cl * p[i - 1] + cu * p[i + 1];
      double target;
      if (lam) {
        target = (nb + (*lam)[i]) / diag;
      } else {
        target = newton_node(*cs, cs->c[i], diag, nb, p[i], params.newton_iters);
      }
      p[i] = std::max(0.0, p[i] + omega * (target - p[i]));
    }
    // Complementarity residual in equation units: at masked interior nodes the
    // pair (p, r) with r = -lap(p) - source(p) must satisfy p >= 0, r >= 0,
    // p r = 0; max |min(p, r)| measures the worst violation.
    residual = 0.0;
    for (std::size_t i = 1; i + 1 < n; ++i) {
      if (!problem.mask[i]) continue;
      double cl, cu;
      stencil_weights(g, i, cl, cu);
      double r = (cl + cu) * p[i] - cl * p[i - 1] - cu * p[i + 1] -
                 problem.source_at(i, p[i]);
      residual = std::max(residual, std::abs(std::min(p[i], r)));
    }
    if (residual < params.tol) break;
  }

  sol.iterations = iter;
  sol.residual = residual;
  sol.converged = residual < params.tol;
  if (!sol.converged) {
    char msg[160];
    std::snprintf(msg, sizeof(msg),
                  "obstacle: PSOR did not converge, residual %.3e after %d "
                  "iterations (tol %.3e)",
                  residual, iter, params.tol);
    throw SolverError(msg);
  }

  sol.active.assign(n, 0);
  for (std::size_t i = 0; i < n; ++i) sol.active[i] = p[i] > p_tol ? 1 : 0;
  return sol;
}

namespace {

template <class SourceFn>
double comp_residual_impl(const Field& p, SourceFn src) {
  const Grid& g = p.grid();
  long double acc = 0.0L;
  for (std::size_t i = 1; i + 1 < p.size(); ++i) {
    double lap = laplacian_at(g, p.values(), i);
    acc += std::abs(p[i] * (lap + src(i, p[i])));
  }
  return static_cast<double>(acc) * g.h();
}

}  // namespace

double complementarity_residual(const Field& p, const std::vector<double>& lambda) {
  return comp_residual_impl(p, [&](std::size_t i, double) { return lambda[i]; });
}

double complementarity_residual(const Field& p, const ConcaveSource& src) {
  return comp_residual_impl(p, [&](std::size_t i, double v) { return src.G(v, src.c[i]); });
}

double complementarity_residual(const Field& p, const ObstacleProblem& problem) {
  return comp_residual_impl(
      p, [&](std::size_t i, double v) { return problem.source_at(i, v); });
}

Field boundary_measure(const Field& p, const std::vector<double>& lambda,
                       const Mask& mask, double p_tol) {
  const Grid& g = p.grid();
  Field mu(p.grid_ptr(), 0.0);
  for (std::size_t i = 1; i + 1 < p.size(); ++i) {
    if (p[i] > p_tol && !mask[i])
      throw std::invalid_argument("boundary measure: positive pressure off the mask");
    double lap = laplacian_at(g, p.values(), i);
    mu[i] = lap + (p[i] > p_tol ? lambda[i] : 0.0);
  }
  return mu;
}

double front_position(const Field& p, double p_tol) {
  const Grid& g = p.grid();
  std::size_t k = p.size();
  for (std::size_t i = p.size(); i-- > 0;) {
    if (p[i] > p_tol) {
      k = i;
      break;
    }
  }
  if (k == p.size()) return g.inner();
  const double h = g.h();
  if (k == 0 || p[k - 1] <= p[k]) return g.node(k) + 0.5 * h;
  double dx = h * p[k] / (p[k - 1] - p[k]);
  return g.node(k) + std::min(dx, h);
}

double obstacle_objective(const ObstacleProblem& problem, const Field& v) {
  const Grid& g = *problem.grid;
  const double h = g.h();
  long double energy = 0.0L, work = 0.0L;
  for (std::size_t i = 0; i + 1 < v.size(); ++i) {
    double dv = (v[i + 1] - v[i]) / h;
    energy += 0.5 * dv * dv * h;
  }
  if (problem.linear()) {
    const Field& lam = std::get<Field>(problem.source);
    for (std::size_t i = 1; i + 1 < v.size(); ++i) work += lam[i] * v[i] * h;
  } else {
    const auto& cs = std::get<ConcaveSource>(problem.source);
    if (!cs.antiderivative)
      throw std::invalid_argument("obstacle objective: missing antiderivative");
    for (std::size_t i = 1; i + 1 < v.size(); ++i)
      work += cs.antiderivative(v[i], cs.c[i]) * h;
  }
  return static_cast<double>(energy - work);
}

}  // namespace mesa
