#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <variant>
#include <vector>

#include "mesa/grid.hpp"

namespace mesa {

using Mask = std::vector<std::uint8_t>;

/// Concave per-node source: the scalar nonlinearity G(p, c) with dG/dp <= -beta < 0
/// and its antiderivative in p (used by the energy objective).
struct ConcaveSource {
  std::function<double(double p, double c)> G;
  std::function<double(double p, double c)> dG_dp;
  std::function<double(double p, double c)> antiderivative;
  Field c;
};

/// Obstacle problem on the saturated mask: minimize the Dirichlet energy minus
/// source work over p >= 0, p pinned to 0 at nodes outside the mask, with
/// Dirichlet data at the domain boundary (f at the inner node when present,
/// 0 at the outer node).
struct ObstacleProblem {
  GridPtr grid;
  Mask mask;
  std::variant<Field, ConcaveSource> source;
  std::optional<double> dirichlet_inner;  // injection value f; nullopt pins 0

  bool linear() const { return std::holds_alternative<Field>(source); }
  double source_at(std::size_t i, double p) const;
  void validate() const;
};

struct ObstacleParams {
  double tol = 1e-10;     // convergence: max nodewise |min(p, -lap(p)-source)|
  int max_iter = 400000;
  double omega = 1.7;     // SOR relaxation, 0 < omega < 2
  double p_tol_rel = 1e-8;  // active-set threshold relative to the data scale
  int newton_iters = 5;   // per-node iterations for the concave source
};

struct ObstacleSolution {
  Field p;
  Mask active;      // {p > p_tol}
  int iterations = 0;
  double residual = 0.0;
  bool converged = false;
  double p_tol = 0.0;
};

ObstacleSolution solve_obstacle(const ObstacleProblem& problem,
                                const ObstacleParams& params = {},
                                const Field* warm_start = nullptr);

/// Discrete surrogate of the complementarity integral: sum over interior
/// nodes of |p (lap(p) + source(p))| h, with p's own boundary values.
double complementarity_residual(const Field& p, const std::vector<double>& lambda);
double complementarity_residual(const Field& p, const ConcaveSource& src);
double complementarity_residual(const Field& p, const ObstacleProblem& problem);

/// Nodewise measure mu = lap(p) + lambda * chi{p > p_tol}; the expansion flux
/// concentrated at the free boundary. Zero at boundary nodes.
Field boundary_measure(const Field& p, const std::vector<double>& lambda,
                       const Mask& mask, double p_tol);

/// Discrete objective of the minimization problem (cartesian quadrature);
/// used by the optimality property checks.
double obstacle_objective(const ObstacleProblem& problem, const Field& v);

/// Outer free-boundary position of {p > p_tol}: the zero crossing of the
/// line through the last two positive values, clamped to the cell that
/// contains it. Returns the inner boundary if the set is empty.
double front_position(const Field& p, double p_tol);

}  // namespace mesa
