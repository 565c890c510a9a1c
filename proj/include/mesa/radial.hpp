#pragma once

#include <functional>
#include <optional>
#include <vector>

#include "mesa/coefficients.hpp"
#include "mesa/limit.hpp"

namespace mesa {

/// Closed-form solution of -lap(phi) = lambda on the annulus (inner, R) with
/// phi(inner) = f, phi(R) = 0, for ambient dimension 1, 2 or 3:
/// phi = -lambda r^2/(2n) + a H(r) + b with H = r, ln r, 1/r respectively.
struct RadialProfile {
  double inner = 1.0;
  double R = 2.0;
  double lambda = 0.0;
  double f = 1.0;
  int dim = 1;
  double a = 0.0, b = 0.0;

  double value(double r) const;
  double slope(double r) const;
  double slope_at_R() const { return slope(R); }
  /// Minimum over [inner, R], from the interior critical point when present.
  double min_value() const;
  /// max |(-lap phi) - lambda| over `samples` interior radii (round-off check).
  double residual(int samples = 50) const;
};

RadialProfile annulus_profile(double R, double lambda_val, double f, int dim,
                              double inner = 1.0);

/// Front speed F(R,t) = (d_r phi)_-(R) / (1 - rhoE): only the negative part
/// of the boundary slope drives expansion. Rejects rhoE >= 1.
double free_boundary_speed(double R, double lambda_val, double f, int dim,
                           double inner, double rhoE_at_front);

/// Radius where the two-point profile achieves smooth fit (slope zero at R)
/// for the given lambda < 0; scalar bisection on the closed form.
double smooth_fit_radius(double lambda_val, double f, int dim, double inner,
                         double r_hi_hint);

enum class RadialBranch { expanding, contracting };

struct RadialSample {
  double t;
  double R;
  double slope;  // d_r phi_R (R)
  RadialBranch branch;
};

struct RadialTrajectory {
  std::vector<RadialSample> samples;
  std::optional<double> t_star;
  double inner = 1.0;
  double f = 1.0;
  int dim = 1;

  double position(double t) const;  // linear interpolation in t
};

/// RK4 on R' = F(R, t) with rhoE(r,t) = rho0(r) exp(int_0^t lambda); steps
/// aligned to stage switches. When the front slope would turn non-negative
/// the trajectory switches to the contracting branch R(t) solving the
/// smooth-fit equation for the current lambda. Requires lambda constant in
/// space, non-positive, and monotone in time.
RadialTrajectory integrate_radial(double R0, const SourceCoefficient& lambda,
                                  const std::function<double(double)>& rho0,
                                  double f, int dim, double inner, double T,
                                  double dt = 1e-3);

struct RadialBarrier {
  enum class Kind { sub, super };
  Kind kind = Kind::sub;
  double speed_scale = 1.0;
  RadialTrajectory trajectory;
};

/// Integrates the front ODE with speed scaled by `speed_scale` and verifies
/// the barrier inequality (1-rhoE) V <= |grad phi| (sub) or >= (super) at
/// every sample; a declaration contradicting the inequality is rejected.
RadialBarrier make_barrier(RadialBarrier::Kind kind, double speed_scale,
                           double R0, const SourceCoefficient& lambda,
                           const std::function<double(double)>& rho0, double f,
                           int dim, double inner, double T, double dt = 1e-3);

struct InclusionReport {
  bool ok = true;
  double max_violation = 0.0;  // in length units beyond the 2h allowance
  std::vector<double> frame_times;
  std::vector<double> barrier_front;
  std::vector<double> numeric_front;
  std::string to_json() const;
};

/// Compares the barrier support against the limit solver's front per frame:
/// sub-barriers must stay inside (within 2h), super-barriers must contain it.
InclusionReport check_inclusion(const RadialBarrier& barrier,
                                const LimitRunResult& run, double cells = 2.0);

}  // namespace mesa
