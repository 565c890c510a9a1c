#include "mesa/radial.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

namespace mesa {

namespace {

double homog(double r, int dim) {
  switch (dim) {
    case 1: return r;
    case 2: return std::log(r);
    default: return 1.0 / r;
  }
}
double homog_prime(double r, int dim) {
  switch (dim) {
    case 1: return 1.0;
    case 2: return 1.0 / r;
    default: return -1.0 / (r * r);
  }
}

void require_radial_source(const SourceCoefficient& lambda) {
  if (!lambda.constant_in_space())
    throw std::invalid_argument("radial oracle: lambda must be constant in space");
  double prev = std::get<double>(lambda.stages().front().profile);
  int direction = 0;
  for (const auto& s : lambda.stages()) {
    double v = std::get<double>(s.profile);
    if (v > 0.0)
      throw std::invalid_argument("radial oracle: lambda must be non-positive");
    if (v > prev) {
      if (direction < 0)
        throw std::invalid_argument("radial oracle: lambda must be time-monotone");
      direction = 1;
    } else if (v < prev) {
      if (direction > 0)
        throw std::invalid_argument("radial oracle: lambda must be time-monotone");
      direction = -1;
    }
    prev = v;
  }
}

}  // namespace

double RadialProfile::value(double r) const {
  return -lambda * r * r / (2.0 * dim) + a * homog(r, dim) + b;
}

double RadialProfile::slope(double r) const {
  return -lambda * r / dim + a * homog_prime(r, dim);
}

double RadialProfile::min_value() const {
  double m = std::min(value(inner), 0.0);  // value(R) = 0 by construction
  // interior critical point of -lambda r^2/(2n) + a H(r) + b
  double rc = -1.0;
  if (lambda != 0.0) {
    switch (dim) {
      case 1: rc = a / lambda; break;
      case 2: { double s = 2.0 * a / lambda; rc = s > 0.0 ? std::sqrt(s) : -1.0; break; }
      default: { double s = -3.0 * a / lambda; rc = s > 0.0 ? std::cbrt(s) : -1.0; break; }
    }
  }
  if (rc > inner && rc < R) m = std::min(m, value(rc));
  return m;
}

double RadialProfile::residual(int samples) const {
  double worst = 0.0;
  for (int k = 1; k < samples; ++k) {
    double r = inner + (R - inner) * k / samples;
    // analytic laplacian of the closed form: lap = phi'' + (n-1)/r phi'
    double d2 = -lambda / dim;
    switch (dim) {
      case 2: d2 += -a / (r * r); break;
      case 3: d2 += 2.0 * a / (r * r * r); break;
      default: break;
    }
    double d1 = slope(r);
    double lap = d2 + (dim - 1) / r * d1;
    worst = std::max(worst, std::abs(-lap - lambda));
  }
  return worst;
}

RadialProfile annulus_profile(double R, double lambda_val, double f, int dim,
                              double inner) {
  if (!(R > inner))
    throw std::invalid_argument("annulus profile: R must exceed the inner radius");
  if (dim < 1 || dim > 3)
    throw std::invalid_argument("annulus profile: dimension must be 1, 2 or 3");
  RadialProfile p;
  p.inner = inner;
  p.R = R;
  p.lambda = lambda_val;
  p.f = f;
  p.dim = dim;
  auto part = [&](double r) { return -lambda_val * r * r / (2.0 * dim); };
  p.a = (f - (part(inner) - part(R))) / (homog(inner, dim) - homog(R, dim));
  p.b = -part(R) - p.a * homog(R, dim);
  return p;
}

double free_boundary_speed(double R, double lambda_val, double f, int dim,
                           double inner, double rhoE_at_front) {
  if (rhoE_at_front >= 1.0)
    throw std::invalid_argument("front speed: external density must be below 1");
  double s = annulus_profile(R, lambda_val, f, dim, inner).slope_at_R();
  return std::max(0.0, -s) / (1.0 - rhoE_at_front);
}

double smooth_fit_radius(double lambda_val, double f, int dim, double inner,
                         double r_hi_hint) {
  if (!(lambda_val < 0.0))
    throw std::invalid_argument("smooth fit: requires negative lambda");
  auto slope_at = [&](double R) {
    return annulus_profile(R, lambda_val, f, dim, inner).slope_at_R();
  };
  double lo = inner * (1.0 + 1e-12) + 1e-12;
  double hi = std::max(r_hi_hint, inner + 1e-6);
  while (slope_at(hi) < 0.0) hi = inner + 2.0 * (hi - inner);
  for (int k = 0; k < 200; ++k) {
    double mid = 0.5 * (lo + hi);
    if (slope_at(mid) < 0.0) lo = mid;
    else hi = mid;
    if (hi - lo < 1e-14 * hi) break;
  }
  return 0.5 * (lo + hi);
}

double RadialTrajectory::position(double t) const {
  if (samples.empty()) throw std::invalid_argument("radial trajectory: empty");
  if (t <= samples.front().t) return samples.front().R;
  if (t >= samples.back().t) return samples.back().R;
  auto it = std::lower_bound(samples.begin(), samples.end(), t,
                             [](const RadialSample& s, double tv) { return s.t < tv; });
  const auto& hi = *it;
  const auto& lo = *(it - 1);
  double w = (t - lo.t) / (hi.t - lo.t);
  return lo.R * (1.0 - w) + hi.R * w;
}

namespace {

struct FrontOde {
  const SourceCoefficient& lambda;
  const std::function<double(double)>& rho0;
  double f;
  int dim;
  double inner;
  double speed_scale;

  double rhoE(double r, double t) const {
    return rho0(r) * std::exp(lambda.time_integral(r, 0.0, t));
  }
  // lambda frozen to the value on the step interval (stages are piecewise
  // constant, steps never straddle a switch)
  double speed(double R, double t, double lam_val) const {
    double e = rhoE(R, t);
    if (e >= 1.0)
      throw SolverError("radial oracle: external density reached 1 at the front");
    double s = annulus_profile(R, lam_val, f, dim, inner).slope_at_R();
    return speed_scale * std::max(0.0, -s) / (1.0 - e);
  }
};

}  // namespace

RadialTrajectory integrate_radial_scaled(double R0, const SourceCoefficient& lambda,
                                         const std::function<double(double)>& rho0,
                                         double f, int dim, double inner, double T,
                                         double dt, double speed_scale) {
  require_radial_source(lambda);
  if (!(R0 > inner))
    throw std::invalid_argument("radial oracle: R0 must exceed the inner radius");

  FrontOde ode{lambda, rho0, f, dim, inner, speed_scale};
  RadialTrajectory traj;
  traj.inner = inner;
  traj.f = f;
  traj.dim = dim;

  std::vector<double> events;
  for (const auto& s : lambda.stages())
    if (s.t_start > 0.0 && s.t_start < T) events.push_back(s.t_start);
  events.push_back(T);

  double t = 0.0, R = R0;
  bool contracting = false;

  auto record = [&](double tv, double Rv, double lam_val) {
    double s = annulus_profile(Rv, lam_val, f, dim, inner).slope_at_R();
    traj.samples.push_back({tv, Rv, s,
                            contracting ? RadialBranch::contracting
                                        : RadialBranch::expanding});
  };

  auto check_stall = [&](double tv, double lam_val) {
    // the expanding branch ends when the front slope turns non-negative
    double s = annulus_profile(R, lam_val, f, dim, inner).slope_at_R();
    if (s >= 0.0 && !contracting) {
      contracting = true;
      traj.t_star = tv;
    }
  };

  check_stall(0.0, lambda(R, 0.0));
  record(0.0, R, lambda(R, 0.0));

  for (double target : events) {
    while (t < target - 1e-15) {
      double h = std::min(dt, target - t);
      // lambda frozen to the active stage of the step interval [t, t+h)
      const double lam_val = lambda(R, t);
      if (contracting) {
        R = std::min(R, smooth_fit_radius(lam_val, f, dim, inner, R));
        t = std::min(t + h, target);
      } else {
        double k1 = ode.speed(R, t, lam_val);
        double k2 = ode.speed(R + 0.5 * h * k1, t + 0.5 * h, lam_val);
        double k3 = ode.speed(R + 0.5 * h * k2, t + 0.5 * h, lam_val);
        double k4 = ode.speed(R + h * k3, t + h, lam_val);
        double R_next = R + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        double t_next = std::min(t + h, target);
        // bisection refinement if the slope crosses zero inside the step
        double s_next =
            annulus_profile(R_next, lam_val, f, dim, inner).slope_at_R();
        if (s_next >= 0.0) {
          double lo = t, hi = t_next, Rl = R, Rh = R_next;
          for (int it = 0; it < 60; ++it) {
            double tm = 0.5 * (lo + hi), Rm = 0.5 * (Rl + Rh);
            double sm = annulus_profile(Rm, lam_val, f, dim, inner).slope_at_R();
            if (sm < 0.0) { lo = tm; Rl = Rm; }
            else { hi = tm; Rh = Rm; }
          }
          contracting = true;
          traj.t_star = hi;
          R = 0.5 * (Rl + Rh);
          t = t_next;
        } else {
          R = R_next;
          t = t_next;
        }
      }
      record(t, R, lam_val);
    }
    t = target;
    if (t < T) {
      // a stage switch can stall the front instantaneously
      const double lam_new = lambda(R, t);
      check_stall(t, lam_new);
      if (contracting) {
        R = std::min(R, smooth_fit_radius(lam_new, f, dim, inner, R));
        record(t, R, lam_new);
      }
    }
  }
  return traj;
}

RadialTrajectory integrate_radial(double R0, const SourceCoefficient& lambda,
                                  const std::function<double(double)>& rho0,
                                  double f, int dim, double inner, double T,
                                  double dt) {
  return integrate_radial_scaled(R0, lambda, rho0, f, dim, inner, T, dt, 1.0);
}

RadialBarrier make_barrier(RadialBarrier::Kind kind, double speed_scale,
                           double R0, const SourceCoefficient& lambda,
                           const std::function<double(double)>& rho0, double f,
                           int dim, double inner, double T, double dt) {
  if (!(speed_scale > 0.0))
    throw std::invalid_argument("barrier: speed scale must be positive");
  RadialBarrier barrier;
  barrier.kind = kind;
  barrier.speed_scale = speed_scale;
  barrier.trajectory = integrate_radial_scaled(R0, lambda, rho0, f, dim, inner,
                                               T, dt, speed_scale);

  // Verify the free-boundary inequality at every sample: the scaled front
  // moves with (1 - rhoE) V = speed_scale |grad phi|_-, so the declaration
  // must match the side of the inequality.
  const double tol = 1e-8;
  for (const auto& s : barrier.trajectory.samples) {
    if (s.branch == RadialBranch::contracting) continue;
    double grad = std::max(0.0, -s.slope);
    double lhs = speed_scale * grad;  // (1 - rhoE) V at the front
    if (kind == RadialBarrier::Kind::sub && lhs > grad + tol)
      throw std::invalid_argument(
          "barrier: declared sub but the front inequality fails");
    if (kind == RadialBarrier::Kind::super && lhs < grad - tol)
      throw std::invalid_argument(
          "barrier: declared super but the front inequality fails");
  }
  return barrier;
}

std::string InclusionReport::to_json() const {
  std::string out = "{\"ok\":";
  out += ok ? "true" : "false";
  char buf[128];
  std::snprintf(buf, sizeof(buf), ",\"max_violation\":%.17g,\"frames\":[",
                max_violation);
  out += buf;
  for (std::size_t k = 0; k < frame_times.size(); ++k) {
    std::snprintf(buf, sizeof(buf), "%s[%.17g,%.17g,%.17g]", k ? "," : "",
                  frame_times[k], barrier_front[k], numeric_front[k]);
    out += buf;
  }
  out += "]}";
  return out;
}

InclusionReport check_inclusion(const RadialBarrier& barrier,
                                const LimitRunResult& run, double cells) {
  InclusionReport rep;
  const double allowance = cells * run.grid->h();
  for (const auto& fr : run.frames) {
    double numeric = front_position(fr.p, run.p_tol);
    double rb = barrier.trajectory.position(fr.t);
    rep.frame_times.push_back(fr.t);
    rep.barrier_front.push_back(rb);
    rep.numeric_front.push_back(numeric);
    double violation = barrier.kind == RadialBarrier::Kind::sub
                           ? rb - (numeric + allowance)
                           : (numeric - allowance) - rb;
    if (violation > 0.0) {
      rep.ok = false;
      rep.max_violation = std::max(rep.max_violation, violation);
    }
  }
  return rep;
}

}  // namespace mesa
