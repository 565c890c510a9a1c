#pragma once

#include <functional>
#include <optional>
#include <variant>
#include <vector>

#include "mesa/grid.hpp"

namespace mesa {

/// lambda(x,t): piecewise-constant-in-time stages of spatial profiles with a
/// global bound |lambda| <= Lambda. Stage selection is right-continuous: at a
/// switch instant the new stage is already active.
class SourceCoefficient {
 public:
  using Profile = std::variant<double, Field>;
  struct Stage {
    double t_start;
    Profile profile;
  };

  SourceCoefficient(std::vector<Stage> stages, double bound);
  static SourceCoefficient constant(double value, double bound);

  double bound() const { return bound_; }
  const std::vector<Stage>& stages() const { return stages_; }

  std::size_t stage_index(double t) const;
  /// First switch time strictly greater than t, if any.
  std::optional<double> next_switch(double t) const;

  double operator()(double x, double t) const;

  /// Per-node values of the active stage on `grid`.
  void values_on(const Grid& grid, double t, std::vector<double>& out) const;

  /// Integral of lambda(x, s) ds over [t0, t1], analytic across stages.
  double time_integral(double x, double t0, double t1) const;

  bool constant_in_space() const;

 private:
  double profile_at(const Profile& p, double x) const;
  std::vector<Stage> stages_;
  double bound_;
};

/// Injection boundary data f(t) at the inner boundary, with the assumption
/// bounds 1/Lambda <= f <= Lambda.
class BoundaryData {
 public:
  BoundaryData(std::function<double(double)> f, double lambda_bound);
  static BoundaryData constant(double value, double lambda_bound);

  double operator()(double t) const { return f_(t); }
  double lower() const { return 1.0 / lambda_bound_; }
  double upper() const { return lambda_bound_; }
  double lambda_bound() const { return lambda_bound_; }

  /// Samples f on [t0, t1] and checks positivity, range bounds and that the
  /// finite difference quotient stays bounded. Throws on violation.
  void validate_range(double t0, double t1, int samples = 256,
                      double quotient_bound = 1e6) const;

 private:
  std::function<double(double)> f_;
  double lambda_bound_;
};

}  // namespace mesa
