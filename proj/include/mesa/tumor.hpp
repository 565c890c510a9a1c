#pragma once

#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "mesa/grid.hpp"
#include "mesa/obstacle.hpp"

namespace mesa {

/// Cell division law G(p, c) with dG/dp <= -beta < 0, its antiderivative in p
/// (vanishing at p = 0), nutrient consumption H and exchange rate K. The
/// default linear law G = alpha c - beta p satisfies every structural
/// hypothesis and has closed-form nullclines.
struct GrowthLaw {
  std::function<double(double p, double c)> G;
  std::function<double(double p, double c)> dG_dp;
  std::function<double(double p, double c)> antiderivative;
  std::function<double(double c)> H;
  std::function<double(double p)> K;
  double c_B = 1.0;
  double beta = 1.0;
  double reaction_rate_cap = 1.0;  // dt is limited by cfl / this

  static GrowthLaw linear(double alpha = 1.0, double beta = 1.0, double k0 = 1.0,
                          double c_B = 1.0);

  struct ValidationReport {
    bool decreasing_in_p = true;
    bool antiderivative_concave = true;
    bool h_vanishes_at_zero = true;
    bool k_nonnegative = true;
    double worst_dG_dp = -std::numeric_limits<double>::infinity();
    bool ok() const {
      return decreasing_in_p && antiderivative_concave && h_vanishes_at_zero &&
             k_nonnegative;
    }
  };
  /// Finite-difference check of dG/dp <= -beta on a (p, c) lattice.
  ValidationReport validate(double p_max = 2.0, int lattice = 21) const;
};

struct TumorParams {
  double m = 40.0;
  double cfl_safety = 0.9;
  double t_end = 0.5;
  double max_dt = std::numeric_limits<double>::infinity();
  int support_margin_cells = 5;
  bool freeze_nutrient = false;

  void validate() const;
};

struct TumorState {
  double t = 0.0;
  Field rho;
  Field c;
};

struct TumorStepInfo {
  double dt = 0.0;
  int rho_clipped = 0;
  int c_clipped = 0;
};

/// One operator-split step: the density moves by the explicit porous-medium
/// update with source rho G(p, c); the nutrient by a semi-implicit step of
/// c_t - lap c = -rho H(c) + (c_B - c) K(p) with c = c_B at both ends.
TumorState step_tumor(const TumorState& state, const TumorParams& params,
                      const GrowthLaw& law, TumorStepInfo* info = nullptr);

/// Obstacle problem with the concave source G(., c) on the given mask; no
/// injection boundary (the tumor model has no fixed boundary K).
ObstacleSolution tumor_obstacle(const Mask& mask, const Field& c,
                                const GrowthLaw& law,
                                const ObstacleParams& params = {});

struct TumorFrame {
  double t;
  Field rho;
  Field p;
  Field c;
  double comp_residual;  // integral |p (lap p + G(p, c))|
};

struct TumorRunResult {
  GridPtr grid;
  TumorParams params;
  std::vector<TumorFrame> frames;
  long long steps = 0;
  long long rho_clip_count = 0;
  long long c_clip_count = 0;
  double max_p = 0.0;
  double c_min = std::numeric_limits<double>::infinity();
  double c_max = -std::numeric_limits<double>::infinity();
};

TumorRunResult run_tumor(Field rho0, Field c0, const TumorParams& params,
                         const GrowthLaw& law, std::vector<double> output_times);

}  // namespace mesa
