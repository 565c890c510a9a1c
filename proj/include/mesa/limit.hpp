#pragma once

#include <vector>

#include "mesa/coefficients.hpp"
#include "mesa/grid.hpp"
#include "mesa/obstacle.hpp"

namespace mesa {

struct LimitParams {
  double eps_sat = 1e-6;  // saturation threshold for {rho = 1}
  double dt = 1e-4;
  double p_tol = 0.0;  // active-set threshold; 0 selects 1e-8 * f(0)
  ObstacleParams obstacle{.tol = 1e-10, .max_iter = 400000, .omega = 0.0,
                          .p_tol_rel = 1e-8, .newton_iters = 5};
  double support_tol = 1e-3;
  int support_margin_cells = 5;
  bool reversed_split = false;  // apply decay after the transport sub-steps

  void validate() const;
};

struct LimitState {
  double t = 0.0;
  Field rho;  // in [0, 1]
  Field p;    // >= 0, zero off the saturated set
  Mask sat;   // {rho >= 1 - eps_sat} united with the inner node
};

/// Mask of nodes with rho >= 1 - eps_sat; the injection boundary node is
/// always included when include_inner is set.
Mask saturated_set(const Field& rho, double eps_sat, bool include_inner = true);

struct LimitLedgerRow {
  double t;
  double mass;        // interior l1 of rho, h weighted
  double decay_mass;  // mass change from the exponential sub-step
  double mu_mass;     // mass deposited by the expansion sub-step
  double mu_min;      // min of the boundary measure over interior nodes
  double graph_residual;  // max p (1 - rho)
  double comp_residual;   // integral |p (lap p + lambda)|
  double front;           // outer free boundary of {p > p_tol}
  double front_mass;      // sub-cell front from the fill fraction of the
                          // cell bordering the saturated set
  int active_count;
  int sat_count;
  int psor_iterations;
  double mass_identity_error;  // |dmass - decay_mass - mu_mass| / scale
};

/// Cached obstacle solution: the pressure depends only on the mask and the
/// active lambda stage, so a solve is needed only when either changes.
struct ObstacleCache {
  bool valid = false;
  std::size_t stage = static_cast<std::size_t>(-1);
  Mask mask;
  Field p;
  Field mu;
  Mask active;
  int iterations = 0;
};

/// Advances one step of size params.dt. `t_exact`, when non-negative,
/// overrides the landing time state.t + dt (used to hit stage switches and
/// output instants without floating point drift).
LimitState step_limit(const LimitState& state, const SourceCoefficient& lambda,
                      const BoundaryData& f, const LimitParams& params,
                      LimitLedgerRow* row = nullptr, ObstacleCache* cache = nullptr,
                      double t_exact = -1.0);

struct LimitFrame {
  double t;
  Field rho;
  Field p;
  Mask sat;
};

struct LimitRunResult {
  GridPtr grid;
  LimitParams params;
  std::vector<LimitFrame> frames;
  std::vector<LimitLedgerRow> ledger;
  long long steps = 0;
  double max_graph_residual = 0.0;
  double min_mu = 0.0;
  double max_mass_identity_error = 0.0;
  double max_p = 0.0;
  double p_tol = 0.0;
};

LimitRunResult run_limit(Field rho0, const SourceCoefficient& lambda,
                         const BoundaryData& f, const LimitParams& params,
                         std::vector<double> output_times);

/// Reconstruction of the external density at one node: on each maximal
/// interval of frames with p = 0 the density solves rho_t = lambda rho,
/// restarted from rho0 when the interval starts at t = 0 and from 1 otherwise.
struct ExternalDensitySeries {
  struct Interval {
    std::size_t first_frame;
    std::size_t last_frame;
    double t_start;
    bool from_initial;  // started at t = 0 with value rho0(x)
  };
  std::vector<Interval> intervals;
  std::vector<double> times;   // frame times covered by some interval
  std::vector<double> values;  // reconstructed rhoE at those times
};

ExternalDensitySeries external_density(const LimitRunResult& run, std::size_t node,
                                       const SourceCoefficient& lambda);

}  // namespace mesa
