#pragma once

#include <string>
#include <vector>

#include "mesa/limit.hpp"
#include "mesa/pme.hpp"

namespace mesa {

struct CheckResult {
  std::string name;
  bool pass = false;
  double measured = 0.0;
  double threshold = 0.0;
  std::string context;
};

/// Collection of named checks; every registered check appears exactly once.
class DiagnosticsReport {
 public:
  void add(CheckResult check);
  void merge(const DiagnosticsReport& other);
  bool all_pass() const;
  const std::vector<CheckResult>& checks() const { return checks_; }
  std::string to_text() const;
  std::string to_json() const;

 private:
  std::vector<CheckResult> checks_;
};

/// Per-step mass identity from the run ledger plus the Gronwall envelope
/// |rho(t)|_1 <= |rho0|_1 e^{Lambda t} + C (e^{Lambda t}-1)/Lambda with C
/// fitted from the recorded boundary flux.
CheckResult mass_balance(const PMERunResult& run, double lambda_bound,
                         double identity_tol = 1e-10);
CheckResult mass_balance(const LimitRunResult& run, double identity_tol = 1e-10);

struct BoundsReport {
  CheckResult pressure_bound;   // m-uniform sup bound on p
  CheckResult positivity;       // p >= 0 and rho >= 0 on all frames
  CheckResult support_envelope; // support edge within a fitted linear envelope
  CheckResult density_ceiling;  // rho <= ((m-1)/m max_p)^(1/(m-1)) per run
};
BoundsReport bounds_report(const std::vector<const PMERunResult*>& sweep);

/// Total variation of rho(., t_final) on the delta-interior, compared across
/// the sweep; bounded means within a factor 2 of the smallest.
CheckResult tv_report(const std::vector<const PMERunResult*>& sweep,
                      double delta);
double total_variation(const Field& rho, double delta);

CheckResult ordering_check(const PMEOrderedPairResult& pair, double tol = 1e-12);
CheckResult ordering_check(const LimitRunResult& lower, const LimitRunResult& upper,
                           double tol);

struct VelocityLawReport {
  CheckResult advancing;  // relative error of V vs |grad p| / (1 - rhoE)
  CheckResult receding;   // |grad p| at the receding front stays ~ 0
  int advancing_frames = 0;
  int receding_frames = 0;
  int skipped_frames = 0;  // multiple fronts
};
VelocityLawReport velocity_law_check(const LimitRunResult& run,
                                     double rel_tol = 0.15,
                                     double speed_floor = 0.05,
                                     double grad_tol = 1e-3);

struct ConvergenceTable {
  std::vector<double> m_values;
  std::vector<double> l1_rho;    // |rho_m - rho_limit| over Q_T
  std::vector<double> l1_p;      // |p_m - p_limit| over Q_T
  std::vector<double> l1_graph;  // |p_m (1 - rho_m)| over Q_T
  std::string to_csv() const;
};

/// L1(Q_T) distances between each finite-m run and the limit run; all runs
/// must share the grid and the output times.
ConvergenceTable convergence_table(const std::vector<const PMERunResult*>& sweep,
                                   const LimitRunResult& limit_run);

CheckResult convergence_check(const ConvergenceTable& table);

}  // namespace mesa
