#pragma once

#include "crstokes/estimate.hpp"
#include "crstokes/manufactured.hpp"

namespace crstokes {

struct AfemConfig {
  double theta = 0.3;            // Doerfler parameter, in (0,1)
  int max_dofs = 50000;          // velocity + pressure unknowns
  int max_levels = 30;
  double kkt_tol = 1e-10;
  int kkt_max_iter = 200;
  bool uniform = false;          // bisect everything instead of marking
  bool compute_errors = true;
  int reference_gap = 2;         // extra uniform refinements for reference errors
  bool keep_levels = true;       // retain solutions for the axiom checks
  EstimatorOptions estimator;

  void validate() const;
};

struct AfemLevelErrors {
  double energy_y = std::numeric_limits<double>::quiet_NaN();
  double energy_p = std::numeric_limits<double>::quiet_NaN();
  double l2_y = std::numeric_limits<double>::quiet_NaN();
  double l2_p = std::numeric_limits<double>::quiet_NaN();
  double l2_r = std::numeric_limits<double>::quiet_NaN();
  double l2_s = std::numeric_limits<double>::quiet_NaN();
  double l2_u = std::numeric_limits<double>::quiet_NaN();
};

struct AfemTraceRow {
  int level = 0;
  int nelem = 0;
  int ndof = 0;
  double eta = 0.0;
  double mu = 0.0;
  double osc = 0.0;
  double delta_next = std::numeric_limits<double>::quiet_NaN();
  AfemLevelErrors err;
  int marked = 0;
  double seconds = 0.0;
};

struct AfemTrace {
  std::vector<AfemTraceRow> rows;
  bool failed = false;
  std::string failure;
};

struct AfemLevel {
  std::shared_ptr<const Mesh> mesh;
  KktSolution sol;
  EstimatorReport report;
  RefinementRelation to_next;  // valid when has_next
  bool has_next = false;
};

struct AfemRun {
  AfemTrace trace;
  std::vector<AfemLevel> levels;  // populated when cfg.keep_levels
};

// Minimal-cardinality greedy Doerfler marking on squared indicators: descending
// sort (ties by ascending element id), shortest prefix reaching theta * total.
std::vector<int> dorfler_mark(const Eigen::VectorXd& indicators, double theta);

// SOLVE -> ESTIMATE -> MARK -> REFINE on the case's domain
AfemRun afem_run(const ManufacturedCase& mc, const AfemConfig& cfg);

// least-squares slope of log y against log x over the last max(3, ceil(n/2))
// points; two points fall back to the exact log ratio
double rate_fit(const std::vector<double>& xs, const std::vector<double>& ys);

void write_trace_csv(std::ostream& os, const AfemTrace& trace, bool include_seconds);

}  // namespace crstokes
