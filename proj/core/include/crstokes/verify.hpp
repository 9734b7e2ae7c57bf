#pragma once

#include <cstdint>

#include "crstokes/afem.hpp"

namespace crstokes {

struct CheckEntry {
  int level = 0;
  double lhs = 0.0;
  double rhs = 0.0;
  double ratio = 0.0;
};

struct AxiomCheck {
  std::string name;
  std::vector<CheckEntry> entries;
  double constant = 0.0;  // empirical Lambda-hat: max ratio
  double drift = 1.0;     // max/min ratio over the assessed window
  int attained_level = -1;
  bool pass = false;
  bool violation = false;  // structural violation (positive lhs over zero rhs)
};

struct AxiomReport {
  std::vector<AxiomCheck> checks;
  double lambda0 = 0.0, lambda1 = 0.0, lambda2 = 0.0, lambda3 = 0.0, lambda4 = 0.0;
  double rho2 = 0.0;
  bool all_pass() const;
};

// (A1): |eta_hat(T cap T_hat) - eta(T cap T_hat)| <= Lambda1 delta
AxiomCheck check_axiom_stability(const AfemRun& run, double drift_limit = 3.0, int window = 5);
// mu variant with the extra factor h
AxiomCheck check_axiom_stability_mu(const AfemRun& run, double drift_limit = 3.0, int window = 5);
// (A2): eta_hat(new) <= rho2 eta(refined) + Lambda2 delta, rho2 = 2^(-1/4)
AxiomCheck check_axiom_reduction(const AfemRun& run, double drift_limit = 3.0, int window = 5);
// mu variant with factor 2^(-1/2) and slack h Lambda0 delta
AxiomCheck check_axiom_reduction_mu(const AfemRun& run, double drift_limit = 3.0, int window = 5);
// (A3): delta^2 <= Lambda3 eta^2(R(T, T_hat)) over the vertex patch of the refined set
AxiomCheck check_discrete_reliability(const AfemRun& run, double drift_limit = 3.0, int window = 5);
// (A4): sum_{k>=l} delta_k^2 <= Lambda4 eta_l^2, plus the epsilon-relaxed form
AxiomCheck check_quasi_orthogonality(const AfemRun& run, double drift_limit = 3.0, int window = 5);
AxiomCheck check_quasi_orthogonality_eps(const AfemRun& run, double eps, double drift_limit = 3.0,
                                         int window = 5);

AxiomReport check_axioms(const AfemRun& run, double drift_limit = 3.0, int window = 5);

struct RatioCheck;
void write_axiom_json(std::ostream& os, const AxiomReport& report, const std::string& config_line,
                      const std::vector<RatioCheck>* extras = nullptr);

struct EquivalenceItem {
  double lhs = 0.0;
  double rhs = 0.0;
  double ratio_lr = 1.0;
  double ratio_rl = 1.0;
};

struct EquivalenceReport {
  int level = 0;
  int ndof = 0;
  std::array<EquivalenceItem, 4> items;
};

// Evaluates the four error-equivalence identities on one mesh. Continuous
// solutions are surrogated by the closed forms; the auxiliary problems are
// solved `ref_gap` uniform refinements finer with data from the coarse
// discrete solution. Items 3-4 use one uniform refinement as T_hat.
EquivalenceReport check_error_equivalence(const ManufacturedCase& mc,
                                          std::shared_ptr<const Mesh> mesh, int ref_gap = 2);

void write_equivalence_json(std::ostream& os, const std::vector<EquivalenceReport>& reports,
                            const std::string& config_line);

struct RateRow {
  double h = 0.0;
  int ndof = 0;
  ExactErrors err;
};

struct RateTable {
  std::string case_id;
  std::vector<RateRow> rows;
  // fitted slopes against h
  double rate_energy_y = 0.0;    // broken energy of the state/velocity
  double rate_energy_sum = 0.0;  // five-term energy-type sum
  double rate_l2_y = 0.0;
  double rate_l2_uyp = 0.0;  // L2 sum over control and the two velocities
  double rate_l2_all = 0.0;  // five-term L2 sum (pressures converge first order)
};

// uniform-refinement study against the closed forms
RateTable check_apriori_rates(const ManufacturedCase& mc, int levels);

void write_rates_csv(std::ostream& os, const RateTable& table, const std::string& config_line);

struct RatioCheck {
  std::string name;
  std::vector<double> per_level;  // max ratio per level
  double overall = 0.0;
  double drift = 1.0;
  bool pass = false;
  std::uint64_t seed = 0;
};

// ||v|| <= C |v|_pw for random CR fields and cross-mesh differences
RatioCheck check_embedding_ratios(const DomainSpec& domain, int levels, int samples,
                                  std::uint64_t seed, double drift_limit = 3.0);
// solution-to-data ratio of the discrete (auxiliary) problems under both couplings
RatioCheck check_stability_bounds(const ManufacturedCase& mc, int levels, double drift_limit = 3.0);
// sum_K |K|^(1/2) sum_E ||[g]||^2 <= C^2 ||g||^2 for random piecewise affine g
RatioCheck check_discrete_jump_control(const DomainSpec& domain, int levels, int samples,
                                       std::uint64_t seed, double drift_limit = 2.0);

// random CR field with unit-interval coefficients on the free dofs
CrField random_cr_field(std::shared_ptr<const CrSpace> space, std::uint64_t seed);

}  // namespace crstokes
