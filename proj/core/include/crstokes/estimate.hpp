#pragma once

#include "crstokes/control.hpp"

namespace crstokes {

struct EstimatorOptions {
  // include the tangential trace of the broken gradient on boundary edges
  // (consistent with homogeneous Dirichlet data)
  bool boundary_tangential = true;
};

// all entries are squared quantities
struct EstimatorReport {
  Eigen::VectorXd eta_s_vol, eta_s_edge;  // h_K^2 ||f+u||^2, sum_E h_K ||[grad y . t]||^2
  Eigen::VectorXd eta_a_vol, eta_a_edge;  // h_K^2 ||y-y_d||^2, adjoint jumps
  Eigen::VectorXd osc_f, osc_yd;
  double eta2_total = 0.0;
  double mu2_total = 0.0;
  double osc2_total = 0.0;

  double eta2_elem(int k) const {
    return eta_s_vol[k] + eta_s_edge[k] + eta_a_vol[k] + eta_a_edge[k];
  }
  double mu2_elem(int k) const { return eta_s_vol[k] + eta_a_vol[k]; }
  double eta2_of(const std::vector<int>& elems) const;
  double mu2_of(const std::vector<int>& elems) const;
  Eigen::VectorXd combined() const;  // per-element eta^2, the marking quantity
};

std::vector<std::pair<double, double>> state_indicators(const KktSolution& sol,
                                                        const ProblemData& data,
                                                        const EstimatorOptions& opts = {});
std::vector<std::pair<double, double>> adjoint_indicators(const KktSolution& sol,
                                                          const ProblemData& data,
                                                          const EstimatorOptions& opts = {});
std::pair<Eigen::VectorXd, Eigen::VectorXd> oscillations(const KktSolution& sol,
                                                         const ProblemData& data);

EstimatorReport estimate(const KktSolution& sol, const ProblemData& data,
                         const EstimatorOptions& opts = {});

// broken-energy distance between the solutions on a mesh and a refinement:
// delta^2 = |y_hat - y|^2_pw + |p_hat - p|^2_pw evaluated on the fine mesh
double distance(const KktSolution& coarse, const KktSolution& fine, const RefinementRelation& rel);

// residual estimator for one Stokes solve with load g
double eta_aux(const CrField& vel, const P0Field& pres, const VecField& g,
               const SmoothTest& g_smooth = {}, const EstimatorOptions& opts = {});

void write_indicators_csv(std::ostream& os, const EstimatorReport& report, int level,
                          bool header = true);

}  // namespace crstokes
