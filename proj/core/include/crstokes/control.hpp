#pragma once

#include <optional>

#include "crstokes/stokes.hpp"

namespace crstokes {

// componentwise min(b, max(a, v))
Vec2 clamp(const Vec2& v, const Vec2& ua, const Vec2& ub);

struct ProblemData {
  VecField f;
  VecField y_d;
  double alpha = 0.01;
  Vec2 ua{-0.2, -0.2};
  Vec2 ub{0.2, 0.2};
  // optional kink predicates for non-smooth data (manufactured forcing terms
  // contain a projection); empty means globally smooth
  SmoothTest f_smooth;
  SmoothTest yd_smooth;

  void validate() const;
};

// Variational control: the control never gets its own basis; it is evaluated
// pointwise as a convex blend of projections of adjoint snapshots,
//   u(x) = sum_i w_i clamp(-p_i(x) / alpha),  sum_i w_i = 1.
// The converged control is a single-term blend of the final adjoint.
class ClampedField {
 public:
  struct Term {
    double weight;
    CrField adjoint;
  };

  std::vector<Term> terms;
  double alpha = 1.0;
  Vec2 ua, ub;
  std::shared_ptr<const CrSpace> space;

  static ClampedField zero(std::shared_ptr<const CrSpace> space, double alpha, Vec2 ua, Vec2 ub);
  static ClampedField pure(CrField adjoint, double alpha, Vec2 ua, Vec2 ub);

  Vec2 eval(int elem, const Vec2& x) const;
  // true when every term is free of clamp kinks on the sub-triangle (checked
  // per component at the corners and edge midpoints; exact for affine terms)
  bool smooth_on(int elem, const std::array<Vec2, 3>& corners) const;
  // u := (1 - omega) u + omega clamp(-p/alpha)
  void blend_in(double omega, const CrField& p);
};

// int_Omega u . phi_i over the test space; when the control lives on a coarser
// mesh, rel maps test-space elements to their ancestors. Elements crossed by a
// clamp kink are integrated on a uniform subdivision of depth up to 4.
Eigen::VectorXd assemble_clamped_load(const CrSpace& test_space, const ClampedField& u,
                                      const RefinementRelation* rel = nullptr);

// || u - clamp(-p/alpha) ||_{L2}
double clamped_residual(const ClampedField& u, const CrField& p);
// || u - v ||_{L2} for two blends on (possibly different, nested) meshes
double clamped_distance(const ClampedField& u, const ClampedField& v,
                        const RefinementRelation* rel_u = nullptr,
                        const RefinementRelation* rel_v = nullptr,
                        std::shared_ptr<const Mesh> mesh = nullptr);
// || u - g ||_{L2} against an analytic field with known kink structure
double clamped_distance_to(const ClampedField& u, const VecField& g,
                           const std::function<bool(const std::array<Vec2, 3>&)>& g_smooth);
double l2_norm(const ClampedField& u);

struct KktIterate {
  double vi_residual;
  double omega;
  double objective;
};

struct KktSolution {
  CrField state;
  P0Field pressure;
  CrField adjoint;
  P0Field adjoint_pressure;
  ClampedField control;
  std::vector<KktIterate> iterations;
  bool used_active_set = false;
};

struct KktFailure : std::runtime_error {
  explicit KktFailure(const std::string& what, std::vector<double> residuals_)
      : std::runtime_error(what), residuals(std::move(residuals_)) {}
  std::vector<double> residuals;
};

// Damped fixed point on u = clamp(-p(u)/alpha) with one shared factorization
// for the two Stokes solves per sweep; falls back to a primal-dual active-set
// loop with per-quadrature-point masks when the damped iteration stalls.
KktSolution solve_kkt(const ProblemData& data, std::shared_ptr<const Mesh> mesh, double tol = 1e-10,
                      int max_iter = 200);

// || u - clamp(-p/alpha) ||_{L2} of a solution, the computable optimality defect
double vi_residual(const KktSolution& sol);

double objective_value(const CrField& state, const ClampedField& control, const ProblemData& data);

// Oracle for wide bounds: eliminate u = -p/alpha and solve the coupled linear
// system directly (velocity mass assembled exactly).
KktSolution solve_kkt_unconstrained_linear(const ProblemData& data, std::shared_ptr<const Mesh> mesh);

void write_solution_csv(std::ostream& os, const KktSolution& sol);

}  // namespace crstokes
