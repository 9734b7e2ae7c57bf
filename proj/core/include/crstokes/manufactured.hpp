#pragma once

#include <optional>
#include <string>

#include "crstokes/control.hpp"
#include "crstokes/poly2.hpp"

namespace crstokes {

// Closed-form problem instance. For the control cases the quintuple
// (y, r, p, s, u) with u = clamp(-p/alpha) satisfies the optimality system by
// construction: f := -lap(y) + grad(r) - u and y_d := y + lap(p) + grad(s).
struct ManufacturedCase {
  std::string id;
  DomainSpec domain;
  double alpha = 0.1;
  Vec2 ua{-0.2, -0.2};
  Vec2 ub{0.2, 0.2};

  bool pure_stokes = false;      // plain Stokes solve, no control coupling
  bool has_closed_forms = false;

  Vec2Poly y_exact, p_exact;
  Poly2 r_exact, s_exact;
  Vec2Poly f_poly;   // smooth part of the forcing: -lap(y) + grad(r)
  Vec2Poly yd_poly;  // desired state (control cases)

  ProblemData data() const;
  VecField stokes_load() const;  // f_poly as a field (pure Stokes)
  // exact control and the kink predicate of its projection
  VecField exact_control() const;
  SmoothTest control_smooth() const;

  // max pointwise residual of the strong optimality system on a sample grid;
  // validates the symbolic construction and the sign conventions
  double strong_residual(int samples_per_axis = 64) const;
};

ManufacturedCase manufactured_problem(const std::string& id,
                                      std::optional<double> alpha = std::nullopt,
                                      std::optional<Vec2> ua = std::nullopt,
                                      std::optional<Vec2> ub = std::nullopt);

struct ExactErrors {
  double energy_y = 0, energy_p = 0;
  double l2_y = 0, l2_p = 0, l2_r = 0, l2_s = 0, l2_u = 0;
};

// errors of a discrete solution against the closed forms (high-order rule,
// exact for the polynomial parts)
ExactErrors manufactured_errors(const ManufacturedCase& mc, const KktSolution& sol);
// Stokes-only variant
ExactErrors manufactured_errors(const ManufacturedCase& mc, const StokesSolution& sol);

}  // namespace crstokes
