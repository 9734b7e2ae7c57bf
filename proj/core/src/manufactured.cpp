#include "crstokes/manufactured.hpp"

#include <cmath>
#include <stdexcept>

namespace crstokes {

namespace {

Poly2 bump_1d(bool in_x) {
  // t^2 (1-t)^2
  const Poly2 t = in_x ? Poly2::var_x() : Poly2::var_y();
  const Poly2 one = Poly2::constant(1.0);
  const Poly2 b = t * (one - t);
  return b * b;
}

// 6-sample kink predicate for the projection of an analytic field
SmoothTest clamp_kink_test(const std::function<Vec2(const Vec2&)>& unclamped, Vec2 ua, Vec2 ub) {
  return [=](const std::array<Vec2, 3>& c) {
    const std::array<Vec2, 6> pts{c[0], c[1], c[2], midpoint(c[0], c[1]), midpoint(c[1], c[2]),
                                  midpoint(c[2], c[0])};
    std::array<Vec2, 6> g;
    for (int i = 0; i < 6; ++i) g[i] = unclamped(pts[i]);
    for (int comp = 0; comp < 2; ++comp) {
      const double lo = comp == 0 ? ua.x : ua.y;
      const double hi = comp == 0 ? ub.x : ub.y;
      bool inside = true, low = true, high = true;
      for (int i = 0; i < 6; ++i) {
        const double v = g[i][comp];
        inside &= (v > lo && v < hi);
        low &= (v <= lo);
        high &= (v >= hi);
      }
      if (!(inside || low || high)) return false;
    }
    return true;
  };
}

}  // namespace

ProblemData ManufacturedCase::data() const {
  ProblemData d;
  d.alpha = alpha;
  d.ua = ua;
  d.ub = ub;
  const Vec2Poly fp = f_poly;
  if (has_closed_forms && !pure_stokes) {
    const Vec2Poly pe = p_exact;
    const double a = alpha;
    const Vec2 lo = ua, hi = ub;
    d.f = [fp, pe, a, lo, hi](const Vec2& x) {
      return fp.eval(x) - clamp(pe.eval(x) * (-1.0 / a), lo, hi);
    };
    d.f_smooth = control_smooth();
  } else {
    d.f = [fp](const Vec2& x) { return fp.eval(x); };
  }
  const Vec2Poly yd = yd_poly;
  d.y_d = [yd](const Vec2& x) { return yd.eval(x); };
  return d;
}

VecField ManufacturedCase::stokes_load() const {
  const Vec2Poly fp = f_poly;
  return [fp](const Vec2& x) { return fp.eval(x); };
}

VecField ManufacturedCase::exact_control() const {
  const Vec2Poly pe = p_exact;
  const double a = alpha;
  const Vec2 lo = ua, hi = ub;
  return [pe, a, lo, hi](const Vec2& x) { return clamp(pe.eval(x) * (-1.0 / a), lo, hi); };
}

SmoothTest ManufacturedCase::control_smooth() const {
  const Vec2Poly pe = p_exact;
  const double a = alpha;
  return clamp_kink_test([pe, a](const Vec2& x) { return pe.eval(x) * (-1.0 / a); }, ua, ub);
}

double ManufacturedCase::strong_residual(int samples_per_axis) const {
  if (!has_closed_forms) return 0.0;
  const Vec2Poly lap_y = y_exact.laplacian();
  const Vec2Poly grad_r = gradient(r_exact);
  const Poly2 div_y = y_exact.divergence();
  const Vec2Poly lap_p = p_exact.laplacian();
  const Vec2Poly grad_s = gradient(s_exact);
  const Poly2 div_p = p_exact.divergence();
  const ProblemData d = data();
  const VecField uex = exact_control();

  double worst = 0.0;
  for (int i = 1; i < samples_per_axis; ++i) {
    for (int j = 1; j < samples_per_axis; ++j) {
      const Vec2 x{static_cast<double>(i) / samples_per_axis,
                   static_cast<double>(j) / samples_per_axis};
      const Vec2 mom = (Vec2{0, 0} - lap_y.eval(x)) + grad_r.eval(x) - d.f(x) -
                       (pure_stokes ? Vec2{0, 0} : uex(x));
      worst = std::max(worst, norm(mom));
      worst = std::max(worst, std::abs(div_y.eval(x)));
      if (!pure_stokes) {
        const Vec2 adj = (Vec2{0, 0} - lap_p.eval(x)) - grad_s.eval(x) -
                         (y_exact.eval(x) - d.y_d(x));
        worst = std::max(worst, norm(adj));
        worst = std::max(worst, std::abs(div_p.eval(x)));
      }
    }
  }
  // homogeneous boundary values of the exact velocities
  for (int i = 0; i <= samples_per_axis; ++i) {
    const double t = static_cast<double>(i) / samples_per_axis;
    for (const Vec2 x : {Vec2{t, 0.0}, Vec2{t, 1.0}, Vec2{0.0, t}, Vec2{1.0, t}}) {
      worst = std::max(worst, norm(y_exact.eval(x)));
      if (!pure_stokes) worst = std::max(worst, norm(p_exact.eval(x)));
    }
  }
  return worst;
}

ManufacturedCase manufactured_problem(const std::string& id, std::optional<double> alpha,
                                      std::optional<Vec2> ua, std::optional<Vec2> ub) {
  ManufacturedCase mc;
  mc.id = id;
  const Poly2 one = Poly2::constant(1.0);
  const Poly2 x = Poly2::var_x();
  const Poly2 y = Poly2::var_y();
  const Poly2 bump = bump_1d(true) * bump_1d(false);  // x^2(1-x)^2 y^2(1-y)^2

  if (id == "stokes-square") {
    mc.domain = {DomainSpec::Kind::UnitSquare, 2, {}};
    mc.pure_stokes = true;
    mc.has_closed_forms = true;
    mc.alpha = 1.0;
    mc.y_exact = curl(bump);
    mc.r_exact = x * x * x * y * y * y - Poly2::constant(1.0 / 16.0);
    mc.f_poly = (Vec2Poly{} - mc.y_exact.laplacian()) + gradient(mc.r_exact);
  } else if (id == "ocp-square") {
    mc.domain = {DomainSpec::Kind::UnitSquare, 2, {}};
    mc.has_closed_forms = true;
    mc.alpha = alpha.value_or(0.1);
    mc.ua = ua.value_or(Vec2{-0.2, -0.2});
    mc.ub = ub.value_or(Vec2{0.2, 0.2});
    mc.y_exact = curl(bump);
    mc.p_exact = curl(bump * (x + y) * 5.0);
    mc.r_exact = x * x * x * y * y * y - Poly2::constant(1.0 / 16.0);
    mc.s_exact = x * x * y - Poly2::constant(1.0 / 6.0);
    mc.f_poly = (Vec2Poly{} - mc.y_exact.laplacian()) + gradient(mc.r_exact);
    mc.yd_poly = mc.y_exact + mc.p_exact.laplacian() + gradient(mc.s_exact);
    return mc;
  } else if (id == "ocp-lshape") {
    mc.domain = {DomainSpec::Kind::LShape, 1, {}};
    mc.has_closed_forms = false;
    mc.alpha = alpha.value_or(0.01);
    mc.ua = ua.value_or(Vec2{-0.5, -0.5});
    mc.ub = ub.value_or(Vec2{0.5, 0.5});
    // rotational forcing drives flow around the re-entrant corner
    mc.f_poly = Vec2Poly{y * 10.0, x * (-10.0)};
    mc.yd_poly = Vec2Poly{};
  } else {
    throw std::runtime_error("manufactured_problem: unknown case id '" + id + "'");
  }
  if (alpha) mc.alpha = *alpha;
  if (ua) mc.ua = *ua;
  if (ub) mc.ub = *ub;
  (void)one;
  return mc;
}

namespace {

struct FieldErrorAccum {
  double energy = 0.0;
  double l2 = 0.0;
};

FieldErrorAccum velocity_error(const Vec2Poly& exact, const CrField& fh) {
  const Mesh& mesh = *fh.space->mesh;
  const auto& rule = tri_rule_errors();
  const Vec2Poly gx{exact.x.dx(), exact.x.dy()};
  const Vec2Poly gy{exact.y.dx(), exact.y.dy()};
  FieldErrorAccum acc;
  for (int k = 0; k < mesh.num_triangles(); ++k) {
    const auto c = mesh.corners(k);
    const double area = mesh.area(k);
    const Mat2 g = element_gradient(fh, k);
    acc.energy += rule.integrate(c, area, [&](const Vec2& p) {
      const Vec2 r0 = gx.eval(p) - Vec2{g.a00, g.a01};
      const Vec2 r1 = gy.eval(p) - Vec2{g.a10, g.a11};
      return norm2(r0) + norm2(r1);
    });
    acc.l2 += rule.integrate(c, area, [&](const Vec2& p) {
      return norm2(exact.eval(p) - element_value(fh, k, p));
    });
  }
  return acc;
}

double pressure_error(const Poly2& exact, const P0Field& ph) {
  const Mesh& mesh = *ph.space->mesh;
  const auto& rule = tri_rule_errors();
  double s = 0.0;
  for (int k = 0; k < mesh.num_triangles(); ++k) {
    const double pk = ph.values[k];
    s += rule.integrate(mesh.corners(k), mesh.area(k), [&](const Vec2& p) {
      const double d = exact.eval(p) - pk;
      return d * d;
    });
  }
  return std::sqrt(s);
}

}  // namespace

ExactErrors manufactured_errors(const ManufacturedCase& mc, const KktSolution& sol) {
  if (!mc.has_closed_forms) throw std::runtime_error("manufactured_errors: case has no closed forms");
  ExactErrors e;
  const auto ye = velocity_error(mc.y_exact, sol.state);
  e.energy_y = std::sqrt(ye.energy);
  e.l2_y = std::sqrt(ye.l2);
  const auto pe = velocity_error(mc.p_exact, sol.adjoint);
  e.energy_p = std::sqrt(pe.energy);
  e.l2_p = std::sqrt(pe.l2);
  e.l2_r = pressure_error(mc.r_exact, sol.pressure);
  e.l2_s = pressure_error(mc.s_exact, sol.adjoint_pressure);
  e.l2_u = clamped_distance_to(sol.control, mc.exact_control(), mc.control_smooth());
  return e;
}

ExactErrors manufactured_errors(const ManufacturedCase& mc, const StokesSolution& sol) {
  if (!mc.has_closed_forms) throw std::runtime_error("manufactured_errors: case has no closed forms");
  ExactErrors e;
  const auto ye = velocity_error(mc.y_exact, sol.velocity);
  e.energy_y = std::sqrt(ye.energy);
  e.l2_y = std::sqrt(ye.l2);
  e.l2_r = pressure_error(mc.r_exact, sol.pressure);
  return e;
}

}  // namespace crstokes
