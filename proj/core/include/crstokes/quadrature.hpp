#pragma once

#include <array>
#include <functional>
#include <vector>

#include "crstokes/geometry.hpp"

namespace crstokes {

// quadrature point in barycentric coordinates; weights sum to 1, so the
// physical rule is sum_i w_i f(x_i) * |K|
struct TriQuadPoint {
  double l0, l1, l2, w;
};

struct TriRule {
  std::vector<TriQuadPoint> points;

  template <class F>
  double integrate(const std::array<Vec2, 3>& c, double area, F&& f) const {
    double s = 0.0;
    for (const auto& q : points) {
      const Vec2 x = q.l0 * c[0] + q.l1 * c[1] + q.l2 * c[2];
      s += q.w * f(x);
    }
    return s * area;
  }
};

// edge midpoints; exact for quadratics
const TriRule& tri_rule_deg2();
// 6-point rule, exact for quartics
const TriRule& tri_rule_deg4();
// conical-product Gauss rule with n^2 points, exact for total degree 2n-2
const TriRule& tri_rule_conical(int n);
// default high-order rule for error norms of manufactured solutions (degree 16)
const TriRule& tri_rule_errors();

// predicate deciding whether an integrand is kink-free on a sub-triangle
using SmoothTest = std::function<bool(const std::array<Vec2, 3>&)>;

struct GaussPoint {
  double t, w;  // on [0,1], weights sum to 1
};
const std::vector<GaussPoint>& gauss_points(int n);

// Adaptive triangle quadrature for integrands that are piecewise smooth with
// kink lines (projection/clamp compositions). `smooth` decides whether the
// integrand is a polynomial the base rule captures on the given sub-triangle;
// otherwise the triangle is quartered, up to max_depth.
double integrate_adaptive(const std::array<Vec2, 3>& corners,
                          const std::function<bool(const std::array<Vec2, 3>&)>& smooth,
                          const std::function<double(const Vec2&)>& f, const TriRule& rule,
                          int max_depth);

// same subdivision strategy, but hands (point, weight * area) pairs to a sink,
// for vector-valued accumulation
void for_each_adaptive_point(const std::array<Vec2, 3>& corners,
                             const std::function<bool(const std::array<Vec2, 3>&)>& smooth,
                             const std::function<void(const Vec2&, double)>& sink,
                             const TriRule& rule, int max_depth);

}  // namespace crstokes
