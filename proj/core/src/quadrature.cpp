#include "crstokes/quadrature.hpp"

#include <cmath>
#include <map>
#include <stdexcept>

namespace crstokes {

namespace {

// Gauss-Legendre nodes/weights on [-1,1] by Newton iteration, mapped to [0,1]
std::vector<GaussPoint> compute_gauss(int n) {
  std::vector<GaussPoint> pts(n);
  for (int i = 0; i < n; ++i) {
    double x = std::cos(M_PI * (i + 0.75) / (n + 0.5));
    double p0 = 0, p1 = 0;
    for (int it = 0; it < 100; ++it) {
      p0 = 1.0;
      p1 = 0.0;
      for (int j = 0; j < n; ++j) {
        const double p2 = p1;
        p1 = p0;
        p0 = ((2.0 * j + 1.0) * x * p1 - j * p2) / (j + 1);
      }
      const double dp = n * (x * p0 - p1) / (x * x - 1.0);
      const double dx = p0 / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    p1 = 0.0;
    p0 = 1.0;
    for (int j = 0; j < n; ++j) {
      const double p2 = p1;
      p1 = p0;
      p0 = ((2.0 * j + 1.0) * x * p1 - j * p2) / (j + 1);
    }
    const double dp = n * (x * p0 - p1) / (x * x - 1.0);
    pts[i].t = 0.5 * (x + 1.0);
    pts[i].w = 1.0 / ((1.0 - x * x) * dp * dp);  // weight/2 relative to [-1,1]
  }
  return pts;
}

}  // namespace

const std::vector<GaussPoint>& gauss_points(int n) {
  static std::map<int, std::vector<GaussPoint>> cache;
  auto it = cache.find(n);
  if (it == cache.end()) it = cache.emplace(n, compute_gauss(n)).first;
  return it->second;
}

const TriRule& tri_rule_deg2() {
  static const TriRule rule{{
      {0.5, 0.5, 0.0, 1.0 / 3.0},
      {0.0, 0.5, 0.5, 1.0 / 3.0},
      {0.5, 0.0, 0.5, 1.0 / 3.0},
  }};
  return rule;
}

const TriRule& tri_rule_deg4() {
  static const TriRule rule = [] {
    TriRule r;
    const double a1 = 0.445948490915965, w1 = 0.223381589678011;
    const double a2 = 0.091576213509771, w2 = 0.109951743655322;
    for (const auto [a, w] : {std::pair{a1, w1}, std::pair{a2, w2}}) {
      const double b = 1.0 - 2.0 * a;
      r.points.push_back({b, a, a, w});
      r.points.push_back({a, b, a, w});
      r.points.push_back({a, a, b, w});
    }
    return r;
  }();
  return rule;
}

const TriRule& tri_rule_conical(int n) {
  static std::map<int, TriRule> cache;
  auto it = cache.find(n);
  if (it == cache.end()) {
    TriRule r;
    const auto& g = gauss_points(n);
    // Duffy map: l1 = u, l2 = v (1-u); jacobian relative to |K| is 2 (1-u)
    for (const auto& pu : g)
      for (const auto& pv : g) {
        const double l1 = pu.t;
        const double l2 = pv.t * (1.0 - pu.t);
        r.points.push_back({1.0 - l1 - l2, l1, l2, 2.0 * pu.w * pv.w * (1.0 - pu.t)});
      }
    it = cache.emplace(n, std::move(r)).first;
  }
  return it->second;
}

const TriRule& tri_rule_errors() { return tri_rule_conical(9); }

void for_each_adaptive_point(const std::array<Vec2, 3>& corners,
                             const std::function<bool(const std::array<Vec2, 3>&)>& smooth,
                             const std::function<void(const Vec2&, double)>& sink,
                             const TriRule& rule, int max_depth) {
  if (max_depth <= 0 || smooth(corners)) {
    const double area = triangle_area(corners[0], corners[1], corners[2]);
    for (const auto& q : rule.points)
      sink(q.l0 * corners[0] + q.l1 * corners[1] + q.l2 * corners[2], q.w * area);
    return;
  }
  const Vec2 m01 = midpoint(corners[0], corners[1]);
  const Vec2 m12 = midpoint(corners[1], corners[2]);
  const Vec2 m20 = midpoint(corners[2], corners[0]);
  for_each_adaptive_point({corners[0], m01, m20}, smooth, sink, rule, max_depth - 1);
  for_each_adaptive_point({m01, corners[1], m12}, smooth, sink, rule, max_depth - 1);
  for_each_adaptive_point({m20, m12, corners[2]}, smooth, sink, rule, max_depth - 1);
  for_each_adaptive_point({m01, m12, m20}, smooth, sink, rule, max_depth - 1);
}

double integrate_adaptive(const std::array<Vec2, 3>& corners,
                          const std::function<bool(const std::array<Vec2, 3>&)>& smooth,
                          const std::function<double(const Vec2&)>& f, const TriRule& rule,
                          int max_depth) {
  double s = 0.0;
  for_each_adaptive_point(corners, smooth, [&](const Vec2& x, double w) { s += w * f(x); }, rule,
                          max_depth);
  return s;
}

}  // namespace crstokes
