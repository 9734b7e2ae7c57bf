#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <random>

#include "crstokes/poly2.hpp"
#include "crstokes/quadrature.hpp"

using namespace crstokes;

namespace {
Poly2 random_poly(int degree, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  Poly2 p;
  for (int i = 0; i <= degree; ++i)
    for (int j = 0; i + j <= degree; ++j) p.add_term(i, j, dist(rng));
  return p;
}
}  // namespace

TEST_CASE("exact triangle integrals of monomials") {
  const Vec2 p0{0, 0}, p1{1, 0}, p2{0, 1};
  CHECK(Poly2::constant(1.0).integrate_triangle(p0, p1, p2) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(Poly2::var_x().integrate_triangle(p0, p1, p2) == doctest::Approx(1.0 / 6).epsilon(1e-14));
  CHECK((Poly2::var_x() * Poly2::var_y()).integrate_triangle(p0, p1, p2) ==
        doctest::Approx(1.0 / 24).epsilon(1e-13));
  // translation invariance of the constant part
  const Vec2 q0{2, 1}, q1{3, 1.5}, q2{2.2, 2};
  CHECK(Poly2::constant(3.0).integrate_triangle(q0, q1, q2) ==
        doctest::Approx(3.0 * triangle_area(q0, q1, q2)).epsilon(1e-13));
}

TEST_CASE("derivatives and laplacian") {
  const Poly2 x = Poly2::var_x(), y = Poly2::var_y();
  const Poly2 p = x * x * y + y * y * y * 2.0;
  CHECK(p.dx().eval(1.5, 2.0) == doctest::Approx(2 * 1.5 * 2.0));
  CHECK(p.dy().eval(1.5, 2.0) == doctest::Approx(1.5 * 1.5 + 6.0 * 4.0));
  CHECK(p.laplacian().eval(0.3, 0.7) == doctest::Approx(2 * 0.7 + 12 * 0.7));
  const Vec2Poly v = curl(x * x * y * y);
  CHECK(v.divergence().empty());
}

TEST_CASE("triangle rules are exact up to their degree") {
  std::mt19937_64 rng(42);
  const Vec2 p0{0.1, 0.2}, p1{1.4, 0.3}, p2{0.5, 1.2};
  const std::array<Vec2, 3> c{p0, p1, p2};
  const double area = triangle_area(p0, p1, p2);

  auto check_rule = [&](const TriRule& rule, int degree, double tol) {
    for (int rep = 0; rep < 4; ++rep) {
      const Poly2 p = random_poly(degree, rng);
      const double exact = p.integrate_triangle(p0, p1, p2);
      const double quad = rule.integrate(c, area, [&](const Vec2& x) { return p.eval(x); });
      CHECK(quad == doctest::Approx(exact).epsilon(tol));
    }
  };
  check_rule(tri_rule_deg2(), 2, 1e-13);
  check_rule(tri_rule_deg4(), 4, 1e-12);
  check_rule(tri_rule_conical(5), 8, 1e-12);
  check_rule(tri_rule_errors(), 16, 1e-11);
}

TEST_CASE("gauss points integrate polynomials on [0,1]") {
  for (int n : {1, 2, 3, 5, 9}) {
    const auto& pts = gauss_points(n);
    double wsum = 0;
    for (const auto& p : pts) wsum += p.w;
    CHECK(wsum == doctest::Approx(1.0).epsilon(1e-14));
    for (int k = 0; k <= 2 * n - 1; ++k) {
      double s = 0;
      for (const auto& p : pts) s += p.w * std::pow(p.t, k);
      CHECK(s == doctest::Approx(1.0 / (k + 1)).epsilon(1e-12));
    }
  }
}

TEST_CASE("adaptive quadrature resolves a kink") {
  // integrate max(0, x - 1/2) over the unit right triangle (0,0),(1,0),(0,1);
  // closed form: int_{1/2}^{1} (x - 1/2)(1 - x) dx = 1/48
  const std::array<Vec2, 3> c{Vec2{0, 0}, Vec2{1, 0}, Vec2{0, 1}};
  auto smooth = [](const std::array<Vec2, 3>& t) {
    bool low = true, high = true;
    for (const auto& p : t) {
      low &= p.x <= 0.5;
      high &= p.x >= 0.5;
    }
    return low || high;
  };
  auto f = [](const Vec2& p) { return std::max(0.0, p.x - 0.5); };
  const double v = integrate_adaptive(c, smooth, f, tri_rule_deg4(), 12);
  CHECK(v == doctest::Approx(1.0 / 48).epsilon(1e-10));
  // depth 4 is the production setting; it already lands close
  const double v4 = integrate_adaptive(c, smooth, f, tri_rule_deg4(), 4);
  CHECK(v4 == doctest::Approx(1.0 / 48).epsilon(1e-4));
}
