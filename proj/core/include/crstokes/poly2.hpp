#pragma once

#include <map>
#include <utility>

#include "crstokes/geometry.hpp"

namespace crstokes {

// Bivariate polynomial with exact coefficient arithmetic on doubles. Used for
// manufactured solutions and as the symbolic integration oracle in tests.
class Poly2 {
 public:
  Poly2() = default;
  static Poly2 constant(double c);
  static Poly2 monomial(int i, int j, double c = 1.0);
  static Poly2 var_x();
  static Poly2 var_y();

  Poly2 operator+(const Poly2& o) const;
  Poly2 operator-(const Poly2& o) const;
  Poly2 operator*(const Poly2& o) const;
  Poly2 operator*(double s) const;
  Poly2 operator-() const { return *this * -1.0; }

  Poly2 dx() const;
  Poly2 dy() const;
  Poly2 laplacian() const { return dx().dx() + dy().dy(); }

  double eval(double x, double y) const;
  double eval(const Vec2& p) const { return eval(p.x, p.y); }

  int degree() const;
  bool empty() const { return coeffs_.empty(); }

  // exact integral over the triangle (p0, p1, p2)
  double integrate_triangle(const Vec2& p0, const Vec2& p1, const Vec2& p2) const;

  const std::map<std::pair<int, int>, double>& terms() const { return coeffs_; }
  void add_term(int i, int j, double c);

 private:
  std::map<std::pair<int, int>, double> coeffs_;  // (i, j) -> coefficient of x^i y^j
};

// polynomial vector field
struct Vec2Poly {
  Poly2 x, y;

  Vec2 eval(const Vec2& p) const { return {x.eval(p), y.eval(p)}; }
  Poly2 divergence() const { return x.dx() + y.dy(); }
  Vec2Poly laplacian() const { return {x.laplacian(), y.laplacian()}; }
  Vec2Poly operator+(const Vec2Poly& o) const { return {x + o.x, y + o.y}; }
  Vec2Poly operator-(const Vec2Poly& o) const { return {x - o.x, y - o.y}; }
};

// (d/dy psi, -d/dx psi); divergence free by construction
inline Vec2Poly curl(const Poly2& psi) { return {psi.dy(), -psi.dx()}; }
inline Vec2Poly gradient(const Poly2& p) { return {p.dx(), p.dy()}; }

}  // namespace crstokes
