#include "crstokes/poly2.hpp"

#include <cmath>
#include <vector>

namespace crstokes {

namespace {
// integral of s^a t^b over the reference simplex {s,t >= 0, s+t <= 1}
double simplex_moment(int a, int b) {
  // a! b! / (a+b+2)!
  double v = 1.0;
  for (int i = 1; i <= b; ++i) v *= static_cast<double>(i) / (a + i);
  for (int i = a + b + 1; i <= a + b + 2; ++i) v /= i;
  return v;
}
}  // namespace

Poly2 Poly2::constant(double c) {
  Poly2 p;
  p.add_term(0, 0, c);
  return p;
}

Poly2 Poly2::monomial(int i, int j, double c) {
  Poly2 p;
  p.add_term(i, j, c);
  return p;
}

Poly2 Poly2::var_x() { return monomial(1, 0); }
Poly2 Poly2::var_y() { return monomial(0, 1); }

void Poly2::add_term(int i, int j, double c) {
  if (c == 0.0) return;
  auto key = std::make_pair(i, j);
  auto it = coeffs_.find(key);
  if (it == coeffs_.end()) {
    coeffs_.emplace(key, c);
  } else {
    it->second += c;
    if (it->second == 0.0) coeffs_.erase(it);
  }
}

Poly2 Poly2::operator+(const Poly2& o) const {
  Poly2 r = *this;
  for (const auto& [k, c] : o.coeffs_) r.add_term(k.first, k.second, c);
  return r;
}

Poly2 Poly2::operator-(const Poly2& o) const {
  Poly2 r = *this;
  for (const auto& [k, c] : o.coeffs_) r.add_term(k.first, k.second, -c);
  return r;
}

Poly2 Poly2::operator*(const Poly2& o) const {
  Poly2 r;
  for (const auto& [ka, ca] : coeffs_)
    for (const auto& [kb, cb] : o.coeffs_) r.add_term(ka.first + kb.first, ka.second + kb.second, ca * cb);
  return r;
}

Poly2 Poly2::operator*(double s) const {
  Poly2 r;
  if (s == 0.0) return r;
  for (const auto& [k, c] : coeffs_) r.add_term(k.first, k.second, c * s);
  return r;
}

Poly2 Poly2::dx() const {
  Poly2 r;
  for (const auto& [k, c] : coeffs_)
    if (k.first > 0) r.add_term(k.first - 1, k.second, c * k.first);
  return r;
}

Poly2 Poly2::dy() const {
  Poly2 r;
  for (const auto& [k, c] : coeffs_)
    if (k.second > 0) r.add_term(k.first, k.second - 1, c * k.second);
  return r;
}

double Poly2::eval(double x, double y) const {
  if (coeffs_.empty()) return 0.0;
  int dx = 0, dy = 0;
  for (const auto& [k, c] : coeffs_) {
    dx = std::max(dx, k.first);
    dy = std::max(dy, k.second);
  }
  double xp[32], yp[32];
  xp[0] = yp[0] = 1.0;
  for (int i = 1; i <= dx && i < 32; ++i) xp[i] = xp[i - 1] * x;
  for (int j = 1; j <= dy && j < 32; ++j) yp[j] = yp[j - 1] * y;
  double s = 0.0;
  if (dx < 32 && dy < 32) {
    for (const auto& [k, c] : coeffs_) s += c * xp[k.first] * yp[k.second];
  } else {
    for (const auto& [k, c] : coeffs_) s += c * std::pow(x, k.first) * std::pow(y, k.second);
  }
  return s;
}

int Poly2::degree() const {
  int d = 0;
  for (const auto& [k, c] : coeffs_) d = std::max(d, k.first + k.second);
  return d;
}

double Poly2::integrate_triangle(const Vec2& p0, const Vec2& p1, const Vec2& p2) const {
  // substitute x = p0 + s*(p1-p0) + t*(p2-p0) and integrate over the reference simplex
  const Poly2 s = var_x(), t = var_y();
  const Poly2 xm = constant(p0.x) + s * (p1.x - p0.x) + t * (p2.x - p0.x);
  const Poly2 ym = constant(p0.y) + s * (p1.y - p0.y) + t * (p2.y - p0.y);

  const int d = degree();
  std::vector<Poly2> xpow(d + 1), ypow(d + 1);
  xpow[0] = constant(1.0);
  ypow[0] = constant(1.0);
  for (int i = 1; i <= d; ++i) {
    xpow[i] = xpow[i - 1] * xm;
    ypow[i] = ypow[i - 1] * ym;
  }
  Poly2 composed;
  for (const auto& [k, c] : coeffs_) composed = composed + xpow[k.first] * ypow[k.second] * c;

  double integral = 0.0;
  for (const auto& [k, c] : composed.terms()) integral += c * simplex_moment(k.first, k.second);
  const double jac = 2.0 * triangle_area(p0, p1, p2);
  return integral * jac;
}

}  // namespace crstokes
