#pragma once

#include <array>
#include <cmath>

namespace crstokes {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  Vec2() = default;
  Vec2(double x_, double y_) : x(x_), y(y_) {}

  Vec2 operator+(const Vec2& o) const { return {x + o.x, y + o.y}; }
  Vec2 operator-(const Vec2& o) const { return {x - o.x, y - o.y}; }
  Vec2 operator*(double s) const { return {x * s, y * s}; }
  Vec2 operator/(double s) const { return {x / s, y / s}; }
  Vec2& operator+=(const Vec2& o) { x += o.x; y += o.y; return *this; }
  Vec2& operator-=(const Vec2& o) { x -= o.x; y -= o.y; return *this; }
  double operator[](int i) const { return i == 0 ? x : y; }
};

inline Vec2 operator*(double s, const Vec2& v) { return {s * v.x, s * v.y}; }
inline double dot(const Vec2& a, const Vec2& b) { return a.x * b.x + a.y * b.y; }
inline double cross(const Vec2& a, const Vec2& b) { return a.x * b.y - a.y * b.x; }
inline double norm(const Vec2& a) { return std::sqrt(dot(a, a)); }
inline double norm2(const Vec2& a) { return dot(a, a); }
// counterclockwise rotation by 90 degrees
inline Vec2 perp(const Vec2& v) { return {-v.y, v.x}; }
inline Vec2 midpoint(const Vec2& a, const Vec2& b) { return {(a.x + b.x) / 2, (a.y + b.y) / 2}; }

// 2x2 matrix, row major; used for per-element gradients of vector fields
// (row i = gradient of component i).
struct Mat2 {
  double a00 = 0, a01 = 0, a10 = 0, a11 = 0;

  Vec2 operator*(const Vec2& v) const { return {a00 * v.x + a01 * v.y, a10 * v.x + a11 * v.y}; }
  Mat2 operator-(const Mat2& o) const { return {a00 - o.a00, a01 - o.a01, a10 - o.a10, a11 - o.a11}; }
  Mat2 operator+(const Mat2& o) const { return {a00 + o.a00, a01 + o.a01, a10 + o.a10, a11 + o.a11}; }
  Mat2 operator*(double s) const { return {a00 * s, a01 * s, a10 * s, a11 * s}; }
  double frobenius2() const { return a00 * a00 + a01 * a01 + a10 * a10 + a11 * a11; }
  double trace() const { return a00 + a11; }
};

inline double triangle_area(const Vec2& p0, const Vec2& p1, const Vec2& p2) {
  return 0.5 * cross(p1 - p0, p2 - p0);
}

}  // namespace crstokes
