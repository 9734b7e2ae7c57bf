#include "crstokes/femspace.hpp"

#include <cmath>
#include <cstdio>
#include <ostream>
#include <stdexcept>

namespace crstokes {

CrSpace::CrSpace(std::shared_ptr<const Mesh> m) : mesh(std::move(m)) {
  free_index.assign(num_dofs(), -1);
  for (int e = 0; e < mesh->num_edges(); ++e) {
    if (mesh->edges[e].boundary) continue;
    for (int c = 0; c < 2; ++c) {
      free_index[dof(e, c)] = static_cast<int>(free_dofs.size());
      free_dofs.push_back(dof(e, c));
    }
  }
}

Eigen::VectorXd CrSpace::restrict_free(const Eigen::VectorXd& full) const {
  Eigen::VectorXd r(num_free());
  for (int i = 0; i < num_free(); ++i) r[i] = full[free_dofs[i]];
  return r;
}

Eigen::VectorXd CrSpace::extend_full(const Eigen::VectorXd& free) const {
  Eigen::VectorXd full = Eigen::VectorXd::Zero(num_dofs());
  for (int i = 0; i < num_free(); ++i) full[free_dofs[i]] = free[i];
  return full;
}

std::array<Vec2, 3> barycentric_gradients(const Mesh& mesh, int k) {
  const auto c = mesh.corners(k);
  const double a2 = 2.0 * triangle_area(c[0], c[1], c[2]);
  std::array<Vec2, 3> g;
  for (int i = 0; i < 3; ++i) g[i] = perp(c[(i + 2) % 3] - c[(i + 1) % 3]) / a2;
  return g;
}

std::array<double, 3> barycentric(const Mesh& mesh, int k, const Vec2& x) {
  const auto c = mesh.corners(k);
  const double a2 = 2.0 * triangle_area(c[0], c[1], c[2]);
  std::array<double, 3> l;
  for (int i = 0; i < 3; ++i) l[i] = cross(c[(i + 2) % 3] - c[(i + 1) % 3], x - c[(i + 1) % 3]) / a2;
  return l;
}

Mat2 element_gradient(const CrField& f, int k) {
  const Mesh& mesh = *f.space->mesh;
  const auto lg = barycentric_gradients(mesh, k);
  Mat2 g;
  for (int i = 0; i < 3; ++i) {
    const int e = mesh.tri_edges[k][i];
    const Vec2 gphi = -2.0 * lg[i];  // gradient of 1 - 2*l_i
    g.a00 += f.dof(e, 0) * gphi.x;
    g.a01 += f.dof(e, 0) * gphi.y;
    g.a10 += f.dof(e, 1) * gphi.x;
    g.a11 += f.dof(e, 1) * gphi.y;
  }
  return g;
}

Vec2 evaluate(const CrField& f, int elem, const std::array<double, 3>& bary) {
  const Mesh& mesh = *f.space->mesh;
  Vec2 v{0, 0};
  for (int i = 0; i < 3; ++i) {
    const int e = mesh.tri_edges[elem][i];
    const double phi = 1.0 - 2.0 * bary[i];
    v.x += f.dof(e, 0) * phi;
    v.y += f.dof(e, 1) * phi;
  }
  return v;
}

Vec2 element_value(const CrField& f, int k, const Vec2& x) {
  return evaluate(f, k, barycentric(*f.space->mesh, k, x));
}

PiecewiseAffineField to_affine(const CrField& f) {
  const auto& mesh = f.space->mesh;
  PiecewiseAffineField a;
  a.mesh = mesh;
  const int nT = mesh->num_triangles();
  a.value_at_centroid.resize(nT);
  a.grad.resize(nT);
  for (int k = 0; k < nT; ++k) {
    a.grad[k] = element_gradient(f, k);
    a.value_at_centroid[k] = evaluate(f, k, {1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0});
  }
  return a;
}

PiecewiseAffineField prolong(const PiecewiseAffineField& coarse, const RefinementRelation& rel,
                             std::shared_ptr<const Mesh> fine) {
  if (rel.coarse_id != coarse.mesh->id || rel.fine_id != fine->id)
    throw std::runtime_error("prolong: relation does not match the meshes");
  PiecewiseAffineField out;
  out.mesh = fine;
  const int nF = fine->num_triangles();
  out.value_at_centroid.resize(nF);
  out.grad.resize(nF);
  for (int fidx = 0; fidx < nF; ++fidx) {
    const int k = rel.parent_of[fidx];
    out.grad[fidx] = coarse.grad[k];
    out.value_at_centroid[fidx] = coarse.eval(k, fine->centroid(fidx));
  }
  return out;
}

PiecewiseAffineField prolong(const CrField& coarse, const RefinementRelation& rel,
                             std::shared_ptr<const Mesh> fine) {
  return prolong(to_affine(coarse), rel, fine);
}

CrField interpolate(std::shared_ptr<const CrSpace> space, const VecField& source,
                    bool force_boundary_zero) {
  CrField f(space);
  const Mesh& mesh = *space->mesh;
  const auto& gauss = gauss_points(3);
  for (int e = 0; e < mesh.num_edges(); ++e) {
    if (force_boundary_zero && mesh.edges[e].boundary) continue;
    const Vec2 a = mesh.vertices[mesh.edges[e].a];
    const Vec2 b = mesh.vertices[mesh.edges[e].b];
    Vec2 mean{0, 0};
    for (const auto& g : gauss) mean += g.w * source(a + g.t * (b - a));
    f.coeffs[CrSpace::dof(e, 0)] = mean.x;
    f.coeffs[CrSpace::dof(e, 1)] = mean.y;
  }
  return f;
}

int locate_descendant(const Mesh& fine, const RefinementRelation& rel, int coarse_elem,
                      const Vec2& x) {
  int best = -1;
  double best_min = -1e300;
  for (int c : rel.children[coarse_elem]) {
    const auto l = barycentric(fine, c, x);
    const double m = std::min({l[0], l[1], l[2]});
    if (m > best_min) {
      best_min = m;
      best = c;
    }
  }
  if (best < 0 || best_min < -1e-9) throw std::runtime_error("locate_descendant: point not found");
  return best;
}

namespace {

// mean of a piecewise affine (per fine element) field over the segment [a, b];
// recursion bottoms out on the dyadic partition of the segment by the fine mesh
Vec2 segment_mean(const Mesh& fine, const RefinementRelation& rel, int coarse_elem, const Vec2& a,
                  const Vec2& b, const CrField& field, int depth) {
  if (depth > 48) throw std::runtime_error("segment_mean: recursion limit");
  const Vec2 m = midpoint(a, b);
  const int elem = locate_descendant(fine, rel, coarse_elem, m);
  const auto la = barycentric(fine, elem, a);
  const auto lb = barycentric(fine, elem, b);
  const double tol = -1e-12;
  const bool inside = std::min({la[0], la[1], la[2]}) >= tol && std::min({lb[0], lb[1], lb[2]}) >= tol;
  if (inside) return element_value(field, elem, m);  // affine: mean equals midpoint value
  const Vec2 left = segment_mean(fine, rel, coarse_elem, a, m, field, depth + 1);
  const Vec2 right = segment_mean(fine, rel, coarse_elem, m, b, field, depth + 1);
  return 0.5 * (left + right);
}

}  // namespace

CrField interpolate_from_fine(std::shared_ptr<const CrSpace> space, const CrField& fine,
                              const RefinementRelation& rel, bool force_boundary_zero) {
  const Mesh& coarse = *space->mesh;
  const Mesh& fmesh = *fine.space->mesh;
  if (rel.coarse_id != coarse.id || rel.fine_id != fmesh.id)
    throw std::runtime_error("interpolate_from_fine: relation does not match the meshes");
  CrField f(space);
  for (int e = 0; e < coarse.num_edges(); ++e) {
    if (force_boundary_zero && coarse.edges[e].boundary) continue;
    const Edge& edge = coarse.edges[e];
    const Vec2 mean = segment_mean(fmesh, rel, edge.tri[0], coarse.vertices[edge.a],
                                   coarse.vertices[edge.b], fine, 0);
    f.coeffs[CrSpace::dof(e, 0)] = mean.x;
    f.coeffs[CrSpace::dof(e, 1)] = mean.y;
  }
  return f;
}

Vec2 ConformingField::eval(int elem, const Vec2& x) const {
  const auto l = barycentric(*mesh, elem, x);
  const auto& t = mesh->triangles[elem];
  Vec2 v = l[0] * vertex_values[t.v[0]] + l[1] * vertex_values[t.v[1]] + l[2] * vertex_values[t.v[2]];
  v += (27.0 * l[0] * l[1] * l[2]) * bubble[elem];
  return v;
}

Mat2 ConformingField::gradient(int elem, const Vec2& x) const {
  const auto l = barycentric(*mesh, elem, x);
  const auto lg = barycentric_gradients(*mesh, elem);
  const auto& t = mesh->triangles[elem];
  const Vec2 gb = 27.0 * (l[1] * l[2] * lg[0] + l[0] * l[2] * lg[1] + l[0] * l[1] * lg[2]);
  Mat2 g;
  for (int i = 0; i < 3; ++i) {
    const Vec2 vv = vertex_values[t.v[i]];
    g.a00 += vv.x * lg[i].x;
    g.a01 += vv.x * lg[i].y;
    g.a10 += vv.y * lg[i].x;
    g.a11 += vv.y * lg[i].y;
  }
  g.a00 += bubble[elem].x * gb.x;
  g.a01 += bubble[elem].x * gb.y;
  g.a10 += bubble[elem].y * gb.x;
  g.a11 += bubble[elem].y * gb.y;
  return g;
}

ConformingField companion(const CrField& f) {
  const auto& mesh = f.space->mesh;
  ConformingField j;
  j.mesh = mesh;
  j.vertex_values.assign(mesh->num_vertices(), Vec2{0, 0});
  j.bubble.assign(mesh->num_triangles(), Vec2{0, 0});

  std::vector<char> on_boundary(mesh->num_vertices(), 0);
  for (const auto& e : mesh->edges)
    if (e.boundary) on_boundary[e.a] = on_boundary[e.b] = 1;

  std::vector<int> valence(mesh->num_vertices(), 0);
  std::vector<Vec2> sum(mesh->num_vertices(), Vec2{0, 0});
  for (int k = 0; k < mesh->num_triangles(); ++k) {
    for (int i = 0; i < 3; ++i) {
      const int v = mesh->triangles[k].v[i];
      std::array<double, 3> l{0, 0, 0};
      l[i] = 1.0;
      sum[v] += evaluate(f, k, l);
      ++valence[v];
    }
  }
  for (int v = 0; v < mesh->num_vertices(); ++v) {
    if (!on_boundary[v] && valence[v] > 0) j.vertex_values[v] = sum[v] / valence[v];
  }
  // bubble coefficient: int_K 27 l0 l1 l2 = 9|K|/20; force int_K (v - Jv) = 0
  for (int k = 0; k < mesh->num_triangles(); ++k) {
    const double area = mesh->area(k);
    const auto& t = mesh->triangles[k];
    const Vec2 mean_v = evaluate(f, k, {1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0});  // affine: centroid value
    const Vec2 mean_p1 =
        (j.vertex_values[t.v[0]] + j.vertex_values[t.v[1]] + j.vertex_values[t.v[2]]) / 3.0;
    j.bubble[k] = (mean_v - mean_p1) * (area / (9.0 * area / 20.0));
  }
  return j;
}

double companion_value_defect(const CrField& v, const ConformingField& j) {
  const auto& mesh = v.space->mesh;
  const auto& rule = tri_rule_deg4();
  double worst = 0.0;
  for (int k = 0; k < mesh->num_triangles(); ++k) {
    const auto c = mesh->corners(k);
    const double area = mesh->area(k);
    Vec2 mean{0, 0};
    for (const auto& q : rule.points) {
      const Vec2 x = q.l0 * c[0] + q.l1 * c[1] + q.l2 * c[2];
      mean += q.w * (element_value(v, k, x) - j.eval(k, x));
    }
    worst = std::max(worst, norm(mean) * area);
  }
  return worst;
}

double companion_energy_distance(const CrField& v, const ConformingField& j) {
  const auto& mesh = v.space->mesh;
  const auto& rule = tri_rule_deg4();
  double s = 0.0;
  for (int k = 0; k < mesh->num_triangles(); ++k) {
    const auto c = mesh->corners(k);
    const double area = mesh->area(k);
    const Mat2 gv = element_gradient(v, k);
    s += rule.integrate(c, area, [&](const Vec2& x) { return (gv - j.gradient(k, x)).frobenius2(); });
  }
  return std::sqrt(s);
}

std::vector<double> companion_gradient_defect(const CrField& v, const ConformingField& j) {
  const auto& mesh = v.space->mesh;
  const auto& rule = tri_rule_deg4();
  std::vector<double> defect(mesh->num_triangles());
  for (int k = 0; k < mesh->num_triangles(); ++k) {
    const auto c = mesh->corners(k);
    const Mat2 gv = element_gradient(v, k);
    Mat2 mean;
    for (const auto& q : rule.points) {
      const Vec2 x = q.l0 * c[0] + q.l1 * c[1] + q.l2 * c[2];
      mean = mean + (gv - j.gradient(k, x)) * q.w;
    }
    defect[k] = std::sqrt(mean.frobenius2());
  }
  return defect;
}

namespace {

Norms norms_of_affine(const PiecewiseAffineField& a, const PiecewiseAffineField* b) {
  Norms n;
  const Mesh& mesh = *a.mesh;
  for (int k = 0; k < mesh.num_triangles(); ++k) {
    const double area = mesh.area(k);
    const Mat2 g = b ? a.grad[k] - b->grad[k] : a.grad[k];
    n.h1 += area * g.frobenius2();
    const auto c = mesh.corners(k);
    double l2 = 0.0;
    for (int i = 0; i < 3; ++i) {  // edge-midpoint rule, exact for quadratics
      const Vec2 m = midpoint(c[(i + 1) % 3], c[(i + 2) % 3]);
      Vec2 v = a.eval(k, m);
      if (b) v -= b->eval(k, m);
      l2 += norm2(v) / 3.0;
    }
    n.l2 += area * l2;
  }
  n.l2 = std::sqrt(n.l2);
  n.h1 = std::sqrt(n.h1);
  return n;
}

}  // namespace

Norms broken_norms(const PiecewiseAffineField& a) { return norms_of_affine(a, nullptr); }

Norms broken_norms(const PiecewiseAffineField& a, const PiecewiseAffineField& b) {
  if (a.mesh->id != b.mesh->id) throw std::runtime_error("broken_norms: meshes differ");
  return norms_of_affine(a, &b);
}

Norms broken_norms(const CrField& a) { return broken_norms(to_affine(a)); }

Norms broken_norms(const CrField& a, const CrField& b) {
  if (a.space->mesh->id != b.space->mesh->id) throw std::runtime_error("broken_norms: meshes differ");
  return broken_norms(to_affine(a), to_affine(b));
}

double l2_norm(const P0Field& a) {
  double s = 0.0;
  for (int k = 0; k < a.space->mesh->num_triangles(); ++k)
    s += a.space->mesh->area(k) * a.values[k] * a.values[k];
  return std::sqrt(s);
}

double l2_norm(const P0Field& a, const P0Field& b) {
  if (a.space->mesh->id != b.space->mesh->id) throw std::runtime_error("l2_norm: meshes differ");
  double s = 0.0;
  for (int k = 0; k < a.space->mesh->num_triangles(); ++k) {
    const double d = a.values[k] - b.values[k];
    s += a.space->mesh->area(k) * d * d;
  }
  return std::sqrt(s);
}

double l2_norm_p0_diff(const P0Field& fine, const P0Field& coarse, const RefinementRelation& rel) {
  const Mesh& fmesh = *fine.space->mesh;
  double s = 0.0;
  for (int k = 0; k < fmesh.num_triangles(); ++k) {
    const double d = fine.values[k] - coarse.values[rel.parent_of[k]];
    s += fmesh.area(k) * d * d;
  }
  return std::sqrt(s);
}

Eigen::VectorXd elementwise_divergence(const CrField& f) {
  const int nT = f.space->mesh->num_triangles();
  Eigen::VectorXd d(nT);
  for (int k = 0; k < nT; ++k) d[k] = element_gradient(f, k).trace();
  return d;
}

double weighted_mean(const P0Field& p) {
  double s = 0.0, a = 0.0;
  for (int k = 0; k < p.space->mesh->num_triangles(); ++k) {
    const double area = p.space->mesh->area(k);
    s += area * p.values[k];
    a += area;
  }
  return s / a;
}

void write_field_csv(std::ostream& os, const CrField& f) {
  const Mesh& mesh = *f.space->mesh;
  os << "elem,e0_x,e0_y,e1_x,e1_y,e2_x,e2_y\n";
  char buf[256];
  for (int k = 0; k < mesh.num_triangles(); ++k) {
    const auto& te = mesh.tri_edges[k];
    std::snprintf(buf, sizeof(buf), "%d,%.12g,%.12g,%.12g,%.12g,%.12g,%.12g\n", k, f.dof(te[0], 0),
                  f.dof(te[0], 1), f.dof(te[1], 0), f.dof(te[1], 1), f.dof(te[2], 0), f.dof(te[2], 1));
    os << buf;
  }
}

}  // namespace crstokes
