#include "crstokes/mesh.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <functional>
#include <istream>
#include <ostream>
#include <set>
#include <sstream>
#include <stdexcept>
#include <unordered_map>

namespace crstokes {

namespace {

std::atomic<std::uint64_t> g_mesh_counter{1};
std::uint64_t next_mesh_id() { return g_mesh_counter.fetch_add(1); }

std::uint64_t pair_key(int a, int b) {
  if (a > b) std::swap(a, b);
  return (static_cast<std::uint64_t>(a) << 32) | static_cast<std::uint32_t>(b);
}

// longest edge, ties broken by the lowest opposite-vertex (local) index
int longest_edge_label(const Vec2& p0, const Vec2& p1, const Vec2& p2) {
  const std::array<Vec2, 3> p{p0, p1, p2};
  int best = 0;
  double best_len = -1.0;
  for (int i = 0; i < 3; ++i) {
    double len = norm2(p[(i + 2) % 3] - p[(i + 1) % 3]);
    if (len > best_len + 1e-15 * (1.0 + best_len)) {
      best_len = len;
      best = i;
    }
  }
  return best;
}

bool point_on_segment(const Vec2& p, const Vec2& a, const Vec2& b, double tol) {
  const Vec2 d = b - a;
  const double len2 = norm2(d);
  const double t = dot(p - a, d) / len2;
  if (t < -tol || t > 1.0 + tol) return false;
  const Vec2 proj = a + t * d;
  return norm2(p - proj) <= tol * tol * len2;
}

bool on_polygon_boundary(const Vec2& p, const std::vector<Vec2>& poly, double tol) {
  const std::size_t n = poly.size();
  for (std::size_t i = 0; i < n; ++i) {
    if (point_on_segment(p, poly[i], poly[(i + 1) % n], tol)) return true;
  }
  return false;
}

bool segment_on_polygon_boundary(const Vec2& a, const Vec2& b, const std::vector<Vec2>& poly,
                                 double tol) {
  const std::size_t n = poly.size();
  for (std::size_t i = 0; i < n; ++i) {
    if (point_on_segment(a, poly[i], poly[(i + 1) % n], tol) &&
        point_on_segment(b, poly[i], poly[(i + 1) % n], tol)) {
      return true;
    }
  }
  return false;
}

std::shared_ptr<Mesh> structured_mesh(double x0, double y0, double spacing, int nx, int ny,
                                      const std::function<bool(double, double)>& keep_cell,
                                      std::vector<Vec2> polygon, const std::string& tag) {
  auto mesh = std::make_shared<Mesh>();
  mesh->boundary_polygon = std::move(polygon);
  mesh->domain_tag = tag;

  std::vector<int> vid(static_cast<std::size_t>(nx + 1) * (ny + 1), -1);
  auto vertex = [&](int i, int j) {
    int& id = vid[static_cast<std::size_t>(j) * (nx + 1) + i];
    if (id < 0) {
      id = mesh->num_vertices();
      mesh->vertices.push_back({x0 + spacing * i, y0 + spacing * j});
    }
    return id;
  };

  for (int j = 0; j < ny; ++j) {
    for (int i = 0; i < nx; ++i) {
      const double cx = x0 + spacing * (i + 0.5);
      const double cy = y0 + spacing * (j + 0.5);
      if (!keep_cell(cx, cy)) continue;
      const int v00 = vertex(i, j), v10 = vertex(i + 1, j);
      const int v11 = vertex(i + 1, j + 1), v01 = vertex(i, j + 1);
      // split along the v00-v11 diagonal; the diagonal is the longest edge of
      // both halves, so the NVB labeling is compatible
      mesh->triangles.push_back({{v00, v10, v11}, 2, 0, -1});
      mesh->triangles.back().ref_edge =
          longest_edge_label(mesh->vertices[v00], mesh->vertices[v10], mesh->vertices[v11]);
      mesh->triangles.push_back({{v00, v11, v01}, 2, 0, -1});
      mesh->triangles.back().ref_edge =
          longest_edge_label(mesh->vertices[v00], mesh->vertices[v11], mesh->vertices[v01]);
    }
  }
  mesh->id = next_mesh_id();
  mesh->finalize();
  return mesh;
}

// ear clipping for simple counterclockwise polygons
std::vector<std::array<int, 3>> ear_clip(const std::vector<Vec2>& poly) {
  const int n = static_cast<int>(poly.size());
  if (n < 3) throw std::runtime_error("polygon needs at least 3 vertices");
  std::vector<int> idx(n);
  for (int i = 0; i < n; ++i) idx[i] = i;
  std::vector<std::array<int, 3>> tris;

  auto inside = [&](const Vec2& p, const Vec2& a, const Vec2& b, const Vec2& c) {
    const double d0 = cross(b - a, p - a);
    const double d1 = cross(c - b, p - b);
    const double d2 = cross(a - c, p - c);
    return d0 >= -1e-14 && d1 >= -1e-14 && d2 >= -1e-14;
  };

  int guard = 0;
  while (idx.size() > 3) {
    if (++guard > 10 * n * n) throw std::runtime_error("ear clipping failed: polygon not simple?");
    bool clipped = false;
    for (std::size_t i = 0; i < idx.size(); ++i) {
      const int ia = idx[(i + idx.size() - 1) % idx.size()];
      const int ib = idx[i];
      const int ic = idx[(i + 1) % idx.size()];
      if (cross(poly[ib] - poly[ia], poly[ic] - poly[ia]) <= 1e-14) continue;  // reflex
      bool ear = true;
      for (int other : idx) {
        if (other == ia || other == ib || other == ic) continue;
        if (inside(poly[other], poly[ia], poly[ib], poly[ic])) {
          ear = false;
          break;
        }
      }
      if (ear) {
        tris.push_back({ia, ib, ic});
        idx.erase(idx.begin() + static_cast<long>(i));
        clipped = true;
        break;
      }
    }
    if (!clipped) throw std::runtime_error("ear clipping failed: no ear found");
  }
  tris.push_back({idx[0], idx[1], idx[2]});
  return tris;
}

}  // namespace

void Mesh::finalize() {
  const int nT = num_triangles();
  edges.clear();
  tri_edges.assign(nT, {-1, -1, -1});
  std::unordered_map<std::uint64_t, int> lookup;
  lookup.reserve(static_cast<std::size_t>(nT) * 2);

  for (int k = 0; k < nT; ++k) {
    const auto& t = triangles[k];
    for (int i = 0; i < 3; ++i) {
      const int a = t.v[(i + 1) % 3];
      const int b = t.v[(i + 2) % 3];
      const auto key = pair_key(a, b);
      auto it = lookup.find(key);
      int e;
      if (it == lookup.end()) {
        e = num_edges();
        lookup.emplace(key, e);
        Edge edge;
        edge.a = std::min(a, b);
        edge.b = std::max(a, b);
        edge.tri[0] = k;
        edges.push_back(edge);
      } else {
        e = it->second;
        if (edges[e].tri[1] != -1) throw std::runtime_error("finalize: edge shared by >2 triangles");
        edges[e].tri[1] = k;
      }
      tri_edges[k][i] = e;
    }
  }
  for (auto& e : edges) e.boundary = (e.tri[1] == -1);
}

double Mesh::total_area() const {
  double s = 0;
  for (int k = 0; k < num_triangles(); ++k) s += area(k);
  return s;
}

int Mesh::max_vertex_valence() const {
  std::vector<int> count(vertices.size(), 0);
  for (const auto& t : triangles)
    for (int i = 0; i < 3; ++i) ++count[t.v[i]];
  int m = 0;
  for (int c : count) m = std::max(m, c);
  return m;
}

std::shared_ptr<Mesh> make_mesh(const DomainSpec& spec) {
  if (spec.subdivisions < 1) throw std::runtime_error("make_mesh: subdivisions must be positive");
  const int n = spec.subdivisions;
  switch (spec.kind) {
    case DomainSpec::Kind::UnitSquare: {
      std::vector<Vec2> poly{{0, 0}, {1, 0}, {1, 1}, {0, 1}};
      return structured_mesh(0, 0, 1.0 / n, n, n, [](double, double) { return true; },
                             std::move(poly), "unit-square");
    }
    case DomainSpec::Kind::LShape: {
      // (-1,1)^2 without the lower-right quadrant
      std::vector<Vec2> poly{{-1, -1}, {0, -1}, {0, 0}, {1, 0}, {1, 1}, {-1, 1}};
      return structured_mesh(-1, -1, 1.0 / n, 2 * n, 2 * n,
                             [](double cx, double cy) { return !(cx > 0 && cy < 0); },
                             std::move(poly), "l-shape");
    }
    case DomainSpec::Kind::Polygon: {
      const auto& poly = spec.polygon;
      if (poly.size() < 3) throw std::runtime_error("make_mesh: polygon needs >= 3 vertices");
      double doubled_area = 0;
      for (std::size_t i = 0; i < poly.size(); ++i)
        doubled_area += cross(poly[i], poly[(i + 1) % poly.size()]);
      if (doubled_area <= 0) throw std::runtime_error("make_mesh: polygon must be counterclockwise");
      auto mesh = std::make_shared<Mesh>();
      mesh->vertices = poly;
      mesh->boundary_polygon = poly;
      mesh->domain_tag = "polygon";
      for (const auto& t : ear_clip(poly)) {
        Triangle tri{{t[0], t[1], t[2]}, 0, 0, -1};
        tri.ref_edge = longest_edge_label(poly[t[0]], poly[t[1]], poly[t[2]]);
        mesh->triangles.push_back(tri);
      }
      mesh->id = next_mesh_id();
      mesh->finalize();
      for (int round = 1; round < n; ++round) {
        auto [finer, rel] = uniform_refine(*mesh);
        for (auto& t : finer->triangles) t.parent = -1;  // still the initial mesh
        mesh = finer;
      }
      return mesh;
    }
  }
  throw std::runtime_error("make_mesh: unknown domain kind");
}

std::pair<std::shared_ptr<Mesh>, RefinementRelation> bisect(const Mesh& mesh,
                                                            const std::vector<int>& marked) {
  const int nT = mesh.num_triangles();
  RefinementRelation rel;
  rel.coarse_id = mesh.id;
  rel.children.assign(nT, {});

  auto out = std::make_shared<Mesh>();
  out->boundary_polygon = mesh.boundary_polygon;
  out->domain_tag = mesh.domain_tag;
  out->id = next_mesh_id();
  rel.fine_id = out->id;

  if (marked.empty()) {
    out->vertices = mesh.vertices;
    out->triangles = mesh.triangles;
    for (int k = 0; k < nT; ++k) {
      out->triangles[k].parent = k;
      rel.children[k] = {k};
      rel.parent_of.push_back(k);
    }
    out->finalize();
    return {out, rel};
  }

  std::vector<char> edge_marked(mesh.num_edges(), 0);
  for (int k : marked) {
    if (k < 0 || k >= nT) throw std::runtime_error("bisect: marked id out of range");
    edge_marked[mesh.tri_edges[k][mesh.triangles[k].ref_edge]] = 1;
  }
  // closure: a triangle with any marked edge must have its refinement edge marked
  for (bool changed = true; changed;) {
    changed = false;
    for (int k = 0; k < nT; ++k) {
      const auto& te = mesh.tri_edges[k];
      const int re = te[mesh.triangles[k].ref_edge];
      if (!edge_marked[re] && (edge_marked[te[0]] || edge_marked[te[1]] || edge_marked[te[2]])) {
        edge_marked[re] = 1;
        changed = true;
      }
    }
  }

  out->vertices = mesh.vertices;
  std::vector<int> edge_mid(mesh.num_edges(), -1);
  for (int e = 0; e < mesh.num_edges(); ++e) {
    if (edge_marked[e]) {
      edge_mid[e] = out->num_vertices();
      out->vertices.push_back(mesh.edge_midpoint(e));
    }
  }

  std::unordered_map<std::uint64_t, int> edge_ids;
  edge_ids.reserve(mesh.edges.size() * 2);
  for (int e = 0; e < mesh.num_edges(); ++e) edge_ids.emplace(pair_key(mesh.edges[e].a, mesh.edges[e].b), e);
  auto marked_mid = [&](int a, int b) -> int {
    auto it = edge_ids.find(pair_key(a, b));
    if (it == edge_ids.end()) return -1;  // edge created inside this call, never marked
    return edge_marked[it->second] ? edge_mid[it->second] : -1;
  };

  const std::function<void(std::array<int, 3>, int, int, int)> emit =
      [&](std::array<int, 3> v, int ref, int gen, int coarse) {
        const int a = v[(ref + 1) % 3], b = v[(ref + 2) % 3], c = v[ref];
        const int m = marked_mid(a, b);
        if (m < 0) {
          rel.children[coarse].push_back(out->num_triangles());
          out->triangles.push_back({v, ref, gen, coarse});
          return;
        }
        // the midpoint is the newest vertex of both children; their refinement
        // edges are the edges opposite it
        emit({c, a, m}, 2, gen + 1, coarse);
        emit({b, c, m}, 2, gen + 1, coarse);
      };
  for (int k = 0; k < nT; ++k) {
    const auto& t = mesh.triangles[k];
    emit(t.v, t.ref_edge, t.generation, k);
  }

  out->finalize();
  rel.parent_of.assign(out->num_triangles(), -1);
  for (int k = 0; k < nT; ++k) {
    if (rel.children[k].size() > 1) rel.refined.push_back(k);
    for (int c : rel.children[k]) rel.parent_of[c] = k;
  }
  return {out, rel};
}

std::pair<std::shared_ptr<Mesh>, RefinementRelation> uniform_refine(const Mesh& mesh) {
  std::vector<int> all(mesh.num_triangles());
  for (int k = 0; k < mesh.num_triangles(); ++k) all[k] = k;
  return bisect(mesh, all);
}

std::vector<int> refinement_region(const Mesh& coarse, const RefinementRelation& rel) {
  if (rel.coarse_id != coarse.id) throw std::runtime_error("refinement_region: relation/mesh mismatch");
  std::vector<char> in_region(coarse.num_triangles(), 0);
  std::vector<char> vertex_touched(coarse.num_vertices(), 0);
  for (int k : rel.refined)
    for (int i = 0; i < 3; ++i) vertex_touched[coarse.triangles[k].v[i]] = 1;
  for (int k = 0; k < coarse.num_triangles(); ++k) {
    const auto& t = coarse.triangles[k];
    if (vertex_touched[t.v[0]] || vertex_touched[t.v[1]] || vertex_touched[t.v[2]]) in_region[k] = 1;
  }
  std::vector<int> region;
  for (int k = 0; k < coarse.num_triangles(); ++k)
    if (in_region[k]) region.push_back(k);
  return region;
}

double mesh_size(const Mesh& mesh) {
  double h2 = 0;
  for (int k = 0; k < mesh.num_triangles(); ++k) h2 = std::max(h2, mesh.area(k));
  return std::sqrt(h2);
}

RefinementRelation compose(const RefinementRelation& ab, const RefinementRelation& bc) {
  if (ab.fine_id != bc.coarse_id) throw std::runtime_error("compose: relations do not chain");
  RefinementRelation ac;
  ac.coarse_id = ab.coarse_id;
  ac.fine_id = bc.fine_id;
  ac.children.assign(ab.children.size(), {});
  ac.parent_of.assign(bc.parent_of.size(), -1);
  for (std::size_t k = 0; k < ab.children.size(); ++k) {
    for (int m : ab.children[k])
      for (int f : bc.children[m]) {
        ac.children[k].push_back(f);
        ac.parent_of[f] = static_cast<int>(k);
      }
    if (ac.children[k].size() > 1) ac.refined.push_back(static_cast<int>(k));
  }
  return ac;
}

RefinementRelation identity_relation(const Mesh& mesh) {
  RefinementRelation rel;
  rel.coarse_id = rel.fine_id = mesh.id;
  rel.children.assign(mesh.num_triangles(), {});
  rel.parent_of.resize(mesh.num_triangles());
  for (int k = 0; k < mesh.num_triangles(); ++k) {
    rel.children[k] = {k};
    rel.parent_of[k] = k;
  }
  return rel;
}

std::vector<ConformityIssue> check_conformity(const Mesh& mesh) {
  std::vector<ConformityIssue> issues;
  auto report = [&](const std::string& s) { issues.push_back({s}); };

  const double scale = mesh_size(mesh);
  for (int k = 0; k < mesh.num_triangles(); ++k) {
    if (mesh.area(k) <= 0) report("triangle " + std::to_string(k) + " not counterclockwise or degenerate");
  }
  const double tol = 1e-10;
  for (int e = 0; e < mesh.num_edges(); ++e) {
    const Edge& edge = mesh.edges[e];
    const int count = (edge.tri[0] != -1) + (edge.tri[1] != -1);
    if (count == 0 || count > 2) report("edge " + std::to_string(e) + " has bad incidence");
    if (!mesh.boundary_polygon.empty()) {
      const bool on_bdry = segment_on_polygon_boundary(mesh.vertices[edge.a], mesh.vertices[edge.b],
                                                       mesh.boundary_polygon, tol);
      if (edge.boundary && !on_bdry)
        report("edge " + std::to_string(e) + " has one adjacent triangle but is interior (hanging node?)");
      if (!edge.boundary && on_bdry)
        report("edge " + std::to_string(e) + " lies on the boundary but has two adjacent triangles");
    }
  }
  // angle sums: 2*pi around interior vertices
  std::vector<double> angle_sum(mesh.vertices.size(), 0.0);
  for (int k = 0; k < mesh.num_triangles(); ++k) {
    const auto c = mesh.corners(k);
    for (int i = 0; i < 3; ++i) {
      const Vec2 u = c[(i + 1) % 3] - c[i];
      const Vec2 w = c[(i + 2) % 3] - c[i];
      angle_sum[mesh.triangles[k].v[i]] += std::atan2(std::abs(cross(u, w)), dot(u, w));
    }
  }
  std::vector<char> on_boundary(mesh.vertices.size(), 0);
  for (const auto& edge : mesh.edges) {
    if (edge.boundary) on_boundary[edge.a] = on_boundary[edge.b] = 1;
  }
  for (std::size_t v = 0; v < mesh.vertices.size(); ++v) {
    if (!on_boundary[v] && std::abs(angle_sum[v] - 2 * M_PI) > 1e-9)
      report("interior vertex " + std::to_string(v) + " angle sum != 2*pi");
  }
  (void)scale;
  return issues;
}

int count_similarity_classes(const Mesh& mesh) {
  std::set<std::array<long long, 3>> classes;
  for (int k = 0; k < mesh.num_triangles(); ++k) {
    const auto c = mesh.corners(k);
    std::array<double, 3> ang;
    for (int i = 0; i < 3; ++i) {
      const Vec2 u = c[(i + 1) % 3] - c[i];
      const Vec2 w = c[(i + 2) % 3] - c[i];
      ang[i] = std::atan2(std::abs(cross(u, w)), dot(u, w));
    }
    std::sort(ang.begin(), ang.end());
    classes.insert({std::llround(ang[0] * 1e9), std::llround(ang[1] * 1e9), std::llround(ang[2] * 1e9)});
  }
  return static_cast<int>(classes.size());
}

void write_mesh(std::ostream& os, const Mesh& mesh) {
  char buf[128];
  os << "vertices " << mesh.num_vertices() << " triangles " << mesh.num_triangles() << " edges "
     << mesh.num_edges() << "\n";
  for (const auto& v : mesh.vertices) {
    std::snprintf(buf, sizeof(buf), "%.17g %.17g\n", v.x, v.y);
    os << buf;
  }
  for (const auto& t : mesh.triangles)
    os << t.v[0] << ' ' << t.v[1] << ' ' << t.v[2] << ' ' << t.ref_edge << ' ' << t.generation << ' '
       << t.parent << "\n";
  for (const auto& e : mesh.edges)
    os << e.a << ' ' << e.b << ' ' << (e.boundary ? 1 : 0) << ' ' << e.tri[0] << ' ' << e.tri[1] << "\n";
}

std::shared_ptr<Mesh> read_mesh(std::istream& is) {
  std::string kw1, kw2, kw3;
  int nv = 0, nt = 0, ne = 0;
  while (is >> std::ws && is.peek() == '#') {  // leading comment lines
    std::string line;
    std::getline(is, line);
  }
  if (!(is >> kw1 >> nv >> kw2 >> nt >> kw3 >> ne) || kw1 != "vertices" || kw2 != "triangles" ||
      kw3 != "edges") {
    throw std::runtime_error("read_mesh: bad header");
  }
  auto mesh = std::make_shared<Mesh>();
  mesh->domain_tag = "imported";
  mesh->vertices.resize(nv);
  for (auto& v : mesh->vertices)
    if (!(is >> v.x >> v.y)) throw std::runtime_error("read_mesh: bad vertex line");
  mesh->triangles.resize(nt);
  for (auto& t : mesh->triangles)
    if (!(is >> t.v[0] >> t.v[1] >> t.v[2] >> t.ref_edge >> t.generation >> t.parent))
      throw std::runtime_error("read_mesh: bad triangle line");
  // skip the stored edge lines; adjacency is rebuilt and checked against the header
  for (int e = 0; e < ne; ++e) {
    int a, b, bd, t0, t1;
    if (!(is >> a >> b >> bd >> t0 >> t1)) throw std::runtime_error("read_mesh: bad edge line");
  }
  mesh->id = next_mesh_id();
  mesh->finalize();
  if (mesh->num_edges() != ne) throw std::runtime_error("read_mesh: edge count mismatch");
  return mesh;
}

}  // namespace crstokes
