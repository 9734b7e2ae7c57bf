#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

#include "crstokes/geometry.hpp"

namespace crstokes {

// Triangle of a conforming triangulation. Vertices are stored counterclockwise.
// Local edge i is the edge opposite vertex i, i.e. (v[(i+1)%3], v[(i+2)%3]).
// ref_edge designates the newest-vertex-bisection refinement edge.
struct Triangle {
  std::array<int, 3> v{};
  int ref_edge = 2;
  int generation = 0;
  int parent = -1;  // element id in the previous mesh of a refinement step (-1 on an initial mesh)
};

struct Edge {
  int a = -1, b = -1;          // vertex ids, a < b
  bool boundary = false;       // exactly one adjacent triangle
  std::array<int, 2> tri{-1, -1};
};

struct DomainSpec {
  enum class Kind { UnitSquare, LShape, Polygon };
  Kind kind = Kind::UnitSquare;
  int subdivisions = 1;              // per unit cell
  std::vector<Vec2> polygon;         // Kind::Polygon only; simple, counterclockwise
};

class Mesh {
 public:
  std::vector<Vec2> vertices;
  std::vector<Triangle> triangles;
  std::vector<Edge> edges;
  std::vector<std::array<int, 3>> tri_edges;  // edge id opposite local vertex i
  std::vector<Vec2> boundary_polygon;         // domain corners, counterclockwise
  std::string domain_tag;
  std::uint64_t id = 0;

  int num_vertices() const { return static_cast<int>(vertices.size()); }
  int num_triangles() const { return static_cast<int>(triangles.size()); }
  int num_edges() const { return static_cast<int>(edges.size()); }

  double area(int k) const {
    const auto& t = triangles[k];
    return triangle_area(vertices[t.v[0]], vertices[t.v[1]], vertices[t.v[2]]);
  }
  Vec2 centroid(int k) const {
    const auto& t = triangles[k];
    return (vertices[t.v[0]] + vertices[t.v[1]] + vertices[t.v[2]]) / 3.0;
  }
  std::array<Vec2, 3> corners(int k) const {
    const auto& t = triangles[k];
    return {vertices[t.v[0]], vertices[t.v[1]], vertices[t.v[2]]};
  }
  double edge_length(int e) const { return norm(vertices[edges[e].b] - vertices[edges[e].a]); }
  Vec2 edge_midpoint(int e) const { return midpoint(vertices[edges[e].a], vertices[edges[e].b]); }
  // unit tangent, oriented from lower to higher vertex id
  Vec2 edge_tangent(int e) const {
    Vec2 d = vertices[edges[e].b] - vertices[edges[e].a];
    return d / norm(d);
  }
  // neighbor of triangle k across its local edge i, or -1 on the boundary
  int neighbor(int k, int i) const {
    const Edge& e = edges[tri_edges[k][i]];
    return e.tri[0] == k ? e.tri[1] : e.tri[0];
  }
  double total_area() const;
  // maximum vertex valence (number of incident triangles over all vertices)
  int max_vertex_valence() const;

  // Rebuilds edges / tri_edges / boundary flags from the triangle list.
  void finalize();
};

// Relates a mesh to one of its refinements. Unrefined elements map to their
// (single) image in the fine mesh.
struct RefinementRelation {
  std::uint64_t coarse_id = 0;
  std::uint64_t fine_id = 0;
  std::vector<std::vector<int>> children;  // coarse element -> fine elements
  std::vector<int> refined;                // coarse elements with more than one child
  std::vector<int> parent_of;              // fine element -> coarse element

  bool is_refined(int coarse_elem) const { return children[coarse_elem].size() > 1; }
};

std::shared_ptr<Mesh> make_mesh(const DomainSpec& spec);

// Bisects every marked element at least once and applies closure so the result
// is conforming. An empty marked set yields a copy with an identity relation.
std::pair<std::shared_ptr<Mesh>, RefinementRelation> bisect(const Mesh& mesh,
                                                            const std::vector<int>& marked);

std::pair<std::shared_ptr<Mesh>, RefinementRelation> uniform_refine(const Mesh& mesh);

// All coarse elements sharing at least a vertex with some refined element.
std::vector<int> refinement_region(const Mesh& coarse, const RefinementRelation& rel);

// max over elements of sqrt(area)
double mesh_size(const Mesh& mesh);

RefinementRelation compose(const RefinementRelation& ab, const RefinementRelation& bc);
RefinementRelation identity_relation(const Mesh& mesh);

struct ConformityIssue {
  std::string what;
};
// Edge-adjacency audit: interior edges have two adjacent triangles, boundary
// edges (segments of the domain polygon, when known) exactly one, all areas
// positive, and interior vertex angles sum to 2*pi.
std::vector<ConformityIssue> check_conformity(const Mesh& mesh);

// Distinct angle triples (sorted, rounded) present in the mesh; NVB keeps this
// finite under repeated refinement.
int count_similarity_classes(const Mesh& mesh);

void write_mesh(std::ostream& os, const Mesh& mesh);
std::shared_ptr<Mesh> read_mesh(std::istream& is);

}  // namespace crstokes
