#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <set>
#include <sstream>

#include "crstokes/mesh.hpp"

using namespace crstokes;

namespace {
void require_conforming(const Mesh& mesh) {
  const auto issues = check_conformity(mesh);
  for (const auto& i : issues) MESSAGE(i.what);
  REQUIRE(issues.empty());
}
}  // namespace

TEST_CASE("unit square counts") {
  auto m1 = make_mesh({DomainSpec::Kind::UnitSquare, 1, {}});
  CHECK(m1->num_triangles() == 2);
  CHECK(m1->num_vertices() == 4);
  CHECK(m1->num_edges() == 5);
  require_conforming(*m1);

  auto m2 = make_mesh({DomainSpec::Kind::UnitSquare, 2, {}});
  CHECK(m2->num_triangles() == 8);
  require_conforming(*m2);
  CHECK(m2->total_area() == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("l-shape counts and area") {
  auto m = make_mesh({DomainSpec::Kind::LShape, 1, {}});
  CHECK(m->num_triangles() == 6);
  CHECK(m->total_area() == doctest::Approx(3.0).epsilon(1e-14));
  require_conforming(*m);
}

TEST_CASE("explicit polygon triangulated and refined") {
  DomainSpec spec;
  spec.kind = DomainSpec::Kind::Polygon;
  spec.subdivisions = 2;
  spec.polygon = {{0, 0}, {2, 0}, {2.5, 1.2}, {1, 2}, {-0.5, 0.9}};
  auto m = make_mesh(spec);
  require_conforming(*m);
  CHECK(m->total_area() > 0);

  DomainSpec bad = spec;
  std::reverse(bad.polygon.begin(), bad.polygon.end());
  CHECK_THROWS(make_mesh(bad));
}

TEST_CASE("mesh_size examples") {
  auto m1 = make_mesh({DomainSpec::Kind::UnitSquare, 1, {}});
  CHECK(mesh_size(*m1) == doctest::Approx(std::sqrt(0.5)).epsilon(1e-14));
  auto [m2, rel] = uniform_refine(*m1);
  CHECK(mesh_size(*m2) == doctest::Approx(0.5).epsilon(1e-14));

  DomainSpec ref;
  ref.kind = DomainSpec::Kind::Polygon;
  ref.subdivisions = 1;
  ref.polygon = {{0, 0}, {1, 0}, {0, 1}};
  CHECK(mesh_size(*make_mesh(ref)) == doctest::Approx(std::sqrt(0.5)).epsilon(1e-14));
}

TEST_CASE("bisect: marked element halves, conformity kept") {
  DomainSpec tri;
  tri.kind = DomainSpec::Kind::Polygon;
  tri.subdivisions = 1;
  tri.polygon = {{0, 0}, {1, 0}, {0, 1}};
  auto m = make_mesh(tri);
  REQUIRE(m->num_triangles() == 1);
  const double a0 = m->area(0);
  auto [fine, rel] = bisect(*m, {0});
  CHECK(fine->num_triangles() == 2);
  CHECK(fine->area(0) == doctest::Approx(a0 / 2).epsilon(1e-14));
  CHECK(fine->area(1) == doctest::Approx(a0 / 2).epsilon(1e-14));
  require_conforming(*fine);
  CHECK(rel.refined == std::vector<int>{0});
}

TEST_CASE("bisect closure keeps the two-triangle square conforming") {
  auto m = make_mesh({DomainSpec::Kind::UnitSquare, 1, {}});
  auto [fine, rel] = bisect(*m, {0});
  require_conforming(*fine);
  // the neighbor shares the refinement edge (the diagonal), so closure refines it
  CHECK(rel.is_refined(0));
  CHECK(rel.is_refined(1));
  CHECK(fine->num_triangles() == 4);
}

TEST_CASE("bisect with empty marked set is the identity") {
  auto m = make_mesh({DomainSpec::Kind::UnitSquare, 2, {}});
  auto [same, rel] = bisect(*m, {});
  CHECK(same->num_triangles() == m->num_triangles());
  CHECK(rel.refined.empty());
  for (int k = 0; k < m->num_triangles(); ++k) {
    REQUIRE(rel.children[k].size() == 1);
    CHECK(rel.children[k][0] == k);
  }
}

TEST_CASE("child areas sum to the parent area") {
  auto mesh = make_mesh({DomainSpec::Kind::LShape, 1, {}});
  std::vector<int> marked{0, 3};
  auto [fine, rel] = bisect(*mesh, marked);
  require_conforming(*fine);
  for (int k = 0; k < mesh->num_triangles(); ++k) {
    double sum = 0.0;
    for (int c : rel.children[k]) sum += fine->area(c);
    CHECK(sum == doctest::Approx(mesh->area(k)).epsilon(1e-12));
  }
}

TEST_CASE("refinement_region contains the refined set and respects the valence bound") {
  auto mesh = make_mesh({DomainSpec::Kind::UnitSquare, 3, {}});
  SUBCASE("nothing refined") {
    auto [fine, rel] = bisect(*mesh, {});
    CHECK(refinement_region(*mesh, rel).empty());
  }
  SUBCASE("one marked element") {
    auto [fine, rel] = bisect(*mesh, {4});
    const auto region = refinement_region(*mesh, rel);
    std::set<int> in_region(region.begin(), region.end());
    for (int k : rel.refined) CHECK(in_region.count(k) == 1);
    CHECK(static_cast<int>(region.size()) <=
          mesh->max_vertex_valence() * static_cast<int>(rel.refined.size()));
    // region is exactly the set of elements sharing a vertex with a refined one
    std::set<int> touched;
    for (int k : rel.refined)
      for (int i = 0; i < 3; ++i) touched.insert(mesh->triangles[k].v[i]);
    for (int k = 0; k < mesh->num_triangles(); ++k) {
      bool share = false;
      for (int i = 0; i < 3; ++i) share |= touched.count(mesh->triangles[k].v[i]) > 0;
      CHECK(share == (in_region.count(k) == 1));
    }
  }
  SUBCASE("uniform refinement marks everything") {
    auto [fine, rel] = uniform_refine(*mesh);
    CHECK(static_cast<int>(refinement_region(*mesh, rel).size()) == mesh->num_triangles());
  }
}

TEST_CASE("similarity classes stay bounded over ten uniform refinements") {
  DomainSpec skew;
  skew.kind = DomainSpec::Kind::Polygon;
  skew.subdivisions = 1;
  skew.polygon = {{0, 0}, {1.3, 0.1}, {0.4, 0.9}};
  auto mesh = make_mesh(skew);
  const int initial_classes = count_similarity_classes(*mesh);
  int worst = initial_classes;
  for (int l = 0; l < 10; ++l) {
    mesh = uniform_refine(*mesh).first;
    worst = std::max(worst, count_similarity_classes(*mesh));
  }
  CHECK(worst <= 4 * initial_classes);

  auto square = make_mesh({DomainSpec::Kind::UnitSquare, 1, {}});
  for (int l = 0; l < 6; ++l) square = uniform_refine(*square).first;
  CHECK(count_similarity_classes(*square) == 1);  // right isosceles reproduces itself
  require_conforming(*square);
}

TEST_CASE("adaptive refinement cascade stays conforming") {
  auto mesh = make_mesh({DomainSpec::Kind::LShape, 1, {}});
  for (int round = 0; round < 6; ++round) {
    // deterministically mark a third of the elements
    std::vector<int> marked;
    for (int k = 0; k < mesh->num_triangles(); k += 3) marked.push_back(k);
    auto [fine, rel] = bisect(*mesh, marked);
    require_conforming(*fine);
    for (int k : marked) CHECK(rel.is_refined(k));
    mesh = fine;
  }
}

TEST_CASE("compose chains relations") {
  auto m0 = make_mesh({DomainSpec::Kind::UnitSquare, 1, {}});
  auto [m1, r01] = bisect(*m0, {0});
  auto [m2, r12] = bisect(*m1, {1, 2});
  const auto r02 = compose(r01, r12);
  CHECK(r02.coarse_id == m0->id);
  CHECK(r02.fine_id == m2->id);
  for (int k = 0; k < m0->num_triangles(); ++k) {
    double sum = 0.0;
    for (int c : r02.children[k]) {
      sum += m2->area(c);
      CHECK(r02.parent_of[c] == k);
    }
    CHECK(sum == doctest::Approx(m0->area(k)).epsilon(1e-12));
  }
}

TEST_CASE("mesh text roundtrip") {
  auto mesh = make_mesh({DomainSpec::Kind::LShape, 2, {}});
  auto [fine, rel] = bisect(*mesh, {1, 5, 7});
  std::stringstream ss;
  write_mesh(ss, *fine);
  auto back = read_mesh(ss);
  REQUIRE(back->num_triangles() == fine->num_triangles());
  REQUIRE(back->num_vertices() == fine->num_vertices());
  REQUIRE(back->num_edges() == fine->num_edges());
  for (int k = 0; k < fine->num_triangles(); ++k) {
    CHECK(back->triangles[k].v == fine->triangles[k].v);
    CHECK(back->triangles[k].ref_edge == fine->triangles[k].ref_edge);
    CHECK(back->area(k) == doctest::Approx(fine->area(k)).epsilon(1e-14));
  }
}
