#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <random>

#include "crstokes/control.hpp"
#include "crstokes/manufactured.hpp"

using namespace crstokes;

namespace {

std::shared_ptr<const Mesh> square_mesh(int n) {
  return make_mesh({DomainSpec::Kind::UnitSquare, n, {}});
}

// mirror-symmetric mesh: uniform bisection rounds of the one-cell square
std::shared_ptr<const Mesh> symmetric_mesh(int rounds) {
  auto mesh = square_mesh(1);
  for (int i = 0; i < rounds; ++i) mesh = uniform_refine(*mesh).first;
  return mesh;
}

// brute-force quadrature of f over element k on an n x n barycentric grid
double brute_force(const Mesh& mesh, int k, int n, const std::function<double(const Vec2&)>& f) {
  const auto c = mesh.corners(k);
  const double cell_area = mesh.area(k) / (n * n);
  double s = 0.0;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n - i; ++j) {
      const double l1u = (i + 1.0 / 3.0) / n, l2u = (j + 1.0 / 3.0) / n;
      s += f(c[0] * (1 - l1u - l2u) + c[1] * l1u + c[2] * l2u);
      if (j < n - i - 1) {
        const double l1d = (i + 2.0 / 3.0) / n, l2d = (j + 2.0 / 3.0) / n;
        s += f(c[0] * (1 - l1d - l2d) + c[1] * l1d + c[2] * l2d);
      }
    }
  }
  return s * cell_area;
}

}  // namespace

TEST_CASE("componentwise clamp") {
  CHECK(norm(clamp({2.5, -3}, {-1, -1}, {1, 1}) - Vec2{1, -1}) == 0.0);
  CHECK(norm(clamp({0.5, 0.5}, {0, 0}, {1, 1}) - Vec2{0.5, 0.5}) == 0.0);
  CHECK(norm(clamp({-1, 1}, {-1, -1}, {1, 1}) - Vec2{-1, 1}) == 0.0);
}

TEST_CASE("problem data validation") {
  ProblemData bad;
  bad.f = [](const Vec2&) { return Vec2{0, 0}; };
  bad.y_d = bad.f;
  bad.alpha = -1.0;
  CHECK_THROWS(bad.validate());
  bad.alpha = 0.1;
  bad.ua = {1, 1};
  bad.ub = {0, 0};
  CHECK_THROWS(bad.validate());
}

TEST_CASE("clamped load: inactive bounds equal mass times -p/alpha") {
  auto space = std::make_shared<const CrSpace>(square_mesh(2));
  CrField p(space);
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  for (int i = 0; i < space->num_dofs(); ++i) p.coeffs[i] = dist(rng);
  const double alpha = 1e6;  // clamp never activates
  const ClampedField u = ClampedField::pure(p, alpha, {-1, -1}, {1, 1});
  const auto load = assemble_clamped_load(*space, u);
  CrField scaled(space);
  scaled.coeffs = p.coeffs * (-1.0 / alpha);
  const auto oracle = assemble_load(*space, scaled);
  CHECK((load - oracle).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("clamped load: everywhere-active bounds equal the constant load") {
  auto space = std::make_shared<const CrSpace>(square_mesh(2));
  CrField p(space);
  p.coeffs.setConstant(1.0);  // -p/alpha strongly negative
  const Vec2 ua{-0.25, -0.5}, ub{1, 1};
  const ClampedField u = ClampedField::pure(p, 1e-6, ua, ub);
  const auto load = assemble_clamped_load(*space, u);
  const auto oracle = assemble_load(*space, [&](const Vec2&) { return ua; });
  CHECK((load - oracle).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("clamped load: kink case against the brute-force oracle") {
  DomainSpec spec;
  spec.kind = DomainSpec::Kind::Polygon;
  spec.subdivisions = 1;
  spec.polygon = {{0, 0}, {1, 0}, {0, 1}};
  auto space = std::make_shared<const CrSpace>(make_mesh(spec));
  const Mesh& mesh = *space->mesh;
  // unclamped first component is x - 1/2: upper bound 0 puts the kink at x = 1/2
  const double alpha = 0.5;
  const CrField p = interpolate(
      space, [&](const Vec2& q) { return Vec2{-alpha * (q.x - 0.5), -alpha * 0.25}; }, false);
  const Vec2 ua{-1, -1}, ub{0, 1};
  const ClampedField u = ClampedField::pure(p, alpha, ua, ub);
  const auto load = assemble_clamped_load(*space, u);

  const auto lg = barycentric_gradients(mesh, 0);
  const Vec2 centroid = mesh.centroid(0);
  for (int i = 0; i < 3; ++i) {
    for (int comp = 0; comp < 2; ++comp) {
      const double oracle = brute_force(mesh, 0, 1024, [&](const Vec2& x) {
        const double phi = 1.0 / 3.0 - 2.0 * dot(lg[i], x - centroid);
        return u.eval(0, x)[comp] * phi;
      });
      const int d = CrSpace::dof(mesh.tri_edges[0][i], comp);
      CHECK(load[d] == doctest::Approx(oracle).epsilon(1e-6));
    }
  }
}

TEST_CASE("kkt: self-consistent target converges immediately to zero control") {
  auto mesh = square_mesh(2);
  auto space = std::make_shared<const CrSpace>(mesh);
  auto f = [](const Vec2& q) { return Vec2{q.y, 1.0 - q.x}; };
  const StokesSolution y0 = solve_stokes(space, f);
  const CrField y0_copy = y0.velocity;

  ProblemData data;
  data.f = f;
  data.alpha = 0.1;
  data.ua = {-1, -1};
  data.ub = {1, 1};
  data.y_d = [y0_copy, mesh](const Vec2& q) {
    for (int k = 0; k < mesh->num_triangles(); ++k) {
      const auto bary = barycentric(*mesh, k, q);
      if (std::min({bary[0], bary[1], bary[2]}) >= -1e-12) return evaluate(y0_copy, k, bary);
    }
    return Vec2{0, 0};
  };
  const KktSolution sol = solve_kkt(data, mesh);
  CHECK(sol.iterations.size() <= 2);
  CHECK(l2_norm(sol.control) < 1e-10);
  CHECK(broken_norms(sol.adjoint).h1 < 1e-9);
}

TEST_CASE("kkt: wide bounds agree with the unconstrained linear oracle") {
  auto mesh = square_mesh(3);
  ProblemData data;
  data.f = [](const Vec2& q) { return Vec2{q.y * q.y, -q.x}; };
  data.y_d = [](const Vec2& q) { return Vec2{std::sin(q.x), 0.0}; };
  data.alpha = 0.05;
  data.ua = {-100, -100};
  data.ub = {100, 100};
  const KktSolution it = solve_kkt(data, mesh, 1e-11);
  const KktSolution lin = solve_kkt_unconstrained_linear(data, mesh);
  CHECK((it.state.coeffs - lin.state.coeffs).cwiseAbs().maxCoeff() < 1e-9);
  CHECK((it.adjoint.coeffs - lin.adjoint.coeffs).cwiseAbs().maxCoeff() < 1e-9);
  CHECK(clamped_distance(it.control, lin.control) < 1e-9);
}

TEST_CASE("kkt on the manufactured control case") {
  const ManufacturedCase mc = manufactured_problem("ocp-square");
  CHECK(mc.strong_residual() < 1e-10);

  SUBCASE("both active and inactive regions are nonempty (100x100 sampling)") {
    int active = 0, inactive = 0;
    for (int i = 0; i <= 100; ++i)
      for (int j = 0; j <= 100; ++j) {
        const Vec2 x{i / 100.0, j / 100.0};
        const Vec2 g = mc.p_exact.eval(x) * (-1.0 / mc.alpha);
        const Vec2 c = clamp(g, mc.ua, mc.ub);
        if (c.x != g.x || c.y != g.y)
          ++active;
        else
          ++inactive;
      }
    MESSAGE("active ", active, ", inactive ", inactive);
    CHECK(active > 0);
    CHECK(inactive > 0);
  }

  SUBCASE("solution invariants") {
    auto mesh = uniform_refine(*make_mesh(mc.domain)).first;
    const double tol = 1e-10;
    const KktSolution sol = solve_kkt(mc.data(), mesh, tol);

    const double energy_y = broken_norms(sol.state).h1;
    const double energy_p = broken_norms(sol.adjoint).h1;
    CHECK(elementwise_divergence(sol.state).cwiseAbs().maxCoeff() < 1e-10 * energy_y);
    CHECK(elementwise_divergence(sol.adjoint).cwiseAbs().maxCoeff() < 1e-10 * energy_p);
    CHECK(std::abs(weighted_mean(sol.pressure)) < 1e-10);
    CHECK(std::abs(weighted_mean(sol.adjoint_pressure)) < 1e-10);
    CHECK(vi_residual(sol) <= tol);

    // bounds hold pointwise at quadrature points; complementarity where the
    // control is strictly inside the box
    const auto& rule = tri_rule_deg4();
    const double inset = 1e-6;
    for (int k = 0; k < mesh->num_triangles(); ++k) {
      const auto c = mesh->corners(k);
      for (const auto& qp : rule.points) {
        const Vec2 x = qp.l0 * c[0] + qp.l1 * c[1] + qp.l2 * c[2];
        const Vec2 u = sol.control.eval(k, x);
        CHECK(u.x >= mc.ua.x - 1e-14);
        CHECK(u.x <= mc.ub.x + 1e-14);
        CHECK(u.y >= mc.ua.y - 1e-14);
        CHECK(u.y <= mc.ub.y + 1e-14);
        const Vec2 p = element_value(sol.adjoint, k, x);
        for (int comp = 0; comp < 2; ++comp) {
          const double lo = comp == 0 ? mc.ua.x : mc.ua.y;
          const double hi = comp == 0 ? mc.ub.x : mc.ub.y;
          if (u[comp] > lo + inset && u[comp] < hi - inset)
            CHECK(std::abs(mc.alpha * u[comp] + p[comp]) <= 10 * tol);
        }
      }
    }
  }
}

TEST_CASE("kkt: damped path with many iterations keeps the objective monotone") {
  const ManufacturedCase mc = manufactured_problem("ocp-square", 7e-4);
  auto mesh = square_mesh(3);
  const KktSolution sol = solve_kkt(mc.data(), mesh, 1e-10, 200);
  CHECK_FALSE(sol.used_active_set);
  REQUIRE(sol.iterations.size() >= 6);
  for (std::size_t i = sol.iterations.size() - 5; i < sol.iterations.size(); ++i)
    CHECK(sol.iterations[i].objective <= sol.iterations[i - 1].objective + 1e-14);
  CHECK(sol.iterations.back().vi_residual <= 1e-10);
}

TEST_CASE("kkt: active-set fallback matches the fixed point") {
  const ManufacturedCase mc = manufactured_problem("ocp-square");
  auto mesh = square_mesh(2);
  const KktSolution direct = solve_kkt(mc.data(), mesh, 1e-10, 200);
  // starve the fixed point so the fallback engages
  const KktSolution fallback = solve_kkt(mc.data(), mesh, 1e-10, 1);
  CHECK(fallback.used_active_set);
  CHECK((direct.state.coeffs - fallback.state.coeffs).cwiseAbs().maxCoeff() < 1e-8);
  CHECK((direct.adjoint.coeffs - fallback.adjoint.coeffs).cwiseAbs().maxCoeff() < 1e-8);
  CHECK(vi_residual(fallback) <= 1e-10);
}

TEST_CASE("kkt: tiny alpha engages the fallback and still solves") {
  const ManufacturedCase mc = manufactured_problem("ocp-square", 1e-4);
  auto mesh = square_mesh(2);
  const KktSolution sol = solve_kkt(mc.data(), mesh, 1e-10, 20);
  CHECK(vi_residual(sol) <= 1e-10);
}

TEST_CASE("vi residual") {
  auto mesh = square_mesh(2);
  auto space = std::make_shared<const CrSpace>(mesh);

  SUBCASE("hand-built violation: control at the upper bound, projection interior") {
    CrField huge(space);
    huge.coeffs.setConstant(-100.0);  // -p/alpha large positive -> clamp at ub
    const Vec2 ua{-1, -1}, ub{0.5, 0.5};
    const double alpha = 2.0;
    KktSolution sol;
    sol.control = ClampedField::pure(huge, alpha, ua, ub);
    CrField interior(space);
    interior.coeffs.setConstant(-0.2);  // -p/alpha = 0.1, inside the box
    sol.adjoint = interior;
    const double res = vi_residual(sol);
    // || ub - 0.1 || over the unit square, componentwise 0.4
    CHECK(res == doctest::Approx(std::sqrt(2 * 0.4 * 0.4)).epsilon(1e-12));
  }

  SUBCASE("alpha scaling invariance") {
    const CrField p =
        interpolate(space, [](const Vec2& q) { return Vec2{q.x - 0.4, q.y * 0.5}; }, false);
    CrField p_half = p;
    p_half.coeffs *= 0.5;
    const Vec2 ua{-0.3, -0.3}, ub{0.3, 0.3};
    const CrField other =
        interpolate(space, [](const Vec2& q) { return Vec2{0.2 - q.y, q.x * 0.3}; }, false);
    CrField other_half = other;
    other_half.coeffs *= 0.5;
    KktSolution a, b;
    a.control = ClampedField::pure(p, 1.0, ua, ub);
    a.adjoint = other;
    b.control = ClampedField::pure(p_half, 0.5, ua, ub);
    b.adjoint = other_half;
    CHECK(vi_residual(a) == doctest::Approx(vi_residual(b)).epsilon(1e-12));
  }
}

TEST_CASE("kkt: mirror symmetry of the data mirrors the solution") {
  auto mesh = symmetric_mesh(2);
  auto reflect = [](const Vec2& q) { return Vec2{1.0 - q.x, q.y}; };
  auto f = [](const Vec2& q) { return Vec2{q.x * q.y, q.x + 0.2 * q.y}; };
  auto yd = [](const Vec2& q) { return Vec2{q.y - 0.5, 0.3 * q.x}; };

  ProblemData data;
  data.f = f;
  data.y_d = yd;
  data.alpha = 0.05;
  data.ua = {-0.05, -0.05};
  data.ub = {0.05, 0.05};

  ProblemData mirrored = data;
  mirrored.f = [&](const Vec2& q) {
    const Vec2 v = f(reflect(q));
    return Vec2{-v.x, v.y};
  };
  mirrored.y_d = [&](const Vec2& q) {
    const Vec2 v = yd(reflect(q));
    return Vec2{-v.x, v.y};
  };

  const KktSolution a = solve_kkt(data, mesh, 1e-11);
  const KktSolution b = solve_kkt(mirrored, mesh, 1e-11);

  const Mesh& m = *mesh;
  for (int e = 0; e < m.num_edges(); ++e) {
    const Vec2 target = reflect(m.edge_midpoint(e));
    int match = -1;
    for (int e2 = 0; e2 < m.num_edges(); ++e2)
      if (norm(m.edge_midpoint(e2) - target) < 1e-12) {
        match = e2;
        break;
      }
    REQUIRE(match >= 0);
    CHECK(b.state.dof(match, 0) == doctest::Approx(-a.state.dof(e, 0)).epsilon(1e-9));
    CHECK(b.state.dof(match, 1) == doctest::Approx(a.state.dof(e, 1)).epsilon(1e-9));
  }
}

TEST_CASE("kkt rejects bad tolerances") {
  const ManufacturedCase mc = manufactured_problem("ocp-square");
  CHECK_THROWS(solve_kkt(mc.data(), square_mesh(1), -1.0));
}
