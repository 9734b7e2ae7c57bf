#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "crstokes/manufactured.hpp"
#include "crstokes/afem.hpp"
#include "crstokes/stokes.hpp"

using namespace crstokes;

TEST_CASE("zero load gives the zero solution") {
  auto space = std::make_shared<const CrSpace>(make_mesh({DomainSpec::Kind::UnitSquare, 2, {}}));
  const auto sol = solve_stokes(space, [](const Vec2&) { return Vec2{0, 0}; });
  CHECK(sol.velocity.coeffs.cwiseAbs().maxCoeff() < 1e-13);
  CHECK(sol.pressure.values.cwiseAbs().maxCoeff() < 1e-13);
}

TEST_CASE("discrete incompressibility and zero pressure mean") {
  auto space = std::make_shared<const CrSpace>(make_mesh({DomainSpec::Kind::LShape, 2, {}}));
  const auto sol = solve_stokes(space, [](const Vec2& p) { return Vec2{p.y + 1, -p.x}; });
  const double energy = broken_norms(sol.velocity).h1;
  CHECK(energy > 0);
  CHECK(elementwise_divergence(sol.velocity).cwiseAbs().maxCoeff() < 1e-10 * energy);
  CHECK(std::abs(weighted_mean(sol.pressure)) < 1e-10);
  CHECK(sol.momentum_residual < 1e-11);
}

TEST_CASE("manufactured convergence at first order in energy") {
  ManufacturedCase mc = manufactured_problem("stokes-square");
  CHECK(mc.strong_residual() < 1e-10);
  mc.domain.subdivisions = 4;
  auto mesh = make_mesh(mc.domain);
  std::vector<double> hs, e_energy, e_l2;
  for (int l = 0; l < 5; ++l) {
    auto space = std::make_shared<const CrSpace>(mesh);
    const auto sol = solve_stokes(space, mc.stokes_load());
    const auto err = manufactured_errors(mc, sol);
    hs.push_back(mesh_size(*mesh));
    e_energy.push_back(err.energy_y);
    e_l2.push_back(err.l2_y);
    mesh = uniform_refine(*mesh).first;
  }
  const double slope_energy = rate_fit(hs, e_energy);
  const double slope_l2 = rate_fit(hs, e_l2);
  MESSAGE("energy slope ", slope_energy, ", l2 slope ", slope_l2);
  CHECK(slope_energy > 0.8);
  CHECK(slope_energy < 1.2);
  CHECK(slope_l2 > 1.6);
  CHECK(slope_l2 < 2.4);
}

TEST_CASE("adjoint coupling flips the pressure sign") {
  auto space = std::make_shared<const CrSpace>(make_mesh({DomainSpec::Kind::UnitSquare, 2, {}}));
  StokesOperator op(space);
  auto g = [](const Vec2& p) { return Vec2{std::sin(3 * p.x), p.y * p.y}; };
  const auto a = op.solve(assemble_load(*space, g), false);
  const auto b = op.solve(assemble_load(*space, g), true);
  CHECK((a.velocity.coeffs - b.velocity.coeffs).cwiseAbs().maxCoeff() < 1e-12);
  CHECK((a.pressure.values + b.pressure.values).cwiseAbs().maxCoeff() < 1e-11);
}

TEST_CASE("solution depends linearly on the load") {
  auto space = std::make_shared<const CrSpace>(make_mesh({DomainSpec::Kind::UnitSquare, 2, {}}));
  StokesOperator op(space);
  auto g1 = [](const Vec2& p) { return Vec2{p.x * p.y, -p.x}; };
  auto g2 = [](const Vec2& p) { return Vec2{1.0, std::cos(p.y)}; };
  const auto s1 = op.solve(assemble_load(*space, g1));
  const auto s2 = op.solve(assemble_load(*space, g2));
  const auto s12 = op.solve(assemble_load(*space, [&](const Vec2& p) { return g1(p) + g2(p); }));
  const Eigen::VectorXd sum = s1.velocity.coeffs + s2.velocity.coeffs;
  const double scale = std::max(1.0, sum.cwiseAbs().maxCoeff());
  CHECK((s12.velocity.coeffs - sum).cwiseAbs().maxCoeff() < 1e-10 * scale);
}

TEST_CASE("saddle solve agrees with the kernel-basis solve") {
  auto space = std::make_shared<const CrSpace>(make_mesh({DomainSpec::Kind::UnitSquare, 3, {}}));
  REQUIRE(space->mesh->num_triangles() <= 400);
  auto g = [](const Vec2& p) { return Vec2{p.y, p.x * p.x}; };
  const Eigen::VectorXd load = assemble_load(*space, g);
  const auto saddle = solve_stokes(space, g);
  const CrField reduced = solve_stokes_reduced_kernel(space, load);
  CHECK((saddle.velocity.coeffs - reduced.coeffs).cwiseAbs().maxCoeff() < 1e-9);
}
