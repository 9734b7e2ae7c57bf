#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <sstream>

#include "crstokes/verify.hpp"

using namespace crstokes;

namespace {

const AfemRun& adaptive_run() {
  static const AfemRun run = [] {
    const ManufacturedCase mc = manufactured_problem("ocp-square");
    AfemConfig cfg;
    cfg.theta = 0.3;
    cfg.max_dofs = 4000;
    cfg.max_levels = 40;
    cfg.compute_errors = false;
    return afem_run(mc, cfg);
  }();
  return run;
}

}  // namespace

TEST_CASE("manufactured problems are consistent and validated") {
  for (const char* id : {"stokes-square", "ocp-square"}) {
    const ManufacturedCase mc = manufactured_problem(id);
    CHECK(mc.strong_residual() < 1e-10);
    CHECK(mc.has_closed_forms);
  }
  const ManufacturedCase ls = manufactured_problem("ocp-lshape");
  CHECK_FALSE(ls.has_closed_forms);
  CHECK_THROWS(manufactured_problem("no-such-case"));

  // zero-mean exact pressures on the unit square
  const ManufacturedCase mc = manufactured_problem("ocp-square");
  CHECK(std::abs(mc.r_exact.integrate_triangle({0, 0}, {1, 0}, {1, 1}) +
                 mc.r_exact.integrate_triangle({0, 0}, {1, 1}, {0, 1})) < 1e-14);
  CHECK(std::abs(mc.s_exact.integrate_triangle({0, 0}, {1, 0}, {1, 1}) +
                 mc.s_exact.integrate_triangle({0, 0}, {1, 1}, {0, 1})) < 1e-14);
}

TEST_CASE("axiom checks on the adaptive run") {
  const AfemRun& run = adaptive_run();
  REQUIRE(run.trace.rows.size() >= 8);
  const AxiomReport rep = check_axioms(run);

  for (const auto& c : rep.checks) {
    INFO(c.name, ": constant ", c.constant, ", drift ", c.drift);
    CHECK(std::isfinite(c.constant));
    CHECK_FALSE(c.violation);
    CHECK(c.pass);
    for (const auto& e : c.entries) {
      CHECK(std::isfinite(e.ratio));
      CHECK(e.ratio >= 0.0);
    }
  }
  CHECK(rep.lambda1 > 0);
  CHECK(rep.lambda3 > 0);
  CHECK(rep.lambda4 > 0);
  CHECK(rep.rho2 == doctest::Approx(std::pow(2.0, -0.25)).epsilon(1e-15));

  // one-term tail of the quasi-orthogonality sum is a discrete-reliability
  // bound: delta_{L-1,L}^2 / eta_{L-1}^2 <= Lambda3
  const AxiomCheck a3 = check_discrete_reliability(run);
  const auto& rows = run.trace.rows;
  int last_l = -1;
  for (int l = 0; l + 1 < static_cast<int>(rows.size()); ++l)
    if (std::isfinite(rows[l].delta_next)) last_l = l;
  REQUIRE(last_l >= 0);
  const double one_term =
      rows[last_l].delta_next * rows[last_l].delta_next / (rows[last_l].eta * rows[last_l].eta);
  CHECK(one_term <= a3.constant * 1.0001 + 1e-12);
}

TEST_CASE("axiom stability entries vanish for identical solutions") {
  // a run with a single refinement where nothing changes is synthetic; instead
  // check the degenerate guard: no levels means empty checks that still pass
  AfemRun empty;
  const AxiomCheck c = check_axiom_stability(empty);
  CHECK(c.entries.empty());
  CHECK_FALSE(c.pass);
}

TEST_CASE("axiom json export") {
  const AfemRun& run = adaptive_run();
  const AxiomReport rep = check_axioms(run);
  std::stringstream ss;
  write_axiom_json(ss, rep, "config-line");
  const std::string s = ss.str();
  CHECK(s.find("\"lambda1\"") != std::string::npos);
  CHECK(s.find("A2-reduction-eta") != std::string::npos);
  CHECK(s.find("config-line") != std::string::npos);
}

TEST_CASE("error equivalence bands on uniform levels") {
  const ManufacturedCase mc = manufactured_problem("ocp-square");
  std::vector<EquivalenceReport> reports;
  auto mesh = make_mesh(mc.domain);
  for (int l = 1; l <= 4; ++l) {
    mesh = uniform_refine(*mesh).first;
    if (l < 2) continue;
    EquivalenceReport rep = check_error_equivalence(mc, mesh, 2);
    rep.level = l;
    reports.push_back(rep);
  }
  REQUIRE(reports.size() == 3);
  for (int item = 0; item < 4; ++item) {
    double lo = 1e300, hi = 0;
    for (const auto& r : reports) {
      INFO("item ", item + 1, " level ", r.level, " ratio ", r.items[item].ratio_lr);
      CHECK(std::isfinite(r.items[item].ratio_lr));
      CHECK(r.items[item].ratio_lr > 0);
      lo = std::min(lo, r.items[item].ratio_lr);
      hi = std::max(hi, r.items[item].ratio_lr);
    }
    MESSAGE("item ", item + 1, " band ", hi / lo, " (", lo, ", ", hi, ")");
    CHECK(hi / lo < 10.0);
  }
  std::stringstream ss;
  write_equivalence_json(ss, reports, "cfg");
  CHECK(ss.str().find("ratio_lr") != std::string::npos);
}

TEST_CASE("a priori rates for the stokes case") {
  ManufacturedCase mc = manufactured_problem("stokes-square");
  mc.domain.subdivisions = 4;
  const RateTable t = check_apriori_rates(mc, 5);
  MESSAGE("stokes rates: energy ", t.rate_energy_y, ", l2 ", t.rate_l2_y);
  CHECK(t.rate_energy_y > 0.8);
  CHECK(t.rate_energy_y < 1.2);
  CHECK(t.rate_l2_y > 1.6);
  CHECK(t.rate_l2_y < 2.4);
  std::stringstream ss;
  write_rates_csv(ss, t, "cfg");
  CHECK(ss.str().find("err_energy_y") != std::string::npos);
}

TEST_CASE("a priori rates for the control case") {
  ManufacturedCase mc = manufactured_problem("ocp-square");
  mc.domain.subdivisions = 4;
  const RateTable t = check_apriori_rates(mc, 5);
  MESSAGE("ocp rates: energy_sum ", t.rate_energy_sum, ", l2_uyp ", t.rate_l2_uyp, ", l2_all ",
          t.rate_l2_all);
  CHECK(t.rate_energy_sum > 0.85);
  CHECK(t.rate_energy_sum < 1.15);
  CHECK(t.rate_l2_uyp > 1.6);
  CHECK(t.rate_l2_uyp < 2.4);
  // the five-term L2 sum is pinned at first order by the piecewise-constant
  // pressure approximation
  CHECK(t.rate_l2_all < 1.6);
}

TEST_CASE("embedding ratios are level-stable") {
  const RatioCheck c =
      check_embedding_ratios({DomainSpec::Kind::UnitSquare, 2, {}}, 4, 20, 12345);
  MESSAGE("embedding constants per level: ", c.per_level[0], " ... ", c.per_level.back());
  CHECK(c.pass);
  CHECK(c.overall > 0);
  CHECK(c.overall < 1.0);  // Poincare constant of the unit square is well below one
}

TEST_CASE("auxiliary-problem stability is level-stable") {
  const ManufacturedCase mc = manufactured_problem("stokes-square");
  const RatioCheck c = check_stability_bounds(mc, 4);
  MESSAGE("stability ratios: ", c.per_level[0], " ... ", c.per_level.back());
  CHECK(c.pass);
}

TEST_CASE("discrete jump control is level-stable") {
  const RatioCheck c =
      check_discrete_jump_control({DomainSpec::Kind::UnitSquare, 2, {}}, 4, 20, 777, 2.0);
  MESSAGE("jump-control constants: ", c.per_level[0], " ... ", c.per_level.back());
  CHECK(c.pass);
  CHECK(c.drift < 2.0);
}
