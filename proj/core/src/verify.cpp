#include "crstokes/verify.hpp"

#include <cmath>
#include <cstdio>
#include <ostream>
#include <random>

#include "json.hpp"

namespace crstokes {

namespace {

constexpr double kRho2Eta = 0.8408964152537145;  // 2^(-1/4)
constexpr double kRho2Mu = 0.7071067811865476;   // 2^(-1/2)

void finalize_check(AxiomCheck& check, double drift_limit, int window) {
  double best = 0.0;
  double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
  const int n = static_cast<int>(check.entries.size());
  const int first = std::max(0, n - window);
  for (int i = 0; i < n; ++i) {
    const double r = check.entries[i].ratio;
    if (!std::isfinite(r)) continue;
    if (r > best) {
      best = r;
      check.attained_level = check.entries[i].level;
    }
    if (i >= first && r > 0) {
      lo = std::min(lo, r);
      hi = std::max(hi, r);
    }
  }
  check.constant = best;
  check.drift = (std::isfinite(lo) && lo > 0) ? hi / lo : 1.0;
  check.pass = !check.violation && !check.entries.empty() && std::isfinite(best) &&
               check.drift < drift_limit;
}

struct PairSets {
  std::vector<int> coarse_unrefined, fine_unrefined;  // T cap T_hat, both numberings
  std::vector<int> coarse_refined;                    // T \ T_hat
  std::vector<int> fine_new;                          // T_hat \ T
};

PairSets pair_sets(const AfemLevel& level) {
  PairSets s;
  const auto& rel = level.to_next;
  for (std::size_t k = 0; k < rel.children.size(); ++k) {
    if (rel.children[k].size() == 1) {
      s.coarse_unrefined.push_back(static_cast<int>(k));
      s.fine_unrefined.push_back(rel.children[k][0]);
    } else {
      s.coarse_refined.push_back(static_cast<int>(k));
      for (int c : rel.children[k]) s.fine_new.push_back(c);
    }
  }
  return s;
}

double delta_of(const AfemRun& run, std::size_t l) { return run.trace.rows[l].delta_next; }

}  // namespace

bool AxiomReport::all_pass() const {
  for (const auto& c : checks)
    if (!c.pass) return false;
  return true;
}

AxiomCheck check_axiom_stability(const AfemRun& run, double drift_limit, int window) {
  AxiomCheck check;
  check.name = "A1-stability-eta";
  for (std::size_t l = 0; l + 1 < run.levels.size(); ++l) {
    if (!run.levels[l].has_next) continue;
    const PairSets s = pair_sets(run.levels[l]);
    const double eta_coarse = std::sqrt(run.levels[l].report.eta2_of(s.coarse_unrefined));
    const double eta_fine = std::sqrt(run.levels[l + 1].report.eta2_of(s.fine_unrefined));
    const double lhs = std::abs(eta_fine - eta_coarse);
    const double delta = delta_of(run, l);
    if (delta <= 0) {
      if (lhs > 1e-12) check.violation = true;
      continue;
    }
    check.entries.push_back({static_cast<int>(l), lhs, delta, lhs / delta});
  }
  finalize_check(check, drift_limit, window);
  return check;
}

AxiomCheck check_axiom_stability_mu(const AfemRun& run, double drift_limit, int window) {
  AxiomCheck check;
  check.name = "A1-stability-mu";
  for (std::size_t l = 0; l + 1 < run.levels.size(); ++l) {
    if (!run.levels[l].has_next) continue;
    const PairSets s = pair_sets(run.levels[l]);
    const double mu_coarse = std::sqrt(run.levels[l].report.mu2_of(s.coarse_unrefined));
    const double mu_fine = std::sqrt(run.levels[l + 1].report.mu2_of(s.fine_unrefined));
    const double lhs = std::abs(mu_fine - mu_coarse);
    const double h = mesh_size(*run.levels[l].mesh);
    const double rhs = h * delta_of(run, l);
    if (rhs <= 0) {
      if (lhs > 1e-12) check.violation = true;
      continue;
    }
    check.entries.push_back({static_cast<int>(l), lhs, rhs, lhs / rhs});
  }
  finalize_check(check, drift_limit, window);
  return check;
}

AxiomCheck check_axiom_reduction(const AfemRun& run, double drift_limit, int window) {
  AxiomCheck check;
  check.name = "A2-reduction-eta";
  for (std::size_t l = 0; l + 1 < run.levels.size(); ++l) {
    if (!run.levels[l].has_next) continue;
    const PairSets s = pair_sets(run.levels[l]);
    if (s.coarse_refined.empty()) continue;
    const double eta_new = std::sqrt(run.levels[l + 1].report.eta2_of(s.fine_new));
    const double eta_refined = std::sqrt(run.levels[l].report.eta2_of(s.coarse_refined));
    const double delta = delta_of(run, l);
    const double slack = eta_new - kRho2Eta * eta_refined;
    if (delta <= 0) {
      if (slack > 1e-12) check.violation = true;
      continue;
    }
    check.entries.push_back({static_cast<int>(l), eta_new, eta_refined, std::max(0.0, slack / delta)});
  }
  finalize_check(check, drift_limit, window);
  return check;
}

AxiomCheck check_axiom_reduction_mu(const AfemRun& run, double drift_limit, int window) {
  AxiomCheck check;
  check.name = "A2-reduction-mu";
  for (std::size_t l = 0; l + 1 < run.levels.size(); ++l) {
    if (!run.levels[l].has_next) continue;
    const PairSets s = pair_sets(run.levels[l]);
    if (s.coarse_refined.empty()) continue;
    const double mu_new = std::sqrt(run.levels[l + 1].report.mu2_of(s.fine_new));
    const double mu_refined = std::sqrt(run.levels[l].report.mu2_of(s.coarse_refined));
    const double h = mesh_size(*run.levels[l].mesh);
    const double rhs = h * delta_of(run, l);
    const double slack = mu_new - kRho2Mu * mu_refined;
    if (rhs <= 0) {
      if (slack > 1e-12) check.violation = true;
      continue;
    }
    check.entries.push_back({static_cast<int>(l), mu_new, mu_refined, std::max(0.0, slack / rhs)});
  }
  finalize_check(check, drift_limit, window);
  return check;
}

AxiomCheck check_discrete_reliability(const AfemRun& run, double drift_limit, int window) {
  AxiomCheck check;
  check.name = "A3-discrete-reliability";
  for (std::size_t l = 0; l + 1 < run.levels.size(); ++l) {
    if (!run.levels[l].has_next) continue;
    const double delta = delta_of(run, l);
    const auto region = refinement_region(*run.levels[l].mesh, run.levels[l].to_next);
    const double eta2_region = run.levels[l].report.eta2_of(region);
    if (eta2_region <= 0) {
      if (delta > 1e-12) check.violation = true;
      continue;
    }
    check.entries.push_back(
        {static_cast<int>(l), delta * delta, eta2_region, delta * delta / eta2_region});
  }
  finalize_check(check, drift_limit, window);
  return check;
}

AxiomCheck check_quasi_orthogonality(const AfemRun& run, double drift_limit, int window) {
  AxiomCheck check;
  check.name = "A4-quasi-orthogonality";
  const auto& rows = run.trace.rows;
  const int L = static_cast<int>(rows.size());
  // entries close to the final level truncate the tail sum and underestimate
  // the constant; require at least three remaining distances
  for (int l = 0; l + 3 < L; ++l) {
    double sum = 0.0;
    for (int k = l; k + 1 < L; ++k) {
      const double d = rows[k].delta_next;
      if (std::isfinite(d)) sum += d * d;
    }
    const double eta2 = rows[l].eta * rows[l].eta;
    if (eta2 <= 0) {
      if (sum > 1e-12) check.violation = true;
      continue;
    }
    check.entries.push_back({l, sum, eta2, sum / eta2});
  }
  finalize_check(check, drift_limit, window);
  return check;
}

AxiomCheck check_quasi_orthogonality_eps(const AfemRun& run, double eps, double drift_limit,
                                         int window) {
  AxiomCheck check;
  char name[64];
  std::snprintf(name, sizeof(name), "A4-eps=%g", eps);
  check.name = name;
  const auto& rows = run.trace.rows;
  const int L = static_cast<int>(rows.size());
  for (int l = 0; l + 1 < L; ++l) {
    double sum = 0.0, eta_sum = 0.0;
    for (int k = l; k + 1 < L; ++k) {
      const double d = rows[k].delta_next;
      if (std::isfinite(d)) sum += d * d;
      eta_sum += rows[k].eta * rows[k].eta;
    }
    const double eta2 = rows[l].eta * rows[l].eta;
    if (eta2 <= 0) continue;
    check.entries.push_back({l, sum - eps * eta_sum, eta2, std::max(0.0, (sum - eps * eta_sum) / eta2)});
  }
  finalize_check(check, drift_limit, window);
  return check;
}

AxiomReport check_axioms(const AfemRun& run, double drift_limit, int window) {
  AxiomReport rep;
  rep.rho2 = kRho2Eta;
  // the drift criterion applies to Lambda1..Lambda4; the mu variants only have
  // to hold with the printed factors, i.e. with some finite constant
  const double no_drift = std::numeric_limits<double>::infinity();
  rep.checks.push_back(check_axiom_stability(run, drift_limit, window));
  rep.checks.push_back(check_axiom_stability_mu(run, no_drift, window));
  rep.checks.push_back(check_axiom_reduction(run, drift_limit, window));
  rep.checks.push_back(check_axiom_reduction_mu(run, no_drift, window));
  rep.checks.push_back(check_discrete_reliability(run, drift_limit, window));
  rep.checks.push_back(check_quasi_orthogonality(run, drift_limit, window));
  rep.checks.push_back(check_quasi_orthogonality_eps(run, 0.1, no_drift, window));
  rep.checks.push_back(check_quasi_orthogonality_eps(run, 0.01, no_drift, window));
  rep.lambda1 = rep.checks[0].constant;
  rep.lambda0 = std::max(rep.checks[1].constant, rep.checks[3].constant);
  rep.lambda2 = rep.checks[2].constant;
  rep.lambda3 = rep.checks[4].constant;
  rep.lambda4 = rep.checks[5].constant;
  return rep;
}

void write_axiom_json(std::ostream& os, const AxiomReport& report, const std::string& config_line,
                      const std::vector<RatioCheck>* extras) {
  nlohmann::ordered_json j;
  j["config"] = config_line;
  j["rho2"] = report.rho2;
  j["lambda0"] = report.lambda0;
  j["lambda1"] = report.lambda1;
  j["lambda2"] = report.lambda2;
  j["lambda3"] = report.lambda3;
  j["lambda4"] = report.lambda4;
  j["all_pass"] = report.all_pass();
  for (const auto& c : report.checks) {
    nlohmann::ordered_json jc;
    jc["name"] = c.name;
    jc["constant"] = c.constant;
    jc["drift"] = c.drift;
    jc["attained_level"] = c.attained_level;
    jc["pass"] = c.pass;
    jc["violation"] = c.violation;
    for (const auto& e : c.entries)
      jc["entries"].push_back({{"level", e.level}, {"lhs", e.lhs}, {"rhs", e.rhs}, {"ratio", e.ratio}});
    j["checks"].push_back(jc);
  }
  if (extras) {
    for (const auto& c : *extras) {
      nlohmann::ordered_json jc;
      jc["name"] = c.name;
      jc["overall"] = c.overall;
      jc["drift"] = c.drift;
      jc["pass"] = c.pass;
      jc["seed"] = c.seed;
      jc["per_level"] = c.per_level;
      j["ratio_checks"].push_back(jc);
    }
  }
  os << j.dump(2) << "\n";
}

namespace {

// int P(x) . phi_i for elementwise affine P; midpoint rule is exact
Eigen::VectorXd assemble_load_affine(const CrSpace& space, const PiecewiseAffineField& g) {
  const Mesh& mesh = *space.mesh;
  if (g.mesh->id != mesh.id) throw std::runtime_error("assemble_load_affine: mesh mismatch");
  Eigen::VectorXd load = Eigen::VectorXd::Zero(space.num_dofs());
  for (int k = 0; k < mesh.num_triangles(); ++k) {
    const auto c = mesh.corners(k);
    const double third = mesh.area(k) / 3.0;
    for (int i = 0; i < 3; ++i) {
      // phi_i equals 1 at the midpoint of edge i and 0 at the other midpoints
      const Vec2 m = midpoint(c[(i + 1) % 3], c[(i + 2) % 3]);
      const Vec2 v = g.eval(k, m);
      const int e = mesh.tri_edges[k][i];
      load[CrSpace::dof(e, 0)] += third * v.x;
      load[CrSpace::dof(e, 1)] += third * v.y;
    }
  }
  return load;
}

struct AuxSolves {
  StokesSolution state;    // (2.15)-type: load f + u_h, minus coupling
  StokesSolution adjoint;  // (2.16)-type: load y_h - y_d, plus coupling
};

AuxSolves solve_auxiliary(const ProblemData& data, const KktSolution& coarse,
                          const RefinementRelation& rel, std::shared_ptr<const Mesh> fine_mesh) {
  auto space = std::make_shared<CrSpace>(fine_mesh);
  StokesOperator op(space);
  AuxSolves aux;
  const Eigen::VectorXd f_load = assemble_load(*space, data.f, data.f_smooth) +
                                 assemble_clamped_load(*space, coarse.control, &rel);
  aux.state = op.solve(f_load);
  const Eigen::VectorXd yd_load = assemble_load(*space, data.y_d, data.yd_smooth);
  const auto y_prolonged = prolong(coarse.state, rel, fine_mesh);
  aux.adjoint = op.solve(assemble_load_affine(*space, y_prolonged) - yd_load, true);
  return aux;
}

EquivalenceItem make_item(double lhs, double rhs) {
  EquivalenceItem item;
  item.lhs = lhs;
  item.rhs = rhs;
  if (lhs == 0.0 && rhs == 0.0) {
    item.ratio_lr = item.ratio_rl = 1.0;  // degenerate equivalence
  } else {
    item.ratio_lr = rhs > 0 ? lhs / rhs : std::numeric_limits<double>::infinity();
    item.ratio_rl = lhs > 0 ? rhs / lhs : std::numeric_limits<double>::infinity();
  }
  return item;
}

}  // namespace

EquivalenceReport check_error_equivalence(const ManufacturedCase& mc,
                                          std::shared_ptr<const Mesh> mesh, int ref_gap) {
  if (!mc.has_closed_forms)
    throw std::runtime_error("check_error_equivalence: closed forms required for items 1-2");
  const ProblemData data = mc.data();
  const KktSolution sol = solve_kkt(data, mesh);
  EquivalenceReport rep;
  rep.ndof = sol.state.space->num_free() + mesh->num_triangles();

  const ExactErrors exact = manufactured_errors(mc, sol);

  // continuous auxiliary surrogate: gap uniform refinements finer
  std::shared_ptr<const Mesh> ref_mesh = mesh;
  RefinementRelation to_ref = identity_relation(*mesh);
  for (int g = 0; g < ref_gap; ++g) {
    auto [finer, rel] = uniform_refine(*ref_mesh);
    to_ref = (g == 0) ? rel : compose(to_ref, rel);
    ref_mesh = finer;
  }
  const AuxSolves aux = solve_auxiliary(data, sol, to_ref, ref_mesh);

  const auto y_pro = prolong(sol.state, to_ref, ref_mesh);
  const auto p_pro = prolong(sol.adjoint, to_ref, ref_mesh);
  const Norms ny = broken_norms(to_affine(aux.state.velocity), y_pro);
  const Norms np = broken_norms(to_affine(aux.adjoint.velocity), p_pro);
  const double nr = l2_norm_p0_diff(aux.state.pressure, sol.pressure, to_ref);
  const double ns = l2_norm_p0_diff(aux.adjoint.pressure, sol.adjoint_pressure, to_ref);

  auto sq = [](double v) { return v * v; };
  // item 1: squared energy-type totals
  const double lhs1 = sq(exact.l2_u) + sq(exact.energy_y) + sq(exact.l2_r) + sq(exact.energy_p) +
                      sq(exact.l2_s);
  const double rhs1 = sq(ny.h1) + sq(nr) + sq(np.h1) + sq(ns);
  rep.items[0] = make_item(lhs1, rhs1);
  // item 2: squared L2 totals
  const double lhs2 =
      sq(exact.l2_u) + sq(exact.l2_y) + sq(exact.l2_r) + sq(exact.l2_p) + sq(exact.l2_s);
  const double rhs2 = sq(ny.l2) + sq(nr) + sq(np.l2) + sq(ns);
  rep.items[1] = make_item(lhs2, rhs2);

  // discrete pair: T_hat = one uniform refinement
  auto [hat_mesh, rel1] = uniform_refine(*mesh);
  const KktSolution hat = solve_kkt(data, hat_mesh);
  const AuxSolves aux_h = solve_auxiliary(data, sol, rel1, hat_mesh);

  const auto y_pro1 = prolong(sol.state, rel1, hat_mesh);
  const auto p_pro1 = prolong(sol.adjoint, rel1, hat_mesh);
  const Norms hy = broken_norms(to_affine(hat.state), y_pro1);
  const Norms hp = broken_norms(to_affine(hat.adjoint), p_pro1);
  const double hr = l2_norm_p0_diff(hat.pressure, sol.pressure, rel1);
  const double hs = l2_norm_p0_diff(hat.adjoint_pressure, sol.adjoint_pressure, rel1);
  const double hu = clamped_distance(hat.control, sol.control, nullptr, &rel1, hat_mesh);

  const Norms ty = broken_norms(to_affine(aux_h.state.velocity), y_pro1);
  const Norms tp = broken_norms(to_affine(aux_h.adjoint.velocity), p_pro1);
  const double tr = l2_norm_p0_diff(aux_h.state.pressure, sol.pressure, rel1);
  const double ts = l2_norm_p0_diff(aux_h.adjoint.pressure, sol.adjoint_pressure, rel1);

  // item 3: unsquared energy-type sums
  rep.items[2] = make_item(hu + hy.h1 + hr + hp.h1 + hs, ty.h1 + tr + tp.h1 + ts);
  // item 4: unsquared L2 sums
  rep.items[3] = make_item(hu + hy.l2 + hr + hp.l2 + hs, ty.l2 + tr + tp.l2 + ts);
  return rep;
}

void write_equivalence_json(std::ostream& os, const std::vector<EquivalenceReport>& reports,
                            const std::string& config_line) {
  nlohmann::ordered_json j;
  j["config"] = config_line;
  for (const auto& r : reports) {
    nlohmann::ordered_json jr;
    jr["level"] = r.level;
    jr["ndof"] = r.ndof;
    for (int i = 0; i < 4; ++i) {
      jr["items"].push_back({{"item", i + 1},
                             {"lhs", r.items[i].lhs},
                             {"rhs", r.items[i].rhs},
                             {"ratio_lr", r.items[i].ratio_lr},
                             {"ratio_rl", r.items[i].ratio_rl}});
    }
    j["levels"].push_back(jr);
  }
  os << j.dump(2) << "\n";
}

RateTable check_apriori_rates(const ManufacturedCase& mc, int levels) {
  if (!mc.has_closed_forms) throw std::runtime_error("check_apriori_rates: closed forms required");
  RateTable table;
  table.case_id = mc.id;

  std::shared_ptr<const Mesh> mesh = make_mesh(mc.domain);
  for (int l = 0; l < levels; ++l) {
    RateRow row;
    row.h = mesh_size(*mesh);
    if (mc.pure_stokes) {
      auto space = std::make_shared<CrSpace>(mesh);
      const StokesSolution sol = solve_stokes(space, mc.stokes_load());
      row.err = manufactured_errors(mc, sol);
      row.ndof = space->num_free() + mesh->num_triangles();
    } else {
      const KktSolution sol = solve_kkt(mc.data(), mesh);
      row.err = manufactured_errors(mc, sol);
      row.ndof = sol.state.space->num_free() + mesh->num_triangles();
    }
    table.rows.push_back(row);
    if (l + 1 < levels) mesh = uniform_refine(*mesh).first;
  }

  std::vector<double> hs, e_y, e_sum, l2_y, l2_uyp, l2_all;
  for (const auto& r : table.rows) {
    hs.push_back(r.h);
    e_y.push_back(r.err.energy_y);
    l2_y.push_back(r.err.l2_y);
    if (mc.pure_stokes) {
      e_sum.push_back(r.err.energy_y + r.err.l2_r);
      l2_uyp.push_back(r.err.l2_y);
      l2_all.push_back(r.err.l2_y + r.err.l2_r);
    } else {
      e_sum.push_back(r.err.l2_u + r.err.energy_y + r.err.l2_r + r.err.energy_p + r.err.l2_s);
      l2_uyp.push_back(r.err.l2_u + r.err.l2_y + r.err.l2_p);
      l2_all.push_back(r.err.l2_u + r.err.l2_y + r.err.l2_r + r.err.l2_p + r.err.l2_s);
    }
  }
  table.rate_energy_y = rate_fit(hs, e_y);
  table.rate_energy_sum = rate_fit(hs, e_sum);
  table.rate_l2_y = rate_fit(hs, l2_y);
  table.rate_l2_uyp = rate_fit(hs, l2_uyp);
  table.rate_l2_all = rate_fit(hs, l2_all);
  return table;
}

void write_rates_csv(std::ostream& os, const RateTable& table, const std::string& config_line) {
  os << "# " << config_line << "\n";
  os << "level,h,ndof,err_energy_y,err_energy_p,err_l2_y,err_l2_p,err_l2_r,err_l2_s,err_l2_u\n";
  char buf[320];
  for (std::size_t l = 0; l < table.rows.size(); ++l) {
    const auto& r = table.rows[l];
    std::snprintf(buf, sizeof(buf), "%zu,%.12g,%d,%.12g,%.12g,%.12g,%.12g,%.12g,%.12g,%.12g\n", l,
                  r.h, r.ndof, r.err.energy_y, r.err.energy_p, r.err.l2_y, r.err.l2_p, r.err.l2_r,
                  r.err.l2_s, r.err.l2_u);
    os << buf;
  }
  std::snprintf(buf, sizeof(buf),
                "# rates: energy_y=%.4f energy_sum=%.4f l2_y=%.4f l2_uyp=%.4f l2_all=%.4f\n",
                table.rate_energy_y, table.rate_energy_sum, table.rate_l2_y, table.rate_l2_uyp,
                table.rate_l2_all);
  os << buf;
}

CrField random_cr_field(std::shared_ptr<const CrSpace> space, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  CrField f(space);
  for (int i = 0; i < space->num_free(); ++i) f.coeffs[space->free_dofs[i]] = dist(rng);
  return f;
}

namespace {

void finalize_ratio(RatioCheck& check, double drift_limit) {
  double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
  for (double v : check.per_level) {
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  check.overall = hi;
  check.drift = lo > 0 ? hi / lo : 1.0;
  check.pass = !check.per_level.empty() && std::isfinite(hi) && check.drift < drift_limit;
}

}  // namespace

RatioCheck check_embedding_ratios(const DomainSpec& domain, int levels, int samples,
                                  std::uint64_t seed, double drift_limit) {
  RatioCheck check;
  check.name = "discrete-sobolev-embedding";
  check.seed = seed;
  std::shared_ptr<const Mesh> mesh = make_mesh(domain);
  std::shared_ptr<const CrSpace> prev_space;
  RefinementRelation rel;
  for (int l = 0; l < levels; ++l) {
    auto space = std::make_shared<const CrSpace>(mesh);
    double worst = 0.0;
    for (int s = 0; s < samples; ++s) {
      const CrField v = random_cr_field(space, seed + 1000 * l + s);
      const Norms n = broken_norms(v);
      if (n.h1 > 0) worst = std::max(worst, n.l2 / n.h1);
      if (prev_space) {  // difference of fields across nested meshes (V_h + V_hat)
        const CrField w = random_cr_field(prev_space, seed + 777 + 1000 * l + s);
        const auto wp = prolong(w, rel, mesh);
        const Norms nd = broken_norms(to_affine(v), wp);
        if (nd.h1 > 0) worst = std::max(worst, nd.l2 / nd.h1);
      }
    }
    check.per_level.push_back(worst);
    if (l + 1 < levels) {
      prev_space = space;
      auto [finer, r] = uniform_refine(*mesh);
      rel = r;
      mesh = finer;
    }
  }
  finalize_ratio(check, drift_limit);
  return check;
}

RatioCheck check_stability_bounds(const ManufacturedCase& mc, int levels, double drift_limit) {
  RatioCheck check;
  check.name = "auxiliary-problem-stability";
  std::shared_ptr<const Mesh> mesh = make_mesh(mc.domain);
  const VecField load = mc.stokes_load();
  for (int l = 0; l < levels; ++l) {
    auto space = std::make_shared<CrSpace>(mesh);
    StokesOperator op(space);
    double data_norm = 0.0;
    {
      const auto& rule = tri_rule_errors();
      double s = 0.0;
      for (int k = 0; k < mesh->num_triangles(); ++k)
        s += rule.integrate(mesh->corners(k), mesh->area(k),
                            [&](const Vec2& x) { return norm2(load(x)); });
      data_norm = std::sqrt(s);
    }
    double worst = 0.0;
    for (bool adjoint : {false, true}) {
      const StokesSolution sol = op.solve(load, adjoint);
      const Norms n = broken_norms(sol.velocity);
      const double ratio = (n.h1 + l2_norm(sol.pressure)) / data_norm;
      worst = std::max(worst, ratio);
    }
    check.per_level.push_back(worst);
    if (l + 1 < levels) mesh = uniform_refine(*mesh).first;
  }
  finalize_ratio(check, drift_limit);
  return check;
}

RatioCheck check_discrete_jump_control(const DomainSpec& domain, int levels, int samples,
                                       std::uint64_t seed, double drift_limit) {
  RatioCheck check;
  check.name = "discrete-jump-control";
  check.seed = seed;
  std::shared_ptr<const Mesh> mesh = make_mesh(domain);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  for (int l = 0; l < levels; ++l) {
    const int nT = mesh->num_triangles();
    double worst = 0.0;
    for (int s = 0; s < samples; ++s) {
      // random piecewise affine scalar, values at the three corners
      std::vector<std::array<double, 3>> g(nT);
      for (auto& a : g) a = {dist(rng), dist(rng), dist(rng)};
      auto value = [&](int k, int vertex_id) {
        const auto& t = mesh->triangles[k];
        for (int i = 0; i < 3; ++i)
          if (t.v[i] == vertex_id) return g[k][i];
        return 0.0;
      };
      double jumps = 0.0, norm2g = 0.0;
      for (int k = 0; k < nT; ++k) {
        const double hk = std::sqrt(mesh->area(k));
        double esum = 0.0;
        for (int i = 0; i < 3; ++i) {
          const int e = mesh->tri_edges[k][i];
          const int nb = mesh->neighbor(k, i);
          const double len = mesh->edge_length(e);
          const int va = mesh->edges[e].a, vb = mesh->edges[e].b;
          double ja = value(k, va), jb = value(k, vb);
          if (nb >= 0) {
            ja -= value(nb, va);
            jb -= value(nb, vb);
          }
          // affine jump: simpson is exact
          const double jm = 0.5 * (ja + jb);
          esum += len / 6.0 * (ja * ja + 4.0 * jm * jm + jb * jb);
        }
        jumps += hk * esum;
        const auto& a = g[k];
        // exact integral of the squared affine via the midpoint rule
        const double m0 = 0.5 * (a[1] + a[2]), m1 = 0.5 * (a[0] + a[2]), m2 = 0.5 * (a[0] + a[1]);
        norm2g += mesh->area(k) / 3.0 * (m0 * m0 + m1 * m1 + m2 * m2);
      }
      if (norm2g > 0) worst = std::max(worst, jumps / norm2g);
    }
    check.per_level.push_back(worst);
    if (l + 1 < levels) mesh = uniform_refine(*mesh).first;
  }
  finalize_ratio(check, drift_limit);
  return check;
}

}  // namespace crstokes
