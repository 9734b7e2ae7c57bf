#include "crstokes/afem.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <ostream>

namespace crstokes {

void AfemConfig::validate() const {
  if (!(theta > 0.0 && theta < 1.0) && !uniform)
    throw std::runtime_error("AfemConfig: theta must lie in (0,1)");
  if (max_dofs < 1 || max_levels < 1) throw std::runtime_error("AfemConfig: empty budget");
  if (!(kkt_tol > 0)) throw std::runtime_error("AfemConfig: tolerance must be positive");
}

std::vector<int> dorfler_mark(const Eigen::VectorXd& indicators, double theta) {
  const int n = static_cast<int>(indicators.size());
  double total = 0.0;
  for (int k = 0; k < n; ++k) {
    if (indicators[k] < 0) throw std::runtime_error("dorfler_mark: negative indicator");
    total += indicators[k];
  }
  if (total <= 0.0) return {};
  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    if (indicators[a] != indicators[b]) return indicators[a] > indicators[b];
    return a < b;
  });
  std::vector<int> marked;
  double acc = 0.0;
  for (int k : order) {
    if (indicators[k] <= 0.0) break;
    marked.push_back(k);
    acc += indicators[k];
    if (acc >= theta * total) break;
  }
  std::sort(marked.begin(), marked.end());
  return marked;
}

namespace {

int ndof_of(const CrSpace& space) { return space.num_free() + space.mesh->num_triangles(); }

AfemLevelErrors errors_from_exact(const ManufacturedCase& mc, const KktSolution& sol) {
  const ExactErrors e = manufactured_errors(mc, sol);
  AfemLevelErrors r;
  r.energy_y = e.energy_y;
  r.energy_p = e.energy_p;
  r.l2_y = e.l2_y;
  r.l2_p = e.l2_p;
  r.l2_r = e.l2_r;
  r.l2_s = e.l2_s;
  r.l2_u = e.l2_u;
  return r;
}

// reference-based errors: a KKT solve `gap` uniform refinements beyond the
// finest level serves as the surrogate exact solution
void fill_reference_errors(const ManufacturedCase& mc, const AfemConfig& cfg, AfemRun& run) {
  if (run.levels.empty()) return;
  const ProblemData data = mc.data();

  std::shared_ptr<const Mesh> ref_mesh = run.levels.back().mesh;
  RefinementRelation tail = identity_relation(*ref_mesh);
  for (int g = 0; g < cfg.reference_gap; ++g) {
    auto [finer, rel] = uniform_refine(*ref_mesh);
    tail = (g == 0) ? rel : compose(tail, rel);
    ref_mesh = finer;
  }
  const KktSolution ref = solve_kkt(data, ref_mesh, cfg.kkt_tol, cfg.kkt_max_iter);
  const auto ref_y = to_affine(ref.state);
  const auto ref_p = to_affine(ref.adjoint);

  // relation from each level down to the reference mesh
  std::vector<RefinementRelation> to_ref(run.levels.size());
  to_ref.back() = tail;
  for (int l = static_cast<int>(run.levels.size()) - 2; l >= 0; --l)
    to_ref[l] = compose(run.levels[l].to_next, to_ref[l + 1]);

  for (std::size_t l = 0; l < run.levels.size(); ++l) {
    const KktSolution& sol = run.levels[l].sol;
    AfemLevelErrors e;
    const auto py = prolong(sol.state, to_ref[l], ref_mesh);
    const auto pp = prolong(sol.adjoint, to_ref[l], ref_mesh);
    const Norms ny = broken_norms(ref_y, py);
    const Norms np = broken_norms(ref_p, pp);
    e.energy_y = ny.h1;
    e.l2_y = ny.l2;
    e.energy_p = np.h1;
    e.l2_p = np.l2;
    e.l2_r = l2_norm_p0_diff(ref.pressure, sol.pressure, to_ref[l]);
    e.l2_s = l2_norm_p0_diff(ref.adjoint_pressure, sol.adjoint_pressure, to_ref[l]);
    e.l2_u = clamped_distance(ref.control, sol.control, nullptr, &to_ref[l], ref_mesh);
    run.trace.rows[l].err = e;
  }
}

}  // namespace

AfemRun afem_run(const ManufacturedCase& mc, const AfemConfig& cfg) {
  cfg.validate();
  if (mc.pure_stokes) throw std::runtime_error("afem_run: case has no control problem");
  const ProblemData data = mc.data();

  AfemRun run;
  std::shared_ptr<const Mesh> mesh = make_mesh(mc.domain);

  for (int level = 0; level < cfg.max_levels; ++level) {
    const auto t0 = std::chrono::steady_clock::now();
    AfemTraceRow row;
    row.level = level;
    row.nelem = mesh->num_triangles();

    KktSolution sol;
    try {
      sol = solve_kkt(data, mesh, cfg.kkt_tol, cfg.kkt_max_iter);
    } catch (const KktFailure& err) {
      run.trace.failed = true;
      run.trace.failure = err.what();
      break;
    }
    row.ndof = ndof_of(*sol.state.space);
    const EstimatorReport report = estimate(sol, data, cfg.estimator);
    row.eta = std::sqrt(report.eta2_total);
    row.mu = std::sqrt(report.mu2_total);
    row.osc = std::sqrt(report.osc2_total);
    if (cfg.compute_errors && mc.has_closed_forms) row.err = errors_from_exact(mc, sol);

    const bool budget_left = row.ndof < cfg.max_dofs && level + 1 < cfg.max_levels;
    std::vector<int> marked;
    if (budget_left && report.eta2_total > 0.0) {
      if (cfg.uniform) {
        marked.resize(mesh->num_triangles());
        std::iota(marked.begin(), marked.end(), 0);
      } else {
        marked = dorfler_mark(report.combined(), cfg.theta);
      }
    }
    row.marked = static_cast<int>(marked.size());

    AfemLevel rec;
    rec.mesh = mesh;
    rec.sol = std::move(sol);
    rec.report = report;

    if (!marked.empty()) {
      auto [finer, rel] = bisect(*mesh, marked);
      rec.to_next = std::move(rel);
      rec.has_next = true;
      mesh = finer;
    }
    row.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    run.trace.rows.push_back(row);
    run.levels.push_back(std::move(rec));

    if (!run.levels.back().has_next) break;

    // the distance to the next level is known once that level is solved; patch
    // it in after the next solve
  }

  // delta between consecutive levels
  for (std::size_t l = 0; l + 1 < run.levels.size(); ++l) {
    if (!run.levels[l].has_next) continue;
    run.trace.rows[l].delta_next =
        distance(run.levels[l].sol, run.levels[l + 1].sol, run.levels[l].to_next);
  }

  if (cfg.compute_errors && !mc.has_closed_forms && !run.trace.failed)
    fill_reference_errors(mc, cfg, run);

  if (!cfg.keep_levels) run.levels.clear();
  return run;
}

double rate_fit(const std::vector<double>& xs, const std::vector<double>& ys) {
  if (xs.size() != ys.size()) throw std::runtime_error("rate_fit: length mismatch");
  const int n = static_cast<int>(xs.size());
  if (n < 2) throw std::runtime_error("rate_fit: needs at least 2 points");
  for (int i = 0; i < n; ++i)
    if (!(xs[i] > 0) || !(ys[i] > 0)) throw std::runtime_error("rate_fit: values must be positive");
  if (n == 2) return std::log(ys[1] / ys[0]) / std::log(xs[1] / xs[0]);

  const int use = std::max(3, (n + 1) / 2);
  const int first = n - use;
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (int i = first; i < n; ++i) {
    const double lx = std::log(xs[i]);
    const double ly = std::log(ys[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  const double m = use;
  return (m * sxy - sx * sy) / (m * sxx - sx * sx);
}

void write_trace_csv(std::ostream& os, const AfemTrace& trace, bool include_seconds) {
  os << "level,nelem,ndof,eta,mu,osc,delta_next,err_energy_y,err_energy_p,err_l2_y,err_l2_p,"
        "err_l2_r,err_l2_s,err_l2_u,marked,seconds\n";
  char buf[512];
  for (const auto& r : trace.rows) {
    std::snprintf(buf, sizeof(buf),
                  "%d,%d,%d,%.12g,%.12g,%.12g,%.12g,%.12g,%.12g,%.12g,%.12g,%.12g,%.12g,%.12g,%d,"
                  "%.6f\n",
                  r.level, r.nelem, r.ndof, r.eta, r.mu, r.osc, r.delta_next, r.err.energy_y,
                  r.err.energy_p, r.err.l2_y, r.err.l2_p, r.err.l2_r, r.err.l2_s, r.err.l2_u,
                  r.marked, include_seconds ? r.seconds : 0.0);
    os << buf;
  }
}

}  // namespace crstokes
