#include "crstokes/cli.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "CLI11.hpp"
#include "crstokes/verify.hpp"
#include "crstokes/version.hpp"

namespace crstokes {

namespace {

struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string format_vec(const Vec2& v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "(%g,%g)", v.x, v.y);
  return buf;
}

Vec2 pair_from(const std::vector<double>& v, const Vec2& fallback) {
  if (v.empty()) return fallback;
  if (v.size() == 1) return {v[0], v[0]};
  return {v[0], v[1]};
}

ManufacturedCase build_case(const RunConfig& cfg) {
  std::optional<double> alpha;
  if (cfg.alpha > 0) alpha = cfg.alpha;
  std::optional<Vec2> ua, ub;
  if (!cfg.ua.empty()) ua = pair_from(cfg.ua, {});
  if (!cfg.ub.empty()) ub = pair_from(cfg.ub, {});
  ManufacturedCase mc;
  try {
    mc = manufactured_problem(cfg.case_id, alpha, ua, ub);
  } catch (const std::runtime_error& e) {
    throw UsageError(e.what());
  }
  if (cfg.initial_n > 0) mc.domain.subdivisions = cfg.initial_n;
  return mc;
}

// key=value defaults; command-line flags win
void apply_config_file(const std::string& path, CLI::App* sub, RunConfig& cfg) {
  std::ifstream is(path);
  if (!is) throw UsageError("cannot read config file " + path);
  std::string line;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const auto strip = [](std::string s) {
      const auto b = s.find_first_not_of(" \t\r");
      const auto e = s.find_last_not_of(" \t\r");
      return b == std::string::npos ? std::string{} : s.substr(b, e - b + 1);
    };
    line = strip(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw UsageError("config file line " + std::to_string(lineno) + ": expected key=value");
    const std::string key = strip(line.substr(0, eq));
    const std::string value = strip(line.substr(eq + 1));
    if (sub->count("--" + key) > 0) continue;  // flag given explicitly

    auto as_double = [&] { return std::stod(value); };
    auto as_int = [&] { return std::stoi(value); };
    auto as_bool = [&] { return value == "true" || value == "1" || value == "yes"; };
    auto as_pair = [&] {
      std::vector<double> v;
      std::stringstream ss(value);
      std::string tok;
      while (std::getline(ss, tok, ',')) v.push_back(std::stod(tok));
      return v;
    };
    try {
      if (key == "case") cfg.case_id = value;
      else if (key == "theta") cfg.theta = as_double();
      else if (key == "alpha") cfg.alpha = as_double();
      else if (key == "ua") cfg.ua = as_pair();
      else if (key == "ub") cfg.ub = as_pair();
      else if (key == "max-dofs") cfg.max_dofs = as_int();
      else if (key == "max-iters") cfg.max_iters = as_int();
      else if (key == "tol") cfg.tol = as_double();
      else if (key == "out") cfg.out = value;
      else if (key == "seed") cfg.seed = std::stoull(value);
      else if (key == "uniform") cfg.uniform = as_bool();
      else if (key == "levels") cfg.levels = as_int();
      else if (key == "initial-n") cfg.initial_n = as_int();
      else if (key == "ref-gap") cfg.ref_gap = as_int();
      else if (key == "timing") cfg.timing = as_bool();
      else if (key == "no-errors") cfg.no_errors = as_bool();
      else throw UsageError("config file: unknown key '" + key + "'");
    } catch (const std::invalid_argument&) {
      throw UsageError("config file: bad value for '" + key + "'");
    }
  }
}

std::ofstream open_output(const RunConfig& cfg, const std::string& name) {
  std::error_code ec;
  std::filesystem::create_directories(cfg.out, ec);
  const auto path = std::filesystem::path(cfg.out) / name;
  std::ofstream os(path);
  if (!os) throw UsageError("cannot write to " + path.string());
  return os;
}

AfemConfig afem_config(const RunConfig& cfg) {
  AfemConfig a;
  a.theta = cfg.theta;
  a.max_dofs = cfg.max_dofs;
  a.max_levels = cfg.max_iters;
  a.kkt_tol = cfg.tol;
  a.uniform = cfg.uniform;
  a.compute_errors = !cfg.no_errors;
  a.reference_gap = cfg.ref_gap;
  a.keep_levels = true;
  return a;
}

int do_run(const RunConfig& cfg) {
  const ManufacturedCase mc = build_case(cfg);
  if (mc.pure_stokes)
    throw UsageError("case '" + cfg.case_id + "' has no control problem; use the rates subcommand");
  const AfemRun run = afem_run(mc, afem_config(cfg));

  {
    auto os = open_output(cfg, "trace.csv");
    os << "# " << cfg.canonical_line() << "\n";
    write_trace_csv(os, run.trace, cfg.timing);
  }
  {
    auto os = open_output(cfg, "indicators.csv");
    os << "# " << cfg.canonical_line() << "\n";
    for (std::size_t l = 0; l < run.levels.size(); ++l)
      write_indicators_csv(os, run.levels[l].report, static_cast<int>(l), l == 0);
  }
  if (!run.levels.empty()) {
    auto os = open_output(cfg, "solution.csv");
    os << "# " << cfg.canonical_line() << "\n";
    write_solution_csv(os, run.levels.back().sol);
    auto ms = open_output(cfg, "mesh.txt");
    ms << "# " << cfg.canonical_line() << "\n";
    write_mesh(ms, *run.levels.back().mesh);
  }

  std::printf("%-6s %-8s %-8s %-12s %-12s %-8s\n", "level", "nelem", "ndof", "eta", "mu", "marked");
  for (const auto& r : run.trace.rows)
    std::printf("%-6d %-8d %-8d %-12.5g %-12.5g %-8d\n", r.level, r.nelem, r.ndof, r.eta, r.mu,
                r.marked);
  if (run.trace.rows.size() >= 2) {
    std::vector<double> xs, ys;
    for (const auto& r : run.trace.rows) {
      xs.push_back(r.ndof);
      ys.push_back(r.eta);
    }
    std::printf("eta-vs-dof slope: %.4f\n", rate_fit(xs, ys));
  }
  if (run.trace.failed) {
    std::printf("FAILED: %s\n", run.trace.failure.c_str());
    return 1;
  }
  return 0;
}

int do_rates(const RunConfig& cfg) {
  const ManufacturedCase mc = build_case(cfg);
  if (!mc.has_closed_forms)
    throw UsageError("case '" + cfg.case_id + "' has no closed forms; use the run subcommand");
  const RateTable table = check_apriori_rates(mc, cfg.levels);
  {
    auto os = open_output(cfg, "rates.csv");
    write_rates_csv(os, table, cfg.canonical_line());
  }
  std::printf("%-6s %-12s %-8s %-12s %-12s %-12s\n", "level", "h", "ndof", "energy_y", "l2_y",
              "l2_r");
  for (std::size_t l = 0; l < table.rows.size(); ++l) {
    const auto& r = table.rows[l];
    std::printf("%-6zu %-12.5g %-8d %-12.5g %-12.5g %-12.5g\n", l, r.h, r.ndof, r.err.energy_y,
                r.err.l2_y, r.err.l2_r);
  }
  std::printf("rates vs h: energy_y=%.4f energy_sum=%.4f l2_y=%.4f l2_uyp=%.4f l2_all=%.4f\n",
              table.rate_energy_y, table.rate_energy_sum, table.rate_l2_y, table.rate_l2_uyp,
              table.rate_l2_all);
  return 0;
}

int do_axioms(const RunConfig& cfg) {
  const ManufacturedCase mc = build_case(cfg);
  if (mc.pure_stokes) throw UsageError("axioms subcommand needs a control case");
  const AfemRun run = afem_run(mc, afem_config(cfg));
  if (run.trace.failed) {
    std::printf("FAILED: %s\n", run.trace.failure.c_str());
    return 1;
  }
  const AxiomReport rep = check_axioms(run);
  std::vector<RatioCheck> extras;
  extras.push_back(check_embedding_ratios(mc.domain, 4, 10, cfg.seed));
  extras.push_back(check_discrete_jump_control(mc.domain, 4, 10, cfg.seed));
  extras.push_back(check_stability_bounds(mc, 4));
  {
    auto os = open_output(cfg, "axioms.json");
    write_axiom_json(os, rep, cfg.canonical_line(), &extras);
  }
  std::printf("%-28s %-12s %-10s %-6s\n", "check", "constant", "drift", "pass");
  for (const auto& c : rep.checks)
    std::printf("%-28s %-12.5g %-10.4g %-6s\n", c.name.c_str(), c.constant, c.drift,
                c.pass ? "yes" : "NO");
  bool ok = rep.all_pass();
  for (const auto& c : extras) {
    std::printf("%-28s %-12.5g %-10.4g %-6s\n", c.name.c_str(), c.overall, c.drift,
                c.pass ? "yes" : "NO");
    ok = ok && c.pass;
  }
  std::printf("lambda: L0=%.4g L1=%.4g L2=%.4g L3=%.4g L4=%.4g (rho2=%.6f)\n", rep.lambda0,
              rep.lambda1, rep.lambda2, rep.lambda3, rep.lambda4, rep.rho2);
  return ok ? 0 : 1;
}

int do_equivalence(const RunConfig& cfg) {
  const ManufacturedCase mc = build_case(cfg);
  if (!mc.has_closed_forms) throw UsageError("equivalence subcommand needs closed forms");
  if (cfg.levels < 2) throw UsageError("equivalence needs --levels >= 2");
  std::vector<EquivalenceReport> reports;
  std::shared_ptr<const Mesh> mesh = make_mesh(mc.domain);
  for (int l = 1; l <= cfg.levels; ++l) {
    mesh = uniform_refine(*mesh).first;
    if (l < 2) continue;
    EquivalenceReport rep = check_error_equivalence(mc, mesh, cfg.ref_gap);
    rep.level = l;
    reports.push_back(rep);
  }
  {
    auto os = open_output(cfg, "equivalence.json");
    write_equivalence_json(os, reports, cfg.canonical_line());
  }
  bool ok = true;
  std::printf("%-6s %-8s", "item", "band");
  std::printf("  (ratio lhs/rhs per level)\n");
  for (int i = 0; i < 4; ++i) {
    double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
    for (const auto& r : reports) {
      lo = std::min(lo, r.items[i].ratio_lr);
      hi = std::max(hi, r.items[i].ratio_lr);
    }
    const double band = lo > 0 ? hi / lo : std::numeric_limits<double>::infinity();
    ok = ok && band < 10.0;
    std::printf("%-6d %-8.4g", i + 1, band);
    for (const auto& r : reports) std::printf(" %10.4g", r.items[i].ratio_lr);
    std::printf("\n");
  }
  return ok ? 0 : 1;
}

}  // namespace

std::string RunConfig::canonical_line() const {
  char buf[512];
  const Vec2 a = pair_from(ua, {std::nan(""), std::nan("")});
  const Vec2 b = pair_from(ub, {std::nan(""), std::nan("")});
  std::snprintf(buf, sizeof(buf),
                "%s | %s case=%s theta=%g alpha=%g ua=%s ub=%s max-dofs=%d max-iters=%d tol=%g "
                "levels=%d initial-n=%d ref-gap=%d seed=%llu uniform=%d errors=%d",
                kVersion, subcommand.c_str(), case_id.c_str(), theta, alpha, format_vec(a).c_str(),
                format_vec(b).c_str(), max_dofs, max_iters, tol, levels, initial_n, ref_gap,
                static_cast<unsigned long long>(seed), uniform ? 1 : 0, no_errors ? 0 : 1);
  return buf;
}

int cli_main(int argc, char** argv) {
  RunConfig cfg;
  std::string config_file;
  CLI::App app{"Adaptive nonconforming FEM solver for Stokes distributed optimal control"};
  app.require_subcommand(1);

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--case", cfg.case_id, "problem case: ocp-square | ocp-lshape | stokes-square");
    sub->add_option("--theta", cfg.theta, "Doerfler marking parameter in (0,1)");
    sub->add_option("--alpha", cfg.alpha, "control regularization (case default when omitted)");
    sub->add_option("--ua", cfg.ua, "lower control bound (1 or 2 values)")->expected(1, 2);
    sub->add_option("--ub", cfg.ub, "upper control bound (1 or 2 values)")->expected(1, 2);
    sub->add_option("--max-dofs", cfg.max_dofs, "stop when the solve exceeds this many unknowns");
    sub->add_option("--max-iters", cfg.max_iters, "adaptive level budget");
    sub->add_option("--tol", cfg.tol, "optimality-system solver tolerance");
    sub->add_option("--out", cfg.out, "output directory");
    sub->add_option("--seed", cfg.seed, "seed for randomized checks");
    sub->add_flag("--uniform", cfg.uniform, "refine uniformly instead of marking");
    sub->add_option("--levels", cfg.levels, "number of uniform levels (rates/equivalence)");
    sub->add_option("--initial-n", cfg.initial_n, "initial mesh subdivisions (case default when 0)");
    sub->add_option("--ref-gap", cfg.ref_gap, "uniform refinements for reference solves");
    sub->add_flag("--timing", cfg.timing, "record wall time in trace.csv (breaks byte reproducibility)");
    sub->add_flag("--no-errors", cfg.no_errors, "skip error columns (faster, avoids reference solves)");
    sub->add_option("--config", config_file, "key=value config file; flags win");
  };
  add_common(app.add_subcommand("run", "adaptive (or uniform) refinement experiment"));
  add_common(app.add_subcommand("rates", "a priori convergence study on uniform meshes"));
  add_common(app.add_subcommand("axioms", "adaptive run plus the axiom checks"));
  add_common(app.add_subcommand("equivalence", "error equivalence checks on uniform levels"));

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  CLI::App* sub = app.get_subcommands().front();
  cfg.subcommand = sub->get_name();
  try {
    if (!config_file.empty()) apply_config_file(config_file, sub, cfg);
    if (!cfg.uniform && !(cfg.theta > 0.0 && cfg.theta < 1.0))
      throw UsageError("theta must lie in (0,1)");
    if (cfg.max_dofs < 1 || cfg.max_iters < 1 || cfg.levels < 1)
      throw UsageError("budgets must be positive");
    if (!(cfg.tol > 0)) throw UsageError("tol must be positive");

    if (cfg.subcommand == "run") return do_run(cfg);
    if (cfg.subcommand == "rates") return do_rates(cfg);
    if (cfg.subcommand == "axioms") return do_axioms(cfg);
    if (cfg.subcommand == "equivalence") return do_equivalence(cfg);
    throw UsageError("unknown subcommand");
  } catch (const UsageError& e) {
    std::fprintf(stderr, "usage error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}

}  // namespace crstokes
