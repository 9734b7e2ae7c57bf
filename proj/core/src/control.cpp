#include "crstokes/control.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <set>

namespace crstokes {

Vec2 clamp(const Vec2& v, const Vec2& ua, const Vec2& ub) {
  return {std::min(ub.x, std::max(ua.x, v.x)), std::min(ub.y, std::max(ua.y, v.y))};
}

void ProblemData::validate() const {
  if (!(alpha > 0)) throw std::runtime_error("ProblemData: alpha must be positive");
  if (ua.x > ub.x || ua.y > ub.y) throw std::runtime_error("ProblemData: needs ua <= ub");
}

ClampedField ClampedField::zero(std::shared_ptr<const CrSpace> space, double alpha, Vec2 ua, Vec2 ub) {
  ClampedField u;
  u.alpha = alpha;
  u.ua = ua;
  u.ub = ub;
  u.space = space;
  u.terms.push_back({1.0, CrField(space)});
  return u;
}

ClampedField ClampedField::pure(CrField adjoint, double alpha, Vec2 ua, Vec2 ub) {
  ClampedField u;
  u.alpha = alpha;
  u.ua = ua;
  u.ub = ub;
  u.space = adjoint.space;
  u.terms.push_back({1.0, std::move(adjoint)});
  return u;
}

Vec2 ClampedField::eval(int elem, const Vec2& x) const {
  Vec2 v{0, 0};
  for (const auto& t : terms) v += t.weight * clamp(element_value(t.adjoint, elem, x) * (-1.0 / alpha), ua, ub);
  return v;
}

bool ClampedField::smooth_on(int elem, const std::array<Vec2, 3>& corners) const {
  const std::array<Vec2, 6> pts{corners[0],
                                corners[1],
                                corners[2],
                                midpoint(corners[0], corners[1]),
                                midpoint(corners[1], corners[2]),
                                midpoint(corners[2], corners[0])};
  for (const auto& t : terms) {
    std::array<Vec2, 6> g;
    for (int i = 0; i < 6; ++i) g[i] = element_value(t.adjoint, elem, pts[i]) * (-1.0 / alpha);
    for (int c = 0; c < 2; ++c) {
      const double lo = c == 0 ? ua.x : ua.y;
      const double hi = c == 0 ? ub.x : ub.y;
      bool all_inside = true, all_low = true, all_high = true;
      for (int i = 0; i < 6; ++i) {
        const double v = g[i][c];
        all_inside &= (v > lo && v < hi);
        all_low &= (v <= lo);
        all_high &= (v >= hi);
      }
      if (!(all_inside || all_low || all_high)) return false;
    }
  }
  return true;
}

void ClampedField::blend_in(double omega, const CrField& p) {
  if (omega >= 1.0) {
    terms.clear();
  } else {
    for (auto& t : terms) t.weight *= (1.0 - omega);
    terms.erase(std::remove_if(terms.begin(), terms.end(),
                               [](const Term& t) { return std::abs(t.weight) < 1e-16; }),
                terms.end());
  }
  terms.push_back({omega, p});
}

namespace {
constexpr int kClampDepth = 4;

int ancestor(const RefinementRelation* rel, int elem) { return rel ? rel->parent_of[elem] : elem; }
}  // namespace

Eigen::VectorXd assemble_clamped_load(const CrSpace& test_space, const ClampedField& u,
                                      const RefinementRelation* rel) {
  const Mesh& mesh = *test_space.mesh;
  const auto& rule = tri_rule_deg4();
  Eigen::VectorXd load = Eigen::VectorXd::Zero(test_space.num_dofs());
  for (int k = 0; k < mesh.num_triangles(); ++k) {
    const auto corners = mesh.corners(k);
    const int a = ancestor(rel, k);
    const auto lg = barycentric_gradients(mesh, k);
    const Vec2 centroid = mesh.centroid(k);
    std::array<Vec2, 3> acc{};
    for_each_adaptive_point(
        corners, [&](const std::array<Vec2, 3>& c) { return u.smooth_on(a, c); },
        [&](const Vec2& x, double w) {
          const Vec2 uv = u.eval(a, x);
          for (int i = 0; i < 3; ++i) {
            // phi_i = 1 - 2*l_i, evaluated through the affine barycentric form
            const double phi = 1.0 / 3.0 - 2.0 * dot(lg[i], x - centroid);
            acc[i] += (w * phi) * uv;
          }
        },
        rule, kClampDepth);
    for (int i = 0; i < 3; ++i) {
      const int e = mesh.tri_edges[k][i];
      load[CrSpace::dof(e, 0)] += acc[i].x;
      load[CrSpace::dof(e, 1)] += acc[i].y;
    }
  }
  return load;
}

double clamped_residual(const ClampedField& u, const CrField& p) {
  const Mesh& mesh = *u.space->mesh;
  const ClampedField v = ClampedField::pure(p, u.alpha, u.ua, u.ub);
  const auto& rule = tri_rule_deg4();
  double s = 0.0;
  for (int k = 0; k < mesh.num_triangles(); ++k) {
    const auto corners = mesh.corners(k);
    s += integrate_adaptive(
        corners,
        [&](const std::array<Vec2, 3>& c) { return u.smooth_on(k, c) && v.smooth_on(k, c); },
        [&](const Vec2& x) { return norm2(u.eval(k, x) - v.eval(k, x)); }, rule, kClampDepth);
  }
  return std::sqrt(s);
}

double clamped_distance(const ClampedField& u, const ClampedField& v, const RefinementRelation* rel_u,
                        const RefinementRelation* rel_v, std::shared_ptr<const Mesh> mesh_in) {
  const Mesh& mesh = mesh_in ? *mesh_in : *u.space->mesh;
  const auto& rule = tri_rule_deg4();
  double s = 0.0;
  for (int k = 0; k < mesh.num_triangles(); ++k) {
    const int au = ancestor(rel_u, k);
    const int av = ancestor(rel_v, k);
    s += integrate_adaptive(
        mesh.corners(k),
        [&](const std::array<Vec2, 3>& c) { return u.smooth_on(au, c) && v.smooth_on(av, c); },
        [&](const Vec2& x) { return norm2(u.eval(au, x) - v.eval(av, x)); }, rule, kClampDepth);
  }
  return std::sqrt(s);
}

double clamped_distance_to(const ClampedField& u, const VecField& g,
                           const std::function<bool(const std::array<Vec2, 3>&)>& g_smooth) {
  const Mesh& mesh = *u.space->mesh;
  const auto& rule = tri_rule_deg4();
  double s = 0.0;
  for (int k = 0; k < mesh.num_triangles(); ++k) {
    s += integrate_adaptive(
        mesh.corners(k),
        [&](const std::array<Vec2, 3>& c) { return u.smooth_on(k, c) && (!g_smooth || g_smooth(c)); },
        [&](const Vec2& x) { return norm2(u.eval(k, x) - g(x)); }, rule, kClampDepth);
  }
  return std::sqrt(s);
}

double l2_norm(const ClampedField& u) {
  const Mesh& mesh = *u.space->mesh;
  const auto& rule = tri_rule_deg4();
  double s = 0.0;
  for (int k = 0; k < mesh.num_triangles(); ++k) {
    s += integrate_adaptive(
        mesh.corners(k), [&](const std::array<Vec2, 3>& c) { return u.smooth_on(k, c); },
        [&](const Vec2& x) { return norm2(u.eval(k, x)); }, rule, kClampDepth);
  }
  return std::sqrt(s);
}

double objective_value(const CrField& state, const ClampedField& control, const ProblemData& data) {
  const Mesh& mesh = *state.space->mesh;
  const auto& rule = tri_rule_deg4();
  double track = 0.0;
  for (int k = 0; k < mesh.num_triangles(); ++k) {
    track += rule.integrate(mesh.corners(k), mesh.area(k), [&](const Vec2& x) {
      return norm2(element_value(state, k, x) - data.y_d(x));
    });
  }
  const double un = l2_norm(control);
  return 0.5 * track + 0.5 * data.alpha * un * un;
}

double vi_residual(const KktSolution& sol) { return clamped_residual(sol.control, sol.adjoint); }

namespace {

// primal-dual active-set machinery: per element, 6 quadrature points, 2
// components; 0 = lower bound active, 1 = inactive, 2 = upper bound active
using MaskVector = std::vector<std::array<int8_t, 12>>;

MaskVector compute_masks(const CrSpace& space, const CrField& p, double alpha, const Vec2& ua,
                         const Vec2& ub) {
  const Mesh& mesh = *space.mesh;
  const auto& rule = tri_rule_deg4();
  MaskVector masks(mesh.num_triangles());
  for (int k = 0; k < mesh.num_triangles(); ++k) {
    const auto c = mesh.corners(k);
    for (std::size_t q = 0; q < rule.points.size(); ++q) {
      const auto& qp = rule.points[q];
      const Vec2 x = qp.l0 * c[0] + qp.l1 * c[1] + qp.l2 * c[2];
      const Vec2 g = element_value(p, k, x) * (-1.0 / alpha);
      for (int comp = 0; comp < 2; ++comp) {
        const double lo = comp == 0 ? ua.x : ua.y;
        const double hi = comp == 0 ? ub.x : ub.y;
        const double v = g[comp];
        masks[k][2 * q + comp] = v < lo ? 0 : (v > hi ? 2 : 1);
      }
    }
  }
  return masks;
}

std::uint64_t hash_masks(const MaskVector& m) {
  std::uint64_t h = 1469598103934665603ull;
  for (const auto& a : m)
    for (int8_t v : a) h = (h ^ static_cast<std::uint64_t>(v + 1)) * 1099511628211ull;
  return h;
}

struct CoupledBlocks {
  Eigen::SparseMatrix<double> A, B, M;
  Eigen::VectorXd areas;
  int nf = 0, nT = 0;
};

CoupledBlocks make_blocks(const CrSpace& space) {
  CoupledBlocks b;
  b.nf = space.num_free();
  b.nT = space.mesh->num_triangles();
  b.A = assemble_stiffness(space, true).matrix();
  b.B = assemble_divergence(space, P0Space(space.mesh, true), true).matrix();
  b.M = assemble_mass(space, true).matrix();
  b.areas.resize(b.nT);
  for (int k = 0; k < b.nT; ++k) b.areas[k] = space.mesh->area(k);
  return b;
}

// Solve the coupled linear KKT system with u eliminated through the masked
// projection: u = -chi_I p / alpha + bounds on the active sets.
// Unknowns: [Y R P S]; one mass row per pressure is redundant and replaced by
// a pin, the pressures are shifted to zero weighted mean afterwards.
struct CoupledSolution {
  CrField y, p;
  P0Field r, s;
};

CoupledSolution solve_coupled(const std::shared_ptr<const CrSpace>& space_ptr,
                              const CoupledBlocks& blocks,
                              const Eigen::SparseMatrix<double>& masked_mass_over_alpha,
                              const Eigen::VectorXd& active_load_red, const Eigen::VectorXd& f_red,
                              const Eigen::VectorXd& yd_red) {
  const CrSpace& space = *space_ptr;
  const int nf = blocks.nf, nT = blocks.nT;
  const int o2 = nf + nT;
  const int n = 2 * (nf + nT);
  std::vector<Eigen::Triplet<double>> trip;

  auto add_sparse = [&](const Eigen::SparseMatrix<double>& m, int r0, int c0, double scale,
                        int skip_row = -1) {
    for (int c = 0; c < m.outerSize(); ++c)
      for (Eigen::SparseMatrix<double>::InnerIterator it(m, c); it; ++it) {
        if (static_cast<int>(it.row()) == skip_row) continue;
        trip.emplace_back(r0 + static_cast<int>(it.row()), c0 + static_cast<int>(it.col()),
                          scale * it.value());
      }
  };

  add_sparse(blocks.A, 0, 0, 1.0);                     // A Y
  add_sparse(blocks.B.transpose(), 0, nf, -1.0);       // -B^T R
  add_sparse(masked_mass_over_alpha, 0, o2, 1.0);      // (1/alpha) Mchi P
  add_sparse(blocks.B, nf, 0, -1.0, 0);                // -B Y, first row pinned
  add_sparse(blocks.M, o2, 0, -1.0);                   // -M Y
  add_sparse(blocks.A, o2, o2, 1.0);                   // A P
  add_sparse(blocks.B.transpose(), o2, o2 + nf, 1.0);  // +B^T S
  add_sparse(blocks.B, o2 + nf, o2, -1.0, 0);          // -B P, first row pinned
  trip.emplace_back(nf, nf, blocks.areas[0]);
  trip.emplace_back(o2 + nf, o2 + nf, blocks.areas[0]);

  Eigen::SparseMatrix<double> mat(n, n);
  mat.setFromTriplets(trip.begin(), trip.end());
  mat.makeCompressed();

  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n);
  rhs.head(nf) = f_red + active_load_red;
  rhs.segment(o2, nf) = -yd_red;

  Eigen::SparseLU<Eigen::SparseMatrix<double>, Eigen::COLAMDOrdering<int>> lu(mat);
  if (lu.info() != Eigen::Success) throw std::runtime_error("active-set system: factorization failed");
  const Eigen::VectorXd x = lu.solve(rhs);

  CoupledSolution out;
  out.y = CrField(space_ptr);
  out.y.coeffs = space.extend_full(x.head(nf));
  out.p = CrField(space_ptr);
  out.p.coeffs = space.extend_full(x.segment(o2, nf));
  auto ps = std::make_shared<P0Space>(space.mesh, true);
  out.r = P0Field(ps);
  out.r.values = x.segment(nf, nT);
  out.r.values.array() -= weighted_mean(out.r);
  out.s = P0Field(ps);
  out.s.values = x.segment(o2 + nf, nT);
  out.s.values.array() -= weighted_mean(out.s);
  return out;
}

// Linearization data for u = clamp(-p/alpha): the inactive-region mass over
// alpha and the active-region bound load. The regions belong to the current
// adjoint and are integrated with the same adaptive rule as the clamp loads,
// so a stationary adjoint solves the fully coupled system.
std::pair<Eigen::SparseMatrix<double>, Eigen::VectorXd> masked_mass_and_load(
    const CrSpace& space, const CrField& p, double alpha, const Vec2& ua, const Vec2& ub) {
  const Mesh& mesh = *space.mesh;
  const auto& rule = tri_rule_deg4();
  const ClampedField u = ClampedField::pure(p, alpha, ua, ub);
  std::vector<Eigen::Triplet<double>> trip;
  Eigen::VectorXd load = Eigen::VectorXd::Zero(space.num_free());
  for (int k = 0; k < mesh.num_triangles(); ++k) {
    const auto lg = barycentric_gradients(mesh, k);
    const Vec2 centroid = mesh.centroid(k);
    for_each_adaptive_point(
        mesh.corners(k), [&](const std::array<Vec2, 3>& c) { return u.smooth_on(k, c); },
        [&](const Vec2& x, double w) {
          const Vec2 g = element_value(p, k, x) * (-1.0 / alpha);
          std::array<double, 3> phi;
          for (int i = 0; i < 3; ++i) phi[i] = 1.0 / 3.0 - 2.0 * dot(lg[i], x - centroid);
          for (int comp = 0; comp < 2; ++comp) {
            const double lo = comp == 0 ? ua.x : ua.y;
            const double hi = comp == 0 ? ub.x : ub.y;
            const double v = g[comp];
            if (v > lo && v < hi) {
              for (int i = 0; i < 3; ++i) {
                const int ri = space.free_index[CrSpace::dof(mesh.tri_edges[k][i], comp)];
                if (ri < 0) continue;
                for (int j = 0; j < 3; ++j) {
                  const int cj = space.free_index[CrSpace::dof(mesh.tri_edges[k][j], comp)];
                  if (cj < 0) continue;
                  trip.emplace_back(ri, cj, w * phi[i] * phi[j] / alpha);
                }
              }
            } else {
              const double bound = v <= lo ? lo : hi;
              for (int i = 0; i < 3; ++i) {
                const int ri = space.free_index[CrSpace::dof(mesh.tri_edges[k][i], comp)];
                if (ri >= 0) load[ri] += w * phi[i] * bound;
              }
            }
          }
        },
        rule, kClampDepth);
  }
  Eigen::SparseMatrix<double> m(space.num_free(), space.num_free());
  m.setFromTriplets(trip.begin(), trip.end());
  m.makeCompressed();
  return {std::move(m), std::move(load)};
}

}  // namespace

KktSolution solve_kkt(const ProblemData& data, std::shared_ptr<const Mesh> mesh, double tol,
                      int max_iter) {
  data.validate();
  if (!(tol > 0)) throw std::runtime_error("solve_kkt: tol must be positive");

  auto space = std::make_shared<CrSpace>(mesh);
  StokesOperator op(space);
  const Eigen::VectorXd f_load = assemble_load(*space, data.f, data.f_smooth);
  const Eigen::VectorXd yd_load = assemble_load(*space, data.y_d, data.yd_smooth);

  KktSolution sol;
  sol.control = ClampedField::zero(space, data.alpha, data.ua, data.ub);

  std::vector<double> history;
  double omega = 1.0;
  double prev_res = std::numeric_limits<double>::infinity();
  int successes = 0;
  const double omega_floor = 1.0 / 16.0;

  auto sweep = [&](const ClampedField& u) {
    StokesSolution y = op.solve(f_load + assemble_clamped_load(*space, u));
    StokesSolution p = op.solve(assemble_load(*space, y.velocity) - yd_load, true);
    return std::make_pair(std::move(y), std::move(p));
  };
  auto finish = [&](StokesSolution&& y, StokesSolution&& p) {
    sol.state = std::move(y.velocity);
    sol.pressure = std::move(y.pressure);
    sol.adjoint = std::move(p.velocity);
    sol.adjoint_pressure = std::move(p.pressure);
    return sol;
  };

  for (int it = 0; it < max_iter; ++it) {
    auto [y, p] = sweep(sol.control);
    const double res = clamped_residual(sol.control, p.velocity);
    const double obj = objective_value(y.velocity, sol.control, data);
    sol.iterations.push_back({res, omega, obj});
    history.push_back(res);
    if (res <= tol) {
      // one confirmation sweep with the pure projection keeps a wide margin in
      // the pointwise complementarity
      if (++successes >= 2 || res <= 0.05 * tol) return finish(std::move(y), std::move(p));
      omega = 1.0;
    } else {
      successes = 0;
      if (res > prev_res) omega = std::max(omega * 0.5, omega_floor);
    }
    prev_res = res;
    sol.control.blend_in(omega, p.velocity);
  }

  // semismooth active-set fallback: freeze the active regions of the current
  // adjoint, solve the coupled linear system, repeat until the adjoint is
  // stationary or the per-point signatures cycle
  sol.used_active_set = true;
  const CoupledBlocks blocks = make_blocks(*space);
  const Eigen::VectorXd f_red = space->restrict_free(f_load);
  const Eigen::VectorXd yd_red = space->restrict_free(yd_load);

  CrField p_current = sol.control.terms.back().adjoint;
  for (int round = 0; round < 4; ++round) {
    std::set<std::uint64_t> seen;
    for (int it = 0; it < 60; ++it) {
      seen.insert(hash_masks(compute_masks(*space, p_current, data.alpha, data.ua, data.ub)));
      auto [mchi, active_load] =
          masked_mass_and_load(*space, p_current, data.alpha, data.ua, data.ub);
      CoupledSolution cs = solve_coupled(space, blocks, mchi, active_load, f_red, yd_red);
      const double change = broken_norms(cs.p, p_current).l2;
      const double scale = std::max(broken_norms(cs.p).l2, 1e-30);
      p_current = cs.p;
      if (change <= 1e-13 * scale) break;
      const MaskVector next = compute_masks(*space, p_current, data.alpha, data.ua, data.ub);
      if (seen.count(hash_masks(next))) break;  // signature cycle
    }
    // verification sweep from the pure projection of the active-set adjoint;
    // at a stationary adjoint it reproduces the adjoint and certifies the
    // residual, otherwise its output restarts the active-set loop
    sol.control = ClampedField::pure(p_current, data.alpha, data.ua, data.ub);
    auto [y, p] = sweep(sol.control);
    const double res = clamped_residual(sol.control, p.velocity);
    sol.iterations.push_back({res, 1.0, objective_value(y.velocity, sol.control, data)});
    history.push_back(res);
    if (res <= tol) return finish(std::move(y), std::move(p));
    p_current = p.velocity;
  }
  throw KktFailure("solve_kkt: no convergence after damped fixed point and active-set fallback",
                   history);
}

KktSolution solve_kkt_unconstrained_linear(const ProblemData& data,
                                           std::shared_ptr<const Mesh> mesh) {
  data.validate();
  auto space = std::make_shared<CrSpace>(mesh);
  const CoupledBlocks blocks = make_blocks(*space);
  const Eigen::VectorXd f_red = space->restrict_free(assemble_load(*space, data.f, data.f_smooth));
  const Eigen::VectorXd yd_red = space->restrict_free(assemble_load(*space, data.y_d, data.yd_smooth));

  // all-inactive masked mass is the exact velocity mass scaled by 1/alpha
  Eigen::SparseMatrix<double> mchi = blocks.M * (1.0 / data.alpha);
  CoupledSolution cs = solve_coupled(space, blocks, mchi, Eigen::VectorXd::Zero(blocks.nf), f_red,
                                     yd_red);
  KktSolution sol;
  sol.state = std::move(cs.y);
  sol.adjoint = std::move(cs.p);
  sol.pressure = std::move(cs.r);
  sol.adjoint_pressure = std::move(cs.s);
  sol.control = ClampedField::pure(sol.adjoint, data.alpha, data.ua, data.ub);
  return sol;
}

void write_solution_csv(std::ostream& os, const KktSolution& sol) {
  const Mesh& mesh = *sol.state.space->mesh;
  const auto& rule = tri_rule_deg4();
  os << "elem";
  for (int i = 0; i < 3; ++i) os << ",y_e" << i << "_x,y_e" << i << "_y";
  for (int i = 0; i < 3; ++i) os << ",p_e" << i << "_x,p_e" << i << "_y";
  os << ",r,s";
  for (std::size_t q = 0; q < rule.points.size(); ++q) os << ",u_q" << q << "_x,u_q" << q << "_y";
  os << "\n";
  char buf[64];
  auto put = [&](double v) {
    std::snprintf(buf, sizeof(buf), ",%.12g", v);
    os << buf;
  };
  for (int k = 0; k < mesh.num_triangles(); ++k) {
    os << k;
    for (int i = 0; i < 3; ++i) {
      const int e = mesh.tri_edges[k][i];
      put(sol.state.dof(e, 0));
      put(sol.state.dof(e, 1));
    }
    for (int i = 0; i < 3; ++i) {
      const int e = mesh.tri_edges[k][i];
      put(sol.adjoint.dof(e, 0));
      put(sol.adjoint.dof(e, 1));
    }
    put(sol.pressure.values[k]);
    put(sol.adjoint_pressure.values[k]);
    const auto c = mesh.corners(k);
    for (const auto& qp : rule.points) {
      const Vec2 x = qp.l0 * c[0] + qp.l1 * c[1] + qp.l2 * c[2];
      const Vec2 u = sol.control.eval(k, x);
      put(u.x);
      put(u.y);
    }
    os << "\n";
  }
}

}  // namespace crstokes
