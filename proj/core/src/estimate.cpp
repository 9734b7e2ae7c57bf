#include "crstokes/estimate.hpp"

#include <cmath>
#include <cstdio>
#include <ostream>

namespace crstokes {

namespace {

// sum over the element's own three edges of h_K ||[grad v . t_E]||^2; the
// broken gradient is piecewise constant, so each edge integrand is a constant
Eigen::VectorXd edge_jump_terms(const CrField& v, const EstimatorOptions& opts) {
  const Mesh& mesh = *v.space->mesh;
  const int nT = mesh.num_triangles();
  std::vector<Mat2> grad(nT);
  for (int k = 0; k < nT; ++k) grad[k] = element_gradient(v, k);

  Eigen::VectorXd out = Eigen::VectorXd::Zero(nT);
  for (int k = 0; k < nT; ++k) {
    const double hk = std::sqrt(mesh.area(k));
    double sum = 0.0;
    for (int i = 0; i < 3; ++i) {
      const int e = mesh.tri_edges[k][i];
      const double len = mesh.edge_length(e);
      const Vec2 t = mesh.edge_tangent(e);
      const int nb = mesh.neighbor(k, i);
      if (nb >= 0) {
        const Vec2 jump = (grad[k] - grad[nb]) * t;
        sum += len * norm2(jump);
      } else if (opts.boundary_tangential) {
        const Vec2 trace = grad[k] * t;
        sum += len * norm2(trace);
      }
    }
    out[k] = hk * sum;
  }
  return out;
}

// per element: (integral-of-square, integral) of a piecewise-smooth field
struct VolumeMoments {
  Eigen::VectorXd square;  // int_K |g|^2
  std::vector<Vec2> mean;  // int_K g
};

VolumeMoments volume_moments(const Mesh& mesh, const std::function<Vec2(int, const Vec2&)>& g,
                             const std::function<bool(int, const std::array<Vec2, 3>&)>& smooth) {
  const auto& rule = tri_rule_deg4();
  VolumeMoments m;
  m.square = Eigen::VectorXd::Zero(mesh.num_triangles());
  m.mean.assign(mesh.num_triangles(), Vec2{0, 0});
  for (int k = 0; k < mesh.num_triangles(); ++k) {
    double sq = 0.0;
    Vec2 mean{0, 0};
    for_each_adaptive_point(
        mesh.corners(k), [&](const std::array<Vec2, 3>& c) { return smooth(k, c); },
        [&](const Vec2& x, double w) {
          const Vec2 v = g(k, x);
          sq += w * norm2(v);
          mean += w * v;
        },
        rule, 4);
    m.square[k] = sq;
    m.mean[k] = mean;
  }
  return m;
}

}  // namespace

double EstimatorReport::eta2_of(const std::vector<int>& elems) const {
  double s = 0.0;
  for (int k : elems) s += eta2_elem(k);
  return s;
}

double EstimatorReport::mu2_of(const std::vector<int>& elems) const {
  double s = 0.0;
  for (int k : elems) s += mu2_elem(k);
  return s;
}

Eigen::VectorXd EstimatorReport::combined() const {
  return eta_s_vol + eta_s_edge + eta_a_vol + eta_a_edge;
}

EstimatorReport estimate(const KktSolution& sol, const ProblemData& data,
                         const EstimatorOptions& opts) {
  const Mesh& mesh = *sol.state.space->mesh;
  const int nT = mesh.num_triangles();
  EstimatorReport rep;

  // state residual data term f + u and its oscillation
  auto state_g = [&](int k, const Vec2& x) { return data.f(x) + sol.control.eval(k, x); };
  auto state_smooth = [&](int k, const std::array<Vec2, 3>& c) {
    return sol.control.smooth_on(k, c) && (!data.f_smooth || data.f_smooth(c));
  };
  const VolumeMoments sm = volume_moments(mesh, state_g, state_smooth);

  // adjoint data term y_h - y_d
  auto adj_g = [&](int k, const Vec2& x) { return element_value(sol.state, k, x) - data.y_d(x); };
  auto adj_smooth = [&](int, const std::array<Vec2, 3>& c) {
    return !data.yd_smooth || data.yd_smooth(c);
  };
  const VolumeMoments am = volume_moments(mesh, adj_g, adj_smooth);

  rep.eta_s_vol.resize(nT);
  rep.eta_a_vol.resize(nT);
  rep.osc_f.resize(nT);
  rep.osc_yd.resize(nT);
  for (int k = 0; k < nT; ++k) {
    const double area = mesh.area(k);  // h_K^2 = |K|
    rep.eta_s_vol[k] = area * sm.square[k];
    rep.eta_a_vol[k] = area * am.square[k];
    // ||g - mean||^2 = ||g||^2 - |K| |mean|^2 with mean = int g / |K|
    rep.osc_f[k] = area * std::max(0.0, sm.square[k] - norm2(sm.mean[k]) / area);
    rep.osc_yd[k] = area * std::max(0.0, am.square[k] - norm2(am.mean[k]) / area);
  }
  rep.eta_s_edge = edge_jump_terms(sol.state, opts);
  rep.eta_a_edge = edge_jump_terms(sol.adjoint, opts);

  rep.eta2_total = rep.eta_s_vol.sum() + rep.eta_s_edge.sum() + rep.eta_a_vol.sum() +
                   rep.eta_a_edge.sum();
  rep.mu2_total = rep.eta_s_vol.sum() + rep.eta_a_vol.sum();
  rep.osc2_total = rep.osc_f.sum() + rep.osc_yd.sum();
  return rep;
}

std::vector<std::pair<double, double>> state_indicators(const KktSolution& sol,
                                                        const ProblemData& data,
                                                        const EstimatorOptions& opts) {
  const EstimatorReport rep = estimate(sol, data, opts);
  std::vector<std::pair<double, double>> out(rep.eta_s_vol.size());
  for (int k = 0; k < rep.eta_s_vol.size(); ++k) out[k] = {rep.eta_s_vol[k], rep.eta_s_edge[k]};
  return out;
}

std::vector<std::pair<double, double>> adjoint_indicators(const KktSolution& sol,
                                                          const ProblemData& data,
                                                          const EstimatorOptions& opts) {
  const EstimatorReport rep = estimate(sol, data, opts);
  std::vector<std::pair<double, double>> out(rep.eta_a_vol.size());
  for (int k = 0; k < rep.eta_a_vol.size(); ++k) out[k] = {rep.eta_a_vol[k], rep.eta_a_edge[k]};
  return out;
}

std::pair<Eigen::VectorXd, Eigen::VectorXd> oscillations(const KktSolution& sol,
                                                         const ProblemData& data) {
  const EstimatorReport rep = estimate(sol, data);
  return {rep.osc_f, rep.osc_yd};
}

double distance(const KktSolution& coarse, const KktSolution& fine, const RefinementRelation& rel) {
  const auto fine_mesh = fine.state.space->mesh;
  const auto py = prolong(coarse.state, rel, fine_mesh);
  const auto pp = prolong(coarse.adjoint, rel, fine_mesh);
  const double dy = broken_norms(to_affine(fine.state), py).h1;
  const double dp = broken_norms(to_affine(fine.adjoint), pp).h1;
  return std::sqrt(dy * dy + dp * dp);
}

double eta_aux(const CrField& vel, const P0Field& pres, const VecField& g, const SmoothTest& g_smooth,
               const EstimatorOptions& opts) {
  (void)pres;  // the auxiliary estimator carries no pressure term
  const Mesh& mesh = *vel.space->mesh;
  auto gk = [&](int, const Vec2& x) { return g(x); };
  auto smooth = [&](int, const std::array<Vec2, 3>& c) { return !g_smooth || g_smooth(c); };
  const VolumeMoments m = volume_moments(mesh, gk, smooth);
  const Eigen::VectorXd jumps = edge_jump_terms(vel, opts);
  double s = 0.0;
  for (int k = 0; k < mesh.num_triangles(); ++k) s += mesh.area(k) * m.square[k] + jumps[k];
  return std::sqrt(s);
}

void write_indicators_csv(std::ostream& os, const EstimatorReport& report, int level, bool header) {
  if (header) os << "elem,eta2_s_vol,eta2_s_edge,eta2_a_vol,eta2_a_edge,osc2,level\n";
  char buf[256];
  for (int k = 0; k < report.eta_s_vol.size(); ++k) {
    std::snprintf(buf, sizeof(buf), "%d,%.12g,%.12g,%.12g,%.12g,%.12g,%d\n", k, report.eta_s_vol[k],
                  report.eta_s_edge[k], report.eta_a_vol[k], report.eta_a_edge[k],
                  report.osc_f[k] + report.osc_yd[k], level);
    os << buf;
  }
}

}  // namespace crstokes
