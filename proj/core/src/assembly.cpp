#include "crstokes/assembly.hpp"

#include <cstdio>
#include <ostream>
#include <stdexcept>

namespace crstokes {

namespace {

// gradients of the three CR basis functions 1 - 2*l_i on element k
std::array<Vec2, 3> cr_gradients(const Mesh& mesh, int k) {
  auto lg = barycentric_gradients(mesh, k);
  for (auto& g : lg) g = -2.0 * g;
  return lg;
}

}  // namespace

SparseOperator assemble_stiffness(const CrSpace& space, bool eliminate_boundary) {
  const Mesh& mesh = *space.mesh;
  SparseOperator op;
  op.rows = op.cols = eliminate_boundary ? space.num_free() : space.num_dofs();
  op.entries.reserve(static_cast<std::size_t>(mesh.num_triangles()) * 18);
  for (int k = 0; k < mesh.num_triangles(); ++k) {
    const double area = mesh.area(k);
    const auto g = cr_gradients(mesh, k);
    for (int i = 0; i < 3; ++i) {
      for (int j = 0; j < 3; ++j) {
        const double v = area * dot(g[i], g[j]);
        for (int c = 0; c < 2; ++c) {
          int r = CrSpace::dof(mesh.tri_edges[k][i], c);
          int s = CrSpace::dof(mesh.tri_edges[k][j], c);
          if (eliminate_boundary) {
            r = space.free_index[r];
            s = space.free_index[s];
            if (r < 0 || s < 0) continue;
          }
          op.add(r, s, v);
        }
      }
    }
  }
  return op;
}

SparseOperator assemble_divergence(const CrSpace& v, const P0Space& q, bool eliminate_boundary) {
  if (v.mesh->id != q.mesh->id) throw std::runtime_error("assemble_divergence: meshes differ");
  const Mesh& mesh = *v.mesh;
  SparseOperator op;
  op.rows = mesh.num_triangles();
  op.cols = eliminate_boundary ? v.num_free() : v.num_dofs();
  for (int k = 0; k < mesh.num_triangles(); ++k) {
    const double area = mesh.area(k);
    const auto g = cr_gradients(mesh, k);
    for (int i = 0; i < 3; ++i) {
      for (int c = 0; c < 2; ++c) {
        int col = CrSpace::dof(mesh.tri_edges[k][i], c);
        if (eliminate_boundary) {
          col = v.free_index[col];
          if (col < 0) continue;
        }
        op.add(k, col, area * g[i][c]);
      }
    }
  }
  return op;
}

SparseOperator assemble_mass(const CrSpace& space, bool eliminate_boundary) {
  const Mesh& mesh = *space.mesh;
  SparseOperator op;
  op.rows = op.cols = eliminate_boundary ? space.num_free() : space.num_dofs();
  for (int k = 0; k < mesh.num_triangles(); ++k) {
    const double third = mesh.area(k) / 3.0;
    for (int i = 0; i < 3; ++i) {
      for (int c = 0; c < 2; ++c) {
        int d = CrSpace::dof(mesh.tri_edges[k][i], c);
        if (eliminate_boundary) {
          d = space.free_index[d];
          if (d < 0) continue;
        }
        op.add(d, d, third);
      }
    }
  }
  return op;
}

Eigen::VectorXd assemble_load(const CrSpace& space, const VecField& g) {
  const Mesh& mesh = *space.mesh;
  const auto& rule = tri_rule_deg4();
  Eigen::VectorXd load = Eigen::VectorXd::Zero(space.num_dofs());
  for (int k = 0; k < mesh.num_triangles(); ++k) {
    const auto c = mesh.corners(k);
    const double area = mesh.area(k);
    std::array<Vec2, 3> acc{};
    for (const auto& q : rule.points) {
      const Vec2 x = q.l0 * c[0] + q.l1 * c[1] + q.l2 * c[2];
      const Vec2 gv = g(x);
      const std::array<double, 3> l{q.l0, q.l1, q.l2};
      for (int i = 0; i < 3; ++i) acc[i] += (q.w * (1.0 - 2.0 * l[i])) * gv;
    }
    for (int i = 0; i < 3; ++i) {
      const int e = mesh.tri_edges[k][i];
      load[CrSpace::dof(e, 0)] += area * acc[i].x;
      load[CrSpace::dof(e, 1)] += area * acc[i].y;
    }
  }
  return load;
}

Eigen::VectorXd assemble_load(const CrSpace& space, const VecField& g, const SmoothTest& smooth) {
  if (!smooth) return assemble_load(space, g);
  const Mesh& mesh = *space.mesh;
  const auto& rule = tri_rule_deg4();
  Eigen::VectorXd load = Eigen::VectorXd::Zero(space.num_dofs());
  for (int k = 0; k < mesh.num_triangles(); ++k) {
    const auto corners = mesh.corners(k);
    const auto lg = barycentric_gradients(mesh, k);
    const Vec2 centroid = mesh.centroid(k);
    std::array<Vec2, 3> acc{};
    for_each_adaptive_point(
        corners, smooth,
        [&](const Vec2& x, double w) {
          const Vec2 gv = g(x);
          for (int i = 0; i < 3; ++i) {
            const double phi = 1.0 / 3.0 - 2.0 * dot(lg[i], x - centroid);
            acc[i] += (w * phi) * gv;
          }
        },
        rule, 4);
    for (int i = 0; i < 3; ++i) {
      const int e = mesh.tri_edges[k][i];
      load[CrSpace::dof(e, 0)] += acc[i].x;
      load[CrSpace::dof(e, 1)] += acc[i].y;
    }
  }
  return load;
}

Eigen::VectorXd assemble_load(const CrSpace& space, const CrField& g) {
  if (g.space->mesh->id != space.mesh->id) throw std::runtime_error("assemble_load: meshes differ");
  const Mesh& mesh = *space.mesh;
  Eigen::VectorXd load = Eigen::VectorXd::Zero(space.num_dofs());
  for (int k = 0; k < mesh.num_triangles(); ++k) {
    const double third = mesh.area(k) / 3.0;
    for (int i = 0; i < 3; ++i) {
      const int e = mesh.tri_edges[k][i];
      load[CrSpace::dof(e, 0)] += third * g.dof(e, 0);
      load[CrSpace::dof(e, 1)] += third * g.dof(e, 1);
    }
  }
  return load;
}

void export_operator(std::ostream& os, const SparseOperator& op) {
  const auto m = op.matrix();
  char buf[128];
  for (int c = 0; c < m.outerSize(); ++c) {
    for (Eigen::SparseMatrix<double>::InnerIterator it(m, c); it; ++it) {
      std::snprintf(buf, sizeof(buf), "%ld %ld %.17g\n", static_cast<long>(it.row()),
                    static_cast<long>(it.col()), it.value());
      os << buf;
    }
  }
}

}  // namespace crstokes
