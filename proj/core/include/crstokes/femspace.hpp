#pragma once

#include <Eigen/Core>
#include <functional>
#include <memory>
#include <vector>

#include "crstokes/mesh.hpp"
#include "crstokes/quadrature.hpp"

namespace crstokes {

using VecField = std::function<Vec2(const Vec2&)>;

// Crouzeix-Raviart velocity space: one scalar DOF per edge and component,
// continuous at edge midpoints. DOF (e, c) sits at index 2*e + c. Dirichlet
// edges carry homogeneous boundary values and are masked out of the free set.
class CrSpace {
 public:
  explicit CrSpace(std::shared_ptr<const Mesh> mesh);

  std::shared_ptr<const Mesh> mesh;
  std::vector<int> free_index;  // dof -> position among free dofs, or -1
  std::vector<int> free_dofs;   // inverse map

  static int dof(int edge, int comp) { return 2 * edge + comp; }
  int num_dofs() const { return 2 * mesh->num_edges(); }
  int num_free() const { return static_cast<int>(free_dofs.size()); }
  bool constrained(int dof_id) const { return free_index[dof_id] < 0; }

  Eigen::VectorXd restrict_free(const Eigen::VectorXd& full) const;
  Eigen::VectorXd extend_full(const Eigen::VectorXd& free) const;
};

class P0Space {
 public:
  explicit P0Space(std::shared_ptr<const Mesh> m, bool zero_mean_ = true)
      : mesh(std::move(m)), zero_mean(zero_mean_) {}
  std::shared_ptr<const Mesh> mesh;
  bool zero_mean;
};

struct CrField {
  std::shared_ptr<const CrSpace> space;
  Eigen::VectorXd coeffs;  // full dof vector; boundary entries are zero

  CrField() = default;
  explicit CrField(std::shared_ptr<const CrSpace> s)
      : space(std::move(s)), coeffs(Eigen::VectorXd::Zero(space->num_dofs())) {}

  double dof(int edge, int comp) const { return coeffs[CrSpace::dof(edge, comp)]; }
};

struct P0Field {
  std::shared_ptr<const P0Space> space;
  Eigen::VectorXd values;  // one scalar per element

  P0Field() = default;
  explicit P0Field(std::shared_ptr<const P0Space> s)
      : space(std::move(s)), values(Eigen::VectorXd::Zero(space->mesh->num_triangles())) {}
};

// Elementwise affine vector field on a mesh; the prolongation target and the
// common ground for broken norms of fields from different (nested) meshes.
struct PiecewiseAffineField {
  std::shared_ptr<const Mesh> mesh;
  std::vector<Vec2> value_at_centroid;
  std::vector<Mat2> grad;

  Vec2 eval(int elem, const Vec2& x) const {
    return value_at_centroid[elem] + grad[elem] * (x - mesh->centroid(elem));
  }
};

// Conforming companion: continuous P1 part given by vertex values (zero on the
// boundary) plus a cubic volume bubble per element.
struct ConformingField {
  std::shared_ptr<const Mesh> mesh;
  std::vector<Vec2> vertex_values;
  std::vector<Vec2> bubble;  // coefficient of 27*l0*l1*l2

  Vec2 eval(int elem, const Vec2& x) const;
  Mat2 gradient(int elem, const Vec2& x) const;
};

// gradients of the barycentric coordinates of element k
std::array<Vec2, 3> barycentric_gradients(const Mesh& mesh, int k);
std::array<double, 3> barycentric(const Mesh& mesh, int k, const Vec2& x);

// per-element gradient (row i = gradient of component i)
Mat2 element_gradient(const CrField& f, int k);
// value from the local affine representation
Vec2 element_value(const CrField& f, int k, const Vec2& x);

// affine evaluation through the three edge-midpoint basis functions 1 - 2*l_opp
Vec2 evaluate(const CrField& f, int elem, const std::array<double, 3>& bary);

PiecewiseAffineField to_affine(const CrField& f);

// exact transfer of the elementwise affine data onto a refinement
PiecewiseAffineField prolong(const CrField& coarse, const RefinementRelation& rel,
                             std::shared_ptr<const Mesh> fine);
PiecewiseAffineField prolong(const PiecewiseAffineField& coarse, const RefinementRelation& rel,
                             std::shared_ptr<const Mesh> fine);

// edge-mean interpolation of an analytic field (3-point Gauss per edge)
CrField interpolate(std::shared_ptr<const CrSpace> space, const VecField& source,
                    bool force_boundary_zero = true);
// edge-mean interpolation of a field living on a refinement of space->mesh;
// segment means are resolved exactly on the dyadic partition of each edge
CrField interpolate_from_fine(std::shared_ptr<const CrSpace> space, const CrField& fine,
                              const RefinementRelation& rel, bool force_boundary_zero = false);

// vertex averaging plus a volume-bubble correction so that the element mean of
// v - Jv vanishes exactly
ConformingField companion(const CrField& f);
// elementwise Frobenius norm of the mean gradient of v - Jv (diagnostic only;
// this construction does not preserve gradient moments)
std::vector<double> companion_gradient_defect(const CrField& f, const ConformingField& j);

struct Norms {
  double l2 = 0.0;
  double h1 = 0.0;  // broken seminorm
};
Norms broken_norms(const CrField& a);
Norms broken_norms(const CrField& a, const CrField& b);
Norms broken_norms(const PiecewiseAffineField& a);
Norms broken_norms(const PiecewiseAffineField& a, const PiecewiseAffineField& b);

double l2_norm(const P0Field& a);
double l2_norm(const P0Field& a, const P0Field& b);
// L2 distance between a P0 field on a fine mesh and a coarse P0 field
double l2_norm_p0_diff(const P0Field& fine, const P0Field& coarse, const RefinementRelation& rel);

// per-element divergence
Eigen::VectorXd elementwise_divergence(const CrField& f);
// mean of the pressure, weighted by element areas
double weighted_mean(const P0Field& p);

// locate the fine element below a given coarse element containing x
int locate_descendant(const Mesh& fine, const RefinementRelation& rel, int coarse_elem, const Vec2& x);

// energy norm of a conforming field difference against a CR field, i.e.
// broken seminorm of (v_h - J v_h); integrands are quartic, the degree-4 rule
// is exact
double companion_energy_distance(const CrField& v, const ConformingField& j);

// element means of v - Jv, max norm over elements (should vanish)
double companion_value_defect(const CrField& v, const ConformingField& j);

void write_field_csv(std::ostream& os, const CrField& f);

}  // namespace crstokes
