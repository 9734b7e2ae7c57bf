#pragma once

#include <Eigen/Sparse>
#include <iosfwd>

#include "crstokes/femspace.hpp"

namespace crstokes {

// coordinate-format operator builder
struct SparseOperator {
  int rows = 0;
  int cols = 0;
  std::vector<Eigen::Triplet<double>> entries;

  void add(int r, int c, double v) { entries.emplace_back(r, c, v); }
  // merges duplicate (row, col) pairs
  Eigen::SparseMatrix<double> matrix() const {
    Eigen::SparseMatrix<double> m(rows, cols);
    m.setFromTriplets(entries.begin(), entries.end());
    m.makeCompressed();
    return m;
  }
};

// sum_K int_K grad(phi_i) : grad(phi_j); with eliminate_boundary the Dirichlet
// rows and columns are removed symmetrically
SparseOperator assemble_stiffness(const CrSpace& space, bool eliminate_boundary = true);

// entry (element, velocity dof) = int_K div(phi); exact, the integrand is constant
SparseOperator assemble_divergence(const CrSpace& v, const P0Space& q, bool eliminate_boundary = true);

// block-diagonal velocity mass operator; local scalar matrix is (|K|/3) I
SparseOperator assemble_mass(const CrSpace& space, bool eliminate_boundary = false);

// component i = int g . phi_i, degree-4 quadrature; full-length dof vector
Eigen::VectorXd assemble_load(const CrSpace& space, const VecField& g);
// variant for piecewise-smooth g: elements where `smooth` fails are integrated
// on a uniform subdivision (depth 4)
Eigen::VectorXd assemble_load(const CrSpace& space, const VecField& g, const SmoothTest& smooth);
// load of a CR field: exactly the mass operator applied to its coefficients
Eigen::VectorXd assemble_load(const CrSpace& space, const CrField& g);

void export_operator(std::ostream& os, const SparseOperator& op);

}  // namespace crstokes
