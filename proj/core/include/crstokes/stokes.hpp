#pragma once

#include <Eigen/Sparse>
#include <Eigen/SparseLU>
#include <memory>

#include "crstokes/assembly.hpp"

namespace crstokes {

struct StokesSolution {
  CrField velocity;
  P0Field pressure;
  double momentum_residual = 0.0;  // algebraic, relative
  double mass_residual = 0.0;      // max elementwise divergence over the broken energy
};

// Direct solver for the saddle-point system
//   a_h(y, v) - b_h(v, r) = (g, v),  b_h(y, q) = 0,
// with the zero pressure mean enforced through one Lagrange multiplier. The
// factorization is shared between arbitrarily many right-hand sides, and the
// adjoint coupling a_h(p, q) + b_h(q, s) = (g, q) is obtained by flipping the
// sign of the pressure after the solve.
class StokesOperator {
 public:
  explicit StokesOperator(std::shared_ptr<const CrSpace> space);

  StokesSolution solve(const Eigen::VectorXd& load_full, bool adjoint_coupling = false) const;
  StokesSolution solve(const VecField& g, bool adjoint_coupling = false) const;

  const std::shared_ptr<const CrSpace>& space() const { return space_; }
  const std::shared_ptr<const P0Space>& pressure_space() const { return pspace_; }
  int system_size() const { return size_; }

 private:
  std::shared_ptr<const CrSpace> space_;
  std::shared_ptr<const P0Space> pspace_;
  Eigen::SparseMatrix<double> saddle_;
  Eigen::SparseLU<Eigen::SparseMatrix<double>, Eigen::COLAMDOrdering<int>> lu_;
  int nfree_ = 0;
  int nelem_ = 0;
  int size_ = 0;
};

StokesSolution solve_stokes(std::shared_ptr<const CrSpace> space, const VecField& g,
                            bool adjoint_coupling = false);

// Desk-scale cross-check: solve the kernel equation on an explicit basis of
// the discrete divergence-free subspace (dense nullspace extraction).
CrField solve_stokes_reduced_kernel(std::shared_ptr<const CrSpace> space,
                                    const Eigen::VectorXd& load_full);

}  // namespace crstokes
