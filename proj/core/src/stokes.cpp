#include "crstokes/stokes.hpp"

#include <Eigen/Dense>
#include <stdexcept>

namespace crstokes {

StokesOperator::StokesOperator(std::shared_ptr<const CrSpace> space)
    : space_(std::move(space)), pspace_(std::make_shared<P0Space>(space_->mesh, true)) {
  const Mesh& mesh = *space_->mesh;
  nfree_ = space_->num_free();
  nelem_ = mesh.num_triangles();
  size_ = nfree_ + nelem_;

  const auto A = assemble_stiffness(*space_, true);
  const auto B = assemble_divergence(*space_, *pspace_, true);

  // The columns of B sum to zero (edge fluxes of the basis cancel pairwise),
  // so one mass row is redundant. Pinning the first pressure value in its
  // place keeps the pattern sparse; the solved pressure is shifted to zero
  // weighted mean afterwards, which leaves the momentum rows untouched.
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(A.entries.size() + 2 * B.entries.size() + 1);
  for (const auto& t : A.entries) trip.emplace_back(t.row(), t.col(), t.value());
  for (const auto& t : B.entries) {
    if (t.row() != 0) trip.emplace_back(nfree_ + t.row(), t.col(), -t.value());  // -B y
    trip.emplace_back(t.col(), nfree_ + t.row(), -t.value());                    // -B^T r
  }
  trip.emplace_back(nfree_, nfree_, mesh.area(0));
  saddle_.resize(size_, size_);
  saddle_.setFromTriplets(trip.begin(), trip.end());
  saddle_.makeCompressed();
  lu_.compute(saddle_);
  if (lu_.info() != Eigen::Success)
    throw std::runtime_error("StokesOperator: factorization failed (singular saddle system?)");
}

StokesSolution StokesOperator::solve(const Eigen::VectorXd& load_full, bool adjoint_coupling) const {
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(size_);
  rhs.head(nfree_) = space_->restrict_free(load_full);

  const Eigen::VectorXd x = lu_.solve(rhs);
  if (lu_.info() != Eigen::Success) throw std::runtime_error("StokesOperator: solve failed");

  const double rhs_norm = rhs.norm();
  const double resid = (saddle_ * x - rhs).norm() / (rhs_norm > 0 ? rhs_norm : 1.0);
  if (resid > 1e-11)
    throw std::runtime_error("StokesOperator: relative algebraic residual " + std::to_string(resid) +
                             " exceeds 1e-11");

  StokesSolution sol;
  sol.velocity = CrField(space_);
  sol.velocity.coeffs = space_->extend_full(x.head(nfree_));
  sol.pressure = P0Field(pspace_);
  sol.pressure.values = x.segment(nfree_, nelem_);
  sol.pressure.values.array() -= weighted_mean(sol.pressure);
  if (adjoint_coupling) sol.pressure.values = -sol.pressure.values;
  sol.momentum_residual = resid;

  const Eigen::VectorXd div = elementwise_divergence(sol.velocity);
  const double energy = broken_norms(sol.velocity).h1;
  sol.mass_residual = energy > 0 ? div.cwiseAbs().maxCoeff() / energy : div.cwiseAbs().maxCoeff();
  return sol;
}

StokesSolution StokesOperator::solve(const VecField& g, bool adjoint_coupling) const {
  return solve(assemble_load(*space_, g), adjoint_coupling);
}

StokesSolution solve_stokes(std::shared_ptr<const CrSpace> space, const VecField& g,
                            bool adjoint_coupling) {
  StokesOperator op(std::move(space));
  return op.solve(g, adjoint_coupling);
}

CrField solve_stokes_reduced_kernel(std::shared_ptr<const CrSpace> space,
                                    const Eigen::VectorXd& load_full) {
  const Mesh& mesh = *space->mesh;
  if (mesh.num_triangles() > 400)
    throw std::runtime_error("solve_stokes_reduced_kernel: desk-scale meshes only");

  const Eigen::MatrixXd B = assemble_divergence(*space, P0Space(space->mesh, true), true).matrix();
  const Eigen::MatrixXd A = assemble_stiffness(*space, true).matrix();
  const Eigen::FullPivLU<Eigen::MatrixXd> lu(B);
  const Eigen::MatrixXd Z = lu.kernel();  // basis of {div_h v = 0}

  const Eigen::VectorXd g = space->restrict_free(load_full);
  const Eigen::MatrixXd Ared = Z.transpose() * A * Z;
  const Eigen::VectorXd rhs = Z.transpose() * g;
  const Eigen::VectorXd c = Ared.ldlt().solve(rhs);

  CrField vel(space);
  vel.coeffs = space->extend_full(Z * c);
  return vel;
}

}  // namespace crstokes
