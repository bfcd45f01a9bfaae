#pragma once

#include <functional>
#include <memory>
#include <stdexcept>
#include <string>

#include <Eigen/Core>
#include <Eigen/SparseCore>

#include "pftopo/mesh.hpp"

namespace pftopo {

/// Symmetric sparse matrix; both triangles are stored.
using SparseMatrix = Eigen::SparseMatrix<double>;

/// An iterative or direct solve did not reach its target.
class SolverFailure : public std::runtime_error {
 public:
  SolverFailure(const std::string& what, double achieved_residual)
      : std::runtime_error(what), achieved_residual_(achieved_residual) {}
  double achieved_residual() const { return achieved_residual_; }

 private:
  double achieved_residual_;
};

/// The Schur complement of a scalar-multiplier saddle system vanished.
class SingularConstraint : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

bool is_symmetric(const SparseMatrix& a, double rel_tol = 1e-12);

struct CgOptions {
  double rel_tol = 1e-10;
  /// 0 selects the default cap of 10 * dimension.
  int max_iterations = 0;
};

struct CgReport {
  int iterations = 0;
  double relative_residual = 0.0;
};

/// Jacobi-preconditioned conjugate gradients for an SPD matrix.
///
/// `x` is used as the initial guess when its size matches; on return it holds
/// the solution. Throws SolverFailure when the residual target is not met
/// within the iteration cap.
CgReport solve_spd(const SparseMatrix& a, const Eigen::VectorXd& b, Eigen::VectorXd& x,
                   const CgOptions& options = {});
Eigen::VectorXd solve_spd(const SparseMatrix& a, const Eigen::VectorXd& b, const CgOptions& options = {});

/// Sparse LDL^T factorization of an SPD matrix whose symbolic analysis is
/// reused across refactorizations with the same pattern.
class SpdFactorization {
 public:
  SpdFactorization();
  ~SpdFactorization();
  SpdFactorization(SpdFactorization&&) noexcept;
  SpdFactorization& operator=(SpdFactorization&&) noexcept;

  void analyze(const SparseMatrix& a);
  void factorize(const SparseMatrix& a);
  Eigen::VectorXd solve(const Eigen::VectorXd& b) const;
  bool analyzed() const { return analyzed_; }

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
  bool analyzed_ = false;
};

/// Solution (x, multiplier) of [A c; c^T 0] [x; multiplier] = [rhs; r].
struct SaddleSolution {
  Eigen::VectorXd x;
  double multiplier = 0.0;
};

using SpdSolve = std::function<Eigen::VectorXd(const Eigen::VectorXd&)>;

/// Scalar Schur-complement solve: A y1 = rhs, A y2 = c,
/// multiplier = (c^T y1 - r) / (c^T y2), x = y1 - multiplier * y2.
SaddleSolution solve_saddle_scalar(const SpdSolve& solve_a, const Eigen::VectorXd& c,
                                   const Eigen::VectorXd& rhs, double r);
/// Same, with A^{-1} c already available.
SaddleSolution solve_saddle_scalar(const SpdSolve& solve_a, const Eigen::VectorXd& c,
                                   const Eigen::VectorXd& a_inv_c, const Eigen::VectorXd& rhs, double r);
/// Convenience overload backed by solve_spd.
SaddleSolution solve_saddle_scalar(const SparseMatrix& a, const Eigen::VectorXd& c,
                                   const Eigen::VectorXd& rhs, double r);

/// Consistent scalar mass matrix  int N^T N dOmega.
SparseMatrix assemble_scalar_mass(const StructuredQuadMesh& mesh, const ElementCache& cache);
/// Scalar Laplacian  int grad N^T grad N dOmega.
SparseMatrix assemble_scalar_laplacian(const StructuredQuadMesh& mesh, const ElementCache& cache);
/// Node areas  int N dOmega (row sums of the consistent mass matrix).
Eigen::VectorXd assemble_node_areas(const StructuredQuadMesh& mesh, const ElementCache& cache);

}  // namespace pftopo
