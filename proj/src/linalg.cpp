#include "pftopo/linalg.hpp"

#include <cmath>
#include <sstream>
#include <vector>

#include <Eigen/OrderingMethods>
#include <Eigen/SparseCholesky>

namespace pftopo {

bool is_symmetric(const SparseMatrix& a, double rel_tol) {
  if (a.rows() != a.cols()) return false;
  const SparseMatrix diff = SparseMatrix(a.transpose()) - a;
  const double scale = a.norm();
  return diff.norm() <= rel_tol * (scale > 0.0 ? scale : 1.0);
}

CgReport solve_spd(const SparseMatrix& a, const Eigen::VectorXd& b, Eigen::VectorXd& x,
                   const CgOptions& options) {
  const Eigen::Index n = a.rows();
  if (a.cols() != n || b.size() != n) throw std::invalid_argument("solve_spd: dimension mismatch");

  CgReport report;
  const double b_norm = b.norm();
  if (x.size() != n) x = Eigen::VectorXd::Zero(n);
  if (b_norm == 0.0) {
    x.setZero();
    return report;
  }

  Eigen::VectorXd inv_diag(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double d = a.coeff(i, i);
    if (!(d > 0.0)) throw SolverFailure("solve_spd: non-positive diagonal entry", 1.0);
    inv_diag[i] = 1.0 / d;
  }

  const int cap = options.max_iterations > 0 ? options.max_iterations : static_cast<int>(10 * n);
  const double target = options.rel_tol * b_norm;

  Eigen::VectorXd r = b - a * x;
  Eigen::VectorXd z = inv_diag.cwiseProduct(r);
  Eigen::VectorXd p = z;
  Eigen::VectorXd ap(n);
  double rz = r.dot(z);
  double r_norm = r.norm();

  while (r_norm > target && report.iterations < cap) {
    ap.noalias() = a * p;
    const double alpha = rz / p.dot(ap);
    x.noalias() += alpha * p;
    r.noalias() -= alpha * ap;
    z = inv_diag.cwiseProduct(r);
    const double rz_next = r.dot(z);
    p = z + (rz_next / rz) * p;
    rz = rz_next;
    r_norm = r.norm();
    ++report.iterations;
  }
  report.relative_residual = r_norm / b_norm;
  if (r_norm > target) {
    std::ostringstream msg;
    msg << "solve_spd: no convergence after " << report.iterations << " iterations (relative residual "
        << report.relative_residual << ")";
    throw SolverFailure(msg.str(), report.relative_residual);
  }
  return report;
}

Eigen::VectorXd solve_spd(const SparseMatrix& a, const Eigen::VectorXd& b, const CgOptions& options) {
  Eigen::VectorXd x;
  solve_spd(a, b, x, options);
  return x;
}

struct SpdFactorization::Impl {
  Eigen::SimplicialLDLT<SparseMatrix, Eigen::Lower, Eigen::AMDOrdering<int>> ldlt;
};

SpdFactorization::SpdFactorization() : impl_(std::make_unique<Impl>()) {}
SpdFactorization::~SpdFactorization() = default;
SpdFactorization::SpdFactorization(SpdFactorization&&) noexcept = default;
SpdFactorization& SpdFactorization::operator=(SpdFactorization&&) noexcept = default;

void SpdFactorization::analyze(const SparseMatrix& a) {
  impl_->ldlt.analyzePattern(a);
  analyzed_ = true;
}

void SpdFactorization::factorize(const SparseMatrix& a) {
  if (!analyzed_) analyze(a);
  impl_->ldlt.factorize(a);
  if (impl_->ldlt.info() != Eigen::Success) throw SolverFailure("sparse LDL^T factorization failed", 1.0);
  const auto& d = impl_->ldlt.vectorD();
  for (Eigen::Index i = 0; i < d.size(); ++i) {
    if (!(d[i] > 0.0)) throw SolverFailure("matrix is not positive definite", 1.0);
  }
}

Eigen::VectorXd SpdFactorization::solve(const Eigen::VectorXd& b) const {
  Eigen::VectorXd x = impl_->ldlt.solve(b);
  if (impl_->ldlt.info() != Eigen::Success) throw SolverFailure("sparse LDL^T solve failed", 1.0);
  return x;
}

SaddleSolution solve_saddle_scalar(const SpdSolve& solve_a, const Eigen::VectorXd& c,
                                   const Eigen::VectorXd& a_inv_c, const Eigen::VectorXd& rhs, double r) {
  const double schur = c.dot(a_inv_c);
  if (schur == 0.0 || !std::isfinite(schur)) throw SingularConstraint("saddle solve: c^T A^{-1} c vanishes");
  const Eigen::VectorXd y1 = solve_a(rhs);
  SaddleSolution out;
  out.multiplier = (c.dot(y1) - r) / schur;
  out.x = y1 - out.multiplier * a_inv_c;
  return out;
}

SaddleSolution solve_saddle_scalar(const SpdSolve& solve_a, const Eigen::VectorXd& c,
                                   const Eigen::VectorXd& rhs, double r) {
  if (c.size() != rhs.size()) throw std::invalid_argument("saddle solve: dimension mismatch");
  if (c.squaredNorm() == 0.0) throw SingularConstraint("saddle solve: constraint column is zero");
  return solve_saddle_scalar(solve_a, c, solve_a(c), rhs, r);
}

SaddleSolution solve_saddle_scalar(const SparseMatrix& a, const Eigen::VectorXd& c,
                                   const Eigen::VectorXd& rhs, double r) {
  const SpdSolve solve = [&a](const Eigen::VectorXd& b) {
    CgOptions opts;
    opts.rel_tol = 1e-13;
    return solve_spd(a, b, opts);
  };
  return solve_saddle_scalar(solve, c, rhs, r);
}

namespace {

template <typename Kernel>
SparseMatrix assemble_scalar(const StructuredQuadMesh& mesh, const ElementCache& cache, Kernel kernel) {
  std::vector<Eigen::Triplet<double>> triplets;
  triplets.reserve(static_cast<std::size_t>(mesh.num_elements()) * 16);
  for (int e = 0; e < mesh.num_elements(); ++e) {
    const auto& nodes = mesh.element(e);
    double ke[4][4] = {};
    for (int q = 0; q < ElementCache::kPoints; ++q) {
      const auto& g = cache.at(e, q);
      const double w = cache.weight(q) * g.det_j;
      for (std::size_t a = 0; a < 4; ++a) {
        for (std::size_t b = 0; b < 4; ++b) ke[a][b] += w * kernel(g, a, b);
      }
    }
    for (std::size_t a = 0; a < 4; ++a) {
      for (std::size_t b = 0; b < 4; ++b) triplets.emplace_back(nodes[a], nodes[b], ke[a][b]);
    }
  }
  SparseMatrix m(mesh.num_nodes(), mesh.num_nodes());
  m.setFromTriplets(triplets.begin(), triplets.end());
  return m;
}

}  // namespace

SparseMatrix assemble_scalar_mass(const StructuredQuadMesh& mesh, const ElementCache& cache) {
  return assemble_scalar(mesh, cache,
                         [](const ElementPointGeometry& g, std::size_t a, std::size_t b) { return g.n[a] * g.n[b]; });
}

SparseMatrix assemble_scalar_laplacian(const StructuredQuadMesh& mesh, const ElementCache& cache) {
  return assemble_scalar(mesh, cache, [](const ElementPointGeometry& g, std::size_t a, std::size_t b) {
    return g.dndx[a] * g.dndx[b] + g.dndy[a] * g.dndy[b];
  });
}

Eigen::VectorXd assemble_node_areas(const StructuredQuadMesh& mesh, const ElementCache& cache) {
  Eigen::VectorXd areas = Eigen::VectorXd::Zero(mesh.num_nodes());
  for (int e = 0; e < mesh.num_elements(); ++e) {
    const auto& nodes = mesh.element(e);
    for (int q = 0; q < ElementCache::kPoints; ++q) {
      const auto& g = cache.at(e, q);
      const double w = cache.weight(q) * g.det_j;
      for (std::size_t a = 0; a < 4; ++a) areas[nodes[a]] += w * g.n[a];
    }
  }
  return areas;
}

}  // namespace pftopo
