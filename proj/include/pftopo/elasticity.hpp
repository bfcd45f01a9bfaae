#pragma once

#include <optional>
#include <vector>

#include <Eigen/Core>

#include "pftopo/linalg.hpp"
#include "pftopo/material.hpp"
#include "pftopo/mesh.hpp"

namespace pftopo {

/// Displacement DOFs are interleaved: dof 2*node is x, 2*node+1 is y.
inline int dof_index(int node, int component) { return 2 * node + component; }

struct DirichletCondition {
  int node = 0;
  int component = 0;  // 0 = x, 1 = y
  double value = 0.0; // mm
};

struct TractionLoad {
  BoundaryEdge edge;
  double gx = 0.0;  // N/mm
  double gy = 0.0;  // N/mm
  /// Loaded part of the edge in its local parameter (0 at n0, 1 at n1).
  double s0 = 0.0;
  double s1 = 1.0;
};

struct BoundaryConditions {
  std::vector<DirichletCondition> dirichlet;
  std::vector<TractionLoad> neumann;

  /// Fixes the given components (bit 0 = x, bit 1 = y) of every node on a side.
  void fix_side(const StructuredQuadMesh& mesh, Side side, bool fix_x, bool fix_y);
  void fix_node(int node, bool fix_x, bool fix_y);
  /// Applies a constant traction on the part of `side` whose tangential
  /// coordinate (mm, along x or y) lies in [from, to]. Edges cut by the window
  /// are loaded on their overlap only.
  void add_traction(const StructuredQuadMesh& mesh, Side side, double gx, double gy, double from, double to);
  /// Applies a constant traction on the whole side.
  void add_traction(const StructuredQuadMesh& mesh, Side side, double gx, double gy);

  /// Throws std::invalid_argument unless the set is non-empty, nodes exist and
  /// every loaded edge is a boundary edge of the mesh.
  void validate(const StructuredQuadMesh& mesh) const;
};

struct StateSolution {
  Eigen::VectorXd u;        // nodal displacements, 2 per node (mm)
  double compliance = 0.0;  // f^T u (N mm)
};

/// Voigt strain-displacement evaluation at one element quadrature point.
Strain2 element_strain(const StructuredQuadMesh& mesh, const ElementPointGeometry& g, int element,
                       const Eigen::VectorXd& u);

/// Stiffness matrix (no boundary conditions). Without chi the single-material
/// law C(phi) is used, otherwise the graded law C(phi, chi).
SparseMatrix assemble_stiffness(const StructuredQuadMesh& mesh, const NodalField& phi,
                                const std::optional<NodalField>& chi, const IsotropicElasticity& mat,
                                const InterpolationSpec& spec);

/// Consistent load vector f = int_{Gamma_N} N^T g dGamma.
Eigen::VectorXd assemble_load(const StructuredQuadMesh& mesh, const BoundaryConditions& bc);

/// Reusable state solver: fixes the DOF partition, sparsity pattern, load vector
/// and symbolic factorization once, then re-assembles and solves per design.
class ElasticitySolver {
 public:
  ElasticitySolver(const StructuredQuadMesh& mesh, const IsotropicElasticity& mat, const InterpolationSpec& spec,
                   BoundaryConditions bc);

  StateSolution solve(const NodalField& phi, const std::optional<NodalField>& chi = std::nullopt);

  const Eigen::VectorXd& load() const { return load_; }
  const StructuredQuadMesh& mesh() const { return mesh_; }
  const ElementCache& cache() const { return cache_; }
  const IsotropicElasticity& material() const { return mat_; }
  const InterpolationSpec& interpolation() const { return spec_; }
  void set_interpolation(const InterpolationSpec& spec) { spec_ = spec; }
  int num_free_dofs() const { return num_free_; }

 private:
  void check_fields(const NodalField& phi, const std::optional<NodalField>& chi) const;

  StructuredQuadMesh mesh_;
  ElementCache cache_;
  IsotropicElasticity mat_;
  InterpolationSpec spec_;
  BoundaryConditions bc_;

  std::vector<int> free_index_;     // per DOF, -1 when prescribed
  Eigen::VectorXd prescribed_;      // per DOF, prescribed value or 0
  int num_free_ = 0;
  Eigen::VectorXd load_;

  std::vector<Eigen::Matrix<double, 8, 8>> unit_stiffness_;  // per (element, quadrature point)
  SparseMatrix reduced_;
  std::vector<int> value_slot_;     // per (element, a, b): index into reduced_ values, -1 if not free-free
  SpdFactorization factorization_;
};

/// One-shot solve of the state equation.
StateSolution solve_state(const StructuredQuadMesh& mesh, const NodalField& phi, const std::optional<NodalField>& chi,
                          const IsotropicElasticity& mat, const InterpolationSpec& spec, const BoundaryConditions& bc);

}  // namespace pftopo
