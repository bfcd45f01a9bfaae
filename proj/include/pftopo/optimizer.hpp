#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "pftopo/elasticity.hpp"
#include "pftopo/linalg.hpp"
#include "pftopo/material.hpp"
#include "pftopo/mesh.hpp"

namespace pftopo {

/// Design-independent description of an optimization problem.
struct Problem {
  StructuredQuadMesh mesh;
  IsotropicElasticity material;
  InterpolationSpec interpolation;
  BoundaryConditions bc;
};

/// Allen-Cahn pseudo-time stepping parameters of the density field.
/// The interface thickness gamma_phi lives in InterpolationSpec.
struct OptConfig {
  double volume_fraction = 0.45;  // m
  double kappa_phi = 4.0;
  double tau = 1e-6;
  double tol = 0.01;
  int max_iter = 1000;
  double phi0 = 0.5;
};

struct GradedConfig : OptConfig {
  double kappa_chi = 4.0;
  double gamma_chi = 0.02;
  /// Initial grading value; defaults to phi0 (fully stiff start).
  std::optional<double> chi0;

  double initial_chi() const { return chi0.value_or(phi0); }
};

/// Mass-type matrix (gamma int N^T N), diffusion matrix (kappa gamma int grad N^T grad N)
/// and, for the density field, the multiplier column tau int N.
struct PhaseMatrices {
  SparseMatrix mass;
  SparseMatrix diffusion;
  Eigen::VectorXd multiplier_column;
};

PhaseMatrices assemble_phase_matrices(const StructuredQuadMesh& mesh, double gamma, double kappa, double tau);
PhaseMatrices assemble_phase_matrices(const StructuredQuadMesh& mesh, const InterpolationSpec& spec,
                                      const OptConfig& cfg);
PhaseMatrices assemble_chi_matrices(const StructuredQuadMesh& mesh, const GradedConfig& cfg);

/// Lagged forcing vectors of one staggered step.
struct DesignForcing {
  Eigen::VectorXd energy_phi;  // int N^T dE/dphi
  Eigen::VectorXd well;        // -(kappa_phi/gamma_phi) int N^T psi0'(phi)
  Eigen::VectorXd energy_chi;  // int N^T dE/dchi (graded only, else empty)
};

/// Evaluates the forcing at (phi_n, chi_n, u_n). Without chi the
/// single-material energy derivative is used.
DesignForcing assemble_design_forcing(const StructuredQuadMesh& mesh, const ElementCache& cache, const NodalField& phi,
                                      const std::optional<NodalField>& chi, const Eigen::VectorXd& u,
                                      const IsotropicElasticity& mat, const InterpolationSpec& spec, double kappa_phi);

/// Right-hand side of the density system: M phi_n + tau (q_s + q_psi).
Eigen::VectorXd assemble_phase_rhs(const PhaseMatrices& matrices, const NodalField& phi_n, const DesignForcing& forcing,
                                   double tau);

/// Nodewise clamp to [0,1].
NodalField project_unit_interval(const NodalField& phi);
/// Nodewise clamp of chi to [0, phi].
NodalField project_chi(const NodalField& chi, const NodalField& phi);

/// ||new - old||_2 / ||old||_2 over nodal values; +inf when old is zero.
double relative_increment(const NodalField& updated, const NodalField& previous);
inline double delta_phi(const NodalField& updated, const NodalField& previous) {
  return relative_increment(updated, previous);
}

/// (1/|Omega|) int field dOmega.
double material_fraction(const NodalField& field, const StructuredQuadMesh& mesh);

struct DensityStep {
  NodalField phi;                // before projection
  double lambda = 0.0;           // volume multiplier
  double volume_residual = 0.0;  // |int phi - m|Omega|| / (m|Omega|) before projection
};

struct GradingStep {
  NodalField chi;  // before projection
};

/// Prefactored linear systems of the staggered design update.
class DesignStepper {
 public:
  DesignStepper(const StructuredQuadMesh& mesh, const InterpolationSpec& spec, const OptConfig& cfg);
  DesignStepper(const StructuredQuadMesh& mesh, const InterpolationSpec& spec, const GradedConfig& cfg);

  /// Saddle solve of (M + tau K) phi + c lambda = rhs, c^T phi = tau m |Omega|.
  DensityStep step_density(const NodalField& phi_n, const DesignForcing& forcing) const;
  /// SPD solve of (M_chi + tau K_chi) chi = M_chi chi_n + tau q_t.
  GradingStep step_grading(const NodalField& chi_n, const DesignForcing& forcing) const;

  const PhaseMatrices& phase() const { return phase_; }
  const PhaseMatrices& grading() const { return grading_; }
  const Eigen::VectorXd& node_areas() const { return areas_; }

 private:
  void setup_density(const StructuredQuadMesh& mesh);

  double tau_;
  double target_volume_;
  Eigen::VectorXd areas_;
  PhaseMatrices phase_;
  SpdFactorization phase_factor_;
  Eigen::VectorXd phase_inv_column_;
  bool graded_ = false;
  PhaseMatrices grading_;
  SpdFactorization grading_factor_;
};

/// One single-material step with freshly assembled matrices.
DensityStep step_single(const Problem& problem, const OptConfig& cfg, const NodalField& phi_n,
                        const Eigen::VectorXd& u_n);

struct GradedStep {
  DensityStep density;
  GradingStep grading;
};

GradedStep step_graded(const Problem& problem, const GradedConfig& cfg, const NodalField& phi_n,
                       const NodalField& chi_n, const Eigen::VectorXd& u_n);

struct IterationRecord {
  int iter = 0;                  // 1-based
  double compliance = 0.0;       // state solve on the fields entering the iteration
  double volume = 0.0;           // material_fraction(phi) after projection
  double m_chi = 0.0;            // material_fraction(chi) after projection; volume when single
  double delta_phi = 0.0;
  double delta_chi = 0.0;        // 0 for single-material runs
  double lambda = 0.0;
  double volume_residual = 0.0;  // before projection
};

enum class RunStatus { converged, max_iterations, solver_failure };

const char* status_name(RunStatus status);

struct RunRecord {
  std::vector<IterationRecord> iterations;
  RunStatus status = RunStatus::max_iterations;
  bool converged() const { return status == RunStatus::converged; }
  double final_compliance = 0.0;  // state solve on the final fields
  double final_volume = 0.0;
  double final_m_chi = 0.0;
  std::string failure;
};

struct DesignState {
  NodalField phi;
  NodalField chi;  // empty for single-material runs
  double lambda = 0.0;
  int iteration = 0;
};

struct RunResult {
  DesignState state;
  RunRecord record;
};

/// Called after each completed iteration with the projected fields.
using IterationObserver = std::function<void(const IterationRecord&, const DesignState&)>;

RunResult run_single(const Problem& problem, const OptConfig& cfg, const IterationObserver& observer = {});
RunResult run_graded(const Problem& problem, const GradedConfig& cfg, const IterationObserver& observer = {});

}  // namespace pftopo
