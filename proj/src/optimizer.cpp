#include "pftopo/optimizer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace pftopo {

namespace {

double interpolate(const ElementPointGeometry& g, const std::array<int, 4>& nodes, const NodalField& field) {
  double v = 0.0;
  for (std::size_t k = 0; k < 4; ++k) v += g.n[k] * field[nodes[k]];
  return v;
}

void validate(const OptConfig& cfg) {
  if (!(cfg.volume_fraction > 0.0 && cfg.volume_fraction <= 1.0)) {
    throw std::invalid_argument("volume fraction m must lie in (0, 1]");
  }
  if (!(cfg.kappa_phi >= 0.0)) throw std::invalid_argument("kappa_phi must be non-negative");
  if (!(cfg.tau > 0.0) || !(cfg.tol > 0.0) || cfg.max_iter < 1) {
    throw std::invalid_argument("tau, tol and max_iter must be positive");
  }
}

void validate(const GradedConfig& cfg) {
  validate(static_cast<const OptConfig&>(cfg));
  if (!(cfg.kappa_chi >= 0.0)) throw std::invalid_argument("kappa_chi must be non-negative");
  if (!(cfg.gamma_chi > 0.0)) throw std::invalid_argument("gamma_chi must be positive");
}

}  // namespace

PhaseMatrices assemble_phase_matrices(const StructuredQuadMesh& mesh, double gamma, double kappa, double tau) {
  const ElementCache cache(mesh);
  PhaseMatrices out;
  out.mass = gamma * assemble_scalar_mass(mesh, cache);
  out.diffusion = (kappa * gamma) * assemble_scalar_laplacian(mesh, cache);
  out.multiplier_column = tau * assemble_node_areas(mesh, cache);
  return out;
}

PhaseMatrices assemble_phase_matrices(const StructuredQuadMesh& mesh, const InterpolationSpec& spec,
                                      const OptConfig& cfg) {
  return assemble_phase_matrices(mesh, spec.gamma_phi, cfg.kappa_phi, cfg.tau);
}

PhaseMatrices assemble_chi_matrices(const StructuredQuadMesh& mesh, const GradedConfig& cfg) {
  PhaseMatrices out = assemble_phase_matrices(mesh, cfg.gamma_chi, cfg.kappa_chi, cfg.tau);
  out.multiplier_column.resize(0);
  return out;
}

DesignForcing assemble_design_forcing(const StructuredQuadMesh& mesh, const ElementCache& cache, const NodalField& phi,
                                      const std::optional<NodalField>& chi, const Eigen::VectorXd& u,
                                      const IsotropicElasticity& mat, const InterpolationSpec& spec,
                                      double kappa_phi) {
  const int nn = mesh.num_nodes();
  if (phi.size() != nn || (chi && chi->size() != nn) || u.size() != 2 * nn) {
    throw std::invalid_argument("design forcing: field size does not match mesh");
  }
  DesignForcing out;
  out.energy_phi = Eigen::VectorXd::Zero(nn);
  out.well = Eigen::VectorXd::Zero(nn);
  if (chi) out.energy_chi = Eigen::VectorXd::Zero(nn);
  const double well_scale = -kappa_phi / spec.gamma_phi;

  for (int e = 0; e < mesh.num_elements(); ++e) {
    const auto& nodes = mesh.element(e);
    for (int q = 0; q < ElementCache::kPoints; ++q) {
      const auto& g = cache.at(e, q);
      const double w = cache.weight(q) * g.det_j;
      const double ph = interpolate(g, nodes, phi);
      const Strain2 eps = element_strain(mesh, g, e, u);
      double de_dphi = 0.0;
      double de_dchi = 0.0;
      if (chi) {
        const double ch = interpolate(g, nodes, *chi);
        de_dphi = denergy_dphi_graded(ph, ch, eps, mat, spec);
        de_dchi = denergy_dchi_graded(ph, ch, eps, mat, spec);
      } else {
        de_dphi = denergy_dphi_single(ph, eps, mat, spec);
      }
      const double dpsi = double_well(ph).derivative;
      for (std::size_t k = 0; k < 4; ++k) {
        const double wn = w * g.n[k];
        out.energy_phi[nodes[k]] += wn * de_dphi;
        out.well[nodes[k]] += wn * well_scale * dpsi;
        if (chi) out.energy_chi[nodes[k]] += wn * de_dchi;
      }
    }
  }
  return out;
}

Eigen::VectorXd assemble_phase_rhs(const PhaseMatrices& matrices, const NodalField& phi_n, const DesignForcing& forcing,
                                   double tau) {
  Eigen::VectorXd rhs = matrices.mass * phi_n;
  rhs += tau * (forcing.energy_phi + forcing.well);
  return rhs;
}

NodalField project_unit_interval(const NodalField& phi) { return phi.cwiseMax(0.0).cwiseMin(1.0); }

NodalField project_chi(const NodalField& chi, const NodalField& phi) {
  if (chi.size() != phi.size()) throw std::invalid_argument("project_chi: size mismatch");
  return chi.cwiseMin(phi).cwiseMax(0.0);
}

double relative_increment(const NodalField& updated, const NodalField& previous) {
  if (updated.size() != previous.size()) throw std::invalid_argument("relative_increment: size mismatch");
  const double denom = previous.norm();
  if (denom == 0.0) return std::numeric_limits<double>::infinity();
  return (updated - previous).norm() / denom;
}

double material_fraction(const NodalField& field, const StructuredQuadMesh& mesh) {
  if (field.size() != mesh.num_nodes()) throw std::invalid_argument("material_fraction: size mismatch");
  const ElementCache cache(mesh);
  return assemble_node_areas(mesh, cache).dot(field) / mesh.area();
}

DesignStepper::DesignStepper(const StructuredQuadMesh& mesh, const InterpolationSpec& spec, const OptConfig& cfg)
    : tau_(cfg.tau), target_volume_(cfg.volume_fraction * mesh.area()) {
  validate(cfg);
  phase_ = assemble_phase_matrices(mesh, spec, cfg);
  setup_density(mesh);
}

DesignStepper::DesignStepper(const StructuredQuadMesh& mesh, const InterpolationSpec& spec, const GradedConfig& cfg)
    : tau_(cfg.tau), target_volume_(cfg.volume_fraction * mesh.area()) {
  validate(cfg);
  phase_ = assemble_phase_matrices(mesh, spec, cfg);
  setup_density(mesh);
  graded_ = true;
  grading_ = assemble_chi_matrices(mesh, cfg);
  grading_factor_.factorize(SparseMatrix(grading_.mass + tau_ * grading_.diffusion));
}

void DesignStepper::setup_density(const StructuredQuadMesh& mesh) {
  const ElementCache cache(mesh);
  areas_ = assemble_node_areas(mesh, cache);
  phase_factor_.factorize(SparseMatrix(phase_.mass + tau_ * phase_.diffusion));
  phase_inv_column_ = phase_factor_.solve(phase_.multiplier_column);
}

DensityStep DesignStepper::step_density(const NodalField& phi_n, const DesignForcing& forcing) const {
  const Eigen::VectorXd rhs = assemble_phase_rhs(phase_, phi_n, forcing, tau_);
  const SpdSolve solve = [this](const Eigen::VectorXd& b) { return phase_factor_.solve(b); };
  // c^T phi = tau m |Omega| is the volume constraint scaled by tau.
  const SaddleSolution sol =
      solve_saddle_scalar(solve, phase_.multiplier_column, phase_inv_column_, rhs, tau_ * target_volume_);
  DensityStep out;
  out.phi = sol.x;
  out.lambda = sol.multiplier;
  out.volume_residual = std::abs(areas_.dot(out.phi) - target_volume_) / target_volume_;
  return out;
}

GradingStep DesignStepper::step_grading(const NodalField& chi_n, const DesignForcing& forcing) const {
  if (!graded_) throw std::logic_error("step_grading on a single-material stepper");
  Eigen::VectorXd rhs = grading_.mass * chi_n;
  rhs += tau_ * forcing.energy_chi;
  return {grading_factor_.solve(rhs)};
}

DensityStep step_single(const Problem& problem, const OptConfig& cfg, const NodalField& phi_n,
                        const Eigen::VectorXd& u_n) {
  const DesignStepper stepper(problem.mesh, problem.interpolation, cfg);
  const ElementCache cache(problem.mesh);
  const DesignForcing forcing = assemble_design_forcing(problem.mesh, cache, phi_n, std::nullopt, u_n,
                                                        problem.material, problem.interpolation, cfg.kappa_phi);
  return stepper.step_density(phi_n, forcing);
}

GradedStep step_graded(const Problem& problem, const GradedConfig& cfg, const NodalField& phi_n,
                       const NodalField& chi_n, const Eigen::VectorXd& u_n) {
  const DesignStepper stepper(problem.mesh, problem.interpolation, cfg);
  const ElementCache cache(problem.mesh);
  const DesignForcing forcing = assemble_design_forcing(problem.mesh, cache, phi_n, chi_n, u_n, problem.material,
                                                        problem.interpolation, cfg.kappa_phi);
  return {stepper.step_density(phi_n, forcing), stepper.step_grading(chi_n, forcing)};
}

const char* status_name(RunStatus status) {
  switch (status) {
    case RunStatus::converged:
      return "converged";
    case RunStatus::max_iterations:
      return "max_iterations";
    case RunStatus::solver_failure:
      return "solver_failure";
  }
  return "?";
}

namespace {

template <typename Config>
RunResult run_staggered(const Problem& problem, const Config& cfg, bool graded, const IterationObserver& observer) {
  ElasticitySolver state(problem.mesh, problem.material, problem.interpolation, problem.bc);
  const DesignStepper stepper(problem.mesh, problem.interpolation, cfg);
  const auto& areas = stepper.node_areas();
  const double area = problem.mesh.area();

  RunResult result;
  DesignState& s = result.state;
  s.phi = NodalField::Constant(problem.mesh.num_nodes(), cfg.phi0);
  if (graded) {
    if constexpr (std::is_same_v<Config, GradedConfig>) {
      s.chi = NodalField::Constant(problem.mesh.num_nodes(), cfg.initial_chi());
    }
  }
  auto chi_opt = [&]() -> std::optional<NodalField> {
    if (graded) return s.chi;
    return std::nullopt;
  };

  const double inf = std::numeric_limits<double>::infinity();
  double d_phi = inf;
  double d_chi = graded ? inf : 0.0;
  RunRecord& rec = result.record;

  try {
    while ((d_phi >= cfg.tol || d_chi >= cfg.tol) && s.iteration < cfg.max_iter) {
      const auto chi_now = chi_opt();
      const StateSolution sol = state.solve(s.phi, chi_now);
      const DesignForcing forcing =
          assemble_design_forcing(problem.mesh, state.cache(), s.phi, chi_now, sol.u, problem.material,
                                  problem.interpolation, cfg.kappa_phi);
      const DensityStep dstep = stepper.step_density(s.phi, forcing);
      NodalField phi_next = project_unit_interval(dstep.phi);
      d_phi = relative_increment(phi_next, s.phi);

      IterationRecord row;
      if (graded) {
        const GradingStep gstep = stepper.step_grading(s.chi, forcing);
        NodalField chi_next = project_chi(gstep.chi, phi_next);
        d_chi = relative_increment(chi_next, s.chi);
        s.chi = std::move(chi_next);
      }
      s.phi = std::move(phi_next);
      s.lambda = dstep.lambda;
      ++s.iteration;

      row.iter = s.iteration;
      row.compliance = sol.compliance;
      row.volume = areas.dot(s.phi) / area;
      row.m_chi = graded ? areas.dot(s.chi) / area : row.volume;
      row.delta_phi = d_phi;
      row.delta_chi = graded ? d_chi : 0.0;
      row.lambda = dstep.lambda;
      row.volume_residual = dstep.volume_residual;
      rec.iterations.push_back(row);
      if (observer) observer(row, s);
    }
    rec.status = (d_phi < cfg.tol && d_chi < cfg.tol) ? RunStatus::converged : RunStatus::max_iterations;
    rec.final_compliance = state.solve(s.phi, chi_opt()).compliance;
  } catch (const SolverFailure& err) {
    rec.status = RunStatus::solver_failure;
    rec.failure = err.what();
  } catch (const SingularConstraint& err) {
    rec.status = RunStatus::solver_failure;
    rec.failure = err.what();
  }
  rec.final_volume = areas.dot(s.phi) / area;
  rec.final_m_chi = graded ? areas.dot(s.chi) / area : rec.final_volume;
  return result;
}

}  // namespace

RunResult run_single(const Problem& problem, const OptConfig& cfg, const IterationObserver& observer) {
  validate(cfg);
  return run_staggered(problem, cfg, false, observer);
}

RunResult run_graded(const Problem& problem, const GradedConfig& cfg, const IterationObserver& observer) {
  validate(cfg);
  return run_staggered(problem, cfg, true, observer);
}

}  // namespace pftopo
