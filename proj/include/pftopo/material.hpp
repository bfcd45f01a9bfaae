#pragma once

#include <Eigen/Core>

namespace pftopo {

struct LamePair {
  double lambda = 0.0;
  double mu = 0.0;
};

/// lambda = E nu / ((1+nu)(1-2nu)),  mu = E / (2(1+nu)).
LamePair lame_from_E_nu(double youngs_modulus, double poisson_ratio);

/// Isotropic bulk material. Stresses follow lambda tr(eps) I + 2 mu eps,
/// applied directly in 2D.
struct IsotropicElasticity {
  double youngs_modulus = 1.0;  // N/mm^2
  double poisson_ratio = 0.0;
  double lambda = 0.0;          // N/mm^2
  double mu = 0.5;              // N/mm^2

  static IsotropicElasticity from_E_nu(double youngs_modulus, double poisson_ratio);
};

/// Material interpolation parameters shared by the single and graded laws.
struct InterpolationSpec {
  double penalty = 3.0;      // p
  double gamma_phi = 0.02;   // interface thickness; void stiffness is gamma_phi^2 C_bulk
  double beta = 4.0;         // softening divisor: soft stiffness is C_bulk / beta
};

/// Symmetric in-plane strain, tensor (not engineering) shear component.
struct Strain2 {
  double xx = 0.0;
  double yy = 0.0;
  double xy = 0.0;
};

/// 3x3 Voigt matrix acting on (eps_xx, eps_yy, 2 eps_xy).
using ElasticMatrix = Eigen::Matrix3d;

ElasticMatrix bulk_matrix(const IsotropicElasticity& mat);

/// (C_bulk eps) : eps.
double bulk_energy(const IsotropicElasticity& mat, const Strain2& eps);

/// phi^p + gamma_phi^2 (1-phi)^p.
double phase_scale(double phi, const InterpolationSpec& spec);
/// d/dphi of phase_scale.
double phase_scale_derivative(double phi, const InterpolationSpec& spec);

/// Stiff/soft blend factor of the graded law, 1 - (1 - 1/beta)(phi - chi).
/// Equals 1 when chi = phi or beta = 1 and 1/beta when phi = 1, chi = 0.
double grading_blend(double phi, double chi, const InterpolationSpec& spec);

/// Total multiplier of C_bulk in C(phi).
double single_scale(double phi, const InterpolationSpec& spec);
/// Total multiplier of C_bulk in C(phi, chi); no admissibility check.
double graded_scale(double phi, double chi, const InterpolationSpec& spec);

/// C(phi) = C_bulk (phi^p + gamma_phi^2 (1-phi)^p).
ElasticMatrix c_single(double phi, const IsotropicElasticity& mat, const InterpolationSpec& spec);
/// C(phi, chi) = grading_blend(phi, chi) (phi^p + gamma_phi^2 (1-phi)^p) C_bulk.
/// Throws std::invalid_argument when chi > phi.
ElasticMatrix c_graded(double phi, double chi, const IsotropicElasticity& mat, const InterpolationSpec& spec);

/// d/dphi of (C(phi) eps):eps.
double denergy_dphi_single(double phi, const Strain2& eps, const IsotropicElasticity& mat,
                           const InterpolationSpec& spec);
/// d/dphi of (C(phi,chi) eps):eps, including the blend's phi dependence.
double denergy_dphi_graded(double phi, double chi, const Strain2& eps, const IsotropicElasticity& mat,
                           const InterpolationSpec& spec);
/// d/dchi of (C(phi,chi) eps):eps = (1 - 1/beta)(phi^p + gamma_phi^2 (1-phi)^p) (C_bulk eps):eps.
double denergy_dchi_graded(double phi, double chi, const Strain2& eps, const IsotropicElasticity& mat,
                           const InterpolationSpec& spec);

struct DoubleWell {
  double value = 0.0;
  double derivative = 0.0;
};

/// psi0(phi) = (phi - phi^2)^2 and its derivative.
DoubleWell double_well(double phi);

}  // namespace pftopo
