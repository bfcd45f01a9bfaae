#include "pftopo/material.hpp"

#include <cmath>
#include <stdexcept>

namespace pftopo {

LamePair lame_from_E_nu(double youngs_modulus, double poisson_ratio) {
  if (!(youngs_modulus > 0.0)) throw std::invalid_argument("Young modulus must be positive");
  if (!(poisson_ratio > -1.0 && poisson_ratio < 0.5)) {
    throw std::invalid_argument("Poisson ratio must lie in (-1, 0.5)");
  }
  const double e = youngs_modulus;
  const double nu = poisson_ratio;
  return {e * nu / ((1.0 + nu) * (1.0 - 2.0 * nu)), e / (2.0 * (1.0 + nu))};
}

IsotropicElasticity IsotropicElasticity::from_E_nu(double youngs_modulus, double poisson_ratio) {
  const LamePair lame = lame_from_E_nu(youngs_modulus, poisson_ratio);
  return {youngs_modulus, poisson_ratio, lame.lambda, lame.mu};
}

ElasticMatrix bulk_matrix(const IsotropicElasticity& mat) {
  const double l = mat.lambda;
  const double m = mat.mu;
  ElasticMatrix d;
  d << l + 2.0 * m, l, 0.0,
       l, l + 2.0 * m, 0.0,
       0.0, 0.0, m;
  return d;
}

double bulk_energy(const IsotropicElasticity& mat, const Strain2& eps) {
  const double tr = eps.xx + eps.yy;
  return mat.lambda * tr * tr + 2.0 * mat.mu * (eps.xx * eps.xx + eps.yy * eps.yy + 2.0 * eps.xy * eps.xy);
}

double phase_scale(double phi, const InterpolationSpec& spec) {
  const double g2 = spec.gamma_phi * spec.gamma_phi;
  return std::pow(phi, spec.penalty) + g2 * std::pow(1.0 - phi, spec.penalty);
}

double phase_scale_derivative(double phi, const InterpolationSpec& spec) {
  const double p = spec.penalty;
  const double g2 = spec.gamma_phi * spec.gamma_phi;
  return p * std::pow(phi, p - 1.0) - p * g2 * std::pow(1.0 - phi, p - 1.0);
}

double grading_blend(double phi, double chi, const InterpolationSpec& spec) {
  return 1.0 - (1.0 - 1.0 / spec.beta) * (phi - chi);
}

double single_scale(double phi, const InterpolationSpec& spec) { return phase_scale(phi, spec); }

double graded_scale(double phi, double chi, const InterpolationSpec& spec) {
  return grading_blend(phi, chi, spec) * phase_scale(phi, spec);
}

ElasticMatrix c_single(double phi, const IsotropicElasticity& mat, const InterpolationSpec& spec) {
  return single_scale(phi, spec) * bulk_matrix(mat);
}

ElasticMatrix c_graded(double phi, double chi, const IsotropicElasticity& mat, const InterpolationSpec& spec) {
  if (chi > phi) throw std::invalid_argument("grading value exceeds density (chi > phi)");
  return graded_scale(phi, chi, spec) * bulk_matrix(mat);
}

double denergy_dphi_single(double phi, const Strain2& eps, const IsotropicElasticity& mat,
                           const InterpolationSpec& spec) {
  return phase_scale_derivative(phi, spec) * bulk_energy(mat, eps);
}

double denergy_dphi_graded(double phi, double chi, const Strain2& eps, const IsotropicElasticity& mat,
                           const InterpolationSpec& spec) {
  const double soft = 1.0 - 1.0 / spec.beta;
  const double dscale =
      grading_blend(phi, chi, spec) * phase_scale_derivative(phi, spec) - soft * phase_scale(phi, spec);
  return dscale * bulk_energy(mat, eps);
}

double denergy_dchi_graded(double phi, double /*chi*/, const Strain2& eps, const IsotropicElasticity& mat,
                           const InterpolationSpec& spec) {
  return (1.0 - 1.0 / spec.beta) * phase_scale(phi, spec) * bulk_energy(mat, eps);
}

DoubleWell double_well(double phi) {
  const double s = phi - phi * phi;
  return {s * s, 2.0 * s * (1.0 - 2.0 * phi)};
}

}  // namespace pftopo
