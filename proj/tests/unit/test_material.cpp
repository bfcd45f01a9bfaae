#include <doctest.h>

#include <random>

#include "oracles.hpp"
#include "pftopo/material.hpp"

using namespace pftopo;

namespace {

double energy_graded(double phi, double chi, const Strain2& eps, const IsotropicElasticity& mat,
                     const InterpolationSpec& spec) {
  return graded_scale(phi, chi, spec) * bulk_energy(mat, eps);
}

}  // namespace

TEST_SUITE("material") {
  TEST_CASE("Lame parameters") {
    auto l = lame_from_E_nu(12500.0, 0.25);
    CHECK(l.lambda == doctest::Approx(5000.0).epsilon(1e-14));
    CHECK(l.mu == doctest::Approx(5000.0).epsilon(1e-14));
    l = lame_from_E_nu(3.0, 0.0);
    CHECK(l.lambda == 0.0);
    CHECK(l.mu == 1.5);
    l = lame_from_E_nu(2300.0, 0.35);
    CHECK(l.lambda == doctest::Approx(2300.0 * 0.35 / (1.35 * 0.3)).epsilon(1e-14));
    CHECK(l.lambda == doctest::Approx(1987.654).epsilon(1e-6));
    CHECK(l.mu == doctest::Approx(851.852).epsilon(1e-6));
    CHECK_THROWS_AS(lame_from_E_nu(-1.0, 0.2), std::invalid_argument);
    CHECK_THROWS_AS(lame_from_E_nu(1.0, 0.5), std::invalid_argument);
  }

  TEST_CASE("bulk matrix and energy agree") {
    const auto mat = IsotropicElasticity::from_E_nu(12500.0, 0.25);
    const Strain2 eps{1e-3, -4e-4, 2.5e-4};
    const Eigen::Vector3d v(eps.xx, eps.yy, 2 * eps.xy);
    const double e1 = v.dot(bulk_matrix(mat) * v);
    const double e2 = oracle::bulk_energy(oracle::lame(12500.0, 0.25), eps.xx, eps.yy, eps.xy);
    CHECK(bulk_energy(mat, eps) == doctest::Approx(e2).epsilon(1e-14));
    CHECK(e1 == doctest::Approx(e2).epsilon(1e-14));
  }

  TEST_CASE("single-material interpolation") {
    const auto mat = IsotropicElasticity::from_E_nu(12500.0, 0.25);
    const InterpolationSpec spec{3.0, 0.02, 4.0};
    CHECK((c_single(1.0, mat, spec) - bulk_matrix(mat)).norm() == 0.0);
    CHECK((c_single(0.0, mat, spec) - 0.0004 * bulk_matrix(mat)).norm() <= 1e-12);
    CHECK(single_scale(0.5, spec) == doctest::Approx(0.12505).epsilon(1e-14));
  }

  TEST_CASE("graded interpolation") {
    const auto mat = IsotropicElasticity::from_E_nu(12500.0, 0.25);
    InterpolationSpec spec{3.0, 0.02, 4.0};
    CHECK((c_graded(1.0, 1.0, mat, spec) - bulk_matrix(mat)).norm() <= 1e-12);
    CHECK(graded_scale(1.0, 0.0, spec) == doctest::Approx(0.25).epsilon(1e-14));
    CHECK((c_graded(1.0, 0.0, mat, spec) - 0.25 * bulk_matrix(mat)).norm() <= 1e-9);
    CHECK_THROWS_AS(c_graded(0.4, 0.5, mat, spec), std::invalid_argument);
    for (double phi : {0.1, 0.5, 0.93}) CHECK(graded_scale(phi, phi, spec) == doctest::Approx(single_scale(phi, spec)));
    spec.beta = 1.0;
    for (double phi : {0.0, 0.3, 0.7, 1.0}) {
      for (double chi : {0.0, 0.5 * phi, phi}) {
        CHECK(graded_scale(phi, chi, spec) == single_scale(phi, spec));
      }
    }
  }

  TEST_CASE("energy derivatives vanish at zero strain and for beta = 1") {
    const auto mat = IsotropicElasticity::from_E_nu(12500.0, 0.25);
    InterpolationSpec spec{3.0, 0.02, 4.0};
    const Strain2 zero{};
    CHECK(denergy_dphi_graded(0.5, 0.3, zero, mat, spec) == 0.0);
    CHECK(denergy_dchi_graded(0.5, 0.3, zero, mat, spec) == 0.0);
    spec.beta = 1.0;
    const Strain2 eps{1e-3, 2e-3, -5e-4};
    CHECK(denergy_dchi_graded(0.5, 0.3, eps, mat, spec) == 0.0);
    CHECK(denergy_dphi_graded(0.5, 0.3, eps, mat, spec) ==
          doctest::Approx(denergy_dphi_single(0.5, eps, mat, spec)).epsilon(1e-15));
  }

  TEST_CASE("dense limit of the phi derivative") {
    const auto mat = IsotropicElasticity::from_E_nu(1.0, 0.3);
    const InterpolationSpec spec{3.0, 0.0, 4.0};
    const Strain2 eps{0.2, -0.1, 0.05};
    const double chi = 0.6;
    // phi = 1, gamma_phi = 0: only the phi^p term of the stiff part survives.
    const double blend = 1.0 - (1.0 - 1.0 / spec.beta) * (1.0 - chi);
    const double expected = 3.0 * blend * bulk_energy(mat, eps) - (1.0 - 1.0 / spec.beta) * bulk_energy(mat, eps);
    CHECK(denergy_dphi_graded(1.0, chi, eps, mat, spec) == doctest::Approx(expected).epsilon(1e-14));
  }

  TEST_CASE("derivatives match central finite differences") {
    const auto mat = IsotropicElasticity::from_E_nu(12500.0, 0.25);
    const InterpolationSpec spec{3.0, 0.02, 4.0};
    std::mt19937 rng(42);
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    std::normal_distribution<double> nd(0.0, 1e-3);
    const double h = 1e-5;
    for (int k = 0; k < 20; ++k) {
      const double phi = 0.05 + 0.9 * u01(rng);
      const double chi = (0.02 + 0.96 * u01(rng)) * phi;
      const Strain2 eps{nd(rng), nd(rng), nd(rng)};
      const double e0 = energy_graded(phi, chi, eps, mat, spec);
      const double fd_phi =
          (energy_graded(phi + h, chi, eps, mat, spec) - energy_graded(phi - h, chi, eps, mat, spec)) / (2 * h);
      const double fd_chi =
          (energy_graded(phi, chi + h, eps, mat, spec) - energy_graded(phi, chi - h, eps, mat, spec)) / (2 * h);
      CHECK(std::abs(denergy_dphi_graded(phi, chi, eps, mat, spec) - fd_phi) <= 1e-6 * std::abs(e0));
      CHECK(std::abs(denergy_dchi_graded(phi, chi, eps, mat, spec) - fd_chi) <= 1e-6 * std::abs(e0));
      const double es = single_scale(phi, spec) * bulk_energy(mat, eps);
      const double fd_single = (single_scale(phi + h, spec) - single_scale(phi - h, spec)) / (2 * h) *
                               bulk_energy(mat, eps);
      CHECK(std::abs(denergy_dphi_single(phi, eps, mat, spec) - fd_single) <= 1e-6 * std::abs(es));
    }
  }

  TEST_CASE("double well") {
    CHECK(double_well(0.0).value == 0.0);
    CHECK(double_well(0.0).derivative == 0.0);
    CHECK(double_well(1.0).value == 0.0);
    CHECK(double_well(1.0).derivative == 0.0);
    CHECK(double_well(0.5).value == 0.0625);
    CHECK(double_well(0.5).derivative == 0.0);
    const double h = 1e-5;
    const double fd = (double_well(0.3 + h).value - double_well(0.3 - h).value) / (2 * h);
    CHECK(std::abs(double_well(0.3).derivative - fd) <= 1e-8);
  }
}
