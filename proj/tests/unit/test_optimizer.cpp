#include <doctest.h>

#include <random>

#include "oracles.hpp"
#include "pftopo/optimizer.hpp"

using namespace pftopo;

namespace {

struct OneElement {
  StructuredQuadMesh mesh{1, 1, 1.0, 1.0};
  // Mesh node id of each local element node.
  int local_to_mesh[4] = {0, 1, 3, 2};
};

Problem one_element_problem(double beta) {
  OneElement one;
  Problem p{one.mesh, IsotropicElasticity::from_E_nu(12500.0, 0.25), InterpolationSpec{3.0, 0.02, beta}, {}};
  p.bc.fix_side(p.mesh, Side::left, true, true);
  return p;
}

struct DenseForcing {
  Eigen::Vector4d energy_phi = Eigen::Vector4d::Zero();
  Eigen::Vector4d well = Eigen::Vector4d::Zero();
  Eigen::Vector4d energy_chi = Eigen::Vector4d::Zero();
};

// Local-node forcing of a unit-square element, written from the weak form.
DenseForcing dense_forcing(const Eigen::Vector4d& phi, const Eigen::Vector4d& chi, const Eigen::Matrix<double, 8, 1>& u,
                           double beta, double kappa, bool graded) {
  const double p = 3.0, g = 0.02;
  const auto lame = oracle::lame(12500.0, 0.25);
  const double s = 1.0 - 1.0 / beta;
  DenseForcing out;
  for (const auto& gp : oracle::gauss2x2()) {
    const auto n = oracle::bilinear(gp.xi, gp.eta);
    std::array<double, 4> dx, dy;
    oracle::bilinear_grad(gp.xi, gp.eta, 1.0, 1.0, dx, dy);
    double ph = 0, ch = 0, exx = 0, eyy = 0, exy = 0;
    for (int a = 0; a < 4; ++a) {
      ph += n[a] * phi[a];
      ch += n[a] * chi[a];
      exx += dx[a] * u[2 * a];
      eyy += dy[a] * u[2 * a + 1];
      exy += 0.5 * (dy[a] * u[2 * a] + dx[a] * u[2 * a + 1]);
    }
    const double q = oracle::bulk_energy(lame, exx, eyy, exy);
    const double ps = oracle::phase_scale(ph, p, g);
    const double dps = oracle::phase_scale_d(ph, p, g);
    double de_dphi = dps * q;
    if (graded) de_dphi = ((1.0 - s * (ph - ch)) * dps - s * ps) * q;
    const double de_dchi = s * ps * q;
    const double dpsi = 2 * (ph - ph * ph) * (1 - 2 * ph);
    const double w = 0.25;  // unit weight times det J = 1/4
    for (int a = 0; a < 4; ++a) {
      out.energy_phi[a] += w * n[a] * de_dphi;
      out.well[a] += -w * n[a] * (kappa / g) * dpsi;
      out.energy_chi[a] += w * n[a] * de_dchi;
    }
  }
  return out;
}

// Dense solve of the density saddle system on the unit-square element.
std::pair<Eigen::Vector4d, double> dense_density_step(const Eigen::Vector4d& phi, const DenseForcing& f,
                                                      double gamma, double kappa, double tau, double m) {
  const Eigen::Matrix4d mass = gamma * oracle::rect_mass(1, 1);
  const Eigen::Matrix4d diff = kappa * gamma * oracle::rect_laplacian(1, 1);
  const Eigen::Vector4d a = oracle::rect_mass(1, 1) * Eigen::Vector4d::Ones();
  Eigen::Matrix<double, 5, 5> kkt = Eigen::Matrix<double, 5, 5>::Zero();
  kkt.topLeftCorner<4, 4>() = mass + tau * diff;
  kkt.block<4, 1>(0, 4) = tau * a;
  kkt.block<1, 4>(4, 0) = tau * a.transpose();
  Eigen::Matrix<double, 5, 1> rhs;
  rhs.head<4>() = mass * phi + tau * (f.energy_phi + f.well);
  rhs[4] = tau * m;
  const Eigen::Matrix<double, 5, 1> x = kkt.fullPivLu().solve(rhs);
  return {x.head<4>(), x[4]};
}

double discrete_objective(const StructuredQuadMesh& mesh, const NodalField& phi, double compliance, double kappa,
                          double gamma) {
  const auto lap = oracle::rect_laplacian(mesh.hx(), mesh.hy());
  std::vector<double> x, w;
  oracle::gauss_legendre(3, x, w);
  double grad = 0.0, well = 0.0;
  for (int e = 0; e < mesh.num_elements(); ++e) {
    const auto& nodes = mesh.element(e);
    Eigen::Vector4d pe;
    for (int a = 0; a < 4; ++a) pe[a] = phi[nodes[a]];
    grad += pe.dot(lap * pe);
    for (std::size_t i = 0; i < 3; ++i)
      for (std::size_t j = 0; j < 3; ++j) {
        const auto n = oracle::bilinear(x[i], x[j]);
        double ph = 0;
        for (int a = 0; a < 4; ++a) ph += n[a] * pe[a];
        const double psi = (ph - ph * ph) * (ph - ph * ph);
        well += w[i] * w[j] * 0.25 * mesh.hx() * mesh.hy() * psi;
      }
  }
  return compliance + kappa * (0.5 * gamma * grad + well / gamma);
}

}  // namespace

TEST_SUITE("opt_single") {
  TEST_CASE("phase matrices") {
    const auto mesh = build_mesh(6, 3, 2.0, 1.0);
    const auto pm = assemble_phase_matrices(mesh, 0.02, 4.0, 1e-3);
    CHECK(Eigen::VectorXd(pm.mass * Eigen::VectorXd::Ones(mesh.num_nodes())).sum() ==
          doctest::Approx(0.02 * mesh.area()).epsilon(1e-13));
    CHECK((pm.diffusion * Eigen::VectorXd::Ones(mesh.num_nodes())).norm() <= 1e-12);
    CHECK(pm.multiplier_column.sum() == doctest::Approx(1e-3 * mesh.area()).epsilon(1e-13));

    const auto unit = assemble_phase_matrices(build_mesh(1, 1, 1.0, 1.0), 1.0, 1.0, 1.0);
    const Eigen::MatrixXd m = unit.mass;
    const int perm[4] = {0, 1, 3, 2};
    const auto ref = oracle::rect_mass(1, 1);
    for (int a = 0; a < 4; ++a)
      for (int b = 0; b < 4; ++b) CHECK(m(perm[a], perm[b]) == doctest::Approx(ref(a, b)).epsilon(1e-14));
    CHECK(m.sum() == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(m(0, 0) == doctest::Approx(1.0 / 9.0).epsilon(1e-14));
  }

  TEST_CASE("forcing vanishes at the symmetric and dense states") {
    const auto mesh = build_mesh(4, 2, 2.0, 1.0);
    const ElementCache cache(mesh);
    const auto mat = IsotropicElasticity::from_E_nu(12500.0, 0.25);
    const Eigen::VectorXd u0 = Eigen::VectorXd::Zero(2 * mesh.num_nodes());
    const NodalField half = NodalField::Constant(mesh.num_nodes(), 0.5);
    auto f = assemble_design_forcing(mesh, cache, half, std::nullopt, u0, mat, {}, 4.0);
    CHECK(f.energy_phi.norm() == 0.0);
    CHECK(f.well.norm() <= 1e-12);
    const auto pm = assemble_phase_matrices(mesh, 0.02, 4.0, 1e-6);
    CHECK((assemble_phase_rhs(pm, half, f, 1e-6) - pm.mass * half).norm() <= 1e-16);
    Eigen::VectorXd u = Eigen::VectorXd::Random(2 * mesh.num_nodes());
    f = assemble_design_forcing(mesh, cache, NodalField::Ones(mesh.num_nodes()), std::nullopt, u, mat, {}, 4.0);
    CHECK(f.well.norm() <= 1e-12);
    CHECK(f.energy_phi.minCoeff() >= 0.0);
  }

  TEST_CASE("symmetric stationary point") {
    auto p = one_element_problem(4.0);
    OptConfig cfg;
    cfg.volume_fraction = 0.5;
    const auto s = step_single(p, cfg, NodalField::Constant(4, 0.5), Eigen::VectorXd::Zero(8));
    CHECK((s.phi - NodalField::Constant(4, 0.5)).norm() <= 1e-14);
    CHECK(std::abs(s.lambda) <= 1e-10);
  }

  TEST_CASE("pure multiplier step shifts a constant field to the target") {
    const auto mesh = build_mesh(8, 4, 2.0, 1.0);
    Problem p{mesh, IsotropicElasticity::from_E_nu(1.0, 0.3), {}, {}};
    OptConfig cfg;
    cfg.kappa_phi = 0.0;
    cfg.volume_fraction = 0.45;
    const auto s = step_single(p, cfg, NodalField::Constant(mesh.num_nodes(), 0.3),
                               Eigen::VectorXd::Zero(2 * mesh.num_nodes()));
    CHECK((s.phi - NodalField::Constant(mesh.num_nodes(), 0.45)).cwiseAbs().maxCoeff() <= 1e-12);
  }

  TEST_CASE("density step matches a dense KKT solve") {
    std::mt19937 rng(5);
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    std::normal_distribution<double> nd(0.0, 1e-3);
    const OneElement one;
    auto p = one_element_problem(4.0);
    OptConfig cfg;
    cfg.tau = 1e-3;
    cfg.kappa_phi = 4.0;
    cfg.volume_fraction = 0.45;
    for (int trial = 0; trial < 5; ++trial) {
      Eigen::Vector4d phi_local;
      Eigen::Matrix<double, 8, 1> u_local;
      NodalField phi(4);
      Eigen::VectorXd u(8);
      for (int a = 0; a < 4; ++a) {
        phi_local[a] = u01(rng);
        u_local[2 * a] = nd(rng);
        u_local[2 * a + 1] = nd(rng);
        phi[one.local_to_mesh[a]] = phi_local[a];
        u[2 * one.local_to_mesh[a]] = u_local[2 * a];
        u[2 * one.local_to_mesh[a] + 1] = u_local[2 * a + 1];
      }
      const auto f = dense_forcing(phi_local, Eigen::Vector4d::Zero(), u_local, 4.0, 4.0, false);
      const auto [ref_phi, ref_lambda] = dense_density_step(phi_local, f, 0.02, 4.0, 1e-3, 0.45);
      const auto s = step_single(p, cfg, phi, u);
      for (int a = 0; a < 4; ++a) {
        CHECK(s.phi[one.local_to_mesh[a]] == doctest::Approx(ref_phi[a]).epsilon(1e-10));
      }
      CHECK(s.lambda == doctest::Approx(ref_lambda).epsilon(1e-10));
      CHECK(s.volume_residual <= 1e-12);
    }
  }

  TEST_CASE("volume constraint holds before projection") {
    const auto mesh = build_mesh(16, 8, 2.0, 1.0);
    Problem p{mesh, IsotropicElasticity::from_E_nu(12500.0, 0.25), {}, {}};
    std::mt19937 rng(9);
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    NodalField phi(mesh.num_nodes());
    for (auto& v : phi) v = u01(rng);
    Eigen::VectorXd u = 1e-3 * Eigen::VectorXd::Random(2 * mesh.num_nodes());
    OptConfig cfg;
    cfg.tau = 1e-4;
    const auto s = step_single(p, cfg, phi, u);
    CHECK(material_fraction(s.phi, mesh) == doctest::Approx(cfg.volume_fraction).epsilon(1e-10));
    CHECK(s.volume_residual <= 1e-8);
  }

  TEST_CASE("projection") {
    NodalField v(3);
    v << 1.2, -0.1, 0.4;
    const NodalField c = project_unit_interval(v);
    CHECK(c[0] == 1.0);
    CHECK(c[1] == 0.0);
    CHECK(c[2] == 0.4);
    CHECK((project_unit_interval(c) - c).norm() == 0.0);
    std::mt19937 rng(1);
    std::uniform_real_distribution<double> ud(-0.5, 1.5);
    for (int k = 0; k < 100; ++k) {
      NodalField a(20), b(20);
      for (int i = 0; i < 20; ++i) a[i] = ud(rng), b[i] = ud(rng);
      const double before = (a - b).cwiseAbs().maxCoeff();
      const double after = (project_unit_interval(a) - project_unit_interval(b)).cwiseAbs().maxCoeff();
      CHECK(after <= before);
    }
  }

  TEST_CASE("relative increment") {
    NodalField a = NodalField::Constant(50, 0.7);
    CHECK(delta_phi(a, a) == 0.0);
    CHECK(delta_phi(NodalField::Constant(40, 1.1), NodalField::Ones(40)) == doctest::Approx(0.1).epsilon(1e-14));
    CHECK(std::isinf(delta_phi(a, NodalField::Zero(50))));
    std::mt19937 rng(17);
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    NodalField x(5000), y(5000);
    std::vector<long double> diff(5000), base(5000);
    for (int i = 0; i < 5000; ++i) {
      x[i] = u01(rng);
      y[i] = u01(rng);
      diff[static_cast<std::size_t>(i)] = static_cast<long double>(x[i]) - y[i];
      base[static_cast<std::size_t>(i)] = y[i];
    }
    const long double ref = std::sqrt(oracle::compensated_sum_sq(diff) / oracle::compensated_sum_sq(base));
    CHECK(delta_phi(x, y) == doctest::Approx(static_cast<double>(ref)).epsilon(1e-13));
  }

  TEST_CASE("immediate termination at the dense state") {
    const auto mesh = build_mesh(8, 4, 2.0, 1.0);
    Problem p{mesh, IsotropicElasticity::from_E_nu(12500.0, 0.25), {}, {}};
    p.bc.fix_side(mesh, Side::left, true, true);
    OptConfig cfg;
    cfg.volume_fraction = 1.0;
    cfg.phi0 = 1.0;
    const auto r = run_single(p, cfg);
    CHECK(r.record.converged());
    CHECK(r.record.iterations.size() == 1);
    CHECK((r.state.phi - NodalField::Ones(mesh.num_nodes())).cwiseAbs().maxCoeff() <= 1e-12);
  }

  TEST_CASE("objective decreases along the flow") {
    const auto mesh = build_mesh(8, 4, 2.0, 1.0);
    Problem p{mesh, IsotropicElasticity::from_E_nu(12500.0, 0.25), {3.0, 0.02, 4.0}, {}};
    p.bc.fix_side(mesh, Side::left, true, true);
    p.bc.add_traction(mesh, Side::right, 0.0, -600.0, 0.0, 0.25);
    OptConfig cfg;
    cfg.tol = 1e-14;
    cfg.max_iter = 30;
    std::vector<NodalField> fields;
    const auto r = run_single(p, cfg, [&](const IterationRecord&, const DesignState& s) { fields.push_back(s.phi); });
    REQUIRE(r.record.iterations.size() == 30);
    std::vector<double> j;
    for (std::size_t n = 0; n + 1 < fields.size(); ++n) {
      j.push_back(discrete_objective(mesh, fields[n], r.record.iterations[n + 1].compliance, cfg.kappa_phi, 0.02));
    }
    for (std::size_t n = 3; n + 1 < j.size(); ++n) CHECK(j[n + 1] <= j[n] * (1 + 1e-12));
    for (const auto& row : r.record.iterations) {
      CHECK(row.volume_residual <= 1e-8);
      CHECK(std::abs(row.volume - cfg.volume_fraction) <= 0.02);
    }
  }
}

TEST_SUITE("opt_graded") {
  TEST_CASE("grading matrices") {
    const auto mesh = build_mesh(6, 3, 2.0, 1.0);
    GradedConfig cfg;
    cfg.gamma_chi = 0.03;
    cfg.kappa_chi = 2.0;
    const auto gm = assemble_chi_matrices(mesh, cfg);
    CHECK((gm.diffusion * Eigen::VectorXd::Ones(mesh.num_nodes())).norm() <= 1e-12);
    CHECK(Eigen::VectorXd(gm.mass * Eigen::VectorXd::Ones(mesh.num_nodes())).sum() ==
          doctest::Approx(0.03 * mesh.area()).epsilon(1e-13));
    InterpolationSpec spec;
    spec.gamma_phi = 0.03;
    cfg.kappa_phi = 2.0;
    const auto pm = assemble_phase_matrices(mesh, spec, cfg);
    CHECK((Eigen::MatrixXd(pm.mass) - Eigen::MatrixXd(gm.mass)).norm() == 0.0);
    CHECK((Eigen::MatrixXd(pm.diffusion) - Eigen::MatrixXd(gm.diffusion)).norm() == 0.0);
  }

  TEST_CASE("beta = 1 leaves a constant grading field unchanged") {
    auto p = one_element_problem(1.0);
    GradedConfig cfg;
    const Eigen::VectorXd u = 1e-3 * Eigen::VectorXd::Random(8);
    NodalField phi(4);
    phi << 0.9, 0.4, 0.6, 0.7;
    const auto s = step_graded(p, cfg, phi, NodalField::Constant(4, 0.35), u);
    CHECK((s.grading.chi - NodalField::Constant(4, 0.35)).cwiseAbs().maxCoeff() <= 1e-14);
    const auto single = step_single(p, cfg, phi, u);
    CHECK((s.density.phi - single.phi).norm() <= 1e-14);
  }

  TEST_CASE("zero displacement keeps a constant grading field") {
    auto p = one_element_problem(4.0);
    GradedConfig cfg;
    NodalField phi(4);
    phi << 0.9, 0.4, 0.6, 0.7;
    const auto s = step_graded(p, cfg, phi, NodalField::Constant(4, 0.2), Eigen::VectorXd::Zero(8));
    CHECK((s.grading.chi - NodalField::Constant(4, 0.2)).cwiseAbs().maxCoeff() <= 1e-14);
  }

  TEST_CASE("graded step matches a dense block solve") {
    std::mt19937 rng(23);
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    std::normal_distribution<double> nd(0.0, 1e-3);
    const OneElement one;
    auto p = one_element_problem(4.0);
    GradedConfig cfg;
    cfg.tau = 1e-3;
    cfg.gamma_chi = 0.05;
    cfg.kappa_chi = 3.0;
    for (int trial = 0; trial < 5; ++trial) {
      Eigen::Vector4d phi_l, chi_l;
      Eigen::Matrix<double, 8, 1> u_l;
      NodalField phi(4), chi(4);
      Eigen::VectorXd u(8);
      for (int a = 0; a < 4; ++a) {
        phi_l[a] = u01(rng);
        chi_l[a] = u01(rng) * phi_l[a];
        u_l[2 * a] = nd(rng);
        u_l[2 * a + 1] = nd(rng);
        const int n = one.local_to_mesh[a];
        phi[n] = phi_l[a];
        chi[n] = chi_l[a];
        u[2 * n] = u_l[2 * a];
        u[2 * n + 1] = u_l[2 * a + 1];
      }
      const auto f = dense_forcing(phi_l, chi_l, u_l, 4.0, cfg.kappa_phi, true);
      const auto [ref_phi, ref_lambda] = dense_density_step(phi_l, f, 0.02, cfg.kappa_phi, cfg.tau, 0.45);
      const Eigen::Matrix4d mchi = cfg.gamma_chi * oracle::rect_mass(1, 1);
      const Eigen::Matrix4d kchi = cfg.kappa_chi * cfg.gamma_chi * oracle::rect_laplacian(1, 1);
      const Eigen::Vector4d ref_chi = (mchi + cfg.tau * kchi).lu().solve(mchi * chi_l + cfg.tau * f.energy_chi);
      const auto s = step_graded(p, cfg, phi, chi, u);
      for (int a = 0; a < 4; ++a) {
        const int n = one.local_to_mesh[a];
        CHECK(s.density.phi[n] == doctest::Approx(ref_phi[a]).epsilon(1e-10));
        CHECK(s.grading.chi[n] == doctest::Approx(ref_chi[a]).epsilon(1e-10));
      }
      CHECK(s.density.lambda == doctest::Approx(ref_lambda).epsilon(1e-10));
    }
  }

  TEST_CASE("chi projection") {
    NodalField chi(4), phi(4);
    chi << 0.8, 0.2, -0.1, 0.5;
    phi << 0.5, 0.6, 0.3, 0.5;
    const NodalField c = project_chi(chi, phi);
    CHECK(c[0] == 0.5);
    CHECK(c[1] == 0.2);
    CHECK(c[2] == 0.0);
    CHECK(c[3] == 0.5);
    CHECK(project_chi(chi, NodalField::Zero(4)).norm() == 0.0);
  }

  TEST_CASE("material fraction") {
    const auto mesh = build_mesh(10, 6, 2.5, 1.5);
    CHECK(material_fraction(NodalField::Constant(mesh.num_nodes(), 0.37), mesh) ==
          doctest::Approx(0.37).epsilon(1e-14));
    std::mt19937 rng(31);
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    NodalField chi(mesh.num_nodes());
    for (auto& v : chi) v = u01(rng);
    std::vector<double> x, w;
    oracle::gauss_legendre(8, x, w);
    long double total = 0;
    for (int e = 0; e < mesh.num_elements(); ++e) {
      const auto& nodes = mesh.element(e);
      for (std::size_t i = 0; i < x.size(); ++i)
        for (std::size_t j = 0; j < x.size(); ++j) {
          const auto n = oracle::bilinear(x[i], x[j]);
          double v = 0;
          for (int a = 0; a < 4; ++a) v += n[a] * chi[nodes[a]];
          total += w[i] * w[j] * 0.25 * mesh.hx() * mesh.hy() * v;
        }
    }
    CHECK(material_fraction(chi, mesh) == doctest::Approx(static_cast<double>(total / mesh.area())).epsilon(1e-10));
  }
}
