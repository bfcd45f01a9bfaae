#include "pftopo/benchmarks.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace pftopo {

namespace {

int nearest_node(const StructuredQuadMesh& mesh, double x, double y) {
  const int i = std::clamp(static_cast<int>(std::lround(x / mesh.hx())), 0, mesh.nx());
  const int j = std::clamp(static_cast<int>(std::lround(y / mesh.hy())), 0, mesh.ny());
  return mesh.node_id(i, j);
}

constexpr int kCantileverElementsPerMm = 64;

}  // namespace

BoundaryConditions BcSpec::build(const StructuredQuadMesh& mesh, double load_scale) const {
  BoundaryConditions bc;
  for (const auto& c : clamps) bc.fix_side(mesh, c.side, c.fix_x, c.fix_y);
  for (const auto& s : supports) bc.fix_node(nearest_node(mesh, s.x, s.y), s.fix_x, s.fix_y);
  for (const auto& t : tractions) {
    bc.add_traction(mesh, t.side, load_scale * t.gx, load_scale * t.gy, t.from, t.to);
  }
  return bc;
}

Problem BenchmarkCase::problem() const {
  StructuredQuadMesh m(mesh.nx, mesh.ny, mesh.lx, mesh.ly);
  BoundaryConditions conditions = bc.build(m, load_factor);
  if (conditions.neumann.empty() && !bc.tractions.empty()) {
    throw std::invalid_argument("case " + name + ": traction window contains no element edge");
  }
  return {m, IsotropicElasticity::from_E_nu(youngs_modulus, poisson_ratio), interpolation, std::move(conditions)};
}

BenchmarkCase cantilever_case(double slenderness) {
  if (!(slenderness > 0.0)) throw std::invalid_argument("slenderness must be positive");
  BenchmarkCase c;
  c.name = "cantilever";
  c.description = "cantilever beam a x b = s x 1 mm, clamped left edge, load at the lower right corner";
  c.mode = OptMode::graded;
  const double b = 1.0;
  c.mesh = {std::max(1, static_cast<int>(std::lround(kCantileverElementsPerMm * slenderness * b))),
            kCantileverElementsPerMm, slenderness * b, b};
  c.youngs_modulus = 12500.0;
  c.poisson_ratio = 0.25;
  c.interpolation = {3.0, 0.02, 4.0};
  c.bc.clamps.push_back({Side::left, true, true});
  // Two element edges at the reference resolution of 64 elements per mm.
  c.bc.tractions.push_back({Side::right, 0.0, -600.0, 0.0, 2.0 / kCantileverElementsPerMm});
  c.config.volume_fraction = 0.45;
  c.config.kappa_phi = 4.0;
  c.config.kappa_chi = 4.0;
  c.config.gamma_chi = 0.02;
  c.config.tau = 1e-6;
  c.config.tol = 0.01;
  c.config.max_iter = 1000;
  c.config.phi0 = 0.5;
  c.sweep_parameter = "gamma_chi";
  c.sweep_values = {0.001, 0.005, 0.01, 0.02, 0.05, 0.1};
  return c;
}

BenchmarkCase simply_supported_case(double load_factor, double beta) {
  BenchmarkCase c;
  c.name = "simply_supported";
  c.description = "half simply-supported beam 100 x 50 mm, symmetry on the left edge, distributed top load";
  c.mode = OptMode::graded;
  c.mesh = {128, 64, 100.0, 50.0};
  c.youngs_modulus = 2300.0;
  c.poisson_ratio = 0.35;
  c.interpolation = {3.0, 0.01, beta};
  c.bc.clamps.push_back({Side::left, true, false});
  const double hx = c.mesh.lx / c.mesh.nx;
  c.bc.supports.push_back({c.mesh.lx, 0.0, false, true});
  c.bc.supports.push_back({c.mesh.lx - hx, 0.0, false, true});
  c.bc.tractions.push_back({Side::top, 0.0, -50.0, 0.0, 1e300});
  c.load_factor = load_factor;
  c.config.volume_fraction = 0.4;
  c.config.kappa_phi = 1.0;
  c.config.kappa_chi = 1.0;
  c.config.gamma_chi = 0.01;
  c.config.tau = 1e-6;
  c.config.tol = 0.01;
  c.config.max_iter = 1000;
  c.config.phi0 = 0.5;
  c.sweep_parameter = "beta";
  c.sweep_values = {1.0, 2.0, 3.0, 4.0};
  return c;
}

BenchmarkCase simply_supported_full_case(double load_factor, double beta) {
  BenchmarkCase c = simply_supported_case(load_factor, beta);
  c.name = "simply_supported_full";
  c.description = "full simply-supported beam 200 x 50 mm with supports at both bottom corners";
  c.mesh = {256, 64, 200.0, 50.0};
  c.bc = {};
  const double hx = c.mesh.lx / c.mesh.nx;
  c.bc.supports.push_back({0.0, 0.0, false, true});
  c.bc.supports.push_back({hx, 0.0, false, true});
  c.bc.supports.push_back({c.mesh.lx, 0.0, false, true});
  c.bc.supports.push_back({c.mesh.lx - hx, 0.0, false, true});
  // Midline node: removes the horizontal rigid-body mode without breaking symmetry.
  c.bc.supports.push_back({0.5 * c.mesh.lx, 0.0, true, false});
  c.bc.tractions.push_back({Side::top, 0.0, -50.0, 0.0, 1e300});
  c.sweep_parameter = "load_factor";
  c.sweep_values = {1.0};
  return c;
}

std::vector<std::string> case_names() {
  return {"cantilever_s1",       "cantilever_s2",       "cantilever_s4",         "cantilever_s2_single",
          "simply_supported",    "simply_supported_g2", "simply_supported_g3",   "simply_supported_single",
          "simply_supported_full"};
}

BenchmarkCase make_case(const std::string& name) {
  BenchmarkCase c;
  if (name == "cantilever_s1") {
    c = cantilever_case(1.0);
    c.sweep_parameter = "slenderness";
    c.sweep_values = {1.0, 2.0, 4.0};
  } else if (name == "cantilever_s2") {
    c = cantilever_case(2.0);
  } else if (name == "cantilever_s4") {
    c = cantilever_case(4.0);
    c.sweep_parameter = "slenderness";
    c.sweep_values = {1.0, 2.0, 4.0};
  } else if (name == "cantilever_s2_single") {
    c = cantilever_case(2.0);
    c.mode = OptMode::single;
    c.sweep_parameter = "m";
    c.sweep_values = {0.45};
  } else if (name == "simply_supported") {
    c = simply_supported_case(1.0, 3.0);
  } else if (name == "simply_supported_g2") {
    c = simply_supported_case(2.0, 3.0);
    c.sweep_parameter = "load_factor";
    c.sweep_values = {1.0, 2.0, 3.0};
  } else if (name == "simply_supported_g3") {
    c = simply_supported_case(3.0, 3.0);
    c.sweep_parameter = "load_factor";
    c.sweep_values = {1.0, 2.0, 3.0};
  } else if (name == "simply_supported_single") {
    c = simply_supported_case(1.0, 1.0);
    c.mode = OptMode::single;
    c.sweep_parameter = "load_factor";
    c.sweep_values = {1.0};
  } else if (name == "simply_supported_full") {
    c = simply_supported_full_case(1.0, 3.0);
  } else {
    throw std::invalid_argument("unknown case '" + name + "'");
  }
  c.name = name;
  return c;
}

std::vector<std::string> override_keys() {
  return {"gamma_chi", "kappa_chi", "chi0", "gamma_phi", "kappa_phi", "beta", "p", "m", "tau", "tol",
          "max_iter", "phi0", "E_MPa", "nu", "load_factor", "load_width", "slenderness", "nx", "ny"};
}

void apply_override(BenchmarkCase& c, const std::string& key, double value) {
  if (key == "gamma_chi") {
    c.config.gamma_chi = value;
  } else if (key == "kappa_chi") {
    c.config.kappa_chi = value;
  } else if (key == "chi0") {
    c.config.chi0 = value;
  } else if (key == "gamma_phi") {
    c.interpolation.gamma_phi = value;
  } else if (key == "kappa_phi") {
    c.config.kappa_phi = value;
  } else if (key == "beta") {
    c.interpolation.beta = value;
  } else if (key == "p") {
    c.interpolation.penalty = value;
  } else if (key == "m") {
    c.config.volume_fraction = value;
  } else if (key == "tau") {
    c.config.tau = value;
  } else if (key == "tol") {
    c.config.tol = value;
  } else if (key == "max_iter") {
    c.config.max_iter = static_cast<int>(std::lround(value));
  } else if (key == "phi0") {
    c.config.phi0 = value;
  } else if (key == "E_MPa") {
    c.youngs_modulus = value;
  } else if (key == "nu") {
    c.poisson_ratio = value;
  } else if (key == "load_factor") {
    c.load_factor = value;
  } else if (key == "slenderness") {
    if (c.name.rfind("cantilever", 0) != 0) {
      throw std::invalid_argument("slenderness applies to cantilever cases only");
    }
    if (!(value > 0.0)) throw std::invalid_argument("slenderness must be positive");
    // Keep the element size: nx / lx stays equal to ny / ly.
    const double per_mm = c.mesh.ny / c.mesh.ly;
    c.mesh.lx = value * c.mesh.ly;
    c.mesh.nx = std::max(1, static_cast<int>(std::lround(per_mm * c.mesh.lx)));
  } else if (key == "load_width") {
    if (c.bc.tractions.size() != 1) throw std::invalid_argument("load_width needs a single traction window");
    auto& t = c.bc.tractions.front();
    const double length = (t.side == Side::bottom || t.side == Side::top) ? c.mesh.lx : c.mesh.ly;
    if (!(value > 0.0) || value > length) throw std::invalid_argument("load_width must lie in (0, side length]");
    if (t.side == Side::bottom || t.side == Side::left) {
      t.from = length - value;
      t.to = length;
    } else {
      t.from = 0.0;
      t.to = value;
    }
  } else if (key == "nx") {
    c.mesh.nx = static_cast<int>(std::lround(value));
  } else if (key == "ny") {
    c.mesh.ny = static_cast<int>(std::lround(value));
  } else {
    throw std::invalid_argument("unknown parameter '" + key + "'");
  }
}

void apply_overrides(BenchmarkCase& bench, const std::map<std::string, double>& overrides) {
  for (const auto& [key, value] : overrides) apply_override(bench, key, value);
}

void scale_mesh(BenchmarkCase& bench, double factor) {
  if (!(factor > 0.0)) throw std::invalid_argument("mesh scale factor must be positive");
  const double hx_old = bench.mesh.lx / bench.mesh.nx;
  bench.mesh.nx = std::max(1, static_cast<int>(std::lround(bench.mesh.nx * factor)));
  bench.mesh.ny = std::max(1, static_cast<int>(std::lround(bench.mesh.ny * factor)));
  const double hx_new = bench.mesh.lx / bench.mesh.nx;
  // Corner supports defined as "one element in from the corner" follow the new spacing.
  for (auto& s : bench.bc.supports) {
    for (double corner : {0.0, bench.mesh.lx}) {
      const double offset = s.x - corner;
      if (std::abs(std::abs(offset) - hx_old) < 1e-9 * bench.mesh.lx) s.x = corner + (offset > 0 ? hx_new : -hx_new);
    }
  }
}

RunResult run_case(const BenchmarkCase& bench, const IterationObserver& observer) {
  const Problem problem = bench.problem();
  if (bench.mode == OptMode::single) return run_single(problem, bench.config, observer);
  return run_graded(problem, bench.config, observer);
}

SweepResult run_sweep(const BenchmarkCase& base, const std::string& parameter, const std::vector<double>& values) {
  if (values.empty()) throw std::invalid_argument("sweep needs at least one value");
  {
    BenchmarkCase probe = base;
    apply_override(probe, parameter, values.front());
  }
  SweepResult out;
  out.case_name = base.name;
  out.parameter = parameter;
  for (double v : values) {
    SweepRow row;
    row.value = v;
    const auto start = std::chrono::steady_clock::now();
    try {
      BenchmarkCase c = base;
      apply_override(c, parameter, v);
      const RunResult r = run_case(c);
      row.compliance = r.record.final_compliance;
      row.m_chi = r.record.final_m_chi;
      row.status = r.record.status;
      row.converged = r.record.converged();
      row.iterations = static_cast<int>(r.record.iterations.size());
      row.error = r.record.failure;
    } catch (const std::exception& err) {
      row.status = RunStatus::solver_failure;
      row.compliance = std::numeric_limits<double>::quiet_NaN();
      row.m_chi = std::numeric_limits<double>::quiet_NaN();
      row.error = err.what();
    }
    row.wall_time_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    out.rows.push_back(row);
  }
  return out;
}

}  // namespace pftopo
