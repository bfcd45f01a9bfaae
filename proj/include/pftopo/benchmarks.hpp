#pragma once

#include <map>
#include <string>
#include <vector>

#include "pftopo/optimizer.hpp"

namespace pftopo {

enum class OptMode { single, graded };

struct MeshSpec {
  int nx = 128;
  int ny = 64;
  double lx = 2.0;  // mm
  double ly = 1.0;  // mm
};

/// Declarative boundary conditions, resolved against a mesh on demand.
struct SideClamp {
  Side side = Side::left;
  bool fix_x = true;
  bool fix_y = true;
};

/// Fixes the node closest to (x, y).
struct PointSupport {
  double x = 0.0;
  double y = 0.0;
  bool fix_x = false;
  bool fix_y = true;
};

/// Constant traction on the part of a side whose tangential coordinate lies in [from, to].
struct SideTraction {
  Side side = Side::right;
  double gx = 0.0;
  double gy = 0.0;
  double from = 0.0;
  double to = 1e300;
};

struct BcSpec {
  std::vector<SideClamp> clamps;
  std::vector<PointSupport> supports;
  std::vector<SideTraction> tractions;

  /// Tractions are multiplied by load_scale.
  BoundaryConditions build(const StructuredQuadMesh& mesh, double load_scale = 1.0) const;
};

struct BenchmarkCase {
  std::string name;
  std::string description;
  OptMode mode = OptMode::graded;
  MeshSpec mesh;
  double youngs_modulus = 12500.0;  // N/mm^2
  double poisson_ratio = 0.25;
  InterpolationSpec interpolation;
  BcSpec bc;
  double load_factor = 1.0;
  GradedConfig config;
  /// Default sensitivity axis of the case.
  std::string sweep_parameter;
  std::vector<double> sweep_values;

  Problem problem() const;
};

/// Cantilever: a = s mm by b = 1 mm, left edge clamped, traction (0,-600) N/mm on
/// the lowest two element edges of the right edge, 64 elements per mm.
BenchmarkCase cantilever_case(double slenderness = 2.0);

/// Half of a simply-supported beam, 100 mm by 50 mm: symmetry on the left edge,
/// vertical support at the bottom-right corner node pair, traction
/// load_factor * (0,-50) N/mm on the top edge.
BenchmarkCase simply_supported_case(double load_factor = 1.0, double beta = 3.0);

/// Full 200 mm by 50 mm simply-supported beam with both supports, used to check
/// the half-domain symmetry assumption.
BenchmarkCase simply_supported_full_case(double load_factor = 1.0, double beta = 3.0);

/// Names accepted by make_case.
std::vector<std::string> case_names();
BenchmarkCase make_case(const std::string& name);

/// Keys accepted by apply_override (and by sweeps as axis names).
std::vector<std::string> override_keys();
/// Sets one parameter by name; throws std::invalid_argument for unknown keys.
void apply_override(BenchmarkCase& bench, const std::string& key, double value);
void apply_overrides(BenchmarkCase& bench, const std::map<std::string, double>& overrides);

/// Multiplies the element counts by `factor` (rounded, at least 1).
void scale_mesh(BenchmarkCase& bench, double factor);

/// Runs the case in its configured mode.
RunResult run_case(const BenchmarkCase& bench, const IterationObserver& observer = {});

struct SweepRow {
  double value = 0.0;
  double compliance = 0.0;
  double m_chi = 0.0;
  bool converged = false;
  RunStatus status = RunStatus::max_iterations;
  int iterations = 0;
  double wall_time_s = 0.0;
  std::string error;
};

struct SweepResult {
  std::string case_name;
  std::string parameter;
  std::vector<SweepRow> rows;
};

/// One independent run per value, rows in axis order. Failures are recorded per row.
SweepResult run_sweep(const BenchmarkCase& base, const std::string& parameter, const std::vector<double>& values);

}  // namespace pftopo
