#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "pftopo/benchmarks.hpp"
#include "pftopo/optimizer.hpp"

namespace pftopo {

/// Configuration text error; the message names the offending line when there is one.
class ConfigError : public std::invalid_argument {
 public:
  ConfigError(const std::string& what, int line = 0);
  int line() const { return line_; }

 private:
  int line_;
};

/// Fully resolved contents of a run configuration file.
struct RunConfig {
  BenchmarkCase bench;
  std::filesystem::path output_directory = "pftopo_out";
  int dump_every = 0;  // 0: final fields only
  std::vector<std::string> warnings;
};

/// Parses the sectioned key = value format:
///
///   [mesh]       nx, ny, lx_mm, ly_mm
///   [material]   E_MPa, nu, beta, p, gamma_phi
///   [optimizer]  mode (single|graded), m, kappa_phi, kappa_chi, gamma_chi,
///                tau, tol, max_iter, phi0, chi0
///   [case]       name            (a built-in case; other sections then override it)
///   [bc]         clamp = <side> <x|y|xy>
///                support = <x_mm> <y_mm> <x|y|xy>
///                traction = <side> <gx> <gy> [<from_mm> <to_mm>]
///   [output]     directory, dump_every
///
/// `#` and `;` start comments. Unknown sections or keys are rejected.
RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::filesystem::path& path);

/// Renders a case as config text that parse_config reads back to the same case.
std::string format_config(const BenchmarkCase& bench);

/// Nodal field snapshot in a plain-text, diffable format.
struct FieldDump {
  std::string name;
  int iteration = 0;
  int nx = 0;  // elements per axis; the grid has (nx+1) x (ny+1) nodes
  int ny = 0;
  double lx = 0.0;
  double ly = 0.0;
  std::vector<double> values;  // row-major, x fastest
};

FieldDump make_field_dump(const std::string& name, int iteration, const StructuredQuadMesh& mesh,
                          const NodalField& values);
std::string format_field_dump(const FieldDump& dump);
FieldDump parse_field_dump(const std::string& text);
void write_field_dump(const std::filesystem::path& path, const FieldDump& dump);
FieldDump read_field_dump(const std::filesystem::path& path);

/// 8-bit grayscale pixels, one per node, value round(255 * v) after clamping to
/// [0,1], row 0 at the top (largest y).
std::vector<std::uint8_t> grayscale_pixels(const FieldDump& dump);
/// Binary PGM (P5) image of grayscale_pixels.
void write_pgm(const std::filesystem::path& path, const FieldDump& dump);

/// iter,compliance,volume,m_chi,delta_phi,delta_chi
std::string format_run_log(const RunRecord& record);
/// parameter,value,compliance,m_chi,converged,iterations,wall_time_s,status
std::string format_sweep_csv(const SweepResult& sweep);

/// Writes log.csv, summary.txt and final field dumps and rasters, plus
/// intermediate dumps every `dump_every` iterations via observer().
class OutputWriter {
 public:
  OutputWriter(std::filesystem::path directory, int dump_every, StructuredQuadMesh mesh, bool graded);

  IterationObserver observer();
  void finish(const RunResult& result) const;
  const std::filesystem::path& directory() const { return directory_; }

 private:
  void dump_fields(const DesignState& state, const std::string& suffix) const;

  std::filesystem::path directory_;
  int dump_every_;
  StructuredQuadMesh mesh_;
  bool graded_;
};

/// Square-hole infill layout of a grading field on a manufacturing grid.
struct InfillCell {
  int ix = 0;
  int iy = 0;
  double x0 = 0.0;
  double y0 = 0.0;
  double width = 0.0;   // mm; equals the cell size except in a clipped last column/row
  double height = 0.0;
  double chi_mean = 0.0;
  double hole_side = 0.0;  // mm
};

struct InfillGrid {
  double cell_mm = 0.0;
  int cells_x = 0;
  int cells_y = 0;
  std::vector<InfillCell> cells;  // row-major, x fastest

  /// Sum of cell solid areas over the domain area.
  double solid_fraction() const;
};

/// Averages chi over the nodes inside each cell (boundary nodes count for every
/// cell they touch) and sizes a square hole with area fraction 1 - mean.
InfillGrid infill_map(const FieldDump& chi, double cell_mm);
/// ix,iy,x0_mm,y0_mm,width_mm,height_mm,chi_mean,hole_side_mm
std::string format_infill_csv(const InfillGrid& grid);

}  // namespace pftopo
