#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "pftopo/benchmarks.hpp"
#include "pftopo/io.hpp"

namespace {

enum Exit { kOk = 0, kValidation = 1, kSolver = 2, kNotConverged = 3 };

int exit_for(pftopo::RunStatus status) {
  switch (status) {
    case pftopo::RunStatus::converged:
      return kOk;
    case pftopo::RunStatus::max_iterations:
      return kNotConverged;
    case pftopo::RunStatus::solver_failure:
      return kSolver;
  }
  return kSolver;
}

std::vector<double> parse_values(const std::string& text) {
  std::vector<double> values;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    std::size_t used = 0;
    const double v = std::stod(item, &used);
    if (used != item.size()) throw std::invalid_argument("bad sweep value '" + item + "'");
    values.push_back(v);
  }
  if (values.empty()) throw std::invalid_argument("--values is empty");
  return values;
}

void write_text(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << text;
}

int cmd_run(const std::string& config_path, const std::string& output_dir, int progress) {
  pftopo::RunConfig cfg = pftopo::load_config(config_path);
  for (const auto& w : cfg.warnings) std::cerr << "warning: " << w << "\n";
  if (!output_dir.empty()) cfg.output_directory = output_dir;
  const pftopo::Problem probe = cfg.bench.problem();
  pftopo::OutputWriter writer(cfg.output_directory, cfg.dump_every, probe.mesh,
                              cfg.bench.mode == pftopo::OptMode::graded);
  auto dump = writer.observer();
  auto observer = [&](const pftopo::IterationRecord& row, const pftopo::DesignState& state) {
    if (dump) dump(row, state);
    if (progress > 0 && row.iter % progress == 0) {
      std::fprintf(stderr, "iter %5d  C %.6g  vol %.4f  m_chi %.4f  dphi %.3e  dchi %.3e\n", row.iter,
                   row.compliance, row.volume, row.m_chi, row.delta_phi, row.delta_chi);
    }
  };
  const pftopo::RunResult result = pftopo::run_case(cfg.bench, observer);
  writer.finish(result);
  const auto& rec = result.record;
  std::printf("%s: %s after %zu iterations, compliance %.10g, volume %.6f, m_chi %.6f\n", cfg.bench.name.c_str(),
              pftopo::status_name(rec.status), rec.iterations.size(), rec.final_compliance, rec.final_volume,
              rec.final_m_chi);
  if (!rec.failure.empty()) std::cerr << "error: " << rec.failure << "\n";
  std::printf("outputs in %s\n", writer.directory().string().c_str());
  return exit_for(rec.status);
}

int cmd_sweep(const std::string& case_name, std::string axis, const std::string& values_text, double mesh_scale,
              const std::string& output) {
  pftopo::BenchmarkCase bench = pftopo::make_case(case_name);
  if (mesh_scale != 1.0) pftopo::scale_mesh(bench, mesh_scale);
  if (axis.empty()) axis = bench.sweep_parameter;
  const std::vector<double> values = values_text.empty() ? bench.sweep_values : parse_values(values_text);
  const pftopo::SweepResult sweep = pftopo::run_sweep(bench, axis, values);
  write_text(output, pftopo::format_sweep_csv(sweep));
  int code = kOk;
  for (const auto& row : sweep.rows) {
    if (row.status == pftopo::RunStatus::solver_failure) {
      std::cerr << "error: " << axis << " = " << row.value << ": " << row.error << "\n";
      code = kSolver;
    }
  }
  return code;
}

int cmd_infill(const std::string& field_path, double cell_mm, const std::string& output) {
  const pftopo::FieldDump chi = pftopo::read_field_dump(field_path);
  const pftopo::InfillGrid grid = pftopo::infill_map(chi, cell_mm);
  write_text(output, pftopo::format_infill_csv(grid));
  std::fprintf(stderr, "%d x %d cells, solid fraction %.6f\n", grid.cells_x, grid.cells_y, grid.solid_fraction());
  return kOk;
}

int cmd_list_cases(bool verbose) {
  for (const auto& name : pftopo::case_names()) {
    if (!verbose) {
      std::cout << name << "\n";
      continue;
    }
    const auto c = pftopo::make_case(name);
    std::cout << name << "  " << (c.mode == pftopo::OptMode::single ? "single" : "graded") << "  " << c.mesh.nx
              << "x" << c.mesh.ny << "  " << c.description << "\n";
  }
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Phase-field topology optimization with material grading"};
  app.require_subcommand(1);

  auto* run = app.add_subcommand("run", "optimize the design described by a config file");
  std::string config_path, output_dir;
  int progress = 0;
  run->add_option("--config", config_path, "run configuration")->required()->check(CLI::ExistingFile);
  run->add_option("--output", output_dir, "override [output] directory");
  run->add_option("--progress", progress, "print a progress line every N iterations");

  auto* sweep = app.add_subcommand("sweep", "run one case over a list of parameter values");
  std::string case_name, axis, values_text, sweep_out;
  double mesh_scale = 1.0;
  sweep->add_option("--case", case_name, "case name (see list-cases)")->required();
  sweep->add_option("--axis", axis, "parameter to vary (default: the case's own axis)");
  sweep->add_option("--values", values_text, "comma-separated values (default: the case's own values)");
  sweep->add_option("--mesh-scale", mesh_scale, "multiply element counts");
  sweep->add_option("--output", sweep_out, "CSV file (default: stdout)");

  auto* infill = app.add_subcommand("infill", "map a grading field onto a manufacturing grid");
  std::string field_path, infill_out;
  double cell_mm = 0.0;
  infill->add_option("--field", field_path, "chi field dump")->required()->check(CLI::ExistingFile);
  infill->add_option("--cell", cell_mm, "cell size in mm")->required();
  infill->add_option("--output", infill_out, "CSV file (default: stdout)");

  auto* list = app.add_subcommand("list-cases", "print the built-in case names");
  bool verbose = false;
  list->add_flag("-v,--verbose", verbose, "include mode, mesh and description");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kValidation;
  }

  try {
    if (*run) return cmd_run(config_path, output_dir, progress);
    if (*sweep) return cmd_sweep(case_name, axis, values_text, mesh_scale, sweep_out);
    if (*infill) return cmd_infill(field_path, cell_mm, infill_out);
    if (*list) return cmd_list_cases(verbose);
  } catch (const pftopo::SolverFailure& e) {
    std::cerr << "solver failure: " << e.what() << "\n";
    return kSolver;
  } catch (const pftopo::SingularConstraint& e) {
    std::cerr << "solver failure: " << e.what() << "\n";
    return kSolver;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kValidation;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kSolver;
  }
  return kValidation;
}
