#include <pybind11/eigen.h>
#include <pybind11/functional.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "pftopo/benchmarks.hpp"
#include "pftopo/io.hpp"

namespace py = pybind11;
using namespace pftopo;

namespace {

using Grid = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

StructuredQuadMesh mesh_of(const BenchmarkCase& c) { return {c.mesh.nx, c.mesh.ny, c.mesh.lx, c.mesh.ly}; }

// Nodal vectors travel as (ny+1, nx+1) arrays, row j at y = j * hy.
Grid to_grid(const NodalField& f, int nx, int ny) {
  return Eigen::Map<const Grid>(f.data(), ny + 1, nx + 1);
}

NodalField from_grid(const Grid& g, int nx, int ny) {
  if (g.rows() != ny + 1 || g.cols() != nx + 1)
    throw std::invalid_argument("field shape must be (" + std::to_string(ny + 1) + ", " + std::to_string(nx + 1) + ")");
  return Eigen::Map<const NodalField>(g.data(), g.size());
}

py::dict iteration_dict(const IterationRecord& r) {
  py::dict d;
  d["iter"] = r.iter;
  d["compliance"] = r.compliance;
  d["volume"] = r.volume;
  d["m_chi"] = r.m_chi;
  d["delta_phi"] = r.delta_phi;
  d["delta_chi"] = r.delta_chi;
  d["lambda"] = r.lambda;
  d["volume_residual"] = r.volume_residual;
  return d;
}

py::dict result_dict(const RunResult& r, const BenchmarkCase& c) {
  py::dict d;
  d["status"] = status_name(r.record.status);
  d["converged"] = r.record.converged();
  d["compliance"] = r.record.final_compliance;
  d["volume"] = r.record.final_volume;
  d["m_chi"] = r.record.final_m_chi;
  d["failure"] = r.record.failure;
  py::list rows;
  for (const auto& it : r.record.iterations) rows.append(iteration_dict(it));
  d["iterations"] = rows;
  d["phi"] = to_grid(r.state.phi, c.mesh.nx, c.mesh.ny);
  if (r.state.chi.size() > 0) {
    d["chi"] = to_grid(r.state.chi, c.mesh.nx, c.mesh.ny);
  } else {
    d["chi"] = py::none();
  }
  return d;
}

RunResult run_with_callback(const BenchmarkCase& c, const py::object& callback) {
  if (callback.is_none()) {
    py::gil_scoped_release release;
    return run_case(c);
  }
  const int nx = c.mesh.nx, ny = c.mesh.ny;
  IterationObserver obs = [&](const IterationRecord& row, const DesignState& s) {
    py::gil_scoped_acquire acquire;
    callback(iteration_dict(row), to_grid(s.phi, nx, ny));
  };
  py::gil_scoped_release release;
  return run_case(c, obs);
}

py::dict field_dict(const FieldDump& f) {
  py::dict d;
  d["name"] = f.name;
  d["iteration"] = f.iteration;
  d["lx"] = f.lx;
  d["ly"] = f.ly;
  d["values"] = Grid(Eigen::Map<const Grid>(f.values.data(), f.ny + 1, f.nx + 1));
  return d;
}

FieldDump dump_from(const std::string& name, const Grid& values, double lx, double ly, int iteration) {
  const int ny = static_cast<int>(values.rows()) - 1;
  const int nx = static_cast<int>(values.cols()) - 1;
  if (nx < 1 || ny < 1) throw std::invalid_argument("field needs at least 2 x 2 nodes");
  const StructuredQuadMesh mesh(nx, ny, lx, ly);
  return make_field_dump(name, iteration, mesh, from_grid(values, nx, ny));
}

}  // namespace

PYBIND11_MODULE(_pftopo, m) {
  m.doc() = "Phase-field topology optimization with graded soft material";

  py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);

  py::class_<BenchmarkCase>(m, "Case")
      .def_readwrite("name", &BenchmarkCase::name)
      .def_readonly("description", &BenchmarkCase::description)
      .def_property(
          "mode", [](const BenchmarkCase& c) { return c.mode == OptMode::graded ? "graded" : "single"; },
          [](BenchmarkCase& c, const std::string& s) {
            if (s == "graded") {
              c.mode = OptMode::graded;
            } else if (s == "single") {
              c.mode = OptMode::single;
            } else {
              throw std::invalid_argument("mode must be 'single' or 'graded'");
            }
          })
      .def_property_readonly("shape", [](const BenchmarkCase& c) { return py::make_tuple(c.mesh.ny + 1, c.mesh.nx + 1); })
      .def_property_readonly("nx", [](const BenchmarkCase& c) { return c.mesh.nx; })
      .def_property_readonly("ny", [](const BenchmarkCase& c) { return c.mesh.ny; })
      .def_property_readonly("lx", [](const BenchmarkCase& c) { return c.mesh.lx; })
      .def_property_readonly("ly", [](const BenchmarkCase& c) { return c.mesh.ly; })
      .def_property_readonly("sweep_parameter", [](const BenchmarkCase& c) { return c.sweep_parameter; })
      .def_property_readonly("sweep_values", [](const BenchmarkCase& c) { return c.sweep_values; })
      .def("set", &apply_override, py::arg("key"), py::arg("value"))
      .def("scale_mesh", &scale_mesh, py::arg("factor"))
      .def("copy", [](const BenchmarkCase& c) { return BenchmarkCase(c); })
      .def("to_config", &format_config)
      .def("__repr__", [](const BenchmarkCase& c) {
        return "<Case " + c.name + " " + std::to_string(c.mesh.nx) + "x" + std::to_string(c.mesh.ny) + ">";
      });

  m.def("case_names", &case_names);
  m.def("override_keys", &override_keys);
  m.def("make_case", &make_case, py::arg("name"));
  m.def(
      "parse_config",
      [](const std::string& text) {
        auto rc = parse_config(text);
        return py::make_tuple(rc.bench, rc.output_directory.string(), rc.dump_every, rc.warnings);
      },
      py::arg("text"), "Returns (case, output_directory, dump_every, warnings).");
  m.def(
      "load_config",
      [](const std::filesystem::path& path) {
        auto rc = load_config(path);
        return py::make_tuple(rc.bench, rc.output_directory.string(), rc.dump_every, rc.warnings);
      },
      py::arg("path"));

  m.def(
      "run", [](const BenchmarkCase& c, const py::object& callback) { return result_dict(run_with_callback(c, callback), c); },
      py::arg("case"), py::arg("callback") = py::none(),
      "Runs the optimization. callback(row, phi) is called after every iteration.");

  m.def(
      "sweep",
      [](const BenchmarkCase& c, const std::string& parameter, const std::vector<double>& values) {
        SweepResult s;
        {
          py::gil_scoped_release release;
          s = run_sweep(c, parameter, values);
        }
        py::list rows;
        for (const auto& r : s.rows) {
          py::dict d;
          d["value"] = r.value;
          d["compliance"] = r.compliance;
          d["m_chi"] = r.m_chi;
          d["converged"] = r.converged;
          d["status"] = status_name(r.status);
          d["iterations"] = r.iterations;
          d["wall_time_s"] = r.wall_time_s;
          d["error"] = r.error;
          rows.append(d);
        }
        return py::make_tuple(rows, format_sweep_csv(s));
      },
      py::arg("case"), py::arg("parameter"), py::arg("values"), "Returns (rows, csv_text).");

  m.def(
      "solve_state",
      [](const BenchmarkCase& c, const Grid& phi, const std::optional<Grid>& chi) {
        const auto problem = c.problem();
        std::optional<NodalField> chi_field;
        if (chi) chi_field = from_grid(*chi, c.mesh.nx, c.mesh.ny);
        const auto s = solve_state(problem.mesh, from_grid(phi, c.mesh.nx, c.mesh.ny), chi_field, problem.material,
                                   problem.interpolation, problem.bc);
        Grid u = Eigen::Map<const Grid>(s.u.data(), s.u.size() / 2, 2);
        return py::make_tuple(u, s.compliance);
      },
      py::arg("case"), py::arg("phi"), py::arg("chi") = py::none(),
      "Returns (u, compliance) with u of shape (nodes, 2).");

  m.def("material_fraction", [](const BenchmarkCase& c, const Grid& f) {
    return material_fraction(from_grid(f, c.mesh.nx, c.mesh.ny), mesh_of(c));
  });

  m.def("phase_scale", [](double phi, double p, double gamma) { return phase_scale(phi, {p, gamma, 1.0}); },
        py::arg("phi"), py::arg("p") = 3.0, py::arg("gamma_phi") = 0.02);
  m.def(
      "graded_scale", [](double phi, double chi, double p, double gamma, double beta) {
        return graded_scale(phi, chi, {p, gamma, beta});
      },
      py::arg("phi"), py::arg("chi"), py::arg("p") = 3.0, py::arg("gamma_phi") = 0.02, py::arg("beta") = 4.0);
  m.def("double_well", [](double phi) {
    const auto w = double_well(phi);
    return py::make_tuple(w.value, w.derivative);
  });

  m.def("read_field", [](const std::filesystem::path& p) { return field_dict(read_field_dump(p)); }, py::arg("path"));
  m.def(
      "write_field",
      [](const std::filesystem::path& p, const std::string& name, const Grid& values, double lx, double ly,
         int iteration) { write_field_dump(p, dump_from(name, values, lx, ly, iteration)); },
      py::arg("path"), py::arg("name"), py::arg("values"), py::arg("lx"), py::arg("ly"), py::arg("iteration") = 0);
  m.def(
      "write_pgm",
      [](const std::filesystem::path& p, const Grid& values, double lx, double ly) {
        write_pgm(p, dump_from("field", values, lx, ly, 0));
      },
      py::arg("path"), py::arg("values"), py::arg("lx"), py::arg("ly"));
  m.def(
      "infill",
      [](const Grid& chi, double lx, double ly, double cell_mm) {
        const auto grid = infill_map(dump_from("chi", chi, lx, ly, 0), cell_mm);
        Grid means(grid.cells_y, grid.cells_x), holes(grid.cells_y, grid.cells_x);
        for (const auto& c : grid.cells) {
          means(c.iy, c.ix) = c.chi_mean;
          holes(c.iy, c.ix) = c.hole_side;
        }
        py::dict d;
        d["chi_mean"] = means;
        d["hole_side"] = holes;
        d["solid_fraction"] = grid.solid_fraction();
        d["csv"] = format_infill_csv(grid);
        return d;
      },
      py::arg("chi"), py::arg("lx"), py::arg("ly"), py::arg("cell_mm"));
}
