#include "pftopo/io.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace pftopo {

ConfigError::ConfigError(const std::string& what, int line)
    : std::invalid_argument(line > 0 ? "line " + std::to_string(line) + ": " + what : what), line_(line) {}

namespace {

std::string trim(const std::string& s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

std::vector<std::string> split_words(const std::string& s) {
  std::istringstream in(s);
  std::vector<std::string> words;
  std::string w;
  while (in >> w) words.push_back(w);
  return words;
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

double parse_number(const std::string& text, int line, const std::string& key) {
  try {
    std::size_t used = 0;
    const double v = std::stod(text, &used);
    if (used == text.size() && std::isfinite(v)) return v;
  } catch (const std::exception&) {
  }
  throw ConfigError("value of '" + key + "' is not a finite number: '" + text + "'", line);
}

int parse_count(const std::string& text, int line, const std::string& key) {
  const double v = parse_number(text, line, key);
  if (v != std::floor(v) || std::abs(v) > 1e9) throw ConfigError("value of '" + key + "' must be an integer", line);
  return static_cast<int>(v);
}

Side parse_side(const std::string& text, int line) {
  if (text == "left") return Side::left;
  if (text == "right") return Side::right;
  if (text == "bottom") return Side::bottom;
  if (text == "top") return Side::top;
  throw ConfigError("unknown side '" + text + "' (left, right, bottom, top)", line);
}

std::pair<bool, bool> parse_components(const std::string& text, int line) {
  if (text == "x") return {true, false};
  if (text == "y") return {false, true};
  if (text == "xy") return {true, true};
  throw ConfigError("unknown component set '" + text + "' (x, y, xy)", line);
}

const char* components_name(bool fx, bool fy) { return fx && fy ? "xy" : (fx ? "x" : "y"); }

struct Entry {
  std::string key;
  std::string value;
  int line = 0;
};

const std::map<std::string, std::set<std::string>>& allowed_keys() {
  static const std::map<std::string, std::set<std::string>> keys = {
      {"mesh", {"nx", "ny", "lx_mm", "ly_mm"}},
      {"material", {"E_MPa", "nu", "beta", "p", "gamma_phi"}},
      {"optimizer",
       {"mode", "m", "kappa_phi", "kappa_chi", "gamma_chi", "tau", "tol", "max_iter", "phi0", "chi0"}},
      {"case", {"name"}},
      {"bc", {"clamp", "support", "traction"}},
      {"output", {"directory", "dump_every"}},
  };
  return keys;
}

void require(bool ok, const std::string& what) {
  if (!ok) throw ConfigError(what);
}

void validate_case(const BenchmarkCase& c) {
  require(c.mesh.nx >= 1 && c.mesh.ny >= 1, "nx and ny must be at least 1");
  require(c.mesh.lx > 0.0 && c.mesh.ly > 0.0, "lx_mm and ly_mm must be positive");
  require(c.youngs_modulus > 0.0, "E_MPa must be positive");
  require(c.poisson_ratio > -1.0 && c.poisson_ratio < 0.5, "nu must lie in (-1, 0.5)");
  require(c.interpolation.penalty >= 1.0, "p must be at least 1");
  require(c.interpolation.gamma_phi > 0.0, "gamma_phi must be positive");
  require(c.interpolation.beta >= 1.0, "beta must be at least 1");
  const GradedConfig& k = c.config;
  require(k.volume_fraction > 0.0 && k.volume_fraction <= 1.0, "m must lie in (0, 1]");
  require(k.kappa_phi >= 0.0, "kappa_phi must be non-negative");
  require(k.tau > 0.0, "tau must be positive");
  require(k.tol > 0.0, "tol must be positive");
  require(k.max_iter >= 1, "max_iter must be at least 1");
  require(k.phi0 >= 0.0 && k.phi0 <= 1.0, "phi0 must lie in [0, 1]");
  if (c.mode == OptMode::graded) {
    require(k.kappa_chi >= 0.0, "kappa_chi must be non-negative");
    require(k.gamma_chi > 0.0, "gamma_chi must be positive");
    require(k.initial_chi() >= 0.0 && k.initial_chi() <= k.phi0, "chi0 must lie in [0, phi0]");
  }
  require(!c.bc.clamps.empty() || !c.bc.supports.empty(), "[bc] needs at least one clamp or support");
  require(!c.bc.tractions.empty(), "[bc] needs at least one traction");
}

}  // namespace

RunConfig parse_config(const std::string& text) {
  std::map<std::string, std::vector<Entry>> sections;
  std::map<std::string, int> section_line;
  std::string current;
  std::istringstream in(text);
  std::string raw;
  int line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const auto comment = raw.find_first_of("#;");
    const std::string line = trim(comment == std::string::npos ? raw : raw.substr(0, comment));
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw ConfigError("malformed section header", line_no);
      current = trim(line.substr(1, line.size() - 2));
      if (!allowed_keys().count(current)) throw ConfigError("unknown section [" + current + "]", line_no);
      if (section_line.count(current)) throw ConfigError("duplicate section [" + current + "]", line_no);
      section_line[current] = line_no;
      sections[current];
      continue;
    }
    if (current.empty()) throw ConfigError("entry outside of a section", line_no);
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError("expected 'key = value'", line_no);
    Entry e{trim(line.substr(0, eq)), trim(line.substr(eq + 1)), line_no};
    if (!allowed_keys().at(current).count(e.key)) {
      throw ConfigError("unknown key '" + e.key + "' in [" + current + "]", line_no);
    }
    if (e.value.empty()) throw ConfigError("empty value for '" + e.key + "'", line_no);
    if (current != "bc") {
      for (const auto& prev : sections[current]) {
        if (prev.key == e.key) throw ConfigError("duplicate key '" + e.key + "'", line_no);
      }
    }
    sections[current].push_back(e);
  }

  RunConfig out;
  BenchmarkCase& c = out.bench;
  const bool from_case = sections.count("case") > 0;
  if (from_case) {
    const auto& entries = sections["case"];
    if (entries.empty()) throw ConfigError("[case] needs a name", section_line["case"]);
    try {
      c = make_case(entries.front().value);
    } catch (const std::invalid_argument& err) {
      throw ConfigError(err.what(), entries.front().line);
    }
  } else {
    for (const char* s : {"mesh", "material", "optimizer", "bc"}) {
      if (!sections.count(s)) throw ConfigError(std::string("missing section [") + s + "]");
    }
    c = BenchmarkCase{};
    c.name = "custom";
    c.description = "configuration file";
    c.sweep_parameter.clear();
    c.sweep_values.clear();
    auto has = [&](const std::string& sec, const std::string& key) {
      for (const auto& e : sections[sec]) {
        if (e.key == key) return true;
      }
      return false;
    };
    for (const char* k : {"nx", "ny", "lx_mm", "ly_mm"}) {
      if (!has("mesh", k)) throw ConfigError(std::string("missing key '") + k + "' in [mesh]", section_line["mesh"]);
    }
    for (const char* k : {"E_MPa", "nu"}) {
      if (!has("material", k)) {
        throw ConfigError(std::string("missing key '") + k + "' in [material]", section_line["material"]);
      }
    }
    if (!has("optimizer", "mode")) throw ConfigError("missing key 'mode' in [optimizer]", section_line["optimizer"]);
  }

  for (const auto& e : sections["mesh"]) {
    if (e.key == "nx") c.mesh.nx = parse_count(e.value, e.line, e.key);
    if (e.key == "ny") c.mesh.ny = parse_count(e.value, e.line, e.key);
    if (e.key == "lx_mm") c.mesh.lx = parse_number(e.value, e.line, e.key);
    if (e.key == "ly_mm") c.mesh.ly = parse_number(e.value, e.line, e.key);
  }
  for (const auto& e : sections["material"]) {
    apply_override(c, e.key, parse_number(e.value, e.line, e.key));
  }

  std::vector<const Entry*> grading_keys;
  for (const auto& e : sections["optimizer"]) {
    if (e.key == "mode") {
      if (e.value == "single") {
        c.mode = OptMode::single;
      } else if (e.value == "graded") {
        c.mode = OptMode::graded;
      } else {
        throw ConfigError("mode must be 'single' or 'graded'", e.line);
      }
      continue;
    }
    if (e.key == "max_iter") {
      c.config.max_iter = parse_count(e.value, e.line, e.key);
      continue;
    }
    if (e.key == "gamma_chi" || e.key == "kappa_chi" || e.key == "chi0") grading_keys.push_back(&e);
    apply_override(c, e.key, parse_number(e.value, e.line, e.key));
  }
  if (c.mode == OptMode::single) {
    for (const Entry* e : grading_keys) {
      out.warnings.push_back("line " + std::to_string(e->line) + ": '" + e->key +
                             "' has no effect in single-material mode");
    }
  }

  if (sections.count("bc")) {
    c.bc = {};
    for (const auto& e : sections["bc"]) {
      const auto w = split_words(e.value);
      if (e.key == "clamp") {
        if (w.size() != 2) throw ConfigError("clamp expects '<side> <x|y|xy>'", e.line);
        const auto [fx, fy] = parse_components(w[1], e.line);
        c.bc.clamps.push_back({parse_side(w[0], e.line), fx, fy});
      } else if (e.key == "support") {
        if (w.size() != 3) throw ConfigError("support expects '<x_mm> <y_mm> <x|y|xy>'", e.line);
        const auto [fx, fy] = parse_components(w[2], e.line);
        c.bc.supports.push_back({parse_number(w[0], e.line, e.key), parse_number(w[1], e.line, e.key), fx, fy});
      } else {
        if (w.size() != 3 && w.size() != 5) {
          throw ConfigError("traction expects '<side> <gx> <gy> [<from_mm> <to_mm>]'", e.line);
        }
        SideTraction t;
        t.side = parse_side(w[0], e.line);
        t.gx = parse_number(w[1], e.line, e.key);
        t.gy = parse_number(w[2], e.line, e.key);
        if (w.size() == 5) {
          t.from = parse_number(w[3], e.line, e.key);
          t.to = parse_number(w[4], e.line, e.key);
          if (!(t.to > t.from)) throw ConfigError("traction window must satisfy from < to", e.line);
        }
        c.bc.tractions.push_back(t);
      }
    }
  }

  for (const auto& e : sections["output"]) {
    if (e.key == "directory") out.output_directory = e.value;
    if (e.key == "dump_every") {
      out.dump_every = parse_count(e.value, e.line, e.key);
      if (out.dump_every < 0) throw ConfigError("dump_every must be non-negative", e.line);
    }
  }

  validate_case(c);
  return out;
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  RunConfig cfg = parse_config(ss.str());
  if (cfg.bench.name == "custom") cfg.bench.name = path.stem().string();
  return cfg;
}

std::string format_config(const BenchmarkCase& c) {
  std::ostringstream o;
  o << "# " << c.name << "\n";
  o << "[mesh]\nnx = " << c.mesh.nx << "\nny = " << c.mesh.ny << "\nlx_mm = " << fmt(c.mesh.lx)
    << "\nly_mm = " << fmt(c.mesh.ly) << "\n\n";
  o << "[material]\nE_MPa = " << fmt(c.youngs_modulus) << "\nnu = " << fmt(c.poisson_ratio)
    << "\nbeta = " << fmt(c.interpolation.beta) << "\np = " << fmt(c.interpolation.penalty)
    << "\ngamma_phi = " << fmt(c.interpolation.gamma_phi) << "\n\n";
  const GradedConfig& k = c.config;
  o << "[optimizer]\nmode = " << (c.mode == OptMode::single ? "single" : "graded")
    << "\nm = " << fmt(k.volume_fraction) << "\nkappa_phi = " << fmt(k.kappa_phi) << "\ntau = " << fmt(k.tau)
    << "\ntol = " << fmt(k.tol) << "\nmax_iter = " << k.max_iter << "\nphi0 = " << fmt(k.phi0) << "\n";
  if (c.mode == OptMode::graded) {
    o << "kappa_chi = " << fmt(k.kappa_chi) << "\ngamma_chi = " << fmt(k.gamma_chi) << "\n";
    if (k.chi0) o << "chi0 = " << fmt(*k.chi0) << "\n";
  }
  o << "\n[bc]\n";
  for (const auto& cl : c.bc.clamps) o << "clamp = " << side_name(cl.side) << " " << components_name(cl.fix_x, cl.fix_y) << "\n";
  for (const auto& s : c.bc.supports) {
    o << "support = " << fmt(s.x) << " " << fmt(s.y) << " " << components_name(s.fix_x, s.fix_y) << "\n";
  }
  for (const auto& t : c.bc.tractions) {
    o << "traction = " << side_name(t.side) << " " << fmt(c.load_factor * t.gx) << " " << fmt(c.load_factor * t.gy);
    if (t.from > 0.0 || t.to < 1e299) o << " " << fmt(t.from) << " " << fmt(t.to);
    o << "\n";
  }
  return o.str();
}

FieldDump make_field_dump(const std::string& name, int iteration, const StructuredQuadMesh& mesh,
                          const NodalField& values) {
  if (values.size() != mesh.num_nodes()) throw std::invalid_argument("field size does not match the mesh");
  FieldDump d;
  d.name = name;
  d.iteration = iteration;
  d.nx = mesh.nx();
  d.ny = mesh.ny();
  d.lx = mesh.lx();
  d.ly = mesh.ly();
  d.values.assign(values.data(), values.data() + values.size());
  return d;
}

std::string format_field_dump(const FieldDump& d) {
  std::ostringstream o;
  o << "pftopo-field 1\nname " << d.name << "\niteration " << d.iteration << "\ngrid " << d.nx << " " << d.ny
    << "\nsize " << fmt(d.lx) << " " << fmt(d.ly) << "\nvalues " << d.values.size() << "\n";
  for (double v : d.values) o << fmt(v) << "\n";
  return o.str();
}

FieldDump parse_field_dump(const std::string& text) {
  std::istringstream in(text);
  auto fail = [](const std::string& what) { throw std::invalid_argument("field dump: " + what); };
  std::string tag;
  int version = 0;
  if (!(in >> tag >> version) || tag != "pftopo-field" || version != 1) fail("bad header");
  FieldDump d;
  std::size_t count = 0;
  if (!(in >> tag >> d.name) || tag != "name") fail("missing name");
  if (!(in >> tag >> d.iteration) || tag != "iteration") fail("missing iteration");
  if (!(in >> tag >> d.nx >> d.ny) || tag != "grid") fail("missing grid");
  if (!(in >> tag >> d.lx >> d.ly) || tag != "size") fail("missing size");
  if (!(in >> tag >> count) || tag != "values") fail("missing values");
  if (d.nx < 1 || d.ny < 1 || count != static_cast<std::size_t>(d.nx + 1) * (d.ny + 1)) {
    fail("value count does not match the grid");
  }
  d.values.resize(count);
  for (auto& v : d.values) {
    std::string word;
    if (!(in >> word)) fail("truncated values");
    try {
      v = std::stod(word);
    } catch (const std::exception&) {
      fail("bad value '" + word + "'");
    }
  }
  return d;
}

void write_field_dump(const std::filesystem::path& path, const FieldDump& dump) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << format_field_dump(dump);
}

FieldDump read_field_dump(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open field dump " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_field_dump(ss.str());
}

std::vector<std::uint8_t> grayscale_pixels(const FieldDump& d) {
  const int w = d.nx + 1;
  const int h = d.ny + 1;
  std::vector<std::uint8_t> px(static_cast<std::size_t>(w) * h);
  for (int r = 0; r < h; ++r) {
    const int j = h - 1 - r;
    for (int i = 0; i < w; ++i) {
      const double v = std::clamp(d.values[static_cast<std::size_t>(j) * w + i], 0.0, 1.0);
      px[static_cast<std::size_t>(r) * w + i] = static_cast<std::uint8_t>(std::floor(255.0 * v + 0.5));
    }
  }
  return px;
}

void write_pgm(const std::filesystem::path& path, const FieldDump& dump) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << "P5\n" << dump.nx + 1 << " " << dump.ny + 1 << "\n255\n";
  const auto px = grayscale_pixels(dump);
  out.write(reinterpret_cast<const char*>(px.data()), static_cast<std::streamsize>(px.size()));
}

std::string format_run_log(const RunRecord& record) {
  std::ostringstream o;
  o << "iter,compliance,volume,m_chi,delta_phi,delta_chi\n";
  for (const auto& r : record.iterations) {
    o << r.iter << "," << fmt(r.compliance) << "," << fmt(r.volume) << "," << fmt(r.m_chi) << ","
      << fmt(r.delta_phi) << "," << fmt(r.delta_chi) << "\n";
  }
  return o.str();
}

std::string format_sweep_csv(const SweepResult& sweep) {
  std::ostringstream o;
  o << "parameter,value,compliance,m_chi,converged,iterations,wall_time_s,status\n";
  for (const auto& r : sweep.rows) {
    o << sweep.parameter << "," << fmt(r.value) << "," << fmt(r.compliance) << "," << fmt(r.m_chi) << ","
      << (r.converged ? 1 : 0) << "," << r.iterations << "," << fmt(r.wall_time_s) << "," << status_name(r.status)
      << "\n";
  }
  return o.str();
}

OutputWriter::OutputWriter(std::filesystem::path directory, int dump_every, StructuredQuadMesh mesh, bool graded)
    : directory_(std::move(directory)), dump_every_(dump_every), mesh_(std::move(mesh)), graded_(graded) {
  std::error_code ec;
  std::filesystem::create_directories(directory_, ec);
  if (ec || !std::filesystem::is_directory(directory_)) {
    throw std::runtime_error("cannot create output directory " + directory_.string() +
                             (ec ? ": " + ec.message() : std::string()));
  }
}

void OutputWriter::dump_fields(const DesignState& state, const std::string& suffix) const {
  const auto phi = make_field_dump("phi", state.iteration, mesh_, state.phi);
  write_field_dump(directory_ / ("phi_" + suffix + ".field"), phi);
  write_pgm(directory_ / ("phi_" + suffix + ".pgm"), phi);
  if (graded_ && state.chi.size() == state.phi.size()) {
    const auto chi = make_field_dump("chi", state.iteration, mesh_, state.chi);
    write_field_dump(directory_ / ("chi_" + suffix + ".field"), chi);
    write_pgm(directory_ / ("chi_" + suffix + ".pgm"), chi);
  }
}

IterationObserver OutputWriter::observer() {
  if (dump_every_ <= 0) return {};
  return [this](const IterationRecord& row, const DesignState& state) {
    if (row.iter % dump_every_ != 0) return;
    char suffix[16];
    std::snprintf(suffix, sizeof suffix, "%06d", row.iter);
    dump_fields(state, suffix);
  };
}

void OutputWriter::finish(const RunResult& result) const {
  {
    std::ofstream log(directory_ / "log.csv");
    log << format_run_log(result.record);
  }
  std::ofstream summary(directory_ / "summary.txt");
  summary << "status " << status_name(result.record.status) << "\niterations " << result.record.iterations.size()
          << "\ncompliance " << fmt(result.record.final_compliance) << "\nvolume " << fmt(result.record.final_volume)
          << "\nm_chi " << fmt(result.record.final_m_chi) << "\n";
  if (!result.record.failure.empty()) summary << "failure " << result.record.failure << "\n";
  if (result.state.phi.size() == mesh_.num_nodes()) dump_fields(result.state, "final");
}

double InfillGrid::solid_fraction() const {
  double solid = 0.0;
  double total = 0.0;
  for (const auto& c : cells) {
    const double a = c.width * c.height;
    solid += a - c.hole_side * c.hole_side;
    total += a;
  }
  return total > 0.0 ? solid / total : 0.0;
}

InfillGrid infill_map(const FieldDump& chi, double cell_mm) {
  const double hx = chi.lx / chi.nx;
  const double hy = chi.ly / chi.ny;
  if (!(cell_mm >= 2.0 * std::max(hx, hy) * (1.0 - 1e-12))) {
    throw std::invalid_argument("cell size must span at least two node spacings (" + fmt(2.0 * std::max(hx, hy)) +
                                " mm)");
  }
  InfillGrid g;
  g.cell_mm = cell_mm;
  g.cells_x = std::max(1, static_cast<int>(std::ceil(chi.lx / cell_mm - 1e-9)));
  g.cells_y = std::max(1, static_cast<int>(std::ceil(chi.ly / cell_mm - 1e-9)));
  const double eps = 1e-9 * std::max(chi.lx, chi.ly);
  const int w = chi.nx + 1;
  for (int iy = 0; iy < g.cells_y; ++iy) {
    for (int ix = 0; ix < g.cells_x; ++ix) {
      InfillCell c;
      c.ix = ix;
      c.iy = iy;
      c.x0 = ix * cell_mm;
      c.y0 = iy * cell_mm;
      const double x1 = std::min(c.x0 + cell_mm, chi.lx);
      const double y1 = std::min(c.y0 + cell_mm, chi.ly);
      c.width = x1 - c.x0;
      c.height = y1 - c.y0;
      const int i0 = static_cast<int>(std::ceil((c.x0 - eps) / hx));
      const int i1 = std::min(chi.nx, static_cast<int>(std::floor((x1 + eps) / hx)));
      const int j0 = static_cast<int>(std::ceil((c.y0 - eps) / hy));
      const int j1 = std::min(chi.ny, static_cast<int>(std::floor((y1 + eps) / hy)));
      double sum = 0.0;
      int count = 0;
      for (int j = j0; j <= j1; ++j) {
        for (int i = i0; i <= i1; ++i) {
          sum += chi.values[static_cast<std::size_t>(j) * w + i];
          ++count;
        }
      }
      c.chi_mean = count > 0 ? sum / count : 0.0;
      const double open = std::max(0.0, 1.0 - c.chi_mean);
      if (c.chi_mean < 1.0 - 1e-9) {
        c.hole_side = std::min(std::sqrt(open * c.width * c.height), std::min(c.width, c.height));
      }
      g.cells.push_back(c);
    }
  }
  return g;
}

std::string format_infill_csv(const InfillGrid& grid) {
  std::ostringstream o;
  o << "ix,iy,x0_mm,y0_mm,width_mm,height_mm,chi_mean,hole_side_mm\n";
  for (const auto& c : grid.cells) {
    o << c.ix << "," << c.iy << "," << fmt(c.x0) << "," << fmt(c.y0) << "," << fmt(c.width) << "," << fmt(c.height)
      << "," << fmt(c.chi_mean) << "," << fmt(c.hole_side) << "\n";
  }
  return o.str();
}

}  // namespace pftopo
