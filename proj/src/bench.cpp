#include "helmdd/bench.hpp"

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <new>
#include <set>
#include <sstream>

#include "helmdd/analytic.hpp"
#include "helmdd/parallel.hpp"

namespace helmdd::bench {

using nlohmann::json;

namespace {

Point to_point(const std::vector<double>& v) {
  Point p{0.0, 0.0, 0.0};
  for (std::size_t i = 0; i < v.size() && i < 3; ++i) p[i] = v[i];
  return p;
}

std::vector<double> from_point(const Point& p, int dim) { return {p.begin(), p.begin() + dim}; }

std::string solver_name(SolverKind k) {
  switch (k) {
    case SolverKind::Auto: return "auto";
    case SolverKind::Direct: return "direct";
    case SolverKind::Oras: return "oras";
  }
  return "auto";
}

SolverKind parse_solver(const std::string& s) {
  if (s == "auto") return SolverKind::Auto;
  if (s == "direct") return SolverKind::Direct;
  if (s == "oras") return SolverKind::Oras;
  throw InvalidInput("unknown solver kind: " + s);
}

std::string reference_name(ReferenceKind k) {
  switch (k) {
    case ReferenceKind::None: return "none";
    case ReferenceKind::Analytic: return "analytic";
    case ReferenceKind::Oracle: return "oracle";
  }
  return "none";
}

ReferenceKind parse_reference(const std::string& s) {
  if (s == "none") return ReferenceKind::None;
  if (s == "analytic") return ReferenceKind::Analytic;
  if (s == "oracle") return ReferenceKind::Oracle;
  throw InvalidInput("unknown reference kind: " + s);
}

void check_choice(const std::string& value, std::initializer_list<const char*> allowed,
                  const std::string& what) {
  for (const char* a : allowed)
    if (value == a) return;
  throw InvalidInput("unknown " + what + ": " + value);
}

json stretch_json(const pml::StretchFunction& f) {
  return {{"stretch", pml::to_string(f.kind)}, {"alpha", f.alpha}};
}

pml::StretchFunction parse_stretch(const json& j, pml::StretchFunction base) {
  if (j.contains("stretch")) base.kind = pml::parse_stretch_kind(j.at("stretch").get<std::string>());
  if (j.contains("alpha")) base.alpha = j.at("alpha").get<double>();
  return base;
}

grid::Index3 parse_splits(const json& j) {
  const auto v = j.get<std::vector<int>>();
  if (v.empty() || v.size() > 3) throw InvalidInput("splits must have 1 to 3 entries");
  grid::Index3 s{1, 1, 1};
  for (std::size_t i = 0; i < v.size(); ++i) s[i] = v[i];
  return s;
}

std::string fmt(double v, const char* spec = "%.10g") {
  char buf[64];
  std::snprintf(buf, sizeof buf, spec, v);
  return buf;
}

std::string splits_string(const grid::Index3& s, int dim) {
  std::string out;
  for (int a = 0; a < dim; ++a) out += (a ? "x" : "") + std::to_string(s[a]);
  return out;
}

void apply_axis(Setting& s, const std::string& axis, const json& v) {
  if (axis == "frequency") {
    s.frequency = v.get<double>();
  } else if (axis == "n_lambda") {
    s.n_lambda = v.get<double>();
  } else if (axis == "order") {
    s.order = v.get<int>();
  } else if (axis == "pml_length") {
    s.pml_length = v.get<double>();
  } else if (axis == "bc") {
    s.bc = v.get<std::string>();
  } else if (axis == "ic") {
    s.ic = v.get<std::string>();
  } else if (axis == "bc_ic") {
    const auto pair = v.get<std::vector<std::string>>();
    if (pair.size() != 2) throw InvalidInput("bc_ic entries must be [bc, ic] pairs");
    s.bc = pair[0];
    s.ic = pair[1];
  } else if (axis == "stretch") {
    const auto kind = pml::parse_stretch_kind(v.get<std::string>());
    s.stretch.kind = kind;
    if (s.interface_stretch) s.interface_stretch->kind = kind;
  } else if (axis == "interface_layers") {
    s.interface_layers = v.get<int>();
  } else if (axis == "splits") {
    s.splits = parse_splits(v);
  } else if (axis == "overlap") {
    s.overlap = v.get<int>();
  } else {
    throw InvalidInput("unknown sweep axis: " + axis);
  }
}

}  // namespace

fem::ProblemSpec Setting::problem() const {
  if (dim != 2 && dim != 3) throw InvalidInput("setting: dim must be 2 or 3");
  if (static_cast<int>(lower.size()) != dim || static_cast<int>(upper.size()) != dim)
    throw InvalidInput("setting: lower/upper must have dim entries");
  fem::ProblemSpec p;
  p.frequency = frequency;
  p.wave_speed = wave_speed;
  const double scale = domain_in_wavelengths ? wave_speed / frequency : 1.0;
  p.domain.dim = dim;
  for (int a = 0; a < dim; ++a) {
    p.domain.lower[a] = lower[a] * scale;
    p.domain.upper[a] = upper[a] * scale;
  }
  if (hole) {
    grid::Circle c = *hole;
    for (auto& x : c.center) x *= scale;
    c.radius *= scale;
    p.domain.hole = c;
  }
  p.curved_hole = curved_hole;
  check_choice(source, {"gaussian", "plane_wave"}, "source");
  if (source == "gaussian") {
    fem::GaussianPoint g;
    if (source_center.empty()) {
      for (int a = 0; a < dim; ++a) g.center[a] = 0.5 * (p.domain.lower[a] + p.domain.upper[a]);
    } else {
      if (static_cast<int>(source_center.size()) != dim)
        throw InvalidInput("setting: source center must have dim entries");
      for (int a = 0; a < dim; ++a) g.center[a] = source_center[a] * scale;
    }
    p.source = g;
  } else {
    p.source = fem::PlaneWaveScattering{to_point(direction)};
  }
  check_choice(bc, {"pml", "impedance"}, "boundary condition");
  if (bc == "pml") {
    if (!(pml_length > 0.0)) throw InvalidInput("setting: pml_length must be positive");
    p.global_bc = fem::PmlBoundary::uniform(stretch, pml_length * p.wavelength(), dim);
  } else {
    p.global_bc = fem::ImpedanceBoundary{};
  }
  p.n_lambda = n_lambda;
  p.order = order;
  return p;
}

std::optional<dd::DecompositionSpec> Setting::decomposition() const {
  if (!decompose) return std::nullopt;
  dd::DecompositionSpec d;
  d.splits = splits;
  if (dim == 2) d.splits[2] = 1;
  d.overlap = overlap;
  d.convention = convention;
  check_choice(ic, {"pml", "impedance"}, "interface condition");
  d.interface.kind = dd::parse_interface_kind(ic);
  d.interface.layers = interface_layers;
  d.interface.stretch = interface_stretch ? *interface_stretch : stretch;
  return d;
}

Setting parse_setting(const json& j, Setting s) {
  if (j.contains("problem")) {
    const json& p = j.at("problem");
    if (p.contains("dim")) s.dim = p.at("dim").get<int>();
    if (p.contains("frequency")) s.frequency = p.at("frequency").get<double>();
    if (p.contains("wave_speed")) s.wave_speed = p.at("wave_speed").get<double>();
    if (p.contains("lower")) s.lower = p.at("lower").get<std::vector<double>>();
    if (p.contains("upper")) s.upper = p.at("upper").get<std::vector<double>>();
    if (p.contains("domain_units")) {
      const auto u = p.at("domain_units").get<std::string>();
      check_choice(u, {"metres", "wavelengths"}, "domain_units");
      s.domain_in_wavelengths = u == "wavelengths";
    }
    if (p.contains("hole")) {
      if (p.at("hole").is_null()) {
        s.hole.reset();
      } else {
        grid::Circle c;
        c.center = to_point(p.at("hole").at("center").get<std::vector<double>>());
        c.radius = p.at("hole").at("radius").get<double>();
        s.hole = c;
      }
    }
    if (p.contains("curved_hole")) s.curved_hole = p.at("curved_hole").get<bool>();
    if (p.contains("source")) {
      const json& src = p.at("source");
      s.source = src.at("type").get<std::string>();
      if (src.contains("center")) s.source_center = src.at("center").get<std::vector<double>>();
      if (src.contains("direction")) s.direction = src.at("direction").get<std::vector<double>>();
    }
    if (p.contains("boundary")) {
      const json& b = p.at("boundary");
      s.bc = b.at("type").get<std::string>();
      s.stretch = parse_stretch(b, s.stretch);
      if (b.contains("length")) s.pml_length = b.at("length").get<double>();
    }
    if (p.contains("n_lambda")) s.n_lambda = p.at("n_lambda").get<double>();
    if (p.contains("order")) s.order = p.at("order").get<int>();
  }
  if (j.contains("decomposition")) {
    const json& d = j.at("decomposition");
    s.decompose = !d.is_null();
    if (s.decompose) {
      if (d.contains("splits")) s.splits = parse_splits(d.at("splits"));
      if (d.contains("overlap")) s.overlap = d.at("overlap").get<int>();
      if (d.contains("convention"))
        s.convention = dd::parse_overlap_convention(d.at("convention").get<std::string>());
      if (d.contains("interface")) {
        const json& i = d.at("interface");
        s.ic = i.at("type").get<std::string>();
        if (i.contains("layers")) s.interface_layers = i.at("layers").get<int>();
        if (i.contains("stretch") || i.contains("alpha"))
          s.interface_stretch = parse_stretch(i, s.interface_stretch.value_or(s.stretch));
      }
    }
  }
  if (j.contains("solver")) {
    const json& sv = j.at("solver");
    if (sv.contains("kind")) s.solver = parse_solver(sv.at("kind").get<std::string>());
    if (sv.contains("direct_limit")) s.direct_limit = sv.at("direct_limit").get<int>();
    if (sv.contains("gmres")) {
      const json& g = sv.at("gmres");
      if (g.contains("rel_tol")) s.gmres.rel_tol = g.at("rel_tol").get<double>();
      if (g.contains("max_iters")) s.gmres.max_iters = g.at("max_iters").get<int>();
      if (g.contains("restart")) s.gmres.restart = g.at("restart").get<int>();
      if (g.contains("reorthogonalize")) s.gmres.reorthogonalize = g.at("reorthogonalize").get<bool>();
    }
  }
  if (j.contains("reference")) {
    const json& r = j.at("reference");
    s.reference = parse_reference(r.at("kind").get<std::string>());
    if (r.contains("refinement")) s.oracle_refinement = r.at("refinement").get<double>();
  }
  return s;
}

json to_json(const Setting& s) {
  json p;
  p["dim"] = s.dim;
  p["frequency"] = s.frequency;
  p["wave_speed"] = s.wave_speed;
  p["lower"] = s.lower;
  p["upper"] = s.upper;
  p["domain_units"] = s.domain_in_wavelengths ? "wavelengths" : "metres";
  if (s.hole)
    p["hole"] = {{"center", from_point(s.hole->center, 2)}, {"radius", s.hole->radius}};
  else
    p["hole"] = nullptr;
  p["curved_hole"] = s.curved_hole;
  json src = {{"type", s.source}};
  if (!s.source_center.empty()) src["center"] = s.source_center;
  if (s.source == "plane_wave") src["direction"] = s.direction;
  p["source"] = src;
  json b = stretch_json(s.stretch);
  b["type"] = s.bc;
  b["length"] = s.pml_length;
  p["boundary"] = b;
  p["n_lambda"] = s.n_lambda;
  p["order"] = s.order;

  json j;
  j["problem"] = p;
  if (s.decompose) {
    json i = {{"type", s.ic}, {"layers", s.interface_layers}};
    if (s.interface_stretch) {
      i["stretch"] = pml::to_string(s.interface_stretch->kind);
      i["alpha"] = s.interface_stretch->alpha;
    }
    j["decomposition"] = {{"splits", std::vector<int>(s.splits.begin(), s.splits.begin() + s.dim)},
                          {"overlap", s.overlap},
                          {"convention", dd::to_string(s.convention)},
                          {"interface", i}};
  } else {
    j["decomposition"] = nullptr;
  }
  j["solver"] = {{"kind", solver_name(s.solver)},
                 {"direct_limit", s.direct_limit},
                 {"gmres",
                  {{"rel_tol", s.gmres.rel_tol},
                   {"max_iters", s.gmres.max_iters},
                   {"restart", s.gmres.restart},
                   {"reorthogonalize", s.gmres.reorthogonalize}}}};
  j["reference"] = {{"kind", reference_name(s.reference)}, {"refinement", s.oracle_refinement}};
  return j;
}

ExperimentConfig parse_config(const json& j) {
  if (!j.is_object()) throw InvalidInput("config must be a JSON object");
  static const std::set<std::string> known = {"name",   "problem", "decomposition", "solver",
                                              "reference", "sweep", "output",      "seed"};
  for (const auto& [key, value] : j.items())
    if (!known.count(key)) throw InvalidInput("unknown config key: " + key);
  ExperimentConfig c;
  try {
    if (j.contains("name")) c.name = j.at("name").get<std::string>();
    c.base = parse_setting(j);
    if (j.contains("sweep")) {
      for (const auto& [axis, values] : j.at("sweep").items()) {
        if (std::find(kSweepAxes.begin(), kSweepAxes.end(), axis) == kSweepAxes.end())
          throw InvalidInput("unknown sweep axis: " + axis);
        if (!values.is_array()) throw InvalidInput("sweep axis " + axis + " must be a list");
        c.sweep[axis] = values.get<std::vector<json>>();
      }
    }
    if (j.contains("output")) c.output = j.at("output").get<std::string>();
    if (j.contains("seed")) c.seed = j.at("seed").get<std::uint64_t>();
  } catch (const json::exception& e) {
    throw InvalidInput(std::string("config: ") + e.what());
  }
  return c;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidInput("cannot open config file: " + path);
  json j;
  try {
    j = json::parse(in, nullptr, true, true);
  } catch (const json::exception& e) {
    throw InvalidInput("config " + path + ": " + e.what());
  }
  return parse_config(j);
}

json to_json(const ExperimentConfig& c) {
  json j = to_json(c.base);
  j["name"] = c.name;
  json sweep = json::object();
  for (const auto& [axis, values] : c.sweep) sweep[axis] = values;
  j["sweep"] = sweep;
  j["output"] = c.output;
  j["seed"] = c.seed;
  return j;
}

std::vector<Setting> ExperimentConfig::expand() const {
  std::vector<Setting> points{base};
  for (const auto& axis : kSweepAxes) {
    const auto it = sweep.find(axis);
    if (it == sweep.end()) continue;
    std::vector<Setting> next;
    for (const auto& p : points)
      for (const auto& v : it->second) {
        Setting s = p;
        try {
          apply_axis(s, axis, v);
        } catch (const json::exception& e) {
          throw InvalidInput("sweep axis " + axis + ": " + e.what());
        }
        next.push_back(std::move(s));
      }
    points = std::move(next);
  }
  return points;
}

std::vector<std::string> ExperimentConfig::validate() const {
  std::vector<std::string> warnings;
  const auto points = expand();
  for (std::size_t i = 0; i < points.size(); ++i) {
    const Setting& s = points[i];
    const std::string where = "sweep point " + std::to_string(i) + ": ";
    try {
      const fem::ProblemSpec p = s.problem();
      p.validate();
      const grid::BoxDomain comp = p.computational_domain();
      grid::check_mesh_parameters(comp, p.mesh_size());
      s.gmres.validate();
      if (const auto d = s.decomposition()) {
        dd::check_decomposition(grid::cell_counts(comp, p.mesh_size()), s.dim, *d);
        for (const auto& w : d->warnings())
          if (std::find(warnings.begin(), warnings.end(), w) == warnings.end()) warnings.push_back(w);
      } else if (s.solver == SolverKind::Oras) {
        throw InvalidInput("solver 'oras' needs a decomposition");
      }
      if (s.reference == ReferenceKind::Analytic && s.source != "plane_wave")
        throw InvalidInput("analytic reference exists only for plane-wave scattering");
      if (s.reference == ReferenceKind::Oracle && !(s.oracle_refinement >= 2.0))
        throw InvalidInput("oracle refinement must be >= 2");
    } catch (const InvalidInput& e) {
      throw InvalidInput(where + e.what());
    }
  }
  return warnings;
}

std::string to_string(RowStatus s) {
  switch (s) {
    case RowStatus::Ok: return "ok";
    case RowStatus::Unconverged: return "unconverged";
    case RowStatus::OutOfMemory: return "out_of_memory";
    case RowStatus::Error: return "error";
  }
  return "error";
}

ResultRow run_point(const Setting& s, int index) {
  ResultRow row;
  row.index = index;
  row.setting = s;
  const auto t0 = std::chrono::steady_clock::now();
  auto seconds_since = [](auto t) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t).count();
  };
  try {
    const fem::ProblemSpec problem = s.problem();
    const fem::Discretization disc = fem::discretize(problem);
    row.dofs = disc.dofmap.n_dofs;
    ComplexVector u;
    const auto t1 = std::chrono::steady_clock::now();
    if (const auto spec = s.decomposition(); spec && s.solver != SolverKind::Direct) {
      row.warnings = spec->warnings();
      dd::GlobalSolve result = dd::solve_with_oras(disc, *spec, s.gmres);
      row.setup_time = result.setup_time;
      row.iterations = result.report.iterations;
      row.final_residual = result.report.final_relative_residual;
      row.status = result.report.converged ? RowStatus::Ok : RowStatus::Unconverged;
      u = std::move(result.solution);
    } else if (s.solver == SolverKind::Direct ||
               (s.solver == SolverKind::Auto && row.dofs <= s.direct_limit)) {
      const auto lu = solver::factorize(disc.system.A);
      row.setup_time = seconds_since(t1);
      u = lu->solve(disc.system.b);
      ComplexVector r = disc.system.A * u;
      double rn = 0.0, bn = 0.0;
      for (std::size_t i = 0; i < r.size(); ++i) {
        rn += std::norm(r[i] - disc.system.b[i]);
        bn += std::norm(disc.system.b[i]);
      }
      row.final_residual = bn > 0.0 ? std::sqrt(rn / bn) : 0.0;
    } else {
      u = analytic::solve_global(disc, 0, s.gmres.rel_tol);
      row.final_residual = s.gmres.rel_tol;
      row.note = "global system solved by ORAS-GMRES";
    }
    row.solve_time = seconds_since(t1) - row.setup_time;
    if (s.reference == ReferenceKind::Analytic) {
      const auto& hole = problem.domain.hole;
      if (!hole) throw InvalidInput("analytic reference needs a hole");
      const analytic::CircleScatterer sc(*hole, problem.wavenumber(), 0,
                                         analytic::TimeConvention::PlusIOmegaT,
                                         to_point(s.direction));
      row.l2_error = fem::l2_relative_error(
          u, [&sc](const Point& x) { return sc.continued_field(x); }, disc.mesh, disc.dofmap,
          true, problem.domain);
    } else if (s.reference == ReferenceKind::Oracle) {
      const analytic::ReferenceOracle oracle(problem, s.oracle_refinement);
      row.l2_error = fem::l2_relative_error(u, oracle.as_field(), disc.mesh, disc.dofmap, true,
                                            problem.domain);
    }
  } catch (const std::bad_alloc&) {
    row.status = RowStatus::OutOfMemory;
    row.note = "out of memory";
  } catch (const std::exception& e) {
    row.status = RowStatus::Error;
    row.note = e.what();
  }
  row.total_time = seconds_since(t0);
  return row;
}

const std::vector<std::string>& row_columns() {
  static const std::vector<std::string> cols = {
      "index", "dim",      "frequency", "n_lambda",   "order",      "bc",
      "stretch", "pml_length", "ic",     "interface_layers", "splits", "n_sub",
      "overlap", "convention", "solver", "dofs",       "iterations", "converged",
      "status",  "l2_error",   "final_residual", "note"};
  return cols;
}

namespace {

std::vector<std::string> row_cells(const ResultRow& r) {
  const Setting& s = r.setting;
  const auto spec = s.decompose ? s.decomposition() : std::nullopt;
  const bool pml_bc = s.bc == "pml";
  std::string stretch_name;
  if (pml_bc || (spec && spec->interface.kind == dd::InterfaceKind::Pml))
    stretch_name = pml::to_string(s.stretch.kind);
  std::string solver;
  if (spec && s.solver != SolverKind::Direct)
    solver = "oras";
  else if (s.solver == SolverKind::Direct || (s.solver == SolverKind::Auto && r.dofs <= s.direct_limit))
    solver = "direct";
  else
    solver = "oras_global";
  int n_sub = 1;
  if (spec)
    for (int a = 0; a < s.dim; ++a) n_sub *= spec->splits[a];
  const bool failed = r.status == RowStatus::OutOfMemory || r.status == RowStatus::Error;
  return {std::to_string(r.index),
          std::to_string(s.dim),
          fmt(s.frequency),
          fmt(s.n_lambda),
          std::to_string(s.order),
          s.bc,
          stretch_name,
          pml_bc ? fmt(s.pml_length) : "",
          spec ? s.ic : "",
          spec && spec->interface.kind == dd::InterfaceKind::Pml ? std::to_string(s.interface_layers) : "",
          spec ? splits_string(spec->splits, s.dim) : "",
          spec ? std::to_string(n_sub) : "",
          spec ? std::to_string(s.overlap) : "",
          spec ? dd::to_string(s.convention) : "",
          solver,
          r.dofs > 0 ? std::to_string(r.dofs) : "",
          failed ? "" : std::to_string(r.iterations),
          failed ? "" : (r.status == RowStatus::Ok ? "true" : "false"),
          to_string(r.status),
          r.l2_error ? fmt(*r.l2_error, "%.6e") : "",
          failed ? "" : fmt(r.final_residual, "%.3e"),
          r.note};
}

std::string csv_escape(const std::string& v) {
  if (v.find_first_of(",\"\n") == std::string::npos) return v;
  std::string out = "\"";
  for (char c : v) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

void write_csv_line(const std::vector<std::string>& cells, std::ostream& out) {
  for (std::size_t i = 0; i < cells.size(); ++i) out << (i ? "," : "") << csv_escape(cells[i]);
  out << "\n";
}

}  // namespace

Table to_table(const std::vector<ResultRow>& rows) {
  Table t;
  t.header = row_columns();
  for (const auto& r : rows) t.rows.push_back(row_cells(r));
  return t;
}

std::string timings_header() { return "index,setup_time,solve_time,total_time"; }

std::string timings_line(const ResultRow& r) {
  return std::to_string(r.index) + "," + fmt(r.setup_time, "%.3f") + "," +
         fmt(r.solve_time, "%.3f") + "," + fmt(r.total_time, "%.3f");
}

std::vector<ResultRow> run_experiment(const ExperimentConfig& config, const RunOptions& options) {
  const auto warnings = config.validate();
  if (options.log)
    for (const auto& w : warnings) *options.log << "warning: " << w << "\n";
  const auto points = config.expand();

  std::ofstream rows_out, timings_out;
  if (options.write_files) {
    std::filesystem::create_directories(options.out_dir);
    const auto rows_path = std::filesystem::path(options.out_dir) / config.output;
    const auto timings_path = std::filesystem::path(options.out_dir) / "timings.csv";
    rows_out.open(rows_path);
    timings_out.open(timings_path);
    if (!rows_out || !timings_out)
      throw std::runtime_error("cannot write results to " + options.out_dir);
    write_csv_line(row_columns(), rows_out);
    timings_out << timings_header() << "\n";
    rows_out.flush();
    timings_out.flush();
  }

  std::vector<ResultRow> rows(points.size());
  std::vector<char> done(points.size(), 0);
  std::size_t next_to_write = 0;
  std::mutex mu;
  auto finish = [&](std::size_t i, ResultRow row) {
    std::lock_guard lock(mu);
    if (options.log) {
      *options.log << "[" << i + 1 << "/" << points.size() << "] dofs=" << row.dofs
                   << " status=" << to_string(row.status) << " iterations=" << row.iterations;
      if (row.l2_error) *options.log << " l2_error=" << fmt(*row.l2_error, "%.6e");
      if (!row.note.empty()) *options.log << " (" << row.note << ")";
      *options.log << " " << fmt(row.total_time, "%.1f") << "s\n";
      options.log->flush();
    }
    rows[i] = std::move(row);
    done[i] = 1;
    // Keep file order equal to sweep order even when points finish out of order.
    while (next_to_write < points.size() && done[next_to_write]) {
      if (options.write_files) {
        write_csv_line(row_cells(rows[next_to_write]), rows_out);
        timings_out << timings_line(rows[next_to_write]) << "\n";
        rows_out.flush();
        timings_out.flush();
      }
      ++next_to_write;
    }
  };

  if (options.parallel_points) {
    const int saved = num_threads();
    const int workers = std::max(1, std::min<int>(saved, static_cast<int>(points.size())));
    set_num_threads(std::max(1, saved / workers));
    try {
      parallel_for(
          static_cast<int>(points.size()),
          [&](int begin, int end, int) {
            for (int i = begin; i < end; ++i) finish(i, run_point(points[i], i));
          },
          workers);
    } catch (...) {
      set_num_threads(saved);
      throw;
    }
    set_num_threads(saved);
  } else {
    for (std::size_t i = 0; i < points.size(); ++i) finish(i, run_point(points[i], static_cast<int>(i)));
  }
  return rows;
}

Table read_csv(std::istream& in) {
  Table t;
  std::string line;
  bool header = true;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::string cell;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
      const char c = line[i];
      if (quoted) {
        if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
          cell += '"';
          ++i;
        } else if (c == '"') {
          quoted = false;
        } else {
          cell += c;
        }
      } else if (c == '"') {
        quoted = true;
      } else if (c == ',') {
        cells.push_back(std::move(cell));
        cell.clear();
      } else {
        cell += c;
      }
    }
    if (quoted) throw InvalidInput("read_csv: unterminated quote");
    cells.push_back(std::move(cell));
    if (header) {
      t.header = std::move(cells);
      header = false;
    } else {
      if (cells.size() != t.header.size())
        throw InvalidInput("read_csv: row has " + std::to_string(cells.size()) +
                           " cells, header has " + std::to_string(t.header.size()));
      t.rows.push_back(std::move(cells));
    }
  }
  if (header) throw InvalidInput("read_csv: missing header row");
  return t;
}

void write_csv(const Table& t, std::ostream& out) {
  write_csv_line(t.header, out);
  for (const auto& r : t.rows) write_csv_line(r, out);
}

TableFormat parse_table_format(const std::string& name) {
  if (name == "csv") return TableFormat::Csv;
  if (name == "md" || name == "markdown") return TableFormat::Markdown;
  throw InvalidInput("unknown table format: " + name);
}

void emit_tables(const Table& rows, TableFormat format, std::ostream& out) {
  Table t = rows;
  auto column = [&](const std::string& name) {
    const auto it = std::find(t.header.begin(), t.header.end(), name);
    return it == t.header.end() ? -1 : static_cast<int>(it - t.header.begin());
  };
  const int it_col = column("iterations");
  const int status_col = column("status");
  const int conv_col = column("converged");
  if (it_col >= 0)
    for (auto& r : t.rows) {
      const std::string status = status_col >= 0 ? r[status_col] : "";
      if (status == "out_of_memory" || status == "error")
        r[it_col] = "−";
      else if (status == "unconverged" || (conv_col >= 0 && r[conv_col] == "false"))
        r[it_col] = "•";
    }
  if (format == TableFormat::Csv) {
    write_csv(t, out);
    return;
  }
  auto md_cell = [](std::string v) {
    std::string o;
    for (char c : v) o += c == '|' ? std::string("\\|") : std::string(1, c);
    return o;
  };
  out << "|";
  for (const auto& h : t.header) out << " " << md_cell(h) << " |";
  out << "\n|";
  for (std::size_t i = 0; i < t.header.size(); ++i) out << "---|";
  out << "\n";
  for (const auto& r : t.rows) {
    out << "|";
    for (const auto& c : r) out << " " << md_cell(c) << " |";
    out << "\n";
  }
}

}  // namespace helmdd::bench
