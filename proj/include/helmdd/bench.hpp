#pragma once

#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "helmdd/dd.hpp"
#include "helmdd/fem.hpp"
#include "helmdd/solver.hpp"

namespace helmdd::bench {

enum class SolverKind { Auto, Direct, Oras };
enum class ReferenceKind { None, Analytic, Oracle };

/// One fully specified run. Lengths of the domain and hole are in metres, or
/// in wavelengths when `domain_in_wavelengths` is set; the global PML length
/// is always in wavelengths and the interface layer in cells.
struct Setting {
  int dim = 2;
  double frequency = 1.0;
  double wave_speed = 1.0;
  std::vector<double> lower{0.0, 0.0};
  std::vector<double> upper{10.0, 10.0};
  bool domain_in_wavelengths = false;
  std::optional<grid::Circle> hole;
  bool curved_hole = true;
  std::string source = "gaussian";  // gaussian | plane_wave
  std::vector<double> source_center;  // default: box centre
  std::vector<double> direction{1.0, 0.0};
  std::string bc = "pml";  // pml | impedance
  pml::StretchFunction stretch;
  double pml_length = 1.0;  // wavelengths
  double n_lambda = 10.0;
  int order = 2;

  bool decompose = false;
  grid::Index3 splits{1, 1, 1};
  int overlap = 2;
  dd::OverlapConvention convention = dd::OverlapConvention::PerSide;
  std::string ic = "pml";  // pml | impedance
  int interface_layers = 1;
  std::optional<pml::StretchFunction> interface_stretch;  // default: `stretch`

  SolverKind solver = SolverKind::Auto;
  int direct_limit = 400000;
  solver::GmresConfig gmres;
  ReferenceKind reference = ReferenceKind::None;
  double oracle_refinement = 2.0;

  fem::ProblemSpec problem() const;
  std::optional<dd::DecompositionSpec> decomposition() const;
};

/// Sweep axes, expanded as a cartesian product in this order.
inline const std::vector<std::string> kSweepAxes = {
    "frequency", "n_lambda", "order", "pml_length", "bc_ic", "bc", "ic",
    "stretch", "interface_layers", "splits", "overlap"};

struct ExperimentConfig {
  std::string name = "experiment";
  Setting base;
  std::map<std::string, std::vector<nlohmann::json>> sweep;
  std::string output = "rows.csv";
  std::uint64_t seed = 0;

  /// Sweep points in deterministic order; the empty sweep yields one point.
  std::vector<Setting> expand() const;
  /// Checks every sweep point; throws InvalidInput on the first bad one.
  /// Returns non-fatal warnings.
  std::vector<std::string> validate() const;
};

ExperimentConfig parse_config(const nlohmann::json& j);
ExperimentConfig load_config(const std::string& path);
nlohmann::json to_json(const ExperimentConfig& config);
nlohmann::json to_json(const Setting& s);
Setting parse_setting(const nlohmann::json& j, Setting base = {});

enum class RowStatus { Ok, Unconverged, OutOfMemory, Error };
std::string to_string(RowStatus s);

struct ResultRow {
  int index = 0;
  Setting setting;
  long dofs = 0;
  int iterations = 0;
  RowStatus status = RowStatus::Ok;
  std::optional<double> l2_error;
  double final_residual = 0.0;
  double setup_time = 0.0;
  double solve_time = 0.0;
  double total_time = 0.0;
  std::string note;
  std::vector<std::string> warnings;
};

/// Runs one sweep point; failures become sentinel rows.
ResultRow run_point(const Setting& s, int index);

struct RunOptions {
  std::string out_dir = ".";
  bool write_files = true;
  bool parallel_points = false;
  std::ostream* log = nullptr;
};

/// Validates, then runs every sweep point, appending rows to
/// <out_dir>/<output> and timings to <out_dir>/timings.csv as they finish.
std::vector<ResultRow> run_experiment(const ExperimentConfig& config, const RunOptions& options);

/// Table of strings with a header; the common form of stored and rendered rows.
struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

/// Column order of rows.csv.
const std::vector<std::string>& row_columns();
Table to_table(const std::vector<ResultRow>& rows);
std::string timings_header();
std::string timings_line(const ResultRow& row);

Table read_csv(std::istream& in);
void write_csv(const Table& t, std::ostream& out);

enum class TableFormat { Csv, Markdown };
TableFormat parse_table_format(const std::string& name);

/// Renders stored rows with the sentinels: "•" for runs that did not
/// converge and "−" for runs that failed.
void emit_tables(const Table& rows, TableFormat format, std::ostream& out);

}  // namespace helmdd::bench
