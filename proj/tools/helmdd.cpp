#include <sys/resource.h>

#include <fstream>
#include <iostream>
#include <thread>

#include <CLI11.hpp>

#include "helmdd/bench.hpp"
#include "helmdd/parallel.hpp"

namespace {

using namespace helmdd;

constexpr int kExitOk = 0;
constexpr int kExitConfig = 1;
constexpr int kExitFailedRows = 2;

void limit_memory(std::size_t megabytes) {
  rlimit lim{};
  lim.rlim_cur = lim.rlim_max = static_cast<rlim_t>(megabytes) << 20;
  if (setrlimit(RLIMIT_AS, &lim) != 0) std::cerr << "warning: could not set memory limit\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Overlapping Schwarz solvers for the Helmholtz equation: experiment driver"};
  app.require_subcommand(1);

  int threads = 0;
  std::optional<std::uint64_t> seed;
  app.add_option("--threads", threads, "Worker threads (default: hardware concurrency)")
      ->check(CLI::NonNegativeNumber);
  app.add_option("--seed", seed, "Overrides the config seed");

  std::string config_path, out_dir = ".";
  bool print_config = false, parallel_points = false;
  std::size_t memory_mb = 0;
  auto* run = app.add_subcommand("run", "Run every sweep point of a config");
  run->add_option("config", config_path, "Config file (JSON)")->required();
  run->add_option("--out", out_dir, "Output directory for rows.csv and timings.csv");
  run->add_option("--threads", threads, "Worker threads")->check(CLI::NonNegativeNumber);
  run->add_option("--seed", seed, "Overrides the config seed");
  run->add_flag("--print-config", print_config, "Print the normalised config before running");
  run->add_flag("--parallel-points", parallel_points, "Run sweep points concurrently");
  run->add_option("--memory-limit-mb", memory_mb, "Address-space limit; exhaustion gives failed rows");

  auto* validate = app.add_subcommand("validate", "Check a config without running it");
  validate->add_option("config", config_path, "Config file (JSON)")->required();
  validate->add_flag("--print-config", print_config, "Print the normalised config");

  std::string rows_path, format_name = "md", output_path;
  auto* tables = app.add_subcommand("tables", "Render a rows.csv as a table");
  tables->add_option("rows", rows_path, "rows.csv written by 'run'")->required();
  tables->add_option("--format", format_name, "md or csv");
  tables->add_option("--output", output_path, "Write to this file instead of stdout");

  CLI11_PARSE(app, argc, argv);
  set_num_threads(threads > 0 ? threads : static_cast<int>(std::max(1u, std::thread::hardware_concurrency())));

  try {
    if (*tables) {
      const auto format = bench::parse_table_format(format_name);
      std::ifstream in(rows_path);
      if (!in) throw InvalidInput("cannot open " + rows_path);
      const auto table = bench::read_csv(in);
      if (output_path.empty()) {
        bench::emit_tables(table, format, std::cout);
      } else {
        std::ofstream out(output_path);
        if (!out) {
          std::cerr << "error: cannot write " << output_path << "\n";
          return kExitFailedRows;
        }
        bench::emit_tables(table, format, out);
      }
      return kExitOk;
    }

    auto config = bench::load_config(config_path);
    if (seed) config.seed = *seed;
    if (print_config) {
      const auto normalised = bench::to_json(config);
      // Round trip: the printed form must parse back to the same config.
      if (bench::to_json(bench::parse_config(normalised)) != normalised)
        throw InvalidInput("config does not survive a print/parse round trip");
      std::cout << normalised.dump(2) << "\n";
    }

    if (*validate) {
      for (const auto& w : config.validate()) std::cerr << "warning: " << w << "\n";
      std::cerr << config.expand().size() << " sweep point(s) ok\n";
      return kExitOk;
    }

    config.validate();
    if (memory_mb > 0) limit_memory(memory_mb);
    bench::RunOptions options;
    options.out_dir = out_dir;
    options.parallel_points = parallel_points;
    options.log = &std::cerr;
    const auto rows = bench::run_experiment(config, options);
    for (const auto& r : rows)
      if (r.status == bench::RowStatus::OutOfMemory || r.status == bench::RowStatus::Error)
        return kExitFailedRows;
    return kExitOk;
  } catch (const InvalidInput& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitFailedRows;
  }
}
