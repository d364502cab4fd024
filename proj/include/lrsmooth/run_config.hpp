#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>

#include "lrsmooth/metrics.hpp"
#include "lrsmooth/pipeline.hpp"

namespace lrsmooth {

enum class Preset { Reference, Benchmark };

/// Everything a command reads from a config file. Sections:
///   [run] [grid] [sources] [field] [noise] [mask]   dataset generation
///   [solver] [vr] [fista] [lbfgs] [smooth_only]     solving
///   [output]                                        artifacts
/// Solver defaults come from solver.preset; explicit keys override them.
struct RunConfig {
  std::uint64_t seed = 1;
  DatasetSpec dataset;
  Preset preset = Preset::Benchmark;
  SolverSpec solver = SolverSpec::benchmark(SolverName::Vr);
  /// Coupling as its reciprocal; solver.relax.rho0 is kept equal to 1 / eta.
  double eta = 0.5;
  ReportFormat format = ReportFormat::Csv;
  int sv_count = 64;

  /// Reseeds the dataset from `seed`.
  void set_seed(std::uint64_t s);
};

char const *to_string(Preset p);

/// Strict: unknown sections or keys, duplicates and malformed values throw
/// ValidationError naming the "section.key" path and line.
RunConfig parse_run_config(std::string_view text, std::string_view source_name = "<config>");
RunConfig load_run_config(std::filesystem::path const &path);

/// Every key with its effective value, in a fixed order. Parsing the result
/// gives back the same RunConfig.
std::string format_run_config(RunConfig const &config);

} // namespace lrsmooth
