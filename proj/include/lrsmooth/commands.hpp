#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <vector>

#include "lrsmooth/grid.hpp"
#include "lrsmooth/run_config.hpp"

namespace lrsmooth {

inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 2;
inline constexpr int kExitSolverFailure = 3;

/// Flags shared by every command. A missing config means all defaults.
struct CommonOptions {
  std::optional<std::filesystem::path> config;
  std::filesystem::path out = ".";
  std::optional<std::uint64_t> seed;
};

RunConfig resolve_config(CommonOptions const &opt);

/// Writes grid.meta, truth.csv, observed.csv, dataset.ini and config.ini.
int cmd_generate(CommonOptions const &opt, std::ostream &log);

/// Reads a generate output directory and writes completed.csv, factor CSVs
/// (factorized solvers only), history.csv, report.{csv,json}, run.ini,
/// config.ini and timing.csv. Returns kExitSolverFailure when the solver
/// breaks down; the report then carries the failure.
int cmd_solve(CommonOptions const &opt, std::filesystem::path const &data_dir, std::ostream &log);

/// One comparison.csv row per solve directory, in the given order. All runs
/// must share the same data hash. With require_vr_best, returns
/// kExitSolverFailure unless a vr run has the strictly smallest rms_int.
int cmd_compare(CommonOptions const &opt, std::vector<std::filesystem::path> const &runs, bool require_vr_best,
                std::ostream &log);

struct SvdOptions {
  Layout layout = Layout::BlockTessellated;
  std::optional<int> count; // defaults to output.sv_count
  bool masked = false;      // zero the unobserved entries first
  std::optional<std::filesystem::path> meta; // defaults to grid.meta beside the tensor
};

/// Leading singular values of a tensor CSV's matricization, written to
/// decay.csv. Counts beyond the smaller matrix dimension are clipped.
int cmd_svd(CommonOptions const &opt, std::filesystem::path const &tensor_csv, SvdOptions const &svd,
            std::ostream &log);

} // namespace lrsmooth
