#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "lrsmooth/grid.hpp"
#include "lrsmooth/operators.hpp"
#include "lrsmooth/solve_result.hpp"

namespace lrsmooth {

struct EvalReport {
  std::string solver;
  bool converged = false;
  bool failed = false;
  std::string failure;
  int iterations = 0;
  double sigma = 0;
  double terminal_feasibility = 0;
  double rms_obs = 0;
  double rms_int = 0;
  double lambda = 0;
  int schedule_period = 0; // 0 when the solver has no coupling schedule
  int monotone_violations = 0;
  int majorization_violations = 0;
  double wall_time = 0;
  std::vector<double> sv_decay;
  std::vector<IterationRecord> history;

  bool operator==(EvalReport const &) const = default;
};

/// sqrt(mean over idx of (X - X_true)^2), unweighted. idx holds column-major
/// linear indices.
double rms(Eigen::MatrixXd const &X, Eigen::MatrixXd const &X_true, std::span<Index const> idx);

/// RMS over observed and over unobserved entries of the tensor.
struct RmsSplit {
  double obs = 0;
  double interp = 0;
};
RmsSplit rms_split(GridArray<double> const &X, GridArray<double> const &X_true, SamplingMask const &mask);

/// ||A(X) - b||_2 - sigma, signed.
double terminal_feasibility(Eigen::MatrixXd const &X, Eigen::VectorXd const &b, SamplingOperator const &sampler,
                            double sigma);

/// Leading `count` singular values.
std::vector<double> sv_decay(Eigen::MatrixXd const &M, Index count);

enum class ReportFormat { Csv, Json };

struct ExportOptions {
  ReportFormat format = ReportFormat::Csv;
  /// Wall-clock fields (wall_time, per-iteration seconds) are omitted when false.
  bool include_timing = true;
};

/// CSV: three tables separated by one blank line, headed
/// "metric,value", "iter,objective,misfit,gap[,seconds]" and
/// "index,singular_value". Floats use 17 significant digits; LF endings.
std::string format_report(EvalReport const &report, ExportOptions const &opt = {});
void export_report(EvalReport const &report, std::filesystem::path const &path, ExportOptions const &opt = {});

/// Parses either format; the objective history of a coupling-scheduled solver
/// must be non-increasing within each schedule period (1e-9 relative slack).
EvalReport parse_report(std::string_view text, ReportFormat format, std::string_view source_name = "<report>");
EvalReport load_report(std::filesystem::path const &path);
void validate_report(EvalReport const &report);

EvalReport make_report(SolveResult const &result, GridArray<double> const &completed, GridArray<double> const &truth,
                       SamplingMask const &mask, Index sv_count, int schedule_period);

} // namespace lrsmooth
