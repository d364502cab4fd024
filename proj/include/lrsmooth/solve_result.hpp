#pragma once

#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace lrsmooth {

struct FactorPair {
  Eigen::MatrixXd L; // n x k
  Eigen::MatrixXd R; // m x k
};

struct IterationRecord {
  int iter = 0;
  double objective = 0;
  double misfit = 0; // ||A(W) - b||_2
  double gap = 0;    // ||W - L R^T||_F, 0 for solvers without factors
  double seconds = 0;

  bool operator==(IterationRecord const &) const = default;
};

struct SolveResult {
  std::string solver;
  Eigen::MatrixXd W;
  std::optional<FactorPair> factors;
  std::vector<IterationRecord> history;
  double sigma = 0;
  double terminal_feasibility = 0; // ||A(W) - b||_2 - sigma
  double lambda = 0;               // final multiplier, where one exists
  int iterations = 0;
  bool converged = false;
  bool failed = false;
  std::string failure;
  std::vector<std::string> warnings;
  int monotone_violations = 0;
  int majorization_violations = 0;
  double wall_seconds = 0;
};

} // namespace lrsmooth
