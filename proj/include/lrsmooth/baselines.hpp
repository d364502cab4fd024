#pragma once

#include <Eigen/Dense>

#include "lrsmooth/relaxation.hpp"
#include "lrsmooth/solve_result.hpp"

namespace lrsmooth {

enum class FistaStep { Combined, LaplacianOnly };

struct FistaConfig {
  double lambda_fit = 2.2222e-4;
  double gamma = 6.45e-7;
  double step = 0; // 0: automatic
  FistaStep step_rule = FistaStep::Combined;
  int max_iters = 1500;
  double iterate_tol = 1e-10;
  double sigma = 0; // only used to report terminal feasibility

  void validate() const;
};

struct LbfgsConfig {
  double lambda_fit = 1.1111e-4;
  double gamma = 6.45e-7;
  int rank_k = 40;
  int memory = 10;
  int max_iters = 1500;
  double grad_tol = 1e-8;
  double iterate_tol = 1e-10;
  double c1 = 1e-4;
  double c2 = 0.9;
  int max_line_search = 40;
  double sigma = 0; // only used to report terminal feasibility
  int gradient_check_every = 0; // 0 disables the periodic finite-difference check

  void validate() const;
};

struct SmoothOnlyConfig {
  double sigma = 0;
  double ridge = 1e-10;
  double lambda_init = 1.0;
  double newton_tol = 1e-10;
  int newton_max = 200;
  DerivativeMode derivative = DerivativeMode::Analytic;
};

/// Proximal operator of alpha ||.||_*: U max(S - alpha, 0) V^T.
Eigen::MatrixXd svt(Eigen::MatrixXd const &G, double alpha);

/// Nuclear norm plus smooth penalty, solved with FISTA.
SolveResult fista_solve(Problem const &problem, FistaConfig const &config);

/// t_{k+1} = (1 + sqrt(1 + 4 t_k^2)) / 2
double fista_momentum(double t);

struct ObjectiveGrad {
  double value = 0;
  Eigen::MatrixXd grad_L;
  Eigen::MatrixXd grad_R;
};

/// (lambda/2)||A(LR^T) - b||^2 + 1/(2 gamma)||Lap(LR^T)||^2 + 1/2||L||^2 + 1/2||R||^2
/// and its gradient. The smoothing term is dropped when gamma is infinite.
ObjectiveGrad lbfgs_objective_grad(Eigen::MatrixXd const &L, Eigen::MatrixXd const &R, Problem const &problem,
                                   double lambda_fit, double gamma);

SolveResult lbfgs_solve(Problem const &problem, LbfgsConfig const &config);

/// min ||Lap(W)||^2 s.t. ||A(W) - b|| <= sigma, through the same multiplier
/// search as the W-update with gamma = 1, d = 0 and a small ridge.
SolveResult smoothing_only_solve(Problem const &problem, SmoothOnlyConfig const &config);

} // namespace lrsmooth
