#pragma once

#include <complex>
#include <memory>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "lrsmooth/numerics/sparse_ldlt.hpp"
#include "lrsmooth/operators.hpp"
#include "lrsmooth/solve_result.hpp"

namespace lrsmooth {

/// Sampling and smoothing operators plus the observations b, ordered like
/// sampler.observed_indices().
struct Problem {
  SamplingOperator sampler;
  SmoothingOperator smoother;
  Eigen::VectorXd b;

  Index rows() const { return sampler.rows(); }
  Index cols() const { return sampler.cols(); }
  void validate() const;
};

enum class DerivativeMode { Analytic, ComplexStep };

struct RelaxConfig {
  double gamma = 6.45e-7;
  double rho0 = 2.0;         // coupling weight; the reciprocal of eta
  double rho_factor = 4.17;  // rho <- rho_factor * rho at schedule boundaries
  bool rho_factor_from_spectrum = false; // sum of singular values of A^T b over k
  int schedule_period = 30;
  double sigma = 0.0;
  int rank_k = 40;
  int max_iters = 90;
  double iterate_tol = 1e-10;
  double newton_tol = 1e-10;
  int newton_max = 100;
  double lambda_init = 0.0111;
  DerivativeMode derivative = DerivativeMode::Analytic;
  double complex_step_h = 1e-20;

  void validate() const;
};

/// argmin_L 1/2||L||^2 + rho/2 ||W - L R^T||^2 = rho W R (I + rho R^T R)^{-1}.
Eigen::MatrixXd update_L(Eigen::MatrixXd const &W, Eigen::MatrixXd const &R, double rho);
/// argmin_R 1/2||R||^2 + rho/2 ||W - L R^T||^2 = rho W^T L (I + rho L^T L)^{-1}.
Eigen::MatrixXd update_R(Eigen::MatrixXd const &W, Eigen::MatrixXd const &L, double rho);

/// 1/2||L||^2 + 1/2||R||^2 + 1/(2 gamma)||Lap w||^2 + rho/2 ||W - L R^T||^2.
/// The smoothing term is skipped when the smoother is empty.
double relaxed_objective(Eigen::MatrixXd const &W, FactorPair const &f, SmoothingOperator const &smoother,
                         double gamma, double rho);

/// The penalized W-subproblem
///   w(lambda) = M(lambda)^{-1} (rho d + lambda A^T b)
/// with cached factorizations. The sparsity analysis is done once; each new
/// lambda or rho only triggers a numeric refactorization. A system without
/// smoothing rows is diagonal and solved entrywise.
class WSubproblem {
 public:
  WSubproblem(NormalSystem system, SamplingOperator const &sampler, Eigen::VectorXd b);

  NormalSystem const &system() const { return system_; }
  void set_rho(double rho);
  void set_target(Eigen::VectorXd d);
  Eigen::VectorXd const &target() const { return d_; }

  Eigen::VectorXd solve(double lambda);
  VectorX<std::complex<double>> solve(std::complex<double> lambda);
  /// M(lambda)^{-1} rhs, reusing the factorization for lambda.
  Eigen::VectorXd solve_with(double lambda, Eigen::VectorXd const &rhs);

  double misfit(Eigen::VectorXd const &w) const;
  SamplingOperator const &sampler() const { return *sampler_; }
  Eigen::VectorXd const &observations() const { return b_; }
  int factorizations() const { return factorizations_; }

 private:
  void ensure_factor(double lambda);

  NormalSystem system_;
  SamplingOperator const *sampler_;
  Eigen::VectorXd b_;
  Eigen::VectorXd atb_;
  Eigen::VectorXd d_;
  std::shared_ptr<LdltSymbolic const> symbolic_;
  SpdFactorization real_;
  std::optional<double> factored_lambda_;
  double factored_rho_ = 0;
  int factorizations_ = 0;
};

/// Solve of the penalized subproblem at one lambda (no caching).
Eigen::VectorXd solve_w_lambda(NormalSystem const &system, Eigen::VectorXd const &d, Eigen::VectorXd const &b,
                               SamplingOperator const &sampler, double lambda);

/// f(lambda) = sigma - ||A w - b||_2.
double misfit_gap(Eigen::VectorXd const &w, Eigen::VectorXd const &b, SamplingOperator const &sampler, double sigma);

/// f'(lambda) of f(lambda) = sigma - ||A w(lambda) - b||. Analytic mode uses one
/// extra back-solve for dw/dlambda = M^{-1} A^T (b - A w); complex-step mode
/// solves w(lambda + i h) and returns Im(f)/h. Throws ArgumentError when the
/// residual is zero (the constraint is already met).
double dmisfit_dlambda(WSubproblem &sub, double lambda, Eigen::VectorXd const &w, DerivativeMode mode,
                       double h = 1e-20);

struct RootResult {
  double lambda = 0;
  Eigen::VectorXd w;
  double misfit = 0;
  int iterations = 0;
  bool converged = false;
  std::vector<std::pair<double, double>> path; // (lambda, misfit) per evaluation
};

struct RootOptions {
  double sigma = 0;
  double lambda_init = 0.0111;
  double tol = 1e-10;
  int max_iters = 100;
  DerivativeMode derivative = DerivativeMode::Analytic;
  double h = 1e-20;
};

/// Smallest lambda >= 0 with ||A w(lambda) - b|| <= sigma. Returns lambda = 0
/// when w(0) already satisfies the bound; otherwise Newton on f(lambda), kept
/// inside a bracket that is grown by doubling and falls back to bisection.
/// Converged means |misfit - sigma| <= tol (misfit <= tol when sigma = 0).
RootResult root_find_lambda(WSubproblem &sub, RootOptions const &opt);

/// Block-coordinate descent on the relaxed joint objective.
SolveResult vr_solve(Problem const &problem, RelaxConfig const &config);

/// vr_solve without the smoothing term; the W-update is entrywise.
SolveResult lowrank_only_solve(Problem const &problem, RelaxConfig const &config);

/// Balanced rank-k factors of X from its truncated SVD (zero-padded when
/// k exceeds the rank dimension).
FactorPair spectral_factors(Eigen::MatrixXd const &X, int k);

} // namespace lrsmooth
