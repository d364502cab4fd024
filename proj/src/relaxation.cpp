#include "lrsmooth/relaxation.hpp"

#include <chrono>
#include <cmath>
#include <limits>
#include <string>

#include "lrsmooth/numerics/svd.hpp"

namespace lrsmooth {

using Clock = std::chrono::steady_clock;

void Problem::validate() const {
  if (sampler.count() < 1) throw ArgumentError("Problem: no observed entries");
  if (b.size() != sampler.count()) throw DimensionError("Problem: b length does not match observed count");
  if (smoother.size() != sampler.size()) throw DimensionError("Problem: smoother does not act on the sampled matrix");
  if (!b.allFinite()) throw ArgumentError("Problem: b has non-finite entries");
}

void RelaxConfig::validate() const {
  if (!(gamma > 0)) throw ArgumentError("RelaxConfig: gamma must be positive");
  if (!(rho0 > 0)) throw ArgumentError("RelaxConfig: rho0 must be positive");
  if (!(rho_factor >= 1)) throw ArgumentError("RelaxConfig: rho_factor must be at least 1");
  if (schedule_period < 1) throw ArgumentError("RelaxConfig: schedule_period must be positive");
  if (!(sigma >= 0)) throw ArgumentError("RelaxConfig: sigma must be nonnegative");
  if (rank_k < 1) throw ArgumentError("RelaxConfig: rank_k must be positive");
  if (max_iters < 1) throw ArgumentError("RelaxConfig: max_iters must be positive");
  if (!(iterate_tol > 0) || !(newton_tol > 0)) throw ArgumentError("RelaxConfig: tolerances must be positive");
  if (newton_max < 1) throw ArgumentError("RelaxConfig: newton_max must be positive");
  if (!(lambda_init >= 0)) throw ArgumentError("RelaxConfig: lambda_init must be nonnegative");
  if (!(complex_step_h > 0)) throw ArgumentError("RelaxConfig: complex_step_h must be positive");
}

Eigen::MatrixXd update_L(Eigen::MatrixXd const &W, Eigen::MatrixXd const &R, double rho) {
  if (W.cols() != R.rows()) throw DimensionError("update_L: W and R are not conformable");
  if (!(rho > 0)) throw ArgumentError("update_L: rho must be positive");
  Eigen::MatrixXd gram = rho * (R.transpose() * R);
  gram.diagonal().array() += 1.0;
  Eigen::LLT<Eigen::MatrixXd> llt(gram);
  // L (I + rho R^T R) = rho W R, solved on the transpose.
  Eigen::MatrixXd rhs = rho * (W * R);
  return llt.solve(rhs.transpose()).transpose();
}

Eigen::MatrixXd update_R(Eigen::MatrixXd const &W, Eigen::MatrixXd const &L, double rho) {
  return update_L(W.transpose(), L, rho);
}

double relaxed_objective(Eigen::MatrixXd const &W, FactorPair const &f, SmoothingOperator const &smoother,
                         double gamma, double rho) {
  double value = 0.5 * (f.L.squaredNorm() + f.R.squaredNorm());
  if (!smoother.empty()) value += smoother.apply(W.reshaped()).squaredNorm() / (2 * gamma);
  value += 0.5 * rho * (W - f.L * f.R.transpose()).squaredNorm();
  return value;
}

FactorPair spectral_factors(Eigen::MatrixXd const &X, int k) {
  if (k < 1) throw ArgumentError("spectral_factors: k must be positive");
  auto const svd = thin_svd(X);
  Index const r = std::min<Index>(k, svd.S.size());
  FactorPair f{Eigen::MatrixXd::Zero(X.rows(), k), Eigen::MatrixXd::Zero(X.cols(), k)};
  Eigen::VectorXd const root = svd.S.head(r).cwiseSqrt();
  f.L.leftCols(r) = svd.U.leftCols(r) * root.asDiagonal();
  f.R.leftCols(r) = svd.V.leftCols(r) * root.asDiagonal();
  return f;
}

// ---------------------------------------------------------------------------
// W-subproblem

WSubproblem::WSubproblem(NormalSystem system, SamplingOperator const &sampler, Eigen::VectorXd b)
    : system_{std::move(system)}, sampler_{&sampler}, b_{std::move(b)} {
  if (b_.size() != sampler.count()) throw DimensionError("WSubproblem: b length does not match sampler");
  if (system_.size() != sampler.size()) throw DimensionError("WSubproblem: system size does not match sampler");
  atb_ = sampler.adjoint_vec<double>(b_);
  d_ = Eigen::VectorXd::Zero(system_.size());
}

void WSubproblem::set_rho(double rho) {
  system_.set_rho(rho);
}

void WSubproblem::set_target(Eigen::VectorXd d) {
  if (d.size() != system_.size()) throw DimensionError("WSubproblem: target length mismatch");
  d_ = std::move(d);
}

void WSubproblem::ensure_factor(double lambda) {
  if (factored_lambda_ && *factored_lambda_ == lambda && factored_rho_ == system_.rho()) return;
  auto const M = system_.matrix_at<double>(lambda);
  if (!symbolic_) {
    real_.factor(M);
    symbolic_ = real_.symbolic();
  } else {
    real_.refactor(std::span<double const>(M.valuePtr(), static_cast<std::size_t>(M.nonZeros())));
  }
  factored_lambda_ = lambda;
  factored_rho_ = system_.rho();
  ++factorizations_;
}

Eigen::VectorXd WSubproblem::solve_with(double lambda, Eigen::VectorXd const &rhs) {
  if (!(lambda >= 0)) throw ArgumentError("WSubproblem: lambda must be nonnegative");
  if (system_.diagonal()) {
    Eigen::VectorXd diag = Eigen::VectorXd::Constant(system_.size(), system_.rho()) + lambda * system_.mask_diagonal();
    return rhs.cwiseQuotient(diag);
  }
  ensure_factor(lambda);
  return real_.solve(rhs);
}

Eigen::VectorXd WSubproblem::solve(double lambda) {
  Eigen::VectorXd rhs = system_.rho() * d_ + lambda * atb_;
  return solve_with(lambda, rhs);
}

VectorX<std::complex<double>> WSubproblem::solve(std::complex<double> lambda) {
  using C = std::complex<double>;
  VectorX<C> rhs = (system_.rho() * d_).cast<C>() + lambda * atb_.cast<C>();
  if (system_.diagonal()) {
    VectorX<C> out(rhs.size());
    for (Index i = 0; i < rhs.size(); ++i) out[i] = rhs[i] / (C(system_.rho()) + lambda * system_.mask_diagonal()[i]);
    return out;
  }
  if (!symbolic_) ensure_factor(lambda.real());
  ComplexLdlt cf(symbolic_);
  auto const M = system_.matrix_at<C>(lambda);
  cf.refactor(std::span<C const>(M.valuePtr(), static_cast<std::size_t>(M.nonZeros())));
  return cf.solve(rhs);
}

double WSubproblem::misfit(Eigen::VectorXd const &w) const {
  return (sampler_->apply_vec<double>(w) - b_).norm();
}

Eigen::VectorXd solve_w_lambda(NormalSystem const &system, Eigen::VectorXd const &d, Eigen::VectorXd const &b,
                               SamplingOperator const &sampler, double lambda) {
  if (!(lambda >= 0)) throw ArgumentError("solve_w_lambda: lambda must be nonnegative");
  WSubproblem sub(system, sampler, b);
  sub.set_target(d);
  return sub.solve(lambda);
}

double misfit_gap(Eigen::VectorXd const &w, Eigen::VectorXd const &b, SamplingOperator const &sampler, double sigma) {
  return sigma - (sampler.apply_vec<double>(w) - b).norm();
}

double dmisfit_dlambda(WSubproblem &sub, double lambda, Eigen::VectorXd const &w, DerivativeMode mode, double h) {
  auto const &sampler = sub.sampler();
  Eigen::VectorXd const r = sampler.apply_vec<double>(w) - sub.observations();
  double const g = r.norm();
  if (!(g > 0)) throw ArgumentError("dmisfit_dlambda: residual is zero; the misfit constraint is already met");
  if (mode == DerivativeMode::ComplexStep) {
    if (!(h > 0)) throw ArgumentError("dmisfit_dlambda: complex step must be positive");
    using C = std::complex<double>;
    VectorX<C> const wc = sub.solve(C(lambda, h));
    VectorX<C> const rc = sampler.apply_vec<C>(wc) - sub.observations().cast<C>();
    // Transpose (not conjugate) inner product keeps the norm analytic in lambda.
    C const gc = std::sqrt(C((rc.transpose() * rc).value()));
    return -gc.imag() / h;
  }
  // dw/dlambda = M^{-1} A^T (b - A w)
  Eigen::VectorXd const dw = sub.solve_with(lambda, sampler.adjoint_vec<double>(Eigen::VectorXd(-r)));
  return -r.dot(sampler.apply_vec<double>(dw)) / g;
}

RootResult root_find_lambda(WSubproblem &sub, RootOptions const &opt) {
  if (!(opt.sigma >= 0)) throw ArgumentError("root_find_lambda: sigma must be nonnegative");
  if (!(opt.tol > 0)) throw ArgumentError("root_find_lambda: tol must be positive");
  RootResult res;
  auto evaluate = [&](double lambda) {
    res.w = sub.solve(lambda);
    res.lambda = lambda;
    res.misfit = sub.misfit(res.w);
    res.path.emplace_back(lambda, res.misfit);
  };
  auto done = [&] {
    if (opt.sigma == 0) return res.misfit <= opt.tol;
    return std::abs(res.misfit - opt.sigma) <= opt.tol;
  };

  evaluate(0.0);
  if (res.misfit <= opt.sigma || done()) {
    res.converged = true;
    return res;
  }

  // Invariant: misfit(lo) > sigma, misfit(hi) <= sigma.
  double lo = 0.0;
  double hi = std::numeric_limits<double>::infinity();
  double lambda = opt.lambda_init > 0 ? opt.lambda_init : 1.0;
  for (int it = 1; it <= opt.max_iters; ++it) {
    evaluate(lambda);
    res.iterations = it;
    if (done()) {
      res.converged = true;
      return res;
    }
    if (res.misfit > opt.sigma) {
      lo = std::max(lo, lambda);
    } else {
      hi = std::min(hi, lambda);
    }
    if (std::isfinite(hi) && hi - lo <= 4 * std::numeric_limits<double>::epsilon() * hi) break;

    double next = std::numeric_limits<double>::quiet_NaN();
    double const f = opt.sigma - res.misfit;
    double fprime = 0;
    if (res.misfit > 0) fprime = dmisfit_dlambda(sub, lambda, res.w, opt.derivative, opt.h);
    if (fprime > 0 && std::isfinite(fprime)) next = lambda - f / fprime;
    bool const inside = std::isfinite(next) && next > lo && next < hi;
    if (!inside) next = std::isfinite(hi) ? 0.5 * (lo + hi) : 2.0 * std::max(lambda, lo);
    lambda = next;
  }
  // Return the best feasible iterate seen when the budget runs out.
  if (std::isfinite(hi) && res.lambda != hi) evaluate(hi);
  res.converged = done();
  return res;
}

// ---------------------------------------------------------------------------
// Block-coordinate descent

namespace {

SolveResult relaxation_loop(Problem const &problem, RelaxConfig const &config, bool smoothing, char const *name) {
  problem.validate();
  config.validate();
  auto const t0 = Clock::now();
  SolveResult out;
  out.solver = name;
  out.sigma = config.sigma;

  auto const &sampler = problem.sampler;
  Index const n = problem.rows(), m = problem.cols();
  SmoothingOperator const smoother = smoothing ? problem.smoother : SmoothingOperator::none(sampler.size());

  Eigen::MatrixXd W = sampler.adjoint(problem.b);
  FactorPair f = spectral_factors(W, config.rank_k);

  double rho_factor = config.rho_factor;
  if (config.rho_factor_from_spectrum) {
    rho_factor = std::max(1.0, singular_values(W).sum() / config.rank_k);
  }

  double rho = config.rho0;
  WSubproblem sub(NormalSystem(smoother, sampler, config.gamma, rho), sampler, problem.b);
  RootOptions ropt{config.sigma, config.lambda_init, config.newton_tol, config.newton_max, config.derivative,
                   config.complex_step_h};

  double prev_objective = std::numeric_limits<double>::infinity();
  for (int t = 1; t <= config.max_iters; ++t) {
    if (t > 1 && (t - 1) % config.schedule_period == 0) {
      rho *= rho_factor;
      sub.set_rho(rho);
      prev_objective = std::numeric_limits<double>::infinity();
    }
    f.L = update_L(W, f.R, rho);
    f.R = update_R(W, f.L, rho);

    Eigen::MatrixXd const D = f.L * f.R.transpose();
    sub.set_target(D.reshaped());
    RootResult root = root_find_lambda(sub, ropt);
    if (!root.converged) {
      out.warnings.push_back("iteration " + std::to_string(t) + ": multiplier search stopped at misfit " +
                             std::to_string(root.misfit));
    }
    if (root.lambda > 0) ropt.lambda_init = root.lambda;
    out.lambda = root.lambda;

    Eigen::MatrixXd Wn = root.w.reshaped(n, m);
    double const change = (Wn - W).norm();
    W = std::move(Wn);

    IterationRecord rec;
    rec.iter = t;
    rec.objective = relaxed_objective(W, f, smoother, config.gamma, rho);
    rec.misfit = root.misfit;
    rec.gap = (W - f.L * f.R.transpose()).norm();
    rec.seconds = std::chrono::duration<double>(Clock::now() - t0).count();
    if (rec.objective > prev_objective + 1e-9 * std::abs(prev_objective)) ++out.monotone_violations;
    prev_objective = rec.objective;
    out.history.push_back(rec);
    out.iterations = t;

    if (!std::isfinite(rec.objective)) {
      out.failed = true;
      out.failure = "non-finite objective at iteration " + std::to_string(t);
      break;
    }
    if (change < config.iterate_tol) {
      out.converged = true;
      break;
    }
  }

  out.W = std::move(W);
  out.factors = std::move(f);
  double const misfit = (sampler.apply(out.W) - problem.b).norm();
  out.terminal_feasibility = misfit - config.sigma;
  if (out.terminal_feasibility > config.newton_tol && !out.failed) {
    out.warnings.push_back("terminal misfit exceeds sigma by " + std::to_string(out.terminal_feasibility));
  }
  if (out.monotone_violations > 0) {
    out.warnings.push_back(std::to_string(out.monotone_violations) + " relaxed-objective increases within a schedule period");
  }
  out.wall_seconds = std::chrono::duration<double>(Clock::now() - t0).count();
  return out;
}

} // namespace

SolveResult vr_solve(Problem const &problem, RelaxConfig const &config) {
  return relaxation_loop(problem, config, true, config.sigma > 0 ? "vr" : "vr_exact");
}

SolveResult lowrank_only_solve(Problem const &problem, RelaxConfig const &config) {
  return relaxation_loop(problem, config, false, "lowrank_only");
}

} // namespace lrsmooth
