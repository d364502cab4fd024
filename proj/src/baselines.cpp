#include "lrsmooth/baselines.hpp"

#include <chrono>
#include <cmath>
#include <deque>
#include <limits>
#include <string>

#include "lrsmooth/numerics/svd.hpp"

namespace lrsmooth {

using Clock = std::chrono::steady_clock;

namespace {

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Shrunk {
  Eigen::MatrixXd X;
  double nuclear = 0;
};

Shrunk shrink(Eigen::MatrixXd const &G, double alpha) {
  auto const svd = thin_svd(G);
  Eigen::VectorXd const s = (svd.S.array() - alpha).cwiseMax(0.0);
  return {svd.U * s.asDiagonal() * svd.V.transpose(), s.sum()};
}

/// Smooth part of the penalized objectives: (lambda/2)||A X - b||^2 + 1/(2 gamma)||Lap X||^2.
struct SmoothPart {
  Problem const &problem;
  double lambda_fit;
  double inv_gamma;

  double value(Eigen::MatrixXd const &X) const {
    double v = 0.5 * lambda_fit * (problem.sampler.apply(X) - problem.b).squaredNorm();
    if (inv_gamma > 0) v += 0.5 * inv_gamma * problem.smoother.apply(X.reshaped()).squaredNorm();
    return v;
  }

  Eigen::MatrixXd gradient(Eigen::MatrixXd const &X) const {
    auto const &A = problem.sampler;
    Eigen::MatrixXd g = lambda_fit * A.adjoint(A.apply(X) - problem.b);
    if (inv_gamma > 0) {
      Eigen::VectorXd const lx = problem.smoother.apply(X.reshaped());
      g.reshaped() += inv_gamma * problem.smoother.adjoint(lx);
    }
    return g;
  }
};

double inverse_gamma(double gamma) {
  return std::isinf(gamma) ? 0.0 : 1.0 / gamma;
}

} // namespace

void FistaConfig::validate() const {
  if (!(lambda_fit > 0)) throw ArgumentError("FistaConfig: lambda_fit must be positive");
  if (!(gamma > 0)) throw ArgumentError("FistaConfig: gamma must be positive");
  if (!(step >= 0)) throw ArgumentError("FistaConfig: step must be nonnegative");
  if (max_iters < 1) throw ArgumentError("FistaConfig: max_iters must be positive");
  if (!(iterate_tol > 0)) throw ArgumentError("FistaConfig: iterate_tol must be positive");
}

void LbfgsConfig::validate() const {
  if (!(lambda_fit > 0)) throw ArgumentError("LbfgsConfig: lambda_fit must be positive");
  if (!(gamma > 0)) throw ArgumentError("LbfgsConfig: gamma must be positive");
  if (rank_k < 1) throw ArgumentError("LbfgsConfig: rank_k must be positive");
  if (memory < 1) throw ArgumentError("LbfgsConfig: memory must be at least 1");
  if (max_iters < 1) throw ArgumentError("LbfgsConfig: max_iters must be positive");
  if (!(0 < c1 && c1 < c2 && c2 < 1)) throw ArgumentError("LbfgsConfig: need 0 < c1 < c2 < 1");
  if (!(grad_tol >= 0) || !(iterate_tol > 0)) throw ArgumentError("LbfgsConfig: invalid tolerance");
}

Eigen::MatrixXd svt(Eigen::MatrixXd const &G, double alpha) {
  if (!(alpha >= 0)) throw ArgumentError("svt: alpha must be nonnegative");
  return shrink(G, alpha).X;
}

double fista_momentum(double t) {
  return 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
}

SolveResult fista_solve(Problem const &problem, FistaConfig const &config) {
  problem.validate();
  config.validate();
  auto const t0 = Clock::now();
  SolveResult out;
  out.solver = "fista";
  out.sigma = config.sigma;

  SmoothPart const smooth{problem, config.lambda_fit, inverse_gamma(config.gamma)};
  double alpha = config.step;
  if (alpha == 0) {
    auto const &A = problem.sampler;
    Eigen::VectorXd const mask = A.gram_diagonal();
    SpectralEstimate est;
    if (config.step_rule == FistaStep::Combined) {
      est = spectral_norm(
          [&](Eigen::VectorXd const &x) {
            Eigen::VectorXd y = config.lambda_fit * mask.cwiseProduct(x);
            if (smooth.inv_gamma > 0) y += smooth.inv_gamma * problem.smoother.adjoint(problem.smoother.apply(x));
            return y;
          },
          A.size(), 5000, 1e-8);
    } else {
      est = spectral_norm(
          [&](Eigen::VectorXd const &x) { return Eigen::VectorXd(problem.smoother.adjoint(problem.smoother.apply(x))); },
          A.size(), 5000, 1e-8);
    }
    if (!est.converged) out.warnings.push_back("power iteration did not converge; using its last estimate");
    if (!(est.value > 0)) throw NumericalError("fista_solve: smooth part has zero curvature; set step explicitly");
    alpha = 1.0 / est.value;
  }

  Eigen::MatrixXd X = problem.sampler.adjoint(problem.b);
  Eigen::MatrixXd X_prev = X;
  double t_prev = 1.0, t = 1.0;
  for (int k = 1; k <= config.max_iters; ++k) {
    Eigen::MatrixXd const Y = X + ((t_prev - 1.0) / t) * (X - X_prev);
    Eigen::MatrixXd const grad = smooth.gradient(Y);
    auto next = shrink(Y - alpha * grad, alpha);

    double const fy = smooth.value(Y);
    double const fx = smooth.value(next.X);
    Eigen::MatrixXd const step = next.X - Y;
    double const bound = fy + grad.cwiseProduct(step).sum() + step.squaredNorm() / (2 * alpha);
    if (fx > bound + 1e-9 * std::max(1.0, std::abs(bound))) ++out.majorization_violations;

    double const change = (next.X - X).norm();
    X_prev = std::move(X);
    X = std::move(next.X);
    t_prev = t;
    t = fista_momentum(t);

    IterationRecord rec;
    rec.iter = k;
    rec.objective = fx + next.nuclear;
    rec.misfit = (problem.sampler.apply(X) - problem.b).norm();
    rec.seconds = seconds_since(t0);
    out.history.push_back(rec);
    out.iterations = k;
    if (!std::isfinite(rec.objective)) {
      out.failed = true;
      out.failure = "non-finite objective at iteration " + std::to_string(k);
      break;
    }
    if (change < config.iterate_tol) {
      out.converged = true;
      break;
    }
  }
  if (out.majorization_violations > 0) {
    out.warnings.push_back(std::to_string(out.majorization_violations) + " iterations violated the step-size majorization");
  }
  out.W = std::move(X);
  out.terminal_feasibility = (problem.sampler.apply(out.W) - problem.b).norm() - config.sigma;
  out.wall_seconds = seconds_since(t0);
  return out;
}

ObjectiveGrad lbfgs_objective_grad(Eigen::MatrixXd const &L, Eigen::MatrixXd const &R, Problem const &problem,
                                   double lambda_fit, double gamma) {
  if (L.cols() != R.cols() || L.rows() != problem.rows() || R.rows() != problem.cols()) {
    throw DimensionError("lbfgs_objective_grad: factor shapes do not match the problem");
  }
  SmoothPart const smooth{problem, lambda_fit, inverse_gamma(gamma)};
  Eigen::MatrixXd const X = L * R.transpose();
  ObjectiveGrad out;
  out.value = smooth.value(X) + 0.5 * (L.squaredNorm() + R.squaredNorm());
  Eigen::MatrixXd const G = smooth.gradient(X);
  out.grad_L = G * R + L;
  out.grad_R = G.transpose() * L + R;
  return out;
}

namespace {

/// Joint variable x = [vec L; vec R].
struct FactorObjective {
  Problem const &problem;
  LbfgsConfig const &config;
  Index n, m, k;
  int evaluations = 0;

  double operator()(Eigen::VectorXd const &x, Eigen::VectorXd &grad) {
    ++evaluations;
    auto const L = x.head(n * k).reshaped(n, k);
    auto const R = x.tail(m * k).reshaped(m, k);
    auto og = lbfgs_objective_grad(L, R, problem, config.lambda_fit, config.gamma);
    grad.resize(x.size());
    grad.head(n * k) = og.grad_L.reshaped();
    grad.tail(m * k) = og.grad_R.reshaped();
    return og.value;
  }
};

struct LineSearchResult {
  bool ok = false;
  double step = 0;
  double value = 0;
};

double cubic_minimizer(double a, double fa, double ga, double b, double fb, double gb) {
  // Minimizer of the cubic interpolating (a, fa, ga) and (b, fb, gb), safeguarded to the interior.
  double const d1 = ga + gb - 3 * (fa - fb) / (a - b);
  double const disc = d1 * d1 - ga * gb;
  double const lo = std::min(a, b), hi = std::max(a, b);
  if (disc >= 0) {
    double const d2 = std::copysign(std::sqrt(disc), b - a);
    double const z = b - (b - a) * (gb + d2 - d1) / (gb - ga + 2 * d2);
    if (std::isfinite(z) && z > lo + 0.1 * (hi - lo) && z < hi - 0.1 * (hi - lo)) return z;
  }
  return 0.5 * (a + b);
}

/// Strong Wolfe line search (bracketing phase, then zoom).
LineSearchResult wolfe_search(FactorObjective &fn, Eigen::VectorXd const &x, double f0, Eigen::VectorXd const &g0,
                              Eigen::VectorXd const &dir, double step0, LbfgsConfig const &cfg, Eigen::VectorXd &x_out,
                              Eigen::VectorXd &g_out) {
  double const dg0 = g0.dot(dir);
  LineSearchResult res;
  if (!(dg0 < 0)) return res;
  auto eval = [&](double a, double &f, double &dg) {
    x_out = x + a * dir;
    f = fn(x_out, g_out);
    dg = g_out.dot(dir);
  };
  auto accept = [&](double a, double f) {
    res.ok = true;
    res.step = a;
    res.value = f;
    return res;
  };
  auto zoom = [&](double lo, double flo, double glo, double hi, double fhi, double ghi, int budget) {
    for (int i = 0; i < budget; ++i) {
      double const a = cubic_minimizer(lo, flo, glo, hi, fhi, ghi);
      double f, dg;
      eval(a, f, dg);
      if (f > f0 + cfg.c1 * a * dg0 || f >= flo) {
        hi = a, fhi = f, ghi = dg;
      } else {
        if (std::abs(dg) <= -cfg.c2 * dg0) return accept(a, f);
        if (dg * (hi - lo) >= 0) hi = lo, fhi = flo, ghi = glo;
        lo = a, flo = f, glo = dg;
      }
      if (std::abs(hi - lo) <= 1e-16 * std::max(1.0, std::abs(lo))) break;
    }
    return res;
  };

  double a_prev = 0, f_prev = f0, g_prev = dg0;
  double a = step0;
  for (int i = 0; i < cfg.max_line_search; ++i) {
    double f, dg;
    eval(a, f, dg);
    if (!std::isfinite(f) || f > f0 + cfg.c1 * a * dg0 || (i > 0 && f >= f_prev)) {
      if (!std::isfinite(f)) {
        a = 0.5 * (a_prev + a);
        continue;
      }
      return zoom(a_prev, f_prev, g_prev, a, f, dg, cfg.max_line_search);
    }
    if (std::abs(dg) <= -cfg.c2 * dg0) return accept(a, f);
    if (dg >= 0) return zoom(a, f, dg, a_prev, f_prev, g_prev, cfg.max_line_search);
    a_prev = a, f_prev = f, g_prev = dg;
    a *= 2;
  }
  return res;
}

/// Central-difference check of the directional derivative along a fixed
/// pseudo-random direction.
bool gradient_check(FactorObjective &fn, Eigen::VectorXd const &x, Eigen::VectorXd const &g) {
  Eigen::VectorXd v(x.size());
  for (Index i = 0; i < v.size(); ++i) v[i] = std::sin(1.0 + 0.7 * static_cast<double>(i));
  v.normalize();
  double const h = 1e-6 * std::max(1.0, x.norm());
  Eigen::VectorXd scratch;
  double const fp = fn(x + h * v, scratch);
  double const fm = fn(x - h * v, scratch);
  double const fd = (fp - fm) / (2 * h);
  double const an = g.dot(v);
  // Rounding in fp - fm bounds how well fd can resolve a small derivative.
  double const rounding = 100 * std::numeric_limits<double>::epsilon() * std::max(std::abs(fp), std::abs(fm)) / h;
  return std::abs(fd - an) <= 1e-6 * std::max(std::abs(an), std::abs(fd)) + rounding;
}

} // namespace

SolveResult lbfgs_solve(Problem const &problem, LbfgsConfig const &config) {
  problem.validate();
  config.validate();
  auto const t0 = Clock::now();
  SolveResult out;
  out.solver = "lbfgs";
  out.sigma = config.sigma;

  Index const n = problem.rows(), m = problem.cols(), k = config.rank_k;
  FactorPair const init = spectral_factors(problem.sampler.adjoint(problem.b), config.rank_k);
  Eigen::VectorXd x(n * k + m * k);
  x.head(n * k) = init.L.reshaped();
  x.tail(m * k) = init.R.reshaped();

  FactorObjective fn{problem, config, n, m, k};
  Eigen::VectorXd g;
  double f = fn(x, g);
  std::deque<Eigen::VectorXd> s_hist, y_hist;
  std::deque<double> rho_hist;
  int gradient_failures = 0;

  Eigen::VectorXd x_new, g_new;
  for (int it = 1; it <= config.max_iters; ++it) {
    if (g.norm() <= config.grad_tol) {
      out.converged = true;
      break;
    }
    // Two-loop recursion.
    Eigen::VectorXd q = -g;
    std::vector<double> alphas(s_hist.size());
    for (std::size_t i = s_hist.size(); i-- > 0;) {
      alphas[i] = rho_hist[i] * s_hist[i].dot(q);
      q -= alphas[i] * y_hist[i];
    }
    if (!s_hist.empty()) q *= s_hist.back().dot(y_hist.back()) / y_hist.back().squaredNorm();
    for (std::size_t i = 0; i < s_hist.size(); ++i) {
      double const beta = rho_hist[i] * y_hist[i].dot(q);
      q += (alphas[i] - beta) * s_hist[i];
    }
    double step0 = 1.0;
    if (s_hist.empty()) step0 = std::min(1.0, 1.0 / std::max(g.norm(), 1e-300));

    auto ls = wolfe_search(fn, x, f, g, q, step0, config, x_new, g_new);
    if (!ls.ok) {
      // Steepest-descent fallback with backtracking on sufficient decrease.
      out.warnings.push_back("iteration " + std::to_string(it) + ": line search failed, taking a gradient step");
      s_hist.clear(), y_hist.clear(), rho_hist.clear();
      double a = 1.0 / std::max(g.norm(), 1e-300);
      bool moved = false;
      for (int i = 0; i < 60; ++i, a *= 0.5) {
        x_new = x - a * g;
        double const fn_new = fn(x_new, g_new);
        if (fn_new <= f - config.c1 * a * g.squaredNorm()) {
          ls.ok = true, ls.value = fn_new, moved = true;
          break;
        }
      }
      if (!moved) {
        out.failed = true;
        out.failure = "no descent step found at iteration " + std::to_string(it);
        break;
      }
    }
    Eigen::VectorXd const s = x_new - x;
    Eigen::VectorXd const y = g_new - g;
    double const sy = s.dot(y);
    if (sy > 1e-12 * s.norm() * y.norm()) {
      s_hist.push_back(s);
      y_hist.push_back(y);
      rho_hist.push_back(1.0 / sy);
      if (static_cast<int>(s_hist.size()) > config.memory) {
        s_hist.pop_front(), y_hist.pop_front(), rho_hist.pop_front();
      }
    }
    double const change = s.norm();
    x.swap(x_new);
    g.swap(g_new);
    f = ls.value;

    if (config.gradient_check_every > 0 && it % config.gradient_check_every == 0 && !gradient_check(fn, x, g)) {
      ++gradient_failures;
    }

    auto const L = x.head(n * k).reshaped(n, k);
    auto const R = x.tail(m * k).reshaped(m, k);
    IterationRecord rec;
    rec.iter = it;
    rec.objective = f;
    rec.misfit = (problem.sampler.apply(L * R.transpose()) - problem.b).norm();
    rec.seconds = seconds_since(t0);
    out.history.push_back(rec);
    out.iterations = it;
    if (change < config.iterate_tol) {
      out.converged = true;
      break;
    }
  }
  if (gradient_failures > 0) {
    out.warnings.push_back(std::to_string(gradient_failures) + " periodic gradient checks failed");
  }
  FactorPair fp{x.head(n * k).reshaped(n, k), x.tail(m * k).reshaped(m, k)};
  out.W = fp.L * fp.R.transpose();
  out.factors = std::move(fp);
  out.terminal_feasibility = (problem.sampler.apply(out.W) - problem.b).norm() - config.sigma;
  out.wall_seconds = seconds_since(t0);
  return out;
}

SolveResult smoothing_only_solve(Problem const &problem, SmoothOnlyConfig const &config) {
  problem.validate();
  if (!(config.sigma >= 0)) throw ArgumentError("smoothing_only_solve: sigma must be nonnegative");
  if (!(config.ridge > 0)) throw ArgumentError("smoothing_only_solve: ridge must be positive");
  auto const t0 = Clock::now();
  SolveResult out;
  out.solver = "smooth_only";
  out.sigma = config.sigma;

  WSubproblem sub(NormalSystem(problem.smoother, problem.sampler, 1.0, config.ridge), problem.sampler, problem.b);
  RootOptions opt{config.sigma, config.lambda_init, config.newton_tol, config.newton_max, config.derivative, 1e-20};
  RootResult root = root_find_lambda(sub, opt);
  out.W = root.w.reshaped(problem.rows(), problem.cols());
  out.lambda = root.lambda;
  out.iterations = 1;
  out.converged = root.converged;
  if (!root.converged) out.warnings.push_back("multiplier search stopped at misfit " + std::to_string(root.misfit));

  IterationRecord rec;
  rec.iter = 1;
  rec.objective = problem.smoother.apply(root.w).squaredNorm();
  rec.misfit = root.misfit;
  rec.seconds = seconds_since(t0);
  out.history.push_back(rec);
  out.terminal_feasibility = root.misfit - config.sigma;
  out.wall_seconds = seconds_since(t0);
  return out;
}

} // namespace lrsmooth
