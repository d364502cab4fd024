#pragma once

// Reference computations built from dense Eigen solves, independent of the
// library's sparse factorization and multiplier search.

#include <cmath>

#include <Eigen/Dense>

#include "lrsmooth/grid.hpp"
#include "lrsmooth/operators.hpp"
#include "lrsmooth/relaxation.hpp"
#include "test_support.hpp"

namespace lrsmooth::testing {

/// Random receiver-by-source problem on an nx x ny grid with ns sources.
inline Problem random_problem(Rng &rng, int nx, int ny, int ns, double p_obs,
                              Layout layout = Layout::ReceiverBySource) {
  ReceiverGrid g;
  g.nx = nx;
  g.ny = ny;
  std::vector<int> order(ns);
  for (int s = 0; s < ns; ++s) order[s] = s;
  IndexMap const map = layout == Layout::ReceiverBySource
                           ? IndexMap::receiver_by_source(nx, ny, order)
                           : IndexMap::block(nx, ny, order, default_block_layout(ns).first,
                                             default_block_layout(ns).second);
  std::vector<Index> idx;
  for (Index k = 0; k < map.size(); ++k) {
    if (rng.uniform01() < p_obs) idx.push_back(k);
  }
  if (idx.size() < 2) idx = {0, map.size() - 1};
  SamplingOperator A(map.rows(), map.cols(), idx);
  Eigen::VectorXd b(A.count());
  for (Index k = 0; k < b.size(); ++k) b[k] = rng.gaussian(0, 1);
  return Problem{A, build_laplacian(g, map), b};
}

inline Eigen::MatrixXd dense_normal_matrix(Problem const &pb, double gamma, double rho, double lambda) {
  Index const n = pb.sampler.size();
  Eigen::MatrixXd L = Eigen::MatrixXd(pb.smoother.matrix());
  Eigen::MatrixXd M = rho * Eigen::MatrixXd::Identity(n, n);
  if (L.rows() > 0) M += (L.transpose() * L) / gamma;
  for (Index k : pb.sampler.observed_indices()) M(k, k) += lambda;
  return M;
}

inline Eigen::VectorXd scatter(Problem const &pb, Eigen::VectorXd const &y) {
  Eigen::VectorXd out = Eigen::VectorXd::Zero(pb.sampler.size());
  auto const &idx = pb.sampler.observed_indices();
  for (std::size_t k = 0; k < idx.size(); ++k) out[idx[k]] = y[Index(k)];
  return out;
}

inline Eigen::VectorXd dense_w(Problem const &pb, double gamma, double rho, double lambda, Eigen::VectorXd const &d) {
  Eigen::MatrixXd const M = dense_normal_matrix(pb, gamma, rho, lambda);
  Eigen::VectorXd const rhs = rho * d + lambda * scatter(pb, pb.b);
  return M.ldlt().solve(rhs);
}

inline double dense_misfit(Problem const &pb, Eigen::VectorXd const &w) {
  double s = 0;
  auto const &idx = pb.sampler.observed_indices();
  for (std::size_t k = 0; k < idx.size(); ++k) s += std::pow(w[idx[k]] - pb.b[Index(k)], 2);
  return std::sqrt(s);
}

struct BisectionRoot {
  double lambda;
  double misfit;
};

/// Bisection on g(lambda) = misfit(w(lambda)) - sigma until the bracket is
/// narrower than tol (relative to its upper end).
inline BisectionRoot bisection_lambda(Problem const &pb, double gamma, double rho, Eigen::VectorXd const &d,
                                      double sigma, double tol = 1e-12) {
  auto g = [&](double lam) { return dense_misfit(pb, dense_w(pb, gamma, rho, lam, d)); };
  if (g(0.0) <= sigma) return {0.0, g(0.0)};
  double lo = 0, hi = 1;
  while (g(hi) > sigma) {
    lo = hi;
    hi *= 2;
  }
  while (hi - lo > tol * hi) {
    double const mid = 0.5 * (lo + hi);
    (g(mid) > sigma ? lo : hi) = mid;
  }
  return {hi, g(hi)};
}

} // namespace lrsmooth::testing
