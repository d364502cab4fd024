#include "lrsmooth/operators.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "lrsmooth/numerics/rng.hpp"

namespace lrsmooth {

SamplingOperator::SamplingOperator(Index rows, Index cols, std::vector<Index> observed)
    : rows_{rows}, cols_{cols}, observed_{std::move(observed)} {
  if (rows < 1 || cols < 1) throw DimensionError("SamplingOperator: empty matrix");
  for (std::size_t k = 0; k < observed_.size(); ++k) {
    if (observed_[k] < 0 || observed_[k] >= rows * cols) throw ArgumentError("SamplingOperator: index out of range");
    if (k && observed_[k] <= observed_[k - 1]) throw ArgumentError("SamplingOperator: indices must strictly increase");
  }
}

SamplingOperator SamplingOperator::from_mask(SamplingMask const &mask, IndexMap const &map) {
  if (!mask.flags().same_shape(map.nx(), map.ny(), map.ns())) {
    throw DimensionError("SamplingOperator::from_mask: mask shape does not match index map");
  }
  std::vector<Index> observed;
  observed.reserve(mask.count());
  for (int s = 0; s < map.ns(); ++s) {
    for (int q = 0; q < map.ny(); ++q) {
      for (int p = 0; p < map.nx(); ++p) {
        if (mask(p, q, s)) observed.push_back(map.linear(p, q, s));
      }
    }
  }
  std::sort(observed.begin(), observed.end());
  return SamplingOperator(map.rows(), map.cols(), std::move(observed));
}

Eigen::VectorXd SamplingOperator::apply(Eigen::MatrixXd const &X) const {
  if (X.rows() != rows_ || X.cols() != cols_) throw DimensionError("SamplingOperator::apply: shape mismatch");
  return apply_vec<double>(X.reshaped());
}

Eigen::MatrixXd SamplingOperator::adjoint(Eigen::VectorXd const &y) const {
  return adjoint_vec<double>(y).reshaped(rows_, cols_);
}

Eigen::VectorXd SamplingOperator::gram_diagonal() const {
  Eigen::VectorXd d = Eigen::VectorXd::Zero(size());
  for (Index k : observed_) d[k] = 1.0;
  return d;
}

Eigen::VectorXd SmoothingOperator::apply(Eigen::VectorXd const &w) const {
  if (w.size() != size()) throw DimensionError("SmoothingOperator::apply: length mismatch");
  // Each row is evaluated as sum_j a_ij (w_j - w_c) + (sum_j a_ij) w_c with c
  // the row's largest entry, so zero-sum stencils map constants to exactly 0.
  Eigen::VectorXd out(edge_count());
  for (Index i = 0; i < by_row_.outerSize(); ++i) {
    Index c = -1;
    double big = -1, row_sum = 0;
    for (RowMajor::InnerIterator it(by_row_, i); it; ++it) {
      row_sum += it.value();
      if (std::abs(it.value()) > big) {
        big = std::abs(it.value());
        c = it.col();
      }
    }
    double acc = 0;
    for (RowMajor::InnerIterator it(by_row_, i); it; ++it) {
      if (it.col() != c) acc += it.value() * (w[it.col()] - w[c]);
    }
    out[i] = c < 0 ? 0.0 : acc + row_sum * w[c];
  }
  return out;
}

Eigen::VectorXd SmoothingOperator::adjoint(Eigen::VectorXd const &y) const {
  if (y.size() != edge_count()) throw DimensionError("SmoothingOperator::adjoint: length mismatch");
  return rows_.transpose() * y;
}

Eigen::SparseMatrix<double> SmoothingOperator::gram() const {
  Eigen::SparseMatrix<double> g = (rows_.transpose() * rows_).pruned(0.0);
  g.makeCompressed();
  return g;
}

SmoothingOperator build_laplacian(ReceiverGrid const &grid, IndexMap const &map) {
  if (grid.nx != map.nx() || grid.ny != map.ny()) throw DimensionError("build_laplacian: grid does not match view");
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(static_cast<std::size_t>(map.size()) * 5);
  int const nx = map.nx(), ny = map.ny();
  for (int s = 0; s < map.ns(); ++s) {
    for (int q = 0; q < ny; ++q) {
      for (int p = 0; p < nx; ++p) {
        Index const row = map.linear(p, q, s);
        int deg = 0;
        auto neighbor = [&](int pp, int qq) {
          if (pp < 0 || pp >= nx || qq < 0 || qq >= ny) return;
          trip.emplace_back(row, map.linear(pp, qq, s), 1.0);
          ++deg;
        };
        neighbor(p - 1, q);
        neighbor(p + 1, q);
        neighbor(p, q - 1);
        neighbor(p, q + 1);
        trip.emplace_back(row, row, -static_cast<double>(deg));
      }
    }
  }
  Eigen::SparseMatrix<double> L(map.size(), map.size());
  L.setFromTriplets(trip.begin(), trip.end());
  return SmoothingOperator(std::move(L));
}

NormalSystem::NormalSystem(SmoothingOperator const &smoother, SamplingOperator const &sampler, double gamma,
                           double rho, double lambda)
    : gamma_{gamma}, rho_{rho}, lambda_{lambda}, diagonal_{smoother.empty()}, mask_{sampler.gram_diagonal()} {
  if (!(gamma > 0)) throw ArgumentError("NormalSystem: gamma must be positive");
  if (!(rho > 0)) throw ArgumentError("NormalSystem: rho must be positive");
  if (!(lambda >= 0)) throw ArgumentError("NormalSystem: lambda must be nonnegative");
  Index const n = sampler.size();
  if (smoother.size() != n) throw DimensionError("NormalSystem: smoother and sampler sizes differ");

  std::vector<Eigen::Triplet<double>> trip;
  if (!smoother.empty()) {
    Eigen::SparseMatrix<double> const g = smoother.gram();
    trip.reserve(static_cast<std::size_t>(g.nonZeros() + n));
    for (Index j = 0; j < g.outerSize(); ++j) {
      for (Eigen::SparseMatrix<double>::InnerIterator it(g, j); it; ++it) {
        trip.emplace_back(it.row(), it.col(), it.value() / gamma);
      }
    }
  }
  for (Index i = 0; i < n; ++i) trip.emplace_back(i, i, 0.0);
  scaled_gram_.resize(n, n);
  scaled_gram_.setFromTriplets(trip.begin(), trip.end());
  scaled_gram_.makeCompressed();

  diag_pos_.resize(static_cast<std::size_t>(n));
  for (Index j = 0; j < n; ++j) {
    auto const *begin = scaled_gram_.innerIndexPtr() + scaled_gram_.outerIndexPtr()[j];
    auto const *end = scaled_gram_.innerIndexPtr() + scaled_gram_.outerIndexPtr()[j + 1];
    auto const *it = std::lower_bound(begin, end, static_cast<int>(j));
    diag_pos_[static_cast<std::size_t>(j)] = it - scaled_gram_.innerIndexPtr();
  }
}

void NormalSystem::set_rho(double rho) {
  if (!(rho > 0)) throw ArgumentError("NormalSystem: rho must be positive");
  rho_ = rho;
}

void NormalSystem::set_lambda(double lambda) {
  if (!(lambda >= 0)) throw ArgumentError("NormalSystem: lambda must be nonnegative");
  lambda_ = lambda;
}

SpectralEstimate spectral_norm(std::function<Eigen::VectorXd(Eigen::VectorXd const &)> const &apply, Index n,
                               int iters, double tol) {
  if (n < 1) throw ArgumentError("spectral_norm: dimension must be positive");
  Eigen::VectorXd x = Eigen::VectorXd::Constant(n, 1.0 / std::sqrt(static_cast<double>(n)));
  SpectralEstimate est;
  double prev = 0;
  for (int k = 1; k <= iters; ++k) {
    Eigen::VectorXd y = apply(x);
    double const rq = x.dot(y);
    double const ny = y.norm();
    est.value = rq;
    est.iterations = k;
    if (ny == 0) {
      if (k == 1) {
        // All-ones lies in the kernel (e.g. a pure Laplacian); restart from a
        // fixed pseudo-random vector, which has no grid symmetry to get stuck in.
        Rng rng(0x5eedULL);
        for (Index i = 0; i < n; ++i) x[i] = rng.uniform(-1.0, 1.0);
        x.normalize();
        y = apply(x);
        if (y.norm() == 0) {
          est.converged = true;
          return est;
        }
        est.value = x.dot(y);
        prev = est.value;
        x = y.normalized();
        continue;
      }
      est.converged = true;
      return est;
    }
    if (k > 1 && std::abs(rq - prev) <= tol * std::abs(rq)) {
      est.converged = true;
      return est;
    }
    prev = rq;
    x = y / ny;
  }
  return est;
}

} // namespace lrsmooth
