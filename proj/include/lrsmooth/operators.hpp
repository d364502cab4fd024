#pragma once

#include <functional>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "lrsmooth/errors.hpp"
#include "lrsmooth/grid.hpp"

namespace lrsmooth {

template <class S>
using VectorX = Eigen::Matrix<S, Eigen::Dynamic, 1>;

/// Entry selection A: R^{rows x cols} -> R^{count}, reading the observed
/// entries in increasing column-major linear index order.
class SamplingOperator {
 public:
  SamplingOperator() = default;
  SamplingOperator(Index rows, Index cols, std::vector<Index> observed);
  static SamplingOperator from_mask(SamplingMask const &mask, IndexMap const &map);

  Index rows() const { return rows_; }
  Index cols() const { return cols_; }
  Index size() const { return rows_ * cols_; }
  Index count() const { return static_cast<Index>(observed_.size()); }
  std::vector<Index> const &observed_indices() const { return observed_; }

  Eigen::VectorXd apply(Eigen::MatrixXd const &X) const;
  Eigen::MatrixXd adjoint(Eigen::VectorXd const &y) const;

  template <class S>
  VectorX<S> apply_vec(VectorX<S> const &w) const {
    if (w.size() != size()) throw DimensionError("SamplingOperator::apply: length mismatch");
    VectorX<S> out(count());
    for (Index k = 0; k < count(); ++k) out[k] = w[observed_[static_cast<std::size_t>(k)]];
    return out;
  }

  template <class S>
  VectorX<S> adjoint_vec(VectorX<S> const &y) const {
    if (y.size() != count()) throw DimensionError("SamplingOperator::adjoint: length mismatch");
    VectorX<S> out = VectorX<S>::Zero(size());
    for (Index k = 0; k < count(); ++k) out[observed_[static_cast<std::size_t>(k)]] = y[k];
    return out;
  }

  /// Diagonal of A^T A (0/1).
  Eigen::VectorXd gram_diagonal() const;

 private:
  Index rows_ = 0, cols_ = 0;
  std::vector<Index> observed_;
};

/// Sparse stencil matrix acting on vec(W); one row per (gridpoint, source).
class SmoothingOperator {
 public:
  SmoothingOperator() = default;
  explicit SmoothingOperator(Eigen::SparseMatrix<double> rows) : rows_{std::move(rows)}, by_row_{rows_} {
    rows_.makeCompressed();
    by_row_.makeCompressed();
  }
  /// Zero stencil rows acting on vectors of length n.
  static SmoothingOperator none(Index n) { return SmoothingOperator(Eigen::SparseMatrix<double>(0, n)); }

  Index edge_count() const { return rows_.rows(); }
  Index size() const { return rows_.cols(); }
  bool empty() const { return rows_.rows() == 0; }
  Eigen::SparseMatrix<double> const &matrix() const { return rows_; }

  Eigen::VectorXd apply(Eigen::VectorXd const &w) const;
  Eigen::VectorXd adjoint(Eigen::VectorXd const &y) const;
  /// L^T L.
  Eigen::SparseMatrix<double> gram() const;

 private:
  using RowMajor = Eigen::SparseMatrix<double, Eigen::RowMajor>;
  Eigen::SparseMatrix<double> rows_;
  RowMajor by_row_;
};

/// Per-source 5-point Laplacian with degree-adjusted boundary rows
/// (constants in the kernel). Neighbors follow the physical grid through the
/// index map, so blocks of a tessellated layout are never coupled.
SmoothingOperator build_laplacian(ReceiverGrid const &grid, IndexMap const &map);

/// M(lambda) = (1/gamma) L^T L + rho I + lambda A^T A.
///
/// The lambda-independent part is assembled once with an explicit diagonal,
/// so every M(lambda) shares one sparsity pattern and can be refactored
/// numerically without new symbolic analysis.
class NormalSystem {
 public:
  NormalSystem(SmoothingOperator const &smoother, SamplingOperator const &sampler, double gamma, double rho,
               double lambda = 0.0);

  double gamma() const { return gamma_; }
  double rho() const { return rho_; }
  double lambda() const { return lambda_; }
  Index size() const { return scaled_gram_.rows(); }
  bool diagonal() const { return diagonal_; }
  Eigen::VectorXd const &mask_diagonal() const { return mask_; }

  void set_rho(double rho);
  void set_lambda(double lambda);

  Eigen::SparseMatrix<double> matrix() const { return matrix_at<double>(lambda_); }

  template <class S>
  Eigen::SparseMatrix<S> matrix_at(S lambda) const {
    Eigen::SparseMatrix<S> M = scaled_gram_.template cast<S>();
    S *val = M.valuePtr();
    for (Index i = 0; i < size(); ++i) val[diag_pos_[static_cast<std::size_t>(i)]] += S(rho_) + lambda * mask_[i];
    return M;
  }

  template <class S>
  VectorX<S> apply(VectorX<S> const &x, S lambda) const {
    VectorX<S> y = scaled_gram_.template cast<S>() * x;
    for (Index i = 0; i < size(); ++i) y[i] += (S(rho_) + lambda * mask_[i]) * x[i];
    return y;
  }

 private:
  double gamma_, rho_, lambda_;
  bool diagonal_;
  Eigen::SparseMatrix<double> scaled_gram_; // (1/gamma) L^T L plus explicit diagonal
  std::vector<Index> diag_pos_;
  Eigen::VectorXd mask_;
};

struct SpectralEstimate {
  double value = 0;
  int iterations = 0;
  bool converged = false;
};

/// Largest eigenvalue of a symmetric PSD map by power iteration from the
/// normalized all-ones vector; stops when the Rayleigh quotient changes by
/// at most tol relative.
SpectralEstimate spectral_norm(std::function<Eigen::VectorXd(Eigen::VectorXd const &)> const &apply, Index n,
                               int iters = 1000, double tol = 1e-10);

} // namespace lrsmooth
