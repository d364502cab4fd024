#pragma once

#include <complex>
#include <memory>
#include <span>
#include <string>
#include <type_traits>
#include <vector>

#include <Eigen/Sparse>

#include "lrsmooth/errors.hpp"

namespace lrsmooth {

/// Sparsity analysis of a symmetric matrix: fill-reducing ordering, the
/// scatter map from input nonzeros into the permuted upper triangle, the
/// elimination tree and column counts of the factor. Independent of the
/// numeric values and of the scalar type, so one analysis serves real and
/// complex factorizations of matrices sharing a pattern.
struct LdltSymbolic {
  Eigen::Index n = 0;
  std::vector<int> perm;       // new position -> original index
  std::vector<int> iperm;      // original index -> new position
  std::vector<int> col_ptr;    // permuted upper triangle, CSC
  std::vector<int> row_idx;
  std::vector<int> scatter;    // input nonzero k -> slot in row_idx, or -1 (lower triangle)
  std::vector<int> parent;     // elimination tree
  std::vector<int> l_ptr;      // column pointers of the strict lower factor
  std::vector<int> in_outer;   // input pattern, to validate refactorization
  std::vector<int> in_inner;

  static std::shared_ptr<LdltSymbolic const> analyze(Eigen::SparseMatrix<double> const &pattern);

  template <class S>
  bool same_pattern(Eigen::SparseMatrix<S> const &A) const;
};

/// A = P^T L D L^T P for sparse symmetric A (transpose, not conjugate
/// transpose, so complex symmetric matrices are supported).
///
/// For real scalars every pivot must be positive; the factorization is a
/// Cholesky factorization in LDL^T form and a nonpositive pivot raises a
/// NumericalError naming the original row. For complex scalars only a zero
/// pivot is an error.
template <class Scalar>
class SparseLdlt {
 public:
  using Matrix = Eigen::SparseMatrix<Scalar>;
  using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

  SparseLdlt() = default;

  /// Analyze and factor. A must store both triangles (full symmetric).
  explicit SparseLdlt(Matrix const &A) { factor(A); }

  /// Reuse an existing analysis; call refactor() before solving.
  explicit SparseLdlt(std::shared_ptr<LdltSymbolic const> symbolic) : symbolic_{std::move(symbolic)} {}

  void factor(Matrix const &A) {
    check_square(A);
    if (!A.isCompressed()) throw ArgumentError("SparseLdlt::factor: matrix must be compressed");
    std::vector<double> ones(static_cast<std::size_t>(A.nonZeros()), 1.0);
    Eigen::Map<Eigen::SparseMatrix<double> const> pattern(A.rows(), A.cols(), A.nonZeros(), A.outerIndexPtr(),
                                                          A.innerIndexPtr(), ones.data());
    symbolic_ = LdltSymbolic::analyze(pattern);
    numeric(std::span<Scalar const>(A.valuePtr(), static_cast<std::size_t>(A.nonZeros())));
  }

  /// Numeric factorization only. A must have the analyzed pattern.
  void refactor(Matrix const &A) {
    if (!symbolic_) throw ArgumentError("SparseLdlt::refactor called before analysis");
    if (!symbolic_->same_pattern(A)) throw DimensionError("SparseLdlt::refactor: sparsity pattern differs from analysis");
    numeric(std::span<Scalar const>(A.valuePtr(), static_cast<std::size_t>(A.nonZeros())));
  }

  /// Numeric factorization from a value array laid out like the analyzed
  /// input's valuePtr().
  void refactor(std::span<Scalar const> values) {
    if (!symbolic_) throw ArgumentError("SparseLdlt::refactor called before analysis");
    if (values.size() != symbolic_->in_inner.size()) throw DimensionError("SparseLdlt::refactor: value count mismatch");
    numeric(values);
  }

  Vector solve(Vector const &rhs) const {
    auto const &sym = *symbolic_;
    if (rhs.size() != sym.n) throw DimensionError("SparseLdlt::solve: rhs length mismatch");
    Vector x(sym.n);
    for (Eigen::Index k = 0; k < sym.n; ++k) x[k] = rhs[sym.perm[k]];
    for (Eigen::Index j = 0; j < sym.n; ++j) {
      for (int p = sym.l_ptr[j]; p < sym.l_ptr[j + 1]; ++p) x[l_idx_[p]] -= l_val_[p] * x[j];
    }
    for (Eigen::Index j = 0; j < sym.n; ++j) x[j] /= d_[j];
    for (Eigen::Index j = sym.n - 1; j >= 0; --j) {
      for (int p = sym.l_ptr[j]; p < sym.l_ptr[j + 1]; ++p) x[j] -= l_val_[p] * x[l_idx_[p]];
    }
    Vector out(sym.n);
    for (Eigen::Index k = 0; k < sym.n; ++k) out[sym.perm[k]] = x[k];
    return out;
  }

  std::shared_ptr<LdltSymbolic const> const &symbolic() const { return symbolic_; }
  Eigen::Index rows() const { return symbolic_ ? symbolic_->n : 0; }
  std::size_t factor_nonzeros() const { return l_val_.size(); }
  Vector const &diagonal() const { return d_; }

 private:
  static void check_square(Matrix const &A) {
    if (A.rows() != A.cols()) throw DimensionError("SparseLdlt: matrix is not square");
  }

  // Up-looking LDL^T over the elimination tree (Davis, "LDL: a concise sparse
  // Cholesky package").
  void numeric(std::span<Scalar const> values) {
    auto const &sym = *symbolic_;
    auto const n = static_cast<int>(sym.n);
    std::vector<Scalar> ax(sym.row_idx.size(), Scalar(0));
    for (std::size_t k = 0; k < values.size(); ++k) {
      if (sym.scatter[k] >= 0) ax[static_cast<std::size_t>(sym.scatter[k])] += values[k];
    }
    l_idx_.assign(static_cast<std::size_t>(sym.l_ptr[n]), 0);
    l_val_.assign(static_cast<std::size_t>(sym.l_ptr[n]), Scalar(0));
    d_.resize(n);
    std::vector<Scalar> y(static_cast<std::size_t>(n), Scalar(0));
    std::vector<int> pattern(static_cast<std::size_t>(n)), flag(static_cast<std::size_t>(n)), lnz(static_cast<std::size_t>(n));
    for (int k = 0; k < n; ++k) {
      int top = n;
      flag[k] = k;
      lnz[k] = 0;
      for (int p = sym.col_ptr[k]; p < sym.col_ptr[k + 1]; ++p) {
        int i = sym.row_idx[p];
        y[i] += ax[p];
        int len = 0;
        for (; flag[i] != k; i = sym.parent[i]) {
          pattern[len++] = i;
          flag[i] = k;
        }
        while (len > 0) pattern[--top] = pattern[--len];
      }
      Scalar dk = y[k];
      y[k] = Scalar(0);
      for (; top < n; ++top) {
        int const i = pattern[top];
        Scalar const yi = y[i];
        y[i] = Scalar(0);
        int const p2 = sym.l_ptr[i] + lnz[i];
        for (int p = sym.l_ptr[i]; p < p2; ++p) y[l_idx_[p]] -= l_val_[p] * yi;
        Scalar const lki = yi / d_[i];
        dk -= lki * yi;
        l_idx_[p2] = k;
        l_val_[p2] = lki;
        ++lnz[i];
      }
      if constexpr (std::is_floating_point_v<Scalar>) {
        if (!(dk > 0)) {
          throw NumericalError("SparseLdlt: matrix is not positive definite (pivot " + std::to_string(dk) +
                               " at row " + std::to_string(sym.perm[k]) + ")");
        }
      } else {
        if (dk == Scalar(0)) throw NumericalError("SparseLdlt: zero pivot at row " + std::to_string(sym.perm[k]));
      }
      d_[k] = dk;
    }
  }

  std::shared_ptr<LdltSymbolic const> symbolic_;
  std::vector<int> l_idx_;
  std::vector<Scalar> l_val_;
  Vector d_;
};

template <class S>
bool LdltSymbolic::same_pattern(Eigen::SparseMatrix<S> const &A) const {
  if (A.rows() != n || A.cols() != n || !A.isCompressed()) return false;
  if (static_cast<std::size_t>(A.nonZeros()) != in_inner.size()) return false;
  for (Eigen::Index j = 0; j <= n; ++j) {
    if (A.outerIndexPtr()[j] != in_outer[static_cast<std::size_t>(j)]) return false;
  }
  for (std::size_t k = 0; k < in_inner.size(); ++k) {
    if (A.innerIndexPtr()[k] != in_inner[k]) return false;
  }
  return true;
}

using SpdFactorization = SparseLdlt<double>;
using ComplexLdlt = SparseLdlt<std::complex<double>>;

} // namespace lrsmooth
