#include "lrsmooth/numerics/sparse_ldlt.hpp"

#include <Eigen/OrderingMethods>

namespace lrsmooth {

std::shared_ptr<LdltSymbolic const> LdltSymbolic::analyze(Eigen::SparseMatrix<double> const &pattern) {
  if (pattern.rows() != pattern.cols()) throw DimensionError("LdltSymbolic: matrix is not square");
  Eigen::SparseMatrix<double> A = pattern;
  A.makeCompressed();

  auto sym = std::make_shared<LdltSymbolic>();
  auto const n = static_cast<int>(A.rows());
  sym->n = n;

  Eigen::PermutationMatrix<Eigen::Dynamic, Eigen::Dynamic, int> ordering;
  Eigen::AMDOrdering<int> amd;
  amd(A, ordering);
  sym->perm.assign(ordering.indices().data(), ordering.indices().data() + n);
  sym->iperm.resize(static_cast<std::size_t>(n));
  for (int k = 0; k < n; ++k) sym->iperm[static_cast<std::size_t>(sym->perm[static_cast<std::size_t>(k)])] = k;

  sym->in_outer.assign(A.outerIndexPtr(), A.outerIndexPtr() + n + 1);
  sym->in_inner.assign(A.innerIndexPtr(), A.innerIndexPtr() + A.nonZeros());

  // Scatter into the upper triangle of P A P^T.
  std::vector<int> counts(static_cast<std::size_t>(n) + 1, 0);
  for (int c = 0; c < n; ++c) {
    for (int k = A.outerIndexPtr()[c]; k < A.outerIndexPtr()[c + 1]; ++k) {
      int const i = sym->iperm[A.innerIndexPtr()[k]];
      int const j = sym->iperm[c];
      if (i <= j) ++counts[j + 1];
    }
  }
  sym->col_ptr.assign(static_cast<std::size_t>(n) + 1, 0);
  for (int j = 0; j < n; ++j) sym->col_ptr[j + 1] = sym->col_ptr[j] + counts[j + 1];
  sym->row_idx.assign(static_cast<std::size_t>(sym->col_ptr[n]), 0);
  sym->scatter.assign(static_cast<std::size_t>(A.nonZeros()), -1);
  std::vector<int> next(sym->col_ptr.begin(), sym->col_ptr.end() - 1);
  for (int c = 0; c < n; ++c) {
    for (int k = A.outerIndexPtr()[c]; k < A.outerIndexPtr()[c + 1]; ++k) {
      int const i = sym->iperm[A.innerIndexPtr()[k]];
      int const j = sym->iperm[c];
      if (i <= j) {
        int const slot = next[j]++;
        sym->row_idx[slot] = i;
        sym->scatter[k] = slot;
      }
    }
  }

  // Elimination tree and column counts.
  sym->parent.assign(static_cast<std::size_t>(n), -1);
  std::vector<int> flag(static_cast<std::size_t>(n)), lnz(static_cast<std::size_t>(n), 0);
  for (int k = 0; k < n; ++k) {
    flag[k] = k;
    for (int p = sym->col_ptr[k]; p < sym->col_ptr[k + 1]; ++p) {
      int i = sym->row_idx[p];
      if (i < k) {
        for (; flag[i] != k; i = sym->parent[i]) {
          if (sym->parent[i] == -1) sym->parent[i] = k;
          ++lnz[i];
          flag[i] = k;
        }
      }
    }
  }
  sym->l_ptr.assign(static_cast<std::size_t>(n) + 1, 0);
  for (int k = 0; k < n; ++k) sym->l_ptr[k + 1] = sym->l_ptr[k] + lnz[k];
  return sym;
}

} // namespace lrsmooth
