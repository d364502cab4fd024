#include <doctest.h>

#include <Eigen/Eigenvalues>

#include "lrsmooth/errors.hpp"
#include "lrsmooth/numerics/sparse_ldlt.hpp"
#include "lrsmooth/operators.hpp"
#include "test_support.hpp"

using namespace lrsmooth;
using lrsmooth::testing::random_matrix;
using lrsmooth::testing::random_vector;

namespace {

std::vector<int> identity_order(int n) {
  std::vector<int> o(n);
  for (int i = 0; i < n; ++i) o[i] = i;
  return o;
}

ReceiverGrid small_grid(int nx, int ny) {
  ReceiverGrid g;
  g.nx = nx;
  g.ny = ny;
  return g;
}

SamplingOperator random_sampler(Rng &rng, Index rows, Index cols, double p) {
  std::vector<Index> idx;
  for (Index k = 0; k < rows * cols; ++k) {
    if (rng.uniform01() < p) idx.push_back(k);
  }
  if (idx.empty()) idx.push_back(0);
  return SamplingOperator(rows, cols, idx);
}

// Nested-loop stencil evaluation on one source grid.
double stencil_at(Eigen::MatrixXd const &f, int p, int q) {
  double v = 0;
  int deg = 0;
  int const nx = int(f.rows()), ny = int(f.cols());
  int const dp[] = {-1, 1, 0, 0}, dq[] = {0, 0, -1, 1};
  for (int k = 0; k < 4; ++k) {
    int const pp = p + dp[k], qq = q + dq[k];
    if (pp >= 0 && pp < nx && qq >= 0 && qq < ny) {
      v += f(pp, qq);
      ++deg;
    }
  }
  return v - deg * f(p, q);
}

} // namespace

TEST_SUITE("sampling operator") {
  TEST_CASE("full mask returns the vectorized matrix") {
    std::vector<Index> all(6);
    for (Index k = 0; k < 6; ++k) all[k] = k;
    SamplingOperator A(2, 3, all);
    Eigen::MatrixXd X(2, 3);
    X << 1, 2, 3, 4, 5, 6;
    CHECK(A.apply(X) == X.reshaped());
  }

  TEST_CASE("single observed entry") {
    SamplingOperator A(3, 3, {0});
    Eigen::MatrixXd X = Eigen::MatrixXd::Constant(3, 3, 2.0);
    X(0, 0) = 7;
    CHECK(A.apply(X).size() == 1);
    CHECK(A.apply(X)[0] == 7);
  }

  TEST_CASE("adjoint of zero and the projector") {
    Rng rng(1);
    auto A = random_sampler(rng, 5, 4, 0.4);
    CHECK(A.adjoint(Eigen::VectorXd::Zero(A.count())).isZero(0));
    Eigen::MatrixXd const X = random_matrix(rng, 5, 4);
    Eigen::MatrixXd const P = A.adjoint(A.apply(X));
    auto const d = A.gram_diagonal();
    for (Index k = 0; k < X.size(); ++k) CHECK(P.data()[k] == (d[k] == 1.0 ? X.data()[k] : 0.0));
  }

  TEST_CASE("adjoint identity on 100 random pairs") {
    Rng rng(2);
    for (int t = 0; t < 100; ++t) {
      auto A = random_sampler(rng, 7, 6, 0.3);
      Eigen::MatrixXd const x = random_matrix(rng, 7, 6);
      Eigen::VectorXd const y = random_vector(rng, A.count());
      double const lhs = A.apply(x).dot(y);
      double const rhs = x.reshaped().dot(A.adjoint(y).reshaped());
      REQUIRE(std::abs(lhs - rhs) <= 1e-12 * x.norm() * y.norm());
    }
  }

  TEST_CASE("indices must be strictly increasing and in range; shapes must match") {
    CHECK_THROWS_AS(SamplingOperator(2, 2, {1, 1}), ArgumentError);
    CHECK_THROWS_AS(SamplingOperator(2, 2, {2, 1}), ArgumentError);
    CHECK_THROWS_AS(SamplingOperator(2, 2, {4}), ArgumentError);
    SamplingOperator A(2, 2, {0, 3});
    CHECK_THROWS_AS(A.apply(Eigen::MatrixXd::Zero(3, 2)), DimensionError);
    CHECK_THROWS_AS(A.adjoint(Eigen::VectorXd::Zero(3)), DimensionError);
  }

  TEST_CASE("15% mask on 400x64 has about 3840 entries") {
    Rng rng(3);
    auto A = random_sampler(rng, 400, 64, 0.15);
    CHECK(std::abs(A.count() - 3840) < 200);
  }

  TEST_CASE("from_mask follows the index map") {
    SamplingMask m(2, 2, 2);
    m.set(1, 0, 1, true);
    auto const map = IndexMap::receiver_by_source(2, 2, {1, 0});
    auto const A = SamplingOperator::from_mask(m, map);
    REQUIRE(A.count() == 1);
    CHECK(A.observed_indices()[0] == map.linear(1, 0, 1));
  }
}

TEST_SUITE("laplacian") {
  TEST_CASE("three-point line, center row is the second difference") {
    auto const map = IndexMap::receiver_by_source(3, 1, {0});
    auto const L = build_laplacian(small_grid(3, 1), map);
    Eigen::VectorXd w(3);
    w << 0, 1, 0;
    CHECK(L.apply(w)[1] == -2.0);
  }

  TEST_CASE("per-source constants are annihilated exactly, both layouts") {
    Rng rng(4);
    for (auto layout : {Layout::ReceiverBySource, Layout::BlockTessellated}) {
      auto const map = layout == Layout::ReceiverBySource ? IndexMap::receiver_by_source(5, 4, identity_order(6))
                                                          : IndexMap::block(5, 4, identity_order(6), 3, 2);
      auto const L = build_laplacian(small_grid(5, 4), map);
      std::vector<double> c(6);
      for (auto &v : c) v = rng.gaussian(0, 10);
      Eigen::VectorXd w(map.size());
      for (Index k = 0; k < map.size(); ++k) w[k] = c[map.from_linear(k).s];
      CHECK(L.apply(w).cwiseAbs().maxCoeff() == 0.0);
    }
  }

  TEST_CASE("random 4x4 field matches a nested-loop stencil") {
    Rng rng(5);
    Eigen::MatrixXd const f = random_matrix(rng, 4, 4);
    auto const map = IndexMap::receiver_by_source(4, 4, {0});
    auto const L = build_laplacian(small_grid(4, 4), map);
    Eigen::VectorXd const Lw = L.apply(f.reshaped());
    for (int q = 0; q < 4; ++q)
      for (int p = 0; p < 4; ++p) CHECK(Lw[map.linear(p, q, 0)] == doctest::Approx(stencil_at(f, p, q)).epsilon(1e-14));
  }

  TEST_CASE("block layout follows physical neighbors, not matrix neighbors") {
    Rng rng(6);
    auto const map = IndexMap::block(3, 3, {2, 0, 3, 1}, 2, 2);
    auto const L = build_laplacian(small_grid(3, 3), map);
    Eigen::MatrixXd W = random_matrix(rng, map.rows(), map.cols());
    Eigen::VectorXd const Lw = L.apply(W.reshaped());
    for (int s = 0; s < 4; ++s) {
      Eigen::MatrixXd f(3, 3);
      for (int q = 0; q < 3; ++q)
        for (int p = 0; p < 3; ++p) f(p, q) = W.reshaped()[map.linear(p, q, s)];
      for (int q = 0; q < 3; ++q)
        for (int p = 0; p < 3; ++p) CHECK(Lw[map.linear(p, q, s)] == doctest::Approx(stencil_at(f, p, q)).epsilon(1e-14));
    }
  }

  TEST_CASE("rows sum to zero with at most five entries; gram couples one source only") {
    auto const map = IndexMap::block(4, 3, identity_order(4), 2, 2);
    auto const L = build_laplacian(small_grid(4, 3), map);
    Eigen::SparseMatrix<double, Eigen::RowMajor> const R = L.matrix();
    for (Index i = 0; i < R.outerSize(); ++i) {
      double sum = 0;
      int nnz = 0;
      for (Eigen::SparseMatrix<double, Eigen::RowMajor>::InnerIterator it(R, i); it; ++it) {
        sum += it.value();
        ++nnz;
      }
      CHECK(sum == 0.0);
      CHECK(nnz <= 5);
    }
    auto const G = L.gram();
    for (Index j = 0; j < G.outerSize(); ++j) {
      for (Eigen::SparseMatrix<double>::InnerIterator it(G, j); it; ++it) {
        if (it.value() != 0) CHECK(map.from_linear(it.row()).s == map.from_linear(it.col()).s);
      }
    }
  }

  TEST_CASE("adjoint identity on 100 random pairs") {
    Rng rng(7);
    auto const map = IndexMap::block(5, 5, identity_order(4), 2, 2);
    auto const L = build_laplacian(small_grid(5, 5), map);
    for (int t = 0; t < 100; ++t) {
      Eigen::VectorXd const x = random_vector(rng, L.size());
      Eigen::VectorXd const y = random_vector(rng, L.edge_count());
      double const lhs = L.apply(x).dot(y);
      double const rhs = x.dot(L.adjoint(y));
      REQUIRE(std::abs(lhs - rhs) <= 1e-12 * x.norm() * y.norm());
    }
  }
}

TEST_SUITE("normal system") {
  TEST_CASE("lambda zero drops the sampling term") {
    Rng rng(8);
    auto const map = IndexMap::receiver_by_source(3, 3, {0, 1});
    auto const L = build_laplacian(small_grid(3, 3), map);
    auto const A = random_sampler(rng, 9, 2, 0.5);
    NormalSystem N(L, A, 0.5, 3.0);
    Eigen::MatrixXd const expected = 2.0 * Eigen::MatrixXd(L.gram()) + 3.0 * Eigen::MatrixXd::Identity(18, 18);
    CHECK((Eigen::MatrixXd(N.matrix()) - expected).norm() <= 1e-13 * expected.norm());
  }

  TEST_CASE("empty smoother gives a diagonal system") {
    Rng rng(9);
    auto const A = random_sampler(rng, 4, 4, 0.5);
    NormalSystem N(SmoothingOperator::none(16), A, 1.0, 2.0, 5.0);
    CHECK(N.diagonal());
    Eigen::MatrixXd const M = N.matrix();
    Eigen::VectorXd const expected = (2.0 + 5.0 * A.gram_diagonal().array()).matrix();
    CHECK((M.diagonal() - expected).norm() == 0.0);
    CHECK((M - Eigen::MatrixXd(M.diagonal().asDiagonal())).norm() == 0.0);
  }

  TEST_CASE("3x3 grid, random mask: symmetric with smallest eigenvalue at least rho") {
    Rng rng(10);
    auto const map = IndexMap::receiver_by_source(3, 3, {0});
    auto const L = build_laplacian(small_grid(3, 3), map);
    for (int t = 0; t < 20; ++t) {
      auto const A = random_sampler(rng, 9, 1, 0.4);
      double const rho = rng.uniform(0.1, 2), lambda = rng.uniform(0, 10), gamma = rng.uniform(0.01, 1);
      NormalSystem N(L, A, gamma, rho, lambda);
      Eigen::MatrixXd const M = N.matrix();
      CHECK((M - M.transpose()).norm() == 0.0);
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(M);
      CHECK(es.eigenvalues().minCoeff() >= rho * (1 - 1e-12));
    }
  }

  TEST_CASE("factorization succeeds for every lambda >= 0") {
    Rng rng(11);
    auto const map = IndexMap::block(4, 4, identity_order(4), 2, 2);
    auto const L = build_laplacian(small_grid(4, 4), map);
    auto const A = random_sampler(rng, 8, 8, 0.2);
    NormalSystem N(L, A, 1e-3, 1e-6);
    SpdFactorization f(N.matrix());
    for (double lambda : {0.0, 1e-8, 1.0, 1e8}) CHECK_NOTHROW(f.refactor(N.matrix_at(lambda)));
  }

  TEST_CASE("nonpositive weights are rejected") {
    auto const A = SamplingOperator(2, 2, {0});
    auto const L = SmoothingOperator::none(4);
    CHECK_THROWS_AS(NormalSystem(L, A, 0.0, 1.0), ArgumentError);
    CHECK_THROWS_AS(NormalSystem(L, A, 1.0, 0.0), ArgumentError);
    CHECK_THROWS_AS(NormalSystem(L, A, 1.0, 1.0, -1.0), ArgumentError);
  }

  TEST_CASE("apply matches the assembled matrix") {
    Rng rng(12);
    auto const map = IndexMap::receiver_by_source(3, 4, {0, 1});
    auto const L = build_laplacian(small_grid(3, 4), map);
    auto const A = random_sampler(rng, 12, 2, 0.3);
    NormalSystem N(L, A, 0.2, 1.5);
    Eigen::VectorXd const x = random_vector(rng, 24);
    CHECK((N.apply<double>(x, 2.5) - N.matrix_at(2.5) * x).norm() <= 1e-12 * x.norm());
  }
}

TEST_SUITE("spectral norm") {
  TEST_CASE("identity") {
    auto e = spectral_norm([](Eigen::VectorXd const &x) { return x; }, 7);
    CHECK(e.value == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(e.converged);
  }

  TEST_CASE("diag(4, 1)") {
    auto e = spectral_norm([](Eigen::VectorXd const &x) { return Eigen::VectorXd(Eigen::Vector2d(4 * x[0], x[1])); }, 2);
    CHECK(e.value == doctest::Approx(4.0).epsilon(1e-9));
  }

  TEST_CASE("random SPD 10x10 matches a dense eigensolver") {
    Rng rng(13);
    for (int t = 0; t < 10; ++t) {
      // A separated top eigenvalue keeps power iteration fast.
      Eigen::MatrixXd Q = Eigen::HouseholderQR<Eigen::MatrixXd>(random_matrix(rng, 10, 10)).householderQ();
      Eigen::VectorXd d(10);
      for (int i = 0; i < 10; ++i) d[i] = rng.uniform(0.1, 1.0);
      d[0] = 2.0;
      Eigen::MatrixXd const M = Q * d.asDiagonal() * Q.transpose();
      auto e = spectral_norm([&](Eigen::VectorXd const &x) { return Eigen::VectorXd(M * x); }, 10);
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(M);
      CHECK(std::abs(e.value - es.eigenvalues().maxCoeff()) <= 1e-8 * es.eigenvalues().maxCoeff());
    }
  }

  TEST_CASE("laplacian gram: all-ones start is in the kernel, restart recovers") {
    auto const map = IndexMap::receiver_by_source(4, 4, {0});
    auto const L = build_laplacian(small_grid(4, 4), map);
    auto e = spectral_norm([&](Eigen::VectorXd const &x) { return Eigen::VectorXd(L.adjoint(L.apply(x))); }, 16, 5000, 1e-12);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(Eigen::MatrixXd(L.gram()));
    CHECK(e.value == doctest::Approx(es.eigenvalues().maxCoeff()).epsilon(1e-8));
  }
}
