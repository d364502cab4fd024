#pragma once

#include <Eigen/Dense>

namespace lrsmooth {

struct ThinSvd {
  Eigen::MatrixXd U;
  Eigen::VectorXd S; // non-increasing, nonnegative
  Eigen::MatrixXd V;
};

/// Thin SVD, G = U diag(S) V^T with min(rows, cols) singular triplets.
/// Throws NumericalError on non-finite input or failed convergence.
ThinSvd thin_svd(Eigen::MatrixXd const &G);

/// Leading singular values only.
Eigen::VectorXd singular_values(Eigen::MatrixXd const &G);

} // namespace lrsmooth
