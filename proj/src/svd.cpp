#include "lrsmooth/numerics/svd.hpp"

#include <Eigen/SVD>

#include "lrsmooth/errors.hpp"

namespace lrsmooth {

namespace {
void check_finite(Eigen::MatrixXd const &G) {
  if (!G.allFinite()) throw NumericalError("thin_svd: input has non-finite entries");
}
} // namespace

ThinSvd thin_svd(Eigen::MatrixXd const &G) {
  check_finite(G);
  Eigen::BDCSVD<Eigen::MatrixXd> svd(G, Eigen::ComputeThinU | Eigen::ComputeThinV);
  if (svd.info() != Eigen::Success) throw NumericalError("thin_svd: SVD did not converge");
  return {svd.matrixU(), svd.singularValues(), svd.matrixV()};
}

Eigen::VectorXd singular_values(Eigen::MatrixXd const &G) {
  check_finite(G);
  Eigen::BDCSVD<Eigen::MatrixXd> svd(G);
  if (svd.info() != Eigen::Success) throw NumericalError("singular_values: SVD did not converge");
  return svd.singularValues();
}

} // namespace lrsmooth
