#include "netlqr/model.hpp"

#include "netlqr/errors.hpp"

namespace netlqr {

void SystemModel::normalize() {
  const Eigen::Index d = A.rows();
  const Eigen::Index m = B.cols();
  if (D.size() == 0) D = Matrix::Zero(d, d);
  if (E.size() == 0) E = Matrix::Zero(d, m);
  if (F.size() == 0) F = Matrix::Zero(d, 1);
  if (QT.size() == 0) QT = Matrix::Zero(d, d);
  validate_dimensions();
}

void SystemModel::validate_dimensions() const {
  const Eigen::Index d = A.rows();
  if (d == 0) throw Error(ErrorCode::DimensionMismatch, "A is empty");
  require_shape(A, d, d, "A");
  if (B.rows() != d || B.cols() == 0) {
    throw Error(ErrorCode::DimensionMismatch, "B must have as many rows as A");
  }
  const Eigen::Index m = B.cols();
  require_shape(D, d, d, "D");
  require_shape(E, d, m, "E");
  if (F.rows() != d) throw Error(ErrorCode::DimensionMismatch, "F must have as many rows as A");
  require_shape(Q, d, d, "Q");
  require_shape(QT, d, d, "QT");
  require_shape(R, m, m, "R");
}

}  // namespace netlqr
