#pragma once

#include "netlqr/linalg.hpp"

namespace netlqr {

// Parameters shared by every subsystem:
//   dx_i = (A x_i + B u_i + D x^G_i + E u^G_i) dt + F dw_i
// with local cost weights Q, R and terminal weight QT.
struct SystemModel {
  Matrix A, B, D, E, F;
  Matrix Q, QT, R;

  Eigen::Index state_dim() const { return A.rows(); }
  Eigen::Index input_dim() const { return B.cols(); }
  Eigen::Index noise_dim() const { return F.cols(); }

  // Throws DimensionMismatch on inconsistent shapes. Empty D, E, F, QT are
  // replaced by zeros of the right shape (F gets one noise channel).
  void normalize();
  void validate_dimensions() const;

  bool deterministic() const { return F.size() == 0 || F.isZero(0.0); }
};

}  // namespace netlqr
