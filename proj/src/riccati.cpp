#include "netlqr/riccati.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>

#include <Eigen/Eigenvalues>

#include "netlqr/errors.hpp"
#include "netlqr/rk4.hpp"

namespace netlqr {

namespace {

using ComplexMatrix = Eigen::MatrixXcd;
using cd = std::complex<double>;

Matrix input_weight(const LQRData& data) {
  Eigen::LLT<Matrix> llt(symmetrize(data.R));
  if (llt.info() != Eigen::Success) {
    throw Error(ErrorCode::SingularR, "control weight is not positive definite");
  }
  return data.B * llt.solve(data.B.transpose());
}

bool hurwitz(const Matrix& A) {
  if (A.size() == 0) return true;
  Eigen::EigenSolver<Matrix> es(A, false);
  return es.eigenvalues().real().maxCoeff() < 0.0;
}

// Swaps the adjacent diagonal entries k, k+1 of the upper triangular T
// while keeping U T U^H fixed (Givens rotation as in LAPACK ztrexc).
void swap_schur_entries(ComplexMatrix& T, ComplexMatrix& U, Eigen::Index k) {
  const cd t11 = T(k, k);
  const cd t22 = T(k + 1, k + 1);
  const cd f = T(k, k + 1);
  const cd g = t22 - t11;
  const double fa = std::abs(f);
  const double ga = std::abs(g);
  if (ga == 0.0) return;
  double c = 0.0;
  cd s;
  if (fa == 0.0) {
    s = std::conj(g) / ga;
  } else {
    const double r = std::hypot(fa, ga);
    c = fa / r;
    s = (f / fa) * std::conj(g) / r;
  }
  Eigen::Matrix2cd G;
  G << c, s, -std::conj(s), c;
  const Eigen::Matrix2cd Gh = G.adjoint();
  T.middleRows(k, 2) = (G * T.middleRows(k, 2)).eval();
  T.middleCols(k, 2) = (T.middleCols(k, 2) * Gh).eval();
  U.middleCols(k, 2) = (U.middleCols(k, 2) * Gh).eval();
  T(k, k) = t22;
  T(k + 1, k + 1) = t11;
  T(k + 1, k) = 0.0;
}

struct SchurResult {
  Matrix P;
  double condition = std::numeric_limits<double>::infinity();
};

// Stable invariant subspace of the Hamiltonian via a reordered complex
// Schur form. Returns nullopt when the Hamiltonian has imaginary-axis
// eigenvalues (no stabilizing solution).
std::optional<SchurResult> schur_solve(const LQRData& data, const Matrix& S) {
  const Eigen::Index d = data.A.rows();
  Matrix H(2 * d, 2 * d);
  H << data.A, -S, -data.Q, -data.A.transpose();

  Eigen::ComplexSchur<ComplexMatrix> schur(H.cast<cd>());
  if (schur.info() != Eigen::Success) return std::nullopt;
  ComplexMatrix T = schur.matrixT();
  ComplexMatrix U = schur.matrixU();

  const double scale = std::max(1.0, H.cwiseAbs().maxCoeff());
  const double axis_tol = 1e-10 * scale;
  Eigen::Index stable = 0;
  for (Eigen::Index i = 0; i < 2 * d; ++i) {
    if (std::abs(T(i, i).real()) <= axis_tol) return std::nullopt;
  }
  // Bubble stable eigenvalues to the leading block.
  for (Eigen::Index i = 0; i < 2 * d; ++i) {
    if (T(i, i).real() < 0.0) {
      for (Eigen::Index k = i; k > stable; --k) swap_schur_entries(T, U, k - 1);
      ++stable;
    }
  }
  if (stable != d) return std::nullopt;

  const ComplexMatrix U1 = U.topLeftCorner(d, d);
  const ComplexMatrix U2 = U.bottomLeftCorner(d, d);
  Eigen::JacobiSVD<ComplexMatrix> svd(U1);
  const auto& sv = svd.singularValues();
  SchurResult result;
  result.condition = sv(d - 1) > 0.0 ? sv(0) / sv(d - 1) : std::numeric_limits<double>::infinity();
  if (!std::isfinite(result.condition)) return result;
  // P U1 = U2
  const ComplexMatrix Pc =
      U1.transpose().partialPivLu().solve(U2.transpose()).transpose();
  result.P = symmetrize(Pc.real());
  return result;
}

Matrix bass_gain(const LQRData& data) {
  const Eigen::Index d = data.A.rows();
  Eigen::EigenSolver<Matrix> es(data.A, false);
  const double beta = 1.0 + es.eigenvalues().real().cwiseAbs().maxCoeff();
  const Matrix shifted = data.A + beta * Matrix::Identity(d, d);
  const Matrix Z = solve_lyapunov(shifted.transpose(), -2.0 * data.B * data.B.transpose());
  Eigen::FullPivLU<Matrix> lu(Z);
  if (!lu.isInvertible()) {
    throw Error(ErrorCode::NoConvergence, "cannot construct a stabilizing seed gain");
  }
  return data.B.transpose() * lu.inverse();
}

Matrix newton_solve(const LQRData& data, Matrix K, int max_iterations) {
  Eigen::LLT<Matrix> R_llt(symmetrize(data.R));
  Matrix P = Matrix::Zero(data.A.rows(), data.A.rows());
  for (int it = 0; it < max_iterations; ++it) {
    const Matrix Ak = data.A - data.B * K;
    if (!hurwitz(Ak)) {
      throw Error(ErrorCode::NoConvergence, "Newton iterate lost stability");
    }
    P = solve_lyapunov(Ak, data.Q + K.transpose() * data.R * K);
    const Matrix next = R_llt.solve(data.B.transpose() * P);
    const double change = (next - K).norm();
    K = next;
    if (change <= 1e-13 * (1.0 + K.norm())) return P;
  }
  return P;
}

}  // namespace

void LQRData::validate(bool need_terminal) const {
  const Eigen::Index d = A.rows();
  require_shape(A, d, d, "A");
  if (B.rows() != d) require_shape(B, d, B.cols(), "B");
  const Eigen::Index m = B.cols();
  require_shape(Q, d, d, "Q");
  require_shape(R, m, m, "R");
  if (need_terminal) require_shape(QT, d, d, "QT");
}

Matrix RiccatiODESolution::at(double t) const {
  if (samples.empty()) throw Error(ErrorCode::MissingRiccatiSamples, "empty solution");
  const double T = horizon();
  const double slack = 1e-9 * std::max(1.0, T);
  if (t < -slack || t > T + slack) {
    throw Error(ErrorCode::TimeOutOfRange, "t = " + std::to_string(t));
  }
  if (samples.size() == 1) return samples.front();
  t = std::clamp(t, 0.0, T);
  const double pos = t / step;
  auto k = static_cast<std::size_t>(std::floor(pos));
  if (k >= samples.size() - 1) return samples.back();
  const double w = pos - static_cast<double>(k);
  if (w <= 1e-12) return samples[k];
  if (w >= 1.0 - 1e-12) return samples[k + 1];
  return (1.0 - w) * samples[k] + w * samples[k + 1];
}

RiccatiODESolution solve_riccati_ode(const LQRData& data, double horizon, double step,
                                     double pd_tol) {
  data.validate(true);
  if (!(horizon > 0.0) || !(step > 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "horizon and step must be positive");
  }
  const Matrix S = input_weight(data);
  const auto steps = static_cast<std::size_t>(std::max(1.0, std::ceil(horizon / step - 1e-9)));
  const double h = horizon / static_cast<double>(steps);

  const Matrix At = data.A.transpose();
  // dP/ds with s = T - t
  auto rhs = [&](double, const Matrix& P) -> Matrix {
    return At * P + P * data.A - P * S * P + data.Q;
  };

  RiccatiODESolution sol;
  sol.step = h;
  sol.times.resize(steps + 1);
  sol.samples.resize(steps + 1);
  for (std::size_t k = 0; k <= steps; ++k) sol.times[k] = h * static_cast<double>(k);
  sol.times.back() = horizon;

  Matrix P = data.QT;
  sol.samples[steps] = P;
  for (std::size_t k = steps; k-- > 0;) {
    const double s = horizon - h * static_cast<double>(k + 1);
    P = symmetrize(rk4_step(rhs, s, P, h));
    if (!P.allFinite()) {
      throw Error(ErrorCode::NonFiniteBlowup,
                  "Riccati solution escaped at t = " + std::to_string(sol.times[k]));
    }
    const double floor = -pd_tol * std::max(1.0, P.norm());
    if (min_symmetric_eigenvalue(P) < floor) {
      throw Error(ErrorCode::StepTooLarge,
                  "Riccati sample lost positive semi-definiteness at t = " +
                      std::to_string(sol.times[k]));
    }
    sol.samples[k] = P;
  }
  return sol;
}

double are_residual(const Matrix& P, const LQRData& data) {
  Eigen::LLT<Matrix> llt(symmetrize(data.R));
  const Matrix S = data.B * llt.solve(data.B.transpose());
  return (data.A.transpose() * P + P * data.A - P * S * P + data.Q).norm();
}

ARESolution solve_are(const LQRData& data, const AreOptions& options) {
  data.validate(false);
  const Matrix S = input_weight(data);

  const PbhResult pbh = pbh_stabilizable(data.A, data.B, options.pbh_tol, options.pbh_margin);
  if (!pbh.ok) {
    throw Error(ErrorCode::NotStabilizable,
                "uncontrollable mode s = " + std::to_string(pbh.failing_mode.real()) +
                    (pbh.failing_mode.imag() != 0.0
                         ? " + " + std::to_string(pbh.failing_mode.imag()) + "i"
                         : std::string()));
  }

  ARESolution out;
  std::optional<SchurResult> schur;
  if (options.method != AreMethod::Newton) schur = schur_solve(data, S);

  const bool schur_usable = schur && std::isfinite(schur->condition) &&
                            schur->condition <= options.condition_limit;
  if (options.method == AreMethod::Schur && !schur_usable) {
    throw Error(ErrorCode::NoConvergence, "no well-conditioned stable invariant subspace");
  }

  if (schur_usable && options.method != AreMethod::Newton) {
    out.P = schur->P;
  } else {
    if (!schur && options.method == AreMethod::Auto) {
      throw Error(ErrorCode::NoConvergence,
                  "Hamiltonian has imaginary-axis eigenvalues; no stabilizing solution");
    }
    Eigen::LLT<Matrix> R_llt(symmetrize(data.R));
    Matrix K0;
    if (schur && std::isfinite(schur->condition) &&
        hurwitz(data.A - S * schur->P)) {
      K0 = R_llt.solve(data.B.transpose() * schur->P);
    } else if (hurwitz(data.A)) {
      K0 = Matrix::Zero(data.B.cols(), data.A.rows());
    } else {
      K0 = bass_gain(data);
    }
    out.P = symmetrize(newton_solve(data, K0, options.max_iterations));
    out.newton_refined = true;
  }

  out.residual = are_residual(out.P, data);
  const double bound = 1e-9 * (1.0 + out.P.squaredNorm());
  if (!out.P.allFinite() || out.residual > bound) {
    throw Error(ErrorCode::NoConvergence,
                "ARE residual " + std::to_string(out.residual) + " exceeds " +
                    std::to_string(bound));
  }
  const Matrix closed = data.A - S * out.P;
  Eigen::EigenSolver<Matrix> es(closed, false);
  out.closed_loop_eigenvalues = es.eigenvalues();
  if (closed.size() > 0 && out.closed_loop_eigenvalues.real().maxCoeff() >= 0.0) {
    throw Error(ErrorCode::NoConvergence, "solution is not stabilizing");
  }
  return out;
}

Matrix gain_from_solution(const Matrix& P, const Matrix& B, const Matrix& R, double r_scale) {
  if (P.rows() != B.rows() || P.cols() != B.rows() || R.rows() != B.cols() ||
      R.cols() != B.cols()) {
    throw Error(ErrorCode::DimensionMismatch, "gain_from_solution operands");
  }
  if (!(r_scale > 0.0)) throw Error(ErrorCode::SingularR, "control weight scale must be > 0");
  Eigen::LLT<Matrix> llt(symmetrize(r_scale * R));
  if (llt.info() != Eigen::Success) {
    throw Error(ErrorCode::SingularR, "scaled control weight is not positive definite");
  }
  return llt.solve(B.transpose() * P);
}

Matrix solve_lyapunov(const Matrix& A, const Matrix& C) {
  const Eigen::Index d = A.rows();
  require_shape(A, d, d, "Lyapunov A");
  require_shape(C, d, d, "Lyapunov C");
  const Matrix I = Matrix::Identity(d, d);
  const Matrix op = kron(I, A.transpose()) + kron(A.transpose(), I);
  Eigen::FullPivLU<Matrix> lu(op);
  if (!lu.isInvertible()) {
    throw Error(ErrorCode::NoConvergence, "singular Lyapunov operator");
  }
  const Vector x = lu.solve(-Eigen::Map<const Vector>(C.data(), C.size()));
  return symmetrize(Eigen::Map<const Matrix>(x.data(), d, d));
}

PbhResult pbh_stabilizable(const Matrix& A, const Matrix& B, double tol, double margin) {
  const Eigen::Index d = A.rows();
  require_shape(A, d, d, "PBH A");
  if (B.rows() != d) throw Error(ErrorCode::DimensionMismatch, "PBH B row count");
  PbhResult result;
  result.margin = std::numeric_limits<double>::infinity();
  if (d == 0) return result;
  Eigen::EigenSolver<Matrix> es(A, false);
  // The pencil norm alone collapses when B ~ 0 at a mode of A = sI.
  const double floor_scale = A.norm() + B.norm();
  const Eigen::VectorXcd modes = es.eigenvalues();
  for (Eigen::Index k = 0; k < modes.size(); ++k) {
    const cd s = modes(k);
    if (s.real() < -margin) continue;
    Eigen::MatrixXcd pencil(d, d + B.cols());
    pencil.leftCols(d) = A.cast<cd>() - s * Eigen::MatrixXcd::Identity(d, d);
    pencil.rightCols(B.cols()) = B.cast<cd>();
    Eigen::JacobiSVD<Eigen::MatrixXcd> svd(pencil);
    const auto& sv = svd.singularValues();
    const double threshold =
        tol * std::max({sv(0), floor_scale, std::numeric_limits<double>::min()});
    const double smallest = sv(d - 1);
    const double ratio = smallest / threshold;
    if (ratio < result.margin) result.margin = ratio;
    if (smallest <= threshold && result.ok) {
      result.ok = false;
      result.failing_mode = s;
    }
  }
  return result;
}

PbhResult pbh_detectable(const Matrix& A, const Matrix& C, double tol, double margin) {
  return pbh_stabilizable(A.transpose(), C.transpose(), tol, margin);
}

}  // namespace netlqr
