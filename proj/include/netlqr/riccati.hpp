#pragma once

#include <complex>
#include <vector>

#include "netlqr/linalg.hpp"

namespace netlqr {

// Data of one LQR problem  dx = A x + B u,  cost x'Qx + u'Ru (+ x(T)'QT x(T)).
struct LQRData {
  Matrix A;
  Matrix B;
  Matrix Q;
  Matrix R;
  Matrix QT;  // finite horizon only; may be empty for solve_are

  // Throws DimensionMismatch / InvalidArgument.
  void validate(bool need_terminal) const;
};

// Samples of the backward Riccati ODE on the uniform grid t_k = k * step.
struct RiccatiODESolution {
  std::vector<double> times;
  std::vector<Matrix> samples;
  double step = 0.0;
  int order = 4;

  double horizon() const { return times.empty() ? 0.0 : times.back(); }
  // Linear interpolation between neighbouring samples. Throws TimeOutOfRange.
  Matrix at(double t) const;
};

struct ARESolution {
  Matrix P;
  double residual = 0.0;
  Eigen::VectorXcd closed_loop_eigenvalues;
  bool newton_refined = false;
};

enum class AreMethod { Auto, Schur, Newton };

struct AreOptions {
  AreMethod method = AreMethod::Auto;
  double condition_limit = 1e12;
  int max_iterations = 100;
  double pbh_tol = 1e-8;
  double pbh_margin = 1e-10;
};

// -dP/dt = A'P + PA - P B R^-1 B' P + Q,  P(T) = QT, integrated with
// fixed-step RK4 in reversed time. The step is shrunk so it divides T.
RiccatiODESolution solve_riccati_ode(const LQRData& data, double horizon, double step,
                                     double pd_tol = 1e-8);

// Stabilizing solution of 0 = A'P + PA - P B R^-1 B' P + Q.
ARESolution solve_are(const LQRData& data, const AreOptions& options = {});

// ||A'P + PA - P B R^-1 B' P + Q||_F
double are_residual(const Matrix& P, const LQRData& data);

// (r_scale R)^-1 B' P
Matrix gain_from_solution(const Matrix& P, const Matrix& B, const Matrix& R, double r_scale);

// Solves A' X + X A + C = 0 for X (A Hurwitz for a unique solution).
Matrix solve_lyapunov(const Matrix& A, const Matrix& C);

struct PbhResult {
  bool ok = true;
  std::complex<double> failing_mode{0.0, 0.0};
  // Smallest singular value of [A - sI, B] over tested modes, relative to
  // the threshold scale; < 1 means rank deficient.
  double margin = 0.0;
};

// PBH test: rank [A - sI, B] = d for every eigenvalue s of A with
// Re(s) >= -margin, rank decided by singular values against
// tol * max(||[A - sI, B]||_2, ||A||_F + ||B||_F).
PbhResult pbh_stabilizable(const Matrix& A, const Matrix& B, double tol = 1e-8,
                           double margin = 1e-10);
// (A, C) detectable iff (A', C') stabilizable.
PbhResult pbh_detectable(const Matrix& A, const Matrix& C, double tol = 1e-8,
                         double margin = 1e-10);

}  // namespace netlqr
