#include "doctest.h"

#include <cmath>
#include <random>

#include "netlqr/errors.hpp"
#include "netlqr/riccati.hpp"
#include "support.hpp"

using namespace netlqr;

namespace {

LQRData scalar(double a, double b, double q, double r, double qT) {
  LQRData d;
  d.A = Matrix::Constant(1, 1, a);
  d.B = Matrix::Constant(1, 1, b);
  d.Q = Matrix::Constant(1, 1, q);
  d.R = Matrix::Constant(1, 1, r);
  d.QT = Matrix::Constant(1, 1, qT);
  return d;
}

double max_error(const RiccatiODESolution& sol, const LQRData& d, double T) {
  const double s = d.B(0, 0) * d.B(0, 0) / d.R(0, 0);
  double err = 0.0;
  for (std::size_t k = 0; k < sol.times.size(); ++k) {
    const double exact =
        testing::scalar_riccati_closed_form(d.A(0, 0), s, d.Q(0, 0), d.QT(0, 0), T, sol.times[k]);
    err = std::max(err, std::abs(sol.samples[k](0, 0) - exact));
  }
  return err;
}

ErrorCode code_of(auto&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an error");
  return ErrorCode::InvalidArgument;
}

}  // namespace

TEST_CASE("scalar riccati ode matches tanh") {
  const LQRData d = scalar(0, 1, 1, 1, 0);
  const double T = 2.0;
  const RiccatiODESolution sol = solve_riccati_ode(d, T, T / 2000);
  CHECK(sol.samples.front()(0, 0) == doctest::Approx(std::tanh(2.0)).epsilon(1e-9));
  for (std::size_t k = 0; k < sol.times.size(); k += 97)
    CHECK(std::abs(sol.samples[k](0, 0) - std::tanh(T - sol.times[k])) < 1e-6);
  CHECK(sol.samples.back()(0, 0) == 0.0);
}

TEST_CASE("scalar riccati ode against the closed form for several regimes") {
  for (auto [a, b, q, r, qT] : {std::tuple{2.0, 1.0, 5.0, 2.0, 6.0}, std::tuple{-1.0, 0.5, 1.0, 1.0, 0.0},
                                std::tuple{0.3, 2.0, 0.5, 0.7, 4.0}}) {
    const LQRData d = scalar(a, b, q, r, qT);
    CHECK(max_error(solve_riccati_ode(d, 2.0, 1e-3), d, 2.0) < 1e-6);
  }
}

TEST_CASE("step halving shows fourth order") {
  const LQRData d = scalar(2.0, 1.0, 5.0, 2.0, 6.0);
  const double e1 = max_error(solve_riccati_ode(d, 2.0, 0.04), d, 2.0);
  const double e2 = max_error(solve_riccati_ode(d, 2.0, 0.02), d, 2.0);
  MESSAGE("errors " << e1 << " " << e2 << " ratio " << e1 / e2);
  CHECK(e1 / e2 >= 12.0);
}

TEST_CASE("zero weights give zero solution") {
  const RiccatiODESolution sol = solve_riccati_ode(scalar(0.7, 1, 0, 1, 0), 1.0, 0.01);
  for (const Matrix& P : sol.samples) CHECK(P(0, 0) == 0.0);
  // Auxiliary equation of the Laplacian example: a = 0.1, b = 1, r = 0.1, q = 0.
  const RiccatiODESolution aux = solve_riccati_ode(scalar(0.1, 1, 0, 0.1, 0), 2.0, 1e-3);
  for (const Matrix& P : aux.samples) CHECK(P(0, 0) == 0.0);
}

TEST_CASE("matrix riccati ode stays symmetric and matches a fine reference") {
  std::mt19937_64 rng(4);
  LQRData d;
  d.A = testing::random_matrix(rng, 3, 3);
  d.B = testing::random_matrix(rng, 3, 2);
  d.Q = testing::random_spd(rng, 3);
  d.R = testing::random_spd(rng, 2);
  d.QT = testing::random_psd(rng, 3);
  const RiccatiODESolution coarse = solve_riccati_ode(d, 1.0, 1e-3);
  const RiccatiODESolution fine = solve_riccati_ode(d, 1.0, 1e-5);
  CHECK((coarse.samples.front() - coarse.samples.front().transpose()).norm() < 1e-12);
  CHECK((coarse.samples.front() - fine.samples.front()).norm() < 1e-8);
  CHECK(min_symmetric_eigenvalue(coarse.samples.front()) > 0.0);
  CHECK((coarse.at(0.5) - fine.at(0.5)).norm() < 1e-8);
}

TEST_CASE("ode solution interpolation and errors") {
  const RiccatiODESolution sol = solve_riccati_ode(scalar(0, 1, 1, 1, 0), 1.0, 0.1);
  const double mid = 0.5 * (sol.samples[3](0, 0) + sol.samples[4](0, 0));
  CHECK(sol.at(0.35)(0, 0) == doctest::Approx(mid));
  CHECK(code_of([&] { sol.at(1.5); }) == ErrorCode::TimeOutOfRange);
  CHECK(code_of([&] { sol.at(-0.1); }) == ErrorCode::TimeOutOfRange);
  CHECK(code_of([&] { solve_riccati_ode(scalar(0, 1, 1, 0, 0), 1.0, 0.1); }) == ErrorCode::SingularR);
  CHECK(code_of([&] { solve_riccati_ode(scalar(0, 1, 1, 1, 0), 1.0, -0.1); }) ==
        ErrorCode::InvalidArgument);
}

TEST_CASE("stiff problem with a coarse step is refused") {
  const ErrorCode c = code_of([&] { solve_riccati_ode(scalar(0, 1, 1e4, 1, 1e6), 2.0, 0.5); });
  CHECK((c == ErrorCode::StepTooLarge || c == ErrorCode::NonFiniteBlowup));
}

TEST_CASE("scalar are") {
  const ARESolution s = solve_are(scalar(0, 1, 1, 1, 0));
  CHECK(s.P(0, 0) == doctest::Approx(1.0).epsilon(1e-12));

  // Consensus eigen problem: 0 = -P^2/R + lambda^2 Q with lambda = 2.
  const ARESolution c = solve_are(scalar(0, 1, 4, 0.1, 0));
  CHECK(std::abs(c.P(0, 0) - 2.0 * std::sqrt(0.1)) < 1e-12);
  CHECK(are_residual(c.P, scalar(0, 1, 4, 0.1, 0)) < 1e-12);

  for (auto [a, b, q, r] : {std::tuple{2.0, 1.0, 5.0, 2.0}, std::tuple{-3.0, 0.2, 1.0, 1.0}}) {
    const double s = b * b / r;
    const double exact = (a + std::sqrt(a * a + s * q)) / s;
    CHECK(solve_are(scalar(a, b, q, r, 0)).P(0, 0) == doctest::Approx(exact).epsilon(1e-12));
  }
}

TEST_CASE("unstabilizable pair is rejected") {
  CHECK(code_of([&] { solve_are(scalar(1, 0, 1, 1, 0)); }) == ErrorCode::NotStabilizable);
}

TEST_CASE("random are residuals and stability") {
  std::mt19937_64 rng(21);
  for (int trial = 0; trial < 30; ++trial) {
    const int d = 1 + trial % 4;
    const int m = 1 + trial % 2;
    LQRData data;
    data.A = testing::random_matrix(rng, d, d);
    data.B = testing::random_matrix(rng, d, m);
    data.Q = testing::random_spd(rng, d);
    data.R = testing::random_spd(rng, m);
    for (AreMethod method : {AreMethod::Auto, AreMethod::Schur, AreMethod::Newton}) {
      AreOptions opts;
      opts.method = method;
      const ARESolution s = solve_are(data, opts);
      const double scale = 1.0 + data.Q.norm() + s.P.norm() * (data.A.norm() + 1.0);
      CHECK(are_residual(s.P, data) <= 1e-9 * scale);
      CHECK(s.closed_loop_eigenvalues.real().maxCoeff() < 0.0);
      CHECK((s.P - s.P.transpose()).norm() < 1e-10 * (1.0 + s.P.norm()));
    }
  }
}

TEST_CASE("gain from solution") {
  const Matrix one = Matrix::Identity(1, 1);
  CHECK(gain_from_solution(one, one, one, 1.0)(0, 0) == 1.0);
  CHECK(gain_from_solution(Matrix::Zero(1, 1), one, one, 1.0)(0, 0) == 0.0);
  CHECK(gain_from_solution(one, 2.0 * one, 4.0 * one, 0.5)(0, 0) == doctest::Approx(1.0));
  CHECK(code_of([&] { gain_from_solution(one, one, one, 0.0); }) == ErrorCode::SingularR);
}

TEST_CASE("lyapunov solve") {
  std::mt19937_64 rng(8);
  const Matrix A = testing::random_matrix(rng, 4, 4) - 4.0 * Matrix::Identity(4, 4);
  const Matrix C = testing::random_spd(rng, 4);
  const Matrix X = solve_lyapunov(A, C);
  CHECK((A.transpose() * X + X * A + C).norm() < 1e-10);
}

TEST_CASE("pbh tests") {
  Matrix A(2, 2);
  A << 1, 0, 0, -1;
  Matrix B(2, 1);
  B << 0, 1;
  CHECK_FALSE(pbh_stabilizable(A, B).ok);
  B << 1, 0;
  CHECK(pbh_stabilizable(A, B).ok);
  Matrix C(1, 2);
  C << 0, 1;
  CHECK_FALSE(pbh_detectable(A, C).ok);
  C << 1, 0;
  CHECK(pbh_detectable(A, C).ok);
  // Marginal mode at zero must be controllable.
  CHECK_FALSE(pbh_stabilizable(Matrix::Zero(1, 1), Matrix::Zero(1, 1)).ok);
}
