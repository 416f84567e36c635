#pragma once

#include <cmath>
#include <memory>
#include <random>

#include "netlqr/decomposition.hpp"
#include "netlqr/graph_coupling.hpp"
#include "netlqr/model.hpp"

namespace testing {

using netlqr::Matrix;
using netlqr::Vector;

inline Matrix random_matrix(std::mt19937_64& rng, Eigen::Index r, Eigen::Index c,
                            double scale = 1.0) {
  std::normal_distribution<double> n(0.0, scale);
  Matrix m(r, c);
  for (Eigen::Index k = 0; k < m.size(); ++k) m.data()[k] = n(rng);
  return m;
}

inline Matrix random_spd(std::mt19937_64& rng, Eigen::Index d, double floor = 0.2) {
  const Matrix C = random_matrix(rng, d, d, 0.6);
  return C.transpose() * C + floor * Matrix::Identity(d, d);
}

inline Matrix random_psd(std::mt19937_64& rng, Eigen::Index d) {
  const Matrix C = random_matrix(rng, 1, d, 0.8);
  return C.transpose() * C;
}

// Random symmetric coupling; about a third are rank deficient or carry a
// repeated eigenvalue so grouping and the auxiliary subspace get exercised.
inline Matrix random_coupling(std::mt19937_64& rng, int n) {
  std::uniform_int_distribution<int> pick(0, 2);
  const int kind = pick(rng);
  if (kind == 0) {
    const Matrix S = random_matrix(rng, n, n, 0.5);
    return 0.5 * (S + S.transpose());
  }
  Eigen::HouseholderQR<Matrix> qr(random_matrix(rng, n, n));
  const Matrix V = qr.householderQ() * Matrix::Identity(n, n);
  std::uniform_real_distribution<double> u(-1.2, 1.2);
  Vector lambda(n);
  for (int i = 0; i < n; ++i) lambda(i) = u(rng);
  if (kind == 1) {
    for (int i = n / 2; i < n; ++i) lambda(i) = 0.0;
  } else if (n >= 3) {
    lambda(1) = lambda(0);
    lambda(n - 1) = 0.0;
  }
  const Matrix M = V * lambda.asDiagonal() * V.transpose();
  return 0.5 * (M + M.transpose());
}

struct RandomInstance {
  netlqr::SystemModel model;
  Matrix M;
  netlqr::CostCoupling cost;
  Matrix G, H;
  netlqr::SpectralHandle spec;
  netlqr::EffectiveWeights weights;
  Matrix x0;
};

// Random instance satisfying A0-A2 with degree <= 2 polynomial cost
// couplings (rejection sampled on the effective weights).
inline RandomInstance random_instance(std::mt19937_64& rng, int n, int dx, int du,
                                      bool noise = false) {
  RandomInstance r;
  for (;;) {
    r.M = random_coupling(rng, n);
    r.spec = std::make_shared<const netlqr::SpectralData>(netlqr::spectral_decompose(r.M));
    std::uniform_real_distribution<double> c(-0.6, 0.6);
    std::uniform_real_distribution<double> pos(0.3, 1.5);
    r.cost.state = netlqr::Polynomial{{pos(rng), c(rng), std::abs(c(rng))}};
    r.cost.control = netlqr::Polynomial{{pos(rng), 0.5 * c(rng), std::abs(c(rng))}};
    r.weights = netlqr::effective_weights(*r.spec, r.cost);
    bool ok = r.weights.q0 >= 0.0 && r.weights.r0 > 0.1;
    for (int g = 0; g < r.spec->distinct(); ++g) {
      ok = ok && r.weights.q(g) >= 0.0 && r.weights.r(g) > 0.1;
    }
    if (ok) break;
  }
  r.model.A = random_matrix(rng, dx, dx, 0.7);
  r.model.B = random_matrix(rng, dx, du, 0.8);
  r.model.D = random_matrix(rng, dx, dx, 0.4);
  r.model.E = random_matrix(rng, dx, du, 0.4);
  r.model.Q = random_spd(rng, dx, 0.3);
  r.model.R = random_spd(rng, du, 0.5);
  r.model.QT = random_psd(rng, dx);
  if (noise) r.model.F = random_matrix(rng, dx, dx, 0.5);
  r.model.normalize();
  r.G = netlqr::evaluate_matrix(r.cost.state, r.M);
  r.H = netlqr::evaluate_matrix(r.cost.control, r.M);
  r.x0 = random_matrix(rng, dx, n);
  return r;
}

// Closed form of -dP/dt = 2 a P - s P^2 + q, P(T) = pT (scalar, s = b^2/r).
inline double scalar_riccati_closed_form(double a, double s, double q, double pT, double T,
                                         double t) {
  const double beta = std::sqrt(a * a + s * q);
  const double tau = T - t;
  const double z0 = (s * pT - a) / beta;
  double z;
  if (std::abs(z0) < 1.0) {
    z = std::tanh(beta * tau + std::atanh(z0));
  } else if (std::abs(z0) > 1.0) {
    z = 1.0 / std::tanh(beta * tau + std::atanh(1.0 / z0));
  } else {
    z = z0;
  }
  return (a + beta * z) / s;
}

// sum_i sum_j p_ij x_i' y_j, literally.
inline double brute_weighted_inner(const Matrix& x, const Matrix& y, const Matrix& P) {
  double s = 0.0;
  for (Eigen::Index i = 0; i < x.cols(); ++i) {
    for (Eigen::Index j = 0; j < y.cols(); ++j) s += P(i, j) * x.col(i).dot(y.col(j));
  }
  return s;
}

// c_0 + c_1 s + ... by explicit powers.
inline double power_sum(const std::vector<double>& c, double s) {
  double out = 0.0;
  for (std::size_t k = 0; k < c.size(); ++k) out += c[k] * std::pow(s, static_cast<double>(k));
  return out;
}

inline Matrix fig3_adjacency(double a, double b) {
  Matrix M(4, 4);
  M << 0, a, 0, b, a, 0, a, 0, 0, a, 0, b, b, 0, b, 0;
  return M;
}

inline Matrix scalar_matrix(double v) { return Matrix::Constant(1, 1, v); }

// Example 1 local model: scalar subsystems.
inline netlqr::SystemModel example1_model() {
  netlqr::SystemModel m;
  m.A = scalar_matrix(2);
  m.B = scalar_matrix(1);
  m.D = scalar_matrix(3);
  m.E = scalar_matrix(0.5);
  m.Q = scalar_matrix(5);
  m.QT = scalar_matrix(6);
  m.R = scalar_matrix(2);
  m.normalize();
  return m;
}

// Coupled harmonic oscillators.
inline netlqr::SystemModel example2_model() {
  netlqr::SystemModel m;
  m.A.resize(2, 2);
  m.A << 0, 10, -20, 0;
  m.B.resize(2, 1);
  m.B << 0, 1.5;
  m.D = Matrix::Identity(2, 2);
  m.E = Matrix::Ones(2, 1);
  m.Q = 6 * Matrix::Identity(2, 2);
  m.QT = 5 * Matrix::Identity(2, 2);
  m.R = scalar_matrix(1);
  m.normalize();
  return m;
}

inline netlqr::CostCoupling example1_cost() {
  netlqr::CostCoupling c;
  c.state = netlqr::Polynomial{{1, -2, 1}};
  c.control = netlqr::Polynomial{{1}};
  return c;
}

}  // namespace testing
