#include "doctest.h"

#include <cmath>
#include <random>

#include "netlqr/config.hpp"
#include "netlqr/errors.hpp"
#include "netlqr/graph_coupling.hpp"
#include "support.hpp"

using namespace netlqr;

namespace {

ErrorCode code_of(auto&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  FAIL("expected an error");
  return ErrorCode::InvalidArgument;
}

// Eigenvector with the sign fixed by its largest entry.
Vector canonical(Vector v) {
  Eigen::Index k;
  v.cwiseAbs().maxCoeff(&k);
  return v(k) < 0 ? Vector(-v) : v;
}

}  // namespace

TEST_CASE("fig3 adjacency") {
  const Matrix M = build_coupling(fig3_graph(2, 1), AdjacencyCoupling{});
  Matrix expected(4, 4);
  expected << 0, 2, 0, 1, 2, 0, 2, 0, 0, 2, 0, 1, 1, 0, 1, 0;
  CHECK((M - expected).norm() == 0.0);
}

TEST_CASE("single node laplacian is zero") {
  GraphSpec g;
  g.n = 1;
  const Matrix L = build_coupling(g, LaplacianCoupling{});
  REQUIRE(L.rows() == 1);
  CHECK(L(0, 0) == 0.0);
}

TEST_CASE("complete graph with self loops is the mean-field matrix") {
  const Matrix M = build_coupling(complete_graph(4, 0.25, true), AdjacencyCoupling{});
  CHECK((M - Matrix::Constant(4, 4, 0.25)).norm() < 1e-15);
}

TEST_CASE("laplacian rows sum to zero") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> w(0.1, 2.0);
  GraphSpec g;
  g.n = 6;
  for (int i = 1; i <= 6; ++i)
    for (int j = i + 1; j <= 6; ++j)
      if ((i + j) % 2 == 1) g.edges.push_back({i, j, w(rng)});
  const Matrix L = build_coupling(g, LaplacianCoupling{});
  CHECK(L.rowwise().sum().cwiseAbs().maxCoeff() < 1e-14);
  CHECK((L - L.transpose()).norm() == 0.0);
  CHECK(min_symmetric_eigenvalue(L) > -1e-12);
}

TEST_CASE("coupling errors") {
  GraphSpec g;
  g.n = 3;
  g.edges.push_back({1, 4, 1.0});
  CHECK(code_of([&] { build_coupling(g, AdjacencyCoupling{}); }) == ErrorCode::IndexOutOfRange);

  Matrix C(2, 2);
  C << 0, 1, 2, 0;
  GraphSpec g2;
  g2.n = 2;
  CHECK(code_of([&] { build_coupling(g2, CustomCoupling{C}); }) ==
        ErrorCode::AsymmetricCustomMatrix);
  CHECK(code_of([&] { build_coupling(g2, CustomCoupling{Matrix::Zero(3, 3)}); }) ==
        ErrorCode::DimensionMismatch);
  CHECK(code_of([&] { spectral_decompose(C); }) == ErrorCode::AsymmetricInput);
  CHECK(code_of([&] { kronecker_expand(C, 0); }) == ErrorCode::InvalidArgument);
}

TEST_CASE("kronecker expansion") {
  const Matrix M = testing::fig3_adjacency(2, 1);
  CHECK((kronecker_expand(M, 1) - M).norm() == 0.0);

  const Matrix M20 = kronecker_expand(M, 5);
  REQUIRE(M20.rows() == 20);
  for (int i = 0; i < 20; ++i)
    for (int j = 0; j < 20; ++j) CHECK(M20(i, j) == doctest::Approx(M(i / 5, j / 5) / 5.0));

  // Expansion by a normalized all-ones block keeps the nonzero spectrum.
  const SpectralData s1 = spectral_decompose(M);
  for (int c : {2, 5}) {
    const SpectralData sc = spectral_decompose(kronecker_expand(M, c));
    REQUIRE(sc.rank() == s1.rank());
    CHECK((sc.eigenvalues - s1.eigenvalues).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("kron graph generator matches matrix expansion") {
  const Matrix direct = kronecker_expand(testing::fig3_adjacency(2, 1), 3);
  const Matrix built = build_coupling(kron_graph(fig3_graph(2, 1), 3), AdjacencyCoupling{});
  CHECK((direct - built).norm() < 1e-14);
}

TEST_CASE("mean-field spectrum") {
  const SpectralData s = spectral_decompose(Matrix::Constant(4, 4, 0.25));
  REQUIRE(s.rank() == 1);
  CHECK(s.distinct() == 1);
  CHECK(s.eigenvalues(0) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK((canonical(s.eigenvectors.col(0)) - Vector::Constant(4, 0.5)).norm() < 1e-14);
}

TEST_CASE("fig3 spectrum against the closed form") {
  // Rows 2 and 4 of M v = lambda v with v = (1, x, 1, y) give x = 2a/lambda,
  // y = 2b/lambda, and row 1 then gives lambda^2 = 2(a^2 + b^2).
  for (auto [a, b] : {std::pair{2.0, 1.0}, std::pair{1.0, 3.0}, std::pair{0.5, 0.5}}) {
    const Matrix M = testing::fig3_adjacency(a, b);
    const SpectralData s = spectral_decompose(M);
    REQUIRE(s.rank() == 2);
    CHECK(s.distinct() == 2);
    const double mu = std::sqrt(2.0 * (a * a + b * b));
    CHECK(std::abs(s.eigenvalues(0) + mu) < 1e-12);
    CHECK(std::abs(s.eigenvalues(1) - mu) < 1e-12);

    const double theta = std::atan(b / a);
    Vector vm(4), vp(4);
    vm << -0.5, std::cos(theta) / std::sqrt(2.0), -0.5, std::sin(theta) / std::sqrt(2.0);
    vp << 0.5, std::cos(theta) / std::sqrt(2.0), 0.5, std::sin(theta) / std::sqrt(2.0);
    CHECK((M * vm - (-mu) * vm).norm() < 1e-12);
    CHECK((M * vp - mu * vp).norm() < 1e-12);
    CHECK((canonical(s.eigenvectors.col(0)) - canonical(vm)).norm() < 1e-12);
    CHECK((canonical(s.eigenvectors.col(1)) - canonical(vp)).norm() < 1e-12);
  }
}

TEST_CASE("zero coupling has empty spectral data") {
  const SpectralData s = spectral_decompose(Matrix::Zero(3, 3));
  CHECK(s.rank() == 0);
  CHECK(s.distinct() == 0);
  CHECK((s.auxiliary_projector() - Matrix::Identity(3, 3)).norm() == 0.0);
}

TEST_CASE("spectral postconditions on random couplings") {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 40; ++trial) {
    const int n = 2 + trial % 6;
    const Matrix M = testing::random_coupling(rng, n);
    const SpectralData s = spectral_decompose(M);
    const double scale = norm2(M);
    const Matrix V = s.eigenvectors;
    CHECK((V.transpose() * V - Matrix::Identity(s.rank(), s.rank())).norm() < 1e-10);
    const Matrix recon = V * s.eigenvalues.asDiagonal() * V.transpose();
    CHECK((M - recon).norm() <= 1e-9 * scale + 1e-14);
    for (int l = 0; l < s.rank(); ++l) CHECK(std::abs(s.eigenvalues(l)) > 1e-9 * scale);
    for (int g = 0; g < s.distinct(); ++g) {
      for (int l : s.groups[g])
        for (int m : s.groups[g])
          CHECK(std::abs(s.eigenvalues(l) - s.eigenvalues(m)) <= s.tolerances.group_tol);
      if (g > 0) CHECK(s.group_values(g) - s.group_values(g - 1) > s.tolerances.group_tol);
    }
    Matrix sumP = s.auxiliary_projector();
    for (int g = 0; g < s.distinct(); ++g) sumP += s.group_projector(g);
    CHECK((sumP - Matrix::Identity(n, n)).norm() < 1e-10);
  }
}

TEST_CASE("repeated eigenvalues are grouped") {
  std::mt19937_64 rng(5);
  const Matrix V = Eigen::HouseholderQR<Matrix>(testing::random_matrix(rng, 5, 5)).householderQ() *
                   Matrix::Identity(5, 5);
  Vector lam(5);
  lam << 0.7, 0.7, 0.7, -0.3, 0.0;
  Matrix M = V * lam.asDiagonal() * V.transpose();
  M = symmetrize(M);
  const SpectralData s = spectral_decompose(M);
  REQUIRE(s.rank() == 4);
  REQUIRE(s.distinct() == 2);
  CHECK(s.groups[0].size() == 1);
  CHECK(s.groups[1].size() == 3);
  CHECK(s.group_values(1) == doctest::Approx(0.7).epsilon(1e-12));
}

TEST_CASE("weight functions") {
  std::mt19937_64 rng(2);
  const Matrix M = testing::random_coupling(rng, 5);
  const Polynomial p{{0.5, -1.0, 0.25, 0.1}};
  const Matrix brute = 0.5 * Matrix::Identity(5, 5) - M + 0.25 * M * M + 0.1 * M * M * M;
  CHECK((evaluate_matrix(p, M) - brute).norm() < 1e-13);
  for (double s : {-1.3, 0.0, 0.4, 2.0})
    CHECK(evaluate(p, s) == doctest::Approx(testing::power_sum(p.coefficients, s)));

  const Exponential e{0.3};
  CHECK(evaluate(e, 0.5) == doctest::Approx(std::exp(0.15)));
  // exp(gamma M) by a long Taylor series
  Matrix term = Matrix::Identity(5, 5), series = term;
  for (int k = 1; k < 40; ++k) {
    term = term * (0.3 * M) / k;
    series += term;
  }
  CHECK((evaluate_matrix(e, M) - series).norm() < 1e-12);

  const double rho = norm2(M);
  const Inverse inv{0.5 / rho};
  Matrix geo = Matrix::Identity(5, 5), pw = geo;
  for (int k = 1; k < 200; ++k) {
    pw = pw * (inv.gamma * M);
    geo += pw;
  }
  CHECK((evaluate_matrix(inv, M) - geo).norm() < 1e-12);
  CHECK(code_of([&] { evaluate_matrix(Inverse{2.0 / rho}, M); }) ==
        ErrorCode::SpectralRadiusViolation);
}

TEST_CASE("effective weights") {
  const SpectralData s = spectral_decompose(testing::fig3_adjacency(2, 1));
  CostCoupling c;
  c.state = Polynomial{{1, -2, 1}};
  c.control = Polynomial{{1}};
  const EffectiveWeights w = effective_weights(s, c);
  CHECK(w.q0 == 1.0);
  CHECK(w.r0 == 1.0);
  for (int g = 0; g < 2; ++g) {
    CHECK(w.q(g) == doctest::Approx(std::pow(1.0 - s.group_values(g), 2)).epsilon(1e-14));
    CHECK(w.r(g) == 1.0);
  }

  CostCoupling cons;
  cons.state = Polynomial{{0, 0, 1}};
  const EffectiveWeights wc = effective_weights(s, cons);
  CHECK(wc.q0 == 0.0);
  for (int g = 0; g < 2; ++g)
    CHECK(wc.q(g) == doctest::Approx(s.group_values(g) * s.group_values(g)));

  CostCoupling constant;
  constant.state = Polynomial{{3.0}};
  constant.control = Polynomial{{0.5}};
  const EffectiveWeights wk = effective_weights(s, constant);
  CHECK(wk.q(0) == 3.0);
  CHECK(wk.q(1) == 3.0);
  CHECK(wk.r(0) == 0.5);
}

TEST_CASE("assumption checks") {
  const SpectralData s = spectral_decompose(testing::fig3_adjacency(2, 1));
  CostCoupling c;
  c.state = Polynomial{{1, -2, 1}};
  const EffectiveWeights w = effective_weights(s, c);

  SystemModel m;
  m.A = Matrix::Constant(1, 1, 2.0);
  m.B = Matrix::Constant(1, 1, 1.0);
  m.D = Matrix::Constant(1, 1, 3.0);
  m.E = Matrix::Constant(1, 1, 0.5);
  m.Q = Matrix::Constant(1, 1, 5.0);
  m.QT = Matrix::Constant(1, 1, 6.0);
  m.R = Matrix::Constant(1, 1, 2.0);
  m.normalize();
  CHECK(validate_assumptions(m, s, w, false).finite_horizon_ok());

  SystemModel bad = m;
  bad.R = Matrix::Zero(1, 1);
  const AssumptionReport r = validate_assumptions(bad, s, w, false);
  CHECK_FALSE(r.a1_ok);
  CHECK_FALSE(r.diagnostics.empty());

  CostCoupling negative;
  negative.state = Polynomial{{1, 0, -1}};  // q < 0 at |lambda| > 1
  CHECK_FALSE(validate_assumptions(m, s, effective_weights(s, negative), false).a2_ok);

  // Consensus setup: A = 0, B = 1, q = lambda^2 > 0.
  SystemModel cm;
  cm.A = Matrix::Zero(1, 1);
  cm.B = Matrix::Identity(1, 1);
  cm.Q = Matrix::Identity(1, 1);
  cm.R = Matrix::Constant(1, 1, 0.1);
  cm.normalize();
  GraphSpec ring;
  ring.n = 5;
  for (int i = 1; i <= 5; ++i) ring.edges.push_back({i, i % 5 + 1, 1.0});
  const SpectralData sl = spectral_decompose(build_coupling(ring, LaplacianCoupling{}));
  CostCoupling cc;
  cc.state = Polynomial{{0, 0, 1}};
  const AssumptionReport rc = validate_assumptions(cm, sl, effective_weights(sl, cc), true);
  CHECK(rc.a3_ok);
  CHECK(rc.a4_ok);
  CHECK(rc.ok());
}
