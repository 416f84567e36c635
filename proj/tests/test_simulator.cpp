#include "doctest.h"

#include <cmath>
#include <memory>
#include <random>

#include "netlqr/errors.hpp"
#include "netlqr/simulator.hpp"
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

struct Instance {
  SystemModel model;
  Matrix M, G, H;
  SpectralHandle spec;
  EffectiveWeights weights;
  std::shared_ptr<const GainSchedule> gains;

  Instance(SystemModel m, Matrix coupling, const CostCoupling& cost, double T, double step)
      : model(std::move(m)), M(std::move(coupling)) {
    G = evaluate_matrix(cost.state, M);
    H = evaluate_matrix(cost.control, M);
    spec = std::make_shared<const SpectralData>(spectral_decompose(M));
    weights = effective_weights(*spec, cost);
    gains = std::make_shared<const GainSchedule>(synthesize_finite(model, *spec, weights, T, step));
  }
};

// Exact mean and covariance of x_{k+1} = Psi_k x_k + Psi^mid_k F dW_k (or of
// Euler-Maruyama), turned into the expected trapezoid cost.
double scheme_expected_cost(const Instance& in, const ControlLaw& law, const Matrix& x0, double T,
                            std::size_t N, bool euler) {
  const StackedSystem S = stack_system(in.model, in.M, in.G, in.H);
  const Eigen::Index m = S.A.rows();
  const Eigen::Index n = in.M.rows();
  const Matrix F = kron(Matrix::Identity(n, n), in.model.F);
  const Matrix I = Matrix::Identity(m, m);
  const double h = T / static_cast<double>(N);
  auto Acl = [&](double t) { return Matrix(S.A - S.B * *law.feedback_matrix(t)); };
  // One classical RK4 step of Phi' = A(t) Phi from t0 over `step`.
  auto rk4 = [&](double t0, double step) {
    const Matrix k1 = Acl(t0);
    const Matrix k2 = Acl(t0 + step / 2) * (I + step / 2 * k1);
    const Matrix k3 = Acl(t0 + step / 2) * (I + step / 2 * k2);
    const Matrix k4 = Acl(t0 + step) * (I + step * k3);
    return Matrix(I + step / 6 * (k1 + 2 * k2 + 2 * k3 + k4));
  };
  Vector mean = stack(x0);
  Matrix cov = Matrix::Zero(m, m);
  double running = 0.0;
  for (std::size_t k = 0;; ++k) {
    const double t = k == N ? T : h * static_cast<double>(k);
    const Matrix K = *law.feedback_matrix(t);
    const Matrix W = S.Q + K.transpose() * S.R * K;
    const double w = (k == 0 || k == N) ? 0.5 : 1.0;
    running += w * ((W * cov).trace() + mean.dot(W * mean));
    if (k == N) break;
    Matrix Psi, Noise;
    if (euler) {
      Psi = I + h * Acl(t);
      Noise = F;
    } else {
      Psi = rk4(t, h);
      Noise = rk4(t + h / 2, h / 2) * F;
    }
    mean = Psi * mean;
    cov = Psi * cov * Psi.transpose() + h * Noise * Noise.transpose();
  }
  return running * h + (S.QT * cov).trace() + mean.dot(S.QT * mean);
}

}  // namespace

TEST_CASE("stack and unstack") {
  Matrix x(2, 3);
  x << 1, 2, 3, 4, 5, 6;
  const Vector v = stack(x);
  Vector expected(6);
  expected << 1, 4, 2, 5, 3, 6;
  CHECK((v - expected).norm() == 0.0);
  CHECK((unstack(v, 2) - x).norm() == 0.0);
  CHECK(code_of([&] { unstack(v, 4); }) == ErrorCode::DimensionMismatch);
}

TEST_CASE("zero initial state stays at zero") {
  Instance in(testing::example1_model(), testing::fig3_adjacency(2, 1), testing::example1_cost(),
              2.0, 1e-3);
  const ClosedLoopLaw law(in.gains, in.spec);
  const Trajectory tr = simulate_deterministic(in.model, in.M, law, Matrix::Zero(1, 4), 2.0, 5e-4);
  for (std::size_t k = 0; k < tr.grid.size(); ++k) {
    CHECK(tr.state[k].norm() == 0.0);
    CHECK(tr.control[k].norm() == 0.0);
  }
  CHECK(evaluate_cost(tr, in.G, in.H, in.model.Q, in.model.R, in.model.QT).total == 0.0);
}

TEST_CASE("grid checks") {
  Instance in(testing::example1_model(), testing::fig3_adjacency(2, 1), testing::example1_cost(),
              2.0, 1e-3);
  const ClosedLoopLaw law(in.gains, in.spec);
  const Matrix x0 = Matrix::Ones(1, 4);
  CHECK(code_of([&] { simulate_deterministic(in.model, in.M, law, x0, 2.0, 0.3); }) ==
        ErrorCode::GridMismatch);
  CHECK(code_of([&] { simulate_deterministic(in.model, in.M, law, x0, 2.0, 2e-3); }) ==
        ErrorCode::GridMismatch);
  CHECK(code_of([&] { simulate_deterministic(in.model, in.M, law, Matrix::Ones(1, 3), 2.0, 1e-3); }) ==
        ErrorCode::DimensionMismatch);
}

TEST_CASE("decomposed control reaches the oracle optimum") {
  // Fine grids keep trapezoid and gain interpolation errors below 1e-6.
  for (int which = 0; which < 2; ++which) {
    const double T = 2.0;
    SystemModel model = which == 0 ? testing::example1_model() : testing::example2_model();
    Instance in(model, kronecker_expand(testing::fig3_adjacency(2, 1), which == 0 ? 5 : 2),
                testing::example1_cost(), T, T / (which == 0 ? 8000 : 16000));
    std::mt19937_64 rng(10 + which);
    const Matrix x0 = testing::random_matrix(rng, model.state_dim(), in.M.rows());
    const ClosedLoopLaw law(in.gains, in.spec);
    const double dt = T / (which == 0 ? 16000 : 32000);
    const Trajectory tr = simulate_deterministic(in.model, in.M, law, x0, T, dt);
    const double J = evaluate_cost(tr, in.G, in.H, in.model.Q, in.model.R, in.model.QT).total;
    OracleOptions opts;
    opts.simulate = false;
    const OracleResult o =
        centralized_oracle(in.model, in.M, in.G, in.H, x0, T, dt, in.gains->step, opts);
    MESSAGE("example " << which + 1 << " J " << J << " oracle " << o.optimal_cost);
    CHECK(std::abs(J - o.optimal_cost) <= 1e-6 * std::abs(o.optimal_cost));
  }
}

TEST_CASE("oracle on a single system is plain lqr") {
  SystemModel m = testing::example2_model();
  const Matrix one = Matrix::Identity(1, 1);
  const Matrix x0 = Vector::Ones(2);
  const OracleResult o = centralized_oracle(m, Matrix::Zero(1, 1), one, one, x0, 1.0, 1e-3, 1e-3);
  const RiccatiODESolution ref = solve_riccati_ode({m.A, m.B, m.Q, m.R, m.QT}, 1.0, 1e-3);
  CHECK((o.P0 - ref.samples.front()).norm() < 1e-12);
  REQUIRE(o.cost.has_value());
  CHECK(o.cost->total == doctest::Approx(o.optimal_cost).epsilon(1e-5));
}

TEST_CASE("oracle cost equals decomposed cost on random instances") {
  std::mt19937_64 rng(12);
  for (int trial = 0; trial < 4; ++trial) {
    const auto r = testing::random_instance(rng, 4, 2, 1);
    const auto gains = std::make_shared<const GainSchedule>(
        synthesize_finite(r.model, *r.spec, r.weights, 1.0, 1e-3));
    const ClosedLoopLaw law(gains, r.spec);
    const Trajectory tr = simulate_deterministic(r.model, r.M, law, r.x0, 1.0, 5e-4);
    const double J = evaluate_cost(tr, r.G, r.H, r.model.Q, r.model.R, r.model.QT).total;
    const OracleResult o = centralized_oracle(r.model, r.M, r.G, r.H, r.x0, 1.0, 5e-4, 1e-3);
    CHECK(std::abs(J - o.cost->total) <= 1e-6 * std::abs(o.cost->total));
    // Same value from the decomposed Riccati samples.
    const StochasticValue v = stochastic_value(r.model, *gains, r.spec, r.weights, r.x0);
    CHECK(std::abs(v.analytic - o.optimal_cost) <= 1e-8 * std::abs(o.optimal_cost));
  }
}

TEST_CASE("mean-field oracle gain matches the decomposed feedback") {
  const int n = 4;
  SystemModel m = testing::example2_model();
  CostCoupling c;
  c.state = Polynomial{{1, 0.5}};
  Instance in(m, Matrix::Constant(n, n, 1.0 / n), c, 1.0, 1e-3);
  std::mt19937_64 rng(13);
  const Matrix x0 = testing::random_matrix(rng, 2, n);
  const OracleResult o = centralized_oracle(in.model, in.M, in.G, in.H, x0, 1.0, 1e-3, 1e-3);
  const ClosedLoopLaw law(in.gains, in.spec);
  const Vector u_oracle = -o.gains.front() * stack(x0);
  const Vector u_dec = stack(law.control(0.0, x0));
  CHECK((u_oracle - u_dec).norm() <= 1e-9 * (1 + u_oracle.norm()));
}

TEST_CASE("oracle size guard") {
  const Matrix one = Matrix::Identity(3, 3);
  SystemModel m = testing::example1_model();
  OracleOptions opts;
  opts.max_dimension = 2;
  CHECK(code_of([&] {
          centralized_oracle(m, Matrix::Zero(3, 3), one, one, Matrix::Ones(1, 3), 1.0, 1e-2, 1e-2,
                             opts);
        }) == ErrorCode::TooLarge);
}

TEST_CASE("cost evaluation") {
  Trajectory tr;
  const Matrix x = (Matrix(2, 3) << 1, -2, 0.5, 0, 1, 3).finished();
  for (int k = 0; k <= 10; ++k) {
    tr.grid.push_back(0.1 * k);
    tr.state.push_back(x);
    tr.control.push_back(Matrix::Zero(1, 3));
  }
  std::mt19937_64 rng(14);
  const Matrix Q = testing::random_spd(rng, 2);
  const Matrix G = testing::random_spd(rng, 3);
  const CostReport c =
      evaluate_cost(tr, G, Matrix::Identity(3, 3), Q, Matrix::Identity(1, 1), Matrix::Zero(2, 2));
  CHECK(c.total == doctest::Approx(testing::brute_weighted_inner(x, Q * x, G)).epsilon(1e-12));
  CHECK(c.terminal == 0.0);
}

TEST_CASE("cost breakdown sums to the total") {
  std::mt19937_64 rng(15);
  const auto r = testing::random_instance(rng, 5, 2, 2);
  Trajectory tr;
  for (int k = 0; k <= 50; ++k) {
    tr.grid.push_back(0.02 * k);
    tr.state.push_back(testing::random_matrix(rng, 2, 5));
    tr.control.push_back(testing::random_matrix(rng, 2, 5));
  }
  const CostReport c =
      evaluate_cost(tr, r.G, r.H, r.model.Q, r.model.R, r.model.QT, r.spec, r.weights);
  REQUIRE(c.breakdown.has_value());
  CHECK(std::abs(c.breakdown->total() - c.total) <= 1e-8 * (1 + std::abs(c.total)));
}

TEST_CASE("stochastic value special cases") {
  Instance in(testing::example2_model(), testing::fig3_adjacency(2, 1), testing::example1_cost(),
              2.0, 1e-3);
  std::mt19937_64 rng(16);
  const Matrix x0 = testing::random_matrix(rng, 2, 4);

  const StochasticValue det = stochastic_value(in.model, *in.gains, in.spec, in.weights, x0);
  const DecomposedField d = decompose(x0, in.spec);
  double direct = 0.0;
  for (int i = 0; i < 4; ++i) {
    direct += d.auxiliary.col(i).dot(in.gains->auxiliary_riccati.front() * d.auxiliary.col(i));
    for (int l = 0; l < 2; ++l)
      direct += d.eigen[l].col(i).dot(in.gains->group_riccati[in.spec->group_of[l]].front() *
                                      d.eigen[l].col(i));
  }
  CHECK(det.analytic == doctest::Approx(direct).epsilon(1e-13));
  CHECK(det.auxiliary_trace_integral == 0.0);

  SystemModel noisy = in.model;
  noisy.F = Matrix::Identity(2, 2);
  const StochasticValue z = stochastic_value(noisy, *in.gains, in.spec, in.weights, Matrix::Zero(2, 4));
  const double expected = (4 - 2) * z.auxiliary_trace_integral + z.group_trace_integral[0] +
                          z.group_trace_integral[1];
  CHECK(z.analytic == doctest::Approx(expected).epsilon(1e-12));
  CHECK(z.component_sum() == doctest::Approx(z.analytic).epsilon(1e-14));
}

TEST_CASE("noiseless ensemble is the deterministic run") {
  Instance in(testing::example1_model(), testing::fig3_adjacency(2, 1), testing::example1_cost(),
              2.0, 1e-3);
  const ClosedLoopLaw law(in.gains, in.spec);
  const Matrix x0 = (Matrix(1, 4) << 0.3, -0.1, 0.8, -0.5).finished();
  const Trajectory tr = simulate_deterministic(in.model, in.M, law, x0, 2.0, 1e-3);
  const double J = evaluate_cost(tr, in.G, in.H, in.model.Q, in.model.R, in.model.QT).total;
  StochasticOptions opts;
  opts.n_paths = 5;
  opts.keep_paths = 2;
  const StochasticEnsemble e =
      simulate_stochastic(in.model, in.M, law, in.G, in.H, x0, 2.0, 1e-3, opts);
  for (double c : e.path_costs) CHECK(c == J);
  CHECK(e.mean == J);
  REQUIRE(e.kept.size() == 2);
  CHECK((e.kept[1].state.back() - tr.state.back()).norm() == 0.0);
}

TEST_CASE("ensembles are reproducible and independent of batching") {
  SystemModel m = testing::example1_model();
  m.F = Matrix::Identity(1, 1);
  Instance in(m, testing::fig3_adjacency(2, 1), testing::example1_cost(), 1.0, 1e-3);
  const ClosedLoopLaw law(in.gains, in.spec);
  const Matrix x0 = Matrix::Constant(1, 4, 0.2);
  for (auto scheme : {StochasticScheme::Auto, StochasticScheme::EulerMaruyama}) {
    StochasticOptions a;
    a.n_paths = 40;
    a.seed = 99;
    a.scheme = scheme;
    StochasticOptions b = a;
    b.n_paths = 75;
    b.parallel = false;
    const auto ea = simulate_stochastic(in.model, in.M, law, in.G, in.H, x0, 1.0, 1e-3, a);
    const auto ea2 = simulate_stochastic(in.model, in.M, law, in.G, in.H, x0, 1.0, 1e-3, a);
    const auto eb = simulate_stochastic(in.model, in.M, law, in.G, in.H, x0, 1.0, 1e-3, b);
    for (std::size_t p = 0; p < 40; ++p) {
      CHECK(ea.path_costs[p] == ea2.path_costs[p]);
      CHECK(ea.path_costs[p] == doctest::Approx(eb.path_costs[p]).epsilon(1e-12));
    }
    StochasticOptions c = a;
    c.seed = 100;
    const auto ec = simulate_stochastic(in.model, in.M, law, in.G, in.H, x0, 1.0, 1e-3, c);
    CHECK(ec.path_costs[0] != ea.path_costs[0]);
  }
}

TEST_CASE("kept path noise matches generate_noise") {
  SystemModel m = testing::example2_model();
  m.F = Matrix::Identity(2, 2);
  Instance in(m, testing::fig3_adjacency(2, 1), testing::example1_cost(), 0.5, 1e-3);
  const ClosedLoopLaw law(in.gains, in.spec);
  StochasticOptions opts;
  opts.n_paths = 3;
  opts.keep_paths = 3;
  opts.seed = 7;
  const auto e = simulate_stochastic(in.model, in.M, law, in.G, in.H, Matrix::Zero(2, 4), 0.5,
                                     1e-3, opts);
  const NoisePath p2 = generate_noise(2, 4, 500, 1e-3, 7, 2);
  REQUIRE(e.kept[2].noise.size() == 500);
  for (std::size_t k : {std::size_t{0}, std::size_t{499}})
    CHECK((e.kept[2].noise[k] - p2.increments[k]).norm() == 0.0);
}

TEST_CASE("scheme bias from exact moment propagation") {
  SystemModel m = testing::example2_model();
  m.F = Matrix::Identity(2, 2);
  const double T = 2.0;
  std::mt19937_64 rng(17);
  const Matrix x0 = testing::random_matrix(rng, 2, 4);

  // Default grids: the remaining bias is mostly gain interpolation.
  Instance in(m, testing::fig3_adjacency(2, 1), testing::example1_cost(), T, T / 2000);
  const ClosedLoopLaw law(in.gains, in.spec);
  const double V = stochastic_value(in.model, *in.gains, in.spec, in.weights, x0).analytic;
  const double scheme = scheme_expected_cost(in, law, x0, T, 2000, false);
  const double euler = scheme_expected_cost(in, law, x0, T, 2000, true);
  MESSAGE("V " << V << " scheme " << scheme << " euler " << euler);
  CHECK(std::abs(scheme - V) <= 1e-3 * V);
  CHECK(std::abs(scheme - V) < 0.02 * std::abs(euler - V));

  // With a fine gain grid the time step dominates, and the bias is second order.
  Instance fine(m, testing::fig3_adjacency(2, 1), testing::example1_cost(), T, T / 8000);
  const ClosedLoopLaw fl(fine.gains, fine.spec);
  const double Vf = stochastic_value(fine.model, *fine.gains, fine.spec, fine.weights, x0).analytic;
  const double b1 = scheme_expected_cost(fine, fl, x0, T, 1000, false) - Vf;
  const double b2 = scheme_expected_cost(fine, fl, x0, T, 2000, false) - Vf;
  MESSAGE("fine gains bias " << b1 << " -> " << b2);
  CHECK(std::abs(b2) <= 1e-4 * Vf);
  CHECK(std::abs(b1 / b2) > 3.0);
}

TEST_CASE("monte carlo mean agrees with the analytic value") {
  SystemModel m = testing::example1_model();
  m.F = Matrix::Identity(1, 1);
  Instance in(m, testing::fig3_adjacency(2, 1), testing::example1_cost(), 1.0, 1e-3);
  const ClosedLoopLaw law(in.gains, in.spec);
  const Matrix x0 = (Matrix(1, 4) << 0.5, -0.2, 0.1, 0.9).finished();
  StochasticOptions opts;
  opts.n_paths = 4000;
  opts.seed = 5;
  const auto e = simulate_stochastic(in.model, in.M, law, in.G, in.H, x0, 1.0, 1e-3, opts);
  const double V = stochastic_value(in.model, *in.gains, in.spec, in.weights, x0).analytic;
  const double z = std::abs(e.mean - V) / e.standard_error;
  MESSAGE("mc " << e.mean << " +- " << e.standard_error << " analytic " << V << " z " << z);
  CHECK(z <= 3.0);
}

TEST_CASE("noise decomposition") {
  const int n = 4;
  const std::size_t steps = 100000;
  const double dt = 1e-3;
  const auto spec =
      std::make_shared<const SpectralData>(spectral_decompose(Matrix::Constant(n, n, 0.25)));
  const NoisePath p = generate_noise(1, n, steps, dt, 3, 0);
  const DecomposedNoise d = decompose_noise(p, spec);
  double ve = 0.0, va = 0.0;
  for (std::size_t k = 0; k < steps; ++k) {
    ve += d.eigen[0][k](0, 1) * d.eigen[0][k](0, 1);
    va += d.auxiliary[k](0, 1) * d.auxiliary[k](0, 1);
  }
  ve /= static_cast<double>(steps);
  va /= static_cast<double>(steps);
  CHECK(std::abs(ve / (dt / 4) - 1.0) < 0.02);
  CHECK(std::abs(va / (dt * 3 / 4) - 1.0) < 0.02);

  const auto none = std::make_shared<const SpectralData>(spectral_decompose(Matrix::Zero(n, n)));
  const DecomposedNoise d0 = decompose_noise(p, none);
  CHECK(d0.eigen.empty());
  CHECK((d0.auxiliary[10] - p.increments[10]).norm() == 0.0);
  CHECK(code_of([&] { decompose_noise(generate_noise(1, 3, 2, dt, 1), spec); }) ==
        ErrorCode::DimensionMismatch);
}
