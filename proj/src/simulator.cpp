#include "netlqr/simulator.hpp"

#include <cmath>
#include <numeric>
#include <random>
#include <string>

#include "netlqr/errors.hpp"
#include "netlqr/parallel.hpp"
#include "netlqr/rk4.hpp"

namespace netlqr {

namespace {

std::size_t step_count(double horizon, double dt) {
  if (!(horizon > 0.0) || !(dt > 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "horizon and dt must be positive");
  }
  const double n = horizon / dt;
  if (std::abs(n - std::round(n)) > 1e-9 * n || std::round(n) < 1.0) {
    throw Error(ErrorCode::GridMismatch, "dt does not divide the horizon");
  }
  return static_cast<std::size_t>(std::llround(n));
}

void check_refines(double gain_step, double dt) {
  if (gain_step <= 0.0) return;
  const double ratio = gain_step / dt;
  if (std::round(ratio) < 1.0 || std::abs(ratio - std::round(ratio)) > 1e-9 * ratio) {
    throw Error(ErrorCode::GridMismatch, "dt = " + std::to_string(dt) +
                                             " does not refine the gain step " +
                                             std::to_string(gain_step));
  }
}

void check_network(const SystemModel& model, const Matrix& M, const GlobalField& x0) {
  model.validate_dimensions();
  if (M.rows() != M.cols()) throw Error(ErrorCode::DimensionMismatch, "coupling must be square");
  require_shape(x0, model.state_dim(), M.rows(), "initial state");
}

std::mt19937_64 path_engine(std::uint64_t seed, std::uint64_t path) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(path), static_cast<std::uint32_t>(path >> 32)};
  return std::mt19937_64(seq);
}

void fill_normal(std::mt19937_64& engine, double scale, double* out, Eigen::Index count) {
  std::normal_distribution<double> normal(0.0, 1.0);
  for (Eigen::Index k = 0; k < count; ++k) out[k] = scale * normal(engine);
}

double trapezoid(const std::vector<double>& f, double h) {
  if (f.size() < 2) return 0.0;
  double s = 0.5 * (f.front() + f.back());
  for (std::size_t k = 1; k + 1 < f.size(); ++k) s += f[k];
  return s * h;
}

// u = -K(t) vec(x) with K linearly interpolated on a uniform grid.
class StackedFeedbackLaw final : public ControlLaw {
 public:
  StackedFeedbackLaw(const std::vector<Matrix>& gains, double step, Eigen::Index input_dim)
      : gains_(gains), step_(step), input_dim_(input_dim) {}
  GlobalField control(double t, const GlobalField& x) const override {
    return unstack(-(interpolate_samples(gains_, step_, t) * stack(x)), input_dim_);
  }
  double gain_step() const override { return step_; }
  std::optional<Matrix> feedback_matrix(double t) const override {
    return interpolate_samples(gains_, step_, t);
  }

 private:
  const std::vector<Matrix>& gains_;
  double step_;
  Eigen::Index input_dim_;
};

}  // namespace

Vector stack(const GlobalField& x) { return Eigen::Map<const Vector>(x.data(), x.size()); }

GlobalField unstack(const Vector& v, Eigen::Index rows) {
  if (rows <= 0 || v.size() % rows != 0) {
    throw Error(ErrorCode::DimensionMismatch, "cannot unstack vector");
  }
  return Eigen::Map<const Matrix>(v.data(), rows, v.size() / rows);
}

double CostBreakdown::total() const {
  double s = std::accumulate(auxiliary.begin(), auxiliary.end(), 0.0);
  for (const auto& e : eigen) s = std::accumulate(e.begin(), e.end(), s);
  return s;
}

double StochasticValue::component_sum() const {
  CostBreakdown b{auxiliary, eigen};
  return b.total();
}

Trajectory simulate_deterministic(const SystemModel& model, const Matrix& M, const ControlLaw& law,
                                  const GlobalField& x0, double horizon, double dt) {
  check_network(model, M, x0);
  const std::size_t N = step_count(horizon, dt);
  check_refines(law.gain_step(), dt);
  const double h = horizon / static_cast<double>(N);

  auto rhs = [&](double t, const GlobalField& x) -> GlobalField {
    const GlobalField u = law.control(t, x);
    return model.A * x + model.B * u + model.D * x * M + model.E * u * M;
  };

  Trajectory traj;
  traj.grid.resize(N + 1);
  traj.state.reserve(N + 1);
  traj.control.reserve(N + 1);
  GlobalField x = x0;
  for (std::size_t k = 0; k <= N; ++k) {
    const double t = k == N ? horizon : h * static_cast<double>(k);
    traj.grid[k] = t;
    traj.state.push_back(x);
    traj.control.push_back(law.control(t, x));
    if (k == N) break;
    x = rk4_step(rhs, t, x, h);
    if (!x.allFinite()) {
      throw Error(ErrorCode::NonFiniteBlowup,
                  "state overflow at t = " + std::to_string(t + h));
    }
  }
  return traj;
}

StochasticEnsemble simulate_stochastic(const SystemModel& model, const Matrix& M,
                                       const ControlLaw& law, const Matrix& G, const Matrix& H,
                                       const GlobalField& x0, double horizon, double dt,
                                       const StochasticOptions& options) {
  check_network(model, M, x0);
  if (options.n_paths < 1) throw Error(ErrorCode::InvalidArgument, "n_paths must be >= 1");
  const std::size_t N = step_count(horizon, dt);
  check_refines(law.gain_step(), dt);
  const double h = horizon / static_cast<double>(N);
  const Eigen::Index n = M.rows();
  const Eigen::Index dx = model.state_dim();
  const Eigen::Index du = model.input_dim();
  const Eigen::Index dw = model.noise_dim();
  const std::size_t keep = std::min(options.keep_paths, options.n_paths);

  StochasticEnsemble out;
  out.path_costs.assign(options.n_paths, 0.0);

  if (model.deterministic()) {
    Trajectory traj = simulate_deterministic(model, M, law, x0, horizon, h);
    const double J = evaluate_cost(traj, G, H, model.Q, model.R, model.QT).total;
    std::fill(out.path_costs.begin(), out.path_costs.end(), J);
    out.mean = J;
    out.kept.assign(keep, traj);
    return out;
  }

  std::vector<double> grid(N + 1);
  for (std::size_t k = 0; k <= N; ++k) grid[k] = k == N ? horizon : h * static_cast<double>(k);

  const Matrix F_stacked = kron(Matrix::Identity(n, n), model.F);
  const double sqrt_h = std::sqrt(h);
  out.kept.resize(keep);
  for (std::size_t p = 0; p < keep; ++p) {
    out.kept[p].grid = grid;
    out.kept[p].state.reserve(N + 1);
    out.kept[p].control.reserve(N + 1);
    out.kept[p].noise.reserve(N);
  }
  const Eigen::Index nw = dw * n;

  const bool linear = options.scheme == StochasticScheme::Auto && law.feedback_matrix(0.0);
  if (linear) {
    // x_{k+1} = Psi_k x_k + Psi_k^mid F dW_k, where Psi_k is the RK4 map of
    // the closed loop over the step and Psi_k^mid the RK4 map over its
    // second half.
    const StackedSystem S = stack_system(model, M, G, H);
    const Eigen::Index m = S.A.rows();
    const Matrix I = Matrix::Identity(m, m);
    std::vector<Matrix> K(N + 1), Psi(N), Noise(N), W(N + 1);
    for (std::size_t k = 0; k <= N; ++k) {
      K[k] = *law.feedback_matrix(grid[k]);
      W[k] = S.Q + K[k].transpose() * S.R * K[k];
    }
    auto closed = [&](double t) { return Matrix(S.A - S.B * *law.feedback_matrix(t)); };
    for (std::size_t k = 0; k < N; ++k) {
      const Matrix A0 = S.A - S.B * K[k];
      const Matrix Am = closed(grid[k] + 0.5 * h);
      const Matrix A1 = S.A - S.B * K[k + 1];
      const Matrix Aq = closed(grid[k] + 0.75 * h);
      auto rk4_map = [&](const Matrix& Aa, const Matrix& Ab, const Matrix& Ac, double step) {
        const Matrix k1 = Aa;
        const Matrix k2 = Ab * (I + 0.5 * step * k1);
        const Matrix k3 = Ab * (I + 0.5 * step * k2);
        const Matrix k4 = Ac * (I + step * k3);
        return Matrix(I + step / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4));
      };
      Psi[k] = rk4_map(A0, Am, A1, h);
      Noise[k] = rk4_map(Am, Aq, A1, 0.5 * h) * F_stacked;
    }

    constexpr std::size_t kBlock = 32;
    const std::size_t blocks = (options.n_paths + kBlock - 1) / kBlock;
    auto run_block = [&](std::size_t b) {
      const std::size_t p0 = b * kBlock;
      const auto cols = static_cast<Eigen::Index>(std::min(kBlock, options.n_paths - p0));
      std::vector<std::mt19937_64> engines;
      for (Eigen::Index j = 0; j < cols; ++j) engines.push_back(path_engine(options.seed, p0 + j));
      Matrix X = stack(x0).replicate(1, cols);
      Matrix next(m, cols), WX(m, cols), Z(nw, cols);
      Vector running = Vector::Zero(cols);
      for (std::size_t k = 0;; ++k) {
        WX.noalias() = W[k] * X;
        running += (k == 0 || k == N ? 0.5 : 1.0) * (X.cwiseProduct(WX)).colwise().sum().transpose();
        for (Eigen::Index j = 0; j < cols && p0 + j < keep; ++j) {
          out.kept[p0 + j].state.push_back(unstack(X.col(j), dx));
          out.kept[p0 + j].control.push_back(unstack(-(K[k] * X.col(j)), du));
        }
        if (k == N) break;
        for (Eigen::Index j = 0; j < cols; ++j) {
          fill_normal(engines[static_cast<std::size_t>(j)], sqrt_h, Z.col(j).data(), nw);
          if (p0 + j < keep) out.kept[p0 + j].noise.push_back(unstack(Z.col(j), dw));
        }
        next.noalias() = Psi[k] * X;
        next.noalias() += Noise[k] * Z;
        X.swap(next);
      }
      if (!X.allFinite()) throw Error(ErrorCode::NonFiniteBlowup, "path block " + std::to_string(b));
      WX.noalias() = S.QT * X;
      const Vector terminal = X.cwiseProduct(WX).colwise().sum().transpose();
      for (Eigen::Index j = 0; j < cols; ++j) {
        out.path_costs[p0 + j] = running(j) * h + terminal(j);
      }
    };
    parallel_for(blocks, run_block, options.parallel ? 0u : 1u);
  } else {
    auto run_path = [&](std::size_t p) {
      std::mt19937_64 engine = path_engine(options.seed, p);
      Trajectory* rec = p < keep ? &out.kept[p] : nullptr;
      Vector dW(nw);
      double running = 0.0;
      GlobalField x = x0;
      for (std::size_t k = 0;; ++k) {
        const GlobalField u = law.control(grid[k], x);
        running += (k == 0 || k == N ? 0.5 : 1.0) *
                   instantaneous_cost(x, u, G, H, model.Q, model.R);
        if (rec) {
          rec->state.push_back(x);
          rec->control.push_back(u);
        }
        if (k == N) break;
        fill_normal(engine, sqrt_h, dW.data(), dW.size());
        const GlobalField dWm = unstack(dW, dw);
        x = x + h * (model.A * x + model.B * u + model.D * x * M + model.E * u * M) +
            model.F * dWm;
        if (rec) rec->noise.push_back(dWm);
      }
      if (!x.allFinite()) throw Error(ErrorCode::NonFiniteBlowup, "path " + std::to_string(p));
      out.path_costs[p] = running * h + terminal_cost(x, G, model.QT);
    };
    parallel_for(options.n_paths, run_path, options.parallel ? 0u : 1u);
  }

  double sum = 0.0;
  for (double c : out.path_costs) sum += c;
  out.mean = sum / static_cast<double>(options.n_paths);
  if (options.n_paths > 1) {
    double ss = 0.0;
    for (double c : out.path_costs) ss += (c - out.mean) * (c - out.mean);
    out.standard_error =
        std::sqrt(ss / static_cast<double>(options.n_paths - 1) /
                  static_cast<double>(options.n_paths));
  }
  return out;
}

NoisePath generate_noise(Eigen::Index noise_dim, int n, std::size_t steps, double dt,
                         std::uint64_t seed, std::uint64_t path) {
  if (noise_dim < 1 || n < 1 || !(dt > 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "noise dimensions and dt must be positive");
  }
  NoisePath out;
  out.seed = seed;
  out.path = path;
  out.grid.resize(steps + 1);
  for (std::size_t k = 0; k <= steps; ++k) out.grid[k] = dt * static_cast<double>(k);
  std::mt19937_64 engine = path_engine(seed, path);
  out.increments.reserve(steps);
  for (std::size_t k = 0; k < steps; ++k) {
    Matrix dW(noise_dim, n);
    fill_normal(engine, std::sqrt(dt), dW.data(), dW.size());
    out.increments.push_back(std::move(dW));
  }
  return out;
}

DecomposedNoise decompose_noise(const NoisePath& path, const SpectralHandle& spec) {
  DecomposedNoise out;
  out.eigen.resize(static_cast<std::size_t>(spec->rank()));
  for (const Matrix& dW : path.increments) {
    if (dW.cols() != spec->n) {
      throw Error(ErrorCode::DimensionMismatch, "noise path and spectral data differ in n");
    }
    DecomposedField d = decompose(dW, spec);
    for (std::size_t l = 0; l < d.eigen.size(); ++l) out.eigen[l].push_back(std::move(d.eigen[l]));
    out.auxiliary.push_back(std::move(d.auxiliary));
  }
  return out;
}

StochasticValue stochastic_value(const SystemModel& model, const GainSchedule& gains,
                                 const SpectralHandle& spec, const EffectiveWeights& weights,
                                 const GlobalField& x0) {
  (void)weights;
  if (gains.horizon != Horizon::Finite || gains.auxiliary_riccati.size() < 2) {
    throw Error(ErrorCode::MissingRiccatiSamples, "finite-horizon Riccati samples required");
  }
  for (const auto& g : gains.group_riccati) {
    if (g.size() != gains.auxiliary_riccati.size()) {
      throw Error(ErrorCode::MissingRiccatiSamples, "group Riccati samples incomplete");
    }
  }
  if (gains.groups() != spec->distinct()) {
    throw Error(ErrorCode::MismatchedSpectralData, "gain schedule built for another spectrum");
  }
  require_shape(x0, model.state_dim(), spec->n, "initial state");
  const Matrix FF = model.F * model.F.transpose();
  auto trace_integral = [&](const std::vector<Matrix>& P) {
    std::vector<double> f;
    f.reserve(P.size());
    for (const Matrix& p : P) f.push_back((p * FF).trace());
    return trapezoid(f, gains.step);
  };

  StochasticValue v;
  v.auxiliary_trace_integral = trace_integral(gains.auxiliary_riccati);
  for (const auto& g : gains.group_riccati) v.group_trace_integral.push_back(trace_integral(g));

  const DecomposedField d = decompose(x0, spec);
  const Matrix& Paux = gains.auxiliary_riccati.front();
  const Matrix& V = spec->eigenvectors;
  v.auxiliary.resize(static_cast<std::size_t>(spec->n));
  v.eigen.assign(static_cast<std::size_t>(spec->rank()),
                 std::vector<double>(static_cast<std::size_t>(spec->n)));
  for (int i = 0; i < spec->n; ++i) {
    const double share = V.row(i).squaredNorm();
    const Vector xa = d.auxiliary.col(i);
    v.auxiliary[static_cast<std::size_t>(i)] =
        xa.dot(Paux * xa) + (1.0 - share) * v.auxiliary_trace_integral;
    for (int l = 0; l < spec->rank(); ++l) {
      const auto g = static_cast<std::size_t>(spec->group_of[static_cast<std::size_t>(l)]);
      const Vector xl = d.eigen[static_cast<std::size_t>(l)].col(i);
      v.eigen[static_cast<std::size_t>(l)][static_cast<std::size_t>(i)] =
          xl.dot(gains.group_riccati[g].front() * xl) +
          V(i, l) * V(i, l) * v.group_trace_integral[g];
    }
  }
  v.analytic = v.component_sum();
  return v;
}

StackedSystem stack_system(const SystemModel& model, const Matrix& M, const Matrix& G,
                           const Matrix& H) {
  model.validate_dimensions();
  const Eigen::Index n = M.rows();
  require_shape(M, n, n, "coupling matrix");
  require_shape(G, n, n, "state cost coupling");
  require_shape(H, n, n, "control cost coupling");
  const Matrix I = Matrix::Identity(n, n);
  StackedSystem s;
  s.A = kron(I, model.A) + kron(M, model.D);
  s.B = kron(I, model.B) + kron(M, model.E);
  s.Q = kron(G, model.Q);
  s.R = kron(H, model.R);
  s.QT = kron(G, model.QT);
  return s;
}

OracleResult centralized_oracle(const SystemModel& model, const Matrix& M, const Matrix& G,
                                const Matrix& H, const GlobalField& x0, double horizon,
                                double dt, double riccati_step, const OracleOptions& options) {
  check_network(model, M, x0);
  const Eigen::Index dim = M.rows() * model.state_dim();
  if (dim > options.max_dimension) {
    throw Error(ErrorCode::TooLarge, "centralized problem has dimension " + std::to_string(dim) +
                                         " > " + std::to_string(options.max_dimension));
  }
  const StackedSystem S = stack_system(model, M, G, H);
  const RiccatiODESolution sol =
      solve_riccati_ode({S.A, S.B, S.Q, S.R, S.QT}, horizon, riccati_step);

  OracleResult out;
  out.riccati_step = sol.step;
  out.P0 = sol.samples.front();
  const Vector v0 = stack(x0);
  out.optimal_cost = v0.dot(out.P0 * v0);
  out.gains.reserve(sol.samples.size());
  for (const Matrix& P : sol.samples) out.gains.push_back(gain_from_solution(P, S.B, S.R, 1.0));
  if (options.simulate) {
    StackedFeedbackLaw law(out.gains, out.riccati_step, model.input_dim());
    out.trajectory = simulate_deterministic(model, M, law, x0, horizon, dt);
    out.cost = evaluate_cost(*out.trajectory, G, H, model.Q, model.R, model.QT);
  }
  return out;
}

CostReport evaluate_cost(const Trajectory& traj, const Matrix& G, const Matrix& H,
                         const Matrix& Q, const Matrix& R, const Matrix& QT) {
  if (traj.state.size() != traj.grid.size() || traj.control.size() != traj.grid.size() ||
      traj.grid.empty()) {
    throw Error(ErrorCode::DimensionMismatch, "incomplete trajectory");
  }
  CostReport r;
  for (std::size_t k = 0; k + 1 < traj.grid.size(); ++k) {
    const double h = traj.grid[k + 1] - traj.grid[k];
    r.running += 0.5 * h *
                 (instantaneous_cost(traj.state[k], traj.control[k], G, H, Q, R) +
                  instantaneous_cost(traj.state[k + 1], traj.control[k + 1], G, H, Q, R));
  }
  r.terminal = terminal_cost(traj.state.back(), G, QT);
  r.total = r.running + r.terminal;
  return r;
}

CostReport evaluate_cost(const Trajectory& traj, const Matrix& G, const Matrix& H,
                         const Matrix& Q, const Matrix& R, const Matrix& QT,
                         const SpectralHandle& spec, const EffectiveWeights& weights) {
  CostReport r = evaluate_cost(traj, G, H, Q, R, QT);
  const auto n = static_cast<std::size_t>(spec->n);
  const auto L = static_cast<std::size_t>(spec->rank());
  // Per-grid-point integrands of every component, then trapezoid.
  const std::size_t K = traj.grid.size();
  std::vector<std::vector<double>> aux(n, std::vector<double>(K));
  std::vector<std::vector<std::vector<double>>> eig(
      L, std::vector<std::vector<double>>(n, std::vector<double>(K)));
  auto quad = [](const Matrix& W, const auto& v) { return v.dot(W * v); };
  for (std::size_t k = 0; k < K; ++k) {
    const DecomposedField dx = decompose(traj.state[k], spec);
    const DecomposedField du = decompose(traj.control[k], spec);
    for (std::size_t i = 0; i < n; ++i) {
      const auto c = static_cast<Eigen::Index>(i);
      aux[i][k] = weights.q0 * quad(Q, dx.auxiliary.col(c)) +
                  weights.r0 * quad(R, du.auxiliary.col(c));
      for (std::size_t l = 0; l < L; ++l) {
        const int g = spec->group_of[l];
        eig[l][i][k] = weights.q(g) * quad(Q, dx.eigen[l].col(c)) +
                       weights.r(g) * quad(R, du.eigen[l].col(c));
      }
    }
  }
  auto integrate = [&](const std::vector<double>& f) {
    double s = 0.0;
    for (std::size_t k = 0; k + 1 < K; ++k) {
      s += 0.5 * (traj.grid[k + 1] - traj.grid[k]) * (f[k] + f[k + 1]);
    }
    return s;
  };
  const DecomposedField xT = decompose(traj.state.back(), spec);
  CostBreakdown b;
  b.auxiliary.resize(n);
  b.eigen.assign(L, std::vector<double>(n));
  for (std::size_t i = 0; i < n; ++i) {
    const auto c = static_cast<Eigen::Index>(i);
    b.auxiliary[i] = integrate(aux[i]) + weights.q0 * quad(QT, xT.auxiliary.col(c));
    for (std::size_t l = 0; l < L; ++l) {
      b.eigen[l][i] =
          integrate(eig[l][i]) + weights.q(spec->group_of[l]) * quad(QT, xT.eigen[l].col(c));
    }
  }
  r.breakdown = std::move(b);
  return r;
}

}  // namespace netlqr
