#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "netlqr/controller.hpp"
#include "netlqr/decomposition.hpp"
#include "netlqr/model.hpp"

namespace netlqr {

struct Trajectory {
  std::vector<double> grid;
  std::vector<GlobalField> state;    // d_x x n per grid point
  std::vector<GlobalField> control;  // d_u x n per grid point
  std::vector<GlobalField> noise;    // d_w x n increments, one per step (stochastic only)

  std::size_t steps() const { return grid.empty() ? 0 : grid.size() - 1; }
};

struct CostBreakdown {
  std::vector<double> auxiliary;           // J_aux_i per node
  std::vector<std::vector<double>> eigen;  // J^l_i, [l][i]

  double total() const;
};

struct CostReport {
  double running = 0.0;
  double terminal = 0.0;
  double total = 0.0;
  std::optional<CostBreakdown> breakdown;
};

struct NoisePath {
  std::vector<double> grid;
  std::vector<GlobalField> increments;  // d_w x n per step
  std::uint64_t seed = 0;
  std::uint64_t path = 0;
};

// Decomposed increments: eigen[l][k] and auxiliary[k] are d_w x n.
struct DecomposedNoise {
  std::vector<std::vector<Matrix>> eigen;
  std::vector<Matrix> auxiliary;
};

struct StochasticValue {
  double analytic = 0.0;
  std::vector<double> auxiliary;           // V_aux_i
  std::vector<std::vector<double>> eigen;  // V^l_i, [l][i]
  double auxiliary_trace_integral = 0.0;   // int tr(P_aux F F') dt
  std::vector<double> group_trace_integral;
  std::optional<double> mc_mean;
  std::optional<double> mc_standard_error;

  double component_sum() const;
};

enum class StochasticScheme {
  // Linear feedback laws: RK4 transition for the drift plus the increment
  // propagated from the step midpoint (weak order 2 for additive noise).
  // Other laws fall back to Euler-Maruyama.
  Auto,
  EulerMaruyama,
};

struct StochasticOptions {
  std::size_t n_paths = 1;
  StochasticScheme scheme = StochasticScheme::Auto;
  std::uint64_t seed = 0;
  std::size_t keep_paths = 0;  // full trajectories retained for the first paths
  bool parallel = true;
};

struct StochasticEnsemble {
  std::vector<double> path_costs;
  double mean = 0.0;
  double standard_error = 0.0;
  std::vector<Trajectory> kept;
};

// Grid sizes used when a caller does not pick one.
inline double default_dt(double horizon) { return horizon / 4000.0; }
inline double default_riccati_step(double horizon) { return horizon / 2000.0; }

// RK4 integration of dx = A x + B u + D x M + E u M with u from the law,
// M symmetric. dt must divide the law's gain step (GridMismatch).
Trajectory simulate_deterministic(const SystemModel& model, const Matrix& M, const ControlLaw& law,
                                  const GlobalField& x0, double horizon, double dt);

// Monte Carlo ensemble on the grid of dt. Path k draws its increments from
// a generator seeded by (seed, k) in (step, node, component) order, so
// results do not depend on scheduling or batching. With F = 0 every path is
// the RK4 trajectory.
StochasticEnsemble simulate_stochastic(const SystemModel& model, const Matrix& M,
                                       const ControlLaw& law, const Matrix& G, const Matrix& H,
                                       const GlobalField& x0, double horizon, double dt,
                                       const StochasticOptions& options);

NoisePath generate_noise(Eigen::Index noise_dim, int n, std::size_t steps, double dt,
                         std::uint64_t seed, std::uint64_t path = 0);

DecomposedNoise decompose_noise(const NoisePath& path, const SpectralHandle& spec);

// Analytic optimal cost of the stochastic problem from the stored Riccati
// samples; trace integrals use the trapezoidal rule on the Riccati grid.
StochasticValue stochastic_value(const SystemModel& model, const GainSchedule& gains,
                                 const SpectralHandle& spec, const EffectiveWeights& weights,
                                 const GlobalField& x0);

struct OracleOptions {
  Eigen::Index max_dimension = 400;
  bool simulate = true;
};

struct OracleResult {
  Matrix P0;              // n d_x x n d_x
  double optimal_cost = 0.0;  // vec(x0)' P(0) vec(x0)
  std::vector<Matrix> gains;  // n d_u x n d_x on the Riccati grid
  double riccati_step = 0.0;
  std::optional<Trajectory> trajectory;
  std::optional<CostReport> cost;
};

// Stacked system: vec is column-stacked over nodes, so node i occupies
// entries [i d, (i+1) d).
struct StackedSystem {
  Matrix A, B, Q, R, QT;
};
StackedSystem stack_system(const SystemModel& model, const Matrix& M, const Matrix& G,
                           const Matrix& H);

// Brute-force n d_x dimensional finite-horizon LQR. Throws TooLarge above
// max_dimension.
OracleResult centralized_oracle(const SystemModel& model, const Matrix& M, const Matrix& G,
                                const Matrix& H, const GlobalField& x0, double horizon,
                                double dt, double riccati_step,
                                const OracleOptions& options = {});

CostReport evaluate_cost(const Trajectory& traj, const Matrix& G, const Matrix& H,
                         const Matrix& Q, const Matrix& R, const Matrix& QT);

// Also fills the per-component breakdown.
CostReport evaluate_cost(const Trajectory& traj, const Matrix& G, const Matrix& H,
                         const Matrix& Q, const Matrix& R, const Matrix& QT,
                         const SpectralHandle& spec, const EffectiveWeights& weights);

// Column-stacked vec of a d x n field and its inverse.
Vector stack(const GlobalField& x);
GlobalField unstack(const Vector& v, Eigen::Index rows);

}  // namespace netlqr
