#pragma once

#include <vector>

#include "netlqr/controller.hpp"
#include "netlqr/graph_coupling.hpp"
#include "netlqr/simulator.hpp"

namespace netlqr {

// Single integrators dx_i = u_i on a connected undirected graph with cost
// <x, Q x>_{L^2} + <u, R u>_I, L the graph Laplacian.
struct ConsensusSetup {
  GraphSpec graph;
  Matrix Q;
  Matrix R;
  Matrix laplacian;

  // Throws ValidationError when the graph is disconnected or has negative
  // weights, NotPositiveDefiniteR / ValidationError for bad weights.
  static ConsensusSetup make(GraphSpec graph, Matrix Q, Matrix R);

  Eigen::Index state_dim() const { return Q.rows(); }
  SystemModel model() const;        // A = 0, B = I, D = E = 0, QT = 0
  static CostCoupling coupling();   // G = L^2, H = I
};

struct ConsensusGain {
  Matrix Pi;     // PSD solution of Pi R^-1 Pi = Q
  Matrix gain;   // -R^-1 Pi
  double residual = 0.0;  // ||Pi R^-1 Pi - Q||_F
};

ConsensusGain solve_pi(const Matrix& Q, const Matrix& R);

// u_i = -R^-1 Pi sum_j w_ij (x_i - x_j)
GlobalField consensus_control(const ConsensusSetup& setup, const ConsensusGain& gain,
                              const GlobalField& x);

// max_ij ||x_i - x_j||
double disagreement(const GlobalField& x);

class ConsensusLaw final : public ControlLaw {
 public:
  ConsensusLaw(const ConsensusSetup& setup, const ConsensusGain& gain)
      : setup_(setup), gain_(gain) {}
  GlobalField control(double, const GlobalField& x) const override {
    return consensus_control(setup_, gain_, x);
  }
  std::optional<Matrix> feedback_matrix(double) const override {
    return kron(setup_.laplacian, -gain_.gain);
  }

 private:
  const ConsensusSetup& setup_;
  const ConsensusGain& gain_;
};

struct ConsensusRun {
  Trajectory trajectory;
  std::vector<double> disagreement;
  std::vector<Vector> average;
  double horizon = 0.0;
};

// Horizon over which disagreement decays by about exp(-20).
double consensus_horizon(const ConsensusSetup& setup, const ConsensusGain& gain);

// RK4 run of dx = u under the protocol; horizon <= 0 picks consensus_horizon.
ConsensusRun simulate_consensus(const ConsensusSetup& setup, const ConsensusGain& gain,
                                const GlobalField& x0, double horizon = 0.0,
                                std::size_t steps = 0);

}  // namespace netlqr
