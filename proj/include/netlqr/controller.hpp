#pragma once

#include <memory>
#include <optional>
#include <vector>

#include "netlqr/decomposition.hpp"
#include "netlqr/graph_coupling.hpp"
#include "netlqr/model.hpp"
#include "netlqr/riccati.hpp"

namespace netlqr {

enum class Horizon { Finite, Infinite };

// Linear interpolation in samples taken every `step` from t = 0. A single
// sample is treated as constant. Throws TimeOutOfRange.
Matrix interpolate_samples(const std::vector<Matrix>& samples, double step, double t);

// Gains of every decoupled problem at one instant.
struct GainSet {
  Matrix auxiliary;            // K_aux, d_u x d_x
  std::vector<Matrix> groups;  // K_g per distinct eigenvalue
};

// Decomposed optimal gains. Gains (and the Riccati samples they came from)
// are stored once per distinct eigenvalue group and shared by every
// eigen index in the group. Infinite-horizon schedules hold one sample.
struct GainSchedule {
  Horizon horizon = Horizon::Finite;
  std::vector<double> grid;
  double step = 0.0;
  std::vector<Matrix> auxiliary_gain;
  std::vector<std::vector<Matrix>> group_gain;  // [group][sample]
  std::vector<Matrix> auxiliary_riccati;
  std::vector<std::vector<Matrix>> group_riccati;
  Vector group_values;
  std::vector<int> group_of;
  int riccati_solves = 0;

  int groups() const { return static_cast<int>(group_gain.size()); }
  double horizon_length() const { return grid.empty() ? 0.0 : grid.back(); }

  // Linear interpolation between grid samples. Throws TimeOutOfRange.
  GainSet at(double t) const;
  // Gain applied to eigen index l.
  const Matrix& eigen_gain_sample(int l, std::size_t k) const {
    return group_gain[static_cast<std::size_t>(group_of[static_cast<std::size_t>(l)])][k];
  }
};

struct SynthesisOptions {
  bool parallel = true;
};

// Finite horizon: one Riccati ODE per distinct eigenvalue plus the
// auxiliary one. Requires A1-A2 (AssumptionViolation otherwise).
GainSchedule synthesize_finite(const SystemModel& model, const SpectralData& spec,
                               const EffectiveWeights& weights, double horizon, double step,
                               const SynthesisOptions& options = {});

// Infinite horizon: stationary gains from the algebraic Riccati equations.
// Requires A1-A4. A decoupled problem with zero state weight gets P = 0.
GainSchedule synthesize_infinite(const SystemModel& model, const SpectralData& spec,
                                 const EffectiveWeights& weights,
                                 const SynthesisOptions& options = {});

// u_i = -K_aux x_aux_i - sum_l K_l x^l_i
GlobalField control_closed_loop(const GainSchedule& gains, const GlobalField& x,
                                const SpectralHandle& spec, double t);

// Equivalent local-feedback form u_i = -K_aux x_i - sum_l (K_l - K_aux) x^l_i.
GlobalField control_local_offset_form(const GainSchedule& gains, const GlobalField& x,
                                      const SpectralHandle& spec, double t);

// Which data each node holds to reconstruct its decoupled states.
enum class InformationStructure {
  GlobalState,      // full x plus all eigenvectors
  LocalEigenstates, // x_i plus the local eigenstates x^l_i
  Aggregates,       // aggregates x v_l, the local entries v_i, and x_i
};

struct NodePacket {
  InformationStructure structure = InformationStructure::GlobalState;
  int node = 0;  // 0-based column index
  std::optional<Matrix> global_state;
  std::optional<Matrix> eigenvectors;
  std::optional<Vector> local_state;
  std::optional<std::vector<Vector>> local_eigenstates;
  std::optional<Matrix> aggregates;  // d x L, column l = x v_l
  std::optional<Vector> local_entries;  // (v_1[i], ..., v_L[i])
};

// Local decoupled states of one node.
struct LocalDecomposition {
  Vector local_state;
  Vector auxiliary;
  std::vector<Vector> eigen;
};

std::vector<NodePacket> prepare_information(InformationStructure structure,
                                            const GlobalField& x, const SpectralData& spec);

// Throws MissingInformation when the packet lacks a field its structure needs.
LocalDecomposition resolve_packet(const NodePacket& packet);

// Evaluates the decomposed feedback at one node from its local data.
Vector node_control(const GainSet& gains, const GainSchedule& schedule,
                    const LocalDecomposition& local);

struct TransitionMatrices {
  std::vector<double> grid;
  double step = 0.0;
  std::vector<Matrix> auxiliary;               // Phi_aux(t, 0)
  std::vector<std::vector<Matrix>> groups;     // Phi_g(t, 0)

  Matrix auxiliary_at(double t) const;
  Matrix group_at(int g, double t) const;
};

// Integrates dPhi/dt = A_cl(t) Phi, Phi(0) = I for every decoupled
// closed-loop system. `step` must divide the gain grid step.
TransitionMatrices compute_transitions(const GainSchedule& gains, const SystemModel& model,
                                       double horizon, double step);

// Open-loop control of one node: u_i(t) = -K_aux Phi_aux x_aux_i(0) - sum_l K_l Phi_l x^l_i(0).
Vector control_open_loop(const TransitionMatrices& transitions, const GainSchedule& gains,
                         const NodePacket& packet, double t);

// Mixed control of one node: eigen parts open loop from the initial
// packet, auxiliary part from the live local state x_i(t).
Vector control_mixed(const TransitionMatrices& transitions, const GainSchedule& gains,
                     const NodePacket& packet, const Vector& local_state, double t);

// A control law maps (t, x(t)) to u(t) for the whole network.
class ControlLaw {
 public:
  virtual ~ControlLaw() = default;
  virtual GlobalField control(double t, const GlobalField& x) const = 0;
  // Grid step of the underlying gains (0 when time invariant).
  virtual double gain_step() const { return 0.0; }
  // For laws that are linear state feedback u = -K(t) x, K(t) acting on
  // the column-stacked state (n d_u x n d_x). Used by fast simulators.
  virtual std::optional<Matrix> feedback_matrix(double /*t*/) const { return std::nullopt; }
};

class ClosedLoopLaw final : public ControlLaw {
 public:
  // Without a structure the law decomposes x centrally; with one, each
  // node evaluates from its own packet built from x(t).
  ClosedLoopLaw(std::shared_ptr<const GainSchedule> gains, SpectralHandle spec,
                std::optional<InformationStructure> structure = std::nullopt);
  GlobalField control(double t, const GlobalField& x) const override;
  double gain_step() const override { return gains_->step; }
  std::optional<Matrix> feedback_matrix(double t) const override;

 private:
  std::shared_ptr<const GainSchedule> gains_;
  SpectralHandle spec_;
  std::optional<InformationStructure> structure_;
  std::vector<Matrix> group_bases_;
  std::vector<Matrix> group_projectors_;
};

class OpenLoopLaw final : public ControlLaw {
 public:
  OpenLoopLaw(std::shared_ptr<const GainSchedule> gains,
              std::shared_ptr<const TransitionMatrices> transitions,
              std::vector<NodePacket> packets);
  GlobalField control(double t, const GlobalField& x) const override;
  double gain_step() const override { return transitions_->step; }

 private:
  std::shared_ptr<const GainSchedule> gains_;
  std::shared_ptr<const TransitionMatrices> transitions_;
  std::vector<NodePacket> packets_;
};

class MixedLaw final : public ControlLaw {
 public:
  MixedLaw(std::shared_ptr<const GainSchedule> gains,
           std::shared_ptr<const TransitionMatrices> transitions,
           std::vector<NodePacket> packets);
  GlobalField control(double t, const GlobalField& x) const override;
  double gain_step() const override { return transitions_->step; }

 private:
  std::shared_ptr<const GainSchedule> gains_;
  std::shared_ptr<const TransitionMatrices> transitions_;
  std::vector<NodePacket> packets_;
};

}  // namespace netlqr
