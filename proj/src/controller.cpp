#include "netlqr/controller.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <string>

#include "netlqr/errors.hpp"
#include "netlqr/parallel.hpp"
#include "netlqr/rk4.hpp"

namespace netlqr {

namespace {

void require_assumptions(const AssumptionReport& report, bool infinite) {
  const bool ok = infinite ? report.ok() : report.finite_horizon_ok();
  if (ok) return;
  std::ostringstream os;
  os << "model violates standing assumptions";
  for (const auto& d : report.diagnostics) os << "; " << d;
  throw Error(ErrorCode::AssumptionViolation, os.str());
}

struct Subproblem {
  LQRData data;
  Matrix input;  // B or B + lambda E
  double r_scale;
  double q_scale;
};

std::vector<Subproblem> subproblems(const SystemModel& model, const SpectralData& spec,
                                    const EffectiveWeights& w) {
  std::vector<Subproblem> out;
  out.push_back({{model.A, model.B, w.q0 * model.Q, w.r0 * model.R, w.q0 * model.QT},
                 model.B, w.r0, w.q0});
  for (int g = 0; g < spec.distinct(); ++g) {
    const double lambda = spec.group_values(g);
    const Matrix Ag = model.A + lambda * model.D;
    const Matrix Bg = model.B + lambda * model.E;
    out.push_back({{Ag, Bg, w.q(g) * model.Q, w.r(g) * model.R, w.q(g) * model.QT}, Bg, w.r(g),
                   w.q(g)});
  }
  return out;
}

GainSchedule empty_schedule(const SpectralData& spec, Horizon horizon) {
  GainSchedule s;
  s.horizon = horizon;
  s.group_values = spec.group_values;
  s.group_of = spec.group_of;
  s.group_gain.resize(static_cast<std::size_t>(spec.distinct()));
  s.group_riccati.resize(static_cast<std::size_t>(spec.distinct()));
  return s;
}

void check_network(const GainSchedule& gains, const SpectralData& spec, const GlobalField& x) {
  if (x.cols() != spec.n) {
    throw Error(ErrorCode::DimensionMismatch, "state has " + std::to_string(x.cols()) +
                                                  " columns, network has " +
                                                  std::to_string(spec.n) + " nodes");
  }
  if (gains.groups() != spec.distinct()) {
    throw Error(ErrorCode::MismatchedSpectralData, "gain schedule built for another spectrum");
  }
}

Vector decoupled_control(const GainSet& K, const GainSchedule& schedule, const Vector& auxiliary,
                         const std::vector<Vector>& eigen) {
  Vector u = -K.auxiliary * auxiliary;
  for (std::size_t l = 0; l < eigen.size(); ++l) {
    u -= K.groups[static_cast<std::size_t>(schedule.group_of[l])] * eigen[l];
  }
  return u;
}

Vector open_loop_from(const TransitionMatrices& tr, const GainSchedule& gains,
                      const LocalDecomposition& local, double t) {
  const GainSet K = gains.at(t);
  Vector u = -K.auxiliary * (tr.auxiliary_at(t) * local.auxiliary);
  for (std::size_t l = 0; l < local.eigen.size(); ++l) {
    const int g = gains.group_of[l];
    u -= K.groups[static_cast<std::size_t>(g)] * (tr.group_at(g, t) * local.eigen[l]);
  }
  return u;
}

Vector mixed_from(const TransitionMatrices& tr, const GainSchedule& gains,
                  const LocalDecomposition& initial, const Vector& local_state, double t) {
  const GainSet K = gains.at(t);
  Vector auxiliary = local_state;
  Vector u = Vector::Zero(gains.auxiliary_gain.front().rows());
  for (std::size_t l = 0; l < initial.eigen.size(); ++l) {
    const int g = gains.group_of[l];
    const Vector eig = tr.group_at(g, t) * initial.eigen[l];
    auxiliary -= eig;
    u -= K.groups[static_cast<std::size_t>(g)] * eig;
  }
  u -= K.auxiliary * auxiliary;
  return u;
}

}  // namespace

Matrix interpolate_samples(const std::vector<Matrix>& samples, double step, double t) {
  if (samples.empty()) throw Error(ErrorCode::MissingRiccatiSamples, "no samples");
  if (samples.size() == 1) {
    if (t < 0.0) throw Error(ErrorCode::TimeOutOfRange, "t = " + std::to_string(t));
    return samples.front();
  }
  const double horizon = step * static_cast<double>(samples.size() - 1);
  const double slack = 1e-9 * std::max(1.0, horizon);
  if (t < -slack || t > horizon + slack) {
    throw Error(ErrorCode::TimeOutOfRange,
                "t = " + std::to_string(t) + " outside [0, " + std::to_string(horizon) + "]");
  }
  const double pos = std::clamp(t, 0.0, horizon) / step;
  const double base = std::floor(pos + 1e-9);
  auto k = static_cast<std::size_t>(base);
  if (k >= samples.size() - 1) return samples.back();
  const double w = pos - base;
  if (w <= 1e-9) return samples[k];
  if (w >= 1.0 - 1e-9) return samples[k + 1];
  return (1.0 - w) * samples[k] + w * samples[k + 1];
}

GainSet GainSchedule::at(double t) const {
  GainSet out;
  out.auxiliary = interpolate_samples(auxiliary_gain, step, t);
  out.groups.reserve(group_gain.size());
  for (const auto& g : group_gain) out.groups.push_back(interpolate_samples(g, step, t));
  return out;
}

GainSchedule synthesize_finite(const SystemModel& model, const SpectralData& spec,
                               const EffectiveWeights& weights, double horizon, double step,
                               const SynthesisOptions& options) {
  require_assumptions(validate_assumptions(model, spec, weights, false), false);
  const auto problems = subproblems(model, spec, weights);
  std::vector<RiccatiODESolution> solutions(problems.size());
  parallel_for(
      problems.size(),
      [&](std::size_t k) {
        solutions[k] = solve_riccati_ode(problems[k].data, horizon, step, spec.tolerances.pd_tol);
      },
      options.parallel ? 0u : 1u);

  GainSchedule s = empty_schedule(spec, Horizon::Finite);
  s.grid = solutions.front().times;
  s.step = solutions.front().step;
  s.riccati_solves = static_cast<int>(problems.size());
  auto gains_of = [&](std::size_t k) {
    std::vector<Matrix> out;
    out.reserve(solutions[k].samples.size());
    for (const Matrix& P : solutions[k].samples) {
      out.push_back(gain_from_solution(P, problems[k].input, model.R, problems[k].r_scale));
    }
    return out;
  };
  s.auxiliary_gain = gains_of(0);
  s.auxiliary_riccati = std::move(solutions[0].samples);
  for (std::size_t g = 0; g + 1 < problems.size(); ++g) {
    s.group_gain[g] = gains_of(g + 1);
    s.group_riccati[g] = std::move(solutions[g + 1].samples);
  }
  return s;
}

GainSchedule synthesize_infinite(const SystemModel& model, const SpectralData& spec,
                                 const EffectiveWeights& weights,
                                 const SynthesisOptions& options) {
  require_assumptions(validate_assumptions(model, spec, weights, true), true);
  const auto problems = subproblems(model, spec, weights);
  std::vector<Matrix> P(problems.size());
  AreOptions are;
  are.pbh_tol = spec.tolerances.pbh_tol;
  are.pbh_margin = spec.tolerances.pbh_margin;
  parallel_for(
      problems.size(),
      [&](std::size_t k) {
        const auto d = model.state_dim();
        if (std::abs(problems[k].q_scale) <= spec.tolerances.pd_tol) {
          P[k] = Matrix::Zero(d, d);
        } else {
          P[k] = solve_are(problems[k].data, are).P;
        }
      },
      options.parallel ? 0u : 1u);

  GainSchedule s = empty_schedule(spec, Horizon::Infinite);
  s.riccati_solves = static_cast<int>(problems.size());
  s.auxiliary_gain = {gain_from_solution(P[0], problems[0].input, model.R, problems[0].r_scale)};
  s.auxiliary_riccati = {P[0]};
  for (std::size_t g = 0; g + 1 < problems.size(); ++g) {
    s.group_gain[g] = {
        gain_from_solution(P[g + 1], problems[g + 1].input, model.R, problems[g + 1].r_scale)};
    s.group_riccati[g] = {P[g + 1]};
  }
  return s;
}

GlobalField control_closed_loop(const GainSchedule& gains, const GlobalField& x,
                                const SpectralHandle& spec, double t) {
  check_network(gains, *spec, x);
  const GainSet K = gains.at(t);
  const DecomposedField dx = decompose(x, spec);
  GlobalField u = -K.auxiliary * dx.auxiliary;
  for (int l = 0; l < spec->rank(); ++l) {
    const auto g = static_cast<std::size_t>(spec->group_of[static_cast<std::size_t>(l)]);
    u -= K.groups[g] * dx.eigen[static_cast<std::size_t>(l)];
  }
  return u;
}

GlobalField control_local_offset_form(const GainSchedule& gains, const GlobalField& x,
                                      const SpectralHandle& spec, double t) {
  check_network(gains, *spec, x);
  const GainSet K = gains.at(t);
  const DecomposedField dx = decompose(x, spec);
  GlobalField u = -K.auxiliary * x;
  for (int l = 0; l < spec->rank(); ++l) {
    const auto g = static_cast<std::size_t>(spec->group_of[static_cast<std::size_t>(l)]);
    u -= (K.groups[g] - K.auxiliary) * dx.eigen[static_cast<std::size_t>(l)];
  }
  return u;
}

std::vector<NodePacket> prepare_information(InformationStructure structure,
                                            const GlobalField& x, const SpectralData& spec) {
  if (x.cols() != spec.n) throw Error(ErrorCode::DimensionMismatch, "state vs network size");
  std::vector<NodePacket> packets(static_cast<std::size_t>(spec.n));
  const Matrix& V = spec.eigenvectors;
  const Matrix aggregates = x * V;
  for (int i = 0; i < spec.n; ++i) {
    NodePacket& p = packets[static_cast<std::size_t>(i)];
    p.structure = structure;
    p.node = i;
    switch (structure) {
      case InformationStructure::GlobalState:
        p.global_state = x;
        p.eigenvectors = V;
        break;
      case InformationStructure::LocalEigenstates: {
        p.local_state = x.col(i);
        std::vector<Vector> eig;
        for (int l = 0; l < spec.rank(); ++l) eig.emplace_back(aggregates.col(l) * V(i, l));
        p.local_eigenstates = std::move(eig);
        break;
      }
      case InformationStructure::Aggregates:
        p.aggregates = aggregates;
        p.local_entries = V.row(i).transpose();
        p.local_state = x.col(i);
        break;
    }
  }
  return packets;
}

LocalDecomposition resolve_packet(const NodePacket& p) {
  auto missing = [&](const char* field) {
    return Error(ErrorCode::MissingInformation,
                 std::string("node ") + std::to_string(p.node) + " packet lacks " + field);
  };
  LocalDecomposition out;
  switch (p.structure) {
    case InformationStructure::GlobalState: {
      if (!p.global_state) throw missing("global state");
      if (!p.eigenvectors) throw missing("eigenvectors");
      const Matrix& X = *p.global_state;
      const Matrix& V = *p.eigenvectors;
      out.local_state = X.col(p.node);
      for (Eigen::Index l = 0; l < V.cols(); ++l) {
        out.eigen.emplace_back((X * V.col(l)) * V(p.node, l));
      }
      break;
    }
    case InformationStructure::LocalEigenstates:
      if (!p.local_state) throw missing("local state");
      if (!p.local_eigenstates) throw missing("local eigenstates");
      out.local_state = *p.local_state;
      out.eigen = *p.local_eigenstates;
      break;
    case InformationStructure::Aggregates: {
      if (!p.aggregates) throw missing("aggregates");
      if (!p.local_entries) throw missing("local eigenvector entries");
      if (!p.local_state) throw missing("local state");
      out.local_state = *p.local_state;
      for (Eigen::Index l = 0; l < p.aggregates->cols(); ++l) {
        out.eigen.emplace_back(p.aggregates->col(l) * (*p.local_entries)(l));
      }
      break;
    }
  }
  out.auxiliary = out.local_state;
  for (const Vector& e : out.eigen) out.auxiliary -= e;
  return out;
}

Vector node_control(const GainSet& gains, const GainSchedule& schedule,
                    const LocalDecomposition& local) {
  return decoupled_control(gains, schedule, local.auxiliary, local.eigen);
}

Matrix TransitionMatrices::auxiliary_at(double t) const { return interpolate_samples(auxiliary, step, t); }

Matrix TransitionMatrices::group_at(int g, double t) const {
  return interpolate_samples(groups.at(static_cast<std::size_t>(g)), step, t);
}

TransitionMatrices compute_transitions(const GainSchedule& gains, const SystemModel& model,
                                       double horizon, double step) {
  if (!(horizon > 0.0) || !(step > 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "horizon and step must be positive");
  }
  const double steps_f = horizon / step;
  if (std::abs(steps_f - std::round(steps_f)) > 1e-9 * steps_f) {
    throw Error(ErrorCode::GridMismatch, "step does not divide the horizon");
  }
  if (gains.horizon == Horizon::Finite) {
    const double ratio = gains.step / step;
    if (std::abs(ratio - std::round(ratio)) > 1e-9 * ratio || std::round(ratio) < 1.0) {
      throw Error(ErrorCode::GridMismatch, "transition step must refine the gain grid");
    }
    if (horizon > gains.horizon_length() * (1.0 + 1e-12)) {
      throw Error(ErrorCode::TimeOutOfRange, "horizon beyond gain schedule");
    }
  }
  const auto N = static_cast<std::size_t>(std::llround(steps_f));
  const Eigen::Index d = model.state_dim();

  TransitionMatrices tr;
  tr.step = horizon / static_cast<double>(N);
  tr.grid.resize(N + 1);
  for (std::size_t k = 0; k <= N; ++k) tr.grid[k] = tr.step * static_cast<double>(k);

  auto integrate = [&](const Matrix& Ac, const Matrix& Bc, const std::vector<Matrix>& K) {
    auto rhs = [&](double t, const Matrix& Phi) -> Matrix {
      return (Ac - Bc * interpolate_samples(K, gains.step, t)) * Phi;
    };
    std::vector<Matrix> out;
    out.reserve(N + 1);
    Matrix Phi = Matrix::Identity(d, d);
    out.push_back(Phi);
    for (std::size_t k = 0; k < N; ++k) {
      Phi = rk4_step(rhs, tr.grid[k], Phi, tr.step);
      if (!Phi.allFinite()) throw Error(ErrorCode::NonFiniteBlowup, "transition matrix overflow");
      out.push_back(Phi);
    }
    return out;
  };
  tr.auxiliary = integrate(model.A, model.B, gains.auxiliary_gain);
  for (int g = 0; g < gains.groups(); ++g) {
    const double lambda = gains.group_values(g);
    tr.groups.push_back(integrate(model.A + lambda * model.D, model.B + lambda * model.E,
                                  gains.group_gain[static_cast<std::size_t>(g)]));
  }
  return tr;
}

Vector control_open_loop(const TransitionMatrices& transitions, const GainSchedule& gains,
                         const NodePacket& packet, double t) {
  return open_loop_from(transitions, gains, resolve_packet(packet), t);
}

Vector control_mixed(const TransitionMatrices& transitions, const GainSchedule& gains,
                     const NodePacket& packet, const Vector& local_state, double t) {
  return mixed_from(transitions, gains, resolve_packet(packet), local_state, t);
}

ClosedLoopLaw::ClosedLoopLaw(std::shared_ptr<const GainSchedule> gains, SpectralHandle spec,
                             std::optional<InformationStructure> structure)
    : gains_(std::move(gains)), spec_(std::move(spec)), structure_(structure) {
  if (gains_->groups() != spec_->distinct()) {
    throw Error(ErrorCode::MismatchedSpectralData, "gain schedule built for another spectrum");
  }
  for (int g = 0; g < spec_->distinct(); ++g) {
    group_bases_.push_back(spec_->group_basis(g));
    group_projectors_.push_back(group_bases_.back() * group_bases_.back().transpose());
  }
}

std::optional<Matrix> ClosedLoopLaw::feedback_matrix(double t) const {
  const GainSet K = gains_->at(t);
  Matrix F = kron(Matrix::Identity(spec_->n, spec_->n), K.auxiliary);
  for (std::size_t g = 0; g < group_projectors_.size(); ++g) {
    F += kron(group_projectors_[g], K.groups[g] - K.auxiliary);
  }
  return F;
}

GlobalField ClosedLoopLaw::control(double t, const GlobalField& x) const {
  if (x.cols() != spec_->n) throw Error(ErrorCode::DimensionMismatch, "state vs network size");
  const GainSet K = gains_->at(t);
  if (structure_) {
    const auto packets = prepare_information(*structure_, x, *spec_);
    GlobalField u(K.auxiliary.rows(), x.cols());
    for (const NodePacket& p : packets) {
      u.col(p.node) = node_control(K, *gains_, resolve_packet(p));
    }
    return u;
  }
  GlobalField u = -K.auxiliary * x;
  for (std::size_t g = 0; g < group_bases_.size(); ++g) {
    const Matrix& V = group_bases_[g];
    u -= (K.groups[g] - K.auxiliary) * ((x * V) * V.transpose());
  }
  return u;
}

OpenLoopLaw::OpenLoopLaw(std::shared_ptr<const GainSchedule> gains,
                         std::shared_ptr<const TransitionMatrices> transitions,
                         std::vector<NodePacket> packets)
    : gains_(std::move(gains)), transitions_(std::move(transitions)), packets_(std::move(packets)) {
  for (const NodePacket& p : packets_) resolve_packet(p);
}

GlobalField OpenLoopLaw::control(double t, const GlobalField& x) const {
  GlobalField u(gains_->auxiliary_gain.front().rows(), x.cols());
  for (const NodePacket& p : packets_) {
    u.col(p.node) = control_open_loop(*transitions_, *gains_, p, t);
  }
  return u;
}

MixedLaw::MixedLaw(std::shared_ptr<const GainSchedule> gains,
                   std::shared_ptr<const TransitionMatrices> transitions,
                   std::vector<NodePacket> packets)
    : gains_(std::move(gains)), transitions_(std::move(transitions)), packets_(std::move(packets)) {
  for (const NodePacket& p : packets_) resolve_packet(p);
}

GlobalField MixedLaw::control(double t, const GlobalField& x) const {
  GlobalField u(gains_->auxiliary_gain.front().rows(), x.cols());
  for (const NodePacket& p : packets_) {
    u.col(p.node) = control_mixed(*transitions_, *gains_, p, x.col(p.node), t);
  }
  return u;
}

}  // namespace netlqr
