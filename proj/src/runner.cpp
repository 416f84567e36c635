#include "netlqr/runner.hpp"

#include <chrono>
#include <cmath>
#include <memory>
#include <random>
#include <sstream>

#include "json.hpp"
#include "netlqr/consensus.hpp"
#include "netlqr/controller.hpp"
#include "netlqr/report_io.hpp"
#include "netlqr/simulator.hpp"

namespace netlqr {

namespace {

using json = nlohmann::json;
using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

json matrix_json(const Matrix& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(row);
  }
  return rows;
}

json vector_json(const Vector& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v(i));
  return out;
}

double relative_gap(double value, double reference) {
  const double diff = std::abs(value - reference);
  if (diff == 0.0) return 0.0;
  return diff / std::max(std::abs(reference), 1e-300);
}

struct Context {
  const ExperimentConfig& cfg;
  OutputDir out;
  Matrix M;
  SpectralHandle spec;
  EffectiveWeights weights;
  AssumptionReport assumptions;
  Matrix G, H;
  json report;
  json timing = json::object();
  std::vector<std::pair<std::string, std::string>> summary;

  explicit Context(const ExperimentConfig& c) : cfg(c), out(c.output) {}

  void put(const std::string& key, double v) { summary.emplace_back(key, format_number(v)); }
  void put(const std::string& key, const std::string& v) { summary.emplace_back(key, v); }
};

void prepare(Context& ctx) {
  const ExperimentConfig& cfg = ctx.cfg;
  const auto t0 = Clock::now();
  ctx.M = cfg.coupling_matrix();
  ctx.spec = std::make_shared<const SpectralData>(spectral_decompose(ctx.M, cfg.tolerances));
  ctx.timing["spectral_seconds"] = seconds_since(t0);
  ctx.weights = effective_weights(*ctx.spec, cfg.cost);
  ctx.assumptions = validate_assumptions(cfg.model, *ctx.spec, ctx.weights,
                                         cfg.horizon == Horizon::Infinite);
  ctx.G = evaluate_matrix(cfg.cost.state, ctx.M);
  ctx.H = evaluate_matrix(cfg.cost.control, ctx.M);

  const SpectralData& s = *ctx.spec;
  json groups = json::array();
  for (int g = 0; g < s.distinct(); ++g) {
    groups.push_back({{"lambda", s.group_values(g)},
                      {"multiplicity", s.groups[static_cast<std::size_t>(g)].size()},
                      {"q", ctx.weights.q(g)},
                      {"r", ctx.weights.r(g)}});
  }
  ctx.report = {{"name", cfg.name},
                {"config", cfg.source},
                {"graph", cfg.graph_description},
                {"coupling", cfg.coupling_name},
                {"n", s.n},
                {"state_dim", cfg.model.state_dim()},
                {"input_dim", cfg.model.input_dim()},
                {"spectral",
                 {{"rank", s.rank()},
                  {"distinct", s.distinct()},
                  {"spectral_radius", s.spectral_radius},
                  {"eigenvalues", vector_json(s.eigenvalues)},
                  {"groups", groups}}},
                {"weights", {{"q0", ctx.weights.q0}, {"r0", ctx.weights.r0}}},
                {"assumptions",
                 {{"A1", ctx.assumptions.a1_ok},
                  {"A2", ctx.assumptions.a2_ok},
                  {"A3", ctx.assumptions.a3_ok},
                  {"A4", ctx.assumptions.a4_ok},
                  {"infinite_checked", ctx.assumptions.infinite_checked},
                  {"diagnostics", ctx.assumptions.diagnostics}}}};
  ctx.put("n", s.n);
  ctx.put("state_dim", static_cast<double>(cfg.model.state_dim()));
  ctx.put("input_dim", static_cast<double>(cfg.model.input_dim()));
  ctx.put("rank", s.rank());
  ctx.put("distinct", s.distinct());
  ctx.put("assumptions_ok", ctx.assumptions.ok() ? "true" : "false");
}

void finish(Context& ctx, RunMode mode, int exit_code) {
  ctx.report["mode"] = to_string(mode);
  ctx.report["timing"] = ctx.timing;
  ctx.report["exit_code"] = exit_code;
  std::ostringstream csv;
  csv << "key,value\n";
  for (const auto& [k, v] : ctx.summary) csv << k << "," << v << "\n";
  ctx.out.write("summary.csv", csv.str());
  ctx.out.write("config.yaml", echo_config(ctx.cfg));
  ctx.out.write("report.json", ctx.report.dump(2) + "\n");
  ctx.out.write_manifest();
}

std::string spectrum_csv(const SpectralData& s) {
  std::ostringstream os;
  os << "index,group,lambda";
  for (int i = 0; i < s.n; ++i) os << ",v" << i + 1;
  os << "\n";
  for (int l = 0; l < s.rank(); ++l) {
    os << l + 1 << "," << s.group_of[static_cast<std::size_t>(l)] + 1 << ","
       << format_number(s.eigenvalues(l));
    for (int i = 0; i < s.n; ++i) os << "," << format_number(s.eigenvectors(i, l));
    os << "\n";
  }
  return os.str();
}

std::string gains_csv(const GainSchedule& g, std::size_t stride) {
  const Matrix& K0 = g.auxiliary_gain.front();
  const Matrix& P0 = g.auxiliary_riccati.front();
  std::ostringstream os;
  os << "time,kind,group,lambda";
  for (Eigen::Index i = 0; i < K0.rows(); ++i)
    for (Eigen::Index j = 0; j < K0.cols(); ++j) os << ",K" << i + 1 << "_" << j + 1;
  for (Eigen::Index i = 0; i < P0.rows(); ++i)
    for (Eigen::Index j = 0; j < P0.cols(); ++j) os << ",P" << i + 1 << "_" << j + 1;
  os << "\n";
  auto row = [&](double t, const char* kind, int group, double lambda, const Matrix& K,
                 const Matrix& P) {
    os << format_number(t) << "," << kind << "," << group << "," << format_number(lambda);
    for (Eigen::Index i = 0; i < K.rows(); ++i)
      for (Eigen::Index j = 0; j < K.cols(); ++j) os << "," << format_number(K(i, j));
    for (Eigen::Index i = 0; i < P.rows(); ++i)
      for (Eigen::Index j = 0; j < P.cols(); ++j) os << "," << format_number(P(i, j));
    os << "\n";
  };
  const std::size_t samples = g.auxiliary_gain.size();
  for (std::size_t k : sample_indices(samples, stride)) {
    const double t = g.grid.empty() ? 0.0 : g.grid[k];
    row(t, "auxiliary", 0, 0.0, g.auxiliary_gain[k], g.auxiliary_riccati[k]);
    for (int q = 0; q < g.groups(); ++q) {
      const auto gq = static_cast<std::size_t>(q);
      row(t, "group", q + 1, g.group_values(q), g.group_gain[gq][k], g.group_riccati[gq][k]);
    }
  }
  return os.str();
}

std::size_t stride_for(const ExperimentConfig& cfg, std::size_t steps) {
  if (cfg.output_stride > 0) return cfg.output_stride;
  return std::max<std::size_t>(1, steps / 400);
}

std::shared_ptr<const GainSchedule> synthesize(Context& ctx) {
  const ExperimentConfig& cfg = ctx.cfg;
  const auto t0 = Clock::now();
  GainSchedule g =
      cfg.horizon == Horizon::Finite
          ? synthesize_finite(cfg.model, *ctx.spec, ctx.weights, cfg.T, cfg.effective_riccati_step())
          : synthesize_infinite(cfg.model, *ctx.spec, ctx.weights);
  ctx.timing["synthesis_seconds"] = seconds_since(t0);
  auto gains = std::make_shared<const GainSchedule>(std::move(g));

  json groups = json::array();
  for (int q = 0; q < gains->groups(); ++q) {
    const auto gq = static_cast<std::size_t>(q);
    groups.push_back({{"lambda", gains->group_values(q)},
                      {"K0", matrix_json(gains->group_gain[gq].front())},
                      {"P0", matrix_json(gains->group_riccati[gq].front())}});
  }
  ctx.report["gains"] = {{"horizon", cfg.horizon == Horizon::Finite ? "finite" : "infinite"},
                         {"riccati_solves", gains->riccati_solves},
                         {"samples", gains->auxiliary_gain.size()},
                         {"auxiliary",
                          {{"K0", matrix_json(gains->auxiliary_gain.front())},
                           {"P0", matrix_json(gains->auxiliary_riccati.front())}}},
                         {"groups", groups}};
  ctx.put("riccati_solves", gains->riccati_solves);
  const std::size_t samples = gains->auxiliary_gain.size();
  ctx.out.write("gains.csv", gains_csv(*gains, samples > 1 ? stride_for(cfg, samples - 1) : 1));
  return gains;
}

struct LawBundle {
  std::unique_ptr<ControlLaw> law;
  std::shared_ptr<const TransitionMatrices> transitions;
};

LawBundle make_law(Context& ctx, const std::shared_ptr<const GainSchedule>& gains,
                   const Matrix& x0) {
  const ExperimentConfig& cfg = ctx.cfg;
  LawBundle b;
  if (cfg.law == LawKind::Closed) {
    b.law = std::make_unique<ClosedLoopLaw>(gains, ctx.spec, cfg.information);
    return b;
  }
  auto packets = prepare_information(*cfg.information, x0, *ctx.spec);
  b.transitions = std::make_shared<const TransitionMatrices>(
      compute_transitions(*gains, cfg.model, cfg.T, cfg.effective_dt()));
  if (cfg.law == LawKind::Open) {
    b.law = std::make_unique<OpenLoopLaw>(gains, b.transitions, std::move(packets));
  } else {
    b.law = std::make_unique<MixedLaw>(gains, b.transitions, std::move(packets));
  }
  return b;
}

void write_trajectory_svgs(Context& ctx, const Trajectory& traj, const std::string& prefix) {
  const SpectralData& s = *ctx.spec;
  const std::size_t stride = stride_for(ctx.cfg, traj.steps());
  auto collect = [&](bool control, int which) {
    std::vector<Series> series;
    for (int i = 0; i < s.n; ++i) {
      Series ser;
      ser.label = "node " + std::to_string(i + 1);
      for (std::size_t k : sample_indices(traj.grid.size(), stride)) {
        const DecomposedField d = decompose(control ? traj.control[k] : traj.state[k], ctx.spec);
        const Matrix& part =
            which < 0 ? d.auxiliary : d.eigen[static_cast<std::size_t>(which)];
        ser.x.push_back(traj.grid[k]);
        ser.y.push_back(part(0, i));
      }
      series.push_back(std::move(ser));
    }
    return series;
  };
  for (bool control : {false, true}) {
    const char* what = control ? "control" : "state";
    for (int l = 0; l < s.rank(); ++l) {
      std::ostringstream title;
      title << "eigen " << what << " " << l + 1 << " (lambda = " << s.eigenvalues(l) << ")";
      ctx.out.write(prefix + (control ? "eigen_control_" : "eigen_state_") + std::to_string(l + 1) +
                        ".svg",
                    svg_chart(title.str(), "t", control ? "u[1]" : "x[1]", collect(control, l)));
    }
    ctx.out.write(prefix + (control ? "auxiliary_control.svg" : "auxiliary_state.svg"),
                  svg_chart(std::string("auxiliary ") + what, "t", control ? "u[1]" : "x[1]",
                            collect(control, -1)));
  }
}

double max_abs_auxiliary_control(const Trajectory& traj, const SpectralHandle& spec) {
  double worst = 0.0;
  for (const Matrix& u : traj.control) {
    worst = std::max(worst, decompose(u, spec).auxiliary.cwiseAbs().maxCoeff());
  }
  return worst;
}

struct SimulationResult {
  Matrix x0;
  Trajectory traj;
  CostReport cost;
  std::optional<StochasticEnsemble> ensemble;
  std::optional<StochasticValue> value;
};

SimulationResult simulate(Context& ctx, const std::shared_ptr<const GainSchedule>& gains) {
  const ExperimentConfig& cfg = ctx.cfg;
  SimulationResult r;
  r.x0 = cfg.initial.resolve(cfg.model.state_dim(), ctx.spec->n);
  LawBundle law = make_law(ctx, gains, r.x0);

  SystemModel noiseless = cfg.model;
  noiseless.F.setZero();
  auto t0 = Clock::now();
  r.traj = simulate_deterministic(noiseless, ctx.M, *law.law, r.x0, cfg.T, cfg.effective_dt());
  ctx.timing["simulation_seconds"] = seconds_since(t0);
  r.cost = evaluate_cost(r.traj, ctx.G, ctx.H, cfg.model.Q, cfg.model.R, cfg.model.QT, ctx.spec,
                         ctx.weights);
  const double breakdown = r.cost.breakdown->total();
  const double aux_control = max_abs_auxiliary_control(r.traj, ctx.spec);
  ctx.report["cost"] = {{"running", r.cost.running},
                        {"terminal", r.cost.terminal},
                        {"total", r.cost.total},
                        {"breakdown_total", breakdown},
                        {"max_abs_auxiliary_control", aux_control}};
  ctx.put("cost_running", r.cost.running);
  ctx.put("cost_terminal", r.cost.terminal);
  ctx.put("cost_total", r.cost.total);
  ctx.put("cost_breakdown_total", breakdown);
  ctx.put("max_abs_auxiliary_control", aux_control);
  ctx.out.write("trajectory.csv", trajectory_csv(r.traj, ctx.spec, stride_for(cfg, r.traj.steps())));
  if (cfg.svg) write_trajectory_svgs(ctx, r.traj, "");

  if (!cfg.model.deterministic()) {
    StochasticOptions opt;
    opt.n_paths = cfg.paths;
    opt.seed = cfg.seed;
    opt.keep_paths = std::max<std::size_t>(1, cfg.keep_paths);
    t0 = Clock::now();
    r.ensemble = simulate_stochastic(cfg.model, ctx.M, *law.law, ctx.G, ctx.H, r.x0, cfg.T,
                                     cfg.effective_dt(), opt);
    ctx.timing["monte_carlo_seconds"] = seconds_since(t0);
    json st = {{"paths", cfg.paths},
               {"seed", cfg.seed},
               {"mc_mean", r.ensemble->mean},
               {"mc_standard_error", r.ensemble->standard_error}};
    ctx.put("paths", static_cast<double>(cfg.paths));
    ctx.put("seed", std::to_string(cfg.seed));
    ctx.put("mc_mean", r.ensemble->mean);
    ctx.put("mc_standard_error", r.ensemble->standard_error);
    if (gains->horizon == Horizon::Finite) {
      r.value = stochastic_value(cfg.model, *gains, ctx.spec, ctx.weights, r.x0);
      const double z = r.ensemble->standard_error > 0.0
                           ? std::abs(r.ensemble->mean - r.value->analytic) /
                                 r.ensemble->standard_error
                           : 0.0;
      st["analytic_value"] = r.value->analytic;
      st["z_score"] = z;
      ctx.put("analytic_value", r.value->analytic);
      ctx.put("z_score", z);
    }
    ctx.report["stochastic"] = st;
    if (!r.ensemble->kept.empty()) {
      const Trajectory& path = r.ensemble->kept.front();
      ctx.out.write("sample_path.csv", trajectory_csv(path, ctx.spec, stride_for(cfg, path.steps())));
      if (cfg.svg) write_trajectory_svgs(ctx, path, "sample_path_");
    }
  }
  return r;
}

int run_verify(Context& ctx, const std::shared_ptr<const GainSchedule>& gains,
               const SimulationResult& sim) {
  const ExperimentConfig& cfg = ctx.cfg;
  bool pass = ctx.assumptions.ok();
  json v;
  if (cfg.horizon == Horizon::Finite) {
    OracleOptions opt;
    opt.max_dimension = cfg.max_oracle_dimension;
    SystemModel noiseless = cfg.model;
    noiseless.F.setZero();
    const auto t0 = Clock::now();
    const OracleResult oracle = centralized_oracle(noiseless, ctx.M, ctx.G, ctx.H, sim.x0, cfg.T,
                                                   cfg.effective_dt(), cfg.effective_riccati_step(),
                                                   opt);
    ctx.timing["centralized_seconds"] = seconds_since(t0);
    double control_gap = 0.0;
    for (std::size_t k = 0; k < sim.traj.control.size(); ++k) {
      const Matrix& uc = oracle.trajectory->control[k];
      control_gap = std::max(control_gap, (sim.traj.control[k] - uc).norm() / (1.0 + uc.norm()));
    }
    // Value predicted by the decomposed Riccati solutions at t = 0.
    SystemModel value_model = noiseless;
    const double decomposed_value =
        stochastic_value(value_model, *gains, ctx.spec, ctx.weights, sim.x0).analytic;
    // Both closed loops use the same integrator, grid and quadrature, so the
    // cost gap isolates the decomposition; the discretization gap is the
    // distance of the simulated cost from the analytic optimum.
    const double cost_gap = relative_gap(sim.cost.total, oracle.cost->total);
    const double value_gap = relative_gap(decomposed_value, oracle.optimal_cost);
    const double discretization_gap = relative_gap(sim.cost.total, oracle.optimal_cost);
    v = {{"oracle_dimension", oracle.P0.rows()},
         {"oracle_optimal_cost", oracle.optimal_cost},
         {"oracle_simulated_cost", oracle.cost->total},
         {"decomposed_cost", sim.cost.total},
         {"decomposed_value", decomposed_value},
         {"cost_gap", cost_gap},
         {"value_gap", value_gap},
         {"control_gap", control_gap},
         {"discretization_gap", discretization_gap}};
    ctx.put("oracle_optimal_cost", oracle.optimal_cost);
    ctx.put("cost_gap", cost_gap);
    ctx.put("value_gap", value_gap);
    ctx.put("control_gap", control_gap);
    ctx.put("discretization_gap", discretization_gap);
    pass = pass && cost_gap <= cfg.tolerance && control_gap <= cfg.tolerance &&
           value_gap <= cfg.tolerance;
    if (sim.ensemble && sim.value) {
      const double se = sim.ensemble->standard_error;
      const double z = se > 0.0 ? std::abs(sim.ensemble->mean - sim.value->analytic) / se : 0.0;
      v["monte_carlo_z"] = z;
      pass = pass && z <= 3.0;
    }
  } else {
    const StackedSystem S = stack_system(cfg.model, ctx.M, ctx.G, ctx.H);
    if (S.A.rows() > cfg.max_oracle_dimension) {
      throw Error(ErrorCode::TooLarge, "centralized problem has dimension " +
                                           std::to_string(S.A.rows()));
    }
    const auto t0 = Clock::now();
    const ARESolution are = solve_are({S.A, S.B, S.Q, S.R, Matrix()});
    ctx.timing["centralized_seconds"] = seconds_since(t0);
    Matrix P = kron(ctx.spec->auxiliary_projector(), gains->auxiliary_riccati.front());
    for (int g = 0; g < gains->groups(); ++g) {
      P += kron(ctx.spec->group_projector(g),
                gains->group_riccati[static_cast<std::size_t>(g)].front());
    }
    const double gap = (P - are.P).norm() / (1.0 + are.P.norm());
    v = {{"oracle_dimension", are.P.rows()},
         {"riccati_gap", gap},
         {"oracle_residual", are.residual}};
    ctx.put("riccati_gap", gap);
    pass = pass && gap <= cfg.tolerance;
  }
  v["tolerance"] = cfg.tolerance;
  v["passed"] = pass;
  ctx.report["verification"] = v;
  ctx.put("verification_passed", pass ? "true" : "false");
  return pass ? kExitOk : kExitVerificationGap;
}

int run_consensus(Context& ctx) {
  const ExperimentConfig& cfg = ctx.cfg;
  const ConsensusSetup setup = ConsensusSetup::make(cfg.graph, cfg.model.Q, cfg.model.R);
  const ConsensusGain gain = solve_pi(setup.Q, setup.R);
  const double pi_tol = 1e-10 * (1.0 + setup.Q.norm());

  // The same instance through the general synthesis.
  const SystemModel model = setup.model();
  const GainSchedule gains = synthesize_infinite(model, *ctx.spec, ctx.weights);
  double identity_gap = 0.0;
  for (int g = 0; g < gains.groups(); ++g) {
    const Matrix& P = gains.group_riccati[static_cast<std::size_t>(g)].front();
    identity_gap = std::max(identity_gap, (P - gains.group_values(g) * gain.Pi).norm() /
                                              (1.0 + gain.Pi.norm()));
  }
  const double aux_norm = gains.auxiliary_riccati.front().norm();

  const Matrix x0 = cfg.initial.resolve(setup.state_dim(), setup.graph.n);
  auto shared = std::make_shared<const GainSchedule>(gains);
  const ClosedLoopLaw decomposed(shared, ctx.spec);
  std::mt19937_64 engine(cfg.seed);
  std::normal_distribution<double> normal;
  double protocol_gap = (consensus_control(setup, gain, x0) - decomposed.control(0.0, x0)).norm();
  for (int k = 0; k < 20; ++k) {
    Matrix x(setup.state_dim(), setup.graph.n);
    for (Eigen::Index j = 0; j < x.size(); ++j) x.data()[j] = normal(engine);
    protocol_gap = std::max(
        protocol_gap, (consensus_control(setup, gain, x) - decomposed.control(0.0, x)).norm());
  }

  const auto t0 = Clock::now();
  const ConsensusRun run = simulate_consensus(setup, gain, x0, cfg.T);
  ctx.timing["simulation_seconds"] = seconds_since(t0);
  const double d0 = run.disagreement.front();
  const double dT = run.disagreement.back();
  double drift = 0.0;
  for (const Vector& a : run.average) drift = std::max(drift, (a - run.average.front()).norm());
  const double drift_rate = drift / run.horizon;

  std::ostringstream csv;
  csv << "time,disagreement";
  for (Eigen::Index r = 0; r < setup.state_dim(); ++r) csv << ",average" << r + 1;
  csv << "\n";
  const std::size_t stride = stride_for(cfg, run.trajectory.steps());
  for (std::size_t k : sample_indices(run.disagreement.size(), stride)) {
    csv << format_number(run.trajectory.grid[k]) << "," << format_number(run.disagreement[k]);
    for (Eigen::Index r = 0; r < setup.state_dim(); ++r) csv << "," << format_number(run.average[k](r));
    csv << "\n";
  }
  ctx.out.write("disagreement.csv", csv.str());
  ctx.out.write("trajectory.csv",
                trajectory_csv(run.trajectory, ctx.spec, stride_for(cfg, run.trajectory.steps())));
  if (cfg.svg) {
    Series s{"log10 disagreement", {}, {}};
    for (std::size_t k : sample_indices(run.disagreement.size(), stride)) {
      s.x.push_back(run.trajectory.grid[k]);
      s.y.push_back(std::log10(std::max(run.disagreement[k], 1e-300)));
    }
    ctx.out.write("disagreement.svg", svg_chart("consensus disagreement", "t", "log10 max |x_i - x_j|", {s}));
  }

  const bool pass = gain.residual <= pi_tol && identity_gap <= 1e-9 && aux_norm == 0.0 &&
                    protocol_gap <= 1e-10 && dT <= 1e-6 * d0 && drift_rate <= 1e-8;
  ctx.report["consensus"] = {{"Pi", matrix_json(gain.Pi)},
                             {"pi_residual", gain.residual},
                             {"gain_identity_gap", identity_gap},
                             {"auxiliary_riccati_norm", aux_norm},
                             {"protocol_gap", protocol_gap},
                             {"horizon", run.horizon},
                             {"steps", run.trajectory.steps()},
                             {"initial_disagreement", d0},
                             {"final_disagreement", dT},
                             {"average_drift_per_time", drift_rate},
                             {"passed", pass}};
  ctx.put("pi_residual", gain.residual);
  ctx.put("gain_identity_gap", identity_gap);
  ctx.put("protocol_gap", protocol_gap);
  ctx.put("initial_disagreement", d0);
  ctx.put("final_disagreement", dT);
  ctx.put("average_drift_per_time", drift_rate);
  ctx.put("consensus_passed", pass ? "true" : "false");
  return pass ? kExitOk : kExitVerificationGap;
}

int run_bench(Context& ctx) {
  const ExperimentConfig& cfg = ctx.cfg;
  const GraphSpec base = cfg.kron_base ? *cfg.kron_base : cfg.graph;
  std::ostringstream csv;
  csv << "c,n,centralized_dimension,riccati_solves,max_gain_difference\n";
  json rows = json::array();
  std::optional<GainSchedule> reference;
  bool identical = true;
  for (int c : cfg.bench_sizes) {
    const GraphSpec graph = kron_graph(base, c);
    const Matrix M = build_coupling(graph, cfg.coupling, cfg.tolerances);
    const SpectralData spec = spectral_decompose(M, cfg.tolerances);
    const EffectiveWeights w = effective_weights(spec, cfg.cost);
    const Eigen::Index dim = graph.n * cfg.model.state_dim();

    auto t0 = Clock::now();
    GainSchedule gains = cfg.horizon == Horizon::Finite
                             ? synthesize_finite(cfg.model, spec, w, cfg.T,
                                                 cfg.effective_riccati_step(), {false})
                             : synthesize_infinite(cfg.model, spec, w, {false});
    const double decomposed_seconds = seconds_since(t0);

    std::optional<double> centralized_seconds;
    if (dim <= cfg.max_oracle_dimension) {
      const StackedSystem S = stack_system(cfg.model, M, evaluate_matrix(cfg.cost.state, M),
                                           evaluate_matrix(cfg.cost.control, M));
      t0 = Clock::now();
      if (cfg.horizon == Horizon::Finite) {
        solve_riccati_ode({S.A, S.B, S.Q, S.R, S.QT}, cfg.T, cfg.effective_riccati_step());
      } else {
        solve_are({S.A, S.B, S.Q, S.R, Matrix()});
      }
      centralized_seconds = seconds_since(t0);
    }

    double diff = 0.0;
    if (!reference) {
      reference = gains;
    } else if (reference->groups() != gains.groups() ||
               reference->auxiliary_gain.size() != gains.auxiliary_gain.size()) {
      diff = INFINITY;
    } else {
      for (std::size_t k = 0; k < gains.auxiliary_gain.size(); ++k) {
        diff = std::max(diff, (gains.auxiliary_gain[k] - reference->auxiliary_gain[k]).cwiseAbs().maxCoeff());
        for (int g = 0; g < gains.groups(); ++g) {
          const auto gg = static_cast<std::size_t>(g);
          diff = std::max(diff, (gains.group_gain[gg][k] - reference->group_gain[gg][k]).cwiseAbs().maxCoeff());
        }
      }
    }
    identical = identical && diff <= 1e-10;
    csv << c << "," << graph.n << "," << dim << "," << gains.riccati_solves << ","
        << format_number(diff) << "\n";
    json row = {{"c", c},
                {"n", graph.n},
                {"centralized_dimension", dim},
                {"riccati_solves", gains.riccati_solves},
                {"decomposed_seconds", decomposed_seconds},
                {"max_gain_difference", diff}};
    row["centralized_seconds"] = centralized_seconds ? json(*centralized_seconds) : json(nullptr);
    rows.push_back(row);
  }
  ctx.out.write("bench.csv", csv.str());
  ctx.report["bench"] = {{"rows", rows}, {"gains_identical", identical}};
  ctx.put("bench_gains_identical", identical ? "true" : "false");
  return identical ? kExitOk : kExitVerificationGap;
}

}  // namespace

int exit_code_for(const Error& error) {
  return is_validation_error(error.code()) ? kExitValidation : kExitNumerical;
}

void apply_overrides(ExperimentConfig& config, const RunOverrides& o) {
  if (o.out) config.output = *o.out;
  if (o.seed) config.seed = *o.seed;
  if (o.paths) {
    if (*o.paths < 1) throw Error(ErrorCode::ValidationError, "--paths must be >= 1");
    config.paths = *o.paths;
  }
  if (o.tolerance) {
    if (!(*o.tolerance > 0.0)) throw Error(ErrorCode::ValidationError, "--tol must be positive");
    config.tolerance = *o.tolerance;
  }
  if (o.svg) config.svg = true;
}

RunOutcome run_experiment(const ExperimentConfig& input, RunMode mode) {
  ExperimentConfig config = input;
  if (mode == RunMode::Consensus) {
    // Single integrators with G = L^2, H = I on the graph Laplacian.
    const Eigen::Index d = config.model.Q.rows();
    config.coupling = LaplacianCoupling{};
    config.coupling_name = "laplacian";
    config.cost = ConsensusSetup::coupling();
    config.model.A = Matrix::Zero(d, d);
    config.model.B = Matrix::Identity(d, d);
    config.model.D = Matrix::Zero(d, d);
    config.model.E = Matrix::Zero(d, d);
    config.model.F = Matrix::Zero(d, 1);
    config.model.QT = Matrix::Zero(d, d);
    config.horizon = Horizon::Infinite;
  }
  Context ctx(config);
  prepare(ctx);
  ctx.out.write("spectrum.csv", spectrum_csv(*ctx.spec));
  int code = kExitOk;
  std::ostringstream msg;
  msg << config.name << ": n=" << ctx.spec->n << " L=" << ctx.spec->rank()
      << " L_dist=" << ctx.spec->distinct();
  switch (mode) {
    case RunMode::Decompose:
      break;
    case RunMode::Synthesize: {
      const auto gains = synthesize(ctx);
      msg << " riccati_solves=" << gains->riccati_solves;
      break;
    }
    case RunMode::Simulate: {
      const auto gains = synthesize(ctx);
      const SimulationResult sim = simulate(ctx, gains);
      msg << " riccati_solves=" << gains->riccati_solves << " cost=" << sim.cost.total;
      if (sim.ensemble) msg << " mc_mean=" << sim.ensemble->mean << " se=" << sim.ensemble->standard_error;
      if (sim.value) msg << " analytic=" << sim.value->analytic;
      break;
    }
    case RunMode::Verify: {
      const auto gains = synthesize(ctx);
      const SimulationResult sim = simulate(ctx, gains);
      code = run_verify(ctx, gains, sim);
      const json& v = ctx.report["verification"];
      if (v.contains("cost_gap")) msg << " cost_gap=" << v["cost_gap"].get<double>();
      if (v.contains("riccati_gap")) msg << " riccati_gap=" << v["riccati_gap"].get<double>();
      msg << (code == kExitOk ? " verified" : " VERIFICATION GAP");
      break;
    }
    case RunMode::Consensus:
      code = run_consensus(ctx);
      msg << " final_disagreement=" << ctx.report["consensus"]["final_disagreement"].get<double>()
          << (code == kExitOk ? " converged" : " CHECK FAILED");
      break;
    case RunMode::Bench:
      code = run_bench(ctx);
      break;
  }
  finish(ctx, mode, code);
  msg << " -> " << ctx.out.root().string();
  return {code, msg.str()};
}

}  // namespace netlqr
