#include "netlqr/consensus.hpp"

#include <cmath>
#include <sstream>

#include <Eigen/Eigenvalues>

#include "netlqr/errors.hpp"

namespace netlqr {

namespace {

Matrix symmetric_power(const Matrix& m, double power) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(symmetrize(m));
  Vector ev = es.eigenvalues();
  for (Eigen::Index k = 0; k < ev.size(); ++k) {
    ev(k) = ev(k) < 0.0 && ev(k) > -1e-12 ? 0.0 : std::pow(ev(k), power);
  }
  return es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
}

}  // namespace

ConsensusSetup ConsensusSetup::make(GraphSpec graph, Matrix Q, Matrix R) {
  const Matrix W = graph.adjacency();
  if ((W.array() < 0.0).any()) {
    throw Error(ErrorCode::ValidationError, "consensus graph weights must be nonnegative");
  }
  ConsensusSetup s;
  s.laplacian = build_coupling(graph, LaplacianCoupling{});
  Eigen::SelfAdjointEigenSolver<Matrix> es(s.laplacian, Eigen::EigenvaluesOnly);
  const double scale = std::max(1.0, es.eigenvalues().cwiseAbs().maxCoeff());
  int zeros = 0;
  for (Eigen::Index k = 0; k < es.eigenvalues().size(); ++k) {
    if (std::abs(es.eigenvalues()(k)) <= 1e-9 * scale) ++zeros;
  }
  if (zeros != 1) {
    throw Error(ErrorCode::ValidationError,
                "consensus graph is not connected (" + std::to_string(zeros) + " components)");
  }
  if (Q.rows() != Q.cols() || R.rows() != R.cols() || Q.rows() != R.rows()) {
    throw Error(ErrorCode::DimensionMismatch, "consensus Q and R must be square and equal size");
  }
  if (!is_symmetric(Q, 1e-10) || min_symmetric_eigenvalue(Q) <= 0.0) {
    throw Error(ErrorCode::ValidationError, "consensus Q must be symmetric positive definite");
  }
  if (!is_symmetric(R, 1e-10) || min_symmetric_eigenvalue(R) <= 0.0) {
    throw Error(ErrorCode::NotPositiveDefiniteR, "consensus R must be symmetric positive definite");
  }
  s.graph = std::move(graph);
  s.Q = std::move(Q);
  s.R = std::move(R);
  return s;
}

SystemModel ConsensusSetup::model() const {
  const Eigen::Index d = state_dim();
  SystemModel m;
  m.A = Matrix::Zero(d, d);
  m.B = Matrix::Identity(d, d);
  m.Q = Q;
  m.R = R;
  m.normalize();
  return m;
}

CostCoupling ConsensusSetup::coupling() { return {Polynomial{{0.0, 0.0, 1.0}}, Polynomial{{1.0}}}; }

ConsensusGain solve_pi(const Matrix& Q, const Matrix& R) {
  if (Q.rows() != Q.cols() || R.rows() != R.cols() || Q.rows() != R.rows()) {
    throw Error(ErrorCode::DimensionMismatch, "Q and R must be square and equal size");
  }
  if (!is_symmetric(R, 1e-10) || min_symmetric_eigenvalue(R) <= 0.0) {
    throw Error(ErrorCode::NotPositiveDefiniteR, "R must be symmetric positive definite");
  }
  const Matrix Rh = symmetric_power(R, 0.5);
  const Matrix Rih = symmetric_power(R, -0.5);
  ConsensusGain g;
  g.Pi = symmetrize(Rh * psd_sqrt(symmetrize(Rih * Q * Rih)) * Rh);
  const Matrix Rinv = R.llt().solve(Matrix::Identity(R.rows(), R.cols()));
  g.gain = -Rinv * g.Pi;
  g.residual = (g.Pi * Rinv * g.Pi - Q).norm();
  return g;
}

GlobalField consensus_control(const ConsensusSetup& setup, const ConsensusGain& gain,
                              const GlobalField& x) {
  require_shape(x, setup.state_dim(), setup.laplacian.rows(), "consensus state");
  // x L stacks sum_j w_ij (x_i - x_j) in column i.
  return gain.gain * (x * setup.laplacian);
}

double disagreement(const GlobalField& x) {
  double worst = 0.0;
  for (Eigen::Index i = 0; i < x.cols(); ++i) {
    for (Eigen::Index j = i + 1; j < x.cols(); ++j) {
      worst = std::max(worst, (x.col(i) - x.col(j)).norm());
    }
  }
  return worst;
}

double consensus_horizon(const ConsensusSetup& setup, const ConsensusGain& gain) {
  const SpectralData spec = spectral_decompose(setup.laplacian);
  const double lambda_min = spec.eigenvalues.minCoeff();
  Eigen::JacobiSVD<Matrix> svd(gain.gain);
  const double sigma_min = svd.singularValues().minCoeff();
  return 20.0 / (lambda_min * sigma_min);
}

ConsensusRun simulate_consensus(const ConsensusSetup& setup, const ConsensusGain& gain,
                                const GlobalField& x0, double horizon, std::size_t steps) {
  ConsensusRun run;
  run.horizon = horizon > 0.0 ? horizon : consensus_horizon(setup, gain);
  if (steps == 0) {
    // Keep the RK4 step well inside the stability region of the fastest mode.
    const double lambda_max = spectral_decompose(setup.laplacian).spectral_radius;
    const double sigma_max = norm2(gain.gain);
    const double fastest = std::max(1e-12, lambda_max * sigma_max);
    steps = std::max<std::size_t>(
        4000, static_cast<std::size_t>(std::ceil(run.horizon * fastest / 0.5)));
  }
  const SystemModel model = setup.model();
  const ConsensusLaw law(setup, gain);
  run.trajectory = simulate_deterministic(model, setup.laplacian, law, x0, run.horizon,
                                          run.horizon / static_cast<double>(steps));
  for (const GlobalField& x : run.trajectory.state) {
    run.disagreement.push_back(disagreement(x));
    run.average.push_back(x.rowwise().mean());
  }
  return run;
}

}  // namespace netlqr
