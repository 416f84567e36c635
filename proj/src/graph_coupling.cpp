#include "netlqr/graph_coupling.hpp"

#include <cmath>
#include <sstream>
#include <string>

#include "netlqr/errors.hpp"
#include "netlqr/riccati.hpp"

namespace netlqr {

namespace {

void check_radius(const Inverse& f, double radius) {
  if (!(std::abs(f.gamma) * radius < 1.0)) {
    std::ostringstream os;
    os << "inverse weight needs spectral radius " << radius << " < 1/|gamma| = "
       << (f.gamma == 0.0 ? INFINITY : 1.0 / std::abs(f.gamma));
    throw Error(ErrorCode::SpectralRadiusViolation, os.str());
  }
}

std::string describe_mode(const PbhResult& r) {
  std::ostringstream os;
  os << "s = " << r.failing_mode.real();
  if (r.failing_mode.imag() != 0.0) os << (r.failing_mode.imag() > 0 ? " + " : " - ")
                                       << std::abs(r.failing_mode.imag()) << "i";
  os << ", margin " << r.margin;
  return os.str();
}

}  // namespace

Matrix GraphSpec::adjacency() const {
  if (n <= 0) throw Error(ErrorCode::InvalidArgument, "graph needs at least one node");
  Matrix W = Matrix::Zero(n, n);
  for (const Edge& e : edges) {
    if (e.i < 1 || e.i > n || e.j < 1 || e.j > n) {
      throw Error(ErrorCode::IndexOutOfRange,
                  "edge (" + std::to_string(e.i) + ", " + std::to_string(e.j) +
                      ") outside 1.." + std::to_string(n));
    }
    if (!std::isfinite(e.weight)) throw Error(ErrorCode::InvalidArgument, "non-finite edge weight");
    const int a = e.i - 1;
    const int b = e.j - 1;
    W(a, b) += e.weight;
    if (a != b) W(b, a) += e.weight;
  }
  return W;
}

Matrix build_coupling(const GraphSpec& graph, const CouplingKind& kind, const Tolerances& tol) {
  if (const auto* custom = std::get_if<CustomCoupling>(&kind)) {
    const Matrix& M = custom->matrix;
    if (M.rows() != M.cols() || (graph.n > 0 && M.rows() != graph.n)) {
      throw Error(ErrorCode::DimensionMismatch, "custom coupling must be n x n");
    }
    if (!is_symmetric(M, tol.sym_tol)) {
      throw Error(ErrorCode::AsymmetricCustomMatrix, "custom coupling matrix is not symmetric");
    }
    return symmetrize(M);
  }
  const Matrix W = graph.adjacency();
  if (std::holds_alternative<LaplacianCoupling>(kind)) {
    Matrix L = -W;
    L.diagonal() += W.rowwise().sum();
    return L;
  }
  return W;
}

Matrix kronecker_expand(const Matrix& M, int c) {
  if (c < 1) throw Error(ErrorCode::InvalidArgument, "kronecker factor must be >= 1");
  return kron(M, Matrix::Constant(c, c, 1.0 / c));
}

Matrix SpectralData::group_projector(int g) const {
  const Matrix V = group_basis(g);
  return V * V.transpose();
}

Matrix SpectralData::auxiliary_projector() const {
  return Matrix::Identity(n, n) - eigenvectors * eigenvectors.transpose();
}

Matrix SpectralData::group_basis(int g) const {
  const auto& members = groups.at(static_cast<std::size_t>(g));
  Matrix V(n, static_cast<Eigen::Index>(members.size()));
  for (std::size_t k = 0; k < members.size(); ++k) {
    V.col(static_cast<Eigen::Index>(k)) = eigenvectors.col(members[k]);
  }
  return V;
}

SpectralData spectral_decompose(const Matrix& M, const Tolerances& tol) {
  if (M.rows() != M.cols()) throw Error(ErrorCode::AsymmetricInput, "matrix is not square");
  if (!is_symmetric(M, tol.sym_tol)) {
    throw Error(ErrorCode::AsymmetricInput, "coupling matrix is not symmetric");
  }
  SpectralData spec;
  spec.n = static_cast<int>(M.rows());
  spec.tolerances = tol;
  if (spec.n == 0) return spec;

  Eigen::SelfAdjointEigenSolver<Matrix> es(symmetrize(M));
  const Vector& all = es.eigenvalues();
  spec.spectral_radius = all.cwiseAbs().maxCoeff();
  const double cutoff = tol.rank_tol * spec.spectral_radius;

  std::vector<Eigen::Index> kept;
  if (spec.spectral_radius > 0.0) {
    for (Eigen::Index k = 0; k < all.size(); ++k) {
      if (std::abs(all(k)) > cutoff) kept.push_back(k);
    }
  }
  const auto L = static_cast<Eigen::Index>(kept.size());
  spec.eigenvalues.resize(L);
  spec.eigenvectors.resize(spec.n, L);
  for (Eigen::Index l = 0; l < L; ++l) {
    spec.eigenvalues(l) = all(kept[static_cast<std::size_t>(l)]);
    Vector v = es.eigenvectors().col(kept[static_cast<std::size_t>(l)]);
    for (Eigen::Index k = 0; k < v.size(); ++k) {
      if (std::abs(v(k)) > tol.orth_tol) {
        if (v(k) < 0.0) v = -v;
        break;
      }
    }
    spec.eigenvectors.col(l) = v;
  }

  // Single-linkage grouping on the ascending list.
  spec.group_of.assign(static_cast<std::size_t>(L), 0);
  for (Eigen::Index l = 0; l < L; ++l) {
    if (l == 0 || spec.eigenvalues(l) - spec.eigenvalues(l - 1) > tol.group_tol) {
      spec.groups.emplace_back();
    }
    spec.groups.back().push_back(static_cast<int>(l));
    spec.group_of[static_cast<std::size_t>(l)] = static_cast<int>(spec.groups.size()) - 1;
  }
  spec.group_values.resize(static_cast<Eigen::Index>(spec.groups.size()));
  for (std::size_t g = 0; g < spec.groups.size(); ++g) {
    double sum = 0.0;
    for (int l : spec.groups[g]) sum += spec.eigenvalues(l);
    spec.group_values(static_cast<Eigen::Index>(g)) = sum / static_cast<double>(spec.groups[g].size());
  }
  return spec;
}

double evaluate(const WeightFunction& f, double s) {
  return std::visit(
      [s](const auto& fn) -> double {
        using T = std::decay_t<decltype(fn)>;
        if constexpr (std::is_same_v<T, Polynomial>) {
          double acc = 0.0;
          for (auto it = fn.coefficients.rbegin(); it != fn.coefficients.rend(); ++it) {
            acc = acc * s + *it;
          }
          return acc;
        } else if constexpr (std::is_same_v<T, Exponential>) {
          return std::exp(fn.gamma * s);
        } else {
          return 1.0 / (1.0 - fn.gamma * s);
        }
      },
      f);
}

Matrix evaluate_matrix(const WeightFunction& f, const Matrix& M) {
  const Eigen::Index n = M.rows();
  const Matrix I = Matrix::Identity(n, n);
  if (const auto* poly = std::get_if<Polynomial>(&f)) {
    Matrix acc = Matrix::Zero(n, n);
    for (auto it = poly->coefficients.rbegin(); it != poly->coefficients.rend(); ++it) {
      acc = acc * M + (*it) * I;
    }
    return acc;
  }
  Eigen::SelfAdjointEigenSolver<Matrix> es(symmetrize(M));
  if (const auto* inv = std::get_if<Inverse>(&f)) {
    check_radius(*inv, es.eigenvalues().cwiseAbs().maxCoeff());
    return symmetrize((I - inv->gamma * M).partialPivLu().solve(I));
  }
  const double gamma = std::get<Exponential>(f).gamma;
  const Vector ev = (gamma * es.eigenvalues().array()).exp().matrix();
  return symmetrize(es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose());
}

EffectiveWeights effective_weights(const SpectralData& spec, const CostCoupling& coupling) {
  for (const WeightFunction* f : {&coupling.state, &coupling.control}) {
    if (const auto* inv = std::get_if<Inverse>(f)) check_radius(*inv, spec.spectral_radius);
  }
  EffectiveWeights w;
  w.q0 = evaluate(coupling.state, 0.0);
  w.r0 = evaluate(coupling.control, 0.0);
  const int groups = spec.distinct();
  w.q.resize(groups);
  w.r.resize(groups);
  for (int g = 0; g < groups; ++g) {
    w.q(g) = evaluate(coupling.state, spec.group_values(g));
    w.r(g) = evaluate(coupling.control, spec.group_values(g));
  }
  return w;
}

AssumptionReport validate_assumptions(const SystemModel& model, const SpectralData& spec,
                                      const EffectiveWeights& weights, bool check_infinite) {
  model.validate_dimensions();
  if (weights.q.size() != spec.distinct() || weights.r.size() != spec.distinct()) {
    throw Error(ErrorCode::DimensionMismatch, "effective weights do not match spectral groups");
  }
  const Tolerances& tol = spec.tolerances;
  AssumptionReport report;
  auto note = [&](const std::string& msg) { report.diagnostics.push_back(msg); };

  // A1
  report.a1_ok = true;
  auto check_psd = [&](const Matrix& m, const char* name, bool strict) {
    if (!is_symmetric(m, tol.sym_tol)) {
      report.a1_ok = false;
      note(std::string("A1: ") + name + " is not symmetric");
      return;
    }
    const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
    const double lo = min_symmetric_eigenvalue(m);
    const bool ok = strict ? lo > tol.pd_tol * scale : lo >= -tol.pd_tol * scale;
    if (!ok) {
      report.a1_ok = false;
      std::ostringstream os;
      os << "A1: " << name << " is not positive " << (strict ? "definite" : "semi-definite")
         << " (min eigenvalue " << lo << ")";
      note(os.str());
    }
  };
  check_psd(model.Q, "Q", false);
  check_psd(model.QT, "QT", false);
  check_psd(model.R, "R", true);

  // A2
  report.a2_ok = true;
  auto check_weight = [&](double value, bool strict, const std::string& name) {
    const bool ok = strict ? value > tol.pd_tol : value >= -tol.pd_tol;
    if (!ok) {
      report.a2_ok = false;
      std::ostringstream os;
      os << "A2: " << name << " = " << value << (strict ? " must be > 0" : " must be >= 0");
      note(os.str());
    }
  };
  check_weight(weights.q0, false, "q0");
  check_weight(weights.r0, true, "r0");
  for (int g = 0; g < spec.distinct(); ++g) {
    std::ostringstream lam;
    lam << " (lambda = " << spec.group_values(g) << ")";
    check_weight(weights.q(g), false, "q[" + std::to_string(g) + "]" + lam.str());
    check_weight(weights.r(g), true, "r[" + std::to_string(g) + "]" + lam.str());
  }

  if (!check_infinite) return report;
  report.infinite_checked = true;
  const Matrix Q_half = psd_sqrt(model.Q);

  // A zero state weight makes the decoupled cost independent of the state;
  // its optimum is P = 0 and detectability is not required.
  auto check_pair = [&](const Matrix& Abar, const Matrix& Bbar, double q, const std::string& tag,
                        bool& flag) {
    const PbhResult stab = pbh_stabilizable(Abar, Bbar, tol.pbh_tol, tol.pbh_margin);
    if (!stab.ok) {
      flag = false;
      note(tag + ": not stabilizable, " + describe_mode(stab));
    }
    if (std::abs(q) <= tol.pd_tol) return;
    const PbhResult det =
        pbh_detectable(Abar, std::sqrt(std::max(q, 0.0)) * Q_half, tol.pbh_tol, tol.pbh_margin);
    if (!det.ok) {
      flag = false;
      note(tag + ": not detectable, " + describe_mode(det));
    }
  };
  check_pair(model.A, model.B, weights.q0, "A3 (auxiliary)", report.a3_ok);
  for (int g = 0; g < spec.distinct(); ++g) {
    const double lambda = spec.group_values(g);
    std::ostringstream tag;
    tag << "A4 (group " << g << ", lambda = " << lambda << ")";
    check_pair(model.A + lambda * model.D, model.B + lambda * model.E, weights.q(g), tag.str(),
               report.a4_ok);
  }
  return report;
}

}  // namespace netlqr
