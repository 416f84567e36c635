#include "netlqr/decomposition.hpp"

#include <algorithm>
#include <cmath>

#include "netlqr/errors.hpp"

namespace netlqr {

namespace {

void require_same_spectral(const SpectralHandle& a, const SpectralHandle& b) {
  if (a == b) return;
  if (!a || !b || a->eigenvalues.size() != b->eigenvalues.size() ||
      a->eigenvectors.rows() != b->eigenvectors.rows() ||
      a->eigenvalues != b->eigenvalues || a->eigenvectors != b->eigenvectors) {
    throw Error(ErrorCode::MismatchedSpectralData, "fields decomposed with different spectra");
  }
}

// sum_i x_i' Q y_i
double local_sum(const Matrix& x, const Matrix& Q, const Matrix& y) {
  return x.cwiseProduct(Q * y).sum();
}

double rel(double diff, double a, double b, double ref = 0.0) {
  return std::abs(diff) / (1.0 + std::max({std::abs(a), std::abs(b), std::abs(ref)}));
}

double rel(const Matrix& lhs, const Matrix& rhs, double ref = 0.0) {
  return (lhs - rhs).norm() / (1.0 + std::max({lhs.norm(), rhs.norm(), ref}));
}

}  // namespace

Matrix DecomposedField::recompose() const {
  Matrix out = auxiliary;
  for (const Matrix& e : eigen) out += e;
  return out;
}

Matrix DecomposedField::group_component(int g) const {
  Matrix out = Matrix::Zero(auxiliary.rows(), auxiliary.cols());
  for (int l : spectral->groups.at(static_cast<std::size_t>(g))) out += eigen[static_cast<std::size_t>(l)];
  return out;
}

Matrix project_eigen(const GlobalField& x, const Vector& v, double orth_tol) {
  if (x.cols() != v.size()) {
    throw Error(ErrorCode::DimensionMismatch, "field has " + std::to_string(x.cols()) +
                                                  " columns, eigenvector has " +
                                                  std::to_string(v.size()) + " entries");
  }
  if (std::abs(v.squaredNorm() - 1.0) > orth_tol) {
    throw Error(ErrorCode::InvalidArgument, "eigenvector is not of unit length");
  }
  return (x * v) * v.transpose();
}

DecomposedField decompose(const GlobalField& x, SpectralHandle spec) {
  if (!spec) throw Error(ErrorCode::InvalidArgument, "missing spectral data");
  if (x.cols() != spec->n) {
    throw Error(ErrorCode::DimensionMismatch,
                "field has " + std::to_string(x.cols()) + " columns, network has " +
                    std::to_string(spec->n) + " nodes");
  }
  DecomposedField out;
  out.auxiliary = x;
  out.eigen.reserve(static_cast<std::size_t>(spec->rank()));
  for (int l = 0; l < spec->rank(); ++l) {
    out.eigen.push_back(project_eigen(x, spec->eigenvectors.col(l), spec->tolerances.orth_tol));
    out.auxiliary -= out.eigen.back();
  }
  out.spectral = std::move(spec);
  return out;
}

double weighted_inner(const GlobalField& x, const GlobalField& y, const Matrix& P) {
  if (x.rows() != y.rows() || x.cols() != P.rows() || y.cols() != P.cols()) {
    throw Error(ErrorCode::DimensionMismatch, "weighted inner product operands");
  }
  return (x.transpose() * y).cwiseProduct(P).sum();
}

double instantaneous_cost(const GlobalField& x, const GlobalField& u, const Matrix& G,
                          const Matrix& H, const Matrix& Q, const Matrix& R) {
  if (Q.rows() != x.rows() || R.rows() != u.rows()) {
    throw Error(ErrorCode::DimensionMismatch, "cost weights vs field dimension");
  }
  return weighted_inner(x, Q * x, G) + weighted_inner(u, R * u, H);
}

double terminal_cost(const GlobalField& x, const Matrix& G, const Matrix& QT) {
  if (QT.rows() != x.rows()) throw Error(ErrorCode::DimensionMismatch, "terminal weight");
  return weighted_inner(x, QT * x, G);
}

double decomposed_cost(const DecomposedField& dx, const DecomposedField& du,
                       const EffectiveWeights& weights, const Matrix& Q, const Matrix& R) {
  require_same_spectral(dx.spectral, du.spectral);
  const SpectralData& spec = *dx.spectral;
  if (weights.q.size() != spec.distinct()) {
    throw Error(ErrorCode::MismatchedSpectralData, "weights do not match spectral groups");
  }
  double total = weights.q0 * local_sum(dx.auxiliary, Q, dx.auxiliary) +
                 weights.r0 * local_sum(du.auxiliary, R, du.auxiliary);
  for (int l = 0; l < spec.rank(); ++l) {
    const int g = spec.group_of[static_cast<std::size_t>(l)];
    const auto k = static_cast<std::size_t>(l);
    total += weights.q(g) * local_sum(dx.eigen[k], Q, dx.eigen[k]) +
             weights.r(g) * local_sum(du.eigen[k], R, du.eigen[k]);
  }
  return total;
}

double PropertyReport::worst() const {
  return std::max(*std::max_element(residuals.begin(), residuals.end()), cost_residual);
}

PropertyReport check_properties(const GlobalField& x, const GlobalField& u, SpectralHandle spec,
                                const EffectiveWeights& weights, const Matrix& G,
                                const Matrix& H, const Matrix& M, const Matrix& Q,
                                const Matrix& R, double tolerance) {
  PropertyReport report;
  report.tolerance = tolerance;
  const DecomposedField dx = decompose(x, spec);
  const DecomposedField du = decompose(u, spec);
  const double m_norm = M.norm();
  const Matrix M2 = M * M;
  const Matrix M3 = M2 * M;
  auto& res = report.residuals;

  auto bump = [](double& slot, double value) { slot = std::max(slot, value); };

  for (int l = 0; l < spec->rank(); ++l) {
    const auto k = static_cast<std::size_t>(l);
    const double lam = spec->eigenvalues(l);
    const int g = spec->group_of[k];
    for (const auto* f : {&dx, &du}) {
      const Matrix& e = f->eigen[k];
      bump(res[0], rel(e * M, lam * e, e.norm() * m_norm));
      bump(res[1], rel(e * M2, lam * lam * e, e.norm() * m_norm * m_norm));
      bump(res[1], rel(e * M3, lam * lam * lam * e, e.norm() * std::pow(m_norm, 3)));
    }
    bump(res[2], rel(dx.eigen[k] * G, weights.q(g) * dx.eigen[k], dx.eigen[k].norm() * G.norm()));
    bump(res[2], rel(du.eigen[k] * H, weights.r(g) * du.eigen[k], du.eigen[k].norm() * H.norm()));
  }

  for (const auto* f : {&dx, &du}) {
    const Matrix& a = f->auxiliary;
    const Matrix zero = Matrix::Zero(a.rows(), a.cols());
    bump(res[3], rel(a * M, zero, a.norm() * m_norm));
    bump(res[4], rel(a * M2, zero, a.norm() * m_norm * m_norm));
    bump(res[4], rel(a * M3, zero, a.norm() * std::pow(m_norm, 3)));
  }
  bump(res[5], rel(dx.auxiliary * G, weights.q0 * dx.auxiliary, dx.auxiliary.norm() * G.norm()));
  bump(res[5], rel(du.auxiliary * H, weights.r0 * du.auxiliary, du.auxiliary.norm() * H.norm()));

  Matrix xg = weights.q0 * dx.auxiliary;
  Matrix uh = weights.r0 * du.auxiliary;
  for (int l = 0; l < spec->rank(); ++l) {
    const auto k = static_cast<std::size_t>(l);
    const int g = spec->group_of[k];
    xg += weights.q(g) * dx.eigen[k];
    uh += weights.r(g) * du.eigen[k];
  }
  bump(res[6], rel(x * G, xg, x.norm() * G.norm()));
  bump(res[6], rel(u * H, uh, u.norm() * H.norm()));

  for (int l = 0; l < spec->rank(); ++l) {
    const auto k = static_cast<std::size_t>(l);
    for (const auto& [f, W, full] : {std::tuple{&dx, &Q, &x}, std::tuple{&du, &R, &u}}) {
      const Matrix& e = f->eigen[k];
      const double self = local_sum(e, *W, e);
      for (int m = 0; m < spec->rank(); ++m) {
        if (m == l) continue;
        const Matrix& o = f->eigen[static_cast<std::size_t>(m)];
        const double cross = local_sum(e, *W, o);
        const double scale = std::sqrt(std::abs(self * local_sum(o, *W, o)));
        bump(res[7], std::abs(cross) / (1.0 + scale));
      }
      const double mixed = local_sum(*full, *W, e);
      bump(res[8], rel(mixed - self, mixed, self, full->norm() * e.norm() * W->norm()));
    }
  }

  const double direct = instantaneous_cost(x, u, G, H, Q, R);
  const double split = decomposed_cost(dx, du, weights, Q, R);
  report.cost_residual = std::abs(direct - split) / (1.0 + std::abs(direct));
  return report;
}

}  // namespace netlqr
