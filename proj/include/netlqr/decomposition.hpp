#pragma once

#include <array>
#include <memory>
#include <vector>

#include "netlqr/graph_coupling.hpp"
#include "netlqr/linalg.hpp"

namespace netlqr {

using SpectralHandle = std::shared_ptr<const SpectralData>;

// A global field (state, control or noise) is a d x n matrix whose column i
// belongs to node i.
using GlobalField = Matrix;

// x = auxiliary + sum_l eigen[l], with eigen[l] = x v_l v_l^T.
struct DecomposedField {
  std::vector<Matrix> eigen;
  Matrix auxiliary;
  SpectralHandle spectral;

  Matrix recompose() const;
  // Sum of the eigen components belonging to distinct-eigenvalue group g.
  Matrix group_component(int g) const;
};

// x v v^T. Throws DimensionMismatch, or InvalidArgument when v is not a
// unit vector within orth_tol.
Matrix project_eigen(const GlobalField& x, const Vector& v, double orth_tol = 1e-10);

DecomposedField decompose(const GlobalField& x, SpectralHandle spec);

// <x, y>_P = sum_i sum_j p_ij x_i' y_j
double weighted_inner(const GlobalField& x, const GlobalField& y, const Matrix& P);

// <x, Qx>_G + <u, Ru>_H
double instantaneous_cost(const GlobalField& x, const GlobalField& u, const Matrix& G,
                          const Matrix& H, const Matrix& Q, const Matrix& R);

// <x, QT x>_G
double terminal_cost(const GlobalField& x, const Matrix& G, const Matrix& QT);

// sum_i [q0 xa_i'Q xa_i + sum_l q_l x^l_i'Q x^l_i] + control analogue.
double decomposed_cost(const DecomposedField& dx, const DecomposedField& du,
                       const EffectiveWeights& weights, const Matrix& Q, const Matrix& R);

// Relative residuals of the nine algebraic identities of the eigen and
// auxiliary decomposition (x^l M = lambda x^l, ..., cross-term
// orthogonality) and of the cost decomposition. Each residual is
// |lhs - rhs| / (1 + max(|lhs|, |rhs|, natural scale)).
struct PropertyReport {
  std::array<double, 9> residuals{};
  double cost_residual = 0.0;
  double tolerance = 1e-9;

  double worst() const;
  bool passed() const { return worst() <= tolerance; }
};

PropertyReport check_properties(const GlobalField& x, const GlobalField& u, SpectralHandle spec,
                                const EffectiveWeights& weights, const Matrix& G,
                                const Matrix& H, const Matrix& M, const Matrix& Q,
                                const Matrix& R, double tolerance = 1e-9);

}  // namespace netlqr
