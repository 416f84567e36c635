#pragma once

#include <string>
#include <variant>
#include <vector>

#include "netlqr/linalg.hpp"
#include "netlqr/model.hpp"

namespace netlqr {

struct Tolerances {
  double rank_tol = 1e-9;     // relative to ||M||_2
  double group_tol = 1e-8;    // absolute gap between distinct eigenvalues
  double sym_tol = 1e-10;
  double orth_tol = 1e-10;
  double pd_tol = 1e-8;
  double pbh_tol = 1e-8;      // relative to ||[A - sI, B]||_2
  double pbh_margin = 1e-10;  // modes with Re(s) >= -pbh_margin are tested
};

// Undirected weighted edge, nodes numbered 1..n. i == j is a self-loop.
struct Edge {
  int i = 0;
  int j = 0;
  double weight = 1.0;
};

struct GraphSpec {
  int n = 0;
  std::vector<Edge> edges;

  // Weighted adjacency W; repeated edges accumulate.
  Matrix adjacency() const;
};

struct AdjacencyCoupling {};
struct LaplacianCoupling {};
struct CustomCoupling {
  Matrix matrix;
};
using CouplingKind = std::variant<AdjacencyCoupling, LaplacianCoupling, CustomCoupling>;

// Rank-L eigendecomposition M = sum_l lambda_l v_l v_l^T of a symmetric
// coupling matrix, with eigenvalues sorted ascending and grouped into
// classes of (numerically) equal value.
struct SpectralData {
  int n = 0;
  Vector eigenvalues;   // L nonzero eigenvalues
  Matrix eigenvectors;  // n x L, orthonormal columns
  std::vector<std::vector<int>> groups;
  std::vector<int> group_of;  // eigen index -> group index
  Vector group_values;        // mean eigenvalue of each group
  double spectral_radius = 0.0;
  Tolerances tolerances;

  int rank() const { return static_cast<int>(eigenvalues.size()); }
  int distinct() const { return static_cast<int>(groups.size()); }

  // sum of v v^T over the eigenvectors of group g (n x n).
  Matrix group_projector(int g) const;
  // I - sum_l v_l v_l^T.
  Matrix auxiliary_projector() const;
  // Columns of eigenvectors belonging to group g.
  Matrix group_basis(int g) const;
};

struct Polynomial {
  std::vector<double> coefficients;  // c_0, c_1, ..., c_K
};
// s -> exp(gamma s)
struct Exponential {
  double gamma = 1.0;
};
// s -> 1 / (1 - gamma s), the sum of the geometric series in gamma M.
struct Inverse {
  double gamma = 1.0;
};
using WeightFunction = std::variant<Polynomial, Exponential, Inverse>;

double evaluate(const WeightFunction& f, double s);

// f(M) as a matrix. Polynomials use matrix Horner; the closed forms go
// through a full symmetric eigendecomposition (exp) or a linear solve
// (inverse), independently of SpectralData.
Matrix evaluate_matrix(const WeightFunction& f, const Matrix& M);

// Cost coupling: G = state(M), H = control(M).
struct CostCoupling {
  WeightFunction state = Polynomial{{1.0}};
  WeightFunction control = Polynomial{{1.0}};
};

// Scalar weights of the decoupled problems; q and r hold one entry per
// distinct-eigenvalue group.
struct EffectiveWeights {
  double q0 = 0.0;
  double r0 = 0.0;
  Vector q;
  Vector r;
};

struct AssumptionReport {
  bool a1_ok = false;
  bool a2_ok = false;
  bool a3_ok = true;
  bool a4_ok = true;
  bool infinite_checked = false;
  std::vector<std::string> diagnostics;

  bool finite_horizon_ok() const { return a1_ok && a2_ok; }
  bool ok() const { return a1_ok && a2_ok && a3_ok && a4_ok; }
};

Matrix build_coupling(const GraphSpec& graph, const CouplingKind& kind,
                      const Tolerances& tol = {});

// M kron (1/c) 1_{c x c}.
Matrix kronecker_expand(const Matrix& M, int c);

SpectralData spectral_decompose(const Matrix& M, const Tolerances& tol = {});

EffectiveWeights effective_weights(const SpectralData& spec, const CostCoupling& coupling);

// A1/A2 always; A3/A4 (PBH stabilizability/detectability of every
// decoupled subsystem) only when check_infinite is set.
AssumptionReport validate_assumptions(const SystemModel& model, const SpectralData& spec,
                                      const EffectiveWeights& weights, bool check_infinite);

}  // namespace netlqr
