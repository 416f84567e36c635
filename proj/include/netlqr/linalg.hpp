#pragma once

#include <Eigen/Dense>

#include <string_view>

namespace netlqr {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// Throws DimensionMismatch with `what` if m is not rows x cols.
void require_shape(const Matrix& m, Eigen::Index rows, Eigen::Index cols,
                   std::string_view what);

bool is_symmetric(const Matrix& m, double tol);

Matrix symmetrize(const Matrix& m);

// Smallest eigenvalue of the symmetric part of m.
double min_symmetric_eigenvalue(const Matrix& m);

// Symmetric PSD square root; eigenvalues in (-clamp, 0) are treated as zero.
Matrix psd_sqrt(const Matrix& m, double clamp = 1e-12);

Matrix kron(const Matrix& a, const Matrix& b);

bool all_finite(const Matrix& m);

// Spectral norm (largest singular value).
double norm2(const Matrix& m);

}  // namespace netlqr
