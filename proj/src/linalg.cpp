#include "netlqr/linalg.hpp"

#include <cmath>
#include <string>

#include "netlqr/errors.hpp"

namespace netlqr {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::AsymmetricCustomMatrix: return "AsymmetricCustomMatrix";
    case ErrorCode::AsymmetricInput: return "AsymmetricInput";
    case ErrorCode::IndexOutOfRange: return "IndexOutOfRange";
    case ErrorCode::SpectralRadiusViolation: return "SpectralRadiusViolation";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::NonFiniteBlowup: return "NonFiniteBlowup";
    case ErrorCode::StepTooLarge: return "StepTooLarge";
    case ErrorCode::NotStabilizable: return "NotStabilizable";
    case ErrorCode::NoConvergence: return "NoConvergence";
    case ErrorCode::SingularR: return "SingularR";
    case ErrorCode::MismatchedSpectralData: return "MismatchedSpectralData";
    case ErrorCode::AssumptionViolation: return "AssumptionViolation";
    case ErrorCode::TimeOutOfRange: return "TimeOutOfRange";
    case ErrorCode::MissingInformation: return "MissingInformation";
    case ErrorCode::GridMismatch: return "GridMismatch";
    case ErrorCode::MissingRiccatiSamples: return "MissingRiccatiSamples";
    case ErrorCode::TooLarge: return "TooLarge";
    case ErrorCode::NotPositiveDefiniteR: return "NotPositiveDefiniteR";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::ValidationError: return "ValidationError";
  }
  return "Unknown";
}

bool is_validation_error(ErrorCode code) {
  switch (code) {
    case ErrorCode::NonFiniteBlowup:
    case ErrorCode::StepTooLarge:
    case ErrorCode::NoConvergence:
    case ErrorCode::SingularR:
    case ErrorCode::MissingRiccatiSamples:
      return false;
    default:
      return true;
  }
}

void require_shape(const Matrix& m, Eigen::Index rows, Eigen::Index cols,
                   std::string_view what) {
  if (m.rows() != rows || m.cols() != cols) {
    throw Error(ErrorCode::DimensionMismatch,
                std::string(what) + " is " + std::to_string(m.rows()) + "x" +
                    std::to_string(m.cols()) + ", expected " + std::to_string(rows) +
                    "x" + std::to_string(cols));
  }
}

bool is_symmetric(const Matrix& m, double tol) {
  if (m.rows() != m.cols()) return false;
  if (m.size() == 0) return true;
  const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  return (m - m.transpose()).cwiseAbs().maxCoeff() <= tol * scale;
}

Matrix symmetrize(const Matrix& m) { return 0.5 * (m + m.transpose()); }

double min_symmetric_eigenvalue(const Matrix& m) {
  if (m.size() == 0) return 0.0;
  Eigen::SelfAdjointEigenSolver<Matrix> es(symmetrize(m), Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

Matrix psd_sqrt(const Matrix& m, double clamp) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(symmetrize(m));
  Vector ev = es.eigenvalues();
  for (Eigen::Index i = 0; i < ev.size(); ++i) {
    if (ev(i) < 0.0 && ev(i) > -clamp) ev(i) = 0.0;
    ev(i) = std::sqrt(std::max(ev(i), 0.0));
  }
  return symmetrize(es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose());
}

Matrix kron(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows() * b.rows(), a.cols() * b.cols());
  for (Eigen::Index i = 0; i < a.rows(); ++i) {
    for (Eigen::Index j = 0; j < a.cols(); ++j) {
      out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
    }
  }
  return out;
}

bool all_finite(const Matrix& m) { return m.allFinite(); }

double norm2(const Matrix& m) {
  if (m.size() == 0) return 0.0;
  Eigen::JacobiSVD<Matrix> svd(m);
  return svd.singularValues()(0);
}

}  // namespace netlqr
