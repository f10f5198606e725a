#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "lsistab/error.hpp"

namespace lsistab {

using Eigen::Index;
using Eigen::MatrixXd;
using Eigen::VectorXd;

inline constexpr double kLog2Pi = 1.8378770664093454835606594728112;  // log(2*pi)

enum class SpectralSource { cov, fisher_leb, fisher_gauss, other };

/// Eigen-decomposition of a symmetric matrix, eigenvalues in descending order.
struct SpectralData {
  VectorXd eigenvalues;
  MatrixXd eigenvectors;  // columns, matching eigenvalues
  SpectralSource source = SpectralSource::other;

  MatrixXd reconstruct() const {
    return eigenvectors * eigenvalues.asDiagonal() * eigenvectors.transpose();
  }

  template <class Fn>
  MatrixXd apply(Fn&& fn) const {
    VectorXd mapped = eigenvalues.unaryExpr(std::forward<Fn>(fn));
    return eigenvectors * mapped.asDiagonal() * eigenvectors.transpose();
  }
};

inline MatrixXd symmetrize(const MatrixXd& m) { return 0.5 * (m + m.transpose()); }

inline SpectralData spectral(const MatrixXd& m, SpectralSource source = SpectralSource::other) {
  Eigen::SelfAdjointEigenSolver<MatrixXd> solver(symmetrize(m));
  const Index n = m.rows();
  SpectralData out;
  out.source = source;
  out.eigenvalues = solver.eigenvalues().reverse();
  out.eigenvectors = solver.eigenvectors().rowwise().reverse();
  if (n == 0) out.eigenvectors.resize(0, 0);
  return out;
}

inline double min_eigenvalue(const MatrixXd& m) {
  if (m.size() == 0) return 0.0;
  return Eigen::SelfAdjointEigenSolver<MatrixXd>(symmetrize(m), Eigen::EigenvaluesOnly)
      .eigenvalues()
      .minCoeff();
}

inline double max_eigenvalue(const MatrixXd& m) {
  if (m.size() == 0) return 0.0;
  return Eigen::SelfAdjointEigenSolver<MatrixXd>(symmetrize(m), Eigen::EigenvaluesOnly)
      .eigenvalues()
      .maxCoeff();
}

/// Principal square root of a positive semidefinite matrix.
inline MatrixXd sqrtm_psd(const MatrixXd& m) {
  return spectral(m).apply([](double x) { return std::sqrt(std::max(x, 0.0)); });
}

inline double log_det_spd(const MatrixXd& m) {
  Eigen::LLT<MatrixXd> llt(m);
  if (llt.info() != Eigen::Success) fail(ErrorKind::NonPositiveDefiniteCovariance, "log_det of a non-SPD matrix");
  return 2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
}

inline bool is_symmetric(const MatrixXd& m, double tol) {
  return m.rows() == m.cols() && (m - m.transpose()).cwiseAbs().maxCoeff() <= tol;
}

inline double max_abs(const MatrixXd& m) { return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff(); }

inline MatrixXd vec_to_matrix(const VectorXd& v, Index n) {
  return Eigen::Map<const MatrixXd>(v.data(), n, n);
}

/// log(sum(exp(values))) without overflow.
inline double log_sum_exp(const VectorXd& values) {
  const double hi = values.maxCoeff();
  if (!std::isfinite(hi)) return hi;
  return hi + std::log((values.array() - hi).exp().sum());
}

}  // namespace lsistab
