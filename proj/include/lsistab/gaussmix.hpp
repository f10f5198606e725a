#pragma once

// Finite Gaussian mixtures with closed-form density calculus.
//
// Every density quantity is evaluated in log space through log-sum-exp over
// components, so mixtures whose components sit thousands of standard
// deviations apart evaluate without overflow.

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "lsistab/error.hpp"
#include "lsistab/linalg.hpp"
#include "lsistab/rng.hpp"

namespace lsistab {

inline constexpr double kWeightSumTolerance = 1e-9;
inline constexpr double kSymmetryTolerance = 1e-12;
inline constexpr std::size_t kMaxProductComponents = 4096;

struct ComponentSpec {
  double weight = 1.0;
  VectorXd mean;
  MatrixXd cov;
};

/// One Gaussian component with its factorizations cached at construction.
struct Component {
  double weight = 1.0;
  double log_weight = 0.0;
  VectorXd mean;
  MatrixXd cov;
  MatrixXd chol;        // lower Cholesky factor of cov
  MatrixXd precision;   // cov^{-1}
  double log_det = 0.0; // log det cov
  VectorXd eig_values;  // ascending
  MatrixXd eig_vectors;
};

class GaussianMixture {
 public:
  GaussianMixture() = default;

  /// Validating constructor. Weights summing to 1 within 1e-9 are
  /// renormalized; anything further off is rejected.
  GaussianMixture(Index dim, const std::vector<ComponentSpec>& specs) { build(dim, specs, false); }

  /// Builds a mixture from positive weights of any total, normalizing them.
  /// Used for mixtures produced internally (posteriors, products).
  static GaussianMixture normalized(Index dim, const std::vector<ComponentSpec>& specs) {
    GaussianMixture out;
    out.build(dim, specs, true);
    return out;
  }

  static GaussianMixture standard(Index dim) {
    return GaussianMixture(dim, {{1.0, VectorXd::Zero(dim), MatrixXd::Identity(dim, dim)}});
  }

  static GaussianMixture gaussian(const VectorXd& mean, const MatrixXd& cov) {
    return GaussianMixture(mean.size(), {{1.0, mean, cov}});
  }

  Index dim() const { return dim_; }
  std::size_t size() const { return components_.size(); }
  const Component& component(std::size_t j) const { return components_[j]; }
  const std::vector<Component>& components() const { return components_; }

  std::vector<ComponentSpec> specs() const {
    std::vector<ComponentSpec> out;
    out.reserve(components_.size());
    for (const auto& c : components_) out.push_back({c.weight, c.mean, c.cov});
    return out;
  }

  /// Largest eigenvalue over all component covariances.
  double max_component_variance() const {
    double hi = 0.0;
    for (const auto& c : components_) hi = std::max(hi, c.eig_values.maxCoeff());
    return hi;
  }

 private:
  void build(Index dim, const std::vector<ComponentSpec>& specs, bool renormalize_any) {
    if (dim < 1) fail(ErrorKind::DimensionMismatch, "dimension must be positive");
    if (specs.empty()) fail(ErrorKind::BadWeights, "mixture needs at least one component");
    dim_ = dim;
    for (std::size_t j = 0; j < specs.size(); ++j) {
      const auto& s = specs[j];
      if (s.mean.size() != dim || s.cov.rows() != dim || s.cov.cols() != dim)
        fail(ErrorKind::DimensionMismatch, "component " + std::to_string(j) + " does not match dim " + std::to_string(dim));
      if (!s.mean.allFinite() || !s.cov.allFinite())
        fail(ErrorKind::DimensionMismatch, "component " + std::to_string(j) + " has non-finite entries");
      if (!is_symmetric(s.cov, kSymmetryTolerance * std::max(1.0, max_abs(s.cov))))
        fail(ErrorKind::NonPositiveDefiniteCovariance, "component " + std::to_string(j) + " covariance is not symmetric");
    }
    components_.clear();
    components_.reserve(specs.size());
    for (std::size_t j = 0; j < specs.size(); ++j) {
      Component c;
      c.mean = specs[j].mean;
      c.cov = symmetrize(specs[j].cov);
      Eigen::SelfAdjointEigenSolver<MatrixXd> eig(c.cov);
      c.eig_values = eig.eigenvalues();
      c.eig_vectors = eig.eigenvectors();
      if (!(c.eig_values.minCoeff() > 0.0))
        fail(ErrorKind::NonPositiveDefiniteCovariance, "component " + std::to_string(j) + " covariance has smallest eigenvalue " +
                                                           std::to_string(c.eig_values.minCoeff()));
      Eigen::LLT<MatrixXd> llt(c.cov);
      if (llt.info() != Eigen::Success)
        fail(ErrorKind::NonPositiveDefiniteCovariance, "component " + std::to_string(j) + " Cholesky failed");
      c.chol = llt.matrixL();
      c.precision = llt.solve(MatrixXd::Identity(dim, dim));
      c.precision = symmetrize(c.precision);
      c.log_det = 2.0 * c.chol.diagonal().array().log().sum();
      c.weight = specs[j].weight;
      components_.push_back(std::move(c));
    }
    double total = 0.0;
    for (std::size_t j = 0; j < components_.size(); ++j) {
      const double w = components_[j].weight;
      if (!(w > 0.0) || !std::isfinite(w))
        fail(ErrorKind::BadWeights, "component " + std::to_string(j) + " has non-positive weight");
      total += w;
    }
    if (!renormalize_any && std::abs(total - 1.0) > kWeightSumTolerance)
      fail(ErrorKind::BadWeights, "weights sum to " + std::to_string(total));
    for (auto& c : components_) {
      c.weight /= total;
      c.log_weight = std::log(c.weight);
    }
  }

  Index dim_ = 0;
  std::vector<Component> components_;
};

inline GaussianMixture mixture_new(Index dim, const std::vector<ComponentSpec>& components) {
  return GaussianMixture(dim, components);
}

struct LocalDensityData {
  VectorXd point;
  double log_density = 0.0;  // log dmu/dx
  VectorXd score;            // grad log dmu/dx
  MatrixXd hessian;          // Hessian of log dmu/dx
  double log_ratio = 0.0;    // log dmu/dgamma
};

/// Scratch buffers reused across evaluations in hot loops.
struct EvalWorkspace {
  VectorXd log_terms;
  MatrixXd gradients;  // dim x components
  VectorXd diff;
};

inline void evaluate_into(const GaussianMixture& mu, const Eigen::Ref<const VectorXd>& x, LocalDensityData& out,
                          EvalWorkspace& ws, bool with_hessian = true) {
  const Index n = mu.dim();
  if (x.size() != n) fail(ErrorKind::DimensionMismatch, "point has dimension " + std::to_string(x.size()));
  const auto k = static_cast<Index>(mu.size());
  ws.log_terms.resize(k);
  ws.gradients.resize(n, k);
  for (Index j = 0; j < k; ++j) {
    const Component& c = mu.component(static_cast<std::size_t>(j));
    ws.diff.noalias() = x - c.mean;
    const double quad = ws.diff.dot(c.precision * ws.diff);
    ws.log_terms[j] = c.log_weight - 0.5 * quad - 0.5 * c.log_det - 0.5 * static_cast<double>(n) * kLog2Pi;
    ws.gradients.col(j).noalias() = -(c.precision * ws.diff);
  }
  const double lse = log_sum_exp(ws.log_terms);
  out.point = x;
  out.log_density = lse;
  out.log_ratio = lse + 0.5 * x.squaredNorm() + 0.5 * static_cast<double>(n) * kLog2Pi;
  out.score.setZero(n);
  // responsibilities overwrite log_terms
  for (Index j = 0; j < k; ++j) ws.log_terms[j] = std::exp(ws.log_terms[j] - lse);
  out.score.noalias() = ws.gradients * ws.log_terms;
  if (!with_hessian) return;
  out.hessian.setZero(n, n);
  for (Index j = 0; j < k; ++j) {
    const double r = ws.log_terms[j];
    if (r == 0.0) continue;
    const Component& c = mu.component(static_cast<std::size_t>(j));
    ws.diff.noalias() = ws.gradients.col(j) - out.score;
    out.hessian.noalias() += r * (ws.diff * ws.diff.transpose() - c.precision);
  }
  out.hessian = symmetrize(out.hessian);
}

inline LocalDensityData evaluate(const GaussianMixture& mu, const VectorXd& x) {
  LocalDensityData out;
  EvalWorkspace ws;
  evaluate_into(mu, x, out, ws, true);
  return out;
}

/// Draws `count` i.i.d. points (rows): component by weight, then a Gaussian draw.
inline MatrixXd sample(const GaussianMixture& mu, Index count, Rng& rng) {
  if (count < 1) fail(ErrorKind::DomainError, "sample count must be at least 1");
  const Index n = mu.dim();
  MatrixXd out(count, n);
  VectorXd z(n);
  const std::size_t k = mu.size();
  for (Index i = 0; i < count; ++i) {
    std::size_t j = 0;
    if (k > 1) {
      double u = rng.uniform();
      for (; j + 1 < k; ++j) {
        u -= mu.component(j).weight;
        if (u < 0.0) break;
      }
    }
    for (Index d = 0; d < n; ++d) z[d] = rng.normal();
    const Component& c = mu.component(j);
    out.row(i) = (c.mean + c.chol * z).transpose();
  }
  return out;
}

inline MatrixXd sample(const GaussianMixture& mu, Index count, std::uint64_t seed, std::uint64_t stream) {
  Rng rng(seed, stream);
  return sample(mu, count, rng);
}

/// Component counts fixed by largest remainder of count * weight, so only the
/// within-component draws are random. Rows are grouped by component.
inline MatrixXd stratified_sample(const GaussianMixture& mu, Index count, std::uint64_t seed, std::uint64_t stream) {
  if (count < 1) fail(ErrorKind::DomainError, "sample count must be at least 1");
  const std::size_t k = mu.size();
  std::vector<Index> per(k);
  std::vector<std::pair<double, std::size_t>> rem;
  Index used = 0;
  for (std::size_t j = 0; j < k; ++j) {
    const double exact = static_cast<double>(count) * mu.component(j).weight;
    per[j] = static_cast<Index>(std::floor(exact));
    used += per[j];
    rem.emplace_back(exact - std::floor(exact), j);
  }
  std::sort(rem.begin(), rem.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
  for (std::size_t i = 0; used < count; ++i, ++used) ++per[rem[i % k].second];
  Rng rng(seed, stream);
  MatrixXd out(count, mu.dim());
  VectorXd z(mu.dim());
  Index row = 0;
  for (std::size_t j = 0; j < k; ++j) {
    const Component& c = mu.component(j);
    for (Index i = 0; i < per[j]; ++i, ++row) {
      for (Index d = 0; d < mu.dim(); ++d) z[d] = rng.normal();
      out.row(row) = (c.mean + c.chol * z).transpose();
    }
  }
  return out;
}

struct Moments {
  VectorXd mean;
  MatrixXd cov;
  MatrixXd second_moment() const { return cov + mean * mean.transpose(); }
};

/// Exact mixture mean and covariance by the law of total covariance.
inline Moments moments(const GaussianMixture& mu) {
  const Index n = mu.dim();
  Moments m{VectorXd::Zero(n), MatrixXd::Zero(n, n)};
  for (const auto& c : mu.components()) m.mean += c.weight * c.mean;
  for (const auto& c : mu.components()) {
    const VectorXd d = c.mean - m.mean;
    m.cov += c.weight * (c.cov + d * d.transpose());
  }
  m.cov = symmetrize(m.cov);
  return m;
}

/// Law of (X1, X2) for independent X1 ~ mu1, X2 ~ mu2.
inline GaussianMixture product_measure(const GaussianMixture& mu1, const GaussianMixture& mu2) {
  const std::size_t total = mu1.size() * mu2.size();
  if (total > kMaxProductComponents)
    fail(ErrorKind::ComponentBudgetExceeded, std::to_string(total) + " components exceed the budget of " +
                                                 std::to_string(kMaxProductComponents));
  const Index n1 = mu1.dim(), n2 = mu2.dim();
  std::vector<ComponentSpec> specs;
  specs.reserve(total);
  for (const auto& a : mu1.components()) {
    for (const auto& b : mu2.components()) {
      ComponentSpec s;
      s.weight = a.weight * b.weight;
      s.mean.resize(n1 + n2);
      s.mean << a.mean, b.mean;
      s.cov = MatrixXd::Zero(n1 + n2, n1 + n2);
      s.cov.topLeftCorner(n1, n1) = a.cov;
      s.cov.bottomRightCorner(n2, n2) = b.cov;
      specs.push_back(std::move(s));
    }
  }
  return GaussianMixture::normalized(n1 + n2, specs);
}

/// Law of Sigma X for X ~ mu (Sigma invertible).
inline GaussianMixture pushforward(const GaussianMixture& mu, const MatrixXd& sigma) {
  if (sigma.rows() != mu.dim() || sigma.cols() != mu.dim())
    fail(ErrorKind::DimensionMismatch, "pushforward matrix shape");
  auto specs = mu.specs();
  for (auto& s : specs) {
    s.mean = sigma * s.mean;
    s.cov = symmetrize(sigma * s.cov * sigma.transpose());
  }
  return GaussianMixture::normalized(mu.dim(), specs);
}

inline GaussianMixture translate(const GaussianMixture& mu, const VectorXd& shift) {
  if (shift.size() != mu.dim()) fail(ErrorKind::DimensionMismatch, "translation vector");
  auto specs = mu.specs();
  for (auto& s : specs) s.mean += shift;
  return GaussianMixture::normalized(mu.dim(), specs);
}

/// (1 - t) mu + t nu.
inline GaussianMixture combine(const GaussianMixture& mu, const GaussianMixture& nu, double t) {
  if (mu.dim() != nu.dim()) fail(ErrorKind::DimensionMismatch, "combine: dimensions differ");
  if (!(t > 0.0 && t < 1.0)) fail(ErrorKind::DomainError, "combine: t must lie in (0,1)");
  std::vector<ComponentSpec> specs;
  for (const auto& c : mu.components()) specs.push_back({(1.0 - t) * c.weight, c.mean, c.cov});
  for (const auto& c : nu.components()) specs.push_back({t * c.weight, c.mean, c.cov});
  return GaussianMixture::normalized(mu.dim(), specs);
}

/// p * gamma_{0, base_cov} for a discrete measure p given as weighted atoms.
inline GaussianMixture convolve_discrete(const std::vector<std::pair<double, VectorXd>>& atoms, const MatrixXd& base_cov) {
  if (atoms.empty()) fail(ErrorKind::BadWeights, "discrete measure has no atoms");
  std::vector<ComponentSpec> specs;
  for (const auto& [w, x] : atoms) specs.push_back({w, x, base_cov});
  return GaussianMixture(atoms.front().second.size(), specs);
}

}  // namespace lsistab
