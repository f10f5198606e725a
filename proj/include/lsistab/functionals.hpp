#pragma once

// Entropy, Fisher information and deficit of Gaussian mixtures.
//
// Mixture integrals are computed component by component in whitened
// coordinates x = m_j + L_j z, z in [-8, 8]^n, so each piece is a smooth
// integrand against the standard normal weight no matter how far apart the
// components sit. Dimensions above 2 use exact sampling from the mixture.
//
// Scalar functionals go through the Lebesgue density p = dmu/dx:
//   H(mu|gamma) = E[log p] + E|x|^2/2 + (n/2) log 2pi
//   I(mu|gamma) = E|grad log p|^2 - 2n + E|x|^2
// with the second moments taken exactly from the mixture. Both identities
// are translation invariant, so nothing of size |x|^2 is ever integrated.

#include <cstdint>
#include <optional>
#include <vector>

#include "lsistab/error.hpp"
#include "lsistab/estimate.hpp"
#include "lsistab/gaussmix.hpp"
#include "lsistab/linalg.hpp"
#include "lsistab/parallel.hpp"
#include "lsistab/quadrature.hpp"
#include "lsistab/rng.hpp"

namespace lsistab {

struct Budget {
  double quad_tol = 1e-8;
  long mc_samples = 1'000'000;
  std::uint64_t seed = kDefaultSeed;
  std::uint64_t stream = 0;
  int threads = 0;
  long max_intervals = 4000;
  bool allow_closed_form = true;  // single Gaussians skip numerics
  bool force_monte_carlo = false;
};

inline constexpr double kQuadratureHalfWidth = 8.0;
inline constexpr long kMonteCarloChunk = 4096;

struct VectorEstimate {
  VectorXd value;
  VectorXd error;
  Method method = Method::quadrature;
  long n = 0;
};

namespace detail {

// Running mean and sum of squared deviations, mergeable in a fixed order.
struct Welford {
  long n = 0;
  VectorXd mean;
  VectorXd m2;

  explicit Welford(Index m = 0) : mean(VectorXd::Zero(m)), m2(VectorXd::Zero(m)) {}

  void add(const VectorXd& x) {
    ++n;
    const VectorXd d = x - mean;
    mean += d / static_cast<double>(n);
    m2 += d.cwiseProduct(x - mean);
  }

  void merge(const Welford& o) {
    if (o.n == 0) return;
    if (n == 0) {
      *this = o;
      return;
    }
    const double na = static_cast<double>(n), nb = static_cast<double>(o.n);
    const VectorXd d = o.mean - mean;
    mean += d * (nb / (na + nb));
    m2 += o.m2 + d.cwiseAbs2() * (na * nb / (na + nb));
    n += o.n;
  }
};

inline double standard_normal_density(double sq_norm, Index n) {
  return std::exp(-0.5 * sq_norm - 0.5 * static_cast<double>(n) * kLog2Pi);
}

}  // namespace detail

inline bool uses_quadrature(const GaussianMixture& mu, const Budget& b) { return mu.dim() <= 2 && !b.force_monte_carlo; }

/// E_mu[g(x)] for a vector-valued g(local data, out). g receives the full
/// LocalDensityData at x (with the Hessian when `hessian` is set).
template <class G>
VectorEstimate integrate_against(const GaussianMixture& mu, Index m, const Budget& b, G&& g, bool hessian = false) {
  const Index n = mu.dim();
  VectorEstimate out;
  if (uses_quadrature(mu, b)) {
    out.method = Method::quadrature;
    const std::size_t k = mu.size();
    std::vector<QuadratureResult> parts(k);
    QuadratureOptions opt;
    opt.abs_tol = b.quad_tol;
    opt.max_intervals = b.max_intervals;
    opt.initial_panels = 4;
    const double h = kQuadratureHalfWidth;
    parallel_for(static_cast<long>(k), b.threads, [&](long j) {
      const Component& c = mu.component(static_cast<std::size_t>(j));
      LocalDensityData data;
      EvalWorkspace ws;
      VectorXd x(n), z(n), tmp(m);
      auto at = [&](Eigen::Ref<VectorXd> res) {
        x.noalias() = c.mean + c.chol * z;
        evaluate_into(mu, x, data, ws, hessian);
        g(static_cast<const LocalDensityData&>(data), tmp);
        res = tmp * detail::standard_normal_density(z.squaredNorm(), n);
      };
      if (n == 1) {
        parts[j] = integrate_adaptive(
            [&](double z0, Eigen::Ref<VectorXd> res) {
              z[0] = z0;
              at(res);
            },
            -h, h, m, opt);
      } else {
        parts[j] = integrate_adaptive_2d(
            [&](double z0, double z1, Eigen::Ref<VectorXd> res) {
              z[0] = z0;
              z[1] = z1;
              at(res);
            },
            -h, h, -h, h, m, opt);
      }
    });
    out.value = VectorXd::Zero(m);
    out.error = VectorXd::Zero(m);
    for (std::size_t j = 0; j < k; ++j) {
      const double w = mu.component(j).weight;
      out.value += w * parts[j].value;
      out.error += w * parts[j].error;
      out.n += parts[j].evaluations;
    }
    return out;
  }

  out.method = Method::monte_carlo;
  const long total = std::max<long>(b.mc_samples, 2);
  const long chunks = (total + kMonteCarloChunk - 1) / kMonteCarloChunk;
  std::vector<detail::Welford> acc(static_cast<std::size_t>(chunks), detail::Welford(m));
  const std::uint64_t base = derive_seed(b.seed, b.stream);
  parallel_for(chunks, b.threads, [&](long c) {
    const long count = std::min(kMonteCarloChunk, total - c * kMonteCarloChunk);
    Rng rng(base, static_cast<std::uint64_t>(c));
    const MatrixXd pts = sample(mu, count, rng);
    LocalDensityData data;
    EvalWorkspace ws;
    VectorXd tmp(m);
    detail::Welford& w = acc[static_cast<std::size_t>(c)];
    for (long i = 0; i < count; ++i) {
      evaluate_into(mu, pts.row(i).transpose(), data, ws, hessian);
      g(static_cast<const LocalDensityData&>(data), tmp);
      w.add(tmp);
    }
  });
  detail::Welford all(m);
  for (const auto& w : acc) all.merge(w);
  out.value = all.mean;
  out.error = (all.m2 / static_cast<double>(all.n - 1) / static_cast<double>(all.n)).cwiseSqrt();
  out.n = all.n;
  return out;
}

// ---------------------------------------------------------------------------
// Closed forms for one Gaussian.

struct GaussianClosedForms {
  double H_gamma = 0.0;
  double I_gamma = 0.0;
  double H_leb = 0.0;  // integral of p log p
  double I_leb = 0.0;
  MatrixXd fisher_leb;
  MatrixXd fisher_gauss;
  double deficit = 0.0;
};

inline GaussianClosedForms gaussian_closed_forms(const VectorXd& mean, const MatrixXd& cov) {
  const Index n = mean.size();
  if (cov.rows() != n || cov.cols() != n) fail(ErrorKind::DimensionMismatch, "covariance does not match mean");
  const SpectralData sd = spectral(cov, SpectralSource::cov);
  if (n > 0 && !(sd.eigenvalues.minCoeff() > 0.0))
    fail(ErrorKind::NonPositiveDefiniteCovariance, "covariance is not positive definite");
  GaussianClosedForms r;
  const double m2 = mean.squaredNorm();
  double h = 0.0, i = 0.0, d = 0.0, logdet = 0.0;
  for (Index k = 0; k < n; ++k) {
    const double s = sd.eigenvalues[k];
    h += s - 1.0 - std::log(s);
    i += (s - 1.0) * (s - 1.0) / s;
    d += 1.0 / s - 1.0 + std::log(s);
    logdet += std::log(s);
  }
  r.H_gamma = 0.5 * h + 0.5 * m2;
  r.I_gamma = i + m2;
  r.deficit = 0.5 * d;
  r.H_leb = -0.5 * logdet - 0.5 * static_cast<double>(n) * (1.0 + kLog2Pi);
  r.fisher_leb = sd.apply([](double s) { return 1.0 / s; });
  r.I_leb = r.fisher_leb.trace();
  // s + x = (I - C^{-1})(x - m) + m
  r.fisher_gauss = sd.apply([](double s) { return (s - 1.0) * (s - 1.0) / s; }) + mean * mean.transpose();
  return r;
}

// ---------------------------------------------------------------------------
// One-pass summary through the Lebesgue density.

struct FunctionalSummary {
  Estimate H_leb;    // E[log p]
  Estimate I_leb;    // E|grad log p|^2
  Estimate H_gamma;  // H(mu|gamma)
  Estimate I_gamma;  // I(mu|gamma)
  Estimate deficit;  // from its own integrand, see below
  MatrixEstimate fisher_leb;
  MatrixEstimate neg_hessian;  // -E[grad^2 log p], equal to fisher_leb
  Moments moments;
};

namespace detail {

inline Estimate entry(const VectorEstimate& v, Index i, double scale = 1.0, double shift = 0.0) {
  return {scale * v.value[i] + shift, std::abs(scale) * v.error[i], v.method, v.n};
}

inline MatrixEstimate block(const VectorEstimate& v, Index offset, Index n, double sign = 1.0) {
  MatrixEstimate m;
  m.value = symmetrize(sign * Eigen::Map<const MatrixXd>(v.value.data() + offset, n, n));
  m.abs_error = v.error.segment(offset, n * n).maxCoeff();
  m.method = v.method;
  m.n = v.n;
  return m;
}

}  // namespace detail

inline FunctionalSummary summarize(const GaussianMixture& mu, const Budget& b = {}) {
  const Index n = mu.dim();
  const double dn = static_cast<double>(n);
  FunctionalSummary s;
  s.moments = moments(mu);
  const double second = s.moments.second_moment().trace();
  if (b.allow_closed_form && mu.size() == 1) {
    const auto cf = gaussian_closed_forms(mu.component(0).mean, mu.component(0).cov);
    s.H_leb = Estimate::exact(cf.H_leb);
    s.I_leb = Estimate::exact(cf.I_leb);
    s.H_gamma = Estimate::exact(cf.H_gamma);
    s.I_gamma = Estimate::exact(cf.I_gamma);
    s.deficit = Estimate::exact(cf.deficit);
    s.fisher_leb = {cf.fisher_leb, 0.0, Method::closed_form, 0};
    s.neg_hessian = s.fisher_leb;
    return s;
  }
  // [log p, |s|^2, |s|^2/2 - log p, vec(s s^T), vec(-hess)]
  const Index m = 3 + 2 * n * n;
  const VectorEstimate v = integrate_against(
      mu, m, b,
      [n](const LocalDensityData& d, Eigen::Ref<VectorXd> out) {
        const double s2 = d.score.squaredNorm();
        out[0] = d.log_density;
        out[1] = s2;
        out[2] = 0.5 * s2 - d.log_density;
        for (Index c = 0; c < n; ++c)
          for (Index r = 0; r < n; ++r) {
            out[3 + c * n + r] = d.score[r] * d.score[c];
            out[3 + n * n + c * n + r] = -d.hessian(r, c);
          }
      },
      true);
  const double log_norm = 0.5 * dn * kLog2Pi;
  s.H_leb = detail::entry(v, 0);
  s.I_leb = detail::entry(v, 1);
  s.H_gamma = detail::entry(v, 0, 1.0, 0.5 * second + log_norm);
  s.I_gamma = detail::entry(v, 1, 1.0, second - 2.0 * dn);
  // delta = E[|s|^2/2 - log p] - n - (n/2) log 2pi. Integrating the
  // combination directly gives an error bar that accounts for the strong
  // correlation between the two constituents.
  s.deficit = detail::entry(v, 2, 1.0, -dn - log_norm);
  s.fisher_leb = detail::block(v, 3, n);
  s.neg_hessian = detail::block(v, 3 + n * n, n);
  return s;
}

inline Estimate entropy_rel_gaussian(const GaussianMixture& mu, const Budget& b = {}) { return summarize(mu, b).H_gamma; }

enum class Reference { lebesgue, gaussian };

inline Estimate fisher_information(const GaussianMixture& mu, Reference ref, const Budget& b = {}) {
  const auto s = summarize(mu, b);
  return ref == Reference::lebesgue ? s.I_leb : s.I_gamma;
}

/// Fisher information matrix. The Gaussian reference integrates
/// (score + x)(score + x)^T directly, independent of the Lebesgue route.
inline MatrixEstimate fisher_matrix(const GaussianMixture& mu, Reference ref, const Budget& b = {}) {
  const Index n = mu.dim();
  if (b.allow_closed_form && mu.size() == 1) {
    const auto cf = gaussian_closed_forms(mu.component(0).mean, mu.component(0).cov);
    return {ref == Reference::lebesgue ? cf.fisher_leb : cf.fisher_gauss, 0.0, Method::closed_form, 0};
  }
  if (ref == Reference::lebesgue) return summarize(mu, b).fisher_leb;
  const VectorEstimate v = integrate_against(mu, n * n, b, [n](const LocalDensityData& d, Eigen::Ref<VectorXd> out) {
    const VectorXd u = d.score + d.point;
    Eigen::Map<MatrixXd>(out.data(), n, n) = u * u.transpose();
  });
  return detail::block(v, 0, n);
}

struct DeficitEstimate {
  Estimate deficit;
  Estimate entropy;  // H(mu|gamma)
  Estimate fisher;   // I(mu|gamma)
};

inline DeficitEstimate deficit(const GaussianMixture& mu, const Budget& b = {}) {
  const auto s = summarize(mu, b);
  return {s.deficit, s.H_gamma, s.I_gamma};
}

/// Checks I(mu|L) - Id = I(mu|gamma) + Id - E[x x^T] with both Fisher
/// matrices estimated independently. lhs is the largest entrywise
/// discrepancy; rhs is the tolerance it must stay under: the combined error
/// of both sides, tripled when the estimates are Monte Carlo.
inline BoundReport integration_by_parts_check(const GaussianMixture& mu, const Budget& b = {}) {
  const Index n = mu.dim();
  const MatrixXd id = MatrixXd::Identity(n, n);
  const auto leb = fisher_matrix(mu, Reference::lebesgue, b);
  Budget b2 = b;
  b2.stream = b.stream + 1;  // independent Monte Carlo draws
  const auto gau = fisher_matrix(mu, Reference::gaussian, b2);
  const MatrixXd second = moments(mu).second_moment();
  const MatrixXd lhs = leb.value - id;
  const MatrixXd rhs = gau.value + id - second;
  const double disc = max_abs(lhs - rhs);
  const Method method = combine_methods(leb.method, gau.method);
  const double combined = leb.abs_error + gau.abs_error;
  const double tol = (method == Method::monte_carlo ? 3.0 : 1.0) * combined + 1e-12 * (1.0 + max_abs(second));
  BoundReport r = make_report("integration_by_parts", {disc, 0.0, method, leb.n + gau.n}, {tol, 0.0, method, 0},
                              Direction::LessEqual, "max entry of (I(mu|L) - Id) - (I(mu|gamma) + Id - E[xx^T])");
  r.extras["lhs_error"] = leb.abs_error;
  r.extras["rhs_error"] = gau.abs_error;
  return r;
}

}  // namespace lsistab
