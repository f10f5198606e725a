#pragma once

// Two-point mixture families on the line that defeat Wasserstein stability of
// the log-Sobolev inequality, sweeps over their parameter, and an exploratory
// fit of p * gamma to a given mixture.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

#include "lsistab/bounds.hpp"
#include "lsistab/error.hpp"
#include "lsistab/estimate.hpp"
#include "lsistab/functionals.hpp"
#include "lsistab/gaussmix.hpp"
#include "lsistab/parallel.hpp"
#include "lsistab/rng.hpp"
#include "lsistab/transport.hpp"

namespace lsistab {

enum class Family { variance_blowup, isotropic };

inline std::string_view to_string(Family f) { return f == Family::variance_blowup ? "variance_blowup" : "isotropic"; }

inline Family parse_family(std::string_view s) {
  if (s == "variance_blowup") return Family::variance_blowup;
  if (s == "isotropic") return Family::isotropic;
  fail(ErrorKind::DomainError, "unknown family '" + std::string(s) + "'");
}

/// Closed-form quantities of (1-t) gamma_{a,sigma} + t gamma_{b,sigma}
/// (sigma a variance). The two lower bounds are only valid when tail_ok.
struct FamilyAnalytic {
  double a = 0.0, b = 0.0, sigma = 1.0, t = 0.0;
  double mean = 0.0;
  double variance = 0.0;
  double deficit_upper = 0.0;
  double w_lower_p1 = 0.0;  // inf_m W_1(mu, gamma_m)
  double w2_lower = 0.0;    // inf_m W_2^2(mu, gamma_m)
  bool tail_ok = false;
};

struct FamilyMember {
  Family family = Family::variance_blowup;
  double k = 0.0;
  long n_k = 0;  // floor(k^{3/4}), the tensor power used for the dimensional scaling
  GaussianMixture mixture;
  FamilyAnalytic analytic;
};

namespace detail {

inline FamilyMember two_point_member(Family f, double k, double a, double b, double sigma, double t) {
  FamilyMember m;
  m.family = f;
  m.k = k;
  m.n_k = static_cast<long>(std::floor(std::pow(k, 0.75)));
  FamilyAnalytic& an = m.analytic;
  an.a = a;
  an.b = b;
  an.sigma = sigma;
  an.t = t;
  an.mean = (1.0 - t) * a + t * b;
  an.variance = sigma + t * (1.0 - t) * (b - a) * (b - a);
  an.deficit_upper = mixture_deficit_upper(a, b, sigma, t);
  an.tail_ok = two_point_tail_ok(a, b, t);
  const double q = std::min(t, 1.0 - t);
  an.w_lower_p1 = q * std::abs(b - a) / 16.0;
  an.w2_lower = q * (b - a) * (b - a) / 64.0;
  m.mixture = mixture_new(1, {{1.0 - t, VectorXd::Constant(1, a), MatrixXd::Constant(1, 1, sigma)},
                              {t, VectorXd::Constant(1, b), MatrixXd::Constant(1, 1, sigma)}});
  return m;
}

}  // namespace detail

/// (1 - 1/k) gamma_{0,1} + (1/k) gamma_{k^2,1}.
inline FamilyMember variance_blowup_family(long k) {
  if (k < 2) fail(ErrorKind::DomainError, "variance_blowup needs an integer k >= 2");
  const double kd = static_cast<double>(k);
  return detail::two_point_member(Family::variance_blowup, kd, 0.0, kd * kd, 1.0, 1.0 / kd);
}

/// t = k^{-3/2}, a = -1/k, b = -(1-t) a / t, sigma = 1 - t(1-t)(b-a)^2; centered
/// with unit variance.
inline FamilyMember isotropic_family(double k) {
  if (!(k > 1.0)) fail(ErrorKind::DomainError, "isotropic family needs k > 1");
  const double t = std::pow(k, -1.5);
  const double a = -1.0 / k;
  const double b = -(1.0 - t) * a / t;
  const double sigma = 1.0 - t * (1.0 - t) * (b - a) * (b - a);
  if (!(sigma > 0.0)) fail(ErrorKind::SigmaNonPositive, "sigma = " + std::to_string(sigma) + " at k = " + std::to_string(k));
  return detail::two_point_member(Family::isotropic, k, a, b, sigma, t);
}

inline FamilyMember family_member(Family f, double k) {
  if (f == Family::variance_blowup) {
    if (k != std::floor(k)) fail(ErrorKind::DomainError, "variance_blowup needs an integer k");
    return variance_blowup_family(static_cast<long>(k));
  }
  return isotropic_family(k);
}

// ---------------------------------------------------------------------------

struct SweepOptions {
  bool monte_carlo = false;
  Index points = 2048;
  int repetitions = 5;
  Budget budget;
  int threads = 0;
};

struct SweepRow {
  FamilyMember member;
  double tensor_deficit_upper = 0.0;  // n(k) * deficit_upper
  double tensor_w2_lower = 0.0;       // n(k) * w2_lower
  double ratio = 0.0;                 // w2_lower / deficit_upper, equal to the tensorized ratio
  bool has_monte_carlo = false;
  Estimate deficit;        // quadrature
  Estimate w2sq_translate;  // inf_m W_2^2(mu_hat, gamma_m hat)
  Estimate w1_translate;    // inf_m W_1
  double w2sq_floor = 0.0;  // the same estimator applied to gamma itself
};

namespace detail {

inline Estimate mean_and_se(const std::vector<double>& v, long n) {
  const double m = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
  double var = 0.0;
  for (double x : v) var += (x - m) * (x - m);
  const double reps = static_cast<double>(v.size());
  const double se = v.size() > 1 ? std::sqrt(var / (reps - 1.0) / reps) : 0.0;
  return {m, se, Method::monte_carlo, n};
}

}  // namespace detail

inline std::vector<SweepRow> sweep(Family family, std::vector<double> ks, const SweepOptions& o = {}) {
  if (ks.empty()) fail(ErrorKind::DomainError, "sweep needs at least one k");
  std::sort(ks.begin(), ks.end());
  std::vector<SweepRow> rows(ks.size());
  for (std::size_t i = 0; i < ks.size(); ++i) {
    SweepRow& r = rows[i];
    r.member = family_member(family, ks[i]);
    const double nk = static_cast<double>(r.member.n_k);
    r.tensor_deficit_upper = nk * r.member.analytic.deficit_upper;
    r.tensor_w2_lower = nk * r.member.analytic.w2_lower;
    r.ratio = r.member.analytic.w2_lower / r.member.analytic.deficit_upper;
  }
  if (!o.monte_carlo) return rows;

  const GaussianMixture gamma = GaussianMixture::standard(1);
  parallel_for(static_cast<long>(rows.size()), o.threads, [&](long i) {
    SweepRow& r = rows[static_cast<std::size_t>(i)];
    Budget b = o.budget;
    b.threads = 1;
    b.stream = static_cast<std::uint64_t>(i);
    r.deficit = deficit(r.member.mixture, b).deficit;
    std::vector<double> w2, w1, floor;
    const std::uint64_t base = derive_seed(o.budget.seed, 0x5EE0 + static_cast<std::uint64_t>(i));
    for (int rep = 0; rep < o.repetitions; ++rep) {
      const std::uint64_t rs = derive_seed(base, static_cast<std::uint64_t>(rep));
      const EmpiricalMeasure s(sample(r.member.mixture, o.points, rs, 0));
      const double v2 = infimum_over_translates(s, 2.0, nullptr, rs).value;
      w2.push_back(v2 * v2);
      w1.push_back(infimum_over_translates(s, 1.0, nullptr, rs).value);
      const EmpiricalMeasure g(sample(gamma, o.points, rs, 1));
      const double f = infimum_over_translates(g, 2.0, nullptr, rs).value;
      floor.push_back(f * f);
    }
    const long n = static_cast<long>(o.points) * o.repetitions;
    r.w2sq_translate = detail::mean_and_se(w2, n);
    r.w1_translate = detail::mean_and_se(w1, n);
    r.w2sq_floor = detail::mean_and_se(floor, n).value;
    r.has_monte_carlo = true;
  });
  return rows;
}

// ---------------------------------------------------------------------------
// Exploratory: fit a discrete p so that p * gamma is close to mu.

inline constexpr Index kMaxProbeSupport = 16;

struct ProbeOptions {
  Index samples = 1024;
  int max_iterations = 60;
  Budget budget;
};

struct Question1Record {
  Index support_size = 0;
  DiscreteMeasure p;      // atoms with positive weight
  double shannon = 0.0;   // S(p)
  double fit_cost = 0.0;  // squared W2 on the fitting samples
  Estimate w2sq;          // squared W2(mu_hat, (p * gamma) hat) on fresh stratified samples
  double w2sq_floor = 0.0;  // squared W2 between two fresh samples of mu
  Estimate deficit;
  double ratio = std::numeric_limits<double>::quiet_NaN();  // max(S, W2^2) / delta
  bool degenerate = false;
  std::string status = "ok";
  int iterations = 0;
  std::string label = "exploratory";
};

namespace detail {

// Optimal matching of rows of x to rows of y (match[i] = row of y).
inline std::vector<Index> optimal_matching(const MatrixXd& x, const MatrixXd& y) {
  const Index n = x.rows();
  if (x.cols() == 1) {
    std::vector<Index> ix(static_cast<std::size_t>(n)), iy(static_cast<std::size_t>(n)), m(static_cast<std::size_t>(n));
    std::iota(ix.begin(), ix.end(), 0);
    std::iota(iy.begin(), iy.end(), 0);
    std::sort(ix.begin(), ix.end(), [&](Index a, Index b) { return x(a, 0) < x(b, 0); });
    std::sort(iy.begin(), iy.end(), [&](Index a, Index b) { return y(a, 0) < y(b, 0); });
    for (Index i = 0; i < n; ++i) m[static_cast<std::size_t>(ix[static_cast<std::size_t>(i)])] = iy[static_cast<std::size_t>(i)];
    return m;
  }
  RowMatrixXd cost(n, n);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < n; ++j) cost(i, j) = (x.row(i) - y.row(j)).squaredNorm();
  return solve_assignment(cost);
}

// Lloyd iterations from a k-means++ start.
inline std::vector<Index> kmeans_labels(const MatrixXd& x, Index k, Rng& rng, MatrixXd& centers) {
  const Index n = x.rows();
  centers.resize(k, x.cols());
  centers.row(0) = x.row(static_cast<Index>(rng.uniform() * static_cast<double>(n)) % n);
  VectorXd d2(n);
  for (Index c = 1; c < k; ++c) {
    for (Index i = 0; i < n; ++i) {
      double best = std::numeric_limits<double>::infinity();
      for (Index j = 0; j < c; ++j) best = std::min(best, (x.row(i) - centers.row(j)).squaredNorm());
      d2[i] = best;
    }
    const double total = d2.sum();
    Index pick = n - 1;
    if (total > 0.0) {
      double u = rng.uniform() * total;
      for (Index i = 0; i < n; ++i) {
        u -= d2[i];
        if (u < 0.0) {
          pick = i;
          break;
        }
      }
    }
    centers.row(c) = x.row(pick);
  }
  std::vector<Index> label(static_cast<std::size_t>(n), 0);
  for (int it = 0; it < 100; ++it) {
    bool changed = false;
    for (Index i = 0; i < n; ++i) {
      Index best = 0;
      for (Index j = 1; j < k; ++j)
        if ((x.row(i) - centers.row(j)).squaredNorm() < (x.row(i) - centers.row(best)).squaredNorm()) best = j;
      if (best != label[static_cast<std::size_t>(i)]) changed = true;
      label[static_cast<std::size_t>(i)] = best;
    }
    MatrixXd sum = MatrixXd::Zero(k, x.cols());
    VectorXd cnt = VectorXd::Zero(k);
    for (Index i = 0; i < n; ++i) {
      sum.row(label[static_cast<std::size_t>(i)]) += x.row(i);
      cnt[label[static_cast<std::size_t>(i)]] += 1.0;
    }
    for (Index j = 0; j < k; ++j)
      if (cnt[j] > 0) centers.row(j) = sum.row(j) / cnt[j];
    if (!changed && it > 0) break;
  }
  return label;
}

}  // namespace detail

inline Question1Record question1_probe(const GaussianMixture& mu, Index support, const ProbeOptions& o = {}) {
  if (support < 1 || support > kMaxProbeSupport)
    fail(ErrorKind::DomainError, "support size must lie in [1, " + std::to_string(kMaxProbeSupport) + "]");
  if (o.samples < 2 * support) fail(ErrorKind::DomainError, "too few samples for the requested support");
  Question1Record rec;
  rec.support_size = support;
  const Index n = o.samples, d = mu.dim();
  const std::uint64_t seed = derive_seed(o.budget.seed, 0x0011);
  const MatrixXd x = stratified_sample(mu, n, seed, 0);
  Rng rng(seed, 1);
  MatrixXd xi(n, d);
  for (Index i = 0; i < n; ++i)
    for (Index k = 0; k < d; ++k) xi(i, k) = rng.normal();

  MatrixXd c;
  std::vector<Index> label = detail::kmeans_labels(x, support, rng, c);
  // the i-th point of p * gamma is c[label[i]] + xi[i]
  double cost = std::numeric_limits<double>::infinity();
  for (int it = 0; it < o.max_iterations; ++it) {
    rec.iterations = it + 1;
    MatrixXd y(n, d);
    for (Index i = 0; i < n; ++i) y.row(i) = c.row(label[static_cast<std::size_t>(i)]) + xi.row(i);
    const auto match = detail::optimal_matching(y, x);  // y_i <-> x_{match[i]}
    // centers: mean residual of their matched points
    MatrixXd sum = MatrixXd::Zero(support, d);
    VectorXd cnt = VectorXd::Zero(support);
    for (Index i = 0; i < n; ++i) {
      sum.row(label[static_cast<std::size_t>(i)]) += x.row(match[static_cast<std::size_t>(i)]) - xi.row(i);
      cnt[label[static_cast<std::size_t>(i)]] += 1.0;
    }
    for (Index j = 0; j < support; ++j)
      if (cnt[j] > 0) c.row(j) = sum.row(j) / cnt[j];
    // labels: nearest center to each residual
    double next = 0.0;
    bool changed = false;
    for (Index i = 0; i < n; ++i) {
      const Eigen::RowVectorXd r = x.row(match[static_cast<std::size_t>(i)]) - xi.row(i);
      Index best = label[static_cast<std::size_t>(i)];
      for (Index j = 0; j < support; ++j)
        if (cnt[j] > 0 && (r - c.row(j)).squaredNorm() < (r - c.row(best)).squaredNorm()) best = j;
      changed = changed || best != label[static_cast<std::size_t>(i)];
      label[static_cast<std::size_t>(i)] = best;
      next += (r - c.row(best)).squaredNorm();
    }
    next /= static_cast<double>(n);
    const bool stalled = next >= cost - 1e-12 * (1.0 + cost);
    cost = std::min(cost, next);
    if (!changed || stalled) break;
  }
  rec.fit_cost = cost;

  VectorXd weight = VectorXd::Zero(support);
  for (Index l : label) weight[l] += 1.0;
  weight /= static_cast<double>(n);
  for (Index j = 0; j < support; ++j)
    if (weight[j] > 0.0) rec.p.emplace_back(weight[j], c.row(j).transpose());
  rec.shannon = shannon_entropy(rec.p);

  // fresh evaluation: p * gamma as a unit-covariance mixture
  std::vector<ComponentSpec> specs;
  for (const auto& [w, at] : rec.p) specs.push_back({w, at, MatrixXd::Identity(d, d)});
  const GaussianMixture fitted = GaussianMixture::normalized(d, specs);
  std::vector<double> vals;
  for (int rep = 0; rep < 3; ++rep) {
    const MatrixXd a = stratified_sample(mu, n, seed, 10 + static_cast<std::uint64_t>(rep));
    const MatrixXd b = stratified_sample(fitted, n, seed, 20 + static_cast<std::uint64_t>(rep));
    const double w = wp_exact(EmpiricalMeasure(a), EmpiricalMeasure(b), 2.0);
    vals.push_back(w * w);
  }
  rec.w2sq = detail::mean_and_se(vals, 3 * static_cast<long>(n));
  {
    const double f = wp_exact(EmpiricalMeasure(stratified_sample(mu, n, seed, 30)),
                            EmpiricalMeasure(stratified_sample(mu, n, seed, 31)), 2.0);
    rec.w2sq_floor = f * f;
  }
  rec.deficit = deficit(mu, o.budget).deficit;
  if (rec.deficit.value <= rec.deficit.abs_error) {
    rec.degenerate = true;
    rec.status = std::string(to_string(ErrorKind::DegenerateDeficit));
  } else {
    rec.ratio = std::max(rec.shannon, rec.w2sq.value) / rec.deficit.value;
  }
  return rec;
}

}  // namespace lsistab
