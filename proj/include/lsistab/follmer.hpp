#pragma once

// Föllmer process for Gaussian-mixture targets.
//
// Given X_t = x, the endpoint X_1 is again a Gaussian mixture. For a
// component N(m, C) with C = U diag(c) U^T, write s = 1 - t, d = 1 + t(c - 1),
// y = U^T x and m~ = U^T m. Then, per component,
//   posterior log-weight  log w - (1/2) sum [-(c-1) y^2 - 2 y m~ + t m~^2] / d
//                               - (1/2) sum log d          (up to a constant)
//   drift                 u = U diag(1/d) (m~ + (c - 1) y)
//   posterior covariance  s U diag(c/d) U^T
// and the mixture drift is v = sum r_j u_j. All expressions stay finite on
// the closed interval t in [0, 1]; at t = 1 the drift is grad log f.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

#include "lsistab/bounds.hpp"
#include "lsistab/error.hpp"
#include "lsistab/estimate.hpp"
#include "lsistab/functionals.hpp"
#include "lsistab/gaussmix.hpp"
#include "lsistab/linalg.hpp"
#include "lsistab/parallel.hpp"
#include "lsistab/quadrature.hpp"
#include "lsistab/rng.hpp"

namespace lsistab {

inline constexpr double kPosteriorWeightFloor = 1e-300;
inline constexpr Index kMaxStoredMatrixDim = 8;

struct BridgeState {
  double t = 0.0;
  VectorXd x;
  GaussianMixture posterior;  // law of (X_1 - X_t)/sqrt(1 - t) given F_t
  VectorXd drift;             // v
  MatrixXd curvature;         // Q
  MatrixXd cov;               // A = cov(posterior)
};

/// Per-component data for repeated drift evaluation.
class FollmerBridge {
 public:
  struct Work {
    VectorXd y, dt, logr, r;
    MatrixXd u;  // dim x components
  };

  struct Local {
    VectorXd v;
    MatrixXd q;
    MatrixXd a;
  };

  explicit FollmerBridge(const GaussianMixture& mu) : mu_(mu) {
    for (const auto& c : mu.components()) {
      Piece p;
      p.log_weight = c.log_weight;
      p.u = c.eig_vectors;
      p.c = c.eig_values;
      p.mean_rot = c.eig_vectors.transpose() * c.mean;
      pieces_.push_back(std::move(p));
    }
  }

  const GaussianMixture& target() const { return mu_; }
  Index dim() const { return mu_.dim(); }

  Work make_work() const {
    Work w;
    const Index n = dim(), k = static_cast<Index>(pieces_.size());
    w.y.resize(n);
    w.dt.resize(n);
    w.logr.resize(k);
    w.r.resize(k);
    w.u.resize(n, k);
    return w;
  }

  /// Posterior responsibilities and per-component drifts into `w`.
  void responsibilities(double t, const Eigen::Ref<const VectorXd>& x, Work& w) const {
    const Index n = dim();
    if (x.size() != n) fail(ErrorKind::DimensionMismatch, "point has dimension " + std::to_string(x.size()));
    if (!(t >= 0.0 && t <= 1.0)) fail(ErrorKind::DomainError, "time must lie in [0, 1]");
    for (std::size_t j = 0; j < pieces_.size(); ++j) {
      const Piece& p = pieces_[j];
      w.y.noalias() = p.u.transpose() * x;
      double quad = 0.0, logd = 0.0;
      for (Index i = 0; i < n; ++i) {
        const double cm1 = p.c[i] - 1.0;
        const double d = 1.0 + t * cm1;
        const double yi = w.y[i], mi = p.mean_rot[i];
        quad += (-cm1 * yi * yi - 2.0 * yi * mi + t * mi * mi) / d;
        logd += std::log(d);
        w.dt[i] = (mi + cm1 * yi) / d;
      }
      w.logr[static_cast<Index>(j)] = p.log_weight - 0.5 * quad - 0.5 * logd;
      w.u.col(static_cast<Index>(j)).noalias() = p.u * w.dt;
    }
    const double lse = log_sum_exp(w.logr);
    for (Index j = 0; j < w.logr.size(); ++j) {
      const double r = std::exp(w.logr[j] - lse);
      w.r[j] = r < kPosteriorWeightFloor ? 0.0 : r;
    }
    w.r /= w.r.sum();
  }

  /// Drift, and optionally Q and A, at (t, x).
  void local(double t, const Eigen::Ref<const VectorXd>& x, Work& w, Local& out, bool matrices = true) const {
    responsibilities(t, x, w);
    const Index n = dim();
    out.v.noalias() = w.u * w.r;
    if (!matrices) return;
    const double s = 1.0 - t;
    out.q.setZero(n, n);
    out.a.setZero(n, n);
    VectorXd diag_q(n), diag_a(n), dev(n);
    for (std::size_t j = 0; j < pieces_.size(); ++j) {
      const double r = w.r[static_cast<Index>(j)];
      if (r == 0.0) continue;
      const Piece& p = pieces_[j];
      for (Index i = 0; i < n; ++i) {
        const double d = 1.0 + t * (p.c[i] - 1.0);
        diag_q[i] = (p.c[i] - 1.0) / d;
        diag_a[i] = p.c[i] / d;
      }
      dev.noalias() = w.u.col(static_cast<Index>(j)) - out.v;
      const MatrixXd outer = dev * dev.transpose();
      out.q.noalias() += r * (p.u * diag_q.asDiagonal() * p.u.transpose() + outer);
      out.a.noalias() += r * (p.u * diag_a.asDiagonal() * p.u.transpose() + s * outer);
    }
    out.q = symmetrize(out.q);
    out.a = symmetrize(out.a);
  }

  /// One exact draw of X_1 given X_t = x (t < 1).
  VectorXd terminal_draw(double t, const Eigen::Ref<const VectorXd>& x, Work& w, Rng& rng) const {
    responsibilities(t, x, w);
    const double s = 1.0 - t;
    const double pick = rng.uniform();
    double acc = 0.0;
    std::size_t j = 0;
    for (; j + 1 < pieces_.size(); ++j) {
      acc += w.r[static_cast<Index>(j)];
      if (pick < acc) break;
    }
    const Piece& p = pieces_[j];
    const Index n = dim();
    VectorXd z(n);
    for (Index i = 0; i < n; ++i) {
      const double d = 1.0 + t * (p.c[i] - 1.0);
      z[i] = std::sqrt(p.c[i] / d) * rng.normal();
    }
    return x + s * w.u.col(static_cast<Index>(j)) + std::sqrt(s) * (p.u * z);
  }

  /// Full state including the rescaled posterior as a mixture.
  BridgeState state(double t, const VectorXd& x) const {
    if (!(t >= 0.0 && t < 1.0)) fail(ErrorKind::DomainError, "bridge state needs t in [0, 1)");
    Work w = make_work();
    Local l;
    local(t, x, w, l, true);
    BridgeState st;
    st.t = t;
    st.x = x;
    st.drift = l.v;
    st.curvature = l.q;
    st.cov = l.a;
    const double rs = std::sqrt(1.0 - t);
    std::vector<ComponentSpec> specs;
    for (std::size_t j = 0; j < pieces_.size(); ++j) {
      const double r = w.r[static_cast<Index>(j)];
      if (r == 0.0) continue;
      const Piece& p = pieces_[j];
      VectorXd diag_a(dim());
      for (Index i = 0; i < dim(); ++i) diag_a[i] = p.c[i] / (1.0 + t * (p.c[i] - 1.0));
      specs.push_back({r, rs * w.u.col(static_cast<Index>(j)), symmetrize(p.u * diag_a.asDiagonal() * p.u.transpose())});
    }
    st.posterior = GaussianMixture::normalized(dim(), specs);
    return st;
  }

 private:
  struct Piece {
    double log_weight = 0.0;
    MatrixXd u;
    VectorXd c;
    VectorXd mean_rot;
  };
  GaussianMixture mu_;
  std::vector<Piece> pieces_;
};

inline BridgeState bridge_state(const GaussianMixture& mu, double t, const VectorXd& x) {
  return FollmerBridge(mu).state(t, x);
}

// ---------------------------------------------------------------------------
// Independent check of the drift: differentiate log P_{1-t} f numerically.

/// grad log P_{1-t} f(x), with P_{1-t} f(x) = E f(x + sqrt(1-t) Z) computed by
/// adaptive quadrature (dimensions 1 and 2) and a fourth-order central
/// difference. Intended for tests.
inline VectorXd drift_quadrature_oracle(const GaussianMixture& mu, double t, const VectorXd& x, double tol = 1e-13) {
  const Index n = mu.dim();
  if (n > 2) fail(ErrorKind::DomainError, "quadrature oracle supports dimensions 1 and 2");
  if (!(t >= 0.0 && t <= 1.0 - 1e-6)) fail(ErrorKind::DomainError, "oracle needs t <= 1 - 1e-6");
  const double s = 1.0 - t, rs = std::sqrt(s);
  double cmax = 1.0, reach = 0.0;
  for (const auto& c : mu.components()) {
    cmax = std::max(cmax, c.eig_values.maxCoeff());
    reach = std::max(reach, (c.mean - x).cwiseAbs().maxCoeff() / rs);
  }
  const double half = 10.0 * std::sqrt(cmax) + reach;

  auto log_p = [&](const VectorXd& at) {
    EvalWorkspace ws;
    LocalDensityData d;
    VectorXd y(n), z(n);
    auto exponent = [&](const VectorXd& zz) {
      y = at + rs * zz;
      evaluate_into(mu, y, d, ws, false);
      return d.log_ratio - 0.5 * zz.squaredNorm() - 0.5 * static_cast<double>(n) * kLog2Pi;
    };
    // log shift from a coarse scan so the integrand peaks near 1
    double shift = -std::numeric_limits<double>::infinity();
    const int grid = n == 1 ? 4001 : 201;
    for (int a = 0; a < grid; ++a)
      for (int b = 0; b < (n == 1 ? 1 : grid); ++b) {
        z[0] = -half + 2.0 * half * a / (grid - 1);
        if (n == 2) z[1] = -half + 2.0 * half * b / (grid - 1);
        shift = std::max(shift, exponent(z));
      }
    QuadratureOptions opt;
    opt.abs_tol = tol;
    opt.rel_tol = tol;
    opt.initial_panels = 64;
    opt.max_intervals = 20000;
    QuadratureResult r;
    if (n == 1) {
      r = integrate_adaptive(
          [&](double z0, Eigen::Ref<VectorXd> out) {
            z[0] = z0;
            out[0] = std::exp(exponent(z) - shift);
          },
          -half, half, 1, opt);
    } else {
      opt.initial_panels = 16;
      r = integrate_adaptive_2d(
          [&](double z0, double z1, Eigen::Ref<VectorXd> out) {
            z[0] = z0;
            z[1] = z1;
            out[0] = std::exp(exponent(z) - shift);
          },
          -half, half, -half, half, 1, opt);
    }
    return shift + std::log(r.value[0]);
  };

  const double h = 1e-3;
  VectorXd g(n);
  for (Index i = 0; i < n; ++i) {
    const VectorXd e = VectorXd::Unit(n, i) * h;
    g[i] = (-log_p(x + 2 * e) + 8 * log_p(x + e) - 8 * log_p(x - e) + log_p(x - 2 * e)) / (12 * h);
  }
  return g;
}

// ---------------------------------------------------------------------------
// Ensemble simulation.

struct EnsembleOptions {
  long paths = 10000;
  int steps = 512;
  double epsilon = 1e-3;
  std::uint64_t seed = kDefaultSeed;
  int threads = 0;
};

/// Paths of the Föllmer process on a uniform grid over [0, 1 - eps], finished
/// by one exact draw of X_1. Arrays are laid out time-major: entry (k, p).
struct PathEnsemble {
  Index dim = 0;
  long paths = 0;
  std::vector<double> grid;  // t_0 = 0 < ... < t_K = 1 - eps
  double epsilon = 0.0;
  std::uint64_t seed = 0;
  bool has_matrices = true;

  std::vector<double> x, v, q, a, db, trace_q;
  MatrixXd x1, v1, db_final;  // paths x dim

  int steps() const { return static_cast<int>(grid.size()) - 1; }
  std::size_t slot(int k, long p) const { return static_cast<std::size_t>(k) * static_cast<std::size_t>(paths) + p; }

  Eigen::Map<const VectorXd> X(int k, long p) const { return {x.data() + slot(k, p) * dim, dim}; }
  Eigen::Map<const VectorXd> V(int k, long p) const { return {v.data() + slot(k, p) * dim, dim}; }
  Eigen::Map<const MatrixXd> Q(int k, long p) const { return {q.data() + slot(k, p) * dim * dim, dim, dim}; }
  Eigen::Map<const MatrixXd> A(int k, long p) const { return {a.data() + slot(k, p) * dim * dim, dim, dim}; }
  /// Brownian increment over step k; k = K is the implied increment of the
  /// exact terminal step.
  VectorXd dB(int k, long p) const {
    if (k == steps()) return db_final.row(p).transpose();
    return Eigen::Map<const VectorXd>(db.data() + slot(k, p) * dim, dim);
  }
  /// Time length of step k, including the final [1 - eps, 1] step.
  double dt(int k) const { return k == steps() ? 1.0 - grid.back() : grid[k + 1] - grid[k]; }
};

inline PathEnsemble simulate_ensemble(const GaussianMixture& mu, const EnsembleOptions& o) {
  if (o.steps < 8) fail(ErrorKind::DomainError, "need at least 8 steps");
  if (!(o.epsilon >= 1e-6 && o.epsilon <= 1e-2)) fail(ErrorKind::DomainError, "epsilon must lie in [1e-6, 1e-2]");
  if (o.paths < 1) fail(ErrorKind::DomainError, "need at least one path");
  const Index n = mu.dim();
  const int K = o.steps;
  PathEnsemble e;
  e.dim = n;
  e.paths = o.paths;
  e.epsilon = o.epsilon;
  e.seed = o.seed;
  e.has_matrices = n <= kMaxStoredMatrixDim;
  e.grid.resize(K + 1);
  for (int k = 0; k <= K; ++k) e.grid[k] = (1.0 - o.epsilon) * k / K;
  e.grid[K] = 1.0 - o.epsilon;
  const std::size_t slots = static_cast<std::size_t>(K + 1) * o.paths;
  e.x.resize(slots * n);
  e.v.resize(slots * n);
  e.trace_q.resize(slots);
  if (e.has_matrices) {
    e.q.resize(slots * n * n);
    e.a.resize(slots * n * n);
  }
  e.db.resize(static_cast<std::size_t>(K) * o.paths * n);
  e.x1.resize(o.paths, n);
  e.v1.resize(o.paths, n);
  e.db_final.resize(o.paths, n);

  const FollmerBridge bridge(mu);
  const std::uint64_t base = derive_seed(o.seed, 0xF011);
  parallel_for(o.paths, o.threads, [&](long p) {
    Rng rng(base, static_cast<std::uint64_t>(p));
    auto w = bridge.make_work();
    FollmerBridge::Local l;
    VectorXd xk = VectorXd::Zero(n), step(n);
    for (int k = 0; k <= K; ++k) {
      const std::size_t s = e.slot(k, p);
      bridge.local(e.grid[k], xk, w, l, true);
      Eigen::Map<VectorXd>(e.x.data() + s * n, n) = xk;
      Eigen::Map<VectorXd>(e.v.data() + s * n, n) = l.v;
      e.trace_q[s] = l.q.trace();
      if (e.has_matrices) {
        Eigen::Map<MatrixXd>(e.q.data() + s * n * n, n, n) = l.q;
        Eigen::Map<MatrixXd>(e.a.data() + s * n * n, n, n) = l.a;
      }
      if (k == K) break;
      const double h = e.grid[k + 1] - e.grid[k];
      const double sh = std::sqrt(h);
      for (Index i = 0; i < n; ++i) step[i] = sh * rng.normal();
      Eigen::Map<VectorXd>(e.db.data() + s * n, n) = step;
      xk += l.v * h + step;
    }
    const double tk = e.grid[K];
    const VectorXd vk = l.v;
    const VectorXd x1 = bridge.terminal_draw(tk, xk, w, rng);
    e.x1.row(p) = x1.transpose();
    e.db_final.row(p) = (x1 - xk - (1.0 - tk) * vk).transpose();
    bridge.local(1.0, x1, w, l, false);
    e.v1.row(p) = l.v.transpose();
  });
  return e;
}

// ---------------------------------------------------------------------------
// Statistics helpers.

namespace detail {

struct MeanSe {
  double mean = 0.0;
  double se = 0.0;
};

template <class F>
MeanSe path_mean(long paths, F&& f) {
  double m = 0.0, m2 = 0.0;
  for (long p = 0; p < paths; ++p) {
    const double x = f(p);
    const double d = x - m;
    m += d / static_cast<double>(p + 1);
    m2 += d * (x - m);
  }
  const double var = paths > 1 ? m2 / static_cast<double>(paths - 1) : 0.0;
  return {m, std::sqrt(var / static_cast<double>(paths))};
}

// Absolute slack for comparisons whose statistical error can be exactly 0.
inline double roundoff(double scale) { return 1e-10 * (1.0 + std::abs(scale)); }

}  // namespace detail

struct EnergyIdentities {
  Estimate entropy_path;  // (1/2) E int |v_t|^2 dt
  Estimate deficit_path;  // (1/2) E int |v_1 - v_t|^2 dt
};

/// Trapezoid time integrals per path over the grid plus the endpoint t = 1,
/// where v_t = v_1.
inline EnergyIdentities energy_identities(const PathEnsemble& e) {
  const int K = e.steps();
  auto integral = [&](long p, bool deficit) {
    const VectorXd v1 = e.v1.row(p).transpose();
    auto g = [&](int k) {
      if (k > K) return deficit ? 0.0 : v1.squaredNorm();
      return deficit ? (v1 - e.V(k, p)).squaredNorm() : e.V(k, p).squaredNorm();
    };
    double s = 0.0;
    for (int k = 0; k <= K; ++k) s += 0.5 * e.dt(k) * (g(k) + g(k + 1));
    return 0.5 * s;
  };
  const auto h = detail::path_mean(e.paths, [&](long p) { return integral(p, false); });
  const auto d = detail::path_mean(e.paths, [&](long p) { return integral(p, true); });
  return {{h.mean, h.se, Method::monte_carlo, e.paths}, {d.mean, d.se, Method::monte_carlo, e.paths}};
}

struct TimeDiagnostics {
  double t = 0.0;
  // (a) E[v_t] against mean(mu): largest coordinate gap and its standard error
  double mean_v_gap = 0.0, mean_v_se = 0.0;
  // (b) E|v_t|^2, and the mean increment to the next grid time
  double v2 = 0.0, v2_se = 0.0, v2_increment = 0.0, v2_increment_se = 0.0;
  // (c) E[Q_t] + cov(v_t) - (cov(mu) - Id), largest entry
  double q_residual = 0.0, q_residual_se = 0.0;
  // (d) RMS over paths of v_t - v_0 - sum Q dB
  double ito_residual = 0.0;
  // (e) E[Q_t + int_0^t Q^2 ds] - Q_0, largest entry
  double qq_drift = 0.0, qq_drift_se = 0.0;
  // (f) forward difference of E|v_t|^2 against Tr E[Q_t^2] and Tr m(t)^2
  double dv2dt = 0.0, dv2dt_se = 0.0, trace_eq2 = 0.0, trace_m2 = 0.0;
  // m(t) <= (m(1)^{-1} + (1-t) Id)^{-1}: smallest eigenvalue of rhs - m(t)
  double comparison_slack = 0.0, comparison_error = 0.0;
};

struct MartingaleReport {
  std::vector<TimeDiagnostics> rows;
  int monotonicity_violations = 0;       // increments below -3 se
  double worst_mean_v_ratio = 0.0;       // max gap / se over grid times
  double worst_q_ratio = 0.0;            // max residual / se over grid times
  bool mean_v_ok = true;                 // every gap within 3 se
  bool q_ok = true;                      // every residual within 4 se
  bool comparison_applicable = false;    // m(1) = I(mu|L) - Id positive definite
  bool comparison_ok = true;
};

/// fisher_leb: I(mu|L), used for m(1) in the comparison inequality.
inline MartingaleReport martingale_diagnostics(const PathEnsemble& e, const GaussianMixture& mu,
                                               const MatrixEstimate& fisher_leb) {
  if (!e.has_matrices) fail(ErrorKind::DomainError, "diagnostics need stored Q and A matrices");
  const Index n = e.dim;
  const int K = e.steps();
  const long P = e.paths;
  const Moments mom = moments(mu);
  const MatrixXd target = mom.cov - MatrixXd::Identity(n, n);
  MartingaleReport rep;
  rep.rows.resize(K + 1);

  const MatrixXd m1 = fisher_leb.value - MatrixXd::Identity(n, n);
  rep.comparison_applicable = min_eigenvalue(m1) > kPsdTolerance;
  const MatrixXd m1_inv = rep.comparison_applicable ? MatrixXd(m1.inverse()) : MatrixXd();

  // running sums per path for (d) and (e)
  MatrixXd ito = MatrixXd::Zero(P, n);            // sum Q dB
  std::vector<MatrixXd> qq(P, MatrixXd::Zero(n, n));  // sum Q^2 dt
  const VectorXd v0 = e.V(0, 0);
  const MatrixXd q0 = e.Q(0, 0);

  for (int k = 0; k <= K; ++k) {
    TimeDiagnostics& row = rep.rows[k];
    row.t = e.grid[k];
    // (a)
    for (Index i = 0; i < n; ++i) {
      const auto s = detail::path_mean(P, [&](long p) { return e.V(k, p)[i]; });
      const double gap = std::abs(s.mean - mom.mean[i]);
      if (gap > row.mean_v_gap) {
        row.mean_v_gap = gap;
        row.mean_v_se = s.se;
      }
      const bool ok = gap <= 3.0 * s.se + detail::roundoff(mom.mean[i]);
      rep.mean_v_ok = rep.mean_v_ok && ok;
      if (s.se > 0) rep.worst_mean_v_ratio = std::max(rep.worst_mean_v_ratio, gap / s.se);
    }
    // (b)
    const auto v2 = detail::path_mean(P, [&](long p) { return e.V(k, p).squaredNorm(); });
    row.v2 = v2.mean;
    row.v2_se = v2.se;
    if (k < K) {
      const auto inc = detail::path_mean(P, [&](long p) { return e.V(k + 1, p).squaredNorm() - e.V(k, p).squaredNorm(); });
      row.v2_increment = inc.mean;
      row.v2_increment_se = inc.se;
      if (inc.mean < -3.0 * inc.se - detail::roundoff(v2.mean)) ++rep.monotonicity_violations;
      row.dv2dt = inc.mean / e.dt(k);
      row.dv2dt_se = inc.se / e.dt(k);
    }
    // (c) per path Z = Q + (v - E v)(v - E v)^T has mean cov(mu) - Id
    MatrixXd mean_q = MatrixXd::Zero(n, n), mean_q2 = MatrixXd::Zero(n, n);
    for (Index r = 0; r < n; ++r)
      for (Index c = r; c < n; ++c) {
        const auto s = detail::path_mean(P, [&](long p) {
          const VectorXd d = e.V(k, p) - mom.mean;
          return e.Q(k, p)(r, c) + d[r] * d[c];
        });
        const double res = std::abs(s.mean - target(r, c));
        if (res >= row.q_residual) {
          row.q_residual = res;
          row.q_residual_se = s.se;
        }
        rep.q_ok = rep.q_ok && res <= 4.0 * s.se + detail::roundoff(target(r, c));
        if (s.se > 0) rep.worst_q_ratio = std::max(rep.worst_q_ratio, res / s.se);
      }
    for (long p = 0; p < P; ++p) {
      const MatrixXd qk = e.Q(k, p);
      mean_q += qk;
      mean_q2 += qk * qk;
    }
    mean_q /= static_cast<double>(P);
    mean_q2 /= static_cast<double>(P);
    row.trace_eq2 = mean_q2.trace();
    row.trace_m2 = (mean_q * mean_q).trace();
    // (d)
    double ss = 0.0;
    for (long p = 0; p < P; ++p) ss += (e.V(k, p) - v0 - ito.row(p).transpose()).squaredNorm();
    row.ito_residual = std::sqrt(ss / static_cast<double>(P));
    // (e)
    for (Index r = 0; r < n; ++r)
      for (Index c = r; c < n; ++c) {
        const auto s = detail::path_mean(P, [&](long p) { return e.Q(k, p)(r, c) + qq[p](r, c) - q0(r, c); });
        if (std::abs(s.mean) >= row.qq_drift) {
          row.qq_drift = std::abs(s.mean);
          row.qq_drift_se = s.se;
        }
      }
    // comparison with m(1)
    if (rep.comparison_applicable) {
      const MatrixXd bound = (m1_inv + (1.0 - row.t) * MatrixXd::Identity(n, n)).inverse();
      row.comparison_slack = min_eigenvalue(bound - (-mean_q));
      double se = 0.0;
      for (Index r = 0; r < n; ++r)
        for (Index c = 0; c < n; ++c) {
          const auto s = detail::path_mean(P, [&](long p) { return e.Q(k, p)(r, c); });
          se = std::max(se, s.se);
        }
      // entrywise errors of m(t) and of the bound (through m(1)) mapped to eigenvalues
      const double bound_err = static_cast<double>(n) * fisher_leb.abs_error * max_abs(bound) * max_abs(bound);
      row.comparison_error = static_cast<double>(n) * se + bound_err;
      rep.comparison_ok =
          rep.comparison_ok && row.comparison_slack >= -3.0 * row.comparison_error - detail::roundoff(max_abs(bound));
    }
    // advance the running sums
    const double h = e.dt(k);
    for (long p = 0; p < P; ++p) {
      const MatrixXd qk = e.Q(k, p);
      ito.row(p) += (qk * e.dB(k, p)).transpose();
      qq[p] += qk * qk * h;
    }
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Stochastic localization checks.

struct LocalizationOptions {
  int time_samples = 16;  // grid times where delta(mu_t) is evaluated directly
  long path_samples = 64;
  Budget budget;
};

struct LocalizationReport {
  // X_1 - mean(mu) - sum A dB per path
  double dat_median_residual = 0.0;
  double dat_rms_residual = 0.0;
  // int E[delta(mu_t)] dt, directly from posterior mixtures, and through the
  // path identity (1/2) int s E|v_1 - v_s|^2 ds
  Estimate integrated_direct;
  Estimate integrated_path;
  Estimate deficit;
  BoundReport bound;  // delta(mu) >= int E[delta(mu_t)] dt
  std::vector<double> sample_times;
  std::vector<double> mean_posterior_deficit;  // E[delta(mu_t)] at sample_times
};

inline double dat_median_residual(const PathEnsemble& e, const GaussianMixture& mu, double* rms = nullptr) {
  if (!e.has_matrices) fail(ErrorKind::DomainError, "residual needs stored A matrices");
  const int K = e.steps();
  const VectorXd mean = moments(mu).mean;
  std::vector<double> res(static_cast<std::size_t>(e.paths));
  double ss = 0.0;
  for (long p = 0; p < e.paths; ++p) {
    VectorXd acc = mean;
    for (int k = 0; k <= K; ++k) acc += e.A(k, p) * e.dB(k, p);
    res[static_cast<std::size_t>(p)] = (e.x1.row(p).transpose() - acc).norm();
    ss += res[static_cast<std::size_t>(p)] * res[static_cast<std::size_t>(p)];
  }
  if (rms) *rms = std::sqrt(ss / static_cast<double>(e.paths));
  std::nth_element(res.begin(), res.begin() + static_cast<long>(res.size() / 2), res.end());
  return res[res.size() / 2];
}

inline LocalizationReport localization_checks(const PathEnsemble& e, const GaussianMixture& mu,
                                              const LocalizationOptions& o = {}) {
  LocalizationReport rep;
  rep.dat_median_residual = dat_median_residual(e, mu, &rep.dat_rms_residual);
  const int K = e.steps();

  // path identity over the full grid
  const auto path = detail::path_mean(e.paths, [&](long p) {
    const VectorXd v1 = e.v1.row(p).transpose();
    auto g = [&](int k) { return k > K ? 0.0 : e.grid[k] * (v1 - e.V(k, p)).squaredNorm(); };
    double s = 0.0;
    for (int k = 0; k <= K; ++k) s += 0.5 * e.dt(k) * (g(k) + g(k + 1));
    return 0.5 * s;
  });
  rep.integrated_path = {path.mean, path.se, Method::monte_carlo, e.paths};

  // direct evaluation on a subsample of (time, path)
  std::vector<int> idx;
  const int ts = std::max(2, std::min(o.time_samples, K));
  for (int i = 0; i <= ts; ++i) idx.push_back(static_cast<int>(std::lround(static_cast<double>(K) * i / ts)));
  const long P = std::min(o.path_samples, e.paths);
  const FollmerBridge bridge(mu);
  Budget b = o.budget;
  if (mu.dim() > 2) b.mc_samples = std::min<long>(b.mc_samples, 20000);
  std::vector<double> values(idx.size() * static_cast<std::size_t>(P));
  std::vector<double> errors(values.size());
  parallel_for(static_cast<long>(values.size()), b.threads, [&](long slot) {
    const std::size_t ti = static_cast<std::size_t>(slot) / static_cast<std::size_t>(P);
    const long p = slot % P;
    const int k = idx[ti];
    Budget bb = b;
    bb.threads = 1;
    bb.stream = static_cast<std::uint64_t>(slot);
    const BridgeState st = bridge.state(e.grid[k], e.X(k, p));
    const Estimate d = deficit(st.posterior, bb).deficit;
    values[static_cast<std::size_t>(slot)] = d.value;
    errors[static_cast<std::size_t>(slot)] = d.abs_error;
  });
  std::vector<double> times;
  for (int k : idx) times.push_back(e.grid[k]);
  times.push_back(1.0);  // E[delta(mu_t)] vanishes at t = 1
  double max_err = 0.0;
  for (double x : errors) max_err = std::max(max_err, x);
  const auto direct = detail::path_mean(P, [&](long p) {
    double s = 0.0;
    for (std::size_t i = 0; i + 1 < times.size(); ++i) {
      const double a = values[i * static_cast<std::size_t>(P) + p];
      const double c = i + 1 < idx.size() ? values[(i + 1) * static_cast<std::size_t>(P) + p] : 0.0;
      s += 0.5 * (times[i + 1] - times[i]) * (a + c);
    }
    return s;
  });
  rep.integrated_direct = {direct.mean, direct.se + max_err, Method::monte_carlo, P * static_cast<long>(idx.size())};
  rep.sample_times.assign(times.begin(), times.end() - 1);
  for (std::size_t i = 0; i < idx.size(); ++i) {
    double s = 0.0;
    for (long p = 0; p < P; ++p) s += values[i * static_cast<std::size_t>(P) + p];
    rep.mean_posterior_deficit.push_back(s / static_cast<double>(P));
  }
  rep.deficit = deficit(mu, o.budget).deficit;
  rep.bound = make_report("localized_deficit", rep.deficit, rep.integrated_direct, Direction::GreaterEqual,
                          "rhs: posterior deficits on a subsample of paths and grid times, trapezoid in time");
  rep.bound.extras["path_identity"] = rep.integrated_path.value;
  rep.bound.extras["path_identity_se"] = rep.integrated_path.abs_error;
  rep.bound.extras["dat_median_residual"] = rep.dat_median_residual;
  return rep;
}

}  // namespace lsistab
