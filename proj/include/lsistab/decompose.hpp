#pragma once

// Constructive decompositions of a mixture along its Föllmer paths: the
// Gaussian-mixture approximation nu_t * gamma, and the split X_1 = Y + W with
// Y close to a standard Gaussian.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "lsistab/bounds.hpp"
#include "lsistab/error.hpp"
#include "lsistab/estimate.hpp"
#include "lsistab/follmer.hpp"
#include "lsistab/functionals.hpp"
#include "lsistab/linalg.hpp"
#include "lsistab/rng.hpp"
#include "lsistab/transport.hpp"

namespace lsistab {

enum class ClipMode { positive_part, max_with_identity };

inline MatrixXd spectral_clip(const MatrixXd& m, ClipMode mode) {
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(symmetrize(m));
  const double floor = mode == ClipMode::positive_part ? 0.0 : 1.0;
  const VectorXd lam = es.eigenvalues().cwiseMax(floor);
  return symmetrize(es.eigenvectors() * lam.asDiagonal() * es.eigenvectors().transpose());
}

inline constexpr double kRankTolerance = 1e-9;
inline constexpr double kMaxOvershoot = 1e-3;
inline constexpr int kEventBisections = 20;
inline constexpr Index kDecompositionPoints = 1024;

namespace detail {

// Squared W2 by exact assignment between `a` and fresh draws of `b_draw(rng)`,
// repeated; returns mean and standard error over repetitions.
template <class Draw>
Estimate repeated_w2_squared(const MatrixXd& a, int reps, std::uint64_t seed, Draw&& b_draw) {
  std::vector<double> vals;
  for (int r = 0; r < reps; ++r) {
    Rng rng(seed, static_cast<std::uint64_t>(r));
    const MatrixXd b = b_draw(rng);
    const double w = wp_exact(EmpiricalMeasure(a), EmpiricalMeasure(b), 2.0);
    vals.push_back(w * w);
  }
  double m = 0.0;
  for (double v : vals) m += v;
  m /= static_cast<double>(reps);
  double var = 0.0;
  for (double v : vals) var += (v - m) * (v - m);
  const double se = reps > 1 ? std::sqrt(var / static_cast<double>(reps - 1) / static_cast<double>(reps)) : 0.0;
  return {m, se, Method::monte_carlo, static_cast<long>(a.rows()) * reps};
}

inline MatrixXd standard_normal_rows(Index count, Index dim, Rng& rng) {
  MatrixXd z(count, dim);
  for (Index i = 0; i < count; ++i)
    for (Index k = 0; k < dim; ++k) z(i, k) = rng.normal();
  return z;
}

}  // namespace detail

// ---------------------------------------------------------------------------

struct DecompositionOptions {
  Budget budget;
  Index points = kDecompositionPoints;
  int repetitions = 3;
  std::uint64_t seed = kDefaultSeed;
};

struct DimDecomposition {
  double t_star = 0.0;
  double t_used = 0.0;  // nearest grid time, or 1 when nu = mu
  int grid_index = 0;
  bool nu_is_mu = false;
  EmpiricalMeasure nu_samples;
  Estimate deficit;
  Estimate w2_estimate;  // W2(mu, nu * gamma)
  BoundReport bound_report;
  BoundReport intermediate;  // W2^2(mu, nu_t * gamma_{0,1-t}) <= (2/t) delta
  double nu_spread = 0.0;    // RMS distance of nu samples to their mean
};

inline DimDecomposition theorem_dim(const GaussianMixture& mu, const PathEnsemble& e,
                                    const DecompositionOptions& o = {}) {
  if (mu.dim() != e.dim) fail(ErrorKind::DimensionMismatch, "ensemble and measure dimensions differ");
  const Index n = mu.dim();
  const double dn = static_cast<double>(n);
  DimDecomposition r;
  r.deficit = deficit(mu, o.budget).deficit;
  const double d = std::max(0.0, r.deficit.value);
  const Index count = std::min<Index>(o.points, e.paths);
  MatrixXd nu(count, n);
  if (d > dn) {
    r.nu_is_mu = true;
    r.t_star = 1.0;
    r.t_used = 1.0;
    r.grid_index = e.steps();
    for (Index p = 0; p < count; ++p) nu.row(p) = e.x1.row(p);
  } else {
    r.t_star = std::cbrt(d / dn);
    int best = 0;
    for (int k = 0; k <= e.steps(); ++k)
      if (std::abs(e.grid[k] - r.t_star) < std::abs(e.grid[best] - r.t_star)) best = k;
    r.grid_index = best;
    r.t_used = e.grid[best];
    // E[X_1 | F_t] = X_t + (1 - t) v_t
    for (Index p = 0; p < count; ++p) nu.row(p) = (e.X(best, p) + (1.0 - r.t_used) * e.V(best, p)).transpose();
  }
  r.nu_samples = EmpiricalMeasure(nu);
  const Eigen::RowVectorXd centre = nu.colwise().mean();
  r.nu_spread = std::sqrt((nu.rowwise() - centre).rowwise().squaredNorm().mean());

  const std::uint64_t sm = derive_seed(o.seed, 0xD1A);
  auto with_noise = [&](double scale) {
    return [&, scale](Rng& rng) {
      const MatrixXd z = detail::standard_normal_rows(count, n, rng);
      return MatrixXd(nu + std::sqrt(scale) * z);
    };
  };
  const MatrixXd mu_samples = sample(mu, count, sm, 0);
  const Estimate w2sq = detail::repeated_w2_squared(mu_samples, o.repetitions, derive_seed(sm, 1), with_noise(1.0));
  const double w = std::sqrt(w2sq.value);
  const double w_err = w > 0 ? w2sq.abs_error / (2.0 * w) : std::sqrt(w2sq.abs_error);
  r.w2_estimate = {w, w_err, Method::monte_carlo, w2sq.n};

  // Two independent samples of mu sit about `floor` apart, so the sampled W2
  // can exceed the true one by that much; the error band reaches down to
  // W - 3 se - 2 floor, clipped at 0.
  const MatrixXd mu_again = sample(mu, count, sm, 1);
  const double floor = wp_exact(EmpiricalMeasure(mu_samples), EmpiricalMeasure(mu_again), 2.0);
  // delta >= W^3 / (15 sqrt n)
  auto cube = [&](double x) { return x * x * x / (15.0 * std::sqrt(dn)); };
  const double rhs = cube(w);
  const double rhs_err = std::max(rhs - cube(std::max(0.0, w - 3.0 * w_err - 2.0 * floor)), cube(w + 3.0 * w_err) - rhs);
  r.bound_report = make_report("dimension", r.deficit, Estimate{rhs, rhs_err, Method::monte_carlo, w2sq.n},
                               Direction::GreaterEqual, "W2 by exact assignment on fresh samples");
  r.bound_report.extras["t_star"] = r.t_star;
  r.bound_report.extras["t_used"] = r.t_used;
  r.bound_report.extras["w2"] = w;
  r.bound_report.extras["w2_error"] = w_err;
  r.bound_report.extras["w2_noise_floor"] = floor;
  r.bound_report.extras["nu_is_mu"] = r.nu_is_mu ? 1.0 : 0.0;

  if (!r.nu_is_mu && r.t_used > 0.0) {
    const Estimate inner =
        detail::repeated_w2_squared(mu_samples, o.repetitions, derive_seed(sm, 2), with_noise(1.0 - r.t_used));
    const Estimate cap{2.0 * d / r.t_used, 2.0 * r.deficit.abs_error / r.t_used, r.deficit.method, r.deficit.n};
    r.intermediate = make_report("dimension_intermediate", Estimate{inner.value, 3.0 * inner.abs_error, inner.method, inner.n},
                                 cap, Direction::LessEqual, "W2^2(mu, nu_t * gamma_{0,1-t}) at the grid time used");
  } else {
    r.intermediate = make_report("dimension_intermediate", Estimate::exact(0.0), Estimate::exact(0.0), Direction::LessEqual,
                                 "not applicable at t = 0 or when nu = mu");
    r.intermediate.preconditions_met = false;
  }
  return r;
}

// ---------------------------------------------------------------------------

struct UncorDecomposition {
  EmpiricalMeasure y_samples, w_samples, z_samples;
  Estimate inner_product;         // E<Y, W>
  double qv_residual = 0.0;       // max over paths of |C_1 - Id|_max, i.e. [Z]_1 - Id
  double realized_qv_residual = 0.0;  // |mean over paths of sum dZ dZ^T - Id|_max
  double projection_defect = 0.0;     // max |L^2 - L|, |LC - CL| over steps
  double max_pre_location_overshoot = 0.0;
  double reconstruction_median = 0.0;  // |Y + W - X_1|
  Estimate coupling_gap;               // E|Y_1 - Z_1|^2
  Estimate w2_nu_gamma;                // W2(law of Y, gamma)
  double w2_noise_floor = 0.0;         // squared W2 between two fresh Gaussian samples
  Estimate deficit;
  BoundReport bound;                   // (1/2) W2^2(nu, gamma) <= delta
  std::vector<std::vector<double>> stopping_times;
  // Gaussianity of Z_1: largest |skewness| / se, largest |excess kurtosis| / se
  double z_skew_ratio = 0.0, z_kurtosis_ratio = 0.0;
  Estimate z_radius;  // E|Z_1|^2
  bool z_gaussian_ok = true;
};

inline UncorDecomposition theorem_uncor(const GaussianMixture& mu, const PathEnsemble& e,
                                        const DecompositionOptions& o = {}) {
  if (mu.dim() != e.dim) fail(ErrorKind::DimensionMismatch, "ensemble and measure dimensions differ");
  if (!e.has_matrices) fail(ErrorKind::DomainError, "decomposition needs stored cov(mu_t)");
  const Index n = e.dim;
  const long P = e.paths;
  const int K = e.steps();
  const VectorXd mean = moments(mu).mean;
  const MatrixXd I = MatrixXd::Identity(n, n);

  MatrixXd Y(P, n), W(P, n), Z(P, n);
  std::vector<MatrixXd> C(static_cast<std::size_t>(P)), QV(static_cast<std::size_t>(P));
  std::vector<double> overshoot(static_cast<std::size_t>(P), 0.0), located(static_cast<std::size_t>(P), 0.0),
      defect(static_cast<std::size_t>(P), 0.0);
  UncorDecomposition r;
  r.stopping_times.assign(static_cast<std::size_t>(P), {});
  const std::uint64_t split_seed = derive_seed(o.seed, 0xB41D);

  parallel_for(P, o.budget.threads, [&](long p) {
    Rng rng(split_seed, static_cast<std::uint64_t>(p));
    MatrixXd c = MatrixXd::Zero(n, n), qv = MatrixXd::Zero(n, n);
    VectorXd y = VectorXd::Zero(n), z = VectorXd::Zero(n), w = mean;
    bool done = false;
    auto& taus = r.stopping_times[static_cast<std::size_t>(p)];
    for (int k = 0; k <= K; ++k) {
      const MatrixXd a = e.A(k, p);
      const MatrixXd ma = spectral_clip(a, ClipMode::max_with_identity);
      const MatrixXd ma2 = ma * ma;
      double t = k == K ? e.grid[K] : e.grid[k];
      double remaining = e.dt(k);
      VectorXd db = e.dB(k, p);
      while (remaining > 0.0) {
        if (done) {
          w += a * db;
          break;
        }
        Eigen::SelfAdjointEigenSolver<MatrixXd> es(c);
        std::vector<Index> active;
        for (Index i = 0; i < n; ++i)
          if (es.eigenvalues()[i] < 1.0 - kRankTolerance) active.push_back(i);
        if (active.empty()) {
          done = true;
          continue;
        }
        MatrixXd v(n, static_cast<Index>(active.size()));
        VectorXd lam(v.cols());
        for (Index j = 0; j < v.cols(); ++j) {
          v.col(j) = es.eigenvectors().col(active[static_cast<std::size_t>(j)]);
          lam[j] = es.eigenvalues()[active[static_cast<std::size_t>(j)]];
        }
        const MatrixXd L = v * v.transpose();
        defect[static_cast<std::size_t>(p)] =
            std::max({defect[static_cast<std::size_t>(p)], max_abs(L * L - L), max_abs(L * c - c * L)});
        const MatrixXd g = v.transpose() * ma2 * v;  // generator of C in the active subspace
        auto top = [&](double h) { return max_eigenvalue(MatrixXd(lam.asDiagonal()) + h * g); };
        double h = remaining;
        const double full = top(remaining);
        bool hit = false;
        if (full > 1.0 + 1e-12) {
          overshoot[static_cast<std::size_t>(p)] = std::max(overshoot[static_cast<std::size_t>(p)], full - 1.0);
          double lo = 0.0, hi = remaining;
          for (int it = 0; it < kEventBisections; ++it) {
            const double mid = 0.5 * (lo + hi);
            (top(mid) > 1.0 ? hi : lo) = mid;
          }
          h = hi;
          hit = true;
          located[static_cast<std::size_t>(p)] = std::max(located[static_cast<std::size_t>(p)], top(h) - 1.0);
        } else if (full >= 1.0 - kRankTolerance) {
          hit = true;
        }
        // Brownian bridge split of the step increment at h
        VectorXd dbh = db;
        if (h < remaining) {
          const double frac = h / remaining;
          const double sd = std::sqrt(h * (remaining - h) / remaining);
          for (Index i = 0; i < n; ++i) dbh[i] = frac * db[i] + sd * rng.normal();
        }
        const MatrixXd la = L * a;
        const VectorXd dz = L * ma * dbh;
        y += la * dbh;
        z += dz;
        qv += dz * dz.transpose();
        w += (a - la) * dbh;
        c += h * (v * g * v.transpose());
        c = symmetrize(c);
        db -= dbh;
        remaining = h < remaining ? remaining - h : 0.0;
        t += h;
        if (hit) {
          // snap eigenvalues that reached 1 and record their hitting time
          Eigen::SelfAdjointEigenSolver<MatrixXd> snap(c);
          VectorXd ev = snap.eigenvalues();
          int before = 0, after = 0;
          for (Index i = 0; i < n; ++i) before += es.eigenvalues()[i] >= 1.0 - kRankTolerance;
          for (Index i = 0; i < n; ++i)
            if (ev[i] >= 1.0 - kRankTolerance) {
              ev[i] = 1.0;
              ++after;
            }
          c = symmetrize(snap.eigenvectors() * ev.asDiagonal() * snap.eigenvectors().transpose());
          for (int i = before; i < after; ++i) taus.push_back(t);
        }
      }
    }
    C[static_cast<std::size_t>(p)] = c;
    QV[static_cast<std::size_t>(p)] = qv;
    Y.row(p) = y.transpose();
    Z.row(p) = z.transpose();
    W.row(p) = w.transpose();
  });

  for (long p = 0; p < P; ++p) {
    r.max_pre_location_overshoot = std::max(r.max_pre_location_overshoot, overshoot[static_cast<std::size_t>(p)]);
    if (located[static_cast<std::size_t>(p)] > kMaxOvershoot)
      fail(ErrorKind::GridTooCoarse, "eigenvalue of C overshoots 1 by " + std::to_string(located[static_cast<std::size_t>(p)]));
    r.projection_defect = std::max(r.projection_defect, defect[static_cast<std::size_t>(p)]);
    r.qv_residual = std::max(r.qv_residual, max_abs(C[static_cast<std::size_t>(p)] - I));
  }
  MatrixXd qv_mean = MatrixXd::Zero(n, n);
  for (const auto& q : QV) qv_mean += q;
  r.realized_qv_residual = max_abs(qv_mean / static_cast<double>(P) - I);

  r.y_samples = EmpiricalMeasure(Y);
  r.w_samples = EmpiricalMeasure(W);
  r.z_samples = EmpiricalMeasure(Z);

  const auto ip = detail::path_mean(P, [&](long p) { return Y.row(p).dot(W.row(p)); });
  r.inner_product = {ip.mean, ip.se, Method::monte_carlo, P};
  const auto gap = detail::path_mean(P, [&](long p) { return (Y.row(p) - Z.row(p)).squaredNorm(); });
  r.coupling_gap = {gap.mean, gap.se, Method::monte_carlo, P};

  std::vector<double> res(static_cast<std::size_t>(P));
  for (long p = 0; p < P; ++p) res[static_cast<std::size_t>(p)] = (Y.row(p) + W.row(p) - e.x1.row(p)).norm();
  std::nth_element(res.begin(), res.begin() + P / 2, res.end());
  r.reconstruction_median = res[static_cast<std::size_t>(P / 2)];

  // Z_1 against the standard Gaussian
  const double np = static_cast<double>(P);
  const double skew_se = std::sqrt(6.0 / np), kurt_se = std::sqrt(24.0 / np);
  for (Index i = 0; i < n; ++i) {
    const VectorXd col = Z.col(i).array() - Z.col(i).mean();
    const double var = col.squaredNorm() / np;
    const double skew = col.array().cube().mean() / std::pow(var, 1.5);
    const double kurt = col.array().pow(4).mean() / (var * var) - 3.0;
    r.z_skew_ratio = std::max(r.z_skew_ratio, std::abs(skew) / skew_se);
    r.z_kurtosis_ratio = std::max(r.z_kurtosis_ratio, std::abs(kurt) / kurt_se);
  }
  const auto rad = detail::path_mean(P, [&](long p) { return Z.row(p).squaredNorm(); });
  r.z_radius = {rad.mean, rad.se, Method::monte_carlo, P};
  r.z_gaussian_ok = r.z_skew_ratio <= 4.0 && r.z_kurtosis_ratio <= 4.0 &&
                    std::abs(rad.mean - static_cast<double>(n)) <= 4.0 * rad.se;

  // (1/2) W2^2(nu, gamma) <= delta, exact assignment on the first paths
  const Index count = std::min<Index>(o.points, P);
  const MatrixXd ys = Y.topRows(count);
  const std::uint64_t sw = derive_seed(o.seed, 0x0C0);
  auto gauss = [&](Rng& rng) { return detail::standard_normal_rows(count, n, rng); };
  const Estimate w2sq = detail::repeated_w2_squared(ys, o.repetitions, derive_seed(sw, 1), gauss);
  {
    Rng ra(derive_seed(sw, 2), 0);
    const MatrixXd g1 = gauss(ra), g2 = gauss(ra);
    const double f = wp_exact(EmpiricalMeasure(g1), EmpiricalMeasure(g2), 2.0);
    r.w2_noise_floor = f * f;
  }
  const double w = std::sqrt(w2sq.value);
  r.w2_nu_gamma = {w, w > 0 ? w2sq.abs_error / (2.0 * w) : 0.0, Method::monte_carlo, w2sq.n};
  r.deficit = deficit(mu, o.budget).deficit;
  // finite samples bias W2^2 upward by about the Gaussian-vs-Gaussian floor
  const Estimate lhs{0.5 * w2sq.value, 0.5 * (3.0 * w2sq.abs_error + r.w2_noise_floor), Method::monte_carlo, w2sq.n};
  r.bound = make_report("uncorrelated_decomposition", lhs, r.deficit, Direction::LessEqual,
                        "lhs: half squared W2 between Y_1 and gamma by exact assignment");
  r.bound.extras["coupling_gap"] = r.coupling_gap.value;
  r.bound.extras["inner_product"] = r.inner_product.value;
  r.bound.extras["inner_product_se"] = r.inner_product.abs_error;
  r.bound.extras["qv_residual"] = r.qv_residual;
  r.bound.extras["w2_noise_floor"] = r.w2_noise_floor;
  return r;
}

}  // namespace lsistab
