#pragma once

// Wasserstein distances between equal-size empirical measures.

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

#include "lsistab/error.hpp"
#include "lsistab/estimate.hpp"
#include "lsistab/linalg.hpp"
#include "lsistab/rng.hpp"

namespace lsistab {

inline constexpr Index kAssignmentBudget = 4096;

/// Equally weighted point cloud, one point per row.
class EmpiricalMeasure {
 public:
  EmpiricalMeasure() = default;
  explicit EmpiricalMeasure(MatrixXd points) : points_(std::move(points)) {
    if (points_.rows() < 1 || points_.cols() < 1) fail(ErrorKind::DomainError, "empirical measure needs at least one point");
    if (!points_.allFinite()) fail(ErrorKind::DomainError, "empirical measure has non-finite entries");
  }

  Index count() const { return points_.rows(); }
  Index dim() const { return points_.cols(); }
  const MatrixXd& points() const { return points_; }

  EmpiricalMeasure shifted(const VectorXd& m) const {
    EmpiricalMeasure out;
    out.points_ = points_.rowwise() + m.transpose();
    return out;
  }

 private:
  MatrixXd points_;
};

namespace detail {

inline void require_same_shape(const EmpiricalMeasure& a, const EmpiricalMeasure& b) {
  if (a.count() != b.count())
    fail(ErrorKind::CountMismatch,
         "sample counts differ: " + std::to_string(a.count()) + " vs " + std::to_string(b.count()));
  if (a.dim() != b.dim()) fail(ErrorKind::DimensionMismatch, "samples live in different dimensions");
}

inline double pow_p(double d, double p) {
  if (p == 1.0) return d;
  if (p == 2.0) return d * d;
  return std::pow(d, p);
}

inline double root_p(double s, double p) {
  if (p == 1.0) return s;
  if (p == 2.0) return std::sqrt(s);
  return std::pow(s, 1.0 / p);
}

inline std::vector<double> sorted_column(const MatrixXd& m, Index c) {
  std::vector<double> v(m.col(c).data(), m.col(c).data() + m.rows());
  std::sort(v.begin(), v.end());
  return v;
}

inline double sorted_cost(const std::vector<double>& a, const std::vector<double>& b, double p, double shift = 0.0) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += pow_p(std::abs(a[i] - b[i] - shift), p);
  return s / static_cast<double>(a.size());
}

}  // namespace detail

/// Exact W_p in one dimension through the monotone coupling.
inline double wp_1d_exact(const EmpiricalMeasure& a, const EmpiricalMeasure& b, double p) {
  detail::require_same_shape(a, b);
  if (a.dim() != 1) fail(ErrorKind::DimensionMismatch, "wp_1d_exact needs one-dimensional samples");
  if (!(p >= 1.0)) fail(ErrorKind::DomainError, "p must be at least 1");
  return detail::root_p(detail::sorted_cost(detail::sorted_column(a.points(), 0), detail::sorted_column(b.points(), 0), p), p);
}

using RowMatrixXd = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Minimum-cost perfect matching of a square cost matrix (Hungarian method
/// with potentials, O(n^3)). Returns the column assigned to each row.
inline std::vector<Index> solve_assignment(const RowMatrixXd& cost) {
  const Index n = cost.rows();
  const double inf = std::numeric_limits<double>::infinity();
  // 1-based arrays; row 0 / column 0 are sentinels
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0), minv(n + 1);
  std::vector<Index> p(n + 1, 0), way(n + 1, 0);
  std::vector<char> used(n + 1);
  for (Index i = 1; i <= n; ++i) {
    p[0] = i;
    Index j0 = 0;
    std::fill(minv.begin(), minv.end(), inf);
    std::fill(used.begin(), used.end(), 0);
    do {
      used[j0] = 1;
      const Index i0 = p[j0];
      double delta = inf;
      Index j1 = 0;
      for (Index j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (Index j = 0; j <= n; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const Index j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  std::vector<Index> row_to_col(n);
  for (Index j = 1; j <= n; ++j) row_to_col[p[j] - 1] = j - 1;
  return row_to_col;
}

/// Exact W_p between two empirical measures by optimal assignment.
inline double wp_assignment(const EmpiricalMeasure& a, const EmpiricalMeasure& b, double p) {
  detail::require_same_shape(a, b);
  if (!(p >= 1.0)) fail(ErrorKind::DomainError, "p must be at least 1");
  const Index n = a.count();
  if (n > kAssignmentBudget)
    fail(ErrorKind::BudgetExceeded, "assignment limited to " + std::to_string(kAssignmentBudget) + " points");
  // row-major: the solver scans one row at a time
  RowMatrixXd cost(n, n);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < n; ++j) cost(i, j) = detail::pow_p((a.points().row(i) - b.points().row(j)).norm(), p);
  const auto match = solve_assignment(cost);
  double s = 0.0;
  for (Index i = 0; i < n; ++i) s += cost(i, match[static_cast<std::size_t>(i)]);
  return detail::root_p(s / static_cast<double>(n), p);
}

/// Exact W_p, by sorting in one dimension and by assignment otherwise.
inline double wp_exact(const EmpiricalMeasure& a, const EmpiricalMeasure& b, double p) {
  detail::require_same_shape(a, b);
  return a.dim() == 1 ? wp_1d_exact(a, b, p) : wp_assignment(a, b, p);
}

struct SlicedResult {
  Estimate estimate;  // heuristic: root mean square of directional W2
  std::vector<double> directional;
  MatrixXd directions;  // one unit vector per row
};

/// Sliced W2 surrogate. Not a certified bound on W2; reported separately.
inline SlicedResult w2_sliced(const EmpiricalMeasure& a, const EmpiricalMeasure& b, int n_projections,
                              std::uint64_t seed = kDefaultSeed) {
  detail::require_same_shape(a, b);
  if (n_projections < 2) fail(ErrorKind::DomainError, "need at least two projections");
  const Index d = a.dim();
  Rng rng(derive_seed(seed, 0x511CE), 0);
  SlicedResult out;
  out.directions.resize(n_projections, d);
  std::vector<double> sq(n_projections);
  for (int k = 0; k < n_projections; ++k) {
    VectorXd u(d);
    do {
      for (Index i = 0; i < d; ++i) u[i] = rng.normal();
    } while (u.norm() == 0.0);
    u.normalize();
    out.directions.row(k) = u.transpose();
    const VectorXd pa = a.points() * u, pb = b.points() * u;
    std::vector<double> va(pa.data(), pa.data() + pa.size()), vb(pb.data(), pb.data() + pb.size());
    std::sort(va.begin(), va.end());
    std::sort(vb.begin(), vb.end());
    sq[k] = detail::sorted_cost(va, vb, 2.0);
  }
  const double mean = std::accumulate(sq.begin(), sq.end(), 0.0) / n_projections;
  double var = 0.0;
  for (double s : sq) var += (s - mean) * (s - mean);
  var /= (n_projections - 1);
  const double value = std::sqrt(mean);
  const double se_sq = std::sqrt(var / n_projections);
  out.estimate = {value, value > 0.0 ? se_sq / (2.0 * value) : std::sqrt(se_sq), Method::monte_carlo, n_projections};
  out.directional.resize(n_projections);
  for (int k = 0; k < n_projections; ++k) out.directional[k] = std::sqrt(sq[k]);
  return out;
}

/// W2 between two Gaussians in closed form.
inline double w2_gaussian_closed(const VectorXd& m1, const MatrixXd& c1, const VectorXd& m2, const MatrixXd& c2) {
  const Index n = m1.size();
  if (m2.size() != n || c1.rows() != n || c2.rows() != n || c1.cols() != n || c2.cols() != n)
    fail(ErrorKind::DimensionMismatch, "Gaussian parameters disagree in dimension");
  const double scale = 1.0 + std::max(max_abs(c1), max_abs(c2));
  if (min_eigenvalue(c1) < -1e-12 * scale || min_eigenvalue(c2) < -1e-12 * scale)
    fail(ErrorKind::NonPositiveDefiniteCovariance, "covariance is not positive semidefinite");
  const MatrixXd r2 = sqrtm_psd(c2);
  const MatrixXd cross = sqrtm_psd(symmetrize(r2 * c1 * r2));
  const double tr = (c1 + c2 - 2.0 * cross).trace();
  return std::sqrt((m1 - m2).squaredNorm() + std::max(tr, 0.0));
}

struct TranslateOptimum {
  VectorXd m_star;
  double value = 0.0;  // W_p at the optimum
  long evaluations = 0;
};

inline constexpr double kTranslateTolerance = 1e-3;

/// min over m of W_p(samples, reference + m). The reference is a standard
/// Gaussian sample of the same size, fixed by `seed`; it can also be passed in.
/// One-dimensional inputs use the sorted coupling (the objective is convex in
/// m there); otherwise each evaluation is an exact assignment.
inline TranslateOptimum infimum_over_translates(const EmpiricalMeasure& samples, double p,
                                                const EmpiricalMeasure* reference = nullptr,
                                                std::uint64_t seed = kDefaultSeed) {
  const Index n = samples.count(), d = samples.dim();
  MatrixXd ref_points;
  if (reference) {
    detail::require_same_shape(samples, *reference);
    ref_points = reference->points();
  } else {
    Rng rng(derive_seed(seed, 0x7EF), 0);
    ref_points.resize(n, d);
    for (Index i = 0; i < n; ++i)
      for (Index k = 0; k < d; ++k) ref_points(i, k) = rng.normal();
  }
  if (d > 1 && n > kAssignmentBudget)
    fail(ErrorKind::BudgetExceeded, "assignment limited to " + std::to_string(kAssignmentBudget) + " points");
  TranslateOptimum out;
  const EmpiricalMeasure ref(ref_points);
  std::vector<double> sa, sr;
  if (d == 1) {
    sa = detail::sorted_column(samples.points(), 0);
    sr = detail::sorted_column(ref_points, 0);
  }
  auto objective = [&](const VectorXd& m) {
    ++out.evaluations;
    if (d == 1) return detail::sorted_cost(sa, sr, p, m[0]);
    const double w = wp_assignment(samples, ref.shifted(m), p);
    return detail::pow_p(w, p);
  };

  VectorXd m = (samples.points().colwise().mean() - ref_points.colwise().mean()).transpose();
  const VectorXd sd =
      ((samples.points().rowwise() - samples.points().colwise().mean()).colwise().squaredNorm() / static_cast<double>(n))
          .cwiseSqrt()
          .transpose();
  const double golden = 0.5 * (std::sqrt(5.0) - 1.0);
  double best = objective(m);
  for (int sweep = 0; sweep < (d == 1 ? 1 : 4); ++sweep) {
    const VectorXd before = m;
    for (Index k = 0; k < d; ++k) {
      const double radius = 3.0 * std::max(1.0, sd[k]);
      double lo = m[k] - radius, hi = m[k] + radius;
      auto at = [&](double x) {
        VectorXd mm = m;
        mm[k] = x;
        return objective(mm);
      };
      double x1 = hi - golden * (hi - lo), x2 = lo + golden * (hi - lo);
      double f1 = at(x1), f2 = at(x2);
      while (hi - lo > kTranslateTolerance) {
        if (f1 <= f2) {
          hi = x2;
          x2 = x1;
          f2 = f1;
          x1 = hi - golden * (hi - lo);
          f1 = at(x1);
        } else {
          lo = x1;
          x1 = x2;
          f1 = f2;
          x2 = lo + golden * (hi - lo);
          f2 = at(x2);
        }
      }
      const double x = 0.5 * (lo + hi);
      const double fx = at(x);
      if (fx < best) {
        best = fx;
        m[k] = x;
      }
    }
    if ((m - before).cwiseAbs().maxCoeff() < kTranslateTolerance) break;
  }
  out.m_star = m;
  out.value = detail::root_p(best, p);
  return out;
}

}  // namespace lsistab
