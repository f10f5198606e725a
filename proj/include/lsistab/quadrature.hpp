#pragma once

// Adaptive 15-point Gauss-Kronrod quadrature for vector-valued integrands.
// The error of each panel is the raw |K15 - G7| difference, which bounds the
// Gauss rule's error from above for smooth integrands.

#include <array>
#include <cmath>
#include <vector>

#include "lsistab/error.hpp"
#include "lsistab/linalg.hpp"

namespace lsistab {

struct QuadratureOptions {
  double abs_tol = 1e-8;
  double rel_tol = 1e-12;
  long max_intervals = 4000;
  int initial_panels = 1;
};

struct QuadratureResult {
  VectorXd value;
  VectorXd error;  // per-entry bound
  long evaluations = 0;
  long intervals = 0;
};

namespace detail {

inline constexpr std::array<double, 8> kKronrodNodes = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851, 0.864864423359769072789712788640926,
    0.741531185599394439863864773280788, 0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000};

inline constexpr std::array<double, 8> kKronrodWeights = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204, 0.104790010322250183839876322541518,
    0.140653259715525918745189590510238, 0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};

// Gauss weights for Kronrod nodes 1, 3, 5, 7.
inline constexpr std::array<double, 4> kGaussWeights = {0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
                                                        0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

struct Panel {
  double a = 0.0, b = 0.0;
  VectorXd value, error;
};

template <class F>
Panel gauss_kronrod_panel(F& f, double a, double b, Index m, VectorXd& buf) {
  const double center = 0.5 * (a + b);
  const double half = 0.5 * (b - a);
  VectorXd kronrod = VectorXd::Zero(m);
  VectorXd gauss = VectorXd::Zero(m);
  for (int i = 0; i < 8; ++i) {
    const double wk = kKronrodWeights[i];
    const double wg = (i % 2 == 1) ? kGaussWeights[i / 2] : 0.0;
    if (i == 7) {
      f(center, buf);
      kronrod += wk * buf;
      gauss += wg * buf;
      continue;
    }
    const double dx = half * kKronrodNodes[i];
    f(center - dx, buf);
    kronrod += wk * buf;
    if (wg != 0.0) gauss += wg * buf;
    f(center + dx, buf);
    kronrod += wk * buf;
    if (wg != 0.0) gauss += wg * buf;
  }
  Panel p;
  p.a = a;
  p.b = b;
  p.value = half * kronrod;
  p.error = (half * (kronrod - gauss)).cwiseAbs();
  return p;
}

}  // namespace detail

/// Integrates f over [a, b]; f(x, out) writes m values into `out`.
template <class F>
QuadratureResult integrate_adaptive(F&& f, double a, double b, Index m, const QuadratureOptions& opt) {
  QuadratureResult result;
  VectorXd buf(m);
  std::vector<detail::Panel> panels;
  const int n0 = std::max(1, opt.initial_panels);
  for (int i = 0; i < n0; ++i) {
    const double lo = a + (b - a) * i / n0;
    const double hi = (i + 1 == n0) ? b : a + (b - a) * (i + 1) / n0;
    panels.push_back(detail::gauss_kronrod_panel(f, lo, hi, m, buf));
  }
  result.evaluations = 15L * n0;
  VectorXd total = VectorXd::Zero(m), err = VectorXd::Zero(m);
  auto resum = [&] {
    total.setZero();
    err.setZero();
    for (const auto& p : panels) {
      total += p.value;
      err += p.error;
    }
  };
  resum();
  for (;;) {
    VectorXd tol = (opt.rel_tol * total.cwiseAbs()).cwiseMax(opt.abs_tol);
    if ((err.array() <= tol.array()).all()) break;
    if (static_cast<long>(panels.size()) >= opt.max_intervals)
      fail(ErrorKind::BudgetExceeded, "quadrature did not reach tolerance within " + std::to_string(opt.max_intervals) +
                                          " panels (error " + std::to_string(err.maxCoeff()) + ")");
    std::size_t worst = 0;
    double worst_key = -1.0;
    for (std::size_t i = 0; i < panels.size(); ++i) {
      const double key = (panels[i].error.array() / tol.array()).maxCoeff();
      if (key > worst_key) {
        worst_key = key;
        worst = i;
      }
    }
    const detail::Panel old = panels[worst];
    const double mid = 0.5 * (old.a + old.b);
    panels[worst] = detail::gauss_kronrod_panel(f, old.a, mid, m, buf);
    panels.push_back(detail::gauss_kronrod_panel(f, mid, old.b, m, buf));
    result.evaluations += 30;
    total += panels[worst].value + panels.back().value - old.value;
    err += panels[worst].error + panels.back().error - old.error;
  }
  resum();
  result.value = total;
  result.error = err;
  result.intervals = static_cast<long>(panels.size());
  return result;
}

/// Iterated integral over the box [ax,bx] x [ay,by]; f(x, y, out).
/// The inner integrals run at a tighter tolerance and their worst error,
/// scaled by the outer length, is added to the reported bound.
template <class F>
QuadratureResult integrate_adaptive_2d(F&& f, double ax, double bx, double ay, double by, Index m,
                                       const QuadratureOptions& opt) {
  QuadratureOptions inner = opt;
  inner.abs_tol = opt.abs_tol / (4.0 * (bx - ax));
  QuadratureOptions outer = opt;
  outer.abs_tol = 0.5 * opt.abs_tol;
  VectorXd inner_worst = VectorXd::Zero(m);
  long evaluations = 0;
  auto slice = [&](double x, Eigen::Ref<VectorXd> out) {
    auto row = [&](double y, Eigen::Ref<VectorXd> o) { f(x, y, o); };
    QuadratureResult r = integrate_adaptive(row, ay, by, m, inner);
    evaluations += r.evaluations;
    inner_worst = inner_worst.cwiseMax(r.error);
    out = r.value;
  };
  QuadratureResult result = integrate_adaptive(slice, ax, bx, m, outer);
  result.error += (bx - ax) * inner_worst;
  result.evaluations = evaluations;
  return result;
}

}  // namespace lsistab
