#include <gtest/gtest.h>

#include <cmath>

#include "lsistab/functionals.hpp"

using namespace lsistab;

namespace {

MatrixXd m1(double v) { return MatrixXd::Constant(1, 1, v); }
VectorXd v1(double v) { return VectorXd::Constant(1, v); }

GaussianMixture bimodal() { return mixture_new(1, {{0.5, v1(-1), m1(0.5)}, {0.5, v1(1), m1(0.5)}}); }

Budget numeric() {
  Budget b;
  b.allow_closed_form = false;
  return b;
}

// Plain composite Simpson rule on a wide grid, written independently of the
// library's integrator, for 1D oracles.
template <class F>
double simpson(F f, double a, double b, int n = 200000) {
  const double h = (b - a) / n;
  double s = f(a) + f(b);
  for (int i = 1; i < n; ++i) s += f(a + i * h) * (i % 2 ? 4.0 : 2.0);
  return s * h / 3.0;
}

double mixture_pdf(const GaussianMixture& mu, double x) { return std::exp(evaluate(mu, v1(x)).log_density); }

}  // namespace

TEST(ClosedForms, Examples) {
  auto a = gaussian_closed_forms(v1(0), m1(1));
  EXPECT_EQ(a.H_gamma, 0.0);
  EXPECT_EQ(a.I_gamma, 0.0);
  EXPECT_EQ(a.deficit, 0.0);
  auto b = gaussian_closed_forms(v1(2), m1(1));
  EXPECT_DOUBLE_EQ(b.H_gamma, 2.0);
  EXPECT_DOUBLE_EQ(b.I_gamma, 4.0);
  EXPECT_DOUBLE_EQ(b.deficit, 0.0);
  auto c = gaussian_closed_forms(v1(0), m1(0.5));
  EXPECT_NEAR(c.deficit, 0.153426, 1e-6);
  EXPECT_NEAR(c.fisher_leb(0, 0), 2.0, 1e-15);
  EXPECT_THROW(gaussian_closed_forms(v1(0), m1(-1)), Error);
}

TEST(ClosedForms, DeficitAgainstSimpsonOracle) {
  const double s = 0.5;
  auto g = GaussianMixture::gaussian(v1(0), m1(s));
  // delta = E[ |x - x/s|^2 / 2 - log ratio ]
  const double d = simpson(
      [&](double x) {
        auto e = evaluate(g, v1(x));
        const double u = e.score[0] + x;
        return std::exp(e.log_density) * (0.5 * u * u - e.log_ratio);
      },
      -12, 12);
  EXPECT_NEAR(d, gaussian_closed_forms(v1(0), m1(s)).deficit, 1e-10);
}

TEST(Entropy, Examples) {
  auto z = entropy_rel_gaussian(GaussianMixture::standard(1));
  EXPECT_EQ(z.value, 0.0);
  EXPECT_EQ(z.abs_error, 0.0);
  auto t = entropy_rel_gaussian(GaussianMixture::gaussian(v1(3), m1(1)), numeric());
  EXPECT_EQ(t.method, Method::quadrature);
  EXPECT_NEAR(t.value, 4.5, 1e-8);
  EXPECT_LE(t.abs_error, 1e-8);
}

TEST(Entropy, QuadratureMatchesMonteCarlo) {
  auto mu = bimodal();
  auto q = entropy_rel_gaussian(mu);
  Budget mc;
  mc.force_monte_carlo = true;
  auto m = entropy_rel_gaussian(mu, mc);
  EXPECT_EQ(m.method, Method::monte_carlo);
  EXPECT_EQ(m.n, 1000000);
  EXPECT_LT(std::abs(q.value - m.value), 3.0 * m.abs_error + q.abs_error);
  const double oracle = simpson([&](double x) { return mixture_pdf(mu, x) * evaluate(mu, v1(x)).log_ratio; }, -12, 12);
  EXPECT_NEAR(q.value, oracle, 1e-8);
}

TEST(FisherMatrix, Examples) {
  EXPECT_EQ(fisher_matrix(GaussianMixture::standard(2), Reference::lebesgue).value, MatrixXd::Identity(2, 2));
  auto f = fisher_matrix(GaussianMixture::gaussian(v1(0), m1(0.4)), Reference::lebesgue, numeric());
  EXPECT_NEAR(f.value(0, 0), 2.5, 1e-8);
  auto s = summarize(bimodal());
  EXPECT_LT(max_abs(s.fisher_leb.value - s.neg_hessian.value), 1e-4);
  EXPECT_LT(max_abs(s.fisher_leb.value - s.neg_hessian.value), s.fisher_leb.abs_error + s.neg_hessian.abs_error + 1e-12);
}

TEST(FisherMatrix, TraceMatchesScalar) {
  auto mu = bimodal();
  auto g = fisher_matrix(mu, Reference::gaussian);
  auto i = fisher_information(mu, Reference::gaussian);
  EXPECT_LT(std::abs(g.value.trace() - i.value), g.abs_error + i.abs_error + 1e-12);
  const double oracle = simpson(
      [&](double x) {
        auto e = evaluate(mu, v1(x));
        const double u = e.score[0] + x;
        return std::exp(e.log_density) * u * u;
      },
      -12, 12);
  EXPECT_NEAR(i.value, oracle, 1e-7);
}

TEST(FisherMatrix, ScaleCovariance) {
  Rng rng(3, 0);
  MatrixXd c1(2, 2), c2(2, 2), sig(2, 2);
  c1 << 1.0, 0.3, 0.3, 0.5;
  c2 << 0.7, -0.2, -0.2, 1.2;
  sig << 1.5, 0.4, 0.4, 0.8;
  VectorXd a(2), b(2);
  a << -1, 0.5;
  b << 1.5, -0.5;
  auto mu = mixture_new(2, {{0.4, a, c1}, {0.6, b, c2}});
  auto f = fisher_matrix(mu, Reference::lebesgue);
  auto fs = fisher_matrix(pushforward(mu, sig), Reference::lebesgue);
  MatrixXd si = sig.inverse();
  MatrixXd expected = si * f.value * si;
  EXPECT_LT(max_abs(fs.value - expected), fs.abs_error + max_abs(si) * max_abs(si) * 4 * f.abs_error + 1e-10);
}

TEST(Deficit, Examples) {
  VectorXd m(2);
  m << 3, -7;
  auto d0 = deficit(GaussianMixture::gaussian(m, MatrixXd::Identity(2, 2)), numeric());
  EXPECT_NEAR(d0.deficit.value, 0.0, 1e-8);
  auto d1 = deficit(GaussianMixture::gaussian(v1(0), m1(0.5)), numeric());
  EXPECT_NEAR(d1.deficit.value, 0.15342640972002736, 1e-8);
  auto d2 = deficit(mixture_new(1, {{0.75, v1(0), m1(1)}, {0.25, v1(16), m1(1)}}));
  const double bound = -0.75 * std::log(0.75) - 0.25 * std::log(0.25);
  EXPECT_GE(d2.deficit.value, 0.0);
  EXPECT_LE(d2.deficit.value, bound);
  // constituents agree with the deficit
  EXPECT_NEAR(d2.deficit.value, 0.5 * d2.fisher.value - d2.entropy.value, 1e-7);
}

TEST(Deficit, FarSeparatedComponentsStayAccurate) {
  // components 1000 apart: the deficit tends to the binary entropy of the weights
  auto mu = mixture_new(1, {{0.9, v1(0), m1(1)}, {0.1, v1(1000), m1(1)}});
  auto d = deficit(mu);
  EXPECT_NEAR(d.deficit.value, -0.9 * std::log(0.9) - 0.1 * std::log(0.1), 1e-7);
}

TEST(Deficit, RandomGaussiansMatchClosedForms) {
  Rng rng(17, 0);
  for (int trial = 0; trial < 20; ++trial) {
    const Index n = 1 + trial % 3;
    MatrixXd a(n, n);
    for (Index r = 0; r < n; ++r)
      for (Index c = 0; c < n; ++c) a(r, c) = rng.normal();
    MatrixXd cov = a * a.transpose() / static_cast<double>(n) + 0.4 * MatrixXd::Identity(n, n);
    VectorXd m(n);
    for (Index r = 0; r < n; ++r) m[r] = rng.normal();
    auto g = GaussianMixture::gaussian(m, cov);
    Budget b = numeric();
    b.mc_samples = 200000;
    b.stream = trial;
    auto s = summarize(g, b);
    auto cf = gaussian_closed_forms(m, cov);
    const double k = s.deficit.method == Method::monte_carlo ? 3.0 : 1.0;
    EXPECT_LE(std::abs(s.deficit.value - cf.deficit), k * s.deficit.abs_error + 1e-12) << trial;
    EXPECT_LE(std::abs(s.H_gamma.value - cf.H_gamma), k * s.H_gamma.abs_error + 1e-12) << trial;
    EXPECT_LE(std::abs(s.I_gamma.value - cf.I_gamma), k * s.I_gamma.abs_error + 1e-12) << trial;
  }
}

TEST(IntegrationByParts, Examples) {
  auto r0 = integration_by_parts_check(GaussianMixture::standard(2));
  EXPECT_TRUE(r0.holds);
  EXPECT_EQ(r0.lhs.value, 0.0);
  auto r1 = integration_by_parts_check(GaussianMixture::gaussian(v1(0), m1(0.3)), numeric());
  EXPECT_LE(r1.lhs.value, 1e-8);
  Budget mc;
  mc.force_monte_carlo = true;
  auto r2 = integration_by_parts_check(bimodal(), mc);
  EXPECT_TRUE(r2.holds);
  EXPECT_EQ(r2.lhs.method, Method::monte_carlo);
}
