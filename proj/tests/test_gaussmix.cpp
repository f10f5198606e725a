#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "lsistab/gaussmix.hpp"

using namespace lsistab;

namespace {

MatrixXd m1(double v) { return MatrixXd::Constant(1, 1, v); }
VectorXd v1(double v) { return VectorXd::Constant(1, v); }

GaussianMixture mu4() { return mixture_new(1, {{0.75, v1(0), m1(1)}, {0.25, v1(16), m1(1)}}); }

GaussianMixture random_mixture(Rng& rng, Index n, int k) {
  std::vector<ComponentSpec> specs;
  for (int j = 0; j < k; ++j) {
    MatrixXd a(n, n);
    for (Index r = 0; r < n; ++r)
      for (Index c = 0; c < n; ++c) a(r, c) = rng.normal();
    VectorXd m(n);
    for (Index r = 0; r < n; ++r) m[r] = 4.0 * rng.uniform() - 2.0;
    specs.push_back({0.2 + rng.uniform(), m, a * a.transpose() / static_cast<double>(n) + 0.3 * MatrixXd::Identity(n, n)});
  }
  return GaussianMixture::normalized(n, specs);
}

double normal_pdf(double x) { return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi); }

}  // namespace

TEST(MixtureNew, StandardGaussianAccepted) {
  auto g = mixture_new(1, {{1.0, v1(0), m1(1)}});
  EXPECT_EQ(g.size(), 1u);
  EXPECT_EQ(g.dim(), 1);
}

TEST(MixtureNew, VarianceBlowupMemberAccepted) {
  auto m = mu4();
  EXPECT_EQ(m.size(), 2u);
  EXPECT_DOUBLE_EQ(m.component(1).mean[0], 16.0);
}

TEST(MixtureNew, Rejections) {
  try {
    mixture_new(1, {{0.5, v1(0), m1(0)}});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::NonPositiveDefiniteCovariance);
  }
  try {
    mixture_new(1, {{0.5, v1(0), m1(1)}, {0.4, v1(1), m1(1)}});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::BadWeights);
  }
  try {
    mixture_new(2, {{1.0, v1(0), m1(1)}});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::DimensionMismatch);
  }
  MatrixXd asym(2, 2);
  asym << 1, 0.1, 0.0, 1;
  EXPECT_THROW(mixture_new(2, {{1.0, VectorXd::Zero(2), asym}}), Error);
}

TEST(MixtureNew, RenormalizesSmallWeightDrift) {
  auto m = mixture_new(1, {{0.5 + 4e-10, v1(0), m1(1)}, {0.5, v1(1), m1(1)}});
  EXPECT_NEAR(m.component(0).weight + m.component(1).weight, 1.0, 1e-15);
}

TEST(Evaluate, StandardAtOrigin) {
  auto d = evaluate(GaussianMixture::standard(1), v1(0));
  EXPECT_NEAR(d.log_density, -0.5 * std::log(2.0 * std::numbers::pi), 1e-15);
  EXPECT_NEAR(d.score[0], 0.0, 1e-15);
  EXPECT_NEAR(d.hessian(0, 0), -1.0, 1e-15);
  EXPECT_NEAR(d.log_ratio, 0.0, 1e-15);
}

TEST(Evaluate, ScaledGaussianScore) {
  const double s = 0.3;
  auto d = evaluate(GaussianMixture::gaussian(v1(0), m1(s)), v1(1));
  EXPECT_NEAR(d.score[0], -1.0 / s, 1e-12);
  EXPECT_NEAR(d.hessian(0, 0), -1.0 / s, 1e-12);
}

TEST(Evaluate, SymmetricMixtureAgainstDirectSum) {
  auto mu = mixture_new(1, {{0.5, v1(-1), m1(1)}, {0.5, v1(1), m1(1)}});
  auto d = evaluate(mu, v1(0));
  EXPECT_NEAR(d.score[0], 0.0, 1e-15);
  EXPECT_NEAR(d.log_density, std::log(0.5 * (normal_pdf(-1) + normal_pdf(1))), 1e-14);
  const double h = 1e-5;
  const double fd = (evaluate(mu, v1(h)).log_density - evaluate(mu, v1(-h)).log_density) / (2 * h);
  EXPECT_NEAR(fd, 0.0, 1e-9);
}

TEST(Evaluate, FarFromComponentsStaysFinite) {
  auto mu = mixture_new(1, {{0.5, v1(0), m1(1e-2)}, {0.5, v1(1e4), m1(1)}});
  for (double x : {-100.0, 50.0, 5000.0, 2e4}) {
    auto d = evaluate(mu, v1(x));
    EXPECT_TRUE(std::isfinite(d.log_density));
    EXPECT_TRUE(std::isfinite(d.score[0]));
    EXPECT_TRUE(std::isfinite(d.hessian(0, 0)));
  }
}

TEST(Evaluate, RatioIdentityAndFiniteDifferences) {
  Rng rng(11, 0);
  for (Index n : {1, 2, 3}) {
    auto mu = random_mixture(rng, n, 3);
    for (int p = 0; p < 100; ++p) {
      VectorXd x(n);
      for (Index i = 0; i < n; ++i) x[i] = 3.0 * rng.normal();
      auto d = evaluate(mu, x);
      const double gauss_log = -0.5 * x.squaredNorm() - 0.5 * n * std::log(2.0 * std::numbers::pi);
      EXPECT_NEAR(std::exp(d.log_ratio + gauss_log) / std::exp(d.log_density), 1.0, 1e-10);
      const double h = 1e-4;
      for (Index i = 0; i < n; ++i) {
        VectorXd e = VectorXd::Unit(n, i) * h;
        auto dp = evaluate(mu, x + e), dm = evaluate(mu, x - e);
        const double fd = (dp.log_density - dm.log_density) / (2 * h);
        EXPECT_NEAR(fd, d.score[i], 1e-5 * std::max(1.0, std::abs(d.score[i])));
        VectorXd fdh = (dp.score - dm.score) / (2 * h);
        for (Index j = 0; j < n; ++j)
          EXPECT_NEAR(fdh[j], d.hessian(j, i), 1e-5 * std::max(1.0, std::abs(d.hessian(j, i))));
      }
    }
  }
}

TEST(Sample, StandardMean) {
  auto pts = sample(GaussianMixture::standard(1), 100000, 1, 0);
  EXPECT_LT(std::abs(pts.col(0).mean()), 3.0 / std::sqrt(1e5));
}

TEST(Sample, VarianceBlowupMean) {
  auto pts = sample(mu4(), 100000, 2, 0);
  const double stderr_ = 7.0 / std::sqrt(1e5);  // sd = sqrt(49)
  EXPECT_LT(std::abs(pts.col(0).mean() - 4.0), 3.0 * stderr_);
}

TEST(Sample, ShapeAndReproducibility) {
  auto pts = sample(GaussianMixture::standard(3), 1, 3, 0);
  EXPECT_EQ(pts.rows(), 1);
  EXPECT_EQ(pts.cols(), 3);
  auto mu = mu4();
  EXPECT_EQ(sample(mu, 50, 9, 4), sample(mu, 50, 9, 4));
  EXPECT_NE(sample(mu, 50, 9, 4), sample(mu, 50, 9, 5));
}

TEST(Moments, Examples) {
  auto g = moments(GaussianMixture::standard(2));
  EXPECT_EQ(g.mean, VectorXd::Zero(2));
  EXPECT_EQ(g.cov, MatrixXd::Identity(2, 2));
  EXPECT_NEAR(moments(mu4()).cov(0, 0), 49.0, 1e-12);
  // isotropic family member at k = 100
  const double t = 1e-3, a = -0.01, b = 9.99;
  const double sigma = 1.0 - t * (1 - t) * (b - a) * (b - a);
  EXPECT_NEAR(sigma, 0.9001, 1e-12);
  auto iso = mixture_new(1, {{1 - t, v1(a), m1(sigma)}, {t, v1(b), m1(sigma)}});
  auto m = moments(iso);
  EXPECT_NEAR(m.mean[0], 0.0, 1e-12);
  EXPECT_NEAR(m.cov(0, 0), 1.0, 1e-12);
}

TEST(Moments, AgreeWithSamples) {
  Rng rng(5, 0);
  auto mu = random_mixture(rng, 2, 3);
  auto m = moments(mu);
  auto pts = sample(mu, 100000, 6, 0);
  VectorXd mean = pts.colwise().mean().transpose();
  MatrixXd centered = pts.rowwise() - mean.transpose();
  MatrixXd cov = centered.transpose() * centered / (pts.rows() - 1.0);
  for (Index i = 0; i < 2; ++i) {
    EXPECT_LT(std::abs(mean[i] - m.mean[i]), 4.0 * std::sqrt(m.cov(i, i) / 1e5));
    // stderr of a variance estimate is about sqrt(2) var / sqrt(N) plus kurtosis; use a generous 4x of that.
    EXPECT_LT(std::abs(cov(i, i) - m.cov(i, i)), 4.0 * 2.0 * m.cov(i, i) / std::sqrt(1e5));
  }
}

TEST(ProductMeasure, StandardSquared) {
  auto p = product_measure(GaussianMixture::standard(1), GaussianMixture::standard(1));
  EXPECT_EQ(p.dim(), 2);
  EXPECT_EQ(p.component(0).cov, MatrixXd::Identity(2, 2));
}

TEST(ProductMeasure, CountsWeightsAndMoments) {
  auto a = mixture_new(1, {{0.3, v1(-1), m1(1)}, {0.7, v1(2), m1(0.5)}});
  auto b = mixture_new(1, {{0.2, v1(0), m1(2)}, {0.3, v1(1), m1(1)}, {0.5, v1(4), m1(3)}});
  auto p = product_measure(a, b);
  ASSERT_EQ(p.size(), 6u);
  EXPECT_NEAR(p.component(0).weight, 0.06, 1e-15);
  EXPECT_NEAR(p.component(5).weight, 0.35, 1e-15);
  auto mp = moments(p), ma = moments(a), mb = moments(b);
  EXPECT_NEAR(mp.mean[0], ma.mean[0], 1e-12);
  EXPECT_NEAR(mp.mean[1], mb.mean[0], 1e-12);
  EXPECT_NEAR(mp.cov(0, 0), ma.cov(0, 0), 1e-12);
  EXPECT_NEAR(mp.cov(1, 1), mb.cov(0, 0), 1e-12);
  EXPECT_NEAR(mp.cov(0, 1), 0.0, 1e-12);
}

TEST(ProductMeasure, BudgetExceeded) {
  auto a = mixture_new(1, {{0.5, v1(-1), m1(1)}, {0.5, v1(1), m1(1)}});
  GaussianMixture p = a;
  try {
    for (int i = 0; i < 13; ++i) p = product_measure(p, a);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::ComponentBudgetExceeded);
    EXPECT_EQ(p.size(), 4096u);
  }
}
