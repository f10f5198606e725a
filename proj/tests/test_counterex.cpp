#include <gtest/gtest.h>

#include <cmath>

#include "lsistab/counterex.hpp"

using namespace lsistab;

namespace {

VectorXd v1(double v) { return VectorXd::Constant(1, v); }
MatrixXd m1(double v) { return MatrixXd::Constant(1, 1, v); }

double binary_entropy(double t) { return -(1 - t) * std::log(1 - t) - t * std::log(t); }

}  // namespace

TEST(VarianceBlowup, Examples) {
  auto m4 = variance_blowup_family(4);
  EXPECT_DOUBLE_EQ(m4.analytic.variance, 49.0);
  EXPECT_NEAR(m4.analytic.deficit_upper, 0.562335, 1e-6);
  auto m10 = variance_blowup_family(10);
  EXPECT_NEAR(m10.analytic.deficit_upper, -0.9 * std::log(0.9) - 0.1 * std::log(0.1), 1e-15);
  EXPECT_NEAR(m10.analytic.deficit_upper, 0.325083, 1e-6);
  EXPECT_NEAR(m10.analytic.variance, 901.0, 1e-9);
  const Moments mo = moments(m10.mixture);
  EXPECT_NEAR(mo.cov(0, 0), 901.0, 1e-9);
  double prev = 1.0;
  for (long k : {10, 100, 1000}) {
    const double d = variance_blowup_family(k).analytic.deficit_upper;
    EXPECT_LT(d, prev);
    EXPECT_NEAR(d, binary_entropy(1.0 / k), 1e-15);
    prev = d;
  }
  EXPECT_THROW(variance_blowup_family(1), Error);
}

TEST(Isotropic, Examples) {
  auto m = isotropic_family(100);
  EXPECT_NEAR(m.analytic.t, 1e-3, 1e-15);
  EXPECT_NEAR(m.analytic.a, -0.01, 1e-15);
  EXPECT_NEAR(m.analytic.b, 9.99, 1e-12);
  EXPECT_NEAR(m.analytic.sigma, 0.9001, 1e-12);
  EXPECT_FALSE(m.analytic.tail_ok);
  auto m400 = isotropic_family(400);
  EXPECT_TRUE(m400.analytic.tail_ok);
  EXPECT_NEAR(m400.analytic.w2_lower, 1.0 / 1280.0, 1e-15);
  EXPECT_NEAR(m400.analytic.deficit_upper, 1.94e-3, 5e-6);
  EXPECT_EQ(m400.n_k, 89);
  for (double k : {2.0, 7.5, 100.0, 400.0, 2500.0, 1e6}) {
    const Moments mo = moments(isotropic_family(k).mixture);
    EXPECT_NEAR(mo.mean[0], 0.0, 1e-10) << k;
    EXPECT_NEAR(mo.cov(0, 0), 1.0, 1e-10) << k;
  }
  EXPECT_THROW(isotropic_family(0.5), Error);
}

TEST(Sweep, AnalyticOnly) {
  auto rows = sweep(Family::variance_blowup, {100, 4, 1000, 10});
  ASSERT_EQ(rows.size(), 4u);
  for (std::size_t i = 1; i < rows.size(); ++i) {
    EXPECT_LT(rows[i - 1].member.k, rows[i].member.k);
    EXPECT_LT(rows[i].member.analytic.deficit_upper, rows[i - 1].member.analytic.deficit_upper);
    EXPECT_GT(rows[i].member.analytic.variance, rows[i - 1].member.analytic.variance);
    EXPECT_FALSE(rows[i].has_monte_carlo);
  }
  auto iso = sweep(Family::isotropic, {400, 900, 1600});
  EXPECT_GE(iso[0].ratio, 0.4);
  for (std::size_t i = 1; i < iso.size(); ++i) {
    EXPECT_GT(iso[i].ratio, iso[i - 1].ratio);
    EXPECT_GT(iso[i].tensor_w2_lower, iso[i - 1].tensor_w2_lower);
    EXPECT_LT(iso[i].tensor_deficit_upper, iso[i - 1].tensor_deficit_upper);
    EXPECT_NEAR(iso[i].tensor_w2_lower / iso[i].tensor_deficit_upper, iso[i].ratio, 1e-12);
  }
  EXPECT_THROW(sweep(Family::isotropic, {}), Error);
}

TEST(Sweep, MonteCarloColumns) {
  SweepOptions o;
  o.monte_carlo = true;
  auto rows = sweep(Family::isotropic, {400, 900}, o);
  for (const auto& r : rows) {
    ASSERT_TRUE(r.has_monte_carlo);
    EXPECT_LE(r.deficit.value, r.member.analytic.deficit_upper + 1e-8);
    EXPECT_GE(r.deficit.value, 0.0);
    EXPECT_GE(r.w2sq_translate.value, r.member.analytic.w2_lower - 3 * r.w2sq_translate.abs_error);
  }
  SweepOptions o2 = o;
  o2.threads = 1;
  auto again = sweep(Family::isotropic, {900, 400}, o2);
  EXPECT_EQ(again[0].w2sq_translate.value, rows[0].w2sq_translate.value);
}

TEST(Question1, DegenerateForTranslatedGaussian) {
  auto r = question1_probe(GaussianMixture::gaussian(v1(2.0), m1(1.0)), 1);
  EXPECT_TRUE(r.degenerate);
  EXPECT_EQ(r.status, "DegenerateDeficit");
  EXPECT_TRUE(std::isnan(r.ratio));
  ASSERT_EQ(r.p.size(), 1u);
  EXPECT_NEAR(r.p[0].second[0], 2.0, 0.15);
  EXPECT_EQ(r.shannon, 0.0);
  EXPECT_LT(r.w2sq.value, 3 * r.w2sq_floor + 1e-3);
}

TEST(Question1, HonestMixtureRecoversAtoms) {
  auto mu = mixture_new(1, {{0.75, v1(0), m1(1)}, {0.25, v1(16), m1(1)}});
  auto r = question1_probe(mu, 2);
  ASSERT_EQ(r.p.size(), 2u);
  const bool first_low = r.p[0].second[0] < r.p[1].second[0];
  const auto& lo = first_low ? r.p[0] : r.p[1];
  const auto& hi = first_low ? r.p[1] : r.p[0];
  EXPECT_NEAR(lo.second[0], 0.0, 0.15);
  EXPECT_NEAR(hi.second[0], 16.0, 0.15);
  EXPECT_NEAR(lo.first, 0.75, 0.04);
  EXPECT_NEAR(r.shannon, 0.562335, 0.03);
  EXPECT_LT(r.w2sq.value, 3 * r.w2sq_floor + 1e-3);
  EXPECT_FALSE(r.degenerate);
  EXPECT_GE(r.ratio, 1.0);
}

TEST(Question1, ScaledGaussianSingleAtom) {
  auto mu = GaussianMixture::gaussian(v1(0), m1(0.8));
  ProbeOptions o;
  o.samples = 2048;
  auto r = question1_probe(mu, 1, o);
  const double exact = std::pow(1 - std::sqrt(0.8), 2);
  EXPECT_NEAR(exact, 0.011146, 1e-6);
  EXPECT_NEAR(r.deficit.value, 0.5 * (1 / 0.8 - 1 + std::log(0.8)), 1e-12);
  EXPECT_NEAR(r.w2sq.value, exact, 3 * r.w2sq.abs_error + 2 * r.w2sq_floor);
  EXPECT_NEAR(r.ratio, r.w2sq.value / r.deficit.value, 1e-12);
}

TEST(Question1, Preconditions) {
  EXPECT_THROW(question1_probe(GaussianMixture::standard(1), 17), Error);
  EXPECT_THROW(question1_probe(GaussianMixture::standard(1), 0), Error);
}
