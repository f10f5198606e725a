#include <gtest/gtest.h>

#include <cmath>
#include <set>

#include "lsistab/bounds.hpp"
#include "lsistab/corpus.hpp"

using namespace lsistab;

namespace {

MatrixXd m1(double v) { return MatrixXd::Constant(1, 1, v); }
VectorXd v1(double v) { return VectorXd::Constant(1, v); }

GaussianMixture g1(double mean, double var) { return GaussianMixture::gaussian(v1(mean), m1(var)); }
GaussianMixture bimodal() { return mixture_new(1, {{0.5, v1(-1), m1(0.5)}, {0.5, v1(1), m1(0.5)}}); }

Budget numeric() {
  Budget b;
  b.allow_closed_form = false;
  return b;
}

const double kDeltaHalf = 0.5 * (2.0 - 1.0 + std::log(0.5));  // deficit of gamma_{0,1/2}

}  // namespace

TEST(DeltaFn, Values) {
  EXPECT_EQ(delta_fn(0.0), 0.0);
  EXPECT_NEAR(delta_fn(1.0), 0.306853, 1e-6);
  EXPECT_NEAR(delta_fn(-0.5), 0.193147, 1e-6);
  EXPECT_THROW(delta_fn(-1.0), Error);
  // series branch matches log1p branch at the switch point
  const double x = 0.99999e-4;
  EXPECT_NEAR(delta_fn(x) / (x - std::log1p(x)), 1.0, 1e-10);
  EXPECT_NEAR(delta_fn(1e-6), 5e-13 - 1e-18 / 3.0 + 2.5e-25, 1e-28);
}

TEST(DeltaFn, Convex) {
  Rng rng(1, 0);
  for (int i = 0; i < 1000; ++i) {
    const double x = -0.9 + 10.9 * rng.uniform(), y = -0.9 + 10.9 * rng.uniform();
    EXPECT_LE(delta_fn(0.5 * (x + y)), 0.5 * (delta_fn(x) + delta_fn(y)) + 1e-15);
  }
}

TEST(Lsi, Examples) {
  auto r0 = check_lsi(GaussianMixture::standard(1));
  EXPECT_EQ(r0.slack, 0.0);
  EXPECT_TRUE(r0.holds);
  auto r1 = check_lsi(g1(0, 0.5));
  EXPECT_NEAR(r1.slack, kDeltaHalf, 1e-12);
  auto r2 = check_dimensional_lsi(g1(3, 1), numeric());
  EXPECT_NEAR(r2.slack, 0.0, 1e-8);
  EXPECT_TRUE(r2.holds);
}

TEST(LogDet, Examples) {
  auto r0 = check_logdet_bound(g1(0, 0.3), numeric());
  EXPECT_NEAR(r0.lhs.value, -0.5 * std::log(0.3), 1e-8);
  EXPECT_NEAR(r0.slack, 0.0, 1e-8);
  auto r1 = check_logdet_bound(GaussianMixture::standard(3));
  EXPECT_EQ(r1.slack, 0.0);
  auto mu = bimodal();
  auto r2 = check_logdet_bound(mu);
  EXPECT_TRUE(r2.holds);
  EXPECT_GT(r2.slack, 0.0);
  auto dim = check_dimensional_lsi(mu);
  EXPECT_LE(r2.slack, dim.slack + 1e-12);  // in 1D the two coincide
  EXPECT_GE(r2.extras["am_gm_gap"], -r2.extras["am_gm_gap_error"]);
}

TEST(LogDet, AmGmGapPositiveForAnisotropicMixture) {
  MatrixXd c(2, 2);
  c << 0.3, 0.1, 0.1, 2.0;
  VectorXd a(2), b(2);
  a << -1, 0;
  b << 1, 0.5;
  auto mu = mixture_new(2, {{0.5, a, c}, {0.5, b, c}});
  auto r = check_logdet_bound(mu);
  EXPECT_TRUE(r.holds);
  EXPECT_GT(r.extras["am_gm_gap"], 0.1);
}

TEST(LogDet, Singular) {
  FunctionalSummary s;
  s.fisher_leb.value = MatrixXd::Zero(1, 1);
  s.H_leb = Estimate::exact(0.0);
  EXPECT_THROW(check_logdet_bound(s, 1), Error);
}

TEST(EigenBounds, Examples) {
  auto [a0, b0] = check_eigen_deficit_bounds(GaussianMixture::standard(2));
  EXPECT_EQ(a0.rhs.value, 0.0);
  EXPECT_EQ(b0.rhs.value, 0.0);
  auto [a1, b1] = check_eigen_deficit_bounds(g1(0, 0.5));
  EXPECT_NEAR(a1.rhs.value, 0.5 * delta_fn(1.0), 1e-15);
  EXPECT_NEAR(a1.rhs.value, kDeltaHalf, 1e-12);
  EXPECT_TRUE(b1.preconditions_met);
  EXPECT_TRUE(b1.holds);
  auto [a2, b2] = check_eigen_deficit_bounds(g1(0, 2.0));
  EXPECT_FALSE(b2.preconditions_met);
  EXPECT_TRUE(a2.holds);
  EXPECT_NEAR(a2.rhs.value, 0.5 * delta_fn(-0.5), 1e-15);
  EXPECT_NEAR(a2.lhs.value, 0.096574, 1e-6);
  EXPECT_NEAR(a2.slack, 0.0, 1e-12);
}

TEST(CovBound, Examples) {
  auto r0 = check_cov_bound(g1(0, 0.5));
  EXPECT_NEAR(r0.rhs.value, kDeltaHalf, 1e-15);
  EXPECT_LE(std::abs(r0.slack), 1e-7);
  EXPECT_TRUE(r0.extras.count("hs_rhs"));
  auto r1 = check_cov_bound(g1(0, 2.0));
  EXPECT_EQ(r1.rhs.value, 0.0);
  EXPECT_NEAR(r1.lhs.value, 0.096574, 1e-6);
  EXPECT_FALSE(r1.extras.count("hs_rhs"));
  auto r2 = check_cov_bound(GaussianMixture::standard(1));
  EXPECT_EQ(r2.slack, 0.0);
}

TEST(CovBound, EqualityForNumericalGaussian) {
  auto r = check_cov_bound(g1(0.7, 0.35), numeric());
  EXPECT_LE(std::abs(r.slack), 1e-7);
  EXPECT_TRUE(r.holds);
}

TEST(CramerRao, Examples) {
  auto r0 = check_cramer_rao(g1(0, 0.4), numeric());
  EXPECT_LE(r0.extras["max_abs_difference"], 1e-8);
  auto r1 = check_cramer_rao(bimodal());
  EXPECT_GT(r1.lhs.value, 0.0);
  EXPECT_TRUE(r1.holds);
  auto r2 = check_cramer_rao(GaussianMixture::standard(2));
  EXPECT_EQ(r2.extras["max_abs_difference"], 0.0);
}

TEST(OptimalScaling, Examples) {
  auto s0 = optimal_scaling(GaussianMixture::standard(2));
  EXPECT_LT(max_abs(s0.sigma - MatrixXd::Identity(2, 2)), 1e-15);
  auto s1 = optimal_scaling(g1(0, 0.25));
  EXPECT_NEAR(s1.sigma(0, 0), 2.0, 1e-14);
  EXPECT_NEAR(s1.report.slack, 0.0, 1e-12);
  EXPECT_NEAR(s1.report.extras["scaled_fisher_trace"], 1.0, 1e-12);
  MatrixXd c = MatrixXd::Zero(2, 2);
  c(0, 0) = 0.25;
  c(1, 1) = 4.0;
  auto s2 = optimal_scaling(GaussianMixture::gaussian(VectorXd::Zero(2), c));
  MatrixXd expect = MatrixXd::Zero(2, 2);
  expect(0, 0) = 2.0;
  expect(1, 1) = 0.5;
  EXPECT_LT(max_abs(s2.sigma - expect), 1e-14);
}

TEST(OptimalScaling, MixtureReproducesLogDetAndIsLocallyMinimal) {
  MatrixXd c(2, 2);
  c << 0.5, 0.2, 0.2, 1.5;
  VectorXd a(2), b(2);
  a << -1, 0.3;
  b << 1.2, -0.4;
  auto mu = mixture_new(2, {{0.3, a, c}, {0.7, b, c}});
  auto r = optimal_scaling(mu).report;
  EXPECT_TRUE(r.holds);
  EXPECT_LE(r.extras["reproduction_gap"], r.extras["reproduction_tolerance"]);
  EXPECT_EQ(r.extras["locally_minimal"], 1.0);
  EXPECT_GT(r.extras["perturbation_min_increase"], 0.0);
}

TEST(MixtureDeficitUpper, Examples) {
  EXPECT_NEAR(mixture_deficit_upper(0, 0, 1, 0.5), std::log(2.0), 1e-15);
  EXPECT_NEAR(mixture_deficit_upper(0, 16, 1, 0.25), 0.562335, 1e-6);
  EXPECT_NEAR(mixture_deficit_upper(0, 0, 0.5, 0), 0.25, 1e-15);
  EXPECT_GE(mixture_deficit_upper(0, 0, 0.5, 0), kDeltaHalf);
  EXPECT_THROW(mixture_deficit_upper(0, 1, 1.5, 0.5), Error);
  EXPECT_THROW(mixture_deficit_upper(0, 1, 0.5, 1.5), Error);
}

TEST(Convexity, Examples) {
  auto g = GaussianMixture::standard(1);
  auto r0 = convexity_deficit_bound(g, g, 0.5);
  EXPECT_NEAR(r0.lhs.value, 0.0, 1e-8);
  EXPECT_NEAR(r0.rhs.value, std::log(2.0), 1e-15);
  auto r1 = convexity_deficit_bound(g, g1(5, 1), 0.5);
  EXPECT_TRUE(r1.holds);
  EXPECT_EQ(r1.lhs.method, Method::quadrature);
  auto r2 = convexity_deficit_bound(g1(0, 0.5), g1(2, 1), 1e-6);
  EXPECT_TRUE(r2.holds);
  EXPECT_NEAR(r2.rhs.value, kDeltaHalf, 1e-4);
}

TEST(Shannon, Examples) {
  auto r0 = shannon_bound({{1.0, v1(3)}});
  EXPECT_EQ(r0.lhs.value, 0.0);
  EXPECT_EQ(r0.rhs.value, 0.0);
  auto r1 = shannon_bound({{0.5, v1(0)}, {0.5, v1(16)}});
  EXPECT_TRUE(r1.holds);
  EXPECT_NEAR(r1.rhs.value, std::log(2.0), 1e-15);
  auto r2 = shannon_bound({{0.75, v1(0)}, {0.25, v1(16)}});
  EXPECT_TRUE(r2.holds);
  EXPECT_NEAR(r2.rhs.value, 0.562335, 1e-6);
}

TEST(TwoPointLower, Examples) {
  EXPECT_NEAR(wasserstein_lower_two_point(0, 8, 1, 0.5, 1), 0.25, 1e-15);
  EXPECT_NEAR(wasserstein_lower_two_point(0, 8, 1, 0.5, 2), 0.5, 1e-15);
  try {
    wasserstein_lower_two_point(0, 4, 1, 0.1, 1);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::TailAssumptionViolated);
  }
}

TEST(Bgrs, Examples) {
  auto [a0, b0] = check_bgrs_bounds(GaussianMixture::standard(1));
  EXPECT_EQ(a0.rhs.value, 0.0);
  EXPECT_TRUE(a0.holds);
  EXPECT_TRUE(b0.holds);
  auto [a1, b1] = check_bgrs_bounds(g1(0, 0.5));
  EXPECT_TRUE(a1.preconditions_met);
  // I(gamma_{0,1/2} | gamma) = (s-1)^2/s = 1/2
  EXPECT_NEAR(a1.rhs.value, 0.5 * delta_fn(0.5), 1e-15);
  EXPECT_NEAR(a1.rhs.value, 0.047267, 1e-6);
  EXPECT_TRUE(a1.holds);
  EXPECT_TRUE(b1.holds);
  auto [a2, b2] = check_bgrs_bounds(g1(0, 2.0));
  EXPECT_FALSE(a2.preconditions_met);
  EXPECT_FALSE(b2.preconditions_met);
}

TEST(VerifyAll, StandardGaussianAllHold) {
  for (const auto& r : verify_all(GaussianMixture::standard(2))) EXPECT_TRUE(r.holds) << r.name;
}

TEST(VerifyAll, UnitMixtureAddsLemmaReports) {
  auto mu = mixture_new(1, {{0.75, v1(0), m1(1)}, {0.25, v1(16), m1(1)}});
  auto reports = verify_all(mu);
  std::set<std::string> names;
  for (const auto& r : reports) {
    names.insert(r.name);
    if (r.preconditions_met) EXPECT_TRUE(r.holds) << r.name << " slack " << r.slack;
  }
  for (const char* n : {"shannon", "mixture_convexity", "two_point_deficit_upper", "two_point_w1_lower"})
    EXPECT_TRUE(names.count(n)) << n;
}

TEST(Corpus, AllVerdictsHold) {
  // the first 60 members; the full 200 take several minutes
  CorpusOptions co;
  co.count = 60;
  const auto corpus = random_corpus(co);
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    VerifyOptions o;
    o.budget.stream = i;
    for (const auto& r : verify_all(corpus[i], o))
      if (r.preconditions_met) EXPECT_TRUE(r.holds) << "member " << i << ": " << r.name;
  }
}
