#include "volterra/admissibility.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace volterra;

TEST(Admissibility, FractionalHalfMatchesClosedForms) {
  const auto cert = verify_admissibility(fractional_kernel(0.5), pi / 8);
  EXPECT_TRUE(cert.passed);
  EXPECT_NEAR(cert.sigma, pi / 4, 1e-6);
  EXPECT_NEAR(cert.phi, 3 * pi / 4, 1e-6);
  EXPECT_NEAR(cert.c_reg, 0.5, 1e-6);
  EXPECT_EQ(cert.w, 0.0);
  EXPECT_TRUE(cert.violations.empty());
}

TEST(Admissibility, FractionalFamilyFormulas) {
  for (double beta : {0.3, 0.8, 1.2, 1.7}) {
    const double sigma = std::abs(beta - 1.0) * pi / 2;
    const double phi = pi / 2 * (2.0 - beta);
    const double phiA = 0.5 * std::min(phi, pi / 2 - sigma);
    const auto cert = verify_admissibility(fractional_kernel(beta), phiA);
    EXPECT_TRUE(cert.passed) << beta;
    EXPECT_NEAR(cert.sigma, sigma, 1e-6);
    EXPECT_NEAR(cert.phi, phi, 1e-6);
    EXPECT_NEAR(cert.c_reg, beta, 1e-9);
  }
}

TEST(Admissibility, ConstantKernel) {
  const auto cert = verify_admissibility(constant_one_kernel(), pi / 4);
  EXPECT_TRUE(cert.passed);
  EXPECT_NEAR(cert.sigma, 0.0, 1e-12);
  EXPECT_NEAR(cert.phi, pi / 2, 1e-6);
  EXPECT_NEAR(cert.c_reg, 1.0, 1e-12);
  EXPECT_EQ(cert.w, 0.0);
}

TEST(Admissibility, LinearKernelIsRejected) {
  for (double phiA : {pi / 8, pi / 16, 0.3}) {
    const auto cert = verify_admissibility(linear_t_kernel(), phiA);
    EXPECT_FALSE(cert.passed) << phiA;
    EXPECT_FALSE(cert.violations.empty());
    EXPECT_GT(cert.sigma + phiA, pi / 2);
    bool has_sigma = false;
    for (const auto& v : cert.violations) has_sigma |= v.condition == "sigma";
    EXPECT_TRUE(has_sigma);
    EXPECT_EQ(cert.ladder_tried.size(), default_w_ladder().size());
  }
  // At w = 0 the measured sigma sits at the boundary pi/2 up to the sampling inset.
  const auto at0 = measure_sector(linear_t_kernel(), pi / 8, {}, 0.0);
  EXPECT_NEAR(at0.sigma, pi / 2, 1e-6);
}

TEST(Admissibility, KelvinVoigtPassesAfterShift) {
  const auto cert = verify_admissibility(kelvin_voigt_kernel(1.0, 1.0), pi / 8);
  EXPECT_TRUE(cert.passed);
  EXPECT_GT(cert.w, 0.0);
  EXPECT_LE(cert.w, 1024.0);
  EXPECT_LT(cert.sigma + pi / 8, pi / 2);
  EXPECT_LE(cert.c_reg, 2.0 + 1e-12);  // |lambda a^'| <= 2 |a^|
  // w = 0 fails: nu + mu/lambda sweeps the whole right half-plane near 0.
  EXPECT_FALSE(measure_sector(kelvin_voigt_kernel(1.0, 1.0), pi / 8, {}, 0.0).passed);
}

TEST(Admissibility, EmptySamplingIsInvalid) {
  HalfPlaneSampling empty;
  empty.moduli = 0;
  EXPECT_THROW(verify_admissibility(fractional_kernel(0.5), 0.1, empty), std::invalid_argument);
  EXPECT_THROW(verify_admissibility(fractional_kernel(0.5), 0.1, {}, {}), std::invalid_argument);
  EXPECT_THROW(verify_admissibility(fractional_kernel(0.5), pi / 2), std::invalid_argument);
}

TEST(Admissibility, NonFiniteEvaluatorFailsWithWitness) {
  Kernel k = fractional_kernel(0.5);
  k.laplace_eval = [](cplx l) {
    if (std::abs(l - cplx(1.0)) < 0.5) return cplx(std::nan(""), 0.0);
    return std::pow(l, -0.5);
  };
  HalfPlaneSampling s;
  s.extra_offsets = {cplx(1.0, 0.0)};
  const auto cert = verify_admissibility(k, pi / 8, s, {0.0});
  EXPECT_FALSE(cert.passed);
  ASSERT_FALSE(cert.violations.empty());
  EXPECT_EQ(cert.violations.front().condition, "non_finite");
}

TEST(Admissibility, EnlargingSamplingIsMonotone) {
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> logr(-5.0, 5.0), th(-1.5707, 1.5707);
  for (const Kernel& k : {fractional_kernel(0.5), kelvin_voigt_kernel(1.0, 1.0), fractional_kernel(1.4)}) {
    HalfPlaneSampling base;
    base.moduli = 16;
    base.angles = 17;
    HalfPlaneSampling bigger = base;
    for (int i = 0; i < 200; ++i) bigger.extra_offsets.push_back(std::polar(std::pow(10.0, logr(rng)), th(rng)));
    for (double w : {0.0, 1.0, 8.0}) {
      const auto a = measure_sector(k, 0.1, base, w);
      const auto b = measure_sector(k, 0.1, bigger, w);
      EXPECT_GE(b.sigma, a.sigma);
      EXPECT_GE(b.c_reg, a.c_reg);
      EXPECT_LE(b.phi, a.phi);
    }
  }
}

TEST(Admissibility, ShiftedKernelCertificate) {
  // s^ = a^/(1 - rho a^) for the fractional kernel approaches a^ for large w.
  const auto cert = verify_admissibility(fractional_kernel(0.5), pi / 8, {}, default_w_ladder(), 1.0);
  EXPECT_TRUE(cert.passed);
  EXPECT_GT(cert.w, 1.0);
  EXPECT_EQ(cert.rho, 1.0);
}
