#include "volterra/kernel.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace volterra;

namespace {

std::vector<Kernel> builtin_suite() {
  return {fractional_kernel(0.5), fractional_kernel(1.0), fractional_kernel(1.5), fractional_kernel(0.3),
          kelvin_voigt_kernel(1.0, 1.0), kelvin_voigt_kernel(0.5, 2.0), linear_t_kernel(), constant_one_kernel()};
}

}  // namespace

TEST(BuiltinKernel, FractionalHalfAtFour) {
  const Kernel k = builtin_kernel("fractional", {{"beta", 0.5}});
  EXPECT_NEAR(k.laplace(4.0).real(), 0.5, 1e-15);
  EXPECT_NEAR(k.laplace(4.0).imag(), 0.0, 1e-15);
  EXPECT_TRUE(k.singular_at_zero);
  EXPECT_DOUBLE_EQ(k.power_exponent, -0.5);
}

TEST(BuiltinKernel, KelvinVoigtAtOne) {
  const Kernel k = builtin_kernel("kelvin_voigt", {{"nu", 1.0}, {"mu", 1.0}});
  EXPECT_NEAR(std::abs(k.laplace(1.0) - cplx(2.0)), 0.0, 1e-15);
  EXPECT_DOUBLE_EQ(k(2.0), 3.0);
}

TEST(BuiltinKernel, FractionalOneIsConstant) {
  const Kernel k = fractional_kernel(1.0);
  EXPECT_DOUBLE_EQ(k(0.3), 1.0);
  EXPECT_DOUBLE_EQ(k(7.0), 1.0);
  const cplx l(2.0, 3.0);
  EXPECT_NEAR(std::abs(k.laplace(l) - 1.0 / l), 0.0, 1e-15);
  EXPECT_FALSE(k.singular_at_zero);
}

TEST(BuiltinKernel, RejectsBetaOutsideRange) {
  EXPECT_THROW(fractional_kernel(0.0), std::invalid_argument);
  EXPECT_THROW(fractional_kernel(2.0), std::invalid_argument);
  EXPECT_THROW(builtin_kernel("fractional", {{"beta", -1.0}}), std::invalid_argument);
  EXPECT_THROW(builtin_kernel("fractional", {}), std::invalid_argument);
  EXPECT_THROW(builtin_kernel("gaussian", {}), std::invalid_argument);
  EXPECT_THROW(kelvin_voigt_kernel(0.0, 1.0), std::invalid_argument);
}

TEST(BuiltinKernel, PrincipalBranchOnRightHalfPlane) {
  const Kernel k = fractional_kernel(0.5);
  // lambda^{-1/2} has argument -arg(lambda)/2 for Re lambda > 0.
  for (double th : {-1.5, -0.7, 0.0, 0.4, 1.5}) {
    const cplx l = std::polar(3.0, th);
    EXPECT_NEAR(std::arg(k.laplace(l)), -0.5 * th, 1e-14);
  }
}

TEST(KernelLaplace, NumericTransformMatchesAnalytic) {
  std::mt19937_64 rng(20240611);
  std::uniform_real_distribution<double> re(1.0, 10.0), im(-10.0, 10.0);
  for (const Kernel& k : builtin_suite()) {
    for (int i = 0; i < 20; ++i) {
      const cplx l(re(rng), im(rng));
      const cplx exact = k.laplace(l);
      const cplx numeric = numeric_laplace(k, l);
      EXPECT_LT(std::abs(numeric - exact) / std::abs(exact), 1e-6) << k.name << " at " << l;
    }
  }
}

TEST(KernelLaplace, DerivativeMatchesCenteredDifference) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> re(1.0, 10.0), im(-10.0, 10.0);
  for (const Kernel& k : builtin_suite()) {
    for (int i = 0; i < 20; ++i) {
      const cplx l(re(rng), im(rng));
      const double h = 1e-4 * std::abs(l);
      const cplx fd = (k.laplace(l + h) - k.laplace(l - h)) / (2.0 * h);
      const cplx d = k.laplace_deriv(l);
      EXPECT_LT(std::abs(fd - d) / std::abs(d), 1e-4) << k.name;
    }
  }
}

TEST(KernelLaplace, NumericDerivativeMatchesAnalytic) {
  const Kernel k = fractional_kernel(0.5);
  const cplx l(2.0, 1.0);
  EXPECT_LT(std::abs(-numeric_laplace(k, l, 1) - k.laplace_deriv(l)) / std::abs(k.laplace_deriv(l)), 1e-6);
}

TEST(KernelLaplace, NumericModeKernel) {
  // e^{-t} has transform 1/(lambda+1).
  const Kernel k = numeric_transform_kernel("exp", [](double t) { return std::exp(-t); }, 0.0, -1.0);
  EXPECT_TRUE(k.approximate_transform);
  const cplx l(0.5, 2.0);
  EXPECT_LT(std::abs(k.laplace(l) - 1.0 / (l + 1.0)), 1e-9);
  EXPECT_LT(std::abs(k.laplace_deriv(l) + 1.0 / ((l + 1.0) * (l + 1.0))), 1e-9);
  EXPECT_THROW(numeric_laplace(k, cplx(-2.0, 0.0)), std::invalid_argument);
}

TEST(KernelClosedForms, CumulativeAndSelfConvolution) {
  for (const Kernel& k : builtin_suite()) {
    for (double t : {0.1, 0.7, 2.0}) {
      const double cum = detail::integrate_finite([&](double u) { return k(u); }, 0.0, t);
      EXPECT_NEAR(k.integral_to(t), cum, 1e-10 * std::max(1.0, std::abs(cum))) << k.name;
      const double half = 0.5 * t;
      const double conv = detail::integrate_finite([&](double u) { return k(t - u) * k(u); }, 0.0, half) +
                          detail::integrate_finite([&](double u) { return k(u) * k(t - u); }, 0.0, half);
      EXPECT_NEAR(k.self_convolution_at(t), conv, 1e-8 * std::max(1.0, std::abs(conv))) << k.name;
    }
  }
}

TEST(TransformView, ShiftedTransformIdentity) {
  const Kernel k = fractional_kernel(0.5);
  const TransformView view{&k, 1.0};
  // s^(4) = 0.5 / (1 - 0.5) = 1
  EXPECT_NEAR(std::abs(view.value(4.0) - 1.0), 0.0, 1e-15);
  const cplx l(3.0, 2.0);
  const double h = 1e-5;
  const cplx fd = (view.value(l + h) - view.value(l - h)) / (2.0 * h);
  EXPECT_LT(std::abs(fd - view.deriv(l)) / std::abs(view.deriv(l)), 1e-6);
}
