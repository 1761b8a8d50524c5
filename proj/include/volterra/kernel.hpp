#pragma once

#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>

#include <cmath>
#include <complex>
#include <functional>
#include <limits>
#include <map>
#include <stdexcept>
#include <string>
#include <utility>

namespace volterra {

using cplx = std::complex<double>;

inline constexpr double pi = 3.141592653589793238462643383279502884;

/// Scalar convolution kernel a on (0, inf) with its Laplace data.
///
/// Near zero the kernel behaves like t^power_exponent times a smooth factor;
/// product-integration weights use that exponent to integrate the singular
/// part exactly. Optional closed forms (cumulative integral, self-convolution)
/// are used when present and replaced by quadrature otherwise.
struct Kernel {
  std::string name;
  std::function<double(double)> time_eval;
  std::function<cplx(cplx)> laplace_eval;
  std::function<cplx(cplx)> laplace_deriv_eval;
  double exp_order_w0 = 0.0;
  bool singular_at_zero = false;
  double power_exponent = 0.0;
  /// True when the transform is computed by quadrature instead of a formula.
  bool approximate_transform = false;

  std::function<double(double)> cumulative;        // \int_0^x a(u) du
  std::function<double(double)> self_convolution;  // (a * a)(t)

  double operator()(double t) const { return time_eval(t); }
  cplx laplace(cplx lambda) const { return laplace_eval(lambda); }
  cplx laplace_deriv(cplx lambda) const { return laplace_deriv_eval(lambda); }

  /// a(t) / t^power_exponent, finite on [0, inf) for the kernels handled here.
  double smooth_factor(double t) const {
    if (power_exponent == 0.0) return time_eval(t);
    return time_eval(t) * std::pow(t, -power_exponent);
  }

  double integral_to(double x) const;
  double self_convolution_at(double t) const;
};

namespace detail {

// \int_lo^hi f(t) dt with endpoint singularities allowed at lo.
template <class F>
double integrate_finite(F&& f, double lo, double hi) {
  if (!(hi > lo)) return 0.0;
  boost::math::quadrature::tanh_sinh<double> rule(15);
  return rule.integrate(f, lo, hi, 1e-13);
}

template <class F>
double integrate_half_line(F&& f, double lo) {
  boost::math::quadrature::exp_sinh<double> rule(12);
  return rule.integrate(f, lo, std::numeric_limits<double>::infinity(), 1e-13);
}

}  // namespace detail

inline double Kernel::integral_to(double x) const {
  if (x <= 0.0) return 0.0;
  if (cumulative) return cumulative(x);
  return detail::integrate_finite([this](double t) { return time_eval(t); }, 0.0, x);
}

inline double Kernel::self_convolution_at(double t) const {
  if (self_convolution) return self_convolution(t);
  if (t <= 0.0) {
    // a*a(0+) is 0 unless both factors are singular; callers reject that case.
    return 0.0;
  }
  const double half = 0.5 * t;
  auto f = [this, t](double u) { return time_eval(t - u) * time_eval(u); };
  // Split so that each half has at most one endpoint singularity.
  return detail::integrate_finite(f, 0.0, half) +
         detail::integrate_finite([&](double u) { return f(t - u); }, 0.0, half);
}

/// \int_0^inf e^{-lambda t} t^power a(t) dt by double-exponential quadrature.
/// Requires Re lambda > w0. power = 0 gives the transform, power = 1 minus its derivative.
inline cplx numeric_laplace(const Kernel& kernel, cplx lambda, int power = 0) {
  if (!(lambda.real() > kernel.exp_order_w0))
    throw std::invalid_argument("numeric_laplace: Re(lambda) must exceed the exponential order");
  auto integrand = [&](double t, bool imag) {
    const double tp = power == 0 ? 1.0 : std::pow(t, power);
    const cplx v = std::exp(-lambda * t) * tp * kernel.time_eval(t);
    return imag ? v.imag() : v.real();
  };
  const double split = 1.0;
  const double re = detail::integrate_finite([&](double t) { return integrand(t, false); }, 0.0, split) +
                    detail::integrate_half_line([&](double t) { return integrand(t, false); }, split);
  const double im = detail::integrate_finite([&](double t) { return integrand(t, true); }, 0.0, split) +
                    detail::integrate_half_line([&](double t) { return integrand(t, true); }, split);
  return {re, im};
}

/// a(t) = t^{beta-1} / Gamma(beta), beta in (0, 2); transform lambda^{-beta}.
inline Kernel fractional_kernel(double beta) {
  if (!(beta > 0.0 && beta < 2.0))
    throw std::invalid_argument("fractional kernel: beta must lie in (0, 2)");
  Kernel k;
  k.name = "fractional(beta=" + std::to_string(beta) + ")";
  const double inv_gamma = 1.0 / std::tgamma(beta);
  const double inv_gamma1 = 1.0 / std::tgamma(beta + 1.0);
  const double inv_gamma2 = 1.0 / std::tgamma(2.0 * beta);
  k.time_eval = [beta, inv_gamma](double t) { return std::pow(t, beta - 1.0) * inv_gamma; };
  k.laplace_eval = [beta](cplx l) { return std::pow(l, -beta); };
  k.laplace_deriv_eval = [beta](cplx l) { return -beta * std::pow(l, -beta - 1.0); };
  k.exp_order_w0 = 0.0;
  k.singular_at_zero = beta < 1.0;
  k.power_exponent = beta - 1.0;
  k.cumulative = [beta, inv_gamma1](double x) { return std::pow(x, beta) * inv_gamma1; };
  k.self_convolution = [beta, inv_gamma2](double t) { return std::pow(t, 2.0 * beta - 1.0) * inv_gamma2; };
  return k;
}

/// a(t) = nu + mu t (Kelvin-Voigt solid).
inline Kernel kelvin_voigt_kernel(double nu, double mu) {
  if (!(nu > 0.0) || !(mu > 0.0))
    throw std::invalid_argument("kelvin_voigt kernel: nu and mu must be positive");
  Kernel k;
  k.name = "kelvin_voigt(nu=" + std::to_string(nu) + ",mu=" + std::to_string(mu) + ")";
  k.time_eval = [nu, mu](double t) { return nu + mu * t; };
  k.laplace_eval = [nu, mu](cplx l) { return nu / l + mu / (l * l); };
  k.laplace_deriv_eval = [nu, mu](cplx l) { return -nu / (l * l) - 2.0 * mu / (l * l * l); };
  k.cumulative = [nu, mu](double x) { return nu * x + 0.5 * mu * x * x; };
  k.self_convolution = [nu, mu](double t) {
    return nu * nu * t + nu * mu * t * t + mu * mu * t * t * t / 6.0;
  };
  return k;
}

inline Kernel linear_t_kernel() {
  Kernel k;
  k.name = "linear_t";
  k.time_eval = [](double t) { return t; };
  k.laplace_eval = [](cplx l) { return 1.0 / (l * l); };
  k.laplace_deriv_eval = [](cplx l) { return -2.0 / (l * l * l); };
  k.cumulative = [](double x) { return 0.5 * x * x; };
  k.self_convolution = [](double t) { return t * t * t / 6.0; };
  return k;
}

inline Kernel constant_one_kernel() {
  Kernel k;
  k.name = "constant_one";
  k.time_eval = [](double) { return 1.0; };
  k.laplace_eval = [](cplx l) { return 1.0 / l; };
  k.laplace_deriv_eval = [](cplx l) { return -1.0 / (l * l); };
  k.cumulative = [](double x) { return x; };
  k.self_convolution = [](double t) { return t; };
  return k;
}

/// Kernel known only in the time domain; the transform is evaluated numerically
/// and flagged approximate. power_exponent describes the behaviour at t -> 0.
inline Kernel numeric_transform_kernel(std::string name, std::function<double(double)> fn,
                                       double power_exponent, double w0) {
  if (!(power_exponent > -1.0))
    throw std::invalid_argument("numeric_transform_kernel: kernel must be locally integrable");
  Kernel k;
  k.name = std::move(name);
  k.time_eval = std::move(fn);
  k.exp_order_w0 = w0;
  k.power_exponent = power_exponent;
  k.singular_at_zero = power_exponent < 0.0;
  k.approximate_transform = true;
  // The transform closures carry their own copy of the time-domain data.
  const Kernel probe = k;
  k.laplace_eval = [probe](cplx l) { return numeric_laplace(probe, l, 0); };
  k.laplace_deriv_eval = [probe](cplx l) { return -numeric_laplace(probe, l, 1); };
  return k;
}

/// Builtin kernels by name: fractional{beta}, kelvin_voigt{nu, mu}, linear_t, constant_one.
inline Kernel builtin_kernel(const std::string& name, const std::map<std::string, double>& params = {}) {
  auto get = [&](const char* key) {
    auto it = params.find(key);
    if (it == params.end()) throw std::invalid_argument("kernel '" + name + "' needs parameter '" + key + "'");
    return it->second;
  };
  if (name == "fractional") return fractional_kernel(get("beta"));
  if (name == "kelvin_voigt") return kelvin_voigt_kernel(get("nu"), get("mu"));
  if (name == "linear_t") return linear_t_kernel();
  if (name == "constant_one") return constant_one_kernel();
  throw std::invalid_argument("unknown builtin kernel '" + name + "'");
}

/// Laplace data of the shifted kernel s solving s - rho a*s = a:
/// s^ = a^/(1 - rho a^), s^' = a^'/(1 - rho a^)^2.
struct TransformView {
  const Kernel* kernel;
  double rho = 0.0;

  cplx value(cplx l) const {
    const cplx a = kernel->laplace(l);
    return rho == 0.0 ? a : a / (1.0 - rho * a);
  }
  cplx deriv(cplx l) const {
    const cplx d = kernel->laplace_deriv(l);
    if (rho == 0.0) return d;
    const cplx den = 1.0 - rho * kernel->laplace(l);
    return d / (den * den);
  }
};

}  // namespace volterra
