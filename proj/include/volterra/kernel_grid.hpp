#pragma once

#include "volterra/error.hpp"
#include "volterra/kernel.hpp"
#include "volterra/quadrature.hpp"
#include "volterra/time_grid.hpp"

#include <cmath>
#include <complex>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace volterra {

/// Product-trapezoidal convolution weights for a damped kernel a_w(t) = e^{-wt} a(t)
/// on a uniform grid.
///
/// On each cell the unknown is replaced by its piecewise-linear interpolant and
/// integrated exactly against the kernel, so
///
///   (a_w * f)(t_k) ~ sum_{m=0}^{k-1} near[m] f_{k-m} + far[m] f_{k-m-1},
///
/// where near[m] and far[m] are the moments of a_w over [mh, (m+1)h] against the
/// two hat functions meeting on that cell. The singular factor t^gamma of the
/// first cell is absorbed into a Gauss-Jacobi rule.
///
/// A grid may also carry a sampled regular part r (see shift_kernel), in which
/// case the represented kernel is a_w + r and the weights include the exact
/// integrals of the linear interpolant of r against the hats.
class KernelGrid {
public:
  KernelGrid(const Kernel& kernel, const TimeGrid& grid, double damping = 0.0, int nodes = 20)
      : kernel_(kernel), grid_(grid), damping_(damping) {
    if (!std::isfinite(damping)) throw std::invalid_argument("KernelGrid: damping must be finite");
    const std::size_t n = grid.steps();
    const double h = grid.dt();
    const QuadratureRule plain = gauss_jacobi_unit(nodes, 0.0);
    const double gamma = kernel.power_exponent;
    const bool power_cell = gamma != 0.0;
    const QuadratureRule first = power_cell ? gauss_jacobi_unit(nodes, gamma) : plain;

    near_.assign(n, 0.0);
    far_.assign(n, 0.0);
    for (std::size_t m = 0; m < n; ++m) {
      double acc_near = 0.0;
      double acc_far = 0.0;
      if (m == 0 && power_cell) {
        const double scale = std::pow(h, gamma + 1.0);
        for (std::size_t i = 0; i < first.nodes.size(); ++i) {
          const double th = first.nodes[i];
          const double u = th * h;
          const double g = kernel.smooth_factor(u) * std::exp(-damping * u);
          acc_near += first.weights[i] * g * (1.0 - th);
          acc_far += first.weights[i] * g * th;
        }
        acc_near *= scale;
        acc_far *= scale;
      } else {
        for (std::size_t i = 0; i < plain.nodes.size(); ++i) {
          const double th = plain.nodes[i];
          const double u = (static_cast<double>(m) + th) * h;
          const double g = kernel(u) * std::exp(-damping * u);
          acc_near += plain.weights[i] * g * (1.0 - th);
          acc_far += plain.weights[i] * g * th;
        }
        acc_near *= h;
        acc_far *= h;
      }
      if (!std::isfinite(acc_near) || !std::isfinite(acc_far))
        throw NumericalError("KernelGrid: non-finite quadrature weight on cell " + std::to_string(m));
      near_[m] = acc_near;
      far_[m] = acc_far;
    }

    samples_.resize(grid.size());
    for (std::size_t k = 0; k < grid.size(); ++k) {
      const double t = grid[k];
      if (k == 0) {
        samples_[0] = kernel.singular_at_zero ? std::numeric_limits<double>::infinity() : kernel(0.0);
      } else {
        samples_[k] = kernel(t) * std::exp(-damping * t);
      }
    }
    regular_.assign(grid.size(), 0.0);
  }

  const Kernel& kernel() const noexcept { return kernel_; }
  const TimeGrid& grid() const noexcept { return grid_; }
  double damping() const noexcept { return damping_; }
  /// Operator shift rho this grid was built for (0 for an unshifted kernel).
  double rho() const noexcept { return rho_; }
  bool shifted() const noexcept { return shifted_; }

  const std::vector<double>& samples() const noexcept { return samples_; }
  const std::vector<double>& near() const noexcept { return near_; }
  const std::vector<double>& far() const noexcept { return far_; }
  /// Sampled regular part r (zero unless shifted).
  const std::vector<double>& regular_part() const noexcept { return regular_; }

  /// sum over all weights of row k, i.e. the quadrature of \int_0^{t_k} a_w.
  double row_sum(std::size_t k) const {
    double s = 0.0;
    for (std::size_t m = 0; m < k; ++m) s += near_[m] + far_[m];
    return s;
  }

  /// Weighted history sum for row k excluding the diagonal term near[0] f[k].
  /// Seq holds scalars (double or complex).
  template <class Seq>
  auto history(std::size_t k, const Seq& f) const {
    using V = std::decay_t<decltype(f[0])>;
    V acc{};
    if (k == 0) return acc;
    acc += far_[k - 1] * f[0];
    for (std::size_t m = 1; m < k; ++m) acc += (near_[m] + far_[m - 1]) * f[k - m];
    return acc;
  }

  /// Full product quadrature of (a_w * f)(t_k) including the diagonal term.
  template <class Seq>
  auto convolve(std::size_t k, const Seq& f) const {
    auto acc = history(k, f);
    if (k > 0) acc += near_[0] * f[k];
    return acc;
  }

  /// Combined weight multiplying f[j] in row k.
  double weight(std::size_t k, std::size_t j) const {
    if (j > k || k == 0) return 0.0;
    if (j == k) return near_[0];
    if (j == 0) return far_[k - 1];
    return near_[k - j] + far_[k - j - 1];
  }

private:
  friend KernelGrid shift_kernel(const KernelGrid&, double);

  Kernel kernel_;
  TimeGrid grid_;
  double damping_;
  double rho_ = 0.0;
  bool shifted_ = false;
  std::vector<double> samples_;
  std::vector<double> near_;
  std::vector<double> far_;
  std::vector<double> regular_;
};

namespace detail {

// (a_w * a_w)(t) = e^{-wt} (a * a)(t) on the grid.
inline std::vector<double> damped_self_convolution(const KernelGrid& kg) {
  const auto& grid = kg.grid();
  std::vector<double> out(grid.size());
  for (std::size_t k = 0; k < grid.size(); ++k) {
    const double t = grid[k];
    out[k] = kg.kernel().self_convolution_at(t) * std::exp(-kg.damping() * t);
  }
  return out;
}

inline void require_bounded_self_convolution(const KernelGrid& kg) {
  if (2.0 * kg.kernel().power_exponent + 1.0 < 0.0)
    throw NumericalError("shift_kernel: a*a is unbounded at 0 (power exponent " +
                         std::to_string(kg.kernel().power_exponent) +
                         "); the regular part has no finite product-quadrature weights");
}

}  // namespace detail

/// Solve s - rho a*s = a on the grid of `grid_kernel`.
///
/// Writes s = a + r with r = rho (a*a + a*r); the first term is exact and the
/// second is product-integrated, with the diagonal weight treated implicitly.
/// The returned grid represents s: samples are s(t_k) and the weights are those
/// of a plus those of the linear interpolant of r.
inline KernelGrid shift_kernel(const KernelGrid& grid_kernel, double rho) {
  if (!std::isfinite(rho)) throw std::invalid_argument("shift_kernel: rho must be finite");
  if (grid_kernel.shifted()) throw std::invalid_argument("shift_kernel: grid is already shifted");
  KernelGrid out = grid_kernel;
  out.rho_ = rho;
  out.shifted_ = true;
  if (rho == 0.0) return out;

  detail::require_bounded_self_convolution(grid_kernel);
  const auto aa = detail::damped_self_convolution(grid_kernel);
  if (!std::isfinite(aa[0])) throw NumericalError("shift_kernel: a*a(0+) is not finite");

  const std::size_t size = grid_kernel.grid().size();
  const double diag = 1.0 - rho * grid_kernel.near()[0];
  if (std::abs(diag) < 1e-14) throw StepSingularityError(1, "shift_kernel: 1 - rho*w_00 vanishes");

  std::vector<double> r(size, 0.0);
  r[0] = rho * aa[0];
  for (std::size_t k = 1; k < size; ++k) {
    r[k] = (rho * aa[k] + rho * grid_kernel.history(k, r)) / diag;
  }

  const double h = grid_kernel.grid().dt();
  for (std::size_t m = 0; m + 1 < size; ++m) {
    // Linear r on [mh, (m+1)h] against hat (1 - theta) and theta.
    out.near_[m] += h * (r[m] / 3.0 + r[m + 1] / 6.0);
    out.far_[m] += h * (r[m] / 6.0 + r[m + 1] / 3.0);
  }
  for (std::size_t k = 0; k < size; ++k) out.samples_[k] = grid_kernel.samples()[k] + r[k];
  out.regular_ = std::move(r);
  return out;
}

/// max_k |s - rho a*s - a| over k >= 1, evaluated with the product quadrature of
/// the unshifted grid.
inline double shift_residual(const KernelGrid& original, const KernelGrid& shifted) {
  const double rho = shifted.rho();
  if (rho == 0.0) {
    double worst = 0.0;
    for (std::size_t k = 1; k < original.grid().size(); ++k)
      worst = std::max(worst, std::abs(shifted.samples()[k] - original.samples()[k]));
    return worst;
  }
  const auto aa = detail::damped_self_convolution(original);
  const auto& r = shifted.regular_part();
  double worst = 0.0;
  for (std::size_t k = 1; k < original.grid().size(); ++k) {
    // s - a - rho a*s = r - rho (a*a + a*r)
    const double defect = r[k] - rho * (aa[k] + original.convolve(k, r));
    worst = std::max(worst, std::abs(defect));
  }
  return worst;
}

/// Truncated Neumann series s = sum_{j>=1} rho^{j-1} a^{*j}, with a^{*2} exact and
/// higher powers formed by the same product quadrature. Returns s samples.
inline std::vector<double> neumann_shift(const KernelGrid& grid_kernel, double rho, int terms) {
  detail::require_bounded_self_convolution(grid_kernel);
  const std::size_t size = grid_kernel.grid().size();
  std::vector<double> power = detail::damped_self_convolution(grid_kernel);  // a^{*2}
  std::vector<double> s = grid_kernel.samples();
  double coef = rho;
  for (int j = 2; j <= terms; ++j) {
    for (std::size_t k = 0; k < size; ++k) s[k] += coef * power[k];
    std::vector<double> next(size, 0.0);
    for (std::size_t k = 1; k < size; ++k) next[k] = grid_kernel.convolve(k, power);
    power = std::move(next);
    coef *= rho;
  }
  return s;
}

struct ShiftLaplacePoint {
  cplx lambda;
  cplx numeric;
  cplx analytic;
  double rel_error = 0.0;
  bool skipped = false;
  std::string warning;
};

/// Compare the Laplace transform of the sampled shifted kernel with
/// a^/(1 - rho a^). The regular part is transformed exactly on its linear
/// interpolant over [0, T]; the tail beyond T is ignored, so T must be large
/// enough for e^{-Re(lambda) T} r(T) to be negligible.
inline std::vector<ShiftLaplacePoint> shift_laplace_check(const KernelGrid& shifted,
                                                          const std::vector<cplx>& lambdas,
                                                          double singular_guard = 1e-8) {
  std::vector<ShiftLaplacePoint> out;
  const auto& grid = shifted.grid();
  const auto& r = shifted.regular_part();
  const double h = grid.dt();
  const TransformView view{&shifted.kernel(), shifted.rho()};
  for (cplx lambda : lambdas) {
    ShiftLaplacePoint p;
    p.lambda = lambda;
    const cplx shifted_arg = lambda + shifted.damping();
    const cplx a_hat = shifted.kernel().laplace(shifted_arg);
    const cplx den = 1.0 - shifted.rho() * a_hat;
    if (std::abs(den) < singular_guard) {
      p.skipped = true;
      p.warning = "1 - rho a^(lambda) vanishes; check skipped";
      out.push_back(p);
      continue;
    }
    const cplx z = lambda * h;
    cplx i0, i1;  // \int_0^h e^{-lambda x} dx and \int_0^h x e^{-lambda x} dx
    if (std::abs(z) < 1e-2) {
      cplx term = 1.0, s0 = 0.0, s1 = 0.0;
      double fact = 1.0;
      for (int j = 0; j < 12; ++j) {
        if (j > 0) fact *= j;
        s0 += term / (fact * (j + 1));
        s1 += term / (fact * (j + 2));
        term *= -z;
      }
      i0 = h * s0;
      i1 = h * h * s1;
    } else {
      const cplx e = std::exp(-z);
      i0 = (1.0 - e) / lambda;
      i1 = (1.0 - e * (1.0 + z)) / (lambda * lambda);
    }
    cplx reg = 0.0;
    for (std::size_t j = 0; j + 1 < grid.size(); ++j) {
      const double slope = (r[j + 1] - r[j]) / h;
      reg += std::exp(-lambda * grid[j]) * (r[j] * i0 + slope * i1);
    }
    p.numeric = a_hat + reg;
    p.analytic = view.value(shifted_arg);
    p.rel_error = std::abs(p.numeric - p.analytic) / std::abs(p.analytic);
    out.push_back(p);
  }
  return out;
}

}  // namespace volterra
