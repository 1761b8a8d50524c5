#pragma once

#include "volterra/admissibility.hpp"
#include "volterra/error.hpp"
#include "volterra/kernel_grid.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <stdexcept>
#include <vector>

namespace volterra {

/// Samples of s_{w,mu} solving s(t) = e^{-wt} - mu (a_w * s)(t).
struct ScalarResolventTable {
  cplx mu;
  double w = 0.0;
  TimeGrid grid;
  std::vector<cplx> values;

  double sup_abs() const {
    double m = 0.0;
    for (const auto& v : values) m = std::max(m, std::abs(v));
    return m;
  }
};

inline constexpr double step_singularity_guard = 1e-13;

/// Forward substitution with the diagonal weight treated implicitly:
/// (1 + mu w_kk) s_k = e^{-w t_k} - mu * history_k.
inline ScalarResolventTable scalar_resolvent(const KernelGrid& kg, cplx mu) {
  const auto& grid = kg.grid();
  ScalarResolventTable table{mu, kg.damping(), grid, std::vector<cplx>(grid.size())};
  auto& s = table.values;
  s[0] = 1.0;
  const cplx diag = 1.0 + mu * kg.near()[0];
  if (std::abs(diag) < step_singularity_guard) throw StepSingularityError(1, "scalar_resolvent: 1 + mu w_kk vanishes");
  for (std::size_t k = 1; k < grid.size(); ++k) {
    s[k] = (std::exp(-kg.damping() * grid[k]) - mu * kg.history(k, s)) / diag;
  }
  return table;
}

inline ScalarResolventTable scalar_resolvent(const Kernel& kernel, cplx mu, double w, const TimeGrid& grid) {
  return scalar_resolvent(KernelGrid(kernel, grid, w), mu);
}

/// mu = r e^{i theta}, r log-spaced in [r_min, r_max], theta uniform in [-psi + eps, psi - eps].
inline std::vector<cplx> sector_samples(double psi, int moduli, int angles, double r_min = 1e-3, double r_max = 1e3,
                                        double inset = 1e-9) {
  std::vector<cplx> out;
  for (int i = 0; i < moduli; ++i) {
    const double r = moduli == 1 ? r_min : r_min * std::pow(r_max / r_min, static_cast<double>(i) / (moduli - 1));
    for (int j = 0; j < angles; ++j) {
      const double th = angles == 1 ? 0.0 : (-psi + inset) + 2.0 * (psi - inset) * j / (angles - 1);
      out.push_back(std::polar(r, th));
    }
  }
  return out;
}

/// sup{ |1+z|^{-1} : z in Sigma_{pi - theta} }.
inline double sector_m1(double theta) {
  if (!(theta > 0.0)) throw std::invalid_argument("sector_m1: angle must be positive");
  return theta >= 0.5 * pi ? 1.0 : 1.0 / std::sin(theta);
}

/// sup{ |c z/(1+z)^2| : z in Sigma_{pi - theta} }, evaluated numerically on the
/// boundary rays z = r e^{+-i(pi - theta)}.
inline double sector_m2(double c, double theta) {
  const double gamma = pi - theta;
  const cplx dir = std::polar(1.0, gamma);
  auto f = [&](double logr) {
    const double r = std::exp(logr);
    return c * r / std::norm(1.0 + r * dir);
  };
  const int n = 4001;
  const double lo = std::log(1e-8), hi = std::log(1e8);
  double best = -1.0;
  int best_i = 0;
  for (int i = 0; i < n; ++i) {
    const double v = f(lo + (hi - lo) * i / (n - 1));
    if (v > best) best = v, best_i = i;
  }
  // Golden-section refinement around the best grid point.
  double a = lo + (hi - lo) * std::max(best_i - 1, 0) / (n - 1);
  double b = lo + (hi - lo) * std::min(best_i + 1, n - 1) / (n - 1);
  const double g = 0.5 * (std::sqrt(5.0) - 1.0);
  double x1 = b - g * (b - a), x2 = a + g * (b - a);
  double f1 = f(x1), f2 = f(x2);
  for (int it = 0; it < 100; ++it) {
    if (f1 > f2) {
      b = x2, x2 = x1, f2 = f1;
      x1 = b - g * (b - a), f1 = f(x1);
    } else {
      a = x1, x1 = x2, f1 = f2;
      x2 = a + g * (b - a), f2 = f(x2);
    }
  }
  return std::max({best, f1, f2});
}

struct BoundViolation {
  cplx mu;
  cplx lambda;
  double value = 0.0;
  std::string reason;
};

struct BoundReport {
  double psi = 0.0;
  double m1 = 0.0;
  double m2 = 0.0;
  double k_measured = 0.0;
  double k_theory = 0.0;
  double tol = 0.0;
  std::size_t evaluations = 0;
  bool passed = false;
  std::vector<BoundViolation> violations;
};

/// s^_{w,mu}(lambda) = 1/((lambda+w)(1 + mu a^(lambda+w))) and its derivative.
inline std::pair<cplx, cplx> scalar_resolvent_transform(const TransformView& view, cplx mu, double w, cplx lambda) {
  const cplx lw = lambda + w;
  const cplx a = view.value(lw);
  const cplx da = view.deriv(lw);
  const cplx d = 1.0 + mu * a;
  const cplx s = 1.0 / (lw * d);
  const cplx ds = -(d + lw * mu * da) / (lw * lw * d * d);
  return {s, ds};
}

/// Check sup |lambda s^| + |lambda^2 s^'| <= 2 M1 + M2 over mu and lambda samples.
inline BoundReport laplace_bound_check(const Kernel& kernel, const SectorCertificate& cert, double psi,
                                       const std::vector<cplx>& mu_samples, const std::vector<cplx>& lambda_samples,
                                       double tol = 1e-9, std::size_t witness_cap = 64) {
  if (!cert.passed) throw std::invalid_argument("laplace_bound_check: certificate did not pass");
  if (!(psi > cert.phiA_bound && psi < cert.phi))
    throw std::invalid_argument("laplace_bound_check: psi must lie in (phiA_bound, phi)");
  BoundReport rep;
  rep.psi = psi;
  rep.tol = tol;
  const double theta = cert.phi - psi;
  rep.m1 = sector_m1(theta);
  rep.m2 = sector_m2(cert.c_reg, theta);
  rep.k_theory = 2.0 * rep.m1 + rep.m2;

  const TransformView view{&kernel, cert.rho};
  for (cplx mu : mu_samples) {
    for (cplx lambda : lambda_samples) {
      ++rep.evaluations;
      const cplx a = view.value(lambda + cert.w);
      if (std::abs(1.0 + mu * a) < 1e-300 || !std::isfinite(std::abs(a))) {
        if (rep.violations.size() < witness_cap) rep.violations.push_back({mu, lambda, 0.0, "1 + mu a^ vanishes"});
        continue;
      }
      const auto [s, ds] = scalar_resolvent_transform(view, mu, cert.w, lambda);
      const double k = std::abs(lambda * s) + std::abs(lambda * lambda * ds);
      rep.k_measured = std::max(rep.k_measured, k);
      if (!(k <= rep.k_theory + tol) && rep.violations.size() < witness_cap)
        rep.violations.push_back({mu, lambda, k, "bound exceeded"});
    }
  }
  rep.passed = rep.violations.empty();
  return rep;
}

inline BoundReport laplace_bound_check(const Kernel& kernel, const SectorCertificate& cert, double psi,
                                       const std::vector<cplx>& mu_samples) {
  HalfPlaneSampling sampling;
  return laplace_bound_check(kernel, cert, psi, mu_samples, sampling.points(0.0));
}

/// Default psi: midpoint of (phiA_bound, phi).
inline double default_psi(const SectorCertificate& cert) { return 0.5 * (cert.phiA_bound + cert.phi); }

}  // namespace volterra
