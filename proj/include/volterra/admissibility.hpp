#pragma once

#include "volterra/kernel.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <stdexcept>
#include <string>
#include <vector>

namespace volterra {

/// Sample set covering {Re lambda > w}: lambda = w + r e^{i theta} with r
/// log-spaced and theta uniform on [-pi/2 + inset, pi/2 - inset]. Extra points
/// are offsets lambda - w appended verbatim.
struct HalfPlaneSampling {
  double min_modulus = 1e-4;
  double max_modulus = 1e4;
  int moduli = 64;
  int angles = 65;
  double boundary_inset = 1e-8;
  std::vector<cplx> extra_offsets;

  std::size_t count() const {
    return static_cast<std::size_t>(std::max(moduli, 0)) * static_cast<std::size_t>(std::max(angles, 0)) +
           extra_offsets.size();
  }

  std::vector<cplx> offsets() const {
    std::vector<cplx> out;
    out.reserve(count());
    const double lo = std::log(min_modulus);
    const double hi = std::log(max_modulus);
    const double th_lo = -0.5 * pi + boundary_inset;
    const double th_hi = 0.5 * pi - boundary_inset;
    for (int i = 0; i < moduli; ++i) {
      const double r = moduli == 1 ? min_modulus : std::exp(lo + (hi - lo) * i / (moduli - 1));
      for (int j = 0; j < angles; ++j) {
        const double th = angles == 1 ? 0.0 : th_lo + (th_hi - th_lo) * j / (angles - 1);
        out.push_back(std::polar(r, th));
      }
    }
    out.insert(out.end(), extra_offsets.begin(), extra_offsets.end());
    return out;
  }

  std::vector<cplx> points(double w) const {
    auto pts = offsets();
    for (auto& p : pts) p += w;
    return pts;
  }
};

inline std::vector<double> default_w_ladder() {
  std::vector<double> ladder{0.0};
  for (double w = 1.0; w <= 1024.0; w *= 2.0) ladder.push_back(w);
  return ladder;
}

struct SectorViolation {
  cplx lambda;
  std::string condition;  // sigma | phi | regularity | non_finite | zero_transform
  double measured = 0.0;
};

/// Sampled certificate for the sector and 1-regularity conditions at one w.
struct SectorCertificate {
  double sigma = 0.0;  // sup |arg(lambda a^(lambda))|
  double phi = 0.0;    // pi - sup |arg a^(lambda)|
  double c_reg = 0.0;  // sup |lambda a^'(lambda)| / |a^(lambda)|
  double w = 0.0;
  double rho = 0.0;
  double phiA_bound = 0.0;
  bool passed = false;
  std::size_t samples = 0;
  std::vector<double> ladder_tried;
  std::vector<SectorViolation> violations;
};

inline constexpr double sector_slack = 1e-10;

/// Measure sigma, phi and c over the sampling at a single abscissa w.
inline SectorCertificate measure_sector(const Kernel& kernel, double phiA_bound, const HalfPlaneSampling& sampling,
                                        double w, double rho = 0.0, std::size_t witness_cap = 64) {
  if (sampling.count() == 0) throw std::invalid_argument("verify_admissibility: empty sampling spec");
  if (!(phiA_bound >= 0.0 && phiA_bound < 0.5 * pi))
    throw std::invalid_argument("verify_admissibility: phiA_bound must lie in [0, pi/2)");

  const TransformView view{&kernel, rho};
  SectorCertificate cert;
  cert.w = w;
  cert.rho = rho;
  cert.phiA_bound = phiA_bound;
  cert.samples = sampling.count();

  double sup_sigma = 0.0;
  double sup_arg = 0.0;
  double sup_c = 0.0;
  bool defect = false;
  std::size_t n_sigma = 0, n_phi = 0, n_other = 0;
  const double sigma_limit = 0.5 * pi - phiA_bound;
  const double arg_limit = pi - phiA_bound;

  for (cplx lambda : sampling.points(w)) {
    const cplx a = view.value(lambda);
    const cplx d = view.deriv(lambda);
    if (!std::isfinite(a.real()) || !std::isfinite(a.imag()) || !std::isfinite(d.real()) ||
        !std::isfinite(d.imag())) {
      defect = true;
      if (n_other++ < witness_cap) cert.violations.push_back({lambda, "non_finite", std::abs(a)});
      continue;
    }
    if (a == cplx(0.0)) {
      defect = true;
      if (n_other++ < witness_cap) cert.violations.push_back({lambda, "zero_transform", 0.0});
      continue;
    }
    const double s = std::abs(std::arg(lambda * a));
    const double g = std::abs(std::arg(a));
    const double c = std::abs(lambda * d) / std::abs(a);
    sup_sigma = std::max(sup_sigma, s);
    sup_arg = std::max(sup_arg, g);
    if (!std::isfinite(c)) {
      defect = true;
      if (n_other++ < witness_cap) cert.violations.push_back({lambda, "regularity", c});
    } else {
      sup_c = std::max(sup_c, c);
    }
    if (s >= sigma_limit + sector_slack && n_sigma++ < witness_cap)
      cert.violations.push_back({lambda, "sigma", s});
    if (g >= arg_limit + sector_slack && n_phi++ < witness_cap) cert.violations.push_back({lambda, "phi", g});
  }

  cert.sigma = sup_sigma;
  cert.phi = pi - sup_arg;
  cert.c_reg = sup_c;
  cert.passed = !defect && (cert.sigma + phiA_bound < 0.5 * pi + sector_slack) &&
                (cert.phi + sector_slack > phiA_bound) && std::isfinite(cert.c_reg);
  if (cert.passed) cert.violations.clear();
  return cert;
}

/// Search the w-ladder for the smallest w at which the sampled sector and
/// regularity conditions hold. When rho != 0 the conditions are checked for the
/// shifted kernel s^ = a^/(1 - rho a^). A failing certificate reports the last
/// rung tried together with its witnesses.
inline SectorCertificate verify_admissibility(const Kernel& kernel, double phiA_bound,
                                              const HalfPlaneSampling& sampling = {},
                                              const std::vector<double>& ladder = default_w_ladder(),
                                              double rho = 0.0) {
  if (sampling.count() == 0) throw std::invalid_argument("verify_admissibility: empty sampling spec");
  if (ladder.empty()) throw std::invalid_argument("verify_admissibility: empty w ladder");
  std::vector<double> tried;
  SectorCertificate cert;
  for (double w : ladder) {
    if (w < kernel.exp_order_w0) continue;
    tried.push_back(w);
    cert = measure_sector(kernel, phiA_bound, sampling, w, rho);
    if (cert.passed) break;
  }
  if (tried.empty()) throw std::invalid_argument("verify_admissibility: no ladder rung above the exponential order");
  cert.ladder_tried = std::move(tried);
  return cert;
}

}  // namespace volterra
