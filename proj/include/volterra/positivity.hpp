#pragma once

#include "volterra/admissibility.hpp"
#include "volterra/error.hpp"
#include "volterra/operator_resolvent.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace volterra {

struct GramWitness {
  double eigenvalue = 0.0;
  std::size_t index = 0;  // position in the ascending spectrum
};

struct GramReport {
  double min_eigenvalue = 0.0;
  double norm = 0.0;
  double tol = 0.0;
  double symmetry_defect = 0.0;  // max |G - G^*| before symmetrization
  std::vector<double> time_samples;
  std::size_t block_dim = 0;
  bool passed = false;
  std::vector<GramWitness> witnesses;
};

inline constexpr std::size_t gram_size_cap = 4096;
inline constexpr double gram_relative_tol = 1e-8;

namespace detail {

inline std::vector<std::size_t> grid_indices(const TimeGrid& grid, const std::vector<double>& times) {
  std::vector<std::size_t> idx;
  idx.reserve(times.size());
  for (double t : times) {
    const double pos = t / grid.dt();
    const double k = std::round(pos);
    if (!(k >= 0.0) || k > static_cast<double>(grid.steps()) || std::abs(pos - k) > 1e-9)
      throw std::invalid_argument("gram_positivity_check: time " + std::to_string(t) + " is not a grid point");
    idx.push_back(static_cast<std::size_t>(k));
  }
  return idx;
}

}  // namespace detail

/// Minimum eigenvalue of the block matrix G_nm = e^{-w|t_n - t_m|} R(t_n - t_m),
/// with R(t) = S(t) for t >= 0 and R(-t) = R(t)^*. Pass a negative tol to use
/// gram_relative_tol * ||G||.
inline GramReport gram_positivity_check(const OperatorResolventTable& table, double w,
                                        const std::vector<double>& time_samples, double tol = -1.0,
                                        std::size_t witness_cap = 16) {
  if (time_samples.empty()) throw std::invalid_argument("gram_positivity_check: no time samples");
  const std::size_t d = table.dim;
  const std::size_t N = time_samples.size();
  if (N * d > gram_size_cap)
    throw std::invalid_argument("gram_positivity_check: Gram matrix of size " + std::to_string(N * d) +
                                " exceeds the cap " + std::to_string(gram_size_cap));
  const auto idx = detail::grid_indices(table.grid, time_samples);
  const auto n = static_cast<Eigen::Index>(N * d);
  const auto de = static_cast<Eigen::Index>(d);
  Matrix G(n, n);
  for (std::size_t a = 0; a < N; ++a) {
    for (std::size_t b = 0; b < N; ++b) {
      const std::size_t lag = idx[a] >= idx[b] ? idx[a] - idx[b] : idx[b] - idx[a];
      const double damp = std::exp(-w * table.grid[lag]);
      const Matrix R = table.resolvent_at(lag);
      auto block = G.block(static_cast<Eigen::Index>(a) * de, static_cast<Eigen::Index>(b) * de, de, de);
      if (idx[a] >= idx[b]) block = damp * R;
      else block = damp * R.adjoint();
    }
  }
  if (!G.allFinite()) throw NumericalError("gram_positivity_check: Gram matrix has non-finite entries");

  GramReport rep;
  rep.time_samples = time_samples;
  rep.block_dim = d;
  rep.symmetry_defect = (G - G.adjoint()).cwiseAbs().maxCoeff();
  const Matrix H = 0.5 * (G + G.adjoint());
  const Eigen::SelfAdjointEigenSolver<Matrix> es(H, Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) throw NumericalError("gram_positivity_check: eigenvalue solve failed");
  const auto& ev = es.eigenvalues();
  rep.min_eigenvalue = ev(0);
  rep.norm = std::max(std::abs(ev(0)), std::abs(ev(n - 1)));
  rep.tol = tol >= 0.0 ? tol : gram_relative_tol * rep.norm;
  for (Eigen::Index i = 0; i < n && ev(i) < -rep.tol && rep.witnesses.size() < witness_cap; ++i)
    rep.witnesses.push_back({ev(i), static_cast<std::size_t>(i)});
  rep.passed = rep.min_eigenvalue >= -rep.tol;
  return rep;
}

/// N equispaced grid times 0 = t_0 < ... covering [0, T_s] with T_s <= T,
/// snapped to the table grid.
inline std::vector<double> equispaced_samples(const TimeGrid& grid, std::size_t count, double until) {
  if (count == 0) return {};
  if (count == 1) return {0.0};
  std::vector<double> out;
  const double step = until / static_cast<double>(count - 1);
  for (std::size_t i = 0; i < count; ++i) {
    const auto k = static_cast<std::size_t>(std::llround(static_cast<double>(i) * step / grid.dt()));
    out.push_back(grid[std::min(k, grid.steps())]);
  }
  return out;
}

/// 1x1 operator table holding a scalar resolvent.
inline OperatorResolventTable scalar_table_as_operator(const ScalarResolventTable& s) {
  OperatorResolventTable t{1, s.grid, s.w, 0.0, std::vector<Matrix>(s.values.size(), Matrix(1, 1))};
  for (std::size_t k = 0; k < s.values.size(); ++k) t.matrices[k](0, 0) = s.values[k];
  return t;
}

/// Dilation angle beta in (phiA_bound, min(phi, pi/2 - sigma)) and alpha = 2 beta / pi.
struct AngleBudget {
  double beta = 0.0;
  double alpha = 0.0;
  double sigma = 0.0;
  double phi = 0.0;
  double phiA_bound = 0.0;
};

inline AngleBudget angle_budget(double phiA_bound, const SectorCertificate& cert) {
  const double hi = std::min(cert.phi, 0.5 * pi - cert.sigma);
  if (!(hi > phiA_bound))
    throw NoBudgetError("angle_budget: no beta with " + std::to_string(phiA_bound) + " < beta < min(phi, pi/2 - sigma) = " +
                        std::to_string(hi));
  if (!cert.passed) throw std::invalid_argument("angle_budget: certificate did not pass");
  AngleBudget b;
  b.beta = 0.5 * (phiA_bound + hi);
  b.alpha = 2.0 * b.beta / pi;
  b.sigma = cert.sigma;
  b.phi = cert.phi;
  b.phiA_bound = phiA_bound;
  return b;
}

struct BochnerViolation {
  cplx mu;
  double tau = 0.0;
  double xi = 0.0;
  double value = 0.0;
  std::string reason;
};

struct BochnerReport {
  double minimum = std::numeric_limits<double>::infinity();
  double min_tau = 0.0;
  double min_xi = 0.0;
  double tol = 0.0;
  std::size_t evaluations = 0;
  bool passed = false;
  std::vector<BochnerViolation> violations;
};

namespace detail {

// (i tau)^alpha on the principal branch: |tau|^alpha e^{+-i alpha pi/2}, sign of tau.
inline cplx dilation_multiplier(double alpha, double tau) {
  const double sign = tau > 0.0 ? 1.0 : (tau < 0.0 ? -1.0 : 0.0);
  return std::pow(std::abs(tau), alpha) * std::polar(1.0, sign * alpha * 0.5 * pi);
}

// Adds Re s^_{w,mu}(i xi) = Re[((1 + mu a^(w + i xi)) (w + i xi))^{-1}] to the report.
inline void accumulate_symbol(BochnerReport& rep, const TransformView& view, cplx mu, double w, double tau, double xi,
                              std::size_t witness_cap) {
  if (xi < 0.0) throw std::invalid_argument("bochner_check: xi samples must be nonnegative");
  ++rep.evaluations;
  const cplx z(w, xi);
  const cplx den = (1.0 + mu * view.value(z)) * z;
  if (std::abs(den) < 1e-300 || !std::isfinite(std::abs(den))) {
    if (rep.violations.size() < witness_cap) rep.violations.push_back({mu, tau, xi, 0.0, "denominator vanishes"});
    return;
  }
  const double v = (1.0 / den).real();
  if (v < rep.minimum) rep.minimum = v, rep.min_tau = tau, rep.min_xi = xi;
  if (!(v >= -rep.tol) && rep.violations.size() < witness_cap) rep.violations.push_back({mu, tau, xi, v, "negative"});
}

}  // namespace detail

inline BochnerReport bochner_check(const TransformView& view, const AngleBudget& budget, double w,
                                   const std::vector<double>& tau_samples, const std::vector<double>& xi_samples,
                                   double tol = 1e-10, std::size_t witness_cap = 64) {
  if (!(budget.alpha > 0.0 && budget.alpha < 1.0) || !(budget.beta > budget.phiA_bound) ||
      !(budget.beta + budget.sigma < 0.5 * pi))
    throw std::invalid_argument("bochner_check: angle budget violates its invariants");
  if (tau_samples.empty() || xi_samples.empty()) throw std::invalid_argument("bochner_check: empty sample grid");
  BochnerReport rep;
  rep.tol = tol;
  for (double tau : tau_samples) {
    const cplx mu = detail::dilation_multiplier(budget.alpha, tau);
    for (double xi : xi_samples) detail::accumulate_symbol(rep, view, mu, w, tau, xi, witness_cap);
  }
  rep.passed = rep.violations.empty();
  return rep;
}

inline BochnerReport bochner_check(const Kernel& kernel, const AngleBudget& budget, double w,
                                   const std::vector<double>& tau_samples, const std::vector<double>& xi_samples,
                                   double tol = 1e-10) {
  return bochner_check(TransformView{&kernel, 0.0}, budget, w, tau_samples, xi_samples, tol);
}

inline std::vector<double> log_samples(std::size_t count, double lo, double hi) {
  std::vector<double> out;
  for (std::size_t i = 0; i < count; ++i)
    out.push_back(count == 1 ? lo : lo * std::pow(hi / lo, static_cast<double>(i) / static_cast<double>(count - 1)));
  return out;
}

/// Re s^_{w,mu}(i xi) >= -tol over xi samples: the Fourier-side test for the
/// scalar family t -> s_{w,mu}(|t|) extended by conjugation to t < 0.
inline BochnerReport symbol_positivity_check(const TransformView& view, cplx mu, double w,
                                             const std::vector<double>& xi_samples, double tol = 1e-10,
                                             std::size_t witness_cap = 64) {
  if (xi_samples.empty()) throw std::invalid_argument("symbol_positivity_check: empty sample grid");
  BochnerReport rep;
  rep.tol = tol;
  for (double xi : xi_samples) detail::accumulate_symbol(rep, view, mu, w, 0.0, xi, witness_cap);
  rep.passed = rep.violations.empty();
  return rep;
}

/// 0 together with +-(count-1)/2 log-spaced moduli in [lo, hi]; count odd.
inline std::vector<double> symmetric_log_samples(std::size_t count, double lo, double hi) {
  if (count % 2 == 0) throw std::invalid_argument("symmetric_log_samples: count must be odd");
  const auto pos = log_samples(count / 2, lo, hi);
  std::vector<double> out;
  for (auto it = pos.rbegin(); it != pos.rend(); ++it) out.push_back(-*it);
  out.push_back(0.0);
  out.insert(out.end(), pos.begin(), pos.end());
  return out;
}

}  // namespace volterra
