#pragma once

#include "volterra/martingale.hpp"
#include "volterra/operator_resolvent.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

namespace volterra {

struct SolutionJump {
  double time = 0.0;
  Vector size;
};

struct SolutionPath {
  TimeGrid grid;
  std::vector<Vector> values;
  std::vector<SolutionJump> jumps;
};

namespace detail {

inline std::vector<Vector> continuous_increments(const MartingalePath& L) {
  std::vector<Vector> inc(L.grid.steps());
  for (std::size_t j = 0; j < inc.size(); ++j)
    inc[j] = (L.continuous_part[j + 1] - L.continuous_part[j]).cast<cplx>();
  return inc;
}

}  // namespace detail

/// u(t_k) = S(t_k) u0 + sum_{j<k} S(t_k - t_{j+1}) dL_j + sum_{tau_i <= t_k} S(t_k - tau_i) z_i.
/// The continuous increments enter at the right end of their cell and every
/// jump is applied at its own time. Off-grid S is interpolated as in
/// `interpolate`; passing the kernel enables the first-cell profile.
inline SolutionPath stochastic_convolution(const OperatorResolventTable& table, const MartingalePath& L,
                                           const Vector& u0, const Kernel* kernel = nullptr) {
  if (!(table.grid == L.grid)) throw std::invalid_argument("stochastic_convolution: grid mismatch");
  if (table.dim != L.dim || static_cast<std::size_t>(u0.size()) != table.dim)
    throw std::invalid_argument("stochastic_convolution: dimension mismatch");
  const auto& grid = table.grid;
  const std::size_t n = grid.steps();
  std::vector<Matrix> S(grid.size());
  for (std::size_t k = 0; k < grid.size(); ++k) S[k] = table.resolvent_at(k);

  SolutionPath out{grid, std::vector<Vector>(grid.size()), {}};
  const auto inc = detail::continuous_increments(L);
  // Flat column-major copies keep the O(n^2 d^2) sum free of temporaries.
  const std::size_t d = table.dim, d2 = d * d;
  std::vector<cplx> flatS(grid.size() * d2), flatInc(n * d);
  for (std::size_t k = 0; k < grid.size(); ++k) std::copy_n(S[k].data(), d2, flatS.data() + k * d2);
  for (std::size_t j = 0; j < n; ++j) std::copy_n(inc[j].data(), d, flatInc.data() + j * d);
  std::vector<cplx> acc(d);
  for (std::size_t k = 0; k < grid.size(); ++k) {
    Eigen::Map<Vector>(acc.data(), static_cast<Eigen::Index>(d)) = S[k] * u0;
    for (std::size_t j = 0; j < k; ++j) {
      const cplx* M = flatS.data() + (k - 1 - j) * d2;
      const cplx* x = flatInc.data() + j * d;
      for (std::size_t c = 0; c < d; ++c)
        for (std::size_t r = 0; r < d; ++r) acc[r] += M[r + c * d] * x[c];
    }
    out.values[k] = Eigen::Map<Vector>(acc.data(), static_cast<Eigen::Index>(d));
  }

  std::vector<Vector> images(grid.size());
  for (const auto& jump : L.jumps) {
    const Vector z = jump.size.cast<cplx>();
    // First node p >= 1 at or after the jump; offsets t_k - tau = (k - p) h + delta, delta in [0, h).
    std::size_t p = std::min(grid.cell_of(jump.time), n);
    while (p < n && grid[p] < jump.time) ++p;
    const double delta = grid[p] - jump.time;
    for (std::size_t m = 0; m <= n - p + 1; ++m) images[m] = S[m] * z;
    const double theta = std::clamp(delta / grid.dt(), 0.0, 1.0);
    double theta0 = theta;
    if (kernel != nullptr && kernel->power_exponent != 0.0 && delta > 0.0) {
      const double kh = kernel->integral_to(grid.dt());
      if (kh != 0.0) theta0 = std::clamp(kernel->integral_to(delta) / kh, 0.0, 1.0);
    }
    for (std::size_t k = p; k <= n; ++k) {
      const std::size_t m = k - p;
      const double th = m == 0 ? theta0 : theta;
      if (th == 0.0) out.values[k] += images[m];
      else out.values[k] += (1.0 - th) * images[m] + th * images[m + 1];
    }
    out.jumps.push_back({jump.time, S[0] * z});
  }
  return out;
}

/// Defect of <u(t), x> = <u0, x> + \int_0^t a(t-s) <u(s), A^* x> ds + <L(t), x>
/// on the grid. The path is read as u = v + L~ + J, where L~ steps by dL_j at
/// t_{j+1} and J collects the jumps of L: v is integrated with the product
/// quadrature of a (w = 0) and the steps through K(t) = \int_0^t a exactly.
inline double weak_solution_residual(const SolutionPath& u, const MartingalePath& L, const Vector& u0,
                                     const Kernel& kernel, const Matrix& A, std::vector<Vector> test_vectors = {}) {
  if (!(u.grid == L.grid)) throw std::invalid_argument("weak_solution_residual: grid mismatch");
  const auto d = static_cast<Eigen::Index>(L.dim);
  if (A.rows() != d || A.cols() != d || u0.size() != d)
    throw std::invalid_argument("weak_solution_residual: dimension mismatch");
  if (test_vectors.empty())
    for (Eigen::Index i = 0; i < d; ++i) test_vectors.push_back(Vector::Unit(d, i));
  const auto& grid = u.grid;
  const KernelGrid kg(kernel, grid, 0.0);
  const auto inc = detail::continuous_increments(L);
  std::vector<double> K(grid.size());
  for (std::size_t m = 0; m < grid.size(); ++m) K[m] = kernel.integral_to(grid[m]);

  std::vector<Vector> Av(grid.size());
  std::vector<Vector> Lk(grid.size());
  for (std::size_t k = 0; k < grid.size(); ++k) {
    const Vector jumps = L.jumps_through(grid[k]).cast<cplx>();
    Lk[k] = L.continuous_part[k].cast<cplx>() + jumps;
    Av[k] = A * (u.values[k] - Lk[k]);
  }
  const auto omega = detail::interior_weights(kg);
  double worst = 0.0;
  for (std::size_t k = 0; k < grid.size(); ++k) {
    Vector conv = Vector::Zero(d);
    if (k > 0) {
      conv += kg.near()[0] * Av[k] + kg.far()[k - 1] * Av[0];
      for (std::size_t m = 1; m < k; ++m) conv += omega[m] * Av[k - m];
    }
    Vector steps = Vector::Zero(d);
    for (std::size_t j = 0; j < k; ++j) steps += K[k - 1 - j] * inc[j];
    for (const auto& jump : L.jumps) {
      if (jump.time > grid[k]) break;
      steps += kernel.integral_to(grid[k] - jump.time) * jump.size.cast<cplx>();
    }
    conv += A * steps;
    const Vector defect = u.values[k] - u0 - conv - Lk[k];
    for (const auto& x : test_vectors) worst = std::max(worst, std::abs(x.dot(defect)));
  }
  return worst;
}

struct JumpTransferReport {
  std::size_t jumps = 0;
  std::size_t matched = 0;
  std::size_t missing = 0;
  std::size_t excess = 0;
  double max_continuous_increment = 0.0;  // max_k |u_{k+1} - u_k - jumps in (t_k, t_{k+1}]|
  bool passed = false;
};

/// Every jump (tau, z) of L must appear in u at the same time with size exactly z.
inline JumpTransferReport jump_transfer_check(const SolutionPath& u, const MartingalePath& L) {
  JumpTransferReport rep;
  rep.jumps = L.jumps.size();
  std::vector<bool> used(u.jumps.size(), false);
  for (const auto& j : L.jumps) {
    const Vector z = j.size.cast<cplx>();
    bool found = false;
    for (std::size_t i = 0; i < u.jumps.size() && !found; ++i) {
      if (used[i] || u.jumps[i].time != j.time || u.jumps[i].size.size() != z.size()) continue;
      if ((u.jumps[i].size.array() == z.array()).all()) used[i] = found = true;
    }
    found ? ++rep.matched : ++rep.missing;
  }
  rep.excess = static_cast<std::size_t>(std::count(used.begin(), used.end(), false));
  for (std::size_t k = 0; k + 1 < u.values.size(); ++k) {
    Vector step = u.values[k + 1] - u.values[k];
    for (const auto& j : u.jumps)
      if (j.time > u.grid[k] && j.time <= u.grid[k + 1]) step -= j.size;
    rep.max_continuous_increment = std::max(rep.max_continuous_increment, step.norm());
  }
  rep.passed = rep.missing == 0 && rep.excess == 0;
  return rep;
}

enum class RegularityMode { continuous, cadlag };

struct RegularityReport {
  RegularityMode mode = RegularityMode::continuous;
  std::size_t paths = 0;
  double max_increment = 0.0;       // over paths, jump contributions removed
  double mean_max_increment = 0.0;  // per-path maxima averaged
  std::size_t excess_jumps = 0;
  std::size_t missing_jumps = 0;
  double mean_sup_norm2 = 0.0;  // empirical E sup_k |u(t_k)|^2
  bool passed = false;
};

inline constexpr std::size_t min_regularity_ensemble = 100;

/// Ensemble statistics. `drivers` pairs each solution with its noise and is
/// required in cadlag mode to count unmatched jumps.
inline RegularityReport path_regularity_diagnostics(const std::vector<SolutionPath>& ensemble, RegularityMode mode,
                                                    const std::vector<MartingalePath>& drivers = {}) {
  if (ensemble.size() < min_regularity_ensemble)
    throw std::invalid_argument("path_regularity_diagnostics: need at least " +
                                std::to_string(min_regularity_ensemble) + " paths");
  if (mode == RegularityMode::cadlag && drivers.size() != ensemble.size())
    throw std::invalid_argument("path_regularity_diagnostics: cadlag mode needs the driving paths");
  RegularityReport rep;
  rep.mode = mode;
  rep.paths = ensemble.size();
  double sum_max = 0.0, sum_sup = 0.0;
  for (std::size_t p = 0; p < ensemble.size(); ++p) {
    const auto& u = ensemble[p];
    double path_max = 0.0, sup = 0.0;
    std::size_t next_jump = 0;
    for (std::size_t k = 0; k < u.values.size(); ++k) {
      sup = std::max(sup, u.values[k].squaredNorm());
      if (k + 1 == u.values.size()) break;
      Vector step = u.values[k + 1] - u.values[k];
      while (next_jump < u.jumps.size() && u.jumps[next_jump].time <= u.grid[k + 1]) {
        if (u.jumps[next_jump].time > u.grid[k]) step -= u.jumps[next_jump].size;
        ++next_jump;
      }
      path_max = std::max(path_max, step.norm());
    }
    rep.max_increment = std::max(rep.max_increment, path_max);
    sum_max += path_max;
    sum_sup += sup;
    if (mode == RegularityMode::cadlag) {
      const auto t = jump_transfer_check(u, drivers[p]);
      rep.excess_jumps += t.excess;
      rep.missing_jumps += t.missing;
    }
  }
  rep.mean_max_increment = sum_max / static_cast<double>(ensemble.size());
  rep.mean_sup_norm2 = sum_sup / static_cast<double>(ensemble.size());
  rep.passed = std::isfinite(rep.max_increment) && rep.excess_jumps == 0 && rep.missing_jumps == 0;
  return rep;
}

}  // namespace volterra
