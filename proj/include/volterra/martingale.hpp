#pragma once

#include "volterra/time_grid.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace volterra {

using RealVector = Eigen::VectorXd;
using RealMatrix = Eigen::MatrixXd;

/// Counter-based seed derivation: stream `index` of `master`.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) {
  std::uint64_t z = master + 0x9E3779B97F4A7C15ull * (index + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

struct Jump {
  double time = 0.0;
  RealVector size;
};

/// Cadlag path stored as continuous samples on the grid plus an explicit jump
/// list; the value at t is the linear interpolant of the continuous part plus
/// the jumps with time <= t.
struct MartingalePath {
  TimeGrid grid;
  std::size_t dim = 0;
  std::vector<RealVector> continuous_part;
  std::vector<Jump> jumps;  // sorted by time, all in (0, T]
  std::uint64_t seed = 0;

  RealVector continuous_at(double t) const {
    const std::size_t k = grid.cell_of(t);
    const double theta = std::clamp((t - grid[k]) / grid.dt(), 0.0, 1.0);
    return (1.0 - theta) * continuous_part[k] + theta * continuous_part[k + 1];
  }

  RealVector jumps_through(double t, bool inclusive = true) const {
    RealVector s = RealVector::Zero(static_cast<Eigen::Index>(dim));
    for (const auto& j : jumps) {
      if (j.time < t || (inclusive && j.time == t)) s += j.size;
      else break;
    }
    return s;
  }

  RealVector value_at(double t) const { return continuous_at(t) + jumps_through(t, true); }
  RealVector left_limit(double t) const { return continuous_at(t) + jumps_through(t, false); }
  RealVector node_value(std::size_t k) const { return continuous_part[k] + jumps_through(grid[k], true); }
};

inline MartingalePath zero_path(const TimeGrid& grid, std::size_t dim, std::uint64_t seed = 0) {
  return {grid, dim, std::vector<RealVector>(grid.size(), RealVector::Zero(static_cast<Eigen::Index>(dim))), {}, seed};
}

/// Inserts a deterministic jump, keeping the list sorted.
inline void inject_jump(MartingalePath& path, double time, const RealVector& size) {
  if (!(time > 0.0) || time > path.grid.horizon()) throw std::invalid_argument("inject_jump: time must lie in (0, T]");
  if (static_cast<std::size_t>(size.size()) != path.dim) throw std::invalid_argument("inject_jump: dimension mismatch");
  const auto pos = std::upper_bound(path.jumps.begin(), path.jumps.end(), time,
                                    [](double t, const Jump& j) { return t < j.time; });
  path.jumps.insert(pos, Jump{time, size});
}

/// alpha * a + b, path by path.
inline MartingalePath combine_paths(double alpha, const MartingalePath& a, const MartingalePath& b) {
  if (!(a.grid == b.grid) || a.dim != b.dim) throw std::invalid_argument("combine_paths: paths are not compatible");
  MartingalePath out = b;
  for (std::size_t k = 0; k < out.continuous_part.size(); ++k) out.continuous_part[k] += alpha * a.continuous_part[k];
  for (const auto& j : a.jumps) inject_jump(out, j.time, alpha * j.size);
  return out;
}

enum class JumpLawType { rademacher, gaussian, constant };

/// Jump size law. rademacher: independent +-amplitude per component;
/// gaussian: N(0, amplitude^2 I); constant: amplitude in every component
/// (not mean-zero, so the compensator is active).
struct JumpLaw {
  JumpLawType type = JumpLawType::rademacher;
  double amplitude = 1.0;

  RealVector mean(std::size_t dim) const {
    const auto d = static_cast<Eigen::Index>(dim);
    return type == JumpLawType::constant ? RealVector::Constant(d, amplitude) : RealVector::Zero(d);
  }

  template <class Rng>
  RealVector sample(Rng& rng, std::size_t dim) const {
    RealVector z(static_cast<Eigen::Index>(dim));
    for (Eigen::Index i = 0; i < z.size(); ++i) {
      switch (type) {
        case JumpLawType::rademacher:
          z(i) = (rng() >> 63) ? amplitude : -amplitude;
          break;
        case JumpLawType::gaussian:
          z(i) = amplitude * std::normal_distribution<double>(0.0, 1.0)(rng);
          break;
        case JumpLawType::constant:
          z(i) = amplitude;
          break;
      }
    }
    return z;
  }
};

inline JumpLawType parse_jump_law(const std::string& name) {
  if (name == "rademacher") return JumpLawType::rademacher;
  if (name == "gaussian") return JumpLawType::gaussian;
  if (name == "constant") return JumpLawType::constant;
  throw std::invalid_argument("unknown jump law '" + name + "'");
}

struct NoiseSpec {
  std::optional<RealMatrix> brownian_covariance;
  double poisson_rate = 0.0;
  JumpLaw jump_law;
};

/// Symmetric square root of a PSD matrix; rejects min eigenvalue < -1e-12 ||Q||.
inline RealMatrix psd_factor(const RealMatrix& Q) {
  if (Q.rows() != Q.cols()) throw std::invalid_argument("covariance must be square");
  if (!Q.allFinite()) throw std::invalid_argument("covariance has non-finite entries");
  if ((Q - Q.transpose()).cwiseAbs().maxCoeff() > 1e-12 * std::max(1.0, Q.cwiseAbs().maxCoeff()))
    throw std::invalid_argument("covariance must be symmetric");
  const Eigen::SelfAdjointEigenSolver<RealMatrix> es(0.5 * (Q + Q.transpose()));
  const auto& ev = es.eigenvalues();
  const double scale = ev.cwiseAbs().maxCoeff();
  if (ev.minCoeff() < -1e-12 * scale) throw std::invalid_argument("covariance is not positive semidefinite");
  // Round-off eigenvalues would turn into sqrt-sized leakage off the range of Q.
  const RealVector root = ev.unaryExpr([&](double l) { return l > 1e-12 * scale ? std::sqrt(l) : 0.0; });
  return es.eigenvectors() * root.asDiagonal() * es.eigenvectors().transpose();
}

/// Q-Wiener increments F z sqrt(dt), F the symmetric factor of Q.
inline MartingalePath simulate_brownian(const RealMatrix& Q, const TimeGrid& grid, std::uint64_t seed) {
  const RealMatrix F = psd_factor(Q);
  const auto dim = static_cast<std::size_t>(Q.rows());
  MartingalePath path = zero_path(grid, dim, seed);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  const double sq = std::sqrt(grid.dt());
  RealVector z(static_cast<Eigen::Index>(dim));
  for (std::size_t k = 0; k + 1 < grid.size(); ++k) {
    for (Eigen::Index i = 0; i < z.size(); ++i) z(i) = normal(rng);
    path.continuous_part[k + 1] = path.continuous_part[k] + sq * (F * z);
  }
  return path;
}

/// Compound Poisson jumps on (0, T] with the compensator -t rate E[J] folded
/// into the continuous part.
inline MartingalePath simulate_compound_poisson(double rate, const JumpLaw& law, std::size_t dim, const TimeGrid& grid,
                                                std::uint64_t seed) {
  if (!(rate >= 0.0) || !std::isfinite(rate)) throw std::invalid_argument("simulate_compound_poisson: invalid rate");
  if (dim == 0) throw std::invalid_argument("simulate_compound_poisson: dimension must be positive");
  MartingalePath path = zero_path(grid, dim, seed);
  if (rate == 0.0) return path;
  std::mt19937_64 rng(seed);
  const double T = grid.horizon();
  const long count = std::poisson_distribution<long>(rate * T)(rng);
  std::uniform_real_distribution<double> uniform(0.0, T);
  std::vector<double> times;
  for (long i = 0; i < count; ++i) times.push_back(T - uniform(rng));  // (0, T]
  std::sort(times.begin(), times.end());
  for (double t : times) path.jumps.push_back({t, law.sample(rng, dim)});
  const RealVector drift = -rate * law.mean(dim);
  if (drift.squaredNorm() > 0.0)
    for (std::size_t k = 0; k < grid.size(); ++k) path.continuous_part[k] = grid[k] * drift;
  return path;
}

/// Brownian part and jump part drawn from independent streams of `seed`.
inline MartingalePath simulate_noise(const NoiseSpec& spec, std::size_t dim, const TimeGrid& grid, std::uint64_t seed) {
  MartingalePath path = zero_path(grid, dim, seed);
  if (spec.brownian_covariance) {
    if (static_cast<std::size_t>(spec.brownian_covariance->rows()) != dim)
      throw std::invalid_argument("simulate_noise: covariance dimension mismatch");
    path = combine_paths(1.0, simulate_brownian(*spec.brownian_covariance, grid, derive_seed(seed, 0)), path);
  }
  if (spec.poisson_rate > 0.0)
    path = combine_paths(1.0, simulate_compound_poisson(spec.poisson_rate, spec.jump_law, dim, grid, derive_seed(seed, 1)),
                         path);
  path.seed = seed;
  return path;
}

}  // namespace volterra
