#pragma once

#include "volterra/error.hpp"
#include "volterra/kernel_grid.hpp"
#include "volterra/parallel.hpp"
#include "volterra/scalar_resolvent.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <complex>
#include <functional>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace volterra {

using Matrix = Eigen::MatrixXcd;
using Vector = Eigen::VectorXcd;

/// Sampled operator resolvent. matrices[k] holds S_{w,A}(t_k); the resolvent
/// itself is e^{w t_k} matrices[k]. When rho != 0 the table was built for the
/// shifted pair (s, A - rho) with s solving s - rho a*s = a.
struct OperatorResolventTable {
  std::size_t dim = 0;
  TimeGrid grid;
  double w = 0.0;
  double rho = 0.0;
  std::vector<Matrix> matrices;

  Matrix resolvent_at(std::size_t k) const { return std::exp(w * grid[k]) * matrices[k]; }

  /// Same data with the e^{wt} factor applied, so the stored values are S(t_k).
  OperatorResolventTable rescaled() const {
    OperatorResolventTable out = *this;
    out.w = 0.0;
    for (std::size_t k = 0; k < matrices.size(); ++k) out.matrices[k] = resolvent_at(k);
    return out;
  }
};

namespace detail {

inline void require_square_finite(const Matrix& A, const char* who) {
  if (A.rows() != A.cols() || A.rows() == 0)
    throw std::invalid_argument(std::string(who) + ": operator must be a non-empty square matrix");
  if (!A.allFinite()) throw std::invalid_argument(std::string(who) + ": operator has non-finite entries");
}

inline double operator_norm(const Matrix& M) {
  if (M.size() == 0) return 0.0;
  Eigen::JacobiSVD<Matrix> svd(M);
  return svd.singularValues()(0);
}

// Combined history weights omega[m] = near[m] + far[m-1] for m >= 1.
inline std::vector<double> interior_weights(const KernelGrid& kg) {
  std::vector<double> omega(kg.near().size(), 0.0);
  for (std::size_t m = 1; m < omega.size(); ++m) omega[m] = kg.near()[m] + kg.far()[m - 1];
  return omega;
}

// acc += c * src over `len` complex entries, treating them as interleaved doubles.
inline void axpy(double c, const cplx* src, cplx* acc, std::size_t len) {
  const double* s = reinterpret_cast<const double*>(src);
  double* a = reinterpret_cast<double*>(acc);
  for (std::size_t e = 0; e < 2 * len; ++e) a[e] += c * s[e];
}

// sum_{j<k} W_kj P_j for a flat array of d2-sized blocks P_0..P_{k-1}.
inline void history_blocks(const KernelGrid& kg, const std::vector<double>& omega, const std::vector<cplx>& prod,
                           std::size_t d2, std::size_t k, cplx* acc) {
  std::fill(acc, acc + d2, cplx(0.0));
  if (k == 0) return;
  axpy(kg.far()[k - 1], prod.data(), acc, d2);
  for (std::size_t m = 1; m < k; ++m) axpy(omega[m], prod.data() + (k - m) * d2, acc, d2);
}

}  // namespace detail

/// Direct solve of S_k = e^{-w t_k} I + sum_j W_kj (A - rho) S_j, one linear
/// solve per step with the diagonal weight treated implicitly. The kernel grid
/// carries w and, if shifted, rho.
inline OperatorResolventTable matrix_resolvent(const Matrix& A, const KernelGrid& kg) {
  detail::require_square_finite(A, "matrix_resolvent");
  const auto d = static_cast<std::size_t>(A.rows());
  const std::size_t d2 = d * d;
  const auto& grid = kg.grid();
  const Matrix B = A - kg.rho() * Matrix::Identity(d, d);
  const Matrix step = Matrix::Identity(d, d) - kg.near()[0] * B;
  const Eigen::PartialPivLU<Matrix> lu(step);
  if (!(lu.rcond() > 1e-14)) throw StepSingularityError(1, "matrix_resolvent: step matrix I - w_kk (A - rho) is singular");

  OperatorResolventTable table{d, grid, kg.damping(), kg.rho(), std::vector<Matrix>(grid.size())};
  table.matrices[0] = Matrix::Identity(d, d);
  std::vector<cplx> prod(grid.size() * d2);
  Eigen::Map<Matrix>(prod.data(), d, d) = B;
  const auto omega = detail::interior_weights(kg);
  Matrix rhs(d, d);
  for (std::size_t k = 1; k < grid.size(); ++k) {
    detail::history_blocks(kg, omega, prod, d2, k, rhs.data());
    rhs.diagonal().array() += std::exp(-kg.damping() * grid[k]);
    table.matrices[k] = lu.solve(rhs);
    if (!table.matrices[k].allFinite())
      throw StepSingularityError(k, "matrix_resolvent: non-finite value at step " + std::to_string(k));
    Eigen::Map<Matrix>(prod.data() + k * d2, d, d) = B * table.matrices[k];
  }
  return table;
}

inline OperatorResolventTable matrix_resolvent(const Matrix& A, const Kernel& kernel, double w, const TimeGrid& grid,
                                               double rho = 0.0) {
  KernelGrid kg(kernel, grid, w);
  if (rho != 0.0) kg = shift_kernel(kg, rho);
  return matrix_resolvent(A, kg);
}

/// Eigen-decomposition A = V diag(lambda) V^{-1}.
struct Spectralization {
  Vector eigenvalues;
  Matrix vectors;
  Matrix inverse;  // empty when the eigenbasis is numerically singular
  double condition_number = std::numeric_limits<double>::infinity();
};

inline Spectralization spectralize(const Matrix& A) {
  detail::require_square_finite(A, "spectralize");
  Eigen::ComplexEigenSolver<Matrix> es(A);
  if (es.info() != Eigen::Success) throw NumericalError("spectralize: eigenvalue iteration did not converge");
  Spectralization s;
  s.eigenvalues = es.eigenvalues();
  s.vectors = es.eigenvectors();
  const double residual = (A * s.vectors - s.vectors * s.eigenvalues.asDiagonal()).norm();
  if (residual > 1e-8 * std::max(A.norm(), std::numeric_limits<double>::min()) && residual > 0.0)
    throw NumericalError("spectralize: eigenpair residual " + std::to_string(residual) + " too large");
  Eigen::JacobiSVD<Matrix> svd(s.vectors);
  const auto& sv = svd.singularValues();
  const double smallest = sv(sv.size() - 1);
  if (smallest > 0.0) {
    s.condition_number = sv(0) / smallest;
    if (std::isfinite(s.condition_number) && s.condition_number < 1e15) s.inverse = s.vectors.inverse();
  }
  return s;
}

inline constexpr double max_eigenbasis_condition = 1e8;

/// s_{w,mu}(t) supplied by the caller; used to build a spectral table from
/// scalar functions computed outside the product-quadrature solver.
using ScalarFunction = std::function<cplx(cplx mu, double t)>;

namespace detail {

inline void require_conditioned(const Spectralization& spec) {
  if (!(spec.condition_number <= max_eigenbasis_condition) || spec.inverse.size() == 0)
    throw IllConditionedError(spec.condition_number, "spectral_resolvent: eigenbasis condition number " +
                                                         std::to_string(spec.condition_number) + " exceeds 1e8");
}

inline OperatorResolventTable assemble_spectral(const Spectralization& spec, const TimeGrid& grid, double w, double rho,
                                                const std::vector<std::vector<cplx>>& scalar) {
  const auto d = static_cast<std::size_t>(spec.eigenvalues.size());
  OperatorResolventTable table{d, grid, w, rho, std::vector<Matrix>(grid.size())};
  Vector diag(d);
  for (std::size_t k = 0; k < grid.size(); ++k) {
    for (std::size_t i = 0; i < d; ++i) diag(i) = scalar[i][k];
    table.matrices[k] = spec.vectors * diag.asDiagonal() * spec.inverse;
  }
  // S(0) = I holds exactly, not just up to V V^{-1} rounding.
  table.matrices[0] = Matrix::Identity(d, d);
  return table;
}

}  // namespace detail

/// matrices[k] = V diag(s_{w,-(lambda_i - rho)}(t_k)) V^{-1} with one scalar solve per eigenvalue.
inline OperatorResolventTable spectral_resolvent(const Spectralization& spec, const KernelGrid& kg, unsigned threads = 1) {
  detail::require_conditioned(spec);
  const auto d = static_cast<std::size_t>(spec.eigenvalues.size());
  std::vector<std::vector<cplx>> scalar(d);
  parallel_for(d, threads, [&](std::size_t i) {
    scalar[i] = scalar_resolvent(kg, -(spec.eigenvalues(i) - kg.rho())).values;
  });
  return detail::assemble_spectral(spec, kg.grid(), kg.damping(), kg.rho(), scalar);
}

inline OperatorResolventTable spectral_resolvent(const Spectralization& spec, const Kernel& kernel, double w,
                                                 const TimeGrid& grid, unsigned threads = 1) {
  return spectral_resolvent(spec, KernelGrid(kernel, grid, w), threads);
}

/// Spectral table from an externally supplied scalar family: s(mu, t) must
/// return s_{w,mu}(t) for mu = -lambda_i.
inline OperatorResolventTable spectral_resolvent(const Spectralization& spec, const ScalarFunction& s, double w,
                                                 const TimeGrid& grid) {
  detail::require_conditioned(spec);
  const auto d = static_cast<std::size_t>(spec.eigenvalues.size());
  std::vector<std::vector<cplx>> scalar(d, std::vector<cplx>(grid.size()));
  for (std::size_t i = 0; i < d; ++i)
    for (std::size_t k = 0; k < grid.size(); ++k) scalar[i][k] = s(-spec.eigenvalues(i), grid[k]);
  return detail::assemble_spectral(spec, grid, w, 0.0, scalar);
}

/// max over k and basis vectors x of |S_k x - e^{-w t_k} x - sum_j W_kj (A - rho) S_j x|
/// with the product-quadrature weights of `kg`.
inline double resolvent_residual(const OperatorResolventTable& table, const Matrix& A, const KernelGrid& kg) {
  detail::require_square_finite(A, "resolvent_residual");
  const auto d = static_cast<std::size_t>(A.rows());
  if (table.dim != d || table.matrices.empty() || static_cast<std::size_t>(table.matrices[0].rows()) != d)
    throw std::invalid_argument("resolvent_residual: table and operator dimensions differ");
  if (!(table.grid == kg.grid())) throw std::invalid_argument("resolvent_residual: grid mismatch");
  const std::size_t d2 = d * d;
  const Matrix B = A - kg.rho() * Matrix::Identity(d, d);
  const auto& grid = kg.grid();
  std::vector<cplx> prod(grid.size() * d2);
  for (std::size_t k = 0; k < grid.size(); ++k)
    Eigen::Map<Matrix>(prod.data() + k * d2, d, d) = B * table.matrices[k];
  const auto omega = detail::interior_weights(kg);
  Matrix defect(d, d);
  double worst = (table.matrices[0] - Matrix::Identity(d, d)).colwise().norm().maxCoeff();
  for (std::size_t k = 1; k < grid.size(); ++k) {
    detail::history_blocks(kg, omega, prod, d2, k, defect.data());
    defect += kg.near()[0] * Eigen::Map<const Matrix>(prod.data() + k * d2, d, d);
    defect = table.matrices[k] - defect;
    defect.diagonal().array() -= std::exp(-kg.damping() * grid[k]);
    worst = std::max(worst, defect.colwise().norm().maxCoeff());
  }
  return worst;
}

inline double resolvent_residual(const OperatorResolventTable& table, const Matrix& A, const Kernel& kernel) {
  KernelGrid kg(kernel, table.grid, table.w);
  if (table.rho != 0.0) kg = shift_kernel(kg, table.rho);
  return resolvent_residual(table, A, kg);
}

/// sup_k ||M_k - N_k||_F.
inline double sup_difference(const OperatorResolventTable& a, const OperatorResolventTable& b) {
  if (a.dim != b.dim || !(a.grid == b.grid)) throw std::invalid_argument("sup_difference: tables are not comparable");
  double worst = 0.0;
  for (std::size_t k = 0; k < a.matrices.size(); ++k)
    worst = std::max(worst, (a.matrices[k] - b.matrices[k]).norm());
  return worst;
}

/// max_k ||A S_k - S_k A|| / (||A|| ||S_k||), operator 2-norms; 0 when A = 0.
inline double commutation_defect(const OperatorResolventTable& table, const Matrix& A) {
  const double na = detail::operator_norm(A);
  if (na == 0.0) return 0.0;
  double worst = 0.0;
  for (const auto& S : table.matrices) {
    const double ns = detail::operator_norm(S);
    if (ns == 0.0) continue;
    worst = std::max(worst, detail::operator_norm(A * S - S * A) / (na * ns));
  }
  return worst;
}

/// S(x) for off-grid x in [0, T], interpolated between the rescaled grid
/// matrices. The first cell uses the profile K(x)/K(h), K(x) = \int_0^x a, when a
/// kernel with a power-law factor is supplied, since S(x) = I + A K(x) + O(K^2)
/// there; every other cell is linear.
inline Matrix interpolate(const OperatorResolventTable& table, double x, const Kernel* kernel = nullptr) {
  const auto& grid = table.grid;
  if (x < 0.0 || x > grid.horizon() * (1.0 + 1e-14))
    throw std::invalid_argument("interpolate: offset outside [0, T]");
  const std::size_t k = grid.cell_of(x);
  double theta = (x - grid[k]) / grid.dt();
  if (k == 0 && kernel != nullptr && kernel->power_exponent != 0.0) {
    const double kh = kernel->integral_to(grid.dt());
    if (kh != 0.0) theta = kernel->integral_to(x) / kh;
  }
  theta = std::clamp(theta, 0.0, 1.0);
  if (theta == 0.0) return table.resolvent_at(k);
  if (theta == 1.0) return table.resolvent_at(k + 1);
  return (1.0 - theta) * table.resolvent_at(k) + theta * table.resolvent_at(k + 1);
}

inline Matrix diagonal_operator(const std::vector<double>& entries) {
  Matrix A = Matrix::Zero(static_cast<Eigen::Index>(entries.size()), static_cast<Eigen::Index>(entries.size()));
  for (std::size_t i = 0; i < entries.size(); ++i) A(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i)) = entries[i];
  return A;
}

}  // namespace volterra
