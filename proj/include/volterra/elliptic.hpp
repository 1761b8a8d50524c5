#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <functional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace volterra {

enum class Boundary { dirichlet, periodic };

inline Boundary parse_boundary(const std::string& name) {
  if (name == "dirichlet") return Boundary::dirichlet;
  if (name == "periodic") return Boundary::periodic;
  throw std::invalid_argument("unknown boundary condition '" + name + "'");
}

struct EllipticOperator {
  Eigen::MatrixXd matrix;
  std::vector<double> points;
  double h = 0.0;
  /// Bound on the numerical range: Re <Ax, x> <= rho |x|^2, the largest
  /// eigenvalue of the symmetric part.
  double rho = 0.0;
};

using Coefficient = std::function<double(double)>;

/// Central differences for A u = a u'' + b u' + c u on [x0, x1].
/// Dirichlet: `points` interior nodes x_i = x0 + i h, h = (x1 - x0)/(points + 1).
/// Periodic: nodes x_i = x0 + i h, i = 0..points-1, h = (x1 - x0)/points.
inline EllipticOperator build_discrete_elliptic(const Coefficient& a, const Coefficient& b, const Coefficient& c,
                                                std::size_t points, double x0, double x1, Boundary boundary,
                                                double delta = 0.0) {
  if (points < 3) throw std::invalid_argument("build_discrete_elliptic: need at least 3 grid points");
  if (!(x1 > x0)) throw std::invalid_argument("build_discrete_elliptic: empty interval");
  const auto m = static_cast<Eigen::Index>(points);
  EllipticOperator op;
  op.h = boundary == Boundary::dirichlet ? (x1 - x0) / static_cast<double>(points + 1)
                                         : (x1 - x0) / static_cast<double>(points);
  op.matrix = Eigen::MatrixXd::Zero(m, m);
  const double h = op.h;
  for (Eigen::Index i = 0; i < m; ++i) {
    const double x = boundary == Boundary::dirichlet ? x0 + static_cast<double>(i + 1) * h
                                                     : x0 + static_cast<double>(i) * h;
    op.points.push_back(x);
    const double ai = a(x), bi = b(x), ci = c(x);
    if (!(ai > 0.0) || ai < delta) {
      std::ostringstream msg;
      msg << "build_discrete_elliptic: ellipticity fails at x = " << x << " (a = " << ai << ")";
      throw std::invalid_argument(msg.str());
    }
    const double lower = ai / (h * h) - bi / (2.0 * h);
    const double upper = ai / (h * h) + bi / (2.0 * h);
    op.matrix(i, i) = -2.0 * ai / (h * h) + ci;
    if (i > 0) op.matrix(i, i - 1) = lower;
    else if (boundary == Boundary::periodic) op.matrix(i, m - 1) = lower;
    if (i + 1 < m) op.matrix(i, i + 1) = upper;
    else if (boundary == Boundary::periodic) op.matrix(i, 0) = upper;
  }
  const Eigen::MatrixXd sym = 0.5 * (op.matrix + op.matrix.transpose());
  op.rho = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd>(sym, Eigen::EigenvaluesOnly).eigenvalues().maxCoeff();
  return op;
}

inline EllipticOperator build_discrete_elliptic(double a, double b, double c, std::size_t points, double x0, double x1,
                                                Boundary boundary) {
  return build_discrete_elliptic([a](double) { return a; }, [b](double) { return b; }, [c](double) { return c; },
                                 points, x0, x1, boundary);
}

}  // namespace volterra
