#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <stdexcept>
#include <vector>

namespace volterra {

/// Nodes and weights of a rule for \int_0^1 y^gamma f(y) dy.
struct QuadratureRule {
  std::vector<double> nodes;
  std::vector<double> weights;

  template <class F>
  auto integrate(F&& f) const {
    decltype(f(0.5) * 1.0) acc{};
    for (std::size_t i = 0; i < nodes.size(); ++i) acc += weights[i] * f(nodes[i]);
    return acc;
  }
};

/// Gauss-Jacobi rule with weight y^gamma on [0, 1] via Golub-Welsch.
/// gamma = 0 gives Gauss-Legendre.
inline QuadratureRule gauss_jacobi_unit(int points, double gamma) {
  if (points < 1) throw std::invalid_argument("gauss_jacobi_unit: need at least one node");
  if (!(gamma > -1.0)) throw std::invalid_argument("gauss_jacobi_unit: gamma must exceed -1");

  // Jacobi weight (1-x)^alpha (1+x)^beta on [-1, 1] with alpha = 0, beta = gamma.
  const double alpha = 0.0;
  const double beta = gamma;
  const double ab = alpha + beta;

  Eigen::VectorXd diag(points);
  Eigen::VectorXd sub(points > 1 ? points - 1 : 0);
  for (int n = 0; n < points; ++n) {
    const double s = 2.0 * n + ab;
    diag(n) = (n == 0) ? (beta - alpha) / (ab + 2.0) : (beta * beta - alpha * alpha) / (s * (s + 2.0));
  }
  for (int n = 1; n < points; ++n) {
    const double s = 2.0 * n + ab;
    const double num = 4.0 * n * (n + alpha) * (n + beta) * (n + ab);
    const double den = s * s * (s + 1.0) * (s - 1.0);
    sub(n - 1) = std::sqrt(num / den);
  }

  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig;
  eig.computeFromTridiagonal(diag, sub, Eigen::ComputeEigenvectors);
  if (eig.info() != Eigen::Success) throw std::runtime_error("gauss_jacobi_unit: eigen solve failed");

  const double mu0 = std::exp((ab + 1.0) * std::log(2.0) + std::lgamma(alpha + 1.0) +
                              std::lgamma(beta + 1.0) - std::lgamma(ab + 2.0));
  // Map to [0, 1]: y = (1 + x)/2, (1+x)^gamma dx = 2^{gamma+1} y^gamma dy.
  const double scale = std::pow(2.0, -(gamma + 1.0));

  QuadratureRule rule;
  rule.nodes.resize(points);
  rule.weights.resize(points);
  for (int i = 0; i < points; ++i) {
    const double v0 = eig.eigenvectors()(0, i);
    rule.nodes[i] = 0.5 * (1.0 + eig.eigenvalues()(i));
    rule.weights[i] = mu0 * v0 * v0 * scale;
  }
  return rule;
}

}  // namespace volterra
