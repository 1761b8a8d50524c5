#include "volterra/positivity.hpp"

#include "volterra/elliptic.hpp"

#include <gtest/gtest.h>

using namespace volterra;

namespace {

// 7 * 256 steps so that t = i/7 are grid points.
const TimeGrid kSevenths(1.0, 1792);

std::vector<double> sevenths() {
  std::vector<double> t;
  for (int i = 0; i < 8; ++i) t.push_back(kSevenths[static_cast<std::size_t>(256 * i)]);
  return t;
}

}  // namespace

TEST(Gram, SingleSampleIsIdentity) {
  const auto t = matrix_resolvent(diagonal_operator({-1.0, -4.0}), fractional_kernel(0.5), 0.0, TimeGrid(1.0, 16));
  const auto rep = gram_positivity_check(t, 0.0, {0.0});
  EXPECT_TRUE(rep.passed);
  EXPECT_DOUBLE_EQ(rep.min_eigenvalue, 1.0);
  EXPECT_EQ(rep.block_dim, 2u);
}

TEST(Gram, DiagonalFractionalHalfIsPositive) {
  const auto t = matrix_resolvent(diagonal_operator({-1.0, -4.0}), fractional_kernel(0.5), 0.0, kSevenths);
  const auto rep = gram_positivity_check(t, 0.0, sevenths());
  EXPECT_TRUE(rep.passed) << rep.min_eigenvalue;
  EXPECT_GE(rep.min_eigenvalue, -1e-8 * rep.norm);
  EXPECT_EQ(rep.symmetry_defect, 0.0);
  EXPECT_TRUE(rep.witnesses.empty());
}

TEST(Gram, DirichletLaplacian) {
  const auto op = build_discrete_elliptic(1.0, 0.0, 0.0, 16, 0.0, pi, Boundary::dirichlet);
  const Matrix A = op.matrix.cast<cplx>();
  for (double beta : {0.5, 1.5}) {
    const auto t = matrix_resolvent(A, fractional_kernel(beta), 0.0, kSevenths);
    const auto rep = gram_positivity_check(t, 0.0, sevenths());
    EXPECT_TRUE(rep.passed) << beta << " " << rep.min_eigenvalue;
    EXPECT_LE(rep.symmetry_defect, 1e-10);
  }
}

TEST(Gram, NonNormalProbeFails) {
  // R(t) = I + t N with N nilpotent is not positive definite.
  const TimeGrid grid(1.0, 2);
  OperatorResolventTable probe{2, grid, 0.0, 0.0, {}};
  Matrix N = Matrix::Zero(2, 2);
  N(0, 1) = 5.0;
  for (std::size_t k = 0; k < grid.size(); ++k) probe.matrices.push_back(Matrix::Identity(2, 2) + grid[k] * N);
  const auto rep = gram_positivity_check(probe, 0.0, {0.0, 0.5, 1.0});
  EXPECT_LT(rep.min_eigenvalue, -1e-3);
  EXPECT_FALSE(rep.passed);
  ASSERT_FALSE(rep.witnesses.empty());
  EXPECT_EQ(rep.witnesses.front().eigenvalue, rep.min_eigenvalue);
}

TEST(Gram, LargerToleranceKeepsPass) {
  const auto t = matrix_resolvent(diagonal_operator({-1.0, -4.0}), fractional_kernel(1.5), 0.0, kSevenths);
  const auto base = gram_positivity_check(t, 0.0, sevenths(), 1e-9);
  ASSERT_TRUE(base.passed);
  for (double tol : {1e-8, 1e-4, 1.0}) EXPECT_TRUE(gram_positivity_check(t, 0.0, sevenths(), tol).passed);
}

TEST(Gram, ScalarOperatorConsistency) {
  const Kernel k = fractional_kernel(1.5);
  const std::vector<std::vector<double>> cases{{-1.0, -4.0}, {-0.5, -20.0}};
  for (const auto& lambdas : cases) {
    const auto op = gram_positivity_check(matrix_resolvent(diagonal_operator(lambdas), k, 0.0, kSevenths), 0.0, sevenths());
    bool all = true;
    for (double l : lambdas) {
      const auto s = scalar_resolvent(KernelGrid(k, kSevenths), -l);
      all = all && gram_positivity_check(scalar_table_as_operator(s), 0.0, sevenths()).passed;
    }
    EXPECT_EQ(op.passed, all);
  }
  // A non-sectorial eigenvalue breaks positivity in both views.
  Matrix A = diagonal_operator({-1.0, 0.0});
  const cplx bad = std::polar(60.0, 0.9 * pi);
  A(1, 1) = -bad;
  const auto op = gram_positivity_check(matrix_resolvent(A, k, 0.0, kSevenths), 0.0, sevenths());
  const auto scalar = gram_positivity_check(scalar_table_as_operator(scalar_resolvent(KernelGrid(k, kSevenths), bad)),
                                            0.0, sevenths());
  EXPECT_FALSE(scalar.passed);
  EXPECT_EQ(op.passed, scalar.passed);
}

TEST(Gram, Errors) {
  const TimeGrid grid(1.0, 8);
  const auto t = matrix_resolvent(diagonal_operator({-1.0}), constant_one_kernel(), 0.0, grid);
  EXPECT_THROW(gram_positivity_check(t, 0.0, {0.3}), std::invalid_argument);
  EXPECT_THROW(gram_positivity_check(t, 0.0, {}), std::invalid_argument);
  const OperatorResolventTable big{600, grid, 0.0, 0.0, {}};  // the cap is checked before any data is read
  EXPECT_THROW(gram_positivity_check(big, 0.0, equispaced_samples(grid, 8, 1.0)), std::invalid_argument);
  auto broken = t;
  broken.matrices[3](0, 0) = std::numeric_limits<double>::infinity();
  EXPECT_THROW(gram_positivity_check(broken, 0.0, {0.0, grid[3]}), NumericalError);
}

TEST(AngleBudget, FractionalHalf) {
  const auto cert = verify_admissibility(fractional_kernel(0.5), pi / 8);
  const auto b = angle_budget(pi / 8, cert);
  EXPECT_NEAR(b.beta, 3 * pi / 16, 1e-6);
  EXPECT_NEAR(b.alpha, 3.0 / 8.0, 1e-6);
}

TEST(AngleBudget, ConstantKernel) {
  const auto cert = verify_admissibility(constant_one_kernel(), 1e-12);
  const auto b = angle_budget(1e-12, cert);
  EXPECT_NEAR(b.beta, pi / 4, 1e-6);
  EXPECT_NEAR(b.alpha, 0.5, 1e-6);
}

TEST(AngleBudget, LinearKernelHasNone) {
  const auto cert = verify_admissibility(linear_t_kernel(), pi / 8);
  EXPECT_THROW(angle_budget(pi / 8, cert), NoBudgetError);
  SectorCertificate edge;
  edge.sigma = pi / 2;
  edge.phi = pi / 2;
  edge.passed = true;
  EXPECT_THROW(angle_budget(0.0, edge), NoBudgetError);
}

TEST(Bochner, TauZeroIsPoissonKernel) {
  const Kernel k = fractional_kernel(0.5);
  const auto b = angle_budget(pi / 8, verify_admissibility(k, pi / 8));
  const double w = 0.7;
  const auto rep = bochner_check(k, b, w, {0.0}, {0.0, 0.5, 3.0});
  EXPECT_TRUE(rep.passed);
  EXPECT_NEAR(rep.minimum, w / (w * w + 9.0), 1e-15);
}

TEST(Bochner, AdmissibleKernelsNonnegative) {
  const auto taus = symmetric_log_samples(33, 1e-3, 1e3);
  const auto xis = log_samples(33, 1e-3, 1e3);
  for (double beta : {0.5, 1.5}) {
    const Kernel k = fractional_kernel(beta);
    const auto cert = verify_admissibility(k, 0.1);
    const auto rep = bochner_check(k, angle_budget(0.1, cert), 0.0, taus, xis);
    EXPECT_TRUE(rep.passed) << beta;
    EXPECT_GE(rep.minimum, -1e-10);
    EXPECT_EQ(rep.evaluations, 33u * 33u);
  }
}

TEST(Bochner, WrongAngleProducesWitness) {
  // Pretending the dilation angle is large breaks positivity at some (tau, xi).
  const Kernel k = fractional_kernel(1.5);
  AngleBudget fake{1.4, 2.0 * 1.4 / pi, 0.0, pi, 0.0};
  const auto rep = bochner_check(k, fake, 0.0, symmetric_log_samples(33, 1e-3, 1e3), log_samples(33, 1e-3, 1e3));
  EXPECT_FALSE(rep.passed);
  EXPECT_LT(rep.minimum, 0.0);
  AngleBudget broken = fake;
  broken.sigma = 1.0;
  EXPECT_THROW(bochner_check(k, broken, 0.0, {1.0}, {1.0}), std::invalid_argument);
  EXPECT_THROW(bochner_check(k, fake, 0.0, {1.0}, {-1.0}), std::invalid_argument);
}

TEST(Bochner, PositiveSymbolImpliesPositiveGram) {
  const auto xis = log_samples(65, 1e-3, 1e4);
  const std::vector<double> lambdas{-1.0, -4.0};
  for (const Kernel& k : {fractional_kernel(0.5), fractional_kernel(1.5), constant_one_kernel()}) {
    bool symbol_ok = true;
    for (double l : lambdas) symbol_ok = symbol_ok && symbol_positivity_check(TransformView{&k, 0.0}, -l, 0.0, xis).passed;
    ASSERT_TRUE(symbol_ok) << k.name;
    const auto t = matrix_resolvent(diagonal_operator(lambdas), k, 0.0, kSevenths);
    EXPECT_TRUE(gram_positivity_check(t, 0.0, sevenths()).passed) << k.name;
  }
}
