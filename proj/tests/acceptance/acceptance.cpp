// Acceptance run: one PASS/FAIL line per criterion, exit status 0 iff all pass.

#include "volterra/commands.hpp"
#include "volterra/elliptic.hpp"
#include "volterra/positivity.hpp"
#include "volterra/stochastic.hpp"

#include "oracles/mittag_leffler.hpp"

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>

using namespace volterra;
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

struct Outcome {
  bool passed = true;
  std::string detail;

  void require(bool ok, const std::string& what) {
    passed = passed && ok;
    if (!detail.empty()) detail += "; ";
    detail += (ok ? "" : "FAILED ") + what;
  }
};

std::string num(double x, const char* fmt = "%.3g") {
  char buf[64];
  std::snprintf(buf, sizeof buf, fmt, x);
  return buf;
}

int failures = 0;

void criterion(int id, const char* title, const std::function<Outcome()>& body) {
  const auto t0 = Clock::now();
  Outcome o;
  try {
    o = body();
  } catch (const std::exception& e) {
    o.passed = false;
    o.detail = std::string("exception: ") + e.what();
  }
  if (!o.passed) ++failures;
  std::printf("[%s] %d %s (%.2fs): %s\n", o.passed ? "PASS" : "FAIL", id, title, seconds_since(t0), o.detail.c_str());
  std::fflush(stdout);
}

Outcome scalar_vs_mittag_leffler() {
  Outcome o;
  const TimeGrid grid(1.0, 2048);
  for (double beta : {0.5, 1.0, 1.5}) {
    const KernelGrid kg(fractional_kernel(beta), grid, 0.0);
    for (cplx mu : {cplx(1.0), cplx(2.0, 1.0)}) {
      const auto t0 = Clock::now();
      const auto table = scalar_resolvent(kg, mu);
      const double elapsed = seconds_since(t0);
      double err = 0.0;
      for (std::size_t k = 0; k < grid.size(); ++k)
        err = std::max(err, std::abs(table.values[k] - oracle::fractional_resolvent(beta, mu, grid[k])));
      const double tol = beta == 0.5 ? 1e-3 : 1e-4;
      o.require(err <= tol && elapsed < 1.0, "beta=" + num(beta) + " mu=" + num(mu.real()) + "+" + num(mu.imag()) +
                                                 "i err " + num(err) + " in " + num(elapsed) + "s");
    }
  }
  return o;
}

Outcome exponential_oracle() {
  Outcome o;
  const auto table = matrix_resolvent(diagonal_operator({-1.0}), constant_one_kernel(), 0.0, TimeGrid(1.0, 1024));
  const double err = (table.resolvent_at(table.grid.steps()) - std::exp(-1.0) * Matrix::Identity(1, 1)).norm();
  o.require(err <= 1e-4, "||S(1) - e^-1 I|| = " + num(err));
  return o;
}

// A = V D V^{-1} with cond(V) < 1e3 and eigenvalues in a sector around the negative axis.
Matrix random_diagonalizable(std::mt19937_64& rng, int d) {
  std::uniform_real_distribution<double> u(-1.0, 1.0), logr(std::log(0.5), std::log(5.0)), th(-pi / 3, pi / 3);
  for (;;) {
    Matrix V(d, d);
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) V(i, j) = cplx(u(rng), u(rng));
    Eigen::JacobiSVD<Matrix> svd(V);
    if (svd.singularValues()(0) / svd.singularValues()(d - 1) >= 1e3) continue;
    Vector D(d);
    for (int i = 0; i < d; ++i) D(i) = -std::polar(std::exp(logr(rng)), th(rng));
    return V * D.asDiagonal() * V.inverse();
  }
}

Outcome cross_method_random() {
  Outcome o;
  std::mt19937_64 rng(20240611);
  const TimeGrid grid(1.0, 1024);
  const KernelGrid kg(fractional_kernel(0.5), grid, 0.0);
  const auto t0 = Clock::now();
  double worst = 0.0;
  for (int trial = 0; trial < 10; ++trial) {
    const Matrix A = random_diagonalizable(rng, 4);
    worst = std::max(worst, sup_difference(matrix_resolvent(A, kg), spectral_resolvent(spectralize(A), kg)));
  }
  const double elapsed = seconds_since(t0);
  o.require(worst <= 1e-5, "max diff " + num(worst));
  o.require(elapsed < 10.0, "10 trials in " + num(elapsed) + "s");
  return o;
}

Outcome certificates() {
  Outcome o;
  const auto frac = verify_admissibility(fractional_kernel(0.5), pi / 8);
  o.require(frac.passed && std::abs(frac.sigma - pi / 4) <= 1e-6 && std::abs(frac.phi - 3 * pi / 4) <= 1e-6 &&
                std::abs(frac.c_reg - 0.5) <= 1e-6,
            "fractional 1/2: sigma " + num(frac.sigma, "%.9f") + " phi " + num(frac.phi, "%.9f") + " c " +
                num(frac.c_reg, "%.9f"));
  const auto lin = verify_admissibility(linear_t_kernel(), pi / 8);
  o.require(!lin.passed && !lin.violations.empty(), "a = t rejected with " + std::to_string(lin.violations.size()) +
                                                       " witnesses");
  const auto kv = verify_admissibility(kelvin_voigt_kernel(1.0, 1.0), 0.1);
  o.require(kv.passed && kv.w <= 1024.0, "Kelvin-Voigt passes at w = " + num(kv.w));
  return o;
}

Outcome laplace_bounds() {
  Outcome o;
  for (const Kernel& k : {fractional_kernel(0.5), fractional_kernel(1.5), kelvin_voigt_kernel(1.0, 1.0)}) {
    const double phiA = 0.1;
    const auto cert = verify_admissibility(k, phiA);
    const double psi = default_psi(cert);
    const auto mus = sector_samples(psi, 10, 10);
    const auto rep = laplace_bound_check(k, cert, psi, mus);
    o.require(rep.passed && mus.size() == 100 && rep.evaluations == 100u * 64u * 65u,
              k.name + ": K " + num(rep.k_measured) + " <= " + num(rep.k_theory) + ", " +
                  std::to_string(rep.violations.size()) + " violations");
  }
  return o;
}

Outcome positivity() {
  Outcome o;
  const TimeGrid grid(1.0, 1792);
  std::vector<double> times;
  for (int i = 0; i < 8; ++i) times.push_back(grid[static_cast<std::size_t>(256 * i)]);
  const Matrix lap = build_discrete_elliptic(1.0, 0.0, 0.0, 16, 0.0, pi, Boundary::dirichlet).matrix.cast<cplx>();
  for (const auto& [name, A] : {std::pair<std::string, Matrix>{"diag(-1,-4)", diagonal_operator({-1.0, -4.0})},
                                std::pair<std::string, Matrix>{"Dirichlet Laplacian", lap}}) {
    for (double beta : {0.5, 1.5}) {
      const auto rep = gram_positivity_check(matrix_resolvent(A, fractional_kernel(beta), 0.0, grid), 0.0, times);
      o.require(rep.min_eigenvalue >= -1e-8 * rep.norm,
                name + " beta=" + num(beta) + " min eig " + num(rep.min_eigenvalue) + " (||G|| " + num(rep.norm) + ")");
    }
  }
  const auto taus = symmetric_log_samples(33, 1e-3, 1e3);
  const auto xis = log_samples(33, 1e-3, 1e3);
  for (double beta : {0.5, 1.5}) {
    const Kernel k = fractional_kernel(beta);
    const auto rep = bochner_check(k, angle_budget(0.1, verify_admissibility(k, 0.1)), 0.0, taus, xis);
    o.require(rep.minimum >= -1e-10 && rep.evaluations == 33u * 33u,
              "Bochner beta=" + num(beta) + " min " + num(rep.minimum));
  }
  return o;
}

Outcome residual_convergence() {
  Outcome o;
  Matrix A(2, 2);
  A << -2.0, 1.0, 0.0, -3.0;
  const auto spec = spectralize(A);
  for (auto [beta, factor] : {std::pair{0.5, 2.0}, std::pair{1.0, 3.5}}) {
    const Kernel k = fractional_kernel(beta);
    const ScalarFunction exact = [beta = beta](cplx mu, double t) { return oracle::fractional_resolvent(beta, mu, t); };
    double res[2];
    int i = 0;
    for (std::size_t n : {512u, 2048u}) res[i++] = resolvent_residual(spectral_resolvent(spec, exact, 0.0, TimeGrid(1.0, n)), A, k);
    o.require(res[1] <= res[0] / factor, "beta=" + num(beta) + " residual " + num(res[0]) + " -> " + num(res[1]) +
                                             " (ratio " + num(res[0] / res[1]) + ", need " + num(factor) + ")");
  }
  return o;
}

Outcome stochastic() {
  Outcome o;
  const auto t0 = Clock::now();
  Matrix A(2, 2);
  A << -1.0, 0.5, 0.0, -4.0;
  const Kernel k = fractional_kernel(0.5);

  {
    const TimeGrid grid(1.0, 256);
    const auto table = matrix_resolvent(A, k, 0.0, grid);
    NoiseSpec spec;
    spec.poisson_rate = 5.0;
    std::size_t jumps = 0, matched = 0, ok = 0;
    const std::size_t N = 10000;
    for (std::size_t s = 0; s < N; ++s) {
      const auto L = simulate_noise(spec, 2, grid, derive_seed(8, s));
      const auto rep = jump_transfer_check(stochastic_convolution(table, L, Vector::Zero(2), &k), L);
      jumps += rep.jumps, matched += rep.matched, ok += rep.passed ? 1 : 0;
    }
    o.require(ok == N && matched == jumps, "jump transfer " + std::to_string(matched) + "/" + std::to_string(jumps) +
                                               " over " + std::to_string(N) + " paths");
  }
  {
    const TimeGrid grid(1.0, 2048);
    const auto table = matrix_resolvent(A, k, 0.0, grid);
    NoiseSpec spec;
    spec.brownian_covariance = RealMatrix::Identity(2, 2);
    spec.poisson_rate = 5.0;
    Vector u0(2);
    u0 << 1.0, 0.0;
    double worst = 0.0;
    for (std::uint64_t s = 0; s < 3; ++s) {
      const auto L = simulate_noise(spec, 2, grid, derive_seed(9, s));
      worst = std::max(worst, weak_solution_residual(stochastic_convolution(table, L, u0, &k), L, u0, k, A));
    }
    o.require(worst <= 5e-3, "weak residual " + num(worst) + " at n = 2048");
  }
  {
    const TimeGrid grid(1.0, 64);
    RealMatrix Q(2, 2);
    Q << 1.0, 0.3, 0.3, 0.5;
    const std::size_t N = 10000;
    double sum = 0.0, sum2 = 0.0;
    for (std::size_t s = 0; s < N; ++s) {
      const double r2 = simulate_brownian(Q, grid, derive_seed(10, s)).continuous_part.back().squaredNorm();
      sum += r2, sum2 += r2 * r2;
    }
    const double mean = sum / N;
    const double se = std::sqrt((sum2 / N - mean * mean) / (N - 1));
    const double target = grid.horizon() * Q.trace();
    o.require(std::abs(mean - target) <= 4.0 * se,
              "E|L(T)|^2 " + num(mean, "%.4f") + " vs " + num(target) + " (" + num(std::abs(mean - target) / se) + " SE)");
  }
  const double elapsed = seconds_since(t0);
  o.require(elapsed < 60.0, "total " + num(elapsed) + "s");
  return o;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

Outcome determinism() {
  Outcome o;
  const fs::path configs = VOLTERRA_CONFIG_DIR;
  const fs::path root = fs::temp_directory_path() / "volterra_acceptance";
  const std::vector<std::pair<std::string, std::string>> runs{
      {"verify-kernel", "fractional_half.json"},   {"resolvent", "fractional_half.json"},
      {"check-positivity", "positivity_laplacian.json"}, {"simulate", "simulate_mixed.json"},
      {"simulate", "simulate_poisson.json"}};
  std::ostringstream sink;
  std::size_t compared = 0;
  for (const auto& [command, config] : runs) {
    std::string bytes[2];
    for (int rep = 0; rep < 2; ++rep) {
      const fs::path out = root / (std::to_string(rep) + "_" + command + "_" + config);
      fs::remove_all(out);
      CommandOptions opts;
      opts.config = configs / config;
      opts.out = out.string();
      auto ctx = make_context(opts);
      ctx.log = &sink;
      if (command == "verify-kernel") cmd_verify_kernel(ctx);
      else if (command == "resolvent") cmd_resolvent(ctx);
      else if (command == "check-positivity") cmd_check_positivity(ctx);
      else cmd_simulate(ctx);
      for (const auto& e : fs::directory_iterator(out))
        if (e.path().extension() == ".json") bytes[rep] += e.path().filename().string() + "\n" + slurp(e.path());
    }
    ++compared;
    o.require(!bytes[0].empty() && bytes[0] == bytes[1], command + " " + config);
  }
  fs::remove_all(root);
  o.detail = std::to_string(compared) + " config runs byte-identical: " + o.detail;
  return o;
}

}  // namespace

int main() {
  criterion(1, "scalar resolvent vs Mittag-Leffler", scalar_vs_mittag_leffler);
  criterion(2, "constant kernel exponential", exponential_oracle);
  criterion(3, "matrix vs spectral on random 4x4", cross_method_random);
  criterion(4, "kernel certificates", certificates);
  criterion(5, "Laplace-domain bound 2 M1 + M2", laplace_bounds);
  criterion(6, "Gram and Bochner positivity", positivity);
  criterion(7, "resolvent residual convergence", residual_convergence);
  criterion(8, "stochastic checks", stochastic);
  criterion(9, "determinism", determinism);
  std::printf("%s: %d of 9 criteria failed\n", failures == 0 ? "ALL PASS" : "FAILURES", failures);
  return failures == 0 ? 0 : 1;
}
