#pragma once

#include "volterra/config.hpp"
#include "volterra/io.hpp"
#include "volterra/parallel.hpp"

#include <algorithm>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

namespace volterra {

enum ExitCode : int { exit_pass = 0, exit_check_failed = 1, exit_usage = 2 };

/// Command-line overrides applied on top of the config file.
struct CommandOptions {
  std::optional<std::filesystem::path> config;
  std::optional<std::string> out;
  std::optional<std::uint64_t> seed;
  std::optional<unsigned> threads;
  bool force = false;
};

struct CommandContext {
  ExperimentConfig cfg;
  std::filesystem::path out;
  bool force = false;
  std::ostream* log = &std::cout;
};

inline CommandContext make_context(const CommandOptions& opts, bool config_required = true) {
  CommandContext ctx;
  if (opts.config) ctx.cfg = load_config(*opts.config);
  else if (config_required) throw ConfigError("--config is required for this subcommand");
  if (opts.seed) ctx.cfg.seed = *opts.seed;
  if (opts.threads) ctx.cfg.threads = std::max(1u, *opts.threads);
  if (opts.out) ctx.cfg.output = *opts.out;
  ctx.out = ctx.cfg.output;
  ctx.force = opts.force;
  return ctx;
}

namespace detail {

inline Json settings_json(const ExperimentConfig& cfg) {
  const auto& t = cfg.tolerances;
  Json kernel = {{"type", cfg.kernel.type}};
  for (const auto& [k, v] : cfg.kernel.params) kernel[k] = v;
  return {{"kernel", std::move(kernel)},
          {"phiA_bound", cfg.phiA_bound},
          {"rho", cfg.rho},
          {"grid", {{"T", cfg.horizon}, {"n", cfg.steps}}},
          {"seed", cfg.seed},
          {"tolerances",
           {{"resolvent_residual", t.resolvent_residual},
            {"cross_method", t.cross_method},
            {"weak_residual", t.weak_residual},
            {"gram_relative", t.gram_relative},
            {"bochner", t.bochner}}},
          {"certification",
           {{"ladder", cfg.ladder},
            {"moduli", cfg.sampling.moduli},
            {"angles", cfg.sampling.angles},
            {"min_modulus", cfg.sampling.min_modulus},
            {"max_modulus", cfg.sampling.max_modulus},
            {"boundary_inset", cfg.sampling.boundary_inset}}}};
}

inline Matrix require_operator(const ExperimentConfig& cfg, const char* command) {
  if (!cfg.op) throw ConfigError(std::string(command) + ": config has no 'operator'");
  return cfg.op->cast<cplx>();
}

inline SectorCertificate certify(const ExperimentConfig& cfg, const Kernel& kernel) {
  return verify_admissibility(kernel, cfg.phiA_bound, cfg.sampling, cfg.ladder, cfg.rho);
}

// Certificate gate shared by the commands that need an admissible kernel.
inline bool admitted(const CommandContext& ctx, const SectorCertificate& cert, const char* command) {
  if (cert.passed) return true;
  if (ctx.force) {
    *ctx.log << command << ": kernel certificate failed, continuing because of --force\n";
    return true;
  }
  std::cerr << command << ": kernel certificate failed (" << cert.violations.size()
            << " violations); rerun with --force to proceed\n";
  return false;
}

inline double resolvent_w(const ExperimentConfig& cfg, const SectorCertificate& cert) {
  if (cfg.w) return *cfg.w;
  return cert.passed ? cert.w : 0.0;
}

inline Json certificate_summary(const SectorCertificate& cert) {
  return {{"passed", cert.passed}, {"w", cert.w}, {"sigma", cert.sigma}, {"phi", cert.phi}, {"c", cert.c_reg}};
}

inline void prepare_output(const std::filesystem::path& out) {
  std::error_code ec;
  std::filesystem::create_directories(out, ec);
  if (ec) throw ConfigError("cannot create output directory '" + out.string() + "': " + ec.message());
}

inline bool enabled(const ExperimentConfig& cfg, const std::string& check, bool fallback) {
  if (!cfg.checks) return fallback;
  return std::find(cfg.checks->begin(), cfg.checks->end(), check) != cfg.checks->end();
}

}  // namespace detail

/// Writes certificate.json; passes iff the kernel is admissible.
inline int cmd_verify_kernel(const CommandContext& ctx) {
  const Kernel kernel = ctx.cfg.build_kernel();
  const auto cert = detail::certify(ctx.cfg, kernel);
  detail::prepare_output(ctx.out);
  Json j = to_json(cert);
  j["command"] = "verify-kernel";
  j["kernel"] = kernel.name;
  j["settings"] = detail::settings_json(ctx.cfg);
  write_json(ctx.out / "certificate.json", j);
  *ctx.log << "verify-kernel: " << kernel.name << (cert.passed ? " admissible" : " NOT admissible")
           << " sigma=" << format_double(cert.sigma) << " phi=" << format_double(cert.phi)
           << " c=" << format_double(cert.c_reg) << " w=" << format_double(cert.w) << '\n';
  return cert.passed ? exit_pass : exit_check_failed;
}

/// Direct and (when the eigenbasis allows) spectral tables, their residuals
/// and the cross-method difference.
inline int cmd_resolvent(const CommandContext& ctx) {
  const auto& cfg = ctx.cfg;
  const Matrix A = detail::require_operator(cfg, "resolvent");
  const Kernel kernel = cfg.build_kernel();
  const auto cert = detail::certify(cfg, kernel);
  if (!detail::admitted(ctx, cert, "resolvent")) return exit_check_failed;
  detail::prepare_output(ctx.out);
  const double w = detail::resolvent_w(cfg, cert);
  const TimeGrid grid(cfg.horizon, cfg.steps);
  KernelGrid kg(kernel, grid, w);
  if (cfg.rho != 0.0) kg = shift_kernel(kg, cfg.rho);

  Json j = {{"command", "resolvent"}, {"dim", cfg.dim()}, {"w", w}, {"certificate", detail::certificate_summary(cert)}};
  const auto direct = matrix_resolvent(A, kg);
  const double res_direct = resolvent_residual(direct, A, kg);
  with_output_file(ctx.out / "resolvent_direct.csv", [&](std::ostream& o) { write_resolvent_csv(o, direct); });
  write_resolvent_binary(ctx.out / "resolvent_direct.bin", direct);
  j["residual_direct"] = res_direct;
  bool passed = cert.passed && res_direct <= cfg.tolerances.resolvent_residual;

  std::optional<OperatorResolventTable> spectral;
  std::string notice;
  try {
    spectral = spectral_resolvent(spectralize(A), kg, cfg.threads);
  } catch (const NumericalError& e) {
    notice = std::string("spectral method skipped: ") + e.what();
  }
  if (spectral) {
    with_output_file(ctx.out / "resolvent_spectral.csv", [&](std::ostream& o) { write_resolvent_csv(o, *spectral); });
    write_resolvent_binary(ctx.out / "resolvent_spectral.bin", *spectral);
    const double diff = sup_difference(direct, *spectral);
    with_output_file(ctx.out / "resolvent_diff.csv", [&](std::ostream& o) {
      o << "t,frobenius_diff\n";
      for (std::size_t k = 0; k < grid.size(); ++k)
        o << format_double(grid[k]) << ',' << format_double((direct.matrices[k] - spectral->matrices[k]).norm()) << '\n';
    });
    j["spectral"] = "computed";
    j["residual_spectral"] = resolvent_residual(*spectral, A, kg);
    j["cross_method_diff"] = diff;
    j["commutation_defect"] = commutation_defect(*spectral, A);
    passed = passed && diff <= cfg.tolerances.cross_method;
  } else {
    j["spectral"] = "skipped";
    j["notice"] = notice;
    *ctx.log << "resolvent: " << notice << '\n';
  }
  j["passed"] = passed;
  j["settings"] = detail::settings_json(cfg);
  write_json(ctx.out / "resolvent_report.json", j);
  *ctx.log << "resolvent: residual " << format_double(res_direct)
           << (spectral ? ", cross-method diff " + format_double(j["cross_method_diff"].get<double>()) : std::string())
           << (passed ? " (pass)" : " (FAIL)") << '\n';
  return passed ? exit_pass : exit_check_failed;
}

/// Ensemble of stochastic convolutions with weak-residual, jump-transfer and
/// regularity diagnostics.
inline int cmd_simulate(const CommandContext& ctx) {
  const auto& cfg = ctx.cfg;
  const Matrix A = detail::require_operator(cfg, "simulate");
  const std::size_t d = cfg.dim();
  const Kernel kernel = cfg.build_kernel();
  const bool want_weak = detail::enabled(cfg, "weak_residual", true);
  const bool want_jumps = detail::enabled(cfg, "jump_transfer", true);
  const bool want_regularity = detail::enabled(cfg, "regularity", cfg.ensemble >= min_regularity_ensemble);
  if (want_regularity && cfg.ensemble < min_regularity_ensemble)
    throw ConfigError("simulate: the regularity check needs ensemble >= " + std::to_string(min_regularity_ensemble));
  const auto cert = detail::certify(cfg, kernel);
  if (!detail::admitted(ctx, cert, "simulate")) return exit_check_failed;
  detail::prepare_output(ctx.out);

  const TimeGrid grid(cfg.horizon, cfg.steps);
  const double w = detail::resolvent_w(cfg, cert);
  const auto table = matrix_resolvent(A, kernel, w, grid, cfg.rho);
  const Vector u0 = cfg.u0 ? Vector(cfg.u0->cast<cplx>()) : Vector::Zero(static_cast<Eigen::Index>(d));

  const std::size_t N = cfg.ensemble;
  const bool keep_all = want_regularity;
  const std::size_t kept = keep_all ? N : std::min(N, cfg.write_paths);
  std::vector<std::optional<SolutionPath>> slots(kept);
  std::vector<std::optional<MartingalePath>> driver_slots(kept);
  std::vector<double> weak(N, 0.0), terminal2(N, 0.0);
  std::vector<JumpTransferReport> transfer(N);
  parallel_for(N, cfg.threads, [&](std::size_t p) {
    auto L = simulate_noise(cfg.noise, d, grid, derive_seed(cfg.seed, p));
    auto u = stochastic_convolution(table, L, u0, &kernel);
    if (want_weak) weak[p] = weak_solution_residual(u, L, u0, kernel, A);
    if (want_jumps) transfer[p] = jump_transfer_check(u, L);
    terminal2[p] = L.node_value(grid.steps()).squaredNorm();
    if (p < kept) {
      slots[p] = std::move(u);
      driver_slots[p] = std::move(L);
    }
  });
  std::vector<SolutionPath> paths;
  std::vector<MartingalePath> drivers;
  for (std::size_t p = 0; p < kept; ++p) {
    paths.push_back(std::move(*slots[p]));
    drivers.push_back(std::move(*driver_slots[p]));
  }

  for (std::size_t p = 0; p < std::min(N, cfg.write_paths); ++p) {
    with_output_file(ctx.out / ("path_" + std::to_string(p) + ".csv"), [&](std::ostream& o) { write_path_csv(o, paths[p]); });
    with_output_file(ctx.out / ("noise_" + std::to_string(p) + ".csv"),
                     [&](std::ostream& o) { write_path_csv(o, drivers[p]); });
  }

  Json checks = Json::object();
  bool passed = cert.passed;
  checks["admissibility"] = detail::certificate_summary(cert);
  if (want_weak) {
    const double worst = *std::max_element(weak.begin(), weak.end());
    const bool ok = worst <= cfg.tolerances.weak_residual;
    checks["weak_residual"] = {{"max", worst}, {"tol", cfg.tolerances.weak_residual}, {"passed", ok}};
    passed = passed && ok;
  }
  if (want_jumps) {
    std::size_t jumps = 0, matched = 0, missing = 0, excess = 0, ok_paths = 0;
    for (const auto& r : transfer) {
      jumps += r.jumps, matched += r.matched, missing += r.missing, excess += r.excess;
      ok_paths += r.passed ? 1 : 0;
    }
    const bool ok = ok_paths == N;
    checks["jump_transfer"] = {{"paths", N},       {"paths_passed", ok_paths}, {"jumps", jumps},
                               {"matched", matched}, {"missing", missing},       {"excess", excess},
                               {"passed", ok}};
    passed = passed && ok;
  }
  if (want_regularity) {
    const bool jumpy = cfg.noise.poisson_rate > 0.0;
    const auto rep = jumpy ? path_regularity_diagnostics(paths, RegularityMode::cadlag, drivers)
                           : path_regularity_diagnostics(paths, RegularityMode::continuous);
    checks["regularity"] = to_json(rep);
    passed = passed && rep.passed;
  }
  double mean2 = 0.0;
  for (double v : terminal2) mean2 += v;
  mean2 /= static_cast<double>(N);
  double var2 = 0.0;
  for (double v : terminal2) var2 += (v - mean2) * (v - mean2);
  const double se = N > 1 ? std::sqrt(var2 / static_cast<double>(N - 1) / static_cast<double>(N)) : 0.0;

  Json j = {{"command", "simulate"},
            {"passed", passed},
            {"forced", ctx.force},
            {"dim", d},
            {"w", w},
            {"checks", std::move(checks)},
            {"ensemble",
             {{"paths", N},
              {"noise_terminal_mean_norm2", mean2},
              {"noise_terminal_mean_norm2_se", se},
              {"paths_written", std::min(N, cfg.write_paths)}}},
            {"settings", detail::settings_json(cfg)}};
  write_json(ctx.out / "simulate_report.json", j);
  *ctx.log << "simulate: " << N << " paths" << (passed ? " (pass)" : " (FAIL)") << '\n';
  return passed ? exit_pass : exit_check_failed;
}

/// Gram-matrix test of the resolvent and the Bochner symbol test of the kernel.
inline int cmd_check_positivity(const CommandContext& ctx) {
  const auto& cfg = ctx.cfg;
  const Kernel kernel = cfg.build_kernel();
  const bool want_gram = detail::enabled(cfg, "gram", cfg.op.has_value());
  const bool want_bochner = detail::enabled(cfg, "bochner", true);
  if (want_gram && !cfg.op) throw ConfigError("check-positivity: the gram check needs an 'operator'");
  const auto cert = detail::certify(cfg, kernel);
  detail::prepare_output(ctx.out);
  const auto& pos = cfg.positivity;
  Json j = {{"min_eigenvalue", nullptr}, {"tol", nullptr}, {"passed", false}, {"witnesses", Json::array()}};
  bool passed = true;
  if (want_gram) {
    const TimeGrid grid(cfg.horizon, cfg.steps);
    const auto table = matrix_resolvent(detail::require_operator(cfg, "check-positivity"), kernel, 0.0, grid, cfg.rho);
    const auto samples = equispaced_samples(grid, pos.samples, std::min(pos.until.value_or(cfg.horizon), cfg.horizon));
    auto rep = gram_positivity_check(table, pos.w, samples);
    if (cfg.tolerances.gram_relative != gram_relative_tol)
      rep = gram_positivity_check(table, pos.w, samples, cfg.tolerances.gram_relative * rep.norm);
    const Json g = to_json(rep);
    j["min_eigenvalue"] = g["min_eigenvalue"];
    j["tol"] = g["tol"];
    j["witnesses"] = g["witnesses"];
    j["gram"] = g;
    passed = passed && rep.passed;
  }
  if (want_bochner) {
    Json b;
    try {
      const auto budget = angle_budget(cfg.phiA_bound, cert);
      const double w = std::max(pos.w, cert.w);
      const auto rep = bochner_check(kernel, budget, w, symmetric_log_samples(pos.tau.count, pos.tau.min, pos.tau.max),
                                     log_samples(pos.xi.count, pos.xi.min, pos.xi.max), cfg.tolerances.bochner);
      b = to_json(rep);
      b["w"] = w;
      b["budget"] = to_json(budget);
      passed = passed && rep.passed;
    } catch (const std::invalid_argument& e) {
      b = {{"passed", false}, {"notice", e.what()}};
      passed = false;
    }
    j["bochner"] = std::move(b);
  }
  j["passed"] = passed;
  j["command"] = "check-positivity";
  j["certificate"] = detail::certificate_summary(cert);
  j["settings"] = detail::settings_json(cfg);
  write_json(ctx.out / "positivity.json", j);
  *ctx.log << "check-positivity:" << (passed ? " pass" : " FAIL") << '\n';
  return passed ? exit_pass : exit_check_failed;
}

/// Aggregates the JSON reports found in the output directory into report.json.
inline int cmd_report(const CommandContext& ctx) {
  if (!std::filesystem::is_directory(ctx.out))
    throw ConfigError("report: output directory '" + ctx.out.string() + "' does not exist");
  std::vector<std::filesystem::path> files;
  for (const auto& e : std::filesystem::directory_iterator(ctx.out))
    if (e.is_regular_file() && e.path().extension() == ".json" && e.path().filename() != "report.json")
      files.push_back(e.path());
  std::sort(files.begin(), files.end());
  if (files.empty()) throw ConfigError("report: no JSON reports in '" + ctx.out.string() + "'");
  Json entries = Json::array();
  bool passed = true;
  for (const auto& f : files) {
    Json r;
    try {
      r = read_json(f);
    } catch (const std::exception& e) {
      throw ConfigError("report: cannot parse '" + f.string() + "': " + e.what());
    }
    if (!r.is_object() || !r.contains("command") || !r.contains("passed")) continue;
    const bool ok = r["passed"].is_boolean() && r["passed"].get<bool>();
    passed = passed && ok;
    entries.push_back({{"file", f.filename().string()}, {"command", r["command"]}, {"passed", ok}});
  }
  if (entries.empty()) throw ConfigError("report: no command reports in '" + ctx.out.string() + "'");
  write_json(ctx.out / "report.json", {{"command", "report"}, {"passed", passed}, {"reports", std::move(entries)}});
  *ctx.log << "report: " << files.size() << " files" << (passed ? " (pass)" : " (FAIL)") << '\n';
  return passed ? exit_pass : exit_check_failed;
}

/// Dispatches a subcommand and maps failures onto the exit-code contract.
inline int run_command(const std::string& name, const CommandOptions& opts) {
  try {
    if (name == "report") return cmd_report(make_context(opts, false));
    const auto ctx = make_context(opts);
    if (name == "verify-kernel") return cmd_verify_kernel(ctx);
    if (name == "resolvent") return cmd_resolvent(ctx);
    if (name == "simulate") return cmd_simulate(ctx);
    if (name == "check-positivity") return cmd_check_positivity(ctx);
    std::cerr << "unknown subcommand '" << name << "'\n";
    return exit_usage;
  } catch (const ConfigError& e) {
    std::cerr << e.what() << '\n';
    return exit_usage;
  } catch (const NumericalError& e) {
    std::cerr << name << ": numerical failure: " << e.what() << '\n';
    return exit_check_failed;
  } catch (const std::exception& e) {
    std::cerr << name << ": " << e.what() << '\n';
    return exit_usage;
  }
}

}  // namespace volterra
