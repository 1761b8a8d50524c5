#pragma once

#include "volterra/admissibility.hpp"
#include "volterra/elliptic.hpp"
#include "volterra/kernel.hpp"
#include "volterra/martingale.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace volterra {

/// Malformed, incomplete or inconsistent configuration (exit code 2).
class ConfigError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Central defaults; every report records the values in effect.
struct Tolerances {
  double resolvent_residual = 1e-10;
  double cross_method = 1e-6;
  double weak_residual = 5e-3;
  double gram_relative = 1e-8;
  double bochner = 1e-10;
};

struct KernelSpec {
  std::string type;
  std::map<std::string, double> params;
};

struct SampleRange {
  std::size_t count = 33;
  double min = 1e-3;
  double max = 1e3;
};

struct PositivitySpec {
  std::size_t samples = 8;
  std::optional<double> until;  // defaults to T
  double w = 0.0;
  SampleRange tau;
  SampleRange xi;
};

struct ExperimentConfig {
  KernelSpec kernel;
  double phiA_bound = 0.0;
  double rho = 0.0;
  std::optional<RealMatrix> op;
  std::string operator_source;  // diagonal | matrix | elliptic | matrix_file
  double horizon = 1.0;
  std::size_t steps = 512;
  std::optional<double> w;
  NoiseSpec noise;
  std::optional<RealVector> u0;
  std::size_t ensemble = 1;
  std::size_t write_paths = 1;
  std::optional<std::vector<std::string>> checks;
  PositivitySpec positivity;
  HalfPlaneSampling sampling;
  std::vector<double> ladder = default_w_ladder();
  Tolerances tolerances;
  std::uint64_t seed = 0;
  std::string output = "out";
  unsigned threads = 1;

  Kernel build_kernel() const { return builtin_kernel(kernel.type, kernel.params); }
  std::size_t dim() const { return op ? static_cast<std::size_t>(op->rows()) : 0; }
};

inline const std::set<std::string>& known_checks() {
  static const std::set<std::string> names{"weak_residual", "jump_transfer", "regularity", "gram", "bochner"};
  return names;
}

namespace detail {

using CJson = nlohmann::json;

inline void only_keys(const CJson& j, const std::string& where, const std::vector<std::string>& allowed) {
  if (!j.is_object())
    throw ConfigError("config: " + (where.empty() ? std::string("document") : where) + " must be an object");
  for (const auto& [key, _] : j.items()) {
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end())
      throw ConfigError("config: unknown key '" + (where.empty() ? key : where + "." + key) + "'");
  }
}

inline double number(const CJson& j, const std::string& where) {
  if (!j.is_number()) throw ConfigError("config: " + where + " must be a number");
  return j.get<double>();
}

inline std::size_t count(const CJson& j, const std::string& where) {
  if (!j.is_number_unsigned() && !(j.is_number_integer() && j.get<long long>() >= 0))
    throw ConfigError("config: " + where + " must be a nonnegative integer");
  return j.get<std::size_t>();
}

inline std::vector<double> numbers(const CJson& j, const std::string& where) {
  if (!j.is_array()) throw ConfigError("config: " + where + " must be an array of numbers");
  std::vector<double> out;
  for (std::size_t i = 0; i < j.size(); ++i) out.push_back(number(j[i], where + "[" + std::to_string(i) + "]"));
  return out;
}

inline RealMatrix matrix_rows(const CJson& j, const std::string& where) {
  if (!j.is_array() || j.empty()) throw ConfigError("config: " + where + " must be a nonempty array of rows");
  const auto rows = static_cast<Eigen::Index>(j.size());
  RealMatrix M(rows, rows);
  for (Eigen::Index r = 0; r < rows; ++r) {
    const auto row = numbers(j[static_cast<std::size_t>(r)], where + "[" + std::to_string(r) + "]");
    if (static_cast<Eigen::Index>(row.size()) != rows) throw ConfigError("config: " + where + " must be square");
    for (Eigen::Index c = 0; c < rows; ++c) M(r, c) = row[static_cast<std::size_t>(c)];
  }
  return M;
}

// Whitespace separated rows, one per line; blank lines and '#' comments ignored.
inline RealMatrix read_matrix_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("config: matrix file '" + path.string() + "' not found");
  std::vector<std::vector<double>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream ls(line);
    std::vector<double> row;
    std::string tok;
    while (ls >> tok) {
      try {
        std::size_t used = 0;
        row.push_back(std::stod(tok, &used));
        if (used != tok.size()) throw std::invalid_argument(tok);
      } catch (const std::exception&) {
        throw ConfigError("config: matrix file '" + path.string() + "' has a bad entry '" + tok + "'");
      }
    }
    if (!row.empty()) rows.push_back(std::move(row));
  }
  const auto n = static_cast<Eigen::Index>(rows.size());
  if (n == 0) throw ConfigError("config: matrix file '" + path.string() + "' is empty");
  RealMatrix M(n, n);
  for (Eigen::Index r = 0; r < n; ++r) {
    if (static_cast<Eigen::Index>(rows[static_cast<std::size_t>(r)].size()) != n)
      throw ConfigError("config: matrix file '" + path.string() + "' is not square");
    for (Eigen::Index c = 0; c < n; ++c) M(r, c) = rows[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)];
  }
  return M;
}

inline KernelSpec parse_kernel(const CJson& j) {
  if (!j.is_object() || !j.contains("type") || !j["type"].is_string())
    throw ConfigError("config: kernel.type must be a string");
  KernelSpec spec;
  spec.type = j["type"].get<std::string>();
  std::vector<std::string> params;
  if (spec.type == "fractional") params = {"type", "beta"};
  else if (spec.type == "kelvin_voigt") params = {"type", "nu", "mu"};
  else if (spec.type == "linear_t" || spec.type == "constant_one") params = {"type"};
  else throw ConfigError("config: unknown kernel type '" + spec.type + "'");
  only_keys(j, "kernel", params);
  for (const auto& p : params) {
    if (p == "type") continue;
    if (!j.contains(p)) throw ConfigError("config: kernel '" + spec.type + "' needs '" + p + "'");
    spec.params[p] = number(j[p], "kernel." + p);
  }
  try {
    (void)builtin_kernel(spec.type, spec.params);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  return spec;
}

inline void parse_operator(const CJson& j, const std::filesystem::path& base, ExperimentConfig& cfg) {
  only_keys(j, "operator", {"diagonal", "matrix", "elliptic", "matrix_file"});
  if (j.size() != 1) throw ConfigError("config: operator needs exactly one of diagonal, matrix, elliptic, matrix_file");
  const std::string kind = j.begin().key();
  const CJson& value = j.begin().value();
  cfg.operator_source = kind;
  if (kind == "diagonal") {
    const auto d = numbers(value, "operator.diagonal");
    if (d.empty()) throw ConfigError("config: operator.diagonal is empty");
    cfg.op = Eigen::Map<const RealVector>(d.data(), static_cast<Eigen::Index>(d.size())).asDiagonal();
  } else if (kind == "matrix") {
    cfg.op = matrix_rows(value, "operator.matrix");
  } else if (kind == "matrix_file") {
    if (!value.is_string()) throw ConfigError("config: operator.matrix_file must be a path");
    std::filesystem::path p = value.get<std::string>();
    cfg.op = read_matrix_file(p.is_absolute() ? p : base / p);
  } else {
    only_keys(value, "operator.elliptic", {"points", "interval", "a", "b", "c", "boundary"});
    if (!value.contains("points")) throw ConfigError("config: operator.elliptic needs 'points'");
    const std::size_t points = count(value["points"], "operator.elliptic.points");
    std::vector<double> iv{0.0, 1.0};
    if (value.contains("interval")) iv = numbers(value["interval"], "operator.elliptic.interval");
    if (iv.size() != 2 || !(iv[1] > iv[0])) throw ConfigError("config: operator.elliptic.interval must be [x0, x1] with x0 < x1");
    auto coeff = [&](const char* key, double fallback) {
      return value.contains(key) ? number(value[key], std::string("operator.elliptic.") + key) : fallback;
    };
    try {
      const Boundary bc = parse_boundary(value.value("boundary", std::string("dirichlet")));
      cfg.op = build_discrete_elliptic(coeff("a", 1.0), coeff("b", 0.0), coeff("c", 0.0), points, iv[0], iv[1], bc).matrix;
    } catch (const std::invalid_argument& e) {
      throw ConfigError(std::string("config: operator.elliptic: ") + e.what());
    }
  }
  if (!cfg.op->allFinite()) throw ConfigError("config: operator has non-finite entries");
}

inline NoiseSpec parse_noise(const CJson& j) {
  only_keys(j, "noise", {"brownian", "poisson"});
  NoiseSpec spec;
  if (j.contains("brownian")) {
    only_keys(j["brownian"], "noise.brownian", {"covariance"});
    if (!j["brownian"].contains("covariance")) throw ConfigError("config: noise.brownian needs 'covariance'");
    spec.brownian_covariance = matrix_rows(j["brownian"]["covariance"], "noise.brownian.covariance");
    try {
      (void)psd_factor(*spec.brownian_covariance);
    } catch (const std::invalid_argument& e) {
      throw ConfigError(std::string("config: noise.brownian.covariance: ") + e.what());
    }
  }
  if (j.contains("poisson")) {
    const auto& p = j["poisson"];
    only_keys(p, "noise.poisson", {"rate", "jump"});
    if (!p.contains("rate")) throw ConfigError("config: noise.poisson needs 'rate'");
    spec.poisson_rate = number(p["rate"], "noise.poisson.rate");
    if (!(spec.poisson_rate >= 0.0)) throw ConfigError("config: noise.poisson.rate must be nonnegative");
    if (p.contains("jump")) {
      only_keys(p["jump"], "noise.poisson.jump", {"type", "amplitude"});
      if (p["jump"].contains("type")) {
        if (!p["jump"]["type"].is_string()) throw ConfigError("config: noise.poisson.jump.type must be a string");
        try {
          spec.jump_law.type = parse_jump_law(p["jump"]["type"].get<std::string>());
        } catch (const std::invalid_argument& e) {
          throw ConfigError(std::string("config: ") + e.what());
        }
      }
      if (p["jump"].contains("amplitude"))
        spec.jump_law.amplitude = number(p["jump"]["amplitude"], "noise.poisson.jump.amplitude");
    }
  }
  return spec;
}

inline SampleRange parse_range(const CJson& j, const std::string& where, SampleRange r) {
  only_keys(j, where, {"count", "min", "max"});
  if (j.contains("count")) r.count = count(j["count"], where + ".count");
  if (j.contains("min")) r.min = number(j["min"], where + ".min");
  if (j.contains("max")) r.max = number(j["max"], where + ".max");
  if (r.count == 0 || !(r.min > 0.0) || !(r.max >= r.min)) throw ConfigError("config: " + where + " is not a valid range");
  return r;
}

}  // namespace detail

/// Parses and validates a configuration document. Relative file references
/// resolve against `base`.
inline ExperimentConfig parse_config(const nlohmann::json& j, const std::filesystem::path& base = ".") {
  using namespace detail;
  only_keys(j, "", {"kernel", "phiA_bound", "rho", "operator", "grid", "w", "noise", "u0", "ensemble", "write_paths",
                    "checks", "positivity", "certification", "tolerances", "seed", "output", "threads"});
  ExperimentConfig cfg;
  if (!j.contains("kernel")) throw ConfigError("config: 'kernel' is required");
  cfg.kernel = parse_kernel(j["kernel"]);
  if (j.contains("phiA_bound")) cfg.phiA_bound = number(j["phiA_bound"], "phiA_bound");
  if (!(cfg.phiA_bound >= 0.0 && cfg.phiA_bound < 0.5 * pi)) throw ConfigError("config: phiA_bound must lie in [0, pi/2)");
  if (j.contains("rho")) cfg.rho = number(j["rho"], "rho");
  if (j.contains("operator")) parse_operator(j["operator"], base, cfg);
  if (j.contains("grid")) {
    only_keys(j["grid"], "grid", {"T", "n"});
    if (j["grid"].contains("T")) cfg.horizon = number(j["grid"]["T"], "grid.T");
    if (j["grid"].contains("n")) cfg.steps = count(j["grid"]["n"], "grid.n");
    if (!(cfg.horizon > 0.0) || cfg.steps < 2) throw ConfigError("config: grid needs T > 0 and n >= 2");
  }
  if (j.contains("w")) {
    cfg.w = number(j["w"], "w");
    if (!(*cfg.w >= 0.0)) throw ConfigError("config: w must be nonnegative");
  }
  if (j.contains("noise")) cfg.noise = parse_noise(j["noise"]);
  if (j.contains("u0")) {
    const auto v = numbers(j["u0"], "u0");
    cfg.u0 = Eigen::Map<const RealVector>(v.data(), static_cast<Eigen::Index>(v.size()));
  }
  if (j.contains("ensemble")) cfg.ensemble = count(j["ensemble"], "ensemble");
  if (cfg.ensemble == 0) throw ConfigError("config: ensemble must be positive");
  if (j.contains("write_paths")) cfg.write_paths = count(j["write_paths"], "write_paths");
  if (j.contains("checks")) {
    if (!j["checks"].is_array()) throw ConfigError("config: checks must be an array of names");
    cfg.checks.emplace();
    for (const auto& c : j["checks"]) {
      if (!c.is_string() || !known_checks().count(c.get<std::string>()))
        throw ConfigError("config: unknown check " + c.dump());
      cfg.checks->push_back(c.get<std::string>());
    }
  }
  if (j.contains("positivity")) {
    const auto& p = j["positivity"];
    only_keys(p, "positivity", {"samples", "until", "w", "tau", "xi"});
    if (p.contains("samples")) cfg.positivity.samples = count(p["samples"], "positivity.samples");
    if (p.contains("until")) cfg.positivity.until = number(p["until"], "positivity.until");
    if (p.contains("w")) cfg.positivity.w = number(p["w"], "positivity.w");
    if (p.contains("tau")) cfg.positivity.tau = parse_range(p["tau"], "positivity.tau", cfg.positivity.tau);
    if (p.contains("xi")) cfg.positivity.xi = parse_range(p["xi"], "positivity.xi", cfg.positivity.xi);
    if (cfg.positivity.samples == 0) throw ConfigError("config: positivity.samples must be positive");
    if (cfg.positivity.tau.count % 2 == 0) throw ConfigError("config: positivity.tau.count must be odd");
  }
  if (j.contains("certification")) {
    const auto& c = j["certification"];
    only_keys(c, "certification", {"ladder", "moduli", "angles", "min_modulus", "max_modulus"});
    if (c.contains("ladder")) cfg.ladder = numbers(c["ladder"], "certification.ladder");
    if (c.contains("moduli")) cfg.sampling.moduli = static_cast<int>(count(c["moduli"], "certification.moduli"));
    if (c.contains("angles")) cfg.sampling.angles = static_cast<int>(count(c["angles"], "certification.angles"));
    if (c.contains("min_modulus")) cfg.sampling.min_modulus = number(c["min_modulus"], "certification.min_modulus");
    if (c.contains("max_modulus")) cfg.sampling.max_modulus = number(c["max_modulus"], "certification.max_modulus");
    if (cfg.ladder.empty() || cfg.sampling.count() == 0) throw ConfigError("config: certification sampling is empty");
  }
  if (j.contains("tolerances")) {
    const auto& t = j["tolerances"];
    only_keys(t, "tolerances", {"resolvent_residual", "cross_method", "weak_residual", "gram_relative", "bochner"});
    auto set = [&](const char* key, double& field) {
      if (!t.contains(key)) return;
      field = number(t[key], std::string("tolerances.") + key);
      if (!(field >= 0.0)) throw ConfigError(std::string("config: tolerances.") + key + " must be nonnegative");
    };
    set("resolvent_residual", cfg.tolerances.resolvent_residual);
    set("cross_method", cfg.tolerances.cross_method);
    set("weak_residual", cfg.tolerances.weak_residual);
    set("gram_relative", cfg.tolerances.gram_relative);
    set("bochner", cfg.tolerances.bochner);
  }
  if (j.contains("seed")) {
    if (!j["seed"].is_number_unsigned()) throw ConfigError("config: seed must be a nonnegative integer");
    cfg.seed = j["seed"].get<std::uint64_t>();
  }
  if (j.contains("output")) {
    if (!j["output"].is_string()) throw ConfigError("config: output must be a path");
    cfg.output = j["output"].get<std::string>();
  }
  if (j.contains("threads")) cfg.threads = static_cast<unsigned>(std::max<std::size_t>(1, count(j["threads"], "threads")));

  const std::size_t d = cfg.dim();
  if (cfg.u0 && d != 0 && static_cast<std::size_t>(cfg.u0->size()) != d)
    throw ConfigError("config: u0 has " + std::to_string(cfg.u0->size()) + " entries, operator dimension is " +
                      std::to_string(d));
  if (cfg.noise.brownian_covariance && d != 0 && static_cast<std::size_t>(cfg.noise.brownian_covariance->rows()) != d)
    throw ConfigError("config: noise covariance dimension does not match the operator");
  return cfg;
}

inline ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("config: cannot open '" + path.string() + "'");
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("config: malformed JSON in '" + path.string() + "': " + e.what());
  }
  try {
    return parse_config(j, path.parent_path());
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
}

}  // namespace volterra
