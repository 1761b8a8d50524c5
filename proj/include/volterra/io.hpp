#pragma once

#include "volterra/admissibility.hpp"
#include "volterra/operator_resolvent.hpp"
#include "volterra/positivity.hpp"
#include "volterra/scalar_resolvent.hpp"
#include "volterra/stochastic.hpp"

#include <nlohmann/json.hpp>

#include <bit>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace volterra {

using Json = nlohmann::ordered_json;

/// 17 significant digits, enough to round-trip any double.
inline std::string format_double(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

inline Json complex_json(cplx z) { return Json::array({z.real(), z.imag()}); }

inline Json to_json(const SectorCertificate& c) {
  Json v = Json::array();
  for (const auto& x : c.violations)
    v.push_back({{"lambda", complex_json(x.lambda)}, {"condition", x.condition}, {"measured", x.measured}});
  return {{"sigma", c.sigma},
          {"phi", c.phi},
          {"c", c.c_reg},
          {"w", c.w},
          {"passed", c.passed},
          {"violations", std::move(v)},
          {"rho", c.rho},
          {"phiA_bound", c.phiA_bound},
          {"samples", c.samples},
          {"ladder_tried", c.ladder_tried}};
}

inline Json to_json(const GramReport& r) {
  Json w = Json::array();
  for (const auto& x : r.witnesses) w.push_back({{"eigenvalue", x.eigenvalue}, {"index", x.index}});
  return {{"min_eigenvalue", r.min_eigenvalue},
          {"tol", r.tol},
          {"passed", r.passed},
          {"witnesses", std::move(w)},
          {"norm", r.norm},
          {"symmetry_defect", r.symmetry_defect},
          {"block_dim", r.block_dim},
          {"time_samples", r.time_samples}};
}

inline Json to_json(const AngleBudget& b) {
  return {{"beta", b.beta}, {"alpha", b.alpha}, {"sigma", b.sigma}, {"phi", b.phi}, {"phiA_bound", b.phiA_bound}};
}

inline Json to_json(const BochnerReport& r) {
  Json v = Json::array();
  for (const auto& x : r.violations)
    v.push_back({{"mu", complex_json(x.mu)}, {"tau", x.tau}, {"xi", x.xi}, {"value", x.value}, {"reason", x.reason}});
  return {{"minimum", r.minimum}, {"min_tau", r.min_tau}, {"min_xi", r.min_xi}, {"tol", r.tol},
          {"evaluations", r.evaluations}, {"passed", r.passed}, {"violations", std::move(v)}};
}

inline Json to_json(const JumpTransferReport& r) {
  return {{"jumps", r.jumps},         {"matched", r.matched},
          {"missing", r.missing},     {"excess", r.excess},
          {"max_continuous_increment", r.max_continuous_increment}, {"passed", r.passed}};
}

inline Json to_json(const RegularityReport& r) {
  return {{"mode", r.mode == RegularityMode::continuous ? "continuous" : "cadlag"},
          {"paths", r.paths},
          {"max_increment", r.max_increment},
          {"mean_max_increment", r.mean_max_increment},
          {"excess_jumps", r.excess_jumps},
          {"missing_jumps", r.missing_jumps},
          {"mean_sup_norm2", r.mean_sup_norm2},
          {"passed", r.passed}};
}

/// Pretty-printed with a trailing newline. Key order is insertion order, so
/// equal inputs give equal bytes.
inline void write_json(const std::filesystem::path& path, const Json& j) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << j.dump(2) << '\n';
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

inline Json read_json(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  return Json::parse(in);
}

/// Header "t,S0_0_re,S0_0_im,S0_1_re,..." then one row per grid node with the
/// stored entries S_w(t_k) = e^{-w t_k} S(t_k) in row-major order.
inline void write_resolvent_csv(std::ostream& out, const OperatorResolventTable& table) {
  out << 't';
  for (std::size_t r = 0; r < table.dim; ++r)
    for (std::size_t c = 0; c < table.dim; ++c) out << ",S" << r << '_' << c << "_re,S" << r << '_' << c << "_im";
  out << '\n';
  const auto d = static_cast<Eigen::Index>(table.dim);
  for (std::size_t k = 0; k < table.matrices.size(); ++k) {
    const Matrix& S = table.matrices[k];
    out << format_double(table.grid[k]);
    for (Eigen::Index r = 0; r < d; ++r)
      for (Eigen::Index c = 0; c < d; ++c) out << ',' << format_double(S(r, c).real()) << ',' << format_double(S(r, c).imag());
    out << '\n';
  }
}

namespace detail {

inline void put_u64(std::ostream& out, std::uint64_t v) {
  unsigned char b[8];
  for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>(v >> (8 * i));
  out.write(reinterpret_cast<const char*>(b), 8);
}

inline std::uint64_t get_u64(std::istream& in) {
  unsigned char b[8];
  if (!in.read(reinterpret_cast<char*>(b), 8)) throw std::runtime_error("resolvent binary: truncated data");
  std::uint64_t v = 0;
  for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(b[i]) << (8 * i);
  return v;
}

inline void put_f64(std::ostream& out, double x) { put_u64(out, std::bit_cast<std::uint64_t>(x)); }
inline double get_f64(std::istream& in) { return std::bit_cast<double>(get_u64(in)); }

}  // namespace detail

/// Little-endian layout: dim, n (uint64), w, T (float64), then n + 1 matrices
/// row-major as (re, im) float64 pairs. The stored matrices are the damped
/// values e^{-w t_k} S(t_k), so a reader recovers S from the header w.
inline void write_resolvent_binary(std::ostream& out, const OperatorResolventTable& table) {
  detail::put_u64(out, table.dim);
  detail::put_u64(out, table.grid.steps());
  detail::put_f64(out, table.w);
  detail::put_f64(out, table.grid.horizon());
  const auto d = static_cast<Eigen::Index>(table.dim);
  for (const auto& M : table.matrices)
    for (Eigen::Index r = 0; r < d; ++r)
      for (Eigen::Index c = 0; c < d; ++c) {
        detail::put_f64(out, M(r, c).real());
        detail::put_f64(out, M(r, c).imag());
      }
}

inline OperatorResolventTable read_resolvent_binary(std::istream& in) {
  const std::uint64_t dim = detail::get_u64(in);
  const std::uint64_t n = detail::get_u64(in);
  const double w = detail::get_f64(in);
  const double T = detail::get_f64(in);
  if (dim == 0 || dim > 1u << 16 || n > 1u << 28) throw std::runtime_error("resolvent binary: implausible header");
  OperatorResolventTable table{dim, TimeGrid(T, n), w, 0.0, {}};
  const auto d = static_cast<Eigen::Index>(dim);
  table.matrices.assign(n + 1, Matrix(d, d));
  for (auto& M : table.matrices)
    for (Eigen::Index r = 0; r < d; ++r)
      for (Eigen::Index c = 0; c < d; ++c) {
        const double re = detail::get_f64(in);
        M(r, c) = cplx(re, detail::get_f64(in));
      }
  if (in.peek() != std::char_traits<char>::eof()) throw std::runtime_error("resolvent binary: trailing data");
  return table;
}

inline void write_resolvent_binary(const std::filesystem::path& path, const OperatorResolventTable& table) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  write_resolvent_binary(out, table);
}

inline OperatorResolventTable read_resolvent_binary(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  return read_resolvent_binary(in);
}

namespace detail {

template <class Row>
void write_path_rows(std::ostream& out, std::size_t dim, const TimeGrid& grid, std::size_t jumps, Row row) {
  out << 't';
  for (std::size_t i = 0; i < dim; ++i) out << ",u" << i;
  out << ",is_jump\n";
  auto emit = [&](double t, const RealVector& v, bool jump) {
    out << format_double(t);
    for (Eigen::Index i = 0; i < v.size(); ++i) out << ',' << format_double(v(i));
    out << (jump ? ",1\n" : ",0\n");
  };
  // Nodes and jumps merged by time; a jump row precedes a node at the same time.
  std::size_t j = 0;
  for (std::size_t k = 0; k < grid.size(); ++k) {
    for (; j < jumps; ++j) {
      const auto [t, size] = row(j, true);
      if (t > grid[k]) break;
      emit(t, size, true);
    }
    const auto [t, value] = row(k, false);
    emit(t, value, false);
  }
}

}  // namespace detail

/// Rows for every grid node (is_jump = 0, values of u) and for every jump
/// (is_jump = 1, the jump size) in time order. Real parts are written.
inline void write_path_csv(std::ostream& out, const SolutionPath& u) {
  const std::size_t dim = u.values.empty() ? 0 : static_cast<std::size_t>(u.values.front().size());
  detail::write_path_rows(out, dim, u.grid, u.jumps.size(), [&](std::size_t i, bool jump) {
    if (jump) return std::pair<double, RealVector>{u.jumps[i].time, u.jumps[i].size.real()};
    return std::pair<double, RealVector>{u.grid[i], u.values[i].real()};
  });
}

inline void write_path_csv(std::ostream& out, const MartingalePath& L) {
  detail::write_path_rows(out, L.dim, L.grid, L.jumps.size(), [&](std::size_t i, bool jump) {
    if (jump) return std::pair<double, RealVector>{L.jumps[i].time, L.jumps[i].size};
    return std::pair<double, RealVector>{L.grid[i], L.node_value(i)};
  });
}

/// Opens `path` in binary mode and hands the stream to `fn`.
template <class Fn>
void with_output_file(const std::filesystem::path& path, Fn&& fn) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  fn(out);
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

}  // namespace volterra
