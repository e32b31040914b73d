#pragma once

#include "chom/epsilon_solver.hpp"
#include "chom/homogenized_solver.hpp"
#include "chom/scale_config.hpp"

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace chom {

/// Everything a sweep needs. `base.eps` is ignored; the list drives it.
struct SweepConfig {
  ScaleConfig base;
  std::vector<double> eps_list{0.25, 1.0 / 6.0, 0.125, 0.1};
  std::string source = "sign-changing";
  std::string sigma = "linear:1";
  int workers = 0;  ///< 0: hardware concurrency
  EpsOptions eps_options;
  HomOptions hom_options;

  /// Throws ConfigError unless n = 2, the list is strictly decreasing and
  /// every eps passes ScaleConfig::validate.
  void validate() const;
};

/// Plain text, one `key = value` per line, `#` starts a comment. Keys:
///   n C0 alpha alpha2 l0 l height      geometry (alpha2 sets alpha = sqrt(alpha2))
///   eps                                comma separated list, fractions like 1/6 allowed
///   source sigma                       preset names
///   workers eps_tol eps_max_sweeps hom_tol
/// Unknown keys and malformed values throw ConfigError naming the line.
SweepConfig parse_sweep_config(std::istream& in);
SweepConfig load_sweep_config(const std::filesystem::path& path);

/// "1/6" or "0.25".
double parse_number(const std::string& text);

struct ReportRow {
  double eps = 0.0;
  double l2_error = 0.0;      ///< |u_eps - u_0|_{L2(Omega)}
  double grad_norm = 0.0;     ///< |grad u_eps|_{L2}
  double beta_trace = 0.0;    ///< beta |u_eps|^2_{L2(l_eps)}
  double trace_gap = 0.0;     ///< |u_eps - u_0|_{L2(Gamma_1)}
  double interior_gap = 0.0;  ///< L2 gap on y >= layer_height
  double layer_gap = 0.0;     ///< L2 gap on y < layer_height
  int iterations = 0;         ///< epsilon-solver sweeps
  bool converged = false;
  bool non_monotone = false;  ///< l2_error did not drop from the previous row
  double wall_seconds = 0.0;  ///< JSON only, never in the CSV
};

struct ConvergenceReport {
  SweepConfig config;
  std::vector<ReportRow> rows;  ///< decreasing eps
  HomDiagnostics reference;
  std::size_t reference_nodes = 0;
  double reference_h = 0.0;
  double layer_height = 0.25;

  bool all_converged() const;
};

/// Solves the homogenized reference once on a uniform mesh with half the
/// finest epsilon-mesh interior size, then the epsilon problems in a worker
/// pool. Failed sub-solves mark their row and the sweep continues.
ConvergenceReport sweep(const SweepConfig& cfg);

void write_report_csv(std::ostream& os, const ConvergenceReport& r);
/// Reads back what write_report_csv wrote; wall time is not recovered.
std::vector<ReportRow> read_report_csv(std::istream& in);
void write_report_json(std::ostream& os, const ConvergenceReport& r);
/// Writes <stem>.csv and <stem>.json; throws std::runtime_error on I/O failure.
void report_emit(const ConvergenceReport& r, const std::filesystem::path& stem);

/// Output of `git describe` at configure time.
std::string git_describe();

} // namespace chom
