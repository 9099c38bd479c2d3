#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "gpecmg/cascadic.hpp"

namespace gpecmg {

/// Configuration of one convergence study.
///
/// Every field has a `key = value` spelling (see apply_setting); the CLI
/// flags use the same keys.
struct StudyConfig {
  int cells_per_side = 6;
  /// When non-empty the coarse mesh is read from this file instead.
  std::string mesh_path;
  int pre_refinements = 0;
  int n_levels = 4;
  GpeProblem problem;
  Schedule schedule;
  std::string smoother = "cg";
  std::optional<double> omega;
  std::optional<double> tau;
  ScfConfig level_one = ScfConfig::full_space();
  ScfConfig correction = ScfConfig::correction_space();
  /// Per-level reference solves.
  ScfConfig direct = ScfConfig::full_space();
  bool run_cascadic = true;
  bool run_auxiliary = true;
  bool run_direct = true;
  std::string out_dir = "out";
  bool plots = true;
  /// Write measured wall times; with false the seconds column is 0 and
  /// reruns are byte-identical.
  bool timing = true;
  std::uint64_t seed = 1;

  /// Throws std::invalid_argument.
  void validate() const;
  SmootherKind smoother_kind() const { return SmootherKind::parse(smoother, omega, tau); }
};

/// Parses `key = value` lines; `#` starts a comment. Throws
/// std::invalid_argument with the line number on malformed input.
std::vector<std::pair<std::string, std::string>> parse_config_text(std::string_view text);

/// Applies one setting. Keys: cells-per-side, mesh, pre-refine, levels,
/// gamma (G1,G2), zeta, smoother, omega, tau, mbar, sigma, zeta-sched,
/// modes (comma list of cascadic, auxiliary, direct), out, plots, timing,
/// seed, scf-tol, scf-max-iter, correction-tol, correction-max-iter.
void apply_setting(StudyConfig& cfg, std::string_view key, std::string_view value);

struct ErrorRow {
  int level = 0;
  double h = 0.0;
  int dofs = 0;
  int m = 0;
  double lambda = 0.0;
  int varpi = 0;
  double err_h1 = 0.0;
  double err_l2 = 0.0;
  double err_lambda = 0.0;
  long long work = 0;
  double seconds = 0.0;
};

/// Row k holds the final level of a k-level run measured against the
/// direct solve on level k.
struct ErrorTable {
  std::vector<ErrorRow> rows;
  double slope_h1 = 0.0;
  double slope_l2 = 0.0;
  double slope_lambda = 0.0;

  /// Least-squares slopes over the rows with level >= 2.
  void fit_slopes();
};

/// Least-squares slope of log e against log h; NaN for fewer than two
/// points. Throws std::invalid_argument for nonpositive or non-finite input.
double fit_slope(const std::vector<std::pair<double, double>>& points);

inline constexpr std::string_view kErrorsHeader = "level,h,N,m_k,lambda,varpi,err_h1,err_l2,err_lambda,work,seconds";

std::string errors_csv(const ErrorTable& table);
/// Inverse of errors_csv; slopes are refitted. Throws std::invalid_argument.
ErrorTable parse_errors_csv(std::string_view text);

struct TraceRow {
  std::string method;
  /// Number of levels of the run the record belongs to.
  int run_levels = 0;
  LevelRecord record;
};
inline constexpr std::string_view kTraceHeader = "method,run,level,h,N,m_k,lambda,varpi,scf_converged,dropped,nnz,work";
std::string trace_csv(const std::vector<TraceRow>& rows);

struct DefectSummary {
  int pairs_checked = 0;
  double max_normalization = 0.0;
  double max_consistency = 0.0;
  int sign_violations = 0;

  void add(const LevelSystem& level, const Eigenpair& pair);
  bool clean(double normalization_tol = 1e-12, double consistency_tol = 1e-10) const {
    return max_normalization <= normalization_tol && max_consistency <= consistency_tol && sign_violations == 0;
  }
};

struct StudyResult {
  ErrorTable cascadic;
  ErrorTable auxiliary;
  /// λ of the direct solve on levels 1..n.
  std::vector<double> direct_lambda;
  /// Level records of every run, tagged with the run length.
  std::vector<TraceRow> trace;
  WorkReport cascadic_work;
  /// Over every correction level of every cascadic and auxiliary run.
  int max_correction_varpi = 0;
  int unconverged_corrections = 0;
  int dropped_columns = 0;
  DefectSummary defects;
  std::vector<std::filesystem::path> files;
};

/// Runs the configured modes, writes errors.csv, errors_auxiliary.csv,
/// trace.csv, report.txt and the plots into cfg.out_dir. A solver failure
/// flushes the partial trace before propagating.
StudyResult run_study(const StudyConfig& cfg);

/// Same computation without touching the file system.
StudyResult compute_study(const StudyConfig& cfg);

void write_study(const StudyConfig& cfg, StudyResult& result);

std::string study_report(const StudyConfig& cfg, const StudyResult& result);

/// One log-log series of an error plot.
struct PlotSeries {
  std::string label;
  std::vector<std::pair<double, double>> points;  // (h, error), positive only
};

/// Self-contained log-log SVG with slope-1 and slope-2 guide lines. Prints
/// an "insufficient data" note when no series has two points.
std::string loglog_svg(const std::string& title, const std::string& y_label, const std::vector<PlotSeries>& series);

/// Writes eigenvalue_errors.svg and eigenfunction_errors.svg into `dir`.
std::vector<std::filesystem::path> emit_plots(const ErrorTable& cascadic, const ErrorTable* auxiliary,
                                              const std::filesystem::path& dir);

struct CheckResult {
  std::string name;
  bool passed = false;
  std::string detail;
};

/// Built-in invariant suite on small problems; randomized properties draw
/// from `seed`.
std::vector<CheckResult> run_invariant_checks(std::uint64_t seed);

}  // namespace gpecmg
