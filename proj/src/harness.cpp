#include "gpecmg/harness.hpp"

#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <random>
#include <sstream>
#include <stdexcept>

namespace gpecmg {
namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = s.find(sep, start);
    out.push_back(s.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

template <class T>
T parse_number(std::string_view key, std::string_view text) {
  text = trim(text);
  T value{};
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size() || text.empty()) {
    throw std::invalid_argument("invalid value '" + std::string(text) + "' for " + std::string(key));
  }
  return value;
}

bool parse_bool(std::string_view key, std::string_view text) {
  text = trim(text);
  if (text == "true" || text == "1" || text == "yes" || text == "on") return true;
  if (text == "false" || text == "0" || text == "no" || text == "off") return false;
  throw std::invalid_argument("invalid boolean '" + std::string(text) + "' for " + std::string(key));
}

// 17 significant digits round-trip every double; NaN is spelled without a sign.
std::string fmt(double v) {
  if (std::isnan(v)) return "nan";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

Mesh load_coarse_mesh(const StudyConfig& cfg) {
  if (cfg.mesh_path.empty()) return build_structured_unit_square(cfg.cells_per_side);
  std::ifstream in(cfg.mesh_path);
  if (!in) throw std::invalid_argument("cannot open mesh file " + cfg.mesh_path);
  std::stringstream ss;
  ss << in.rdbuf();
  return read_mesh(ss.str());
}

void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << content;
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

ErrorRow make_row(const LevelSystem& level, int k, const Eigenpair& pair, const Eigenpair* reference) {
  ErrorRow row;
  row.level = k;
  row.h = level.mesh_size();
  row.dofs = level.num_dofs();
  row.lambda = pair.lambda;
  if (reference) {
    const Vector e = pair.u - reference->u;
    row.err_h1 = h1_norm(e, level.laplace(), level.mass());
    row.err_l2 = l2_norm(e, level.mass());
    row.err_lambda = std::abs(pair.lambda - reference->lambda);
  } else {
    row.err_h1 = row.err_l2 = row.err_lambda = kNaN;
  }
  return row;
}

void note_corrections(StudyResult& out, const std::vector<LevelRecord>& trace) {
  for (const auto& r : trace) {
    if (r.level < 2) continue;
    out.max_correction_varpi = std::max(out.max_correction_varpi, r.varpi);
    if (!r.scf_converged) ++out.unconverged_corrections;
    out.dropped_columns += r.dropped_columns;
  }
}

void compute_into(const StudyConfig& cfg, StudyResult& out) {
  cfg.validate();
  const MultilevelSystem system(Hierarchy(load_coarse_mesh(cfg), cfg.pre_refinements, cfg.n_levels), cfg.problem);
  const int n = cfg.n_levels;

  std::vector<Eigenpair> direct;
  if (cfg.run_direct) {
    const auto solves = direct_solve_levels(system, cfg.direct);
    for (int k = 1; k <= n; ++k) {
      const auto& s = solves[static_cast<std::size_t>(k - 1)];
      const LevelSystem& level = system.level(k);
      out.defects.add(level, s.pair);
      out.direct_lambda.push_back(s.pair.lambda);
      LevelRecord r;
      r.level = k;
      r.h = level.mesh_size();
      r.dofs = level.num_dofs();
      r.lambda = s.pair.lambda;
      r.varpi = s.iterations;
      r.scf_converged = s.converged;
      r.nnz = level.laplace().nonZeros();
      r.cubic_assemblies = s.cubic_assemblies;
      out.trace.push_back({"direct", n, r});
      direct.push_back(s.pair);
    }
  }

  if (!cfg.run_cascadic) return;
  CascadicOptions options;
  options.schedule = cfg.schedule;
  options.smoother = cfg.smoother_kind();
  options.schedule.alpha = options.smoother.alpha();
  options.level_one = cfg.level_one;
  options.correction = cfg.correction;

  for (int k = 1; k <= n; ++k) {
    const LevelSystem& level = system.level(k);
    const Eigenpair* reference = cfg.run_direct ? &direct[static_cast<std::size_t>(k - 1)] : nullptr;

    const auto t0 = std::chrono::steady_clock::now();
    const CascadicResult run = cascadic_solve(system, options, k);
    const double casc_seconds = seconds_since(t0);
    for (int j = 1; j <= k; ++j) out.defects.add(system.level(j), run.pairs[static_cast<std::size_t>(j - 1)]);
    note_corrections(out, run.trace);
    for (const auto& r : run.trace) out.trace.push_back({"cascadic", k, r});

    ErrorRow row = make_row(level, k, run.final_pair(), reference);
    row.m = run.trace.back().m;
    row.varpi = run.trace.back().varpi;
    row.work = run.work.smoothing_work;
    row.seconds = cfg.timing ? casc_seconds : 0.0;
    out.cascadic.rows.push_back(row);
    if (k == n) out.cascadic_work = run.work;

    if (!cfg.run_auxiliary) continue;
    const auto t1 = std::chrono::steady_clock::now();
    const AuxiliaryResult aux = auxiliary_solve(system, run, cfg.correction);
    const double aux_seconds = seconds_since(t1);
    for (int j = 2; j <= k; ++j) out.defects.add(system.level(j), aux.pairs[static_cast<std::size_t>(j - 1)]);
    note_corrections(out, aux.trace);
    for (const auto& r : aux.trace) out.trace.push_back({"auxiliary", k, r});
    ErrorRow arow = make_row(level, k, aux.pairs.back(), reference);
    arow.varpi = aux.trace.back().varpi;
    arow.seconds = cfg.timing ? aux_seconds : 0.0;
    out.auxiliary.rows.push_back(arow);
  }
  out.cascadic.fit_slopes();
  out.auxiliary.fit_slopes();
}

std::string modes_text(const StudyConfig& cfg) {
  std::string s;
  auto add = [&](bool on, const char* name) {
    if (!on) return;
    if (!s.empty()) s += ',';
    s += name;
  };
  add(cfg.run_cascadic, "cascadic");
  add(cfg.run_auxiliary, "auxiliary");
  add(cfg.run_direct, "direct");
  return s;
}

void table_text(std::ostringstream& os, const std::string& title, const ErrorTable& t) {
  os << title << '\n';
  char buf[256];
  std::snprintf(buf, sizeof buf, "  %5s %10s %8s %6s %18s %5s %11s %11s %11s %12s\n", "level", "h", "N", "m_k", "lambda",
                "varpi", "err_h1", "err_l2", "err_lambda", "work");
  os << buf;
  for (const auto& r : t.rows) {
    std::snprintf(buf, sizeof buf, "  %5d %10.6f %8d %6d %18.12f %5d %11.3e %11.3e %11.3e %12lld\n", r.level, r.h, r.dofs,
                  r.m, r.lambda, r.varpi, r.err_h1, r.err_l2, r.err_lambda, r.work);
    os << buf;
  }
  os << "  slopes (levels >= 2): h1 " << fmt(t.slope_h1) << ", l2 " << fmt(t.slope_l2) << ", lambda "
     << fmt(t.slope_lambda) << "\n\n";
}

}  // namespace

void StudyConfig::validate() const {
  if (mesh_path.empty() && cells_per_side < 2) throw std::invalid_argument("cells-per-side must be at least 2");
  if (pre_refinements < 0) throw std::invalid_argument("pre-refine must be nonnegative");
  if (n_levels < 1) throw std::invalid_argument("levels must be at least 1");
  if (!run_cascadic && !run_direct && !run_auxiliary) throw std::invalid_argument("no modes selected");
  if (run_auxiliary && !run_cascadic) throw std::invalid_argument("auxiliary mode is paired with a cascadic run");
  if (out_dir.empty()) throw std::invalid_argument("output directory must be set");
  problem.validate();
  schedule.validate();
  smoother_kind();
  level_one.validate();
  correction.validate();
  direct.validate();
}

std::vector<std::pair<std::string, std::string>> parse_config_text(std::string_view text) {
  std::vector<std::pair<std::string, std::string>> out;
  int line_no = 0;
  for (auto line : split(text, '\n')) {
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw std::invalid_argument("config line " + std::to_string(line_no) + ": expected 'key = value'");
    }
    const auto key = trim(line.substr(0, eq));
    const auto value = trim(line.substr(eq + 1));
    if (key.empty()) throw std::invalid_argument("config line " + std::to_string(line_no) + ": empty key");
    out.emplace_back(std::string(key), std::string(value));
  }
  return out;
}

void apply_setting(StudyConfig& cfg, std::string_view key, std::string_view value) {
  value = trim(value);
  if (key == "cells-per-side") {
    cfg.cells_per_side = parse_number<int>(key, value);
  } else if (key == "mesh") {
    cfg.mesh_path = std::string(value);
  } else if (key == "pre-refine") {
    cfg.pre_refinements = parse_number<int>(key, value);
  } else if (key == "levels") {
    cfg.n_levels = parse_number<int>(key, value);
  } else if (key == "gamma") {
    const auto parts = split(value, ',');
    if (parts.size() != 2) throw std::invalid_argument("gamma expects G1,G2");
    cfg.problem.gamma = {parse_number<double>(key, parts[0]), parse_number<double>(key, parts[1])};
  } else if (key == "zeta") {
    cfg.problem.zeta = parse_number<double>(key, value);
  } else if (key == "smoother") {
    SmootherKind::parse(value);
    cfg.smoother = std::string(value);
  } else if (key == "omega") {
    cfg.omega = parse_number<double>(key, value);
  } else if (key == "tau") {
    cfg.tau = parse_number<double>(key, value);
  } else if (key == "mbar") {
    cfg.schedule.m_bar = parse_number<double>(key, value);
  } else if (key == "sigma") {
    cfg.schedule.sigma = parse_number<double>(key, value);
  } else if (key == "zeta-sched") {
    cfg.schedule.zeta_sched = parse_number<double>(key, value);
  } else if (key == "modes") {
    cfg.run_cascadic = cfg.run_auxiliary = cfg.run_direct = false;
    for (auto m : split(value, ',')) {
      m = trim(m);
      if (m == "cascadic") {
        cfg.run_cascadic = true;
      } else if (m == "auxiliary") {
        cfg.run_auxiliary = true;
      } else if (m == "direct") {
        cfg.run_direct = true;
      } else {
        throw std::invalid_argument("unknown mode '" + std::string(m) + "' (expected cascadic, auxiliary, direct)");
      }
    }
  } else if (key == "out") {
    cfg.out_dir = std::string(value);
  } else if (key == "plots") {
    cfg.plots = parse_bool(key, value);
  } else if (key == "timing") {
    cfg.timing = parse_bool(key, value);
  } else if (key == "seed") {
    cfg.seed = parse_number<std::uint64_t>(key, value);
  } else if (key == "scf-tol") {
    cfg.level_one.tol_lambda = cfg.direct.tol_lambda = parse_number<double>(key, value);
  } else if (key == "scf-max-iter") {
    cfg.level_one.max_iter = cfg.direct.max_iter = parse_number<int>(key, value);
  } else if (key == "correction-tol") {
    cfg.correction.tol_lambda = parse_number<double>(key, value);
  } else if (key == "correction-max-iter") {
    cfg.correction.max_iter = parse_number<int>(key, value);
  } else {
    throw std::invalid_argument("unknown setting '" + std::string(key) + "'");
  }
}

double fit_slope(const std::vector<std::pair<double, double>>& points) {
  for (const auto& [h, e] : points) {
    if (!(h > 0.0) || !(e > 0.0) || !std::isfinite(h) || !std::isfinite(e)) {
      throw std::invalid_argument("fit_slope needs positive finite data");
    }
  }
  if (points.size() < 2) return kNaN;
  double mx = 0.0, my = 0.0;
  for (const auto& [h, e] : points) {
    mx += std::log(h);
    my += std::log(e);
  }
  mx /= static_cast<double>(points.size());
  my /= static_cast<double>(points.size());
  double sxy = 0.0, sxx = 0.0;
  for (const auto& [h, e] : points) {
    sxy += (std::log(h) - mx) * (std::log(e) - my);
    sxx += (std::log(h) - mx) * (std::log(h) - mx);
  }
  return sxx > 0.0 ? sxy / sxx : kNaN;
}

void ErrorTable::fit_slopes() {
  auto slope = [&](double ErrorRow::*field) {
    std::vector<std::pair<double, double>> pts;
    for (const auto& r : rows) {
      if (r.level < 2) continue;
      const double e = r.*field;
      if (!(e > 0.0) || !std::isfinite(e)) return kNaN;
      pts.emplace_back(r.h, e);
    }
    return fit_slope(pts);
  };
  slope_h1 = slope(&ErrorRow::err_h1);
  slope_l2 = slope(&ErrorRow::err_l2);
  slope_lambda = slope(&ErrorRow::err_lambda);
}

std::string errors_csv(const ErrorTable& table) {
  std::string s(kErrorsHeader);
  s += '\n';
  for (const auto& r : table.rows) {
    s += std::to_string(r.level) + ',' + fmt(r.h) + ',' + std::to_string(r.dofs) + ',' + std::to_string(r.m) + ',' +
         fmt(r.lambda) + ',' + std::to_string(r.varpi) + ',' + fmt(r.err_h1) + ',' + fmt(r.err_l2) + ',' +
         fmt(r.err_lambda) + ',' + std::to_string(r.work) + ',' + fmt(r.seconds) + '\n';
  }
  return s;
}

ErrorTable parse_errors_csv(std::string_view text) {
  auto lines = split(text, '\n');
  if (lines.empty() || trim(lines[0]) != kErrorsHeader) throw std::invalid_argument("errors.csv: unexpected header");
  ErrorTable t;
  for (std::size_t i = 1; i < lines.size(); ++i) {
    const auto line = trim(lines[i]);
    if (line.empty()) continue;
    const auto f = split(line, ',');
    if (f.size() != 11) throw std::invalid_argument("errors.csv line " + std::to_string(i + 1) + ": expected 11 fields");
    ErrorRow r;
    r.level = parse_number<int>("level", f[0]);
    r.h = parse_number<double>("h", f[1]);
    r.dofs = parse_number<int>("N", f[2]);
    r.m = parse_number<int>("m_k", f[3]);
    r.lambda = parse_number<double>("lambda", f[4]);
    r.varpi = parse_number<int>("varpi", f[5]);
    r.err_h1 = parse_number<double>("err_h1", f[6]);
    r.err_l2 = parse_number<double>("err_l2", f[7]);
    r.err_lambda = parse_number<double>("err_lambda", f[8]);
    r.work = parse_number<long long>("work", f[9]);
    r.seconds = parse_number<double>("seconds", f[10]);
    t.rows.push_back(r);
  }
  t.fit_slopes();
  return t;
}

std::string trace_csv(const std::vector<TraceRow>& rows) {
  std::string s(kTraceHeader);
  s += '\n';
  for (const auto& t : rows) {
    const auto& r = t.record;
    s += t.method + ',' + std::to_string(t.run_levels) + ',' + std::to_string(r.level) + ',' + fmt(r.h) + ',' +
         std::to_string(r.dofs) + ',' + std::to_string(r.m) + ',' + fmt(r.lambda) + ',' + std::to_string(r.varpi) +
         ',' + (r.scf_converged ? "1" : "0") + ',' + std::to_string(r.dropped_columns) + ',' + std::to_string(r.nnz) +
         ',' + std::to_string(r.work_units) + '\n';
  }
  return s;
}

void DefectSummary::add(const LevelSystem& level, const Eigenpair& pair) {
  const auto d = eigenpair_defects(level, pair);
  ++pairs_checked;
  max_normalization = std::max(max_normalization, d.normalization);
  max_consistency = std::max(max_consistency, d.consistency);
  if (!d.sign_ok) ++sign_violations;
}

StudyResult compute_study(const StudyConfig& cfg) {
  StudyResult out;
  compute_into(cfg, out);
  return out;
}

std::string study_report(const StudyConfig& cfg, const StudyResult& r) {
  std::ostringstream os;
  os << "problem: -Δu + (" << fmt(cfg.problem.gamma[0]) << " x² + " << fmt(cfg.problem.gamma[1])
     << " y²) u + " << fmt(cfg.problem.zeta) << " |u|² u = λ u, u = 0 on the boundary\n";
  os << "coarse mesh: "
     << (cfg.mesh_path.empty() ? "structured, " + std::to_string(cfg.cells_per_side) + " cells per side" : cfg.mesh_path)
     << ", pre-refinements " << cfg.pre_refinements << ", levels " << cfg.n_levels << '\n';
  const auto kind = cfg.smoother_kind();
  os << "smoother: " << kind.name() << " (omega " << fmt(kind.omega) << ", tau "
     << (kind.tau ? fmt(*kind.tau) : std::string("auto")) << ")\n";
  os << "schedule: mbar " << fmt(cfg.schedule.m_bar) << ", sigma " << fmt(cfg.schedule.sigma) << ", beta "
     << fmt(cfg.schedule.beta) << ", exponent " << fmt(cfg.schedule.zeta_sched) << ", alpha "
     << fmt(cfg.smoother_kind().alpha()) << '\n';
  os << "scf: tol " << fmt(cfg.level_one.tol_lambda) << " / max " << cfg.level_one.max_iter << " (full space), tol "
     << fmt(cfg.correction.tol_lambda) << " / max " << cfg.correction.max_iter << " (correction spaces)\n";
  os << "modes: " << modes_text(cfg) << ", seed " << cfg.seed << "\n\n";

  if (!r.direct_lambda.empty()) {
    os << "direct solves\n";
    for (std::size_t k = 0; k < r.direct_lambda.size(); ++k) {
      os << "  level " << k + 1 << "  lambda " << fmt(r.direct_lambda[k]) << '\n';
    }
    os << '\n';
  }
  if (cfg.run_cascadic) {
    table_text(os, "cascadic (row k: final level of a k-level run)", r.cascadic);
    if (!r.cascadic.rows.empty()) {
      const auto& last = r.cascadic.rows.back();
      os << "smoothing work of the " << cfg.n_levels << "-level run: " << r.cascadic_work.smoothing_work
         << " units, " << fmt(static_cast<double>(r.cascadic_work.smoothing_work) / last.dofs) << " per dof\n";
      os << "m_k of that run:";
      for (const auto& t : r.trace) {
        if (t.method == "cascadic" && t.run_levels == cfg.n_levels && t.record.level >= 2) os << ' ' << t.record.m;
      }
      os << "\n\n";
    }
  }
  if (cfg.run_auxiliary) table_text(os, "auxiliary (row k: final level of a k-level run)", r.auxiliary);

  os << "correction-space scf: max sweeps " << r.max_correction_varpi << ", levels stopped at the cap "
     << r.unconverged_corrections << '\n';
  os << "dropped dependent columns: " << r.dropped_columns << '\n';
  os << "eigenpair checks: " << r.defects.pairs_checked << " pairs, max |uᵀMu-1| " << fmt(r.defects.max_normalization)
     << ", max |λ-a(u,u)| " << fmt(r.defects.max_consistency) << ", sign violations " << r.defects.sign_violations
     << '\n';
  return os.str();
}

void write_study(const StudyConfig& cfg, StudyResult& result) {
  const std::filesystem::path dir(cfg.out_dir);
  std::filesystem::create_directories(dir);
  auto put = [&](const std::string& name, const std::string& content) {
    write_file(dir / name, content);
    result.files.push_back(dir / name);
  };
  if (cfg.run_cascadic) put("errors.csv", errors_csv(result.cascadic));
  if (cfg.run_auxiliary) put("errors_auxiliary.csv", errors_csv(result.auxiliary));
  put("trace.csv", trace_csv(result.trace));
  put("report.txt", study_report(cfg, result));
  if (cfg.plots && cfg.run_cascadic) {
    for (auto& p : emit_plots(result.cascadic, cfg.run_auxiliary ? &result.auxiliary : nullptr, dir)) {
      result.files.push_back(p);
    }
  }
}

StudyResult run_study(const StudyConfig& cfg) {
  cfg.validate();
  StudyResult out;
  try {
    compute_into(cfg, out);
  } catch (const SolverError&) {
    std::filesystem::create_directories(cfg.out_dir);
    write_file(std::filesystem::path(cfg.out_dir) / "trace.csv", trace_csv(out.trace));
    throw;
  }
  write_study(cfg, out);
  return out;
}

}  // namespace gpecmg
