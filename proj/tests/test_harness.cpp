#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "gpecmg/harness.hpp"

using namespace gpecmg;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("gpecmg_test_" + name);
  fs::remove_all(p);
  return p;
}

StudyConfig small_config(const fs::path& out) {
  StudyConfig cfg;
  cfg.cells_per_side = 4;
  cfg.n_levels = 3;
  cfg.out_dir = out.string();
  cfg.timing = false;
  return cfg;
}

}  // namespace

TEST_CASE("fit_slope") {
  CHECK(fit_slope({{0.5, 0.5}, {0.25, 0.25}}) == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(fit_slope({{0.5, 0.25}, {0.25, 0.0625}}) == doctest::Approx(2.0).epsilon(1e-14));
  CHECK(std::isnan(fit_slope({{0.5, 0.1}})));
  CHECK(std::isnan(fit_slope({})));
  CHECK_THROWS_AS(fit_slope({{0.5, 0.0}, {0.25, 0.1}}), std::invalid_argument);
  CHECK_THROWS_AS(fit_slope({{-0.5, 1.0}, {0.25, 0.1}}), std::invalid_argument);
}

TEST_CASE("config text") {
  const auto kv = parse_config_text("# study\nlevels = 5\n  gamma=2, 3  # anisotropic\n\nsmoother = ssor\nomega = 0.7\n");
  REQUIRE(kv.size() == 4);
  StudyConfig cfg;
  for (const auto& [k, v] : kv) apply_setting(cfg, k, v);
  CHECK(cfg.n_levels == 5);
  CHECK(cfg.problem.gamma[0] == 2.0);
  CHECK(cfg.problem.gamma[1] == 3.0);
  CHECK(cfg.smoother_kind().type == SmootherType::Ssor);
  CHECK(cfg.smoother_kind().omega == 0.7);

  // Later settings win, so flags applied after the file override it.
  apply_setting(cfg, "levels", "2");
  CHECK(cfg.n_levels == 2);

  apply_setting(cfg, "modes", "cascadic,direct");
  CHECK(cfg.run_cascadic);
  CHECK(cfg.run_direct);
  CHECK_FALSE(cfg.run_auxiliary);
  apply_setting(cfg, "plots", "false");
  CHECK_FALSE(cfg.plots);

  CHECK_THROWS_AS(parse_config_text("levels 5\n"), std::invalid_argument);
  CHECK_THROWS_AS(apply_setting(cfg, "levels", "five"), std::invalid_argument);
  CHECK_THROWS_AS(apply_setting(cfg, "gamma", "1"), std::invalid_argument);
  CHECK_THROWS_AS(apply_setting(cfg, "modes", "cascadic,fast"), std::invalid_argument);
  CHECK_THROWS_AS(apply_setting(cfg, "smoother", "amg"), std::invalid_argument);
  CHECK_THROWS_AS(apply_setting(cfg, "colour", "blue"), std::invalid_argument);
}

TEST_CASE("config validation") {
  StudyConfig cfg;
  cfg.n_levels = 0;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg = StudyConfig{};
  cfg.run_cascadic = false;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);  // auxiliary needs its cascadic pair
  cfg.run_auxiliary = false;
  CHECK_NOTHROW(cfg.validate());
  cfg.omega = 2.0;
  cfg.smoother = "jacobi";
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg = StudyConfig{};
  cfg.problem.gamma = {-1.0, 0.0};
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
}

TEST_CASE("errors.csv round trip") {
  ErrorTable t;
  t.rows.push_back({1, std::sqrt(2.0) / 6, 25, 0, 23.894983587765299, 9, 0.0, 0.0, 0.0, 0, 0.0});
  t.rows.push_back({2, std::sqrt(2.0) / 12, 121, 4, 22.858187974827, 3, 1.0 / 3, 0.1, 2.1e-3, 3044, 0.0123});
  t.rows.push_back({3, std::sqrt(2.0) / 24, 529, 4, 22.5999, 3, std::nan(""), 1e-300, 4.9e-324, 24738, 1.5});
  const std::string text = errors_csv(t);
  CHECK(text.rfind("level,h,N,m_k,lambda,varpi,err_h1,err_l2,err_lambda,work,seconds\n", 0) == 0);
  CHECK(text.find(",nan,") != std::string::npos);
  const ErrorTable back = parse_errors_csv(text);
  REQUIRE(back.rows.size() == 3);
  for (std::size_t i = 0; i < 3; ++i) {
    const auto &a = t.rows[i], &b = back.rows[i];
    CHECK(a.level == b.level);
    CHECK(a.h == b.h);
    CHECK(a.lambda == b.lambda);
    CHECK(a.err_l2 == b.err_l2);
    CHECK(a.err_lambda == b.err_lambda);
    CHECK(a.work == b.work);
    CHECK(a.seconds == b.seconds);
    CHECK((a.err_h1 == b.err_h1 || (std::isnan(a.err_h1) && std::isnan(b.err_h1))));
  }
  CHECK(errors_csv(back) == text);
  CHECK_THROWS_AS(parse_errors_csv("level,h\n1,2\n"), std::invalid_argument);
  CHECK_THROWS_AS(parse_errors_csv(std::string(kErrorsHeader) + "\n1,2,3\n"), std::invalid_argument);
}

TEST_CASE("plots") {
  const std::vector<PlotSeries> series{{"a", {{0.1, 1e-2}, {0.05, 2.5e-3}}}, {"b", {{0.1, 1e-1}, {0.05, 5e-2}}}};
  const std::string svg = loglog_svg("errors", "err", series);
  CHECK(svg.rfind("<svg", 0) == 0);
  CHECK(svg.find("slope 1") != std::string::npos);
  CHECK(svg.find("slope 2") != std::string::npos);
  CHECK(svg.find("log scale") != std::string::npos);
  CHECK(svg.find("insufficient data") == std::string::npos);
  CHECK(svg.find("href") == std::string::npos);  // self-contained
  CHECK(svg == loglog_svg("errors", "err", series));

  const std::string empty = loglog_svg("errors", "err", {{"a", {{0.1, 1e-2}}}});
  CHECK(empty.find("insufficient data") != std::string::npos);
  CHECK(loglog_svg("errors", "err", {}).find("insufficient data") != std::string::npos);

  // Decades are equally spaced: the axis is logarithmic.
  const std::string wide = loglog_svg("t", "e", {{"a", {{1e-3, 1e-6}, {1e-1, 1e-2}}}});
  CHECK(wide.find(">1e-3<") != std::string::npos);
  CHECK(wide.find(">1e-2<") != std::string::npos);
  CHECK(wide.find(">1e-1<") != std::string::npos);
}

TEST_CASE("one-level study") {
  const fs::path out = scratch("one_level");
  StudyConfig cfg = small_config(out);
  cfg.n_levels = 1;
  const auto r = run_study(cfg);
  REQUIRE(r.cascadic.rows.size() == 1);
  CHECK(r.cascadic.rows[0].err_lambda <= 1e-12);
  CHECK(std::isnan(r.cascadic.slope_h1));
  CHECK(std::isnan(r.cascadic.slope_lambda));
  CHECK(slurp(out / "report.txt").find("lambda nan") != std::string::npos);
  CHECK(slurp(out / "eigenvalue_errors.svg").find("insufficient data") != std::string::npos);
}

TEST_CASE("schedule follows the smoother exponent") {
  StudyConfig cfg = small_config(scratch("jacobi"));
  cfg.smoother = "jacobi";
  cfg.n_levels = 3;
  cfg.run_auxiliary = false;
  cfg.run_direct = false;
  const auto r = compute_study(cfg);
  Schedule half = cfg.schedule;
  half.alpha = 0.5;
  for (const auto& row : r.trace) {
    if (row.record.level >= 2) CHECK(row.record.m == schedule_m(row.record.level, row.run_levels, half));
  }
}

TEST_CASE("study artifacts and reproducibility") {
  const fs::path a = scratch("rerun_a"), b = scratch("rerun_b");
  const auto ra = run_study(small_config(a));
  run_study(small_config(b));
  for (const char* name : {"errors.csv", "errors_auxiliary.csv", "trace.csv", "report.txt", "eigenvalue_errors.svg",
                           "eigenfunction_errors.svg"}) {
    REQUIRE(fs::exists(a / name));
    CHECK(slurp(a / name) == slurp(b / name));
  }
  const ErrorTable parsed = parse_errors_csv(slurp(a / "errors.csv"));
  REQUIRE(parsed.rows.size() == ra.cascadic.rows.size());
  for (std::size_t i = 0; i < parsed.rows.size(); ++i) {
    CHECK(parsed.rows[i].err_h1 == ra.cascadic.rows[i].err_h1);
    CHECK(parsed.rows[i].lambda == ra.cascadic.rows[i].lambda);
  }
  CHECK(parsed.slope_h1 == ra.cascadic.slope_h1);
  CHECK(ra.defects.clean());
  CHECK(ra.defects.pairs_checked > 0);

  StudyConfig no_plots = small_config(scratch("no_plots"));
  no_plots.plots = false;
  no_plots.run_auxiliary = false;
  run_study(no_plots);
  CHECK_FALSE(fs::exists(fs::path(no_plots.out_dir) / "eigenvalue_errors.svg"));
  CHECK_FALSE(fs::exists(fs::path(no_plots.out_dir) / "errors_auxiliary.csv"));
}

TEST_CASE("study without the direct reference reports nan errors") {
  StudyConfig cfg = small_config(scratch("no_direct"));
  cfg.run_direct = false;
  cfg.run_auxiliary = false;
  const auto r = compute_study(cfg);
  CHECK(std::isnan(r.cascadic.rows.back().err_h1));
  CHECK(r.direct_lambda.empty());
}

TEST_CASE("linear direct eigenvalues decrease toward the continuous value") {
  StudyConfig cfg = small_config(scratch("linear"));
  cfg.cells_per_side = 8;
  cfg.n_levels = 4;
  cfg.problem = GpeProblem{{0.0, 0.0}, 0.0};
  cfg.run_cascadic = cfg.run_auxiliary = false;
  const auto r = compute_study(cfg);
  REQUIRE(r.direct_lambda.size() == 4);
  for (std::size_t k = 1; k < 4; ++k) CHECK(r.direct_lambda[k] < r.direct_lambda[k - 1]);
  CHECK(r.direct_lambda.back() > 2.0 * M_PI * M_PI);
}

TEST_CASE("mesh file input") {
  const fs::path dir = scratch("mesh_file");
  fs::create_directories(dir);
  {
    std::ofstream(dir / "coarse.msh") << write_mesh(build_structured_unit_square(4));
  }
  StudyConfig from_file = small_config(dir / "out_file");
  from_file.mesh_path = (dir / "coarse.msh").string();
  const auto a = compute_study(from_file);
  const auto b = compute_study(small_config(dir / "out_grid"));
  CHECK(a.cascadic.rows.back().lambda == b.cascadic.rows.back().lambda);

  StudyConfig missing = small_config(dir / "x");
  missing.mesh_path = (dir / "absent.msh").string();
  CHECK_THROWS_AS(compute_study(missing), std::invalid_argument);
}

TEST_CASE("built-in invariant suite") {
  for (const auto& c : run_invariant_checks(1)) {
    INFO(c.name << ": " << c.detail);
    CHECK(c.passed);
  }
}
