#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include "gpecmg/harness.hpp"

namespace {

constexpr int kOk = 0;
constexpr int kInvalid = 1;
constexpr int kSolverFailure = 2;

std::string read_text(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

gpecmg::Mesh coarse_mesh(int cells, const std::string& path) {
  if (!path.empty()) return gpecmg::read_mesh(read_text(path));
  return gpecmg::build_structured_unit_square(cells);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Cascadic multigrid solver for the Gross-Pitaevskii ground state"};
  app.require_subcommand(1);

  auto* solve = app.add_subcommand("solve", "run a convergence study");
  std::string config_path;
  solve->add_option("--config", config_path, "key = value settings file (flags win)");
  // Flag name -> setting key. Values are applied after the config file.
  const std::vector<std::pair<std::string, std::string>> valued = {
      {"--cells-per-side", "cells-per-side"}, {"--mesh", "mesh"},
      {"--pre-refine", "pre-refine"},         {"--levels", "levels"},
      {"--gamma", "gamma"},                   {"--zeta", "zeta"},
      {"--smoother", "smoother"},             {"--omega", "omega"},
      {"--tau", "tau"},                       {"--mbar", "mbar"},
      {"--sigma", "sigma"},                   {"--zeta-sched", "zeta-sched"},
      {"--modes", "modes"},                   {"--out", "out"},
      {"--seed", "seed"},                     {"--correction-max-iter", "correction-max-iter"}};
  std::map<std::string, std::string> values;
  for (const auto& [flag, key] : valued) solve->add_option(flag, values[key]);
  bool no_plots = false, no_timing = false;
  solve->add_flag("--no-plots", no_plots, "skip the SVG plots");
  solve->add_flag("--no-timing", no_timing, "write 0 in the seconds column");

  auto* check = app.add_subcommand("check", "run the built-in invariant suite");
  std::uint64_t check_seed = 1;
  check->add_option("--seed", check_seed, "seed for randomized properties");

  auto* mesh_cmd = app.add_subcommand("mesh", "write a (refined) mesh in the ASCII mesh format");
  int mesh_cells = 2, mesh_refine = 0;
  std::string mesh_in, mesh_out;
  mesh_cmd->add_option("--cells-per-side", mesh_cells);
  mesh_cmd->add_option("--mesh", mesh_in, "input mesh file");
  mesh_cmd->add_option("--refine", mesh_refine, "regular refinements to apply");
  mesh_cmd->add_option("--out", mesh_out, "output file (stdout when omitted)");

  auto* export_cmd = app.add_subcommand("export", "write an assembled matrix as 'i j value' lines");
  int export_cells = 4;
  std::string export_mesh, export_matrix = "laplace", export_out, export_gamma = "1,1";
  export_cmd->add_option("--cells-per-side", export_cells);
  export_cmd->add_option("--mesh", export_mesh);
  export_cmd->add_option("--matrix", export_matrix, "laplace, mass or potential")
      ->check(CLI::IsMember({"laplace", "mass", "potential"}));
  export_cmd->add_option("--gamma", export_gamma);
  export_cmd->add_option("--out", export_out, "output file (stdout when omitted)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e) == 0 ? kOk : kInvalid;
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kInvalid;
  }

  try {
    if (*solve) {
      gpecmg::StudyConfig cfg;
      if (!config_path.empty()) {
        for (const auto& [key, value] : gpecmg::parse_config_text(read_text(config_path))) {
          gpecmg::apply_setting(cfg, key, value);
        }
      }
      for (const auto& [flag, key] : valued) {
        if (solve->count(flag) > 0) gpecmg::apply_setting(cfg, key, values[key]);
      }
      if (no_plots) cfg.plots = false;
      if (no_timing) cfg.timing = false;
      cfg.validate();
      const auto result = gpecmg::run_study(cfg);
      std::cout << gpecmg::study_report(cfg, result);
      for (const auto& f : result.files) std::cout << "wrote " << f.string() << '\n';
      return kOk;
    }
    if (*check) {
      bool all = true;
      for (const auto& c : gpecmg::run_invariant_checks(check_seed)) {
        std::cout << (c.passed ? "PASS " : "FAIL ") << c.name << " (" << c.detail << ")\n";
        all = all && c.passed;
      }
      return all ? kOk : kSolverFailure;
    }
    if (*mesh_cmd) {
      gpecmg::Mesh mesh = coarse_mesh(mesh_cells, mesh_in);
      for (int i = 0; i < mesh_refine; ++i) mesh = *gpecmg::refine_regular(mesh).mesh;
      const std::string text = gpecmg::write_mesh(mesh);
      if (mesh_out.empty()) {
        std::cout << text;
      } else {
        std::ofstream(mesh_out) << text;
      }
      return kOk;
    }
    if (*export_cmd) {
      gpecmg::StudyConfig scratch;
      gpecmg::apply_setting(scratch, "gamma", export_gamma);
      const gpecmg::FeSpace space(std::make_shared<const gpecmg::Mesh>(coarse_mesh(export_cells, export_mesh)));
      const gpecmg::SparseMatrix m = export_matrix == "mass"        ? gpecmg::assemble_mass(space)
                                     : export_matrix == "potential" ? gpecmg::assemble_potential(space, scratch.problem.gamma)
                                                                    : gpecmg::assemble_laplace(space);
      const std::string text = gpecmg::to_coordinate_text(m);
      if (export_out.empty()) {
        std::cout << text;
      } else {
        std::ofstream(export_out) << text;
      }
      return kOk;
    }
  } catch (const gpecmg::SolverError& e) {
    std::cerr << "solver failure: " << e.what() << '\n';
    return kSolverFailure;
  } catch (const std::invalid_argument& e) {
    std::cerr << "invalid input: " << e.what() << '\n';
    return kInvalid;
  } catch (const std::out_of_range& e) {
    std::cerr << "invalid input: " << e.what() << '\n';
    return kInvalid;
  } catch (const gpecmg::MeshError& e) {
    std::cerr << "invalid mesh: " << e.what() << '\n';
    return kInvalid;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kSolverFailure;
  }
  return kOk;
}
