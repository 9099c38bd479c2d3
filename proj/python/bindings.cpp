#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <map>
#include <memory>
#include <string>

#include "gpecmg/harness.hpp"

namespace py = pybind11;
using namespace gpecmg;

namespace {

using MeshPtr = std::shared_ptr<Mesh>;

Eigen::MatrixXd vertex_array(const Mesh& mesh) {
  Eigen::MatrixXd out(mesh.num_vertices(), 2);
  for (int i = 0; i < mesh.num_vertices(); ++i) {
    out(i, 0) = mesh.vertices()[static_cast<std::size_t>(i)].x;
    out(i, 1) = mesh.vertices()[static_cast<std::size_t>(i)].y;
  }
  return out;
}

Eigen::MatrixXi triangle_array(const Mesh& mesh) {
  Eigen::MatrixXi out(mesh.num_triangles(), 3);
  for (int t = 0; t < mesh.num_triangles(); ++t) {
    for (int j = 0; j < 3; ++j) out(t, j) = mesh.triangles()[static_cast<std::size_t>(t)][static_cast<std::size_t>(j)];
  }
  return out;
}

MeshPtr mesh_from_arrays(const Eigen::MatrixXd& xy, const Eigen::MatrixXi& tri) {
  if (xy.cols() != 2 || tri.cols() != 3) throw std::invalid_argument("expected (nv, 2) vertices and (nt, 3) triangles");
  std::vector<Point> v(static_cast<std::size_t>(xy.rows()));
  for (Eigen::Index i = 0; i < xy.rows(); ++i) v[static_cast<std::size_t>(i)] = {xy(i, 0), xy(i, 1)};
  std::vector<Triangle> t(static_cast<std::size_t>(tri.rows()));
  for (Eigen::Index i = 0; i < tri.rows(); ++i) t[static_cast<std::size_t>(i)] = {tri(i, 0), tri(i, 1), tri(i, 2)};
  return std::make_shared<Mesh>(std::move(v), std::move(t));
}

py::dict record_dict(const LevelRecord& r) {
  py::dict d;
  d["level"] = r.level;
  d["h"] = r.h;
  d["N"] = r.dofs;
  d["m_k"] = r.m;
  d["lambda"] = r.lambda;
  d["varpi"] = r.varpi;
  d["scf_converged"] = r.scf_converged;
  d["dropped"] = r.dropped_columns;
  d["nnz"] = r.nnz;
  d["work"] = r.work_units;
  return d;
}

py::list rows_list(const ErrorTable& t) {
  py::list out;
  for (const auto& r : t.rows) {
    py::dict d;
    d["level"] = r.level;
    d["h"] = r.h;
    d["N"] = r.dofs;
    d["m_k"] = r.m;
    d["lambda"] = r.lambda;
    d["varpi"] = r.varpi;
    d["err_h1"] = r.err_h1;
    d["err_l2"] = r.err_l2;
    d["err_lambda"] = r.err_lambda;
    d["work"] = r.work;
    d["seconds"] = r.seconds;
    out.append(d);
  }
  return out;
}

py::dict table_dict(const ErrorTable& t) {
  py::dict d;
  d["rows"] = rows_list(t);
  d["slope_h1"] = t.slope_h1;
  d["slope_l2"] = t.slope_l2;
  d["slope_lambda"] = t.slope_lambda;
  return d;
}

MultilevelSystem make_system(const MeshPtr& coarse, int levels, std::array<double, 2> gamma, double zeta) {
  return MultilevelSystem(Hierarchy(*coarse, 0, levels), GpeProblem{gamma, zeta});
}

}  // namespace

PYBIND11_MODULE(_gpecmg, m) {
  m.doc() = "Cascadic multigrid for Gross-Pitaevskii ground states (P1 finite elements)";

  py::register_exception<SolverError>(m, "SolverError", PyExc_RuntimeError);
  py::register_exception<MeshError>(m, "MeshError", PyExc_ValueError);

  py::class_<Mesh, MeshPtr>(m, "Mesh")
      .def(py::init(&mesh_from_arrays), py::arg("vertices"), py::arg("triangles"))
      .def_property_readonly("vertices", &vertex_array)
      .def_property_readonly("triangles", &triangle_array)
      .def_property_readonly("num_vertices", &Mesh::num_vertices)
      .def_property_readonly("num_triangles", &Mesh::num_triangles)
      .def_property_readonly("num_edges", &Mesh::num_edges)
      .def_property_readonly("boundary", &Mesh::boundary_flags)
      .def("mesh_size", &Mesh::mesh_size);

  m.def("structured_unit_square", [](int cells) { return std::make_shared<Mesh>(build_structured_unit_square(cells)); },
        py::arg("cells_per_side"));
  m.def("read_mesh", [](const std::string& text) { return std::make_shared<Mesh>(read_mesh(text)); },
        py::arg("text"));
  m.def("write_mesh", [](const MeshPtr& mesh) { return write_mesh(*mesh); }, py::arg("mesh"));
  m.def("refine", [](const MeshPtr& mesh) { return std::make_shared<Mesh>(*refine_regular(*mesh).mesh); }, py::arg("mesh"),
        "One step of regular (red) refinement.");

  py::class_<LevelSystem>(m, "LevelSystem")
      .def(py::init([](const MeshPtr& mesh, std::array<double, 2> gamma, double zeta) {
             return LevelSystem(mesh, GpeProblem{gamma, zeta});
           }),
           py::arg("mesh"), py::arg("gamma") = std::array<double, 2>{1.0, 1.0}, py::arg("zeta") = 1.0)
      .def_property_readonly("num_dofs", &LevelSystem::num_dofs)
      .def_property_readonly("mesh_size", &LevelSystem::mesh_size)
      .def_property_readonly("laplace", &LevelSystem::laplace)
      .def_property_readonly("mass", &LevelSystem::mass)
      .def_property_readonly("potential", &LevelSystem::potential)
      .def("cubic", &LevelSystem::cubic, py::arg("u"))
      .def("energy_form", &LevelSystem::energy_form, py::arg("u"))
      .def("bubble", &bubble_initial_guess)
      .def("scf", [](const LevelSystem& s, const Vector& u0, double tol, int max_iter, const std::string& backend) {
             if (backend != "dense" && backend != "sparse") throw std::invalid_argument("backend must be dense or sparse");
             const auto r = scf_solve(s, u0, ScfConfig{tol, max_iter, 1e-12},
                                      backend == "dense" ? Backend::Dense : Backend::Sparse);
             return py::make_tuple(r.pair.lambda, r.pair.u, r.iterations, r.converged);
           },
           py::arg("u0"), py::arg("tol") = 1e-10, py::arg("max_iter") = 50, py::arg("backend") = "sparse",
           "Returns (lambda, u, sweeps, converged).");

  m.def("smooth",
        [](const SparseMatrix& a, const Vector& rhs, const Vector& x0, int steps, const std::string& kind,
           std::optional<double> omega, std::optional<double> tau) {
          return smooth(a, rhs, x0, steps, resolve_for(SmootherKind::parse(kind, omega, tau), a));
        },
        py::arg("a"), py::arg("rhs"), py::arg("x0"), py::arg("steps"), py::arg("kind") = "cg",
        py::arg("omega") = py::none(), py::arg("tau") = py::none());

  m.def("schedule_m",
        [](int k, int n, double m_bar, double sigma, double beta, double zeta_sched, double alpha) {
          return schedule_m(k, n, Schedule{m_bar, sigma, beta, zeta_sched, alpha});
        },
        py::arg("k"), py::arg("n"), py::arg("m_bar") = 2.0, py::arg("sigma") = 2.0, py::arg("beta") = 2.0,
        py::arg("zeta_sched") = 1.8, py::arg("alpha") = 1.0);

  m.def("cascadic_solve",
        [](const MeshPtr& coarse, int levels, std::array<double, 2> gamma, double zeta, const std::string& smoother) {
          const auto system = make_system(coarse, levels, gamma, zeta);
          CascadicOptions opt;
          opt.smoother = SmootherKind::parse(smoother);
          opt.schedule.alpha = opt.smoother.alpha();
          const auto run = cascadic_solve(system, opt);
          py::list trace;
          for (const auto& r : run.trace) trace.append(record_dict(r));
          py::dict out;
          out["lambda"] = run.final_pair().lambda;
          out["u"] = run.final_pair().u;
          out["trace"] = trace;
          out["work"] = run.work.smoothing_work;
          return out;
        },
        py::arg("coarse"), py::arg("levels"), py::arg("gamma") = std::array<double, 2>{1.0, 1.0},
        py::arg("zeta") = 1.0, py::arg("smoother") = "cg");

  m.def("direct_solve",
        [](const MeshPtr& coarse, int levels, std::array<double, 2> gamma, double zeta) {
          const auto system = make_system(coarse, levels, gamma, zeta);
          std::vector<double> out;
          for (const auto& r : direct_solve_levels(system, ScfConfig::full_space())) out.push_back(r.pair.lambda);
          return out;
        },
        py::arg("coarse"), py::arg("levels"), py::arg("gamma") = std::array<double, 2>{1.0, 1.0},
        py::arg("zeta") = 1.0, "Eigenvalues of the standard solve on levels 1..levels.");

  m.def("solve",
        [](const std::map<std::string, std::string>& settings, bool write) {
          StudyConfig cfg;
          for (const auto& [k, v] : settings) apply_setting(cfg, k, v);
          cfg.validate();
          StudyResult r = write ? run_study(cfg) : compute_study(cfg);
          py::dict out;
          out["cascadic"] = table_dict(r.cascadic);
          out["auxiliary"] = table_dict(r.auxiliary);
          out["direct_lambda"] = r.direct_lambda;
          out["report"] = study_report(cfg, r);
          py::list files;
          for (const auto& f : r.files) files.append(f.string());
          out["files"] = files;
          return out;
        },
        py::arg("settings") = std::map<std::string, std::string>{}, py::arg("write") = false,
        "Convergence study; settings use the config-file keys with string values.");

  m.def("run_invariant_checks",
        [](std::uint64_t seed) {
          std::vector<std::tuple<std::string, bool, std::string>> out;
          for (const auto& c : run_invariant_checks(seed)) out.emplace_back(c.name, c.passed, c.detail);
          return out;
        },
        py::arg("seed") = 1);
}
