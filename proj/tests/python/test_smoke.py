import math

import numpy as np
import pytest
import scipy.sparse as sp

import gpecmg


def test_structured_mesh_and_round_trip():
    mesh = gpecmg.structured_unit_square(3)
    assert (mesh.num_vertices, mesh.num_triangles) == (16, 18)
    back = gpecmg.read_mesh(gpecmg.write_mesh(mesh))
    np.testing.assert_array_equal(back.vertices, mesh.vertices)
    np.testing.assert_array_equal(back.triangles, mesh.triangles)
    fine = gpecmg.refine(mesh)
    assert fine.num_vertices == mesh.num_vertices + mesh.num_edges
    assert fine.num_triangles == 4 * mesh.num_triangles


def test_bad_mesh_raises():
    with pytest.raises(ValueError):
        gpecmg.read_mesh("3 1\n0 0\n1 0\n0 1\n0 1 7\n")


def test_matrices_are_symmetric_scipy():
    level = gpecmg.LevelSystem(gpecmg.structured_unit_square(6))
    a, m = level.laplace, level.mass
    assert sp.issparse(a) and a.shape == (25, 25)
    assert abs(a - a.T).max() == 0.0
    # Constant 1 on the free dofs has mass below the unit area.
    ones = np.ones(level.num_dofs)
    assert 0.0 < ones @ (m @ ones) < 1.0


def test_linear_eigenvalue_near_two_pi_squared():
    level = gpecmg.LevelSystem(gpecmg.structured_unit_square(16), gamma=(0.0, 0.0), zeta=0.0)
    lam, u, sweeps, converged = level.scf(level.bubble())
    assert converged
    assert abs(lam - 2 * math.pi**2) / (2 * math.pi**2) < 0.02
    assert abs(u @ (level.mass @ u) - 1.0) < 1e-12


def test_smoother_reduces_energy():
    level = gpecmg.LevelSystem(gpecmg.structured_unit_square(8))
    a = level.laplace
    rng = np.random.default_rng(3)
    x0 = rng.uniform(-1, 1, level.num_dofs)
    zero = np.zeros_like(x0)
    for kind in ("cg", "jacobi", "sgs", "ssor", "richardson"):
        x = gpecmg.smooth(a, zero, x0, 5, kind)
        assert x @ (a @ x) < x0 @ (a @ x0)
    with pytest.raises(ValueError):
        gpecmg.smooth(a, zero, x0, 1, "nope")


def test_schedule():
    assert gpecmg.schedule_m(4, 5) == 14
    assert gpecmg.schedule_m(2, 5) == 169


def test_cascadic_close_to_direct():
    coarse = gpecmg.structured_unit_square(4)
    run = gpecmg.cascadic_solve(coarse, 3)
    direct = gpecmg.direct_solve(coarse, 3)
    assert len(direct) == 3 and len(run["trace"]) == 3
    assert abs(run["lambda"] - direct[-1]) < 1e-2 * direct[-1]
    assert run["work"] > 0


def test_study_and_checks(tmp_path):
    out = gpecmg.solve({"cells-per-side": "4", "levels": "3", "out": str(tmp_path), "timing": "false"}, write=True)
    assert len(out["cascadic"]["rows"]) == 3
    assert (tmp_path / "errors.csv").read_text().startswith(
        "level,h,N,m_k,lambda,varpi,err_h1,err_l2,err_lambda,work,seconds"
    )
    with pytest.raises(ValueError):
        gpecmg.solve({"levels": "0"})
    assert all(passed for _, passed, _ in gpecmg.run_invariant_checks(7))
