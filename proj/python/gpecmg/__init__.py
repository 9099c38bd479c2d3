"""Cascadic multigrid ground states of the Gross-Pitaevskii equation."""

from ._gpecmg import (
    LevelSystem,
    Mesh,
    SolverError,
    cascadic_solve,
    direct_solve,
    read_mesh,
    refine,
    run_invariant_checks,
    schedule_m,
    smooth,
    solve,
    structured_unit_square,
    write_mesh,
)

__all__ = [
    "LevelSystem",
    "Mesh",
    "SolverError",
    "cascadic_solve",
    "direct_solve",
    "read_mesh",
    "refine",
    "run_invariant_checks",
    "schedule_m",
    "smooth",
    "solve",
    "structured_unit_square",
    "write_mesh",
]
