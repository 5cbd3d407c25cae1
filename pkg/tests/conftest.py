from __future__ import annotations

import pytest

from hilfer_picard.hadamard_calculus import LogGrid
from hilfer_picard.picard_engine import existence_radius, solve
from hilfer_picard.problem import Problem
from hilfer_picard.rhs_catalog import LinearInLog, derive_hypotheses


@pytest.fixture(scope="session")
def ml_problem() -> Problem:
    """Linear test problem with a Mittag-Leffler solution."""
    return Problem(alpha=0.5, beta=0.5, x0=1.0, rhs=LinearInLog(0.5, 0.0), b=1.0)


@pytest.fixture(scope="session")
def ml_grid(ml_problem) -> LogGrid:
    hyp = derive_hypotheses(ml_problem.rhs, ml_problem)
    return LogGrid(min(existence_radius(hyp, ml_problem), 0.5), 2048)


@pytest.fixture(scope="session")
def ml_run(ml_problem, ml_grid):
    return solve(ml_problem, ml_grid, tol=1e-10)
