"""Numerical tolerances shared by every module.

Tolerances live in a context variable so that a run (or a single thread of
work) can override them without touching global state::

    with using_tolerances(feasibility=1e-8):
        distance(omega, zeta)
"""
from __future__ import annotations

import contextlib
import contextvars
import dataclasses
from dataclasses import dataclass


@dataclass(frozen=True)
class Tolerances:
    # LP feasibility / membership decisions
    feasibility: float = 1e-9
    # smallest occurrence probability that may be conditioned on
    conditioning: float = 1e-12
    # relative singular-value threshold for numerical rank
    rank: float = 1e-9
    # default subset-size cutoff for Caratheodory rank searches
    rank_cutoff: int = 6
    # subset-size cap for discriminability searches
    subset_cap: int = 8


_current: contextvars.ContextVar[Tolerances] = contextvars.ContextVar(
    "optw_tolerances", default=Tolerances()
)


def tolerances() -> Tolerances:
    """Return the tolerances in effect for the current context."""
    return _current.get()


@contextlib.contextmanager
def using_tolerances(tol: Tolerances | None = None, **overrides):
    base = tol if tol is not None else _current.get()
    token = _current.set(dataclasses.replace(base, **overrides))
    try:
        yield _current.get()
    finally:
        _current.reset(token)
