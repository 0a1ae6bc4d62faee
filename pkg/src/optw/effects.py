"""Propensities (effects) and observables.

An effect is a dual vector ``l`` whose pairing with every state lies in
``[0, 1]``. Extremes of a linear functional over a polytope sit at
vertices, so validity and ranges are read off the vertex values; the
quantum backend uses the spectrum of the effect operator and the ball
backend the closed form ``l_0 +- |l_rest|``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import linalg
from .config import tolerances
from .convex import State, Theory, _frozen, same_theory
from .errors import NotInformationallyComplete
from .lp import linprog


@dataclass(frozen=True, eq=False)
class Propensity:
    theory: Theory
    l: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "l", _frozen(self.l, 1))

    def __call__(self, omega):
        return evaluate(self, omega)

    def __repr__(self):
        return f"Propensity({self.theory.name}, {np.array2string(self.l, precision=4)})"


def effect_range(theory, l):
    """``(min, max)`` of ``l`` over the state set."""
    l = np.asarray(l, dtype=float)
    if theory.backend == "quantum":
        w = linalg.eigvalsh(_herm(theory.quantum.operator(l)))
        return float(w[0]), float(w[-1])
    if theory.backend == "ball":
        r = float(np.linalg.norm(l[1:]))
        return float(l[0] - r), float(l[0] + r)
    vals = theory.extremal_states @ l
    return float(vals.min()), float(vals.max())


def _herm(A):
    return 0.5 * (A + A.conj().T)


def is_valid_effect(theory, l):
    l = np.asarray(l, dtype=float)
    if l.shape != (theory.embed_dim,):
        return False
    tol = tolerances().feasibility
    lo, hi = effect_range(theory, l)
    if lo < -tol or hi > 1 + tol:
        return False
    if theory.effect_mode == "explicit":
        return _in_effect_cone(theory, l)
    return True


def _in_effect_cone(theory, l):
    # nonnegative combination of the listed effects and the unit
    gens = np.vstack([theory.extremal_effects, theory.unit])
    tol = tolerances().feasibility
    n = len(gens)
    res = linprog(np.zeros(n), A_eq=gens.T, b_eq=l)
    if res.success:
        return True
    return float(np.abs(l).max()) <= tol


def propensity(theory, l, check=True):
    l = np.asarray(l, dtype=float)
    if l.shape != (theory.embed_dim,):
        raise ValueError(f"effect vector must have length {theory.embed_dim}")
    if check and not is_valid_effect(theory, l):
        lo, hi = effect_range(theory, l)
        raise ValueError(f"not a valid effect: values range over [{lo:.6g}, {hi:.6g}]")
    return Propensity(theory, l)


def unit_effect(theory):
    return Propensity(theory, theory.unit)


def zero_effect(theory):
    return Propensity(theory, np.zeros(theory.embed_dim))


@dataclass(frozen=True, eq=False)
class Observable:
    theory: Theory
    elements: tuple
    name: str = ""

    def __post_init__(self):
        elements = tuple(self.elements)
        if not elements:
            raise ValueError("an observable needs at least one element")
        same_theory(*elements)
        if elements[0].theory is not self.theory:
            raise ValueError("observable elements belong to another theory")
        total = np.sum([e.l for e in elements], axis=0)
        dev = float(np.abs(total - self.theory.unit).max())
        if dev > 1e-12 * max(1, len(elements)):
            raise ValueError(f"observable elements do not sum to the unit (deviation {dev:.3g})")
        object.__setattr__(self, "elements", elements)

    def __len__(self):
        return len(self.elements)

    def __iter__(self):
        return iter(self.elements)

    @property
    def matrix(self):
        return np.array([e.l for e in self.elements])

    def probabilities(self, omega):
        return self.matrix @ omega.x


def observable(theory, vectors, name="", check=True):
    return Observable(theory, tuple(propensity(theory, v, check) for v in vectors), name)


# ---------------------------------------------------------------------------
# operations


def evaluate(l, omega):
    same_theory(l, omega)
    return float(l.l @ omega.x)


def complement(l):
    return Propensity(l.theory, l.theory.unit - l.l)


def scale(l, lam):
    if lam < 0:
        raise ValueError("effects can only be scaled by nonnegative numbers")
    return propensity(l.theory, lam * l.l)


def mix_effects(effects, weights):
    w = np.asarray(weights, dtype=float)
    if np.any(w < 0) or abs(w.sum() - 1.0) > 1e-12:
        raise ValueError("mixing weights must be a probability vector")
    theory = same_theory(*effects)
    return Propensity(theory, w @ np.array([e.l for e in effects]))


def coexistent(l1, l2):
    """Whether ``l1 + l2`` never exceeds probability one (so both fit in one observable)."""
    theory = same_theory(l1, l2)
    return effect_range(theory, l1.l + l2.l)[1] <= 1.0 + tolerances().feasibility


def leq(l1, l2):
    theory = same_theory(l1, l2)
    return effect_range(theory, l2.l - l1.l)[0] >= -tolerances().feasibility


def is_predictable(l):
    """The effect occurs with certainty on some state and never on another."""
    tol = tolerances().feasibility
    lo, hi = effect_range(l.theory, l.l)
    return hi >= 1 - tol and lo <= tol


def certainty_face(l):
    """Indices of extremal states on which ``l`` equals one (polytope and ball samples)."""
    vals = l.theory.extremal_states @ l.l
    return np.flatnonzero(vals >= 1 - tolerances().feasibility)


def is_resolved(l):
    """Predictable, and the state on which it surely occurs is unique."""
    if not is_predictable(l):
        return False
    theory = l.theory
    tol = tolerances().feasibility
    if theory.backend == "quantum":
        w = linalg.eigvalsh(_herm(theory.quantum.operator(l.l)))
        return int(np.sum(w >= 1 - tol)) == 1
    if theory.backend == "ball":
        # the level set l = 1 touches the ball in one point unless l is constant
        return float(np.linalg.norm(l.l[1:])) > tol
    return len(certainty_face(l)) == 1


def is_informationally_complete(L):
    return linalg.numerical_rank(L.matrix) == L.theory.embed_dim


@dataclass
class Expansion:
    coefficients: np.ndarray
    unique: bool
    residual: float


def expand_in_observable(l, L):
    """Coefficients ``c`` with ``l = sum_i c_i l_i``.

    Minimum-norm solution; ``unique`` is False when the elements are linearly
    dependent (more outcomes than the embedding dimension).
    """
    same_theory(l, *L.elements)
    A = L.matrix
    m = L.theory.embed_dim
    rank = linalg.numerical_rank(A)
    if rank < m:
        raise NotInformationallyComplete(f"observable spans {rank} of {m} dimensions")
    c = np.linalg.pinv(A.T) @ l.l
    residual = float(np.abs(A.T @ c - l.l).max())
    return Expansion(c, rank == len(A), residual)


def reconstruct_state(L, probabilities):
    """The state whose outcome probabilities under an informationally complete ``L`` are given."""
    A = L.matrix
    if linalg.numerical_rank(A) < L.theory.embed_dim:
        raise NotInformationallyComplete("observable is not informationally complete")
    x = np.linalg.lstsq(A, np.asarray(probabilities, dtype=float), rcond=None)[0]
    return State(L.theory, x)
