"""Transformations as cone-preserving linear maps, and instruments.

A transformation ``A`` is stored as the matrix ``M`` of its action on state
coordinates. ``u @ M`` is its occurrence effect, so ``u @ M @ x`` is the
probability that ``A`` happens on the state ``x``. ``compose(A, B)`` means
"B, then A" (``M_A @ M_B``).
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

from . import linalg
from .config import tolerances
from .convex import State, Theory, Weight, _frozen, caratheodory_rank, in_cone, same_theory
from .effects import Propensity, effect_range
from .errors import NotCoexistent, NullConditioning


@dataclass(frozen=True, eq=False)
class Transformation:
    theory: Theory
    M: np.ndarray
    label: str = ""

    def __post_init__(self):
        M = _frozen(self.M, 2)
        m = self.theory.embed_dim
        if M.shape != (m, m):
            raise ValueError(f"transformation matrix must be {m}x{m}, got {M.shape}")
        object.__setattr__(self, "M", M)

    def __repr__(self):
        return f"Transformation({self.theory.name}, {self.label or 'unnamed'})"

    @property
    def effect(self):
        return self.theory.unit @ self.M

    @property
    def is_deterministic(self):
        return float(np.abs(self.effect - self.theory.unit).max()) <= tolerances().feasibility


def transformation_violations(theory, M):
    """Reasons ``M`` is not a valid transformation of ``theory`` (empty if valid)."""
    M = np.asarray(M, dtype=float)
    tol = tolerances().feasibility
    out = []
    lo, hi = effect_range(theory, theory.unit @ M)
    if lo < -tol or hi > 1 + tol:
        out.append(f"occurrence probabilities range over [{lo:.6g}, {hi:.6g}]")
    if theory.backend == "quantum":
        w = linalg.eigvalsh(_herm(theory.quantum.choi(M)))
        if w[0] < -tol:
            out.append(f"not completely positive (Choi eigenvalue {w[0]:.3g})")
    elif theory.backend == "ball":
        # sampled sphere points only; the ball's boundary is not finite
        Y = theory.extremal_states @ M.T
        gap = Y[:, 0] - np.linalg.norm(Y[:, 1:], axis=1)
        if gap.min(initial=0.0) < -tol:
            out.append("maps a sampled state outside the cone")
    else:
        for i, v in enumerate(theory.extremal_states):
            if not in_cone(M @ v, theory):
                out.append(f"maps extremal state {i} outside the cone")
                break
    return out


def _herm(A):
    return 0.5 * (A + A.conj().T)


def transformation(theory, M, label="", check=True):
    if check:
        bad = transformation_violations(theory, M)
        if bad:
            raise ValueError(f"invalid transformation {label!r}: " + "; ".join(bad))
    return Transformation(theory, M, label)


def identity(theory):
    return Transformation(theory, np.eye(theory.embed_dim), "I")


def null_transformation(theory):
    return Transformation(theory, np.zeros((theory.embed_dim,) * 2), "0")


@dataclass(frozen=True, eq=False)
class Instrument:
    theory: Theory
    transformations: tuple
    labels: tuple = ()

    def __post_init__(self):
        ts = tuple(self.transformations)
        if not ts:
            raise ValueError("an instrument needs at least one transformation")
        same_theory(*ts)
        labels = tuple(self.labels) or tuple(t.label or str(j) for j, t in enumerate(ts))
        if len(labels) != len(ts):
            raise ValueError("one label per transformation expected")
        object.__setattr__(self, "transformations", ts)
        object.__setattr__(self, "labels", labels)

    def __len__(self):
        return len(self.transformations)

    def __iter__(self):
        return iter(self.transformations)

    def __getitem__(self, j):
        return self.transformations[j]

    @property
    def normalization_deviation(self):
        total = np.sum([t.effect for t in self.transformations], axis=0)
        return float(np.abs(total - self.theory.unit).max())

    def probabilities(self, omega):
        return np.array([occurrence_prob(t, omega) for t in self.transformations])


def instrument(theory, transformations, labels=(), check=True):
    """An instrument; with ``check`` the occurrence effects must sum to the unit."""
    ins = Instrument(theory, tuple(transformations), tuple(labels))
    if check:
        dev = ins.normalization_deviation
        if dev > tolerances().feasibility:
            raise ValueError(f"instrument is not normalized (deviation {dev:.3g})")
    return ins


# ---------------------------------------------------------------------------
# action on states


def apply_op(A, omega):
    same_theory(A, omega)
    return Weight(A.theory, A.M @ omega.x)


def occurrence_prob(A, omega):
    same_theory(A, omega)
    return float(A.effect @ omega.x)


def conditional_state(A, omega):
    p = occurrence_prob(A, omega)
    if p <= tolerances().conditioning:
        raise NullConditioning(p)
    return State(A.theory, A.M @ omega.x / p)


def compose(A, B):
    """``A o B``: first ``B``, then ``A``."""
    theory = same_theory(A, B)
    label = f"{A.label}.{B.label}" if A.label and B.label else ""
    return Transformation(theory, A.M @ B.M, label)


def bayes_prob(B, A, omega):
    """Probability of ``B`` given that ``A`` occurred on ``omega``."""
    p = occurrence_prob(A, omega)
    if p <= tolerances().conditioning:
        raise NullConditioning(p)
    return occurrence_prob(compose(B, A), omega) / p


def propensity_of(A):
    return Propensity(A.theory, A.effect)


def transformation_norm(A):
    """Largest occurrence probability over the states."""
    return max(effect_range(A.theory, A.effect)[1], 0.0)


def coexistent_transformations(A, B):
    theory = same_theory(A, B)
    S = A.M + B.M
    if effect_range(theory, theory.unit @ S)[1] > 1 + tolerances().feasibility:
        return False
    return not transformation_violations(theory, S)


def add_coexistent(A, B):
    if not coexistent_transformations(A, B):
        raise NotCoexistent(f"{A.label or 'A'} and {B.label or 'B'} are not coexistent")
    label = f"{A.label}+{B.label}" if A.label and B.label else ""
    return Transformation(A.theory, A.M + B.M, label)


def scalar_mul(lam, A):
    norm = transformation_norm(A)
    top = np.inf if norm == 0 else 1.0 / norm
    if lam < 0 or lam > top * (1 + tolerances().feasibility):
        raise ValueError(f"scalar {lam} outside [0, 1/|A|] = [0, {top:.6g}]")
    return Transformation(A.theory, lam * A.M, A.label)


def convex_mix_instruments(lam, I1, I2):
    """The instrument "run I1 with probability lam, else I2", outcomes kept apart."""
    if not 0.0 <= lam <= 1.0:
        raise ValueError("mixing weight must lie in [0, 1]")
    theory = same_theory(I1, I2)
    ts = [Transformation(theory, lam * t.M, t.label) for t in I1]
    ts += [Transformation(theory, (1 - lam) * t.M, t.label) for t in I2]
    labels = [f"a:{l}" for l in I1.labels] + [f"b:{l}" for l in I2.labels]
    return Instrument(theory, tuple(ts), tuple(labels))


# ---------------------------------------------------------------------------
# equivalences


def probe_states(theory):
    """Finitely many states whose span is the whole embedding.

    Polytopes and ball samples use their listed extremal states; quantum
    theories use the pure states ``|i>``, ``(|i>+|j>)/sqrt2`` and
    ``(|i>+i|j>)/sqrt2``.
    """
    if theory.backend != "quantum":
        return theory.extremal_states
    q = theory.quantum
    d = q.d
    kets = [np.eye(d)[i] for i in range(d)]
    for i, j in itertools.combinations(range(d), 2):
        kets.append(np.eye(d)[i] + np.eye(d)[j])
        kets.append(np.eye(d)[i] + 1j * np.eye(d)[j])
    return np.array([q.ket_coords(k) for k in kets])


def dynamically_equivalent(A, B):
    """Same conditional state on every state where either occurs.

    Checked on each probe and on every pairwise sum of probes, so that the
    proportionality factor between ``M_A x`` and ``M_B x`` is forced to be
    the same across the probes.
    """
    theory = same_theory(A, B)
    P = probe_states(theory)
    tol = tolerances().feasibility
    if not _same_support(A, B, P, tol):
        return False
    YA, YB = P @ A.M.T, P @ B.M.T
    n = len(P)
    i, j = np.triu_indices(n)
    SA, SB = YA[i] + YA[j], YB[i] + YB[j]
    pA, pB = SA @ theory.unit, SB @ theory.unit
    zA, zB = pA <= tol, pB <= tol
    if np.any(zA != zB):
        return False
    live = ~zA
    cA = SA[live] / pA[live, None]
    cB = SB[live] / pB[live, None]
    return bool(np.abs(cA - cB).max(initial=0.0) <= tol)


def _same_support(A, B, P, tol):
    theory = A.theory
    if theory.backend == "quantum":
        q = theory.quantum
        return _kernel_equal(q.operator(A.effect), q.operator(B.effect), tol)
    return bool(np.all((P @ A.effect <= tol) == (P @ B.effect <= tol)))


def _kernel_equal(EA, EB, tol):
    # E >= 0, so the kernel of E is where it has zero expectation
    for E, F in ((EA, EB), (EB, EA)):
        w, U = linalg.eigh(_herm(E))
        K = U[:, w <= tol]
        if K.size and np.abs(K.conj().T @ F @ K).max() > tol:
            return False
    return True


def informationally_equivalent(A, B):
    same_theory(A, B)
    return float(np.abs(A.effect - B.effect).max()) <= tolerances().feasibility


def completely_equivalent(A, B):
    return dynamically_equivalent(A, B) and informationally_equivalent(A, B)


def is_pure_transformation(A):
    """Whether ``A`` sends pure states to pure states wherever it occurs.

    Quantum: either a single Kraus operator (rank-one Choi matrix) or a map
    whose every output is the same pure state.
    """
    theory = A.theory
    tol = tolerances().feasibility
    if theory.backend == "quantum":
        q = theory.quantum
        w = linalg.eigvalsh(_herm(q.choi(A.M)))
        if int(np.sum(w > tol * max(w[-1], 1.0))) <= 1:
            return True
        if linalg.numerical_rank(A.M) == 1:
            U, s, Vt = np.linalg.svd(A.M)
            img = U[:, 0] / (theory.unit @ U[:, 0])
            return bool(q.is_density(img, 1e-7) and
                        int(np.sum(linalg.eigvalsh(_herm(q.operator(img))) > tol)) == 1)
        return False
    Y = theory.extremal_states @ A.M.T
    p = Y @ theory.unit
    for y, pv in zip(Y, p):
        if pv <= tolerances().conditioning:
            continue
        c = State(theory, y / pv)
        if theory.backend == "ball":
            if np.linalg.norm(c.x[1:]) < 1 - tol:
                return False
        elif caratheodory_rank(c) != 1:
            return False
    return True


def dynamically_compatible(A, B):
    """Whether the two maps commute."""
    same_theory(A, B)
    return float(np.abs(A.M @ B.M - B.M @ A.M).max()) <= tolerances().feasibility


def no_information_check(I):
    """True iff every outcome effect is a multiple of the unit (state-independent statistics)."""
    u = I.theory.unit
    tol = tolerances().feasibility
    for t in I:
        c = (t.effect @ u) / (u @ u)
        if np.abs(t.effect - c * u).max() > tol:
            return False
    return True


def refutes_indecomposability(A, B, C):
    """True when ``A = B + C`` with ``B`` or ``C`` not dynamically equivalent to ``A``.

    A supplied decomposition can only refute indecomposability; failing to
    refute says nothing.
    """
    theory = same_theory(A, B, C)
    tol = tolerances().feasibility
    if np.abs(B.M + C.M - A.M).max() > tol:
        return False
    if transformation_violations(theory, B.M) or transformation_violations(theory, C.M):
        return False
    nonzero = [X for X in (B, C) if np.abs(X.M).max() > tol]
    return any(not dynamically_equivalent(X, A) for X in nonzero)
