"""Theories as convex sets of states in a linear embedding.

A :class:`Theory` lives in ``R^m`` with a unit functional ``u``; states are
points ``x`` with ``u @ x == 1`` inside the state set, weights are points of
the cone it generates. Three backends are supported:

``polytope``
    the state set is the convex hull of ``extremal_states``; all generic
    algorithms run as linear programs over the vertices.
``quantum``
    density matrices of a :class:`~optw.quantum.QuantumSystem`; extremal
    states are implicit and analytic formulas replace the LPs.
``ball``
    the Euclidean unit ball ``{(1, n) : |n| <= 1}`` with the effects
    ``(1 + m.n)/2``; ``extremal_states`` holds a finite sample of the sphere.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from . import linalg
from .config import tolerances
from .errors import CutoffExceeded, TheoryMismatch, UnsupportedBackend
from .lp import linprog
from .quantum import QuantumSystem

BACKENDS = ("polytope", "quantum", "ball")
EFFECT_MODES = ("unrestricted", "explicit")


def _frozen(a, ndim):
    a = np.array(a, dtype=float)
    if a.ndim != ndim:
        raise ValueError(f"expected a {ndim}-d array, got shape {a.shape}")
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class Theory:
    name: str
    unit: np.ndarray
    extremal_states: np.ndarray
    effect_mode: str = "unrestricted"
    extremal_effects: np.ndarray | None = None
    metadata: dict = field(default_factory=dict)
    backend: str = "polytope"
    quantum: QuantumSystem | None = None

    def __post_init__(self):
        unit = _frozen(self.unit, 1)
        m = unit.size
        V = self.extremal_states
        V = _frozen(np.zeros((0, m)) if V is None or len(V) == 0 else V, 2)
        object.__setattr__(self, "unit", unit)
        object.__setattr__(self, "extremal_states", V)
        if self.backend not in BACKENDS:
            raise ValueError(f"unknown backend {self.backend!r}")
        if self.effect_mode not in EFFECT_MODES:
            raise ValueError(f"unknown effect mode {self.effect_mode!r}")
        if V.shape[1] != m:
            raise ValueError("extremal states do not match the embedding dimension")
        tol = tolerances().feasibility
        if V.shape[0] and np.abs(V @ unit - 1.0).max() > tol:
            bad = int(np.argmax(np.abs(V @ unit - 1.0)))
            raise ValueError(f"extremal state {bad} is not normalized (u.v = {V[bad] @ unit!r})")
        if self.backend == "quantum":
            if self.quantum is None or self.quantum.m != m:
                raise ValueError("quantum backend needs a matching QuantumSystem")
        elif V.shape[0] == 0:
            raise ValueError("a polytopic theory needs at least one extremal state")
        if self.effect_mode == "explicit":
            if self.extremal_effects is None:
                raise ValueError("explicit effect mode needs extremal_effects")
            E = _frozen(self.extremal_effects, 2)
            if E.shape[1] != m:
                raise ValueError("extremal effects do not match the embedding dimension")
            vals = V @ E.T
            if vals.size and (vals.min() < -tol or vals.max() > 1 + tol):
                raise ValueError("an extremal effect leaves [0, 1] on some state")
            object.__setattr__(self, "extremal_effects", E)
        elif self.extremal_effects is not None:
            object.__setattr__(self, "extremal_effects", _frozen(self.extremal_effects, 2))

    def __repr__(self):
        return f"Theory({self.name!r}, m={self.embed_dim}, backend={self.backend})"

    @property
    def embed_dim(self):
        return self.unit.size

    @property
    def exact(self):
        return self.backend != "polytope"

    @property
    def n_vertices(self):
        return self.extremal_states.shape[0]

    @cached_property
    def affine_dim(self):
        if self.backend == "quantum":
            return self.quantum.m - 1
        if self.backend == "ball":
            return self.embed_dim - 1
        V = self.extremal_states
        return linalg.numerical_rank(V - V[0]) if len(V) > 1 else 0

    @cached_property
    def chaotic(self):
        return chaotic_state(self)

    def state(self, x, check=True):
        x = np.asarray(x, dtype=float)
        if x.shape != (self.embed_dim,):
            raise ValueError(f"state vector must have length {self.embed_dim}")
        if check:
            tol = tolerances().feasibility
            if abs(self.unit @ x - 1.0) > tol:
                raise ValueError(f"state is not normalized (u.x = {self.unit @ x!r})")
            if not in_hull(x, self):
                raise ValueError("vector lies outside the state set")
        return State(self, x)

    def weight(self, x, check=True):
        x = np.asarray(x, dtype=float)
        if check and not in_cone(x, self):
            raise ValueError("vector lies outside the cone of weights")
        return Weight(self, x)

    def vertex(self, i):
        return State(self, self.extremal_states[i])

    def vertices(self):
        return [State(self, v) for v in self.extremal_states]


@dataclass(frozen=True, eq=False)
class State:
    theory: Theory
    x: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "x", _frozen(self.x, 1))

    def __repr__(self):
        return f"State({self.theory.name}, {np.array2string(self.x, precision=4)})"


@dataclass(frozen=True, eq=False)
class Weight:
    theory: Theory
    x: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "x", _frozen(self.x, 1))

    @property
    def mass(self):
        return float(self.theory.unit @ self.x)

    def normalized(self):
        return State(self.theory, self.x / self.mass)


def same_theory(*objs):
    theory = objs[0].theory
    for o in objs[1:]:
        if o.theory is not theory:
            raise TheoryMismatch(f"{o.theory.name!r} vs {theory.name!r}")
    return theory


# ---------------------------------------------------------------------------
# membership


def hull_residual(x, V):
    """Smallest max-norm residual of ``x`` against ``conv(V)``.

    Returns ``(residual, lambdas)``; LP over ``lambda >= 0, sum = 1`` and a
    bound ``t`` on ``|V' lambda - x|``.
    """
    V = np.asarray(V, dtype=float)
    n, m = V.shape
    ones = np.ones((m, 1))
    A_ub = np.block([[V.T, -ones], [-V.T, -ones]])
    b_ub = np.concatenate([x, -x])
    A_eq = np.concatenate([np.ones(n), [0.0]])[None, :]
    c = np.zeros(n + 1)
    c[-1] = 1.0
    res = linprog(c, A_ub=A_ub, b_ub=b_ub, A_eq=A_eq, b_eq=[1.0])
    if not res.success:
        raise RuntimeError(f"hull LP failed: {res.status}")
    return float(res.x[-1]), res.x[:-1]


def in_hull(x, theory):
    """Whether ``x`` lies in the state set (convex hull of the vertices)."""
    x = np.asarray(x, dtype=float)
    if x.shape != (theory.embed_dim,):
        raise ValueError(f"dimension mismatch: {x.shape} vs ({theory.embed_dim},)")
    tol = tolerances().feasibility
    if theory.backend == "quantum":
        return theory.quantum.is_density(x, tol)
    if theory.backend == "ball":
        return abs(x[0] - 1.0) <= tol and np.linalg.norm(x[1:]) <= 1.0 + tol
    return hull_residual(x, theory.extremal_states)[0] <= tol


def in_cone(x, theory):
    x = np.asarray(x, dtype=float)
    tol = tolerances().feasibility
    mass = theory.unit @ x
    if mass < -tol:
        return False
    if mass <= tol:
        return np.abs(x).max(initial=0.0) <= tol
    return in_hull(x / mass, theory)


def vertex_minimality_violations(theory):
    """Indices of listed extremal states that lie in the hull of the others."""
    if theory.backend != "polytope":
        return []
    V = theory.extremal_states
    tol = tolerances().feasibility
    bad = []
    for i in range(len(V)):
        others = np.delete(V, i, axis=0)
        if len(others) and hull_residual(V[i], others)[0] <= tol:
            bad.append(i)
    return bad


# ---------------------------------------------------------------------------
# mixing and partial order


def mix(states, weights):
    """Convex combination of states."""
    states = list(states)
    w = np.asarray(weights, dtype=float)
    if len(states) == 0 or w.shape != (len(states),):
        raise ValueError("need one weight per state")
    if np.any(w < 0) or abs(w.sum() - 1.0) > 1e-12:
        raise ValueError(f"mixing weights must be a probability vector (sum {w.sum()!r})")
    theory = same_theory(*states)
    x = w @ np.array([s.x for s in states])
    return State(theory, x)


def max_alpha_prec(omega, zeta):
    """Largest ``alpha`` with ``zeta = alpha*omega + (1 - alpha)*theta`` for a state theta.

    ``omega`` precedes ``zeta`` iff the result is positive.
    """
    theory = same_theory(omega, zeta)
    if theory.backend == "quantum":
        return _max_alpha_quantum(theory.quantum, omega.x, zeta.x)
    if theory.backend == "ball":
        return _max_alpha_ball(omega.x[1:], zeta.x[1:])
    V = theory.extremal_states
    n = len(V)
    # variables (alpha, mu); alpha*omega + V' mu = zeta
    A_eq = np.column_stack([omega.x, V.T])
    c = np.zeros(n + 1)
    c[0] = 1.0
    res = linprog(c, A_eq=A_eq, b_eq=zeta.x, bounds=[(0.0, 1.0)] + [(0.0, None)] * n,
                  maximize=True)
    if not res.success:
        return 0.0
    return float(min(max(res.fun, 0.0), 1.0)) + 0.0  # no -0.0


def precedes(omega, zeta, alpha=None):
    """``omega < zeta`` (some positive alpha), or ``omega <_alpha zeta`` when alpha is given."""
    a = max_alpha_prec(omega, zeta)
    if alpha is None:
        return a > tolerances().feasibility
    return a >= alpha - tolerances().feasibility


def _max_alpha_quantum(q, x_omega, x_zeta):
    tol = tolerances().feasibility
    rho, sigma = q.operator(x_omega), q.operator(x_zeta)
    w, U = linalg.eigh(sigma)
    keep = w > tol
    Us = U[:, keep]
    outside = rho - Us @ (Us.conj().T @ rho @ Us) @ Us.conj().T
    if np.abs(outside).max(initial=0.0) > 1e-7:
        return 0.0
    inv_sqrt = Us * (1.0 / np.sqrt(w[keep]))
    K = inv_sqrt.conj().T @ rho @ inv_sqrt
    top = linalg.eigvalsh(0.5 * (K + K.conj().T))[-1]
    return float(min(1.0, 1.0 / top)) if top > 0 else 1.0


def _max_alpha_ball(n_omega, n_zeta):
    def slack(a):
        return (1.0 - a) - np.linalg.norm(n_zeta - a * n_omega)

    tol = tolerances().feasibility
    if np.linalg.norm(n_zeta - n_omega) <= tol:
        return 1.0
    lo, hi = 0.0, 1.0
    if slack(0.0) < -tol:
        return 0.0
    for _ in range(80):
        mid = 0.5 * (lo + hi)
        if slack(mid) >= -1e-15:
            lo = mid
        else:
            hi = mid
    return lo


# ---------------------------------------------------------------------------
# Caratheodory rank and dimension


def minimal_decomposition(omega, cutoff=None):
    """A convex decomposition of ``omega`` into the fewest vertices.

    Returns ``(indices, weights)``. Subsets are tried by increasing size and
    only affinely independent ones are solved (any decomposition can be
    reduced to one of those). Raises :class:`CutoffExceeded` past ``cutoff``.
    Polytopic theories only.
    """
    theory = omega.theory
    if theory.backend != "polytope":
        raise UnsupportedBackend("vertex decompositions need a polytopic theory")
    cutoff = tolerances().rank_cutoff if cutoff is None else cutoff
    tol = tolerances().feasibility
    x = omega.x
    V = theory.extremal_states
    if not in_hull(x, theory):
        raise ValueError("state lies outside the hull")
    n = len(V)
    for k in range(1, min(n, theory.affine_dim + 1) + 1):
        if k > cutoff:
            raise CutoffExceeded("Caratheodory rank", cutoff, cutoff + 1)
        found = _solve_subsets(V, x, k, tol)
        if found is not None:
            return found
    raise RuntimeError("no decomposition found for a state inside the hull")


def _solve_subsets(V, x, k, tol, chunk=4096):
    it = itertools.combinations(range(len(V)), k)
    while True:
        subsets = np.array(list(itertools.islice(it, chunk)), dtype=int)
        if subsets.size == 0:
            return None
        S = V[subsets]  # (s, k, m)
        G = np.einsum("skm,sjm->skj", S, S)
        rhs = np.einsum("skm,m->sk", S, x)
        det_ok = np.linalg.cond(G) < 1e10
        if not det_ok.any():
            continue
        S, G, rhs, subsets = S[det_ok], G[det_ok], rhs[det_ok], subsets[det_ok]
        lam = np.linalg.solve(G, rhs[..., None])[..., 0]
        resid = np.abs(np.einsum("sk,skm->sm", lam, S) - x).max(axis=1)
        ok = (resid <= tol) & (lam.min(axis=1) >= -tol)
        if ok.any():
            i = int(np.flatnonzero(ok)[0])
            w = np.clip(lam[i], 0.0, None)
            return [int(j) for j in subsets[i]], w / w.sum()


def caratheodory_rank(omega, cutoff=None):
    """Minimum number of extremal states needed to write ``omega`` as a mixture."""
    theory = omega.theory
    tol = tolerances().feasibility
    if theory.backend == "quantum":
        w = linalg.eigvalsh(theory.quantum.operator(omega.x))
        return int(np.sum(w > tol))
    if theory.backend == "ball":
        r = np.linalg.norm(omega.x[1:])
        return 1 if r >= 1.0 - tol else 2
    return len(minimal_decomposition(omega, cutoff)[0])


def caratheodory_dimension(theory, cutoff=None, samples=8, seed=0):
    """Maximal Caratheodory rank over the theory's states.

    Exact backends use their closed forms (``d`` for quantum, 2 for a ball).
    For polytopes the chaotic state and ``samples`` random interior mixtures
    are ranked; generic interior points attain the maximum, and the search
    stops early once ``affine_dim + 1`` (the Caratheodory bound) is reached.
    """
    if theory.backend == "quantum":
        return theory.quantum.d
    if theory.backend == "ball":
        return 2 if theory.embed_dim > 1 else 1
    bound = theory.affine_dim + 1
    best = caratheodory_rank(theory.chaotic, cutoff)
    rng = np.random.default_rng(seed)
    V = theory.extremal_states
    for _ in range(samples):
        if best >= bound:
            break
        w = rng.dirichlet(np.ones(len(V)))
        best = max(best, caratheodory_rank(State(theory, w @ V), cutoff))
    return best


# ---------------------------------------------------------------------------
# maximally chaotic state


def chaotic_state(theory):
    """Barycenter of the state set.

    Polytopes use the uniform average of the vertices; quantum theories
    ``I/d``; a ball its center.
    """
    if theory.backend == "quantum":
        q = theory.quantum
        return State(theory, q.coords(np.eye(q.d) / q.d))
    if theory.backend == "ball":
        x = np.zeros(theory.embed_dim)
        x[0] = 1.0
        return State(theory, x)
    return State(theory, theory.extremal_states.mean(axis=0))


@dataclass
class ChaoticProbe:
    alpha: float  # max{a : probe >_a chi}
    beta: float  # max{b : chi >_b probe}

    @property
    def ok(self):
        return self.alpha >= self.beta - tolerances().feasibility


def verify_chaotic_maximality(theory, chi, probes):
    """Check ``max{a: theta >_a chi} >= max{b: chi >_b theta}`` for every probe.

    ``theta >_a chi`` means ``chi = a*theta + (1-a)*(...)``. Returns the list
    of :class:`ChaoticProbe`; violations have ``ok == False``.
    """
    out = []
    for theta in probes:
        same_theory(theta, chi)
        out.append(ChaoticProbe(max_alpha_prec(theta, chi), max_alpha_prec(chi, theta)))
    return out
