"""The distance induced by effects, orthogonality and discriminability.

``d(omega, zeta) = sup_l l(omega) - l(zeta)`` over valid effects. For
polytopes the sup is the LP ``max l.(x - y) s.t. 0 <= V l <= 1``, solved in
its dual form ``min 1'p s.t. V'(p - q) = x - y, p, q >= 0`` (only ``m``
equality rows); the equality multipliers are the optimal effect.
"""
from __future__ import annotations

import contextvars
import itertools
import weakref
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import networkx as nx
import numpy as np

from . import linalg
from .config import tolerances
from .convex import State, mix, same_theory
from .effects import Observable, Propensity, is_valid_effect
from .errors import CutoffExceeded
from .lp import linprog


# ---------------------------------------------------------------------------
# distance


def distance_witness(omega, zeta):
    """``(d, l)``: the distance and an effect attaining it (None when closed-form)."""
    theory = same_theory(omega, zeta)
    delta = omega.x - zeta.x
    nz = np.flatnonzero(delta)
    # solve for a sign-canonical difference so that d(a, b) == d(b, a) bit for bit
    if len(nz) and delta[nz[0]] < 0:
        d, l = _distance_witness(theory, -delta)
        return d, Propensity(theory, theory.unit - l.l)
    return _distance_witness(theory, delta)


def _distance_witness(theory, delta):
    if theory.backend == "quantum":
        q = theory.quantum
        w, U = linalg.eigh(_herm(q.operator(delta)))
        P = (U[:, w > 0]) @ U[:, w > 0].conj().T
        return 0.5 * float(np.abs(w).sum()), Propensity(theory, q.coords(P).real)
    if theory.backend == "ball":
        n = delta[1:]
        r = float(np.linalg.norm(n))
        if r == 0:
            return 0.0, Propensity(theory, np.zeros(theory.embed_dim))
        return 0.5 * r, Propensity(theory, 0.5 * np.concatenate([[1.0], n / r]))
    if theory.effect_mode == "explicit":
        E = np.vstack([theory.extremal_effects, theory.unit])
        diffs = E @ delta
        i = int(np.argmax(np.abs(diffs)))
        l = E[i] if diffs[i] >= 0 else theory.unit - E[i]
        return float(abs(diffs[i])), Propensity(theory, l)
    if np.abs(delta).max() == 0:
        return 0.0, Propensity(theory, np.zeros(theory.embed_dim))
    V = theory.extremal_states
    n = len(V)
    res = linprog(np.r_[np.ones(n), np.zeros(n)], A_eq=np.hstack([V.T, -V.T]), b_eq=delta)
    if not res.success:
        raise RuntimeError(f"distance LP failed: {res.status}")
    return float(min(max(res.fun, 0.0), 1.0)), Propensity(theory, res.eq_duals)


def distance(omega, zeta):
    return distance_witness(omega, zeta)[0]


def _herm(A):
    return 0.5 * (A + A.conj().T)


def distance_matrix(states, jobs=1):
    states = list(states)
    n = len(states)
    D = np.zeros((n, n))
    pairs = list(itertools.combinations(range(n), 2))

    def one(p):
        return distance(states[p[0]], states[p[1]])

    if jobs > 1 and len(pairs) > 1:
        # worker threads do not inherit context variables (tolerances)
        with ThreadPoolExecutor(jobs) as ex:
            futs = [ex.submit(contextvars.copy_context().run, one, p) for p in pairs]
            vals = [f.result() for f in futs]
    else:
        vals = [one(p) for p in pairs]
    for (i, j), v in zip(pairs, vals):
        D[i, j] = D[j, i] = v
    return D


def orthogonal(omega, zeta):
    return distance(omega, zeta) >= 1 - tolerances().feasibility


# ---------------------------------------------------------------------------
# metric dimension


_GRAPHS = weakref.WeakKeyDictionary()


def orthogonality_graph(theory, jobs=1):
    """Graph on the extremal states, edges joining orthogonal pairs."""
    key = tolerances().feasibility
    cached = _GRAPHS.get(theory)
    if cached is not None and cached[0] == key:
        return cached[1]
    V = theory.extremal_states
    G = nx.Graph()
    G.add_nodes_from(range(len(V)))
    tol = tolerances().feasibility
    if theory.backend == "ball":
        # closed form; no LP needed
        N = V[:, 1:]
        D = 0.5 * np.linalg.norm(N[:, None, :] - N[None, :, :], axis=2)
        i, j = np.nonzero(np.triu(D >= 1 - tol, 1))
        G.add_edges_from(zip(i.tolist(), j.tolist()))
    else:
        D = distance_matrix(theory.vertices(), jobs=jobs)
        i, j = np.nonzero(np.triu(D >= 1 - tol, 1))
        G.add_edges_from(zip(i.tolist(), j.tolist()))
    _GRAPHS[theory] = (key, G)
    return G


@dataclass
class MetricDimension:
    value: int
    clique: list
    # True: computed over a finite list of extremal states, so a lower bound
    extremal_only: bool = True


def metric_dimension_report(theory, jobs=1):
    if theory.backend == "quantum":
        return MetricDimension(theory.quantum.d, [], extremal_only=False)
    G = orthogonality_graph(theory, jobs)
    clique, size = nx.max_weight_clique(G, weight=None)
    return MetricDimension(int(size), sorted(clique))


def metric_dimension(theory, jobs=1):
    """Largest number of pairwise orthogonal extremal states (the extremal clique number)."""
    return metric_dimension_report(theory, jobs).value


# ---------------------------------------------------------------------------
# perfect discrimination


@dataclass
class Discrimination:
    feasible: bool
    observable: Observable | None = None
    infeasibility: float = 0.0


def perfectly_discriminable(states):
    """An observable ``l_n`` with ``l_n(omega_m) = delta_nm``, if one exists."""
    states = list(states)
    theory = same_theory(*states)
    N = len(states)
    if N == 0:
        raise ValueError("need at least one state")
    if N == 1:
        return Discrimination(True, Observable(theory, (Propensity(theory, theory.unit),)))
    if theory.backend == "quantum":
        return _discriminate_quantum(theory, states)
    if theory.backend == "ball":
        return _discriminate_ball(theory, states)
    return _discriminate_lp(theory, states)


def _discriminate_lp(theory, states):
    V = theory.extremal_states
    n, m = V.shape
    N = len(states)
    X = np.array([s.x for s in states])
    explicit = theory.effect_mode == "explicit"
    # each l_k = G' c_k with c_k >= 0 (explicit) or a free m-vector
    if explicit:
        G = np.vstack([theory.extremal_effects, theory.unit])
    else:
        G = np.eye(m)
    g = G.shape[0]
    nv = N * g
    A_ub, b_ub = [], []
    if not explicit:
        for k in range(N):
            row = np.zeros((n, nv))
            row[:, k * g:(k + 1) * g] = -V @ G.T
            A_ub.append(row)
            b_ub.append(np.zeros(n))
    A_eq = [np.tile(G.T, (1, N))]
    b_eq = [theory.unit]
    for k in range(N):
        row = np.zeros((N, nv))
        row[:, k * g:(k + 1) * g] = X @ G.T
        A_eq.append(row)
        b_eq.append(np.eye(N)[k])
    bounds = (0.0, None) if explicit else (None, None)
    res = linprog(np.zeros(nv), A_ub=np.vstack(A_ub) if A_ub else None,
                  b_ub=np.concatenate(b_ub) if b_ub else None,
                  A_eq=np.vstack(A_eq), b_eq=np.concatenate(b_eq), bounds=bounds)
    if not res.success:
        return Discrimination(False, infeasibility=res.infeasibility)
    L = res.x.reshape(N, g) @ G
    # put the rounding residue of the normalization on the last element
    L[-1] += theory.unit - L.sum(axis=0)
    return Discrimination(True, Observable(theory, tuple(Propensity(theory, l) for l in L)))


def _support_projector(q, x, tol):
    w, U = linalg.eigh(_herm(q.operator(x)))
    K = U[:, w > tol]
    return K @ K.conj().T


def _discriminate_quantum(theory, states):
    q = theory.quantum
    tol = tolerances().feasibility
    P = [_support_projector(q, s.x, tol) for s in states]
    for a, b in itertools.combinations(range(len(P)), 2):
        overlap = float(np.abs(P[a] @ P[b]).max())
        if overlap > 1e-7:
            return Discrimination(False, infeasibility=overlap)
    rest = np.eye(q.d) - sum(P)
    P[-1] = P[-1] + rest
    elements = tuple(Propensity(theory, q.coords(p).real) for p in P)
    return Discrimination(True, Observable(theory, elements))


def _discriminate_ball(theory, states):
    tol = tolerances().feasibility
    if len(states) > 2:
        return Discrimination(False, infeasibility=1.0)
    n1, n2 = states[0].x[1:], states[1].x[1:]
    gap = float(np.linalg.norm(n1 + n2)) + abs(1 - np.linalg.norm(n1))
    if gap > 1e-7 or np.linalg.norm(n1 - n2) < 2 - tol:
        return Discrimination(False, infeasibility=gap)
    l1 = 0.5 * np.concatenate([[1.0], n1])
    l2 = theory.unit - l1
    return Discrimination(True, Observable(theory, (Propensity(theory, l1), Propensity(theory, l2))))


@dataclass
class InformationalDimension:
    value: int
    indices: list
    observable: Observable | None


def informational_dimension_report(theory, cutoff=None, jobs=1):
    """Largest perfectly discriminable set of extremal states.

    Candidates are cliques of the orthogonality graph (perfectly
    discriminable states are pairwise orthogonal), tried largest first.
    """
    cutoff = tolerances().subset_cap if cutoff is None else cutoff
    if theory.backend == "quantum":
        q = theory.quantum
        basis = [State(theory, q.ket_coords(np.eye(q.d)[i])) for i in range(q.d)]
        return InformationalDimension(q.d, [], perfectly_discriminable(basis).observable)
    if theory.backend == "ball":
        N = theory.extremal_states[:, 1:]
        D = np.linalg.norm(N[:, None, :] + N[None, :, :], axis=2)
        i, j = np.unravel_index(np.argmin(D + 3 * np.eye(len(N))), D.shape)
        pair = [theory.vertex(int(i)), theory.vertex(int(j))]
        res = perfectly_discriminable(pair)
        if res.feasible:
            return InformationalDimension(2, [int(i), int(j)], res.observable)
        return InformationalDimension(1, [0], perfectly_discriminable(pair[:1]).observable)
    G = orthogonality_graph(theory, jobs)
    omega = max((len(c) for c in nx.find_cliques(G)), default=1)
    best = InformationalDimension(1, [0], perfectly_discriminable([theory.vertex(0)]).observable)
    top = omega
    if omega > cutoff:
        top = cutoff
    for size in range(top, 1, -1):
        cliques = {tuple(sorted(s)) for c in nx.find_cliques(G) if len(c) >= size
                   for s in itertools.combinations(c, size)}
        for c in sorted(cliques):
            res = perfectly_discriminable([theory.vertex(i) for i in c])
            if res.feasible:
                best = InformationalDimension(size, list(c), res.observable)
                break
        if best.value == size:
            break
    if omega > cutoff and best.value == cutoff:
        raise CutoffExceeded("informational dimension", cutoff, best.value)
    return best


def informational_dimension(theory, cutoff=None, jobs=1):
    return informational_dimension_report(theory, cutoff, jobs).value


def discriminating_observable(theory, cutoff=None, jobs=1):
    """An observable discriminating a maximal perfectly discriminable set."""
    return informational_dimension_report(theory, cutoff, jobs).observable


# ---------------------------------------------------------------------------
# joint orthogonality


@dataclass
class JointOrthogonality:
    holds: bool
    witness: Propensity | None = None


def jointly_orthogonal(S, omega):
    """Whether every mixture of ``S`` is orthogonal to ``omega``.

    Equivalent to one effect with ``l(omega) = 1`` vanishing on all of ``S``;
    that effect is returned as the witness. It is chosen with the smallest
    total weight on the vertices so it is not needlessly large.
    """
    S = list(S)
    theory = same_theory(omega, *S)
    tol = tolerances().feasibility
    if theory.backend == "quantum":
        q = theory.quantum
        P = _support_projector(q, omega.x, tol)
        for s in S:
            if np.abs(np.trace(P @ q.operator(s.x))) > 1e-7:
                return JointOrthogonality(False)
        return JointOrthogonality(True, Propensity(theory, q.coords(P).real))
    if theory.backend == "ball":
        n = omega.x[1:]
        if abs(np.linalg.norm(n) - 1) > tol:
            return JointOrthogonality(False)
        l = 0.5 * np.concatenate([[1.0], n])
        if all(abs(l @ s.x) <= tol for s in S):
            return JointOrthogonality(True, Propensity(theory, l))
        return JointOrthogonality(False)
    l = orthogonality_witness(theory, omega.x, [s.x for s in S])
    if l is None:
        return JointOrthogonality(False)
    return JointOrthogonality(True, Propensity(theory, l))


def orthogonality_witness(theory, x_one, xs_zero):
    """An effect equal to 1 on ``x_one`` and 0 on every ``xs_zero`` (polytopes), or None."""
    V = theory.extremal_states
    A_eq = np.vstack([x_one] + list(xs_zero))
    b_eq = np.concatenate([[1.0], np.zeros(len(xs_zero))])
    A_ub = np.vstack([V, -V])
    b_ub = np.concatenate([np.ones(len(V)), np.zeros(len(V))])
    res = linprog(V.sum(axis=0), A_ub=A_ub, b_ub=b_ub, A_eq=A_eq, b_eq=b_eq,
                  bounds=(None, None))
    if not res.success:
        return None
    l = res.x
    if theory.effect_mode == "explicit" and not is_valid_effect(theory, l):
        return None
    return l


@dataclass
class BetaReport:
    alpha: float
    beta: float | None  # None when 0/0: every beta works
    beta_in_unit: bool
    # l_zeta2(zeta1), l_zeta1(zeta2)
    cross_values: tuple
    h_on_mixture: float | None
    h_valid: bool
    distance: float
    mixture_orthogonal: bool
    witnesses: tuple = field(repr=False, default=())


def pairwise_vs_joint_orthogonality_report(zeta1, zeta2, omega, alpha, witnesses=None):
    """Test whether mixing the two witnesses can certify orthogonality of a mixture.

    The witnesses satisfy ``l_i(omega) = 1``, ``l_i(zeta_i) = 0``. The
    combination ``h = beta l_1 + (1 - beta) l_2`` vanishes on
    ``alpha zeta1 + (1 - alpha) zeta2`` exactly for

        beta = alpha a / (alpha a - (1 - alpha) b),  a = l_2(zeta1), b = l_1(zeta2)

    and is an effect only when ``beta`` lies in [0, 1]. The distance
    ``d(omega, alpha zeta2 + (1 - alpha) zeta1)`` is computed independently.
    """
    theory = same_theory(zeta1, zeta2, omega)
    tol = tolerances().feasibility
    if witnesses is None:
        l1 = _witness(theory, omega, zeta1)
        l2 = _witness(theory, omega, zeta2)
    else:
        l1, l2 = (np.asarray(w.l if isinstance(w, Propensity) else w, dtype=float)
                  for w in witnesses)
    a = float(l2 @ zeta1.x)
    b = float(l1 @ zeta2.x)
    num = alpha * a
    den = alpha * a - (1 - alpha) * b
    if abs(num) <= tol and abs(den) <= tol:
        beta, in_unit, h_val, h_ok = None, True, 0.0, True
    elif abs(den) <= tol:
        beta, in_unit, h_val, h_ok = float("inf"), False, None, False
    else:
        beta = num / den
        in_unit = -tol <= beta <= 1 + tol
        h = beta * l1 + (1 - beta) * l2
        target = alpha * zeta1.x + (1 - alpha) * zeta2.x
        h_val = float(h @ target)
        h_ok = is_valid_effect(theory, h)
    d = distance(omega, mix([zeta2, zeta1], [alpha, 1 - alpha]))
    return BetaReport(alpha, beta, bool(in_unit), (a, b), h_val, bool(h_ok), d,
                      d >= 1 - tol, (l1, l2))


def _witness(theory, omega, zeta):
    if theory.backend == "polytope":
        l = orthogonality_witness(theory, omega.x, [zeta.x])
    else:
        res = jointly_orthogonal([zeta], omega)
        l = res.witness.l if res.holds else None
    if l is None:
        raise ValueError("states are not orthogonal; no witness exists")
    return l


# ---------------------------------------------------------------------------
# mixing lemma and isometries


@dataclass
class MixingCheck:
    lhs: float
    rhs: float

    @property
    def ok(self):
        return abs(self.lhs - self.rhs) <= tolerances().feasibility


def mixing_contraction_check(omega, zeta, alpha):
    """Compare ``d(alpha omega + (1 - alpha) zeta, zeta)`` with ``alpha d(omega, zeta)``."""
    if not 0.0 <= alpha <= 1.0:
        raise ValueError("alpha must lie in [0, 1]")
    m = mix([omega, zeta], [alpha, 1 - alpha])
    return MixingCheck(distance(m, zeta), alpha * distance(omega, zeta))


def is_isometric(A, pairs=(), tol=1e-8):
    """Whether the deterministic map ``A`` preserves every supplied and every extremal distance."""
    from .transforms import probe_states

    theory = A.theory
    if not A.is_deterministic:
        raise ValueError("isometry is defined for deterministic transformations")
    P = [State(theory, x) for x in probe_states(theory)]
    checks = list(pairs) + list(itertools.combinations(P, 2))
    for omega, zeta in checks:
        before = distance(omega, zeta)
        after = distance(State(theory, A.M @ omega.x), State(theory, A.M @ zeta.x))
        if abs(before - after) > tol:
            return False
    return True
