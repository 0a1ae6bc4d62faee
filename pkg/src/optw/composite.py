"""Bipartite (and, for teleportation, tripartite) systems.

A joint state of theories with embeddings ``m1`` and ``m2`` is an
``m1 x m2`` coordinate matrix ``W``: the probability of the local effects
``l1`` and ``l2`` is ``l1 @ W @ l2``. Row-major flattening gives the
coordinates in the joint theory, with index ``j * m2 + k``.

Transformations act as ``M1 @ W`` on the first party and ``W @ M2.T`` on
the second.
"""
from __future__ import annotations

import itertools
import weakref
from dataclasses import dataclass, field

import numpy as np

from . import linalg
from .config import tolerances
from .convex import State, Theory, _frozen
from .effects import Observable, Propensity, effect_range
from .errors import CutoffExceeded, NullConditioning, TheoryMismatch
from .lp import linprog
from .transforms import (Instrument, Transformation, dynamically_compatible, identity,
                         informationally_equivalent, probe_states)

MODES = ("min_tensor", "max_tensor", "quantum")


# ---------------------------------------------------------------------------
# facets of polytopes and the maximal tensor product


_FACETS = weakref.WeakKeyDictionary()


def facet_effects(theory):
    """The extreme rays of the effect cone, scaled to maximum one.

    Each is a functional vanishing on an affinely spanning set of vertices
    (a facet) and nonnegative on the rest.
    """
    if theory in _FACETS:
        return _FACETS[theory]
    if theory.backend != "polytope":
        raise ValueError("facets are only enumerated for polytopic theories")
    V = theory.extremal_states
    m = theory.embed_dim
    tol = 1e-9
    found = []
    if m == 1:
        out = theory.unit[None, :]
    else:
        for S in itertools.combinations(range(len(V)), m - 1):
            N = linalg.null_space(V[list(S)])
            if N.shape[1] != 1:
                continue
            l = N[:, 0].real
            vals = V @ l
            if vals.min() < -tol:
                l, vals = -l, -vals
            if vals.min() < -tol:
                continue
            l = l / vals.max()
            if not any(np.abs(l - f).max() < 1e-7 for f in found):
                found.append(l)
        out = np.array(found)
    out.setflags(write=False)
    _FACETS[theory] = out
    return out


def max_tensor_vertices(T1, T2, limit=500_000):
    """Vertices of ``{W : f1 W f2 >= 0 for all facet pairs, u1 W u2 = 1}`` by brute force."""
    F1, F2 = facet_effects(T1), facet_effects(T2)
    m = T1.embed_dim * T2.embed_dim
    A = np.einsum("ai,bj->abij", F1, F2).reshape(len(F1) * len(F2), m)
    norm = np.outer(T1.unit, T2.unit).ravel()
    k = m - 1
    total = _binom(len(A), k)
    if total > limit:
        raise CutoffExceeded("max-tensor vertex enumeration", limit, 0)
    found = []
    it = itertools.combinations(range(len(A)), k)
    while True:
        chunk = np.array(list(itertools.islice(it, 4096)), dtype=int)
        if chunk.size == 0:
            break
        chunk = chunk.reshape(len(chunk), k)
        S = np.concatenate([A[chunk], np.broadcast_to(norm, (len(chunk), 1, m))], axis=1)
        rhs = np.zeros(m)
        rhs[-1] = 1.0
        ok = np.abs(np.linalg.det(S)) > 1e-10
        if not ok.any():
            continue
        X = np.linalg.solve(S[ok], np.broadcast_to(rhs, (int(ok.sum()), m))[..., None])[..., 0]
        feas = (X @ A.T).min(axis=1) >= -1e-9
        for x in X[feas]:
            if not any(np.abs(x - y).max() < 1e-7 for y in found):
                found.append(x)
    return np.array(found)


def _binom(n, k):
    from math import comb
    return comb(n, k)


# ---------------------------------------------------------------------------
# composite theories and joint states


@dataclass(frozen=True, eq=False)
class CompositeTheory:
    factors: tuple
    mode: str
    joint: Theory

    @property
    def shape(self):
        return (self.factors[0].embed_dim, self.factors[1].embed_dim)

    @property
    def unit(self):
        return np.outer(self.factors[0].unit, self.factors[1].unit)

    def __repr__(self):
        return f"CompositeTheory({self.factors[0].name} x {self.factors[1].name}, {self.mode})"


_COMPOSITES = {}


def composite(T1, T2, mode=None):
    """The composite of two theories; ``mode`` defaults to quantum for quantum factors, else min_tensor."""
    quantum = T1.backend == "quantum" and T2.backend == "quantum"
    mode = ("quantum" if quantum else "min_tensor") if mode is None else mode
    if mode not in MODES:
        raise ValueError(f"unknown composite mode {mode!r}")
    if (mode == "quantum") != quantum:
        raise ValueError("the quantum mode needs two quantum factors, and only it accepts them")
    if "ball" in (T1.backend, T2.backend):
        raise ValueError("composites of ball theories are not supported")
    key = (id(T1), id(T2), mode)
    hit = _COMPOSITES.get(key)
    if hit is not None and hit.factors[0] is T1 and hit.factors[1] is T2:
        return hit
    unit = np.outer(T1.unit, T2.unit).ravel()
    name = f"{T1.name} x {T2.name} [{mode}]"
    if mode == "quantum":
        q = T1.quantum.tensor(T2.quantum)
        joint = Theory(name, unit, None, backend="quantum", quantum=q,
                       metadata={"exact": True, "mode": mode})
    elif mode == "min_tensor":
        V = np.einsum("ai,bj->abij", T1.extremal_states, T2.extremal_states)
        joint = Theory(name, unit, V.reshape(-1, unit.size), metadata={"mode": mode})
    else:
        joint = Theory(name, unit, max_tensor_vertices(T1, T2), metadata={"mode": mode})
    C = CompositeTheory((T1, T2), mode, joint)
    _COMPOSITES[key] = C
    return C


@dataclass(frozen=True, eq=False)
class JointState:
    composite: CompositeTheory
    W: np.ndarray

    def __post_init__(self):
        W = _frozen(self.W, 2)
        if W.shape != self.composite.shape:
            raise ValueError(f"joint state must be {self.composite.shape}, got {W.shape}")
        object.__setattr__(self, "W", W)

    @property
    def mass(self):
        C = self.composite
        return float(C.factors[0].unit @ self.W @ C.factors[1].unit)

    @property
    def x(self):
        return self.W.ravel()

    def as_state(self):
        return State(self.composite.joint, self.W.ravel())

    def pairing(self, l1, l2):
        a = l1.l if isinstance(l1, Propensity) else np.asarray(l1)
        b = l2.l if isinstance(l2, Propensity) else np.asarray(l2)
        return float(a @ self.W @ b)


def joint_membership_violation(C, W):
    """How far ``W`` is from the joint state set (0 inside, up to tolerance)."""
    W = np.asarray(W, dtype=float)
    T1, T2 = C.factors
    norm = abs(T1.unit @ W @ T2.unit - 1.0)
    if C.mode == "quantum":
        rho = C.joint.quantum.operator(W.ravel())
        neg = max(-linalg.eigvalsh(0.5 * (rho + rho.conj().T))[0], 0.0)
        return max(norm, neg)
    if C.mode == "max_tensor":
        vals = facet_effects(T1) @ W @ facet_effects(T2).T
        return max(norm, max(-vals.min(), 0.0))
    from .convex import hull_residual
    return max(norm, hull_residual(W.ravel(), C.joint.extremal_states)[0])


def joint_state(C, W, check=True):
    W = np.asarray(W, dtype=float)
    if check:
        bad = joint_membership_violation(C, W)
        if bad > tolerances().feasibility:
            raise ValueError(f"not a joint state in mode {C.mode} (violation {bad:.3g})")
    return JointState(C, W)


def product_state(omega1, omega2, C=None):
    C = composite(omega1.theory, omega2.theory) if C is None else C
    if C.factors[0] is not omega1.theory or C.factors[1] is not omega2.theory:
        raise TheoryMismatch("factor theories do not match the composite")
    return JointState(C, np.outer(omega1.x, omega2.x))


def ket_joint_state(C, psi):
    return JointState(C, C.joint.quantum.ket_coords(psi).reshape(C.shape))


def local_state(W, party):
    C = W.composite
    T1, T2 = C.factors
    if party == 1:
        return State(T1, W.W @ T2.unit)
    if party == 2:
        return State(T2, W.W.T @ T1.unit)
    raise ValueError("party must be 1 or 2")


def apply_local(W, A, party):
    """The unnormalized joint state after ``A`` happens on ``party``."""
    C = W.composite
    if A.theory is not C.factors[party - 1]:
        raise TheoryMismatch("transformation acts on another theory")
    return JointState(C, A.M @ W.W if party == 1 else W.W @ A.M.T)


def local_transformation(C, A, party):
    """``A`` on one factor and the identity on the other, as a joint transformation."""
    T1, T2 = C.factors
    if party == 1:
        M = np.kron(A.M, np.eye(T2.embed_dim))
    else:
        M = np.kron(np.eye(T1.embed_dim), A.M)
    return Transformation(C.joint, M, f"{A.label}@{party}")


def conditional_local_state(W, A):
    """State of party 1 given that ``A`` happened on party 2."""
    T1 = W.composite.factors[0]
    if A.theory is not W.composite.factors[1]:
        raise TheoryMismatch("transformation does not act on party 2")
    y = W.W @ A.effect
    p = float(T1.unit @ y)
    if p <= tolerances().conditioning:
        raise NullConditioning(p)
    return State(T1, y / p)


def acausality_check(W, I):
    """Largest change of party 1's local weight when the outcomes of ``I`` on party 2 are ignored."""
    total = sum(W.W @ t.effect for t in I)
    return float(np.abs(total - W.W @ W.composite.factors[1].unit).max())


@dataclass
class Ensemble:
    probabilities: np.ndarray
    states: list

    def average(self):
        live = [(p, s) for p, s in zip(self.probabilities, self.states) if s is not None]
        return sum(p * s.x for p, s in live)


@dataclass
class MixturesReport:
    first: Ensemble
    second: Ensemble
    local: State
    deviation: float

    @property
    def ok(self):
        return self.deviation <= tolerances().feasibility


def _ensemble(W, I):
    T1 = W.composite.factors[0]
    ps, states = [], []
    for t in I:
        y = W.W @ t.effect
        p = float(T1.unit @ y)
        ps.append(p)
        states.append(State(T1, y / p) if p > tolerances().conditioning else None)
    return Ensemble(np.array(ps), states)


def equivalent_incompatible_mixtures(W, I1, I2):
    """Party-1 ensembles steered by two instruments on party 2, compared with the local state."""
    local = local_state(W, 1)
    e1, e2 = _ensemble(W, I1), _ensemble(W, I2)
    dev = max(np.abs(e1.average() - local.x).max(), np.abs(e2.average() - local.x).max())
    return MixturesReport(e1, e2, local, float(dev))


@dataclass
class EntanglementVerdict:
    maximally_entangled: bool
    pure: bool
    chaotic_marginals: bool
    # True when both factors are classical, so the verdict is a degenerate instance
    classical_instance: bool = False

    def __bool__(self):
        return self.maximally_entangled


def is_joint_pure(W):
    C = W.composite
    tol = tolerances().feasibility
    if C.mode == "quantum":
        rho = C.joint.quantum.operator(W.x)
        w = linalg.eigvalsh(0.5 * (rho + rho.conj().T))
        return int(np.sum(w > tol)) == 1
    V = C.joint.extremal_states
    return bool(np.any(np.abs(V - W.x).max(axis=1) <= tol))


def _is_simplex(T):
    return (T.backend == "polytope" and T.n_vertices == T.embed_dim
            and linalg.numerical_rank(T.extremal_states) == T.embed_dim)


def is_maximally_entangled(W):
    """Pure in the joint state set, with both local states maximally chaotic."""
    from .convex import chaotic_state

    C = W.composite
    T1, T2 = C.factors
    tol = tolerances().feasibility
    pure = is_joint_pure(W)
    chaotic = (np.abs(local_state(W, 1).x - chaotic_state(T1).x).max() <= tol and
               np.abs(local_state(W, 2).x - chaotic_state(T2).x).max() <= tol)
    return EntanglementVerdict(bool(pure and chaotic), bool(pure), bool(chaotic),
                               _is_simplex(T1) and _is_simplex(T2))


# ---------------------------------------------------------------------------
# faithfulness


@dataclass
class Faithfulness:
    faithful: bool
    rank: int
    expected_rank: int
    condition_number: float


def _rank_report(A, expected):
    s = np.linalg.svd(np.atleast_2d(A), compute_uv=False)
    rel = tolerances().rank
    rank = int(np.sum(s > rel * s[0])) if s.size and s[0] > 0 else 0
    if rank >= expected and expected > 0:
        cond = float(s[0] / s[expected - 1])
    else:
        cond = float("inf")
    return rank, cond


def dynamical_basis(theory):
    """Measure-and-prepare maps ``s l^T`` over spanning states and spanning effects."""
    S = probe_states(theory)
    S = S[_independent_rows(S)]
    if theory.backend == "quantum":
        L = S  # a pure state's coordinates are those of its projector effect
    else:
        L = _spanning_effects(theory)
    return [Transformation(theory, np.outer(s, l), f"mp{i}.{j}")
            for i, s in enumerate(S) for j, l in enumerate(L)]


def _independent_rows(X):
    keep = []
    for i in range(len(X)):
        if linalg.numerical_rank(X[keep + [i]]) == len(keep) + 1:
            keep.append(i)
    return keep


def _spanning_effects(theory):
    cands = [theory.unit]
    for k in range(theory.embed_dim):
        e = np.eye(theory.embed_dim)[k]
        lo, hi = effect_range(theory, e)
        if hi - lo > 1e-12:
            cands.append((e - lo * theory.unit) / (hi - lo))
    C = np.array(cands)
    return C[_independent_rows(C)]


def dynamically_faithful(Phi, basis=None):
    """Injectivity of ``A -> (A on party 1) Phi`` on the span of ``basis``.

    The expected rank is the dimension of the span of the basis matrices, so
    only maps that vanish identically are allowed in the kernel.
    """
    T1 = Phi.composite.factors[0]
    basis = dynamical_basis(T1) if basis is None else list(basis)
    K = np.array([A.M.ravel() for A in basis]).T
    Cmat = np.array([(A.M @ Phi.W).ravel() for A in basis]).T
    expected = linalg.numerical_rank(K)
    rank, cond = _rank_report(Cmat, expected)
    return Faithfulness(rank == expected, rank, expected, cond)


def informationally_faithful(Phi):
    """Injectivity of ``l -> Phi(l, .)``, from party-1 effects to party-2 weights."""
    m1 = Phi.composite.shape[0]
    rank, cond = _rank_report(Phi.W.T, m1)
    return Faithfulness(rank == m1, rank, m1, cond)


@dataclass
class Preparation:
    target: State
    transformation: Transformation | None
    residual: float
    reason: str = ""

    @property
    def feasible(self):
        return self.transformation is not None


def preparationally_faithful(Phi, targets):
    """For each target on party 2, a party-1 transformation steering party 2 into it.

    Only the occurrence effect ``l`` of the transformation matters: solve
    ``Phi^T l = c * target`` (minimum-norm solution first, an LP if that is
    not an effect), rescale ``l`` to maximum one, then realize it as a
    Lueders map (quantum) or a measure-and-prepare map.
    """
    C = Phi.composite
    T1, T2 = C.factors
    return [_prepare(Phi, T1, T2, omega) for omega in targets]


def _prepare(Phi, T1, T2, omega):
    tol = tolerances().feasibility
    if omega.theory is not T2:
        raise TheoryMismatch("target must be a party-2 state")
    A = Phi.W.T
    l = np.linalg.lstsq(A, omega.x, rcond=None)[0]
    if np.abs(A @ l - omega.x).max() > 1e-9 or effect_range(T1, l)[0] < -tol:
        l = _prepare_lp(Phi, T1, omega) if T1.backend == "polytope" else None
    if l is None:
        return Preparation(omega, None, float("inf"), "no nonnegative effect steers to the target")
    top = effect_range(T1, l)[1]
    if top <= tol:
        return Preparation(omega, None, float("inf"), "steering effect vanishes")
    l = l / top
    if np.abs(l - T1.unit).max() <= 1e-9:
        T = identity(T1)
    elif T1.backend == "quantum":
        from .zoo import kraus_to_transformation
        E = T1.quantum.operator(l)
        T = kraus_to_transformation([linalg.psd_sqrt(0.5 * (E + E.conj().T))], T1, "steer")
    else:
        T = Transformation(T1, np.outer(T1.chaotic.x, l), "steer")
    Wc = apply_local(Phi, T, 1).W
    y = Wc.T @ T1.unit
    residual = float(np.abs(y / (T2.unit @ y) - omega.x).max())
    return Preparation(omega, T, residual)


def _prepare_lp(Phi, T1, omega):
    V = T1.extremal_states
    m1 = T1.embed_dim
    # variables (l, c); Phi^T l - c x = 0, V l >= 0, u.x l... c = 1 fixes the scale
    A_eq = np.hstack([Phi.W.T, -omega.x[:, None]])
    A_eq = np.vstack([A_eq, np.r_[np.zeros(m1), 1.0]])
    b_eq = np.r_[np.zeros(len(omega.x)), 1.0]
    A_ub = np.hstack([-V, np.zeros((len(V), 1))])
    res = linprog(np.zeros(m1 + 1), A_ub=A_ub, b_ub=np.zeros(len(V)), A_eq=A_eq, b_eq=b_eq,
                  bounds=(None, None))
    return res.x[:m1] if res.success else None


# ---------------------------------------------------------------------------
# teleportation


@dataclass
class TeleportOutcome:
    label: str
    probability: float
    distance: float


@dataclass
class TeleportReport:
    outcomes: list
    target: State

    @property
    def max_distance(self):
        return max((o.distance for o in self.outcomes if o.probability > 0), default=0.0)

    @property
    def total_probability(self):
        return float(sum(o.probability for o in self.outcomes))


def teleportation_check(Phi, L, corrections, omega):
    """Run "measure L on (1, 2), correct system 3 with U_j" on ``omega (x) Phi``.

    ``Phi`` is a joint state of systems 2 and 3, ``L`` an observable of the
    composite of systems 1 and 2, ``omega`` a state of system 1, and the
    output of outcome ``j`` is ``U_j`` applied to ``omega^T L_j Phi``
    normalized. Systems 1 and 3 must be the same theory.
    """
    from .metric import distance

    T2, T3 = Phi.composite.factors
    T1 = omega.theory
    C12 = L.theory
    if T3 is not T1:
        raise TheoryMismatch("the output system must be the input theory")
    m1, m2 = T1.embed_dim, T2.embed_dim
    if C12.embed_dim != m1 * m2:
        raise TheoryMismatch("observable does not live on systems 1 and 2")
    if len(corrections) != len(L):
        raise ValueError("one correction per outcome expected")
    outs = []
    for j, (l, U) in enumerate(zip(L, corrections)):
        Lj = l.l.reshape(m1, m2)
        w = omega.x @ Lj @ Phi.W
        p = float(T3.unit @ w)
        if p <= tolerances().conditioning:
            outs.append(TeleportOutcome(U.label or str(j), p, 0.0))
            continue
        out = State(T3, U.M @ w / p)
        outs.append(TeleportOutcome(U.label or str(j), p, distance(out, omega)))
    return TeleportReport(outs, omega)


def bell_observable(d):
    """Projectors onto the generalized Bell basis of two ``d``-level systems."""
    from .zoo import bell_kets, quantum_theory

    T = quantum_theory(d)
    C = composite(T, T)
    q = C.joint.quantum
    elems = [Propensity(C.joint, q.ket_coords(k)) for k in bell_kets(d)]
    tot = np.sum([e.l for e in elems], axis=0)
    elems[-1] = Propensity(C.joint, elems[-1].l + C.joint.unit - tot)
    return Observable(C.joint, tuple(elems), f"bell(d={d})")


def induced_effects(L, sigma):
    """Party-1 effects ``rho -> L_j(rho (x) sigma)`` for a fixed party-2 preparation."""
    T1, T2 = _factors_of(L.theory)
    if sigma.theory is not T2:
        raise TheoryMismatch("preparation must be a party-2 state")
    m1, m2 = T1.embed_dim, T2.embed_dim
    return np.array([e.l.reshape(m1, m2) @ sigma.x for e in L])


def induced_effect_rank(L, preparations):
    """Rank of the stacked induced effects over one or more party-2 preparations."""
    if isinstance(preparations, State):
        preparations = [preparations]
    rows = np.vstack([induced_effects(L, s) for s in preparations])
    return linalg.numerical_rank(rows)


def _factors_of(joint):
    for C in _COMPOSITES.values():
        if C.joint is joint:
            return C.factors
    raise ValueError("observable does not live on a known composite")


def choi_state(A):
    """``(A (x) I)`` applied to the maximally entangled state; a weight when ``A`` is not deterministic."""
    from .zoo import max_entangled_ket

    T = A.theory
    if T.backend != "quantum":
        raise ValueError("Choi states are defined for quantum transformations")
    C = composite(T, T)
    Phi = ket_joint_state(C, max_entangled_ket(T.quantum.d))
    return JointState(C, A.M @ Phi.W)


# ---------------------------------------------------------------------------
# compatibility of experiments


def informational_compatibility_verify(Cins, A, B, partition):
    """Check that the marginals of the joint instrument ``Cins`` reproduce ``A`` and ``B``.

    ``partition[k] = (i, j)`` says that element ``k`` of ``Cins`` is the joint
    outcome (``B_i``, ``A_j``). Marginals are compared by their effects.
    """
    m = Cins.theory.embed_dim
    sumA = {j: np.zeros((m, m)) for j in range(len(A))}
    sumB = {i: np.zeros((m, m)) for i in range(len(B))}
    for k, (i, j) in enumerate(partition):
        sumA[j] += Cins[k].M
        sumB[i] += Cins[k].M
    okA = all(informationally_equivalent(Transformation(A.theory, sumA[j]), A[j])
              for j in range(len(A)))
    okB = all(informationally_equivalent(Transformation(B.theory, sumB[i]), B[i])
              for i in range(len(B)))
    return CompatibilityMarginals(okA, okB)


@dataclass
class CompatibilityMarginals:
    first: bool
    second: bool

    @property
    def ok(self):
        return self.first and self.second


@dataclass
class Compatibility:
    compatible: bool
    joint: Instrument | None
    commutator: float
    identity_deviation: float = 0.0
    partition: list = field(default_factory=list)


def compatible_experiments(A, B, states=()):
    """The joint instrument ``{A_j o B_i}`` when every pair commutes.

    On each supplied state the identity
    ``w_{A_j}(B_i) / w_{B_i}(A_j) = w(B_i) / w(A_j)`` is also evaluated; the
    returned deviation is the worst relative mismatch.
    """
    from .transforms import bayes_prob, compose, occurrence_prob

    comm = max(float(np.abs(a.M @ b.M - b.M @ a.M).max()) for a in A for b in B)
    if not all(dynamically_compatible(a, b) for a in A for b in B):
        return Compatibility(False, None, comm)
    ts, part = [], []
    for i, b in enumerate(B):
        for j, a in enumerate(A):
            ts.append(compose(a, b))
            part.append((i, j))
    joint = Instrument(A.theory, tuple(ts),
                       tuple(f"{B.labels[i]}&{A.labels[j]}" for i, j in part))
    dev = 0.0
    tol = tolerances().conditioning
    for omega in states:
        for i, b in enumerate(B):
            for j, a in enumerate(A):
                pa, pb = occurrence_prob(a, omega), occurrence_prob(b, omega)
                if pa <= tol or pb <= tol:
                    continue
                lhs_den = bayes_prob(a, b, omega)
                if lhs_den <= tol:
                    continue
                lhs = bayes_prob(b, a, omega) / lhs_den
                dev = max(dev, abs(lhs - pb / pa) / max(1.0, pb / pa))
    return Compatibility(True, joint, comm, dev, part)
