"""Seeded random states, effects, transformations and theories.

All generators take a ``numpy.random.Generator``; the workbench always builds
it as ``np.random.default_rng(seed)`` (PCG64), whose streams are stable
across platforms.
"""
from __future__ import annotations

import numpy as np
from scipy.spatial import ConvexHull

from . import linalg
from .convex import State, Theory
from .effects import Observable, Propensity, effect_range
from .transforms import Instrument, Transformation, identity


def rng_from(seed):
    return seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)


def random_ket(d, rng):
    psi = rng.normal(size=d) + 1j * rng.normal(size=d)
    return psi / np.linalg.norm(psi)


def random_density(d, rng, rank=None):
    rank = d if rank is None else rank
    G = rng.normal(size=(d, rank)) + 1j * rng.normal(size=(d, rank))
    rho = G @ G.conj().T
    return rho / np.trace(rho).real


def random_unitary(d, rng):
    Z = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    Q, R = np.linalg.qr(Z)
    return Q * (np.diag(R) / np.abs(np.diag(R)))


def random_state(theory, rng):
    if theory.backend == "quantum":
        q = theory.quantum
        return State(theory, q.coords(random_density(q.d, rng)))
    if theory.backend == "ball":
        n = rng.normal(size=theory.embed_dim - 1)
        n *= rng.uniform() ** (1 / n.size) / np.linalg.norm(n)
        return State(theory, np.concatenate([[1.0], n]))
    V = theory.extremal_states
    w = rng.dirichlet(np.full(len(V), 0.5))
    return State(theory, w @ V)


def random_pure_state(theory, rng):
    if theory.backend == "quantum":
        return State(theory, theory.quantum.ket_coords(random_ket(theory.quantum.d, rng)))
    if theory.backend == "ball":
        n = rng.normal(size=theory.embed_dim - 1)
        return State(theory, np.concatenate([[1.0], n / np.linalg.norm(n)]))
    return theory.vertex(int(rng.integers(theory.n_vertices)))


def _rescaled(theory, g, lo_t, hi_t):
    # u . x = 1 on states, so g + c u shifts every value by c
    lo, hi = effect_range(theory, g)
    if hi - lo <= 1e-12:
        return lo_t * theory.unit
    return (g - lo * theory.unit) * ((hi_t - lo_t) / (hi - lo)) + lo_t * theory.unit


def random_effect(theory, rng):
    """A valid effect with a random sub-range of [0, 1]."""
    a, b = np.sort(rng.uniform(size=2))
    if rng.uniform() < 0.3:
        a, b = 0.0, 1.0
    if theory.backend == "quantum":
        q = theory.quantum
        H = rng.normal(size=(q.d, q.d)) + 1j * rng.normal(size=(q.d, q.d))
        g = q.coords(H + H.conj().T).real
    else:
        g = rng.normal(size=theory.embed_dim)
    if theory.effect_mode == "explicit":
        E = np.vstack([theory.extremal_effects, theory.unit])
        w = rng.dirichlet(np.ones(len(E)))
        return Propensity(theory, w @ E * b)
    return Propensity(theory, _rescaled(theory, g, a, b))


def random_observable(theory, rng, k=3):
    """``k - 1`` random nonnegative functionals scaled to sum below ``u``, completed by the rest."""
    if theory.backend == "quantum":
        q = theory.quantum
        ins = random_kraus_instrument(q, rng, k)
        return Observable(theory, tuple(Propensity(theory, q.coords(E).real)
                                        for E in _povm_from(ins, q.d)))
    parts = [_rescaled(theory, rng.normal(size=theory.embed_dim), 0.0, 1.0)
             for _ in range(k - 1)]
    total_hi = effect_range(theory, np.sum(parts, axis=0))[1]
    parts = [p / max(total_hi, 1.0) * rng.uniform(0.5, 1.0) for p in parts]
    parts.append(theory.unit - np.sum(parts, axis=0))
    return Observable(theory, tuple(Propensity(theory, p) for p in parts))


def _povm_from(kraus_groups, d):
    return [sum(K.conj().T @ K for K in g) for g in kraus_groups]


def random_kraus_instrument(q, rng, k=2, kraus_per_outcome=2):
    """Kraus groups from blocks of a random isometry, so ``sum K^dag K = I``."""
    d = q.d
    n = k * kraus_per_outcome
    Z = rng.normal(size=(n * d, d)) + 1j * rng.normal(size=(n * d, d))
    Q, _ = np.linalg.qr(Z)
    blocks = [Q[i * d:(i + 1) * d, :] for i in range(n)]
    return [blocks[j * kraus_per_outcome:(j + 1) * kraus_per_outcome] for j in range(k)]


def random_instrument(theory, rng, k=2):
    """A random instrument with ``k`` outcomes.

    Quantum: random Kraus groups. Otherwise a convex mixture of the identity
    with a measure-and-prepare instrument (outcome ``j`` prepares a random
    state after a random observable clicks ``j``); the identity branch is
    folded into outcome 0.
    """
    if theory.backend == "quantum":
        q = theory.quantum
        groups = random_kraus_instrument(q, rng, k, kraus_per_outcome=int(rng.integers(1, 3)))
        return Instrument(theory, tuple(Transformation(theory, q.kraus_matrix(g), f"k{j}")
                                        for j, g in enumerate(groups)))
    L = random_observable(theory, rng, k)
    lam = rng.uniform() if rng.uniform() < 0.7 else 0.0
    ts = []
    for j, l in enumerate(L):
        s = random_state(theory, rng).x
        M = (1 - lam) * np.outer(s, l.l)
        if j == 0:
            M = M + lam * identity(theory).M
        ts.append(Transformation(theory, M, f"t{j}"))
    if theory.backend == "ball" and lam > 0:
        R = np.eye(theory.embed_dim)
        R[1:, 1:] = _random_orthogonal(theory.embed_dim - 1, rng)
        ts[0] = Transformation(theory, ts[0].M - lam * np.eye(theory.embed_dim) + lam * R, "t0")
    return Instrument(theory, tuple(ts))


def _random_orthogonal(n, rng):
    Q, R = np.linalg.qr(rng.normal(size=(n, n)))
    return Q * np.sign(np.diag(R))


def random_transformation(theory, rng):
    ins = random_instrument(theory, rng, k=int(rng.integers(1, 4)))
    return ins[int(rng.integers(len(ins)))]


def random_polytope_theory(rng, max_dim=4, max_vertices=12, name=None):
    """Convex hull of Gaussian points in ``R^D`` (D <= max_dim), embedded as ``(1, p)``."""
    while True:
        D = int(rng.integers(1, max_dim + 1))
        n = int(rng.integers(D + 1, max_vertices + 1))
        P = rng.normal(size=(n, D))
        if D == 1:
            P = np.array([[P.min()], [P.max()]])
        else:
            try:
                P = P[np.sort(ConvexHull(P).vertices)]
            except Exception:
                continue
        if linalg.numerical_rank(P - P.mean(axis=0)) < D:
            continue
        V = np.hstack([np.ones((len(P), 1)), P])
        unit = np.zeros(D + 1)
        unit[0] = 1.0
        return Theory(name or f"random-polytope(D={D}, n={len(P)})", unit, V,
                      metadata={"generator": "gaussian hull"})
