"""Concrete theories: quantum, classical, gbit, polygons, hyperspheres."""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from . import linalg
from .convex import State, Theory
from .effects import Propensity
from .quantum import QuantumSystem, hermitian_basis
from .transforms import Transformation


# ---------------------------------------------------------------------------
# quantum


@lru_cache(maxsize=None)
def quantum_theory(d):
    """Density matrices on ``C^d`` in Hermitian-basis coordinates (exact backend)."""
    d = int(d)
    if not 1 <= d <= 8:
        raise ValueError("quantum theories are supported for 1 <= d <= 8")
    q = QuantumSystem.of_dimension(d)
    return Theory(f"quantum(d={d})", q.unit, None, backend="quantum", quantum=q,
                  metadata={"exact": True, "hilbert_dim": d})


def quantum_system_theory(q, name=None):
    return Theory(name or f"quantum(dims={q.dims})", q.unit, None, backend="quantum",
                  quantum=q, metadata={"exact": True, "hilbert_dim": q.d})


def ket_state(theory, psi):
    return State(theory, theory.quantum.ket_coords(psi))


def density_state(theory, rho):
    x = theory.quantum.coords(rho)
    if np.iscomplexobj(x):
        raise ValueError("density matrix is not Hermitian")
    return theory.state(x)


def kraus_to_transformation(kraus, theory, label=""):
    """The map ``rho -> sum K rho K^dag``; requires ``sum K^dag K <= I``."""
    q = theory.quantum
    kraus = [np.asarray(K, dtype=complex) for K in kraus]
    for K in kraus:
        if K.shape != (q.d, q.d):
            raise ValueError(f"Kraus operator must be {q.d}x{q.d}")
    E = sum(K.conj().T @ K for K in kraus)
    top = linalg.eigvalsh(0.5 * (E + E.conj().T))[-1]
    if top > 1 + 1e-9:
        raise ValueError(f"sum of K^dag K exceeds the identity (top eigenvalue {top:.6g})")
    return Transformation(theory, q.kraus_matrix(kraus), label)


def effect_from_operator(theory, E):
    return Propensity(theory, theory.quantum.coords(E).real)


def pauli_matrices():
    X = np.array([[0, 1], [1, 0]], dtype=complex)
    Y = np.array([[0, -1j], [1j, 0]])
    Z = np.diag([1.0 + 0j, -1.0])
    return np.eye(2, dtype=complex), X, Y, Z


def shift_clock(d):
    X = np.roll(np.eye(d, dtype=complex), 1, axis=0)  # X|k> = |k+1>
    Z = np.diag(np.exp(2j * np.pi * np.arange(d) / d))
    return X, Z


def weyl_operators(d):
    """``X^a Z^b`` for ``a, b`` in ``0..d-1``, outcome index ``a*d + b``."""
    X, Z = shift_clock(d)
    mp = np.linalg.matrix_power
    return [mp(X, a) @ mp(Z, b) for a in range(d) for b in range(d)]


def max_entangled_ket(d):
    return np.eye(d).ravel() / np.sqrt(d)


def bell_kets(d):
    """``(I (x) W_ab) |Phi+>`` for every Weyl operator ``W_ab``."""
    phi = max_entangled_ket(d)
    return [np.kron(np.eye(d), W) @ phi for W in weyl_operators(d)]


def pauli_corrections(d, theory=None):
    """Deterministic Weyl-conjugation corrections, in Bell-outcome order.

    With the Bell state on the second and third systems and Bell outcome
    ``(a, b)`` on the first two, the third system is left in
    ``conj(W) rho conj(W)^dag``, so the correction is its inverse ``W^T``.
    """
    theory = quantum_theory(d) if theory is None else theory
    return [kraus_to_transformation([W.T], theory, f"W{j // d}{j % d}")
            for j, W in enumerate(weyl_operators(d))]


# ---------------------------------------------------------------------------
# polytopic theories


@lru_cache(maxsize=None)
def classical_theory(k):
    """The probability simplex on ``k`` outcomes."""
    k = int(k)
    if k < 1:
        raise ValueError("k must be positive")
    return Theory(f"classical(k={k})", np.ones(k), np.eye(k),
                  metadata={"symmetry": "permutations of the outcomes"})


@lru_cache(maxsize=None)
def gbit_theory():
    """The square state space, coordinates ``(1, x, y)`` with ``|x|, |y| <= 1``."""
    V = np.array([[1, 1, 1], [1, -1, 1], [1, -1, -1], [1, 1, -1]], dtype=float)
    return Theory("gbit", np.array([1.0, 0.0, 0.0]), V,
                  metadata={"symmetry": "dihedral group of the square"})


@lru_cache(maxsize=None)
def polygon_theory(n):
    """Regular ``n``-gon inscribed in the unit circle, coordinates ``(1, cos, sin)``."""
    n = int(n)
    if n < 3:
        raise ValueError("a polygon needs at least 3 vertices")
    t = 2 * np.pi * np.arange(n) / n
    V = np.column_stack([np.ones(n), np.cos(t), np.sin(t)])
    return Theory(f"polygon(n={n})", np.array([1.0, 0.0, 0.0]), V,
                  metadata={"symmetry": f"dihedral group of order {2 * n}"})


def gbit_from_polygon4():
    """Linear map taking polygon(4) coordinates to gbit coordinates."""
    return np.array([[1.0, 0, 0], [0, 1, -1], [0, 1, 1]])


# ---------------------------------------------------------------------------
# spheres


ICOSPHERE_SIZES = (12, 42, 162, 642, 2562)


def icosphere(order):
    """Vertices of the ``order``-times subdivided icosahedron on the unit sphere."""
    p = (1 + 5 ** 0.5) / 2
    verts = [(-1, p, 0), (1, p, 0), (-1, -p, 0), (1, -p, 0), (0, -1, p), (0, 1, p),
             (0, -1, -p), (0, 1, -p), (p, 0, -1), (p, 0, 1), (-p, 0, -1), (-p, 0, 1)]
    faces = [(0, 11, 5), (0, 5, 1), (0, 1, 7), (0, 7, 10), (0, 10, 11), (1, 5, 9),
             (5, 11, 4), (11, 10, 2), (10, 7, 6), (7, 1, 8), (3, 9, 4), (3, 4, 2),
             (3, 2, 6), (3, 6, 8), (3, 8, 9), (4, 9, 5), (2, 4, 11), (6, 2, 10),
             (8, 6, 7), (9, 8, 1)]
    verts = [np.array(v, float) / np.linalg.norm(v) for v in verts]
    for _ in range(order):
        cache = {}

        def mid(a, b):
            key = (min(a, b), max(a, b))
            if key not in cache:
                v = verts[a] + verts[b]
                verts.append(v / np.linalg.norm(v))
                cache[key] = len(verts) - 1
            return cache[key]

        new = []
        for a, b, c in faces:
            ab, bc, ca = mid(a, b), mid(b, c), mid(c, a)
            new += [(a, ab, ca), (b, bc, ab), (c, ca, bc), (ab, bc, ca)]
        faces = new
    return np.array(verts)


def sphere_points(N, count, seed=0):
    """``count`` quasi-uniform points on the unit sphere ``S^N`` in ``R^(N+1)``.

    ``N = 2`` with an icosphere size uses the icosphere; otherwise ``count/2``
    seeded Gaussian directions together with their antipodes.
    """
    if N == 2 and count in ICOSPHERE_SIZES:
        return icosphere(ICOSPHERE_SIZES.index(count))
    if count % 2:
        raise ValueError("sample size must be even (points come in antipodal pairs)")
    rng = np.random.default_rng(seed)
    P = rng.normal(size=(count // 2, N + 1))
    P /= np.linalg.norm(P, axis=1, keepdims=True)
    return np.vstack([P, -P])


@lru_cache(maxsize=None)
def hypersphere_theory(N, count, seed=0):
    """Unit ball in ``R^(N+1)`` with effects ``f_m(n) = (1 + m.n)/2``; sphere sampled at ``count`` points."""
    P = sphere_points(N, count, seed)
    V = np.hstack([np.ones((len(P), 1)), P])
    unit = np.zeros(N + 2)
    unit[0] = 1.0
    return Theory(f"hypersphere(N={N}, count={len(P)})", unit, V, backend="ball",
                  metadata={"sphere_dim": N, "sample": "icosphere" if N == 2 and
                            count in ICOSPHERE_SIZES else f"gaussian+antipodes seed={seed}"})


def sphere_effect(theory, m):
    m = np.asarray(m, dtype=float)
    return Propensity(theory, 0.5 * np.concatenate([[1.0], m]))


@lru_cache(maxsize=None)
def bloch_discretization(order=3):
    """Polytope spanned by icosphere Bloch vectors, in qubit Hermitian-basis coordinates.

    A pure state with Bloch vector ``n`` has coordinates ``(1, n)/sqrt(2)``.
    """
    P = icosphere(order)
    V = np.hstack([np.ones((len(P), 1)), P]) / np.sqrt(2)
    unit = np.array([np.sqrt(2), 0.0, 0.0, 0.0])
    return Theory(f"bloch-polytope(order={order})", unit, V,
                  metadata={"approximates": "quantum(d=2)", "icosphere_order": order})


# ---------------------------------------------------------------------------
# faces of quantum state spaces


@dataclass(frozen=True, eq=False)
class Face:
    parent: Theory
    theory: Theory
    isometry: np.ndarray  # columns span the subspace

    def embed(self, state):
        """Coordinates in the parent of a state of the face."""
        W = self.isometry
        rho = self.theory.quantum.operator(state.x)
        return State(self.parent, self.parent.quantum.coords(W @ rho @ W.conj().T).real)


def face_extraction(theory, kets):
    """The face of density matrices supported on ``span(kets)``, as a smaller quantum theory."""
    K = np.column_stack([np.asarray(k, dtype=complex) for k in kets])
    Q, R = np.linalg.qr(K)
    r = linalg.numerical_rank(R)
    W = Q[:, :r]
    q = QuantumSystem((r,), hermitian_basis(r))
    return Face(theory, quantum_system_theory(q, f"face(rank={r}) of {theory.name}"), W)


def zoo_theories():
    """Named instances used by the analysis and verification suites."""
    return {
        "classical2": classical_theory(2),
        "classical3": classical_theory(3),
        "classical4": classical_theory(4),
        "gbit": gbit_theory(),
        "polygon5": polygon_theory(5),
        "polygon6": polygon_theory(6),
        "qubit": quantum_theory(2),
        "qutrit": quantum_theory(3),
        "sphere2": hypersphere_theory(2, 162),
        "bloch1": bloch_discretization(1),
    }
