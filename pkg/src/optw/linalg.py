"""Dense linear-algebra helpers: a Hermitian eigensolver and numerical ranks."""
from __future__ import annotations

import numpy as np

from .config import tolerances


def jacobi_eigh_symmetric(S, tol=1e-12, max_sweeps=100):
    """Cyclic Jacobi diagonalization of a real symmetric matrix.

    Returns ``(w, Q)`` with ascending eigenvalues and ``S = Q diag(w) Q^T``.
    """
    A = np.array(S, dtype=float)
    n = A.shape[0]
    Q = np.eye(n)
    scale = max(np.abs(A).max(initial=0.0), 1e-300)
    for _ in range(max_sweeps):
        off = np.sqrt(np.sum(np.tril(A, -1) ** 2))
        if off <= tol * scale:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = A[p, q]
                if abs(apq) <= 1e-300:
                    continue
                theta = (A[q, q] - A[p, p]) / (2.0 * apq)
                t = np.sign(theta) / (abs(theta) + np.sqrt(theta * theta + 1.0)) if theta else 1.0
                cs = 1.0 / np.sqrt(t * t + 1.0)
                sn = t * cs
                Ap, Aq = A[:, p].copy(), A[:, q].copy()
                A[:, p] = cs * Ap - sn * Aq
                A[:, q] = sn * Ap + cs * Aq
                Ap, Aq = A[p, :].copy(), A[q, :].copy()
                A[p, :] = cs * Ap - sn * Aq
                A[q, :] = sn * Ap + cs * Aq
                Qp, Qq = Q[:, p].copy(), Q[:, q].copy()
                Q[:, p] = cs * Qp - sn * Qq
                Q[:, q] = sn * Qp + cs * Qq
    w = np.diag(A).copy()
    order = np.argsort(w, kind="stable")
    return w[order], Q[:, order]


def eigh(H, tol=1e-12, max_sweeps=100):
    """Eigen-decomposition of a complex Hermitian matrix.

    Works on the real symmetric embedding ``[[Re, -Im], [Im, Re]]``, whose
    spectrum is that of ``H`` with every eigenvalue doubled. Eigenvectors are
    recovered cluster by cluster and re-orthonormalized in ``C^d``.
    """
    H = np.asarray(H, dtype=complex)
    d = H.shape[0]
    if not np.allclose(H, H.conj().T, atol=1e-12 * max(1.0, np.abs(H).max(initial=0.0))):
        raise ValueError("matrix is not Hermitian")
    S = np.block([[H.real, -H.imag], [H.imag, H.real]])
    w2, Q = jacobi_eigh_symmetric(S, tol=tol, max_sweeps=max_sweeps)
    cand = Q[:d, :] + 1j * Q[d:, :]

    scale = max(np.abs(w2).max(initial=0.0), 1.0)
    gap = 1e-9 * scale
    vals, vecs = [], []
    k = 0
    while k < 2 * d:
        end = k + 1
        while end < 2 * d and w2[end] - w2[end - 1] <= gap:
            end += 1
        need = (end - k) // 2
        basis = []
        for idx in range(k, end):
            v = cand[:, idx].copy()
            for u in vecs + basis:
                v -= (u.conj() @ v) * u
            nv = np.linalg.norm(v)
            if nv > 1e-6:
                basis.append(v / nv)
            if len(basis) == need:
                break
        mean = w2[k:end].mean()
        vals.extend([mean] * len(basis))
        vecs.extend(basis)
        k = end
    U = np.column_stack(vecs) if vecs else np.zeros((d, 0), dtype=complex)
    # refine eigenvalues with Rayleigh quotients
    w = np.real(np.einsum("ij,ik,kj->j", U.conj(), H, U))
    order = np.argsort(w, kind="stable")
    return w[order], U[:, order]


def eigvalsh(H):
    return eigh(H)[0]


def trace_norm(X):
    return float(np.abs(eigvalsh(X)).sum())


def psd_sqrt(H):
    w, U = eigh(H)
    return (U * np.sqrt(np.clip(w, 0.0, None))) @ U.conj().T


def numerical_rank(M, rel=None):
    """Rank of ``M`` counting singular values above ``rel * s_max``."""
    M = np.atleast_2d(np.asarray(M))
    if M.size == 0:
        return 0
    rel = tolerances().rank if rel is None else rel
    s = np.linalg.svd(M, compute_uv=False)
    if s.size == 0 or s[0] == 0:
        return 0
    return int(np.sum(s > rel * s[0]))


def condition_number(M):
    """Ratio of the largest to the smallest singular value (inf if numerically singular)."""
    s = np.linalg.svd(np.atleast_2d(M), compute_uv=False)
    if s.size == 0 or s[-1] <= tolerances().rank * s[0]:
        return float("inf")
    return float(s[0] / s[-1])


def null_space(M, rel=None):
    rel = tolerances().rank if rel is None else rel
    M = np.atleast_2d(M)
    u, s, vh = np.linalg.svd(M)
    r = int(np.sum(s > rel * s[0])) if s.size and s[0] > 0 else 0
    return vh[r:].conj().T
