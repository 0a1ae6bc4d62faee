"""Real coordinates for finite-dimensional quantum systems.

Operators are expanded in an orthonormal Hermitian basis ``B_k``
(``tr(B_j B_k) = delta_jk``, ``B_0 = I/sqrt(d)``), so a density matrix
``rho`` has real coordinates ``x_k = tr(rho B_k)``, an effect ``E`` has
``l_k = tr(E B_k)``, and the pairing ``l @ x`` is ``tr(E rho)``.
"""
from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from . import linalg


def hermitian_basis(d):
    """Identity/sqrt(d) followed by the normalized generalized Gell-Mann matrices.

    Ordering: symmetric off-diagonal, antisymmetric off-diagonal, diagonal,
    so that ``d = 2`` gives ``(I, X, Y, Z) / sqrt(2)``.
    """
    basis = [np.eye(d, dtype=complex) / np.sqrt(d)]
    pairs = [(j, k) for j in range(d) for k in range(j + 1, d)]
    for j, k in pairs:
        B = np.zeros((d, d), dtype=complex)
        B[j, k] = B[k, j] = 1 / np.sqrt(2)
        basis.append(B)
    for j, k in pairs:
        B = np.zeros((d, d), dtype=complex)
        B[j, k] = -1j / np.sqrt(2)
        B[k, j] = 1j / np.sqrt(2)
        basis.append(B)
    for l in range(1, d):
        B = np.zeros((d, d), dtype=complex)
        B[np.arange(l), np.arange(l)] = 1.0
        B[l, l] = -l
        basis.append(B / np.sqrt(l * (l + 1)))
    return np.array(basis)


@dataclass(frozen=True, eq=False)
class QuantumSystem:
    dims: tuple
    basis: np.ndarray

    def __post_init__(self):
        basis = np.asarray(self.basis, dtype=complex)
        d = int(np.prod(self.dims))
        if basis.shape != (d * d, d, d):
            raise ValueError(f"basis shape {basis.shape} does not match dims {self.dims}")
        gram = np.einsum("aij,bji->ab", basis, basis)
        if np.abs(gram - np.eye(d * d)).max() > 1e-12:
            raise ValueError("Hermitian basis is not orthonormal")
        if np.abs(basis - basis.conj().transpose(0, 2, 1)).max() > 1e-12:
            raise ValueError("basis elements are not Hermitian")
        basis.setflags(write=False)
        object.__setattr__(self, "basis", basis)

    @classmethod
    def of_dimension(cls, d):
        return cls((int(d),), hermitian_basis(int(d)))

    @property
    def d(self):
        return int(np.prod(self.dims))

    @property
    def m(self):
        return self.d ** 2

    @cached_property
    def unit(self):
        return self.coords(np.eye(self.d))

    def coords(self, op):
        """tr(op B_k) for Hermitian ``op``; complex coefficients otherwise."""
        c = np.einsum("kij,ji->k", self.basis, np.asarray(op, dtype=complex))
        if np.abs(c.imag).max(initial=0.0) < 1e-12:
            return c.real.copy()
        return c

    def operator(self, x):
        return np.einsum("k,kij->ij", np.asarray(x), self.basis)

    def ket_coords(self, psi):
        psi = np.asarray(psi, dtype=complex).ravel()
        psi = psi / np.linalg.norm(psi)
        return self.coords(np.outer(psi, psi.conj()))

    def kraus_matrix(self, kraus):
        """Real matrix of ``rho -> sum_K K rho K^dag`` in this basis."""
        M = np.zeros((self.m, self.m))
        B = self.basis
        for K in kraus:
            K = np.asarray(K, dtype=complex)
            KB = np.einsum("ij,kjl,ml->kim", K, B, K.conj())  # K B_k K^dag
            M += np.einsum("jab,kba->jk", B, KB).real
        return M

    def apply_map(self, M, X):
        """Linear extension of the coordinate map ``M`` to any operator ``X``."""
        return self.operator(M @ self.coords(X))

    def choi(self, M):
        """Choi matrix ``sum_ij |i><j| (x) Phi(|i><j|)`` (input factor first)."""
        d = self.d
        C = np.zeros((d * d, d * d), dtype=complex)
        for i in range(d):
            for j in range(d):
                E = np.zeros((d, d), dtype=complex)
                E[i, j] = 1.0
                C += np.kron(E, self.apply_map(M, E))
        return C

    def tensor(self, other):
        basis = np.einsum("aij,bkl->abikjl", self.basis, other.basis)
        d1, d2 = self.d, other.d
        basis = basis.reshape(self.m * other.m, d1 * d2, d1 * d2)
        return QuantumSystem(tuple(self.dims) + tuple(other.dims), basis)

    def is_density(self, x, tol=1e-9):
        rho = self.operator(x)
        if abs(np.trace(rho).real - 1.0) > tol:
            return False
        return bool(linalg.eigvalsh(_herm(rho))[0] >= -tol)


def _herm(A):
    return 0.5 * (A + A.conj().T)
