"""Complex Hermitian linear algebra: eigendecompositions, HPD roots and inverses.

All matrix types are immutable after construction and safe to share across
threads; every operation is a pure function.  Dimensions stay small (M <= 16
in all experiments), so everything goes through dense LAPACK routines.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import InvalidInput, NotPositiveDefinite

# Relative floor under which the smallest eigenvalue disqualifies a matrix
# from being treated as positive definite.
HPD_TOL_FACTOR = 1e-12


class HermitianMatrix:
    """A complex square matrix stored in exactly Hermitian form.

    The input is symmetrized to (H + H^H)/2 at construction; this makes the
    entries satisfy H[i, j] == conj(H[j, i]) exactly and zeroes the imaginary
    part of the diagonal exactly.  Downstream formulas assume exact
    Hermitianity, so construction is the single place where floating-point
    asymmetry is killed.
    """

    __slots__ = ("values",)

    def __init__(self, values):
        arr = np.asarray(values, dtype=complex)
        if arr.ndim != 2 or arr.shape[0] != arr.shape[1] or arr.shape[0] < 1:
            raise InvalidInput(f"expected a square matrix, got shape {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise InvalidInput("matrix entries must be finite")
        arr = (arr + arr.conj().T) / 2
        arr.setflags(write=False)
        self.values = arr

    @property
    def dim(self) -> int:
        return self.values.shape[0]

    def frobenius_norm(self) -> float:
        return float(np.linalg.norm(self.values))

    def __repr__(self):
        return f"HermitianMatrix(dim={self.dim})"


class HpdMatrix:
    """A Hermitian positive definite matrix.

    Construction verifies that the smallest eigenvalue exceeds
    ``HPD_TOL_FACTOR * max(1, ||H||_{2->2})``.
    """

    __slots__ = ("hermitian",)

    def __init__(self, values):
        herm = values if isinstance(values, HermitianMatrix) else HermitianMatrix(values)
        lam = np.linalg.eigvalsh(herm.values)
        tol = HPD_TOL_FACTOR * max(1.0, float(np.abs(lam).max()))
        if lam[0] < tol:
            raise NotPositiveDefinite(
                f"smallest eigenvalue {lam[0]:.3e} is below the HPD tolerance {tol:.3e}"
            )
        self.hermitian = herm

    @property
    def values(self) -> np.ndarray:
        return self.hermitian.values

    @property
    def dim(self) -> int:
        return self.hermitian.dim

    def __repr__(self):
        return f"HpdMatrix(dim={self.dim})"


@dataclass(frozen=True)
class EigenDecomposition:
    """Eigenvalues in ascending order with a unitary eigenvector matrix."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray


def as_hermitian(values) -> HermitianMatrix:
    """Coerce an array or matrix wrapper into a HermitianMatrix."""
    if isinstance(values, HermitianMatrix):
        return values
    if isinstance(values, HpdMatrix):
        return values.hermitian
    return HermitianMatrix(values)


def as_hpd(values) -> HpdMatrix:
    """Coerce an array or matrix wrapper into an HpdMatrix."""
    if isinstance(values, HpdMatrix):
        return values
    return HpdMatrix(values)


def eig_hermitian(H) -> EigenDecomposition:
    """Eigendecomposition of a Hermitian matrix, eigenvalues ascending.

    The reconstruction ``V diag(lam) V^H`` matches the input to 1e-10
    relative and ``V`` is unitary to the same tolerance.
    """
    herm = as_hermitian(H)
    lam, vec = np.linalg.eigh(herm.values)
    lam.setflags(write=False)
    vec.setflags(write=False)
    return EigenDecomposition(eigenvalues=lam, eigenvectors=vec)


def operator_norm(H) -> float:
    """Operator norm from l2 to l2 of a Hermitian matrix: max_m |lambda_m|."""
    herm = as_hermitian(H)
    return float(np.abs(np.linalg.eigvalsh(herm.values)).max())


def hpd_sqrt(Z) -> HpdMatrix:
    """Unique HPD square root R of an HPD matrix, with R @ R == Z."""
    zpd = as_hpd(Z)
    lam, vec = np.linalg.eigh(zpd.values)
    root = (vec * np.sqrt(lam)) @ vec.conj().T
    return HpdMatrix(root)


def hpd_inverse(Z) -> HpdMatrix:
    """Inverse of an HPD matrix, computed through its eigendecomposition."""
    zpd = as_hpd(Z)
    lam, vec = np.linalg.eigh(zpd.values)
    inv = (vec / lam) @ vec.conj().T
    return HpdMatrix(inv)
