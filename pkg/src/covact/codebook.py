"""Codebook construction and the rank-one-sum measurement operator.

A codebook is an M x N complex matrix whose columns are the pilot sequences.
The measurement operator maps a real coefficient vector z to the Hermitian
matrix sum_n z_n a_n a_n^H; its real vectorization stacks the real and
imaginary parts of the flattened rank-one columns into a 2M^2 x N matrix so
that the Euclidean norm of the stacked image equals the Frobenius norm of the
operator image.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .errors import InvalidInput
from .hermitian import HermitianMatrix, as_hermitian

_PRIME_CAP = 10_000
_primes: list[int] = []


def _sieve(limit: int) -> list[int]:
    flags = np.ones(limit + 1, dtype=bool)
    flags[:2] = False
    for p in range(2, int(limit**0.5) + 1):
        if flags[p]:
            flags[p * p :: p] = False
    return np.flatnonzero(flags).tolist()


def nth_prime(k: int) -> int:
    """The k-th prime number, with nth_prime(1) == 2.  Valid for k <= 10^4."""
    if not 1 <= k <= _PRIME_CAP:
        raise InvalidInput(f"prime index {k} outside [1, {_PRIME_CAP}]")
    global _primes
    if not _primes:
        # 104729 is the 10^4-th prime; sieve once, cache for the process.
        _primes = _sieve(110_000)
    return _primes[k - 1]


@dataclass(frozen=True)
class Codebook:
    """Pilot matrix with columns a_n; every column must be nonzero."""

    columns: np.ndarray

    def __post_init__(self):
        arr = np.asarray(self.columns, dtype=complex)
        if arr.ndim != 2 or arr.shape[0] < 1 or arr.shape[1] < 1:
            raise InvalidInput(f"expected an M x N matrix, got shape {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise InvalidInput("codebook entries must be finite")
        norms = np.linalg.norm(arr, axis=0)
        if np.any(norms == 0.0):
            raise InvalidInput("codebook columns must all be nonzero")
        arr = arr.copy()
        arr.setflags(write=False)
        object.__setattr__(self, "columns", arr)

    @property
    def pilot_len(self) -> int:
        return self.columns.shape[0]

    @property
    def num_users(self) -> int:
        return self.columns.shape[1]


def build_deterministic_codebook(M: int, N: int) -> Codebook:
    """Prime-phase codebook with entries of modulus m**-0.5.

    Entry (m, n) is ``m**-0.5 * exp(1j * sqrt(p_m / p_{M+1}) * pi
    / (N + N' + 1 - M**2) * (n - 1 + N'))`` with ``N' = max(M**2 - N, 0)``
    and p_k the k-th prime.  The construction attains the maximal order of
    the signed kernel condition but has a poor robustness constant, so it is
    kept out of the simulation defaults.
    """
    if M < 1 or N < 1:
        raise InvalidInput("M and N must be positive")
    n_pad = max(M * M - N, 0)
    denom = N + n_pad + 1 - M * M
    m_idx = np.arange(1, M + 1, dtype=float)
    primes = np.array([nth_prime(m) for m in range(1, M + 2)], dtype=float)
    freq = np.sqrt(primes[:M] / primes[M]) * (np.pi / denom)
    shift = np.arange(N, dtype=float) + n_pad
    phases = np.outer(freq, shift)
    cols = (m_idx**-0.5)[:, None] * np.exp(1j * phases)
    return Codebook(cols)


def build_gaussian_codebook(M: int, N: int, seed) -> Codebook:
    """Codebook with i.i.d. circularly symmetric complex Gaussian entries.

    Entries have unit second absolute moment: real and imaginary parts are
    independent N(0, 1/2).  ``seed`` may be an int or a numpy Generator.
    """
    if M < 1 or N < 1:
        raise InvalidInput("M and N must be positive")
    rng = np.random.default_rng(seed)
    cols = (rng.standard_normal((M, N)) + 1j * rng.standard_normal((M, N))) / np.sqrt(2)
    return Codebook(cols)


@dataclass(frozen=True)
class StackedRealMatrix:
    """Real 2M^2 x N stacking of the vectorized rank-one codebook columns.

    Column n is the column-major flattening of a_n a_n^H with real parts on
    top of imaginary parts, so ``norm(values @ z) == frobenius(A(z))`` for
    every real z and every column has Euclidean norm ``norm(a_n)**2``.
    """

    values: np.ndarray
    pilot_len: int

    def __post_init__(self):
        arr = np.asarray(self.values, dtype=float)
        arr = arr.copy()
        arr.setflags(write=False)
        object.__setattr__(self, "values", arr)

    @property
    def num_users(self) -> int:
        return self.values.shape[1]


class MeasurementOperator:
    """The linear map z -> sum_n z_n a_n a_n^H and its adjoint."""

    __slots__ = ("codebook",)

    def __init__(self, codebook: Codebook):
        self.codebook = codebook

    @property
    def pilot_len(self) -> int:
        return self.codebook.pilot_len

    @property
    def num_users(self) -> int:
        return self.codebook.num_users

    def _check_coefficients(self, z) -> np.ndarray:
        z = np.asarray(z, dtype=float)
        if z.shape != (self.num_users,):
            raise InvalidInput(
                f"expected coefficient vector of length {self.num_users}, got shape {z.shape}"
            )
        if not np.all(np.isfinite(z)):
            raise InvalidInput("coefficients must be finite")
        return z

    def apply_raw(self, z) -> np.ndarray:
        """Like apply() but returns a bare ndarray (hot path for solvers)."""
        z = self._check_coefficients(z)
        A = self.codebook.columns
        return (A * z) @ A.conj().T

    def apply(self, z) -> HermitianMatrix:
        """Evaluate sum_n z_n a_n a_n^H for real z."""
        return HermitianMatrix(self.apply_raw(z))

    def adjoint(self, H) -> np.ndarray:
        """Adjoint map: component n is Re(a_n^H H a_n).

        Satisfies <apply(z), H>_F == <z, adjoint(H)> for all real z, which
        makes it the gradient backbone of the least-squares objective.
        """
        herm = as_hermitian(H)
        if herm.dim != self.pilot_len:
            raise InvalidInput(
                f"expected a {self.pilot_len} x {self.pilot_len} matrix, got dim {herm.dim}"
            )
        A = self.codebook.columns
        return np.einsum("mn,mk,kn->n", A.conj(), herm.values, A).real

    def stacked_real(self) -> StackedRealMatrix:
        """Real vectorization of the operator as a 2M^2 x N matrix."""
        A = self.codebook.columns
        M, N = A.shape
        rank_ones = np.einsum("mn,kn->mkn", A, A.conj())
        flat = rank_ones.reshape(M * M, N, order="F")
        stacked = np.vstack([flat.real, flat.imag])
        return StackedRealMatrix(values=stacked, pilot_len=M)


def vectorize_hermitian(H, M: int) -> np.ndarray:
    """Stack a Hermitian matrix the same way StackedRealMatrix stacks columns."""
    herm = as_hermitian(H)
    if herm.dim != M:
        raise InvalidInput(f"expected dimension {M}, got {herm.dim}")
    flat = herm.values.reshape(M * M, order="F")
    return np.concatenate([flat.real, flat.imag])


def save_codebook_csv(codebook: Codebook, path) -> None:
    """Write a codebook as CSV rows ``m,n,re,im`` (1-based indices)."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["m", "n", "re", "im"])
        cols = codebook.columns
        for n in range(cols.shape[1]):
            for m in range(cols.shape[0]):
                a = cols[m, n]
                writer.writerow([m + 1, n + 1, f"{a.real:.17g}", f"{a.imag:.17g}"])


def load_codebook_csv(path) -> Codebook:
    """Read a codebook written by save_codebook_csv."""
    entries = {}
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        for row in reader:
            m, n = int(row["m"]) - 1, int(row["n"]) - 1
            entries[(m, n)] = float(row["re"]) + 1j * float(row["im"])
    if not entries:
        raise InvalidInput(f"no codebook entries in {path}")
    M = max(m for m, _ in entries) + 1
    N = max(n for _, n in entries) + 1
    cols = np.zeros((M, N), dtype=complex)
    for (m, n), val in entries.items():
        cols[m, n] = val
    return Codebook(cols)
