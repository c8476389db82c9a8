"""Sampling of the measurement model and controlled perturbations.

The model observes K antenna snapshots Y = A sqrt(diag(x)) H + E, where H has
i.i.d. CN(0, 1) entries, the noise columns are CN(0, Sigma), and x holds the
nonnegative large-scale fading coefficients.  The circularly symmetric
convention used throughout puts variance Sigma/2 on each of the real and
imaginary parts so that E[y y^H] = Sigma; this is the only convention
consistent with E[(1/K) Y Y^H] = A diag(x) A^H + Sigma.

All randomness flows through named streams derived from a base seed, so
trials can run in parallel without changing any result.
"""

from __future__ import annotations

import csv
import hashlib
from dataclasses import dataclass

import numpy as np

from .codebook import Codebook
from .errors import InvalidInput
from .hermitian import HermitianMatrix, as_hermitian, as_hpd, hpd_sqrt, operator_norm


def stream(seed, *labels) -> np.random.Generator:
    """Independent, reproducible generator for a (seed, labels...) stream.

    Labels are hashed into the seed sequence, so streams with different
    labels are statistically independent and a fixed (seed, labels) pair is
    bit-reproducible across platforms and process layouts.  A Generator
    passed as ``seed`` spawns an independent child per call instead.
    """
    if isinstance(seed, np.random.Generator):
        return seed.spawn(1)[0] if labels else seed
    words = [int(seed)]
    for label in labels:
        digest = hashlib.blake2s(repr(label).encode(), digest_size=8).digest()
        words.append(int.from_bytes(digest, "big"))
    return np.random.default_rng(np.random.SeedSequence(words))


@dataclass(frozen=True)
class FadingVector:
    """Nonnegative, at-most-S-sparse vector of large-scale fading coefficients."""

    x: np.ndarray
    sparsity: int

    def __post_init__(self):
        arr = np.asarray(self.x, dtype=float)
        if arr.ndim != 1 or arr.size < 1:
            raise InvalidInput(f"expected a vector, got shape {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise InvalidInput("fading coefficients must be finite")
        if np.any(arr < 0):
            raise InvalidInput("fading coefficients must be nonnegative")
        nnz = int(np.count_nonzero(arr))
        if nnz > self.sparsity:
            raise InvalidInput(f"{nnz} nonzeros exceed the sparsity budget {self.sparsity}")
        arr = arr.copy()
        arr.setflags(write=False)
        object.__setattr__(self, "x", arr)

    @property
    def support(self) -> frozenset:
        return frozenset(np.flatnonzero(self.x).tolist())


@dataclass(frozen=True)
class ChannelRealization:
    """Received matrix Y together with the channel and noise factors."""

    Y: np.ndarray
    H: np.ndarray
    E: np.ndarray
    antennas: int


@dataclass(frozen=True)
class PerturbedObservation:
    """A Hermitian observation at a known operator-norm distance from its base."""

    W: HermitianMatrix
    rho: float


def sample_complex_gaussian(Sigma, K: int, seed) -> np.ndarray:
    """K i.i.d. columns of a CN(0, Sigma) vector, shape (M, K).

    The columns are built as Sigma^(1/2) g with g having independent
    N(0, 1/2) real and imaginary parts, so E[y y^H] = Sigma exactly and
    scaling Sigma by c**2 scales the samples by c under the same seed.
    """
    if K < 1:
        raise InvalidInput("K must be positive")
    spd = as_hpd(Sigma)
    rng = np.random.default_rng(seed) if not isinstance(seed, np.random.Generator) else seed
    M = spd.dim
    g = (rng.standard_normal((M, K)) + 1j * rng.standard_normal((M, K))) / np.sqrt(2)
    return hpd_sqrt(spd).values @ g


def simulate_measurements(codebook: Codebook, fading: FadingVector, Sigma, K: int, seed) -> ChannelRealization:
    """Draw Y = A sqrt(diag(x)) H + E with fresh channel and noise streams."""
    if K < 1:
        raise InvalidInput("K must be positive")
    spd = as_hpd(Sigma)
    A = codebook.columns
    if spd.dim != codebook.pilot_len:
        raise InvalidInput("noise covariance dimension does not match the pilot length")
    if fading.x.size != codebook.num_users:
        raise InvalidInput("fading vector length does not match the number of users")
    rng_h = stream(seed, "channel")
    rng_e = stream(seed, "noise")
    N = codebook.num_users
    H = (rng_h.standard_normal((N, K)) + 1j * rng_h.standard_normal((N, K))) / np.sqrt(2)
    E = sample_complex_gaussian(spd, K, rng_e)
    Y = A @ (np.sqrt(fading.x)[:, None] * H) + E
    return ChannelRealization(Y=Y, H=H, E=E, antennas=K)


def sample_covariance(Y) -> HermitianMatrix:
    """Sample covariance (1/K) Y Y^H of the antenna snapshots."""
    Y = np.asarray(Y, dtype=complex)
    if Y.ndim != 2 or Y.shape[1] < 1:
        raise InvalidInput(f"expected an M x K matrix, got shape {Y.shape}")
    K = Y.shape[1]
    return HermitianMatrix(Y @ Y.conj().T / K)


def perturb_hermitian(W0, rho: float, seed) -> PerturbedObservation:
    """Add a unit-operator-norm Hermitian direction scaled by rho to W0.

    The direction is (N + N^H) / ||N + N^H||_{2->2} for a matrix N with
    independent standard Gaussian real and imaginary parts; a degenerate draw
    (probability zero) is resampled on an incremented stream.
    """
    if rho < 0:
        raise InvalidInput("perturbation magnitude must be nonnegative")
    base = as_hermitian(W0)
    if rho == 0.0:
        return PerturbedObservation(W=base, rho=0.0)
    M = base.dim
    for attempt in range(16):
        rng = stream(seed, "perturb", attempt)
        raw = rng.standard_normal((M, M)) + 1j * rng.standard_normal((M, M))
        sym = raw + raw.conj().T
        nrm = operator_norm(HermitianMatrix(sym))
        if nrm > 0:
            direction = sym / nrm
            return PerturbedObservation(W=HermitianMatrix(base.values + rho * direction), rho=float(rho))
    raise InvalidInput("could not draw a nonzero Hermitian perturbation")


def draw_sparse_fading(N: int, S: int, seed) -> FadingVector:
    """Uniformly random S-sparse nonnegative vector with unit Euclidean norm.

    The support is uniform over the size-S subsets; the nonzero values are
    absolute standard Gaussians normalized to unit l2 norm.
    """
    if not 1 <= S <= N:
        raise InvalidInput(f"sparsity {S} outside [1, {N}]")
    rng = np.random.default_rng(seed) if not isinstance(seed, np.random.Generator) else seed
    support = rng.choice(N, size=S, replace=False)
    vals = np.abs(rng.standard_normal(S))
    norm = np.linalg.norm(vals)
    if norm == 0.0:  # probability zero; retry deterministically off the same stream
        vals = np.ones(S)
        norm = np.sqrt(S)
    x = np.zeros(N)
    x[support] = vals / norm
    return FadingVector(x=x, sparsity=S)


def _write_complex_csv(matrix: np.ndarray, path) -> None:
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["row", "col", "re", "im"])
        rows, cols = matrix.shape
        for c in range(cols):
            for r in range(rows):
                v = matrix[r, c]
                writer.writerow([r + 1, c + 1, f"{v.real:.17g}", f"{v.imag:.17g}"])


def save_realization_csv(realization: ChannelRealization, directory) -> None:
    """Persist Y, H and E as CSV triplet files with header row,col,re,im."""
    from pathlib import Path

    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    _write_complex_csv(realization.Y, directory / "Y.csv")
    _write_complex_csv(realization.H, directory / "H.csv")
    _write_complex_csv(realization.E, directory / "E.csv")


def _read_complex_csv(path) -> np.ndarray:
    entries = {}
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        for row in reader:
            entries[(int(row["row"]) - 1, int(row["col"]) - 1)] = float(row["re"]) + 1j * float(row["im"])
    if not entries:
        raise InvalidInput(f"no entries in {path}")
    rows = max(r for r, _ in entries) + 1
    cols = max(c for _, c in entries) + 1
    out = np.zeros((rows, cols), dtype=complex)
    for (r, c), v in entries.items():
        out[r, c] = v
    return out


def load_realization_csv(directory) -> ChannelRealization:
    """Read a CSV triplet written by save_realization_csv."""
    from pathlib import Path

    directory = Path(directory)
    Y = _read_complex_csv(directory / "Y.csv")
    H = _read_complex_csv(directory / "H.csv")
    E = _read_complex_csv(directory / "E.csv")
    return ChannelRealization(Y=Y, H=H, E=E, antennas=Y.shape[1])
