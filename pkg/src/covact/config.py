"""Experiment configuration with a plain-text ``key = value`` file format.

Lines are ``key = value`` with ``#`` comments; list-valued keys take
comma-separated entries.  Defaults follow the simulation study: M = 4,
N = 17, order 7, noise covariance 1e-4 times the identity, and trial counts
scaled down from the published 1000 to desk runtimes (the original counts
remain reachable through the file).
"""

from __future__ import annotations

from dataclasses import dataclass, fields, replace
from pathlib import Path

import numpy as np

from .errors import InvalidInput

ESTIMATOR_NAMES = ("nnls", "ml", "ml_nnls")


def _rho_default() -> tuple:
    return tuple(float(r) for r in np.logspace(-4, -1, 7))


def _eps_default() -> tuple:
    return tuple(float(1e-6 * 2**k) for k in range(21))


@dataclass(frozen=True)
class ExperimentConfig:
    M: int = 4
    N: int = 17
    skc_order: int = 7
    s_values: tuple = tuple(range(1, 9))
    k_grid: tuple = (250, 500, 1000, 2000, 4000, 8000)
    rho_grid: tuple = None
    trials_fig_b: int = 100
    trials_fig_c: int = 100
    trials_fig_d: int = 50
    sigma_scale: float = 1e-4
    seed: int = 2024
    estimators: tuple = ESTIMATOR_NAMES
    tau_method: str = "exact"
    max_codebook_draws: int = 100
    while_iterations: int = 100
    bounds_eps_grid: tuple = None
    bernstein_c: float = 1.0
    target_p: float = 0.9
    beta_fraction: float = 0.5
    eta: float = 1.0
    out_dir: str = ""

    def __post_init__(self):
        if self.rho_grid is None:
            object.__setattr__(self, "rho_grid", _rho_default())
        if self.bounds_eps_grid is None:
            object.__setattr__(self, "bounds_eps_grid", _eps_default())
        if self.M < 1 or self.N < 1:
            raise InvalidInput("M and N must be positive")
        if not 1 <= self.skc_order <= self.N:
            raise InvalidInput("skc_order must lie in [1, N]")
        for name in ("trials_fig_b", "trials_fig_c", "trials_fig_d"):
            if getattr(self, name) < 1:
                raise InvalidInput(f"{name} must be at least 1")
        for name in ("s_values", "k_grid", "rho_grid", "bounds_eps_grid"):
            if len(getattr(self, name)) == 0:
                raise InvalidInput(f"{name} must be nonempty")
        if self.sigma_scale <= 0:
            raise InvalidInput("sigma_scale must be positive")
        if self.tau_method not in ("exact", "heuristic"):
            raise InvalidInput("tau_method must be 'exact' or 'heuristic'")
        if not set(self.estimators) <= set(ESTIMATOR_NAMES):
            raise InvalidInput(f"estimators must be among {ESTIMATOR_NAMES}")
        if not 0 < self.beta_fraction < 1:
            raise InvalidInput("beta_fraction must lie in (0, 1)")
        if not 0 < self.target_p < 1:
            raise InvalidInput("target_p must lie in (0, 1)")

    def metadata_lines(self) -> list:
        """Comment lines recording every experiment knob.

        The output directory is a destination, not a parameter, and is left
        out so identical runs emit byte-identical files anywhere.
        """
        out = []
        for f in fields(self):
            if f.name == "out_dir":
                continue
            value = getattr(self, f.name)
            if isinstance(value, tuple):
                value = ",".join(_format_scalar(v) for v in value)
            out.append(f"# {f.name} = {value}")
        return out


def _format_scalar(v) -> str:
    if isinstance(v, float):
        return f"{v:.17g}"
    return str(v)


_INT_FIELDS = {
    "M", "N", "skc_order", "trials_fig_b", "trials_fig_c", "trials_fig_d",
    "seed", "max_codebook_draws", "while_iterations",
}
_FLOAT_FIELDS = {"sigma_scale", "bernstein_c", "target_p", "beta_fraction", "eta"}
_INT_LIST_FIELDS = {"s_values", "k_grid"}
_FLOAT_LIST_FIELDS = {"rho_grid", "bounds_eps_grid"}
_STR_LIST_FIELDS = {"estimators"}
_STR_FIELDS = {"tau_method", "out_dir"}


def parse_config(path, base: ExperimentConfig | None = None) -> ExperimentConfig:
    """Read overrides from a ``key = value`` file on top of the defaults."""
    base = base or ExperimentConfig()
    overrides = {}
    text = Path(path).read_text()
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise InvalidInput(f"{path}:{lineno}: expected 'key = value', got {raw!r}")
        key, value = (part.strip() for part in line.split("=", 1))
        if key in _INT_FIELDS:
            overrides[key] = int(value)
        elif key in _FLOAT_FIELDS:
            overrides[key] = float(value)
        elif key in _INT_LIST_FIELDS:
            overrides[key] = tuple(int(v) for v in value.split(",") if v.strip())
        elif key in _FLOAT_LIST_FIELDS:
            overrides[key] = tuple(float(v) for v in value.split(",") if v.strip())
        elif key in _STR_LIST_FIELDS:
            overrides[key] = tuple(v.strip() for v in value.split(",") if v.strip())
        elif key in _STR_FIELDS:
            overrides[key] = value
        else:
            raise InvalidInput(f"{path}:{lineno}: unknown configuration key {key!r}")
    return replace(base, **overrides)
