"""Linear-model data types, column normalization, objectives and cone geometry.

Everything here is a pure function on float64 arrays. Columns are indexed
by ``j`` (0-based in code), observations by ``i``.
"""
from __future__ import annotations

import csv
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

# Coefficients with magnitude at or below this are treated as zero.
SUPPORT_EPS = 1e-6


class ZeroColumn(ValueError):
    def __init__(self, j: int):
        super().__init__(f"column {j} has zero Euclidean norm")
        self.j = j


class DimensionMismatch(ValueError):
    pass


class ZeroNoiseEntry(UserWarning):
    pass


@dataclass(frozen=True)
class DesignMatrix:
    """Column-normalized design with ``||X_j||_2^2 = n`` for every column."""

    values: np.ndarray

    def __post_init__(self):
        a = np.asarray(self.values, dtype=np.float64)
        if a.ndim != 2 or a.shape[0] < 1 or a.shape[1] < 1:
            raise DimensionMismatch(f"design must be a nonempty 2-D array, got shape {a.shape}")
        if not np.all(np.isfinite(a)):
            raise ValueError("design contains non-finite entries")
        a = a.copy()
        a.setflags(write=False)
        object.__setattr__(self, "values", a)

    @property
    def n(self) -> int:
        return self.values.shape[0]

    @property
    def p(self) -> int:
        return self.values.shape[1]

    def column(self, j: int) -> np.ndarray:
        return self.values[:, j]

    def col_l1(self) -> np.ndarray:
        return np.abs(self.values).sum(axis=0)

    def subset(self, cols) -> np.ndarray:
        return self.values[:, np.asarray(cols, dtype=int)]


@dataclass(frozen=True)
class Coefficients:
    beta: np.ndarray
    support_epsilon: float = SUPPORT_EPS
    support: frozenset = field(init=False)

    def __post_init__(self):
        b = np.asarray(self.beta, dtype=np.float64).copy()
        b.setflags(write=False)
        object.__setattr__(self, "beta", b)
        object.__setattr__(self, "support", support_of(b, self.support_epsilon))

    def sorted_support(self) -> list[int]:
        return sorted(self.support)


@dataclass(frozen=True)
class SubdiffStatistic:
    s: np.ndarray
    sup_norm: float


@dataclass(frozen=True)
class RestrictedConeParams:
    c: float
    k: int

    def __post_init__(self):
        if not self.c > 1:
            raise ValueError("penalty multiplier c must exceed 1")

    @property
    def c_bar(self) -> float:
        return cone_constant(self.c)


def cone_constant(c: float) -> float:
    """Return (c - 1) / (c + 1)."""
    return (c - 1.0) / (c + 1.0)


def support_of(beta, eps: float = SUPPORT_EPS) -> frozenset:
    b = np.asarray(beta)
    return frozenset(int(j) for j in np.flatnonzero(np.abs(b) > eps))


def normalize_columns(raw) -> DesignMatrix:
    """Rescale every column so its squared Euclidean norm equals ``n``.

    Raises
    ------
    ZeroColumn
        If some column is identically zero.
    """
    a = np.asarray(raw, dtype=np.float64)
    if a.ndim == 1:
        a = a[:, None]
    n = a.shape[0]
    norms = np.linalg.norm(a, axis=0)
    zero = np.flatnonzero(norms == 0)
    if zero.size:
        raise ZeroColumn(int(zero[0]))
    return DesignMatrix(a * (np.sqrt(n) / norms))


def _as_values(X) -> np.ndarray:
    return X.values if isinstance(X, DesignMatrix) else np.asarray(X, dtype=np.float64)


def plad_objective(X, y, gamma, lam: float) -> float:
    """``||y - X gamma||_1 + lam * ||gamma||_1``."""
    A = _as_values(X)
    y = np.asarray(y, dtype=np.float64)
    gamma = np.asarray(gamma, dtype=np.float64)
    if A.shape != (y.shape[0], gamma.shape[0]):
        raise DimensionMismatch(
            f"X is {A.shape}, y has {y.shape[0]} entries, gamma has {gamma.shape[0]}"
        )
    if lam < 0:
        raise ValueError("lambda must be nonnegative")
    return float(np.abs(y - A @ gamma).sum() + lam * np.abs(gamma).sum())


def subdiff_statistic(X, z) -> SubdiffStatistic:
    """Score ``S = X' sign(z)`` of the absolute loss at the true coefficients.

    ``sign(0) = 0``; zero entries in ``z`` raise a :class:`ZeroNoiseEntry`
    warning because the score is only the subgradient when no error vanishes.
    """
    A = _as_values(X)
    z = np.asarray(z, dtype=np.float64)
    if z.shape[0] != A.shape[0]:
        raise DimensionMismatch(f"z has {z.shape[0]} entries, X has {A.shape[0]} rows")
    zero = np.flatnonzero(z == 0)
    if zero.size:
        warnings.warn(
            f"{zero.size} noise entries are exactly zero (first at i={int(zero[0])})",
            ZeroNoiseEntry,
            stacklevel=2,
        )
    s = A.T @ np.sign(z)
    return SubdiffStatistic(s=s, sup_norm=float(np.max(np.abs(s))))


def top_k_indices(h, k: int) -> np.ndarray:
    """Indices of the k largest |h_j|, ties broken by lower index."""
    h = np.asarray(h, dtype=np.float64)
    order = np.lexsort((np.arange(h.size), -np.abs(h)))
    return np.sort(order[:k])


def in_restricted_set(h, k: int, c_bar: float) -> tuple[bool, frozenset]:
    """Test membership of ``h`` in the cone ``||h_T||_1 >= c_bar ||h_{T^c}||_1``.

    The witness ``T`` is the set of the k largest magnitudes, which is the
    best possible choice for any ``|T| <= k``.
    """
    h = np.asarray(h, dtype=np.float64)
    if not 1 <= k <= h.size:
        raise ValueError(f"k must lie in [1, {h.size}]")
    if not 0 < c_bar <= 1:
        raise ValueError("c_bar must lie in (0, 1]")
    T = top_k_indices(h, k)
    a = np.abs(h)
    on = a[T].sum()
    off = a.sum() - on
    return bool(on >= c_bar * off), frozenset(int(j) for j in T)


def _read_numeric_csv(path) -> np.ndarray:
    rows = []
    with open(Path(path), newline="") as fh:
        for lineno, row in enumerate(csv.reader(fh, delimiter=",")):
            if not row or all(not cell.strip() for cell in row):
                continue
            try:
                rows.append([float(cell) for cell in row])
            except ValueError:
                if lineno == 0 and not rows:
                    continue  # header
                raise ValueError(f"{path}: non-numeric entry on line {lineno + 1}") from None
    if not rows:
        raise ValueError(f"{path}: no data rows")
    width = {len(r) for r in rows}
    if len(width) != 1:
        raise ValueError(f"{path}: ragged rows")
    return np.array(rows, dtype=np.float64)


def read_design_csv(path, normalize: bool = True) -> DesignMatrix:
    raw = _read_numeric_csv(path)
    return normalize_columns(raw) if normalize else DesignMatrix(raw)


def read_response_csv(path) -> np.ndarray:
    a = _read_numeric_csv(path)
    if a.shape[1] != 1:
        raise ValueError(f"{path}: response must have exactly one column, got {a.shape[1]}")
    return a[:, 0]
