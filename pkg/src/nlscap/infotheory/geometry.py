"""Exact discrete checks: sumset cardinality, discrete entropy of sums, and
Brunn-Minkowski comparisons on lattice sets."""

from __future__ import annotations

import itertools
from dataclasses import dataclass

import numpy as np

PAIR_BUDGET = 10**6
PMF_ATOL = 1e-12


# -- pmfs and discrete entropy ------------------------------------------------------

@dataclass(frozen=True)
class Pmf:
    """Finite pmf on integers or integer tuples; zero-probability atoms are dropped."""

    support: tuple
    probs: tuple

    def __post_init__(self):
        support = [tuple(np.atleast_1d(s).astype(int).tolist()) for s in self.support]
        probs = np.asarray(self.probs, dtype=float)
        if len(support) != len(probs):
            raise ValueError("support and probs must have equal length")
        if len(set(support)) != len(support):
            raise ValueError("support points must be distinct")
        if np.any(probs < 0) or not np.all(np.isfinite(probs)):
            raise ValueError("probabilities must be finite and nonnegative")
        if abs(probs.sum() - 1) > PMF_ATOL:
            raise ValueError(f"probabilities sum to {probs.sum()!r}, not 1")
        keep = probs > 0
        object.__setattr__(self, "support", tuple(s for s, k in zip(support, keep) if k))
        object.__setattr__(self, "probs", tuple(probs[keep].tolist()))

    @classmethod
    def uniform(cls, support) -> "Pmf":
        support = list(support)
        return cls(tuple(support), tuple([1 / len(support)] * len(support)))


def discrete_entropy(p: Pmf) -> float:
    """Shannon entropy in bits."""
    probs = np.asarray(p.probs)
    return float(-np.sum(probs * np.log2(probs)))


def convolve(px: Pmf, py: Pmf) -> Pmf:
    """Law of ``X + Y`` for independent ``X ~ px``, ``Y ~ py`` (exact)."""
    acc: dict[tuple, float] = {}
    for (a, pa), (b, pb) in itertools.product(zip(px.support, px.probs), zip(py.support, py.probs)):
        key = tuple(u + v for u, v in zip(a, b))
        acc[key] = acc.get(key, 0.0) + pa * pb
    keys = sorted(acc)
    probs = np.array([acc[k] for k in keys])
    return Pmf(tuple(keys), tuple(probs / probs.sum()))


@dataclass(frozen=True)
class SumsetEntropyReport:
    H_sum: float
    H_x_plus_H_y: float
    sumset_size: int
    product_size: int

    @property
    def entropy_holds(self) -> bool:
        return self.H_sum <= self.H_x_plus_H_y + PMF_ATOL

    @property
    def cardinality_holds(self) -> bool:
        return self.sumset_size <= self.product_size

    @property
    def holds(self) -> bool:
        return self.entropy_holds and self.cardinality_holds


def sumset_entropy_check(px: Pmf, py: Pmf) -> SumsetEntropyReport:
    """``H(X+Y) <= H(X) + H(Y)`` and ``|A+B| <= |A||B|`` on the supports."""
    s = convolve(px, py)
    return SumsetEntropyReport(
        discrete_entropy(s),
        discrete_entropy(px) + discrete_entropy(py),
        len(s.support),
        len(px.support) * len(py.support),
    )


def pmf_grid(size: int, step: float = 0.1) -> np.ndarray:
    """All pmfs on ``{0..size-1}`` with probabilities on a ``step`` grid, one per row."""
    units = int(round(1 / step))
    rows = [c for c in itertools.product(range(units + 1), repeat=size) if sum(c) == units]
    return np.array(rows, dtype=float) / units


def exhaustive_sumset_check(size: int = 5, step: float = 0.1) -> dict:
    """Check both discrete inequalities on every pair of grid pmfs.

    Vectorized over all pairs; returns counts and the extreme slacks.
    """
    P = pmf_grid(size, step)
    m = len(P)
    with np.errstate(divide="ignore", invalid="ignore"):
        H = -np.sum(np.where(P > 0, P * np.log2(P), 0.0), axis=1)
    conv = np.zeros((m, m, 2 * size - 1))
    for a in range(size):
        for b in range(size):
            conv[:, :, a + b] += np.outer(P[:, a], P[:, b])
    with np.errstate(divide="ignore", invalid="ignore"):
        H_sum = -np.sum(np.where(conv > 0, conv * np.log2(conv), 0.0), axis=2)
    entropy_slack = H[:, None] + H[None, :] - H_sum

    supp = P > 0
    card = supp.sum(axis=1)
    sum_card = (conv > 0).sum(axis=2)
    card_slack = card[:, None] * card[None, :] - sum_card
    return {
        "pmf_count": m,
        "pairs": m * m,
        "entropy_violations": int(np.sum(entropy_slack < -PMF_ATOL)),
        "cardinality_violations": int(np.sum(card_slack < 0)),
        "min_entropy_slack": float(entropy_slack.min()),
        "min_cardinality_slack": int(card_slack.min()),
    }


# -- lattice sets ------------------------------------------------------------------------

@dataclass(frozen=True)
class GridSet:
    """Finite set of integer lattice points; each point stands for a cell of side ``cell``."""

    points: np.ndarray
    cell: float = 1.0

    def __post_init__(self):
        pts = np.atleast_2d(np.asarray(self.points, dtype=np.int64))
        if pts.size == 0:
            raise ValueError("empty grid set")
        pts = np.unique(pts, axis=0)
        pts.setflags(write=False)
        object.__setattr__(self, "points", pts)
        if not self.cell > 0:
            raise ValueError("cell must be positive")

    @property
    def dims(self) -> int:
        return self.points.shape[1]

    def __len__(self) -> int:
        return len(self.points)

    @property
    def volume(self) -> float:
        return len(self) * self.cell**self.dims

    @classmethod
    def box(cls, sides, cell: float = 1.0) -> "GridSet":
        axes = [np.arange(s) for s in sides]
        pts = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, len(sides))
        return cls(pts, cell)

    @classmethod
    def disc(cls, radius: float, dims: int = 2, cell: float = 1.0) -> "GridSet":
        r = int(np.floor(radius))
        axes = [np.arange(-r, r + 1)] * dims
        pts = np.stack(np.meshgrid(*axes, indexing="ij"), axis=-1).reshape(-1, dims)
        return cls(pts[np.sum(pts**2, axis=1) <= radius**2], cell)


def _check_pair(A: GridSet, B: GridSet, pairs: int):
    if A.dims != B.dims:
        raise ValueError(f"dimension mismatch: {A.dims} vs {B.dims}")
    if A.cell != B.cell:
        raise ValueError("grid sets must share a cell size")
    if pairs > PAIR_BUDGET:
        raise ValueError(f"pair budget exceeded: {pairs} > {PAIR_BUDGET}")


def minkowski_sum(A: GridSet, B: GridSet) -> GridSet:
    _check_pair(A, B, len(A) * len(B))
    sums = (A.points[:, None, :] + B.points[None, :, :]).reshape(-1, A.dims)
    return GridSet(sums, A.cell)


def restricted_sum(A: GridSet, B: GridSet, omega) -> GridSet:
    """``{a + b : (a, b) in omega}`` with ``omega`` a list of index pairs into A and B."""
    idx = np.asarray(omega, dtype=np.int64).reshape(-1, 2)
    _check_pair(A, B, len(idx))
    if len(idx) == 0:
        raise ValueError("omega is empty")
    if idx.min() < 0 or idx[:, 0].max() >= len(A) or idx[:, 1].max() >= len(B):
        raise ValueError("omega indexes outside A x B")
    return GridSet(A.points[idx[:, 0]] + B.points[idx[:, 1]], A.cell)


def full_pairs(A: GridSet, B: GridSet) -> np.ndarray:
    i, j = np.meshgrid(np.arange(len(A)), np.arange(len(B)), indexing="ij")
    return np.stack([i.ravel(), j.ravel()], axis=1)


def _cell_body_volume(S: GridSet) -> float:
    # (A + [0,c)^d) + (B + [0,c)^d) = (A + B) + [0,2c)^d, tiled by A+B+{0,1}^d
    corners = GridSet.box([2] * S.dims).points
    grown = minkowski_sum(S, GridSet(corners, S.cell))
    return grown.volume


@dataclass(frozen=True)
class BmiReport:
    dims: int
    lhs: float  # mu^{1/d} of the continuum sum of cell bodies
    rhs: float
    lattice_lhs: float  # mu^{1/d} of the bare lattice sumset
    discretization_gap: float

    @property
    def holds(self) -> bool:
        return self.lhs >= self.rhs * (1 - 1e-12)


def bmi_check(A: GridSet, B: GridSet) -> BmiReport:
    """Brunn-Minkowski comparison ``mu^{1/d}(A+B) >= mu^{1/d}(A) + mu^{1/d}(B)``.

    ``A`` and ``B`` are read as unions of lattice cells; the sum of those
    bodies is exactly the cell union of ``A + B + {0,1}^d``, so the verdict is
    the continuum inequality evaluated without approximation.  The bare lattice
    count ``|A+B|`` misses the boundary layer and is reported alongside.
    """
    S = minkowski_sum(A, B)
    d = A.dims
    lhs = _cell_body_volume(S) ** (1 / d)
    rhs = A.volume ** (1 / d) + B.volume ** (1 / d)
    lattice = S.volume ** (1 / d)
    return BmiReport(d, lhs, rhs, lattice, lhs - lattice)


@dataclass(frozen=True)
class RestrictedSumReport:
    omega_fraction: float
    restricted_volume: float
    full_volume: float
    restricted_power: float  # mu^{2/d}(A +_omega B)
    power_sum: float  # mu^{2/d}(A) + mu^{2/d}(B)
    contained: bool  # every point of the restricted sum lies in the full sum


def restricted_sum_report(A: GridSet, B: GridSet, omega) -> RestrictedSumReport:
    """Volumes of a restricted sum against the full sum, plus the exponent-2/d comparison."""
    R = restricted_sum(A, B, omega)
    S = minkowski_sum(A, B)
    d = A.dims
    return RestrictedSumReport(
        len(np.asarray(omega).reshape(-1, 2)) / (len(A) * len(B)),
        R.volume,
        S.volume,
        R.volume ** (2 / d),
        A.volume ** (2 / d) + B.volume ** (2 / d),
        _is_subset(R.points, S.points),
    )


def _is_subset(P: np.ndarray, S: np.ndarray) -> bool:
    full = {tuple(row) for row in S.tolist()}
    return all(tuple(row) in full for row in P.tolist())
