"""Mode grids, spectra, time signals and the unitary transform between them.

Mode ``k`` (``k = 1..n``) is stored at array position ``k - 1``.  The time
representation holds the ``n`` equispaced samples ``t_i = i T / n`` of the
band-limited field, scaled by ``1/sqrt(n)`` so the transform is unitary.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterator

import numpy as np


@dataclass(frozen=True)
class ModeGrid:
    """Frequency discretization with ``n`` harmonics of ``omega0``."""

    n: int
    omega0: float = 1.0

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 1:
            raise ValueError(f"n must be a positive integer, got {self.n!r}")
        if not (np.isfinite(self.omega0) and self.omega0 > 0):
            raise ValueError(f"omega0 must be positive, got {self.omega0!r}")
        object.__setattr__(self, "n", int(self.n))
        object.__setattr__(self, "omega0", float(self.omega0))

    @property
    def f0(self) -> float:
        return self.omega0 / (2 * np.pi)

    @property
    def period(self) -> float:
        return 2 * np.pi / self.omega0

    @property
    def bandwidth(self) -> float:
        return self.n * self.f0

    @property
    def modes(self) -> np.ndarray:
        return np.arange(1, self.n + 1)

    @property
    def times(self) -> np.ndarray:
        return np.arange(self.n) * (self.period / self.n)

    def dispersion_rates(self) -> np.ndarray:
        """Per-mode phase rate ``k^2 omega0^2``."""
        return (self.modes * self.omega0) ** 2


def _frozen(values, n: int, what: str) -> np.ndarray:
    arr = np.array(values, dtype=np.complex128)
    if arr.shape != (n,):
        raise ValueError(f"{what} must have length {n}, got shape {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError(f"{what} contains non-finite entries")
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class Spectrum:
    """Fourier-series coefficients ``Q_k`` of the field at distance ``z``."""

    grid: ModeGrid
    coeffs: np.ndarray
    z: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "coeffs", _frozen(self.coeffs, self.grid.n, "coeffs"))
        if not self.z >= 0:
            raise ValueError(f"z must be >= 0, got {self.z!r}")
        object.__setattr__(self, "z", float(self.z))


@dataclass(frozen=True)
class TimeSignal:
    """Unitary-normalized time samples over one period."""

    grid: ModeGrid
    samples: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "samples", _frozen(self.samples, self.grid.n, "samples"))


@dataclass(frozen=True)
class Ensemble:
    """Monte Carlo sample of a random spectrum, one member per row.

    Members are held as a ``(count, n)`` array; :attr:`members` materializes
    them as :class:`Spectrum` objects when needed.
    """

    grid: ModeGrid
    coeffs: np.ndarray
    z: float = 0.0

    def __post_init__(self):
        arr = np.array(self.coeffs, dtype=np.complex128)
        if arr.ndim != 2 or arr.shape[1] != self.grid.n:
            raise ValueError(f"ensemble coeffs must have shape (count, {self.grid.n}), got {arr.shape}")
        if not np.all(np.isfinite(arr)):
            raise ValueError("ensemble contains non-finite entries")
        arr.setflags(write=False)
        object.__setattr__(self, "coeffs", arr)
        object.__setattr__(self, "z", float(self.z))

    def __len__(self) -> int:
        return self.coeffs.shape[0]

    def __iter__(self) -> Iterator[Spectrum]:
        for row in self.coeffs:
            yield Spectrum(self.grid, row, self.z)

    @property
    def members(self) -> list[Spectrum]:
        return list(self)

    @classmethod
    def from_members(cls, members: list[Spectrum]) -> "Ensemble":
        if not members:
            raise ValueError("empty ensemble")
        grid, z = members[0].grid, members[0].z
        for m in members:
            if m.grid != grid or m.z != z:
                raise ValueError("ensemble members must share grid and distance")
        return cls(grid, np.stack([m.coeffs for m in members]), z)

    def real_view(self) -> np.ndarray:
        """Samples as ``(count, 2n)`` real coordinates ``(Re Q, Im Q)``."""
        return complex_to_real(self.coeffs)


def complex_to_real(q: np.ndarray) -> np.ndarray:
    q = np.asarray(q)
    return np.concatenate([q.real, q.imag], axis=-1)


def real_to_complex(x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    n = x.shape[-1] // 2
    return x[..., :n] + 1j * x[..., n:]


# Array-level transforms; trailing axis holds modes 1..n (or samples 0..n-1).
# Mode k lives in DFT bin k mod n, hence the roll by one.

def modes_to_samples(coeffs: np.ndarray) -> np.ndarray:
    return np.fft.ifft(np.roll(coeffs, 1, axis=-1), axis=-1, norm="ortho")


def samples_to_modes(samples: np.ndarray) -> np.ndarray:
    return np.roll(np.fft.fft(samples, axis=-1, norm="ortho"), -1, axis=-1)


def transform(x: Spectrum | TimeSignal) -> TimeSignal | Spectrum:
    """Unitary DFT between the mode and time representations.

    A :class:`Spectrum` maps to its :class:`TimeSignal`, and vice versa.  The
    distance of a spectrum is not carried by the time signal; pass the result
    back through :func:`transform` and rebuild with ``z`` if it matters.
    """
    if isinstance(x, Spectrum):
        return TimeSignal(x.grid, modes_to_samples(x.coeffs))
    if isinstance(x, TimeSignal):
        return Spectrum(x.grid, samples_to_modes(x.samples))
    raise TypeError(f"cannot transform {type(x).__name__}")


def power(s: Spectrum | Ensemble | np.ndarray) -> float | np.ndarray:
    """Sum of squared moduli over modes (per member for ensembles)."""
    coeffs = s.coeffs if isinstance(s, (Spectrum, Ensemble)) else np.asarray(s)
    p = np.sum(coeffs.real**2 + coeffs.imag**2, axis=-1)
    return float(p) if np.ndim(p) == 0 else p


def sample_gaussian_input(grid: ModeGrid, P0: float, count: int,
                          rng: np.random.Generator) -> Ensemble:
    """Draw ``count`` i.i.d. circular complex Gaussian spectra of mean power ``P0``.

    Each mode has variance ``P0 / n`` split evenly between real and imaginary
    parts.
    """
    if P0 < 0:
        raise ValueError(f"P0 must be >= 0, got {P0}")
    if count < 1:
        raise ValueError(f"count must be >= 1, got {count}")
    scale = np.sqrt(P0 / grid.n / 2)
    draws = rng.standard_normal((count, grid.n, 2))
    return Ensemble(grid, scale * (draws[..., 0] + 1j * draws[..., 1]))
