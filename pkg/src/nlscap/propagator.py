"""Deterministic and stochastic propagation of the discretized NLS channel.

The state is the vector of Fourier-series coefficients ``A_k(z)`` of the
field in the laboratory frame.  The rotating (interaction) frame used by the
coupled-mode equations is ``Q_k(z) = A_k(z) exp(-j k^2 omega0^2 z)``.

Two coupling rules for the four-wave-mixing sum are supported:

``periodic``
    index matching ``l + m - p = k`` modulo ``n``.  This is the system solved
    exactly by a Kerr phase applied to the ``n`` time samples, so both
    integrators agree on it.
``truncated``
    exact index matching restricted to ``1..n``.  Only the interaction-picture
    integrator handles it.
"""

from __future__ import annotations

import enum
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .spectrum import (
    Ensemble,
    ModeGrid,
    Spectrum,
    TimeSignal,
    complex_to_real,
    modes_to_samples,
    real_to_complex,
    samples_to_modes,
)

STEP_COUNT_RTOL = 1e-9
NOISE_CHUNK = 256


class Scheme(str, enum.Enum):
    SPLIT_STEP = "split_step"
    RK4_INTERACTION = "rk4_interaction"


class Coupling(str, enum.Enum):
    PERIODIC = "periodic"
    TRUNCATED = "truncated"


class ConditioningError(ArithmeticError):
    """Finite-difference Jacobian contains non-finite entries."""


@dataclass(frozen=True)
class ChannelParams:
    sigma0_sq: float = 0.0
    z_total: float = 1.0
    dz: float = 1e-3
    scheme: Scheme = Scheme.SPLIT_STEP
    nonlinearity_on: bool = True
    coupling: Coupling = Coupling.PERIODIC

    def __post_init__(self):
        object.__setattr__(self, "scheme", Scheme(self.scheme))
        object.__setattr__(self, "coupling", Coupling(self.coupling))
        if not self.sigma0_sq >= 0:
            raise ValueError(f"sigma0_sq must be >= 0, got {self.sigma0_sq!r}")
        if not self.z_total >= 0:
            raise ValueError(f"z_total must be >= 0, got {self.z_total!r}")
        if not self.dz > 0:
            raise ValueError(f"dz must be > 0, got {self.dz!r}")
        if self.scheme is Scheme.SPLIT_STEP and self.coupling is Coupling.TRUNCATED:
            raise ValueError("split_step integrates the periodic coupling only")
        self.steps  # validates step count

    @property
    def steps(self) -> int:
        if self.z_total == 0:
            return 0
        if self.dz > self.z_total:
            raise ValueError(f"step-count mismatch: dz={self.dz} exceeds z_total={self.z_total}")
        ratio = self.z_total / self.dz
        count = round(ratio)
        if abs(ratio - count) > STEP_COUNT_RTOL * ratio:
            raise ValueError(f"step-count mismatch: z_total/dz = {ratio!r} is not an integer")
        return count

    def noise_variance_per_step(self, grid: ModeGrid) -> float:
        """Per-mode variance ``f0 sigma0^2 dz`` of each injected increment."""
        return grid.f0 * self.sigma0_sq * self.dz

    def accumulated_noise_power(self, grid: ModeGrid) -> float:
        """Total noise power ``B sigma0^2 z`` at the end of the link."""
        return grid.bandwidth * self.sigma0_sq * self.z_total


@dataclass(frozen=True)
class NoiseStream:
    """Seed bookkeeping for per-trial randomness.

    Trial ``i`` draws from ``SeedSequence(master_seed, spawn_key=stream + (i,))``,
    so any trial's noise is reproducible on its own and independent of how the
    trials are batched or scheduled.  ``stream`` separates unrelated uses of the
    same master seed (input sampling versus channel noise, say).
    """

    master_seed: int
    trial_index: int = 0
    stream: tuple = ()

    def rng(self, offset: int = 0) -> np.random.Generator:
        key = tuple(self.stream) + (self.trial_index + offset,)
        return np.random.default_rng(np.random.SeedSequence(self.master_seed, spawn_key=key))

    def at(self, trial_index: int) -> "NoiseStream":
        return NoiseStream(self.master_seed, trial_index, self.stream)

    def derive(self, tag: int) -> "NoiseStream":
        """Independent child stream, restarting at trial 0."""
        return NoiseStream(self.master_seed, 0, tuple(self.stream) + (tag,))


# -- elementary steps ---------------------------------------------------------

def dispersion_step(s: Spectrum, dz: float) -> Spectrum:
    """Exact linear (dispersive) propagation over ``dz`` in the lab frame."""
    if dz < 0:
        raise ValueError("dz must be >= 0")
    phase = np.exp(1j * s.grid.dispersion_rates() * dz)
    return Spectrum(s.grid, s.coeffs * phase, s.z + dz)


def nonlinear_step(x: TimeSignal, dz: float) -> TimeSignal:
    """Pointwise Kerr rotation ``y = x exp(-2j |x|^2 dz)``."""
    if dz < 0:
        raise ValueError("dz must be >= 0")
    return TimeSignal(x.grid, _kerr(x.samples, dz))


def _kerr(samples: np.ndarray, dz: float) -> np.ndarray:
    intensity = samples.real**2 + samples.imag**2
    return samples * np.exp(-2j * intensity * dz)


# -- coupled-mode right-hand side ---------------------------------------------

def _coeffs(s) -> np.ndarray:
    return s.coeffs if isinstance(s, (Spectrum, Ensemble)) else np.asarray(s, dtype=np.complex128)


def interaction_rhs(s, z: float, grid: ModeGrid | None = None, *,
                    coupling: Coupling | str = Coupling.PERIODIC,
                    method: str = "fft") -> np.ndarray:
    """Noiseless right-hand side of the rotating-frame coupled-mode equations.

    ``dQ_k/dz = -2j sum_{l+m-p=k} exp(j Omega_{lmpk} z) Q_l Q_m conj(Q_p)``
    with ``Omega_{lmpk} = omega0^2 (l^2 + m^2 - p^2 - k^2)``.

    Args:
        s: Spectrum, Ensemble or complex array with modes on the last axis,
            holding rotating-frame coefficients.
        z: distance at which the phases are evaluated.
        grid: required when ``s`` is a bare array.
        coupling: ``"periodic"`` or ``"truncated"`` index matching.
        method: ``"fft"`` (pseudo-spectral) or ``"naive"`` (explicit loops,
            single vector only; the brute-force oracle).
    """
    grid = grid or s.grid
    coupling = Coupling(coupling)
    q = _coeffs(s)
    if method == "naive":
        return _rhs_naive(q, z, grid, coupling)
    if method != "fft":
        raise ValueError(f"unknown method {method!r}")
    return _rhs_fft(q, z, grid, coupling)


def _rhs_fft(q: np.ndarray, z: float, grid: ModeGrid, coupling: Coupling) -> np.ndarray:
    kappa = grid.dispersion_rates()
    lab = q * np.exp(1j * kappa * z)
    return -2j * _cubic_modes(lab, grid.n, coupling) * np.exp(-1j * kappa * z)


@lru_cache(maxsize=None)
def _padded_size(n: int) -> int:
    # products of three in-band modes span 2-n .. 2n-1; 3n bins keep them apart
    return 1 << int(np.ceil(np.log2(3 * n)))


def _cubic_modes(a: np.ndarray, n: int, coupling: Coupling) -> np.ndarray:
    """``sum_{l+m-p=k} a_l a_m conj(a_p)`` for each in-band ``k``."""
    if coupling is Coupling.PERIODIC:
        field = n * np.fft.ifft(np.roll(a, 1, axis=-1), axis=-1)
        return np.roll(np.fft.fft(np.abs(field) ** 2 * field, axis=-1), -1, axis=-1) / n
    size = _padded_size(n)
    padded = np.zeros(a.shape[:-1] + (size,), dtype=np.complex128)
    padded[..., 1:n + 1] = a
    field = size * np.fft.ifft(padded, axis=-1)
    return np.fft.fft(np.abs(field) ** 2 * field, axis=-1)[..., 1:n + 1] / size


def _rhs_naive(q: np.ndarray, z: float, grid: ModeGrid, coupling: Coupling) -> np.ndarray:
    n, w2 = grid.n, grid.omega0**2
    q = [complex(v) for v in q]
    out = []
    for k in range(1, n + 1):
        acc = 0j
        for l in range(1, n + 1):
            for m in range(1, n + 1):
                p = l + m - k
                if coupling is Coupling.PERIODIC:
                    p = (p - 1) % n + 1
                elif not 1 <= p <= n:
                    continue
                omega = w2 * (l * l + m * m - p * p - k * k)
                acc += np.exp(1j * omega * z) * q[l - 1] * q[m - 1] * q[p - 1].conjugate()
        out.append(-2j * acc)
    return np.array(out)


# -- Hamiltonian ---------------------------------------------------------------

@lru_cache(maxsize=None)
def _quadruples(n: int, coupling: Coupling) -> tuple[np.ndarray, ...]:
    a, b, c = np.meshgrid(np.arange(1, n + 1), np.arange(1, n + 1), np.arange(1, n + 1),
                          indexing="ij")
    a, b, c = a.ravel(), b.ravel(), c.ravel()
    d = a + b - c
    if coupling is Coupling.PERIODIC:
        d = (d - 1) % n + 1
    else:
        keep = (d >= 1) & (d <= n)
        a, b, c, d = a[keep], b[keep], c[keep], d[keep]
    return a, b, c, d


def hamiltonian_parts(x: np.ndarray, y: np.ndarray, z: float, grid: ModeGrid,
                      coupling: Coupling | str = Coupling.PERIODIC) -> tuple[complex, complex]:
    """Quadratic and quartic terms of ``H`` with ``x`` and ``y`` independent.

    Returns ``(j sum omega0^2 k^2 x_k y_k,
    -j sum x_a x_b y_c y_d exp(j Omega_abcd z))``.
    """
    x = np.asarray(x, dtype=np.complex128)
    y = np.asarray(y, dtype=np.complex128)
    quadratic = 1j * np.sum(grid.dispersion_rates() * x * y)
    a, b, c, d = _quadruples(grid.n, Coupling(coupling))
    omega = grid.omega0**2 * (a**2 + b**2 - c**2 - d**2)
    terms = x[a - 1] * x[b - 1] * y[c - 1] * y[d - 1] * np.exp(1j * omega * z)
    return complex(quadratic), complex(-1j * np.sum(terms))


def hamiltonian(s: Spectrum, z: float, *,
                coupling: Coupling | str = Coupling.PERIODIC) -> complex:
    """``H`` at ``(x, y) = (q, conj(q))``; the two parts summed as written."""
    quadratic, quartic = hamiltonian_parts(s.coeffs, np.conj(s.coeffs), z, s.grid, coupling)
    return quadratic + quartic


# -- flows ----------------------------------------------------------------------

def _split_step(a: np.ndarray, grid: ModeGrid, dz: float, nonlinear: bool,
                half_phase: np.ndarray) -> np.ndarray:
    a = a * half_phase
    if nonlinear:
        # unitary samples are the field divided by sqrt(n)
        a = samples_to_modes(_kerr(modes_to_samples(a), grid.n * dz))
    return a * half_phase


def _rk4_step(a: np.ndarray, grid: ModeGrid, dz: float, nonlinear: bool,
              full_phase: np.ndarray, coupling: Coupling) -> np.ndarray:
    if nonlinear:
        # rotating frame anchored at the start of the step
        f = lambda s, q: _rhs_fft(q, s, grid, coupling)  # noqa: E731
        k1 = f(0.0, a)
        k2 = f(dz / 2, a + dz / 2 * k1)
        k3 = f(dz / 2, a + dz / 2 * k2)
        k4 = f(dz, a + dz * k3)
        a = a + dz / 6 * (k1 + 2 * k2 + 2 * k3 + k4)
    return a * full_phase


def _stepper(grid: ModeGrid, params: ChannelParams):
    kappa = grid.dispersion_rates()
    dz, nonlinear = params.dz, params.nonlinearity_on
    if params.scheme is Scheme.SPLIT_STEP:
        half = np.exp(1j * kappa * dz / 2)
        return lambda a: _split_step(a, grid, dz, nonlinear, half)
    full = np.exp(1j * kappa * dz)
    return lambda a: _rk4_step(a, grid, dz, nonlinear, full, params.coupling)


def _wrap(s, coeffs: np.ndarray, dz_total: float):
    if isinstance(s, Spectrum):
        return Spectrum(s.grid, coeffs, s.z + dz_total)
    return Ensemble(s.grid, coeffs, s.z + dz_total)


def flow_array(a: np.ndarray, grid: ModeGrid, params: ChannelParams) -> np.ndarray:
    """Deterministic flow on a raw ``(..., n)`` coefficient array."""
    step = _stepper(grid, params)
    a = np.array(a, dtype=np.complex128)
    for _ in range(params.steps):
        a = step(a)
    return a


def propagate_deterministic(s: Spectrum | Ensemble, params: ChannelParams) -> Spectrum | Ensemble:
    """Noiseless channel map ``T_z`` over ``params.z_total``; ``sigma0_sq`` is ignored."""
    return _wrap(s, flow_array(s.coeffs, s.grid, params), params.z_total)


def _noisy_chunk(a: np.ndarray, grid: ModeGrid, params: ChannelParams,
                 noise: NoiseStream, first: int) -> np.ndarray:
    step = _stepper(grid, params)
    count, n, steps = a.shape[0], grid.n, params.steps
    scale = np.sqrt(params.noise_variance_per_step(grid) / 2)
    draws = np.empty((count, steps, n, 2))
    for i in range(count):
        draws[i] = noise.rng(first + i).standard_normal((steps, n, 2))
    increments = scale * (draws[..., 0] + 1j * draws[..., 1])
    a = a.copy()
    for j in range(steps):
        a = step(a) + increments[:, j, :]
    return a


def propagate_stochastic(s: Spectrum | Ensemble, params: ChannelParams, noise: NoiseStream,
                         workers: int = 1) -> Spectrum | Ensemble:
    """Noisy channel map ``S_z``: a deterministic step, then additive noise, per ``dz``.

    Member ``i`` of an ensemble uses trial ``noise.trial_index + i``.  Trials
    are processed in fixed-size chunks; ``workers`` threads share the chunks
    without affecting the result.
    """
    if params.sigma0_sq == 0:
        return propagate_deterministic(s, params)
    a = np.atleast_2d(s.coeffs)
    starts = range(0, a.shape[0], NOISE_CHUNK)
    job = lambda i: _noisy_chunk(a[i:i + NOISE_CHUNK], s.grid, params, noise, i)  # noqa: E731
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(job, starts))
    else:
        parts = [job(i) for i in starts]
    out = np.concatenate(parts, axis=0)
    if isinstance(s, Spectrum):
        out = out[0]
    return _wrap(s, out, params.z_total)


# -- Jacobian probe ----------------------------------------------------------------

def jacobian_matrix(params: ChannelParams, at: Spectrum, eps: float | None = None) -> np.ndarray:
    """Central-difference Jacobian of ``T_z`` on ``R^{2n}`` at ``at``.

    Coordinates are ``(Re q_1..Re q_n, Im q_1..Im q_n)``.
    """
    if eps is None:
        eps = 1e-5 * max(1.0, float(np.max(np.abs(at.coeffs))))
    if not eps > 0:
        raise ValueError("eps must be > 0")
    u = complex_to_real(at.coeffs)
    dim = u.size
    probes = np.concatenate([u + eps * np.eye(dim), u - eps * np.eye(dim)])
    with np.errstate(over="ignore", invalid="ignore"):
        out = complex_to_real(flow_array(real_to_complex(probes), at.grid, params))
    jac = (out[:dim] - out[dim:]).T / (2 * eps)
    if not np.all(np.isfinite(jac)):
        raise ConditioningError("finite-difference Jacobian has non-finite entries")
    return jac


def jacobian_det(params: ChannelParams, at: Spectrum, eps: float | None = None) -> float:
    """``|det J|`` of the deterministic flow at ``at`` (LU with partial pivoting)."""
    if params.steps == 0:
        return 1.0
    jac = jacobian_matrix(params, at, eps)
    sign, logdet = np.linalg.slogdet(jac)
    if sign == 0:
        return 0.0
    return float(np.exp(logdet))
