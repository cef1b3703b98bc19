"""Channel-level information quantities: the output-entropy chain,
conditional entropy, mutual information and the log(1 + SNR) bound."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from ..propagator import ChannelParams, NoiseStream, propagate_stochastic
from ..spectrum import Ensemble, ModeGrid, Spectrum, sample_gaussian_input
from .entropy import EntropyEstimate, Estimator, knn_entropy, noise_entropy_constant

LOG_PI_E = float(np.log(np.pi * np.e))
# slack for inequalities that hold exactly on sample statistics
EXACT_ATOL = 1e-12


def capacity_bound(P0: float, sigma0_sq: float, B: float, z: float, bits: bool = False) -> float:
    """``log(1 + P0 / (B sigma0^2 z))`` per complex degree of freedom."""
    sigma_sq = B * sigma0_sq * z
    if not sigma_sq > 0:
        raise ValueError("accumulated noise power B*sigma0_sq*z must be positive")
    if P0 < 0:
        raise ValueError("P0 must be >= 0")
    value = float(np.log1p(P0 / sigma_sq))
    return value / np.log(2) if bits else value


def noise_entropy_bound(n: int, sigma_sq: float) -> float:
    """Total conditional-entropy floor ``n (C_n + log sigma^2)`` in nats."""
    return n * (noise_entropy_constant(n) + float(np.log(sigma_sq)))


def complex_covariance(q: np.ndarray) -> np.ndarray:
    """Centered covariance ``E (Q - EQ)(Q - EQ)^H`` with 1/N normalization."""
    centered = q - q.mean(axis=0)
    return centered.T @ centered.conj() / len(q)


# eigenvalues below this fraction of the largest count as zero
RANK_RTOL = 1e-12


def log_det(K: np.ndarray) -> float:
    """``log det K`` for Hermitian ``K >= 0``; ``-inf`` when ``K`` is numerically singular."""
    eig = np.linalg.eigvalsh(K)
    if eig[0] <= RANK_RTOL * max(eig[-1], 0.0):
        return -np.inf
    return float(np.sum(np.log(eig)))


def hadamard_bound(K: np.ndarray) -> float:
    """``sum log K_kk``, an upper bound on ``log det K`` for ``K >= 0``."""
    return float(np.sum(np.log(np.real(np.diag(K)))))


@dataclass(frozen=True)
class ChainStep:
    name: str
    lhs: float
    rhs: float
    tolerance: float
    holds: bool | None  # None when the step could not be evaluated


@dataclass(frozen=True)
class ChainReport:
    """Per-degree-of-freedom terms of the output-entropy chain, in nats."""

    n: int
    entropy_rate: float
    entropy_stderr: float
    gaussian: float
    hadamard: float
    second_moment: float
    power: float
    power_stderr: float
    bound: float
    singular: bool
    steps: list[ChainStep] = field(default_factory=list)

    @property
    def holds(self) -> bool:
        return all(s.holds is not False for s in self.steps)

    def terms(self) -> list[float]:
        return [self.entropy_rate, self.gaussian, self.hadamard,
                self.second_moment, self.power, self.bound]


def output_entropy_chain(e: Ensemble, P0: float, sigma_sq: float, k: int = 5,
                         n_sigma: float = 2.0, entropy: EntropyEstimate | None = None) -> ChainReport:
    """Evaluate the five-step upper bound on the output entropy rate.

    Steps: (a) maximum entropy, (b) Hadamard, (c) ``K_kk <= E|Q_k|^2``,
    (d) concavity of log, (e) output power ``P0 + sigma^2``.  Steps (b)-(d) hold
    exactly on sample statistics; (a) and (e) compare estimated terms and get
    ``n_sigma`` standard errors of slack.
    """
    n = e.grid.n
    q = e.coeffs
    h = entropy or knn_entropy(e, k=k)
    K = complex_covariance(q)
    second = np.mean(np.abs(q) ** 2, axis=0)
    per_trial = np.sum(np.abs(q) ** 2, axis=1)
    P_hat = float(per_trial.mean())
    P_se = float(per_trial.std(ddof=1) / np.sqrt(len(q)))

    ld = log_det(K)
    singular = not np.isfinite(ld)
    terms = dict(
        entropy_rate=h.value / n,
        gaussian=LOG_PI_E + ld / n,
        hadamard=LOG_PI_E + hadamard_bound(K) / n,
        second_moment=LOG_PI_E + float(np.mean(np.log(second))),
        power=LOG_PI_E + float(np.log(P_hat / n)),
        bound=noise_entropy_constant(n) + float(np.log(P0 + sigma_sq)),
    )
    h_tol = n_sigma * h.stderr / n
    p_tol = n_sigma * P_se / P_hat
    pairs = [
        ("a_max_entropy", "entropy_rate", "gaussian", h_tol),
        ("b_hadamard", "gaussian", "hadamard", EXACT_ATOL),
        ("c_centering", "hadamard", "second_moment", EXACT_ATOL),
        ("d_concavity", "second_moment", "power", EXACT_ATOL),
        ("e_power_growth", "power", "bound", p_tol),
    ]
    steps = []
    for name, left, right, tol in pairs:
        lhs, rhs = terms[left], terms[right]
        if singular and name in ("a_max_entropy", "b_hadamard"):
            ok = None if name == "a_max_entropy" else True
        else:
            ok = bool(lhs <= rhs + tol)
        steps.append(ChainStep(name, lhs, rhs, tol, ok))
    return ChainReport(n=n, entropy_stderr=h.stderr / n, power_stderr=P_se,
                       singular=singular, steps=steps, **terms)


def _average(estimates: list[EntropyEstimate]) -> EntropyEstimate:
    values = np.array([e.value for e in estimates])
    errs = np.array([e.stderr for e in estimates])
    return EntropyEstimate(
        float(values.mean()),
        float(np.sqrt(np.sum(errs**2)) / len(estimates)),
        Estimator.KNN,
        sum(e.sample_count for e in estimates),
        estimates[0].real_dims,
        degenerate=any(e.degenerate for e in estimates),
    )


def conditional_entropy_points(params: ChannelParams, input_points: Ensemble | list[Spectrum],
                               trials_per_point: int, noise: NoiseStream, k: int = 5,
                               workers: int = 1) -> list[EntropyEstimate]:
    """Entropy of the channel output for each fixed input point.

    Point ``i`` uses trials ``i * trials_per_point`` onward of ``noise``.
    """
    if not isinstance(input_points, Ensemble):
        input_points = Ensemble.from_members(list(input_points))
    grid = input_points.grid
    estimates = []
    for i, point in enumerate(input_points.coeffs):
        copies = Ensemble(grid, np.broadcast_to(point, (trials_per_point, grid.n)))
        first = noise.trial_index + i * trials_per_point
        out = propagate_stochastic(copies, params, noise.at(first), workers=workers)
        estimates.append(knn_entropy(out, k=k))
    return estimates


def conditional_entropy_estimate(params: ChannelParams, input_points: Ensemble | list[Spectrum],
                                 trials_per_point: int, noise: NoiseStream, k: int = 5,
                                 min_points: int = 20, workers: int = 1) -> EntropyEstimate:
    """``h(Q(z) | Q(0))`` averaged over fixed input points (total nats, not per mode).

    Compare against :func:`noise_entropy_bound`.
    """
    count = len(input_points)
    if count < min_points:
        raise ValueError(f"need at least {min_points} input points, got {count}")
    return _average(conditional_entropy_points(params, input_points, trials_per_point,
                                               noise, k=k, workers=workers))


@dataclass(frozen=True)
class MutualInformationEstimate:
    """Mutual information per complex degree of freedom, in nats."""

    value: float
    stderr: float
    output_entropy: EntropyEstimate
    conditional_entropy: EntropyEstimate
    n: int


def mi_estimate(grid: ModeGrid, params: ChannelParams, P0: float, trials: int,
                noise: NoiseStream, input_points: int = 20, trials_per_point: int | None = None,
                k: int = 5, workers: int = 1) -> MutualInformationEstimate:
    """``(h(output) - h(output | input)) / n`` for circular Gaussian input of power ``P0``.

    Independent child streams of ``noise`` drive the output-entropy inputs (tag
    0), their channel noise (1), the conditioning points (2) and their noise (3).
    """
    trials_per_point = trials_per_point or trials
    x = sample_gaussian_input(grid, P0, trials, noise.derive(0).rng())
    h_out = knn_entropy(propagate_stochastic(x, params, noise.derive(1), workers=workers), k=k)
    points = sample_gaussian_input(grid, P0, input_points, noise.derive(2).rng())
    h_cond = conditional_entropy_estimate(params, points, trials_per_point, noise.derive(3),
                                          k=k, min_points=min(input_points, 20), workers=workers)
    n = grid.n
    value = (h_out.value - h_cond.value) / n
    stderr = float(np.hypot(h_out.stderr, h_cond.stderr) / n)
    return MutualInformationEstimate(value, stderr, h_out, h_cond, n)
