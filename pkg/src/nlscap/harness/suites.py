"""Verification suites dispatched by :func:`run_experiment`."""

from __future__ import annotations

import logging
import time
from dataclasses import replace

import numpy as np

from ..infotheory import (
    GridSet,
    Pmf,
    bmi_check,
    capacity_bound,
    epi_gap,
    exhaustive_sumset_check,
    full_pairs,
    knn_entropy,
    mi_estimate,
    noise_entropy_constant,
    output_entropy_chain,
    restricted_sum_report,
    sumset_entropy_check,
)
from ..infotheory.channel import conditional_entropy_points
from ..propagator import (
    ChannelParams,
    Coupling,
    NoiseStream,
    Scheme,
    jacobian_det,
    propagate_deterministic,
    propagate_stochastic,
)
from ..spectrum import Ensemble, ModeGrid, Spectrum, power, sample_gaussian_input
from .config import Experiment, ExperimentConfig
from .report import ExperimentReport

log = logging.getLogger(__name__)

EPI_UNIFORM_GAP = (1 - 2 / np.e) / (2 * np.pi)


def _mean_se(values: np.ndarray) -> tuple[float, float]:
    return float(values.mean()), float(values.std(ddof=1) / np.sqrt(len(values)))


def _noiseless(ch: ChannelParams) -> ChannelParams:
    return replace(ch, sigma0_sq=0.0)


def power_growth(cfg: ExperimentConfig, rep: ExperimentReport):
    base = NoiseStream(cfg.master_seed)
    grid, ch, tol = cfg.grid, cfg.channel, cfg.tolerances
    probe = sample_gaussian_input(grid, max(cfg.P0, 1e-300), 1, base.derive(0).rng())
    p_in = float(power(probe)[0])
    for scheme in Scheme:
        coupling = Coupling.PERIODIC if scheme is Scheme.SPLIT_STEP else ch.coupling
        params = replace(ch, sigma0_sq=0.0, scheme=scheme, coupling=coupling)
        drift = abs(float(power(propagate_deterministic(probe, params))[0]) - p_in) / p_in
        rep.add(f"energy_conservation_{scheme.value}", drift, 0.0, tol["energy_rel"], None,
                drift <= tol["energy_rel"], unit="relative")

    sigma_sq = ch.accumulated_noise_power(grid)
    x = sample_gaussian_input(grid, cfg.P0, cfg.trials, base.derive(1).rng())
    y = propagate_stochastic(x, ch, base.derive(2), workers=cfg.workers)
    zero = Ensemble(grid, np.zeros((cfg.trials, grid.n)))
    y0 = propagate_stochastic(zero, ch, base.derive(3), workers=cfg.workers)
    k = tol["n_stderr"]
    for name, out, expected in (("mean_output_power", y, cfg.P0 + sigma_sq),
                                ("zero_input_noise_power", y0, sigma_sq)):
        mean, se = _mean_se(power(out))
        rep.add(name, mean, expected, k * se, se, abs(mean - expected) <= k * se, unit="power")
    rep.raw_columns = ["trial", "input_power", "output_power", "zero_input_output_power"]
    rep.raw_rows = [[i, a, b, c] for i, (a, b, c) in
                    enumerate(zip(power(x).tolist(), power(y).tolist(), power(y0).tolist()))]


def volume_preservation(cfg: ExperimentConfig, rep: ExperimentReport):
    base = NoiseStream(cfg.master_seed)
    tol = cfg.tolerances["det_abs"]
    rep.raw_columns = ["n", "z", "point", "det"]
    for n in cfg.n_values:
        grid = ModeGrid(n, cfg.grid.omega0)
        points = sample_gaussian_input(grid, cfg.P0, cfg.points, base.derive(n).rng())
        for z in cfg.z_values:
            params = replace(_noiseless(cfg.channel), z_total=z)
            dets = [jacobian_det(params, Spectrum(grid, q), cfg.eps) for q in points.coeffs]
            worst = float(np.max(np.abs(np.array(dets) - 1)))
            rep.add(f"unit_jacobian_n{n}_z{z:g}", worst, 0.0, tol, None, worst <= tol,
                    note="max |det J - 1| over points")
            rep.raw_rows += [[n, z, i, d] for i, d in enumerate(dets)]


def entropy_preservation(cfg: ExperimentConfig, rep: ExperimentReport):
    base = NoiseStream(cfg.master_seed)
    x = sample_gaussian_input(cfg.grid, cfg.P0, cfg.trials, base.derive(0).rng())
    y = propagate_deterministic(x, _noiseless(cfg.channel))
    hx, hy = knn_entropy(x, k=cfg.k), knn_entropy(y, k=cfg.k)
    diff = hy.value - hx.value
    se = float(np.hypot(hx.stderr, hy.stderr))
    tol = cfg.tolerances["entropy_abs"]
    rep.add("entropy_preserved", diff, 0.0, tol, se, abs(diff) <= tol, unit="nats")
    rep.add("entropy_preserved_in_stderr", diff, 0.0, 2 * se, se, None, unit="nats",
            note="informational: difference against twice the combined standard error")
    rep.raw_columns = ["quantity", "entropy", "stderr"]
    rep.raw_rows = [["input", hx.value, hx.stderr], ["output", hy.value, hy.stderr]]


def conditional_entropy_floor(cfg: ExperimentConfig, rep: ExperimentReport):
    base = NoiseStream(cfg.master_seed)
    grid, ch, tol = cfg.grid, cfg.channel, cfg.tolerances
    sigma_sq = ch.accumulated_noise_power(grid)
    floor = noise_entropy_constant(grid.n) + float(np.log(sigma_sq))
    points = sample_gaussian_input(grid, cfg.P0, cfg.points, base.derive(0).rng())
    per_point = cfg.trials_per_point or cfg.trials
    rep.raw_columns = ["channel", "point", "entropy", "stderr"]
    for tag, label, nonlinear in ((1, "nls", ch.nonlinearity_on), (2, "linear", False)):
        params = replace(ch, nonlinearity_on=nonlinear)
        ests = conditional_entropy_points(params, points, per_point, base.derive(tag),
                                          k=cfg.k, workers=cfg.workers)
        values = np.array([e.value for e in ests]) / grid.n
        rate = float(values.mean())
        se = float(np.sqrt(sum(e.stderr**2 for e in ests)) / len(ests) / grid.n)
        if label == "nls":
            rep.add("conditional_entropy_lower_bound", rate, floor, tol["bound_slack"], se,
                    rate >= floor - tol["bound_slack"], unit="nats")
        else:
            rep.add("linear_channel_equality", rate, floor, tol["linear_equality"], se,
                    abs(rate - floor) <= tol["linear_equality"], unit="nats")
        rep.raw_rows += [[label, i, e.value, e.stderr] for i, e in enumerate(ests)]


def entropy_chain(cfg: ExperimentConfig, rep: ExperimentReport):
    base = NoiseStream(cfg.master_seed)
    grid, ch = cfg.grid, cfg.channel
    sigma_sq = ch.accumulated_noise_power(grid)
    x = sample_gaussian_input(grid, cfg.P0, cfg.trials, base.derive(0).rng())
    y = propagate_stochastic(x, ch, base.derive(1), workers=cfg.workers)
    r = output_entropy_chain(y, cfg.P0, sigma_sq, k=cfg.k, n_sigma=cfg.tolerances["n_stderr"])
    for step in r.steps:
        rep.add(step.name, step.lhs, step.rhs, step.tolerance, None, step.holds, unit="nats",
                note="lhs <= rhs + tolerance")
    rep.raw_columns = ["term", "value"]
    names = ["entropy_rate", "gaussian", "hadamard", "second_moment", "power", "bound"]
    rep.raw_rows = [[name, v] for name, v in zip(names, r.terms())]


def _epi_cases(cfg: ExperimentConfig, base: NoiseStream):
    m = cfg.trials
    r = [base.derive(i).rng() for i in range(8)]
    yield "gaussian_pair", r[0].standard_normal((m, 1)), np.sqrt(2) * r[1].standard_normal((m, 1)), 0.0
    yield "uniform_pair", r[2].uniform(size=(m, 1)), r[3].uniform(size=(m, 1)), EPI_UNIFORM_GAP
    yield "constant_y", r[4].standard_normal((m, 1)), np.full((m, 1), 3.0), 0.0
    cx = (r[5].standard_normal(m) + 1j * r[5].standard_normal(m)) / np.sqrt(2)
    cy = (r[6].standard_normal(m) + 1j * r[6].standard_normal(m)) / 2
    yield "complex_gaussian_pair", cx[:, None], cy[:, None], 0.0


def epi_pairs(cfg: ExperimentConfig, rep: ExperimentReport):
    base = NoiseStream(cfg.master_seed)
    k = cfg.tolerances["n_stderr"]
    rep.raw_columns = ["case", "power_sum", "power_x", "power_y", "gap", "stderr"]
    for name, x, y, expected in _epi_cases(cfg, base):
        g = epi_gap(x, y, k=cfg.k, rng=base.derive(100).rng())
        rep.add(f"{name}_holds", g.gap, 0.0, k * g.stderr, g.stderr, g.holds(k),
                note="gap >= -tolerance")
        rep.add(f"{name}_value", g.gap, expected, k * g.stderr, g.stderr,
                abs(g.gap - expected) <= k * g.stderr)
        rep.raw_rows.append([name, g.power_sum, g.power_x, g.power_y, g.gap, g.stderr])


def inequality_suite(cfg: ExperimentConfig, rep: ExperimentReport):
    epi_pairs(cfg, rep)
    atol = cfg.tolerances["exact_atol"]

    ex = exhaustive_sumset_check(5, 0.1)
    rep.add("entropy_of_sum_exhaustive", ex["entropy_violations"], 0, 0, None,
            ex["entropy_violations"] == 0, unit="count",
            note=f"{ex['pairs']} pmf pairs; min slack {ex['min_entropy_slack']:.3g} bits")
    rep.add("sumset_cardinality_exhaustive", ex["cardinality_violations"], 0, 0, None,
            ex["cardinality_violations"] == 0, unit="count")
    u = Pmf.uniform([0, 1])
    r = sumset_entropy_check(u, u)
    rep.add("uniform_bits_example", r.H_sum, 1.5, atol, None, abs(r.H_sum - 1.5) <= atol, unit="bits")
    r = sumset_entropy_check(Pmf.uniform([0, 1, 2]), Pmf.uniform([0, 10]))
    rep.add("sumset_size_example", r.sumset_size, r.product_size, 0, None,
            r.sumset_size == 6 == r.product_size, unit="count")

    box = GridSet.box([10, 10])
    disc = GridSet.disc(6.0)
    cube = GridSet.box([4, 5, 6])
    ball = GridSet.disc(3.0, dims=3)
    for name, A, B in (("box_box", box, box), ("disc_box", disc, box),
                       ("disc_disc", disc, disc), ("cube_ball", cube, ball)):
        b = bmi_check(A, B)
        rep.add(f"bmi_{name}", b.lhs, b.rhs, 0.0, None, b.holds,
                note=f"lattice-only lhs {b.lattice_lhs:.6g}")
        rep.raw_rows.append([f"bmi_{name}", b.lhs, b.rhs, b.lattice_lhs, b.discretization_gap, None])

    pairs = full_pairs(disc, box)
    full = restricted_sum_report(disc, box, pairs)
    rep.add("restricted_full_equals_sum", full.restricted_volume, full.full_volume, 0.0, None,
            full.restricted_volume == full.full_volume, unit="volume")
    rng = NoiseStream(cfg.master_seed).derive(200).rng()
    subset = pairs[rng.random(len(pairs)) < 0.9]
    part = restricted_sum_report(disc, box, subset)
    rep.add("restricted_subset_contained", part.restricted_volume, part.full_volume, 0.0, None,
            part.contained, unit="volume", note=f"omega fraction {part.omega_fraction:.3f}")
    rep.add("restricted_exponent_two", part.restricted_power, part.power_sum, None, None, None,
            note="informational: mu^(2/d) of restricted sum against sum of mu^(2/d)")


def sweep(cfg: ExperimentConfig, rep: ExperimentReport | None = None) -> ExperimentReport:
    """Mutual information against ``log(1 + SNR)`` across an SNR or distance sweep."""
    rep = rep or _new_report(cfg)
    base = NoiseStream(cfg.master_seed)
    grid, ch, tol = cfg.grid, cfg.channel, cfg.tolerances
    (axis, values), = cfg.sweep.items()
    rep.raw_columns = ["snr", "z", "mi_nats_per_dof", "stderr", "bound", "margin"]
    for i, v in enumerate(values):
        if axis == "snr":
            if cfg.P0 <= 0:
                raise ValueError("an SNR sweep needs P0 > 0")
            sigma0_sq = cfg.P0 / v / (grid.bandwidth * ch.z_total)
            params = replace(ch, sigma0_sq=sigma0_sq)
        else:
            params = replace(ch, z_total=v)
        bound = capacity_bound(cfg.P0, params.sigma0_sq, grid.bandwidth, params.z_total)
        snr = cfg.P0 / params.accumulated_noise_power(grid)
        mi = mi_estimate(grid, params, cfg.P0, cfg.trials, base.derive(i), input_points=cfg.points,
                         trials_per_point=cfg.trials_per_point, k=cfg.k, workers=cfg.workers)
        margin = bound - mi.value
        label = f"{axis}={v:g}"
        rep.add(f"bound_{label}", mi.value, bound, tol["bound_slack"], mi.stderr,
                margin >= -tol["bound_slack"], unit="nats", note="measured <= expected + tolerance")
        if not params.nonlinearity_on:
            rep.add(f"linear_match_{label}", mi.value, bound, tol["linear_match"], mi.stderr,
                    abs(margin) <= tol["linear_match"], unit="nats")
        rep.raw_rows.append([snr, params.z_total, mi.value, mi.stderr, bound, margin])
    return rep


SUITES = {
    Experiment.LEMMA1: power_growth,
    Experiment.LEMMA2: volume_preservation,
    Experiment.LEMMA3: entropy_preservation,
    Experiment.LEMMA4: conditional_entropy_floor,
    Experiment.CHAIN_REPORT: entropy_chain,
    Experiment.EPI_SUITE: epi_pairs,
    Experiment.APPENDIX_SUITE: inequality_suite,
    Experiment.MI_BOUND_SWEEP: sweep,
}


def _new_report(cfg: ExperimentConfig) -> ExperimentReport:
    seed = {
        "master_seed": cfg.master_seed,
        "substreams": "numpy SeedSequence(master_seed, spawn_key=(tags..., trial_index))",
    }
    return ExperimentReport(cfg.experiment.value, cfg.echo(), seed=seed)


def run_experiment(cfg: ExperimentConfig, write: bool = True) -> ExperimentReport:
    """Run the suite selected by ``cfg`` and (optionally) write its JSON and CSV outputs.

    A suite that raises midway keeps the checks it completed and gains a
    failing ``error`` check carrying the exception text.
    """
    rep = _new_report(cfg)
    start = time.perf_counter()
    try:
        SUITES[cfg.experiment](cfg, rep)
    except Exception as err:  # noqa: BLE001 - recorded in the report
        log.exception("suite %s failed", cfg.experiment.value)
        rep.add("error", None, None, None, None, False, note=f"{type(err).__name__}: {err}")
    rep.duration_s = time.perf_counter() - start
    if write and cfg.output_path:
        rep.write(cfg.output_path, bits=cfg.bits)
    return rep
