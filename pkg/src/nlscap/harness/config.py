"""Experiment configuration: JSON schema, shipped defaults and validation."""

from __future__ import annotations

import copy
import enum
import json
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path
from typing import Any

from ..propagator import ChannelParams
from ..spectrum import ModeGrid


class Experiment(str, enum.Enum):
    LEMMA1 = "Lemma1"
    LEMMA2 = "Lemma2"
    LEMMA3 = "Lemma3"
    LEMMA4 = "Lemma4"
    EPI_SUITE = "EpiSuite"
    MI_BOUND_SWEEP = "MiBoundSweep"
    CHAIN_REPORT = "ChainReport"
    APPENDIX_SUITE = "AppendixSuite"


CLI_NAMES = {
    "lemma1": Experiment.LEMMA1,
    "lemma2": Experiment.LEMMA2,
    "lemma3": Experiment.LEMMA3,
    "lemma4": Experiment.LEMMA4,
    "chain": Experiment.CHAIN_REPORT,
    "epi": Experiment.EPI_SUITE,
    "appendix": Experiment.APPENDIX_SUITE,
    "sweep": Experiment.MI_BOUND_SWEEP,
}

TOP_KEYS = {"experiment", "grid", "channel", "P0", "trials", "master_seed", "tolerances",
            "output_path", "workers", "k", "points", "trials_per_point", "n_values",
            "z_values", "eps", "sweep", "bits"}
GRID_KEYS = {"n", "omega0"}
CHANNEL_KEYS = {"sigma0_sq", "noise_power", "z_total", "dz", "scheme", "nonlinearity_on", "coupling"}
SWEEP_KEYS = {"snr", "z"}


class ConfigError(ValueError):
    """Invalid configuration; ``field`` names the offending entry."""

    def __init__(self, field: str, reason: str):
        super().__init__(f"{field}: {reason}")
        self.field = field
        self.reason = reason


def load_defaults() -> dict:
    text = resources.files("nlscap.harness").joinpath("defaults.json").read_text()
    return json.loads(text)


@dataclass(frozen=True)
class ExperimentConfig:
    experiment: Experiment
    grid: ModeGrid
    channel: ChannelParams
    P0: float
    trials: int
    master_seed: int
    tolerances: dict[str, float]
    output_path: str | None = None
    workers: int = 1
    k: int = 5
    points: int = 20
    trials_per_point: int | None = None
    n_values: tuple[int, ...] = (1, 2, 4)
    z_values: tuple[float, ...] = (0.05, 0.1, 0.5)
    eps: float = 1e-5
    sweep: dict[str, tuple[float, ...]] = field(default_factory=dict)
    bits: bool = False
    raw: dict = field(default_factory=dict, compare=False, repr=False)

    def echo(self) -> dict:
        """The merged configuration as plain JSON data."""
        return copy.deepcopy(self.raw)


def _reject_unknown(data: dict, allowed: set, where: str):
    for key in data:
        if key not in allowed:
            raise ConfigError(f"{where}{key}", "unknown key")


def _merge(base: dict, update: dict) -> dict:
    out = copy.deepcopy(base)
    for key, value in update.items():
        if isinstance(value, dict) and isinstance(out.get(key), dict) and key != "sweep":
            out[key] = _merge(out[key], value)
        else:
            out[key] = copy.deepcopy(value)
    return out


def _positive_int(data: dict, key: str, minimum: int = 1) -> int:
    value = data[key]
    if isinstance(value, bool) or not isinstance(value, int) or value < minimum:
        raise ConfigError(key, f"must be an integer >= {minimum}, got {value!r}")
    return value


def build_config(data: dict, experiment: Experiment | str | None = None,
                 defaults: dict | None = None) -> ExperimentConfig:
    """Merge ``data`` over the shipped defaults for its experiment and validate."""
    defaults = defaults or load_defaults()
    if not isinstance(data, dict):
        raise ConfigError("<root>", "config must be a JSON object")
    _reject_unknown(data, TOP_KEYS, "")
    named = data.get("experiment")
    if experiment is not None and named is not None and Experiment(named) != Experiment(experiment):
        raise ConfigError("experiment", f"config names {named!r} but {Experiment(experiment).value!r} was requested")
    try:
        exp = Experiment(experiment or named)
    except ValueError:
        raise ConfigError("experiment", f"unknown or missing experiment {named!r}") from None

    base = copy.deepcopy(defaults["experiments"][exp.value])
    user_channel = data.get("channel", {})
    for given, dropped in (("sigma0_sq", "noise_power"), ("noise_power", "sigma0_sq")):
        if given in user_channel:
            base.get("channel", {}).pop(dropped, None)
    merged = _merge(base, data)
    merged["experiment"] = exp.value
    merged.setdefault("master_seed", 1)
    tol = dict(defaults["tolerances"][exp.value])
    for key, value in data.get("tolerances", {}).items():
        if key not in tol:
            raise ConfigError(f"tolerances.{key}", f"not used by {exp.value}")
        tol[key] = float(value)
    merged["tolerances"] = tol

    grid_data = merged.get("grid", {})
    _reject_unknown(grid_data, GRID_KEYS, "grid.")
    try:
        grid = ModeGrid(**grid_data)
    except (TypeError, ValueError) as err:
        raise ConfigError("grid", str(err)) from None

    channel = _build_channel(merged.get("channel", {}), grid)
    trials = _positive_int(merged, "trials")
    seed = merged["master_seed"]
    if isinstance(seed, bool) or not isinstance(seed, int) or seed < 0:
        raise ConfigError("master_seed", f"must be a nonnegative integer, got {seed!r}")
    P0 = merged.get("P0", 1.0)
    if not isinstance(P0, (int, float)) or P0 < 0:
        raise ConfigError("P0", f"must be a nonnegative number, got {P0!r}")

    sweep = {}
    if exp is Experiment.MI_BOUND_SWEEP:
        sweep_data = merged.get("sweep", {})
        _reject_unknown(sweep_data, SWEEP_KEYS, "sweep.")
        if len(sweep_data) != 1:
            raise ConfigError("sweep", "give exactly one of 'snr' or 'z'")
        (axis, values), = sweep_data.items()
        if len(values) < 2:
            raise ConfigError("sweep", f"needs at least 2 points, got {len(values)}")
        if any(v <= 0 for v in values):
            raise ConfigError(f"sweep.{axis}", "values must be positive")
        sweep = {axis: tuple(float(v) for v in values)}

    kwargs: dict[str, Any] = {}
    for key in ("workers", "k", "points"):
        if key in merged:
            kwargs[key] = _positive_int(merged, key)
    if merged.get("trials_per_point") is not None:
        kwargs["trials_per_point"] = _positive_int(merged, "trials_per_point")
    if "n_values" in merged:
        kwargs["n_values"] = tuple(int(v) for v in merged["n_values"])
    if "z_values" in merged:
        kwargs["z_values"] = tuple(float(v) for v in merged["z_values"])
    if "eps" in merged:
        kwargs["eps"] = float(merged["eps"])
        if not kwargs["eps"] > 0:
            raise ConfigError("eps", "must be positive")
    return ExperimentConfig(
        experiment=exp, grid=grid, channel=channel, P0=float(P0), trials=trials,
        master_seed=seed, tolerances=tol, output_path=merged.get("output_path"),
        sweep=sweep, bits=bool(merged.get("bits", False)), raw=merged, **kwargs,
    )


def _build_channel(data: dict, grid: ModeGrid) -> ChannelParams:
    _reject_unknown(data, CHANNEL_KEYS, "channel.")
    data = dict(data)
    if "noise_power" in data:
        if "sigma0_sq" in data:
            raise ConfigError("channel.noise_power", "give either sigma0_sq or noise_power, not both")
        z = data.get("z_total", 1.0)
        if not z > 0:
            raise ConfigError("channel.z_total", "must be positive when noise_power is given")
        data["sigma0_sq"] = data.pop("noise_power") / (grid.bandwidth * z)
    try:
        return ChannelParams(**data)
    except (TypeError, ValueError) as err:
        raise ConfigError("channel", str(err)) from None


def load_config(path: str | Path | None, experiment: Experiment | str | None = None,
                overrides: dict | None = None) -> ExperimentConfig:
    """Read a JSON config file (or none, for pure defaults) and apply overrides."""
    data = {}
    if path is not None:
        try:
            data = json.loads(Path(path).read_text())
        except json.JSONDecodeError as err:
            raise ConfigError("<file>", f"invalid JSON: {err}") from None
    if overrides:
        data = _merge(data, overrides)
    return build_config(data, experiment)
