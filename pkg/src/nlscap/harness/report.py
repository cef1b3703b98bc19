"""Experiment reports: checks, JSON serialization and the raw CSV table."""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any

LN2 = math.log(2)

PASS, FAIL, INFO = "pass", "fail", "info"


def fmt(value: Any) -> str:
    """Render a number for reports: floats with 17 significant digits."""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        if math.isnan(value):
            return "nan"
        if math.isinf(value):
            return "inf" if value > 0 else "-inf"
        return format(value, ".17g")
    if value is None:
        return ""
    return str(value)


@dataclass
class Check:
    name: str
    measured: float | None
    expected: float | None
    tolerance: float | None
    stderr: float | None
    verdict: str
    unit: str = ""
    note: str = ""

    def in_bits(self) -> "Check":
        if self.unit != "nats":
            return self
        scale = lambda v: None if v is None else v / LN2  # noqa: E731
        return Check(self.name, scale(self.measured), scale(self.expected), scale(self.tolerance),
                     scale(self.stderr), self.verdict, "bits", self.note)


@dataclass
class ExperimentReport:
    experiment: str
    config: dict
    checks: list[Check] = field(default_factory=list)
    raw_columns: list[str] = field(default_factory=list)
    raw_rows: list[list] = field(default_factory=list)
    duration_s: float = 0.0
    seed: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return all(c.verdict != FAIL for c in self.checks)

    def add(self, name, measured, expected, tolerance, stderr, ok: bool | None,
            unit: str = "", note: str = "") -> Check:
        verdict = INFO if ok is None else (PASS if ok else FAIL)
        check = Check(name, _num(measured), _num(expected), _num(tolerance), _num(stderr),
                      verdict, unit, note)
        self.checks.append(check)
        return check

    def to_data(self, bits: bool = False) -> dict:
        checks = [c.in_bits() if bits else c for c in self.checks]
        return {
            "experiment": self.experiment,
            "passed": self.passed,
            "config": self.config,
            "seed": self.seed,
            "duration_s": self.duration_s,
            "checks": [vars(c) for c in checks],
        }

    def to_json(self, bits: bool = False) -> str:
        return dump_json(self.to_data(bits))

    def raw_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(self.raw_columns)
        for row in self.raw_rows:
            writer.writerow([fmt(v) for v in row])
        return buf.getvalue()

    def write(self, base: str | Path, bits: bool = False) -> tuple[Path, Path]:
        base = Path(base)
        base.parent.mkdir(parents=True, exist_ok=True)
        json_path = base.with_suffix(".json")
        csv_path = base.with_suffix(".csv")
        json_path.write_text(self.to_json(bits) + "\n")
        csv_path.write_text(self.raw_csv())
        return json_path, csv_path

    def summary_lines(self, bits: bool = False) -> list[str]:
        lines = []
        for c in self.checks:
            c = c.in_bits() if bits else c
            lines.append(f"[{c.verdict.upper():4}] {self.experiment}.{c.name}: measured={fmt(c.measured)} "
                         f"expected={fmt(c.expected)} tol={fmt(c.tolerance)} {c.unit}".rstrip())
        return lines


def _num(value):
    return None if value is None else float(value)


def dump_json(obj: Any, indent: int = 2, _level: int = 0) -> str:
    """JSON writer that prints floats with 17 significant digits."""
    pad = " " * (indent * (_level + 1))
    end = " " * (indent * _level)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{_string(str(k))}: {dump_json(v, indent, _level + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        items = [f"{pad}{dump_json(v, indent, _level + 1)}" for v in obj]
        return "[\n" + ",\n".join(items) + "\n" + end + "]"
    if isinstance(obj, bool) or obj is None:
        return "true" if obj is True else "false" if obj is False else "null"
    if isinstance(obj, float):
        if not math.isfinite(obj):
            return _string(fmt(obj))
        return fmt(obj)
    if isinstance(obj, int):
        return str(obj)
    return _string(str(obj))


def _string(s: str) -> str:
    return json.dumps(s)
