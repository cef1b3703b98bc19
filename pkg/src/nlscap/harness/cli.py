"""Command line entry point: ``nlscap verify <name>`` and ``nlscap sweep``."""

from __future__ import annotations

import argparse
import logging
import sys

from .config import CLI_NAMES, ConfigError, Experiment, load_config
from .suites import run_experiment

VERIFY_NAMES = [name for name, exp in CLI_NAMES.items() if exp is not Experiment.MI_BOUND_SWEEP]


def _common(p: argparse.ArgumentParser):
    p.add_argument("--config", help="JSON config file; omitted keys take shipped defaults")
    p.add_argument("--seed", type=int, help="master seed")
    p.add_argument("--trials", type=int, help="Monte Carlo trial count")
    p.add_argument("--out", help="output path stem; writes <stem>.json and <stem>.csv")
    p.add_argument("--bits", action="store_true", help="report entropies in bits")
    p.add_argument("--workers", type=int, help="worker threads for noisy propagation")
    p.add_argument("-v", "--verbose", action="store_true")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="nlscap", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)
    verify = sub.add_parser("verify", help="run one verification suite")
    verify.add_argument("name", choices=VERIFY_NAMES)
    _common(verify)
    sweep = sub.add_parser("sweep", help="mutual information against the log(1 + SNR) bound")
    _common(sweep)
    return parser


def _overrides(args) -> dict:
    out = {}
    for key, attr in (("master_seed", "seed"), ("trials", "trials"),
                      ("output_path", "out"), ("workers", "workers")):
        value = getattr(args, attr)
        if value is not None:
            out[key] = value
    if args.bits:
        out["bits"] = True
    return out


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    experiment = CLI_NAMES[args.name] if args.command == "verify" else Experiment.MI_BOUND_SWEEP
    try:
        cfg = load_config(args.config, experiment, _overrides(args))
    except (ConfigError, OSError) as err:
        print(f"config error: {err}", file=sys.stderr)
        return 2
    report = run_experiment(cfg)
    for line in report.summary_lines(bits=cfg.bits):
        print(line)
    print(f"{report.experiment}: {'PASS' if report.passed else 'FAIL'} ({report.duration_s:.1f} s)")
    return 0 if report.passed else 1


if __name__ == "__main__":
    sys.exit(main())
