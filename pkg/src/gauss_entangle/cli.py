"""Command-line front end: ``gauss-entangle <command> [options]``.

Exit status: 0 on success, 1 when the engine rejects the run (strict
validation failure or another domain error), 2 on configuration errors.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import logging
import math
import sys
from typing import List, Optional

import numpy as np

from . import __version__
from .config import COMMANDS, ConfigError, RunConfig, load_file, parse_assignment
from .dynamics import asymptotic_covariance, evolve
from .entanglement import (
    asymptotic_entanglement_window,
    asymptotic_log_negativity,
    asymptotic_simon,
    log_negativity,
    simon_function,
)
from .errors import GaussEntangleError, InvalidEnvironment, InvalidParameter, PreconditionViolation
from .model import validate_environment
from .timeline import sample_trajectory, sweep

log = logging.getLogger("gauss_entangle")


def fmt(x: float) -> str:
    """Locale-independent round-trip float text (17 significant digits)."""
    return format(float(x), ".17g")


def _json_num(x):
    if x is None:
        return None
    x = float(x)
    if math.isfinite(x):
        return x
    return "nan" if math.isnan(x) else ("inf" if x > 0 else "-inf")


def _json(obj) -> str:
    return json.dumps(obj, indent=2, allow_nan=False) + "\n"


def _csv(rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerows(rows)
    return buf.getvalue()


def cmd_validate(config: RunConfig, strict: bool) -> str:
    report = validate_environment(config.environment(), strict=strict,
                                  sigma=config.initial_covariance())
    out = report.to_dict()
    out["min_eigenvalue"] = _json_num(out["min_eigenvalue"])
    for c in out["minor_checks"]:
        c["lhs"] = _json_num(c["lhs"])
        c["bound"] = _json_num(c["bound"])
    return _json(out)


def cmd_evolve(config: RunConfig) -> str:
    t = config.get("time.t")
    sigma = evolve(config.initial_covariance(), config.environment(), t)
    entries = sigma.entries()
    if config.get("output.format") == "csv":
        return _csv([["t"] + list(entries), [fmt(t)] + [fmt(v) for v in entries.values()]])
    return _json({"t": _json_num(t), "sigma": {k: _json_num(v) for k, v in entries.items()}})


def cmd_trajectory(config: RunConfig) -> str:
    tl = sample_trajectory(config.initial_covariance(), config.environment(),
                           config.get("time.t_max"), config.get("time.n_steps"))
    if config.get("output.format") == "json":
        return _json({
            "samples": [
                {"t": _json_num(t), "S": _json_num(r.S), "L": _json_num(r.L),
                 "f": _json_num(r.f), "nu_minus": _json_num(r.nu_minus),
                 "classification": r.classification.value}
                for t, r in tl.samples
            ],
            "events": [{"t": _json_num(e.t), "kind": e.kind.value} for e in tl.events],
        })
    rows = [["t", "S", "L", "f", "nu_minus", "classification"]]
    rows += [[fmt(t), fmt(r.S), fmt(r.L), fmt(r.f), fmt(r.nu_minus), r.classification.value]
             for t, r in tl.samples]
    events = [["event_t", "kind"]] + [[fmt(e.t), e.kind.value] for e in tl.events]
    return _csv(rows) + "\n" + _csv(events)


def cmd_sweep(config: RunConfig, strict: bool) -> str:
    values = np.linspace(config.get("sweep.min"), config.get("sweep.max"),
                         config.get("sweep.count"))
    grid = sweep(config.initial_covariance(), config.environment(),
                 config.get("sweep.coefficient"), values, config.get("time.t_max"),
                 config.get("time.n_steps"), strict=strict)
    if config.get("output.format") == "json":
        return _json({
            "coefficient": grid.coefficient,
            "times": [_json_num(t) for t in grid.times],
            "values": [_json_num(v) for v in grid.values],
            "S": [[_json_num(x) for x in row] for row in grid.surface],
            "L": [[_json_num(x) for x in row] for row in grid.surface_L],
        })
    rows = [["t", "coeff_value", "S", "L"]]
    for i, t in enumerate(grid.times):
        for j, v in enumerate(grid.values):
            rows.append([fmt(t), fmt(v), fmt(grid.surface[i, j]), fmt(grid.surface_L[i, j])])
    return _csv(rows)


def cmd_asymptote(config: RunConfig) -> str:
    params = config.environment()
    sigma_inf = asymptotic_covariance(params)
    S_num = simon_function(sigma_inf)
    L_num = log_negativity(sigma_inf)[0]
    S_inf, L_inf, window = S_num, L_num, None
    try:
        S_inf = asymptotic_simon(params)
        L_inf = asymptotic_log_negativity(params)
        low, high, nonempty = asymptotic_entanglement_window(params)
        window = {"d_low": _json_num(low), "d_high": _json_num(high), "nonempty": nonempty}
    except PreconditionViolation as exc:
        log.info("closed forms unavailable: %s", exc)
    return _json({
        "sigma_inf": {k: _json_num(v) for k, v in sigma_inf.entries().items()},
        "S_inf": _json_num(S_inf),
        "L_inf": _json_num(L_inf),
        "S_inf_numeric": _json_num(S_num),
        "L_inf_numeric": _json_num(L_num),
        "window": window,
    })


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="gauss-entangle",
        description="Entanglement dynamics of two oscillators in a common Markovian bath.",
    )
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("--config", help="TOML file with flat dotted keys")
    parser.add_argument("--set", dest="overrides", action="append", default=[],
                        metavar="KEY=VALUE", help="override a config key (repeatable)")
    parser.add_argument("--out", help="write output here instead of stdout")
    parser.add_argument("--format", choices=("csv", "json"))
    parser.add_argument("--strict", action="store_true", default=None,
                        help="treat constraint violations as errors")
    parser.add_argument("--dump-config", action="store_true",
                        help="print the effective configuration as TOML and exit")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    return parser


def load_config(args) -> RunConfig:
    layers = []
    if args.config:
        layers.append(load_file(args.config))
    layers.append(dict(parse_assignment(s) for s in args.overrides))
    flags = {}
    if args.out is not None:
        flags["output.path"] = args.out
    if args.format is not None:
        flags["output.format"] = args.format
    if args.strict:
        flags["environment.strict"] = True
    layers.append(flags)
    try:
        return RunConfig.build(args.command, layers)
    except InvalidParameter as exc:
        raise ConfigError(str(exc)) from exc


def run(config: RunConfig) -> str:
    """Execute one configured command and return the emitted text."""
    strict = config.get("environment.strict")
    cmd = config.command
    if cmd == "validate":
        return cmd_validate(config, strict)
    report = validate_environment(config.environment(), strict=strict,
                                  sigma=config.initial_covariance())
    for w in report.warnings:
        log.warning("%s", w)
    if cmd == "evolve":
        return cmd_evolve(config)
    if cmd == "trajectory":
        return cmd_trajectory(config)
    if cmd == "sweep":
        return cmd_sweep(config, strict)
    return cmd_asymptote(config)


def main(argv: Optional[List[str]] = None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s: %(message)s")
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        config = load_config(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    if args.dump_config:
        sys.stdout.write(config.dump())
        return 0
    try:
        text = run(config)
    except InvalidEnvironment as exc:
        print(f"invalid environment: {exc}", file=sys.stderr)
        return 1
    except GaussEntangleError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    path = config.get("output.path")
    if path:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return 0


if __name__ == "__main__":
    sys.exit(main())
