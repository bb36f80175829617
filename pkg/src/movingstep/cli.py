"""Command-line front end: ``analytic``, ``simulate``, ``validate`` and ``sweep``.

Exit codes: 0 success, 1 the wave never reaches the step, 2 usage or
configuration error, 3 a validation tolerance failed.
"""

from __future__ import annotations

import argparse
import io
import json
import math
import sys
from typing import Optional, Sequence

import numpy as np

from movingstep import __version__, tdse
from movingstep import scenario as sio
from movingstep.analytics import RegimeTag, StepKind
from movingstep.errors import BoundaryContamination, NoCollisionError

EXIT_OK, EXIT_NO_COLLISION, EXIT_USAGE, EXIT_VALIDATION = 0, 1, 2, 3


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="config file; its keys override the flags")
    p.add_argument("--k1", type=float)
    p.add_argument("--v", type=float)
    p.add_argument("--V0", type=float)
    p.add_argument("--hbar", type=float)
    p.add_argument("--mass", type=float)
    p.add_argument("--kind", choices=("finite", "infinite"))
    p.add_argument("--a", type=float)
    p.add_argument("--theta", type=float)
    p.add_argument("--x-range", help="field grid min:max:step")
    p.add_argument("--t", help="field sample times, comma separated")
    p.add_argument("--out", help="output file (default: standard output)")
    p.add_argument("--format", choices=("csv", "json"), default="csv")


def _packet_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--sigma-x", type=float)
    p.add_argument("--x0", type=float)
    p.add_argument("--n-points", type=int)
    p.add_argument("--dt", type=float)
    p.add_argument("--t-final", type=float)
    p.add_argument("--snapshot-every", type=int)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="movingstep", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"movingstep {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("analytic", help="closed-form record and optional field table")
    _common(p)
    for name in ("simulate", "validate"):
        p = sub.add_parser(name, help="wave-packet propagation" if name == "simulate"
                           else "packet run checked against the closed forms")
        _common(p)
        _packet_flags(p)
    p = sub.add_parser("sweep", help="grid of scenarios, one record per point")
    _common(p)
    _packet_flags(p)
    p.add_argument("--axis", action="append", default=[],
                   help="PARAM=min:max:step or PARAM=min:max:count=N (repeatable)")
    p.add_argument("--mode", choices=("analytic", "validate"))
    p.add_argument("--workers", type=int, default=1)
    return parser


def _flag_text(args: argparse.Namespace) -> str:
    """Render the flags as config text so one parser handles both sources."""
    sections: dict[str, list[str]] = {"physical": [], "incident": [], "field_grid": [], "packet": [], "run": []}
    table = [
        ("physical", "hbar", "hbar"), ("physical", "mass", "mass"), ("physical", "v", "v"),
        ("physical", "V0", "V0"), ("physical", "kind", "kind"),
        ("incident", "k1", "k1"), ("incident", "a", "a"), ("incident", "theta", "theta"),
        ("field_grid", "x_range", "x_range"), ("field_grid", "t", "t"),
        ("packet", "x0", "x0"), ("packet", "sigma_x", "sigma_x"),
        ("run", "n_points", "n_points"), ("run", "dt", "dt"), ("run", "t_final", "t_final"),
        ("run", "snapshot_every", "snapshot_every"),
    ]
    for section, key, attr in table:
        value = getattr(args, attr, None)
        if value is not None:
            sections[section].append(f"{key} = {value if isinstance(value, str) else repr(value)}")
    if getattr(args, "mode", None) or getattr(args, "axis", None):
        lines = []
        if args.mode:
            lines.append(f"mode = {args.mode}")
        for item in args.axis:
            if "=" not in item:
                raise sio.ConfigError(f"--axis expects PARAM=range, got {item!r}")
            lines.append(item.replace("=", " = ", 1))
        sections["sweep"] = lines
    return "\n".join(
        f"[{name}]\n" + "\n".join(lines) for name, lines in sections.items() if lines
    ) + "\n"


def _merged_sections(args: argparse.Namespace) -> dict:
    sections = sio.parse_sections(_flag_text(args))
    if args.config:
        with open(args.config, encoding="utf-8") as fh:
            overrides = sio.parse_sections(fh.read())
        for name, values in overrides.items():
            sections.setdefault(name, {}).update(values)
    return sections


def _meta(command: str, config: sio.ScenarioConfig) -> dict:
    return {"movingstep": __version__, "command": command, **sio.scenario_echo(config)}


def _emit(text: str, out: Optional[str], stdout) -> None:
    if out:
        with open(out, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        stdout.write(text)


def _analytic(args, config, stdout) -> int:
    record = sio.run_analytic(config)
    meta = _meta("analytic", config)
    if args.format == "json":
        text = sio.records_to_json(record, meta)
    elif record.field_samples is not None:
        text = sio.field_table_to_csv(record, meta)
    else:
        text = sio.records_to_csv([record], meta)
    _emit(text, args.out, stdout)
    if record.regime == RegimeTag.NO_COLLISION.value:
        print(f"NoCollision: {record.reason}", file=sys.stderr)
        return EXIT_NO_COLLISION
    return EXIT_OK


def _simulate(args, config, stdout) -> int:
    scenario = config.scenario()
    if sio.run_analytic(config).regime == RegimeTag.NO_COLLISION.value:
        print("NoCollision: the packet never reaches the step", file=sys.stderr)
        return EXIT_NO_COLLISION
    packet = config.packet_spec()
    plan = tdse.plan_run(scenario, packet, config.run_params())
    ctx = scenario.context
    state = tdse.gaussian_packet(plan.grid, packet)
    every = (config.run.snapshot_every if config.run else None) or plan.n_steps
    frames = [state.copy()]

    def keep(s: tdse.GridState) -> None:
        frames.append(s.copy())

    if scenario.kind is StepKind.INFINITE:
        final = tdse.hard_wall_comoving(state, ctx, plan.dt, plan.n_steps, keep, every)
    else:
        final = tdse.propagate(state, ctx, scenario.kind, plan.dt, plan.n_steps, keep, every)
    if abs(frames[-1].t - final.t) > 0.5 * plan.dt:
        frames.append(final)

    def potential(s: tdse.GridState) -> np.ndarray:
        if scenario.kind is StepKind.INFINITE:
            return np.where(s.grid.x > ctx.v * s.t, math.inf, 0.0)
        return tdse.step_potential(s.grid, s.t, ctx, scenario.kind)

    split = tdse.measure_split_norms(final, ctx.v * final.t)
    meta = {**_meta("simulate", config), "dt": plan.dt, "n_steps": plan.n_steps,
            "n_points": plan.grid.n_points, "final_left_norm": split.left_norm,
            "final_right_norm": split.right_norm}
    if args.format == "json":
        payload = {"meta": meta, "frames": [
            {"t": f.t, "x_min": f.grid.x_min, "x_max": f.grid.x_max, "n_points": f.grid.n_points,
             "re_psi": f.psi.real.tolist(), "im_psi": f.psi.imag.tolist()} for f in frames]}
        text = json.dumps(sio._json_safe(payload)) + "\n"
    else:
        buf = io.StringIO()
        rows = (row for f in frames for row in sio.snapshot_rows(f, potential(f)))
        sio.write_csv(buf, sio.SNAPSHOT_COLUMNS, rows, meta)
        text = buf.getvalue()
    _emit(text, args.out, stdout)
    return EXIT_OK


def _validate(args, config, stdout) -> int:
    try:
        record, report = sio.run_validation(config)
    except NoCollisionError as exc:
        print(f"NoCollision: {exc}", file=sys.stderr)
        return EXIT_NO_COLLISION
    meta = {**_meta("validate", config), "dt": report.dt, "n_steps": report.n_steps,
            "n_points": report.grid.n_points, "passed": report.passed}
    if args.format == "json":
        text = sio.records_to_json(record, meta)
    else:
        buf = io.StringIO()
        sio.write_csv(buf, ("name", "predicted", "measured", "tolerance", "mode", "passed"),
                      record.validation, meta)
        text = buf.getvalue()
    _emit(text, args.out, stdout)
    return EXIT_OK if report.passed else EXIT_VALIDATION


def _sweep(args, sections, stdout) -> int:
    sweep = dict(sections.pop("sweep", {}))
    mode = sweep.pop("mode", "analytic")
    spec = sio.SweepSpec(sio.build_config(sections), tuple(sweep.values()), mode)
    records = sio.run_sweep(spec, workers=args.workers)
    meta = {**_meta("sweep", spec.base), "mode": mode,
            "axes": [f"{a.path}={format(a.lo, 'g')}:{format(a.hi, 'g')}" for a in spec.axes]}
    if args.format == "json":
        text = sio.records_to_json(records, meta)
    else:
        text = sio.records_to_csv(records, meta)
    _emit(text, args.out, stdout)
    failed = any(r.validation and not all(e["passed"] for e in r.validation) for r in records)
    return EXIT_VALIDATION if failed else EXIT_OK


_VALUE_FLAGS = ("--x-range", "--t", "--axis")


def _attach_values(argv: Sequence[str]) -> list[str]:
    """Glue ``--x-range -1:1:0.1`` into ``--x-range=-1:1:0.1``.

    argparse reads a leading minus as a new option, so range values that
    start below zero would otherwise be rejected.
    """
    out: list[str] = []
    tokens = list(argv)
    i = 0
    while i < len(tokens):
        tok = tokens[i]
        if tok in _VALUE_FLAGS and i + 1 < len(tokens) and tokens[i + 1].startswith("-") \
                and not tokens[i + 1].startswith("--"):
            out.append(f"{tok}={tokens[i + 1]}")
            i += 2
            continue
        out.append(tok)
        i += 1
    return out


def cli_main(argv: Optional[Sequence[str]] = None, stdout=None) -> int:
    stdout = stdout or sys.stdout
    parser = build_parser()
    argv = _attach_values(sys.argv[1:] if argv is None else argv)
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_USAGE
    try:
        sections = _merged_sections(args)
        if args.command == "sweep":
            # validate every axis before running anything
            for axis in sections.get("sweep", {}).values():
                if isinstance(axis, sio.SweepAxis):
                    axis.values()
            return _sweep(args, sections, stdout)
        config = sio.build_config(sections)
    except (sio.ConfigError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    try:
        if args.command == "analytic":
            return _analytic(args, config, stdout)
        if args.command == "simulate":
            return _simulate(args, config, stdout)
        return _validate(args, config, stdout)
    except BoundaryContamination as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE


def main() -> None:
    sys.exit(cli_main())


if __name__ == "__main__":
    main()
