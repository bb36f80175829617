"""Scenario configuration, parameter sweeps and result serialization.

Configuration files are flat ``key = value`` lines grouped under
``[section]`` headers::

    [physical]
    v = 0.5
    V0 = 2
    kind = finite

    [incident]
    k1 = 4

    [field_grid]
    x_range = -5:1:0.5
    t = 0, 2

    [tolerances]
    momentum_rel = 0.02

    [sweep]
    mode = analytic
    k1 = 1:5:0.5

Blank lines and lines starting with ``#`` or ``;`` are ignored.
"""

from __future__ import annotations

import concurrent.futures
import csv
import dataclasses
import io
import json
import math
from dataclasses import dataclass
from typing import Any, Iterable, Optional, Sequence

import numpy as np

from movingstep import analytics as an
from movingstep import tdse
from movingstep.analytics import PhysicalContext, RegimeTag, StepKind, StepScenario
from movingstep.errors import NoCollisionError

UNITARITY_TOLERANCE = 1e-12


class ConfigError(ValueError):
    """Malformed configuration text or out-of-range field."""

    def __init__(self, message: str, line: Optional[int] = None, field_name: Optional[str] = None):
        where = []
        if line is not None:
            where.append(f"line {line}")
        if field_name is not None:
            where.append(field_name)
        prefix = ": ".join(where)
        super().__init__(f"{prefix}: {message}" if prefix else message)
        self.line = line
        self.field_name = field_name


# ---------------------------------------------------------------------------
# config types


@dataclass(frozen=True)
class FieldGrid:
    x_min: float
    x_max: float
    x_step: float
    t: tuple[float, ...] = (0.0,)

    def x_values(self) -> np.ndarray:
        return inclusive_range(self.x_min, self.x_max, self.x_step)


@dataclass(frozen=True)
class PacketConfig:
    x0: Optional[float] = None
    sigma_x: float = 10.0


@dataclass(frozen=True)
class RunConfig:
    dt: Optional[float] = None
    n_steps: Optional[int] = None
    t_final: Optional[float] = None
    n_points: int = 8192
    x_min: Optional[float] = None
    x_max: Optional[float] = None
    snapshot_every: Optional[int] = None


@dataclass(frozen=True)
class ScenarioConfig:
    physical: PhysicalContext
    k1: float
    a: float = 1.0
    theta: float = 0.0
    kind: StepKind = StepKind.FINITE
    field_grid: Optional[FieldGrid] = None
    packet: Optional[PacketConfig] = None
    run: Optional[RunConfig] = None
    tolerances: Optional[tdse.Tolerances] = None

    def scenario(self) -> StepScenario:
        return StepScenario(self.physical, self.k1, self.a, self.theta, self.kind)

    def packet_spec(self) -> tdse.PacketSpec:
        packet = self.packet or PacketConfig()
        x0 = packet.x0 if packet.x0 is not None else -8.0 * packet.sigma_x
        return tdse.PacketSpec(x0=x0, k0=self.k1, sigma_x=packet.sigma_x)

    def run_params(self) -> tdse.RunParams:
        run = self.run or RunConfig()
        t_final = run.t_final
        if t_final is None and run.n_steps is not None and run.dt is not None:
            t_final = run.n_steps * run.dt
        return tdse.RunParams(n_points=run.n_points, dt=run.dt, t_final=t_final,
                              x_min=run.x_min, x_max=run.x_max,
                              tolerances=self.tolerances or tdse.Tolerances())


@dataclass(frozen=True)
class SweepAxis:
    path: str
    lo: float
    hi: float
    step: Optional[float] = None
    count: Optional[int] = None

    def values(self) -> np.ndarray:
        if self.hi < self.lo:
            raise ConfigError("empty sweep axis", field_name=self.path)
        if self.count is not None:
            if self.count < 1:
                raise ConfigError("empty sweep axis", field_name=self.path)
            return np.linspace(self.lo, self.hi, self.count)
        return inclusive_range(self.lo, self.hi, self.step)


@dataclass(frozen=True)
class SweepSpec:
    base: ScenarioConfig
    axes: tuple[SweepAxis, ...]
    mode: str = "analytic"

    def __post_init__(self) -> None:
        if not self.axes:
            raise ConfigError("a sweep needs at least one axis")
        if self.mode not in ("analytic", "validate"):
            raise ConfigError(f"unknown sweep mode {self.mode!r}", field_name="mode")


def inclusive_range(lo: float, hi: float, step: float) -> np.ndarray:
    """``lo, lo + step, ...`` up to and including ``hi`` (within round-off)."""
    if step is None or not step > 0:
        raise ConfigError("step must be > 0")
    if hi < lo:
        raise ConfigError("empty sweep axis")
    n = int(math.floor((hi - lo) / step + 1e-9)) + 1
    return lo + step * np.arange(n)


# ---------------------------------------------------------------------------
# parsing

_KINDS = {"finite": StepKind.FINITE, "infinite": StepKind.INFINITE}


def _float(text: str) -> float:
    value = float(text)
    if not math.isfinite(value):
        raise ValueError("must be finite")
    return value


def _positive(text: str) -> float:
    value = _float(text)
    if value <= 0:
        raise ValueError("must be > 0")
    return value


def _nonneg(text: str) -> float:
    value = _float(text)
    if value < 0:
        raise ValueError("must be >= 0")
    return value


def _int_at_least(minimum: int):
    def convert(text: str) -> int:
        value = int(text)
        if value < minimum:
            raise ValueError(f"must be >= {minimum}")
        return value
    return convert


def _kind(text: str) -> StepKind:
    try:
        return _KINDS[text.strip().lower()]
    except KeyError:
        raise ValueError("must be 'finite' or 'infinite'") from None


def _float_list(text: str) -> tuple[float, ...]:
    values = tuple(_float(part) for part in text.replace(",", " ").split())
    if not values:
        raise ValueError("needs at least one value")
    return values


def parse_range(text: str) -> tuple[float, float, float]:
    """``min:max:step`` with ``step > 0``."""
    parts = text.split(":")
    if len(parts) != 3:
        raise ValueError("expected min:max:step")
    lo, hi, step = (_float(p) for p in parts)
    if step <= 0:
        raise ValueError("step must be > 0")
    return lo, hi, step


def _domain(text: str) -> tuple[float, float]:
    parts = text.split(":")
    if len(parts) != 2:
        raise ValueError("expected min:max")
    lo, hi = (_float(p) for p in parts)
    if not lo < hi:
        raise ValueError("min must be < max")
    return lo, hi


def parse_axis(path: str, text: str) -> SweepAxis:
    """``min:max:step`` or ``min:max:count=N``."""
    canonical = _canonical_path(path)
    parts = text.split(":")
    if len(parts) != 3:
        raise ValueError("expected min:max:step or min:max:count=N")
    lo, hi = _float(parts[0]), _float(parts[1])
    last = parts[2].strip()
    if last.startswith("count="):
        return SweepAxis(canonical, lo, hi, count=int(last[len("count="):]))
    step = _float(last)
    if step <= 0:
        raise ValueError("step must be > 0")
    return SweepAxis(canonical, lo, hi, step=step)


_SCHEMA = {
    "physical": {"hbar": _positive, "mass": _positive, "v": _nonneg, "V0": _nonneg, "kind": _kind},
    "incident": {"k1": _positive, "a": _positive, "theta": _float},
    "field_grid": {"x_range": parse_range, "t": _float_list},
    "packet": {"x0": _float, "sigma_x": _positive},
    "run": {
        "dt": _positive,
        "n_steps": _int_at_least(1),
        "t_final": _positive,
        "n_points": _int_at_least(16),
        "domain": _domain,
        "snapshot_every": _int_at_least(1),
    },
    "tolerances": {f.name: _positive for f in dataclasses.fields(tdse.Tolerances)},
}

_SWEEPABLE = {
    f"{section}.{key}"
    for section, keys in _SCHEMA.items()
    for key, conv in keys.items()
    if section != "tolerances" and conv in (_positive, _nonneg, _float)
}
_SHORT_PATHS = {path.split(".", 1)[1]: path for path in _SWEEPABLE}


def _canonical_path(path: str) -> str:
    path = path.strip()
    if path in _SWEEPABLE:
        return path
    if path in _SHORT_PATHS:
        return _SHORT_PATHS[path]
    raise ValueError(f"unknown sweep parameter {path!r}")


def _v_message(exc: ValueError, key: str) -> str:
    return f"{key} {exc}"


def parse_sections(text: str) -> dict[str, dict[str, Any]]:
    """Parse and type-check each line; no defaults and no cross-field checks."""
    sections: dict[str, dict[str, Any]] = {}
    current: Optional[str] = None
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.strip()
        if not line or line.startswith(("#", ";")):
            continue
        if line.startswith("["):
            if not line.endswith("]"):
                raise ConfigError("unterminated section header", line=lineno)
            current = line[1:-1].strip()
            if current not in _SCHEMA and current != "sweep":
                raise ConfigError(f"unknown section [{current}]", line=lineno)
            sections.setdefault(current, {})
            continue
        if "=" not in line:
            raise ConfigError("expected 'key = value'", line=lineno)
        if current is None:
            raise ConfigError("key outside of any [section]", line=lineno)
        key, value = (part.strip() for part in line.split("=", 1))
        name = f"{current}.{key}"
        if key in sections[current]:
            raise ConfigError("duplicate key", line=lineno, field_name=name)
        try:
            if current == "sweep":
                if key == "mode":
                    if value not in ("analytic", "validate"):
                        raise ValueError("must be 'analytic' or 'validate'")
                    parsed: Any = value
                else:
                    parsed = parse_axis(key, value)
            else:
                convert = _SCHEMA[current].get(key)
                if convert is None:
                    raise ConfigError("unknown key", line=lineno, field_name=name)
                parsed = convert(value)
        except ConfigError:
            raise
        except ValueError as exc:
            raise ConfigError(_v_message(exc, key), line=lineno, field_name=name) from None
        sections[current][key] = parsed
    return sections


def build_config(sections: dict[str, dict[str, Any]]) -> ScenarioConfig:
    """Apply defaults (hbar = m = 1, a = 1, theta = 0) and assemble a config."""
    phys = sections.get("physical", {})
    inc = sections.get("incident", {})
    if "k1" not in inc:
        raise ConfigError("missing required key", field_name="incident.k1")
    physical = PhysicalContext(
        hbar=phys.get("hbar", 1.0), mass=phys.get("mass", 1.0), v=phys.get("v", 0.0), V0=phys.get("V0", 0.0)
    )

    field_grid = None
    if "field_grid" in sections:
        fg = sections["field_grid"]
        if "x_range" not in fg:
            raise ConfigError("missing required key", field_name="field_grid.x_range")
        lo, hi, step = fg["x_range"]
        field_grid = FieldGrid(lo, hi, step, fg.get("t", (0.0,)))

    packet = None
    if "packet" in sections:
        packet = PacketConfig(**sections["packet"])

    run = None
    if "run" in sections:
        r = dict(sections["run"])
        domain = r.pop("domain", None)
        if domain is not None:
            r["x_min"], r["x_max"] = domain
        run = RunConfig(**r)

    tolerances = None
    if "tolerances" in sections:
        tolerances = tdse.Tolerances(**sections["tolerances"])

    return ScenarioConfig(
        physical=physical,
        k1=inc["k1"],
        a=inc.get("a", 1.0),
        theta=inc.get("theta", 0.0),
        kind=phys.get("kind", StepKind.FINITE),
        field_grid=field_grid,
        packet=packet,
        run=run,
        tolerances=tolerances,
    )


def parse_config(text: str) -> ScenarioConfig:
    return build_config(parse_sections(text))


def parse_sweep(text: str) -> SweepSpec:
    sections = parse_sections(text)
    sweep = dict(sections.pop("sweep", {}))
    mode = sweep.pop("mode", "analytic")
    return SweepSpec(build_config(sections), tuple(sweep.values()), mode)


def _fmt(value: float) -> str:
    return repr(float(value))


def serialize_config(config: ScenarioConfig) -> str:
    """Inverse of :func:`parse_config`; floats are written with ``repr``."""
    p = config.physical
    lines = [
        "[physical]",
        f"hbar = {_fmt(p.hbar)}",
        f"mass = {_fmt(p.mass)}",
        f"v = {_fmt(p.v)}",
        f"V0 = {_fmt(p.V0)}",
        f"kind = {config.kind.value}",
        "",
        "[incident]",
        f"k1 = {_fmt(config.k1)}",
        f"a = {_fmt(config.a)}",
        f"theta = {_fmt(config.theta)}",
    ]
    if config.field_grid is not None:
        fg = config.field_grid
        lines += [
            "",
            "[field_grid]",
            f"x_range = {_fmt(fg.x_min)}:{_fmt(fg.x_max)}:{_fmt(fg.x_step)}",
            "t = " + ", ".join(_fmt(t) for t in fg.t),
        ]
    if config.packet is not None:
        lines += ["", "[packet]"]
        if config.packet.x0 is not None:
            lines.append(f"x0 = {_fmt(config.packet.x0)}")
        lines.append(f"sigma_x = {_fmt(config.packet.sigma_x)}")
    if config.run is not None:
        run = config.run
        lines += ["", "[run]", f"n_points = {run.n_points}"]
        for key in ("dt", "t_final"):
            value = getattr(run, key)
            if value is not None:
                lines.append(f"{key} = {_fmt(value)}")
        for key in ("n_steps", "snapshot_every"):
            value = getattr(run, key)
            if value is not None:
                lines.append(f"{key} = {value}")
        if run.x_min is not None and run.x_max is not None:
            lines.append(f"domain = {_fmt(run.x_min)}:{_fmt(run.x_max)}")
    if config.tolerances is not None:
        lines += ["", "[tolerances]"]
        for f in dataclasses.fields(config.tolerances):
            value = getattr(config.tolerances, f.name)
            if value is not None:
                lines.append(f"{f.name} = {_fmt(value)}")
    return "\n".join(lines) + "\n"


def with_parameter(config: ScenarioConfig, path: str, value: float) -> ScenarioConfig:
    """Copy of ``config`` with one sweepable parameter replaced."""
    section, key = _canonical_path(path).split(".")
    if section == "physical":
        return dataclasses.replace(config, physical=dataclasses.replace(config.physical, **{key: value}))
    if section == "incident":
        return dataclasses.replace(config, **{key: value})
    if section == "packet":
        packet = config.packet or PacketConfig()
        return dataclasses.replace(config, packet=dataclasses.replace(packet, **{key: value}))
    if section == "run":
        run = config.run or RunConfig()
        return dataclasses.replace(config, run=dataclasses.replace(run, **{key: value}))
    raise ConfigError(f"parameter {path!r} cannot be swept")


# ---------------------------------------------------------------------------
# results


@dataclass
class ResultRecord:
    scenario: dict
    regime: str
    critical_k1: Optional[float] = None
    k2: Optional[float] = None
    k3_gamma: Optional[float] = None
    k3_beta: Optional[float] = None
    b_over_a: Optional[float] = None
    c_over_a: Optional[float] = None
    R_boundary: Optional[float] = None
    T_boundary: Optional[float] = None
    effective_height: Optional[float] = None
    flags: tuple = ()
    reason: Optional[str] = None
    field_samples: Optional[list] = None
    validation: Optional[list] = None

    def to_dict(self) -> dict:
        d = dataclasses.asdict(self)
        d["flags"] = list(self.flags)
        return d


FIELD_COLUMNS = ("x", "t", "region", "density", "current", "R_or_T")


def scenario_echo(config: ScenarioConfig) -> dict:
    p = config.physical
    return {"hbar": p.hbar, "mass": p.mass, "v": p.v, "V0": p.V0, "k1": config.k1,
            "a": config.a, "theta": config.theta, "kind": config.kind.value}


def field_table(sol: an.AnalyticSolution, grid: FieldGrid) -> list[dict]:
    """Density, current and the local R (region A) or T (region B) on the field grid."""
    rows = []
    xs = grid.x_values()
    v = sol.context.v
    for t in grid.t:
        in_a = xs <= v * t
        density = np.atleast_1d(an.density_field(sol, xs, t))
        current = np.atleast_1d(an.current_field(sol, xs, t))
        ratio = np.empty_like(xs)
        if sol.is_infinite:
            ratio[in_a] = an.INFINITE_STEP_REFLECTIVITY
            ratio[~in_a] = 0.0
        else:
            if in_a.any():
                ratio[in_a] = an.reflectivity(sol, xs[in_a], t)
            if (~in_a).any():
                ratio[~in_a] = an.transmissivity(sol, xs[~in_a], t)
        for i, x in enumerate(xs):
            rows.append({"x": float(x), "t": float(t), "region": "A" if in_a[i] else "B",
                         "density": float(density[i]), "current": float(current[i]),
                         "R_or_T": float(ratio[i])})
    return rows


def run_analytic(config: ScenarioConfig) -> ResultRecord:
    """Closed-form record for one scenario; NoCollision yields a record with a reason."""
    echo = scenario_echo(config)
    scenario = config.scenario()
    regime = an.classify_regime(scenario)
    finite = scenario.kind is StepKind.FINITE
    critical = regime.critical_k1 if finite else None
    height = regime.effective_height if finite else None
    if regime.tag is RegimeTag.NO_COLLISION:
        return ResultRecord(echo, regime.tag.value, critical_k1=critical, effective_height=height,
                            reason="k1 <= m v / hbar: the incident wave never reaches the step")
    sol = an.solve(scenario)
    record = ResultRecord(echo, regime.tag.value, critical_k1=critical,
                          k2=sol.reflected.wavenumber.real, effective_height=height, flags=sol.flags)
    if sol.is_infinite:
        record.b_over_a = -1.0
        record.R_boundary = an.INFINITE_STEP_REFLECTIVITY
        record.T_boundary = 0.0
    else:
        k3 = sol.transmitted.wavenumber
        record.k3_gamma, record.k3_beta = k3.real, k3.imag
        record.b_over_a, record.c_over_a = sol.ratios.b_over_a, sol.ratios.c_over_a
        record.R_boundary, record.T_boundary = an.boundary_values(sol)
        residual = an.boundary_unitarity(sol)
        if residual > UNITARITY_TOLERANCE:
            raise ArithmeticError(f"boundary unitarity violated by {residual:.3g}")
    if config.field_grid is not None:
        record.field_samples = field_table(sol, config.field_grid)
    return record


def run_validation(config: ScenarioConfig) -> tuple[ResultRecord, tdse.ValidationReport]:
    record = run_analytic(config)
    if record.regime == RegimeTag.NO_COLLISION.value:
        raise NoCollisionError(record.reason)
    report = tdse.validate_scenario(config.scenario(), config.packet_spec(), config.run_params())
    record.validation = [dataclasses.asdict(e) for e in report.entries]
    return record, report


def _sweep_point(args: tuple[ScenarioConfig, str]) -> ResultRecord:
    config, mode = args
    try:
        if mode == "validate":
            try:
                return run_validation(config)[0]
            except NoCollisionError:
                return run_analytic(config)
        return run_analytic(config)
    except Exception as exc:  # recorded, never aborts the sweep
        regime = an.classify_regime(config.scenario()).tag.value
        return ResultRecord(scenario_echo(config), regime, reason=f"error: {exc}")


def sweep_points(spec: SweepSpec) -> list[tuple[dict, Optional[ScenarioConfig], Optional[str]]]:
    """Row-major grid over the axes: ``(axis values, config or None, error)``."""
    grids = [axis.values() for axis in spec.axes]
    points = []
    for index in np.ndindex(*(len(g) for g in grids)):
        values = {axis.path: float(g[i]) for axis, g, i in zip(spec.axes, grids, index)}
        config = spec.base
        try:
            for path, value in values.items():
                config = with_parameter(config, path, value)
            if config.field_grid is not None:
                config = dataclasses.replace(config, field_grid=None)
            config.scenario()
        except ValueError as exc:
            points.append((values, None, str(exc)))
            continue
        points.append((values, config, None))
    return points


def run_sweep(spec: SweepSpec, workers: int = 1) -> list[ResultRecord]:
    """One record per grid point in row-major order; failures become records."""
    points = sweep_points(spec)
    jobs = [(config, spec.mode) for _, config, err in points if config is not None]
    if workers > 1:
        with concurrent.futures.ProcessPoolExecutor(max_workers=workers) as pool:
            results = iter(list(pool.map(_sweep_point, jobs)))
    else:
        results = iter([_sweep_point(job) for job in jobs])
    records = []
    for values, config, err in points:
        if config is None:
            echo = scenario_echo(spec.base)
            echo.update({path.split(".")[1]: value for path, value in values.items()})
            records.append(ResultRecord(echo, "Invalid", reason=err))
        else:
            records.append(next(results))
    return records


# ---------------------------------------------------------------------------
# output


def format_value(value: Any) -> str:
    """CSV cell: floats in 17-significant-digit scientific notation."""
    if value is None:
        return ""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (float, np.floating)):
        return format(float(value), ".16e")
    if isinstance(value, (tuple, list)):
        return ";".join(format_value(v) for v in value)
    return str(value)


def _meta_line(meta: dict) -> str:
    return "# " + " ".join(f"{k}={format_value(v)}" for k, v in meta.items())


def write_csv(stream, columns: Sequence[str], rows: Iterable[dict], meta: dict) -> None:
    stream.write(_meta_line(meta) + "\n")
    writer = csv.writer(stream, lineterminator="\n")
    writer.writerow(columns)
    for row in rows:
        writer.writerow([format_value(row.get(col)) for col in columns])


RECORD_COLUMNS = ("hbar", "mass", "v", "V0", "k1", "a", "theta", "kind", "regime", "critical_k1",
                  "k2", "k3_gamma", "k3_beta", "b_over_a", "c_over_a", "R_boundary", "T_boundary",
                  "effective_height", "flags", "reason")


def _record_row(record: ResultRecord) -> dict:
    row = dict(record.scenario)
    for key in RECORD_COLUMNS[8:]:
        row[key] = getattr(record, key)
    return row


def records_to_csv(records: Sequence[ResultRecord], meta: dict) -> str:
    buf = io.StringIO()
    columns = list(RECORD_COLUMNS)
    if any(r.validation for r in records):
        columns.append("validation_passed")
    rows = []
    for record in records:
        row = _record_row(record)
        if record.validation is not None:
            row["validation_passed"] = all(e["passed"] for e in record.validation)
        rows.append(row)
    write_csv(buf, columns, rows, meta)
    return buf.getvalue()


def field_table_to_csv(record: ResultRecord, meta: dict) -> str:
    buf = io.StringIO()
    summary = {**meta, "regime": record.regime, "R_boundary": record.R_boundary,
               "T_boundary": record.T_boundary}
    write_csv(buf, FIELD_COLUMNS, record.field_samples or [], summary)
    return buf.getvalue()


def _json_safe(obj):
    if isinstance(obj, float) and not math.isfinite(obj):
        return None
    if isinstance(obj, dict):
        return {k: _json_safe(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_json_safe(v) for v in obj]
    if isinstance(obj, np.generic):
        return _json_safe(obj.item())
    return obj


def records_to_json(records, meta: Optional[dict] = None) -> str:
    single = isinstance(records, ResultRecord)
    payload = records.to_dict() if single else [r.to_dict() for r in records]
    if meta is not None:
        payload = {"meta": meta, "records" if not single else "record": payload}
    return json.dumps(_json_safe(payload), indent=2, sort_keys=False) + "\n"


SNAPSHOT_COLUMNS = ("t", "x", "re_psi", "im_psi", "V")


def snapshot_rows(state: tdse.GridState, V: np.ndarray) -> list[dict]:
    x = state.grid.x
    return [{"t": state.t, "x": float(x[i]), "re_psi": float(state.psi[i].real),
             "im_psi": float(state.psi[i].imag), "V": float(V[i])} for i in range(x.size)]
