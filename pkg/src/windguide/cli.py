"""Command-line front end: scenario files in, deterministic tables out.

Scenario files are YAML documents validated against the schema below.
Angles are in degrees; everything else is SI.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import platform
import sys
from dataclasses import asdict
from pathlib import Path
from typing import Annotated, Dict, Iterable, List, Literal, Optional, Sequence, Tuple, Union

import numpy as np
import yaml
from pydantic import BaseModel, ConfigDict, Field, FiniteFloat, ValidationError, field_validator, model_validator

from . import __version__
from .analysis import (
    SweepCase,
    SweepParam,
    SweepScenario,
    classify_k,
    max_heading,
    pareto_sweep,
    reference_time,
    root_sweep,
)
from .core import (
    MONOMIALS,
    BoundaryConditions,
    ConstantWind,
    CrossTrackShear,
    DivergedBeyondMaxTime,
    GuidanceError,
    LinearWind,
    NoAdmissibleRoot,
    PiecewiseLinearWind,
    ProblemKind,
    SpatialField,
    WindSegment,
    wind_at,
)
from .guidance import GuidanceSolution, energy, solve_intercept, solve_rendezvous, solve_shear
from .polynomial import shear_terminal_velocity
from .sim import Law, SimConfig, TrajectoryLog, run

EXIT_OK, EXIT_VALIDATION, EXIT_NO_SOLUTION, EXIT_DIVERGED = 0, 2, 3, 4

Triple = Tuple[FiniteFloat, FiniteFloat, FiniteFloat]


# Scenario schema ----------------------------------------------------------------


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid", frozen=True)


class Airspeed(_Strict):
    speed: FiniteFloat = Field(ge=0.0)
    heading_deg: FiniteFloat


class Boundary(_Strict):
    r0: Triple
    rf: Triple = (0.0, 0.0, 0.0)
    vg0: Optional[Triple] = None
    initial_airspeed: Optional[Airspeed] = None
    vgf: Optional[Triple] = None

    @model_validator(mode="after")
    def _one_initial_velocity(self):
        if (self.vg0 is None) == (self.initial_airspeed is None):
            raise ValueError("give exactly one of vg0 or initial_airspeed")
        return self


class ConstantWindSpec(_Strict):
    type: Literal["constant"]
    w0: Triple = (0.0, 0.0, 0.0)


class LinearWindSpec(_Strict):
    type: Literal["linear"]
    w0: Triple = (0.0, 0.0, 0.0)
    k: Triple


class ShearWindSpec(_Strict):
    type: Literal["shear"]
    k_shear: FiniteFloat


class SegmentSpec(_Strict):
    t_start: FiniteFloat
    w0: Triple
    k: Triple


class PiecewiseWindSpec(_Strict):
    type: Literal["piecewise"]
    segments: List[SegmentSpec] = Field(min_length=1)


def _monomial_keys(value):
    if isinstance(value, dict):
        return {str(key): v for key, v in value.items()}
    return value


class SpatialWindSpec(_Strict):
    type: Literal["spatial"]
    wx: Dict[Literal[MONOMIALS], FiniteFloat] = Field(default_factory=dict)
    wy: Dict[Literal[MONOMIALS], FiniteFloat] = Field(default_factory=dict)

    _keys = field_validator("wx", "wy", mode="before")(_monomial_keys)


WindSpec = Annotated[
    Union[ConstantWindSpec, LinearWindSpec, ShearWindSpec, PiecewiseWindSpec, SpatialWindSpec],
    Field(discriminator="type"),
]


class SimSpec(_Strict):
    law: Literal["open_loop", "zem_zev", "adaptive_piecewise"] = "open_loop"
    step: FiniteFloat = 0.005
    replan_period: FiniteFloat = 0.05
    t_go_min_fraction: FiniteFloat = 1e-4
    max_time: FiniteFloat = 1000.0
    capture_radius: FiniteFloat = 0.1


class Scenario(_Strict):
    """On-disk scenario: problem kind, weight, boundary values, wind, sim settings."""

    kind: Literal["rendezvous", "intercept"]
    trade_off: FiniteFloat = Field(ge=0.0)
    boundary: Boundary
    wind: WindSpec = ConstantWindSpec(type="constant")
    sim: SimSpec = SimSpec()

    @model_validator(mode="after")
    def _terminal_velocity_matches_kind(self):
        has_vgf = self.boundary.vgf is not None
        if self.kind == "intercept" and has_vgf:
            raise ValueError("boundary.vgf must be omitted for intercept")
        if self.kind == "rendezvous" and not has_vgf and self.wind.type != "shear":
            raise ValueError("boundary.vgf is required for rendezvous")
        return self


def load_scenario(text: str) -> Scenario:
    """Parse and validate YAML text; raises ``ValidationError`` or ``yaml.YAMLError``."""
    data = yaml.safe_load(text)
    return Scenario.model_validate(data if data is not None else {})


def dump_scenario(scenario: Scenario) -> str:
    """Canonical YAML text; ``dump_scenario(load_scenario(dump_scenario(s)))`` is stable."""
    data = scenario.model_dump(mode="json", exclude_none=True)
    return yaml.safe_dump(data, sort_keys=False, default_flow_style=None)


# Scenario -> library objects ------------------------------------------------------


def build_wind(spec) -> object:
    if spec.type == "constant":
        return ConstantWind(spec.w0)
    if spec.type == "linear":
        return LinearWind(spec.w0, spec.k)
    if spec.type == "shear":
        return CrossTrackShear(spec.k_shear)
    if spec.type == "piecewise":
        return PiecewiseLinearWind(tuple(WindSegment(s.t_start, s.w0, s.k) for s in spec.segments))
    return SpatialField(dict(spec.wx), dict(spec.wy))


def build_boundary(scenario: Scenario, wind) -> BoundaryConditions:
    b = scenario.boundary
    if b.vg0 is not None:
        vg0 = np.array(b.vg0, dtype=float)
    else:
        heading = math.radians(b.initial_airspeed.heading_deg)
        va0 = b.initial_airspeed.speed * np.array([math.cos(heading), math.sin(heading), 0.0])
        vg0 = va0 + wind_at(wind, 0.0, b.r0)
    kind = ProblemKind(scenario.kind)
    if kind is ProblemKind.INTERCEPT:
        return BoundaryConditions.intercept(b.r0, b.rf, vg0)
    vgf = b.vgf if b.vgf is not None else shear_terminal_velocity(vg0)
    return BoundaryConditions.rendezvous(b.r0, b.rf, vg0, vgf)


def build_sim_config(spec: SimSpec) -> SimConfig:
    return SimConfig(
        law=Law(spec.law),
        replan_period=spec.replan_period,
        step=spec.step,
        t_go_min_fraction=spec.t_go_min_fraction,
        max_time=spec.max_time,
        capture_radius=spec.capture_radius,
    )


def solve_scenario(scenario: Scenario) -> GuidanceSolution:
    wind = build_wind(scenario.wind)
    bc = build_boundary(scenario, wind)
    if isinstance(wind, CrossTrackShear):
        return solve_shear(bc, wind.k_shear, scenario.trade_off)
    if bc.kind is ProblemKind.RENDEZVOUS:
        return solve_rendezvous(bc, wind, scenario.trade_off)
    return solve_intercept(bc, wind, scenario.trade_off)


# Output helpers -------------------------------------------------------------------


def _clean(value):
    """Convert numpy values to JSON-friendly Python values; non-finite floats become null."""
    if isinstance(value, dict):
        return {k: _clean(v) for k, v in value.items()}
    if isinstance(value, (list, tuple, np.ndarray)):
        return [_clean(v) for v in value]
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        f = float(value)
        return f if math.isfinite(f) else None
    if hasattr(value, "value"):
        return value.value
    return value


def _json(doc) -> str:
    return json.dumps(_clean(doc), indent=2) + "\n"


def _table(columns: Sequence[str], rows: Iterable[Sequence], fmt: str) -> str:
    buf = io.StringIO()
    if fmt == "csv":
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(columns)
        for row in rows:
            writer.writerow([_cell(v) for v in row])
    else:
        for row in rows:
            buf.write(json.dumps(dict(zip(columns, _clean(list(row))))) + "\n")
    return buf.getvalue()


def _cell(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return "1" if value else "0"
    if isinstance(value, (float, np.floating)):
        return repr(float(value))
    if value is None:
        return ""
    return str(value)


class _Output:
    def __init__(self, args):
        self.path: Optional[Path] = Path(args.out) if args.out else None
        self.args = args

    def write(self, text: str, meta: Optional[dict] = None) -> None:
        if self.path is None:
            sys.stdout.write(text)
            return
        self.path.write_text(text)
        sidecar = self.path.with_name(self.path.name + ".meta.json")
        info = {
            "command": self.args.command,
            "scenario": str(self.args.scenario),
            "format": self.args.format,
            "seed": self.args.seed,
            "version": __version__,
            "python": platform.python_version(),
            "numpy": np.__version__,
        }
        info.update(meta or {})
        sidecar.write_text(_json(info))


# Subcommands ----------------------------------------------------------------------


def _solution_doc(sol: GuidanceSolution) -> dict:
    doc = {
        "kind": sol.bc.kind.value,
        "case": sol.case_tag.value,
        "tf": sol.tf,
        "cost": sol.cost,
        "energy": energy(sol),
        "p_r": sol.costates.p_r,
        "p_v0": sol.costates.p_v0,
        "roots": [],
        "classification": None,
    }
    if sol.roots is not None:
        report = sol.roots
        critical = set(report.critical)
        doc["roots"] = [
            {"tf": r.tf, "cost": r.cost, "admissible": r.is_local_min, "critical": r.critical or r.tf in critical}
            for r in report.positive
        ]
    doc["classification"] = _classification(sol)
    return doc


def _classification(sol: GuidanceSolution) -> Optional[dict]:
    offset = sol.bc.r0[0] - sol.bc.rf[0]
    t_r = reference_time(offset, sol.bc.vg0[0])
    if not t_r.valid or sol.at_target:
        return {"t_r": t_r.t_r if t_r.valid else None, "K": None, "category": None}
    cls = classify_k(sol.tf, t_r)
    return {"t_r": t_r.t_r, "K": cls.K, "category": cls.category.value}


def cmd_solve(args, scenario: Scenario) -> int:
    sol = solve_scenario(scenario)
    _Output(args).write(_json(_solution_doc(sol)))
    return EXIT_OK


def cmd_classify(args, scenario: Scenario) -> int:
    sol = solve_scenario(scenario)
    doc = {"tf": sol.tf, **(_classification(sol) or {})}
    _Output(args).write(_json(doc))
    return EXIT_OK


def _summary_lines(log: TrajectoryLog) -> List[str]:
    lines = [f"# {name}={_cell(value)}" for name, value in asdict(log.summary).items()]
    lines += [f"# event: {e}" for e in log.events]
    return lines


def cmd_simulate(args, scenario: Scenario) -> int:
    wind = build_wind(scenario.wind)
    bc = build_boundary(scenario, wind)
    cfg = build_sim_config(scenario.sim)
    log = run(bc, wind, scenario.trade_off, cfg)
    if args.format == "csv":
        text = _table(TrajectoryLog.COLUMNS, log.rows(), "csv") + "\n".join(_summary_lines(log)) + "\n"
    else:
        text = _table(TrajectoryLog.COLUMNS, log.rows(), "json-lines")
        text += json.dumps({"summary": _clean(asdict(log.summary)), "events": list(log.events)}) + "\n"
    _Output(args).write(text, {"law": cfg.law.value, "samples": len(log)})
    return EXIT_OK


def _grid(args) -> List[float]:
    lo, hi, steps = args.min, args.max, args.steps
    if steps < 1 or not (math.isfinite(lo) and math.isfinite(hi)) or hi < lo:
        raise ValueError("grid needs finite --min <= --max and --steps >= 1")
    if steps == 1:
        return [lo]
    if args.log:
        if lo <= 0.0:
            raise ValueError("--log grids need --min > 0")
        return [float(v) for v in np.geomspace(lo, hi, steps)]
    return [float(v) for v in np.linspace(lo, hi, steps)]


def cmd_pareto(args, scenario: Scenario) -> int:
    grid = _grid(args)
    if grid[0] < 0.0:
        raise ValueError("trade-off grid must be non-negative")
    wind = build_wind(scenario.wind)
    bc = build_boundary(scenario, wind)
    points = pareto_sweep(bc, wind, grid)
    columns = ("c_i", "branch", "t_f", "energy", "admissible", "critical")
    rows = [(p.c_i, p.branch, p.t_f, p.energy, p.admissible, p.critical) for p in points]
    _Output(args).write(_table(columns, rows, args.format), {"grid": grid})
    return EXIT_OK


def _sweep_scenario(scenario: Scenario) -> SweepScenario:
    b = scenario.boundary
    if b.vg0 is None:
        raise ValueError("roots sweeps need boundary.vg0")
    offset = np.subtract(b.r0, b.rf)
    if offset[1] != 0.0 or offset[2] != 0.0 or b.vg0[2] != 0.0:
        raise ValueError("roots sweeps need the initial offset along x and planar motion")
    w = scenario.wind
    if w.type == "shear":
        case, k = SweepCase.SHEAR, w.k_shear
    elif w.type in ("constant", "linear"):
        if any(w.w0) or (w.type == "linear" and (w.k[1] or w.k[2])):
            raise ValueError("roots sweeps support only along-track wind acceleration")
        case, k = SweepCase(scenario.kind), (w.k[0] if w.type == "linear" else 0.0)
    else:
        raise ValueError(f"roots sweeps do not support wind type {w.type!r}")
    vgf = tuple(b.vgf) if b.vgf is not None and case is SweepCase.RENDEZVOUS else None
    return SweepScenario(case, float(offset[0]), b.vg0[0], b.vg0[1], scenario.trade_off, k, vgf)


def cmd_roots(args, scenario: Scenario) -> int:
    grid = _grid(args)
    sweep = root_sweep(_sweep_scenario(scenario), SweepParam(args.param), grid)
    columns = ("param", "row", "branch", "t_f", "K")
    rows = []
    bifs = sorted(sweep.bifurcations, key=lambda b: b.param)
    ascending = grid[-1] >= grid[0]
    pending = list(bifs if ascending else reversed(bifs))
    for i, row in enumerate(sweep.rows):
        for j, (t, label) in enumerate(zip(row.roots, row.branches)):
            rows.append((row.param, "root", label, t, row.K[j] if row.K else None))
        nxt = sweep.rows[i + 1].param if i + 1 < len(sweep.rows) else None
        while pending and nxt is not None and min(row.param, nxt) <= pending[0].param <= max(row.param, nxt):
            b = pending.pop(0)
            rows.append((b.param, f"bifurcation {b.count_before}->{b.count_after}", -1, b.t_f, b.K))
    _Output(args).write(_table(columns, rows, args.format), {"grid": grid, "param": args.param})
    return EXIT_OK


_COMMANDS = {
    "solve": cmd_solve,
    "simulate": cmd_simulate,
    "pareto": cmd_pareto,
    "roots": cmd_roots,
    "classify": cmd_classify,
}


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="windguide", description="Optimal guidance in wind.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--out", help="write output here instead of stdout (adds a .meta.json sidecar)")
    common.add_argument("--format", choices=("csv", "json-lines"), default="csv")
    common.add_argument("--seed", type=int, default=None, help="recorded in the sidecar for reproducibility")
    sub = parser.add_subparsers(dest="command", required=True)
    helps = {
        "solve": "optimal flight time, roots, costates and cost",
        "simulate": "integrate the guided trajectory",
        "pareto": "flight time and energy across a trade-off grid",
        "roots": "positive flight-time roots across a parameter grid",
        "classify": "flight time in units of the reference time",
    }
    for name, text in helps.items():
        p = sub.add_parser(name, help=text, parents=[common])
        p.add_argument("scenario", help="YAML scenario file")
        if name in ("pareto", "roots"):
            p.add_argument("--min", type=float, required=True)
            p.add_argument("--max", type=float, required=True)
            p.add_argument("--steps", type=int, required=True)
            p.add_argument("--log", action="store_true", help="logarithmic grid")
        if name == "roots":
            p.add_argument("--param", choices=[p.value for p in SweepParam], default="vgy0")
    return parser


def _existence_hint() -> str:
    rdv = max_heading(ProblemKind.RENDEZVOUS).theta_max_deg
    icp = max_heading(ProblemKind.INTERCEPT).theta_max_deg
    return (
        f"with zero time weight a solution exists only for initial headings within "
        f"{rdv:.0f} deg (rendezvous) or {icp:.0f} deg (intercept) of the line of sight; "
        f"raise trade_off or reduce the heading"
    )


def _format_validation(err: ValidationError) -> str:
    lines = []
    for e in err.errors():
        path = ".".join(str(part) for part in e["loc"]) or "<root>"
        lines.append(f"{path}: {e['msg']}")
    return "\n".join(lines)


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        scenario = load_scenario(Path(args.scenario).read_text())
    except OSError as exc:
        print(f"error: cannot read scenario: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except yaml.YAMLError as exc:
        print(f"error: invalid YAML: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except ValidationError as exc:
        print(f"error: invalid scenario\n{_format_validation(exc)}", file=sys.stderr)
        return EXIT_VALIDATION
    try:
        return _COMMANDS[args.command](args, scenario)
    except NoAdmissibleRoot as exc:
        print(f"error: no admissible flight time ({exc}); {_existence_hint()}", file=sys.stderr)
        return EXIT_NO_SOLUTION
    except DivergedBeyondMaxTime as exc:
        print(f"error: diverged: {exc}", file=sys.stderr)
        return EXIT_DIVERGED
    except (GuidanceError, ValueError, TypeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION


if __name__ == "__main__":
    sys.exit(main())
