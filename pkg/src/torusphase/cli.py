"""``torusphase`` command-line front end.

Exit codes: 0 success, 2 invalid input, 3 numerical failure, 4 I/O failure.
"""

from __future__ import annotations

import argparse
import csv
import dataclasses
import io
import json
import math
import sys
import warnings
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import __version__
from . import classical_phase as cp
from . import dynamics_sim as dyn
from . import geometry as geo
from . import quantum_phase as qp
from .errors import NumericsError, TorusPhaseError, ValidationError
from .numerics import DEFAULT_QUADRATURE

COMMANDS = ("hannay", "simulate", "berry", "spectrum", "compare", "sweep")
SWEEP_PARAMS = ("c", "a", "theta0", "phi0", "p", "q", "n", "epsilon", "sigma")
INTEGER_PARAMS = ("p", "q", "n")
ANGLE_KEYS = {
    "angle",
    "angle_analytic",
    "angle_numeric",
    "analytic_angle",
    "classical_angle",
    "line_integral_angle",
    "hannay_from_berry",
}
SIG_DIGITS = 15

EXIT_OK, EXIT_VALIDATION, EXIT_NUMERICS, EXIT_IO = 0, 2, 3, 4

TOLERANCES = {
    "quadrature_rel_tol": DEFAULT_QUADRATURE.rel_tol,
    "quadrature_panels": DEFAULT_QUADRATURE.panels,
    "eigen_cluster_tol": 1e-8,
    "degeneracy_flag": qp.DEGENERACY_FLAG,
    "adiabatic_warn_epsilon": dyn.ADIABATIC_WARN_EPSILON,
}
ANHOLONOMY_NOTE = "anholonomy is the raw line integral of (w x r) . dr per unit angular speed; anholonomy_per_2pi divides it by 2 pi"


@dataclass
class RunSpec:
    command: str = "hannay"
    loop: str = "toroidal"
    c: float = 2.0
    a: float = 1.0
    theta0: float = 0.0
    phi0: float = 0.0
    p: int = 2
    q: int = 3
    axis: str = "z"
    n1: int | None = None
    n2: int | None = None
    n: int = 1
    hbar: float = 1.0
    grid: int = 2048
    k: int = 6
    epsilon: float = 1e-2
    omega_max: float | None = None
    winding: float = 2 * math.pi
    protocol: str = "sin2"
    p0: float = 1.0
    steps_per_circuit: int = 64
    approx_length: bool = False
    omega_start_nonzero: bool = False
    # presentation only; not echoed
    degrees: bool = field(default=False, metadata={"echo": False})
    format: str = field(default="json", metadata={"echo": False})
    out: str | None = field(default=None, metadata={"echo": False})
    trajectory: str | None = field(default=None, metadata={"echo": False})

    def echo(self) -> dict:
        return {f.name: getattr(self, f.name) for f in dataclasses.fields(self) if f.metadata.get("echo", True)}

    @classmethod
    def from_echo(cls, data: dict) -> "RunSpec":
        names = {f.name for f in dataclasses.fields(cls)}
        return cls(**{k: v for k, v in data.items() if k in names})

    # validated domain objects -------------------------------------------------
    def shape(self) -> geo.TorusShape:
        return geo.TorusShape(self.c, self.a)

    def loop_spec(self) -> geo.LoopSpec:
        if self.loop == "toroidal":
            return geo.LoopSpec.toroidal(self.theta0)
        if self.loop == "poloidal":
            return geo.LoopSpec.poloidal(self.phi0)
        if self.loop == "knot":
            return geo.LoopSpec.knot(self.p, self.q)
        raise ValidationError(f"--loop must be one of {geo.LOOP_KINDS}", "loop")

    def rotation(self) -> cp.RotationAxis:
        if self.n1 is not None or self.n2 is not None:
            return cp.RotationAxis.from_windings(self.n1 or 0, self.n2 or 0, 0)
        return cp.RotationAxis.about(self.axis)

    def quantum(self) -> qp.QuantumConfig:
        return qp.QuantumConfig(self.hbar, self.n)


@dataclass
class SweepSpec:
    param: str
    start: float
    stop: float
    steps: int
    template: RunSpec
    exclude_end: bool = False
    jobs: int = 1
    scale: str = "linear"

    def values(self) -> list:
        if self.param not in SWEEP_PARAMS:
            raise ValidationError(f"--param must be one of {SWEEP_PARAMS}", "param")
        if self.steps < 2:
            raise ValidationError("--steps must be >= 2", "steps")
        if self.template.command == "sweep":
            raise ValidationError("nested sweeps are not supported", "command")
        if self.scale == "log":
            if not (self.start > 0 and self.stop > 0):
                raise ValidationError("a log sweep needs positive --from and --to", "from")
            vals = np.geomspace(self.start, self.stop, self.steps, endpoint=not self.exclude_end)
        else:
            vals = np.linspace(self.start, self.stop, self.steps, endpoint=not self.exclude_end)
        if self.param in INTEGER_PARAMS:
            if np.any(np.abs(vals - np.round(vals)) > 1e-9):
                raise ValidationError(f"integer parameter {self.param} needs an integer grid", "steps")
            return [int(round(v)) for v in vals]
        return [float(v) for v in vals]

    def row_spec(self, value) -> RunSpec:
        spec = dataclasses.replace(self.template)
        if self.param == "sigma":
            spec.a = spec.c / value if value else math.inf
        else:
            setattr(spec, self.param, value)
        return spec


# number formatting ------------------------------------------------------------
def _clean(obj):
    if isinstance(obj, dict):
        return {k: _clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple, np.ndarray)):
        return [_clean(v) for v in obj]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        if not math.isfinite(x):
            return None
        return float(f"{x:.{SIG_DIGITS}g}")
    return obj


def _exact(obj):
    """Like :func:`_clean` but without rounding, so echoed inputs parse back exactly."""
    if isinstance(obj, dict):
        return {k: _exact(v) for k, v in obj.items()}
    if isinstance(obj, float):
        return obj if math.isfinite(obj) else None
    return obj


def _to_degrees(result: dict) -> dict:
    return {k: (math.degrees(v) if k in ANGLE_KEYS and isinstance(v, float) else v) for k, v in result.items()}


def _rel_diff(x: float, ref: float) -> float:
    return abs(x - ref) / abs(ref) if ref != 0 else abs(x - ref)


# commands ------------------------------------------------------------------
def cmd_hannay(spec: RunSpec) -> dict:
    loop, shape, rot = spec.loop_spec(), spec.shape(), spec.rotation()
    res = cp.hannay_angle_numeric(loop, shape, rot)
    analytic = cp.hannay_angle_analytic(loop, shape, rot, approx_length=spec.approx_length)
    return {
        "loop": _loop_record(loop),
        "shape": {"c": shape.c, "a": shape.a},
        "length": res.length,
        "areas": [float(x) for x in res.areas],
        "anholonomy": res.anholonomy_integral,
        "anholonomy_per_2pi": res.anholonomy_integral / (2 * math.pi),
        "displacement": res.displacement,
        "angle_analytic": analytic,
        "angle_numeric": res.angle,
        "rel_diff": _rel_diff(res.angle, analytic),
    }


def _loop_record(loop: geo.LoopSpec) -> dict:
    if loop.kind == "toroidal":
        return {"kind": "toroidal", "theta0": loop.theta0}
    if loop.kind == "poloidal":
        return {"kind": "poloidal", "phi0": loop.phi0}
    return {"kind": "knot", "p": loop.p, "q": loop.q}


def build_protocol(spec: RunSpec, length: float):
    if spec.p0 == 0 or not math.isfinite(spec.p0):
        raise ValidationError("--p0 must be finite and nonzero", "p0")
    if spec.protocol not in dyn.PROFILES:
        raise ValidationError(f"--protocol must be one of {dyn.PROFILES}", "protocol")
    if spec.omega_max is not None:
        peak = spec.omega_max
        if not peak > 0:
            raise ValidationError("--omega-max must be positive", "omega-max")
    else:
        if not spec.epsilon > 0:
            raise ValidationError("--epsilon must be positive", "epsilon")
        peak = 2 * math.pi * abs(spec.p0) * spec.epsilon / length
    if spec.winding < 0:
        raise ValidationError("--winding must be non-negative", "winding")
    if spec.omega_start_nonzero:
        # constructing the protocol raises ProtocolError: omega(0) must vanish
        return dyn.RotationProtocol(spec.axis, peak, 1.0, spec.protocol, omega_start=0.1 * peak)
    if spec.winding == 0:
        factor = 0.5 if spec.protocol == "sin2" else 0.75
        return dyn.RotationProtocol.still(2 * math.pi / (peak * factor), spec.axis)
    if spec.n1 is not None or spec.n2 is not None:
        segments = []
        for n_i, axis in ((spec.n1 or 0, "x"), (spec.n2 or 0, "y")):
            if int(n_i) != n_i:
                raise ValidationError("--n1/--n2 must be integers", "n1")
            if n_i:
                vec = math.copysign(1.0, n_i) * geo.unit_axis(axis)
                segments.append(dyn.RotationProtocol.for_winding(vec, peak, spec.winding * abs(n_i), spec.protocol))
        if not segments:
            raise ValidationError("--n1 and --n2 are both zero", "n1")
        return dyn.ProtocolSchedule(segments)
    return dyn.RotationProtocol.for_winding(spec.axis, peak, spec.winding, spec.protocol)


def cmd_simulate(spec: RunSpec) -> dict:
    loop, shape = spec.loop_spec(), spec.shape()
    length = geo.arc_length(loop, shape)
    proto = build_protocol(spec, length)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        sim = dyn.simulate(
            loop, shape, proto, spec.p0, steps_per_circuit=spec.steps_per_circuit, keep_trajectory=spec.trajectory is not None
        )
    analytic = dyn.analytic_angle_for(loop, shape, proto) if dyn._as_schedule(proto).peak > 0 else 0.0
    predicted = dyn.averaged_shift_prediction(loop, shape, proto)
    if spec.trajectory is not None:
        _write_text(spec.trajectory, _csv_text(["t", "s", "p", "omega"], sim.trajectory_rows()))
    return {
        "shift": sim.shift,
        "angle": sim.angle,
        "epsilon": sim.adiabaticity,
        "analytic_angle": analytic,
        "rel_error": _rel_diff(sim.angle, analytic),
        "predicted_shift": predicted,
        "length": sim.length,
        "duration": sim.final.t,
    }


def cmd_berry(spec: RunSpec) -> dict:
    loop, shape, rot, qc = spec.loop_spec(), spec.shape(), spec.rotation(), spec.quantum()
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        analytic = qp.berry_phase_analytic(loop, shape, qc, rot)
    numeric = qp.berry_phase_numeric(loop, shape, qc, rot)
    return {
        "n": qc.n,
        "gamma_analytic": analytic,
        "gamma_numeric": numeric,
        "rel_diff": _rel_diff(numeric, analytic),
    }


def cmd_spectrum(spec: RunSpec) -> dict:
    shape = spec.shape()
    geo.LoopSpec.knot(spec.p, spec.q)
    prob = qp.KnotQuantumProblem(shape, spec.p, spec.q, spec.hbar, spec.grid)
    res = qp.knot_spectrum(prob, spec.k)
    levels = []
    for n in range(1, (len(res.energies) - 1) // 2 + 1):
        thin = qp.knot_energy_thin(shape, spec.p, spec.q, n, spec.hbar)
        e = res.level(n)
        levels.append({"n": n, "energy": e, "thin_torus": thin, "rel_dev": _rel_diff(e, thin), "pair_gap": res.pair_gap(n)})
    return {
        "sigma": shape.sigma,
        "grid": spec.grid,
        "energies": [float(x) for x in res.energies],
        "levels": levels,
        "degeneracy_pairs": [list(p) for p in res.degeneracy_pairs],
    }


def cmd_compare(spec: RunSpec) -> dict:
    loop, shape, rot, qc = spec.loop_spec(), spec.shape(), spec.rotation(), spec.quantum()
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        res = qp.hannay_from_berry(loop, shape, qc, rot)
    out = res.as_dict()
    if loop.kind == "poloidal":
        out["c_over_a"] = shape.sigma
        out["note"] = f"poloidal Berry/Hannay mismatch: ratio {res.ratio:.6g} vs c/a = {shape.sigma:.6g}"
    elif loop.kind == "knot":
        out["note"] = "knot classical_angle is the halved closed form; line_integral_angle is the full line-integral value"
    return out


def _flatten(result: dict, prefix: str = "") -> dict:
    flat = {}
    for k, v in result.items():
        key = f"{prefix}{k}"
        if isinstance(v, dict):
            flat.update(_flatten(v, key + "_"))
        elif isinstance(v, list) and len(v) == 3 and all(isinstance(x, (int, float)) for x in v) and k == "areas":
            flat.update({f"{key}_{ax}": x for ax, x in zip("xyz", v)})
        elif isinstance(v, list):
            flat[key] = json.dumps(_clean(v))
        else:
            flat[key] = v
    return flat


DISPATCH = {
    "hannay": cmd_hannay,
    "simulate": cmd_simulate,
    "berry": cmd_berry,
    "spectrum": cmd_spectrum,
    "compare": cmd_compare,
}


def run(spec: RunSpec) -> dict:
    if spec.command not in DISPATCH:
        raise ValidationError(f"unknown command {spec.command!r}", "command")
    result = DISPATCH[spec.command](spec)
    if spec.degrees:
        result = _to_degrees(result)
    return result


def _sweep_row(args):
    sweep, value = args
    try:
        return value, run(sweep.row_spec(value)), None
    except TorusPhaseError as exc:
        return value, None, exc


def cmd_sweep(sweep: SweepSpec) -> tuple[list[str], list[list], int]:
    """Run the nested command on every grid value; rows come back in grid order."""
    values = sweep.values()
    tasks = [(sweep, v) for v in values]
    if sweep.jobs > 1:
        with ProcessPoolExecutor(max_workers=sweep.jobs) as pool:
            outcomes = list(pool.map(_sweep_row, tasks))
    else:
        outcomes = [_sweep_row(t) for t in tasks]
    fields: list[str] = []
    for _, res, _ in outcomes:
        if res is not None:
            fields = [k for k in _flatten(_clean(res))]
            break
    header = [sweep.param, *(f"{f}_reported" if f == sweep.param else f for f in fields), "error"]
    rows = []
    for value, res, err in outcomes:
        flat = _flatten(_clean(res)) if res is not None else {}
        rows.append([value, *[flat.get(f, "") for f in fields], f"{type(err).__name__}: {err}" if err else ""])
    errors = [err for _, _, err in outcomes if err is not None]
    if len(errors) < len(outcomes):
        code = EXIT_OK
    elif all(isinstance(e, ValidationError) for e in errors):
        code = EXIT_VALIDATION
    else:
        code = EXIT_NUMERICS
    return header, rows, code


# output ----------------------------------------------------------------------
def _csv_text(header, rows) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    for row in rows:
        writer.writerow([_fmt_cell(x) for x in row])
    return buf.getvalue()


def _fmt_cell(x):
    if isinstance(x, float):
        return "" if not math.isfinite(x) else repr(float(f"{x:.{SIG_DIGITS}g}"))
    return x


def _write_text(path: str | None, text: str):
    if path is None or path == "-":
        sys.stdout.write(text)
        return
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)


def render(spec: RunSpec, result: dict) -> str:
    if spec.format == "csv":
        flat = _flatten(_clean(result))
        return _csv_text(list(flat), [list(flat.values())])
    meta = {"version": __version__, "tolerances": TOLERANCES, "angle_unit": "degrees" if spec.degrees else "radians"}
    if spec.command == "hannay":
        meta["anholonomy_normalization"] = ANHOLONOMY_NOTE
    doc = {"input": _exact(spec.echo()), "result": _clean(result), "meta": _clean(meta)}
    return json.dumps(doc, indent=2) + "\n"


# argument parsing -------------------------------------------------------------
def _add_common(p: argparse.ArgumentParser):
    d = RunSpec()
    p.add_argument("--loop", choices=geo.LOOP_KINDS, default=d.loop)
    p.add_argument("--c", type=float, default=d.c, help="toroidal circle radius")
    p.add_argument("--a", type=float, default=d.a, help="poloidal circle radius")
    p.add_argument("--theta0", type=float, default=d.theta0, help="poloidal angle of a toroidal loop")
    p.add_argument("--phi0", type=float, default=d.phi0, help="toroidal angle of a poloidal loop")
    p.add_argument("--p", type=int, default=d.p, help="knot toroidal winding")
    p.add_argument("--q", type=int, default=d.q, help="knot poloidal winding")
    p.add_argument("--axis", choices=("x", "y", "z"), default=d.axis)
    p.add_argument("--n1", type=int, default=None, help="revolutions about x")
    p.add_argument("--n2", type=int, default=None, help="revolutions about y")
    p.add_argument("--n", type=int, default=d.n, help="quantum number")
    p.add_argument("--hbar", type=float, default=d.hbar)
    p.add_argument("--grid", type=int, default=d.grid, help="eigensolver grid size")
    p.add_argument("--k", type=int, default=d.k, help="number of eigenvalues")
    p.add_argument("--epsilon", type=float, default=d.epsilon, help="adiabaticity peak*L/(2 pi p0)")
    p.add_argument("--omega-max", dest="omega_max", type=float, default=None)
    p.add_argument("--winding", type=float, default=d.winding, help="rotation angle per axis turn (radians)")
    p.add_argument("--protocol", choices=dyn.PROFILES, default=d.protocol)
    p.add_argument("--p0", type=float, default=d.p0, help="initial speed along the loop")
    p.add_argument("--steps-per-circuit", dest="steps_per_circuit", type=int, default=d.steps_per_circuit)
    p.add_argument("--approx-length", dest="approx_length", action="store_true")
    p.add_argument("--omega-start-nonzero", dest="omega_start_nonzero", action="store_true", help="(rejected) start the rotation at a nonzero rate")
    p.add_argument("--degrees", action="store_true", help="report angles in degrees")
    p.add_argument("--format", choices=("json", "csv"), default=d.format)
    p.add_argument("--out", default=None, help="output path (default stdout)")
    p.add_argument("--trajectory", default=None, help="simulate: write t,s,p,omega CSV here")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="torusphase", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)
    helps = {
        "hannay": "Hannay angle: closed form vs line integral",
        "simulate": "adiabatic rotating-frame simulation",
        "berry": "semiclassical Berry phase",
        "spectrum": "knot energy levels",
        "compare": "Hannay angle from the Berry phase vs the classical result",
    }
    for name, text in helps.items():
        _add_common(sub.add_parser(name, help=text))
    sw = sub.add_parser("sweep", help="sweep one parameter of a nested command, CSV output")
    _add_common(sw)
    sw.add_argument("--command", dest="nested", choices=tuple(DISPATCH), default="hannay")
    sw.add_argument("--param", required=True, choices=SWEEP_PARAMS)
    sw.add_argument("--from", dest="start", type=float, required=True)
    sw.add_argument("--to", dest="stop", type=float, required=True)
    sw.add_argument("--steps", type=int, required=True)
    sw.add_argument("--exclude-end", dest="exclude_end", action="store_true")
    sw.add_argument("--scale", choices=("linear", "log"), default="linear", help="grid spacing")
    sw.add_argument("--jobs", type=int, default=1)
    sw.set_defaults(format="csv")
    return parser


def spec_from_args(ns: argparse.Namespace) -> RunSpec:
    names = {f.name for f in dataclasses.fields(RunSpec)}
    kwargs = {k: v for k, v in vars(ns).items() if k in names}
    if ns.command == "sweep":
        kwargs["command"] = ns.nested
    return RunSpec(**kwargs)


def _flag(field_name: str | None) -> str:
    return "--" + field_name.replace("_", "-") if field_name else "input"


def main(argv=None) -> int:
    parser = build_parser()
    ns = parser.parse_args(argv)
    spec = spec_from_args(ns)
    try:
        if ns.command == "sweep":
            sweep = SweepSpec(ns.param, ns.start, ns.stop, ns.steps, spec, ns.exclude_end, ns.jobs, ns.scale)
            header, rows, code = cmd_sweep(sweep)
            if spec.format == "json":
                doc = {
                    "input": _exact(
                        {"sweep": ns.param, "from": ns.start, "to": ns.stop, "steps": ns.steps, "scale": ns.scale, **spec.echo()}
                    ),
                    "result": _clean({"rows": [dict(zip(header, r)) for r in rows]}),
                    "meta": _clean({"version": __version__, "tolerances": TOLERANCES}),
                }
                text = json.dumps(doc, indent=2) + "\n"
            else:
                text = _csv_text(header, rows)
            _write_text(spec.out, text)
            return code
        result = run(spec)
        _write_text(spec.out, render(spec, result))
        if spec.command == "compare" and "note" in result and spec.loop == "poloidal":
            print(result["note"], file=sys.stderr)
        return EXIT_OK
    except ValidationError as exc:
        print(f"torusphase: invalid {_flag(exc.field)}: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except NumericsError as exc:
        print(f"torusphase: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICS
    except OSError as exc:
        print(f"torusphase: I/O error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
