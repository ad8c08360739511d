"""Command-line front end.

    caplab capacity --gate cnot --which e_u_psi,delta_e_u
    caplab sweep --alpha-min 0.05 --steps 12 --csv
    caplab verify --gate gate.json --json
    caplab decompose --gate swap

Exit codes: 0 success, 1 a verified inequality failed, 2 usage or parse
error, 3 non-unitary gate, 4 unsupported dimension.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
import time
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .capacities import (
    delta_e_u,
    delta_e_u_psi,
    delta_e_u_psi_onesided,
    e_u,
    e_u_psi,
    e_u_psi_onesided,
)
from .channels import chi_c_lower_bound
from .ensembles import BOB_SIDE, ensemble_dense, ensemble_dense_delta, holevo
from .errors import LayoutError, NumericalValidityError, UnsupportedDimensionError
from .optimize import OptimizerConfig
from .qstate import StateVector, SubsystemLayout, apply_local, max_entangled
from .unitary import BipartiteGate, GateFormatError, cnot, cz, gate_zz, identity, kak_decompose, load_gate, swap

EXIT_OK, EXIT_FAILED, EXIT_USAGE, EXIT_NOT_UNITARY, EXIT_UNSUPPORTED = 0, 1, 2, 3, 4

CAPACITY_NAMES = (
    "e_u_psi", "e_u_psi_fwd", "e_u_psi_bwd", "e_u", "delta_e_u_psi",
    "delta_e_u_psi_fwd", "delta_e_u_psi_bwd", "delta_e_u", "chi_c",
)

RUN_REPORT_SCHEMA = {
    "$schema": "https://json-schema.org/draft/2020-12/schema",
    "type": "object",
    "required": ["gate_descriptor", "capacities", "inequalities", "config_echo", "wall_time_ms"],
    "properties": {
        "gate_descriptor": {"type": "string"},
        "capacities": {"type": "object", "additionalProperties": {"type": "number"}},
        "inequalities": {
            "type": "array",
            "items": {
                "type": "object",
                "required": ["name", "lhs", "rhs", "holds"],
                "properties": {
                    "name": {"type": "string"},
                    "lhs": {"type": "number"},
                    "rhs": {"type": "number"},
                    "tolerance": {"type": "number"},
                    "holds": {"type": "boolean"},
                },
            },
        },
        "config_echo": {
            "type": "object",
            "required": ["restarts", "max_iterations", "tolerance", "seed"],
        },
        "wall_time_ms": {"type": "integer", "minimum": 0},
    },
}


class CliError(Exception):
    def __init__(self, message: str, code: int):
        super().__init__(message)
        self.code = code


@dataclass
class Inequality:
    """The claim lhs <= rhs, judged with ``tolerance`` slack."""

    name: str
    lhs: float
    rhs: float
    tolerance: float

    @property
    def holds(self) -> bool:
        return bool(self.lhs <= self.rhs + self.tolerance)

    def to_json(self) -> dict:
        return {"name": self.name, "lhs": self.lhs, "rhs": self.rhs,
                "tolerance": self.tolerance, "holds": self.holds}


@dataclass
class RunReport:
    gate_descriptor: str
    capacities: dict = field(default_factory=dict)
    inequalities: list = field(default_factory=list)
    config_echo: dict = field(default_factory=dict)
    wall_time_ms: int = 0

    @property
    def all_hold(self) -> bool:
        return all(q.holds for q in self.inequalities)

    def to_json(self) -> dict:
        return {
            "gate_descriptor": self.gate_descriptor,
            "capacities": dict(self.capacities),
            "inequalities": [q.to_json() for q in self.inequalities],
            "config_echo": dict(self.config_echo),
            "wall_time_ms": int(self.wall_time_ms),
        }


# ----------------------------------------------------------------------------
# gate ingestion

BUILTINS = {"identity": identity, "swap": swap, "cnot": cnot, "cz": cz}


def parse_gate(source: str) -> BipartiteGate:
    """A builtin name, ``zz:<alpha>`` in radians, or a path to a gate JSON file."""
    key = source.strip().lower()
    try:
        if key in BUILTINS:
            return BUILTINS[key]()
        if key.startswith("zz:"):
            try:
                alpha = float(key[3:])
            except ValueError:
                raise CliError(f"cannot parse angle in {source!r}", EXIT_USAGE) from None
            if not math.isfinite(alpha):
                raise CliError(f"angle must be finite, got {source!r}", EXIT_USAGE)
            return gate_zz(alpha)
        path = Path(source)
        if not path.is_file():
            raise CliError(f"unknown gate {source!r}: not a builtin and no such file", EXIT_USAGE)
        return load_gate(path)
    except (GateFormatError, LayoutError) as exc:
        raise CliError(str(exc), EXIT_USAGE) from exc
    except NumericalValidityError as exc:
        raise CliError(str(exc), EXIT_NOT_UNITARY) from exc


def parse_which(text: str) -> list[str]:
    names = [w.strip() for w in text.split(",") if w.strip()]
    if names == ["all"]:
        return list(CAPACITY_NAMES)
    unknown = [n for n in names if n not in CAPACITY_NAMES]
    if unknown or not names:
        raise CliError(f"unknown capacity name(s) {unknown}; choose from {', '.join(CAPACITY_NAMES)} or all",
                       EXIT_USAGE)
    return names


# ----------------------------------------------------------------------------
# commands

class _Capacities:
    """Lazily computed capacities that reuse each other's optima as starting points."""

    def __init__(self, gate: BipartiteGate, config: OptimizerConfig):
        self.gate = gate
        self.config = config
        self.reports = {}

    def get(self, name: str):
        if name not in self.reports:
            self.reports[name] = getattr(self, "_" + name)()
        return self.reports[name]

    def value(self, name: str) -> float:
        rep = self.get(name)
        return float(rep if isinstance(rep, float) else rep.value)

    def _e_u_psi(self):
        return e_u_psi(self.gate)

    def _e_u_psi_fwd(self):
        return e_u_psi_onesided(self.gate, "->", self.config)

    def _e_u_psi_bwd(self):
        return e_u_psi_onesided(self.gate, "<-", self.config)

    def _e_u(self):
        g = self.gate
        fwd = self.get("e_u_psi_fwd").extra["free_state"]
        bwd = self.get("e_u_psi_bwd").extra["free_state"]
        starts = [(max_entangled(g.d_a).amplitudes, fwd), (bwd, max_entangled(g.d_b).amplitudes)]
        return e_u(g, self.config, starts=starts if self._default_anc() else ())

    def _delta_e_u_psi(self):
        return delta_e_u_psi(self.gate, self.config)

    def _delta_e_u_psi_fwd(self):
        g = self.gate
        start = (max_entangled(g.d_b).amplitudes, self.get("delta_e_u_psi").argmax_unitary)
        return delta_e_u_psi_onesided(g, "->", self.config, starts=[start] if self._default_anc() else ())

    def _delta_e_u_psi_bwd(self):
        g = self.gate
        start = (max_entangled(g.d_a).amplitudes, self.get("delta_e_u_psi").argmax_unitary)
        return delta_e_u_psi_onesided(g, "<-", self.config, starts=[start] if self._default_anc() else ())

    def _delta_e_u(self):
        # every lower-bound optimum is an input state for dE_U: the product optimum
        # of E_U and the (U_0-prepared) Jamiolkowski-type inputs
        starts = []
        if self._default_anc():
            starts.append(self.get("e_u").argmax_state.amplitudes)
            starts.append(self.get("delta_e_u_psi").argmax_state.amplitudes)
            for name in ("delta_e_u_psi_fwd", "delta_e_u_psi_bwd"):
                rep = self.get(name)
                dims = rep.argmax_state.layout.dims
                starts.append(apply_local(rep.argmax_unitary, rep.argmax_state.amplitudes, dims, [1, 2]))
        return delta_e_u(self.gate, self.config, starts=starts)

    def _chi_c(self):
        return chi_c_lower_bound(self.gate, self.config, chi_start=self.get("e_u_psi_fwd").extra["free_state"])

    def _default_anc(self) -> bool:
        g, c = self.gate, self.config
        return c.ancilla("A_anc", g.d_a) == g.d_a and c.ancilla("B_anc", g.d_b) == g.d_b


def cmd_capacity(gate_source: str, which: list[str], config: OptimizerConfig) -> RunReport:
    gate = parse_gate(gate_source)
    t0 = time.perf_counter()
    caps = _Capacities(gate, config)
    values = {name: caps.value(name) for name in which}
    return RunReport(gate_source, values, [], config.to_json(), _elapsed_ms(t0))


def cmd_verify(gate_source: str, config: OptimizerConfig) -> RunReport:
    gate = parse_gate(gate_source)
    t0 = time.perf_counter()
    caps = _Capacities(gate, config)
    tol = config.tolerance
    d_a, d_b = gate.d_a, gate.d_b

    e_psi = caps.value("e_u_psi")
    e_psi_dag = e_u_psi(gate.adjoint())
    fwd = caps.get("e_u_psi_fwd")
    e_fwd = fwd.value
    e_full = caps.value("e_u")
    d_psi = caps.get("delta_e_u_psi")
    d_full = caps.value("delta_e_u")

    # chi(dense ensemble after U) with Bob's input at the one-sided optimum
    nb = fwd.argmax_state.layout.dim("B_anc")
    chi = StateVector(SubsystemLayout([("B_U", d_b), ("B_anc", nb)]), fwd.extra["free_state"])
    chi_dense = holevo(ensemble_dense(gate, chi).evolve(gate), BOB_SIDE)
    _, dense_gain = ensemble_dense_delta(gate, d_psi.argmax_unitary)
    c_e = caps.value("chi_c")

    checks = [
        Inequality("|E^Psi(U) - E^Psi(U^dag)| <= 0", abs(e_psi - e_psi_dag), 0.0, 1e-9),
        Inequality("E^Psi <= E^Psi,->", e_psi, e_fwd, tol),
        Inequality("E^Psi,-> <= E_U", e_fwd, e_full, tol),
        Inequality("dE^Psi <= dE_U", d_psi.value, d_full, tol),
        Inequality("E_U <= E^Psi (d_a d_b)^2", e_full, e_psi * (d_a * d_b) ** 2, tol),
        Inequality("E^Psi,-> <= chi(dense)", e_fwd, chi_dense, tol),
        Inequality("|dchi(dense-delta) - dE^Psi| <= 0", abs(dense_gain - d_psi.value), 0.0, tol),
        Inequality("E^Psi,-> <= C_E bound", e_fwd, c_e, tol),
    ]
    values = {"e_u_psi": e_psi, "e_u_psi_adjoint": e_psi_dag, "e_u_psi_fwd": e_fwd, "e_u": e_full,
              "delta_e_u_psi": d_psi.value, "delta_e_u": d_full, "chi_dense": chi_dense,
              "delta_chi_dense_delta": dense_gain, "chi_c": c_e}
    return RunReport(gate_source, values, checks, config.to_json(), _elapsed_ms(t0))


def sweep_grid(alpha_min: float, alpha_max: float, steps: int) -> np.ndarray:
    if not (0 < alpha_min < alpha_max <= math.pi / 4 + 1e-12) or steps < 1:
        raise CliError(
            f"sweep needs 0 < alpha_min < alpha_max <= pi/4 and steps >= 1, "
            f"got ({alpha_min}, {alpha_max}, {steps})", EXIT_USAGE)
    if steps == 1:
        return np.array([alpha_max])
    return np.linspace(alpha_min, alpha_max, steps)


def cmd_sweep(alpha_min: float, alpha_max: float, steps: int, config: OptimizerConfig) -> list[dict]:
    """One row per alpha: the exact E^Psi, the optimized dE_U and their ratio for gate_zz(alpha)."""
    rows = []
    for alpha in sweep_grid(alpha_min, alpha_max, steps):
        gate = gate_zz(float(alpha))
        e_psi = e_u_psi(gate)
        d_full = delta_e_u(gate, config).value
        rows.append({"alpha": float(alpha), "e_u_psi": e_psi, "delta_e_u": d_full,
                     "ratio": d_full / e_psi if e_psi > 0 else float("nan")})
    return rows


def cmd_decompose(gate_source: str) -> dict:
    gate = parse_gate(gate_source)
    try:
        form = kak_decompose(gate)
    except UnsupportedDimensionError as exc:
        raise CliError(str(exc), EXIT_UNSUPPORTED) from exc
    a_before, b_before = form.local_before
    a_after, b_after = form.local_after
    return {
        "gate_descriptor": gate_source,
        "alphas": [float(a) for a in form.alphas],
        "global_phase": _complex_pair(form.global_phase),
        "local_before": {"A": _matrix_pairs(a_before), "B": _matrix_pairs(b_before)},
        "local_after": {"A": _matrix_pairs(a_after), "B": _matrix_pairs(b_after)},
        "residual": form.residual(gate),
    }


# ----------------------------------------------------------------------------
# formatting

def _elapsed_ms(t0: float) -> int:
    return int(round((time.perf_counter() - t0) * 1000))


def _complex_pair(z) -> list[float]:
    z = complex(z)
    return [_clean(z.real), _clean(z.imag)]


def _matrix_pairs(m: np.ndarray) -> list:
    return [[_complex_pair(z) for z in row] for row in m]


def _clean(x: float) -> float:
    # keep output free of "-0.0"
    return 0.0 if x == 0 else float(x)


def _num(x: float) -> str:
    return f"{x:.10f}"


def format_report(report: RunReport) -> str:
    lines = [f"gate: {report.gate_descriptor}"]
    if report.capacities:
        width = max(len(k) for k in report.capacities)
        lines.append("")
        lines.append(f"{'capacity':<{width}}  value")
        for k, v in report.capacities.items():
            lines.append(f"{k:<{width}}  {_num(v)}")
    if report.inequalities:
        width = max(len(q.name) for q in report.inequalities)
        lines.append("")
        lines.append(f"{'check':<{width}}  {'lhs':>14}  {'rhs':>14}  holds")
        for q in report.inequalities:
            lines.append(f"{q.name:<{width}}  {_num(q.lhs):>14}  {_num(q.rhs):>14}  {'yes' if q.holds else 'NO'}")
    return "\n".join(lines) + "\n"


SWEEP_COLUMNS = ("alpha", "e_u_psi", "delta_e_u", "ratio")


def format_sweep_csv(rows: list[dict]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(SWEEP_COLUMNS)
    for row in rows:
        writer.writerow([repr(float(row[c])) for c in SWEEP_COLUMNS])
    return buf.getvalue()


def format_sweep_table(rows: list[dict]) -> str:
    lines = [f"{'alpha':>10}  {'e_u_psi':>12}  {'delta_e_u':>12}  {'ratio':>10}"]
    for r in rows:
        lines.append(f"{r['alpha']:>10.6f}  {r['e_u_psi']:>12.8f}  {r['delta_e_u']:>12.8f}  {r['ratio']:>10.6f}")
    return "\n".join(lines) + "\n"


def format_decompose(doc: dict) -> str:
    a = doc["alphas"]
    lines = [
        f"gate: {doc['gate_descriptor']}",
        f"alphas: ({a[0]:.12f}, {a[1]:.12f}, {a[2]:.12f})",
        f"global phase: {doc['global_phase'][0]:+.12f} {doc['global_phase'][1]:+.12f}i",
    ]
    for stage in ("local_before", "local_after"):
        for side in ("A", "B"):
            lines.append(f"{stage} {side}:")
            for row in doc[stage][side]:
                lines.append("  " + "  ".join(f"{re:+.9f}{im:+.9f}i" for re, im in row))
    lines.append(f"reconstruction residual: {doc['residual']:.3e}")
    return "\n".join(lines) + "\n"


def _dump_json(doc) -> str:
    return json.dumps(doc, indent=2, sort_keys=True) + "\n"


# ----------------------------------------------------------------------------
# entry point

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="caplab", description="Entangling and communication capacities of bipartite gates.")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_config(p):
        p.add_argument("--restarts", type=int, default=20, help="random restarts per optimization (default 20)")
        p.add_argument("--tol", type=float, default=1e-6, help="optimizer and comparison tolerance (default 1e-6)")
        p.add_argument("--seed", type=int, default=42, help="base seed; restart i uses seed + i (default 42)")
        p.add_argument("--max-iterations", type=int, default=500)
        p.add_argument("--a-anc", type=int, default=None, help="override Alice's ancilla dimension")
        p.add_argument("--b-anc", type=int, default=None, help="override Bob's ancilla dimension")
        p.add_argument("--timing", action="store_true",
                       help="record wall-clock time in reports (makes output run-dependent)")

    gate_help = "identity | swap | cnot | cz | zz:<alpha> | path to a gate JSON file"

    p = sub.add_parser("capacity", help="compute selected capacities of a gate")
    p.add_argument("--gate", required=True, help=gate_help)
    p.add_argument("--which", default="e_u_psi",
                   help=f"comma-separated names from {', '.join(CAPACITY_NAMES)}, or all")
    p.add_argument("--json", action="store_true", help="emit the JSON run report")
    add_config(p)

    p = sub.add_parser("sweep", help="dE_U / E^Psi along gate_zz(alpha)")
    p.add_argument("--alpha-min", type=float, default=0.05)
    p.add_argument("--alpha-max", type=float, default=math.pi / 4)
    p.add_argument("--steps", type=int, default=12)
    fmt = p.add_mutually_exclusive_group()
    fmt.add_argument("--csv", action="store_true", help="emit CSV rows")
    fmt.add_argument("--json", action="store_true", help="emit JSON rows")
    add_config(p)

    p = sub.add_parser("verify", help="check the proven inequalities for a gate")
    p.add_argument("--gate", required=True, help=gate_help)
    p.add_argument("--json", action="store_true", help="emit the JSON run report")
    add_config(p)

    p = sub.add_parser("decompose", help="canonical form of a two-qubit gate")
    p.add_argument("--gate", required=True, help=gate_help)
    p.add_argument("--json", action="store_true", help="emit JSON")
    return parser


def _config_from(args) -> OptimizerConfig:
    anc = {}
    if args.a_anc is not None:
        anc["A_anc"] = args.a_anc
    if args.b_anc is not None:
        anc["B_anc"] = args.b_anc
    try:
        return OptimizerConfig(restarts=args.restarts, max_iterations=args.max_iterations,
                               tolerance=args.tol, seed=args.seed, ancilla_dims=anc or None)
    except ValueError as exc:
        raise CliError(str(exc), EXIT_USAGE) from exc


def _finish_report(report: RunReport, args) -> str:
    if not args.timing:
        report.wall_time_ms = 0
    else:
        print(f"wall time: {report.wall_time_ms} ms", file=sys.stderr)
    return _dump_json(report.to_json()) if args.json else format_report(report)


def run(argv: list[str] | None = None, out=None) -> int:
    out = out or sys.stdout
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        if args.command == "capacity":
            which = parse_which(args.which)
            report = cmd_capacity(args.gate, which, _config_from(args))
            out.write(_finish_report(report, args))
            return EXIT_OK
        if args.command == "verify":
            report = cmd_verify(args.gate, _config_from(args))
            out.write(_finish_report(report, args))
            return EXIT_OK if report.all_hold else EXIT_FAILED
        if args.command == "sweep":
            config = _config_from(args)
            t0 = time.perf_counter()
            rows = cmd_sweep(args.alpha_min, args.alpha_max, args.steps, config)
            if args.timing:
                print(f"wall time: {_elapsed_ms(t0)} ms", file=sys.stderr)
            if args.csv:
                out.write(format_sweep_csv(rows))
            elif args.json:
                out.write(_dump_json({"config_echo": config.to_json(), "rows": rows}))
            else:
                out.write(format_sweep_table(rows))
            return EXIT_OK
        if args.command == "decompose":
            doc = cmd_decompose(args.gate)
            out.write(_dump_json(doc) if args.json else format_decompose(doc))
            return EXIT_OK
    except CliError as exc:
        print(f"caplab: error: {exc}", file=sys.stderr)
        return exc.code
    return EXIT_USAGE


def main(argv: list[str] | None = None) -> None:
    sys.exit(run(argv))


if __name__ == "__main__":
    main()
