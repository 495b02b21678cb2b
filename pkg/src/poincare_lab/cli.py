"""Command line front end.

Subcommands wire the library modules end to end: ``solve`` runs a blow-up
ladder and writes a JSON report, ``verify`` checks a report against a
closed-form metric, ``expand`` fits boundary expansions, ``probe`` and
``koebe`` run the distance diagnostics, ``map`` builds the conformal map,
``dichotomy`` classifies an exhaustion sequence and ``oracle`` tabulates
model metrics.  Every run that writes artifacts also writes a manifest
with sha256 digests, and ``rerun`` replays a manifest and checks that the
outputs come back byte-identical.

Exit codes: 0 success, 2 a requested certificate failed, 1 runtime error,
64 usage error.
"""

from __future__ import annotations

import os

# Cap worker threads in the numeric libraries before they are imported.
# Only effective when this module is the process entry point; the value is
# recorded in the manifest either way.
if "POINCARE_LAB_THREADS" in os.environ:
    for _var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
        os.environ.setdefault(_var, os.environ["POINCARE_LAB_THREADS"])

import argparse
import datetime
import hashlib
import json
import sys
from dataclasses import asdict, dataclass, field, replace
from fractions import Fraction
from pathlib import Path
from typing import Dict, List, Optional

import numpy as np

from .boundary_asymptotics import expansion_profile
from .curvature_solver import (
    SolverConfig,
    blowup_ladder,
    dichotomy_detect,
    exhaustion_solve,
)
from .discrete_ops import probe_mask
from .errors import PoincareLabError
from .exact_metrics import ModelMetric
from .geometry import DomainSpec, ScalarField, build_grid
from .hyperbolic_geometry import MetricGraph, completeness_probe, koebe_ratio
from .riemann_map import covering_map, green_function, harmonic_conjugate

TOOL_NAME = "poincare-lab"
TOOL_VERSION = "0.1.0"

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_CERTIFICATE = 2
EXIT_USAGE = 64


# ------------------------------------------------------------------
# formatting and hashing
# ------------------------------------------------------------------


def format_number(v: float) -> str:
    """17 significant digits, '.' decimal point, no locale dependence."""
    return "%.17g" % float(v)


def write_csv(path: str, header: List[str], columns: List[np.ndarray]) -> None:
    """Row-major CSV dump with '\\n' line endings, bit-stable formatting."""
    n = len(columns[0]) if columns else 0
    lines = [",".join(header)]
    for k in range(n):
        lines.append(",".join(format_number(col[k]) for col in columns))
    with open(path, "w", newline="") as f:
        f.write("\n".join(lines) + "\n")


def sha256_file(path: str) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(1 << 20), b""):
            digest.update(chunk)
    return "sha256:" + digest.hexdigest()


def dump_json(path: str, obj: dict) -> None:
    with open(path, "w", newline="") as f:
        f.write(json.dumps(obj, sort_keys=True, indent=2) + "\n")


def parse_spacing(text: str) -> float:
    """Grid spacing given as a fraction ('1/128') or a decimal."""
    try:
        return float(Fraction(text))
    except (ValueError, ZeroDivisionError) as exc:
        raise ValueError(f"cannot parse spacing {text!r}") from exc


def parse_point(text: str) -> tuple:
    parts = text.split(",")
    if len(parts) != 2:
        raise ValueError(f"expected 'x,y', got {text!r}")
    return (float(parts[0]), float(parts[1]))


def parse_floats(text: str) -> tuple:
    return tuple(float(t) for t in text.split(",") if t.strip())


# ------------------------------------------------------------------
# manifest
# ------------------------------------------------------------------


@dataclass
class RunManifest:
    """Self-describing record of one CLI run.

    ``args`` holds everything needed to replay the command; ``inputs`` and
    ``outputs`` map file paths to sha256 digests of their bytes.  The JSON
    form round-trips byte-identically through from_json/to_json.
    """

    command: str
    args: Dict
    tool_name: str = TOOL_NAME
    tool_version: str = TOOL_VERSION
    created: str = ""
    threads: Optional[str] = None
    inputs: Dict[str, str] = field(default_factory=dict)
    outputs: Dict[str, str] = field(default_factory=dict)

    def __post_init__(self):
        if not self.created:
            now = datetime.datetime.now(datetime.timezone.utc)
            self.created = now.strftime("%Y-%m-%dT%H:%M:%SZ")
        if self.threads is None:
            self.threads = os.environ.get("POINCARE_LAB_THREADS", "")

    def to_json(self) -> str:
        return json.dumps(asdict(self), sort_keys=True, indent=2) + "\n"

    @staticmethod
    def from_json(text: str) -> "RunManifest":
        d = json.loads(text)
        return RunManifest(**d)

    def write(self, path: str) -> None:
        with open(path, "w", newline="") as f:
            f.write(self.to_json())


def manifest_path_for(out_path: str) -> str:
    p = Path(out_path)
    return str(p.with_name(p.stem + ".manifest.json"))


# ------------------------------------------------------------------
# shared loading helpers
# ------------------------------------------------------------------


def load_domain(arg: str) -> tuple:
    """Accept a path to a JSON file or an inline JSON object.

    Returns (DomainSpec, consumed file path or None).
    """
    text = arg
    src = None
    if not arg.lstrip().startswith("{"):
        src = arg
        with open(arg) as f:
            text = f.read()
    return DomainSpec.from_json(text), src


def config_from_args(args: argparse.Namespace) -> SolverConfig:
    cfg = SolverConfig()
    updates = {}
    if getattr(args, "ladder", None):
        updates["ladder_levels"] = parse_floats(args.ladder)
    if getattr(args, "newton_tol", None) is not None:
        updates["newton_tol"] = args.newton_tol
    if getattr(args, "probe_delta", None) is not None:
        updates["probe_delta"] = args.probe_delta
    return replace(cfg, **updates) if updates else cfg


def report_dict(domain: DomainSpec, h_text: str, cfg: SolverConfig, rep) -> dict:
    if rep.residual_norms and isinstance(rep.residual_norms[0], (list, np.ndarray)):
        residuals = [[float(v) for v in level] for level in rep.residual_norms]
    else:
        residuals = [[float(v) for v in rep.residual_norms]]
    return {
        "domain": domain.to_dict(),
        "h": h_text,
        "h_value": float(rep.u.grid.h),
        "solver_config": {
            "newton_tol": cfg.newton_tol,
            "ladder_levels": list(cfg.ladder_levels),
            "probe_delta": cfg.probe_delta,
            "converged_decrement": cfg.converged_decrement,
            "diverging_decrement": cfg.diverging_decrement,
        },
        "levels": list(map(float, rep.levels)),
        "level_reports": rep.level_reports,
        "residuals": residuals,
        "certificates": {
            "monotonicity_violation": float(rep.monotonicity_violation),
            "barrier_violation": float(rep.barrier_violation),
            "final_residual": float(rep.final_residual),
        },
        "verdict": rep.verdict,
        "u": [float(v) for v in rep.u.values],
    }


def load_report(path: str) -> tuple:
    """Rebuild (grid, ScalarField, report dict) from a solve report."""
    with open(path) as f:
        d = json.load(f)
    domain = DomainSpec.from_dict(d["domain"])
    grid = build_grid(domain, float(d["h_value"]))
    u = ScalarField(grid, np.asarray(d["u"], dtype=float))
    return grid, u, d


ORACLE_NAMES = {
    "poincare-disk": lambda p: ModelMetric.unit_disk(),
    "unit-disk": lambda p: ModelMetric.unit_disk(),
    "disk": lambda p: ModelMetric.disk((p[0], p[1]), p[2]),
    "half-plane": lambda p: ModelMetric.half_plane(),
    "punctured-disk": lambda p: ModelMetric.punctured_disk(),
    "strip": lambda p: ModelMetric.strip(),
    "annulus": lambda p: ModelMetric.annulus(p[0]),
    "quarter-plane": lambda p: ModelMetric.quarter_plane(),
    "sinh": lambda p: ModelMetric.sinh_family(p[0]),
    "grauert": lambda p: ModelMetric.grauert(p[0], p[1], p[2], p[3]),
}


def parse_oracle(text: str) -> ModelMetric:
    """'name' or 'name:p1,p2,...' from the table of closed-form metrics."""
    name, _, raw = text.partition(":")
    if name not in ORACLE_NAMES:
        known = ", ".join(sorted(ORACLE_NAMES))
        raise ValueError(f"unknown oracle {name!r}; known: {known}")
    return ORACLE_NAMES[name](parse_floats(raw))


# ------------------------------------------------------------------
# subcommands
# ------------------------------------------------------------------


def cmd_solve(args: argparse.Namespace) -> int:
    domain, src = load_domain(args.domain)
    h = parse_spacing(args.h)
    cfg = config_from_args(args)
    grid = build_grid(domain, h)
    rep = blowup_ladder(grid, cfg)

    manifest = RunManifest(
        "solve",
        {
            "domain": domain.to_dict(),
            "h": args.h,
            "ladder": ",".join(format_number(v) for v in cfg.ladder_levels),
            "out": args.out,
            "csv": args.csv,
            "newton_tol": cfg.newton_tol,
            "probe_delta": cfg.probe_delta,
            "barrier_tol": args.barrier_tol,
        },
    )
    if src:
        manifest.inputs[src] = sha256_file(src)

    dump_json(args.out, report_dict(domain, args.h, cfg, rep))
    manifest.outputs[args.out] = sha256_file(args.out)
    if args.csv:
        write_csv(args.csv, ["x", "y", "u"], [grid.xs, grid.ys, rep.u.values])
        manifest.outputs[args.csv] = sha256_file(args.csv)
    manifest.write(manifest_path_for(args.out))

    print(f"verdict {rep.verdict}  levels {len(rep.levels)}  "
          f"final residual {format_number(rep.final_residual)}")
    print(f"monotonicity violation {format_number(rep.monotonicity_violation)}")
    print(f"barrier violation {format_number(rep.barrier_violation)}")
    if args.barrier_tol is not None and rep.barrier_violation > args.barrier_tol:
        print(f"certificate FAILED: barrier {format_number(rep.barrier_violation)} "
              f"> {format_number(args.barrier_tol)}")
        return EXIT_CERTIFICATE
    return EXIT_OK


def cmd_verify(args: argparse.Namespace) -> int:
    grid, u, _ = load_report(args.report)
    metric = parse_oracle(args.oracle)
    exact = metric.log_density(grid.xs, grid.ys)
    mask = probe_mask(grid, args.delta_min)
    if not np.any(mask):
        raise PoincareLabError(f"no probe nodes at delta >= {args.delta_min}")
    err = float(np.max(np.abs(u.values[mask] - exact[mask])))
    print(f"max probe error {format_number(err)} over {int(np.sum(mask))} nodes "
          f"(delta >= {format_number(args.delta_min)})")
    return EXIT_OK if err <= args.tol else EXIT_CERTIFICATE


def cmd_expand(args: argparse.Namespace) -> int:
    grid, u, _ = load_report(args.report)
    length = _natural_length(grid.domain)
    spacing = length / args.samples if length else None
    fits = expansion_profile(u, spacing=spacing, with_log=args.with_log)
    if not fits:
        raise PoincareLabError("no usable boundary samples for expansion fits")

    manifest = RunManifest(
        "expand",
        {"report": args.report, "samples": args.samples,
         "with_log": args.with_log, "out": args.out},
        inputs={args.report: sha256_file(args.report)},
    )
    cols = {
        "y": [], "kappa": [], "u1_fit": [], "u1_theory": [],
        "u2_fit": [], "residual": [],
    }
    for fit in fits:
        s = fit.sample
        cols["y"].append(s.arclength)
        cols["kappa"].append(s.curvature)
        cols["u1_fit"].append(fit.u1)
        cols["u1_theory"].append(s.curvature / 2.0)
        cols["u2_fit"].append(fit.u2)
        cols["residual"].append(fit.residual)
    header = list(cols)
    write_csv(args.out, header, [np.asarray(cols[k]) for k in header])
    manifest.outputs[args.out] = sha256_file(args.out)
    manifest.write(manifest_path_for(args.out))

    worst = max(abs(f.c0) for f in fits)
    print(f"{len(fits)} fits written; max |c0| {format_number(worst)}")
    return EXIT_OK


def _natural_length(domain: DomainSpec) -> Optional[float]:
    curves = [c for c in domain._compiled().curves if not c.artificial]
    if not curves:
        return None
    return float(sum(c.length() for c in curves))


def cmd_probe(args: argparse.Namespace) -> int:
    grid, u, _ = load_report(args.report)
    mg = MetricGraph(u)
    anchor = mg.node_at(*parse_point(getattr(args, "from")))
    target = parse_point(args.toward)
    offsets = parse_floats(args.offsets) if args.offsets else tuple(
        2.0 ** (-k) for k in range(6) if 2.0 ** (-k) >= 2.0 * grid.h
    )
    curve = completeness_probe(mg, anchor, target, offsets)

    manifest = RunManifest(
        "probe",
        {"report": args.report, "from": getattr(args, "from"),
         "toward": args.toward,
         "offsets": ",".join(format_number(v) for v in offsets),
         "out": args.out},
        inputs={args.report: sha256_file(args.report)},
    )
    write_csv(args.out, ["delta", "distance"], [curve.deltas, curve.distances])
    manifest.outputs[args.out] = sha256_file(args.out)
    manifest.write(manifest_path_for(args.out))

    print(f"slope {format_number(curve.slope)} "
          f"({'complete' if curve.complete else 'not certified'})")
    return EXIT_OK


def cmd_koebe(args: argparse.Namespace) -> int:
    grid, u, _ = load_report(args.report)
    rng = koebe_ratio(u)
    # the continuum pinch is [1/2, 2]; allow 2h discretisation slack
    lo = 0.5 - 2.0 * grid.h
    hi = 2.0 + 2.0 * grid.h
    out = {
        "min": rng.min,
        "max": rng.max,
        "argmin": rng.argmin,
        "argmax": rng.argmax,
        "lower_bound": lo,
        "upper_bound": hi,
    }
    manifest = RunManifest(
        "koebe",
        {"report": args.report, "out": args.out},
        inputs={args.report: sha256_file(args.report)},
    )
    dump_json(args.out, out)
    manifest.outputs[args.out] = sha256_file(args.out)
    manifest.write(manifest_path_for(args.out))
    print(f"ratio range [{format_number(rng.min)}, {format_number(rng.max)}]")
    inside = lo <= rng.min and rng.max <= hi
    return EXIT_OK if inside else EXIT_CERTIFICATE


def cmd_map(args: argparse.Namespace) -> int:
    domain, src = load_domain(args.domain)
    h = parse_spacing(args.h)
    p = parse_point(args.p)
    grid = build_grid(domain, h)
    green = green_function(grid, p)
    conj = harmonic_conjugate(green)
    phi = covering_map(green, conj)

    manifest = RunManifest(
        "map",
        {"domain": domain.to_dict(), "h": args.h, "p": args.p, "out": args.out},
    )
    if src:
        manifest.inputs[src] = sha256_file(src)
    write_csv(
        args.out,
        ["x", "y", "re_phi", "im_phi", "abs_phi"],
        [grid.xs, grid.ys, phi.values.real, phi.values.imag, np.abs(phi.values)],
    )
    manifest.outputs[args.out] = sha256_file(args.out)
    manifest.write(manifest_path_for(args.out))

    print(f"map at p=({format_number(green.p[0])}, {format_number(green.p[1])}), "
          f"max |phi| {format_number(float(np.max(np.abs(phi.values))))}")
    return EXIT_OK


def cmd_dichotomy(args: argparse.Namespace) -> int:
    with open(args.windows) as f:
        entries = json.load(f)
    windows = [(DomainSpec.from_dict(e["domain"]), parse_spacing(str(e["h"])))
               for e in entries]
    cfg = config_from_args(args)
    rep = exhaustion_solve(windows, cfg)
    verdict = dichotomy_detect(rep, cfg)

    manifest = RunManifest(
        "dichotomy",
        {"windows": args.windows, "out": args.out,
         "ladder": ",".join(format_number(v) for v in cfg.ladder_levels)},
        inputs={args.windows: sha256_file(args.windows)},
    )
    out = {
        "verdict": verdict,
        "n_windows": len(windows),
        "probe_points": [[float(a), float(b)] for a, b in rep.probe_points],
        "probe_values": [[float(v) for v in row] for row in rep.probe_values],
        "decrements": [[float(v) for v in row] for row in rep.decrements],
    }
    dump_json(args.out, out)
    manifest.outputs[args.out] = sha256_file(args.out)
    manifest.write(manifest_path_for(args.out))
    print(f"verdict {verdict}")
    return EXIT_OK


def cmd_oracle(args: argparse.Namespace) -> int:
    if args.action != "eval":
        raise ValueError(f"unknown oracle action {args.action!r}")
    metric = parse_oracle(args.metric)
    xs = np.linspace(args.x_min, args.x_max, args.n)
    ys = np.linspace(args.y_min, args.y_max, args.n)
    gx, gy = np.meshgrid(xs, ys)
    gx = gx.ravel()
    gy = gy.ravel()
    u = metric.log_density(gx, gy)
    k = metric.curvature(gx, gy)

    manifest = RunManifest(
        "oracle",
        {"action": "eval", "metric": args.metric, "out": args.out,
         "x_min": args.x_min, "x_max": args.x_max,
         "y_min": args.y_min, "y_max": args.y_max, "n": args.n},
    )
    write_csv(args.out, ["x", "y", "u", "e2u", "K"],
              [gx, gy, u, np.exp(2.0 * u), k])
    manifest.outputs[args.out] = sha256_file(args.out)
    manifest.write(manifest_path_for(args.out))
    print(f"{len(gx)} samples written to {args.out}")
    return EXIT_OK


_REPLAYABLE = {}


def cmd_rerun(args: argparse.Namespace) -> int:
    with open(args.manifest) as f:
        manifest = RunManifest.from_json(f.read())
    if manifest.command not in _REPLAYABLE:
        raise PoincareLabError(f"manifest command {manifest.command!r} cannot be replayed")

    stored = dict(manifest.outputs)
    renames = {}
    replay_args = dict(manifest.args)
    for key in ("out", "csv"):
        old = replay_args.get(key)
        if old:
            p = Path(old)
            new = str(p.with_name(p.stem + args.suffix + p.suffix))
            replay_args[key] = new
            renames[old] = new

    ns = argparse.Namespace(**replay_args)
    if "domain" in replay_args and isinstance(replay_args["domain"], dict):
        ns.domain = json.dumps(replay_args["domain"])
    code = _REPLAYABLE[manifest.command](ns)
    if code != EXIT_OK:
        return code

    mismatched = []
    for old, digest in stored.items():
        new = renames.get(old, old)
        fresh = sha256_file(new)
        status = "match" if fresh == digest else "MISMATCH"
        if fresh != digest:
            mismatched.append(new)
        print(f"{new}: {status}")
    return EXIT_OK if not mismatched else EXIT_CERTIFICATE


# ------------------------------------------------------------------
# parser
# ------------------------------------------------------------------


class _Parser(argparse.ArgumentParser):
    """argparse with the usage exit code fixed at 64."""

    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(
        prog=TOOL_NAME,
        description="Numerical laboratory for complete constant-curvature "
                    "metrics on planar domains.",
    )
    parser.add_argument("--version", action="version",
                        version=f"{TOOL_NAME} {TOOL_VERSION}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    p = sub.add_parser("solve", help="run a blow-up ladder on a domain")
    p.add_argument("--domain", required=True,
                   help="path to a domain JSON file, or inline JSON")
    p.add_argument("--h", required=True, help="grid spacing, e.g. 1/128")
    p.add_argument("--ladder", default=None, help="comma list of boundary levels")
    p.add_argument("--newton-tol", type=float, default=None)
    p.add_argument("--probe-delta", type=float, default=None)
    p.add_argument("--barrier-tol", type=float, default=None,
                   help="fail (exit 2) if the barrier certificate exceeds this")
    p.add_argument("--out", default="report.json")
    p.add_argument("--csv", default=None, help="also dump (x, y, u) as CSV")
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("verify", help="compare a report against a closed form")
    p.add_argument("--report", required=True)
    p.add_argument("--oracle", required=True,
                   help="metric name, e.g. poincare-disk or annulus:0.5")
    p.add_argument("--delta-min", type=float, default=0.2,
                   help="probe region: nodes at least this far from the boundary")
    p.add_argument("--tol", type=float, default=1e-2)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("expand", help="fit boundary expansions from a report")
    p.add_argument("--report", required=True)
    p.add_argument("--samples", type=int, default=64,
                   help="number of boundary sample stations")
    p.add_argument("--with-log", action="store_true",
                   help="include the x^2 log x column in the fit")
    p.add_argument("--out", default="fits.csv")
    p.set_defaults(func=cmd_expand)

    p = sub.add_parser("probe", help="distance growth toward a boundary point")
    p.add_argument("--report", required=True)
    p.add_argument("--from", required=True, metavar="CX,CY",
                   help="anchor point")
    p.add_argument("--toward", required=True, metavar="BX,BY",
                   help="boundary point or puncture to approach")
    p.add_argument("--offsets", default=None,
                   help="comma list of offsets; default halves from 1")
    p.add_argument("--out", default="curve.csv")
    p.set_defaults(func=cmd_probe)

    p = sub.add_parser("koebe", help="density/distance ratio range")
    p.add_argument("--report", required=True)
    p.add_argument("--out", default="ratios.json")
    p.set_defaults(func=cmd_koebe)

    p = sub.add_parser("map", help="conformal map to the unit disk")
    p.add_argument("--domain", required=True)
    p.add_argument("--p", required=True, metavar="PX,PY",
                   help="interior base point (maps to 0)")
    p.add_argument("--h", default="1/64")
    p.add_argument("--out", default="phi.csv")
    p.set_defaults(func=cmd_map)

    p = sub.add_parser("dichotomy", help="classify an exhaustion sequence")
    p.add_argument("--windows", required=True,
                   help="JSON list of {domain: {...}, h: '...'} entries")
    p.add_argument("--ladder", default=None)
    p.add_argument("--out", default="verdict.json")
    p.set_defaults(func=cmd_dichotomy)

    p = sub.add_parser("oracle", help="tabulate a closed-form metric")
    p.add_argument("action", choices=["eval"])
    p.add_argument("--metric", required=True)
    p.add_argument("--x-min", type=float, default=-0.6)
    p.add_argument("--x-max", type=float, default=0.6)
    p.add_argument("--y-min", type=float, default=-0.6)
    p.add_argument("--y-max", type=float, default=0.6)
    p.add_argument("--n", type=int, default=33)
    p.add_argument("--out", default="oracle.csv")
    p.set_defaults(func=cmd_oracle)

    p = sub.add_parser("rerun", help="replay a manifest and compare digests")
    p.add_argument("--manifest", required=True)
    p.add_argument("--suffix", default=".rerun",
                   help="inserted before output extensions")
    p.set_defaults(func=cmd_rerun)

    return parser


_REPLAYABLE.update(
    solve=cmd_solve,
    expand=cmd_expand,
    probe=cmd_probe,
    koebe=cmd_koebe,
    map=cmd_map,
    dichotomy=cmd_dichotomy,
    oracle=cmd_oracle,
)


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (PoincareLabError, OSError, ValueError, json.JSONDecodeError) as exc:
        print(f"{TOOL_NAME}: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
