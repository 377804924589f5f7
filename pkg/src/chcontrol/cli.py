"""Command-line frontend: single solves, convergence studies, presets.

Exit codes: 0 on success (sweep converged where applicable), 3 when a solve
finishes but the forward-backward sweep did not converge, 1 on any error.
"""

from __future__ import annotations

import argparse
import json
import math
import sys
from pathlib import Path

from . import harness
from .exprparse import ParseError, parse, uses_y
from .grid import GridError, SpaceGrid, TimeGrid
from .harness import PRESETS, HarnessError, run_preset
from .linsolve import SolveError
from .ocp import ProblemSpec, SweepConfig, solve_ocp
from .schemes import NewtonConfig, StepError

EXIT_OK = 0
EXIT_ERROR = 1
EXIT_NOT_CONVERGED = 3


class ConfigError(ValueError):
    """Config validation failure; the message names the offending key."""


_TOP_KEYS = {"domain", "n_points", "n_points_y", "T", "n_steps", "epsilon",
             "lambda", "scheme", "y0", "target", "adjoint_variant", "newton",
             "sweep", "output_dir"}
_DOMAIN_KEYS = {"a", "b", "a2", "b2"}
_NEWTON_KEYS = {"tol", "max_iters"}
_SWEEP_KEYS = {"tol", "max_sweeps", "relaxation"}


def _reject_unknown(mapping: dict, allowed: set[str], where: str) -> None:
    unknown = sorted(set(mapping) - allowed)
    if unknown:
        raise ConfigError(f"{where}: unknown key(s) {', '.join(unknown)}")


def _need(cfg: dict, key: str):
    if key not in cfg:
        raise ConfigError(f"{key}: required key is missing")
    return cfg[key]


def _finite_number(value, key: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ConfigError(f"{key}: expected a number, got {value!r}")
    if not math.isfinite(value):
        raise ConfigError(f"{key}: value must be finite, got {value!r}")
    return float(value)


def _positive_int(value, key: str) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise ConfigError(f"{key}: expected an integer, got {value!r}")
    if value < 1:
        raise ConfigError(f"{key}: must be at least 1, got {value}")
    return value


def _expression(text, key: str, dim: int):
    if not isinstance(text, str):
        raise ConfigError(f"{key}: expected an expression string, got {text!r}")
    try:
        ast = parse(text)
    except ParseError as exc:
        raise ConfigError(f"{key}: {exc}") from exc
    if dim == 1 and uses_y(ast):
        raise ConfigError(f"{key}: expression references 'y' on a 1D domain")
    return text


def load_config(path) -> tuple[ProblemSpec, SweepConfig, Path]:
    """Read and validate a JSON run config."""
    path = Path(path)
    try:
        raw = path.read_text()
    except OSError as exc:
        raise ConfigError(f"{path}: cannot read config: {exc}") from exc
    try:
        cfg = json.loads(raw)
    except json.JSONDecodeError as exc:
        raise ConfigError(
            f"{path}:{exc.lineno}:{exc.colno}: invalid JSON: {exc.msg}") from exc
    if not isinstance(cfg, dict):
        raise ConfigError(f"{path}: config must be a JSON object")
    _reject_unknown(cfg, _TOP_KEYS, "config")

    domain = _need(cfg, "domain")
    if not isinstance(domain, dict):
        raise ConfigError("domain: expected an object with keys a, b [, a2, b2]")
    _reject_unknown(domain, _DOMAIN_KEYS, "domain")
    a = _finite_number(_need(domain, "a"), "domain.a")
    b = _finite_number(_need(domain, "b"), "domain.b")
    if b <= a:
        raise ConfigError("domain.b: must exceed domain.a")
    two_d = "a2" in domain or "b2" in domain
    if two_d and not ("a2" in domain and "b2" in domain):
        raise ConfigError("domain.a2: a2 and b2 must be given together")

    n_points = _positive_int(_need(cfg, "n_points"), "n_points")
    if n_points < 4:
        raise ConfigError(f"n_points: need at least 4 nodes, got {n_points}")
    if "n_points_y" in cfg and not two_d:
        raise ConfigError("n_points_y: given without a 2D domain (a2, b2)")

    if two_d:
        a2 = _finite_number(domain["a2"], "domain.a2")
        b2 = _finite_number(domain["b2"], "domain.b2")
        if b2 <= a2:
            raise ConfigError("domain.b2: must exceed domain.a2")
        n2 = _positive_int(cfg.get("n_points_y", n_points), "n_points_y")
        grid = SpaceGrid.rect(a, b, n_points, a2, b2, n2)
    else:
        grid = SpaceGrid.line(a, b, n_points)

    T = _finite_number(_need(cfg, "T"), "T")
    if T <= 0:
        raise ConfigError(f"T: final time must be positive, got {T}")
    n_steps = _positive_int(_need(cfg, "n_steps"), "n_steps")
    time = TimeGrid(T, n_steps)

    eps = _finite_number(_need(cfg, "epsilon"), "epsilon")
    if eps <= 0:
        raise ConfigError(f"epsilon: must be positive, got {eps}")
    lam = _finite_number(_need(cfg, "lambda"), "lambda")
    if lam <= 0:
        raise ConfigError(f"lambda: must be positive, got {lam}")

    scheme = _need(cfg, "scheme")
    if scheme not in ("s1", "s2", "s3"):
        raise ConfigError(f"scheme: must be one of s1, s2, s3 (got {scheme!r})")
    variant = cfg.get("adjoint_variant", "n")
    if variant not in ("n", "n1"):
        raise ConfigError(f"adjoint_variant: must be 'n' or 'n1' (got {variant!r})")

    y0 = _expression(_need(cfg, "y0"), "y0", grid.dim)
    target = _expression(_need(cfg, "target"), "target", grid.dim)

    newton_cfg = cfg.get("newton", {})
    if not isinstance(newton_cfg, dict):
        raise ConfigError("newton: expected an object")
    _reject_unknown(newton_cfg, _NEWTON_KEYS, "newton")
    newton = NewtonConfig(
        residual_tol=_finite_number(newton_cfg.get("tol", 1e-10), "newton.tol"),
        max_iters=_positive_int(newton_cfg.get("max_iters", 25),
                                "newton.max_iters"),
    )

    sweep_cfg = cfg.get("sweep", {})
    if not isinstance(sweep_cfg, dict):
        raise ConfigError("sweep: expected an object")
    _reject_unknown(sweep_cfg, _SWEEP_KEYS, "sweep")
    try:
        sweep = SweepConfig(
            fp_tol=_finite_number(sweep_cfg.get("tol", 1e-9), "sweep.tol"),
            max_sweeps=_positive_int(sweep_cfg.get("max_sweeps", 200),
                                     "sweep.max_sweeps"),
            relaxation=_finite_number(sweep_cfg.get("relaxation", 1.0),
                                      "sweep.relaxation"),
        )
    except ValueError as exc:
        raise ConfigError(f"sweep: {exc}") from exc

    outdir = cfg.get("output_dir", "out")
    if not isinstance(outdir, str) or not outdir:
        raise ConfigError(f"output_dir: expected a non-empty string, got {outdir!r}")

    spec = ProblemSpec(grid=grid, time=time, eps=eps, lam=lam, scheme=scheme,
                       y0=y0, target=target, adjoint_variant=variant,
                       newton=newton)
    return spec, sweep, Path(outdir)


def cmd_solve(args) -> int:
    spec, sweep, outdir = load_config(args.config)
    sol = solve_ocp(spec, sweep)
    written = harness.write_solution_outputs(spec, sol, outdir)
    status = "converged" if sol.converged else "NOT converged"
    print(f"{status} in {sol.sweeps_used} sweep(s); cost = {sol.cost:.6e}")
    for p in written:
        print(f"wrote {p}")
    return EXIT_OK if sol.converged else EXIT_NOT_CONVERGED


def _parse_levels(text: str, axis: str):
    parts = [p for p in text.split(",") if p.strip()]
    if not parts:
        raise ConfigError("--levels: expected a comma-separated list")
    try:
        if axis == "time":
            return [float(p) for p in parts]
        return [int(p) for p in parts]
    except ValueError as exc:
        raise ConfigError(f"--levels: {exc}") from exc


def cmd_converge(args) -> int:
    spec, sweep, outdir = load_config(args.config)
    levels = _parse_levels(args.levels, args.axis)
    if args.axis == "time":
        report = harness.temporal_convergence_study(spec, levels,
                                                    float(args.ref), sweep)
    else:
        report = harness.spatial_convergence_study(spec, levels,
                                                   int(args.ref), sweep)
    path = outdir / f"convergence_{report.axis}_{spec.scheme}.csv"
    harness.write_convergence_csv(path, report)
    print(f"wrote {path}")
    for label, rate in (("state", report.state_rate),
                        ("adjoint", report.adjoint_rate)):
        if math.isnan(rate):
            print(f"{label} rate: n/a")
        else:
            print(f"{label} rate: {rate:.3f}")
    for note in report.notes:
        print(note)
    return EXIT_OK


def cmd_preset(args) -> int:
    if args.action == "list":
        for preset in PRESETS.values():
            print(f"{preset.name:6s} {preset.description}")
        return EXIT_OK
    name = args.name
    if name not in PRESETS:
        print(f"error: unknown preset {name!r}; available presets:",
              file=sys.stderr)
        for preset in PRESETS.values():
            print(f"  {preset.name:6s} {preset.description}", file=sys.stderr)
        return EXIT_ERROR
    outdir = args.output_dir or f"preset_{name}"
    for p in run_preset(name, outdir):
        print(f"wrote {p}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="chcontrol",
        description="Finite-difference solver for phase-field optimal control",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_solve = sub.add_parser("solve", help="run one solve from a JSON config")
    p_solve.add_argument("config", help="path to the JSON run config")
    p_solve.set_defaults(func=cmd_solve)

    p_conv = sub.add_parser("converge", help="run a convergence study")
    p_conv.add_argument("config", help="path to the JSON run config")
    p_conv.add_argument("--axis", choices=("time", "space"), required=True)
    p_conv.add_argument("--levels", required=True,
                        help="comma-separated dt values (time) or node counts (space)")
    p_conv.add_argument("--ref", required=True,
                        help="reference dt (time) or node count (space)")
    p_conv.set_defaults(func=cmd_converge)

    p_preset = sub.add_parser("preset", help="list or run bundled experiments")
    p_preset.add_argument("action", choices=("list", "run"))
    p_preset.add_argument("name", nargs="?", default=None)
    p_preset.add_argument("--output-dir", default=None)
    p_preset.set_defaults(func=cmd_preset)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    if args.command == "preset" and args.action == "run" and args.name is None:
        print("error: preset run requires a preset name", file=sys.stderr)
        return EXIT_ERROR
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_ERROR
    except (GridError, SolveError, StepError, HarnessError, ParseError,
            ValueError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_ERROR


if __name__ == "__main__":
    sys.exit(main())
