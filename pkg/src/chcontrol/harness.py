"""Convergence studies against fine references, preset catalog, CSV output.

Error measurement matches the solver's headline metric: the maximum over
time levels of the maximum nodal difference against a reference run.  Time
studies share one spatial grid and align coincident time levels; space
studies use nested grids (n' = 2n - 1) and restrict the reference by node
coincidence.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Sequence

import numpy as np

from .grid import Field, SpaceGrid, TimeGrid, Trajectory, norm_max
from .ocp import ProblemSpec, Solution, SweepConfig, solve_ocp

SCHEMES = ("s1", "s2", "s3")


class HarnessError(RuntimeError):
    """Misconfigured or failed study."""


@dataclass(frozen=True)
class ConvergenceReport:
    axis: str  # "time" | "space"
    levels: tuple[float, ...]          # dt or h, strictly decreasing
    state_errors: tuple[float, ...]
    adjoint_errors: tuple[float, ...]
    state_rate: float
    adjoint_rate: float
    excluded: tuple[float, ...] = ()   # levels dropped (sweep non-convergence)
    notes: tuple[str, ...] = ()


def fit_rate(xs: Sequence[float], es: Sequence[float]) -> float:
    """Least-squares slope of log(es) against log(xs)."""
    xs = np.asarray(xs, float)
    es = np.asarray(es, float)
    if xs.size < 2 or xs.size != es.size:
        raise HarnessError("rate fit needs at least two (x, error) pairs")
    if np.any(xs <= 0) or np.any(es <= 0):
        raise HarnessError("rate fit needs positive levels and errors")
    lx = np.log(xs)
    if np.ptp(lx) == 0:
        raise HarnessError("rate fit is degenerate: all levels equal")
    return float(np.polyfit(lx, np.log(es), 1)[0])


def _fit_or_nan(levels, errors) -> float:
    usable = [(l, e) for l, e in zip(levels, errors) if e > 0]
    if len(usable) < 2:
        return math.nan
    return fit_rate([l for l, _ in usable], [e for _, e in usable])


def _steps_for(T: float, dt: float) -> int:
    nt = round(T / dt)
    if nt < 1 or abs(nt * dt - T) > 1e-9 * T:
        raise HarnessError(f"dt = {dt:g} does not divide the horizon T = {T:g}")
    return nt


def _max_diff(a: np.ndarray, b: np.ndarray) -> float:
    return float(np.abs(a - b).max())


def temporal_convergence_study(base: ProblemSpec, dts: Sequence[float],
                               ref_dt: float,
                               sweep: SweepConfig | None = None
                               ) -> ConvergenceReport:
    """Errors against a fine-time reference on the same spatial grid."""
    sweep = sweep or SweepConfig()
    T = base.time.T
    nt_ref = _steps_for(T, ref_dt)
    dts = sorted(set(float(d) for d in dts), reverse=True)
    level_steps = []
    for dt in dts:
        nt = _steps_for(T, dt)
        if nt_ref % nt != 0:
            raise HarnessError(f"reference dt = {ref_dt:g} does not divide "
                               f"level dt = {dt:g}")
        level_steps.append(nt)
    ref = solve_ocp(replace(base, time=TimeGrid(T, nt_ref)), sweep)
    if not ref.converged:
        raise HarnessError("reference run did not converge")
    levels, es, ea, excluded, notes = [], [], [], [], []
    for dt, nt in zip(dts, level_steps):
        sol = solve_ocp(replace(base, time=TimeGrid(T, nt)), sweep)
        if not sol.converged:
            excluded.append(dt)
            notes.append(f"level dt = {dt:g} excluded: sweep did not converge")
            continue
        k = nt_ref // nt
        levels.append(dt)
        es.append(_max_diff(sol.Y.values, ref.Y.values[::k]))
        ea.append(_max_diff(sol.P.values, ref.P.values[::k]))
    return ConvergenceReport(
        axis="time",
        levels=tuple(levels),
        state_errors=tuple(es),
        adjoint_errors=tuple(ea),
        state_rate=_fit_or_nan(levels, es),
        adjoint_rate=_fit_or_nan(levels, ea),
        excluded=tuple(excluded),
        notes=tuple(notes),
    )


def _grid_with_n(grid: SpaceGrid, n: int) -> SpaceGrid:
    return SpaceGrid(grid.bounds, (n,) * grid.dim)


def _restrict(values: np.ndarray, fine: SpaceGrid, stride: int) -> np.ndarray:
    nd = values.reshape(fine.shape)
    if fine.dim == 1:
        return nd[::stride].reshape(-1)
    return nd[::stride, ::stride].reshape(-1)


def spatial_convergence_study(base: ProblemSpec, ns: Sequence[int],
                              ref_n: int,
                              sweep: SweepConfig | None = None
                              ) -> ConvergenceReport:
    """Errors against a nested fine-grid reference (n' = 2n - 1 chains)."""
    sweep = sweep or SweepConfig()
    ns = sorted(set(int(n) for n in ns))
    for n in ns:
        if (ref_n - 1) % (n - 1) != 0:
            raise HarnessError(f"grid with {n} nodes is not nested in the "
                               f"reference with {ref_n} nodes")
    ref_grid = _grid_with_n(base.grid, ref_n)
    ref = solve_ocp(replace(base, grid=ref_grid), sweep)
    if not ref.converged:
        raise HarnessError("reference run did not converge")
    levels, es, ea, excluded, notes = [], [], [], [], []
    finest_error = None
    finest_spec = None
    for n in ns:
        grid_n = _grid_with_n(base.grid, n)
        h = grid_n.h[0]
        spec_n = replace(base, grid=grid_n)
        sol = solve_ocp(spec_n, sweep)
        if not sol.converged:
            excluded.append(h)
            notes.append(f"level n = {n} excluded: sweep did not converge")
            continue
        stride = (ref_n - 1) // (n - 1)
        ref_y = np.stack([_restrict(row, ref_grid, stride) for row in ref.Y.values])
        ref_p = np.stack([_restrict(row, ref_grid, stride) for row in ref.P.values])
        levels.append(h)
        es.append(_max_diff(sol.Y.values, ref_y))
        ea.append(_max_diff(sol.P.values, ref_p))
        finest_error = es[-1]
        finest_spec = (spec_n, sol)
    # control run with halved dt at the finest tested grid: the temporal
    # error component must sit below the measured spatial error, otherwise
    # the fitted slope is contaminated
    if finest_spec is not None:
        spec_n, sol = finest_spec
        half = solve_ocp(replace(spec_n, time=TimeGrid(base.time.T,
                                                       2 * base.time.n_steps)),
                         sweep)
        if half.converged:
            temporal_est = _max_diff(sol.Y.values, half.Y.values[::2])
            if temporal_est >= finest_error:
                notes.append(
                    f"warning: temporal error estimate {temporal_est:.3e} is not "
                    f"below the finest spatial error {finest_error:.3e}")
            else:
                notes.append(
                    f"temporal error estimate {temporal_est:.3e} below finest "
                    f"spatial error {finest_error:.3e}")
    levels_desc = tuple(sorted(levels, reverse=True))
    order = [levels.index(l) for l in levels_desc]
    return ConvergenceReport(
        axis="space",
        levels=levels_desc,
        state_errors=tuple(es[i] for i in order),
        adjoint_errors=tuple(ea[i] for i in order),
        state_rate=_fit_or_nan(levels, es),
        adjoint_rate=_fit_or_nan(levels, ea),
        excluded=tuple(excluded),
        notes=tuple(notes),
    )


# ---------------------------------------------------------------------------
# CSV emission.  All files carry a header row; floats use 17 significant
# digits so identical runs produce byte-identical output.

def _fmt(value) -> str:
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (float, np.floating)):
        return f"{float(value):.17g}"
    return str(value)


def _write_rows(path: Path, header: Sequence[str], rows) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(v) for v in row])


def write_snapshot_csv(path, field: Field) -> None:
    """Columns x[,y],value over all nodes in row-major order."""
    grid = field.grid
    meshes = [m.reshape(-1) for m in grid.meshes()]
    header = ["x", "value"] if grid.dim == 1 else ["x", "y", "value"]
    rows = zip(*meshes, field.values)
    _write_rows(Path(path), header, rows)


def write_spacetime_csv(path, traj: Trajectory) -> None:
    """Columns t,x,value over all levels of a 1D trajectory."""
    if traj.grid.dim != 1:
        raise HarnessError("space-time CSV output is for 1D runs")
    xs = traj.grid.axis_coords(0)
    times = traj.time.times
    rows = ((times[n], xs[i], traj.values[n, i])
            for n in range(traj.n_levels) for i in range(xs.size))
    _write_rows(Path(path), ["t", "x", "value"], rows)


def write_convergence_csv(path, report: ConvergenceReport) -> None:
    rows = zip(report.levels, report.state_errors, report.adjoint_errors)
    _write_rows(Path(path), ["level", "state_error", "adjoint_error"], rows)


def write_summary_csv(path, entries: Sequence[tuple[str, object]]) -> None:
    _write_rows(Path(path), ["key", "value"], entries)


def solution_summary(spec: ProblemSpec, sol: Solution) -> list[tuple[str, object]]:
    target_final = spec.target_field(spec.time.T)
    tracking = norm_max(Field(spec.grid, sol.Y.values[-1] - target_final.values))
    entries: list[tuple[str, object]] = [
        ("scheme", spec.scheme),
        ("dim", spec.grid.dim),
        ("n_points", spec.grid.npts[0]),
    ]
    if spec.grid.dim == 2:
        entries.append(("n_points_y", spec.grid.npts[1]))
    entries += [
        ("n_steps", spec.time.n_steps),
        ("final_time", spec.time.T),
        ("epsilon", spec.eps),
        ("lambda", spec.lam),
        ("adjoint_variant", spec.adjoint_variant),
        ("converged", sol.converged),
        ("sweeps_used", sol.sweeps_used),
        ("fp_residual_final", sol.fp_residual_history[-1]
         if sol.fp_residual_history else 0.0),
        ("cost", sol.cost),
        ("tracking_error_final", tracking),
        ("control_abs_max", float(np.abs(sol.U.values).max())),
        ("newton_iters_max", sol.newton_iters_max),
        ("scheme_residual_max", max((r.final_residual for r in sol.diagnostics),
                                    default=0.0)),
        ("fprime_max", max((r.fprime_max for r in sol.diagnostics), default=0.0)),
    ]
    return entries


def write_solution_outputs(spec: ProblemSpec, sol: Solution, outdir) -> list[Path]:
    """Snapshot, (1D) space-time and summary CSVs for one solve."""
    outdir = Path(outdir)
    written = []
    grid, time = spec.grid, spec.time

    def snap(name: str, values: np.ndarray) -> None:
        p = outdir / name
        write_snapshot_csv(p, Field(grid, values))
        written.append(p)

    snap("target_final.csv", spec.target_field(time.T).values)
    snap("state_final.csv", sol.Y.values[-1])
    snap("control_first.csv", sol.U.values[0])
    snap("control_last.csv", sol.U.values[max(time.n_steps - 1, 0)])
    if grid.dim == 1:
        target_traj = Trajectory.from_fields(time, spec.target_fields())
        for name, traj in (("target_xt.csv", target_traj),
                           ("state_xt.csv", sol.Y),
                           ("control_xt.csv", sol.U)):
            p = outdir / name
            write_spacetime_csv(p, traj)
            written.append(p)
    p = outdir / "summary.csv"
    write_summary_csv(p, solution_summary(spec, sol))
    written.append(p)
    return written


# ---------------------------------------------------------------------------
# Preset catalog

@dataclass(frozen=True)
class ExperimentPreset:
    name: str
    description: str
    kind: str  # "solve" | "time_study" | "space_study"
    spec: ProblemSpec
    sweep: SweepConfig = SweepConfig()
    dts: tuple[float, ...] = ()
    ref_dt: float = 0.0
    ns: tuple[int, ...] = ()
    ref_n: int = 0
    expected: tuple[str, ...] = ()


def _build_catalog() -> dict[str, ExperimentPreset]:
    line = SpaceGrid.line(0.0, 1.0, 257)
    square = SpaceGrid.rect(0.0, 1.0, 51)
    accuracy_base = dict(eps=0.05, lam=0.1,
                         y0="cos(2*pi*x)", target="cos(2*pi*x)*exp(-t)")

    presets = [
        ExperimentPreset(
            # N = 129: at N = 257 the largest ladder step puts the Newton
            # residual floor (machine eps times the stiff operator norm)
            # above the 1e-10 tolerance
            name="fig1",
            description="1D temporal convergence study, all three schemes",
            kind="time_study",
            spec=ProblemSpec(SpaceGrid.line(0.0, 1.0, 129), TimeGrid(0.1, 10),
                             scheme="s1", **accuracy_base),
            dts=(0.1 / 10, 0.1 / 20, 0.1 / 40, 0.1 / 80),
            ref_dt=0.1 / 640,
            expected=tuple(f"convergence_time_{s}.csv" for s in SCHEMES)
            + ("rates_summary.csv",),
        ),
        ExperimentPreset(
            name="fig2",
            description="1D spatial convergence study, all three schemes",
            kind="space_study",
            spec=ProblemSpec(SpaceGrid.line(0.0, 1.0, 17), TimeGrid(0.01, 200),
                             scheme="s1", **accuracy_base),
            ns=(17, 33, 65, 129),
            ref_n=513,
            expected=tuple(f"convergence_space_{s}.csv" for s in SCHEMES)
            + ("rates_summary.csv",),
        ),
    ]

    solve_cases = [
        ("fig3", "1D s1 tracking a steady cosine profile",
         ProblemSpec(line, TimeGrid(0.01, 100), eps=0.05, lam=0.1, scheme="s1",
                     y0="cos(2*pi*x)", target="cos(2*pi*x)")),
        ("fig4", "1D s1 cosine tracking with a cheap control (small lambda)",
         ProblemSpec(line, TimeGrid(0.01, 100), eps=0.05, lam=1e-4, scheme="s1",
                     y0="cos(2*pi*x)", target="cos(2*pi*x)")),
        ("fig5", "1D s1 cosine tracking with a wider interface",
         ProblemSpec(line, TimeGrid(0.01, 100), eps=0.09, lam=1e-4, scheme="s1",
                     y0="cos(2*pi*x)", target="cos(2*pi*x)")),
        ("fig6", "1D s2 tracking a growing sine profile",
         ProblemSpec(line, TimeGrid(0.01, 100), eps=0.09, lam=1e-4, scheme="s2",
                     y0="sin(pi*x)", target="sin(pi*x)*(t^2+1)")),
        ("fig7", "1D s3 tracking an exponential-of-cosine profile",
         ProblemSpec(line, TimeGrid(0.01, 100), eps=0.05, lam=1e-4, scheme="s3",
                     y0="0.1*exp(cos(pi*x))", target="0.1*exp(cos(pi*x))*(3*t^2+1)")),
        ("fig8", "2D s1 tracking cos(2*pi*x*y)",
         ProblemSpec(square, TimeGrid(0.01, 20), eps=0.1, lam=1e-4, scheme="s1",
                     y0="cos(2*pi*x*y)", target="cos(2*pi*x*y)")),
        ("fig10", "2D s1 tracking cos(2*pi*x*y), narrower interface",
         ProblemSpec(square, TimeGrid(0.01, 20), eps=0.07, lam=1e-4, scheme="s1",
                     y0="cos(2*pi*x*y)", target="cos(2*pi*x*y)")),
        ("fig11", "2D s2 tracking a separable cosine profile with drift",
         ProblemSpec(square, TimeGrid(0.03, 30), eps=0.1, lam=0.01, scheme="s2",
                     y0="0.5*cos(2*pi*x)*cos(2*pi*y)",
                     target="0.5*cos(2*pi*x)*cos(2*pi*y)*(exp(-0.1*t)+2*t)")),
        ("fig14", "2D s3 tracking a decaying sin(x*y) profile",
         ProblemSpec(square, TimeGrid(0.01, 30), eps=0.08, lam=0.001, scheme="s3",
                     y0="0.5*sin(x*y)", target="0.5*sin(x*y)*(1-2*t)")),
    ]
    solve_expected = ("target_final.csv", "state_final.csv", "control_first.csv",
                      "control_last.csv", "summary.csv")
    for name, desc, spec in solve_cases:
        extra = ("target_xt.csv", "state_xt.csv",
                 "control_xt.csv") if spec.grid.dim == 1 else ()
        presets.append(ExperimentPreset(name=name, description=desc, kind="solve",
                                        spec=spec,
                                        expected=solve_expected + extra))

    catalog = {p.name: p for p in presets}
    aliases = {"fig9": "fig8", "fig12": "fig11", "fig13": "fig11",
               "fig15": "fig14"}
    for alias, base_name in aliases.items():
        base = catalog[base_name]
        catalog[alias] = replace(base, name=alias,
                                 description=f"{base.description} "
                                             f"(same run as {base_name})")
    return dict(sorted(catalog.items(),
                       key=lambda kv: int(kv[0].removeprefix("fig"))))


PRESETS: dict[str, ExperimentPreset] = _build_catalog()


def run_preset(name: str, outdir) -> list[Path]:
    """Execute one catalog entry and write its CSV artifacts."""
    if name not in PRESETS:
        raise HarnessError(f"unknown preset {name!r}; known presets: "
                           + ", ".join(PRESETS))
    preset = PRESETS[name]
    outdir = Path(outdir)
    if preset.kind == "solve":
        sol = solve_ocp(preset.spec, preset.sweep)
        return write_solution_outputs(preset.spec, sol, outdir)
    written = []
    rates: list[tuple[str, object]] = []
    for scheme in SCHEMES:
        spec = replace(preset.spec, scheme=scheme)
        if preset.kind == "time_study":
            report = temporal_convergence_study(spec, preset.dts, preset.ref_dt,
                                                preset.sweep)
        else:
            report = spatial_convergence_study(spec, preset.ns, preset.ref_n,
                                               preset.sweep)
        p = outdir / f"convergence_{report.axis}_{scheme}.csv"
        write_convergence_csv(p, report)
        written.append(p)
        rates.append((f"{scheme}_state_rate", report.state_rate))
        rates.append((f"{scheme}_adjoint_rate", report.adjoint_rate))
        for i, note in enumerate(report.notes):
            rates.append((f"{scheme}_note_{i}", note))
    p = outdir / "rates_summary.csv"
    write_summary_csv(p, rates)
    written.append(p)
    return written
