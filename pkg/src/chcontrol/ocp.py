"""Coupled optimality-system solver: alternating forward and backward sweeps.

The first-order system pairs a forward state march with a backward adjoint
march; the control is eliminated through u = p/lam.  A damped Picard
iteration alternates full forward and backward solves until the adjoint
trajectory stops changing.  A dense space-time Newton solver for tiny
instances doubles as an independent correctness oracle.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

import numpy as np

from . import exprparse
from .grid import Field, GridError, SpaceGrid, TimeGrid, Trajectory
from .linsolve import SolveError
from .schemes import (
    ADJOINT_VARIANTS,
    SCHEME_KINDS,
    NewtonConfig,
    StepError,
    StepReport,
    adjoint_step,
    f_eval,
    f_prime,
    s3_operator,
    state_step_s1,
    state_step_s2,
    state_step_s3,
)

ExprLike = str | exprparse.Expr | Callable


@dataclass(frozen=True)
class ProblemSpec:
    """Everything that defines one control problem instance."""

    grid: SpaceGrid
    time: TimeGrid
    eps: float
    lam: float
    scheme: str = "s1"
    y0: ExprLike = "0"
    target: ExprLike = "0"
    adjoint_variant: str = "n"
    newton: NewtonConfig = field(default_factory=NewtonConfig)

    def __post_init__(self) -> None:
        if not self.eps > 0:
            raise ValueError(f"eps must be positive, got {self.eps}")
        if not self.lam > 0:
            raise ValueError(f"lam must be positive, got {self.lam}")
        if self.scheme not in SCHEME_KINDS:
            raise ValueError(f"scheme must be one of {SCHEME_KINDS}, got {self.scheme!r}")
        if self.adjoint_variant not in ADJOINT_VARIANTS:
            raise ValueError(f"adjoint_variant must be one of {ADJOINT_VARIANTS}, "
                             f"got {self.adjoint_variant!r}")

    def _sample(self, source: ExprLike, t: float) -> Field:
        meshes = self.grid.meshes()
        if isinstance(source, str):
            source = exprparse.parse(source)
        if isinstance(source, exprparse.Expr):
            if self.grid.dim == 1:
                vals = exprparse.evaluate(source, x=meshes[0], t=t)
            else:
                vals = exprparse.evaluate(source, x=meshes[0], y=meshes[1], t=t)
        else:
            vals = source(*meshes, t)
        return Field(self.grid, np.broadcast_to(np.asarray(vals, float),
                                                self.grid.shape))

    def initial_field(self) -> Field:
        return self._sample(self.y0, 0.0)

    def target_field(self, t: float) -> Field:
        return self._sample(self.target, t)

    def target_fields(self) -> list[Field]:
        return [self.target_field(t) for t in self.time.times]


@dataclass(frozen=True)
class SweepConfig:
    """Fixed-point iteration controls for the forward-backward coupling."""

    fp_tol: float = 1e-9
    max_sweeps: int = 200
    relaxation: float = 1.0

    def __post_init__(self) -> None:
        if not 0 < self.relaxation <= 1:
            raise ValueError(f"relaxation must lie in (0, 1], got {self.relaxation}")
        if not self.fp_tol > 0:
            raise ValueError(f"fp_tol must be positive, got {self.fp_tol}")
        if self.max_sweeps < 1:
            raise ValueError(f"max_sweeps must be at least 1, got {self.max_sweeps}")


@dataclass(frozen=True)
class Solution:
    """State, adjoint and control trajectories plus run diagnostics."""

    Y: Trajectory
    P: Trajectory
    U: Trajectory
    cost: float
    sweeps_used: int
    fp_residual_history: tuple[float, ...]
    diagnostics: tuple[StepReport, ...]
    converged: bool
    newton_iters_max: int = 0


def _s3_factored(spec: ProblemSpec):
    if spec.scheme != "s3":
        return None
    return s3_operator(spec.grid, spec.eps, spec.time.dt)


def _march_forward(spec: ProblemSpec, p_traj: Trajectory, s3f
                   ) -> tuple[Trajectory, tuple[StepReport, ...]]:
    grid, time = spec.grid, spec.time
    dt = time.dt
    rows = np.empty((time.n_steps + 1, grid.n_nodes))
    rows[0] = spec.initial_field().values
    reports = []
    for n in range(time.n_steps):
        yn = Field(grid, rows[n])
        pn = Field(grid, p_traj.values[n])
        try:
            if spec.scheme == "s1":
                ynext, rep = state_step_s1(yn, pn, spec.eps, spec.lam, dt, spec.newton)
            elif spec.scheme == "s2":
                ynext, rep = state_step_s2(yn, pn, spec.eps, spec.lam, dt)
            else:
                ynext, rep = state_step_s3(yn, pn, spec.eps, spec.lam, dt, s3f)
        except StepError as exc:
            raise StepError(
                f"{spec.scheme} state step failed at time level {n + 1} "
                f"(t = {time.times[n + 1]:.6g}): {exc}",
                exc.residual_history,
            ) from exc
        rows[n + 1] = ynext.values
        reports.append(rep)
    return Trajectory(grid, time, rows), tuple(reports)


def _march_backward(spec: ProblemSpec, y_traj: Trajectory,
                    targets: Sequence[Field]) -> Trajectory:
    grid, time = spec.grid, spec.time
    dt = time.dt
    rows = np.zeros((time.n_steps + 1, grid.n_nodes))
    for n in range(time.n_steps - 1, -1, -1):
        try:
            p = adjoint_step(
                Field(grid, y_traj.values[n]),
                Field(grid, y_traj.values[n + 1]),
                Field(grid, rows[n + 1]),
                targets[n + 1],
                spec.eps,
                dt,
                spec.adjoint_variant,
            )
        except StepError as exc:
            raise StepError(
                f"adjoint step failed at time level {n} "
                f"(t = {time.times[n]:.6g}): {exc}",
            ) from exc
        rows[n] = p.values
    return Trajectory(grid, time, rows)


def forward_solve(spec: ProblemSpec, p_traj: Trajectory) -> Trajectory:
    """March the chosen state scheme from the sampled initial state."""
    if p_traj.n_levels != spec.time.n_steps + 1:
        raise GridError("adjoint trajectory has the wrong number of levels")
    traj, _ = _march_forward(spec, p_traj, _s3_factored(spec))
    return traj


def backward_solve(spec: ProblemSpec, y_traj: Trajectory) -> Trajectory:
    """March the adjoint backwards from the zero final condition."""
    if y_traj.n_levels != spec.time.n_steps + 1:
        raise GridError("state trajectory has the wrong number of levels")
    return _march_backward(spec, y_traj, spec.target_fields())


def control_from_adjoint(p_traj: Trajectory, lam: float) -> Trajectory:
    """Optimality coupling u = p/lam applied level by level."""
    if not lam > 0:
        raise ValueError(f"lam must be positive, got {lam}")
    return Trajectory(p_traj.grid, p_traj.time, p_traj.values / lam)


def _normalize_targets(target, y_traj: Trajectory,
                       spec: ProblemSpec | None = None) -> list[Field]:
    if isinstance(target, (list, tuple)):
        return list(target)
    probe = spec if spec is not None else ProblemSpec(
        y_traj.grid, y_traj.time, eps=1.0, lam=1.0, target=target)
    return [probe._sample(target, t) for t in y_traj.time.times]


def cost_functional(y_traj: Trajectory, u_traj: Trajectory, target,
                    lam: float) -> float:
    """Tracking-plus-control objective by trapezoid quadrature in x and t."""
    if y_traj.grid != u_traj.grid or y_traj.time != u_traj.time:
        raise GridError("state and control trajectories do not match")
    targets = _normalize_targets(target, y_traj)
    w = y_traj.grid.weights().reshape(-1)
    dt = y_traj.time.dt
    nt = y_traj.time.n_steps
    total = 0.0
    for n in range(nt + 1):
        wt = dt * (0.5 if n in (0, nt) else 1.0)
        d = y_traj.values[n] - targets[n].values
        u = u_traj.values[n]
        total += wt * (0.5 * float(w @ (d * d)) + 0.5 * lam * float(w @ (u * u)))
    return total


def solve_ocp(spec: ProblemSpec, cfg: SweepConfig | None = None) -> Solution:
    """Damped Picard iteration between forward and backward marches.

    Starts from a zero adjoint (the uncontrolled problem).  If the fixed-point
    residual fails to decrease for three consecutive sweeps the relaxation
    factor is halved once.  Non-convergence within ``max_sweeps`` is reported
    in the returned Solution, not raised.
    """
    cfg = cfg or SweepConfig()
    targets = spec.target_fields()
    s3f = _s3_factored(spec)
    p_traj = Trajectory.zeros(spec.grid, spec.time)
    theta = cfg.relaxation
    halved = False
    stalled = 0
    history: list[float] = []
    converged = False
    newton_max = 0
    y_traj, reports = None, ()
    for _ in range(cfg.max_sweeps):
        y_traj, reports = _march_forward(spec, p_traj, s3f)
        if reports:
            newton_max = max(newton_max, max(r.newton_iters for r in reports))
        p_new = _march_backward(spec, y_traj, targets)
        resid = float(np.abs(p_new.values - p_traj.values).max())
        history.append(resid)
        if not np.isfinite(resid):
            break
        if resid <= cfg.fp_tol:
            p_traj = p_new
            converged = True
            break
        if len(history) >= 2 and resid >= history[-2]:
            stalled += 1
        else:
            stalled = 0
        if stalled >= 3 and not halved:
            theta *= 0.5
            halved = True
            stalled = 0
        if theta == 1.0:
            p_traj = p_new
        else:
            p_traj = Trajectory(spec.grid, spec.time,
                                theta * p_new.values + (1.0 - theta) * p_traj.values)
    u_traj = control_from_adjoint(p_traj, spec.lam)
    cost = cost_functional(y_traj, u_traj, targets, spec.lam)
    return Solution(
        Y=y_traj,
        P=p_traj,
        U=u_traj,
        cost=cost,
        sweeps_used=len(history),
        fp_residual_history=tuple(history),
        diagnostics=reports,
        converged=converged,
        newton_iters_max=newton_max,
    )


def _dense_neumann_laplacian(grid: SpaceGrid) -> np.ndarray:
    """Dense mirror-closed Laplacian built by reflect-padding basis vectors.

    Intentionally a different construction from the sparse assembly so the
    monolithic solver stays an independent cross-check.
    """
    n = grid.n_nodes
    h = grid.h
    a = np.empty((n, n))
    for j in range(n):
        e = np.zeros(grid.shape)
        e.flat[j] = 1.0
        ep = np.pad(e, 1, mode="reflect")
        if grid.dim == 1:
            col = (ep[:-2] - 2.0 * ep[1:-1] + ep[2:]) / h[0] ** 2
        else:
            col = ((ep[:-2, 1:-1] - 2.0 * ep[1:-1, 1:-1] + ep[2:, 1:-1]) / h[0] ** 2
                   + (ep[1:-1, :-2] - 2.0 * ep[1:-1, 1:-1] + ep[1:-1, 2:]) / h[1] ** 2)
        a[:, j] = col.reshape(-1)
    return a


def solve_monolithic_tiny(spec: ProblemSpec, tol: float = 1e-12,
                          max_iters: int = 60) -> Solution:
    """Solve the full space-time coupled system by dense Newton.

    The stacked unknown is (Y^1..Y^Nt, P^0..P^{Nt-1}); only instances with
    at most 2000 unknowns are accepted.  Used as a correctness oracle for
    the sweep solver on tiny problems.
    """
    grid, time = spec.grid, spec.time
    n = grid.n_nodes
    nt = time.n_steps
    if 2 * nt * n > 2000:
        raise ValueError(f"monolithic solver limited to 2000 unknowns, "
                         f"got {2 * nt * n}")
    dt = time.dt
    e2 = spec.eps ** 2
    lam = spec.lam
    ad = _dense_neumann_laplacian(grid)
    ad2 = ad @ ad
    eye = np.eye(n)
    y0 = spec.initial_field().values
    targets = np.stack([f.values for f in spec.target_fields()])

    def split(v):
        return v[: nt * n].reshape(nt, n), v[nt * n:].reshape(nt, n)

    def y_at(k, ys):
        return y0 if k == 0 else ys[k - 1]

    def residual(v):
        ys, ps = split(v)
        blocks = []
        for k in range(nt):
            ym, yp, p = y_at(k, ys), ys[k], ps[k]
            if spec.scheme == "s1":
                r = (yp - ym - dt * (ad @ f_eval(yp)) + dt * e2 * (ad2 @ yp)
                     - (dt / lam) * p)
            elif spec.scheme == "s2":
                r = (yp - ym - dt * (ad @ (ym ** 2 * yp)) + dt * (ad @ ym)
                     + dt * e2 * (ad2 @ yp) - (dt / lam) * p)
            else:
                r = (yp - ym - dt * (ad @ ym ** 3) + 3.0 * dt * (ad @ ym)
                     - 2.0 * dt * (ad @ yp) + dt * e2 * (ad2 @ yp)
                     - (dt / lam) * p)
            blocks.append(r)
        for k in range(nt):
            ystar = y_at(k, ys) if spec.adjoint_variant == "n" else ys[k]
            p = ps[k]
            pnext = ps[k + 1] if k + 1 < nt else np.zeros(n)
            r = (p - dt * f_prime(ystar) * (ad @ p) + dt * e2 * (ad2 @ p)
                 - pnext + dt * (ys[k] - targets[k + 1]))
            blocks.append(r)
        return np.concatenate(blocks)

    def y_slice(k):  # unknown block of Y^k, valid for k >= 1
        return slice((k - 1) * n, k * n)

    def p_slice(k):  # unknown block of P^k, valid for 0 <= k < nt
        return slice((nt + k) * n, (nt + k + 1) * n)

    def jacobian(v):
        ys, ps = split(v)
        m = 2 * nt * n
        jac = np.zeros((m, m))
        for k in range(nt):
            row = slice(k * n, (k + 1) * n)
            ym, yp = y_at(k, ys), ys[k]
            if spec.scheme == "s1":
                d_yp = eye - dt * (ad * f_prime(yp)) + dt * e2 * ad2
                d_ym = -eye
            elif spec.scheme == "s2":
                d_yp = eye - dt * (ad * ym ** 2) + dt * e2 * ad2
                d_ym = -eye - dt * (ad * (2.0 * ym * yp)) + dt * ad
            else:
                d_yp = eye - 2.0 * dt * ad + dt * e2 * ad2
                d_ym = -eye - dt * (ad * (3.0 * ym ** 2)) + 3.0 * dt * ad
            jac[row, y_slice(k + 1)] = d_yp
            if k >= 1:
                jac[row, y_slice(k)] += d_ym
            jac[row, p_slice(k)] = -(dt / lam) * eye
        for k in range(nt):
            row = slice((nt + k) * n, (nt + k + 1) * n)
            ystar = y_at(k, ys) if spec.adjoint_variant == "n" else ys[k]
            p = ps[k]
            jac[row, p_slice(k)] = (eye - dt * (f_prime(ystar)[:, None] * ad)
                                    + dt * e2 * ad2)
            if k + 1 < nt:
                jac[row, p_slice(k + 1)] = -eye
            jac[row, y_slice(k + 1)] += dt * eye
            coeff_sens = -dt * np.diag(6.0 * ystar * (ad @ p))
            if spec.adjoint_variant == "n":
                if k >= 1:
                    jac[row, y_slice(k)] += coeff_sens
            else:
                jac[row, y_slice(k + 1)] += coeff_sens
        return jac

    v = np.concatenate([np.tile(y0, nt), np.zeros(nt * n)])
    r = residual(v)
    rnorm = float(np.abs(r).max())
    hist = [rnorm]
    iters = 0
    while rnorm > tol:
        if iters >= max_iters:
            raise SolveError(f"monolithic Newton stalled at residual {rnorm:.3e}")
        step = np.linalg.solve(jacobian(v), -r)
        alpha = 1.0
        for _ in range(12):
            v_try = v + alpha * step
            r_try = residual(v_try)
            rn_try = float(np.abs(r_try).max())
            if rn_try < rnorm or rn_try <= tol:
                break
            alpha *= 0.5
        v, r, rnorm = v_try, r_try, rn_try
        iters += 1
        hist.append(rnorm)

    ys, ps = split(v)
    y_rows = np.vstack([y0[None, :], ys])
    p_rows = np.vstack([ps, np.zeros((1, n))])
    y_traj = Trajectory(grid, time, y_rows)
    p_traj = Trajectory(grid, time, p_rows)
    u_traj = control_from_adjoint(p_traj, lam)
    cost = cost_functional(y_traj, u_traj,
                           [Field(grid, t) for t in targets], lam)
    return Solution(
        Y=y_traj,
        P=p_traj,
        U=u_traj,
        cost=cost,
        sweeps_used=iters,
        fp_residual_history=tuple(hist),
        diagnostics=(),
        converged=True,
    )


def uncontrolled_solve(spec: ProblemSpec) -> Trajectory:
    """Forward march with the adjoint forced to zero (no control)."""
    return forward_solve(spec, Trajectory.zeros(spec.grid, spec.time))


def with_time(spec: ProblemSpec, n_steps: int) -> ProblemSpec:
    return replace(spec, time=TimeGrid(spec.time.T, n_steps))


def with_grid(spec: ProblemSpec, grid: SpaceGrid) -> ProblemSpec:
    return replace(spec, grid=grid)
