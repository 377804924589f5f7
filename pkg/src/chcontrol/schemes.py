"""One implicit time step of the state equation and of the backward adjoint.

State equation, one step of size dt (A = Neumann Laplacian, f(y) = y^3 - y):

    s1 (nonlinear):  Y1 = Yn + dt*[A f(Y1) - eps^2 A^2 Y1 + Pn/lam]
                     solved by Newton with Jacobian I - dt*[A diag(f'(Y1)) - eps^2 A^2]
    s2 (linear):     [I - dt A diag(Yn^2) + dt eps^2 A^2] Y1
                         = Yn - dt A Yn + (dt/lam) Pn
    s3 (linear, constant matrix):
                     [I - 2 dt A + dt eps^2 A^2] Y1
                         = Yn + dt A Yn^3 - 3 dt A Yn + (dt/lam) Pn

Backward adjoint step (coefficient outside the Laplacian):

    [I - dt diag(f'(Y*)) A + dt eps^2 A^2] Pn = Pn1 + dt*(target_n1 - Yn1)

with Y* = Yn (variant "n", the default) or Yn1 (variant "n1").
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np

from . import linsolve
from .grid import Field, GridError

SCHEME_KINDS = ("s1", "s2", "s3")
ADJOINT_VARIANTS = ("n", "n1")


def f_eval(y):
    return y ** 3 - y


def f_prime(y):
    return 3.0 * y ** 2 - 1.0


def f_tilde(y):
    return y ** 3


@dataclass(frozen=True)
class NewtonConfig:
    residual_tol: float = 1e-10
    max_iters: int = 25

    def __post_init__(self) -> None:
        if not self.residual_tol > 0:
            raise ValueError(f"residual_tol must be positive, got {self.residual_tol}")
        if self.max_iters < 1:
            raise ValueError(f"max_iters must be at least 1, got {self.max_iters}")


@dataclass(frozen=True)
class StepReport:
    """Per-step diagnostics; newton_iters is 0 for the linear schemes."""

    newton_iters: int
    final_residual: float
    fprime_max: float
    residual_history: tuple[float, ...] = ()


class StepError(RuntimeError):
    """A time step failed; carries the residual history when available."""

    def __init__(self, message: str, residual_history=()):
        super().__init__(message)
        self.residual_history = tuple(residual_history)


def _check_params(eps: float, lam: float, dt: float) -> None:
    if not eps > 0:
        raise ValueError(f"interface parameter must be positive, got {eps}")
    if not lam > 0:
        raise ValueError(f"regularization weight must be positive, got {lam}")
    if not dt > 0:
        raise ValueError(f"time step must be positive, got {dt}")


def _warn_large_dt(dt: float, eps: float) -> None:
    if dt > eps * eps / 8.0:
        warnings.warn(
            "time step exceeds eps^2/8; schemes stay stable in practice but the "
            "step is outside the conservative regime",
            RuntimeWarning,
            stacklevel=3,
        )


def _norm_inf(v: np.ndarray) -> float:
    return float(np.abs(v).max())


def state_step_s1(yn: Field, pn: Field, eps: float, lam: float, dt: float,
                  cfg: NewtonConfig | None = None) -> tuple[Field, StepReport]:
    """Fully implicit nonlinear step, solved by Newton from the guess Yn."""
    cfg = cfg or NewtonConfig()
    _check_params(eps, lam, dt)
    _warn_large_dt(dt, eps)
    if pn.grid != yn.grid:
        raise GridError("state and adjoint fields live on different grids")
    grid = yn.grid
    a = linsolve.laplacian_matrix(grid)
    a2 = linsolve.bilaplacian_matrix(grid)
    e2 = dt * eps * eps
    base = yn.values + (dt / lam) * pn.values

    def residual(y: np.ndarray) -> np.ndarray:
        return y - dt * (a @ f_eval(y)) + e2 * (a2 @ y) - base

    y = yn.values.copy()
    r = residual(y)
    rnorm = _norm_inf(r)
    history = [rnorm]
    iters = 0
    while rnorm > cfg.residual_tol:
        if iters >= cfg.max_iters:
            raise StepError(
                f"Newton did not reach {cfg.residual_tol:g} within "
                f"{cfg.max_iters} iterations (residual {rnorm:.3e})",
                history,
            )
        jac = linsolve.assemble(1.0, dt * f_prime(y), e2, grid, coeff_side="inside")
        try:
            step = linsolve.factorize(jac).solve_array(-r)
        except linsolve.SolveError as exc:
            raise StepError(f"singular Newton Jacobian: {exc}", history) from exc
        y_new = y + step
        r_new = residual(y_new)
        rn_new = _norm_inf(r_new)
        if rn_new > rnorm:
            # single halving backtrack; keeps the converged root unchanged
            y_half = y + 0.5 * step
            r_half = residual(y_half)
            rn_half = _norm_inf(r_half)
            if rn_half < rn_new:
                y_new, r_new, rn_new = y_half, r_half, rn_half
        y, r, rnorm = y_new, r_new, rn_new
        iters += 1
        history.append(rnorm)
    report = StepReport(iters, rnorm, _norm_inf(f_prime(y)), tuple(history))
    return Field(grid, y), report


def state_step_s2(yn: Field, pn: Field, eps: float, lam: float,
                  dt: float) -> tuple[Field, StepReport]:
    """Linearized step: the cubic coefficient is frozen at Yn."""
    _check_params(eps, lam, dt)
    _warn_large_dt(dt, eps)
    if pn.grid != yn.grid:
        raise GridError("state and adjoint fields live on different grids")
    grid = yn.grid
    a = linsolve.laplacian_matrix(grid)
    y0 = yn.values
    op = linsolve.assemble(1.0, dt * y0 ** 2, dt * eps * eps, grid,
                           coeff_side="inside")
    rhs = y0 - dt * (a @ y0) + (dt / lam) * pn.values
    try:
        y1 = linsolve.factorize(op).solve_array(rhs)
    except linsolve.SolveError as exc:
        raise StepError(f"s2 state solve failed: {exc}") from exc
    resid = _norm_inf(op.matrix @ y1 - rhs)
    return Field(grid, y1), StepReport(0, resid, _norm_inf(f_prime(y0)))


def s3_operator(grid, eps: float, dt: float) -> linsolve.FactoredOperator:
    """Constant s3 matrix [I - 2 dt A + dt eps^2 A^2], factored once per run."""
    op = linsolve.assemble(1.0, 2.0 * dt, dt * eps * eps, grid, coeff_side="inside")
    return linsolve.factorize(op)


def state_step_s3(yn: Field, pn: Field, eps: float, lam: float, dt: float,
                  factored: linsolve.FactoredOperator | None = None
                  ) -> tuple[Field, StepReport]:
    """Linear step with a constant matrix; pass ``factored`` to reuse the LU."""
    _check_params(eps, lam, dt)
    _warn_large_dt(dt, eps)
    if pn.grid != yn.grid:
        raise GridError("state and adjoint fields live on different grids")
    grid = yn.grid
    if factored is None:
        factored = s3_operator(grid, eps, dt)
    elif factored.op.grid != grid:
        raise GridError("factored operator was built for a different grid")
    a = linsolve.laplacian_matrix(grid)
    y0 = yn.values
    rhs = y0 + dt * (a @ y0 ** 3) - 3.0 * dt * (a @ y0) + (dt / lam) * pn.values
    try:
        y1 = factored.solve_array(rhs)
    except linsolve.SolveError as exc:
        raise StepError(f"s3 state solve failed: {exc}") from exc
    resid = _norm_inf(factored.op.matrix @ y1 - rhs)
    return Field(grid, y1), StepReport(0, resid, _norm_inf(f_prime(y0)))


def adjoint_step(yn: Field, yn1: Field, pn1: Field, target_n1: Field,
                 eps: float, dt: float, variant: str = "n") -> Field:
    """One backward step of the adjoint equation from Pn1 to Pn."""
    if variant not in ADJOINT_VARIANTS:
        raise ValueError(f"adjoint variant must be one of {ADJOINT_VARIANTS}, "
                         f"got {variant!r}")
    if not eps > 0 or not dt > 0:
        raise ValueError("eps and dt must be positive")
    grid = yn.grid
    for other in (yn1, pn1, target_n1):
        if other.grid != grid:
            raise GridError("adjoint step fields live on different grids")
    ystar = yn if variant == "n" else yn1
    op = linsolve.assemble(1.0, dt * f_prime(ystar.values), dt * eps * eps,
                           grid, coeff_side="outside")
    rhs = pn1.values + dt * (target_n1.values - yn1.values)
    try:
        p = linsolve.factorize(op).solve_array(rhs)
    except linsolve.SolveError as exc:
        raise StepError(f"adjoint solve failed: {exc}") from exc
    return Field(grid, p)
