"""Fully discrete scheme: backward Euler in time, Newton per step.

Each step of the penalized feedback scheme solves the nonlinear system

    M (Y - Y_prev)/k + nu K Y + (nu/eps) Y(1) e_b + delta C(Y)
        - alpha M Y + (nu r / eps) (w . Y) e_b = 0

where ``C`` is the cubic load vector, ``w`` the control moment vector, and
``e_b`` selects the boundary DOF.  The control is treated implicitly (the
feedback functional is evaluated at the unknown state), which adds a rank-one
row to the otherwise tridiagonal Newton matrix; the linear solves exploit
that structure via a tridiagonal elimination plus a Sherman-Morrison
correction.  The Robin penalty itself is folded into the last diagonal entry
of the tridiagonal core, so the banded solve is unmodified.

The uncontrolled baseline pins both endpoints to zero (the boundary DOF and
all penalty terms are dropped) and steps the homogeneous problem.

A single simulation is strictly sequential in time; independent simulations
share no mutable state and may run concurrently.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass
from typing import Callable

import numpy as np

from .errors import MeshError, ParameterDomainError, SingularUpdateError
from .fem import (
    AssembledSystem,
    MeshPartition,
    TridiagMatrix,
    assemble,
    cubic_jacobian,
    cubic_term,
    norms,
    project_initial,
)
from .params import ModelParams, check_admissibility

VARIANTS = ("penalized_feedback", "uncontrolled_dirichlet")


@dataclass(frozen=True)
class TimeGrid:
    """Uniform time grid with step ``k`` and ``n_steps`` steps."""

    k: float
    n_steps: int

    def __post_init__(self) -> None:
        if not (self.k > 0.0):
            raise ParameterDomainError(f"time step must be positive, got {self.k!r}")
        if self.n_steps < 1:
            raise ParameterDomainError(f"n_steps must be >= 1, got {self.n_steps}")

    @property
    def T(self) -> float:
        return self.k * self.n_steps

    def times(self) -> np.ndarray:
        return np.arange(self.n_steps + 1) * self.k

    @classmethod
    def from_final_time(cls, k: float, T: float) -> "TimeGrid":
        """Grid with step ``k`` reaching ``T``; ``k`` must divide ``T``."""
        if not (k > 0.0 and T > 0.0):
            raise ParameterDomainError("k and T must be positive")
        n = round(T / k)
        if n < 1 or abs(n * k - T) > 1e-9 * max(1.0, T):
            raise ParameterDomainError(f"time step {k!r} does not divide the final time {T!r}")
        return cls(k=k, n_steps=n)


@dataclass(frozen=True)
class StepReport:
    """Newton diagnostics for one time step.

    ``newton_iterations`` counts linearized solves; convergence is checked on
    the post-update residual, so even an already-converged state performs one
    (zero) update.  ``residual_norms`` holds the Euclidean residual norm
    before the first update and after each one.
    """

    newton_iterations: int
    final_residual_norm: float
    control_value: float
    converged: bool
    residual_norms: tuple[float, ...]


@dataclass(eq=False)
class StateTrajectory:
    """Time series produced by :func:`simulate`.

    All arrays have one row/entry per recorded time level, including the
    initial state.  ``controls[n]`` always equals ``-r * (moment . states[n])``
    for the penalized variant and 0 for the uncontrolled one.  If a Newton
    step fails, the trajectory is truncated at the last converged level and
    ``failed_at`` records the 1-based index of the failed step (its
    diagnostic report is still appended).
    """

    variant: str
    times: np.ndarray
    states: np.ndarray
    controls: np.ndarray
    l2: np.ndarray
    linf: np.ndarray
    l4: np.ndarray
    h1_semi: np.ndarray
    step_reports: list[StepReport]
    failed_at: int | None = None

    @property
    def n_recorded(self) -> int:
        return self.times.shape[0]


@dataclass(frozen=True, eq=False)
class RankOneUpdate:
    """Rank-one matrix contribution ``outer(u, v)``."""

    u: np.ndarray
    v: np.ndarray


def residual(params: ModelParams, system: AssembledSystem, y: np.ndarray,
             y_prev: np.ndarray, k: float,
             control_state: np.ndarray | None = None) -> np.ndarray:
    """Residual of one backward Euler step of the penalized feedback scheme.

    ``control_state`` selects the state the feedback functional acts on;
    the default (``None``) is the implicit choice ``y`` itself.
    """
    n = system.n_dof
    if y.shape != (n,) or y_prev.shape != (n,):
        raise MeshError("state vectors do not match the assembled system")
    if k <= 0.0:
        raise ParameterDomainError(f"time step must be positive, got {k!r}")
    m = system.mass
    f = m.matvec(y - y_prev) / k
    f += params.nu * system.stiffness.matvec(y)
    f -= params.alpha * m.matvec(y)
    f += params.delta * cubic_term(system.mesh, y)
    yc = y if control_state is None else control_state
    b = system.boundary_dof
    # Penalty and feedback combined before the 1/eps amplification keeps the
    # boundary equation accurate at very small eps.
    f[b] += (params.nu / params.epsilon) * (y[b] + params.r * float(system.moment @ yc))
    return f


def jacobian(params: ModelParams, system: AssembledSystem, y: np.ndarray, k: float,
             implicit_control: bool = True) -> tuple[TridiagMatrix, RankOneUpdate | None]:
    """Newton matrix of :func:`residual`, split into tridiagonal + rank-one.

    The tridiagonal core is ``M/k + nu K - alpha M + delta C'(y)`` with the
    penalty ``nu/eps`` folded into the boundary diagonal entry.  The implicit
    feedback contributes the dense boundary row ``(nu r / eps) e_b w^T``,
    returned separately (``None`` when ``r == 0`` or the control is lagged).
    """
    m = system.mass
    jc = cubic_jacobian(system.mesh, y)
    weight = 1.0 / k - params.alpha
    diag = weight * m.diag + params.nu * system.stiffness.diag + params.delta * jc.diag
    off = weight * m.lower + params.nu * system.stiffness.lower + params.delta * jc.lower
    diag[system.boundary_dof] += params.nu / params.epsilon
    core = TridiagMatrix.symmetric(diag, off)
    if params.r == 0.0 or not implicit_control:
        return core, None
    u = np.zeros(system.n_dof)
    u[system.boundary_dof] = 1.0
    return core, RankOneUpdate(u=u, v=(params.nu * params.r / params.epsilon) * system.moment)


def solve_structured(core: TridiagMatrix, rank_one: RankOneUpdate | None,
                     rhs: np.ndarray) -> np.ndarray:
    """Solve ``(core + outer(u, v)) x = rhs`` exploiting the structure.

    One banded elimination handles both right-hand sides (``rhs`` and ``u``);
    the rank-one part is then removed by the Sherman-Morrison correction.

    Raises
    ------
    SingularCoreError
        Zero pivot in the tridiagonal elimination.
    SingularUpdateError
        The correction denominator ``1 + v . core^{-1} u`` vanishes.
    """
    if rank_one is None:
        return core.solve(rhs)
    both = core.solve(np.column_stack((rhs, rank_one.u)))
    x_rhs, x_u = both[:, 0], both[:, 1]
    v_xu = float(rank_one.v @ x_u)
    denom = 1.0 + v_xu
    if abs(denom) <= 1e-12 * max(1.0, abs(v_xu)):
        raise SingularUpdateError(
            f"rank-one update is singular: 1 + v.core^-1.u = {denom:.3e}"
        )
    return x_rhs - x_u * (float(rank_one.v @ x_rhs) / denom)


def newton_solve(params: ModelParams, system: AssembledSystem, y_prev: np.ndarray,
                 k: float, tol: float = 1e-12, max_iter: int = 25,
                 implicit_control: bool = True) -> tuple[np.ndarray, StepReport]:
    """Advance one backward Euler step by Newton iteration from ``y_prev``.

    Stops when the Euclidean norm of the residual drops to ``tol``.  A step
    that exhausts ``max_iter`` returns its diagnostics with
    ``converged=False`` instead of raising; linear-solve failures propagate.
    """
    if tol <= 0.0 or max_iter < 1:
        raise ParameterDomainError("tol must be positive and max_iter >= 1")
    y = y_prev.copy()
    control_state = None if implicit_control else y_prev
    f = residual(params, system, y, y_prev, k, control_state=control_state)
    history = [float(np.linalg.norm(f))]
    converged = False
    for _ in range(max_iter):
        core, rank_one = jacobian(params, system, y, k, implicit_control=implicit_control)
        y = y - solve_structured(core, rank_one, f)
        f = residual(params, system, y, y_prev, k, control_state=control_state)
        history.append(float(np.linalg.norm(f)))
        if history[-1] <= tol:
            converged = True
            break
    report = StepReport(
        newton_iterations=len(history) - 1,
        final_residual_norm=history[-1],
        control_value=-params.r * float(system.moment @ y),
        converged=converged,
        residual_norms=tuple(history),
    )
    return y, report


def _reduced(matrix: TridiagMatrix) -> TridiagMatrix:
    """Principal submatrix dropping the boundary DOF (both endpoints pinned)."""
    return TridiagMatrix.symmetric(matrix.diag[:-1].copy(), matrix.lower[:-1].copy())


def _newton_uncontrolled(params: ModelParams, system: AssembledSystem,
                         y_prev: np.ndarray, k: float, tol: float,
                         max_iter: int) -> tuple[np.ndarray, StepReport]:
    """One step of the homogeneous problem with both endpoints pinned.

    States are full-length vectors whose boundary entry stays exactly zero;
    the Newton system acts on the interior DOFs only.
    """
    mesh = system.mesh
    m_red = _reduced(system.mass)
    k_red = _reduced(system.stiffness)
    weight = 1.0 / k - params.alpha

    def f_red(y_full: np.ndarray) -> np.ndarray:
        f = system.mass.matvec(y_full - y_prev) / k
        f += params.nu * system.stiffness.matvec(y_full)
        f -= params.alpha * system.mass.matvec(y_full)
        f += params.delta * cubic_term(mesh, y_full)
        return f[:-1]

    y = y_prev.copy()
    y[-1] = 0.0
    f = f_red(y)
    history = [float(np.linalg.norm(f))]
    converged = False
    for _ in range(max_iter):
        jc = _reduced(cubic_jacobian(mesh, y))
        core = TridiagMatrix.symmetric(
            weight * m_red.diag + params.nu * k_red.diag + params.delta * jc.diag,
            weight * m_red.lower + params.nu * k_red.lower + params.delta * jc.lower,
        )
        y[:-1] -= core.solve(f)
        f = f_red(y)
        history.append(float(np.linalg.norm(f)))
        if history[-1] <= tol:
            converged = True
            break
    report = StepReport(
        newton_iterations=len(history) - 1,
        final_residual_norm=history[-1],
        control_value=0.0,
        converged=converged,
        residual_norms=tuple(history),
    )
    return y, report


def simulate(params: ModelParams, mesh: MeshPartition,
             y0: Callable[[np.ndarray], np.ndarray], time_grid: TimeGrid,
             variant: str = "penalized_feedback", *, projection: str = "l2",
             newton_tol: float = 1e-12, newton_max_iter: int = 25,
             implicit_control: bool = True) -> StateTrajectory:
    """Run the fully discrete scheme over ``time_grid``.

    ``variant="penalized_feedback"`` steps the penalized scheme with the
    feedback control; ``variant="uncontrolled_dirichlet"`` pins both
    endpoints to zero and drops every penalty and control term.  Parameters
    that violate the stabilization conditions trigger a warning, not an
    error; some study regimes violate them deliberately.
    """
    if variant not in VARIANTS:
        raise ParameterDomainError(f"unknown variant {variant!r}; expected one of {VARIANTS}")
    admissible, detail = check_admissibility(params)
    if not admissible and variant == "penalized_feedback":
        warnings.warn(f"stabilization conditions violated; decay is not certified ({detail})",
                      RuntimeWarning, stacklevel=2)

    system = assemble(mesh)
    n_dof = system.n_dof
    n_levels = time_grid.n_steps + 1
    times = time_grid.times()
    states = np.zeros((n_levels, n_dof))
    controls = np.zeros(n_levels)
    norm_arrays = {name: np.zeros(n_levels) for name in ("l2", "linf", "l4", "h1_semi")}
    reports: list[StepReport] = []

    y = project_initial(mesh, y0, mode=projection)
    if variant == "uncontrolled_dirichlet":
        y[-1] = 0.0

    def record(level: int, state: np.ndarray) -> None:
        states[level] = state
        if variant == "penalized_feedback":
            controls[level] = -params.r * float(system.moment @ state)
        ns = norms(system, state)
        for name in norm_arrays:
            norm_arrays[name][level] = getattr(ns, name)

    record(0, y)
    reports.append(StepReport(newton_iterations=0, final_residual_norm=0.0,
                              control_value=float(controls[0]), converged=True,
                              residual_norms=(0.0,)))

    failed_at = None
    recorded = 1
    for n in range(1, n_levels):
        if variant == "penalized_feedback":
            y, report = newton_solve(params, system, y, time_grid.k,
                                     tol=newton_tol, max_iter=newton_max_iter,
                                     implicit_control=implicit_control)
        else:
            y, report = _newton_uncontrolled(params, system, y, time_grid.k,
                                             newton_tol, newton_max_iter)
        reports.append(report)
        if not report.converged:
            failed_at = n
            break
        record(n, y)
        recorded = n + 1

    return StateTrajectory(
        variant=variant,
        times=times[:recorded],
        states=states[:recorded],
        controls=controls[:recorded],
        l2=norm_arrays["l2"][:recorded],
        linf=norm_arrays["linf"][:recorded],
        l4=norm_arrays["l4"][:recorded],
        h1_semi=norm_arrays["h1_semi"][:recorded],
        step_reports=reports,
        failed_at=failed_at,
    )
