"""Post-processing: decay fits, energy monitors, and grid/penalty studies.

Pure functions over immutable trajectories; nothing here mutates its inputs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .errors import AnalysisError, MeshError
from .fem import AssembledSystem, MeshPartition, TridiagMatrix, assemble
from .params import ModelParams
from .solver import StateTrajectory, TimeGrid, simulate

#: Norm samples below this multiple of machine epsilon times the initial norm
#: are dropped from decay fits (they are round-off noise, not dynamics).
_FIT_FLOOR_FACTOR = 100.0


@dataclass(frozen=True)
class DecayFit:
    """Least-squares exponential rate fitted to the L2-norm history."""

    gamma_fit: float
    window: tuple[float, float]
    residual: float
    n_samples: int
    n_trimmed: int


def fit_decay_rate(trajectory: StateTrajectory,
                   window: tuple[float, float] | None = None) -> DecayFit:
    """Fit ``norm(t) ~ c * exp(-gamma_fit * t)`` over a time window.

    The fit is the least-squares slope of ``log(l2)`` against time; samples
    whose norm has decayed below 100 machine epsilons of the initial norm are
    trimmed first.  The default window skips the initial transient and spans
    ``[0.1 * t_end, t_end]``.

    Raises
    ------
    AnalysisError
        Fewer than 3 usable samples in the window.
    """
    t = trajectory.times
    norm = trajectory.l2
    if window is None:
        window = (0.1 * float(t[-1]), float(t[-1]))
    t0, t1 = window
    in_window = (t >= t0) & (t <= t1)
    floor = _FIT_FLOOR_FACTOR * np.finfo(float).eps * (norm[0] if norm.size else 0.0)
    usable = in_window & (norm > floor)
    n_trimmed = int(np.count_nonzero(in_window) - np.count_nonzero(usable))
    if np.count_nonzero(usable) < 3:
        raise AnalysisError(
            f"need at least 3 usable samples in window {window}, "
            f"got {int(np.count_nonzero(usable))} ({n_trimmed} trimmed by the norm floor)"
        )
    ts = t[usable]
    logs = np.log(norm[usable])
    slope, intercept = np.polyfit(ts, logs, 1)
    misfit = float(np.sum((slope * ts + intercept - logs) ** 2))
    return DecayFit(gamma_fit=float(-slope), window=(float(t0), float(t1)),
                    residual=misfit, n_samples=int(np.count_nonzero(usable)),
                    n_trimmed=n_trimmed)


@dataclass(frozen=True)
class MonitorResult:
    """Verdict of the discrete energy-decay inequality check."""

    passed: bool
    first_violation: int | None
    gamma: float


def energy_monitor(trajectory: StateTrajectory, gamma: float) -> MonitorResult:
    """Check ``l2[n]^2 <= exp(-2*gamma*t_n) * l2[0]^2`` for every level.

    A relative slack of 1e-12 absorbs round-off in the bound; the result
    reports the first violating level, if any.
    """
    if gamma < 0.0:
        raise AnalysisError(f"gamma must be non-negative, got {gamma!r}")
    bound = np.exp(-2.0 * gamma * trajectory.times) * trajectory.l2[0] ** 2
    bad = trajectory.l2 ** 2 > bound * (1.0 + 1e-12)
    if not bad.any():
        return MonitorResult(passed=True, first_violation=None, gamma=gamma)
    return MonitorResult(passed=False, first_violation=int(np.argmax(bad)), gamma=gamma)


def restrict_to_coarse(fine_values: np.ndarray, fine_mesh: MeshPartition,
                       coarse_mesh: MeshPartition) -> np.ndarray:
    """Sample a fine-mesh state at the nodes of a nested coarse mesh.

    Requires the coarse nodes to be a subset of the fine nodes (for uniform
    meshes: the fine element count divisible by the coarse one).
    """
    if fine_values.shape != (fine_mesh.n_dof,):
        raise MeshError("fine state does not match the fine mesh")
    n_fine, n_coarse = fine_mesh.n_elements, coarse_mesh.n_elements
    if n_fine % n_coarse != 0:
        raise MeshError(f"meshes are not nested: {n_fine} elements vs {n_coarse}")
    ratio = n_fine // n_coarse
    if not np.allclose(fine_mesh.nodes[::ratio], coarse_mesh.nodes, atol=1e-12, rtol=0.0):
        raise MeshError("coarse nodes are not a subset of the fine nodes")
    return fine_values[ratio - 1 :: ratio].copy()


def error_vs_reference(coarse_values: np.ndarray, reference_fine_values: np.ndarray,
                       coarse_system: AssembledSystem,
                       fine_mesh: MeshPartition) -> tuple[float, float]:
    """L2 and max-nodal norms of (coarse solution - restricted reference)."""
    restricted = restrict_to_coarse(reference_fine_values, fine_mesh, coarse_system.mesh)
    e = coarse_values - restricted
    l2 = math.sqrt(max(float(e @ coarse_system.mass.matvec(e)), 0.0))
    return l2, float(np.max(np.abs(e), initial=0.0))


def observed_orders(errors: Sequence[float], hs: Sequence[float]) -> np.ndarray:
    """Observed convergence orders ``log2(e_{j-1} / e_j)`` between rows.

    ``hs`` must decrease by exact factors of 2.  Pairs containing a zero
    error yield ``nan`` (flagged, not an exception).
    """
    errors = np.asarray(errors, dtype=float)
    hs = np.asarray(hs, dtype=float)
    if errors.shape != hs.shape or errors.ndim != 1 or errors.size < 2:
        raise AnalysisError("errors and hs must be 1D sequences of equal length >= 2")
    ratios = hs[:-1] / hs[1:]
    if not np.allclose(ratios, 2.0, rtol=1e-9, atol=0.0):
        raise AnalysisError(f"mesh sizes must halve between rows, got ratios {ratios}")
    orders = np.full(errors.size - 1, np.nan)
    valid = (errors[:-1] > 0.0) & (errors[1:] > 0.0)
    orders[valid] = np.log2(errors[:-1][valid] / errors[1:][valid])
    return orders


@dataclass(frozen=True)
class ConvergenceRow:
    """One mesh level of a grid-refinement study (orders are None on row 0)."""

    h: float
    epsilon: float
    k: float
    error_l2: float
    error_linf: float
    order_l2: float | None
    order_linf: float | None
    control_error_linf: float
    control_order_linf: float | None


@dataclass(frozen=True)
class ConvergenceReport:
    rows: tuple[ConvergenceRow, ...]
    reference_description: str


@dataclass(frozen=True)
class EpsilonRow:
    """One penalty value of a continuation study.

    State norms are reported at final time, with sup-over-time companions;
    the control and all successive-difference columns are sup-over-time.
    Difference columns are None on the first row and NaN next to failed runs.
    """

    epsilon: float
    r: float
    state_l2: float
    state_linf: float
    state_l2_sup: float
    state_linf_sup: float
    control_linf: float
    diff_l2: float | None
    diff_linf: float | None
    control_diff_linf: float | None
    failed: bool = False


@dataclass(frozen=True)
class EpsilonStudyReport:
    rows: tuple[EpsilonRow, ...]


def _rowwise_l2(mass: TridiagMatrix, states: np.ndarray) -> np.ndarray:
    """L2 norm of every row of a (levels, n_dof) array of states."""
    mv = states * mass.diag
    mv[:, :-1] += states[:, 1:] * mass.upper
    mv[:, 1:] += states[:, :-1] * mass.lower
    return np.sqrt(np.maximum(np.einsum("ij,ij->i", states, mv), 0.0))


def epsilon_cauchy_study(params_base: ModelParams, mesh: MeshPartition,
                         time_grid: TimeGrid, epsilons: Sequence[float],
                         gain_rule: Callable[[float], float], *,
                         y0: Callable[[np.ndarray], np.ndarray],
                         projection: str = "l2", newton_tol: float = 1e-12,
                         newton_max_iter: int = 25) -> EpsilonStudyReport:
    """Run the penalized scheme over a descending list of penalty values.

    All runs share the mesh and time grid, so successive solutions live on
    the identical space-time grid and their differences are plain norms of
    state differences.  The gain of each run is ``gain_rule(epsilon)``.
    A failed run marks its row and poisons the adjacent difference entries.
    """
    epsilons = [float(e) for e in epsilons]
    if any(e2 > e1 for e1, e2 in zip(epsilons, epsilons[1:])):
        raise AnalysisError("epsilons must be descending")
    system = assemble(mesh)
    rows: list[EpsilonRow] = []
    prev: StateTrajectory | None = None
    n_levels = time_grid.n_steps + 1
    for i, eps in enumerate(epsilons):
        params = ModelParams(nu=params_base.nu, alpha=params_base.alpha,
                             delta=params_base.delta, r=float(gain_rule(eps)),
                             epsilon=eps)
        traj = simulate(params, mesh, y0, time_grid, "penalized_feedback",
                        projection=projection, newton_tol=newton_tol,
                        newton_max_iter=newton_max_iter)
        failed = traj.failed_at is not None
        diff_l2 = diff_linf = control_diff = None
        if i > 0:
            if failed or prev is None or prev.failed_at is not None:
                diff_l2 = diff_linf = control_diff = float("nan")
            else:
                d = traj.states - prev.states
                diff_l2 = float(np.max(_rowwise_l2(system.mass, d)))
                diff_linf = float(np.max(np.abs(d)))
                control_diff = float(np.max(np.abs(traj.controls - prev.controls)))
        rows.append(EpsilonRow(
            epsilon=eps,
            r=params.r,
            state_l2=float(traj.l2[-1]),
            state_linf=float(traj.linf[-1]),
            state_l2_sup=float(np.max(traj.l2)),
            state_linf_sup=float(np.max(traj.linf)),
            control_linf=float(np.max(np.abs(traj.controls))),
            diff_l2=diff_l2,
            diff_linf=diff_linf,
            control_diff_linf=control_diff,
            failed=failed,
        ))
        prev = traj if traj.n_recorded == n_levels else None
    return EpsilonStudyReport(rows=tuple(rows))
