"""1D piecewise-linear finite elements on (0, 1) with the left node pinned.

Conventions used throughout the package:

* A partition ``0 = x_0 < x_1 < ... < x_N = 1`` carries one hat function per
  node; the space pins ``x_0`` to honor the boundary value ``y(t, 0) = 0``.
* Degrees of freedom are the nodes ``1..N``.  A state vector ``y`` has length
  ``N`` with ``y[i]`` the value at node ``i + 1``; the value at ``x = 0`` is
  implicitly zero.  The boundary trace ``y(1)`` is the last entry.
* All matrices are tridiagonal (P1 elements never couple beyond neighbors)
  and stored as three diagonals.
* Every nonlinear or load integral uses 3-point Gauss-Legendre per element,
  which integrates the degree-4 polynomials arising from cubic terms of P1
  functions exactly, so quadrature contributes no error to convergence
  studies.

Assembly and evaluation are pure functions of immutable inputs.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.linalg import LinAlgError, solve_banded

from .errors import MeshError, ParameterDomainError, SingularCoreError

# 3-point Gauss-Legendre rule mapped to the reference element [0, 1];
# exact for polynomials of degree <= 5.
_G = math.sqrt(0.6)
GAUSS3_POINTS = np.array([0.5 * (1.0 - _G), 0.5, 0.5 * (1.0 + _G)])
GAUSS3_WEIGHTS = np.array([5.0 / 18.0, 8.0 / 18.0, 5.0 / 18.0])


@dataclass(frozen=True, eq=False)
class TridiagMatrix:
    """Tridiagonal matrix stored as three diagonals.

    ``lower[i]`` is entry ``(i+1, i)`` and ``upper[i]`` is entry ``(i, i+1)``.
    """

    diag: np.ndarray
    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self) -> None:
        n = self.diag.shape[0]
        if self.lower.shape != (n - 1,) or self.upper.shape != (n - 1,):
            raise ValueError("off-diagonals must have length n - 1")

    @classmethod
    def symmetric(cls, diag: np.ndarray, off: np.ndarray) -> "TridiagMatrix":
        return cls(diag=diag, lower=off, upper=off)

    @property
    def n(self) -> int:
        return self.diag.shape[0]

    def matvec(self, x: np.ndarray) -> np.ndarray:
        y = self.diag * x
        y[:-1] += self.upper * x[1:]
        y[1:] += self.lower * x[:-1]
        return y

    def to_dense(self) -> np.ndarray:
        a = np.diag(self.diag)
        a += np.diag(self.lower, -1)
        a += np.diag(self.upper, 1)
        return a

    def solve(self, rhs: np.ndarray) -> np.ndarray:
        """Direct tridiagonal solve (LAPACK elimination on the three bands).

        ``rhs`` may be a vector or a matrix of stacked right-hand sides.

        Raises
        ------
        SingularCoreError
            On a zero pivot (exactly singular matrix).
        """
        n = self.n
        ab = np.zeros((3, n))
        ab[0, 1:] = self.upper
        ab[1, :] = self.diag
        ab[2, :-1] = self.lower
        try:
            return solve_banded((1, 1), ab, rhs)
        except LinAlgError as exc:
            raise SingularCoreError(f"singular tridiagonal system: {exc}") from exc


@dataclass(frozen=True, eq=False)
class MeshPartition:
    """Partition of [0, 1] with strictly increasing nodes."""

    nodes: np.ndarray
    element_sizes: np.ndarray
    h: float

    @property
    def n_elements(self) -> int:
        return self.element_sizes.shape[0]

    @property
    def n_dof(self) -> int:
        return self.n_elements  # nodes 1..N; node 0 is pinned


def make_partition(nodes) -> MeshPartition:
    """Build a (possibly graded) partition from explicit node coordinates."""
    nodes = np.asarray(nodes, dtype=float)
    if nodes.ndim != 1 or nodes.shape[0] < 3:
        raise MeshError("a partition needs at least 3 nodes (2 elements)")
    if nodes[0] != 0.0 or nodes[-1] != 1.0:
        raise MeshError("partition must span exactly [0, 1]")
    sizes = np.diff(nodes)
    if np.any(sizes <= 0.0):
        raise MeshError("nodes must be strictly increasing")
    return MeshPartition(nodes=nodes, element_sizes=sizes, h=float(sizes.max()))


def make_uniform_mesh(n_elements: int) -> MeshPartition:
    """Uniform partition with ``n_elements >= 2`` elements of size 1/n."""
    if n_elements < 2:
        raise MeshError(f"n_elements must be >= 2, got {n_elements}")
    return make_partition(np.linspace(0.0, 1.0, n_elements + 1))


@dataclass(frozen=True, eq=False)
class AssembledSystem:
    """Mass matrix, stiffness matrix, and control moment vector on a mesh.

    ``moment[i]`` is the integral of ``x`` times the hat function of DOF
    ``i``, so the feedback functional evaluates as ``-r * (moment @ y)``.
    ``boundary_dof`` is the 0-based index of the node at ``x = 1``.
    """

    mesh: MeshPartition
    mass: TridiagMatrix
    stiffness: TridiagMatrix
    moment: np.ndarray
    boundary_dof: int

    @property
    def n_dof(self) -> int:
        return self.mesh.n_dof


def _scatter_element_loads(left: np.ndarray, right: np.ndarray) -> np.ndarray:
    """Accumulate per-element (left node, right node) loads into DOF order.

    Element ``e`` spans nodes ``e`` and ``e + 1``; the left load of element 0
    belongs to the pinned node and is dropped.
    """
    out = right.copy()
    out[:-1] += left[1:]
    return out


def _scatter_element_matrix(d_left, d_right, off) -> TridiagMatrix:
    """Assemble per-element 2x2 symmetric contributions into a TridiagMatrix."""
    diag = _scatter_element_loads(d_left, d_right)
    return TridiagMatrix.symmetric(diag, off[1:].copy())


def _mass_matrix(mesh: MeshPartition) -> TridiagMatrix:
    h = mesh.element_sizes
    return _scatter_element_matrix(h / 3.0, h / 3.0, h / 6.0)


def _stiffness_matrix(mesh: MeshPartition) -> TridiagMatrix:
    inv = 1.0 / mesh.element_sizes
    return _scatter_element_matrix(inv, inv, -inv)


def _moment_vector(mesh: MeshPartition) -> np.ndarray:
    h = mesh.element_sizes
    x_left = mesh.nodes[:-1]
    return _scatter_element_loads(h * (x_left / 2.0 + h / 6.0),
                                  h * (x_left / 2.0 + h / 3.0))


def assemble(mesh: MeshPartition) -> AssembledSystem:
    """Assemble mass, stiffness, and moment exactly (closed-form integrals).

    On a uniform mesh the entries reduce to the familiar stencils: interior
    mass row ``(h/6)(1, 4, 1)``, interior stiffness row ``(1/h)(-1, 2, -1)``,
    ``moment[i] = h * x_i`` at interior nodes, and at the boundary node
    ``mass = h/3``, ``stiffness = 1/h``, ``moment = h/2 - h^2/6``.
    """
    return AssembledSystem(
        mesh=mesh,
        mass=_mass_matrix(mesh),
        stiffness=_stiffness_matrix(mesh),
        moment=_moment_vector(mesh),
        boundary_dof=mesh.n_dof - 1,
    )


def _element_endpoint_values(y: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Nodal values (left, right) of each element; the pinned node is zero."""
    left = np.empty_like(y)
    left[0] = 0.0
    left[1:] = y[:-1]
    return left, y


def _gauss_values(y: np.ndarray) -> np.ndarray:
    """Values of the P1 function at the 3 Gauss points of every element.

    Returns an array of shape ``(n_elements, 3)``.
    """
    left, right = _element_endpoint_values(y)
    return left[:, None] + np.outer(right - left, GAUSS3_POINTS)


def evaluate(mesh: MeshPartition, y: np.ndarray, x) -> np.ndarray:
    """Evaluate the P1 function with coefficients ``y`` at points ``x``."""
    values = np.concatenate(([0.0], np.asarray(y, dtype=float)))
    return np.interp(x, mesh.nodes, values)


def cubic_term(mesh: MeshPartition, y: np.ndarray) -> np.ndarray:
    """Load vector of the cubic nonlinearity: entries ``integral(y^3 * phi_i)``.

    The integrand is polynomial of degree 4 per element, so the 3-point Gauss
    rule is exact.
    """
    vals = _gauss_values(y) ** 3
    h = mesh.element_sizes
    w_left = GAUSS3_WEIGHTS * (1.0 - GAUSS3_POINTS)
    w_right = GAUSS3_WEIGHTS * GAUSS3_POINTS
    return _scatter_element_loads(h * (vals @ w_left), h * (vals @ w_right))


def cubic_jacobian(mesh: MeshPartition, y: np.ndarray) -> TridiagMatrix:
    """Derivative of :func:`cubic_term`: entries ``integral(3*y^2*phi_j*phi_i)``.

    Symmetric positive semidefinite; exact by the same degree argument.
    """
    sq = 3.0 * _gauss_values(y) ** 2
    h = mesh.element_sizes
    s = GAUSS3_POINTS
    w_ll = GAUSS3_WEIGHTS * (1.0 - s) ** 2
    w_rr = GAUSS3_WEIGHTS * s ** 2
    w_lr = GAUSS3_WEIGHTS * s * (1.0 - s)
    return _scatter_element_matrix(h * (sq @ w_ll), h * (sq @ w_rr), h * (sq @ w_lr))


def project_initial(mesh: MeshPartition, f: Callable[[np.ndarray], np.ndarray],
                    mode: str = "l2") -> np.ndarray:
    """Discretize an initial profile ``f`` with ``f(0) = 0``.

    ``mode="l2"`` (default) solves ``M c = (f, phi_i)`` with the load computed
    by the 3-point Gauss rule per element; ``mode="interpolation"`` samples
    ``f`` at the nodes.  Both reproduce members of the P1 space exactly.
    """
    f0 = float(f(np.asarray(0.0)))
    if abs(f0) > 1e-9:
        raise ParameterDomainError(f"initial profile must vanish at x = 0, got f(0) = {f0!r}")
    if mode == "interpolation":
        return np.asarray(f(mesh.nodes[1:]), dtype=float)
    if mode != "l2":
        raise ParameterDomainError(f"unknown projection mode {mode!r}")
    x_left = mesh.nodes[:-1]
    h = mesh.element_sizes
    # f at the Gauss points of every element, shape (n_elements, 3)
    fx = np.asarray(f(x_left[:, None] + np.outer(h, GAUSS3_POINTS)), dtype=float)
    w_left = GAUSS3_WEIGHTS * (1.0 - GAUSS3_POINTS)
    w_right = GAUSS3_WEIGHTS * GAUSS3_POINTS
    load = _scatter_element_loads(h * (fx @ w_left), h * (fx @ w_right))
    return _mass_matrix(mesh).solve(load)


@dataclass(frozen=True)
class NormSet:
    """L2, max-nodal, L4, and H1-seminorm of a discrete state."""

    l2: float
    linf: float
    l4: float
    h1_semi: float


def norms(system: AssembledSystem, y: np.ndarray) -> NormSet:
    """Evaluate all norms of a state on the system's mesh.

    ``l2 = sqrt(y' M y)`` and ``h1_semi = sqrt(y' K y)`` are exact; ``l4``
    uses the (exact) 3-point Gauss rule; ``linf`` is the max nodal magnitude,
    which for P1 functions coincides with the true sup-norm.
    """
    if y.shape != (system.n_dof,):
        raise MeshError(f"state has {y.shape[0]} DOFs, system expects {system.n_dof}")
    quartic = _gauss_values(y) ** 4
    integral_4 = float(system.mesh.element_sizes @ (quartic @ GAUSS3_WEIGHTS))
    return NormSet(
        l2=math.sqrt(max(float(y @ system.mass.matvec(y)), 0.0)),
        linf=float(np.max(np.abs(y), initial=0.0)),
        l4=integral_4 ** 0.25,
        h1_semi=math.sqrt(max(float(y @ system.stiffness.matvec(y)), 0.0)),
    )
