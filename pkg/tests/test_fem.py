import math

import numpy as np
import pytest

import oracles
from penalty_stab import (
    MeshError,
    ParameterDomainError,
    SingularCoreError,
    TridiagMatrix,
    assemble,
    cubic_jacobian,
    cubic_term,
    evaluate,
    make_partition,
    make_uniform_mesh,
    norms,
    project_initial,
)

RNG = np.random.default_rng(20240811)


def sin_pi(x):
    return np.sin(np.pi * np.asarray(x))


# ---------------------------------------------------------------------------
# meshes


def test_uniform_mesh_two_elements():
    mesh = make_uniform_mesh(2)
    assert np.array_equal(mesh.nodes, [0.0, 0.5, 1.0])
    assert mesh.h == 0.5
    assert mesh.n_dof == 2


def test_uniform_mesh_eight_elements():
    mesh = make_uniform_mesh(8)
    assert mesh.h == pytest.approx(0.125, rel=1e-15)
    assert mesh.n_dof == 8


def test_uniform_mesh_rejects_single_element():
    with pytest.raises(MeshError):
        make_uniform_mesh(1)


def test_partition_validation():
    with pytest.raises(MeshError):
        make_partition([0.0, 0.6, 0.5, 1.0])
    with pytest.raises(MeshError):
        make_partition([0.0, 0.5, 0.9])
    with pytest.raises(MeshError):
        make_partition([0.1, 0.5, 1.0])


def graded_mesh():
    return make_partition([0.0, 0.1, 0.3, 0.45, 0.8, 1.0])


# ---------------------------------------------------------------------------
# assembly


def test_assembled_stencils_uniform():
    n = 4
    h = 0.25
    system = assemble(make_uniform_mesh(n))
    assert np.allclose(system.mass.diag, [2 * h / 3] * (n - 1) + [h / 3], rtol=1e-15)
    assert np.allclose(system.mass.lower, [h / 6] * (n - 1), rtol=1e-15)
    assert np.allclose(system.stiffness.diag, [2 / h] * (n - 1) + [1 / h], rtol=1e-15)
    assert np.allclose(system.stiffness.lower, [-1 / h] * (n - 1), rtol=1e-15)
    # interior moments h * x_i, boundary moment h/2 - h^2/6
    assert np.allclose(system.moment[:-1], h * system.mesh.nodes[1:-1], rtol=1e-15)
    assert system.moment[-1] == pytest.approx(h / 2 - h * h / 6, rel=1e-15)
    assert system.boundary_dof == n - 1


@pytest.mark.parametrize("n", [2, 5, 8, 64])
def test_moment_sum_identity_uniform(n):
    system = assemble(make_uniform_mesh(n))
    h = 1.0 / n
    assert float(np.sum(system.moment)) == pytest.approx(0.5 - h * h / 6.0, abs=1e-15)


def test_moment_sum_identity_graded():
    mesh = graded_mesh()
    system = assemble(mesh)
    h1 = mesh.element_sizes[0]
    assert float(np.sum(system.moment)) == pytest.approx(0.5 - h1 * h1 / 6.0, abs=1e-15)


@pytest.mark.parametrize("mesh_factory", [lambda: make_uniform_mesh(6), graded_mesh])
def test_assembly_matches_dense_oracle(mesh_factory):
    mesh = mesh_factory()
    system = assemble(mesh)
    assert np.allclose(system.mass.to_dense(), oracles.dense_mass(mesh.nodes),
                       rtol=1e-13, atol=1e-16)
    assert np.allclose(system.stiffness.to_dense(), oracles.dense_stiffness(mesh.nodes),
                       rtol=1e-13, atol=1e-12)
    assert np.allclose(system.moment, oracles.dense_moment(mesh.nodes),
                       rtol=1e-13, atol=1e-16)


def test_mass_and_stiffness_are_spd():
    system = assemble(make_uniform_mesh(16))
    assert np.array_equal(system.mass.lower, system.mass.upper)
    assert np.array_equal(system.stiffness.lower, system.stiffness.upper)
    for _ in range(20):
        y = RNG.standard_normal(16)
        assert y @ system.mass.matvec(y) > 0.0
        assert y @ system.stiffness.matvec(y) > 0.0


def test_stiffness_row_sums_reflect_pinned_node():
    mesh = graded_mesh()
    system = assemble(mesh)
    ones = np.ones(mesh.n_dof)
    row_sums = system.stiffness.matvec(ones)
    expected = np.zeros(mesh.n_dof)
    expected[0] = 1.0 / mesh.element_sizes[0]  # coupling to the eliminated node
    assert np.allclose(row_sums, expected, atol=1e-12)
    # the unpinned matrix has exactly zero row sums
    full = oracles.dense_stiffness(mesh.nodes, pinned=False)
    assert np.allclose(full @ np.ones(len(mesh.nodes)), 0.0, atol=1e-12)


# ---------------------------------------------------------------------------
# initial projection


def test_project_zero_profile():
    mesh = make_uniform_mesh(8)
    assert np.array_equal(project_initial(mesh, lambda x: 0.0 * np.asarray(x)), np.zeros(8))


@pytest.mark.parametrize("mode", ["l2", "interpolation"])
def test_projection_reproduces_linear_functions(mode):
    mesh = make_uniform_mesh(8)
    coeffs = project_initial(mesh, lambda x: np.asarray(x), mode=mode)
    assert np.allclose(coeffs, mesh.nodes[1:], rtol=1e-13, atol=1e-14)


def test_projection_of_sine_matches_dense_quadrature_oracle():
    # 3-point Gauss load vs 50-point composite load: the gap is pure
    # quadrature truncation, O(h^5) for smooth data
    for n, bound in ((8, 5e-7), (16, 2e-8)):
        mesh = make_uniform_mesh(n)
        ours = project_initial(mesh, sin_pi)
        load = np.array([
            oracles.quad50(mesh.nodes,
                           lambda x, i=i: np.sin(np.pi * x) * oracles.hat(mesh.nodes, i + 1)(x))
            for i in range(n)
        ])
        reference = np.linalg.solve(oracles.dense_mass(mesh.nodes), load)
        assert np.max(np.abs(ours - reference)) < bound


def test_projection_differs_from_interpolant_at_second_order():
    gaps = []
    for n in (8, 16):
        mesh = make_uniform_mesh(n)
        gap = project_initial(mesh, sin_pi) - project_initial(mesh, sin_pi, "interpolation")
        gaps.append(float(np.max(np.abs(gap))))
    assert gaps[0] / gaps[1] == pytest.approx(4.0, abs=0.5)


def test_projection_rejects_nonzero_origin_and_unknown_mode():
    mesh = make_uniform_mesh(4)
    with pytest.raises(ParameterDomainError):
        project_initial(mesh, lambda x: np.asarray(x) + 1.0)
    with pytest.raises(ParameterDomainError):
        project_initial(mesh, sin_pi, mode="spectral")


def test_evaluate_is_zero_at_origin():
    mesh = make_uniform_mesh(4)
    y = RNG.standard_normal(4)
    assert evaluate(mesh, y, 0.0) == 0.0
    assert evaluate(mesh, y, 1.0) == pytest.approx(y[-1], rel=1e-15)


# ---------------------------------------------------------------------------
# cubic term and its jacobian


def test_cubic_term_of_zero_state():
    mesh = make_uniform_mesh(8)
    assert np.array_equal(cubic_term(mesh, np.zeros(8)), np.zeros(8))


def test_cubic_term_constant_patch():
    # state equal to c on the two elements around one interior node:
    # that node's entry is c^3 * h (the hat integrates to h there)
    n, c = 6, 1.7
    mesh = make_uniform_mesh(n)
    y = np.zeros(n)
    y[1:4] = c  # nodes 2,3,4 -> constant on elements 2..4, hat of node 3 inside
    out = cubic_term(mesh, y)
    assert out[2] == pytest.approx(c ** 3 / n, rel=1e-13)


def test_cubic_term_is_odd():
    mesh = make_uniform_mesh(9)
    y = RNG.standard_normal(9)
    assert np.array_equal(cubic_term(mesh, -y), -cubic_term(mesh, y))


@pytest.mark.parametrize("n", [4, 16, 64])
def test_cubic_term_matches_quadrature_oracle(n):
    mesh = make_uniform_mesh(n)
    y = RNG.standard_normal(n)
    ours = cubic_term(mesh, y)
    ref = oracles.dense_cubic_term(mesh.nodes, y)
    assert np.max(np.abs(ours - ref)) <= 1e-13 * max(1.0, np.max(np.abs(ref)))


def test_cubic_jacobian_of_zero_state():
    mesh = make_uniform_mesh(6)
    jac = cubic_jacobian(mesh, np.zeros(6))
    assert np.array_equal(jac.to_dense(), np.zeros((6, 6)))


def test_cubic_jacobian_of_unit_state():
    # away from the first element (where the pinned node makes the state ramp
    # from 0) the state is identically 1, so the jacobian rows equal 3*mass
    n = 8
    mesh = make_uniform_mesh(n)
    system = assemble(mesh)
    jac = cubic_jacobian(mesh, np.ones(n))
    h = 1.0 / n
    assert jac.diag[0] == pytest.approx(8 * h / 5, rel=1e-13)  # ramp element + unit element
    assert np.allclose(jac.diag[1:], 3.0 * system.mass.diag[1:], rtol=1e-13)
    assert np.allclose(jac.lower, 3.0 * system.mass.lower, rtol=1e-13)


def test_cubic_jacobian_matches_quadrature_oracle():
    mesh = graded_mesh()
    y = RNG.standard_normal(mesh.n_dof)
    ours = cubic_jacobian(mesh, y).to_dense()
    ref = oracles.dense_cubic_jacobian(mesh.nodes, y)
    assert np.max(np.abs(ours - ref)) <= 1e-13 * np.max(np.abs(ref))


def test_cubic_jacobian_is_directional_derivative():
    mesh = make_uniform_mesh(8)
    y = RNG.standard_normal(8)
    psi = RNG.standard_normal(8)
    jac_psi = cubic_jacobian(mesh, y).matvec(psi)
    errors = []
    for tau in (1e-3, 1e-4, 1e-5):
        fd = (cubic_term(mesh, y + tau * psi) - cubic_term(mesh, y)) / tau
        errors.append(np.max(np.abs(fd - jac_psi)))
    # forward differences converge at first order in tau
    assert errors[0] / errors[1] == pytest.approx(10.0, rel=0.15)
    assert errors[1] / errors[2] == pytest.approx(10.0, rel=0.15)


# ---------------------------------------------------------------------------
# norms


def test_norms_of_zero_state():
    system = assemble(make_uniform_mesh(8))
    ns = norms(system, np.zeros(8))
    assert ns.l2 == ns.linf == ns.l4 == ns.h1_semi == 0.0


def test_norms_of_identity_interpolant():
    # y(x) = x: exact L2 norm 1/sqrt(3), L4 norm (1/5)^{1/4}, slope 1
    n = 16
    system = assemble(make_uniform_mesh(n))
    y = system.mesh.nodes[1:].copy()
    ns = norms(system, y)
    assert ns.l2 == pytest.approx(1.0 / math.sqrt(3.0), abs=1e-15)
    assert ns.l4 == pytest.approx(0.2 ** 0.25, rel=1e-14)
    assert ns.h1_semi == pytest.approx(1.0, rel=1e-13)
    assert ns.linf == 1.0


def test_norms_match_quadrature_oracle():
    mesh = make_uniform_mesh(32)
    system = assemble(mesh)
    y = RNG.standard_normal(32)
    f = oracles.p1_function(mesh.nodes, y)
    ns = norms(system, y)
    assert ns.l2 == pytest.approx(math.sqrt(oracles.quad50(mesh.nodes, lambda x: f(x) ** 2)),
                                  rel=1e-13)
    assert ns.l4 == pytest.approx(oracles.quad50(mesh.nodes, lambda x: f(x) ** 4) ** 0.25,
                                  rel=1e-13)


def test_norms_reject_mismatched_state():
    system = assemble(make_uniform_mesh(8))
    with pytest.raises(MeshError):
        norms(system, np.zeros(7))


# ---------------------------------------------------------------------------
# tridiagonal solve


def test_tridiag_identity_solve():
    eye = TridiagMatrix.symmetric(np.ones(5), np.zeros(4))
    rhs = RNG.standard_normal(5)
    assert np.allclose(eye.solve(rhs), rhs, rtol=1e-15)


def test_tridiag_singular_matrix_raises():
    singular = TridiagMatrix.symmetric(np.zeros(4), np.zeros(3))
    with pytest.raises(SingularCoreError):
        singular.solve(np.ones(4))
