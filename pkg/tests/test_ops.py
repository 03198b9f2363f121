import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from magvisc.grid import GridSpec, InitialConditionSpec, fill_dirichlet, fill_neumann, make_state, pad_cells
from magvisc.ops import (advect, divergence, elastic_stress_div, ginzburg_landau, gradient, laplacian,
                         magnetic_force, magnetic_stress_div, magnetic_tensor, momentum_advection, tensor_divergence,
                         velocity_gradient, velocity_gradient_adjoint, velocity_gradient_times_F)

seeds = st.integers(0, 2 ** 32 - 1)


def _solenoidal(dim, n, seed):
    g = GridSpec(dim, n)
    return g, make_state(g, InitialConditionSpec("random-smooth", {"seed": seed, "amplitude": 1.0}))


def _random_cells(g, shape, rng, bc):
    q = rng.standard_normal(g.padded_shape + shape)
    (fill_neumann if bc == "neumann" else fill_dirichlet)(q, g.dim)
    return q


def test_gradient_and_laplacian_hand_values():
    # 1D-like quadratic in x: q = x^2 on a 4x4 grid, checked by hand away from walls
    g = GridSpec(2, 4)
    X, _ = g.coords("gg")
    q = X ** 2
    gx, gy = gradient(q, g)
    # face at x = 0.25 + 0.25 * i (interior faces) has exact derivative 2x
    np.testing.assert_allclose(gx[:, 0], [0.5, 1.0, 1.5])
    np.testing.assert_allclose(gy, 0.0)
    lap = laplacian(q, g)
    np.testing.assert_allclose(lap, 2.0)


def test_divergence_hand_value():
    g = GridSpec(2, 4)
    u = (np.zeros(g.face_shape(0)), np.zeros(g.face_shape(1)))
    Xf, _ = g.face_coords(0, ghosts=True)
    u[0][...] = Xf          # u = x, div = 1
    np.testing.assert_allclose(divergence(u, g), 1.0)


@settings(max_examples=20, deadline=None)
@given(seeds)
def test_gradient_is_minus_divergence_adjoint(seed):
    g = GridSpec(2, 6)
    rng = np.random.default_rng(seed)
    q = rng.standard_normal(g.padded_shape)
    u = tuple(np.pad(rng.standard_normal(tuple(n - 1 if j == k else n for j, n in enumerate(g.cells))),
                     [(1, 1), (1, 1)]) for k in range(2))
    lhs = sum(np.sum(gk * uk[1:-1, 1:-1]) for gk, uk in zip(gradient(q, g), u))
    rhs = -np.sum(divergence(u, g) * q[1:-1, 1:-1])
    assert lhs == pytest.approx(rhs, rel=1e-11, abs=1e-11)


@settings(max_examples=15, deadline=None)
@given(seeds, st.sampled_from([2, 3]))
def test_centered_advection_is_skew(seed, dim):
    g, s = _solenoidal(dim, 6, seed % 1000)
    q = _random_cells(g, (3,), np.random.default_rng(seed), "neumann")
    work = np.sum(q[(slice(1, -1),) * dim] * advect(s.v, q, g))
    assert abs(work) < 1e-12 * max(1.0, np.sum(q ** 2))


@settings(max_examples=10, deadline=None)
@given(seeds)
def test_momentum_advection_conserves_kinetic_energy(seed):
    g, s = _solenoidal(2, 8, seed % 1000)
    w = momentum_advection(s.v, g)
    assert abs(sum(np.sum(a * b) for a, b in zip(w, s.velocity_unknowns()))) < 1e-12


@settings(max_examples=15, deadline=None)
@given(seeds)
def test_velocity_gradient_adjoint(seed):
    g, s = _solenoidal(2, 6, seed % 1000)
    T = np.random.default_rng(seed).standard_normal(g.cells + (2, 2))
    lhs = np.sum(T * velocity_gradient(s.v, g))
    rhs = sum(np.sum(a * b) for a, b in zip(velocity_gradient_adjoint(T, g), s.velocity_unknowns()))
    assert lhs == pytest.approx(rhs, rel=1e-11, abs=1e-12)
    div = tensor_divergence(T, g)
    assert sum(np.sum(a * b) for a, b in zip(div, s.velocity_unknowns())) == pytest.approx(-lhs, abs=1e-12)


@settings(max_examples=15, deadline=None)
@given(seeds)
def test_elastic_work_cancels_stretching(seed):
    g, s = _solenoidal(2, 6, seed % 1000)
    F = _random_cells(g, (2, 2), np.random.default_rng(seed), "dirichlet")
    force = sum(np.sum(a * b) for a, b in zip(elastic_stress_div(F, g), s.velocity_unknowns()))
    stretch = np.sum(velocity_gradient_times_F(s.v, F, g) * F[1:-1, 1:-1])
    assert force + stretch == pytest.approx(0.0, abs=1e-11 * max(1.0, abs(force)))


@settings(max_examples=15, deadline=None)
@given(seeds)
def test_magnetic_force_is_transport_adjoint(seed):
    g, s = _solenoidal(2, 8, seed % 1000)
    rng = np.random.default_rng(seed)
    M = _random_cells(g, (3,), rng, "neumann")
    Q = rng.standard_normal(g.cells + (3,))
    lhs = sum(np.sum(a * b) for a, b in zip(magnetic_force(M, g, Q), s.velocity_unknowns()))
    assert lhs == pytest.approx(np.sum(advect(s.v, M, g) * Q), rel=1e-11, abs=1e-12)


def test_magnetic_tensor_is_symmetric_gram_matrix():
    g = GridSpec(2, 6)
    M = _random_cells(g, (3,), np.random.default_rng(1), "neumann")
    T = magnetic_tensor(M, g)
    np.testing.assert_allclose(T, np.swapaxes(T, -1, -2))
    assert np.all(np.linalg.eigvalsh(T) > -1e-12)


def test_stress_forms_agree_for_linear_field_in_interior():
    # M = (x, 0, 1): grad^T M grad M = e_x e_x^T is constant, so both forms vanish
    g = GridSpec(2, 8)
    X, _ = g.coords("gg")
    M = np.stack([X, np.zeros_like(X), np.ones_like(X)], -1)
    for form in ("divergence", "split"):
        out = magnetic_stress_div(M, g, form)
        np.testing.assert_allclose(out[0][1:-1, 1:-1], 0.0, atol=1e-12)
    with pytest.raises(ValueError):
        magnetic_stress_div(M, g, "other")


def test_ginzburg_landau_vanishes_on_unit_sphere():
    rng = np.random.default_rng(0)
    m = rng.standard_normal((10, 3))
    m /= np.linalg.norm(m, axis=1, keepdims=True)
    np.testing.assert_allclose(ginzburg_landau(m, 0.3), 0.0, atol=1e-14)
    np.testing.assert_allclose(ginzburg_landau(2 * m, 0.5), 3 * 2 * m / 0.25)
    with pytest.raises(ValueError):
        ginzburg_landau(m, 0.0)


def test_laplacian_second_order():
    errs = []
    for n in (16, 32, 64):
        g = GridSpec(2, n)
        X, Y = g.coords("gg")
        q = np.cos(np.pi * X) * np.cos(2 * np.pi * Y)
        lap = laplacian(q, g)
        exact = -5 * np.pi ** 2 * q[1:-1, 1:-1]
        errs.append(np.abs(lap - exact).max())
    orders = np.log2(np.array(errs[:-1]) / errs[1:])
    assert np.all(orders > 1.9)


def test_shape_checks():
    g = GridSpec(2, 6)
    with pytest.raises(ValueError):
        laplacian(np.zeros((6, 6)), g)
    with pytest.raises(ValueError):
        divergence((np.zeros((7, 8)),), g)
