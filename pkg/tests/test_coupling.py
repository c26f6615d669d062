import numpy as np
import pytest

from fsisph.coupling import (FsiForceSet, WindowAverage, fsi_forces,
                             imaginary_state, kappa)
from fsisph.errors import EmptyWindowError, InvalidParameterError
from fsisph.kernel import SmoothingKernel, kernel_derivative
from fsisph.materials import FluidMaterial, tait_density
from fsisph.neighbors import find_pairs
from fsisph.state import FluidState

WATER = FluidMaterial(rho0=1000.0, c=10.0, eta=0.0)


# -- imaginary state -----------------------------------------------------------

def test_imaginary_state_static_no_gravity():
    p_d, v_d, rho_d = imaginary_state(
        p_i=25.0, rho_i=1000.0, v_i=np.zeros(2), v_avg_a=np.zeros(2),
        a_avg_a=np.zeros(2), normal_a=np.array([0.0, 1.0]),
        r_ia=np.array([0.0, 0.01]), gravity=np.zeros(2), material=WATER)
    assert p_d == 25.0
    assert np.allclose(v_d, 0.0)
    assert rho_d == pytest.approx(tait_density(25.0, WATER))


def test_imaginary_state_hydrostatic_augmentation():
    # stationary solid below the fluid, gravity down, normal up:
    # p_d = p_i + rho_i * 9.8 * dp  for r_ia . n = dp
    dp = 0.01
    p_d, v_d, rho_d = imaginary_state(
        p_i=100.0, rho_i=1000.0, v_i=np.zeros(2), v_avg_a=np.zeros(2),
        a_avg_a=np.zeros(2), normal_a=np.array([0.0, 1.0]),
        r_ia=np.array([0.0, dp]), gravity=np.array([0.0, -9.8]),
        material=WATER)
    assert p_d == pytest.approx(100.0 + 1000.0 * 9.8 * dp)
    assert p_d > 100.0


def test_imaginary_state_clamp_branch():
    # solid accelerating downward faster than gravity: augmentation off
    p_d, _, _ = imaginary_state(
        p_i=100.0, rho_i=1000.0, v_i=np.zeros(2), v_avg_a=np.zeros(2),
        a_avg_a=np.array([0.0, -20.0]), normal_a=np.array([0.0, 1.0]),
        r_ia=np.array([0.0, 0.01]), gravity=np.array([0.0, -9.8]),
        material=WATER)
    assert p_d == 100.0


def test_imaginary_velocity_reflects_for_noslip():
    # moving fluid past a structure at rest: the relative velocity seen
    # by the viscous term doubles, v_i - v_d = 2 v_i
    v_i = np.array([0.4, -0.1])
    _, v_d, _ = imaginary_state(
        p_i=0.0, rho_i=1000.0, v_i=v_i, v_avg_a=np.zeros(2),
        a_avg_a=np.zeros(2), normal_a=np.array([0.0, 1.0]),
        r_ia=np.array([0.0, 0.01]), gravity=np.zeros(2), material=WATER)
    assert np.allclose(v_i - v_d, 2.0 * v_i)
    # and a structure moving with the fluid produces zero relative velocity
    _, v_d, _ = imaginary_state(
        p_i=0.0, rho_i=1000.0, v_i=v_i, v_avg_a=v_i, a_avg_a=np.zeros(2),
        normal_a=np.array([0.0, 1.0]), r_ia=np.array([0.0, 0.01]),
        gravity=np.zeros(2), material=WATER)
    assert np.allclose(v_i - v_d, 0.0)


def test_imaginary_state_rejects_bad_normal():
    with pytest.raises(InvalidParameterError):
        imaginary_state(0.0, 1000.0, np.zeros(2), np.zeros(2), np.zeros(2),
                        np.array([0.0, 2.0]), np.array([0.0, 0.01]),
                        np.zeros(2), WATER)


# -- interface forces ----------------------------------------------------------

def _single_pair(dist=0.012, p=50.0, dp=0.01):
    pos_f = np.array([[0.0, dist]])
    f = FluidState(pos_f, np.zeros((1, 2)), WATER, dp)
    f.p[:] = p
    pos_b = np.array([[0.0, 0.0]])
    topo = find_pairs(pos_f, pos_b, SmoothingKernel(1.3 * dp), "fluid-solid")
    bvel = np.zeros((1, 2))
    bacc = np.zeros((1, 2))
    bnormal = np.array([[0.0, 1.0]])
    bvol = np.full(1, dp * dp)
    return f, topo, bvel, bacc, bnormal, bvol


def test_fsi_no_pairs_all_zero():
    dp = 0.01
    pos_f = np.array([[0.0, 0.0]])
    pos_b = np.array([[1.0, 1.0]])  # far away
    f = FluidState(pos_f, np.zeros((1, 2)), WATER, dp)
    topo = find_pairs(pos_f, pos_b, SmoothingKernel(1.3 * dp), "fluid-solid")
    out = fsi_forces(f, topo, np.zeros((1, 2)), np.zeros((1, 2)),
                     np.array([[0.0, 1.0]]), np.full(1, dp * dp), np.zeros(2))
    assert np.abs(out.total_on_fluid).max() == 0.0
    assert np.abs(out.total_on_boundary).max() == 0.0


def test_fsi_single_pair_hand_value():
    # rest, uniform pressure, no gravity: p_d = p_i, the density-weighted
    # average collapses to p, and |f| = 2 V_i V_a p |dW/dr|
    dist, p, dp = 0.012, 50.0, 0.01
    f, topo, bvel, bacc, bnormal, bvol = _single_pair(dist, p, dp)
    out = fsi_forces(f, topo, bvel, bacc, bnormal, bvol, np.zeros(2))
    h = 1.3 * dp
    dw = kernel_derivative(dist, h)
    expected = 2.0 * f.volume[0] * dp * dp * p * abs(dw)
    # fluid pushed away from the boundary (+y), boundary pushed down
    assert out.fluid_pressure[0, 1] == pytest.approx(expected)
    assert out.boundary_pressure[0, 1] == pytest.approx(-expected)
    assert np.array_equal(out.total_on_fluid[0], -out.total_on_boundary[0])


def test_fsi_action_reaction_random_interface():
    rng = np.random.default_rng(44)
    dp = 0.01
    visc = FluidMaterial(rho0=1000.0, c=10.0, eta=0.05)
    pos_f = rng.uniform(0.0, 0.08, size=(60, 2)) + np.array([0.0, 0.01])
    pos_b = np.column_stack([rng.uniform(0.0, 0.08, 40), rng.uniform(-0.02, 0.005, 40)])
    f = FluidState(pos_f, rng.normal(scale=0.3, size=(60, 2)), visc, dp)
    f.rho[:] = 1000.0 * rng.uniform(0.995, 1.01, 60)
    f.p[:] = rng.uniform(-20, 100, 60)
    topo = find_pairs(pos_f, pos_b, SmoothingKernel(1.3 * dp), "fluid-solid")
    assert topo.n_pairs > 20
    bvel = rng.normal(scale=0.1, size=(40, 2))
    bacc = rng.normal(scale=2.0, size=(40, 2))
    bnormal = rng.normal(size=(40, 2))
    bnormal /= np.hypot(bnormal[:, 0], bnormal[:, 1])[:, None]
    bvol = np.full(40, dp * dp)
    out = fsi_forces(f, topo, bvel, bacc, bnormal, bvol,
                     np.array([0.0, -9.81]))
    total = out.total_on_fluid.sum(axis=0) + out.total_on_boundary.sum(axis=0)
    scale = np.abs(out.total_on_fluid).max()
    assert np.abs(total).max() < 1e-10 * scale


def test_fsi_inactive_boundary_particles_ignored():
    f, topo, bvel, bacc, bnormal, bvol = _single_pair()
    active = np.zeros(1, dtype=bool)
    out = fsi_forces(f, topo, bvel, bacc, bnormal, bvol, np.zeros(2),
                     bactive=active)
    assert np.abs(out.total_on_fluid).max() == 0.0
    assert np.abs(out.total_on_boundary).max() == 0.0


# -- window averages and substep count ------------------------------------------

def test_window_average_at_rest():
    avg = WindowAverage(3)
    v = np.zeros((3, 2))
    avg.accumulate(0.1, v, v)
    v_avg, a_avg = avg.finalize()
    assert np.abs(v_avg).max() == 0.0
    assert np.abs(a_avg).max() == 0.0


def test_window_average_constant_acceleration_exact():
    # v(t) = a0 t from rest: trapezoid is exact for linear v
    a0 = np.array([2.0, -1.0])
    avg = WindowAverage(1)
    n, total = 5, 0.05
    dt = total / n
    v = np.zeros((1, 2))
    for k in range(n):
        v_new = v + dt * a0[None, :]
        avg.accumulate(dt, v, v_new)
        v = v_new
    v_avg, a_avg = avg.finalize()
    assert np.allclose(a_avg[0], a0, rtol=1e-12)
    assert np.allclose(v_avg[0], 0.5 * a0 * total, rtol=1e-12)


def test_window_average_unequal_substeps_quadrature():
    # piecewise-linear v over unequal substeps: result equals the direct
    # time integral of v over the window
    rng = np.random.default_rng(3)
    dts = np.array([1.0e-4, 2.5e-4, 0.7e-4])
    vs = rng.normal(size=(4, 1, 2))
    avg = WindowAverage(1)
    for k, dt in enumerate(dts):
        avg.accumulate(dt, vs[k], vs[k + 1])
    v_avg, a_avg = avg.finalize()
    integral = sum(dt * 0.5 * (vs[k] + vs[k + 1]) for k, dt in enumerate(dts))
    assert np.allclose(v_avg, integral / dts.sum(), rtol=1e-12)
    assert np.allclose(a_avg, (vs[-1] - vs[0]) / dts.sum(), rtol=1e-12)


def test_window_average_empty_finalize_raises():
    with pytest.raises(EmptyWindowError):
        WindowAverage(2).finalize()


def test_kappa_values():
    assert kappa(4.2e-4, 1e-4) == 5
    assert kappa(0.5e-4, 1e-4) == 1   # dt_s >= dt_ac
    assert kappa(1e-4, 1e-4) == 2     # equality
    with pytest.raises(InvalidParameterError):
        kappa(0.0, 1.0)
