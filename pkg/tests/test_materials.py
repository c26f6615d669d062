import math

import numpy as np
import pytest

from fsisph.errors import ElementInversionError, InvalidParameterError
from fsisph.materials import (FluidMaterial, SolidMaterial, SolidModel,
                              cauchy_stress, first_pk, green_strain,
                              neo_hookean_energy, second_pk_linear,
                              second_pk_neohookean, tait_density,
                              tait_pressure, von_mises)

WATER = FluidMaterial(rho0=1000.0, c=10.0)
RUBBERY = SolidMaterial(rho0=1000.0, youngs_modulus=1400.0, poisson_ratio=0.4)


def test_tait_reference_density_gives_zero_pressure():
    assert tait_pressure(WATER.rho0, WATER) == 0.0


def test_tait_value():
    # independent evaluation: 1000*100/7 * (1.01^7 - 1) = 1030.505...
    p = tait_pressure(1010.0, WATER)
    assert p == pytest.approx(1030.50503, abs=1e-3)


def test_tait_monotone_and_invertible():
    rhos = np.linspace(200.0, 2500.0, 400)
    ps = [tait_pressure(r, WATER) for r in rhos]
    assert all(b > a for a, b in zip(ps, ps[1:]))
    # round-trip rho -> p -> rho via bisection against the forward law
    for rho in (940.0, 1000.0, 1013.0, 1100.0):
        p = tait_pressure(rho, WATER)
        lo, hi = 100.0, 3000.0
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            if tait_pressure(mid, WATER) < p:
                lo = mid
            else:
                hi = mid
        assert 0.5 * (lo + hi) == pytest.approx(rho, rel=1e-10)
        # closed-form inverse agrees
        assert tait_density(p, WATER) == pytest.approx(rho, rel=1e-12)


def test_tait_rejects_nonpositive_density():
    with pytest.raises(InvalidParameterError):
        tait_pressure(0.0, WATER)


def test_lame_conversions():
    m = SolidMaterial(rho0=1100.0, youngs_modulus=7.8e6, poisson_ratio=0.47)
    assert m.youngs_modulus == pytest.approx(2.0 * m.shear_modulus * (1.0 + m.poisson_ratio))
    assert m.bulk_modulus == pytest.approx(m.lam + 2.0 * m.mu / 3.0)
    assert m.c == pytest.approx(math.sqrt(m.bulk_modulus / m.rho0))
    with pytest.raises(InvalidParameterError):
        SolidMaterial(rho0=1.0, youngs_modulus=1.0, poisson_ratio=0.5)


def test_green_strain_identity_and_value():
    assert np.allclose(green_strain(np.eye(2)), 0.0)
    e = green_strain(np.diag([1.1, 1.0]))
    assert np.allclose(e, np.diag([0.105, 0.0]))


def test_green_strain_frame_indifference():
    rng = np.random.default_rng(5)
    for _ in range(10):
        f = np.eye(2) + 0.1 * rng.standard_normal((2, 2))
        th = rng.uniform(0, 2 * np.pi)
        rot = np.array([[np.cos(th), -np.sin(th)], [np.sin(th), np.cos(th)]])
        assert np.allclose(green_strain(rot @ f), green_strain(f), atol=1e-12)


def test_linear_stress_values():
    m = SolidMaterial(rho0=1.0, youngs_modulus=1400.0, poisson_ratio=0.4)
    assert m.lam == pytest.approx(2000.0)
    assert m.mu == pytest.approx(500.0)
    assert np.allclose(second_pk_linear(np.zeros((2, 2)), m), 0.0)
    s = second_pk_linear(np.diag([0.105, 0.0]), m)
    assert np.allclose(s, np.diag([315.0, 210.0]))
    # symmetry preserved
    e = np.array([[0.02, 0.01], [0.01, -0.03]])
    s = second_pk_linear(e, m)
    assert np.allclose(s, s.T)


def _fd_stress(f, material, eps=1e-7):
    e0 = green_strain(f)
    s = np.zeros((2, 2))
    for a in range(2):
        for b in range(2):
            ep = e0.copy()
            em = e0.copy()
            ep[a, b] += eps
            em[a, b] -= eps
            s[a, b] = (neo_hookean_energy(ep, material)
                       - neo_hookean_energy(em, material)) / (2 * eps)
    return s


def test_neohookean_zero_at_identity():
    assert np.allclose(second_pk_neohookean(np.eye(2), RUBBERY), 0.0, atol=1e-14)


def test_neohookean_matches_energy_finite_difference():
    m = SolidMaterial(rho0=1.0, youngs_modulus=1400.0, poisson_ratio=0.4,
                      model=SolidModel.NEO_HOOKEAN)
    f = np.diag([1.1, 1.0])
    s = second_pk_neohookean(f, m)
    s_fd = _fd_stress(f, m)
    assert np.allclose(s, s_fd, rtol=1e-5, atol=1e-8 * np.abs(s).max())


def test_neohookean_energy_consistency_random_f():
    # 20 random deformation gradients with det in [0.8, 1.2]
    rng = np.random.default_rng(17)
    m = SolidMaterial(rho0=1060.0, youngs_modulus=1.5e6, poisson_ratio=0.49,
                      model=SolidModel.NEO_HOOKEAN)
    done = 0
    while done < 20:
        f = np.eye(2) + 0.15 * rng.standard_normal((2, 2))
        det = np.linalg.det(f)
        if not 0.8 <= det <= 1.2:
            continue
        s = second_pk_neohookean(f, m)
        s_fd = _fd_stress(f, m, eps=1e-6)
        assert np.allclose(s, s_fd, rtol=1e-5, atol=1e-6 * np.abs(s).max() + 1e-12)
        done += 1


def test_neohookean_linearizes_to_linear_elastic():
    # first-order agreement at ||E|| = 1e-4; the residual is the
    # second-order term, O(lambda ||E||^2), so absolute 1e-6 applies to
    # unit-scale moduli and scales linearly with stiffer ones
    rng = np.random.default_rng(23)
    a = rng.standard_normal((2, 2))
    a = 1e-4 * (a + a.T) / np.abs(a + a.T).max()
    f = np.eye(2) + a  # small symmetric perturbation
    e = green_strain(f)
    for youngs in (1.0, 1400.0):
        m = SolidMaterial(rho0=1.0, youngs_modulus=youngs, poisson_ratio=0.4)
        s_nh = second_pk_neohookean(f, m)
        s_lin = second_pk_linear(e, m)
        assert np.allclose(s_nh, s_lin, atol=1e-6 * youngs)


def test_neohookean_rejects_inversion():
    with pytest.raises(ElementInversionError, match="7"):
        second_pk_neohookean(np.diag([-1.0, 1.0]), RUBBERY, particle=7)


def test_first_pk():
    s = np.diag([315.0, 210.0])
    assert np.allclose(first_pk(np.eye(2), s), s)
    assert np.allclose(first_pk(np.diag([1.1, 1.0]), np.zeros((2, 2))), 0.0)
    assert np.allclose(first_pk(np.diag([1.1, 1.0]), s), np.diag([346.5, 210.0]))


def test_von_mises_identities():
    f = np.eye(2)
    assert von_mises(f, np.zeros((2, 2))) == 0.0
    # pure pressure: sigma = -p I -> |p|
    p = 37.0
    s = -p * np.eye(2)  # with F = I, S = sigma
    assert von_mises(f, s) == pytest.approx(p)
    # pure shear: sigma12 = tau -> sqrt(3) |tau|
    tau = 4.2
    s = np.array([[0.0, tau], [tau, 0.0]])
    assert von_mises(f, s) == pytest.approx(math.sqrt(3.0) * tau)
    # cauchy push-forward divides by J
    f2 = np.diag([2.0, 1.0])
    sig = cauchy_stress(f2, np.diag([1.0, 1.0]))
    assert np.allclose(sig, np.diag([2.0, 0.5]))
