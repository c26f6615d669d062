import numpy as np
import pytest
from scipy.integrate import quad

from fsisph.errors import DegeneratePairError, InvalidParameterError
from fsisph.kernel import SmoothingKernel, kernel_gradient, kernel_value


def test_cutoff_is_twice_h():
    k = SmoothingKernel(h=0.013)
    assert k.cutoff == 2.0 * 0.013


def test_compact_support_boundary():
    h = 0.7
    assert kernel_value(2.0 * h, h) == 0.0
    assert kernel_value(2.5 * h, h) == 0.0


def test_normalization_by_quadrature():
    # 2D normalization: integral of W over its support area equals 1
    for h in (1.0, 0.013, 3.7):
        integral, err = quad(lambda r: kernel_value(r, h) * 2.0 * np.pi * r,
                             0.0, 2.0 * h, limit=200)
        assert err < 1e-9
        assert abs(integral - 1.0) < 1e-6


def test_monotone_decay():
    h = 1.0
    w = [kernel_value(q * h, h) for q in (0.5, 1.0, 1.5)]
    assert w[0] > w[1] > w[2] > 0.0


def test_nonpositive_h_rejected():
    with pytest.raises(InvalidParameterError):
        kernel_value(0.1, 0.0)
    with pytest.raises(InvalidParameterError):
        kernel_value(0.1, -1.0)
    with pytest.raises(InvalidParameterError):
        SmoothingKernel(h=-0.5)


def test_gradient_antisymmetry():
    h = 0.4
    rng = np.random.default_rng(7)
    for _ in range(50):
        r_vec = rng.uniform(-2 * h, 2 * h, size=2)
        if np.hypot(*r_vec) == 0.0:
            continue
        g1 = kernel_gradient(r_vec, h)
        g2 = kernel_gradient(-r_vec, h)
        assert np.array_equal(g1, -g2)


def test_gradient_zero_outside_support():
    h = 0.4
    assert np.allclose(kernel_gradient(np.array([2.0 * h, 0.0]), h), 0.0)
    assert np.allclose(kernel_gradient(np.array([3.0 * h, 1.0 * h]), h), 0.0)


def test_gradient_matches_central_difference():
    # finite-difference oracle at r = 0.7 h
    h = 1.3
    r_vec = 0.7 * h * np.array([np.cos(0.3), np.sin(0.3)])
    eps = 1e-6 * h
    grad = kernel_gradient(r_vec, h)
    for axis in range(2):
        dv = np.zeros(2)
        dv[axis] = eps
        num = (kernel_value(np.linalg.norm(r_vec + dv), h)
               - kernel_value(np.linalg.norm(r_vec - dv), h)) / (2 * eps)
        assert abs(num - grad[axis]) < 1e-6 * max(1.0, abs(grad[axis]))


def test_gradient_coincident_points_rejected():
    with pytest.raises(DegeneratePairError):
        kernel_gradient(np.zeros(2), 1.0)


def test_lattice_gradient_partition_of_unity():
    # interior point of a full uniform lattice: sum_j V_j grad W_ij = 0
    dp = 0.1
    h = 1.3 * dp
    xs = np.arange(-6, 7) * dp
    grid = np.array([(x, y) for x in xs for y in xs])
    center = np.array([0.0, 0.0])
    total = np.zeros(2)
    for q in grid:
        d = center - q
        r = np.hypot(*d)
        if r == 0.0 or r >= 2 * h:
            continue
        total += dp * dp * kernel_gradient(d, h)
    assert np.abs(total).max() < 1e-8
