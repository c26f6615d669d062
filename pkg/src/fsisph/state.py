"""Struct-of-array particle state for fluid, solid, and wall-dummy sets.

Particles live in contiguous per-field numpy arrays owned by the
integrator; rate kernels read them immutably and write per-particle
accumulators. The fields mirror the per-particle records of the model:

fluid     position r, velocity v, density rho, pressure p, mass m;
          volume is always m/rho.
solid     reference position r0, current position r, velocity v,
          deformation gradient F (N,2,2), correction matrix B0,
          reference volume V0, surface normals n0/n (zero for interior
          particles), time-averaged kinematics v_avg/a_avg used by the
          interface force matching, and flags for kinematic constraints
          and interface visibility.
wall      static dummy particles with unit normals pointing into the
          fluid; they join fluid sums through the same imaginary-state
          machinery as solid particles, with zero velocity and
          acceleration.
"""

from __future__ import annotations

import numpy as np

from .errors import CorruptStateError
from .materials import FluidMaterial, SolidMaterial


class FluidState:
    """Updated-Lagrangian fluid particle arrays."""

    def __init__(self, pos: np.ndarray, vel: np.ndarray,
                 material: FluidMaterial, dp: float):
        n = pos.shape[0]
        self.n = n
        self.pos = np.ascontiguousarray(pos, dtype=np.float64)
        self.vel = np.ascontiguousarray(vel, dtype=np.float64)
        self.rho = np.full(n, material.rho0)
        self.p = np.zeros(n)
        self.mass = np.full(n, material.rho0 * dp * dp)
        self.material = material
        self.dp = dp
        self.sigma0 = 1.0  # reference number density, set by the integrator at t=0

    @property
    def volume(self) -> np.ndarray:
        return self.mass / self.rho

    def momentum(self) -> np.ndarray:
        return (self.mass[:, None] * self.vel).sum(axis=0)

    def check_finite(self, context: str = "") -> None:
        for name, arr in (("position", self.pos), ("velocity", self.vel),
                          ("density", self.rho)):
            if not np.isfinite(arr).all():
                idx = int(np.where(~np.isfinite(arr).reshape(self.n, -1).all(axis=1))[0][0])
                raise CorruptStateError(
                    f"non-finite fluid {name} at particle {idx} {context}".rstrip())


class SolidState:
    """Total-Lagrangian solid particle arrays."""

    def __init__(self, pos0: np.ndarray, material: SolidMaterial, dp: float,
                 constrained: np.ndarray | None = None,
                 fsi_active: np.ndarray | None = None):
        n = pos0.shape[0]
        self.n = n
        self.pos0 = np.ascontiguousarray(pos0, dtype=np.float64)
        self.pos = self.pos0.copy()
        self.vel = np.zeros((n, 2))
        self.f = np.tile(np.eye(2), (n, 1, 1))
        self.b0 = np.tile(np.eye(2), (n, 1, 1))
        self.rho = np.full(n, material.rho0)
        self.vol0 = np.full(n, dp * dp)
        self.mass = material.rho0 * self.vol0.copy()
        self.n0 = np.zeros((n, 2))      # reference surface normal, 0 for interior
        self.normal = np.zeros((n, 2))  # current surface normal
        self.v_avg = np.zeros((n, 2))
        self.a_avg = np.zeros((n, 2))
        self.accel = np.zeros((n, 2))   # last total acceleration, for the dt criterion
        self.constrained = (np.zeros(n, dtype=np.bool_) if constrained is None
                            else np.ascontiguousarray(constrained, dtype=np.bool_))
        self.fsi_active = (np.ones(n, dtype=np.bool_) if fsi_active is None
                           else np.ascontiguousarray(fsi_active, dtype=np.bool_))
        self.material = material
        self.dp = dp

    @property
    def displacement(self) -> np.ndarray:
        return self.pos - self.pos0

    @property
    def det_f(self) -> np.ndarray:
        return (self.f[:, 0, 0] * self.f[:, 1, 1]
                - self.f[:, 0, 1] * self.f[:, 1, 0])

    @property
    def volume(self) -> np.ndarray:
        return self.mass / self.rho

    def momentum(self) -> np.ndarray:
        return (self.mass[:, None] * self.vel).sum(axis=0)

    def kinetic_energy(self) -> float:
        return float(0.5 * (self.mass * (self.vel ** 2).sum(axis=1)).sum())


class WallState:
    """Static dummy particles forming rigid boundaries."""

    def __init__(self, pos: np.ndarray, normal: np.ndarray, dp: float):
        self.n = pos.shape[0]
        self.pos = np.ascontiguousarray(pos, dtype=np.float64)
        self.normal = np.ascontiguousarray(normal, dtype=np.float64)
        self.vol = np.full(self.n, dp * dp)
        self.dp = dp
