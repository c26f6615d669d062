"""Material parameter bundles, equation of state, and constitutive laws.

Fluids are weakly compressible: pressure follows the stiff Tait law with
exponent 7, and the artificial sound speed is chosen as ten times the
maximum anticipated flow speed, which keeps density variations near one
percent. Solids are either linear-elastic (Kirchhoff/St. Venant in the
Green strain) or Neo-Hookean, both formulated in the reference
configuration through the second Piola-Kirchhoff stress.

All 2D stress measures use the plane-strain convention: the Lame
parameters keep their 3D definitions

    lambda = E nu / ((1+nu)(1-2nu)),   mu = E / (2(1+nu)),

with bulk modulus K = lambda + 2 mu / 3 and solid sound speed
c_S = sqrt(K / rho0). Note the standard modulus identity E = 2G(1+nu)
is used; alternative printed forms that break the lambda/mu definitions
are not.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .errors import ElementInversionError, InvalidParameterError

TAIT_GAMMA = 7.0


@dataclass(frozen=True)
class FluidMaterial:
    """Weakly-compressible fluid parameters.

    Attributes
    ----------
    rho0 : reference density [kg/m^3]
    c : artificial sound speed [m/s], typically 10x the peak flow speed
    gamma : Tait exponent (7 unless overridden)
    eta : dynamic viscosity [Pa s]; zero selects inviscid flow
    """

    rho0: float
    c: float
    gamma: float = TAIT_GAMMA
    eta: float = 0.0

    def __post_init__(self):
        if self.rho0 <= 0.0 or self.c <= 0.0 or self.gamma <= 0.0 or self.eta < 0.0:
            raise InvalidParameterError(f"invalid fluid material: {self}")

    @property
    def nu_kinematic(self) -> float:
        """Kinematic viscosity eta/rho0 [m^2/s]."""
        return self.eta / self.rho0

    @property
    def stiffness(self) -> float:
        """Tait prefactor rho0 c^2 / gamma [Pa]."""
        return self.rho0 * self.c * self.c / self.gamma


class SolidModel(Enum):
    LINEAR_ELASTIC = "linear-elastic"
    NEO_HOOKEAN = "neo-hookean"


@dataclass(frozen=True)
class SolidMaterial:
    """Elastic solid parameters derived from (rho0, E, nu)."""

    rho0: float
    youngs_modulus: float
    poisson_ratio: float
    model: SolidModel = SolidModel.LINEAR_ELASTIC
    lam: float = field(init=False)
    mu: float = field(init=False)
    bulk_modulus: float = field(init=False)
    shear_modulus: float = field(init=False)
    c: float = field(init=False)

    def __post_init__(self):
        e, nu = self.youngs_modulus, self.poisson_ratio
        if self.rho0 <= 0.0 or e <= 0.0 or not 0.0 < nu < 0.5:
            raise InvalidParameterError(
                f"invalid solid material: rho0={self.rho0}, E={e}, nu={nu}")
        lam = e * nu / ((1.0 + nu) * (1.0 - 2.0 * nu))
        mu = e / (2.0 * (1.0 + nu))
        object.__setattr__(self, "lam", lam)
        object.__setattr__(self, "mu", mu)
        object.__setattr__(self, "shear_modulus", mu)
        object.__setattr__(self, "bulk_modulus", lam + 2.0 * mu / 3.0)
        object.__setattr__(self, "c", math.sqrt(self.bulk_modulus / self.rho0))


def tait_pressure(rho: float, material: FluidMaterial) -> float:
    """Pressure from density, p = rho0 c^2/gamma ((rho/rho0)^gamma - 1)."""
    if rho <= 0.0:
        raise InvalidParameterError(f"density must be positive, got {rho}")
    return material.stiffness * ((rho / material.rho0) ** material.gamma - 1.0)


def tait_density(p: float, material: FluidMaterial) -> float:
    """Invert the Tait law, rho = rho0 (1 + gamma p / (rho0 c^2))^(1/gamma).

    The argument is floored just above zero so a strongly negative
    imaginary pressure cannot produce a complex root; callers clamp the
    result to their own density floor.
    """
    base = 1.0 + p / material.stiffness
    if base < 1e-8:
        base = 1e-8
    return material.rho0 * base ** (1.0 / material.gamma)


def green_strain(f: np.ndarray) -> np.ndarray:
    """Green-Lagrange strain E = (F^T F - I) / 2, symmetric by construction."""
    c = f.T @ f
    return 0.5 * (c - np.eye(2))


def second_pk_linear(strain: np.ndarray, material: SolidMaterial) -> np.ndarray:
    """Linear isotropic law S = lambda tr(E) I + 2 mu E."""
    return material.lam * np.trace(strain) * np.eye(2) + 2.0 * material.mu * strain


def neo_hookean_energy(strain: np.ndarray, material: SolidMaterial) -> float:
    """Stored energy W = mu tr(E) - mu ln J + lambda/2 (ln J)^2.

    Expressed through E so that S = dW/dE can be checked by finite
    differences of this function. Off-diagonal strain components are
    treated as independent, matching that derivative convention.
    """
    c11 = 1.0 + 2.0 * strain[0, 0]
    c22 = 1.0 + 2.0 * strain[1, 1]
    det_c = c11 * c22 - 4.0 * strain[0, 1] * strain[1, 0]
    if det_c <= 0.0:
        raise ElementInversionError("det(C) <= 0 in stored-energy evaluation")
    log_j = 0.5 * math.log(det_c)
    tr_e = strain[0, 0] + strain[1, 1]
    return material.mu * tr_e - material.mu * log_j + 0.5 * material.lam * log_j ** 2


def second_pk_neohookean(f: np.ndarray, material: SolidMaterial,
                         particle: int | None = None) -> np.ndarray:
    """Neo-Hookean stress S = mu (I - C^-1) + lambda ln J C^-1, C = F^T F."""
    det_f = f[0, 0] * f[1, 1] - f[0, 1] * f[1, 0]
    if det_f <= 0.0:
        where = f" (particle {particle})" if particle is not None else ""
        raise ElementInversionError(f"deformation gradient inverted{where}: det F = {det_f}")
    c = f.T @ f
    c_inv = np.linalg.inv(c)
    log_j = math.log(det_f)
    return material.mu * (np.eye(2) - c_inv) + material.lam * log_j * c_inv


def first_pk(f: np.ndarray, s: np.ndarray) -> np.ndarray:
    """First Piola-Kirchhoff stress P = F S."""
    return f @ s


def cauchy_stress(f: np.ndarray, s: np.ndarray,
                  particle: int | None = None) -> np.ndarray:
    """Push the second PK stress forward: sigma = J^-1 F S F^T."""
    det_f = f[0, 0] * f[1, 1] - f[0, 1] * f[1, 0]
    if det_f <= 0.0:
        where = f" (particle {particle})" if particle is not None else ""
        raise ElementInversionError(f"deformation gradient inverted{where}: det F = {det_f}")
    return (f @ s @ f.T) / det_f


def von_mises(f: np.ndarray, s: np.ndarray, particle: int | None = None) -> float:
    """Scalar stress intensity from the in-plane Cauchy components.

    Returns sqrt(s11^2 - s11 s22 + s22^2 + 3 s12^2); used only to color
    structural output fields.
    """
    sig = cauchy_stress(f, s, particle)
    return math.sqrt(sig[0, 0] ** 2 - sig[0, 0] * sig[1, 1]
                     + sig[1, 1] ** 2 + 3.0 * sig[0, 1] ** 2)
