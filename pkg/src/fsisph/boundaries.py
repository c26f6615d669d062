"""Rigid walls, inflow/outflow buffers, and structure surface normals.

Walls are layers of static dummy particles outside the flow domain. They
join the fluid sums through the same imaginary-state machinery as
structure particles, with zero velocity and acceleration, so no-slip and
no-penetration need no special-casing. Bands are at least four layers
deep and always cover the fluid kernel cutoff.

Inflow is a buffer of regular fluid particles whose kinematics are
overwritten with the prescribed profile each step; particles crossing
the outlet plane are recycled into the buffer, keeping the particle
count constant.

Structure surface normals are detected once, in the reference
configuration, from the gradient of a kernel-summed indicator over the
solid particles; particles whose gradient magnitude falls below 0.75 of
the flat-surface value are interior and carry no normal. During the run
the reference normal is pushed forward by the Nanson map
n = F^-T n0 / |F^-T n0|, which is exact for affine deformation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError, InvalidParameterError
from .kernel import SmoothingKernel, kernel_derivative
from .state import FluidState, SolidState, WallState


# ---------------------------------------------------------------------------
# inflow profiles

@dataclass
class InflowSpec:
    """Prescribed inlet velocity profile.

    ``kind`` selects the shape: "parabolic" uses the ramped Poiseuille
    profile U(y) = 1.5 U_bar(t) y (H - y) / H^2 with the half-cosine
    ramp U_bar = 0.5 U0 (1 - cos(pi t / t_s)) for t <= t_s; "pulsatile"
    uses the analytic oscillating-pressure-gradient channel solution
    parametrized by (amplitude A, period T, Womersley number Wo).
    """

    kind: str
    height: float
    u0: float = 1.0
    ramp_time: float = 2.0
    amplitude: float = 2500.0
    period: float = 0.6
    womersley: float = 1.0
    rho: float = 1000.0

    def velocity(self, y: float, t: float) -> float:
        if self.kind == "parabolic":
            return parabolic_inflow(y, t, self)
        if self.kind == "pulsatile":
            return womersley_inflow(y, t, self)
        raise ConfigError(f"unknown inflow profile kind {self.kind!r}")


def parabolic_inflow(y: float, t: float, spec: InflowSpec) -> float:
    """Ramped parabolic channel profile; zero at both walls.

    Normalized so u0 is the mean velocity and the midline peak is
    1.5 u0 (the standard channel-benchmark convention; the flow Reynolds
    number is built on the mean).
    """
    h = spec.height
    if t <= spec.ramp_time:
        u_bar = 0.5 * spec.u0 * (1.0 - math.cos(math.pi * t / spec.ramp_time))
    else:
        u_bar = spec.u0
    return 6.0 * u_bar * (h - y) * y / (h * h)


def womersley_inflow(y: float, t: float, spec: InflowSpec) -> float:
    """Analytic pulsatile channel flow driven by -dp/dx = A cos(2 pi t / T).

    With phi1 + phi2 = sqrt(2) Wo across the gap and
    gamma = cosh(sqrt(2) Wo) + cos(sqrt(2) Wo),

        u = A/(omega rho gamma) * [ (sinh(phi1) sin(phi2)
            + sinh(phi2) sin(phi1)) cos(omega t)
            + (gamma - cosh(phi1) cos(phi2)
            - cosh(phi2) cos(phi1)) sin(omega t) ].

    The first bracket is the in-phase (quasi-steady) response and the
    second the out-of-phase part; both vanish algebraically at the walls
    through the definition of gamma. In the Wo -> 0 limit the in-phase
    bracket reduces to the instantaneous Poiseuille profile.
    """
    if spec.womersley <= 0.0:
        raise InvalidParameterError("Womersley number must be positive")
    omega = 2.0 * math.pi / spec.period
    theta = math.sqrt(2.0) * spec.womersley
    phi1 = theta * (y / spec.height)
    phi2 = theta - phi1
    gamma = math.cosh(theta) + math.cos(theta)
    b_cos = (math.sinh(phi1) * math.sin(phi2)
             + math.sinh(phi2) * math.sin(phi1))
    b_sin = (gamma - math.cosh(phi1) * math.cos(phi2)
             - math.cosh(phi2) * math.cos(phi1))
    wt = omega * t
    return (spec.amplitude / (omega * spec.rho * gamma)
            * (b_cos * math.cos(wt) + b_sin * math.sin(wt)))


def womersley_viscosity(spec: InflowSpec) -> float:
    """Kinematic viscosity implied by the Womersley number, nu = omega (H/2)^2 / Wo^2."""
    omega = 2.0 * math.pi / spec.period
    return omega * (0.5 * spec.height) ** 2 / spec.womersley ** 2


# ---------------------------------------------------------------------------
# walls

def straight_wall(p0, p1, normal, dp: float, layers: int = 4) -> WallState:
    """Dummy-particle band behind the wall line from p0 to p1.

    ``normal`` points into the fluid. The first layer sits half a
    spacing behind the line; ``layers`` must cover the fluid kernel
    cutoff (>= 4 at the default spacing ratio).
    """
    p0 = np.asarray(p0, dtype=np.float64)
    p1 = np.asarray(p1, dtype=np.float64)
    n = np.asarray(normal, dtype=np.float64)
    n = n / np.hypot(*n)
    tang = p1 - p0
    length = float(np.hypot(*tang))
    tang = tang / length
    n_along = max(1, int(round(length / dp)))
    s = (np.arange(n_along) + 0.5) * (length / n_along)
    pts = []
    for layer in range(layers):
        offset = -(layer + 0.5) * dp
        pts.append(p0[None, :] + s[:, None] * tang[None, :] + offset * n[None, :])
    pos = np.concatenate(pts, axis=0)
    normals = np.tile(n, (pos.shape[0], 1))
    return WallState(pos, normals, dp)


def merge_walls(walls: list[WallState]) -> WallState:
    if not walls:
        raise ConfigError("no wall segments to merge")
    pos = np.concatenate([w.pos for w in walls], axis=0)
    nrm = np.concatenate([w.normal for w in walls], axis=0)
    merged = WallState(pos, nrm, walls[0].dp)
    merged.vol = np.concatenate([w.vol for w in walls], axis=0)
    return merged


def wall_layers_for(dp_wall: float, cutoff: float, minimum: int = 4) -> int:
    """Layer count that covers ``cutoff`` with at least the minimum depth."""
    return max(minimum, int(math.ceil(cutoff / dp_wall)))


# ---------------------------------------------------------------------------
# inflow buffer and outflow recycling

class InflowBuffer:
    """Overwrites kinematics of the particles inside prescribed bands.

    The first band is the inlet; an optional outlet band upstream of the
    recycle plane anchors pressure and velocity there too, so the open
    end cannot develop suction (a free outlet plus a velocity-driven
    inlet leaves the mean pressure of the column unconstrained).
    """

    def __init__(self, spec: InflowSpec, x_start: float, x_end: float,
                 y0: float = 0.0, outlet_band: tuple | None = None):
        self.spec = spec
        self.x_start = x_start
        self.x_end = x_end
        self.y0 = y0  # wall-relative origin of the profile coordinate
        self.outlet_band = outlet_band
        self._initial_count = None

    def apply(self, fluid: FluidState, t: float) -> None:
        mask = (fluid.pos[:, 0] >= self.x_start) & (fluid.pos[:, 0] < self.x_end)
        count = int(mask.sum())
        if self._initial_count is None:
            self._initial_count = count
        elif count < max(1, self._initial_count // 10):
            # the spin-up pipeline deficit legitimately thins the band;
            # near-empty means the band really is too short
            raise ConfigError(
                f"inflow buffer underflow: {count} particles of "
                f"{self._initial_count} initial (buffer too short)")
        y = fluid.pos[mask, 1] - self.y0
        u = np.array([self.spec.velocity(float(yy), t) for yy in y])
        fluid.vel[mask, 0] = u
        fluid.vel[mask, 1] = 0.0
        fluid.rho[mask] = fluid.material.rho0
        fluid.p[mask] = 0.0
        if self.outlet_band is not None:
            # fringe zone: blend smoothly toward the prescribed profile so
            # arriving wake structures are absorbed instead of sliced
            x0, x1 = self.outlet_band
            fm = (fluid.pos[:, 0] >= x0) & (fluid.pos[:, 0] < x1)
            if fm.any():
                w = np.clip((fluid.pos[fm, 0] - x0) / (x1 - x0), 0.0, 1.0)
                yf = fluid.pos[fm, 1] - self.y0
                uf = np.array([self.spec.velocity(float(yy), t) for yy in yf])
                fluid.vel[fm, 0] += w * (uf - fluid.vel[fm, 0])
                fluid.vel[fm, 1] -= w * fluid.vel[fm, 1]
                fluid.rho[fm] += w * (fluid.material.rho0 - fluid.rho[fm])


class OutflowRecycle:
    """Teleports particles crossing the outlet plane back into the inlet buffer.

    With ``x_min`` set, particles leaving upstream are wrapped to the
    outlet side as well, which oscillating (pulsatile) through-flows
    need: the flow exits both ends over a cycle.
    """

    def __init__(self, x_out: float, x_buffer_start: float,
                 x_min: float | None = None):
        self.x_out = x_out
        self.span = x_out - x_buffer_start
        self.x_min = x_min
        self.count = 0

    def apply(self, fluid: FluidState) -> int:
        mask = fluid.pos[:, 0] > self.x_out
        n = int(mask.sum())
        if n:
            fluid.pos[mask, 0] -= self.span
            fluid.rho[mask] = fluid.material.rho0
            fluid.p[mask] = 0.0
        if self.x_min is not None:
            back = fluid.pos[:, 0] < self.x_min
            nb = int(back.sum())
            if nb:
                fluid.pos[back, 0] += self.span
                fluid.rho[back] = fluid.material.rho0
                fluid.p[back] = 0.0
                n += nb
        self.count += n
        return n


def wall_pressures(fluid: FluidState, topo_fw, walls: WallState,
                   gravity) -> np.ndarray:
    """Kernel-weighted imaginary pressure per wall particle (diagnostic).

    Averages the pairwise imaginary pressures over each dummy particle's
    fluid neighbors; equals the hydrostatic load on a settled tank.
    """
    g = np.asarray(gravity, dtype=np.float64)
    p_w = np.zeros(walls.n)
    if topo_fw.n_pairs == 0:
        return p_w
    i, j = topo_fw.i, topo_fw.j  # i fluid, j wall
    # unclamped hydrostatic extrapolation: this is a measurement, so the
    # no-pull clamp of the force path would bias it upward
    lift = -topo_fw.r * (g[0] * topo_fw.ex + g[1] * topo_fw.ey)
    p_pair = fluid.p[i] + fluid.rho[i] * lift
    num = np.bincount(j, weights=topo_fw.w * p_pair, minlength=walls.n)
    den = np.bincount(j, weights=topo_fw.w, minlength=walls.n)
    has = den > 0.0
    p_w[has] = num[has] / den[has]
    return p_w


# ---------------------------------------------------------------------------
# structure surface normals

def _flat_surface_gradient(dp: float, h: float) -> float:
    """|sum V grad W| at the edge of a half-plane lattice at spacing dp."""
    kernel = SmoothingKernel(h)
    reach = int(math.ceil(kernel.cutoff / dp)) + 1
    g = np.zeros(2)
    for ix in range(-reach, reach + 1):
        for iy in range(-reach, 1):  # half plane y <= 0
            if ix == 0 and iy == 0:
                continue
            d = np.array([-ix * dp, -iy * dp])
            r = float(np.hypot(*d))
            if r >= kernel.cutoff:
                continue
            dw = kernel_derivative(r, h)
            g += dp * dp * dw * d / r
    return float(np.hypot(*g))


def reference_normals(solid: SolidState, h_s: float,
                      interior_fraction: float = 0.75) -> None:
    """Detect surface particles and their outward reference normals.

    The kernel-summed indicator over the body has a gradient that points
    inward and whose magnitude at a flat surface is a lattice constant;
    particles below ``interior_fraction`` of that value are interior.
    """
    from .neighbors import find_pairs

    kernel = SmoothingKernel(h_s)
    topo = find_pairs(solid.pos0, None, kernel, "solid-solid-reference")
    grad = np.zeros((solid.n, 2))
    gx = topo.adj_dwdr * topo.adj_ex
    gy = topo.adj_dwdr * topo.adj_ey
    for a in range(solid.n):
        s, e = topo.adj_start[a], topo.adj_start[a + 1]
        b = topo.adj_nbr[s:e]
        grad[a, 0] = (solid.vol0[b] * gx[s:e]).sum()
        grad[a, 1] = (solid.vol0[b] * gy[s:e]).sum()
    threshold = interior_fraction * _flat_surface_gradient(solid.dp, h_s)
    mag = np.hypot(grad[:, 0], grad[:, 1])
    surface = mag >= threshold
    solid.n0[:] = 0.0
    solid.n0[surface] = -grad[surface] / mag[surface, None]
    solid.normal[:] = solid.n0


def update_normals(solid: SolidState) -> None:
    """Push reference normals forward with the deformation, n = F^-T n0."""
    surface = np.hypot(solid.n0[:, 0], solid.n0[:, 1]) > 0.0
    f = solid.f[surface]
    det = f[:, 0, 0] * f[:, 1, 1] - f[:, 0, 1] * f[:, 1, 0]
    # F^-T for 2x2: [[f11, -f10], [-f01, f00]] / det
    n0 = solid.n0[surface]
    nx = (f[:, 1, 1] * n0[:, 0] - f[:, 1, 0] * n0[:, 1]) / det
    ny = (-f[:, 0, 1] * n0[:, 0] + f[:, 0, 0] * n0[:, 1]) / det
    mag = np.hypot(nx, ny)
    solid.normal[surface, 0] = nx / mag
    solid.normal[surface, 1] = ny / mag
    solid.normal[~surface] = 0.0
