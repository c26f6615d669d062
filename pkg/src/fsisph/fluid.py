"""Updated-Lagrangian weakly-compressible fluid rates.

Continuity and momentum follow the pairwise forms

    drho_i/dt = 2 rho_i sum_j V_j (v_i - v~_ij) . grad_i W_ij
    m_i dv_i/dt = -2 sum_j V_i V_j p~_ij grad_i W_ij
                  + 2 sum_j eta V_i V_j (v_ij / r_ij) dW/dr
                  + m_i g + interface forces

where the inter-particle velocity and pressure (v~, p~) come from a
low-dissipation acoustic Riemann solver along the pair axis: with left
state i and right state j on the axis m pointing from i to j,

    U* = (rho_i c u_i + rho_j c u_j + p_i - p_j) / (c (rho_i + rho_j))
    p* = (p_i + p_j)/2 + beta rho_bar c (u_i - u_j) / 2
    beta = min(3 max(u_i - u_j, 0) / c, 1)

so dissipation activates only on approach and is limited to the plain
acoustic value. Both reduce to simple averages for equal states. Every
expression is symmetric under swapping i and j up to IEEE-exact sign
flips, which is what makes the pairwise force contributions cancel
bitwise and the discrete momentum sum conserve.

Within one advection window the cached kernel values of the neighbor
topology are frozen; only velocities, densities, and pressures evolve,
following the dual-criteria time-stepping split: the advection step
bounds how far particles may move between topology rebuilds and the
smaller acoustic step advances the state.
"""

from __future__ import annotations

import numpy as np
from numba import njit

from .materials import FluidMaterial
from .neighbors import NeighborTopology
from .state import FluidState


@njit(cache=True, inline="always")
def _riemann(vix, viy, vjx, vjy, pi, pj, rhoi, rhoj, mx, my, c):
    """Inter-particle average along the axis (mx, my) from i to j."""
    ul = vix * mx + viy * my
    ur = vjx * mx + vjy * my
    du = ul - ur
    beta = 3.0 * du / c
    if beta < 0.0:
        beta = 0.0
    elif beta > 1.0:
        beta = 1.0
    rbar = 0.5 * (rhoi + rhoj)
    pstar = 0.5 * (pi + pj) + 0.5 * beta * rbar * c * du
    ustar = (rhoi * c * ul + rhoj * c * ur + pi - pj) / (c * (rhoi + rhoj))
    du_star = ustar - 0.5 * (ul + ur)
    vtx = 0.5 * (vix + vjx) + du_star * mx
    vty = 0.5 * (viy + vjy) + du_star * my
    return vtx, vty, pstar


def riemann_average(state_i, state_j, e_ij, material: FluidMaterial):
    """Python-level pair average for tests: states are (v, rho, p) tuples.

    ``e_ij`` points from j toward i; the Riemann axis runs from i to j.
    Returns (v_tilde, p_tilde).
    """
    (vi, rhoi, pi), (vj, rhoj, pj) = state_i, state_j
    mx, my = -float(e_ij[0]), -float(e_ij[1])
    vtx, vty, pstar = _riemann(float(vi[0]), float(vi[1]), float(vj[0]),
                               float(vj[1]), float(pi), float(pj),
                               float(rhoi), float(rhoj), mx, my, material.c)
    return np.array([vtx, vty]), pstar


@njit(cache=True)
def _continuity_ff(start, nbr, ex, ey, dwdr, vel, rho, p, vol, c, drho):
    for i in range(start.shape[0] - 1):
        acc = 0.0
        vix = vel[i, 0]
        viy = vel[i, 1]
        for k in range(start[i], start[i + 1]):
            j = nbr[k]
            vtx, vty, _ = _riemann(vix, viy, vel[j, 0], vel[j, 1], p[i], p[j],
                                   rho[i], rho[j], -ex[k], -ey[k], c)
            acc += vol[j] * ((vix - vtx) * ex[k] + (viy - vty) * ey[k]) * dwdr[k]
        drho[i] += 2.0 * rho[i] * acc


@njit(cache=True)
def _momentum_ff(start, nbr, r, ex, ey, dwdr, vel, rho, p, vol, c, eta, force):
    for i in range(start.shape[0] - 1):
        fx = 0.0
        fy = 0.0
        vix = vel[i, 0]
        viy = vel[i, 1]
        for k in range(start[i], start[i + 1]):
            j = nbr[k]
            _, _, pstar = _riemann(vix, viy, vel[j, 0], vel[j, 1], p[i], p[j],
                                   rho[i], rho[j], -ex[k], -ey[k], c)
            coef = -2.0 * vol[i] * vol[j] * pstar * dwdr[k]
            fx += coef * ex[k]
            fy += coef * ey[k]
            if eta > 0.0:
                cv = 2.0 * eta * vol[i] * vol[j] * dwdr[k] / r[k]
                fx += cv * (vix - vel[j, 0])
                fy += cv * (viy - vel[j, 1])
        force[i, 0] += fx
        force[i, 1] += fy


def continuity_rate(fluid: FluidState, topo: NeighborTopology,
                    drho: np.ndarray | None = None) -> np.ndarray:
    """Fluid-fluid density rate; boundary contributions accumulate on top."""
    if drho is None:
        drho = np.zeros(fluid.n)
    if topo.n_pairs:
        _continuity_ff(topo.adj_start, topo.adj_nbr, topo.adj_ex, topo.adj_ey,
                       topo.adj_dwdr, fluid.vel, fluid.rho, fluid.p,
                       fluid.volume, fluid.material.c, drho)
    return drho


def momentum_rate(fluid: FluidState, topo: NeighborTopology,
                  gravity: np.ndarray,
                  extra_force: np.ndarray | None = None) -> np.ndarray:
    """Per-particle acceleration from internal + body + supplied forces."""
    force = np.zeros((fluid.n, 2))
    if topo.n_pairs:
        _momentum_ff(topo.adj_start, topo.adj_nbr, topo.adj_r, topo.adj_ex,
                     topo.adj_ey, topo.adj_dwdr, fluid.vel, fluid.rho, fluid.p,
                     fluid.volume, fluid.material.c, fluid.material.eta, force)
    if extra_force is not None:
        force += extra_force
    return force / fluid.mass[:, None] + gravity[None, :]


def pair_forces(fluid: FluidState, topo: NeighborTopology) -> np.ndarray:
    """Internal fluid forces alone (no gravity), for conservation audits."""
    force = np.zeros((fluid.n, 2))
    if topo.n_pairs:
        _momentum_ff(topo.adj_start, topo.adj_nbr, topo.adj_r, topo.adj_ex,
                     topo.adj_ey, topo.adj_dwdr, fluid.vel, fluid.rho, fluid.p,
                     fluid.volume, fluid.material.c, fluid.material.eta, force)
    return force


def _csr_sum(start: np.ndarray, values: np.ndarray) -> np.ndarray:
    cum = np.concatenate((np.zeros(1), np.cumsum(values)))
    return cum[start[1:]] - cum[start[:-1]]


def number_density(fluid: FluidState, topo_ff: NeighborTopology,
                   boundary_topos: list) -> np.ndarray:
    """Volume-weighted kernel sum sigma_i = V0 W(0) + sum_j V0_j W_ij.

    Reference volumes make the sum a partition of unity (~1 on a full
    interior) across mixed resolutions: an unweighted count would see
    the finer-spaced structure side as over-full. ``boundary_topos`` is
    a list of (topology, reference volume array) pairs.
    """
    from .kernel import kernel_value
    v0 = fluid.dp * fluid.dp
    sigma = np.full(fluid.n, v0 * kernel_value(0.0, topo_ff.h))
    if topo_ff.n_pairs:
        sigma += v0 * _csr_sum(topo_ff.adj_start, topo_ff.adj_w)
    for topo, vols in boundary_topos:
        if topo.n_pairs:
            sigma += _csr_sum(topo.adj_start,
                              topo.adj_w * vols[topo.adj_nbr])
    return sigma


def reinitialize_density(fluid: FluidState, sigma: np.ndarray,
                         free_surface: bool = False) -> None:
    """Periodic density refresh against accumulated integration drift.

    Internal flows (no free surface) slave the density to the particle
    configuration in both directions, rho0 * sigma/sigma0: the evolved
    density must not walk away from what the positions encode, or
    tension zones deepen into cavitation-and-slam cycles at stagnation
    regions.

    Free-surface flows refresh only where the kernel support is full or
    compressed; particles with deficient support (surface skin,
    splashes) keep their evolved density, capped at rho0. Slaving those
    would inject large artificial surface suction, while letting them
    retain compression would ratchet confined regions upward window
    after window.
    """
    ratio = sigma / fluid.sigma0
    if not free_surface:
        fluid.rho[:] = fluid.material.rho0 * ratio
        return
    hi = ratio >= 1.0
    fluid.rho[hi] = fluid.material.rho0 * ratio[hi]
    lo = ~hi
    fluid.rho[lo] = np.minimum(fluid.rho[lo], fluid.material.rho0)


def advection_dt(fluid: FluidState, h: float, dt_max: float) -> float:
    """Advection criterion 0.25 min(h/|v|max, h^2/nu) capped by dt_max.

    The viscous branch uses the kinematic viscosity; degenerate
    denominators (quiescent start, inviscid flow) fall back to the cap.
    """
    dt = dt_max
    vmax = float(np.sqrt((fluid.vel ** 2).sum(axis=1).max())) if fluid.n else 0.0
    if vmax > 0.0:
        dt = min(dt, 0.25 * h / vmax)
    nu = fluid.material.nu_kinematic
    if nu > 0.0:
        dt = min(dt, 0.25 * h * h / nu)
    return dt


def acoustic_dt(fluid: FluidState, h: float) -> float:
    """Acoustic criterion 0.6 h / (c + |v|max)."""
    vmax = float(np.sqrt((fluid.vel ** 2).sum(axis=1).max())) if fluid.n else 0.0
    return 0.6 * h / (fluid.material.c + vmax)
