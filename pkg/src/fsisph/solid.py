"""Total-Lagrangian elastodynamics on a fixed reference neighborhood.

All kernel gradients are evaluated once, in the initial configuration,
and corrected per particle by

    B0_a = ( sum_b V0_b (r0_b - r0_a) (x) grad0_a W_ab )^-1

which restores exact first-order consistency: any affine displacement
field is differentiated exactly, at interior and surface particles
alike. The deformation gradient then evolves by the corrected velocity
gradient

    dF_a/dt = sum_b V0_b (v_b - v_a) (x) (B0_a grad0_a W_ab),

density follows algebraically as rho = rho0 / det F, and the internal
force uses the inter-particle averaged first Piola-Kirchhoff stress

    f_a = sum_b V0_a V0_b (P_a B0_a + P_b B0_b) grad0_a W_ab,

whose pairwise contributions are equal and opposite, so an unconstrained
body conserves linear momentum to round-off.

``run_substeps`` advances the whole body through the kappa sub-steps of
one fluid acoustic window inside a single compiled loop: interface
forces stay frozen, kinematic constraints are re-imposed after every
velocity and position update, and the time-averaged velocity and
acceleration that the interface force matching needs are accumulated
with trapezoidal weights on the fly.
"""

from __future__ import annotations

import numpy as np
from numba import njit

from .errors import ElementInversionError, SetupError
from .neighbors import NeighborTopology
from .state import SolidState

MODEL_LINEAR = 0
MODEL_NEO_HOOKEAN = 1

# guard below which det(F) is treated as element inversion
DET_F_FLOOR = 1e-6


class SolidReference:
    """Frozen reference-configuration neighborhood plus corrected gradients."""

    def __init__(self, topo: NeighborTopology, solid: SolidState):
        self.topo = topo
        # raw reference gradient per directed edge (owner <- neighbor)
        self.rawgx = topo.adj_dwdr * topo.adj_ex
        self.rawgy = topo.adj_dwdr * topo.adj_ey
        b0 = solid.b0
        owner = np.repeat(np.arange(solid.n), np.diff(topo.adj_start))
        self.gx = b0[owner, 0, 0] * self.rawgx + b0[owner, 0, 1] * self.rawgy
        self.gy = b0[owner, 1, 0] * self.rawgx + b0[owner, 1, 1] * self.rawgy
        self.start = topo.adj_start
        self.nbr = topo.adj_nbr


def correction_matrices(solid: SolidState, topo: NeighborTopology,
                        cond_limit: float = 1e8) -> np.ndarray:
    """Invert the reference moment matrix per particle (done once at setup)."""
    n = solid.n
    m = np.zeros((n, 2, 2))
    pos0 = solid.pos0
    vol0 = solid.vol0
    start, nbr = topo.adj_start, topo.adj_nbr
    gx = topo.adj_dwdr * topo.adj_ex
    gy = topo.adj_dwdr * topo.adj_ey
    for a in range(n):
        s, e = start[a], start[a + 1]
        if e - s < 3:
            raise SetupError(
                f"solid particle {a} has only {e - s} reference neighbors")
        b = nbr[s:e]
        dx = pos0[b, 0] - pos0[a, 0]
        dy = pos0[b, 1] - pos0[a, 1]
        v = vol0[b]
        m[a, 0, 0] = (v * dx * gx[s:e]).sum()
        m[a, 0, 1] = (v * dx * gy[s:e]).sum()
        m[a, 1, 0] = (v * dy * gx[s:e]).sum()
        m[a, 1, 1] = (v * dy * gy[s:e]).sum()
        sv = np.linalg.svd(m[a], compute_uv=False)
        if sv[-1] <= 0.0 or sv[0] / sv[-1] > cond_limit:
            raise SetupError(
                f"degenerate reference support at solid particle {a} "
                f"(condition number {sv[0] / max(sv[-1], 1e-300):.3g})")
    b0 = np.linalg.inv(m)
    solid.b0[:] = b0
    return b0


def build_reference(solid: SolidState, topo: NeighborTopology,
                    cond_limit: float = 1e8) -> SolidReference:
    correction_matrices(solid, topo, cond_limit)
    return SolidReference(topo, solid)


@njit(cache=True)
def _deformation_rate(start, nbr, gx, gy, vol0, vel, out):
    for a in range(start.shape[0] - 1):
        f00 = 0.0
        f01 = 0.0
        f10 = 0.0
        f11 = 0.0
        vax = vel[a, 0]
        vay = vel[a, 1]
        for k in range(start[a], start[a + 1]):
            b = nbr[k]
            dvx = (vel[b, 0] - vax) * vol0[b]
            dvy = (vel[b, 1] - vay) * vol0[b]
            f00 += dvx * gx[k]
            f01 += dvx * gy[k]
            f10 += dvy * gx[k]
            f11 += dvy * gy[k]
        out[a, 0, 0] = f00
        out[a, 0, 1] = f01
        out[a, 1, 0] = f10
        out[a, 1, 1] = f11


@njit(cache=True)
def _stress_times_b0(f, b0, lam, mu, model, q):
    """Q_a = P_a B0_a with P = F S; returns index of any inverted element."""
    for a in range(f.shape[0]):
        f00 = f[a, 0, 0]
        f01 = f[a, 0, 1]
        f10 = f[a, 1, 0]
        f11 = f[a, 1, 1]
        det = f00 * f11 - f01 * f10
        if det <= DET_F_FLOOR:
            return a
        # C = F^T F
        c00 = f00 * f00 + f10 * f10
        c01 = f00 * f01 + f10 * f11
        c11 = f01 * f01 + f11 * f11
        if model == MODEL_LINEAR:
            e00 = 0.5 * (c00 - 1.0)
            e01 = 0.5 * c01
            e11 = 0.5 * (c11 - 1.0)
            tr = e00 + e11
            s00 = lam * tr + 2.0 * mu * e00
            s01 = 2.0 * mu * e01
            s11 = lam * tr + 2.0 * mu * e11
        else:
            det_c = det * det
            ci00 = c11 / det_c
            ci01 = -c01 / det_c
            ci11 = c00 / det_c
            log_j = 0.5 * np.log(det_c)
            s00 = mu * (1.0 - ci00) + lam * log_j * ci00
            s01 = -mu * ci01 + lam * log_j * ci01
            s11 = mu * (1.0 - ci11) + lam * log_j * ci11
        # P = F S (S symmetric)
        p00 = f00 * s00 + f01 * s01
        p01 = f00 * s01 + f01 * s11
        p10 = f10 * s00 + f11 * s01
        p11 = f10 * s01 + f11 * s11
        q[a, 0, 0] = p00 * b0[a, 0, 0] + p01 * b0[a, 1, 0]
        q[a, 0, 1] = p00 * b0[a, 0, 1] + p01 * b0[a, 1, 1]
        q[a, 1, 0] = p10 * b0[a, 0, 0] + p11 * b0[a, 1, 0]
        q[a, 1, 1] = p10 * b0[a, 0, 1] + p11 * b0[a, 1, 1]
    return -1


@njit(cache=True)
def _internal_force(start, nbr, rawgx, rawgy, vol0, q, out):
    for a in range(start.shape[0] - 1):
        fx = 0.0
        fy = 0.0
        q_a00 = q[a, 0, 0]
        q_a01 = q[a, 0, 1]
        q_a10 = q[a, 1, 0]
        q_a11 = q[a, 1, 1]
        va = vol0[a]
        for k in range(start[a], start[a + 1]):
            b = nbr[k]
            vv = va * vol0[b]
            txx = q_a00 + q[b, 0, 0]
            txy = q_a01 + q[b, 0, 1]
            tyx = q_a10 + q[b, 1, 0]
            tyy = q_a11 + q[b, 1, 1]
            fx += vv * (txx * rawgx[k] + txy * rawgy[k])
            fy += vv * (tyx * rawgx[k] + tyy * rawgy[k])
        out[a, 0] = fx
        out[a, 1] = fy


def deformation_rate(solid: SolidState, ref: SolidReference) -> np.ndarray:
    out = np.zeros((solid.n, 2, 2))
    _deformation_rate(ref.start, ref.nbr, ref.gx, ref.gy, solid.vol0,
                      solid.vel, out)
    return out


def internal_force(solid: SolidState, ref: SolidReference) -> np.ndarray:
    """Elastic force [N] per particle from the current deformation field."""
    q = np.empty((solid.n, 2, 2))
    model = (MODEL_LINEAR if solid.material.model.value == "linear-elastic"
             else MODEL_NEO_HOOKEAN)
    bad = _stress_times_b0(solid.f, solid.b0, solid.material.lam,
                           solid.material.mu, model, q)
    if bad >= 0:
        raise ElementInversionError(
            f"solid particle {bad} inverted: det F = {solid.det_f[bad]:.3e}")
    out = np.empty((solid.n, 2))
    _internal_force(ref.start, ref.nbr, ref.rawgx, ref.rawgy, solid.vol0, q, out)
    return out


def solid_density(solid: SolidState) -> np.ndarray:
    """rho = rho0 / det(F), the algebraic total-Lagrangian mass balance."""
    det = solid.det_f
    if (det <= 0.0).any():
        bad = int(np.where(det <= 0.0)[0][0])
        raise ElementInversionError(
            f"solid particle {bad} inverted: det F = {det[bad]:.3e}")
    return solid.material.rho0 / det


def solid_dt(solid: SolidState, h_s: float) -> float:
    """Structure criterion 0.6 min(h/(c + |v|max), sqrt(h/|dv/dt|max))."""
    vmax = float(np.sqrt((solid.vel ** 2).sum(axis=1).max())) if solid.n else 0.0
    dt = 0.6 * h_s / (solid.material.c + vmax)
    amax = float(np.sqrt((solid.accel ** 2).sum(axis=1).max())) if solid.n else 0.0
    if amax > 0.0:
        dt = min(dt, 0.6 * np.sqrt(h_s / amax))
    return dt


def apply_constraints(solid: SolidState) -> None:
    """Hold constrained particles at their reference state."""
    c = solid.constrained
    solid.vel[c] = 0.0
    solid.pos[c] = solid.pos0[c]


@njit(cache=True)
def _substep_loop(pos, vel, f, rho, accel_out, b0, start, nbr, gx, gy, rawgx,
                  rawgy, vol0, mass, rho0, lam, mu, model, gx_body, gy_body,
                  a_fsi, constrained, pos0, dt_window, kappa, tether_idx,
                  tether_x, tether_y, tether_len, v_trap, df1, q, fint, v_old):
    """kappa position-based Verlet substeps with frozen interface forces.

    Returns (error_particle, error_substep, time_integrated); the error
    indices are -1 on success. ``v_trap`` accumulates sum(dt * (v_k +
    v_k+1)/2) for the window average.
    """
    n = pos.shape[0]
    t_used = 0.0
    base = dt_window / kappa
    for step in range(kappa):
        if step == kappa - 1:
            s = dt_window - t_used
        else:
            s = base
        half = 0.5 * s
        # rates at the start of the substep
        _deformation_rate(start, nbr, gx, gy, vol0, vel, df1)
        for a in range(n):
            f[a, 0, 0] += half * df1[a, 0, 0]
            f[a, 0, 1] += half * df1[a, 0, 1]
            f[a, 1, 0] += half * df1[a, 1, 0]
            f[a, 1, 1] += half * df1[a, 1, 1]
            det = f[a, 0, 0] * f[a, 1, 1] - f[a, 0, 1] * f[a, 1, 0]
            if det <= DET_F_FLOOR:
                return a, step, t_used
            rho[a] = rho0 / det
            pos[a, 0] += half * vel[a, 0]
            pos[a, 1] += half * vel[a, 1]
            v_old[a, 0] = vel[a, 0]
            v_old[a, 1] = vel[a, 1]
        bad = _stress_times_b0(f, b0, lam, mu, model, q)
        if bad >= 0:
            return bad, step, t_used
        _internal_force(start, nbr, rawgx, rawgy, vol0, q, fint)
        for a in range(n):
            if constrained[a]:
                vel[a, 0] = 0.0
                vel[a, 1] = 0.0
                accel_out[a, 0] = 0.0
                accel_out[a, 1] = 0.0
            else:
                ax = fint[a, 0] / mass[a] + gx_body + a_fsi[a, 0]
                ay = fint[a, 1] / mass[a] + gy_body + a_fsi[a, 1]
                accel_out[a, 0] = ax
                accel_out[a, 1] = ay
                vel[a, 0] += s * ax
                vel[a, 1] += s * ay
        if tether_idx >= 0:
            p = tether_idx
            rx = pos[p, 0] - tether_x
            ry = pos[p, 1] - tether_y
            dist = np.sqrt(rx * rx + ry * ry)
            if dist >= tether_len and dist > 0.0:
                ux = rx / dist
                uy = ry / dist
                vr = vel[p, 0] * ux + vel[p, 1] * uy
                if vr > 0.0:
                    vel[p, 0] -= vr * ux
                    vel[p, 1] -= vr * uy
        # second half: rates with updated velocities
        _deformation_rate(start, nbr, gx, gy, vol0, vel, df1)
        for a in range(n):
            f[a, 0, 0] += half * df1[a, 0, 0]
            f[a, 0, 1] += half * df1[a, 0, 1]
            f[a, 1, 0] += half * df1[a, 1, 0]
            f[a, 1, 1] += half * df1[a, 1, 1]
            det = f[a, 0, 0] * f[a, 1, 1] - f[a, 0, 1] * f[a, 1, 0]
            if det <= DET_F_FLOOR:
                return a, step, t_used
            rho[a] = rho0 / det
            if constrained[a]:
                pos[a, 0] = pos0[a, 0]
                pos[a, 1] = pos0[a, 1]
            else:
                pos[a, 0] += half * vel[a, 0]
                pos[a, 1] += half * vel[a, 1]
            v_trap[a, 0] += s * 0.5 * (v_old[a, 0] + vel[a, 0])
            v_trap[a, 1] += s * 0.5 * (v_old[a, 1] + vel[a, 1])
        if tether_idx >= 0:
            p = tether_idx
            rx = pos[p, 0] - tether_x
            ry = pos[p, 1] - tether_y
            dist = np.sqrt(rx * rx + ry * ry)
            if dist > tether_len:
                pos[p, 0] = tether_x + tether_len * rx / dist
                pos[p, 1] = tether_y + tether_len * ry / dist
        t_used += s
    return -1, -1, t_used


class Tether:
    """Inextensible-when-taut cable from one particle to a fixed anchor."""

    def __init__(self, particle: int, anchor, length: float):
        self.particle = int(particle)
        self.anchor = np.asarray(anchor, dtype=np.float64)
        self.length = float(length)


class SubstepScratch:
    """Reusable work arrays for the compiled substep loop."""

    def __init__(self, n: int):
        self.v_trap = np.zeros((n, 2))
        self.df = np.empty((n, 2, 2))
        self.q = np.empty((n, 2, 2))
        self.fint = np.empty((n, 2))
        self.v_old = np.empty((n, 2))


def run_substeps(solid: SolidState, ref: SolidReference, gravity: np.ndarray,
                 a_fsi: np.ndarray, dt_window: float, kappa: int,
                 tether: Tether | None = None,
                 scratch: SubstepScratch | None = None):
    """Advance the solid through one acoustic window of kappa substeps.

    Interface accelerations ``a_fsi`` stay frozen for the whole window.
    Returns (v_avg, a_avg, time_integrated): the trapezoidal window
    average of the velocity, the window-secant acceleration, and the
    accumulated substep time (bitwise equal to ``dt_window``).
    """
    if scratch is None:
        scratch = SubstepScratch(solid.n)
    scratch.v_trap[:] = 0.0
    v_start = solid.vel.copy()
    model = (MODEL_LINEAR if solid.material.model.value == "linear-elastic"
             else MODEL_NEO_HOOKEAN)
    if tether is None:
        t_idx, t_x, t_y, t_len = -1, 0.0, 0.0, 0.0
    else:
        t_idx, t_x, t_y = tether.particle, tether.anchor[0], tether.anchor[1]
        t_len = tether.length
    bad, bad_step, t_used = _substep_loop(
        solid.pos, solid.vel, solid.f, solid.rho, solid.accel, solid.b0,
        ref.start, ref.nbr, ref.gx, ref.gy, ref.rawgx, ref.rawgy, solid.vol0,
        solid.mass, solid.material.rho0, solid.material.lam, solid.material.mu,
        model, gravity[0], gravity[1], a_fsi, solid.constrained, solid.pos0,
        dt_window, kappa, t_idx, t_x, t_y, t_len, scratch.v_trap, scratch.df,
        scratch.q, scratch.fint, scratch.v_old)
    if bad >= 0:
        raise ElementInversionError(
            f"solid particle {bad} inverted during substep {bad_step}")
    v_avg = scratch.v_trap / t_used
    a_avg = (solid.vel - v_start) / t_used
    return v_avg, a_avg, t_used
