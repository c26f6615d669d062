"""Shared builders for small test systems."""

import numpy as np

from fsisph.materials import FluidMaterial, SolidMaterial, SolidModel
from fsisph.state import FluidState, SolidState
from fsisph.stepping import MULTI_RATE, Simulation


def lattice(nx, ny, dp, origin=(0.0, 0.0)):
    xs = origin[0] + (np.arange(nx) + 0.5) * dp
    ys = origin[1] + (np.arange(ny) + 0.5) * dp
    return np.array([(x, y) for x in xs for y in ys])


def hydrostatic_tank(width=0.1, height=0.1, dp=0.005, margin=0.05, eta=0.1):
    """Open tank with three walls; a mildly viscous fluid so it can settle."""
    from fsisph.boundaries import merge_walls, straight_wall

    g = 9.81
    v_ref = np.sqrt(2.0 * g * height)
    mat = FluidMaterial(rho0=1000.0, c=10.0 * v_ref, eta=eta)
    nx = int(round(width / dp))
    ny = int(round(height / dp))
    pos = lattice(nx, ny, dp)
    fluid = FluidState(pos, np.zeros_like(pos), mat, dp)
    top = height + margin
    thick = 4 * dp  # floor extends under the side bands to seal corners
    walls = merge_walls([
        straight_wall((-thick, 0.0), (width + thick, 0.0), (0.0, 1.0), dp),
        straight_wall((0.0, 0.0), (0.0, top), (1.0, 0.0), dp),        # left
        straight_wall((width, 0.0), (width, top), (-1.0, 0.0), dp),   # right
    ])
    sim = Simulation(fluid, walls=walls, h_fluid=1.3 * dp,
                     gravity=(0.0, -g))
    return sim


def isolated_impact(mode=MULTI_RATE, v0=0.5, gravity=(0.0, 0.0),
                    nx_f=16, ny_f=12, model=SolidModel.LINEAR_ELASTIC):
    """Free fluid patch drifting into a free elastic bar, no walls.

    The solid sound speed is chosen well above the fluid's so the
    multi-rate scheme subcycles (kappa >= 3 once the fluid moves).
    """
    dp_f = 0.01
    dp_s = 0.005
    fluid_mat = FluidMaterial(rho0=1000.0, c=10.0 * max(v0, 0.1), eta=0.0)
    solid_mat = SolidMaterial(rho0=1000.0, youngs_modulus=2.16e6,
                              poisson_ratio=0.4, model=model)
    pos_f = lattice(nx_f, ny_f, dp_f)
    vel_f = np.zeros_like(pos_f)
    vel_f[:, 0] = v0
    fluid = FluidState(pos_f, vel_f, fluid_mat, dp_f)
    # bar just downstream, one kernel radius away
    x0 = nx_f * dp_f + 1.5 * dp_f
    pos_s = lattice(6, 2 * ny_f, dp_s, origin=(x0, 0.0))
    solid = SolidState(pos_s, solid_mat, dp_s)
    sim = Simulation(fluid, solid, h_fluid=1.3 * dp_f, h_solid=1.3 * dp_s,
                     gravity=gravity, mode=mode)
    return sim
