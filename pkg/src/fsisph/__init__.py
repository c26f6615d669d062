"""2D weakly-compressible SPH solver for fluid-structure interaction.

Fluid dynamics use an updated-Lagrangian WCSPH discretization with a
low-dissipation Riemann solver; solids use a total-Lagrangian
elastodynamics discretization with first-order-consistent corrected
kernels. Fluid and structure may be discretized at different particle
spacings and advance with different time steps, synchronized by a
position-based Verlet scheme that keeps the two-way coupling forces
momentum-conserving across the sub-stepping gap.
"""

__version__ = "0.1.0"
