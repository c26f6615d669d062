"""Cell-linked-list neighbor search and cached pair topologies.

A uniform background grid with cell edge >= the kernel cutoff reduces pair
discovery to a 9-cell stencil sweep. Pair lists store each unordered pair
exactly once together with the cached kernel quantities (r, unit vector,
W, dW/dr). Rate evaluations use a CSR "gather" view derived from the pair
list: every particle owns a contiguous slice of directed edges, so force
loops read immutable arrays and write only their own row. That layout is
what makes the kernels deterministic at any worker count and lets both
directions of a pair compute bitwise-identical force magnitudes.

Three configurations are used by the solver:
  fluid-fluid          current positions, smoothing length h^F, rebuilt
                       every advection step
  solid-solid-reference  initial positions, h^S, built once and frozen
                       (total Lagrangian)
  fluid-solid / fluid-wall  current positions, h^F (the coarser length,
                       so interface pairs are never missed)
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from numba import njit

from .errors import CorruptStateError, DegeneratePairError
from .kernel import SmoothingKernel, _dw_dr, _w


@dataclass
class CellGrid:
    """Uniform background grid over a particle cloud."""

    origin: np.ndarray        # lower-left corner
    edge: float               # cell edge length, >= the largest cutoff in play
    nx: int
    ny: int
    order: np.ndarray         # particle indices sorted by cell id
    cell_start: np.ndarray    # CSR offsets over cells, len nx*ny + 1
    cell_of: np.ndarray       # cell id per particle (unsorted)


def build_cell_grid(positions: np.ndarray, cutoff: float) -> CellGrid:
    """Bin particles into square cells of edge ``cutoff``.

    Every particle lands in exactly one cell. Non-finite coordinates are
    rejected with the offending particle index; downstream pair sweeps
    must never see them.
    """
    if not cutoff > 0.0:
        raise ValueError(f"cutoff must be positive, got {cutoff}")
    pos = np.ascontiguousarray(positions, dtype=np.float64)
    bad = np.where(~np.isfinite(pos).all(axis=1))[0]
    if bad.size:
        raise CorruptStateError(f"non-finite position for particle index {int(bad[0])}")
    origin = pos.min(axis=0) - cutoff
    extent = pos.max(axis=0) - origin
    nx = max(1, int(extent[0] / cutoff) + 2)
    ny = max(1, int(extent[1] / cutoff) + 2)
    if nx * ny > 200_000_000:
        raise CorruptStateError(
            f"particle cloud extent {extent} is inconsistent with cutoff "
            f"{cutoff}; a particle has likely escaped the domain")
    ix = np.floor((pos[:, 0] - origin[0]) / cutoff).astype(np.int64)
    iy = np.floor((pos[:, 1] - origin[1]) / cutoff).astype(np.int64)
    np.clip(ix, 0, nx - 1, out=ix)
    np.clip(iy, 0, ny - 1, out=iy)
    cell_of = ix + nx * iy
    order = np.argsort(cell_of, kind="stable")
    counts = np.bincount(cell_of, minlength=nx * ny)
    cell_start = np.zeros(nx * ny + 1, dtype=np.int64)
    np.cumsum(counts, out=cell_start[1:])
    return CellGrid(origin=origin, edge=float(cutoff), nx=nx, ny=ny,
                    order=order.astype(np.int64), cell_start=cell_start,
                    cell_of=cell_of)


@dataclass
class NeighborTopology:
    """Pair list plus gather view for one interaction configuration.

    ``i``/``j`` hold each unordered pair exactly once; ``e`` components
    point from j toward i. The gather view duplicates every pair in both
    directions: particle p owns edges ``adj_start[p]:adj_start[p+1]`` with
    unit vectors pointing from the neighbor toward p.
    """

    tag: str
    n_a: int
    n_b: int
    i: np.ndarray
    j: np.ndarray
    r: np.ndarray
    ex: np.ndarray
    ey: np.ndarray
    w: np.ndarray
    dwdr: np.ndarray
    h: float
    # gather view, side A (and side B for cross-set configurations)
    adj_start: np.ndarray = field(default=None, repr=False)
    adj_nbr: np.ndarray = field(default=None, repr=False)
    adj_r: np.ndarray = field(default=None, repr=False)
    adj_ex: np.ndarray = field(default=None, repr=False)
    adj_ey: np.ndarray = field(default=None, repr=False)
    adj_w: np.ndarray = field(default=None, repr=False)
    adj_dwdr: np.ndarray = field(default=None, repr=False)
    adj_start_b: np.ndarray = field(default=None, repr=False)
    adj_nbr_b: np.ndarray = field(default=None, repr=False)
    adj_r_b: np.ndarray = field(default=None, repr=False)
    adj_ex_b: np.ndarray = field(default=None, repr=False)
    adj_ey_b: np.ndarray = field(default=None, repr=False)
    adj_w_b: np.ndarray = field(default=None, repr=False)
    adj_dwdr_b: np.ndarray = field(default=None, repr=False)

    @property
    def n_pairs(self) -> int:
        return self.i.shape[0]


def _gather_side(owners, others, ex, ey, r, w, dwdr, n_owner):
    order = np.argsort(owners, kind="stable")
    counts = np.bincount(owners, minlength=n_owner)
    start = np.zeros(n_owner + 1, dtype=np.int64)
    np.cumsum(counts, out=start[1:])
    return (start, others[order], r[order], ex[order], ey[order],
            w[order], dwdr[order])


def _attach_gather(topo: NeighborTopology, cross: bool) -> None:
    if cross:
        (topo.adj_start, topo.adj_nbr, topo.adj_r, topo.adj_ex, topo.adj_ey,
         topo.adj_w, topo.adj_dwdr) = _gather_side(
            topo.i, topo.j, topo.ex, topo.ey, topo.r, topo.w, topo.dwdr, topo.n_a)
        (topo.adj_start_b, topo.adj_nbr_b, topo.adj_r_b, topo.adj_ex_b,
         topo.adj_ey_b, topo.adj_w_b, topo.adj_dwdr_b) = _gather_side(
            topo.j, topo.i, -topo.ex, -topo.ey, topo.r, topo.w, topo.dwdr, topo.n_b)
    else:
        owners = np.concatenate((topo.i, topo.j))
        others = np.concatenate((topo.j, topo.i))
        ex = np.concatenate((topo.ex, -topo.ex))
        ey = np.concatenate((topo.ey, -topo.ey))
        r = np.concatenate((topo.r, topo.r))
        w = np.concatenate((topo.w, topo.w))
        dwdr = np.concatenate((topo.dwdr, topo.dwdr))
        (topo.adj_start, topo.adj_nbr, topo.adj_r, topo.adj_ex, topo.adj_ey,
         topo.adj_w, topo.adj_dwdr) = _gather_side(
            owners, others, ex, ey, r, w, dwdr, topo.n_a)


@njit(cache=True)
def _sweep_same(pos, order, cell_start, nx, ny, cutoff, h,
                out_i, out_j, out_r, out_ex, out_ey, out_w, out_dw, fill):
    """Half-stencil sweep over one particle set. fill=0 counts, fill=1 writes."""
    cutoff2 = cutoff * cutoff
    count = 0
    degen_a = -1
    degen_b = -1
    ncell = nx * ny
    for c in range(ncell):
        cx = c % nx
        cy = c // nx
        a0 = cell_start[c]
        a1 = cell_start[c + 1]
        # pairs within the cell, each once
        for s in range(a0, a1):
            p = order[s]
            for t in range(s + 1, a1):
                q = order[t]
                dx = pos[p, 0] - pos[q, 0]
                dy = pos[p, 1] - pos[q, 1]
                r2 = dx * dx + dy * dy
                if r2 < cutoff2:
                    r = np.sqrt(r2)
                    if r <= 1e-14 * cutoff:
                        degen_a = p
                        degen_b = q
                        continue
                    if fill == 1:
                        out_i[count] = p
                        out_j[count] = q
                        out_r[count] = r
                        out_ex[count] = dx / r
                        out_ey[count] = dy / r
                        out_w[count] = _w(r / h, h)
                        out_dw[count] = _dw_dr(r / h, h)
                    count += 1
        # half stencil: (+1,0), (-1,+1), (0,+1), (+1,+1)
        for k in range(4):
            if k == 0:
                ox, oy = 1, 0
            elif k == 1:
                ox, oy = -1, 1
            elif k == 2:
                ox, oy = 0, 1
            else:
                ox, oy = 1, 1
            mx = cx + ox
            my = cy + oy
            if mx < 0 or mx >= nx or my < 0 or my >= ny:
                continue
            d = mx + nx * my
            b0 = cell_start[d]
            b1 = cell_start[d + 1]
            for s in range(a0, a1):
                p = order[s]
                for t in range(b0, b1):
                    q = order[t]
                    dx = pos[p, 0] - pos[q, 0]
                    dy = pos[p, 1] - pos[q, 1]
                    r2 = dx * dx + dy * dy
                    if r2 < cutoff2:
                        r = np.sqrt(r2)
                        if r <= 1e-14 * cutoff:
                            degen_a = p
                            degen_b = q
                            continue
                        if fill == 1:
                            out_i[count] = p
                            out_j[count] = q
                            out_r[count] = r
                            out_ex[count] = dx / r
                            out_ey[count] = dy / r
                            out_w[count] = _w(r / h, h)
                            out_dw[count] = _dw_dr(r / h, h)
                        count += 1
    return count, degen_a, degen_b


@njit(cache=True)
def _sweep_cross(pos_a, pos_b, order_b, cell_start_b, origin_b, edge_b, nx, ny,
                 cutoff, h, out_i, out_j, out_r, out_ex, out_ey, out_w, out_dw,
                 fill):
    """Full 9-cell sweep from set A into set B's grid."""
    cutoff2 = cutoff * cutoff
    count = 0
    degen_a = -1
    degen_b = -1
    for p in range(pos_a.shape[0]):
        ix = int((pos_a[p, 0] - origin_b[0]) / edge_b)
        iy = int((pos_a[p, 1] - origin_b[1]) / edge_b)
        for oy in range(-1, 2):
            my = iy + oy
            if my < 0 or my >= ny:
                continue
            for ox in range(-1, 2):
                mx = ix + ox
                if mx < 0 or mx >= nx:
                    continue
                d = mx + nx * my
                for t in range(cell_start_b[d], cell_start_b[d + 1]):
                    q = order_b[t]
                    dx = pos_a[p, 0] - pos_b[q, 0]
                    dy = pos_a[p, 1] - pos_b[q, 1]
                    r2 = dx * dx + dy * dy
                    if r2 < cutoff2:
                        r = np.sqrt(r2)
                        if r <= 1e-14 * cutoff:
                            degen_a = p
                            degen_b = q
                            continue
                        if fill == 1:
                            out_i[count] = p
                            out_j[count] = q
                            out_r[count] = r
                            out_ex[count] = dx / r
                            out_ey[count] = dy / r
                            out_w[count] = _w(r / h, h)
                            out_dw[count] = _dw_dr(r / h, h)
                        count += 1
    return count, degen_a, degen_b


_EMPTY_I = np.empty(0, dtype=np.int64)
_EMPTY_F = np.empty(0, dtype=np.float64)


def find_pairs(pos_a: np.ndarray, pos_b: np.ndarray | None,
               kernel: SmoothingKernel, tag: str,
               grid: CellGrid | None = None) -> NeighborTopology:
    """Enumerate all pairs closer than the kernel cutoff.

    ``pos_b is None`` builds the symmetric same-set topology (self-pairs
    excluded, each unordered pair once). Otherwise pairs run from set A
    to set B. Exactly coincident distinct particles raise
    DegeneratePairError. A pre-built grid with cell edge >= the cutoff
    may be shared between configurations.
    """
    pos_a = np.ascontiguousarray(pos_a, dtype=np.float64)
    cross = pos_b is not None
    h = kernel.h
    cutoff = kernel.cutoff

    if cross:
        pos_b = np.ascontiguousarray(pos_b, dtype=np.float64)
        n_a, n_b = pos_a.shape[0], pos_b.shape[0]
        if n_a == 0 or n_b == 0:
            topo = NeighborTopology(tag, n_a, n_b, _EMPTY_I, _EMPTY_I, _EMPTY_F,
                                    _EMPTY_F, _EMPTY_F, _EMPTY_F, _EMPTY_F, h)
            _attach_gather(topo, cross=True)
            return topo
        if grid is None:
            grid = build_cell_grid(pos_b, cutoff)
        elif grid.edge < cutoff:
            raise ValueError("shared grid cell edge is smaller than the kernel cutoff")
        n, da, db = _sweep_cross(pos_a, pos_b, grid.order, grid.cell_start,
                                 grid.origin, grid.edge, grid.nx, grid.ny,
                                 cutoff, h, _EMPTY_I, _EMPTY_I, _EMPTY_F,
                                 _EMPTY_F, _EMPTY_F, _EMPTY_F, _EMPTY_F, 0)
        if da >= 0:
            raise DegeneratePairError(
                f"coincident particles in {tag}: A index {da}, B index {db}")
        i = np.empty(n, dtype=np.int64)
        j = np.empty(n, dtype=np.int64)
        r = np.empty(n, dtype=np.float64)
        ex = np.empty(n, dtype=np.float64)
        ey = np.empty(n, dtype=np.float64)
        w = np.empty(n, dtype=np.float64)
        dw = np.empty(n, dtype=np.float64)
        _sweep_cross(pos_a, pos_b, grid.order, grid.cell_start, grid.origin,
                     grid.edge, grid.nx, grid.ny, cutoff, h, i, j, r, ex, ey,
                     w, dw, 1)
        topo = NeighborTopology(tag, n_a, n_b, i, j, r, ex, ey, w, dw, h)
        _attach_gather(topo, cross=True)
        return topo

    n_a = pos_a.shape[0]
    if n_a < 2:
        topo = NeighborTopology(tag, n_a, n_a, _EMPTY_I, _EMPTY_I, _EMPTY_F,
                                _EMPTY_F, _EMPTY_F, _EMPTY_F, _EMPTY_F, h)
        _attach_gather(topo, cross=False)
        return topo
    if grid is None:
        grid = build_cell_grid(pos_a, cutoff)
    elif grid.edge < cutoff:
        raise ValueError("shared grid cell edge is smaller than the kernel cutoff")
    n, da, db = _sweep_same(pos_a, grid.order, grid.cell_start, grid.nx,
                            grid.ny, cutoff, h, _EMPTY_I, _EMPTY_I, _EMPTY_F,
                            _EMPTY_F, _EMPTY_F, _EMPTY_F, _EMPTY_F, 0)
    if da >= 0:
        raise DegeneratePairError(
            f"coincident particles in {tag}: indices {da} and {db}")
    i = np.empty(n, dtype=np.int64)
    j = np.empty(n, dtype=np.int64)
    r = np.empty(n, dtype=np.float64)
    ex = np.empty(n, dtype=np.float64)
    ey = np.empty(n, dtype=np.float64)
    w = np.empty(n, dtype=np.float64)
    dw = np.empty(n, dtype=np.float64)
    _sweep_same(pos_a, grid.order, grid.cell_start, grid.nx, grid.ny, cutoff,
                h, i, j, r, ex, ey, w, dw, 1)
    topo = NeighborTopology(tag, n_a, n_a, i, j, r, ex, ey, w, dw, h)
    _attach_gather(topo, cross=False)
    return topo


def brute_force_pairs(pos_a: np.ndarray, pos_b: np.ndarray | None,
                      cutoff: float) -> set:
    """O(N^2) reference enumeration used as the oracle for the cell sweep."""
    pos_a = np.asarray(pos_a, dtype=np.float64)
    out = set()
    if pos_b is None:
        for p in range(pos_a.shape[0]):
            d = pos_a[p + 1:] - pos_a[p]
            rr = np.hypot(d[:, 0], d[:, 1])
            for k in np.where(rr < cutoff)[0]:
                out.add((p, p + 1 + int(k)))
        return out
    pos_b = np.asarray(pos_b, dtype=np.float64)
    for p in range(pos_a.shape[0]):
        d = pos_b - pos_a[p]
        rr = np.hypot(d[:, 0], d[:, 1])
        for k in np.where(rr < cutoff)[0]:
            out.add((p, int(k)))
    return out
