"""Run outputs: telemetry, probe series, particle snapshots, manifest.

CSV is the acceptance-bearing format: floats are written in shortest
round-trip form so files are bit-reproducible and reloadable without
loss. VTK legacy ASCII is a convenience export for viewers.
"""

from __future__ import annotations

import hashlib
import json
import os
import time

import numpy as np

from .materials import SolidModel, second_pk_linear, second_pk_neohookean, von_mises
from .materials import green_strain
from .scenarios import ProbeSeries, vorticity_field
from .stepping import Simulation


def _fmt(x: float) -> str:
    return repr(float(x))


class TelemetryWriter:
    """Per-acoustic-step run log as CSV."""

    COLUMNS = ("t", "dt_ad", "dt_ac", "dt_s", "kappa", "sum_dt_s", "px", "py",
               "max_rho_dev")

    def __init__(self, path):
        self.path = path
        self._fh = open(path, "w", encoding="utf-8")
        self._fh.write(",".join(self.COLUMNS) + "\n")

    def row(self, **fields) -> None:
        self._fh.write(",".join(
            str(int(fields[c])) if c == "kappa" else _fmt(fields[c])
            for c in self.COLUMNS) + "\n")

    def close(self) -> None:
        self._fh.close()


def write_probe_series(series: ProbeSeries, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("t," + ",".join(series.columns) + "\n")
        for k in range(series.times.shape[0]):
            fh.write(_fmt(series.times[k]) + ","
                     + ",".join(_fmt(v) for v in series.values[k]) + "\n")


def read_probe_series(path) -> ProbeSeries:
    with open(path, encoding="utf-8") as fh:
        header = fh.readline().strip().split(",")
        rows = [[float(v) for v in line.split(",")] for line in fh if line.strip()]
    data = np.asarray(rows).reshape(-1, len(header))
    return ProbeSeries(os.path.basename(str(path)), data[:, 0], data[:, 1:],
                       columns=tuple(header[1:]))


def _solid_von_mises(solid) -> np.ndarray:
    out = np.zeros(solid.n)
    nh = solid.material.model == SolidModel.NEO_HOOKEAN
    for a in range(solid.n):
        f = solid.f[a]
        s = (second_pk_neohookean(f, solid.material, particle=a) if nh
             else second_pk_linear(green_strain(f), solid.material))
        out[a] = von_mises(f, s, particle=a)
    return out


def write_snapshot(sim: Simulation, directory, index: int,
                   fmt: str = "csv") -> list:
    """Write per-particle fields at the current time; returns file paths."""
    os.makedirs(directory, exist_ok=True)
    paths = []
    f = sim.fluid
    vort = vorticity_field(f, sim.topo_ff)
    if fmt == "csv":
        path = os.path.join(directory, f"fluid_{index:06d}.csv")
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("x,y,vx,vy,rho,p,vorticity\n")
            for i in range(f.n):
                fh.write(",".join(_fmt(v) for v in (
                    f.pos[i, 0], f.pos[i, 1], f.vel[i, 0], f.vel[i, 1],
                    f.rho[i], f.p[i], vort[i])) + "\n")
        paths.append(path)
    elif fmt == "vtk":
        path = os.path.join(directory, f"fluid_{index:06d}.vtk")
        _write_vtk_points(path, f.pos, scalars={"rho": f.rho, "p": f.p,
                                                "vorticity": vort},
                          vectors={"velocity": f.vel})
        paths.append(path)
    else:
        raise ValueError(f"unknown snapshot format {fmt!r}")

    if sim.solid is not None:
        s = sim.solid
        vm = _solid_von_mises(s)
        disp = s.displacement
        if fmt == "csv":
            path = os.path.join(directory, f"solid_{index:06d}.csv")
            with open(path, "w", encoding="utf-8") as fh:
                fh.write("x,y,ux,uy,von_mises\n")
                for a in range(s.n):
                    fh.write(",".join(_fmt(v) for v in (
                        s.pos[a, 0], s.pos[a, 1], disp[a, 0], disp[a, 1],
                        vm[a])) + "\n")
        else:
            path = os.path.join(directory, f"solid_{index:06d}.vtk")
            _write_vtk_points(path, s.pos, scalars={"von_mises": vm},
                              vectors={"displacement": disp})
        paths.append(path)
    return paths


def _write_vtk_points(path, pos, scalars=None, vectors=None) -> None:
    n = pos.shape[0]
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("# vtk DataFile Version 3.0\n")
        fh.write("fsisph particle snapshot\n")
        fh.write("ASCII\nDATASET POLYDATA\n")
        fh.write(f"POINTS {n} double\n")
        for i in range(n):
            fh.write(f"{_fmt(pos[i, 0])} {_fmt(pos[i, 1])} 0.0\n")
        fh.write(f"VERTICES {n} {2 * n}\n")
        for i in range(n):
            fh.write(f"1 {i}\n")
        fh.write(f"POINT_DATA {n}\n")
        for name, arr in (scalars or {}).items():
            fh.write(f"SCALARS {name} double 1\nLOOKUP_TABLE default\n")
            for v in arr:
                fh.write(_fmt(v) + "\n")
        for name, arr in (vectors or {}).items():
            fh.write(f"VECTORS {name} double\n")
            for i in range(arr.shape[0]):
                fh.write(f"{_fmt(arr[i, 0])} {_fmt(arr[i, 1])} 0.0\n")


def config_hash(serialized: str) -> str:
    return hashlib.sha256(serialized.encode("utf-8")).hexdigest()


class Manifest:
    """Run record: configuration identity, counters, and phase timing."""

    def __init__(self, cfg_name: str, geometry: str, mode: str, cfg_sha: str,
                 version: str, workers: int, deterministic: bool):
        self.data = {
            "scenario": cfg_name,
            "geometry": geometry,
            "mode": mode,
            "config_hash": cfg_sha,
            "code_version": version,
            "workers": workers,
            "deterministic": deterministic,
            "started": time.strftime("%Y-%m-%dT%H:%M:%S"),
            "finished": None,
            "wall_clock_s": None,
            "phase_seconds": {},
            "counters": {},
            "t_reached": 0.0,
            "end_time_target": None,
            "max_density_deviation": None,
            "particles": {},
            "error": None,
        }

    def finalize(self, sim: Simulation | None, wall_clock: float,
                 error: str | None = None) -> None:
        self.data["finished"] = time.strftime("%Y-%m-%dT%H:%M:%S")
        self.data["wall_clock_s"] = wall_clock
        self.data["error"] = error
        if sim is not None:
            self.data["phase_seconds"] = dict(sim.phase_seconds)
            self.data["counters"] = {
                "advection_steps": sim.n_advection,
                "acoustic_steps": sim.n_acoustic,
                "solid_substeps": sim.n_solid_substeps,
            }
            self.data["t_reached"] = sim.t
            self.data["max_density_deviation"] = sim.max_density_dev
            self.data["particles"] = {
                "fluid": sim.fluid.n,
                "solid": sim.solid.n if sim.solid is not None else 0,
                "wall": sim.walls.n if sim.walls is not None else 0,
            }

    def write(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.data, fh, indent=2, sort_keys=True)
            fh.write("\n")


def read_manifest(path) -> dict:
    with open(path, encoding="utf-8") as fh:
        return json.load(fh)
