"""Plain-text pattern tables and binary matrix dumps.

Pattern tables hold one row per site::

    site_index x_1 ... x_d [cell_1 ... cell_d sublattice]

preceded by ``#`` header lines ``# key: <json>`` that carry the geometry,
``r``, ``R``, the density, the seed and any lattice metadata.

Matrix dumps are little-endian: an 8-byte magic ``b"NCIMAT01"``, then
``uint64 rows``, ``uint64 cols``, ``uint32 orbitals_per_site``,
``uint32 layout`` (0 means ``index = site * orbitals + orbital``), followed by
``rows * cols`` complex doubles in row-major order.
"""

from __future__ import annotations

import json
import struct

import numpy as np

from .models import HamiltonianMatrix
from .pattern import Geometry, PointPattern
from ._validation import as_matrix

__all__ = ["write_pattern", "read_pattern", "dump_matrix", "load_matrix", "MATRIX_MAGIC"]

MATRIX_MAGIC = b"NCIMAT01"
_HEADER = struct.Struct("<8sQQII")


def _tolist(a):
    return None if a is None else np.asarray(a).tolist()


def write_pattern(pattern: PointPattern, path) -> None:
    g = pattern.geometry
    header = {
        "geometry": {"kind": g.kind, "dimension": g.dimension,
                     "cell_vectors": _tolist(g.cell_vectors), "region": g.region,
                     "center": _tolist(g.center), "extent": _tolist(g.extent)},
        "r": pattern.r,
        "R": pattern.R,
        "density": pattern.density,
        "seed": pattern.seed,
        "lattice_vectors": _tolist(pattern.lattice_vectors),
        "lattice_shape": None if pattern.lattice_shape is None else list(pattern.lattice_shape),
        "meta": {k: v for k, v in pattern.meta.items() if isinstance(v, (str, int, float, bool))},
    }
    cols = [np.arange(pattern.n_sites)[:, None], pattern.positions]
    fmt = ["%d"] + ["%.17g"] * pattern.dimension
    if pattern.has_cells:
        cols.append(pattern.cells)
        sub = pattern.sublattice if pattern.sublattice is not None else np.zeros(pattern.n_sites, int)
        cols.append(np.asarray(sub)[:, None])
        fmt += ["%d"] * (pattern.dimension + 1)
    table = np.hstack([np.asarray(c, dtype=float) for c in cols])
    head = "\n".join(f"{k}: {json.dumps(v)}" for k, v in header.items())
    np.savetxt(path, table, fmt=fmt, header=head, comments="# ")


def read_pattern(path) -> PointPattern:
    header = {}
    with open(path) as fh:
        for line in fh:
            if not line.startswith("#"):
                break
            key, _, value = line[1:].strip().partition(":")
            header[key.strip()] = json.loads(value)
    g = header["geometry"]
    geom = Geometry(g["kind"], g["dimension"], cell_vectors=g["cell_vectors"],
                    region=g["region"], center=g["center"], extent=g["extent"])
    table = np.loadtxt(path, comments="#", ndmin=2)
    d = geom.dimension
    order = np.argsort(table[:, 0], kind="stable")
    table = table[order]
    cells = sub = None
    if table.shape[1] == 1 + 2 * d + 1:
        cells = table[:, 1 + d:1 + 2 * d].astype(np.int64)
        sub = table[:, -1].astype(np.int64)
        if header["meta"].get("lattice") != "honeycomb":
            sub = None
    return PointPattern(geom, table[:, 1:1 + d], header["r"], header["R"], header["density"],
                        seed=header["seed"], cells=cells, sublattice=sub,
                        lattice_vectors=header["lattice_vectors"],
                        lattice_shape=header["lattice_shape"], meta=header["meta"])


def dump_matrix(A, path) -> None:
    """Write a dense operator in the binary dump format."""
    M = np.ascontiguousarray(as_matrix(A), dtype="<c16")
    orbitals = A.basis.orbitals_per_site if isinstance(A, HamiltonianMatrix) else 1
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(MATRIX_MAGIC, M.shape[0], M.shape[1], orbitals, 0))
        fh.write(M.tobytes(order="C"))


def load_matrix(path):
    """Read a dump; returns ``(matrix, orbitals_per_site)``."""
    with open(path, "rb") as fh:
        magic, rows, cols, orbitals, layout = _HEADER.unpack(fh.read(_HEADER.size))
        if magic != MATRIX_MAGIC:
            raise ValueError("not a matrix dump")
        if layout != 0:
            raise ValueError(f"unknown basis layout {layout}")
        raw = fh.read()
    if len(raw) != 16 * rows * cols:
        raise ValueError("truncated matrix dump")
    data = np.frombuffer(raw, dtype="<c16")
    return data.reshape(rows, cols).astype(complex), int(orbitals)
