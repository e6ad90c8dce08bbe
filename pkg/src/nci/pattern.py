"""Finite Delone point patterns, their geometries and disorder fields.

Patterns come in two geometries. A ``torus`` pattern lives in a periodic
supercell spanned by ``cell_vectors`` and displacements are taken in the
minimal-image convention. An ``open`` pattern is a bounded patch (a box or a
disk) and displacements are plain differences.

All generated patterns are normalized to unit density (one point per unit
volume) and are immutable: their arrays are flagged read-only.
"""

from __future__ import annotations

from dataclasses import dataclass, field
import math
from typing import Optional

import numpy as np
from scipy.spatial import cKDTree

from .exceptions import PackingInfeasible
from ._validation import check_positive_int, check_seed

__all__ = [
    "Geometry",
    "PointPattern",
    "DisorderField",
    "HONEYCOMB_SPACING",
    "build_honeycomb",
    "build_honeycomb_disk",
    "build_chain",
    "build_square",
    "build_amorphous",
    "sample_disorder",
    "minimal_displacement",
    "covering_radius",
    "min_pair_distance",
]

# Honeycomb Bravais spacing at unit site density: two sites per cell of area
# (sqrt(3)/2) a^2 = 2.
HONEYCOMB_SPACING = math.sqrt(4.0 / math.sqrt(3.0))

# Random sequential adsorption jamming coverage for hard disks in 2D.
_RSA_JAMMING_2D = 0.547


def _frozen(a, dtype=float):
    if a is None:
        return None
    arr = np.array(a, dtype=dtype)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class Geometry:
    """Finite-volume container of a pattern.

    Parameters
    ----------
    kind : {'torus', 'open'}
    dimension : int
        Spatial dimension, one of 1, 2 or 4.
    cell_vectors : ndarray of shape (d, d), optional
        Rows span the periodic supercell (torus only).
    region : {'box', 'disk'}, optional
        Shape of an open patch.
    center : ndarray of shape (d,), optional
        Center of the open patch.
    extent : float or ndarray
        Disk radius, or box half-widths per axis.
    """

    kind: str
    dimension: int
    cell_vectors: Optional[np.ndarray] = None
    region: Optional[str] = None
    center: Optional[np.ndarray] = None
    extent: Optional[np.ndarray] = None

    def __post_init__(self):
        if self.kind not in ("torus", "open"):
            raise ValueError(f"unknown geometry kind {self.kind!r}")
        if self.dimension not in (1, 2, 4):
            raise ValueError("dimension must be 1, 2 or 4")
        d = self.dimension
        if self.kind == "torus":
            if self.cell_vectors is None:
                raise ValueError("torus geometry needs cell_vectors")
            cv = np.atleast_2d(np.asarray(self.cell_vectors, dtype=float))
            if cv.shape != (d, d):
                raise ValueError("cell_vectors must have shape (d, d)")
            if not np.all(np.linalg.norm(cv, axis=1) > 0) or abs(np.linalg.det(cv)) <= 0:
                raise ValueError("torus cell must be non-degenerate")
            object.__setattr__(self, "cell_vectors", _frozen(cv))
        else:
            if self.region not in ("box", "disk"):
                raise ValueError("open geometry needs region 'box' or 'disk'")
            c = np.zeros(d) if self.center is None else np.asarray(self.center, float)
            object.__setattr__(self, "center", _frozen(c.reshape(d)))
            ext = np.asarray(self.extent, dtype=float)
            if self.region == "box":
                ext = np.broadcast_to(ext, (d,)).copy()
            if np.any(ext <= 0):
                raise ValueError("open patch extent must be positive")
            object.__setattr__(self, "extent", _frozen(ext))

    @classmethod
    def rectangular_torus(cls, lengths):
        lengths = np.atleast_1d(np.asarray(lengths, dtype=float))
        return cls("torus", lengths.size, cell_vectors=np.diag(lengths))

    @property
    def cell_lengths(self):
        if self.kind != "torus":
            return None
        return np.linalg.norm(self.cell_vectors, axis=1)

    @property
    def volume(self):
        if self.kind == "torus":
            cv = self.cell_vectors
            if np.count_nonzero(cv - np.diag(np.diag(cv))) == 0:
                return float(abs(np.prod(np.diag(cv))))
            return float(abs(np.linalg.det(cv)))
        if self.region == "box":
            return float(np.prod(2.0 * self.extent))
        r = float(self.extent)
        d = self.dimension
        return math.pi ** (d / 2) / math.gamma(d / 2 + 1) * r**d

    @property
    def patch_radius(self):
        """Inradius of an open patch (disk radius or smallest box half-width)."""
        if self.kind != "open":
            return None
        return float(np.min(self.extent))

    def wrap(self, disp):
        """Minimal-image reduction of displacement vectors (last axis = d)."""
        disp = np.asarray(disp, dtype=float)
        if self.kind != "torus":
            return disp
        inv = np.linalg.inv(self.cell_vectors)
        frac = disp @ inv
        frac = frac - np.floor(frac + 0.5)
        return frac @ self.cell_vectors

    def distance_to_boundary(self, points):
        """Distance of each point to the boundary of an open patch."""
        if self.kind != "open":
            raise ValueError("a torus has no boundary")
        p = np.atleast_2d(np.asarray(points, float)) - self.center
        if self.region == "disk":
            return float(self.extent) - np.linalg.norm(p, axis=1)
        return np.min(self.extent - np.abs(p), axis=1)


@dataclass(frozen=True)
class PointPattern:
    """A finite Delone patch.

    ``cells`` and ``sublattice`` are set for lattice patterns only: they hold
    integer cell coordinates and the basis-site tag. ``lattice_vectors``
    holds the primitive vectors (rows) and ``lattice_shape`` the number of
    cells per direction of a lattice torus.
    """

    geometry: Geometry
    positions: np.ndarray
    r: float
    R: float
    density: float
    seed: Optional[int] = None
    cells: Optional[np.ndarray] = None
    sublattice: Optional[np.ndarray] = None
    lattice_vectors: Optional[np.ndarray] = None
    lattice_shape: Optional[tuple] = None
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        pos = np.asarray(self.positions, dtype=float)
        if pos.ndim == 1:
            pos = pos[:, None]
        if pos.shape[1] != self.geometry.dimension:
            raise ValueError("positions do not match the geometry dimension")
        object.__setattr__(self, "positions", _frozen(pos))
        object.__setattr__(self, "cells", _frozen(self.cells, dtype=np.int64))
        object.__setattr__(self, "sublattice", _frozen(self.sublattice, dtype=np.int64))
        object.__setattr__(self, "lattice_vectors", _frozen(self.lattice_vectors))
        if self.lattice_shape is not None:
            object.__setattr__(self, "lattice_shape", tuple(int(v) for v in self.lattice_shape))
        # a covering radius is at least half the minimal separation
        if not (self.r > 0 and self.R > 0 and self.r <= 2 * self.R * (1 + 1e-9)):
            raise ValueError(f"invalid Delone parameters r={self.r}, R={self.R}")

    @property
    def n_sites(self) -> int:
        return self.positions.shape[0]

    @property
    def dimension(self) -> int:
        return self.geometry.dimension

    @property
    def has_cells(self) -> bool:
        return self.cells is not None

    @property
    def is_honeycomb(self) -> bool:
        return self.meta.get("lattice") == "honeycomb" and self.sublattice is not None

    def displacements(self):
        """All pairwise displacements ``x_i - x_j``, shape (n, n, d)."""
        d = self.positions[:, None, :] - self.positions[None, :, :]
        return self.geometry.wrap(d)

    def cell_displacements(self):
        """Pairwise integer cell differences, minimal image on a lattice torus."""
        if self.cells is None:
            raise ValueError("pattern carries no integer cell coordinates")
        d = self.cells[:, None, :] - self.cells[None, :, :]
        if self.geometry.kind == "torus" and self.lattice_shape is not None:
            n = np.asarray(self.lattice_shape)
            d = d - n * np.floor(d / n + 0.5).astype(np.int64)
        return d

    def distances(self):
        return np.linalg.norm(self.displacements(), axis=-1)


@dataclass(frozen=True)
class DisorderField:
    """One i.i.d. uniform value in [-1/2, 1/2] per site."""

    values: np.ndarray
    seed: int

    def __post_init__(self):
        object.__setattr__(self, "values", _frozen(self.values))

    def __len__(self):
        return self.values.size


# ---------------------------------------------------------------------------
# Delone diagnostics


def min_pair_distance(positions, geometry: Geometry) -> float:
    """Smallest pairwise distance (minimal image on a torus)."""
    pos = np.asarray(positions, float)
    if pos.shape[0] < 2:
        return math.inf
    pts, _ = _with_images(pos, geometry)
    tree = cKDTree(pts)
    dist, _ = tree.query(pos, k=2)
    return float(np.min(dist[:, 1]))


def _with_images(pos, geometry):
    if geometry.kind != "torus":
        return pos, np.arange(pos.shape[0])
    d = geometry.dimension
    shifts = np.array(np.meshgrid(*[[-1, 0, 1]] * d, indexing="ij")).reshape(d, -1).T
    # the zero shift first so that self matches come out at distance 0
    order = np.argsort(np.abs(shifts).sum(axis=1), kind="stable")
    shifts = shifts[order] @ geometry.cell_vectors
    pts = (pos[None, :, :] + shifts[:, None, :]).reshape(-1, d)
    return pts, np.tile(np.arange(pos.shape[0]), shifts.shape[0])


def _probe_grid(geometry: Geometry, spacing: float, anchor=None, lattice_shape=None):
    d = geometry.dimension
    if geometry.kind == "torus":
        cv = geometry.cell_vectors
        counts = [max(2, int(math.ceil(np.linalg.norm(v) / spacing))) for v in cv]
        if lattice_shape is not None:
            # six probes per primitive cell hit the hexagon centers exactly
            unit = [6 * int(n) for n in lattice_shape]
            counts = [u * int(math.ceil(c / u)) for c, u in zip(counts, unit)]
        axes = [np.arange(m) / m for m in counts]
        frac = np.array(np.meshgrid(*axes, indexing="ij")).reshape(d, -1).T
        base = np.zeros(d) if anchor is None else np.asarray(anchor, float)
        return base + frac @ cv
    c, ext = geometry.center, geometry.extent
    half = np.broadcast_to(ext, (d,))
    axes = [np.linspace(c[k] - half[k], c[k] + half[k],
                        max(2, int(math.ceil(2 * half[k] / spacing)) + 1)) for k in range(d)]
    grid = np.array(np.meshgrid(*axes, indexing="ij")).reshape(d, -1).T
    if geometry.region == "disk":
        grid = grid[np.linalg.norm(grid - c, axis=1) <= float(ext) + 1e-12]
    return grid


def covering_radius(positions, geometry: Geometry, spacing: float, lattice_shape=None) -> float:
    """Largest distance from a probe-grid point to its nearest pattern point.

    On a torus the grid is anchored at the first point. ``lattice_shape``
    aligns the grid with a lattice torus so that symmetric holes are probed.
    """
    pos = np.asarray(positions, float)
    pts, _ = _with_images(pos, geometry)
    anchor = pos[0] if geometry.kind == "torus" else None
    grid = _probe_grid(geometry, spacing, anchor=anchor, lattice_shape=lattice_shape)
    dist, _ = cKDTree(pts).query(grid, k=1)
    return float(np.max(dist))


def _finish(geometry, positions, r_hint, seed=None, **kw):
    r = min_pair_distance(positions, geometry)
    spacing = (r if math.isfinite(r) else r_hint) / 8.0
    R = covering_radius(positions, geometry, spacing, lattice_shape=kw.get("lattice_shape"))
    if kw.get("lattice_shape") is None and positions.shape[0] > 1:
        # a hole between probes is at most half a grid diagonal deeper
        R += spacing * math.sqrt(geometry.dimension) / 2.0
    if not math.isfinite(r):
        r = min(r_hint, R / 2.0)
    density = positions.shape[0] / geometry.volume
    return PointPattern(geometry, positions, r=r, R=R, density=density, seed=seed, **kw)


# ---------------------------------------------------------------------------
# Builders


def build_honeycomb(n1: int, n2: int) -> PointPattern:
    """Honeycomb torus with ``n1 x n2`` two-site cells at unit density.

    Site ``2 * (c1 * n2 + c2) + s`` sits at ``c1 a1 + c2 a2 + s delta`` with
    ``delta = (a1 + a2) / 3``; ``s`` is the sublattice tag.

    Examples
    --------
    >>> p = build_honeycomb(2, 2)
    >>> p.n_sites
    8
    """
    n1 = check_positive_int(n1, "n1", minimum=2)
    n2 = check_positive_int(n2, "n2", minimum=2)
    a = HONEYCOMB_SPACING
    a1 = a * np.array([1.0, 0.0])
    a2 = a * np.array([0.5, math.sqrt(3.0) / 2.0])
    delta = (a1 + a2) / 3.0
    c1, c2, s = np.meshgrid(np.arange(n1), np.arange(n2), np.arange(2), indexing="ij")
    c1, c2, s = c1.ravel(), c2.ravel(), s.ravel()
    pos = c1[:, None] * a1 + c2[:, None] * a2 + s[:, None] * delta
    geom = Geometry("torus", 2, cell_vectors=np.array([n1 * a1, n2 * a2]))
    nn = a / math.sqrt(3.0)
    return _finish(
        geom, pos, nn,
        cells=np.stack([c1, c2], axis=1), sublattice=s,
        lattice_vectors=np.array([a1, a2]), lattice_shape=(n1, n2),
        meta={"lattice": "honeycomb", "nn_distance": nn},
    )


def build_honeycomb_disk(radius: float, center=None) -> PointPattern:
    """Open honeycomb patch of all sites within ``radius`` of ``center``.

    The default center is a hexagon center, so no site sits there.
    """
    a = HONEYCOMB_SPACING
    a1 = a * np.array([1.0, 0.0])
    a2 = a * np.array([0.5, math.sqrt(3.0) / 2.0])
    delta = (a1 + a2) / 3.0
    if center is None:
        center = 2.0 * delta
    center = np.asarray(center, float)
    m = int(math.ceil(radius / (a * math.sqrt(3.0) / 2.0))) + 2
    c1, c2, s = np.meshgrid(np.arange(-m, m + 1), np.arange(-m, m + 1), np.arange(2), indexing="ij")
    c1, c2, s = c1.ravel(), c2.ravel(), s.ravel()
    pos = c1[:, None] * a1 + c2[:, None] * a2 + s[:, None] * delta
    keep = np.linalg.norm(pos - center, axis=1) <= radius
    geom = Geometry("open", 2, region="disk", center=center, extent=radius)
    nn = a / math.sqrt(3.0)
    return _finish(
        geom, pos[keep], nn,
        cells=np.stack([c1, c2], axis=1)[keep], sublattice=s[keep],
        lattice_vectors=np.array([a1, a2]),
        meta={"lattice": "honeycomb", "nn_distance": nn},
    )


def build_chain(n: int) -> PointPattern:
    """Ring of ``n`` points at spacing 1."""
    n = check_positive_int(n, "n", minimum=2)
    pos = np.arange(n, dtype=float)[:, None]
    geom = Geometry.rectangular_torus([float(n)])
    return _finish(
        geom, pos, 1.0,
        cells=np.arange(n)[:, None], lattice_vectors=np.eye(1), lattice_shape=(n,),
        meta={"lattice": "chain"},
    )


def build_square(n1: int, n2: int, offset=(0.0, 0.0)) -> PointPattern:
    """Unit square lattice torus, shifted by ``offset``."""
    n1 = check_positive_int(n1, "n1", minimum=2)
    n2 = check_positive_int(n2, "n2", minimum=2)
    c1, c2 = np.meshgrid(np.arange(n1), np.arange(n2), indexing="ij")
    cells = np.stack([c1.ravel(), c2.ravel()], axis=1)
    pos = cells + np.asarray(offset, float)
    geom = Geometry.rectangular_torus([float(n1), float(n2)])
    return _finish(geom, pos, 1.0, cells=cells, lattice_vectors=np.eye(2),
                   lattice_shape=(n1, n2), meta={"lattice": "square"})


def build_amorphous(target_count: int, r_min: float, seed: int,
                    geometry_kind: str = "open", max_rejections: int = 10**6) -> PointPattern:
    """Random sequential adsorption in a square of area ``target_count``.

    Points are proposed uniformly and accepted when at least ``r_min`` away
    from all accepted points (minimal image on a torus). The square has unit
    density by construction.

    Raises
    ------
    PackingInfeasible
        If the requested coverage exceeds the RSA jamming limit, or if more
        than ``max_rejections`` consecutive proposals are rejected.
    """
    target_count = check_positive_int(target_count, "target_count")
    if not r_min > 0:
        raise ValueError("r_min must be positive")
    seed = check_seed(seed)
    side = math.sqrt(target_count)
    coverage = target_count * math.pi * (r_min / 2.0) ** 2 / side**2
    if coverage > _RSA_JAMMING_2D:
        raise PackingInfeasible(
            f"coverage {coverage:.3f} exceeds the RSA jamming limit {_RSA_JAMMING_2D}")
    torus = geometry_kind == "torus"
    if geometry_kind not in ("torus", "open"):
        raise ValueError("geometry_kind must be 'torus' or 'open'")

    rng = np.random.default_rng(seed)
    ncell = max(1, int(side // r_min))
    h = side / ncell
    buckets: dict = {}
    pts = np.empty((target_count, 2))
    count = 0
    rejections = 0
    r2 = r_min * r_min
    while count < target_count:
        p = rng.uniform(0.0, side, size=2)
        i, j = int(p[0] // h) % ncell, int(p[1] // h) % ncell
        ok = True
        for di in (-1, 0, 1):
            for dj in (-1, 0, 1):
                ii, jj = i + di, j + dj
                if torus:
                    ii %= ncell
                    jj %= ncell
                elif not (0 <= ii < ncell and 0 <= jj < ncell):
                    continue
                for k in buckets.get((ii, jj), ()):
                    dv = p - pts[k]
                    if torus:
                        dv -= side * np.floor(dv / side + 0.5)
                    if dv @ dv < r2:
                        ok = False
                        break
                if not ok:
                    break
            if not ok:
                break
        if ok:
            pts[count] = p
            buckets.setdefault((i, j), []).append(count)
            count += 1
            rejections = 0
        else:
            rejections += 1
            if rejections > max_rejections:
                raise PackingInfeasible(
                    f"stalled after {count} points ({max_rejections} consecutive rejections)")
    if torus:
        geom = Geometry.rectangular_torus([side, side])
    else:
        geom = Geometry("open", 2, region="box", center=[side / 2, side / 2], extent=side / 2)
    return _finish(geom, pts, r_min, seed=seed, meta={"generator": "rsa", "r_min": r_min})


def sample_disorder(pattern: PointPattern, seed: int) -> DisorderField:
    """Draw one uniform value in [-1/2, 1/2] per site from a seeded PCG64 stream."""
    seed = check_seed(seed)
    rng = np.random.default_rng(seed)
    return DisorderField(rng.uniform(-0.5, 0.5, size=pattern.n_sites), seed)


def minimal_displacement(pattern: PointPattern, i: int, j: int) -> np.ndarray:
    """Displacement ``x_i - x_j``: minimal image on a torus, plain otherwise.

    Examples
    --------
    >>> minimal_displacement(build_chain(4), 0, 3)
    array([1.])
    """
    n = pattern.n_sites
    if not (0 <= i < n and 0 <= j < n):
        raise IndexError("site index out of range")
    return pattern.geometry.wrap(pattern.positions[i] - pattern.positions[j])
