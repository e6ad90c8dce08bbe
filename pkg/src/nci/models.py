"""Dense tight-binding Hamiltonians on point patterns.

Three concrete models are provided: the disordered Haldane model on the
honeycomb lattice, the chiral two-orbital wire, and the amorphous magnetic
model with symmetric-gauge Peierls phases. Generic finite-range one-body
Hamiltonians are assembled from a :class:`CoefficientSpec` after sampled
checks of hermiticity, translation equivariance and finite range.

Basis layout: ``index = site * orbitals_per_site + orbital``.
"""

from __future__ import annotations

from dataclasses import dataclass, field
import math
from typing import Callable, Optional

import numpy as np
from scipy.spatial import cKDTree

from .exceptions import GeometryMismatch, NotHoneycomb, SpecViolation
from .pattern import DisorderField, PointPattern
from ._validation import check_positive_int

__all__ = [
    "SiteBasis",
    "HamiltonianMatrix",
    "CoefficientSpec",
    "build_haldane",
    "build_chiral_wire",
    "build_amorphous_magnetic",
    "build_from_spec",
    "check_spec",
    "chirality_operator",
    "pairs_within",
]

TRUNCATION = 1e-12
# wrapped distances carry rounding from fractional coordinates
RANGE_SLACK = 1e-9


@dataclass(frozen=True)
class SiteBasis:
    """Site-orbital product basis, ``index = site * orbitals + orbital``."""

    pattern: PointPattern
    orbitals_per_site: int = 1

    def __post_init__(self):
        check_positive_int(self.orbitals_per_site, "orbitals_per_site")

    @property
    def n_sites(self) -> int:
        return self.pattern.n_sites

    @property
    def total_dim(self) -> int:
        return self.pattern.n_sites * self.orbitals_per_site

    def index(self, site, orbital=0):
        return np.asarray(site) * self.orbitals_per_site + np.asarray(orbital)

    def site_of(self, index):
        return np.asarray(index) // self.orbitals_per_site

    def orbital_of(self, index):
        return np.asarray(index) % self.orbitals_per_site

    def expand(self, site_matrix):
        """Lift a site-indexed (n, n) array to the full basis."""
        k = self.orbitals_per_site
        if k == 1:
            return np.asarray(site_matrix)
        return np.kron(site_matrix, np.ones((k, k)))

    def expand_sites(self, site_values):
        """Repeat per-site values over orbitals."""
        return np.repeat(np.asarray(site_values), self.orbitals_per_site, axis=0)


@dataclass(frozen=True)
class HamiltonianMatrix:
    """Dense Hermitian operator on a :class:`SiteBasis`."""

    basis: SiteBasis
    entries: np.ndarray
    range: Optional[float] = None
    meta: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        H = np.asarray(self.entries, dtype=complex)
        n = self.basis.total_dim
        if H.shape != (n, n):
            raise ValueError(f"entries have shape {H.shape}, basis needs {(n, n)}")
        H.setflags(write=False)
        object.__setattr__(self, "entries", H)

    @property
    def matrix(self):
        return self.entries

    @property
    def dim(self) -> int:
        return self.entries.shape[0]

    def hermiticity_residual(self) -> float:
        H = self.entries
        scale = float(np.max(np.abs(H))) or 1.0
        return float(np.max(np.abs(H - H.conj().T))) / scale


@dataclass(frozen=True)
class CoefficientSpec:
    """Finite-range coefficient function of a Hamiltonian.

    Parameters
    ----------
    kernel : callable
        ``kernel(xs, vals) -> complex`` where ``xs`` has shape ``(2n, d)``
        holding the positions of the outgoing sites followed by the incoming
        ones, unwrapped so that their differences are minimal images, and
        ``vals`` holds the disorder values of these sites. When
        ``vectorized`` is true, a leading batch axis is added to both and an
        array of values is returned.
    range : float
        Interaction range; the kernel must vanish beyond it.
    body_order : int
        1 for hopping, 2 for pair interactions.
    """

    kernel: Callable
    range: float
    body_order: int = 1
    vectorized: bool = False

    def __post_init__(self):
        if not self.range > 0:
            raise ValueError("range must be positive")
        if self.body_order not in (1, 2):
            raise ValueError("only body orders 1 and 2 are implemented")

    def evaluate(self, xs, vals):
        xs = np.asarray(xs, float)
        vals = np.asarray(vals, float)
        if self.vectorized:
            return np.asarray(self.kernel(xs, vals), dtype=complex)
        return np.array([complex(self.kernel(x, v)) for x, v in zip(xs, vals)])


def _disorder_values(pattern, disorder):
    if disorder is None:
        return np.zeros(pattern.n_sites)
    if len(disorder) != pattern.n_sites:
        raise ValueError("disorder field does not match the pattern")
    return np.asarray(disorder.values)


def pairs_within(pattern: PointPattern, cutoff: float):
    """Ordered site pairs ``(i, j)`` at minimal-image distance ``<= cutoff``.

    Returns the index arrays and the displacements ``x_i - x_j``.
    """
    geom = pattern.geometry
    pos = pattern.positions
    if geom.kind == "torus" and np.allclose(geom.cell_vectors, np.diag(np.diag(geom.cell_vectors))) \
            and cutoff < 0.5 * np.min(geom.cell_lengths):
        box = np.diag(geom.cell_vectors)
        tree = cKDTree(np.mod(pos, box), boxsize=box)
        pairs = tree.query_pairs(cutoff, output_type="ndarray")
    elif geom.kind == "open":
        pairs = cKDTree(pos).query_pairs(cutoff, output_type="ndarray")
    else:
        dist = pattern.distances()
        i, j = np.nonzero(np.triu(dist <= cutoff, k=1))
        pairs = np.stack([i, j], axis=1)
    pairs = pairs.reshape(-1, 2)
    n = pattern.n_sites
    diag = np.arange(n)
    i = np.concatenate([pairs[:, 0], pairs[:, 1], diag])
    j = np.concatenate([pairs[:, 1], pairs[:, 0], diag])
    disp = geom.wrap(pos[i] - pos[j])
    return i, j, disp


# ---------------------------------------------------------------------------
# Haldane model


def _honeycomb_lookup(pattern):
    cells = pattern.cells
    sub = pattern.sublattice
    shape = pattern.lattice_shape if pattern.geometry.kind == "torus" else None
    table = {(int(c[0]), int(c[1]), int(s)): k for k, (c, s) in enumerate(zip(cells, sub))}

    def find(c1, c2, s):
        if shape is not None:
            c1 %= shape[0]
            c2 %= shape[1]
        return table.get((c1, c2, s))

    return find


def _second_neighbor_orientation(lattice_vectors, sub, offset):
    """Orientation (+1 counterclockwise) of the two-step path from a site of
    sublattice ``sub`` to its second neighbor at cell ``offset``."""
    a1, a2 = lattice_vectors
    delta = (a1 + a2) / 3.0
    nn = np.linalg.norm(delta)
    v = offset[0] * a1 + offset[1] * a2
    if sub == 0:
        steps = [delta, delta - a1, delta - a2]
    else:
        steps = [-delta, -delta + a1, -delta + a2]
    for c in steps:
        if abs(np.linalg.norm(v - c) - nn) < 1e-9 * nn:
            return float(np.sign(c[0] * (v - c)[1] - c[1] * (v - c)[0]))
    raise RuntimeError("no common neighbor found")


def build_haldane(pattern: PointPattern, t2: float, W: float,
                  disorder: Optional[DisorderField] = None) -> HamiltonianMatrix:
    """Disordered Haldane model.

    Nearest-neighbor hopping 1, second-neighbor term
    ``i t2 eta (|x><y| - |y><x|)`` with ``eta = +1`` when the hop from ``x``
    to ``y`` turns counterclockwise around its hexagon, and on-site energy
    ``W xi_x``. Works on honeycomb tori and open honeycomb patches.

    With this orientation the clean gapped model at ``t2 > 0`` has Chern
    number +1 at half filling.
    """
    if not pattern.is_honeycomb:
        raise NotHoneycomb("pattern carries no honeycomb sublattice tags")
    basis = SiteBasis(pattern, 1)
    n = pattern.n_sites
    H = np.zeros((n, n), dtype=complex)
    find = _honeycomb_lookup(pattern)
    lv = pattern.lattice_vectors
    orient = {(s, off): _second_neighbor_orientation(lv, s, off)
              for s in (0, 1) for off in ((1, 0), (0, 1), (-1, 1))}
    for x, ((c1, c2), s) in enumerate(zip(pattern.cells.tolist(), pattern.sublattice.tolist())):
        if s == 0:
            for d1, d2 in ((0, 0), (-1, 0), (0, -1)):
                y = find(c1 + d1, c2 + d2, 1)
                if y is not None:
                    H[x, y] += 1.0
                    H[y, x] += 1.0
        for off in ((1, 0), (0, 1), (-1, 1)):
            y = find(c1 + off[0], c2 + off[1], s)
            if y is None:
                continue
            eta = orient[(s, off)]
            H[x, y] += 1j * t2 * eta
            H[y, x] -= 1j * t2 * eta
    xi = _disorder_values(pattern, disorder)
    H[np.diag_indices(n)] += W * xi
    meta = {"model": "haldane", "t2": t2, "W": W,
            "seed": None if disorder is None else disorder.seed}
    return HamiltonianMatrix(basis, H, range=float(np.linalg.norm(lv[0])) * (1 + 1e-9), meta=meta)


# ---------------------------------------------------------------------------
# Chiral wire


def build_chiral_wire(pattern: PointPattern, m: float, W1: float, W2: float,
                      disorder: Optional[DisorderField] = None,
                      mass_disorder: Optional[DisorderField] = None) -> HamiltonianMatrix:
    """Two-orbital chiral chain.

    ``H = sum_x t_x/2 (s+ |x><x+1| + s- |x+1><x|) + m_x s2 |x><x|`` with
    ``s+- = s1 +- i s2``, ``t_x = 1 + W1 xi_x`` and ``m_x = m + W2 xi'_x``.
    The mass uses the same draws as the hopping unless ``mass_disorder``
    is given.

    In the chirality eigenbasis the lower-left block is ``t S + i m`` with
    ``S`` the right shift, so the clean transition sits at ``|m| = 1``.
    """
    if pattern.dimension != 1:
        raise GeometryMismatch("the chiral wire needs a 1D chain")
    n = pattern.n_sites
    basis = SiteBasis(pattern, 2)
    xi = _disorder_values(pattern, disorder)
    xi_m = xi if mass_disorder is None else _disorder_values(pattern, mass_disorder)
    t = 1.0 + W1 * xi
    mx = m + W2 * xi_m
    H = np.zeros((2 * n, 2 * n), dtype=complex)
    x = np.arange(n)
    periodic = pattern.geometry.kind == "torus"
    xp = (x + 1) % n
    keep = x if periodic else x[:-1]
    # 1/2 t s+ |x><x+1| puts t on (x, up) <- (x+1, down)
    H[2 * keep, 2 * xp[keep] + 1] += t[keep]
    H[2 * xp[keep] + 1, 2 * keep] += t[keep]
    H[2 * x, 2 * x + 1] += -1j * mx
    H[2 * x + 1, 2 * x] += 1j * mx
    meta = {"model": "chiral_wire", "m": m, "W1": W1, "W2": W2,
            "draws": "shared" if mass_disorder is None else "independent",
            "seed": None if disorder is None else disorder.seed}
    return HamiltonianMatrix(basis, H, range=1.0, meta=meta)


def chirality_operator(basis: SiteBasis) -> np.ndarray:
    """``s3`` on every site of a two-orbital basis."""
    if basis.orbitals_per_site != 2:
        raise ValueError("chirality needs two orbitals per site")
    return np.diag(np.tile([1.0, -1.0], basis.n_sites))


# ---------------------------------------------------------------------------
# Amorphous magnetic model


def build_amorphous_magnetic(pattern: PointPattern, theta: float,
                             decay: float) -> HamiltonianMatrix:
    """Entries ``exp(i theta x^x') exp(-decay |x - x'|)`` with unit diagonal."""
    if pattern.geometry.kind != "open":
        raise GeometryMismatch("Peierls phases of the symmetric gauge need open geometry")
    if pattern.dimension != 2:
        raise GeometryMismatch("the amorphous magnetic model is two-dimensional")
    if not decay > 0:
        raise ValueError("decay must be positive")
    x = pattern.positions
    wedge = np.outer(x[:, 0], x[:, 1]) - np.outer(x[:, 1], x[:, 0])
    dist = pattern.distances()
    H = np.exp(1j * theta * wedge) * np.exp(-decay * dist)
    H[np.abs(H) < TRUNCATION] = 0.0
    np.fill_diagonal(H, 1.0)
    cutoff = -math.log(TRUNCATION) / decay
    meta = {"model": "amorphous_magnetic", "theta": theta, "decay": decay, "seed": pattern.seed}
    return HamiltonianMatrix(SiteBasis(pattern, 1), H, range=cutoff, meta=meta)


# ---------------------------------------------------------------------------
# Generic coefficient specs


def _pair_inputs(pattern, i, j, disp, values):
    xs = np.stack([pattern.positions[i], pattern.positions[i] - disp], axis=1)
    vals = np.stack([values[i], values[j]], axis=1)
    return xs, vals


def check_spec(spec: CoefficientSpec, pattern: PointPattern,
               disorder: Optional[DisorderField] = None, samples: int = 64, seed: int = 0):
    """Sampled check of hermiticity, translation equivariance and range.

    Raises
    ------
    SpecViolation
        Naming the first failed constraint.
    """
    if spec.body_order != 1:
        raise ValueError("check_spec handles one-body specs; two-body specs are "
                         "antisymmetrized by construction in the manybody module")
    rng = np.random.default_rng(seed)
    values = _disorder_values(pattern, disorder)
    n = pattern.n_sites
    i = rng.integers(0, n, samples)
    j = rng.integers(0, n, samples)
    disp = pattern.geometry.wrap(pattern.positions[i] - pattern.positions[j])
    xs, vals = _pair_inputs(pattern, i, j, disp, values)
    h = spec.evaluate(xs, vals)
    scale = max(float(np.max(np.abs(h))), 1.0)
    h_rev = spec.evaluate(xs[:, ::-1], vals[:, ::-1])
    if np.max(np.abs(h - np.conj(h_rev))) > 1e-12 * scale:
        raise SpecViolation("hermiticity", "h(x, y) != conj(h(y, x)) on sampled pairs")
    shift = rng.normal(scale=3.0, size=(samples, 1, pattern.dimension))
    h_shift = spec.evaluate(xs + shift, vals)
    if np.max(np.abs(h - h_shift)) > 1e-12 * scale:
        raise SpecViolation("equivariance", "kernel depends on absolute position")
    dist = np.linalg.norm(disp, axis=1)
    far = dist > spec.range * (1 + RANGE_SLACK)
    if np.any(far) and np.max(np.abs(h[far])) > 0:
        raise SpecViolation("range", f"nonzero kernel beyond range {spec.range}")
    # probe just outside the range along random directions
    u = rng.normal(size=(samples, pattern.dimension))
    u /= np.linalg.norm(u, axis=1, keepdims=True)
    base = pattern.positions[i]
    probe = np.stack([base, base + u * spec.range * (1 + rng.uniform(1e-6, 1.0, (samples, 1)))], axis=1)
    if np.max(np.abs(spec.evaluate(probe, vals))) > 0:
        raise SpecViolation("range", f"nonzero kernel beyond range {spec.range}")


def build_from_spec(basis: SiteBasis, spec: CoefficientSpec,
                    disorder: Optional[DisorderField] = None, check: bool = True) -> HamiltonianMatrix:
    """Assemble ``sum h(x, y) |x><y|`` over pairs within the spec range."""
    if basis.orbitals_per_site != 1:
        raise ValueError("coefficient specs act on single-orbital bases")
    pattern = basis.pattern
    if check:
        check_spec(spec, pattern, disorder)
    values = _disorder_values(pattern, disorder)
    i, j, disp = pairs_within(pattern, spec.range * (1 + RANGE_SLACK))
    xs, vals = _pair_inputs(pattern, i, j, disp, values)
    h = spec.evaluate(xs, vals)
    n = pattern.n_sites
    H = np.zeros((n, n), dtype=complex)
    np.add.at(H, (i, j), h)
    meta = {"model": "spec", "seed": None if disorder is None else disorder.seed}
    return HamiltonianMatrix(basis, H, range=spec.range, meta=meta)
