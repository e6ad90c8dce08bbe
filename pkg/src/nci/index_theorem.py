"""Clifford representations, Dirac phases, Fredholm indices and the
geometric identities behind the index theorem.

Layout of the Clifford-tensored space: ``index = c * N + k`` where ``c``
labels the Clifford component and ``k`` the site-orbital index, so that the
Dirac phase is a block matrix of site-diagonal blocks.
"""

from __future__ import annotations

from dataclasses import dataclass, field
import itertools
import math
from typing import Optional

import numpy as np
from scipy.spatial import cKDTree
from scipy.special import gammaln

from .exceptions import BoxTooSmall, IllConditioned, ShiftHitsSite, UnsupportedDimension
from .invariants import cocycle_prefactor, window_mask
from .models import SiteBasis
from .pattern import PointPattern, build_amorphous
from ._validation import as_matrix, check_positive_int, check_seed

__all__ = [
    "CliffordRep",
    "DiracOperator",
    "FredholmResult",
    "build_clifford",
    "build_dirac",
    "fredholm_index",
    "connes_chern",
    "geometric_trace",
    "identity_integrand",
    "identity_rhs",
    "geometric_identity_continuum",
    "geometric_identity_delone",
    "phase_difference_scaled",
    "IdentityEstimate",
]

_PAULI = (
    np.array([[0, 1], [1, 0]], dtype=complex),
    np.array([[0, -1j], [1j, 0]], dtype=complex),
    np.array([[1, 0], [0, -1]], dtype=complex),
)


@dataclass(frozen=True)
class CliffordRep:
    """Irreducible complex Clifford representation in even dimension ``d``.

    The grading is ``gamma0 = (-i)^{d/2} gamma_1 ... gamma_d``. With this
    sign ``tr(gamma0 (g.y1) ... (g.yd)) = (2i)^{d/2} d! Vol[0, y1, ..., yd]``.
    """

    d: int
    gamma: tuple
    gamma0: np.ndarray

    @property
    def n(self) -> int:
        return self.gamma0.shape[0]

    def slash(self, v):
        """``gamma . v`` for a batch of vectors, shape (..., n, n)."""
        v = np.asarray(v, float)
        G = np.stack(self.gamma)
        return np.einsum("...j,jab->...ab", v, G)


def build_clifford(d: int) -> CliffordRep:
    """Tensor-product construction for ``d`` in {2, 4}.

    Examples
    --------
    >>> c = build_clifford(2)
    >>> complex(np.trace(c.gamma0 @ c.gamma[0] @ c.gamma[1]))
    2j
    """
    s1, s2, s3 = _PAULI
    if d == 2:
        gam = (s1, s2)
    elif d == 4:
        one = np.eye(2)
        gam = (np.kron(s1, s1), np.kron(s1, s2), np.kron(s1, s3), np.kron(s2, one))
    else:
        raise UnsupportedDimension(f"d={d}; only d in (2, 4) is implemented")
    prod = np.eye(gam[0].shape[0], dtype=complex)
    for g in gam:
        prod = prod @ g
    gamma0 = (-1j) ** (d // 2) * prod
    for g in gam:
        g.setflags(write=False)
    gamma0.setflags(write=False)
    return CliffordRep(d, tuple(gam), gamma0)


def geometric_trace(clifford: CliffordRep, ys) -> complex:
    """``tr(gamma0 (gamma.y1) ... (gamma.yd))``."""
    M = clifford.gamma0.copy()
    for y in ys:
        M = M @ clifford.slash(y)
    return complex(np.trace(M))


@dataclass(frozen=True)
class DiracOperator:
    """Dirac operator ``D = sum_j gamma_j (x - w)_j`` and its phase.

    ``unit`` holds the per-basis-index unit vectors ``(x - w)/|x - w|``;
    ``D`` and ``Dhat`` are materialized on demand.
    """

    pattern: PointPattern
    clifford: CliffordRep
    w: np.ndarray
    orbitals: int
    offsets: np.ndarray = field(repr=False)

    @property
    def dim(self) -> int:
        return self.clifford.n * self.offsets.shape[0]

    @property
    def unit(self):
        return self.offsets / np.linalg.norm(self.offsets, axis=1, keepdims=True)

    def _assemble(self, vecs):
        N = vecs.shape[0]
        n = self.clifford.n
        out = np.zeros((n * N, n * N), dtype=complex)
        for j, g in enumerate(self.clifford.gamma):
            for a in range(n):
                for b in range(n):
                    if g[a, b] != 0:
                        idx = np.arange(N)
                        out[a * N + idx, b * N + idx] += g[a, b] * vecs[:, j]
        return out

    @property
    def D(self):
        return self._assemble(self.offsets)

    @property
    def Dhat(self):
        return self._assemble(self.unit)

    def grading(self):
        return np.kron(self.clifford.gamma0, np.eye(self.offsets.shape[0]))


def build_dirac(pattern: PointPattern, orbitals: int, clifford: CliffordRep, w) -> DiracOperator:
    """Dirac operator on an open patch with uniform shift ``w``.

    Raises
    ------
    ShiftHitsSite
        If some site lies within ``1e-6`` of ``w``.
    """
    orbitals = check_positive_int(orbitals, "orbitals")
    if pattern.dimension != clifford.d:
        raise ValueError("pattern and Clifford dimensions differ")
    w = np.asarray(w, float).reshape(clifford.d)
    diff = pattern.positions - w
    if np.min(np.linalg.norm(diff, axis=1)) <= 1e-6:
        raise ShiftHitsSite("the shift w sits on a pattern site")
    offsets = np.repeat(diff, orbitals, axis=0)
    offsets.setflags(write=False)
    return DiracOperator(pattern, clifford, w, orbitals, offsets)


def phase_difference_scaled(x, y, s: float):
    """``s (hat(s x + y) - hat(s x))`` for unit ``x``."""
    x = np.asarray(x, float)
    y = np.asarray(y, float)
    a = s * x + y
    return s * (a / np.linalg.norm(a) - x / np.linalg.norm(x))


# ---------------------------------------------------------------------------
# Fredholm index


@dataclass(frozen=True)
class FredholmResult:
    """Index of ``P- Dhat P+`` with diagnostics.

    ``index`` counts small singular triplets whose right vector is
    localized near the shift minus those whose left vector is.
    """

    index: int
    threshold: float
    margin: float
    singular_values: np.ndarray
    localization: list
    connes_chern: Optional[complex] = None
    meta: dict = field(default_factory=dict, compare=False)


def _frame_of(P):
    frame = getattr(P, "frame", None)
    if frame is not None:
        return np.asarray(frame)
    M = as_matrix(P)
    w, V = np.linalg.eigh((M + M.conj().T) / 2)
    return V[:, w > 0.5]


def _threshold(s, upper=0.5, min_gap=1e-2):
    """Largest gap in the sorted singular values below ``upper``."""
    small = s[s < upper]
    if small.size == 0:
        return None, float(s[0]) if s.size else np.inf
    ext = s[: small.size + 1] if s.size > small.size else np.append(small, upper)
    gaps = np.diff(np.concatenate([[0.0], ext]))
    # gap k sits between ext[k-1] (or 0) and ext[k]
    k = int(np.argmax(gaps))
    if gaps[k] < min_gap:
        raise IllConditioned(f"largest singular-value gap below 0.5 is {gaps[k]:.3e}")
    lo = 0.0 if k == 0 else ext[k - 1]
    return (lo + ext[k]) / 2.0, float(gaps[k])


def fredholm_index(P, dirac: DiracOperator, localization_radius: Optional[float] = None,
                   cross_check: bool = False, window=None) -> FredholmResult:
    """Numerical index of ``T = P- Dhat P+`` on a finite patch.

    On a finite patch ``T`` is square, so its kernel and cokernel have equal
    dimension. The topological zero modes come in pairs: one localized near
    the shift ``w`` and a partner on the patch edge. The index counts small
    singular triplets (below a gap-adaptive threshold under 0.5) whose right
    vector has most weight within ``localization_radius`` of ``w`` (default:
    half the patch radius), minus those whose left vector does.

    Raises
    ------
    IllConditioned
        When the largest singular-value gap below 0.5 is narrower than 1e-2.
    """
    cl = dirac.clifford
    V = _frame_of(P)
    N = V.shape[0]
    if N != dirac.offsets.shape[0]:
        raise ValueError("projection and Dirac operator act on different spaces")
    r = V.shape[1]
    if localization_radius is None:
        localization_radius = 0.5 * dirac.pattern.geometry.patch_radius
    if r == 0:
        return FredholmResult(0, 0.0, np.inf, np.zeros(0), [], 0j if cross_check else None)
    g0, Q = np.linalg.eigh(cl.gamma0)
    Qp, Qm = Q[:, g0 > 0], Q[:, g0 < 0]
    unit = dirac.unit
    # T = sum_j <e-|gamma_j|e+> (x) V^* diag(u_j) V
    blocks = []
    for j, g in enumerate(cl.gamma):
        blocks.append((Qm.conj().T @ g @ Qp, V.conj().T @ (unit[:, j:j + 1] * V)))
    h = Qp.shape[1]
    T = sum(np.kron(c, B) for c, B in blocks)
    Wl, s, Zh = np.linalg.svd(T)
    order = np.argsort(s)
    s, Wl, Z = s[order], Wl[:, order], Zh.conj().T[:, order]
    tau, margin = _threshold(s)
    near = np.linalg.norm(dirac.pattern.positions - dirac.w, axis=1) <= localization_radius
    near = np.repeat(near, dirac.orbitals)

    def weight(vec):
        amp = (vec.reshape(h, r) @ V.T)  # (h, N)
        dens = np.sum(np.abs(amp) ** 2, axis=0)
        return float(dens[near].sum() / dens.sum())

    index = 0
    loc = []
    if tau is not None:
        for k in np.nonzero(s < tau)[0]:
            wr, wl = weight(Z[:, k]), weight(Wl[:, k])
            loc.append((float(s[k]), wr, wl))
            index += int(wr > 0.5) - int(wl > 0.5)
    cc = connes_chern(P, dirac, window) if cross_check else None
    return FredholmResult(index, 0.0 if tau is None else float(tau), margin, s, loc, cc,
                          meta={"rank": r, "localization_radius": localization_radius})


def connes_chern(P, dirac: DiracOperator, window=None) -> complex:
    """``1/2 Tr{gamma0 Dhat [Dhat, P]^{d+1}}`` with the trace cut to a window.

    The window follows the collar policy of the trace per volume.
    """
    M = as_matrix(P)
    N = M.shape[0]
    n = dirac.clifford.n
    Dh = dirac.Dhat
    Pl = np.kron(np.eye(n), M)
    C = Dh @ Pl - Pl @ Dh
    basis = SiteBasis(dirac.pattern, dirac.orbitals)
    mask = window_mask(basis, window)
    rows = np.concatenate([c * N + np.nonzero(mask)[0] for c in range(n)])
    G = np.kron(dirac.clifford.gamma0, np.eye(N))
    d = dirac.clifford.d
    # rows of (gamma0 Dhat) C^{d+1} restricted to the window
    left = (G @ Dh)[rows] @ C
    for _ in range(d):
        left = left @ C
    return complex(0.5 * np.trace(left[:, rows]))


# ---------------------------------------------------------------------------
# Geometric identities


@dataclass(frozen=True)
class IdentityEstimate:
    """Monte-Carlo left side ``lhs +- sigma`` and the exact right side."""

    lhs: complex
    sigma: float
    rhs: complex
    samples: int
    meta: dict = field(default_factory=dict, compare=False)

    @property
    def z_score(self) -> float:
        if self.sigma == 0:
            return 0.0 if self.lhs == self.rhs else np.inf
        return abs(self.lhs - self.rhs) / self.sigma


def _vertices(y, d):
    Y = np.asarray(y, float).reshape(-1, d)
    if Y.shape[0] != d:
        raise ValueError(f"need {d} points y_1..y_d; y_{d + 1} = 0 is implicit")
    return np.vstack([Y, np.zeros((1, d))])


def identity_rhs(y, d: int = 2) -> complex:
    """``Lambda_d sum_perm sign prod_i (y_i)_{perm_i}``."""
    Y = _vertices(y, d)[:d]
    total = 0.0
    for perm in itertools.permutations(range(d)):
        sign = np.linalg.det(np.eye(d)[list(perm)])
        total += sign * np.prod([Y[i, perm[i]] for i in range(d)])
    return cocycle_prefactor(d) * total


def identity_integrand(clifford: CliffordRep, y, w) -> np.ndarray:
    """``tr(gamma0 prod_i gamma.(hat(y_i - w) - hat(y_{i+1} - w)))`` for a batch of ``w``."""
    d = clifford.d
    Yv = _vertices(y, d)
    w = np.atleast_2d(np.asarray(w, float))
    U = Yv[None, :, :] - w[:, None, :]
    U /= np.linalg.norm(U, axis=2, keepdims=True)
    M = np.broadcast_to(clifford.gamma0, (w.shape[0],) + clifford.gamma0.shape)
    for i in range(d):
        M = M @ clifford.slash(U[:, i] - U[:, i + 1])
    return np.trace(M, axis1=1, axis2=2)


def _tail_bound_2d(rho, B):
    # triangle on the unit circle within an arc of angle <= pi rho / r
    return math.pi**4 * rho**3 / (2.0 * B)


def geometric_identity_continuum(y, samples: int, seed: int, box: Optional[float] = None,
                                 tolerance: Optional[float] = None, d: int = 2,
                                 scale: Optional[float] = None,
                                 chunk: int = 200_000) -> IdentityEstimate:
    """Monte-Carlo estimate of the continuum identity.

    Without ``box`` the whole space is sampled from a multivariate Cauchy
    proposal centred on the simplex; the integrand decays like
    ``|w|^{-(d+1)}`` so the importance weights have finite variance and no
    truncation is needed. With ``box`` (half-width) the integral is taken
    over a square centred on the simplex and the analytic tail bound
    (``d = 2``) must stay below half of ``tolerance``.

    Raises
    ------
    BoxTooSmall
        When the tail bound exceeds ``tolerance / 2``.
    """
    samples = check_positive_int(samples, "samples", minimum=2)
    seed = check_seed(seed)
    cl = build_clifford(d)
    Yv = _vertices(y, d)
    c = Yv.mean(axis=0)
    rho = float(np.max(np.linalg.norm(Yv - c, axis=1)))
    rhs = identity_rhs(y, d)
    rng = np.random.default_rng(seed)
    meta = {"mode": "cauchy" if box is None else "box"}
    if box is not None:
        if d != 2:
            raise UnsupportedDimension("the box tail bound is derived for d = 2")
        bound = _tail_bound_2d(rho, box)
        meta["tail_bound"] = bound
        if tolerance is not None and bound > tolerance / 2.0:
            raise BoxTooSmall(f"tail bound {bound:.3e} exceeds half the tolerance {tolerance:.3e}")
    s = scale if scale is not None else max(1.0, 2.0 * rho)
    log_norm = gammaln((d + 1) / 2) - (d + 1) / 2 * math.log(math.pi) - d * math.log(s)
    total, total2, done = 0.0 + 0.0j, 0.0, 0
    while done < samples:
        m = min(chunk, samples - done)
        if box is None:
            z = rng.normal(size=(m, d))
            chi = np.abs(rng.normal(size=(m, 1)))
            w = c + s * z / chi
            q = np.exp(log_norm - (d + 1) / 2 * np.log1p(np.sum((w - c) ** 2, axis=1) / s**2))
            f = identity_integrand(cl, y, w) / q
        else:
            w = c + rng.uniform(-box, box, size=(m, d))
            f = identity_integrand(cl, y, w) * (2.0 * box) ** d
        total += f.sum()
        total2 += float(np.sum(np.abs(f) ** 2))
        done += m
    mean = total / samples
    var = max(total2 / samples - abs(mean) ** 2, 0.0)
    return IdentityEstimate(complex(mean), math.sqrt(var / (samples - 1)), rhs, samples, meta)


def _square_ensemble(rng, radius, center):
    u = rng.uniform(0.0, 1.0, 2)
    m = int(math.ceil(radius)) + 2
    g = np.arange(-m, m + 1)
    pts = np.stack(np.meshgrid(g, g, indexing="ij"), axis=-1).reshape(-1, 2) + np.floor(center) + u
    return pts


def geometric_identity_delone(y, ensemble: str, realizations: int, seed: int,
                              radius: float = 30.0, d: int = 2,
                              rsa_r_min: float = 0.5, rsa_patterns: int = 4) -> IdentityEstimate:
    """Ensemble average of ``sum_{w in L} integrand(w)`` against the right side.

    ``ensemble='square'`` uses the unit square lattice with a uniform random
    offset. ``ensemble='rsa'`` uses random translates of unit-density RSA
    patterns. Each lattice sum is cut to a disk of ``radius`` around the
    simplex centroid, where the odd leading tail averages out.
    """
    realizations = check_positive_int(realizations, "realizations", minimum=2)
    seed = check_seed(seed)
    if d != 2:
        raise UnsupportedDimension("ensemble identity is implemented for d = 2")
    cl = build_clifford(d)
    c = _vertices(y, d).mean(axis=0)
    rhs = identity_rhs(y, d)
    rng = np.random.default_rng(seed)
    values = np.empty(realizations, dtype=complex)
    if ensemble == "square":
        for k in range(realizations):
            pts = _square_ensemble(rng, radius, c)
            pts = pts[np.linalg.norm(pts - c, axis=1) < radius]
            values[k] = identity_integrand(cl, y, pts).sum()
    elif ensemble == "rsa":
        count = int(math.ceil((2.0 * radius + 12.0) ** 2 * 1.5))
        pats = [build_amorphous(count, rsa_r_min, int(rng.integers(0, 2**63)), geometry_kind="torus")
                for _ in range(rsa_patterns)]
        trees = [(p.positions, cKDTree(p.positions), float(p.geometry.cell_lengths[0])) for p in pats]
        for k in range(realizations):
            pos, tree, side = trees[k % len(trees)]
            t = rng.uniform(radius + 1.0, side - radius - 1.0, 2)
            idx = tree.query_ball_point(t, radius)
            values[k] = identity_integrand(cl, y, pos[idx] - t + c).sum()
    else:
        raise ValueError("ensemble must be 'square' or 'rsa'")
    mean = values.mean()
    sigma = float(np.std(values, ddof=1) / math.sqrt(realizations))
    return IdentityEstimate(complex(mean), sigma, rhs, realizations, {"ensemble": ensemble, "radius": radius})
