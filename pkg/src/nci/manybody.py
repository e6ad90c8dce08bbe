"""N-fermion Fock sectors on finite patches.

Basis kets are ascending site tuples ``|x_1 < ... < x_N>`` enumerated in
lexicographic order. A ket with any other ordering equals the sorted ket
times the sign of the sorting permutation. Creation and annihilation
operators act on occupation bitmasks with the usual sign
``(-1)^{#occupied sites below x}``.

Many-body derivations use the total position ``X_j = sum_x x_j a*_x a_x``,
which is single valued on open patches only.
"""

from __future__ import annotations

from dataclasses import dataclass, field
import itertools
import math
from typing import Optional, Sequence, Union

import numpy as np

from .exceptions import GeometryMismatch, SectorTooLarge
from .invariants import PairingResult, cocycle_prefactor, _perm_sign
from .models import CoefficientSpec, HamiltonianMatrix, SiteBasis, build_from_spec, _disorder_values
from .pattern import DisorderField, PointPattern
from ._validation import as_matrix, check_positive_int

__all__ = [
    "FockBasis",
    "ManyBodyOperator",
    "MAX_SECTOR_DIM",
    "build_fock_basis",
    "represent",
    "number_operator",
    "position_operator",
    "mb_derive",
    "current_operator",
    "mb_window_mask",
    "mb_trace_per_volume",
    "mb_chern_pairing",
    "wedge_projection",
    "sector_projection",
]

MAX_SECTOR_DIM = 200_000


@dataclass(frozen=True)
class FockBasis:
    pattern: PointPattern
    N: int
    states: np.ndarray
    masks: tuple = field(repr=False)
    lookup: dict = field(repr=False, compare=False)

    @property
    def dim(self) -> int:
        return self.states.shape[0]

    @property
    def n_sites(self) -> int:
        return self.pattern.n_sites

    def index(self, sites) -> tuple:
        """Index and sign of an arbitrarily ordered tuple of distinct sites."""
        sites = list(sites)
        sign = _perm_sign(np.argsort(sites, kind="stable"))
        mask = 0
        for s in sites:
            mask |= 1 << int(s)
        return self.lookup[mask], sign


@dataclass(frozen=True)
class ManyBodyOperator:
    basis: FockBasis
    entries: np.ndarray
    meta: dict = field(default_factory=dict, compare=False)

    @property
    def matrix(self):
        return self.entries


def build_fock_basis(pattern: PointPattern, N: int) -> FockBasis:
    """Lexicographic ``N``-subsets of the sites.

    Raises
    ------
    SectorTooLarge
        If ``C(S, N)`` exceeds 200000.
    """
    S = pattern.n_sites
    N = check_positive_int(N, "N")
    if N > S:
        raise ValueError(f"N={N} exceeds the number of sites {S}")
    size = math.comb(S, N)
    if size > MAX_SECTOR_DIM:
        raise SectorTooLarge(f"C({S},{N}) = {size} exceeds {MAX_SECTOR_DIM}")
    states = np.array(list(itertools.combinations(range(S), N)), dtype=np.int64).reshape(size, N)
    masks = tuple(sum(1 << int(s) for s in row) for row in states)
    lookup = {m: k for k, m in enumerate(masks)}
    states.setflags(write=False)
    return FockBasis(pattern, N, states, masks, lookup)


def _below(mask, x):
    return bin(mask & ((1 << x) - 1)).count("1")


def _one_body_matrix(spec_or_h, pattern, disorder):
    if isinstance(spec_or_h, HamiltonianMatrix):
        if spec_or_h.basis.orbitals_per_site != 1:
            raise ValueError("Fock sectors are built over single-orbital sites")
        return np.asarray(spec_or_h.entries)
    return np.asarray(build_from_spec(SiteBasis(pattern, 1), spec_or_h, disorder).entries)


def _second_quantize_one_body(h, basis):
    D = basis.dim
    out = np.zeros((D, D), dtype=complex)
    cols = [np.nonzero(h[:, y])[0] for y in range(h.shape[0])]
    for k, (mask, row) in enumerate(zip(basis.masks, basis.states)):
        for y in row:
            y = int(y)
            m1 = mask & ~(1 << y)
            s1 = _below(mask, y)
            for x in cols[y]:
                x = int(x)
                if x != y and (m1 >> x) & 1:
                    continue
                s2 = _below(m1, x)
                out[basis.lookup[m1 | (1 << x)], k] += h[x, y] * (-1) ** (s1 + s2)
    return out


def _two_body_table(spec, pattern, disorder):
    """Kernel values ``h2((p1,p2),(q1,q2))`` on sorted pairs within range."""
    pos = pattern.positions
    vals = _disorder_values(pattern, disorder)
    dist = pattern.distances()
    S = pattern.n_sites
    pairs = [(a, b) for a in range(S) for b in range(a + 1, S) if dist[a, b] <= spec.range * (1 + 1e-9)]
    quads = []
    for p in pairs:
        for q in pairs:
            if max(dist[p[0], q[0]], dist[p[0], q[1]], dist[p[1], q[0]], dist[p[1], q[1]]) <= spec.range * (1 + 1e-9):
                quads.append(p + q)
    if not quads:
        return {}
    quads = np.array(quads)
    disp = pattern.geometry.wrap(pos[quads] - pos[quads[:, :1]])
    xs = pos[quads[:, :1]] + disp
    h = spec.evaluate(xs, vals[quads])
    table: dict = {}
    for (a, b, c, d), v in zip(quads.tolist(), h):
        if v != 0:
            table.setdefault((c, d), []).append((a, b, v))
    return table


def _second_quantize_two_body(table, basis):
    D = basis.dim
    out = np.zeros((D, D), dtype=complex)
    for k, (mask, row) in enumerate(zip(basis.masks, basis.states)):
        occ = [int(s) for s in row]
        for i in range(len(occ)):
            for j in range(i + 1, len(occ)):
                q1, q2 = occ[i], occ[j]
                targets = table.get((q1, q2))
                if not targets:
                    continue
                # a_{q2} a_{q1} then a*_{p1} a*_{p2}
                m1 = mask & ~(1 << q1)
                s = _below(mask, q1)
                m2 = m1 & ~(1 << q2)
                s += _below(m1, q2)
                for p1, p2, v in targets:
                    if (m2 >> p1) & 1 or (m2 >> p2) & 1:
                        continue
                    t = _below(m2, p2)
                    m3 = m2 | (1 << p2)
                    t += _below(m3, p1)
                    out[basis.lookup[m3 | (1 << p1)], k] += v * (-1) ** (s + t)
    return out


def represent(spec: Union[CoefficientSpec, HamiltonianMatrix], basis: FockBasis,
              disorder: Optional[DisorderField] = None) -> ManyBodyOperator:
    """Second-quantized operator on the ``N``-fermion sector.

    One-body inputs (a spec of body order 1 or a single-orbital
    :class:`~nci.models.HamiltonianMatrix`) give ``sum h(x,y) a*_x a_y``.
    Two-body specs give ``sum h2(p,q) a*_p1 a*_p2 a_q2 a_q1`` over ascending
    pairs, so ``h2`` is the matrix element between sorted pair kets. A body
    order above ``N`` gives the zero operator.
    """
    pattern = basis.pattern
    order = 1 if isinstance(spec, HamiltonianMatrix) else spec.body_order
    D = basis.dim
    if order > basis.N:
        return ManyBodyOperator(basis, np.zeros((D, D), dtype=complex), {"body_order": order})
    if order == 1:
        h = _one_body_matrix(spec, pattern, disorder)
        out = _second_quantize_one_body(h, basis)
    else:
        out = _second_quantize_two_body(_two_body_table(spec, pattern, disorder), basis)
    return ManyBodyOperator(basis, out, {"body_order": order})


def number_operator(basis: FockBasis) -> ManyBodyOperator:
    return ManyBodyOperator(basis, basis.N * np.eye(basis.dim, dtype=complex))


def _total_positions(basis: FockBasis, j: int, allow_torus: bool):
    if basis.pattern.geometry.kind == "torus" and not allow_torus:
        raise GeometryMismatch("total position is not single valued on a torus; "
                               "pass allow_torus=True to use raw coordinates")
    x = basis.pattern.positions[:, j]
    return x[basis.states].sum(axis=1)


def position_operator(basis: FockBasis, j: int, allow_torus: bool = False) -> ManyBodyOperator:
    """Diagonal ``X_j`` with entries ``sum_{x in state} x_j``."""
    X = _total_positions(basis, j, allow_torus)
    return ManyBodyOperator(basis, np.diag(X).astype(complex), {"torus_caveat": allow_torus})


def mb_derive(A, j: int, basis: Optional[FockBasis] = None, method: str = "entrywise",
              allow_torus: bool = False) -> ManyBodyOperator:
    """``i [X_j, A]`` by commutator or by the entrywise weight
    ``i (X_j(zeta) - X_j(xi)) A_{zeta xi}``."""
    basis = basis or A.basis
    M = as_matrix(A)
    X = _total_positions(basis, j, allow_torus)
    if method == "entrywise":
        out = 1j * (X[:, None] - X[None, :]) * M
    elif method == "commutator":
        Xd = np.diag(X)
        out = 1j * (Xd @ M - M @ Xd)
    else:
        raise ValueError("method must be 'entrywise' or 'commutator'")
    return ManyBodyOperator(basis, out)


def current_operator(H, j: int, basis: Optional[FockBasis] = None, **kw) -> ManyBodyOperator:
    """Particle current ``dX_j/dt = i [X_j, H]``."""
    return mb_derive(H, j, basis, **kw)


def mb_window_mask(basis: FockBasis, window=None):
    """Anchored states (lowest site in the window) and the window site count."""
    sites = window_sites(basis.pattern, window)
    return sites[basis.states[:, 0]], int(sites.sum())


def window_sites(pattern, window=None):
    from .invariants import window_mask
    return window_mask(SiteBasis(pattern, 1), window)


def mb_trace_per_volume(A, window=None, basis: Optional[FockBasis] = None) -> complex:
    """Anchored diagonal sum over window volume (window sites / density)."""
    basis = basis or A.basis
    M = as_matrix(A)
    anchored, count = mb_window_mask(basis, window)
    return complex(M.diagonal()[anchored].sum() / (count / basis.pattern.density))


def mb_chern_pairing(P, J: Sequence[int] = (0, 1), window=None,
                     basis: Optional[FockBasis] = None) -> PairingResult:
    """Even pairing on a Fock sector with many-body derivations and trace."""
    J = tuple(int(j) for j in J)
    if len(J) % 2 or len(J) == 0 or len(set(J)) != len(J):
        raise ValueError("J must hold an even number of distinct directions")
    basis = basis or P.basis
    M = as_matrix(P)
    anchored, count = mb_window_mask(basis, window)
    rows = np.nonzero(anchored)[0]
    dP = {j: mb_derive(M, j, basis).entries for j in J}
    total = 0.0 + 0.0j
    prefix = {(): M}
    for perm in itertools.permutations(range(len(J))):
        for k in range(1, len(perm)):
            key = perm[:k]
            if key not in prefix:
                prefix[key] = prefix[perm[:k - 1]] @ dP[J[perm[k - 1]]]
        left = prefix[perm[:-1]]
        last = dP[J[perm[-1]]]
        total += _perm_sign(perm) * np.einsum("ik,ki->", left[rows], last[:, rows])
    value = cocycle_prefactor(len(J)) * total / (count / basis.pattern.density)
    return PairingResult.from_value(value, J=J, N=basis.N, window_sites=count,
                                    exploratory=bool(getattr(P, "meta", {}).get("interacting", False)))


def wedge_projection(P1, basis: FockBasis) -> ManyBodyOperator:
    """``N``-fold exterior power of a one-body projection on the sector.

    Entries are the ``N x N`` minors ``det P1[zeta, xi]``.
    """
    M = as_matrix(P1)
    S = basis.states
    if basis.N == 1:
        return ManyBodyOperator(basis, M[np.ix_(S[:, 0], S[:, 0])].astype(complex))
    if basis.N == 2:
        a, b = S[:, 0], S[:, 1]
        out = M[np.ix_(a, a)] * M[np.ix_(b, b)] - M[np.ix_(a, b)] * M[np.ix_(b, a)]
        return ManyBodyOperator(basis, out.astype(complex))
    sub = M[S[:, None, :, None], S[None, :, None, :]]
    return ManyBodyOperator(basis, np.linalg.det(sub))


def sector_projection(H: ManyBodyOperator, E_F: float) -> ManyBodyOperator:
    """Spectral projection of a sector operator onto energies ``<= E_F``."""
    from .spectral import diagonalize, fermi_projection
    Pf = fermi_projection(diagonalize(H.entries), E_F)
    return ManyBodyOperator(H.basis, Pf.matrix, {"rank": Pf.rank, "degenerate": Pf.degenerate})
