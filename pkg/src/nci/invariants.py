"""Derivations, trace per volume and cyclic-cocycle pairings.

The derivation along direction ``j`` is ``d_j A = i [X_j, A]``, realized
entrywise as ``(d_j A)_{xy} = i (x - y)_j A_{xy}``. Two displacement
conventions are available:

``minimal_image``
    ``x - y`` is the minimal-image displacement, either of the actual
    positions or of the Bravais cell origins (``coordinates='cells'``).
``roots_of_unity``
    ``[X_j, .]`` is replaced by ``sum_z c_z z^{X_j} . z^{-X_j}`` over the
    nontrivial ``(2L+1)``-th roots of unity with ``c_z = z^L / (conj(z) - 1)``,
    acting on integer cell coordinates. This reproduces ``x - y`` exactly
    for cell differences up to ``L`` and aliases beyond. On a lattice torus
    the cell differences are taken in the minimal image, so the
    replacement stays translation invariant when ``2L + 1`` does not divide
    the torus size.

Even pairings are normalized by ``Lambda_d = (2 i pi)^{d/2} / (d/2)!`` so
that they return the Fredholm index directly.
"""

from __future__ import annotations

from dataclasses import dataclass, field
import itertools
import math
from typing import Optional, Sequence

import numpy as np

from .exceptions import EmptyWindow, ModeUnavailable
from .models import SiteBasis
from .pattern import PointPattern
from ._validation import as_matrix

__all__ = [
    "DerivationKernel",
    "PairingResult",
    "displacement_weights",
    "derive",
    "window_mask",
    "trace_per_volume",
    "chern_pairing",
    "winding_pairing",
    "cocycle_prefactor",
    "DEFAULT_COLLAR_FRACTION",
]

DEFAULT_COLLAR_FRACTION = 0.2


@dataclass(frozen=True)
class DerivationKernel:
    """How ``[X_j, .]`` is realized on a finite patch.

    Parameters
    ----------
    mode : {'minimal_image', 'roots_of_unity'}
    L : int or tuple of int, optional
        Roots-of-unity half-size per lattice direction. Defaults to
        ``(n_j - 1) // 2`` on a lattice torus and to the cell span of an
        open patch.
    coordinates : {'positions', 'cells'}
        Displacements of site positions, or of Bravais cell origins. The
        roots-of-unity mode always works on cells.
    """

    mode: str = "minimal_image"
    L: Optional[object] = None
    coordinates: str = "positions"

    def __post_init__(self):
        if self.mode not in ("minimal_image", "roots_of_unity"):
            raise ValueError(f"unknown derivation mode {self.mode!r}")
        if self.coordinates not in ("positions", "cells"):
            raise ValueError("coordinates must be 'positions' or 'cells'")

    def half_sizes(self, pattern: PointPattern):
        d = pattern.cells.shape[1]
        if self.L is not None:
            L = np.broadcast_to(np.asarray(self.L, dtype=int), (d,))
        elif pattern.geometry.kind == "torus" and pattern.lattice_shape is not None:
            L = (np.asarray(pattern.lattice_shape) - 1) // 2
        else:
            L = np.ptp(pattern.cells, axis=0)
        if np.any(L < 1):
            raise ValueError("roots-of-unity half-size must be >= 1")
        return tuple(int(v) for v in L)


@dataclass(frozen=True)
class PairingResult:
    """A pairing value with its distance to the nearest integer.

    ``deviation = |value - quantized_value|`` including any imaginary part.
    """

    value: complex
    quantized_value: int
    deviation: float
    meta: dict = field(default_factory=dict, compare=False)

    @classmethod
    def from_value(cls, value, **meta):
        value = complex(value)
        q = int(round(value.real))
        return cls(value, q, float(abs(value - q)), dict(meta))


def _roots_weights(D, L):
    """``sum_z c_z z^D`` for integer cell differences ``D``.

    ``c_z = z^L / (conj(z) - 1) = z^(L+1) / (1 - z)`` gives the weight ``n``
    for every cell difference ``|n| <= L``; larger differences alias with
    period ``2L + 1``.
    """
    M = 2 * L + 1
    z = np.exp(2j * np.pi * np.arange(1, M) / M)
    c = z**L / (np.conj(z) - 1.0)
    table = np.array([np.sum(c * z**k) for k in range(M)])
    return table[np.mod(D, M)]


def displacement_weights(pattern: PointPattern, j: int,
                         kernel: Optional[DerivationKernel] = None) -> np.ndarray:
    """Site matrix ``w_j(x, y)`` with ``(d_j A)_{xy} = i w_j(x, y) A_{xy}``."""
    kernel = kernel or DerivationKernel()
    if not 0 <= j < pattern.dimension:
        raise ValueError(f"direction {j} out of range for d={pattern.dimension}")
    needs_cells = kernel.mode == "roots_of_unity" or kernel.coordinates == "cells"
    if needs_cells and not pattern.has_cells:
        raise ModeUnavailable(f"{kernel.mode} with cell coordinates needs integer lattice coordinates")
    if kernel.mode == "minimal_image":
        if kernel.coordinates == "positions":
            return pattern.displacements()[..., j]
        return pattern.cell_displacements() @ pattern.lattice_vectors[:, j]
    L = kernel.half_sizes(pattern)
    D = pattern.cell_displacements()
    out = np.zeros((pattern.n_sites,) * 2, dtype=complex)
    for k, Lk in enumerate(L):
        coeff = pattern.lattice_vectors[k, j]
        if coeff != 0.0:
            out += coeff * _roots_weights(D[..., k], Lk)
    return out


def _basis_of(A, basis):
    if basis is None:
        basis = getattr(A, "basis", None)
    if basis is None:
        raise ValueError("a SiteBasis is required (pass basis=...)")
    return basis


def derive(A, j: int, kernel: Optional[DerivationKernel] = None,
           basis: Optional[SiteBasis] = None) -> np.ndarray:
    """``d_j A = i [X_j, A]`` in the chosen realization.

    Examples
    --------
    >>> from nci.pattern import build_chain
    >>> b = SiteBasis(build_chain(5))
    >>> float(abs(derive(np.eye(5), 0, basis=b)).max())
    0.0
    """
    basis = _basis_of(A, basis)
    M = as_matrix(A)
    w = basis.expand(displacement_weights(basis.pattern, j, kernel))
    return 1j * w * M


def window_mask(basis: SiteBasis, window=None) -> np.ndarray:
    """Boolean mask over basis indices selected by a trace window.

    ``window`` may be ``None`` (whole torus, or the default collar of 20% of
    the patch radius on an open patch), a collar width, or a boolean mask
    over sites.
    """
    pattern = basis.pattern
    if window is not None and np.ndim(window) == 1:
        sites = np.asarray(window, dtype=bool)
        if sites.size != pattern.n_sites:
            raise ValueError("window mask does not match the pattern")
    elif pattern.geometry.kind == "torus":
        if window not in (None, 0, 0.0):
            raise ValueError("a torus trace takes no collar")
        sites = np.ones(pattern.n_sites, dtype=bool)
    else:
        ell = DEFAULT_COLLAR_FRACTION * pattern.geometry.patch_radius if window is None else float(window)
        if ell < 0:
            raise ValueError("collar width must be nonnegative")
        sites = pattern.geometry.distance_to_boundary(pattern.positions) > ell
    if not sites.any():
        raise EmptyWindow("no site survives the collar")
    return basis.expand_sites(sites)


def _window_volume(basis, mask):
    n_sites = int(mask.sum()) // basis.orbitals_per_site
    return n_sites / basis.pattern.density


def trace_per_volume(A, window=None, basis: Optional[SiteBasis] = None) -> complex:
    """Diagonal sum over the window divided by the window volume.

    The window volume is the number of window sites over the pattern
    density; on a torus this is the torus volume.
    """
    basis = _basis_of(A, basis)
    M = as_matrix(A)
    mask = window_mask(basis, window)
    return complex(M.diagonal()[mask].sum() / _window_volume(basis, mask))


def cocycle_prefactor(order: int) -> complex:
    """``Lambda_d = (2 i pi)^{d/2} / (d/2)!``."""
    if order % 2:
        raise ValueError("even cocycles only")
    return (2j * math.pi) ** (order // 2) / math.factorial(order // 2)


def _perm_sign(perm):
    sign = 1
    p = list(perm)
    for i in range(len(p)):
        while p[i] != i:
            k = p[i]
            p[i], p[k] = p[k], p[i]
            sign = -sign
    return sign


def chern_pairing(P, J: Sequence[int] = (0, 1), kernel: Optional[DerivationKernel] = None,
                  window=None, basis: Optional[SiteBasis] = None) -> PairingResult:
    """Even pairing ``Lambda_|J| sum_perm sign T(P d_l1 P ... d_lk P)``.

    Parameters
    ----------
    P : FermiProjection or ndarray
    J : sequence of distinct directions, even length
    kernel : DerivationKernel, optional
    window : collar width, site mask, or None
    basis : SiteBasis, required when ``P`` is a bare array
    """
    J = tuple(int(j) for j in J)
    if len(J) % 2 or len(J) == 0:
        raise ValueError("J must have even, nonzero size")
    if len(set(J)) != len(J):
        raise ValueError("directions in J must be distinct")
    basis = _basis_of(P, basis)
    M = as_matrix(P)
    mask = window_mask(basis, window)
    dP = {j: derive(M, j, kernel, basis) for j in J}
    rows = np.nonzero(mask)[0]
    total = 0.0 + 0.0j
    prefix = {(): M}
    for perm in itertools.permutations(range(len(J))):
        for k in range(1, len(perm)):
            key = perm[:k]
            if key not in prefix:
                prefix[key] = prefix[perm[:k - 1]] @ dP[J[perm[k - 1]]]
        left = prefix[perm[:-1]]
        last = dP[J[perm[-1]]]
        diag = np.einsum("ik,ki->", left[rows], last[:, rows])
        total += _perm_sign(perm) * diag
    value = cocycle_prefactor(len(J)) * total / _window_volume(basis, mask)
    degenerate = bool(getattr(P, "degenerate", False))
    return PairingResult.from_value(
        value, J=J, mode=(kernel or DerivationKernel()).mode,
        window_sites=int(mask.sum()) // basis.orbitals_per_site, degenerate=degenerate)


def winding_pairing(U, kernel: Optional[DerivationKernel] = None, window=None,
                    basis: Optional[SiteBasis] = None, direction: int = 0) -> PairingResult:
    """Odd pairing ``i T(U d U^{-1})``; the right shift on a ring gives +1."""
    basis = _basis_of(U, basis)
    M = as_matrix(U)
    Uinv = np.linalg.inv(M)
    dUinv = derive(Uinv, direction, kernel, basis)
    mask = window_mask(basis, window)
    rows = np.nonzero(mask)[0]
    diag = np.einsum("ik,ki->", M[rows], dUinv[:, rows])
    value = 1j * diag / _window_volume(basis, mask)
    return PairingResult.from_value(value, mode=(kernel or DerivationKernel()).mode,
                                    window_sites=int(mask.sum()) // basis.orbitals_per_site)
