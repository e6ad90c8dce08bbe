"""Dense Hermitian eigendecomposition, Fermi projections and chiral unitaries.

Decompositions use LAPACK through :func:`scipy.linalg.eigh`. Results are
deterministic for a fixed BLAS thread count: eigenvalues ascend, ties are
broken by the earliest basis index carrying weight, and every eigenvector
is rotated so that its first significant component is real and positive.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import scipy.linalg

from .exceptions import ConvergenceFailure, GaplessError, NotChiral
from .models import HamiltonianMatrix, SiteBasis
from ._validation import as_matrix

__all__ = [
    "EigenDecomposition",
    "FermiProjection",
    "ChiralUnitary",
    "diagonalize",
    "fermi_projection",
    "chiral_flatten",
]

DEGENERACY_TOL = 1e-12
GAP_TOL = 1e-8


@dataclass(frozen=True)
class EigenDecomposition:
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    basis: Optional[SiteBasis] = None

    @property
    def dim(self) -> int:
        return self.eigenvalues.size

    def reconstruct(self):
        V = self.eigenvectors
        return (V * self.eigenvalues) @ V.conj().T


@dataclass(frozen=True)
class FermiProjection:
    """Spectral projection onto energies ``<= fermi_energy``.

    ``frame`` holds the orthonormal columns spanning the range when the
    projection came from an eigendecomposition; ``degenerate`` flags an
    eigenvalue within ``1e-12`` of the Fermi energy.
    """

    matrix: np.ndarray
    fermi_energy: float
    rank: int
    basis: Optional[SiteBasis] = None
    frame: Optional[np.ndarray] = None
    degenerate: bool = False
    meta: dict = field(default_factory=dict, compare=False)


@dataclass(frozen=True)
class ChiralUnitary:
    """Off-diagonal block ``U`` of ``sign(H)`` in the chirality eigenbasis."""

    matrix: np.ndarray
    basis: Optional[SiteBasis] = None
    gap: float = np.nan


def _canonicalize(w, V, scale):
    n = w.size
    if n == 0:
        return w, V
    mag = np.abs(V)
    thresh = 1e-8 * mag.max(axis=0, keepdims=True)
    first = np.argmax(mag > thresh, axis=0)
    # stable tie-break inside clusters of numerically equal eigenvalues
    cluster = np.concatenate([[0], np.cumsum(np.diff(w) > DEGENERACY_TOL * max(scale, 1.0))])
    order = np.lexsort((first, cluster))
    w, V, first = w[order], V[:, order], first[order]
    lead = V[first, np.arange(n)]
    V = V * (np.abs(lead) / lead)[None, :]
    return w, V


def diagonalize(H, check: bool = True) -> EigenDecomposition:
    """Full eigendecomposition of a dense Hermitian matrix.

    Examples
    --------
    >>> diagonalize(np.diag([3.0, 1.0, 2.0])).eigenvalues
    array([1., 2., 3.])
    """
    basis = H.basis if isinstance(H, HamiltonianMatrix) else None
    A = as_matrix(H)
    if check:
        scale = float(np.max(np.abs(A))) if A.size else 0.0
        if A.size and np.max(np.abs(A - A.conj().T)) > 1e-12 * max(scale, 1.0):
            raise ValueError("matrix is not Hermitian")
    try:
        w, V = scipy.linalg.eigh(A, check_finite=True)
    except (np.linalg.LinAlgError, scipy.linalg.LinAlgError) as exc:
        raise ConvergenceFailure(str(exc)) from exc
    scale = float(np.max(np.abs(w))) if w.size else 1.0
    w, V = _canonicalize(w, V.astype(complex, copy=False), scale)
    return EigenDecomposition(w, V, basis)


def fermi_projection(eig: EigenDecomposition, E_F: float) -> FermiProjection:
    """``P = sum_{lambda_k <= E_F} v_k v_k^*``.

    Eigenvalues within ``1e-12`` of ``E_F`` are included and flagged.
    """
    w = eig.eigenvalues
    occupied = w <= E_F + DEGENERACY_TOL
    degenerate = bool(np.any(np.abs(w - E_F) <= DEGENERACY_TOL))
    frame = eig.eigenvectors[:, occupied]
    P = frame @ frame.conj().T
    return FermiProjection(P, float(E_F), int(occupied.sum()), eig.basis, frame, degenerate)


def _chirality_frames(S):
    """Orthonormal frames of the +1 and -1 eigenspaces of ``S``.

    A diagonal ``S`` returns index arrays instead of frames.
    """
    S = np.asarray(S)
    d = np.diag(S)
    if np.count_nonzero(S - np.diag(d)) == 0:
        d = np.real(d)
        if not np.allclose(np.abs(d), 1.0):
            raise NotChiral("chirality operator must square to one")
        return np.nonzero(d > 0)[0], np.nonzero(d < 0)[0]
    w, Q = np.linalg.eigh(S)
    if not np.allclose(np.abs(w), 1.0):
        raise NotChiral("chirality operator must square to one")
    return Q[:, w > 0], Q[:, w < 0]


def _block(A, Qm, Qp):
    """``Qm^* A Qp`` for frames or index arrays."""
    if Qp.ndim == 1:
        return A[np.ix_(Qm, Qp)]
    return Qm.conj().T @ A @ Qp


def chiral_flatten(H, chirality, method: str = "eigh") -> ChiralUnitary:
    """Extract ``U`` from ``sign(H) = [[0, U^*], [U, 0]]``.

    Parameters
    ----------
    H : HamiltonianMatrix or ndarray
        Chiral Hamiltonian, ``S H S = -H``.
    chirality : ndarray
        The chirality operator ``S``.
    method : {'eigh', 'polar'}
        ``'eigh'`` computes ``sign(H)`` from the eigendecomposition of ``H``.
        ``'polar'`` takes the unitary polar factor of the off-diagonal block
        by an SVD; both give the same ``U``.

    Raises
    ------
    NotChiral
        If ``S H S + H`` exceeds ``1e-10`` relative to ``max|H|``.
    GaplessError
        If ``min |lambda| <= 1e-8``.
    """
    A = as_matrix(H)
    S = np.asarray(chirality)
    scale = max(float(np.max(np.abs(A))), 1.0)
    Qp, Qm = _chirality_frames(S)
    if Qp.ndim == 1:
        d = np.real(np.diag(S))
        residual = np.max(np.abs((d[:, None] * d[None, :] + 1.0) * A))
    else:
        residual = np.max(np.abs(S @ A @ S + A))
    if residual > 1e-10 * scale:
        raise NotChiral("S H S != -H")
    if (Qp.size if Qp.ndim == 1 else Qp.shape[1]) != (Qm.size if Qm.ndim == 1 else Qm.shape[1]):
        raise NotChiral("chirality sectors have unequal dimensions")
    if method == "eigh":
        eig = diagonalize(A, check=False)
        gap = float(np.min(np.abs(eig.eigenvalues)))
        if gap <= GAP_TOL:
            raise GaplessError(f"min |eigenvalue| = {gap:.3e}")
        V = eig.eigenvectors
        sgn = (V * np.sign(eig.eigenvalues)) @ V.conj().T
        U = _block(sgn, Qm, Qp)
    elif method == "polar":
        h = _block(A, Qm, Qp)
        W, s, Vh = np.linalg.svd(h)
        gap = float(np.min(s))
        if gap <= GAP_TOL:
            raise GaplessError(f"min |eigenvalue| = {gap:.3e}")
        U = W @ Vh
    else:
        raise ValueError("method must be 'eigh' or 'polar'")
    half = None
    if isinstance(H, HamiltonianMatrix) and H.basis.orbitals_per_site % 2 == 0:
        half = SiteBasis(H.basis.pattern, H.basis.orbitals_per_site // 2)
    return ChiralUnitary(U, half, gap)
