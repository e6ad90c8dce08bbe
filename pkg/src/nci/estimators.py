"""Estimator-style wrappers around the invariant and localization kernels.

Each wrapper stores its options as constructor parameters (so ``get_params``,
``set_params`` and ``clone`` work) and computes in ``fit``; fitted results
carry a trailing underscore. Nothing is learned from data here: ``fit``
evaluates the quantity on the operator it is given.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .index_theorem import build_clifford, build_dirac, fredholm_index
from .invariants import DerivationKernel, chern_pairing, winding_pairing
from .localization import level_statistics, lyapunov_analytic, lyapunov_birkhoff
from .models import HamiltonianMatrix, chirality_operator
from .spectral import chiral_flatten, diagonalize, fermi_projection

__all__ = ["ChernPairing", "WindingPairing", "FredholmIndex", "LevelStatistics", "LyapunovExponent"]


def _check_hamiltonian(H):
    if not isinstance(H, HamiltonianMatrix):
        raise TypeError("expected a HamiltonianMatrix")
    return H


class ChernPairing(BaseEstimator):
    """Even pairing of the Fermi projection of a Hamiltonian.

    Parameters
    ----------
    fermi_energy : float
    J : tuple of int
        Directions of the cocycle.
    kernel : {'minimal_image', 'roots_of_unity'}
    coordinates : {'positions', 'cells'}
    window : float, optional
        Collar width on open patches.

    Attributes
    ----------
    result_ : PairingResult
    value_, quantized_value_, deviation_
    eig_ : EigenDecomposition
    """

    def __init__(self, fermi_energy=0.0, J=(0, 1), kernel="minimal_image",
                 coordinates="positions", window=None):
        self.fermi_energy = fermi_energy
        self.J = J
        self.kernel = kernel
        self.coordinates = coordinates
        self.window = window

    def _kernel(self):
        return DerivationKernel(self.kernel, coordinates=self.coordinates)

    def fit(self, H, y=None):
        self.eig_ = diagonalize(_check_hamiltonian(H))
        self.result_ = self._pair(self.fermi_energy)
        self.value_ = self.result_.value
        self.quantized_value_ = self.result_.quantized_value
        self.deviation_ = self.result_.deviation
        return self

    def _pair(self, E_F):
        P = fermi_projection(self.eig_, E_F)
        return chern_pairing(P, self.J, self._kernel(), self.window)

    def predict(self, fermi_energies):
        """Pairings at other Fermi energies, reusing the eigendecomposition."""
        check_is_fitted(self, "eig_")
        E = np.atleast_1d(np.asarray(fermi_energies, float))
        return np.array([self._pair(e).value for e in E])


class WindingPairing(BaseEstimator):
    """Odd pairing of the flat-band unitary of a chiral Hamiltonian."""

    def __init__(self, method="eigh", kernel="minimal_image", window=None):
        self.method = method
        self.kernel = kernel
        self.window = window

    def fit(self, H, y=None):
        H = _check_hamiltonian(H)
        self.unitary_ = chiral_flatten(H, chirality_operator(H.basis), method=self.method)
        self.result_ = winding_pairing(self.unitary_, DerivationKernel(self.kernel), self.window)
        self.value_ = self.result_.value
        self.quantized_value_ = self.result_.quantized_value
        self.deviation_ = self.result_.deviation
        return self


class FredholmIndex(BaseEstimator):
    """Index of the compressed Dirac phase for a shift ``w`` on an open patch."""

    def __init__(self, w=(0.0, 0.0), fermi_energy=0.0, localization_radius=None, cross_check=False):
        self.w = w
        self.fermi_energy = fermi_energy
        self.localization_radius = localization_radius
        self.cross_check = cross_check

    def fit(self, H, y=None):
        H = _check_hamiltonian(H)
        P = fermi_projection(diagonalize(H), self.fermi_energy)
        dirac = build_dirac(H.basis.pattern, H.basis.orbitals_per_site,
                            build_clifford(H.basis.pattern.dimension), self.w)
        self.result_ = fredholm_index(P, dirac, self.localization_radius, self.cross_check)
        self.index_ = self.result_.index
        return self


class LevelStatistics(BaseEstimator):
    """Spacing variance and mean gap ratio of one spectrum or a pooled list."""

    def __init__(self, window=(-1.0, 1.0), degree=7, min_levels=50):
        self.window = window
        self.degree = degree
        self.min_levels = min_levels

    def fit(self, spectra, y=None):
        self.stats_ = level_statistics(spectra, self.window, self.degree, self.min_levels)
        self.spacing_variance_ = self.stats_.spacing_variance
        self.gap_ratio_ = self.stats_.mean_gap_ratio
        return self


class LyapunovExponent(TransformerMixin, BaseEstimator):
    """Maps rows ``(m, W1, W2)`` to zero-energy Lyapunov exponents.

    With ``steps=None`` the closed form is used, otherwise a Birkhoff
    average of ``steps`` draws seeded by ``seed + row``.
    """

    def __init__(self, steps=None, seed=0):
        self.steps = steps
        self.seed = seed

    def fit(self, X, y=None):
        check_array(X, ensure_min_features=3)
        self.n_features_in_ = 3
        return self

    def transform(self, X):
        check_is_fitted(self, "n_features_in_")
        X = check_array(X)
        if X.shape[1] != 3:
            raise ValueError("rows must be (m, W1, W2)")
        if self.steps is None:
            out = [lyapunov_analytic(*row).value for row in X]
        else:
            out = [lyapunov_birkhoff(*row, steps=self.steps, seed=self.seed + k).value
                   for k, row in enumerate(X)]
        return np.asarray(out)[:, None]
