"""Lyapunov exponents of the chiral wire and level-statistics diagnostics.

At zero energy the chiral wire reduces to the first-order recursion
``psi_{x+1} = -(t_x / i m_{x+1}) psi_x``, so the inverse localization length
is the Birkhoff average ``|E ln|1 + W1 xi| - E ln|m + W2 xi||`` with
``xi`` uniform in [-1/2, 1/2]. The expectation has a closed form:

    E ln|a + b xi| = [(a + b/2) ln|a + b/2| - (a - b/2) ln|a - b/2|] / b - 1

which stays finite whenever ``a`` and ``b`` are not both zero.
"""

from __future__ import annotations

from dataclasses import dataclass
import math

import numpy as np
from scipy.special import xlogy

from .exceptions import DomainError, SingularDraw, TooFewLevels
from ._validation import check_positive_int, check_seed, check_interval

__all__ = [
    "LyapunovResult",
    "SpectralStatistics",
    "mean_log_abs",
    "lyapunov_analytic",
    "lyapunov_birkhoff",
    "unfold_spectrum",
    "level_statistics",
    "sample_gue_spectrum",
    "sample_poisson_levels",
    "SERIES_THRESHOLD",
]

SERIES_THRESHOLD = 1e-6
_UNDERFLOW = 1e-300


@dataclass(frozen=True)
class LyapunovResult:
    value: float
    estimator_sigma: float = 0.0
    steps: int = 0
    resampled: int = 0
    branch: str = "closed_form"


@dataclass(frozen=True)
class SpectralStatistics:
    mean_gap_ratio: float
    spacing_variance: float
    window: tuple
    n_levels: int


def mean_log_abs(a: float, b: float) -> float:
    """``E ln|a + b xi|`` for ``xi`` uniform in [-1/2, 1/2].

    Uses the series ``ln|a| - (b/a)^2 / 24 - (b/a)^4 / 320`` when
    ``|b| < 1e-6 |a|``.
    """
    if a == 0.0 and b == 0.0:
        raise DomainError("ln|0| diverges")
    if a != 0.0 and abs(b) < SERIES_THRESHOLD * abs(a):
        q = (b / a) ** 2
        return math.log(abs(a)) - q / 24.0 - q * q / 320.0
    if a != 0.0 and abs(b) < abs(a):
        # log1p keeps full relative accuracy for moderate disorder
        h = b / (2.0 * a)
        g = ((1.0 + h) * math.log1p(h) - (1.0 - h) * math.log1p(-h)) / (2.0 * h) - 1.0
        return math.log(abs(a)) + g
    hi, lo = a + b / 2.0, a - b / 2.0
    return float((xlogy(hi, abs(hi)) - xlogy(lo, abs(lo))) / b - 1.0)


def lyapunov_analytic(m: float, W1: float, W2: float) -> LyapunovResult:
    """Closed-form zero-energy Lyapunov exponent of the chiral wire.

    Equals ``|E ln|1 + W1 xi| - E ln|m + W2 xi||``; the clean limit is
    ``|ln|m||``.

    Raises
    ------
    DomainError
        When ``m = W2 = 0``: every mass vanishes and the exponent is infinite.
    """
    small = abs(W1) < SERIES_THRESHOLD or (m != 0 and abs(W2) < SERIES_THRESHOLD * abs(m))
    value = abs(mean_log_abs(1.0, W1) - mean_log_abs(m, W2))
    return LyapunovResult(value, branch="series" if small else "closed_form")


def lyapunov_birkhoff(m: float, W1: float, W2: float, steps: int, seed: int,
                      shared: bool = True, n_blocks: int = 100,
                      max_resample: int = 1000) -> LyapunovResult:
    """Birkhoff estimate ``|(1/x) sum ln|1 + W1 xi| - ln|m + W2 xi'||``.

    ``xi' = xi`` for shared draws, an independent stream otherwise. The
    standard error comes from a block jackknife.

    Raises
    ------
    SingularDraw
        If draws with ``|m + W2 xi| < 1e-300`` keep recurring after
        ``max_resample`` redraws.
    """
    steps = check_positive_int(steps, "steps", minimum=1000)
    seed = check_seed(seed)
    rng = np.random.default_rng(seed)
    xi = rng.uniform(-0.5, 0.5, steps)
    xi_m = xi if shared else rng.uniform(-0.5, 0.5, steps)
    mass = m + W2 * xi_m
    resampled = 0
    bad = np.abs(mass) < _UNDERFLOW
    while bad.any():
        resampled += int(bad.sum())
        if resampled > max_resample:
            raise SingularDraw(f"{resampled} draws hit |m + W2 xi| < 1e-300")
        fresh = rng.uniform(-0.5, 0.5, int(bad.sum()))
        if shared:
            xi[bad] = fresh
        else:
            xi_m[bad] = fresh
        mass = m + W2 * xi_m
        bad = np.abs(mass) < _UNDERFLOW
    summand = np.log(np.abs(1.0 + W1 * xi)) - np.log(np.abs(mass))
    mean = float(summand.mean())
    blocks = np.array_split(summand, n_blocks)
    sums = np.array([b.sum() for b in blocks])
    sizes = np.array([b.size for b in blocks])
    loo = (sums.sum() - sums) / (steps - sizes)
    k = n_blocks
    sigma = float(math.sqrt((k - 1) / k * np.sum((loo - loo.mean()) ** 2)))
    return LyapunovResult(abs(mean), sigma, steps, resampled, branch="birkhoff")


# ---------------------------------------------------------------------------
# Level statistics


def _levels(eig):
    if hasattr(eig, "eigenvalues"):
        return np.asarray(eig.eigenvalues, float)
    return np.sort(np.asarray(eig, float))


def unfold_spectrum(levels, degree: int = 7) -> np.ndarray:
    """Map levels through a degree-``degree`` fit of the staircase."""
    E = np.sort(np.asarray(levels, float))
    staircase = np.arange(1, E.size + 1, dtype=float)
    fit = np.polynomial.Polynomial.fit(E, staircase, degree)
    return fit(E)


def level_statistics(eig, window, degree: int = 7, min_levels: int = 50) -> SpectralStatistics:
    """Spacing variance and mean adjacent-gap ratio of levels in ``window``.

    ``eig`` is an :class:`~nci.spectral.EigenDecomposition`, an array of
    levels, or a list of these; spacings of a list are pooled after
    unfolding each spectrum separately.

    Raises
    ------
    TooFewLevels
        If any spectrum has fewer than ``min_levels`` levels in the window.
    """
    lo, hi = check_interval(window)
    spectra = eig if isinstance(eig, (list, tuple)) else [eig]
    spacings, ratios, total = [], [], 0
    for item in spectra:
        E = _levels(item)
        E = E[(E >= lo) & (E <= hi)]
        if E.size < min_levels:
            raise TooFewLevels(f"{E.size} levels in window, need {min_levels}")
        total += E.size
        s = np.diff(unfold_spectrum(E, degree))
        spacings.append(s / s.mean())
        d = np.diff(E)
        num = np.minimum(d[:-1], d[1:])
        den = np.maximum(d[:-1], d[1:])
        ok = den > 0
        ratios.append(num[ok] / den[ok])
    s = np.concatenate(spacings)
    r = np.concatenate(ratios)
    return SpectralStatistics(float(r.mean()), float(s.var()), (lo, hi), total)


def sample_gue_spectrum(dim: int, rng) -> np.ndarray:
    """Eigenvalues of a GUE matrix with off-diagonal variance 1/dim."""
    rng = np.random.default_rng(rng)
    A = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    H = (A + A.conj().T) / (2.0 * math.sqrt(2.0 * dim))
    return np.linalg.eigvalsh(H)


def sample_poisson_levels(count: int, rng) -> np.ndarray:
    """Sorted i.i.d. uniform levels on [0, 1]."""
    rng = np.random.default_rng(rng)
    return np.sort(rng.uniform(0.0, 1.0, count))
