"""Single-task kernels of the sweep experiments.

Every experiment maps a full parameter dict and a 64-bit task seed to a
result dict with keys ``value`` (complex), ``quantized_value`` (int or
None), ``deviation`` (float or None) and ``diagnostics`` (dict). Tasks are
pure functions of their inputs, so a record can be re-run from its fields.

Disorder-strength shorthand: for ``winding_map`` and ``lyapunov`` a
parameter ``W`` sets ``W1 = W / 2`` and ``W2 = W``.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
import math

import numpy as np

from ..index_theorem import (build_clifford, build_dirac, fredholm_index,
                             geometric_identity_continuum, geometric_identity_delone)
from ..invariants import DerivationKernel, chern_pairing, winding_pairing
from ..localization import level_statistics, lyapunov_analytic, lyapunov_birkhoff
from ..manybody import build_fock_basis, mb_chern_pairing, represent, sector_projection, wedge_projection
from ..models import (SiteBasis, build_amorphous_magnetic, build_chiral_wire, build_haldane,
                      chirality_operator, HamiltonianMatrix)
from ..pattern import (HONEYCOMB_SPACING, build_amorphous, build_chain, build_honeycomb,
                       build_honeycomb_disk, sample_disorder)
from ..spectral import chiral_flatten, diagonalize, fermi_projection

__all__ = ["Param", "EXPERIMENTS", "run_task", "resolve_params", "sector_memory_bytes"]


@dataclass(frozen=True)
class Param:
    kind: type
    default: object
    choices: tuple = ()


_HALDANE = {"t2": Param(float, 0.6), "W": Param(float, 0.0)}
_WIRE = {"m": Param(float, 0.5), "W1": Param(float, 0.0), "W2": Param(float, 0.0),
         "W": Param(float, None)}

EXPERIMENTS = {
    "haldane_chern": {**_HALDANE, "E_F": Param(float, 0.0), "n1": Param(int, 12), "n2": Param(int, 12)},
    "winding_map": {**_WIRE, "n": Param(int, 400),
                    "method": Param(str, "polar", ("polar", "eigh"))},
    "lyapunov": {**_WIRE, "steps": Param(int, 0)},
    "amorphous_chern": {"count": Param(int, 1000), "r_min": Param(float, 0.5),
                        "theta": Param(float, 1.5), "decay": Param(float, 3.0),
                        "E_F": Param(float, 0.0)},
    "index_check": {**_HALDANE, "E_F": Param(float, 0.0), "radius_cells": Param(float, 12.0),
                    "atomic": Param(int, 0, (0, 1)), "cross_check": Param(int, 0, (0, 1))},
    "geomid": {"y1x": Param(float, 1.0), "y1y": Param(float, 0.0),
               "y2x": Param(float, 0.0), "y2y": Param(float, 1.0),
               "ensemble": Param(str, "continuum", ("continuum", "square", "rsa")),
               "samples": Param(int, 1_000_000), "radius": Param(float, 30.0)},
    "manybody_pairing": {**_HALDANE, "E_F": Param(float, 0.0), "radius": Param(float, 4.4),
                         "N": Param(int, 2),
                         "projection": Param(str, "wedge", ("wedge", "sector"))},
    "level_stats": {**_HALDANE, "n1": Param(int, 12), "n2": Param(int, 12),
                    "lo": Param(float, -2.0), "hi": Param(float, 2.0)},
}


def resolve_params(experiment: str, params: dict) -> dict:
    """Fill defaults and expand the ``W`` shorthand."""
    schema = EXPERIMENTS[experiment]
    out = {k: p.default for k, p in schema.items()}
    out.update(params)
    if "W" in schema and schema["W"].default is None:
        if out.get("W") is not None:
            out["W1"], out["W2"] = out["W"] / 2.0, out["W"]
        out.pop("W", None)
    return out


def _kernel(options):
    return DerivationKernel(options.get("kernel", "minimal_image"),
                            coordinates=options.get("coordinates", "positions"))


def _result(value, quantized=None, deviation=None, **diagnostics):
    return {"value": complex(value), "quantized_value": quantized,
            "deviation": deviation, "diagnostics": diagnostics}


def _pairing_result(res, **diagnostics):
    diagnostics.update({k: v for k, v in res.meta.items() if isinstance(v, (int, float, str, bool))})
    return _result(res.value, res.quantized_value, res.deviation, **diagnostics)


# caches keep one disorder realization alive across Fermi-energy grids
@lru_cache(maxsize=4)
def _haldane_torus(n1, n2, t2, W, seed):
    p = build_honeycomb(n1, n2)
    H = build_haldane(p, t2, W, sample_disorder(p, seed))
    return diagonalize(H)


@lru_cache(maxsize=2)
def _amorphous(count, r_min, theta, decay, seed):
    p = build_amorphous(count, r_min, seed)
    return diagonalize(build_amorphous_magnetic(p, theta, decay))


@lru_cache(maxsize=2)
def _haldane_disk(radius, t2, W, seed, atomic):
    p = build_honeycomb_disk(radius)
    if atomic:
        # decoupled sites, staggered by sublattice
        H = HamiltonianMatrix(SiteBasis(p, 1), np.diag(1.0 - 2.0 * p.sublattice.astype(float)))
    else:
        H = build_haldane(p, t2, W, sample_disorder(p, seed))
    return diagonalize(H)


def _haldane_chern(p, seed, options):
    eig = _haldane_torus(p["n1"], p["n2"], p["t2"], p["W"], seed)
    P = fermi_projection(eig, p["E_F"])
    res = chern_pairing(P, kernel=_kernel(options), window=options.get("window"))
    gap = float(np.min(np.abs(eig.eigenvalues - p["E_F"])))
    return _pairing_result(res, gap=gap, rank=P.rank, degenerate=P.degenerate)


def _wire(p, seed):
    pat = build_chain(p["n"])
    disorder = sample_disorder(pat, seed) if (p["W1"] or p["W2"]) else None
    return build_chiral_wire(pat, p["m"], p["W1"], p["W2"], disorder)


def _winding_map(p, seed, options):
    H = _wire(p, seed)
    U = chiral_flatten(H, chirality_operator(H.basis), method=p["method"])
    res = winding_pairing(U, kernel=_kernel(options))
    lyap = lyapunov_analytic(p["m"], p["W1"], p["W2"]).value
    return _pairing_result(res, gap=U.gap, lyapunov_analytic=lyap)


def _lyapunov(p, seed, options):
    m, W1, W2 = p["m"], p["W1"], p["W2"]
    exact = lyapunov_analytic(m, W1, W2)
    diag = {"branch": exact.branch,
            "clean_log_mass": math.log(abs(m)) if m else -math.inf}
    if p["steps"] > 0:
        est = lyapunov_birkhoff(m, W1, W2, p["steps"], seed)
        diag.update(birkhoff=est.value, birkhoff_sigma=est.estimator_sigma)
    return _result(exact.value, None, None, **diag)


def _amorphous_chern(p, seed, options):
    eig = _amorphous(p["count"], p["r_min"], p["theta"], p["decay"], seed)
    P = fermi_projection(eig, p["E_F"])
    res = chern_pairing(P, kernel=_kernel(options), window=options.get("window"))
    E = eig.eigenvalues
    gap = float(np.min(np.abs(E - p["E_F"])))
    return _pairing_result(res, gap=gap, rank=P.rank, filling=P.rank / E.size)


def _index_check(p, seed, options):
    radius = p["radius_cells"] * HONEYCOMB_SPACING
    eig = _haldane_disk(radius, p["t2"], p["W"], seed, p["atomic"])
    P = fermi_projection(eig, p["E_F"])
    rng = np.random.default_rng(seed)
    center = eig.basis.pattern.geometry.center
    w = center + rng.uniform(-0.5, 0.5, 2) * HONEYCOMB_SPACING
    dirac = build_dirac(eig.basis.pattern, 1, build_clifford(2), w)
    res = fredholm_index(P, dirac, cross_check=bool(p["cross_check"]), window=options.get("window"))
    pairing = chern_pairing(P, window=options.get("window"))
    diag = {"w": w.tolist(), "threshold": res.threshold, "margin": res.margin,
            "chern_pairing": [pairing.value.real, pairing.value.imag],
            "matches_pairing": res.index == pairing.quantized_value}
    if res.connes_chern is not None:
        diag["connes_chern"] = [res.connes_chern.real, res.connes_chern.imag]
    return _result(res.index, res.index, 0.0, **diag)


def _geomid(p, seed, options):
    y = [(p["y1x"], p["y1y"]), (p["y2x"], p["y2y"])]
    if p["ensemble"] == "continuum":
        est = geometric_identity_continuum(y, p["samples"], seed)
    else:
        est = geometric_identity_delone(y, p["ensemble"], p["samples"], seed, radius=p["radius"])
    return _result(est.lhs, None, abs(est.lhs - est.rhs),
                   rhs=[est.rhs.real, est.rhs.imag], sigma=est.sigma, z_score=est.z_score)


def _manybody_pairing(p, seed, options):
    pat = build_honeycomb_disk(p["radius"])
    H = build_haldane(pat, p["t2"], p["W"], sample_disorder(pat, seed))
    basis = build_fock_basis(pat, p["N"])
    if p["projection"] == "wedge":
        P = wedge_projection(fermi_projection(diagonalize(H), p["E_F"]), basis)
    else:
        P = sector_projection(represent(H, basis), p["E_F"])
    res = mb_chern_pairing(P, window=options.get("window"), basis=basis)
    return _pairing_result(res, sector_dim=basis.dim)


def _level_stats(p, seed, options):
    eig = _haldane_torus(p["n1"], p["n2"], p["t2"], p["W"], seed)
    st = level_statistics(eig, (p["lo"], p["hi"]))
    gap = float(np.min(np.abs(eig.eigenvalues)))
    return _result(st.spacing_variance, None, None, gap_ratio=st.mean_gap_ratio,
                   n_levels=st.n_levels, gap=gap)


_RUNNERS = {
    "haldane_chern": _haldane_chern,
    "winding_map": _winding_map,
    "lyapunov": _lyapunov,
    "amorphous_chern": _amorphous_chern,
    "index_check": _index_check,
    "geomid": _geomid,
    "manybody_pairing": _manybody_pairing,
    "level_stats": _level_stats,
}


def run_task(experiment: str, params: dict, seed: int, options: dict = None) -> dict:
    """Run one task; ``params`` must already be resolved."""
    return _RUNNERS[experiment](params, seed, options or {})


def sector_memory_bytes(params: dict) -> int:
    """Rough peak memory of one many-body task (a handful of dense sector matrices)."""
    sites = round(math.pi * params["radius"] ** 2)
    dim = math.comb(max(sites, params["N"]), params["N"])
    return 16 * 8 * dim * dim
