import numpy as np
import pytest
from sklearn.base import clone
from sklearn.exceptions import NotFittedError

from nci import (HONEYCOMB_SPACING, build_chain, build_chiral_wire, build_haldane,
                 build_honeycomb_disk, chern_pairing, lyapunov_analytic, sample_poisson_levels)
from nci.estimators import (ChernPairing, FredholmIndex, LevelStatistics, LyapunovExponent,
                            WindingPairing)


def test_params_and_clone():
    est = ChernPairing(fermi_energy=0.1, kernel="roots_of_unity")
    assert est.get_params()["kernel"] == "roots_of_unity"
    c = clone(est)
    assert c.get_params() == est.get_params() and not hasattr(c, "result_")
    assert est.set_params(fermi_energy=0.2).fermi_energy == 0.2


def test_chern_estimator_matches_function(haldane_clean_8):
    _, H, _, P = haldane_clean_8
    est = ChernPairing().fit(H)
    assert est.value_ == chern_pairing(P).value and est.quantized_value_ == 1
    vals = est.predict([0.0, 10.0])
    assert vals[0] == est.value_ and abs(vals[1]) <= 1e-12


def test_chern_rejects_arrays():
    with pytest.raises(TypeError):
        ChernPairing().fit(np.eye(4))
    with pytest.raises(NotFittedError):
        ChernPairing().predict([0.0])


def test_winding_estimator():
    H = build_chiral_wire(build_chain(200), 0.5, 0.0, 0.0)
    assert WindingPairing(method="polar").fit(H).quantized_value_ == 1


def test_fredholm_estimator():
    p = build_honeycomb_disk(6 * HONEYCOMB_SPACING)
    H = build_haldane(p, 0.6, 0.0)
    est = FredholmIndex(w=p.geometry.center + 0.1).fit(H)
    assert est.index_ == 1


def test_level_statistics_estimator():
    est = LevelStatistics(window=(0.0, 1.0)).fit(sample_poisson_levels(5000, 3))
    assert est.spacing_variance_ == pytest.approx(1.0, abs=0.1)


def test_lyapunov_transformer():
    X = np.array([[0.5, 0.2, 0.4], [1.2, 1.0, 2.0]])
    out = LyapunovExponent().fit_transform(X)
    assert out.shape == (2, 1)
    assert out[1, 0] == lyapunov_analytic(1.2, 1.0, 2.0).value
    mc = LyapunovExponent(steps=10**5, seed=1).fit(X).transform(X)
    assert np.allclose(mc, out, atol=0.02)
    with pytest.raises(ValueError):
        LyapunovExponent().fit(X).transform(np.ones((2, 4)))
