import numpy as np
import pytest
from hypothesis import given, strategies as st

from nci import (GaplessError, NotChiral, build_chain, build_chiral_wire, build_haldane,
                 build_honeycomb, chiral_flatten, chirality_operator, diagonalize,
                 fermi_projection, sample_disorder)

SX = np.array([[0, 1], [1, 0]], dtype=complex)
SZ = np.diag([1.0, -1.0])


def random_hermitian(rng, n):
    A = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    return (A + A.conj().T) / 2


# --- diagonalize ---------------------------------------------------------------


def test_diagonal_matrix():
    assert np.array_equal(diagonalize(np.diag([3.0, 1.0, 2.0])).eigenvalues, [1, 2, 3])


def test_pauli_x():
    assert np.allclose(diagonalize(SX).eigenvalues, [-1, 1])


def test_haldane_spectrum_symmetry():
    p = build_honeycomb(6, 6)
    H = build_haldane(p, 0.6, 0.0).matrix
    S = np.diag(1.0 - 2.0 * p.sublattice)
    # t2 breaks the sublattice chiral symmetry
    assert np.max(np.abs(S @ H @ S + H)) > 0.1
    # the purely imaginary second-neighbor term keeps the spectrum symmetric
    E = diagonalize(H).eigenvalues
    assert np.allclose(E, -E[::-1], atol=1e-12)
    E0 = diagonalize(build_haldane(p, 0.0, 0.0)).eigenvalues
    assert np.allclose(E0, -E0[::-1], atol=1e-12)


@given(st.integers(1, 30), st.integers(0, 2**32))
def test_eigen_invariants(n, seed):
    H = random_hermitian(np.random.default_rng(seed), n)
    eig = diagonalize(H)
    V, w = eig.eigenvectors, eig.eigenvalues
    norm = np.linalg.norm(H, 2)
    assert np.all(np.diff(w) >= 0)
    assert np.max(np.linalg.norm(H @ V - V * w, axis=0)) <= 1e-10 * norm
    assert np.max(np.abs(V.conj().T @ V - np.eye(n))) <= 1e-10


def test_degenerate_ordering_is_deterministic():
    H = np.diag([1.0, 0.0, 1.0, 0.0])
    a, b = diagonalize(H), diagonalize(H.copy())
    assert np.array_equal(a.eigenvectors, b.eigenvectors)
    # ties broken by the earliest supported basis index
    assert np.argmax(np.abs(a.eigenvectors[:, 0])) == 1
    assert np.argmax(np.abs(a.eigenvectors[:, 1])) == 3


def test_rejects_non_hermitian():
    with pytest.raises(ValueError):
        diagonalize(np.array([[0, 1], [0, 0]], dtype=complex))


# --- fermi projection ------------------------------------------------------------


def test_projection_extremes(rng):
    eig = diagonalize(random_hermitian(rng, 8))
    low = fermi_projection(eig, eig.eigenvalues[0] - 1)
    high = fermi_projection(eig, eig.eigenvalues[-1] + 1)
    assert low.rank == 0 and np.all(low.matrix == 0)
    assert high.rank == 8 and np.allclose(high.matrix, np.eye(8), atol=1e-12)


def test_haldane_half_filling(haldane_clean_8):
    p, H, eig, P = haldane_clean_8
    assert P.rank == p.n_sites // 2


@given(st.integers(2, 25), st.integers(0, 2**32), st.floats(-3, 3))
def test_projection_invariants(n, seed, E_F):
    H = random_hermitian(np.random.default_rng(seed), n)
    P = fermi_projection(diagonalize(H), E_F)
    M = P.matrix
    assert np.max(np.abs(M @ M - M)) <= 1e-10
    assert np.max(np.abs(M - M.conj().T)) <= 1e-12
    assert abs(np.trace(M) - P.rank) <= 1e-8
    assert np.max(np.abs(M @ H - H @ M)) <= 1e-9 * np.linalg.norm(H, 2)


@given(st.integers(0, 2**32), st.lists(st.floats(-4, 4), min_size=2, max_size=8))
def test_rank_monotone(seed, energies):
    eig = diagonalize(random_hermitian(np.random.default_rng(seed), 12))
    ranks = [fermi_projection(eig, E).rank for E in sorted(energies)]
    assert ranks == sorted(ranks)


def test_closed_interval_and_degenerate_flag():
    eig = diagonalize(np.diag([-1.0, 0.0, 1.0]))
    P = fermi_projection(eig, 0.0)
    assert P.rank == 2 and P.degenerate
    assert not fermi_projection(eig, 0.5).degenerate


# --- chiral flatten ----------------------------------------------------------------


@pytest.mark.parametrize("method", ["eigh", "polar"])
def test_flatten_sigma_x(method):
    U = chiral_flatten(SX, SZ, method=method).matrix
    assert U.shape == (1, 1) and U[0, 0] == pytest.approx(1.0)


@pytest.mark.parametrize("method", ["eigh", "polar"])
def test_flatten_clean_wire_unitary(method):
    H = build_chiral_wire(build_chain(100), 0.5, 0.0, 0.0)
    U = chiral_flatten(H, chirality_operator(H.basis), method=method).matrix
    assert np.max(np.abs(U @ U.conj().T - np.eye(100))) <= 1e-10


def test_flatten_gapless_wire():
    # zero modes at m = 1 on rings with 4 | n
    H = build_chiral_wire(build_chain(8), 1.0, 0.0, 0.0)
    for method in ("eigh", "polar"):
        with pytest.raises(GaplessError):
            chiral_flatten(H, chirality_operator(H.basis), method=method)


def test_flatten_rejects_non_chiral():
    with pytest.raises(NotChiral):
        chiral_flatten(SX + 0.1 * SZ, SZ)


def test_flatten_dense_chirality_frame(rng):
    # a non-diagonal chirality operator in a rotated basis
    H = build_chiral_wire(build_chain(6), 0.4, 0.3, 0.2, sample_disorder(build_chain(6), 2)).matrix
    S = chirality_operator(build_chiral_wire(build_chain(6), 0, 0, 0).basis)
    Q, _ = np.linalg.qr(random_hermitian(rng, 12))
    U = chiral_flatten(Q @ H @ Q.conj().T, Q @ S @ Q.conj().T).matrix
    assert np.max(np.abs(U @ U.conj().T - np.eye(6))) <= 1e-10


@given(st.integers(3, 40), st.floats(-0.9, 0.9), st.floats(0, 1), st.integers(0, 2**32))
def test_flatten_reconstructs_sign(n, m, W, seed):
    p = build_chain(n)
    H = build_chiral_wire(p, m, W / 2, W, sample_disorder(p, seed))
    S = chirality_operator(H.basis)
    try:
        U = chiral_flatten(H, S, method="eigh").matrix
    except GaplessError:
        return
    plus, minus = np.arange(0, 2 * n, 2), np.arange(1, 2 * n, 2)
    sign = np.zeros((2 * n, 2 * n), dtype=complex)
    sign[np.ix_(minus, plus)] = U
    sign[np.ix_(plus, minus)] = U.conj().T
    w, V = np.linalg.eigh(H.matrix)
    assert np.max(np.abs(sign - (V * np.sign(w)) @ V.conj().T)) <= 1e-8
    Up = chiral_flatten(H, S, method="polar").matrix
    assert np.max(np.abs(U - Up)) <= 1e-8
