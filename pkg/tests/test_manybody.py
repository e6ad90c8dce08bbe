import itertools
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from nci import (CoefficientSpec, GeometryMismatch, HamiltonianMatrix, SectorTooLarge, SiteBasis, build_amorphous,
                 build_chain, build_fock_basis, build_from_spec, build_haldane,
                 build_honeycomb_disk, chern_pairing, current_operator, derive, diagonalize,
                 fermi_projection, mb_chern_pairing, mb_derive, mb_trace_per_volume,
                 number_operator, position_operator, represent, trace_per_volume,
                 wedge_projection)
from nci.manybody import window_sites

from oracles import fock_one_body, fock_two_body, free_fermion_pair_pairing, jordan_wigner


def hopping_spec(decay=1.0, rng_=1.6):
    def kernel(x, v):
        d = np.linalg.norm(x[0] - x[1])
        return (np.exp(-decay * d) + v[0] * (d == 0)) if d <= rng_ else 0.0
    return CoefficientSpec(kernel, rng_)


def pair_kernel(x, v):
    p1, p2, q1, q2 = x
    dists = [np.linalg.norm(a - b) for a, b in ((p1, p2), (q1, q2), (p1, q1), (p2, q2), (p1, q2), (p2, q1))]
    if max(dists) > 1.5:
        return 0.0
    return math.exp(-sum(dists[:4]))


@pytest.fixture(scope="module")
def small_open():
    return build_amorphous(8, 0.5, seed=21)


@pytest.fixture(scope="module")
def haldane_patch():
    p = build_honeycomb_disk(4.4)
    H = build_haldane(p, 0.6, 0.0)
    return p, H, fermi_projection(diagonalize(H), 0.0)


# --- Fock basis -------------------------------------------------------------------


def test_fock_basis_examples():
    p = build_chain(4)
    assert build_fock_basis(p, 2).states.tolist() == [[0, 1], [0, 2], [0, 3], [1, 2], [1, 3], [2, 3]]
    assert build_fock_basis(p, 1).states.tolist() == [[0], [1], [2], [3]]
    assert build_fock_basis(p, 4).dim == 1


@given(st.integers(2, 12), st.data())
def test_fock_basis_size_and_sign(S, data):
    N = data.draw(st.integers(1, S))
    b = build_fock_basis(build_chain(S), N)
    assert b.dim == math.comb(S, N)
    k = data.draw(st.integers(0, b.dim - 1))
    perm = data.draw(st.permutations(list(b.states[k])))
    idx, sign = b.index(perm)
    assert idx == k
    assert sign == np.linalg.det(np.eye(N)[np.argsort(perm)])


def test_sector_guard():
    with pytest.raises(SectorTooLarge):
        build_fock_basis(build_chain(40), 5)


# --- represent ----------------------------------------------------------------------


def test_one_body_matches_jordan_wigner(small_open, rng):
    S = small_open.n_sites
    h = rng.normal(size=(S, S)) + 1j * rng.normal(size=(S, S))
    for N in (1, 2, 3):
        basis = build_fock_basis(small_open, N)
        mb = represent(HamiltonianMatrix(SiteBasis(small_open), h), basis)
        assert np.max(np.abs(mb.matrix - fock_one_body(h, N))) <= 1e-12


def test_two_body_matches_jordan_wigner(small_open):
    p = small_open
    S = p.n_sites
    h2 = {}
    pairs = [(a, b) for a in range(S) for b in range(a + 1, S)]
    for P in pairs:
        for Q in pairs:
            x = p.positions[[P[0], P[1], Q[0], Q[1]]]
            v = pair_kernel(x, None)
            if v:
                h2[(P, Q)] = v
    assert h2
    spec = CoefficientSpec(pair_kernel, 1.5, body_order=2)
    for N in (2, 3):
        mb = represent(spec, build_fock_basis(p, N))
        assert np.max(np.abs(mb.matrix - fock_two_body(h2, N, S))) <= 1e-12
        assert np.max(np.abs(mb.matrix - mb.matrix.conj().T)) <= 1e-12


def test_two_body_vanishes_on_single_particles(small_open):
    spec = CoefficientSpec(pair_kernel, 1.5, body_order=2)
    assert np.all(represent(spec, build_fock_basis(small_open, 1)).matrix == 0)


def test_one_body_reduction_to_spec():
    p = build_chain(9)
    spec = hopping_spec()
    mb = represent(spec, build_fock_basis(p, 1))
    single = build_from_spec(SiteBasis(p), spec)
    assert np.max(np.abs(mb.matrix - single.matrix)) <= 1e-14


def test_free_fermion_spectrum():
    p = build_chain(10)
    spec = hopping_spec()
    h = build_from_spec(SiteBasis(p), spec).matrix
    lam = np.linalg.eigvalsh(h)
    for N in (2, 3):
        E = np.linalg.eigvalsh(represent(spec, build_fock_basis(p, N)).matrix)
        sums = sorted(sum(c) for c in itertools.combinations(lam, N))
        assert np.max(np.abs(np.sort(E) - np.array(sums))) <= 1e-9


def test_number_symmetry(small_open):
    b = build_fock_basis(small_open, 3)
    spec = CoefficientSpec(pair_kernel, 1.5, body_order=2)
    A = represent(spec, b).matrix
    Nop = number_operator(b).matrix
    assert np.max(np.abs(A @ Nop - Nop @ A)) <= 1e-14
    # in the full Fock space the Jordan-Wigner number operator commutes with the one-body term
    c = jordan_wigner(5)
    n_full = sum(ci.T @ ci for ci in c)
    hop = c[0].T @ c[3] + c[3].T @ c[0]
    assert np.max(np.abs(n_full @ hop - hop @ n_full)) == 0


# --- positions and derivations ---------------------------------------------------


def test_position_operator(small_open):
    b1 = build_fock_basis(small_open, 1)
    assert np.allclose(np.diag(position_operator(b1, 0).matrix), small_open.positions[:, 0])
    b2 = build_fock_basis(small_open, 2)
    X = np.diag(position_operator(b2, 1).matrix)
    x, y = b2.states[5]
    assert X[5] == pytest.approx(small_open.positions[x, 1] + small_open.positions[y, 1])
    Xm = position_operator(b2, 0).matrix
    assert np.all(Xm @ number_operator(b2).matrix == number_operator(b2).matrix @ Xm)


def test_position_rejects_torus():
    b = build_fock_basis(build_chain(5), 2)
    with pytest.raises(GeometryMismatch):
        position_operator(b, 0)
    assert position_operator(b, 0, allow_torus=True).meta["torus_caveat"]


def test_mb_derive_diagonal_and_paths(small_open, rng):
    b = build_fock_basis(small_open, 2)
    assert np.all(mb_derive(np.diag(rng.normal(size=b.dim)), 0, b).matrix == 0)
    A = rng.normal(size=(b.dim, b.dim)) * (rng.uniform(size=(b.dim, b.dim)) < 0.1)
    e = mb_derive(A, 0, b, method="entrywise").matrix
    c = mb_derive(A, 0, b, method="commutator").matrix
    assert np.max(np.abs(e - c)) <= 1e-12


def test_mb_derive_reduces_to_derive(haldane_patch):
    p, H, _ = haldane_patch
    b = build_fock_basis(p, 1)
    for j in (0, 1):
        assert np.max(np.abs(mb_derive(H.matrix, j, b).matrix - derive(H, j))) <= 1e-12
        assert np.max(np.abs(current_operator(H.matrix, j, b).matrix - derive(H, j))) <= 1e-12


@given(st.integers(0, 2**32))
def test_mb_leibniz(seed):
    rng = np.random.default_rng(seed)
    b = build_fock_basis(build_amorphous(7, 0.5, seed=3), 2)
    A = rng.normal(size=(b.dim, b.dim)) + 1j * rng.normal(size=(b.dim, b.dim))
    B = rng.normal(size=(b.dim, b.dim))
    d = lambda M: mb_derive(M, 1, b).matrix
    assert np.max(np.abs(d(A @ B) - d(A) @ B - A @ d(B))) <= 1e-10


# --- trace per volume ---------------------------------------------------------------


def test_mb_trace_counting():
    b = build_fock_basis(build_chain(10), 2)
    assert mb_trace_per_volume(np.eye(b.dim), basis=b) == pytest.approx(4.5)
    assert mb_trace_per_volume(number_operator(b)) == pytest.approx(2 * 45 / 10)


def test_mb_trace_reduces(haldane_patch):
    p, _, P = haldane_patch
    b = build_fock_basis(p, 1)
    assert mb_trace_per_volume(P.matrix, basis=b) == trace_per_volume(P)


# --- pairings -------------------------------------------------------------------------


def test_mb_pairing_zero(haldane_patch):
    p, _, _ = haldane_patch
    b = build_fock_basis(p, 2)
    assert mb_chern_pairing(np.zeros((b.dim, b.dim)), basis=b).value == 0


def test_mb_pairing_reduces(haldane_patch):
    p, _, P = haldane_patch
    single = chern_pairing(P)
    many = mb_chern_pairing(P.matrix, basis=build_fock_basis(p, 1))
    assert abs(single.value - many.value) <= 1e-10


def test_wedge_projection_matches_second_quantization():
    p = build_amorphous(7, 0.5, seed=8)
    H = build_from_spec(SiteBasis(p), hopping_spec())
    eig = diagonalize(H)
    P1 = fermi_projection(eig, np.median(eig.eigenvalues)).matrix
    assert 0 < np.trace(P1).real < 7
    dG = fock_one_body(P1, 2)
    oracle = (dG @ dG - dG) / 2
    W = wedge_projection(P1, build_fock_basis(p, 2)).matrix
    assert np.max(np.abs(W - oracle)) <= 1e-12
    assert np.max(np.abs(W @ W - W)) <= 1e-10


def test_two_particle_pairing_free_fermion_oracle(haldane_patch):
    p, _, P = haldane_patch
    b = build_fock_basis(p, 2)
    res = mb_chern_pairing(wedge_projection(P, b))
    oracle = free_fermion_pair_pairing(P.matrix, p.positions, window_sites(p), p.density)
    assert abs(res.value - oracle) <= 1e-9 * max(1.0, abs(oracle))
