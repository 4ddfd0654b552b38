import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from blocktoeplitz.matfun import (
    CLAMP_FLOOR, NotHPDError, clamp_tracking, geometric_mean, hpd_factor, hpd_power, norm,
)
from blocktoeplitz.structured import toeplitz_from_symbol
from blocktoeplitz.symbols import essinf_probe

from conftest import random_spd

seeds = st.integers(min_value=0, max_value=2**32 - 1)


def rel(X, Y):
    return np.linalg.norm(X - Y) / np.linalg.norm(Y)


def test_power_examples():
    np.testing.assert_allclose(hpd_power(np.diag([4.0, 9.0]), 0.5), np.diag([2.0, 3.0]), atol=1e-15)
    for p in (-1, -0.5, 0.5, 1, 3.7):
        np.testing.assert_allclose(hpd_power(np.eye(3), p), np.eye(3), atol=1e-15)


def test_square_root_squares_back():
    A = random_spd(np.random.default_rng(1), 50)
    R = hpd_power(A, 0.5)
    assert np.linalg.norm(R @ R - A) <= 1e-9 * np.linalg.norm(A)


def test_factorization_reconstructs():
    A = random_spd(np.random.default_rng(2), 30, complex_=True)
    f = hpd_factor(A)
    Q = f.eigenvectors
    assert np.linalg.norm((Q * f.eigenvalues) @ Q.conj().T - A) <= 1e-10 * np.linalg.norm(A)


def test_geometric_mean_examples():
    np.testing.assert_allclose(geometric_mean(2 * np.eye(3), 8 * np.eye(3)), 4 * np.eye(3), atol=1e-14)
    np.testing.assert_allclose(geometric_mean(np.diag([1.0, 4.0]), np.diag([9.0, 16.0])),
                               np.diag([3.0, 8.0]), atol=1e-14)


def test_clamp_policy():
    A = np.diag([1.0, 1e-15])
    with clamp_tracking() as counts:
        f = hpd_factor(A)
    assert f.eigenvalues[0] == CLAMP_FLOOR
    assert counts == {"matrices": 1, "eigenvalues": 1}
    hpd_factor(np.diag([1.0, -5e-11]))  # inside the tolerated band
    with pytest.raises(NotHPDError):
        hpd_factor(np.diag([1.0, -1e-6]))


def test_non_hermitian_and_zero_are_rejected():
    with pytest.raises(NotHPDError):
        hpd_power(np.array([[1.0, 2.0], [0.0, 1.0]]), 0.5)
    with pytest.raises(NotHPDError):
        geometric_mean(np.eye(2), np.zeros((2, 2)))


@settings(max_examples=60, deadline=None)
@given(seeds, st.integers(min_value=1, max_value=100), st.booleans())
def test_mean_is_symmetric(seed, n, cplx):
    rng = np.random.default_rng(seed)
    A, B = random_spd(rng, n, cplx), random_spd(rng, n, cplx)
    G = geometric_mean(A, B)
    assert np.linalg.norm(G - geometric_mean(B, A)) <= 1e-9 * np.linalg.norm(G)
    np.testing.assert_allclose(G, G.conj().T, atol=0)


@settings(max_examples=60, deadline=None)
@given(seeds, st.integers(min_value=1, max_value=50))
def test_mean_is_idempotent(seed, n):
    A = random_spd(np.random.default_rng(seed), n)
    assert rel(geometric_mean(A, A), A) <= 1e-10


@settings(max_examples=60, deadline=None)
@given(seeds, st.integers(min_value=1, max_value=30))
def test_determinant_identity(seed, n):
    rng = np.random.default_rng(seed)
    A, B = random_spd(rng, n), random_spd(rng, n)
    _, lg = np.linalg.slogdet(geometric_mean(A, B))
    _, la = np.linalg.slogdet(A)
    _, lb = np.linalg.slogdet(B)
    assert abs(math.expm1(lg - (la + lb) / 2)) <= 1e-8


@settings(max_examples=60, deadline=None)
@given(seeds, st.integers(min_value=1, max_value=50))
def test_commuting_case(seed, n):
    rng = np.random.default_rng(seed)
    Q, _ = np.linalg.qr(rng.standard_normal((n, n)))
    a, b = rng.uniform(0.1, 10, n), rng.uniform(0.1, 10, n)
    A, B = (Q * a) @ Q.T, (Q * b) @ Q.T
    expected = (Q * np.sqrt(a * b)) @ Q.T
    assert rel(geometric_mean(A, B), expected) <= 1e-9


@settings(max_examples=40, deadline=None)
@given(seeds, st.integers(min_value=2, max_value=40))
def test_congruence_and_product_share_spectrum(seed, n):
    rng = np.random.default_rng(seed)
    A, B = random_spd(rng, n), random_spd(rng, n)
    R = hpd_power(A, -0.5)
    sym = np.linalg.eigvalsh(R @ B @ R)
    prod = np.sort(np.linalg.eigvals(np.linalg.solve(A, B)).real)
    np.testing.assert_allclose(sym, prod, rtol=1e-8, atol=1e-8)


def test_toeplitz_mean_norm_bounded_independently_of_n():
    f, g = "8-4*cos(t)", "t^2+1"
    flo, fhi = essinf_probe(f, 4096)
    _, ghi = essinf_probe(g, 4096)
    bound = fhi * math.sqrt(ghi) / math.sqrt(flo)
    for n in (16, 32, 64, 128, 256):
        G = geometric_mean(toeplitz_from_symbol(f, n), toeplitz_from_symbol(g, n))
        assert norm(G, "spectral") <= bound + 1e-8


def test_norm_examples():
    assert norm(np.eye(3)) == pytest.approx(math.sqrt(3))
    assert norm(np.diag([3.0, -4.0]), "spectral") == pytest.approx(4)
    assert norm(np.array([[0.0, 1.0], [0.0, 0.0]]), "schatten_1") == pytest.approx(1)
    M = np.random.default_rng(3).standard_normal((6, 6))
    assert norm(M, "schatten_p", p=2) == pytest.approx(norm(M))
    assert norm(M, "schatten_inf") == pytest.approx(norm(M, "spectral"))
    with pytest.raises(ValueError):
        norm(M, "schatten_p", p=0.5)
    with pytest.raises(ValueError):
        norm(M, "nuclear")
