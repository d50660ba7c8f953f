"""Hermitian PSD kernel: construction, eigendecomposition, pinv, projections, order."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oplebesgue import (
    DEFAULT_TOL,
    DimensionMismatchError,
    PsdMatrix,
    Tolerances,
    eig_hermitian,
    loewner_leq,
    pinv,
    range_projection,
)

from helpers import random_psd

SQ2 = 1.0 / np.sqrt(2.0)


def test_eig_identity():
    dec = eig_hermitian(PsdMatrix.identity(2))
    assert np.allclose(dec.eigenvalues, [1.0, 1.0])
    assert np.allclose(dec.vectors, np.eye(2))


def test_eig_diagonal():
    dec = eig_hermitian(PsdMatrix(np.diag([3.0, 1.0])))
    assert np.allclose(dec.eigenvalues, [3.0, 1.0])
    assert np.allclose(np.abs(dec.vectors), np.eye(2))


def test_eig_offdiagonal_hand_solution():
    # characteristic polynomial of [[2,1],[1,2]] gives 3, 1 with (1,1), (1,-1)
    dec = eig_hermitian(PsdMatrix([[2.0, 1.0], [1.0, 2.0]]))
    assert np.allclose(dec.eigenvalues, [3.0, 1.0])
    for col, expected in ((0, [SQ2, SQ2]), (1, [SQ2, -SQ2])):
        overlap = abs(np.vdot(expected, dec.vectors[:, col]))
        assert overlap == pytest.approx(1.0, abs=1e-12)


@pytest.mark.parametrize(
    "matrix,expected",
    [
        (np.diag([2.0, 0.0]), np.diag([0.5, 0.0])),
        (np.eye(2), np.eye(2)),
        ([[1.0, 1.0], [1.0, 1.0]], [[0.25, 0.25], [0.25, 0.25]]),
    ],
)
def test_pinv_examples(matrix, expected):
    assert np.allclose(pinv(PsdMatrix(matrix)).entries, expected, atol=1e-12)


@pytest.mark.parametrize(
    "matrix,expected",
    [
        (np.diag([2.0, 0.0]), np.diag([1.0, 0.0])),
        (np.zeros((2, 2)), np.zeros((2, 2))),
        ([[1.0, 1.0], [1.0, 1.0]], [[0.5, 0.5], [0.5, 0.5]]),
    ],
)
def test_range_projection_examples(matrix, expected):
    assert np.allclose(range_projection(PsdMatrix(matrix)).entries, expected, atol=1e-12)


def test_loewner_examples():
    assert loewner_leq(PsdMatrix.zero(2), PsdMatrix(np.diag([1.0, 2.0])))
    assert loewner_leq(PsdMatrix(np.diag([1.0, 2.0])), PsdMatrix(np.diag([2.0, 2.0])))
    # difference has eigenvalues +/- sqrt(2), so the order fails
    assert not loewner_leq(PsdMatrix(np.diag([2.0, 0.0])), PsdMatrix([[1.0, 1.0], [1.0, 1.0]]))


def test_loewner_dimension_mismatch():
    with pytest.raises(DimensionMismatchError):
        loewner_leq(PsdMatrix.identity(2), PsdMatrix.identity(3))


def test_eig_reconstruction_on_random_psd():
    rng = np.random.default_rng(11)
    for _ in range(25):
        dim = int(rng.integers(1, 11))
        m = random_psd(rng, dim, rank=int(rng.integers(0, dim + 1)))
        dec = eig_hermitian(m)
        scale = 1.0 + m.norm
        assert np.linalg.norm(m.entries - (dec.vectors * dec.eigenvalues) @ dec.vectors.conj().T) <= DEFAULT_TOL.recon_tol * scale
        assert np.linalg.norm(dec.vectors.conj().T @ dec.vectors - np.eye(dim)) <= DEFAULT_TOL.recon_tol
        assert np.all(np.diff(dec.eigenvalues) <= 0)


def test_pinv_moore_penrose_identities():
    rng = np.random.default_rng(12)
    for _ in range(25):
        dim = int(rng.integers(1, 11))
        m = random_psd(rng, dim, rank=int(rng.integers(0, dim + 1)))
        p = pinv(m).entries
        h = m.entries
        scale = DEFAULT_TOL.recon_tol * (1.0 + m.norm + np.linalg.norm(p))
        assert np.linalg.norm(h @ p @ h - h) <= scale
        assert np.linalg.norm(p @ h @ p - p) <= scale
        assert np.linalg.norm((h @ p).conj().T - h @ p) <= scale
        assert np.linalg.norm((p @ h).conj().T - p @ h) <= scale


def test_range_projection_properties():
    rng = np.random.default_rng(13)
    for _ in range(25):
        dim = int(rng.integers(1, 11))
        rank = int(rng.integers(0, dim + 1))
        m = random_psd(rng, dim, rank=rank)
        p = range_projection(m).entries
        scale = DEFAULT_TOL.recon_tol * (1.0 + m.norm)
        assert np.linalg.norm(p @ p - p) <= DEFAULT_TOL.recon_tol
        assert np.linalg.norm(p - p.conj().T) <= DEFAULT_TOL.recon_tol
        assert np.linalg.norm(p @ m.entries - m.entries) <= scale
        assert round(np.trace(p).real) == rank


def test_loewner_reflexive_and_chain():
    rng = np.random.default_rng(14)
    for _ in range(10):
        dim = int(rng.integers(1, 9))
        a = random_psd(rng, dim)
        p = random_psd(rng, dim, rank=int(rng.integers(0, dim + 1)))
        q = random_psd(rng, dim, rank=int(rng.integers(0, dim + 1)))
        assert loewner_leq(a, a)
        assert loewner_leq(a, a + p)
        assert loewner_leq(a + p, a + p + q)
        assert loewner_leq(a, a + p + q)


def test_construction_rejects_non_square():
    with pytest.raises(ValueError, match="square"):
        PsdMatrix(np.ones((2, 3)))


def test_construction_rejects_non_hermitian():
    with pytest.raises(ValueError, match="Hermitian"):
        PsdMatrix([[1.0, 1.0], [0.0, 1.0]])


def test_construction_rejects_indefinite():
    with pytest.raises(ValueError, match="positive semidefinite"):
        PsdMatrix(np.diag([1.0, -1.0]))


def test_construction_rejects_non_finite():
    with pytest.raises(ValueError, match="finite"):
        PsdMatrix(np.diag([1.0, np.inf]))


def test_construction_symmetrizes_tiny_asymmetry():
    m = PsdMatrix([[1.0, 1e-12], [0.0, 1.0]])
    assert np.array_equal(m.entries, m.entries.conj().T)


def test_entries_are_immutable():
    m = PsdMatrix.identity(2)
    with pytest.raises(ValueError):
        m.entries[0, 0] = 5.0


def test_zero_dimensional_matrix_supported():
    m = PsdMatrix(np.zeros((0, 0)))
    assert m.dim == 0 and m.trace == 0.0
    assert pinv(m).dim == 0
    assert loewner_leq(m, m)


def test_negative_scaling_rejected():
    with pytest.raises(ValueError, match="nonnegative"):
        (-1.0) * PsdMatrix.identity(2)


@given(
    rank_rtol=st.floats(1e-15, 1e-2),
    psd_slack=st.floats(1e-15, 1e-2),
    iter_tol=st.floats(1e-15, 1e-2),
    max_iter=st.integers(1, 10**9),
)
@settings(deadline=None, max_examples=50)
def test_tolerances_accept_positive_values(rank_rtol, psd_slack, iter_tol, max_iter):
    tol = Tolerances(rank_rtol=rank_rtol, psd_slack=psd_slack, iter_tol=iter_tol, max_iter=max_iter)
    assert tol.max_iter == max_iter


@pytest.mark.parametrize(
    "kwargs",
    [
        {"rank_rtol": 0.0},
        {"psd_slack": -1e-9},
        {"iter_tol": 0.0},
        {"recon_tol": -1.0},
        {"max_iter": 0},
    ],
)
def test_tolerances_reject_non_positive(kwargs):
    with pytest.raises(ValueError):
        Tolerances(**kwargs)


@given(st.integers(1, 6), st.integers(0, 2**32 - 1))
@settings(deadline=None, max_examples=40)
def test_gram_matrices_always_construct(dim, seed):
    # any X X* is PSD, whatever the draw
    rng = np.random.default_rng(seed)
    x = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    m = PsdMatrix(x @ x.conj().T)
    assert m.dim == dim
