"""Shared random generators for the test suite."""

from __future__ import annotations

import numpy as np

from oplebesgue import PsdMatrix


def random_unitary(rng, dim):
    x = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    q, r = np.linalg.qr(x)
    return q * (np.diagonal(r) / np.abs(np.diagonal(r)))


def random_psd(rng, dim, rank=None, ratio=1e3, scale=1.0):
    """Random complex PSD matrix with `rank` nonzero eigenvalues.

    Nonzero eigenvalues are log-uniform in [scale/ratio, scale], so the
    eigenvalue spread never exceeds `ratio`.
    """
    if rank is None:
        rank = dim
    if rank == 0:
        return PsdMatrix.zero(dim)
    q = random_unitary(rng, dim)
    lam = np.zeros(dim)
    lam[:rank] = scale * np.exp(rng.uniform(np.log(1.0 / ratio), 0.0, size=rank))
    m = (q * lam) @ q.conj().T
    return PsdMatrix((m + m.conj().T) / 2.0)


def random_pair(rng, max_dim=12, ratio=1e3):
    """Random (A, B) pair with uniformly drawn ranks, as used everywhere."""
    dim = int(rng.integers(1, max_dim + 1))
    ra = int(rng.integers(0, dim + 1))
    rb = int(rng.integers(0, dim + 1))
    return random_psd(rng, dim, ra, ratio), random_psd(rng, dim, rb, ratio)


def random_contraction(rng, dim, unit_eigs=0):
    """Random positive contraction, optionally with eigenvalues pinned at one."""
    q = random_unitary(rng, dim)
    lam = rng.uniform(0.0, 1.0, size=dim)
    lam[:unit_eigs] = 1.0
    m = (q * lam) @ q.conj().T
    return PsdMatrix((m + m.conj().T) / 2.0)
