"""Complex Hermitian PSD kernel: eigendecomposition, pseudoinverse, projections, Loewner order."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

__all__ = [
    "DEFAULT_TOL",
    "DimensionMismatchError",
    "EigenDecomposition",
    "NumericalError",
    "PsdMatrix",
    "Tolerances",
    "eig_hermitian",
    "loewner_leq",
    "pinv",
    "range_projection",
]


class NumericalError(RuntimeError):
    """A numerical routine failed to meet its accuracy contract.

    Carries the offending residual when one is available, so callers can
    report how far the computation was from its guarantee.
    """

    def __init__(self, message: str, residual: float | None = None):
        super().__init__(message)
        self.residual = residual


class DimensionMismatchError(ValueError):
    """Operands live on spaces of different dimension."""


@dataclass(frozen=True)
class Tolerances:
    """Numerical policy shared by every operation in the package.

    rank_rtol: relative eigenvalue cutoff for rank decisions (an eigenvalue
        counts as zero when it is at most ``rank_rtol`` times the largest).
    psd_slack: additive slack, scaled by matrix norm, for positivity and
        Loewner-order comparisons.
    iter_tol: stopping tolerance for iterative limits (trace increments).
    max_iter: cap on fixed-point iteration steps.
    recon_tol: tolerance for reconstruction and consistency residuals.
    """

    rank_rtol: float = 1e-10
    psd_slack: float = 1e-10
    iter_tol: float = 1e-10
    max_iter: int = 10**6
    recon_tol: float = 1e-9

    def __post_init__(self):
        for name in ("rank_rtol", "psd_slack", "iter_tol", "recon_tol"):
            value = getattr(self, name)
            if not (isinstance(value, (int, float)) and value > 0):
                raise ValueError(f"{name} must be strictly positive, got {value!r}")
        if not (isinstance(self.max_iter, int) and self.max_iter >= 1):
            raise ValueError(f"max_iter must be a positive integer, got {self.max_iter!r}")


DEFAULT_TOL = Tolerances()


class PsdMatrix:
    """Immutable complex Hermitian positive semidefinite matrix.

    Input is averaged with its conjugate transpose once the stored asymmetry
    is verified to be within ``recon_tol``; eigenvalues may dip below zero by
    at most ``psd_slack * (1 + max |eigenvalue|)``.  Real input is embedded
    with zero imaginary parts.
    """

    __slots__ = ("_entries",)

    def __init__(self, entries, tol: Tolerances = DEFAULT_TOL):
        m = np.array(entries, dtype=np.complex128)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise ValueError(f"expected a square matrix, got shape {m.shape}")
        if not np.all(np.isfinite(m)):
            raise ValueError("matrix entries must be finite")
        scale = 1.0 + float(np.linalg.norm(m))
        asym = float(np.linalg.norm(m - m.conj().T))
        if asym > tol.recon_tol * scale:
            raise ValueError(
                f"matrix is not Hermitian: asymmetry {asym:.3e} exceeds "
                f"{tol.recon_tol * scale:.3e}"
            )
        h = (m + m.conj().T) / 2.0
        if h.shape[0] > 0:
            w = _eigvalsh(h)
            largest = float(np.max(np.abs(w)))
            smallest = float(w[0])
            if smallest < -tol.psd_slack * (1.0 + largest):
                raise ValueError(
                    f"matrix is not positive semidefinite: smallest eigenvalue "
                    f"{smallest:.3e} below slack {-tol.psd_slack * (1.0 + largest):.3e}"
                )
        h.flags.writeable = False
        self._entries = h

    @classmethod
    def zero(cls, dim: int) -> PsdMatrix:
        return cls(np.zeros((dim, dim)))

    @classmethod
    def identity(cls, dim: int) -> PsdMatrix:
        return cls(np.eye(dim))

    @property
    def dim(self) -> int:
        return self._entries.shape[0]

    @property
    def entries(self) -> np.ndarray:
        """The stored Hermitian array (read-only view)."""
        return self._entries

    @property
    def trace(self) -> float:
        return float(np.trace(self._entries).real)

    @property
    def norm(self) -> float:
        """Frobenius norm."""
        return float(np.linalg.norm(self._entries))

    def __add__(self, other: PsdMatrix) -> PsdMatrix:
        if not isinstance(other, PsdMatrix):
            return NotImplemented
        require_same_dim(self, other)
        return PsdMatrix(self._entries + other._entries)

    def __mul__(self, scalar) -> PsdMatrix:
        if not isinstance(scalar, (int, float)):
            return NotImplemented
        if scalar < 0:
            raise ValueError("scaling a PSD matrix requires a nonnegative factor")
        return PsdMatrix(self._entries * scalar)

    __rmul__ = __mul__

    def __array__(self, dtype=None, copy=None):
        if dtype is not None:
            return self._entries.astype(dtype)
        return self._entries

    def __repr__(self):
        return f"PsdMatrix(dim={self.dim}, trace={self.trace:.6g})"


def require_same_dim(a: PsdMatrix, b: PsdMatrix) -> None:
    if a.dim != b.dim:
        raise DimensionMismatchError(f"dimension mismatch: {a.dim} vs {b.dim}")


@dataclass(frozen=True, eq=False)
class EigenDecomposition:
    """Spectral factorization M = V diag(w) V* with w sorted descending."""

    eigenvalues: np.ndarray
    vectors: np.ndarray

    def __post_init__(self):
        for arr in (self.eigenvalues, self.vectors):
            arr.flags.writeable = False


def _eigvalsh(h: np.ndarray) -> np.ndarray:
    try:
        return np.linalg.eigvalsh(h)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"eigensolver failed: {exc}") from exc


def eig_hermitian(m: PsdMatrix, tol: Tolerances = DEFAULT_TOL) -> EigenDecomposition:
    """Eigendecomposition of a Hermitian matrix, eigenvalues descending.

    The descending sort is stable, so degenerate eigenvalues keep the
    eigenvector order chosen by the underlying solver (identity input yields
    the identity basis).  Raises NumericalError carrying the residual if the
    reconstruction or unitarity check fails.
    """
    h = m.entries
    try:
        w, v = np.linalg.eigh(h)
    except np.linalg.LinAlgError as exc:
        raise NumericalError(f"eigensolver failed to converge: {exc}") from exc
    order = np.argsort(-w, kind="stable")
    w = np.ascontiguousarray(w[order])
    v = np.ascontiguousarray(v[:, order])
    scale = 1.0 + float(np.linalg.norm(h))
    recon = float(np.linalg.norm(h - (v * w) @ v.conj().T))
    if recon > tol.recon_tol * scale:
        raise NumericalError(
            f"eigendecomposition reconstruction residual {recon:.3e} exceeds "
            f"{tol.recon_tol * scale:.3e}",
            residual=recon,
        )
    ortho = float(np.linalg.norm(v.conj().T @ v - np.eye(h.shape[0])))
    if ortho > tol.recon_tol:
        raise NumericalError(
            f"eigenvector unitarity residual {ortho:.3e} exceeds {tol.recon_tol:.3e}",
            residual=ortho,
        )
    return EigenDecomposition(w, v)


def _support_mask(eigenvalues: np.ndarray, tol: Tolerances) -> np.ndarray:
    """True where an eigenvalue counts as nonzero under the relative rank cutoff."""
    if eigenvalues.size == 0:
        return np.zeros(0, dtype=bool)
    cutoff = tol.rank_rtol * max(float(eigenvalues[0]), 0.0)
    return eigenvalues > cutoff


def pinv(m: PsdMatrix, tol: Tolerances = DEFAULT_TOL) -> PsdMatrix:
    """Moore-Penrose pseudoinverse of a PSD matrix.

    Eigenvalues at most ``rank_rtol`` times the largest are treated as zero.
    """
    dec = eig_hermitian(m, tol)
    keep = _support_mask(dec.eigenvalues, tol)
    inv = np.zeros_like(dec.eigenvalues)
    inv[keep] = 1.0 / dec.eigenvalues[keep]
    return PsdMatrix((dec.vectors * inv) @ dec.vectors.conj().T, tol)


def range_projection(m: PsdMatrix, tol: Tolerances = DEFAULT_TOL) -> PsdMatrix:
    """Orthogonal projection onto the range of a PSD matrix (numerical rank)."""
    dec = eig_hermitian(m, tol)
    keep = _support_mask(dec.eigenvalues, tol)
    v = dec.vectors[:, keep]
    return PsdMatrix(v @ v.conj().T, tol)


def loewner_leq(a: PsdMatrix, b: PsdMatrix, tol: Tolerances = DEFAULT_TOL) -> bool:
    """Whether A is below B in the Loewner order, with norm-scaled slack.

    True iff the smallest eigenvalue of B - A is at least
    ``-psd_slack * (1 + ||B||_F)``.
    """
    require_same_dim(a, b)
    if a.dim == 0:
        return True
    w = _eigvalsh(b.entries - a.entries)
    return float(w[0]) >= -tol.psd_slack * (1.0 + b.norm)
