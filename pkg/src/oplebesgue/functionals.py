"""Representable functionals on finite direct sums of matrix algebras.

A functional is stored through its block densities, w(a) = sum_k tr(rho_k a_k).
The GNS construction, parallel sum, and Lebesgue decomposition all reduce to
the form machinery over the matrix-unit basis.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import DEFAULT_TOL, PsdMatrix, Tolerances, eig_hermitian
from .forms import SesquilinearForm, form_decompose, form_parallel_sum
from .lebesgue import Method

__all__ = [
    "AlgebraElement",
    "Functional",
    "FunctionalDecomposition",
    "GnsTriplet",
    "StarAlgebra",
    "evaluate",
    "functional_decompose",
    "functional_from_form",
    "functional_parallel_sum",
    "gns",
    "induced_form",
]


@dataclass(frozen=True)
class StarAlgebra:
    """Unital *-algebra given as a direct sum of full complex matrix blocks.

    The involution is the blockwise conjugate transpose and the unit is the
    identity in every block.
    """

    block_dims: tuple[int, ...]

    def __post_init__(self):
        dims = tuple(int(n) for n in self.block_dims)
        object.__setattr__(self, "block_dims", dims)
        if not dims:
            raise ValueError("algebra needs at least one block")
        if any(n < 1 for n in dims):
            raise ValueError("block dimensions must be positive")

    @property
    def total_dim(self) -> int:
        return sum(n * n for n in self.block_dims)

    def element(self, blocks) -> AlgebraElement:
        return AlgebraElement(self, tuple(np.asarray(blk, dtype=np.complex128) for blk in blocks))

    def zero(self) -> AlgebraElement:
        return self.element([np.zeros((n, n)) for n in self.block_dims])

    def unit(self) -> AlgebraElement:
        return self.element([np.eye(n) for n in self.block_dims])

    def matrix_unit(self, block: int, i: int, j: int) -> AlgebraElement:
        blocks = [np.zeros((n, n)) for n in self.block_dims]
        blocks[block][i, j] = 1.0
        return self.element(blocks)

    def matrix_units(self) -> list[AlgebraElement]:
        """The canonical basis, ordered blockwise and row-major inside blocks."""
        return [
            self.matrix_unit(k, i, j)
            for k, n in enumerate(self.block_dims)
            for i in range(n)
            for j in range(n)
        ]

    def basis_labels(self) -> tuple[str, ...]:
        return tuple(
            f"b{k}:e{i},{j}"
            for k, n in enumerate(self.block_dims)
            for i in range(n)
            for j in range(n)
        )

    def coefficients(self, a: AlgebraElement) -> np.ndarray:
        """Coordinates of an element in the matrix-unit basis."""
        return np.concatenate([blk.reshape(-1) for blk in a.blocks])

    def from_coefficients(self, coeffs) -> AlgebraElement:
        coeffs = np.asarray(coeffs, dtype=np.complex128).reshape(-1)
        if coeffs.size != self.total_dim:
            raise ValueError(f"expected {self.total_dim} coefficients, got {coeffs.size}")
        blocks = []
        offset = 0
        for n in self.block_dims:
            blocks.append(coeffs[offset : offset + n * n].reshape(n, n))
            offset += n * n
        return self.element(blocks)


@dataclass(frozen=True, eq=False)
class AlgebraElement:
    algebra: StarAlgebra
    blocks: tuple[np.ndarray, ...]

    def __post_init__(self):
        if len(self.blocks) != len(self.algebra.block_dims):
            raise ValueError("block count does not match the algebra")
        frozen = []
        for blk, n in zip(self.blocks, self.algebra.block_dims):
            arr = np.array(blk, dtype=np.complex128)
            if arr.shape != (n, n):
                raise ValueError(f"block of shape {arr.shape} does not match dimension {n}")
            arr.flags.writeable = False
            frozen.append(arr)
        object.__setattr__(self, "blocks", tuple(frozen))

    def star(self) -> AlgebraElement:
        return self.algebra.element([blk.conj().T for blk in self.blocks])

    def __mul__(self, other: AlgebraElement) -> AlgebraElement:
        if not isinstance(other, AlgebraElement):
            return NotImplemented
        _require_same_algebra(self.algebra, other.algebra)
        return self.algebra.element([p @ q for p, q in zip(self.blocks, other.blocks)])

    def __add__(self, other: AlgebraElement) -> AlgebraElement:
        if not isinstance(other, AlgebraElement):
            return NotImplemented
        _require_same_algebra(self.algebra, other.algebra)
        return self.algebra.element([p + q for p, q in zip(self.blocks, other.blocks)])

    def __sub__(self, other: AlgebraElement) -> AlgebraElement:
        if not isinstance(other, AlgebraElement):
            return NotImplemented
        _require_same_algebra(self.algebra, other.algebra)
        return self.algebra.element([p - q for p, q in zip(self.blocks, other.blocks)])

    def __rmul__(self, scalar) -> AlgebraElement:
        if not isinstance(scalar, (int, float, complex)):
            return NotImplemented
        return self.algebra.element([scalar * blk for blk in self.blocks])


def _require_same_algebra(a: StarAlgebra, b: StarAlgebra) -> None:
    if a != b:
        raise ValueError(f"algebra mismatch: {a.block_dims} vs {b.block_dims}")


@dataclass(frozen=True, eq=False)
class Functional:
    """Positive functional w(a) = sum_k trace(rho_k a_k) with PSD densities."""

    algebra: StarAlgebra
    densities: tuple[PsdMatrix, ...]

    def __post_init__(self):
        if len(self.densities) != len(self.algebra.block_dims):
            raise ValueError("density count does not match the algebra")
        for rho, n in zip(self.densities, self.algebra.block_dims):
            if rho.dim != n:
                raise ValueError(f"density of dimension {rho.dim} does not match block {n}")

    def __call__(self, a: AlgebraElement) -> complex:
        return evaluate(self, a)


def evaluate(w: Functional, a: AlgebraElement) -> complex:
    """w(a) as the sum of blockwise traces against the densities."""
    _require_same_algebra(w.algebra, a.algebra)
    return complex(
        sum(np.trace(rho.entries @ blk) for rho, blk in zip(w.densities, a.blocks))
    )


def functional_from_densities(algebra: StarAlgebra, densities, tol: Tolerances = DEFAULT_TOL) -> Functional:
    """Build a functional from raw per-block density arrays."""
    return Functional(algebra, tuple(PsdMatrix(d, tol) for d in densities))


def induced_form(w: Functional, tol: Tolerances = DEFAULT_TOL) -> SesquilinearForm:
    """The form t(a, b) = w(b* a) over the matrix-unit basis.

    On a full matrix block with density rho the Gram restricts to
    kron(I, rho^T), since w(E_ij* E_kl) = delta_ik rho[l, j].
    """
    algebra = w.algebra
    gram = np.zeros((algebra.total_dim, algebra.total_dim), dtype=np.complex128)
    offset = 0
    for rho, n in zip(w.densities, algebra.block_dims):
        gram[offset : offset + n * n, offset : offset + n * n] = np.kron(
            np.eye(n), rho.entries.T
        )
        offset += n * n
    return SesquilinearForm(algebra.basis_labels(), PsdMatrix(gram, tol))


@dataclass(frozen=True, eq=False)
class GnsTriplet:
    """Cyclic representation (H_w, pi_w, zeta_w) with w(a) = <pi_w(a) zeta, zeta>.

    The space is the algebra modulo the kernel of the induced form; elements
    are represented by left multiplication expressed in an orthonormal basis
    of equivalence classes of matrix units.
    """

    algebra: StarAlgebra
    space_dim: int
    cyclic_vector: np.ndarray
    _to_coords: np.ndarray
    _from_coords: np.ndarray

    def __post_init__(self):
        for arr in (self.cyclic_vector, self._to_coords, self._from_coords):
            arr.flags.writeable = False

    def represent(self, a: AlgebraElement) -> np.ndarray:
        """The matrix of pi_w(a) on the GNS space."""
        _require_same_algebra(self.algebra, a.algebra)
        return self._to_coords @ _left_regular(a) @ self._from_coords


def _left_regular(a: AlgebraElement) -> np.ndarray:
    """Matrix of left multiplication by a on the coefficient space."""
    algebra = a.algebra
    out = np.zeros((algebra.total_dim, algebra.total_dim), dtype=np.complex128)
    offset = 0
    for blk, n in zip(a.blocks, algebra.block_dims):
        out[offset : offset + n * n, offset : offset + n * n] = np.kron(blk, np.eye(n))
        offset += n * n
    return out


def gns(w: Functional, tol: Tolerances = DEFAULT_TOL) -> GnsTriplet:
    """GNS construction for a block-density functional.

    The kernel of the induced form is detected with the relative rank cutoff;
    the cyclic vector is the class of the unit.
    """
    algebra = w.algebra
    dec = eig_hermitian(induced_form(w, tol).gram, tol)
    eigs = dec.eigenvalues
    cutoff = tol.rank_rtol * max(float(eigs[0]), 0.0) if eigs.size else 0.0
    keep = eigs > cutoff
    lam = eigs[keep]
    v = dec.vectors[:, keep]
    rank = int(lam.size)
    to_coords = np.sqrt(lam)[:, None] * v.conj().T
    from_coords = v / np.sqrt(lam) if rank else v
    zeta = to_coords @ algebra.coefficients(algebra.unit())
    return GnsTriplet(algebra, rank, zeta, to_coords, from_coords)


def _density_from_values(values: np.ndarray, n: int, tol: Tolerances) -> PsdMatrix:
    """Rebuild one block density from functional values on its matrix units.

    trace(rho E_ij) = rho[j, i]; the result is symmetrized and eigenvalues
    within psd_slack below zero are clipped to zero.
    """
    rho = np.empty((n, n), dtype=np.complex128)
    for i in range(n):
        for j in range(n):
            rho[j, i] = values[i * n + j]
    rho = (rho + rho.conj().T) / 2.0
    eigs, vecs = np.linalg.eigh(rho)
    scale = 1.0 + float(np.max(np.abs(eigs))) if eigs.size else 1.0
    clipped = np.where((eigs < 0.0) & (eigs >= -tol.psd_slack * scale), 0.0, eigs)
    return PsdMatrix((vecs * clipped) @ vecs.conj().T, tol)


def functional_from_form(
    algebra: StarAlgebra, form: SesquilinearForm, tol: Tolerances = DEFAULT_TOL
) -> Functional:
    """Recover the functional with a given induced form via w(a) = t(a, unit)."""
    if form.basis_labels != algebra.basis_labels():
        raise ValueError("form is not indexed by the algebra's matrix-unit basis")
    unit_coeffs = algebra.coefficients(algebra.unit())
    values = unit_coeffs.conj() @ form.gram.entries
    densities = []
    offset = 0
    for n in algebra.block_dims:
        densities.append(_density_from_values(values[offset : offset + n * n], n, tol))
        offset += n * n
    return Functional(algebra, tuple(densities))


def functional_parallel_sum(
    w: Functional, v: Functional, tol: Tolerances = DEFAULT_TOL
) -> Functional:
    """Parallel sum of functionals through their induced forms."""
    _require_same_algebra(w.algebra, v.algebra)
    summed = form_parallel_sum(induced_form(w, tol), induced_form(v, tol), tol)
    return functional_from_form(w.algebra, summed, tol)


@dataclass(frozen=True, eq=False)
class FunctionalDecomposition:
    """Splitting w = ac + sing into v-absolutely continuous and v-singular
    representable parts; unpacks as the pair (ac, sing)."""

    ac: Functional
    sing: Functional
    method: Method
    iterations: int
    residual: float
    converged: bool = True

    def __iter__(self):
        return iter((self.ac, self.sing))


def functional_decompose(
    w: Functional,
    v: Functional,
    method: Method | str = Method.DIRECT,
    tol: Tolerances = DEFAULT_TOL,
) -> FunctionalDecomposition:
    """Lebesgue decomposition of w with respect to v.

    Decomposes the induced forms and recovers both parts as block-density
    functionals; the singular part satisfies sing : v = 0.
    """
    _require_same_algebra(w.algebra, v.algebra)
    dec = form_decompose(induced_form(w, tol), induced_form(v, tol), method, tol)
    return FunctionalDecomposition(
        functional_from_form(w.algebra, dec.ac, tol),
        functional_from_form(w.algebra, dec.sing, tol),
        dec.method,
        dec.iterations,
        dec.residual,
        dec.converged,
    )
