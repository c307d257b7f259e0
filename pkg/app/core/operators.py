"""
Generalized Pauli operators for a prime-dimensional system, the f_ij = X^i Z^j
operator basis, measurement settings with ω-valued spectra and the
mutual-unbiasedness test.

All operator subscripts are reduced to least non-negative residues mod d.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple, Union

import numpy as np

from app.config.settings import settings
from app.core.exceptions import (
    DimensionMismatchError,
    InvalidSettingError,
    UnsupportedDimensionError,
)
from app.core.linalg import (
    CMatrix,
    Ket,
    RationalPhase,
    hermitian_eigensystem,
    is_unitary,
    omega_powers,
)

SUPPORTED_DIMENSIONS: Tuple[int, ...] = (2, 3, 5, 7, 11, 13, 17)

BasisLike = Union[np.ndarray, Sequence[Ket]]


def is_prime(n: int) -> bool:
    if n < 2:
        return False
    return all(n % p for p in range(2, math.isqrt(n) + 1))


def validate_prime_dim(d: int) -> int:
    """Return d if it is a supported prime dimension, else raise UnsupportedDimensionError."""
    if isinstance(d, bool) or not isinstance(d, (int, np.integer)):
        raise UnsupportedDimensionError(f"dimension must be an integer, got {d!r}")
    d = int(d)
    if not is_prime(d):
        raise UnsupportedDimensionError(f"d={d} is not prime")
    if d not in SUPPORTED_DIMENSIONS:
        raise UnsupportedDimensionError(
            f"d={d} is outside the supported range {SUPPORTED_DIMENSIONS}"
        )
    return d


def omega(d: int) -> complex:
    return RationalPhase.omega(1, d).evaluate()


def pauli_x(d: int) -> CMatrix:
    """Cyclic shift X|k⟩ = |k+1⟩."""
    d = validate_prime_dim(d)
    X = np.zeros((d, d), dtype=complex)
    k = np.arange(d)
    X[(k + 1) % d, k] = 1.0
    return X


def pauli_z(d: int) -> CMatrix:
    """Clock Z|k⟩ = ω^k|k⟩."""
    d = validate_prime_dim(d)
    return np.diag(omega_powers(np.arange(d), d))


def weyl_exponents(d: int, i: int, j: int) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    Nonzero pattern of f_ij = X^i Z^j: (rows, cols, exponents) with
    f_ij[rows[k], cols[k]] = ω^{exponents[k]}, exponents exact integers mod d.
    """
    i, j = i % d, j % d
    cols = np.arange(d)
    rows = (cols + i) % d
    exponents = (j * cols) % d
    return rows, cols, exponents


def f_op(d: int, i: int, j: int) -> CMatrix:
    """f_ij = X^i Z^j with subscripts taken mod d."""
    d = validate_prime_dim(d)
    rows, cols, exponents = weyl_exponents(d, i, j)
    F = np.zeros((d, d), dtype=complex)
    F[rows, cols] = omega_powers(exponents, d)
    return F


def f1i_eigenbasis(d: int, i: int) -> List[Ket]:
    """Qutrit eigenstates |k⟩_i = (1/√3) Σ_l ω^{−i l² − k l} |l⟩ of f_{1i}."""
    if d != 3:
        raise UnsupportedDimensionError(
            "closed-form eigenbasis of f_1i is only available for d=3; "
            "use eigenbasis_of_unitary for other dimensions"
        )
    l = np.arange(3)
    return [
        omega_powers(-i * l**2 - k * l, 3) / math.sqrt(3)
        for k in range(3)
    ]


def _as_columns(basis: BasisLike) -> np.ndarray:
    if isinstance(basis, np.ndarray) and basis.ndim == 2:
        return basis.astype(complex)
    return np.column_stack([np.asarray(v, dtype=complex) for v in basis])


def basis_overlaps(basis_a: BasisLike, basis_b: BasisLike) -> np.ndarray:
    """|⟨a_k|b_l⟩|² for all pairs."""
    A, B = _as_columns(basis_a), _as_columns(basis_b)
    if A.shape != B.shape:
        raise DimensionMismatchError(f"bases have shapes {A.shape} and {B.shape}")
    return np.abs(A.conj().T @ B) ** 2


def is_mutually_unbiased(basis_a: BasisLike, basis_b: BasisLike, tol: float | None = None) -> bool:
    tol = settings.mub_tol if tol is None else tol
    overlaps = basis_overlaps(basis_a, basis_b)
    d = overlaps.shape[0]
    return bool(np.all(np.abs(overlaps - 1.0 / d) <= tol))


def eigenbasis_of_unitary(U: CMatrix, d: int) -> Tuple[np.ndarray, Tuple[int, ...]]:
    """
    Eigenbasis of a unitary whose spectrum is {ω^0..ω^(d−1)}, columns ordered so
    that column k carries eigenvalue ω^k.

    The Hermitian part of exp(−iπ/2d)·U has d distinct eigenvalues for such a
    spectrum, so its eigenvectors diagonalize U.
    """
    U = np.asarray(U, dtype=complex)
    if U.shape != (d, d):
        raise DimensionMismatchError(f"expected a {d}x{d} operator, got {U.shape}")
    if not is_unitary(U, tol=1e-10):
        raise InvalidSettingError("operator is not unitary")
    tilt = np.exp(-1j * np.pi / (2 * d))
    H = 0.5 * (tilt * U + (tilt * U).conj().T)
    _, V = hermitian_eigensystem(H, tol=1e-9)
    eigenvalues = np.einsum("ak,ab,bk->k", V.conj(), U, V)
    exponents = np.mod(np.rint(np.angle(eigenvalues) * d / (2 * np.pi)).astype(int), d)
    deviation = np.max(np.abs(eigenvalues - omega_powers(exponents, d)))
    if deviation > 1e-9:
        raise InvalidSettingError(
            f"spectrum is not contained in the d-th roots of unity (deviation {deviation:.2e})"
        )
    if len(set(exponents.tolist())) != d:
        raise InvalidSettingError("spectrum is degenerate; the measurement is not complete")
    order = np.argsort(exponents)
    return V[:, order], tuple(range(d))


@dataclass(frozen=True, eq=False)
class MeasurementSetting:
    """
    测量设置：M = prefactor · Σ_k ω^{e_k} |v_k⟩⟨v_k|.

    `source`, when present, is the unit operator the setting was built from;
    materialization then uses it verbatim instead of re-synthesizing from the
    basis, so the eigenvalue ordering of the basis never enters the operator.
    """

    d: int
    basis: np.ndarray
    eigenvalue_exponents: Tuple[int, ...]
    prefactor: RationalPhase = field(default_factory=RationalPhase)
    source: Optional[np.ndarray] = None
    label: str = ""

    def __post_init__(self) -> None:
        d = validate_prime_dim(self.d)
        basis = _as_columns(self.basis)
        if basis.shape != (d, d):
            raise DimensionMismatchError(f"basis must be {d}x{d}, got {basis.shape}")
        gram_error = float(np.max(np.abs(basis.conj().T @ basis - np.eye(d))))
        if gram_error > 1e-10:
            raise InvalidSettingError(f"basis is not orthonormal (Gram error {gram_error:.2e})")
        exponents = tuple(int(e) % d for e in self.eigenvalue_exponents)
        if len(exponents) != d or len(set(exponents)) != d:
            raise InvalidSettingError(
                f"eigenvalue exponents {self.eigenvalue_exponents} must assign d distinct powers of ω"
            )
        object.__setattr__(self, "basis", basis)
        object.__setattr__(self, "eigenvalue_exponents", exponents)
        if self.source is not None:
            source = np.asarray(self.source, dtype=complex)
            if source.shape != (d, d) or not is_unitary(source, tol=1e-10):
                raise InvalidSettingError("source operator must be a d x d unitary")
            object.__setattr__(self, "source", source)

    @classmethod
    def from_basis(
        cls,
        basis: BasisLike,
        exponents: Optional[Sequence[int]] = None,
        prefactor: Optional[RationalPhase] = None,
        label: str = "",
    ) -> "MeasurementSetting":
        columns = _as_columns(basis)
        d = columns.shape[0]
        return cls(
            d=d,
            basis=columns,
            eigenvalue_exponents=tuple(range(d)) if exponents is None else tuple(exponents),
            prefactor=prefactor or RationalPhase(),
            label=label,
        )

    @classmethod
    def from_operator(
        cls,
        d: int,
        unit: CMatrix,
        prefactor: Optional[RationalPhase] = None,
        label: str = "",
    ) -> "MeasurementSetting":
        basis, exponents = eigenbasis_of_unitary(unit, d)
        return cls(
            d=d,
            basis=basis,
            eigenvalue_exponents=exponents,
            prefactor=prefactor or RationalPhase(),
            source=unit,
            label=label,
        )

    @classmethod
    def weyl(
        cls, d: int, i: int, j: int, prefactor: Optional[RationalPhase] = None, label: str = ""
    ) -> "MeasurementSetting":
        """prefactor · f_ij."""
        return cls.from_operator(d, f_op(d, i, j), prefactor, label or f"f_{i % d},{j % d}")

    @classmethod
    def standard(cls, d: int) -> "MeasurementSetting":
        """Computational-basis measurement, i.e. Z."""
        return cls.from_basis(np.eye(d), label="Z")

    def conjugated(self, U: CMatrix, label: str = "") -> "MeasurementSetting":
        """U M U†: same spectrum and prefactor, rotated basis."""
        U = np.asarray(U, dtype=complex)
        return MeasurementSetting(
            d=self.d,
            basis=U @ self.basis,
            eigenvalue_exponents=self.eigenvalue_exponents,
            prefactor=self.prefactor,
            source=None if self.source is None else U @ self.source @ U.conj().T,
            label=label or self.label,
        )

    def unit_operator(self) -> CMatrix:
        if self.source is not None:
            return self.source
        V = self.basis
        return (V * omega_powers(np.array(self.eigenvalue_exponents), self.d)) @ V.conj().T

    def materialize(self) -> CMatrix:
        return self.prefactor.evaluate() * self.unit_operator()

    def power(self, n: int) -> CMatrix:
        """M^n with the prefactor power kept symbolic: (c·U)^n = c^n·U^n."""
        if self.source is None:
            V = self.basis
            exps = n * np.array(self.eigenvalue_exponents)
            unit_n = (V * omega_powers(exps, self.d)) @ V.conj().T
        else:
            unit_n = np.linalg.matrix_power(self.source, n)
        return (self.prefactor * n).evaluate() * unit_n

    def powers(self) -> np.ndarray:
        """Stack of M^1 .. M^(d−1), shape (d−1, d, d)."""
        return np.stack([self.power(n) for n in range(1, self.d)])


def materialize(setting: MeasurementSetting) -> CMatrix:
    return setting.materialize()
