"""
Dense complex linear algebra and exact phase arithmetic.

Phases travel as exact rationals (turns) through operator construction and are
evaluated to floating complex numbers only when a matrix entry is materialized.
Matrices and kets are plain numpy complex128 arrays.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Tuple, Union

import numpy as np

from app.config.settings import settings
from app.core.exceptions import DimensionMismatchError, NotHermitianError

CMatrix = np.ndarray
Ket = np.ndarray

Rational = Union[int, Fraction]

_QUARTER_TURNS = (1 + 0j, 1j, -1 + 0j, -1j)


@dataclass(frozen=True)
class RationalPhase:
    """exp(i·2π·numerator/denominator), kept in reduced form."""

    numerator: int = 0
    denominator: int = 1

    def __post_init__(self) -> None:
        if self.denominator <= 0:
            raise ValueError(f"denominator must be positive, got {self.denominator}")
        g = math.gcd(abs(self.numerator), self.denominator)
        num, den = self.numerator // g, self.denominator // g
        if num == 0:
            den = 1
        object.__setattr__(self, "numerator", num)
        object.__setattr__(self, "denominator", den)

    @classmethod
    def from_turns(cls, turns: Rational) -> "RationalPhase":
        t = Fraction(turns)
        return cls(t.numerator, t.denominator)

    @classmethod
    def omega(cls, t: Rational, d: int) -> "RationalPhase":
        """ω^t with ω = exp(i2π/d); fractional t is the principal value exp(i2πt/d)."""
        return cls.from_turns(Fraction(t) / d)

    @property
    def turns(self) -> Fraction:
        return Fraction(self.numerator, self.denominator)

    def __add__(self, other: "RationalPhase") -> "RationalPhase":
        return RationalPhase.from_turns(self.turns + other.turns)

    def __sub__(self, other: "RationalPhase") -> "RationalPhase":
        return RationalPhase.from_turns(self.turns - other.turns)

    def __neg__(self) -> "RationalPhase":
        return RationalPhase(-self.numerator, self.denominator)

    def __mul__(self, n: int) -> "RationalPhase":
        if not isinstance(n, int):
            return NotImplemented
        return RationalPhase(self.numerator * n, self.denominator)

    __rmul__ = __mul__

    def evaluate(self) -> complex:
        r = self.turns % 1
        quarters = 4 * r
        if quarters.denominator == 1:
            return _QUARTER_TURNS[int(quarters)]
        angle = 2.0 * math.pi * float(r)
        return complex(math.cos(angle), math.sin(angle))

    def __str__(self) -> str:
        return f"exp(2πi·{self.numerator}/{self.denominator})"


def phase_eval(p: RationalPhase) -> complex:
    return p.evaluate()


def omega_powers(exponents: np.ndarray, d: int) -> np.ndarray:
    """Entrywise ω^e for an integer array e, reduced mod d before evaluation."""
    reduced = np.mod(np.asarray(exponents, dtype=np.int64), d)
    return np.exp(2j * np.pi * reduced / d)


def turn_phases(scaled_turns: np.ndarray, denominator: int) -> np.ndarray:
    """exp(i2π·m/denominator) for an integer array m (exact reduction, one float step)."""
    reduced = np.mod(np.asarray(scaled_turns, dtype=np.int64), denominator)
    return np.exp(2j * np.pi * reduced / denominator)


def check_finite(M: np.ndarray, name: str = "matrix") -> None:
    if not np.all(np.isfinite(M)):
        raise ValueError(f"{name} contains NaN or Inf entries")


def max_asymmetry(M: CMatrix) -> float:
    return float(np.max(np.abs(M - M.conj().T))) if M.size else 0.0


def is_unitary(M: CMatrix, tol: float | None = None) -> bool:
    tol = settings.unitary_tol if tol is None else tol
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        return False
    eye = np.eye(M.shape[0])
    return float(np.max(np.abs(M.conj().T @ M - eye))) <= tol


def tensor(A: CMatrix, B: CMatrix) -> CMatrix:
    """
    Kronecker product, row-major: entry (i·rB + k, j·cB + l) = A[i, j]·B[k, l].
    Two kets give a ket of length len(A)·len(B).

    Raises:
        ValueError: non-finite input, or a result with more than
            settings.max_tensor_dim rows or columns
    """
    A = np.asarray(A, dtype=complex)
    B = np.asarray(B, dtype=complex)
    check_finite(A, "A")
    check_finite(B, "B")
    A2, B2 = np.atleast_2d(A), np.atleast_2d(B)
    rows = A2.shape[0] * B2.shape[0]
    cols = A2.shape[1] * B2.shape[1]
    if max(rows, cols) > settings.max_tensor_dim:
        raise ValueError(
            f"tensor product of {A.shape} and {B.shape} exceeds max dimension {settings.max_tensor_dim}"
        )
    if A.ndim == 1 and B.ndim == 1:
        return np.kron(A, B)
    return np.kron(A2, B2)


def hermitian_eigensystem(M: CMatrix, tol: float | None = None) -> Tuple[np.ndarray, np.ndarray]:
    """
    Eigenvalues (ascending) and orthonormal eigenvector columns of a Hermitian matrix.

    Raises:
        DimensionMismatchError: M is not square
        NotHermitianError: ‖M − M†‖_max above tol (default settings.hermitian_tol)
    """
    M = np.asarray(M, dtype=complex)
    if M.ndim != 2 or M.shape[0] != M.shape[1]:
        raise DimensionMismatchError(f"eigensystem needs a square matrix, got shape {M.shape}")
    check_finite(M)
    tol = settings.hermitian_tol if tol is None else tol
    asym = max_asymmetry(M)
    if asym > tol:
        raise NotHermitianError(asym, tol)
    eigenvalues, eigenvectors = np.linalg.eigh(0.5 * (M + M.conj().T))
    return eigenvalues, eigenvectors


def ket_norm(psi: Ket) -> float:
    return float(np.linalg.norm(psi))


def normalize_ket(psi: Ket) -> Ket:
    norm = ket_norm(psi)
    if norm == 0.0:
        raise ValueError("cannot normalize the zero vector")
    return np.asarray(psi, dtype=complex) / norm


def basis_ket(index: int, dim: int) -> Ket:
    v = np.zeros(dim, dtype=complex)
    v[index] = 1.0
    return v


def coefficient_matrix(psi: Ket, d: int) -> np.ndarray:
    """Reshape a d²-dim bipartite ket Σ Ψ_ab |a⟩|b⟩ into Ψ (row-major, Alice index first)."""
    psi = np.asarray(psi, dtype=complex)
    if psi.shape != (d * d,):
        raise DimensionMismatchError(f"expected a ket of dimension {d * d}, got shape {psi.shape}")
    return psi.reshape(d, d)


def partial_trace_b(psi: Ket, d: int) -> CMatrix:
    """Alice's marginal density operator Tr_B |ψ⟩⟨ψ|."""
    Psi = coefficient_matrix(psi, d)
    return Psi @ Psi.conj().T
