"""
经典（局域隐变量）界

Deterministic strategies A_i = ω^{a_i}, B_j = ω^{b_j} are the extreme points of
the local polytope, so the classical bounds are the extrema of the Bell function
over integer assignments. The Bell function reduces to counting the congruences
a_i + b_j + ij ≡ 0 (mod d):

    B(λ) = d/(d−1) · (Δ − d),   Δ = Σ_{i,j} δ(a_i + b_j + ij)
"""
from __future__ import annotations

import itertools
import time
from dataclasses import dataclass
from fractions import Fraction
from typing import Tuple

import numpy as np

from app.config.settings import settings
from app.core.exceptions import DimensionMismatchError, UnsupportedDimensionError
from app.core.linalg import omega_powers
from app.core.operators import validate_prime_dim
from app.utils.logger import setup_logger


logger = setup_logger("lhv_service")


@dataclass(frozen=True)
class LhvAssignment:
    """One deterministic hidden-variable strategy (a_0..a_{d−1}, b_0..b_{d−1}) mod d."""

    d: int
    a: Tuple[int, ...]
    b: Tuple[int, ...]

    def __post_init__(self) -> None:
        d = validate_prime_dim(self.d)
        if len(self.a) != d or len(self.b) != d:
            raise DimensionMismatchError(
                f"assignment for d={d} needs {d} entries per side, got {len(self.a)} and {len(self.b)}"
            )
        object.__setattr__(self, "a", tuple(int(x) % d for x in self.a))
        object.__setattr__(self, "b", tuple(int(x) % d for x in self.b))

    def shifted(self, s: int) -> "LhvAssignment":
        """a_i → a_i + s, b_j → b_j − s; leaves Δ unchanged."""
        return LhvAssignment(self.d, tuple(x + s for x in self.a), tuple(x - s for x in self.b))

    def as_dict(self) -> dict:
        return {"a": list(self.a), "b": list(self.b)}


@dataclass(frozen=True)
class BoundsResult:
    d: int
    min_value: Fraction
    max_value: Fraction
    argmin: LhvAssignment | None = None
    argmax: LhvAssignment | None = None
    assignments_scanned: int = 0
    method: str = "analytic"


def delta_matrix(asg: LhvAssignment) -> np.ndarray:
    """Residues a_i + b_j + ij mod d, row i for Alice's setting."""
    d = asg.d
    i = np.arange(d)
    return (np.array(asg.a)[:, None] + np.array(asg.b)[None, :] + np.outer(i, i)) % d


def delta_count(asg: LhvAssignment) -> int:
    return int(np.count_nonzero(delta_matrix(asg) == 0))


def _value_from_delta(d: int, delta: int) -> Fraction:
    return Fraction(d, d - 1) * (delta - d)


def bell_value_lhv_exact(asg: LhvAssignment) -> Fraction:
    return _value_from_delta(asg.d, delta_count(asg))


def bell_value_lhv(asg: LhvAssignment) -> float:
    return float(bell_value_lhv_exact(asg))


def bell_value_direct(asg: LhvAssignment) -> float:
    """
    The defining sum 1/(d−1) Σ_{n=1}^{d−1} Σ_{i,j} ω^{nij} A_i^n B_j^n evaluated in
    complex arithmetic; real part after the n-sum.
    """
    d = asg.d
    n = np.arange(1, d)[:, None, None]
    i = np.arange(d)[None, :, None]
    j = np.arange(d)[None, None, :]
    a = np.array(asg.a)[None, :, None]
    b = np.array(asg.b)[None, None, :]
    total = omega_powers(n * (i * j + a + b), d).sum()
    return float(total.real) / (d - 1)


def analytic_bounds_exact(d: int) -> Tuple[Fraction, Fraction]:
    """
    (−d²/(d−1), d(2d−3)/(d−1)) from Δ_min = 0 and Δ_max = 3d − 3.

    d=2 is the exception on the low side: the four residues a_i + b_j + ij sum
    to an odd number, so at least one vanishes and Δ_min = 1 (CHSH bound −2).
    """
    d = validate_prime_dim(d)
    delta_min = 1 if d == 2 else 0
    return _value_from_delta(d, delta_min), _value_from_delta(d, 3 * d - 3)


def analytic_bounds(d: int) -> Tuple[float, float]:
    low, high = analytic_bounds_exact(d)
    return float(low), float(high)


def _strategy_table(d: int, length: int) -> np.ndarray:
    """All integer vectors of the given length mod d, lexicographic, shape (d**length, length)."""
    return np.array(list(itertools.product(range(d), repeat=length)), dtype=np.int64).reshape(-1, length)


def brute_force_bounds_exact(d: int) -> BoundsResult:
    """
    Exhaustive extrema over deterministic strategies with a_0 = 0 (shift symmetry).

    For every Bob strategy b the table T[b, i, v] = #{j : b_j + ij ≡ v} is built
    once; Δ(a, b) = Σ_i T[b, i, −a_i mod d] then covers all Alice strategies by
    fancy indexing.
    """
    d = validate_prime_dim(d)
    if d > settings.brute_force_max_d:
        raise UnsupportedDimensionError(
            f"brute force enumeration is limited to d <= {settings.brute_force_max_d} "
            f"({d}^{2 * d - 1} assignments for d={d}); use analytic_bounds instead"
        )
    started = time.perf_counter()
    bob = _strategy_table(d, d)
    alice_tail = _strategy_table(d, d - 1)
    alice = np.hstack([np.zeros((alice_tail.shape[0], 1), dtype=np.int64), alice_tail])

    j = np.arange(d)
    residues = (bob[:, None, :] + np.outer(np.arange(d), j)[None, :, :]) % d
    table = np.stack([(residues == v).sum(axis=2) for v in range(d)], axis=2)

    delta = np.zeros((bob.shape[0], alice.shape[0]), dtype=np.int64)
    for i in range(d):
        delta += table[:, i, (-alice[:, i]) % d]

    flat_min, flat_max = int(np.argmin(delta)), int(np.argmax(delta))
    b_min, a_min = np.unravel_index(flat_min, delta.shape)
    b_max, a_max = np.unravel_index(flat_max, delta.shape)
    result = BoundsResult(
        d=d,
        min_value=_value_from_delta(d, int(delta[b_min, a_min])),
        max_value=_value_from_delta(d, int(delta[b_max, a_max])),
        argmin=LhvAssignment(d, tuple(alice[a_min]), tuple(bob[b_min])),
        argmax=LhvAssignment(d, tuple(alice[a_max]), tuple(bob[b_max])),
        assignments_scanned=int(delta.size),
        method="brute",
    )
    logger.info(
        "Brute force d=%d: scanned %d assignments in %.2fs, bounds [%s, %s]",
        d,
        result.assignments_scanned,
        time.perf_counter() - started,
        result.min_value,
        result.max_value,
    )
    return result


def brute_force_bounds(d: int) -> Tuple[float, float, LhvAssignment, LhvAssignment]:
    result = brute_force_bounds_exact(d)
    return float(result.min_value), float(result.max_value), result.argmin, result.argmax
