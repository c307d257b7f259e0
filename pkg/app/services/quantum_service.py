"""
量子 Bell 算符与违背

Bell operator B̂ = 1/(d−1) Σ_{n=1}^{d−1} Σ_{i,j} ω^{nij} Â_i^n ⊗ B̂_j^n, the
mutually unbiased settings and phase-shifted maximally entangled states for
d ∈ {2, 3, 5, 7, 11, 13, 17}, quantum expectations along three independent
paths, violation ratios and white-noise thresholds.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from functools import reduce
from typing import Dict, List, Optional, Tuple, Union

import numpy as np
from scipy.optimize import bisect

from app.core.exceptions import (
    DimensionMismatchError,
    NoViolationError,
    UnsupportedDimensionError,
)
from app.core.linalg import (
    CMatrix,
    Ket,
    RationalPhase,
    basis_ket,
    hermitian_eigensystem,
    max_asymmetry,
    normalize_ket,
    omega_powers,
    tensor,
    turn_phases,
)
from app.core.operators import MeasurementSetting, f_op, validate_prime_dim
from app.services.lhv_service import analytic_bounds
from app.utils.logger import setup_logger


logger = setup_logger("quantum_service")

_IMAG_TOL = 1e-10


@dataclass(frozen=True, eq=False)
class BellScenario:
    """Alice's and Bob's measurement settings (d per side)."""

    d: int
    alice: Tuple[MeasurementSetting, ...]
    bob: Tuple[MeasurementSetting, ...]

    def __post_init__(self) -> None:
        d = validate_prime_dim(self.d)
        object.__setattr__(self, "alice", tuple(self.alice))
        object.__setattr__(self, "bob", tuple(self.bob))
        if len(self.alice) != d or len(self.bob) != d:
            raise DimensionMismatchError(
                f"scenario for d={d} needs {d} settings per side, got {len(self.alice)} and {len(self.bob)}"
            )
        for s in self.alice + self.bob:
            if s.d != d:
                raise DimensionMismatchError(f"setting {s.label!r} has d={s.d}, scenario has d={d}")

    def alice_powers(self) -> np.ndarray:
        """Â_i^n stacked as [n−1, i], shape (d−1, d, d, d)."""
        return np.stack([s.powers() for s in self.alice], axis=1)

    def bob_powers(self) -> np.ndarray:
        return np.stack([s.powers() for s in self.bob], axis=1)


def correlation_coefficients(d: int) -> np.ndarray:
    """ω^{nij} as [n−1, i, j]."""
    n = np.arange(1, d)[:, None, None]
    i = np.arange(d)[None, :, None]
    j = np.arange(d)[None, None, :]
    return omega_powers(n * i * j, d)


def bell_operator_from_powers(alice_powers: np.ndarray, bob_powers: np.ndarray) -> CMatrix:
    d = alice_powers.shape[1]
    coef = correlation_coefficients(d)
    total = np.zeros((d * d, d * d), dtype=complex)
    for n in range(d - 1):
        for i in range(d):
            bob_sum = np.einsum("j,jab->ab", coef[n, i], bob_powers[n])
            total += tensor(alice_powers[n, i], bob_sum)
    return total / (d - 1)


def bell_operator(scenario: BellScenario) -> CMatrix:
    B = bell_operator_from_powers(scenario.alice_powers(), scenario.bob_powers())
    asym = max_asymmetry(B)
    if asym > 1e-10:
        logger.warning("Bell operator for d=%d deviates from Hermitian by %.2e", scenario.d, asym)
    return B


# ---------------------------------------------------------------------------
# Reference configuration: settings, phase shifter, state
# ---------------------------------------------------------------------------

def _sigma_y() -> CMatrix:
    return RationalPhase(1, 4).evaluate() * f_op(2, 1, 1)


def _bob_subscript(d: int, j: int) -> int:
    return ((d + 1) ** 2 // 2 * j) % d


def paper_settings(d: int) -> BellScenario:
    """
    d=2: Â_0 = B̂_0 = σx, Â_1 = B̂_1 = σy.
    d=3: Â = (f_10, ω² f_11, f_12), B̂ = (f_10, f_12, ω² f_11).
    d≥5: Â_j = ω^{j(j+1)} f_{1,j},  B̂_j = ω^{((d+1)/2)²(j²+2j)} f_{1,((d+1)²/2)j}.
    """
    d = validate_prime_dim(d)
    if d == 2:
        sx = MeasurementSetting.weyl(2, 1, 0, label="sigma_x")
        sy = MeasurementSetting.from_operator(2, _sigma_y(), label="sigma_y")
        return BellScenario(2, (sx, sy), (sx, sy))
    if d == 3:
        w2 = RationalPhase.omega(2, 3)
        alice = (
            MeasurementSetting.weyl(3, 1, 0, label="A0"),
            MeasurementSetting.weyl(3, 1, 1, prefactor=w2, label="A1"),
            MeasurementSetting.weyl(3, 1, 2, label="A2"),
        )
        bob = (
            MeasurementSetting.weyl(3, 1, 0, label="B0"),
            MeasurementSetting.weyl(3, 1, 2, label="B1"),
            MeasurementSetting.weyl(3, 1, 1, prefactor=w2, label="B2"),
        )
        return BellScenario(3, alice, bob)

    h2 = ((d + 1) // 2) ** 2
    alice = tuple(
        MeasurementSetting.weyl(d, 1, j, prefactor=RationalPhase.omega(j * (j + 1), d), label=f"A{j}")
        for j in range(d)
    )
    bob = tuple(
        MeasurementSetting.weyl(
            d, 1, _bob_subscript(d, j), prefactor=RationalPhase.omega(h2 * (j * j + 2 * j), d), label=f"B{j}"
        )
        for j in range(d)
    )
    return BellScenario(d, alice, bob)


def theta_k(d: int, k: int) -> Fraction:
    """
    Exponent θ_k of the phase shifter for odd prime d:

        θ_k/(dk) = c_d − g_d + (d+1)²/(4dk) Σ_{j=1}^k j²

    with c_d = (d−1)/8 for d ≡ 1, 7 (mod 8) and (d+3)/8 for d ≡ 3, 5 (mod 8);
    g_d = 1/(4d) for d ≡ 3, 7 (mod 8), else 0.  θ_0 = 0.
    """
    d = validate_prime_dim(d)
    if d == 2:
        raise UnsupportedDimensionError("theta_k is defined for odd prime d")
    if k < 0:
        raise ValueError(f"k must be non-negative, got {k}")
    if k == 0:
        return Fraction(0)
    residue = d % 8
    c_d = Fraction(d - 1, 8) if residue in (1, 7) else Fraction(d + 3, 8)
    g_d = Fraction(1, 4 * d) if residue in (3, 7) else Fraction(0)
    square_sum = k * (k + 1) * (2 * k + 1) // 6
    return d * k * (c_d - g_d) + Fraction((d + 1) ** 2, 4) * square_sum


def phase_shifter_phases(d: int) -> List[RationalPhase]:
    """Diagonal of the phase shifter P̂ acting on Bob's side of |ψ0⟩."""
    d = validate_prime_dim(d)
    if d == 2:
        # (−1)^{1/4} taken on the principal branch, exp(iπ/4)
        return [RationalPhase(0, 1), RationalPhase(1, 8)]
    if d == 3:
        return [RationalPhase.omega(Fraction(-k, 3), 3) for k in range(3)]
    return [RationalPhase.omega(-theta_k(d, k), d) for k in range(d)]


def phase_shifter(d: int) -> CMatrix:
    return np.diag([p.evaluate() for p in phase_shifter_phases(d)])


def maximally_entangled(d: int) -> Ket:
    """|ψ0⟩ = Σ_k |kk⟩/√d."""
    d = validate_prime_dim(d)
    return normalize_ket(sum(tensor(basis_ket(k, d), basis_ket(k, d)) for k in range(d)))


def paper_state(d: int) -> Ket:
    """|ψ⟩ = (1 ⊗ P̂)|ψ0⟩."""
    d = validate_prime_dim(d)
    psi = np.zeros(d * d, dtype=complex)
    psi[np.arange(d) * (d + 1)] = np.array([p.evaluate() for p in phase_shifter_phases(d)]) / math.sqrt(d)
    return psi


# ---------------------------------------------------------------------------
# Expectations
# ---------------------------------------------------------------------------

def _expectation_with_operator(state: Ket, B: CMatrix) -> float:
    value = complex(np.vdot(state, B @ state))
    if abs(value.imag) > _IMAG_TOL:
        logger.warning("Imaginary residue %.2e in Bell expectation", value.imag)
    return value.real


def quantum_expectation(state: Ket, scenario: BellScenario) -> float:
    """⟨ψ|B̂|ψ⟩ via the materialized d²×d² Bell operator."""
    state = np.asarray(state, dtype=complex)
    if state.shape != (scenario.d ** 2,):
        raise DimensionMismatchError(
            f"state of shape {state.shape} does not match d={scenario.d} scenario"
        )
    return _expectation_with_operator(state, bell_operator(scenario))


def _require_closed_form_dim(d: int) -> int:
    d = validate_prime_dim(d)
    if d < 5:
        raise UnsupportedDimensionError(f"closed-form expectation needs an odd prime d >= 5, got d={d}")
    return d


def expectation_closed_form(d: int) -> float:
    """
    1/(d(d−1)) Σ_{n=1}^{d−1} Σ_{i,j,p=0}^{d−1} ω^{ξ(i,j,p,n)} for the d ≥ 5 settings and state,
    with ξ carried as an exact rational:

        ξ = nij + n·i(i+1) + n·h²(j²+2j) + (i+m_j)·n(n−1)/2 + n(i+m_j)p + θ_{p+n} − θ_p

    h = (d+1)/2, m_j = ((d+1)²/2)·j mod d, p+n taken mod d.  Each term is
    ω^{nij}·⟨ψ|Â_i^n⊗B̂_j^n|ψ⟩ expanded on the computational basis.
    """
    d = _require_closed_form_dim(d)
    thetas = [theta_k(d, k) for k in range(d)]
    scale = reduce(math.lcm, (t.denominator for t in thetas), 1)
    theta_scaled = np.array([int(t * scale) for t in thetas], dtype=np.int64)

    h2 = ((d + 1) // 2) ** 2
    n = np.arange(1, d, dtype=np.int64)[:, None, None, None]
    i = np.arange(d, dtype=np.int64)[None, :, None, None]
    j = np.arange(d, dtype=np.int64)[None, None, :, None]
    p = np.arange(d, dtype=np.int64)[None, None, None, :]
    m = ((d + 1) ** 2 // 2 * j) % d

    integer_part = (
        n * i * j
        + n * i * (i + 1)
        + n * h2 * (j * j + 2 * j)
        + ((i + m) * n * (n - 1)) // 2
        + n * (i + m) * p
    ) % d
    state_part = theta_scaled[(p + n) % d] - theta_scaled[p]
    xi_scaled = integer_part * scale + state_part
    total = turn_phases(np.broadcast_to(xi_scaled, (d - 1, d, d, d)), d * scale).sum()
    value = total / (d * (d - 1))
    if abs(value.imag) > 1e-8:
        logger.warning("Closed-form expectation for d=%d has imaginary residue %.2e", d, value.imag)
    return float(value.real)


def expectation_gauss_sum(d: int) -> float:
    """
    Single-sum form of the d ≥ 5 expectation. Completing the square in the
    state index turns every (n, i, j) term into the same quadratic Gauss sum:

        ⟨ψ|B̂|ψ⟩ = d/(d−1) · G · Σ_{n=1}^{d−1} (n|d) ω^{(n³−n)/48 − g'n/4}

    with (n|d) the Legendre symbol, G = √d for d ≡ 1 (mod 4) and i√d for
    d ≡ 3 (mod 4), g' = 1 for d ≡ 3, 7 (mod 8) else 0; fractions are inverses in Z_d.
    """
    d = _require_closed_form_dim(d)
    inv48 = pow(48, -1, d)
    inv4 = pow(4, -1, d)
    g_flag = 1 if d % 8 in (3, 7) else 0
    total = 0j
    for n in range(1, d):
        legendre = 1 if pow(n, (d - 1) // 2, d) == 1 else -1
        exponent = (inv48 * (n ** 3 - n) - g_flag * inv4 * n) % d
        total += legendre * RationalPhase.omega(exponent, d).evaluate()
    gauss = math.sqrt(d) if d % 4 == 1 else 1j * math.sqrt(d)
    value = d / (d - 1) * gauss * total
    return float(complex(value).real)


def printed_xi_expectation(d: int) -> complex:
    """
    The quadruple sum with the exponent exactly as printed,

        ξ = −3n g_d + nij + n(n−1)i/2 + inp + (3/8)n(d−1) + (3/d)((d+1)/2)² C(j,p,n),
        C(j,p,n) = Σ_{k=1}^n (j+p+k)²,   ω^x = exp(i2πx/d).

    Kept as a diagnostic: i enters this exponent only linearly, so the i-sum
    collapses and |value| ≤ d, below the value of the settings it describes.
    """
    d = _require_closed_form_dim(d)
    h2 = ((d + 1) // 2) ** 2
    g_flag = 1 if d % 8 in (3, 7) else 0
    n = np.arange(1, d, dtype=np.int64)[:, None, None, None]
    i = np.arange(d, dtype=np.int64)[None, :, None, None]
    j = np.arange(d, dtype=np.int64)[None, None, :, None]
    p = np.arange(d, dtype=np.int64)[None, None, None, :]
    x = j + p
    c_sum = n * x * x + x * n * (n + 1) + n * (n + 1) * (2 * n + 1) // 6

    # ξ scaled by 8d: integers throughout, phase exp(i2π·scaled/(8d²))
    integer_terms = n * i * j + (n * (n - 1) // 2) * i + i * n * p
    scaled = (
        8 * d * integer_terms
        - 6 * n * g_flag
        + 3 * n * (d - 1) * d
        + 24 * h2 * c_sum
    )
    total = turn_phases(np.broadcast_to(scaled, (d - 1, d, d, d)), 8 * d * d).sum()
    return complex(total / (d * (d - 1)))


def max_eigenvalue(scenario: BellScenario) -> float:
    eigenvalues, _ = hermitian_eigensystem(bell_operator(scenario))
    return float(eigenvalues[-1])


def reference_expectation(d: int) -> float:
    return quantum_expectation(paper_state(d), paper_settings(d))


def violation_ratio(d: int) -> float:
    """Quantum value of the reference configuration over the classical upper bound."""
    return reference_expectation(d) / analytic_bounds(d)[1]


def buhrman_massar_cap(d: int = 3) -> float:
    """Non-tight quantum ceiling 3√3 for the qutrit Bell operator."""
    if d != 3:
        raise UnsupportedDimensionError("the Buhrman-Massar cap is only tabulated for d=3")
    return 3.0 * math.sqrt(3.0)


def phase_conjugation_check(d: int = 3) -> Dict[int, float]:
    """
    Max entrywise deviation of P̂†B̂_iP̂ from (ω^{1/12}/√3) Σ_j ω^{(i−j+1)j} f_{1j}, per i.
    """
    if d != 3:
        raise UnsupportedDimensionError("phase conjugation identity is stated for d=3")
    P = phase_shifter(3)
    scenario = paper_settings(3)
    prefactor = RationalPhase.omega(Fraction(1, 12), 3).evaluate() / math.sqrt(3)
    deviations: Dict[int, float] = {}
    for i, setting in enumerate(scenario.bob):
        lhs = P.conj().T @ setting.materialize() @ P
        rhs = prefactor * sum(
            RationalPhase.omega((i - j + 1) * j, 3).evaluate() * f_op(3, 1, j) for j in range(3)
        )
        deviations[i] = float(np.max(np.abs(lhs - rhs)))
    return deviations


# ---------------------------------------------------------------------------
# White noise
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class NoiseMixture:
    """ρ = p|ψ⟩⟨ψ| + (1−p)/d² · 1⊗1."""

    p: float
    pure_state: Ket

    def __post_init__(self) -> None:
        if not 0.0 <= self.p <= 1.0:
            raise ValueError(f"mixing weight p must lie in [0, 1], got {self.p}")
        state = np.asarray(self.pure_state, dtype=complex)
        if abs(np.linalg.norm(state) - 1.0) > 1e-12:
            raise ValueError("pure state must be normalized")
        object.__setattr__(self, "pure_state", state)

    @property
    def dim(self) -> int:
        return self.pure_state.shape[0]

    def density(self) -> CMatrix:
        psi = self.pure_state
        return self.p * np.outer(psi, psi.conj()) + (1.0 - self.p) / self.dim * np.eye(self.dim)


def mixed_expectation(mixture: NoiseMixture, bell: Union[BellScenario, CMatrix]) -> float:
    """Tr(ρ B̂); `bell` is a scenario or an already built operator."""
    if isinstance(bell, BellScenario):
        bell = bell_operator(bell)
    if bell.shape != (mixture.dim, mixture.dim):
        raise DimensionMismatchError(f"operator {bell.shape} does not act on dimension {mixture.dim}")
    return float(np.einsum("ab,ba->", mixture.density(), bell).real)


def bisect_noise_threshold(state: Ket, bell: CMatrix, classical_upper: float, xtol: float = 1e-12) -> float:
    """Root of Tr(ρ(p)B̂) − C on [0, 1] by bisection."""

    def excess(p: float) -> float:
        return mixed_expectation(NoiseMixture(p, state), bell) - classical_upper

    if excess(1.0) <= 0.0:
        raise ValueError("pure state does not exceed the classical bound; no root on [0, 1]")
    return float(bisect(excess, 0.0, 1.0, xtol=xtol, maxiter=200))


@dataclass(frozen=True)
class NoiseThreshold:
    d: int
    p_closed_form: float
    p_bisection: float
    agreement: float
    quantum_value: float
    classical_upper: float


def noise_threshold(d: int) -> NoiseThreshold:
    """
    Smallest p for which Tr(ρ(p)B̂) exceeds the classical upper bound.

    Tr B̂ = 0 for the reference settings, so p_min = C/Q; the bisection on the
    density-matrix trace is the model-independent check.

    Raises:
        NoViolationError: the pure state does not violate the inequality
    """
    d = validate_prime_dim(d)
    state = paper_state(d)
    bell = bell_operator(paper_settings(d))
    quantum_value = _expectation_with_operator(state, bell)
    classical_upper = analytic_bounds(d)[1]
    if quantum_value <= classical_upper:
        raise NoViolationError(d, quantum_value, classical_upper)

    p_closed = classical_upper / quantum_value
    p_bisect = bisect_noise_threshold(state, bell, classical_upper)
    agreement = abs(p_closed - p_bisect)
    if agreement > 1e-9:
        logger.warning("Noise threshold paths disagree for d=%d: %.3e", d, agreement)
    logger.info("Noise threshold d=%d: p_min=%.6f (bisection %.6f)", d, p_closed, p_bisect)
    return NoiseThreshold(
        d=d,
        p_closed_form=p_closed,
        p_bisection=p_bisect,
        agreement=agreement,
        quantum_value=quantum_value,
        classical_upper=classical_upper,
    )


# ---------------------------------------------------------------------------
# Aggregate evaluation for reports
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class QuantumResult:
    d: int
    quantum_value: float
    classical_lower: float
    classical_upper: float
    ratio: float
    violated: bool
    max_eigenvalue: float
    closed_form: Optional[float] = None
    gauss_sum: Optional[float] = None
    printed_xi: Optional[complex] = None


def evaluate_reference_configuration(d: int) -> QuantumResult:
    d = validate_prime_dim(d)
    scenario = paper_settings(d)
    bell = bell_operator(scenario)
    value = _expectation_with_operator(paper_state(d), bell)
    low, high = analytic_bounds(d)
    eigenvalues, _ = hermitian_eigensystem(bell)
    closed = gauss = printed = None
    if d >= 5:
        closed = expectation_closed_form(d)
        gauss = expectation_gauss_sum(d)
        printed = printed_xi_expectation(d)
    result = QuantumResult(
        d=d,
        quantum_value=value,
        classical_lower=low,
        classical_upper=high,
        ratio=value / high,
        violated=value > high,
        max_eigenvalue=float(eigenvalues[-1]),
        closed_form=closed,
        gauss_sum=gauss,
        printed_xi=printed,
    )
    logger.info(
        "d=%d: <B>=%.6f, classical max=%.6f, ratio=%.4f, violated=%s",
        d, value, high, result.ratio, result.violated,
    )
    return result
