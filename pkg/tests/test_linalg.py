import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given, strategies as st

from app.config.settings import settings
from app.core.exceptions import DimensionMismatchError, NotHermitianError
from app.core.linalg import (
    RationalPhase,
    basis_ket,
    hermitian_eigensystem,
    is_unitary,
    normalize_ket,
    partial_trace_b,
    phase_eval,
    tensor,
)


def test_rational_phase_reduces():
    assert RationalPhase(2, 4) == RationalPhase(1, 2)
    assert RationalPhase(0, 7) == RationalPhase()
    assert RationalPhase(-3, 6).turns == Fraction(-1, 2)


def test_rational_phase_rejects_bad_denominator():
    with pytest.raises(ValueError):
        RationalPhase(1, 0)


def test_quarter_turns_are_exact():
    assert RationalPhase(1, 4).evaluate() == 1j
    assert RationalPhase(1, 2).evaluate() == -1
    assert RationalPhase(3, 4).evaluate() == -1j
    assert (3 * RationalPhase.omega(1, 3)).evaluate() == 1


def test_omega_fractional_exponent():
    # ω^{1/3} at d=3 is exp(2πi/9)
    assert abs(RationalPhase.omega(Fraction(1, 3), 3).evaluate() - np.exp(2j * np.pi / 9)) < 1e-15
    assert phase_eval(RationalPhase.omega(1, 5)) == RationalPhase.omega(1, 5).evaluate()


@given(
    st.integers(-50, 50), st.integers(1, 40),
    st.integers(-50, 50), st.integers(1, 40),
)
def test_phase_addition_is_multiplication(a, b, c, e):
    p, q = RationalPhase(a, b), RationalPhase(c, e)
    assert abs((p + q).evaluate() - p.evaluate() * q.evaluate()) < 1e-12
    assert abs((p - q).evaluate() - p.evaluate() / q.evaluate()) < 1e-12
    assert abs((-p).evaluate() - np.conj(p.evaluate())) < 1e-12


@given(st.integers(-30, 30), st.integers(1, 30), st.integers(-5, 5))
def test_phase_integer_power(a, b, n):
    p = RationalPhase(a, b)
    assert abs((p * n).evaluate() - p.evaluate() ** n) < 1e-11
    assert n * p == p * n


def test_tensor_layout():
    A = np.array([[1, 2], [3, 4]], dtype=complex)
    B = np.array([[0, 1j], [1, 0]], dtype=complex)
    T = tensor(A, B)
    assert T.shape == (4, 4)
    # entry (i·rB + k, j·cB + l) = A[i, j]·B[k, l]
    assert T[1 * 2 + 0, 0 * 2 + 1] == A[1, 0] * B[0, 1]
    assert np.allclose(T, np.kron(A, B))


def test_tensor_of_kets():
    v = tensor(basis_ket(1, 3), basis_ket(2, 3))
    assert v.shape == (9,)
    assert np.argmax(np.abs(v)) == 1 * 3 + 2
    assert tensor(basis_ket(0, 2), np.eye(2)).shape == (2, 4)



def test_tensor_associative():
    # Gaussian-integer entries keep every product exact
    rng = np.random.default_rng(7)
    A, B, C = (
        rng.integers(-4, 5, size=shape) + 1j * rng.integers(-4, 5, size=shape)
        for shape in [(2, 3), (3, 2), (2, 2)]
    )
    assert np.array_equal(tensor(tensor(A, B), C), tensor(A, tensor(B, C)))

def test_tensor_limit(monkeypatch):
    monkeypatch.setattr(settings, "max_tensor_dim", 8)
    with pytest.raises(ValueError):
        tensor(np.eye(3), np.eye(3))


def test_tensor_rejects_non_finite():
    with pytest.raises(ValueError):
        tensor(np.array([[np.nan]]), np.eye(2))


def test_hermitian_eigensystem_ascending():
    M = np.array([[2, 1j], [-1j, 2]])
    values, vectors = hermitian_eigensystem(M)
    assert np.allclose(values, [1, 3])
    assert np.allclose(vectors.conj().T @ vectors, np.eye(2))
    assert np.allclose(M @ vectors, vectors * values)



@pytest.mark.parametrize("n", [2, 3, 9, 25])
def test_eigenvalues_sum_to_trace(n):
    rng = np.random.default_rng(n)
    X = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    M = X + X.conj().T
    values, _ = hermitian_eigensystem(M)
    assert abs(values.sum() - np.trace(M).real) <= 1e-9

def test_hermitian_eigensystem_rejects_non_hermitian():
    with pytest.raises(NotHermitianError) as info:
        hermitian_eigensystem(np.array([[0, 1], [0, 0]]))
    assert info.value.asymmetry == pytest.approx(1.0)


def test_hermitian_eigensystem_rejects_non_square():
    with pytest.raises(DimensionMismatchError):
        hermitian_eigensystem(np.zeros((2, 3)))


def test_is_unitary():
    assert is_unitary(np.array([[0, 1], [1, 0]], dtype=complex))
    assert not is_unitary(np.array([[1, 1], [0, 1]], dtype=complex))


def test_normalize_ket():
    v = normalize_ket(np.array([3, 4j]))
    assert math.isclose(np.linalg.norm(v), 1.0)
    with pytest.raises(ValueError):
        normalize_ket(np.zeros(3))


def test_partial_trace_of_maximally_entangled():
    d = 5
    psi = np.zeros(d * d, dtype=complex)
    psi[np.arange(d) * (d + 1)] = 1 / np.sqrt(d)
    assert np.allclose(partial_trace_b(psi, d), np.eye(d) / d, atol=1e-15)
    with pytest.raises(DimensionMismatchError):
        partial_trace_b(psi, 3)
