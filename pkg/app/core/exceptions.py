"""Domain exceptions. Each carries the CLI exit code it maps to."""


class QuditBellError(Exception):
    exit_code = 1


class UnsupportedDimensionError(QuditBellError, ValueError):
    """Non-prime or out-of-range d, or an operation restricted to other d."""

    exit_code = 2


class DimensionMismatchError(QuditBellError, ValueError):
    exit_code = 2


class NotHermitianError(QuditBellError, ValueError):
    exit_code = 2

    def __init__(self, asymmetry: float, tol: float):
        super().__init__(
            f"matrix is not Hermitian: max |M - M^dagger| = {asymmetry:.3e} exceeds {tol:.1e}"
        )
        self.asymmetry = asymmetry
        self.tol = tol


class InvalidSettingError(QuditBellError, ValueError):
    """Measurement setting with a non-orthonormal basis or non-unitary operator."""

    exit_code = 2


class NoViolationError(QuditBellError, RuntimeError):
    """The quantum value does not exceed the classical bound, so no noise threshold exists."""

    exit_code = 3

    def __init__(self, d: int, quantum_value: float, classical_upper: float):
        super().__init__(
            f"no violation for d={d}: quantum value {quantum_value:.6f} <= classical bound "
            f"{classical_upper:.6f}, threshold undefined"
        )
        self.d = d
        self.quantum_value = quantum_value
        self.classical_upper = classical_upper
