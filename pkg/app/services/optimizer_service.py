"""
态与测量优化

Gradient ascent of the Bell value over local unitary conjugations of the
measurement settings, for a fixed bipartite pure state. Each of the 2d settings
moves as M → U M U† with U = exp(iΣ_k x_k G_k) over the generalized Gell-Mann
generators, so spectra stay fixed at the ω-roots.

Also: Schmidt points and their entanglement entropy, the route sweeps through
the Schmidt simplex and the barycentric triangle grid.
"""
from __future__ import annotations

import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from typing import Dict, Iterator, List, Literal, Optional, Sequence, Tuple

import numpy as np
from scipy.linalg import expm
from scipy.stats import entropy

from app.core.exceptions import DimensionMismatchError
from app.core.linalg import Ket, coefficient_matrix, ket_norm
from app.core.operators import validate_prime_dim
from app.core.schemas import OptimizerConfig
from app.services.quantum_service import (
    BellScenario,
    correlation_coefficients,
    paper_settings,
    phase_shifter,
)
from app.utils.logger import setup_logger


logger = setup_logger("optimizer_service")

Route = Literal["r1", "r2"]

_ARMIJO = 1e-4
_MIN_STEP = 1e-14


# ---------------------------------------------------------------------------
# Schmidt points
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SchmidtPoint:
    """Schmidt coefficients c_0..c_{d−1} of Σ c_i |ii⟩."""

    d: int
    c: Tuple[float, ...]

    def __post_init__(self) -> None:
        d = validate_prime_dim(self.d)
        c = tuple(float(x) for x in self.c)
        if len(c) != d:
            raise DimensionMismatchError(f"need {d} Schmidt coefficients, got {len(c)}")
        if not all(math.isfinite(x) for x in c):
            raise ValueError(f"Schmidt coefficients must be finite, got {c}")
        if min(c) < 0.0:
            raise ValueError(f"Schmidt coefficients must be non-negative, got {c}")
        norm_sq = math.fsum(x * x for x in c)
        if abs(norm_sq - 1.0) > 1e-12:
            raise ValueError(f"squared Schmidt coefficients sum to {norm_sq!r}, expected 1")
        object.__setattr__(self, "c", c)

    @classmethod
    def from_squares(cls, c_squared: Sequence[float]) -> "SchmidtPoint":
        squares = np.clip(np.asarray(c_squared, dtype=float), 0.0, None)
        total = float(squares.sum())
        if not math.isfinite(total) or total <= 0.0:
            raise ValueError(f"squared Schmidt coefficients must have a positive finite sum, got {list(c_squared)}")
        return cls(len(squares), tuple(np.sqrt(squares / total)))

    @classmethod
    def uniform(cls, d: int) -> "SchmidtPoint":
        return cls.from_squares([1.0] * d)

    @property
    def squares(self) -> Tuple[float, ...]:
        return tuple(x * x for x in self.c)


def schmidt_state(pt: SchmidtPoint) -> Ket:
    """Σ c_i |ii⟩ as a d²-dimensional ket."""
    d = pt.d
    psi = np.zeros(d * d, dtype=complex)
    psi[np.arange(d) * (d + 1)] = pt.c
    norm = ket_norm(psi)
    if abs(norm - 1.0) > 1e-10:
        raise ValueError(f"Schmidt state has norm {norm}, expected 1")
    return psi


def entanglement_entropy(pt: SchmidtPoint) -> float:
    """−Σ c_i² log_d c_i², with 0·log 0 = 0."""
    return float(entropy(np.asarray(pt.squares), base=pt.d))


def schmidt_frame(state: Ket, d: int) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """
    |ψ⟩ = (W ⊗ Z̄) Σ_k s_k |kk⟩ with s sorted descending.

    Returns (W, Z̄, s).
    """
    W, s, Zh = np.linalg.svd(coefficient_matrix(state, d))
    return W, Zh.T, s


# ---------------------------------------------------------------------------
# Generators and the local chart
# ---------------------------------------------------------------------------

def su_generators(d: int) -> np.ndarray:
    """Generalized Gell-Mann matrices, shape (d²−1, d, d), Tr G_k G_l = 2δ_kl."""
    gens: List[np.ndarray] = []
    for j in range(d):
        for k in range(j + 1, d):
            sym = np.zeros((d, d), dtype=complex)
            sym[j, k] = sym[k, j] = 1.0
            anti = np.zeros((d, d), dtype=complex)
            anti[j, k], anti[k, j] = -1j, 1j
            gens.extend([sym, anti])
    for l in range(1, d):
        diag = np.zeros(d, dtype=complex)
        diag[:l] = 1.0
        diag[l] = -l
        gens.append(np.diag(diag * math.sqrt(2.0 / (l * (l + 1)))))
    return np.stack(gens)


def unitaries_from_coefficients(x: np.ndarray, generators: np.ndarray) -> np.ndarray:
    """exp(iΣ_k x_{s,k} G_k) for each row s of x."""
    H = np.einsum("sk,kab->sab", x, generators)
    return expm(1j * H)


class BellLandscape:
    """
    The Bell value of a fixed state as a function of the 2d local rotations.

    Settings are parameterized by unitary stacks UA, UB of shape (d, d, d):
    Â_i^n → UA_i Â_i^n UA_i†, likewise for Bob. With Ψ the coefficient matrix
    of the state, ⟨ψ|A⊗B|ψ⟩ = Tr(Ψ† A Ψ Bᵀ).
    """

    def __init__(self, state: Ket, base: BellScenario):
        self.d = base.d
        self.base = base
        self.psi = coefficient_matrix(state, self.d)
        self.alice_base = base.alice_powers()
        self.bob_base = base.bob_powers()
        self.coef = correlation_coefficients(self.d)
        self.generators = su_generators(self.d)

    def identity(self) -> np.ndarray:
        return np.broadcast_to(np.eye(self.d, dtype=complex), (self.d, self.d, self.d)).copy()

    @staticmethod
    def _rotate(U: np.ndarray, powers: np.ndarray) -> np.ndarray:
        return np.einsum("iab,nibc,idc->niad", U, powers, U.conj())

    def powers(self, UA: np.ndarray, UB: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        return self._rotate(UA, self.alice_base), self._rotate(UB, self.bob_base)

    def value(self, UA: np.ndarray, UB: np.ndarray) -> float:
        PA, PB = self.powers(UA, UB)
        psi = self.psi
        V = np.einsum("ce,nica,ab,njeb->nij", psi.conj(), PA, psi, PB)
        return float(np.sum(self.coef * V).real) / (self.d - 1)

    def hermitian_gradients(self, UA: np.ndarray, UB: np.ndarray) -> Tuple[float, np.ndarray, np.ndarray]:
        """
        Value and the traceless Hermitian gradients G_s per setting, defined by
        d/dε f(exp(iεH)·M_s·exp(−iεH)) = Tr(H G_s) at ε = 0.
        """
        d = self.d
        PA, PB = self.powers(UA, UB)
        psi = self.psi
        # R[n, j] = Ψ (B_j^n)ᵀ Ψ†,  L[n, i] = Ψᵀ (A_i^n)ᵀ Ψ̄
        R = np.einsum("ab,njcb,dc->njad", psi, PB, psi.conj())
        L = np.einsum("ba,nicb,cd->niad", psi, PA, psi.conj())
        M = np.einsum("nij,njab->niab", self.coef, R)
        N = np.einsum("nij,niab->njab", self.coef, L)
        value = float(np.einsum("niab,niba->", PA, M).real) / (d - 1)

        KA = np.einsum("niab,nibc->iac", PA, M) - np.einsum("niab,nibc->iac", M, PA)
        KB = np.einsum("njab,njbc->jac", PB, N) - np.einsum("njab,njbc->jac", N, PB)
        return value, self._hermitian_part(KA / (d - 1)), self._hermitian_part(KB / (d - 1))

    def _hermitian_part(self, K: np.ndarray) -> np.ndarray:
        G = 0.5j * (K - np.conj(np.swapaxes(K, -1, -2)))
        trace = np.einsum("sii->s", G)[:, None, None] / self.d
        return G - trace * np.eye(self.d)

    def coefficient_gradient(self, UA: np.ndarray, UB: np.ndarray) -> Tuple[float, np.ndarray]:
        """Value and ∂f/∂x_{s,k} at x = 0, shape (2d, d²−1); rows 0..d−1 are Alice."""
        value, GA, GB = self.hermitian_gradients(UA, UB)
        G = np.concatenate([GA, GB])
        return value, np.einsum("kab,sba->sk", self.generators, G).real

    def finite_difference_gradient(self, UA: np.ndarray, UB: np.ndarray, step: float) -> Tuple[float, np.ndarray]:
        """Central differences over the same generator coefficients."""
        d = self.d
        ngen = self.generators.shape[0]
        grad = np.zeros((2 * d, ngen))
        for s in range(2 * d):
            for k in range(ngen):
                shifted = []
                for sign in (1.0, -1.0):
                    rotation = expm(1j * sign * step * self.generators[k])
                    ua, ub = UA.copy(), UB.copy()
                    if s < d:
                        ua[s] = rotation @ ua[s]
                    else:
                        ub[s - d] = rotation @ ub[s - d]
                    shifted.append(self.value(ua, ub))
                grad[s, k] = (shifted[0] - shifted[1]) / (2.0 * step)
        return self.value(UA, UB), grad

    def scenario(self, UA: np.ndarray, UB: np.ndarray) -> BellScenario:
        alice = tuple(s.conjugated(UA[i]) for i, s in enumerate(self.base.alice))
        bob = tuple(s.conjugated(UB[j]) for j, s in enumerate(self.base.bob))
        return BellScenario(self.d, alice, bob)


# ---------------------------------------------------------------------------
# Ascent
# ---------------------------------------------------------------------------

@dataclass
class AscentTrace:
    value: float
    UA: np.ndarray
    UB: np.ndarray
    iterations: int
    converged: bool


@dataclass
class OptimizationResult:
    best_value: float
    best_scenario: BellScenario
    converged: bool
    iterations: int
    restart_values: List[float] = field(default_factory=list)

    def __iter__(self) -> Iterator:
        yield self.best_value
        yield self.best_scenario


def _ascend(landscape: BellLandscape, UA: np.ndarray, UB: np.ndarray, cfg: OptimizerConfig) -> AscentTrace:
    d = landscape.d
    gens = landscape.generators
    step = cfg.step_init
    value = landscape.value(UA, UB)

    for iteration in range(1, cfg.max_iterations + 1):
        if cfg.gradient == "analytic":
            value, grad = landscape.coefficient_gradient(UA, UB)
        else:
            value, grad = landscape.finite_difference_gradient(UA, UB, cfg.fd_step)
        if np.max(np.abs(grad)) < cfg.gradient_tol:
            return AscentTrace(value, UA, UB, iteration, True)

        # ascent direction H_s = Σ_k g_{s,k} G_k / 2, slope ‖g‖²/2
        direction = np.einsum("sk,kab->sab", grad, gens) / 2.0
        slope = float(np.sum(grad * grad)) / 2.0
        t = step
        while t >= _MIN_STEP:
            rotations = expm(1j * t * direction)
            ua = np.einsum("iab,ibc->iac", rotations[:d], UA)
            ub = np.einsum("jab,jbc->jac", rotations[d:], UB)
            trial = landscape.value(ua, ub)
            if trial >= value + _ARMIJO * t * slope:
                break
            t *= 0.5
        else:
            # no ascent step survives the line search
            return AscentTrace(value, UA, UB, iteration, True)

        UA, UB = ua, ub
        improvement = trial - value
        value = trial
        if improvement < cfg.improvement_tol:
            return AscentTrace(value, UA, UB, iteration, True)
        step = min(2.0 * t, 8.0 * cfg.step_init)

    return AscentTrace(value, UA, UB, cfg.max_iterations, False)


def _starting_points(
    landscape: BellLandscape, state: Ket, cfg: OptimizerConfig
) -> Iterator[Tuple[np.ndarray, np.ndarray]]:
    """
    Restart 0: base settings carried into the state's Schmidt frame (Alice by W,
    Bob by Z̄P̂†), so it moves with the state under local unitaries and Schmidt
    permutations. Restart 1: base settings as given. Rest: random.
    """
    d = landscape.d
    W, Zbar, _ = schmidt_frame(state, d)
    bob_frame = Zbar @ phase_shifter(d).conj().T
    yield np.repeat(W[None], d, axis=0), np.repeat(bob_frame[None], d, axis=0)
    if cfg.restarts == 1:
        return
    yield landscape.identity(), landscape.identity()
    children = np.random.SeedSequence(cfg.seed).spawn(cfg.restarts - 2)
    ngen = landscape.generators.shape[0]
    for child in children:
        rng = np.random.default_rng(child)
        x = rng.uniform(-math.pi, math.pi, size=(2 * d, ngen))
        U = unitaries_from_coefficients(x, landscape.generators)
        yield U[:d], U[d:]


def optimize_settings(
    state: Ket,
    cfg: Optional[OptimizerConfig] = None,
    base: Optional[BellScenario] = None,
) -> OptimizationResult:
    """
    Maximize ⟨ψ|B̂|ψ⟩ over local conjugations of every setting.

    Args:
        state: unit-norm d²-dimensional ket, d read from its length
        cfg: hyperparameters (defaults from settings)
        base: settings fixing the spectra, reference settings by default

    Returns:
        OptimizationResult; unpacks as (best_value, best_scenario)
    """
    cfg = cfg or OptimizerConfig()
    state = np.asarray(state, dtype=complex)
    d = math.isqrt(state.shape[0])
    if d * d != state.shape[0]:
        raise DimensionMismatchError(f"state dimension {state.shape[0]} is not a square")
    d = validate_prime_dim(d)
    if abs(ket_norm(state) - 1.0) > 1e-10:
        raise ValueError("state must be unit-norm")
    base = base or paper_settings(d)
    if base.d != d:
        raise DimensionMismatchError(f"base scenario d={base.d} does not match state d={d}")

    landscape = BellLandscape(state, base)
    best: Optional[AscentTrace] = None
    restart_values: List[float] = []
    total_iterations = 0
    for index, (UA, UB) in enumerate(_starting_points(landscape, state, cfg)):
        trace = _ascend(landscape, UA, UB, cfg)
        restart_values.append(trace.value)
        total_iterations += trace.iterations
        logger.debug(
            "restart %d: value=%.10f iterations=%d converged=%s",
            index, trace.value, trace.iterations, trace.converged,
        )
        if best is None or trace.value > best.value:
            best = trace

    if not best.converged:
        logger.warning(
            "Best restart did not converge within %d iterations (value %.10f)",
            cfg.max_iterations, best.value,
        )
    return OptimizationResult(
        best_value=best.value,
        best_scenario=landscape.scenario(best.UA, best.UB),
        converged=best.converged,
        iterations=total_iterations,
        restart_values=restart_values,
    )


def gradient_check(
    state: Ket,
    points: int = 100,
    step: float = 1e-6,
    seed: int = 0,
    base: Optional[BellScenario] = None,
) -> float:
    """
    Max relative error between the analytic coefficient gradient and central
    differences at random points of the rotation manifold.
    """
    state = np.asarray(state, dtype=complex)
    d = validate_prime_dim(math.isqrt(state.shape[0]))
    landscape = BellLandscape(state, base or paper_settings(d))
    rng = np.random.default_rng(seed)
    ngen = landscape.generators.shape[0]
    worst = 0.0
    for _ in range(points):
        U = unitaries_from_coefficients(rng.uniform(-math.pi, math.pi, size=(2 * d, ngen)), landscape.generators)
        _, analytic = landscape.coefficient_gradient(U[:d], U[d:])
        _, numeric = landscape.finite_difference_gradient(U[:d], U[d:], step)
        scale = max(float(np.max(np.abs(analytic))), 1e-12)
        worst = max(worst, float(np.max(np.abs(analytic - numeric))) / scale)
    return worst


# ---------------------------------------------------------------------------
# Sweeps
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SweepPoint:
    point: SchmidtPoint
    entropy: float
    bell_max: float


def simplex_points(d: int, resolution: int) -> List[Tuple[float, ...]]:
    """Barycentric lattice of squared Schmidt coefficients with spacing 1/resolution."""
    if resolution < 1:
        raise ValueError(f"resolution must be positive, got {resolution}")
    points = []
    for combo in _compositions(resolution, d):
        points.append(tuple(k / resolution for k in combo))
    return points


def _compositions(total: int, parts: int) -> Iterator[Tuple[int, ...]]:
    if parts == 1:
        yield (total,)
        return
    for first in range(total, -1, -1):
        for rest in _compositions(total - first, parts - 1):
            yield (first,) + rest


def route_points(route: Route, steps: int) -> List[SchmidtPoint]:
    """
    r1: c_1² = c_2² = s/3, c_0² = 1 − 2s/3 for s = k/steps.
    r2: c_2 = 0 with c_1² rising to 1/2 over the first steps//2 points, then
        c_0² = c_1² = (1 − c_2²)/2 with c_2² rising to 1/3.
    """
    if steps < 3:
        raise ValueError(f"a route needs at least 3 steps, got {steps}")
    points: List[SchmidtPoint] = []
    if route == "r1":
        for k in range(steps + 1):
            s = k / steps
            points.append(SchmidtPoint.from_squares([1.0 - 2.0 * s / 3.0, s / 3.0, s / 3.0]))
    elif route == "r2":
        half = steps // 2
        for k in range(half + 1):
            c1 = k / (2 * half)
            points.append(SchmidtPoint.from_squares([1.0 - c1, c1, 0.0]))
        for k in range(half + 1, steps + 1):
            c2 = (k - half) / (steps - half) / 3.0
            points.append(SchmidtPoint.from_squares([(1.0 - c2) / 2.0, (1.0 - c2) / 2.0, c2]))
    else:
        raise ValueError(f"unknown route {route!r}, expected 'r1' or 'r2'")
    return points


def _evaluate_point(args: Tuple[SchmidtPoint, OptimizerConfig]) -> float:
    pt, cfg = args
    return optimize_settings(schmidt_state(pt), cfg).best_value


def _point_configs(cfg: OptimizerConfig, count: int) -> List[OptimizerConfig]:
    children = np.random.SeedSequence(cfg.seed).spawn(count)
    return [cfg.model_copy(update={"seed": int(child.generate_state(1)[0])}) for child in children]


def _map_points(points: Sequence[SchmidtPoint], cfg: OptimizerConfig) -> List[float]:
    jobs = list(zip(points, _point_configs(cfg, len(points))))
    if cfg.max_workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=cfg.max_workers) as pool:
            return list(pool.map(_evaluate_point, jobs))
    return [_evaluate_point(job) for job in jobs]


def route_sweep(route: Route, steps: int, cfg: Optional[OptimizerConfig] = None) -> List[SweepPoint]:
    """(entropy, optimized Bell value) along a route of the qutrit Schmidt simplex."""
    cfg = cfg or OptimizerConfig()
    points = route_points(route, steps)
    logger.info("Route %s: %d points, %d restarts each", route, len(points), cfg.restarts)
    values = _map_points(points, cfg)
    return [SweepPoint(pt, entanglement_entropy(pt), v) for pt, v in zip(points, values)]


def triangle_grid(
    resolution: int,
    cfg: Optional[OptimizerConfig] = None,
    d: int = 3,
    allow_higher_dimension: bool = False,
    use_symmetry: bool = True,
) -> List[SweepPoint]:
    """
    Optimized Bell value on the barycentric grid of squared Schmidt coefficients.

    With use_symmetry, each permutation class of coefficients is optimized once
    (on its sorted representative) and shared.
    """
    if resolution < 2:
        raise ValueError(f"resolution must be >= 2, got {resolution}")
    d = validate_prime_dim(d)
    if d != 3 and not allow_higher_dimension:
        raise ValueError("triangle sweeps beyond d=3 need allow_higher_dimension=True")
    cfg = cfg or OptimizerConfig()
    squares = simplex_points(d, resolution)
    points = [SchmidtPoint.from_squares(sq) for sq in squares]

    if use_symmetry:
        keys = [tuple(sorted(sq, reverse=True)) for sq in squares]
        unique = sorted(set(keys), key=keys.index)
        logger.info("Triangle grid: %d points, %d permutation classes", len(points), len(unique))
        values_by_key: Dict[Tuple[float, ...], float] = dict(
            zip(unique, _map_points([SchmidtPoint.from_squares(k) for k in unique], cfg))
        )
        values = [values_by_key[k] for k in keys]
    else:
        values = _map_points(points, cfg)
    return [SweepPoint(pt, entanglement_entropy(pt), v) for pt, v in zip(points, values)]
