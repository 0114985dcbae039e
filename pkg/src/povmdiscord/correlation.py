"""Classical correlation, mutual information and discord of two-qubit states.

The classical correlation of ``rho_AB`` with B measured is

    C_B = max over POVMs {B_i} of  S(rho_A) - sum_i p_i S(rho_A^i)

where ``p_i = tr((1 (x) B_i) rho)`` and ``rho_A^i = tr_B((1 (x) B_i) rho) / p_i``.
Rank-one POVMs with at most four outcomes suffice on a qubit, so the search
runs over projective pairs (n = 2) and over three/four-outcome POVMs whose
weights are solved from the completeness relation.

``side`` names the subsystem that is *measured*: ``"B"`` gives C_B and the
conditional states of A, ``"A"`` gives C_A.
"""

from __future__ import annotations

import logging
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace

import numpy as np
from scipy.optimize import minimize, minimize_scalar

from . import povm as pv
from .qmath import (
    MAXIMALLY_MIXED,
    IDENTITY2,
    QubitState,
    TwoQubitState,
    partial_trace_b,
    qubit_entropy_from_bloch_norm,
    von_neumann_entropy,
)

log = logging.getLogger(__name__)

DEGENERATE_PROB = 1e-12
# an n > 2 optimum must beat the projective one by this much to be reported
IMPROVEMENT_MARGIN = 1e-12
THREADS_ENV = "DISCORD_OPT_THREADS"


@dataclass(frozen=True)
class OptimizerConfig:
    """Search settings shared by the optimizers.

    ``planar`` restricts directions to the xz plane (enough for real states
    whose measured-side Bloch vectors lie in that plane).  ``max_outcomes``
    caps the POVM size tried by ``classical_correlation``; four outcomes are
    only tried in non-planar mode.
    """

    grid: int = 2048
    angle_tol: float = 1e-10
    planar: bool = True
    sphere_points: int = 2000
    starts: int = 32
    max_outcomes: int = 4
    seed: int = 0
    base: float = 2.0
    simplex_xatol: float = 1e-8
    simplex_fatol: float = 1e-13
    simplex_maxiter: int = 5_000


DEFAULT_CONFIG = OptimizerConfig()


def _check_side(side: str) -> None:
    if side not in ("A", "B"):
        raise ValueError(f"side must be 'A' or 'B', got {side!r}")


def _oriented(state: TwoQubitState, side: str) -> TwoQubitState:
    """State arranged so that the measured subsystem is the second factor."""
    _check_side(side)
    return state if side == "B" else state.swapped()


def resolve_threads(threads: int | None = None) -> int:
    if threads is None:
        threads = int(os.environ.get(THREADS_ENV, "0") or 0)
    if threads <= 0:
        threads = os.cpu_count() or 1
    return threads


@dataclass(frozen=True)
class ConditionalState:
    probability: float
    state: QubitState
    degenerate: bool = False


def conditional_state(state: TwoQubitState, element: pv.PovmElement, side: str = "B") -> ConditionalState:
    """Outcome probability and post-measurement state of the other qubit.

    Outcomes with probability at most 1e-12 are flagged degenerate and carry
    the maximally mixed state; they contribute nothing to weighted sums.
    """
    rho = _oriented(state, side).matrix
    unnormalised = partial_trace_b(np.kron(IDENTITY2, pv.element_operator(element)) @ rho)
    p = float(np.trace(unnormalised).real)
    if p <= DEGENERATE_PROB:
        return ConditionalState(p, MAXIMALLY_MIXED, True)
    return ConditionalState(p, QubitState.from_matrix(unnormalised / p))


def residual_entropy(state: TwoQubitState, povm, side: str = "B", base: float = 2.0) -> float:
    """sum_i p_i S(rho^i) through explicit matrices; ``povm`` is any element iterable."""
    total = 0.0
    for e in povm:
        cs = conditional_state(state, e, side)
        if not cs.degenerate:
            total += cs.probability * von_neumann_entropy(cs.state.matrix, base)
    return total


def marginal_entropy(state: TwoQubitState, side: str = "B", base: float = 2.0) -> float:
    """Entropy of the unmeasured subsystem."""
    _check_side(side)
    return von_neumann_entropy(state.reduced("A" if side == "B" else "B"), base)


def objective(state: TwoQubitState, povm, side: str = "B", base: float = 2.0) -> float:
    """Average entropy decrease S(reduced) - residual entropy for one POVM."""
    return marginal_entropy(state, side, base) - residual_entropy(state, povm, side, base)


class ObjectiveEvaluator:
    """Vectorised objective for many POVMs on one state.

    Writes ``rho = 1/4 sum T[j, k] s_j (x) s_k``; an element ``r (1 + s.b)/2``
    on the measured qubit leaves the other one with probability
    ``r/2 (T b~)_0`` and Bloch vector ``(T b~)_{1:3} / (T b~)_0``, ``b~ = (1, b)``.
    """

    def __init__(self, state: TwoQubitState, side: str = "B", base: float = 2.0):
        self.state = state
        self.side = side
        self.base = base
        self.tensor = _oriented(state, side).correlation_tensor()
        self.marginal = marginal_entropy(state, side, base)
        self.evaluations = 0
        self._rows = self.tensor.tolist()

    def element_terms(self, directions: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Per unit-weight element: probability factor and conditional entropy."""
        d = np.asarray(directions, dtype=float)
        tb = self.tensor[:, 0] + d @ self.tensor[:, 1:].T
        q = 0.5 * tb[..., 0]
        safe = np.where(tb[..., 0] > 0, tb[..., 0], 1.0)
        norm = np.linalg.norm(tb[..., 1:], axis=-1) / safe
        return q, qubit_entropy_from_bloch_norm(norm, self.base)

    def residual(self, directions: np.ndarray, weights: np.ndarray) -> np.ndarray:
        """Residual entropy for POVMs given as (..., n, 3) directions and (..., n) weights."""
        q, s = self.element_terms(directions)
        p = np.asarray(weights) * q
        contrib = np.where(p > DEGENERATE_PROB, p * s, 0.0)
        self.evaluations += int(np.prod(contrib.shape[:-1])) if contrib.ndim > 1 else 1
        return contrib.sum(axis=-1)

    def value(self, directions: np.ndarray, weights: np.ndarray) -> np.ndarray:
        return self.marginal - self.residual(directions, weights)

    def scalar_value(self, directions, weights) -> float:
        """Pure-float version of ``value`` for one POVM; cheaper inside optimizers."""
        t = self._rows
        log_b = math.log(self.base)
        residual = 0.0
        for (x, y, z), r in zip(directions, weights):
            tb = [row[0] + row[1] * x + row[2] * y + row[3] * z for row in t]
            p = 0.5 * r * tb[0]
            if p <= DEGENERATE_PROB:
                continue
            norm = min(math.sqrt(tb[1] * tb[1] + tb[2] * tb[2] + tb[3] * tb[3]) / tb[0], 1.0)
            w = 0.5 * (1.0 + norm)
            if w < 1.0:
                residual -= p * (w * math.log(w) + (1.0 - w) * math.log(1.0 - w)) / log_b
        self.evaluations += 1
        return self.marginal - residual

    def povm_value(self, povm) -> float:
        elements = list(povm)
        d = np.array([e.direction for e in elements])
        w = np.array([e.weight for e in elements])
        return float(self.value(d, w))

    def unit_term(self, direction) -> float:
        """p S contribution of a unit-weight element: the function f of the angle."""
        q, s = self.element_terms(np.asarray(direction, dtype=float))
        p = float(q)
        return p * float(s) if p > DEGENERATE_PROB else 0.0


@dataclass(frozen=True)
class CorrelationResult:
    value: float
    optimal_povm: pv.RankOnePovm
    marginal_entropy: float
    residual_entropy: float
    stationarity_residual: float = math.nan
    evaluations: int = 0
    side: str = "B"

    @property
    def outcomes(self) -> int:
        return len(self.optimal_povm)


def _result(ev: ObjectiveEvaluator, povm: pv.RankOnePovm, stationarity: float = math.nan) -> CorrelationResult:
    residual = float(ev.residual(povm.directions, povm.weights))
    value = ev.marginal - residual
    if -1e-12 < value < 0.0:
        # the objective is non-negative for every POVM; only rounding gets here
        value, residual = 0.0, ev.marginal
    return CorrelationResult(value, povm, ev.marginal, residual, stationarity, ev.evaluations, ev.side)


def maximize_periodic(fun, period: float, grid: int, tol: float) -> tuple[float, float]:
    """Maximise a ``period``-periodic scalar function: grid scan, then Brent.

    ``fun`` must accept an array of angles.  Returns ``(angle, value)`` with the
    angle in ``[0, period)``; ties keep the smallest grid angle.
    """
    angles = np.arange(grid) * (period / grid)
    values = fun(angles)
    k = int(np.argmax(values))
    step = period / grid
    res = minimize_scalar(
        lambda t: -float(fun(np.array([t]))[0]),
        bounds=(angles[k] - step, angles[k] + step),
        method="bounded",
        options={"xatol": tol, "maxiter": 500},
    )
    if -res.fun > values[k]:
        best_t, best_v = float(res.x), float(-res.fun)
    else:
        best_t, best_v = float(angles[k]), float(values[k])
    return best_t % period, best_v


def fibonacci_hemisphere(count: int) -> np.ndarray:
    """Near-uniform unit vectors covering the z >= 0 hemisphere."""
    i = np.arange(count) + 0.5
    z = 1.0 - i / count
    r = np.sqrt(1.0 - z * z)
    phi = i * math.pi * (3.0 - math.sqrt(5.0))
    return np.stack([r * np.cos(phi), r * np.sin(phi), z], axis=-1)


def optimize_n2(state: TwoQubitState, side: str = "B", config: OptimizerConfig = DEFAULT_CONFIG) -> CorrelationResult:
    """Best orthogonal (two-outcome projective) measurement.

    Planar mode scans ``config.grid`` angles in [0, pi) and refines with a
    bounded Brent search; otherwise a hemisphere covering is scanned and the
    best point polished with Nelder-Mead in (polar, azimuth).
    """
    ev = ObjectiveEvaluator(state, side, config.base)
    ones = np.ones(2)

    def pair_dirs(b):
        return np.stack([b, -b], axis=-2)

    if config.planar:

        def fun(thetas):
            b = np.stack([np.sin(thetas), np.zeros_like(thetas), np.cos(thetas)], axis=-1)
            return ev.value(pair_dirs(b), ones)

        theta, _ = maximize_periodic(fun, math.pi, config.grid, config.angle_tol)
        best = pv.RankOnePovm.projective_angle(theta)
        return _result(ev, best, stationarity_residual(state, best, side, config.base))

    cover = fibonacci_hemisphere(config.sphere_points)
    values = ev.value(pair_dirs(cover), ones)
    start = pv.direction_angles(cover[int(np.argmax(values))])

    def neg(x):
        return -float(ev.value(pair_dirs(pv.sphere_direction(*x)), ones))

    res = minimize(
        neg,
        np.array(start),
        method="Nelder-Mead",
        options={"xatol": config.simplex_xatol, "fatol": config.simplex_fatol,
                 "maxiter": config.simplex_maxiter, "initial_simplex": _simplex(start, 0.05)},
    )
    b = pv.sphere_direction(*res.x) if -res.fun >= values.max() else cover[int(np.argmax(values))]
    best = pv.RankOnePovm.projective(b)
    stat = stationarity_residual(state, best, side, config.base) if best.planar else math.nan
    return _result(ev, best, stat)


def _simplex(x0, scale: float) -> np.ndarray:
    x0 = np.asarray(x0, dtype=float)
    return np.vstack([x0, x0 + scale * np.eye(x0.size)])


class _Parameterisation:
    """Maps a flat angle vector to the directions of an n-outcome POVM."""

    def __init__(self, n: int, planar: bool):
        self.n = n
        self.planar = planar

    def directions(self, x: np.ndarray) -> np.ndarray:
        if self.planar:
            return np.stack([np.sin(x), np.zeros_like(x), np.cos(x)], axis=-1)
        if self.n == 3:
            u, w = pv._plane_basis(pv.sphere_direction(x[0], x[1]))
            a = x[2:]
            return np.cos(a)[:, None] * u + np.sin(a)[:, None] * w
        polar, azimuth = x[0::2], x[1::2]
        st = np.sin(polar)
        return np.stack([st * np.cos(azimuth), st * np.sin(azimuth), np.cos(polar)], axis=-1)

    def weights(self, x: np.ndarray, dirs: np.ndarray) -> np.ndarray | None:
        if self.planar:
            return pv.planar_weights(x)
        if self.n == 3:
            # in-plane angles fix the weights exactly as in the xz plane
            return pv.planar_weights(x[2:])
        return pv.solve_weights(dirs)

    def from_povm(self, m: pv.RankOnePovm) -> np.ndarray:
        if self.planar:
            return m.thetas
        if self.n == 3:
            d = m.directions
            normal = np.cross(d[0], d[1])
            if np.linalg.norm(normal) < 1e-9:
                normal = np.cross(d[0], d[2])
            normal /= np.linalg.norm(normal)
            u, w = pv._plane_basis(normal)
            angles = np.arctan2(d @ w, d @ u)
            return np.concatenate([pv.direction_angles(normal), angles])
        return np.concatenate([pv.direction_angles(b) for b in m.directions])


def _start_stream(seed: int, index: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(index,)))


def optimize_n3plus(
    state: TwoQubitState,
    n: int,
    side: str = "B",
    config: OptimizerConfig = DEFAULT_CONFIG,
    seed: int | None = None,
) -> CorrelationResult:
    """Multistart Nelder-Mead over the directions of an n = 3 or 4 POVM.

    Weights are re-solved from the completeness relation at each point;
    infeasible directions score -inf so the search never leaves the POVM set.
    Start ``k`` draws from a stream derived from ``(seed, k)``.
    """
    if n not in (3, 4):
        raise ValueError(f"optimize_n3plus handles 3 or 4 outcomes, got {n}")
    if n == 4 and config.planar:
        raise ValueError("four-outcome search needs planar=False")
    seed = config.seed if seed is None else seed
    ev = ObjectiveEvaluator(state, side, config.base)
    par = _Parameterisation(n, config.planar)

    def neg(x):
        dirs = par.directions(x)
        w = par.weights(x, dirs)
        if w is None:
            return math.inf
        return -ev.scalar_value(dirs.tolist(), w.tolist())

    best_x, best_f = None, math.inf
    for k in range(config.starts):
        draw = pv.random_povm(n, config.planar, _start_stream(seed, k))
        x0 = par.from_povm(draw.povm)
        res = minimize(
            neg,
            x0,
            method="Nelder-Mead",
            options={"xatol": config.simplex_xatol, "fatol": config.simplex_fatol,
                     "maxiter": config.simplex_maxiter, "maxfev": config.simplex_maxiter,
                     "initial_simplex": _feasible_simplex(neg, x0)},
        )
        if res.fun < best_f:
            best_x, best_f = res.x, res.fun
    if best_x is None or not math.isfinite(best_f):
        raise RuntimeError(f"all {config.starts} starts of the {n}-outcome search were infeasible")
    dirs = par.directions(best_x)
    w = par.weights(best_x, dirs)
    elements = tuple(pv.PovmElement(r, tuple(d)) for r, d in zip(w, dirs))
    best = pv.RankOnePovm(elements, config.planar)
    stat = stationarity_residual(state, best, side, config.base) if config.planar else math.nan
    return _result(ev, best, stat)


def _feasible_simplex(neg, x0: np.ndarray) -> np.ndarray:
    """Initial simplex around a feasible point, shrinking steps until feasible."""
    simplex = [x0]
    for i in range(x0.size):
        step = 0.1
        while True:
            v = x0.copy()
            v[i] += step
            if math.isfinite(neg(v)) or step < 1e-6:
                break
            step *= 0.5
        simplex.append(v)
    return np.array(simplex)


def classical_correlation(
    state: TwoQubitState, side: str = "B", config: OptimizerConfig = DEFAULT_CONFIG
) -> CorrelationResult:
    """C_B (or C_A): the best of the 2-, 3- and (non-planar) 4-outcome searches."""
    best = optimize_n2(state, side, config)
    sizes = [n for n in (3, 4) if n <= config.max_outcomes and not (n == 4 and config.planar)]
    evaluations = best.evaluations
    for n in sizes:
        cand = optimize_n3plus(state, n, side, config)
        evaluations += cand.evaluations
        if cand.value > best.value + IMPROVEMENT_MARGIN:
            log.info("%d-outcome POVM beats projective by %.3e", n, cand.value - best.value)
            best = cand
    return replace(best, evaluations=evaluations)


def mutual_information(state: TwoQubitState, base: float = 2.0) -> float:
    """I(A:B) = S(rho_A) + S(rho_B) - S(rho_AB)."""
    return (
        von_neumann_entropy(state.reduced("A"), base)
        + von_neumann_entropy(state.reduced("B"), base)
        - von_neumann_entropy(state.matrix, base)
    )


def quantum_discord_min(state: TwoQubitState, side: str = "B", config: OptimizerConfig = DEFAULT_CONFIG) -> float:
    """Minimal discord as I(A:B) - C; small negative values are reported as is."""
    return mutual_information(state, config.base) - classical_correlation(state, side, config).value


@dataclass(frozen=True)
class CorrelationSummary:
    classical: CorrelationResult
    mutual_information: float
    discord: float


def summarize(state: TwoQubitState, side: str = "B", config: OptimizerConfig = DEFAULT_CONFIG) -> CorrelationSummary:
    cc = classical_correlation(state, side, config)
    mi = mutual_information(state, config.base)
    return CorrelationSummary(cc, mi, mi - cc.value)


def unit_term_function(state: TwoQubitState, side: str = "B", base: float = 2.0):
    """f(theta): p S of a unit-weight xz-plane element at angle theta."""
    ev = ObjectiveEvaluator(state, side, base)
    return lambda theta: ev.unit_term(pv.planar_direction(theta))


def derivative(fun, x: float, h: float = 1e-3) -> float:
    """Central difference with one Richardson step (error O(h^4))."""
    d1 = (fun(x + h) - fun(x - h)) / (2 * h)
    d2 = (fun(x + h / 2) - fun(x - h / 2)) / h
    return (4 * d2 - d1) / 3


def lagrange_fit(state: TwoQubitState, povm: pv.RankOnePovm, side: str = "B", base: float = 2.0):
    """Least-squares multipliers and condition residuals for a planar POVM.

    Returns ``(lambdas, residuals)`` where ``residuals`` holds the five
    condition families: value, angle-derivative, sum r - 2, sum r cos, sum r sin.
    """
    if not povm.planar and any(abs(e.direction[1]) > 1e-12 for e in povm):
        raise ValueError("stationarity conditions are defined for xz-plane POVMs only")
    f = unit_term_function(state, side, base)
    thetas = np.array([pv.planar_angle(e.direction) for e in povm])
    r = np.array([e.weight for e in povm])
    fv = np.array([f(t) for t in thetas])
    fd = np.array([derivative(f, t) for t in thetas])
    c, s = np.cos(thetas), np.sin(thetas)
    n = thetas.size
    # value rows: f + l1 + l2 cos + l3 sin = 0; derivative rows: r (f' - l2 sin + l3 cos) = 0
    a = np.vstack([np.column_stack([np.ones(n), c, s]), np.column_stack([np.zeros(n), -r * s, r * c])])
    rhs = -np.concatenate([fv, r * fd])
    lam, *_ = np.linalg.lstsq(a, rhs, rcond=None)
    value_res = fv + lam[0] + lam[1] * c + lam[2] * s
    deriv_res = r * (fd - lam[1] * s + lam[2] * c)
    residuals = (
        float(np.max(np.abs(value_res))),
        float(np.max(np.abs(deriv_res))),
        abs(float(r.sum()) - 2.0),
        abs(float(r @ c)),
        abs(float(r @ s)),
    )
    return lam, residuals


def stationarity_residual(state: TwoQubitState, povm: pv.RankOnePovm, side: str = "B", base: float = 2.0) -> float:
    """Largest violation of the Lagrange conditions at a planar POVM."""
    return max(lagrange_fit(state, povm, side, base)[1])


@dataclass(frozen=True)
class McSample:
    povm: pv.RankOnePovm
    objective: float
    trial_index: int
    rejections: int = 0


def trial_stream(seed: int, trial: int) -> np.random.Generator:
    """Independent generator for one Monte Carlo trial."""
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(trial,)))


def _mc_chunk(ev: ObjectiveEvaluator, n: int, planar: bool, seed: int, start: int, stop: int) -> list[McSample]:
    draws = [pv.random_povm(n, planar, trial_stream(seed, i)) for i in range(start, stop)]
    if not draws:
        return []
    dirs = np.array([d.povm.directions for d in draws])
    weights = np.array([d.povm.weights for d in draws])
    values = ev.value(dirs, weights)
    return [
        McSample(d.povm, float(v), i, d.rejections)
        for i, d, v in zip(range(start, stop), draws, values)
    ]


def monte_carlo(
    state: TwoQubitState,
    n: int,
    trials: int,
    planar: bool = True,
    seed: int = 0,
    side: str = "B",
    base: float = 2.0,
    threads: int | None = None,
    chunk: int = 4096,
) -> list[McSample]:
    """Objective values of ``trials`` random n-outcome POVMs.

    Trial ``i`` uses a stream derived from ``(seed, i)`` only, so results do
    not depend on ``threads``.
    """
    if trials < 1:
        raise ValueError("trials must be at least 1")
    ev = ObjectiveEvaluator(state, side, base)
    bounds = [(a, min(a + chunk, trials)) for a in range(0, trials, chunk)]
    workers = min(resolve_threads(threads), len(bounds))
    if workers == 1:
        parts = [_mc_chunk(ev, n, planar, seed, a, b) for a, b in bounds]
    else:
        with ThreadPoolExecutor(workers) as pool:
            parts = list(pool.map(lambda ab: _mc_chunk(ev, n, planar, seed, *ab), bounds))
    return [s for part in parts for s in part]
