"""The two-pure-state mixture used as the worked example, in closed form.

    rho_AB(p) = p |11><11| + (1 - p) |++><++|          (variant "ours")
    rho_AB(p) = p |00><00| + (1 - p) |++><++|          (variant "vedral")

For a measurement direction at angle ``theta`` in the xz plane of qubit B,
the conditional state of A is ``alpha |k><k| + (1 - alpha) |+><+|`` with
``k`` the computational basis state of the variant.  All closed forms below
are cross-checked against the generic matrix route in the test suite.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace

import numpy as np

from . import correlation as corr
from .povm import RankOnePovm
from .qmath import KET0, KET1, KET_PLUS, TwoQubitState, binary_entropy, binary_entropy_array, projector

VARIANTS = ("ours", "vedral")
DEGENERATE_DENOMINATOR = 1e-15
CROSS_CHECK_TOL = 1e-8


class DegenerateAngleError(ValueError):
    """The conditional state is undefined: the outcome has zero probability."""


def _z_sign(variant: str) -> float:
    # the |1> component sits at Bloch z = -1, the |0> one at z = +1
    if variant == "ours":
        return -1.0
    if variant == "vedral":
        return 1.0
    raise ValueError(f"variant must be one of {VARIANTS}, got {variant!r}")


def _check_p(p: float) -> None:
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"mixing probability p={p!r} outside [0, 1]")


def build_state(p: float, variant: str = "ours") -> TwoQubitState:
    _check_p(p)
    k = KET1 if _z_sign(variant) < 0 else KET0
    first = projector(np.kron(k, k))
    second = projector(np.kron(KET_PLUS, KET_PLUS))
    return TwoQubitState(p * first + (1.0 - p) * second)


def _weights(theta, p, variant):
    zs = _z_sign(variant)
    u = p * (1.0 + zs * np.cos(theta))
    v = (1.0 - p) * (1.0 + np.sin(theta))
    return u, v


def alpha(theta: float, p: float, variant: str = "ours") -> float:
    """Weight of the computational-basis component in the conditional state."""
    u, v = _weights(theta, p, variant)
    if u + v <= DEGENERATE_DENOMINATOR:
        raise DegenerateAngleError(f"zero-probability outcome at theta={theta}, p={p}")
    return float(u / (u + v))


def omega(a: float) -> tuple[float, float]:
    """Eigenvalues (larger first) of ``a |k><k| + (1 - a) |+><+|``."""
    root = math.sqrt(a * a + (1.0 - a) ** 2)
    return 0.5 * (1.0 + root), 0.5 * (1.0 - root)


def prob(theta: float, r: float, p: float, variant: str = "ours") -> float:
    """Probability of the outcome of element ``r (1 + sigma . b(theta)) / 2``."""
    u, v = _weights(theta, p, variant)
    return float(0.5 * r * (u + v))


def f_theta_array(theta, p: float, variant: str = "ours", base: float = 2.0) -> np.ndarray:
    """Vectorised ``f_theta``."""
    theta = np.asarray(theta, dtype=float)
    u, v = _weights(theta, p, variant)
    q = u + v
    a = np.divide(u, q, out=np.zeros_like(q), where=q > DEGENERATE_DENOMINATOR)
    w1 = 0.5 * (1.0 + np.sqrt(a * a + (1.0 - a) ** 2))
    return 0.5 * q * binary_entropy_array(w1, base)


def f_theta(theta: float, p: float, variant: str = "ours", base: float = 2.0) -> float:
    """Residual-entropy contribution per unit weight of a direction at ``theta``."""
    return float(f_theta_array(theta, p, variant, base))


def f_theta_derivative(theta: float, p: float, variant: str = "ours", base: float = 2.0) -> float:
    """Analytic d f / d theta (undefined where the conditional state is pure)."""
    zs = _z_sign(variant)
    u, v = _weights(theta, p, variant)
    du = -p * zs * math.sin(theta)
    dv = (1.0 - p) * math.cos(theta)
    q, dq = u + v, du + dv
    a = u / q
    da = (du * q - u * dq) / (q * q)
    root = math.sqrt(a * a + (1.0 - a) ** 2)
    w1 = 0.5 * (1.0 + root)
    dw1 = (2.0 * a - 1.0) / (2.0 * root) * da
    dh = math.log((1.0 - w1) / w1) / math.log(base)
    return 0.5 * dq * binary_entropy(w1, base) + 0.5 * q * dh * dw1


def reduced_entropy_closed(p: float, base: float = 2.0) -> float:
    """S(rho_A); the reduced Bloch vector has length sqrt(p^2 + (1-p)^2)."""
    return binary_entropy(0.5 * (1.0 + math.sqrt(p * p + (1.0 - p) ** 2)), base)


def mutual_info_closed(p: float, base: float = 2.0) -> float:
    _check_p(p)
    joint = binary_entropy(0.5 * (1.0 + math.sqrt(1.0 + 3.0 * p * p - 3.0 * p)), base)
    return 2.0 * reduced_entropy_closed(p, base) - joint


def best_projective(p: float, variant: str = "ours", config: corr.OptimizerConfig = corr.DEFAULT_CONFIG):
    """Optimal orthogonal measurement from the closed forms: ``(C_B, theta*)``."""
    s_a = reduced_entropy_closed(p, config.base)

    def value(t):
        return s_a - f_theta_array(t, p, variant, config.base) - f_theta_array(t + math.pi, p, variant, config.base)

    theta, _ = corr.maximize_periodic(value, math.pi, config.grid, config.angle_tol)
    return float(value(np.array([theta]))[0]), theta


@dataclass(frozen=True)
class SweepRecord:
    p: float
    c_b_n2: float
    theta_opt: float
    i_ab: float
    discord: float
    mc_max: float
    mc_count: int
    f_balance: float


class CrossCheckError(RuntimeError):
    pass


def sweep_point(
    p: float,
    variant: str = "ours",
    config: corr.OptimizerConfig = corr.DEFAULT_CONFIG,
    mc_trials: int = 0,
    mc_outcomes: int = 3,
    mc_seed: int = 0,
    threads: int | None = 1,
) -> SweepRecord:
    c_b, theta = best_projective(p, variant, config)
    state = build_state(p, variant)
    generic = corr.optimize_n2(state, "B", replace_planar(config))
    if abs(generic.value - c_b) > CROSS_CHECK_TOL:
        raise CrossCheckError(
            f"p={p}: closed-form C_B {c_b!r} disagrees with matrix route {generic.value!r}"
        )
    i_ab = mutual_info_closed(p, config.base)
    balance = abs(f_theta(theta, p, variant, config.base) - f_theta(theta + math.pi, p, variant, config.base))
    mc_max, mc_count = math.nan, 0
    if mc_trials > 0:
        samples = corr.monte_carlo(state, mc_outcomes, mc_trials, True, mc_seed, "B", config.base, threads)
        mc_max = max(s.objective for s in samples)
        mc_count = len(samples)
    return SweepRecord(p, c_b, theta, i_ab, i_ab - c_b, mc_max, mc_count, balance)


def replace_planar(config: corr.OptimizerConfig) -> corr.OptimizerConfig:
    return config if config.planar else replace(config, planar=True)


def sweep(
    ps,
    variant: str = "ours",
    config: corr.OptimizerConfig = corr.DEFAULT_CONFIG,
    mc_trials: int = 0,
    mc_outcomes: int = 3,
    mc_seed: int = 0,
    threads: int | None = None,
) -> list[SweepRecord]:
    """One ``SweepRecord`` per grid value, in grid order.

    Monte Carlo summaries use ``mc_trials`` random planar POVMs per point
    (``0`` skips them).  Grid points run in parallel when ``threads`` allows.
    """
    ps = [float(p) for p in ps]
    for p in ps:
        _check_p(p)
    workers = min(corr.resolve_threads(threads), max(len(ps), 1))

    def one(p):
        return sweep_point(p, variant, config, mc_trials, mc_outcomes, mc_seed, 1)

    if workers == 1:
        return [one(p) for p in ps]
    with ThreadPoolExecutor(workers) as pool:
        return list(pool.map(one, ps))


def y_projective() -> RankOnePovm:
    """Orthogonal measurement along y, along which B is completely random."""
    return RankOnePovm.projective((0.0, 1.0, 0.0))
