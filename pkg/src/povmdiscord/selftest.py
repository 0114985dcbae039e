"""Quick built-in consistency checks (closed forms vs matrices, convexity)."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import correlation as corr
from . import paperstate as ps
from . import povm as pv
from .qmath import TwoQubitState, random_density_matrix, von_neumann_entropy


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    worst: float
    tolerance: float

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        return f"{status}  {self.name}: worst {self.worst:.3e} (tolerance {self.tolerance:.0e})"


def closed_form_agreement(cases: int, rng: np.random.Generator) -> list[CheckResult]:
    """alpha, p_i and f(theta) against conditional states built from matrices."""
    worst_alpha = worst_prob = worst_f = 0.0
    for _ in range(cases):
        theta = rng.uniform(0.0, 2 * math.pi)
        p = rng.uniform(0.0, 1.0)
        state = ps.build_state(p)
        element = pv.PovmElement.planar(1.0, theta)
        cs = corr.conditional_state(state, element)
        # rho_A^i = a |1><1| + (1 - a) |+><+| has Bloch vector (1 - a, 0, -a)
        a_matrix = -cs.state.bloch[2]
        worst_alpha = max(worst_alpha, abs(ps.alpha(theta, p) - a_matrix))
        worst_prob = max(worst_prob, abs(ps.prob(theta, 1.0, p) - cs.probability))
        f_matrix = cs.probability * von_neumann_entropy(cs.state.matrix)
        worst_f = max(worst_f, abs(ps.f_theta(theta, p) - f_matrix))
    return [
        CheckResult("alpha closed form vs matrix", worst_alpha <= 1e-10, worst_alpha, 1e-10),
        CheckResult("p_i closed form vs matrix", worst_prob <= 1e-10, worst_prob, 1e-10),
        CheckResult("f(theta) closed form vs matrix", worst_f <= 1e-10, worst_f, 1e-10),
    ]


def mutual_information_agreement(points: int) -> CheckResult:
    worst = 0.0
    for p in np.linspace(0.0, 1.0, points):
        worst = max(worst, abs(ps.mutual_info_closed(p) - corr.mutual_information(ps.build_state(p))))
    return CheckResult("I(A:B) closed form vs matrix", worst <= 1e-9, worst, 1e-9)


def residual_convexity(cases: int, rng: np.random.Generator) -> CheckResult:
    """Residual entropy of a POVM mixture is at least the mixture of residuals."""
    worst = 0.0
    for i in range(cases):
        state = TwoQubitState(random_density_matrix(rng, 4))
        c = pv.random_povm(int(rng.integers(2, 5)), False, rng).povm
        d = pv.random_povm(int(rng.integers(2, 5)), False, rng).povm
        lam = rng.uniform(0.0, 1.0)
        g = pv.convex_combine(c, d, lam)
        gap = (
            lam * corr.residual_entropy(state, c)
            + (1 - lam) * corr.residual_entropy(state, d)
            - corr.residual_entropy(state, g)
        )
        worst = max(worst, gap)
    return CheckResult("residual entropy convex in the POVM", worst <= 1e-10, worst, 1e-10)


def entropy_concavity(cases: int, rng: np.random.Generator) -> CheckResult:
    worst = 0.0
    for _ in range(cases):
        r1 = random_density_matrix(rng, 2)
        r2 = random_density_matrix(rng, 2)
        lam = rng.uniform(0.0, 1.0)
        gap = lam * von_neumann_entropy(r1) + (1 - lam) * von_neumann_entropy(r2) - von_neumann_entropy(
            lam * r1 + (1 - lam) * r2
        )
        worst = max(worst, gap)
    return CheckResult("von Neumann entropy concave", worst <= 1e-10, worst, 1e-10)


def run(cases: int = 100, seed: int = 0) -> list[CheckResult]:
    rng = np.random.default_rng(seed)
    return [
        *closed_form_agreement(cases, rng),
        mutual_information_agreement(101),
        residual_convexity(cases, rng),
        entropy_concavity(cases, rng),
    ]
