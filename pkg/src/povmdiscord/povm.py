"""Rank-one qubit POVMs.

An element is ``r * (1 + sigma . b) / 2`` with weight ``r >= 0`` and unit
direction ``b``.  A set of elements is a POVM when ``sum r_i b_i = 0`` and
``sum r_i = 2``.  In planar mode every direction lies in the xz plane and is
described by an angle measured from +z toward +x: ``b = (sin t, 0, cos t)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .qmath import IDENTITY2, PAULIS

COMPLETENESS_TOL = 1e-9
UNIT_TOL = 1e-12
WEIGHT_FLOOR = 1e-12
RESAMPLE_CAP = 10_000
TWO_PI = 2.0 * math.pi


class InfeasiblePovmError(ValueError):
    """The completeness system has no admissible (all weights > 0) solution."""


class ResampleCapError(RuntimeError):
    pass


def planar_direction(theta: float) -> np.ndarray:
    return np.array([math.sin(theta), 0.0, math.cos(theta)])


def sphere_direction(theta: float, phi: float) -> np.ndarray:
    st = math.sin(theta)
    return np.array([st * math.cos(phi), st * math.sin(phi), math.cos(theta)])


def direction_angles(b) -> tuple[float, float]:
    """Polar angle in [0, pi] and azimuth in [0, 2 pi) of a unit vector."""
    x, y, z = b
    theta = math.acos(max(-1.0, min(1.0, z)))
    phi = math.atan2(y, x) % TWO_PI
    return theta, phi


def planar_angle(b) -> float:
    """Angle from +z toward +x of an xz-plane direction, in [0, 2 pi)."""
    return math.atan2(b[0], b[2]) % TWO_PI


def _points_south(b) -> bool:
    # canonical hemisphere for antipodal pairs: z > 0, then x > 0, then y > 0
    for c in (b[2], b[0], b[1]):
        if c != 0.0:
            return c < 0.0
    return False


@dataclass(frozen=True)
class PovmElement:
    weight: float
    direction: tuple[float, float, float]

    def __post_init__(self):
        d = tuple(float(c) for c in self.direction)
        object.__setattr__(self, "direction", d)
        object.__setattr__(self, "weight", float(self.weight))
        if self.weight < 0:
            raise ValueError(f"negative POVM weight {self.weight}")
        if abs(math.sqrt(sum(c * c for c in d)) - 1.0) > UNIT_TOL:
            raise ValueError(f"direction {d} is not a unit vector")

    @classmethod
    def planar(cls, weight: float, theta: float) -> PovmElement:
        return cls(weight, tuple(planar_direction(theta)))

    @property
    def vector(self) -> np.ndarray:
        """The (unnormalised) Bloch vector ``r * b``."""
        return self.weight * np.asarray(self.direction)

    @property
    def theta(self) -> float:
        return planar_angle(self.direction)

    def operator(self) -> np.ndarray:
        return element_operator(self)


def element_operator(e: PovmElement) -> np.ndarray:
    """2x2 operator ``r (1 + sigma . b) / 2``; trace r, rank one when r > 0."""
    sb = sum(c * s for c, s in zip(e.direction, PAULIS))
    return 0.5 * e.weight * (IDENTITY2 + sb)


@dataclass(frozen=True)
class ValidationReport:
    ok: bool
    vector_residual: float
    weight_residual: float
    problems: tuple[str, ...] = field(default=())

    def __bool__(self) -> bool:
        return self.ok


def _sums(elements) -> tuple[float, float]:
    vec = np.zeros(3)
    total = 0.0
    for e in elements:
        vec += e.vector
        total += e.weight
    return float(np.linalg.norm(vec)), abs(total - 2.0)


@dataclass(frozen=True)
class RankOnePovm:
    elements: tuple[PovmElement, ...]
    planar: bool = False

    def __post_init__(self):
        object.__setattr__(self, "elements", tuple(self.elements))

    def __len__(self) -> int:
        return len(self.elements)

    def __iter__(self):
        return iter(self.elements)

    @classmethod
    def from_directions(cls, directions, planar: bool = False) -> RankOnePovm:
        """Solve for the weights and build the POVM (raises if infeasible)."""
        dirs = [np.asarray(d, dtype=float) for d in directions]
        weights = weights_from_directions(dirs)
        return cls(tuple(PovmElement(r, tuple(d)) for r, d in zip(weights, dirs)), planar)

    @classmethod
    def from_angles(cls, thetas) -> RankOnePovm:
        return cls.from_directions([planar_direction(t) for t in thetas], planar=True)

    @classmethod
    def projective(cls, direction) -> RankOnePovm:
        """Orthogonal measurement along ``+direction`` / ``-direction``."""
        b = np.asarray(direction, dtype=float)
        b = b / np.linalg.norm(b)
        planar = bool(b[1] == 0.0)
        if planar:
            theta = planar_angle(b) % math.pi
            b = planar_direction(theta)
        elif _points_south(b):
            b = -b
        return cls((PovmElement(1.0, tuple(b)), PovmElement(1.0, tuple(-b))), planar)

    @classmethod
    def projective_angle(cls, theta: float) -> RankOnePovm:
        return cls.projective(planar_direction(theta))

    @property
    def weights(self) -> np.ndarray:
        return np.array([e.weight for e in self.elements])

    @property
    def directions(self) -> np.ndarray:
        return np.array([e.direction for e in self.elements])

    @property
    def thetas(self) -> np.ndarray:
        return np.array([e.theta for e in self.elements])

    def operators(self) -> list[np.ndarray]:
        return [element_operator(e) for e in self.elements]


def validate(povm) -> ValidationReport:
    """Check both completeness sums (tolerance 1e-9) and every element.

    Accepts a ``RankOnePovm`` or any iterable of ``PovmElement``; never raises.
    """
    elements = list(povm)
    problems = []
    for i, e in enumerate(elements):
        norm = math.sqrt(sum(c * c for c in e.direction))
        if abs(norm - 1.0) > UNIT_TOL:
            problems.append(f"element {i}: |direction| = {norm!r}")
        if e.weight < 0:
            problems.append(f"element {i}: negative weight {e.weight!r}")
    vec_res, w_res = _sums(elements)
    if vec_res > COMPLETENESS_TOL:
        problems.append(f"|sum r b| = {vec_res:.3e}")
    if w_res > COMPLETENESS_TOL:
        problems.append(f"|sum r - 2| = {w_res:.3e}")
    return ValidationReport(not problems, vec_res, w_res, tuple(problems))


def weights_from_directions(directions) -> np.ndarray:
    """Weights ``r`` with ``sum r_i b_i = 0`` and ``sum r_i = 2``.

    Raises ``InfeasiblePovmError`` when the system is singular or
    inconsistent, or when any weight falls below 1e-12.
    """
    dirs = np.asarray(directions, dtype=float)
    n = dirs.shape[0]
    if not 2 <= n <= 4:
        raise InfeasiblePovmError(f"need 2 to 4 directions, got {n}")
    r = solve_weights(dirs)
    if r is None:
        raise InfeasiblePovmError(f"directions admit no completeness solution with all weights >= {WEIGHT_FLOOR}")
    return r


def solve_weights(dirs: np.ndarray) -> np.ndarray | None:
    """Non-raising core of ``weights_from_directions``; None when infeasible."""
    n = dirs.shape[0]
    a = np.vstack([dirs.T, np.ones(n)])
    rhs = np.array([0.0, 0.0, 0.0, 2.0])
    if n == 3 and not np.any(dirs[:, 1]):
        a = a[[0, 2, 3]]
        rhs = rhs[[0, 2, 3]]
    if a.shape[0] == n:
        if abs(np.linalg.det(a)) < 1e-13:
            return None
        r = np.linalg.solve(a, rhs)
    else:
        r, _, rank, _ = np.linalg.lstsq(a, rhs, rcond=None)
        if rank < n:
            return None
    if np.linalg.norm(a @ r - rhs) > COMPLETENESS_TOL or np.any(r < WEIGHT_FLOOR):
        return None
    return r


def planar_weights(thetas) -> np.ndarray | None:
    """Closed-form weights for three xz-plane angles, or None if infeasible.

    ``r_i`` is proportional to the sine of the angle between the other two
    directions (cyclic order), normalised to sum to 2.
    """
    t1, t2, t3 = thetas
    s = np.array([math.sin(t3 - t2), math.sin(t1 - t3), math.sin(t2 - t1)])
    if s.sum() < 0:
        s = -s
    total = s.sum()
    if total <= 0 or np.any(s < WEIGHT_FLOOR * total / 2.0):
        return None
    return 2.0 * s / total


def convex_combine(p: RankOnePovm, q: RankOnePovm, lam: float) -> tuple[PovmElement, ...]:
    """Elements of ``lam * P + (1 - lam) * Q``; may hold more than four."""
    if not 0.0 < lam < 1.0:
        raise ValueError(f"mixing weight must lie in (0, 1), got {lam}")
    for name, m in (("P", p), ("Q", q)):
        report = validate(m)
        if not report:
            raise ValueError(f"{name} is not a valid POVM: {'; '.join(report.problems)}")
    return tuple(PovmElement(lam * e.weight, e.direction) for e in p) + tuple(
        PovmElement((1.0 - lam) * e.weight, e.direction) for e in q
    )


def uniform_sphere(rng: np.random.Generator) -> np.ndarray:
    v = rng.normal(size=3)
    return v / np.linalg.norm(v)


def _plane_basis(normal: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    helper = np.array([1.0, 0.0, 0.0]) if abs(normal[0]) < 0.9 else np.array([0.0, 1.0, 0.0])
    u = np.cross(normal, helper)
    u /= np.linalg.norm(u)
    return u, np.cross(normal, u)


def sample_directions(n: int, planar: bool, rng: np.random.Generator) -> np.ndarray:
    """One raw (not yet feasibility-checked) draw of ``n`` directions."""
    if n == 2:
        if planar:
            return np.array([planar_direction(rng.uniform(0.0, TWO_PI))])
        return np.array([uniform_sphere(rng)])
    if planar:
        return np.array([planar_direction(t) for t in rng.uniform(0.0, TWO_PI, size=n)])
    if n == 3:
        # three unit vectors can only balance inside a common plane
        u, w = _plane_basis(uniform_sphere(rng))
        angles = rng.uniform(0.0, TWO_PI, size=3)
        return np.array([math.cos(a) * u + math.sin(a) * w for a in angles])
    return np.array([uniform_sphere(rng) for _ in range(n)])


@dataclass(frozen=True)
class RandomPovmDraw:
    povm: RankOnePovm
    rejections: int


def random_povm(n: int, planar: bool, rng: np.random.Generator) -> RandomPovmDraw:
    """Uniformly random directions with weights solved from completeness.

    Infeasible draws are rejected and redrawn; more than 10^4 consecutive
    rejections raise ``ResampleCapError``.
    """
    if n not in (2, 3, 4):
        raise ValueError(f"number of outcomes must be 2, 3 or 4, got {n}")
    if n == 4 and planar:
        raise ValueError("four-outcome extreme POVMs cannot be coplanar; use planar=False")
    if n == 2:
        (b,) = sample_directions(2, planar, rng)
        return RandomPovmDraw(RankOnePovm.projective(b), 0)
    for rejections in range(RESAMPLE_CAP + 1):
        if planar:
            thetas = rng.uniform(0.0, TWO_PI, size=n)
            r = planar_weights(thetas)
            if r is not None:
                elements = tuple(PovmElement.planar(w, t) for w, t in zip(r, thetas))
                return RandomPovmDraw(RankOnePovm(elements, True), rejections)
            continue
        dirs = sample_directions(n, planar, rng)
        try:
            return RandomPovmDraw(RankOnePovm.from_directions(dirs, False), rejections)
        except InfeasiblePovmError:
            continue
    raise ResampleCapError(f"more than {RESAMPLE_CAP} consecutive infeasible draws")
