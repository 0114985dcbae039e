"""Small-matrix quantum linear algebra for one and two qubits.

Density matrices are plain ``numpy`` complex arrays of shape (2, 2) or (4, 4).
Two-qubit matrices use the tensor order A (x) B with row index ``2*i_A + i_B``.
Entropies are in bits unless a different logarithm ``base`` is passed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

HERMITIAN_TOL = 1e-12
TRACE_TOL = 1e-10
PSD_TOL = 1e-9
PROB_CLAMP = 1e-12
JACOBI_TOL = 1e-14
JACOBI_MAX_SWEEPS = 100

IDENTITY2 = np.eye(2, dtype=complex)
SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)
PAULIS = (SIGMA_X, SIGMA_Y, SIGMA_Z)

KET0 = np.array([1, 0], dtype=complex)
KET1 = np.array([0, 1], dtype=complex)
KET_PLUS = np.array([1, 1], dtype=complex) / math.sqrt(2)


class InvalidStateError(ValueError):
    """A matrix failed a density-matrix invariant.

    ``invariant`` names the violated property ("hermitian", "trace",
    "positivity", "shape").
    """

    def __init__(self, invariant: str, message: str):
        super().__init__(message)
        self.invariant = invariant


class EigenSolverError(RuntimeError):
    pass


def log_of(x, base: float = 2.0):
    if base == 2.0:
        return np.log2(x)
    return np.log(x) / math.log(base)


def binary_entropy(x: float, base: float = 2.0) -> float:
    """Shannon entropy of the two-outcome distribution (x, 1 - x)."""
    if x < -PROB_CLAMP or x > 1 + PROB_CLAMP:
        raise ValueError(f"binary_entropy: probability {x!r} outside [0, 1]")
    x = min(max(x, 0.0), 1.0)
    if x == 0.0 or x == 1.0:
        return 0.0
    return float(-(x * log_of(x, base) + (1 - x) * log_of(1 - x, base)))


def binary_entropy_array(x: np.ndarray, base: float = 2.0) -> np.ndarray:
    """Vectorised ``binary_entropy`` for inputs already inside [0, 1]."""
    x = np.clip(np.asarray(x, dtype=float), 0.0, 1.0)
    out = np.zeros_like(x)
    inner = (x > 0.0) & (x < 1.0)
    xi = x[inner]
    out[inner] = -(xi * log_of(xi, base) + (1 - xi) * log_of(1 - xi, base))
    return out


def shannon_entropy(probs, base: float = 2.0) -> float:
    """Entropy of a probability vector with 0 log 0 = 0."""
    p = np.asarray(probs, dtype=float)
    p = p[p > 0]
    return float(-np.sum(p * log_of(p, base)))


def is_hermitian(m: np.ndarray, tol: float = HERMITIAN_TOL) -> bool:
    return bool(np.max(np.abs(m - m.conj().T)) <= tol)


def _check_square(m: np.ndarray) -> None:
    if m.ndim != 2 or m.shape[0] != m.shape[1] or m.shape[0] not in (2, 4):
        raise InvalidStateError("shape", f"expected a 2x2 or 4x4 matrix, got shape {m.shape}")


def _eig_qubit(m: np.ndarray) -> np.ndarray:
    mean = 0.5 * (m[0, 0].real + m[1, 1].real)
    half_gap = math.hypot(0.5 * (m[0, 0].real - m[1, 1].real), abs(m[0, 1]))
    return np.array([mean + half_gap, mean - half_gap])


def _jacobi_eigvalsh(m: np.ndarray) -> np.ndarray:
    # Cyclic complex Jacobi: phase the (p, q) pair real, then a real rotation.
    a = np.array(m, dtype=complex)
    n = a.shape[0]
    for _ in range(JACOBI_MAX_SWEEPS):
        off = math.sqrt(float(np.sum(np.abs(a[~np.eye(n, dtype=bool)]) ** 2)))
        if off <= JACOBI_TOL:
            return np.sort(np.diag(a).real)[::-1]
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                mag = abs(apq)
                if mag == 0.0:
                    continue
                phase = apq / mag
                a[:, q] *= phase.conjugate()
                a[q, :] *= phase
                app, aqq = a[p, p].real, a[q, q].real
                theta = (aqq - app) / (2.0 * mag)
                t = math.copysign(1.0, theta) / (abs(theta) + math.sqrt(theta * theta + 1.0))
                c = 1.0 / math.sqrt(t * t + 1.0)
                s = t * c
                col_p = a[:, p].copy()
                col_q = a[:, q].copy()
                a[:, p] = c * col_p - s * col_q
                a[:, q] = s * col_p + c * col_q
                row_p = a[p, :].copy()
                row_q = a[q, :].copy()
                a[p, :] = c * row_p - s * row_q
                a[q, :] = s * row_p + c * row_q
                a[p, p] = app - t * mag
                a[q, q] = aqq + t * mag
                a[p, q] = a[q, p] = 0.0
    raise EigenSolverError(f"Jacobi eigensolver did not converge in {JACOBI_MAX_SWEEPS} sweeps")


def eig_hermitian(m: np.ndarray) -> np.ndarray:
    """Eigenvalues of a 2x2 or 4x4 Hermitian matrix, in descending order.

    The 2x2 case is closed form; 4x4 uses cyclic Jacobi rotations until the
    off-diagonal Frobenius norm is at most 1e-14.
    """
    m = np.asarray(m, dtype=complex)
    _check_square(m)
    if not is_hermitian(m):
        raise InvalidStateError("hermitian", "eig_hermitian: matrix is not Hermitian within 1e-12")
    if m.shape[0] == 2:
        return _eig_qubit(m)
    return _jacobi_eigvalsh(m)


def entropy_of_spectrum(eigvals, base: float = 2.0) -> float:
    lam = np.asarray(eigvals, dtype=float)
    if np.any(lam < -PSD_TOL):
        raise InvalidStateError(
            "positivity", f"eigenvalue {lam.min():.3e} below -1e-9; not a density matrix"
        )
    lam = lam[lam > 0.0]
    return float(-np.sum(lam * log_of(lam, base)))


def von_neumann_entropy(rho: np.ndarray, base: float = 2.0) -> float:
    """S(rho) = -tr(rho log rho); eigenvalues in [-1e-9, 0) count as zero."""
    return entropy_of_spectrum(eig_hermitian(rho), base)


def qubit_entropy_from_bloch_norm(norm, base: float = 2.0):
    """Entropy of a qubit state whose Bloch vector has length ``norm``."""
    norm = np.asarray(norm, dtype=float)
    return binary_entropy_array(0.5 * (1.0 + np.minimum(norm, 1.0)), base)


def bloch_to_matrix(v) -> np.ndarray:
    x, y, z = (float(c) for c in v)
    return 0.5 * np.array([[1 + z, x - 1j * y], [x + 1j * y, 1 - z]], dtype=complex)


def matrix_to_bloch(m: np.ndarray) -> np.ndarray:
    """Bloch vector of a 2x2 matrix, normalised by nothing (tr = 1 assumed)."""
    return np.array([2.0 * m[1, 0].real, 2.0 * m[1, 0].imag, (m[0, 0] - m[1, 1]).real])


def partial_trace_b(rho: np.ndarray) -> np.ndarray:
    """Trace out the second qubit of a 4x4 matrix."""
    r = np.asarray(rho).reshape(2, 2, 2, 2)
    return np.einsum("ikjk->ij", r)


def partial_trace_a(rho: np.ndarray) -> np.ndarray:
    """Trace out the first qubit of a 4x4 matrix."""
    r = np.asarray(rho).reshape(2, 2, 2, 2)
    return np.einsum("kikj->ij", r)


def projector(ket) -> np.ndarray:
    ket = np.asarray(ket, dtype=complex)
    return np.outer(ket, ket.conj())


@dataclass(frozen=True)
class QubitState:
    bloch: tuple[float, float, float]

    def __post_init__(self):
        if float(np.linalg.norm(self.bloch)) > 1 + HERMITIAN_TOL:
            raise InvalidStateError("positivity", f"Bloch vector {self.bloch} longer than 1")

    @classmethod
    def from_matrix(cls, m: np.ndarray) -> QubitState:
        return cls(tuple(float(c) for c in matrix_to_bloch(m)))

    @property
    def matrix(self) -> np.ndarray:
        return bloch_to_matrix(self.bloch)

    def entropy(self, base: float = 2.0) -> float:
        return float(qubit_entropy_from_bloch_norm(np.linalg.norm(self.bloch), base))


MAXIMALLY_MIXED = QubitState((0.0, 0.0, 0.0))


def validate_density_matrix(m: np.ndarray) -> None:
    """Raise ``InvalidStateError`` naming the first violated invariant."""
    m = np.asarray(m, dtype=complex)
    _check_square(m)
    if not is_hermitian(m):
        dev = float(np.max(np.abs(m - m.conj().T)))
        raise InvalidStateError("hermitian", f"matrix is not Hermitian (max deviation {dev:.3e} > 1e-12)")
    tr = float(np.trace(m).real)
    if abs(tr - 1.0) > TRACE_TOL:
        raise InvalidStateError("trace", f"trace is {tr!r}, expected 1 within 1e-10")
    lmin = float(eig_hermitian(m)[-1])
    if lmin < -PSD_TOL:
        raise InvalidStateError("positivity", f"smallest eigenvalue {lmin:.3e} below -1e-9")


@dataclass(frozen=True, eq=False)
class TwoQubitState:
    """A validated 4x4 joint density matrix of qubits A and B."""

    matrix: np.ndarray

    def __post_init__(self):
        m = np.array(self.matrix, dtype=complex)
        if m.shape != (4, 4):
            raise InvalidStateError("shape", f"two-qubit state must be 4x4, got {m.shape}")
        validate_density_matrix(m)
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    @classmethod
    def product(cls, rho_a: np.ndarray, rho_b: np.ndarray) -> TwoQubitState:
        return cls(np.kron(rho_a, rho_b))

    def reduced(self, keep: str) -> np.ndarray:
        if keep == "A":
            return partial_trace_b(self.matrix)
        if keep == "B":
            return partial_trace_a(self.matrix)
        raise ValueError(f"keep must be 'A' or 'B', got {keep!r}")

    def swapped(self) -> TwoQubitState:
        r = self.matrix.reshape(2, 2, 2, 2).transpose(1, 0, 3, 2).reshape(4, 4)
        return TwoQubitState(r)

    def local_unitary(self, u_a: np.ndarray, u_b: np.ndarray) -> TwoQubitState:
        u = np.kron(u_a, u_b)
        m = u @ self.matrix @ u.conj().T
        return TwoQubitState(0.5 * (m + m.conj().T))

    def correlation_tensor(self) -> np.ndarray:
        """Real 4x4 tensor T with rho = 1/4 sum_jk T[j, k] s_j (x) s_k, s_0 = 1."""
        basis = (IDENTITY2,) + PAULIS
        t = np.empty((4, 4))
        for j, sj in enumerate(basis):
            for k, sk in enumerate(basis):
                t[j, k] = np.trace(self.matrix @ np.kron(sj, sk)).real
        return t


def random_density_matrix(rng: np.random.Generator, dim: int, rank: int | None = None) -> np.ndarray:
    """Random density matrix from the induced (Ginibre) measure."""
    rank = dim if rank is None else rank
    g = rng.normal(size=(dim, rank)) + 1j * rng.normal(size=(dim, rank))
    m = g @ g.conj().T
    m = m / np.trace(m).real
    return 0.5 * (m + m.conj().T)


def random_unitary(rng: np.random.Generator, dim: int = 2) -> np.ndarray:
    """Haar-random unitary via QR with phase correction."""
    z = (rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))) / math.sqrt(2)
    q, r = np.linalg.qr(z)
    d = np.diag(r)
    return q * (d / np.abs(d))
