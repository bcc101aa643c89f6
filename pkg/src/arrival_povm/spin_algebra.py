"""Spin-1/2 primitives: unit directions, spinors, and effects in Bloch form.

All complex 2x2 algebra lives here. Downstream code only ever sees the
real Bloch coefficients ``(alpha, beta)`` of ``alpha*I + beta.sigma``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import NonHermitianInput, ZeroVector

SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)
SIGMA_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
SIGMA_Z = np.array([[1, 0], [0, -1]], dtype=complex)
PAULI = (SIGMA_X, SIGMA_Y, SIGMA_Z)
IDENTITY = np.eye(2, dtype=complex)

ZERO_NORM_GUARD = 1e-9
HERMITIAN_TOL = 1e-10


@dataclass(frozen=True)
class Direction:
    """Unit vector in R^3. The constructor normalizes its input."""

    x: float
    y: float
    z: float

    def __post_init__(self):
        v = np.array([self.x, self.y, self.z], dtype=float)
        norm = float(np.linalg.norm(v))
        if not np.isfinite(norm) or norm < ZERO_NORM_GUARD:
            raise ZeroVector(f"cannot normalize vector {v.tolist()} (norm {norm:.3g})")
        if abs(norm - 1.0) > 4e-16:
            # already-unit input is kept bit for bit, so serialization round-trips
            v = v / norm
        object.__setattr__(self, "x", float(v[0]))
        object.__setattr__(self, "y", float(v[1]))
        object.__setattr__(self, "z", float(v[2]))

    @classmethod
    def from_vector(cls, v) -> Direction:
        x, y, z = (float(c) for c in v)
        return cls(x, y, z)

    @classmethod
    def from_angles(cls, theta: float, phi: float) -> Direction:
        st = math.sin(theta)
        return cls(st * math.cos(phi), st * math.sin(phi), math.cos(theta))

    def as_array(self) -> np.ndarray:
        return np.array([self.x, self.y, self.z])

    def as_list(self) -> list[float]:
        return [self.x, self.y, self.z]

    def __neg__(self) -> Direction:
        return Direction(-self.x, -self.y, -self.z)

    def dot(self, other: Direction) -> float:
        return self.x * other.x + self.y * other.y + self.z * other.z

    def distance(self, other: Direction) -> float:
        return float(np.linalg.norm(self.as_array() - other.as_array()))

    def label(self) -> str:
        # adding 0.0 turns -0.0 into 0.0 so z and its negation label consistently
        x, y, z = self.x + 0.0, self.y + 0.0, self.z + 0.0
        return f"({x:+.6g},{y:+.6g},{z:+.6g})"


@dataclass(frozen=True)
class Spinor:
    a_up: complex
    a_down: complex
    source_direction: Direction

    def as_array(self) -> np.ndarray:
        return np.array([self.a_up, self.a_down], dtype=complex)

    def pauli_expectation(self) -> np.ndarray:
        """Return <s|sigma|s> as a real 3-vector."""
        v = self.as_array()
        return np.array([np.vdot(v, s @ v).real for s in PAULI])

    def overlap(self, other: Spinor) -> complex:
        return complex(np.vdot(self.as_array(), other.as_array()))


@dataclass(frozen=True)
class Effect:
    """The Hermitian matrix ``alpha*I + beta.sigma``; PSD iff alpha >= |beta|."""

    alpha: float
    beta: tuple[float, float, float] = (0.0, 0.0, 0.0)

    def __post_init__(self):
        object.__setattr__(self, "alpha", float(self.alpha))
        object.__setattr__(self, "beta", tuple(float(b) for b in self.beta))
        if len(self.beta) != 3:
            raise ValueError("beta must have three components")

    @property
    def beta_norm(self) -> float:
        return math.hypot(*self.beta)

    def eigenvalues(self) -> tuple[float, float]:
        b = self.beta_norm
        return self.alpha - b, self.alpha + b

    def matrix(self) -> np.ndarray:
        return self.alpha * IDENTITY + sum(b * s for b, s in zip(self.beta, PAULI))

    def to_dict(self) -> dict:
        return {"alpha": self.alpha, "beta": list(self.beta)}

    @classmethod
    def from_dict(cls, d: dict) -> Effect:
        return cls(d["alpha"], tuple(d["beta"]))


def spinor_from_direction(n: Direction) -> Spinor:
    """Spinor |n> with <n|sigma|n> = n, phase fixed as (cos(t/2), e^{i phi} sin(t/2)).

    The azimuth is taken as 0 on the z axis, so the south pole maps to (0, 1).
    """
    rho = math.hypot(n.x, n.y)
    # atan2 keeps the polar angle well conditioned near the poles
    theta = math.atan2(rho, n.z)
    phi = math.atan2(n.y, n.x) if rho > 0.0 else 0.0
    return Spinor(
        complex(math.cos(theta / 2)),
        complex(math.cos(phi), math.sin(phi)) * math.sin(theta / 2),
        n,
    )


def bloch_decompose(m, tol: float = HERMITIAN_TOL) -> Effect:
    """Expand a 2x2 Hermitian matrix in the Pauli basis."""
    m = np.asarray(m, dtype=complex)
    if m.shape != (2, 2):
        raise NonHermitianInput(f"expected a 2x2 matrix, got shape {m.shape}")
    gap = max(
        abs(m[0, 1] - np.conj(m[1, 0])),
        abs(m[0, 0].imag),
        abs(m[1, 1].imag),
    )
    if gap > tol:
        raise NonHermitianInput(f"matrix is not Hermitian (deviation {gap:.3g} > {tol:.3g})")
    alpha = np.trace(m).real / 2
    beta = tuple(np.trace(m @ s).real / 2 for s in PAULI)
    return Effect(alpha, beta)


def expectation(e: Effect, n: Direction) -> float:
    """<n|(alpha I + beta.sigma)|n> = alpha + beta.n."""
    bx, by, bz = e.beta
    return e.alpha + bx * n.x + by * n.y + bz * n.z


def is_psd(e: Effect, tol: float = 0.0) -> bool:
    return e.alpha >= e.beta_norm - tol


def random_direction(rng: np.random.Generator) -> Direction:
    """Uniform direction on the sphere."""
    while True:
        v = rng.standard_normal(3)
        if np.linalg.norm(v) > 1e-6:
            return Direction.from_vector(v)
