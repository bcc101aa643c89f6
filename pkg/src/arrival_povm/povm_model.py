"""Time-binned spin POVMs and the statistics they predict.

A ``BinnedSpinPOVM`` holds one effect per time bin plus a residual
(no-detection) effect. Completeness is an equality: the effects and the
residual sum to the identity.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import InvalidPOVM
from .spin_algebra import Direction, Effect
from .time_distributions import DirectionFamily, TimeGrid, write_json

POVM_TOL = 1e-10


@dataclass(frozen=True)
class Violation:
    kind: str  # "psd" or "completeness"
    bin: int | None  # None for completeness; -1 for the residual effect
    inequality: str
    slack: float

    def __str__(self):
        where = "residual" if self.bin == -1 else ("all bins" if self.bin is None else f"bin {self.bin}")
        return f"{self.kind} violated at {where}: {self.inequality} (slack {self.slack:.3g})"


@dataclass(frozen=True, eq=False)
class BinnedSpinPOVM:
    grid: TimeGrid
    effects: tuple
    residual: Effect

    def __post_init__(self):
        effects = tuple(self.effects)
        if len(effects) != self.grid.bin_count:
            raise ValueError(f"expected {self.grid.bin_count} effects, got {len(effects)}")
        object.__setattr__(self, "effects", effects)

    @classmethod
    def from_arrays(cls, grid: TimeGrid, alphas, betas, residual_alpha, residual_beta) -> BinnedSpinPOVM:
        effects = tuple(Effect(a, tuple(b)) for a, b in zip(np.asarray(alphas, float), np.asarray(betas, float)))
        return cls(grid, effects, Effect(residual_alpha, tuple(residual_beta)))

    @classmethod
    def from_bloch_matrix(cls, grid: TimeGrid, m) -> BinnedSpinPOVM:
        """Inverse of ``bloch_matrix``: rows (alpha, bx, by, bz), residual last."""
        m = np.asarray(m, dtype=float)
        return cls.from_arrays(grid, m[:-1, 0], m[:-1, 1:], m[-1, 0], m[-1, 1:])

    @classmethod
    def spin_independent(cls, grid: TimeGrid, weights, censored: float = 0.0) -> BinnedSpinPOVM:
        """Effects ``p_k * I``: every spin direction sees the same distribution."""
        return cls.from_arrays(grid, weights, np.zeros((grid.bin_count, 3)), censored, (0.0, 0.0, 0.0))

    def bloch_matrix(self) -> np.ndarray:
        """Array of shape (bin_count + 1, 4), rows (alpha, bx, by, bz), residual row last."""
        rows = [(e.alpha, *e.beta) for e in self.effects]
        rows.append((self.residual.alpha, *self.residual.beta))
        return np.array(rows, dtype=float)

    def predict_matrix(self, directions) -> np.ndarray:
        """Predicted masses alpha + beta.n, shape (len(directions), bin_count + 1)."""
        m = self.bloch_matrix()
        n = np.array([d.as_array() for d in directions]).reshape(-1, 3)
        return m[:, 0][None, :] + n @ m[:, 1:].T

    def to_dict(self) -> dict:
        return {
            "grid": self.grid.to_dict(),
            "effects": [e.to_dict() for e in self.effects],
            "residual": self.residual.to_dict(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> BinnedSpinPOVM:
        grid = TimeGrid.from_dict(d["grid"])
        return cls(grid, tuple(Effect.from_dict(e) for e in d["effects"]), Effect.from_dict(d["residual"]))

    def save(self, path, manifest: dict | None = None):
        payload = self.to_dict()
        if manifest is not None:
            payload["manifest"] = manifest
        write_json(path, payload)

    @classmethod
    def load(cls, path) -> BinnedSpinPOVM:
        return cls.from_dict(json.loads(Path(path).read_text()))


def validate(povm: BinnedSpinPOVM, tol: float = POVM_TOL) -> list[Violation]:
    """List every positivity and completeness violation beyond ``tol``."""
    out = []
    for k, e in enumerate((*povm.effects, povm.residual)):
        slack = e.beta_norm - e.alpha
        if slack > tol:
            b = -1 if k == povm.grid.bin_count else k
            out.append(Violation("psd", b, "alpha >= |beta|", slack))
    m = povm.bloch_matrix()
    total = m.sum(axis=0)
    if abs(total[0] - 1.0) > tol:
        out.append(Violation("completeness", None, "sum(alpha) == 1", abs(total[0] - 1.0)))
    beta_gap = float(np.linalg.norm(total[1:]))
    if beta_gap > tol:
        out.append(Violation("completeness", None, "sum(beta) == 0", beta_gap))
    return out


def predict_family(
    povm: BinnedSpinPOVM, directions, axis: Direction | None = None, tol: float = POVM_TOL
) -> DirectionFamily:
    """The family n -> P_n with P_n(bin k) = <n|O_k|n>."""
    problems = validate(povm, tol)
    if problems:
        raise InvalidPOVM("; ".join(str(v) for v in problems))
    pred = povm.predict_matrix(directions)
    # rounding can leave PSD-tight effects a few ulps below zero
    pred = np.where((pred < 0) & (pred >= -tol), 0.0, pred)
    return DirectionFamily.from_matrix(povm.grid, directions, pred, axis=axis)


def convex_combination(p: BinnedSpinPOVM, q: BinnedSpinPOVM, lam: float) -> BinnedSpinPOVM:
    """``(1 - lam) p + lam q``; valid whenever both inputs are."""
    return BinnedSpinPOVM.from_bloch_matrix(p.grid, (1 - lam) * p.bloch_matrix() + lam * q.bloch_matrix())


def _ball_sample(rng: np.random.Generator, radius: np.ndarray) -> np.ndarray:
    v = rng.standard_normal((len(radius), 3))
    v /= np.linalg.norm(v, axis=1, keepdims=True)
    r = radius * rng.random(len(radius)) ** (1.0 / 3.0)
    return v * r[:, None]


def random_povm(
    grid: TimeGrid,
    seed: int,
    spin_strength: float = 1.0,
    residual_fraction: tuple[float, float] = (0.05, 0.5),
    max_retries: int = 1000,
) -> BinnedSpinPOVM:
    """Seeded random valid POVM; each |beta_k| <= spin_strength * alpha_k.

    Draws that leave the residual effect non-positive are redrawn. After
    ``max_retries`` failures all betas are shrunk until the residual is PSD.
    """
    if not 0.0 <= spin_strength <= 1.0:
        raise ValueError(f"spin_strength must lie in [0, 1], got {spin_strength}")
    rng = np.random.default_rng(seed)
    k = grid.bin_count
    for _ in range(max_retries):
        res_alpha = rng.uniform(*residual_fraction)
        w = rng.exponential(size=k)
        alphas = (1.0 - res_alpha) * w / w.sum()
        betas = _ball_sample(rng, spin_strength * alphas)
        res_beta = -betas.sum(axis=0)
        if np.linalg.norm(res_beta) <= res_alpha:
            break
    else:
        shrink = res_alpha / np.linalg.norm(res_beta)
        betas *= shrink
        res_beta = -betas.sum(axis=0)
    return BinnedSpinPOVM.from_arrays(grid, alphas, betas, res_alpha, res_beta)
