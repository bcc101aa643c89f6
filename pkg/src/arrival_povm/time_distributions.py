"""Binned arrival-time distributions and direction-indexed families of them.

A distribution is a vector of bin masses on a uniform time grid plus one
extra coordinate, the censored (never detected within the horizon) mass.
Total variation is the plain L1 norm over all ``bin_count + 1`` coordinates,
so two distinct unit point masses are at distance 2.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import DirectionNotFound, GridMismatch, InfeasibleGrid, TooFewDirections
from .spin_algebra import Direction

NORMALIZATION_TOL = 1e-9
DIRECTION_MATCH_TOL = 1e-9
DUPLICATE_TOL = 1e-6


@dataclass(frozen=True)
class TimeGrid:
    t_start: float
    bin_width: float
    bin_count: int

    def __post_init__(self):
        if not self.bin_width > 0:
            raise ValueError(f"bin_width must be positive, got {self.bin_width}")
        if int(self.bin_count) != self.bin_count or self.bin_count < 0:
            raise ValueError(f"bin_count must be a positive integer, got {self.bin_count}")
        if self.bin_count == 0:
            raise InfeasibleGrid(f"bin_count must be a positive integer, got {self.bin_count}")
        object.__setattr__(self, "t_start", float(self.t_start))
        object.__setattr__(self, "bin_width", float(self.bin_width))
        object.__setattr__(self, "bin_count", int(self.bin_count))

    @property
    def t_end(self) -> float:
        return self.t_start + self.bin_width * self.bin_count

    @property
    def edges(self) -> np.ndarray:
        return self.t_start + self.bin_width * np.arange(self.bin_count + 1)

    def matches(self, other: TimeGrid) -> bool:
        return (
            self.bin_count == other.bin_count
            and math.isclose(self.t_start, other.t_start, rel_tol=1e-12, abs_tol=1e-12)
            and math.isclose(self.bin_width, other.bin_width, rel_tol=1e-12)
        )

    def bin_index(self, t: np.ndarray) -> np.ndarray:
        """Bin index for each time; -1 below the grid, bin_count at or beyond its end."""
        t = np.asarray(t, dtype=float)
        k = np.clip(np.floor((t - self.t_start) / self.bin_width), -1, self.bin_count)
        return k.astype(np.int64)

    def to_dict(self) -> dict:
        return {"t_start": self.t_start, "bin_width": self.bin_width, "bin_count": self.bin_count}

    @classmethod
    def from_dict(cls, d: dict) -> TimeGrid:
        return cls(float(d["t_start"]), float(d["bin_width"]), int(d["bin_count"]))


@dataclass(frozen=True, eq=False)
class BinnedDistribution:
    """Bin masses plus censored mass.

    With ``normalized=True`` the masses must be nonnegative and sum to one.
    Unnormalized instances are signed measures used for defect arithmetic
    (sums of antipodal pairs, differences).
    """

    grid: TimeGrid
    weights: np.ndarray
    censored_mass: float = 0.0
    normalized: bool = True

    def __post_init__(self):
        w = np.array(self.weights, dtype=float)
        if w.shape != (self.grid.bin_count,):
            raise ValueError(f"expected {self.grid.bin_count} weights, got shape {w.shape}")
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "censored_mass", float(self.censored_mass))
        if self.normalized:
            if w.min(initial=0.0) < 0 or self.censored_mass < 0:
                raise ValueError("normalized distribution has negative mass")
            total = self.total_mass
            if abs(total - 1.0) > NORMALIZATION_TOL:
                raise ValueError(f"normalized distribution has total mass {total!r}")

    @classmethod
    def from_vector(cls, grid: TimeGrid, v, normalized: bool = True) -> BinnedDistribution:
        """Build from a length ``bin_count + 1`` vector whose last entry is the censored mass."""
        v = np.asarray(v, dtype=float)
        return cls(grid, v[:-1], float(v[-1]), normalized)

    @classmethod
    def point_mass(cls, grid: TimeGrid, k: int) -> BinnedDistribution:
        w = np.zeros(grid.bin_count)
        w[k] = 1.0
        return cls(grid, w, 0.0)

    @property
    def total_mass(self) -> float:
        return float(self.weights.sum() + self.censored_mass)

    def as_vector(self) -> np.ndarray:
        return np.append(self.weights, self.censored_mass)

    def equals(self, other: BinnedDistribution, atol: float = 0.0) -> bool:
        return self.grid.matches(other.grid) and bool(
            np.all(np.abs(self.as_vector() - other.as_vector()) <= atol)
        )


def _check_grids(p: BinnedDistribution, q: BinnedDistribution):
    if not p.grid.matches(q.grid):
        raise GridMismatch(f"grids differ: {p.grid} vs {q.grid}")


def tv_distance(p: BinnedDistribution, q: BinnedDistribution) -> float:
    """L1 distance over bins and the censored coordinate."""
    _check_grids(p, q)
    return float(np.abs(p.weights - q.weights).sum() + abs(p.censored_mass - q.censored_mass))


def combine(
    p: BinnedDistribution, q: BinnedDistribution, scale_p: float = 1.0, scale_q: float = 1.0
) -> BinnedDistribution:
    """Binwise ``scale_p*p + scale_q*q``, flagged unnormalized."""
    _check_grids(p, q)
    return BinnedDistribution(
        p.grid,
        scale_p * p.weights + scale_q * q.weights,
        scale_p * p.censored_mass + scale_q * q.censored_mass,
        normalized=False,
    )


@dataclass(frozen=True, eq=False)
class DirectionFamily:
    """A finite, antipodally closed map n -> P_n on a shared grid.

    Validated once at construction: shared grid, antipodal closure within
    1e-9, and no two directions closer than 1e-6.
    """

    grid: TimeGrid
    entries: tuple = field(default_factory=tuple)
    axis: Direction | None = None
    normalized: bool = True

    def __post_init__(self):
        entries = tuple((n, p) for n, p in self.entries)
        object.__setattr__(self, "entries", entries)
        for n, p in entries:
            if not p.grid.matches(self.grid):
                raise GridMismatch(f"distribution for {n.label()} is on grid {p.grid}, family uses {self.grid}")
        dirs = np.array([n.as_array() for n, _ in entries]).reshape(-1, 3)
        if len(dirs):
            dist = np.linalg.norm(dirs[:, None, :] - dirs[None, :, :], axis=-1)
            np.fill_diagonal(dist, np.inf)
            if dist.min() < DUPLICATE_TOL:
                i, j = np.unravel_index(np.argmin(dist), dist.shape)
                raise ValueError(f"duplicate directions {entries[i][0].label()} and {entries[j][0].label()}")
            anti = np.linalg.norm(dirs[:, None, :] + dirs[None, :, :], axis=-1)
            partner = anti.argmin(axis=1)
            missing = [entries[i][0].label() for i in range(len(entries)) if anti[i, partner[i]] > DIRECTION_MATCH_TOL]
            if missing:
                raise ValueError(f"family is not antipodally closed; missing -n for {', '.join(missing)}")
            object.__setattr__(self, "_partner", tuple(int(j) for j in partner))
        else:
            object.__setattr__(self, "_partner", ())

    def __len__(self) -> int:
        return len(self.entries)

    @property
    def directions(self) -> list[Direction]:
        return [n for n, _ in self.entries]

    @property
    def distributions(self) -> list[BinnedDistribution]:
        return [p for _, p in self.entries]

    def matrix(self) -> np.ndarray:
        """Array of shape (directions, bin_count + 1); censored mass in the last column."""
        return np.array([p.as_vector() for _, p in self.entries]).reshape(len(self.entries), self.grid.bin_count + 1)

    def direction_array(self) -> np.ndarray:
        return np.array([n.as_array() for n, _ in self.entries]).reshape(-1, 3)

    def index_of(self, n: Direction, tol: float = DIRECTION_MATCH_TOL) -> int:
        for i, (m, _) in enumerate(self.entries):
            if m.distance(n) <= tol:
                return i
        raise DirectionNotFound(f"direction {n.label()} is not listed in the family")

    def antipode_index(self, i: int) -> int:
        return self._partner[i]

    def antipodal_pairs(self) -> list[tuple[int, int]]:
        """Index pairs (i, j) with n_j = -n_i, in order of first appearance."""
        seen, pairs = set(), []
        for i, j in enumerate(self._partner):
            if i not in seen:
                pairs.append((i, j))
                seen.update((i, j))
        return pairs

    def require_pairs(self, count: int = 2):
        if len(self.antipodal_pairs()) < count:
            raise TooFewDirections(f"need at least {count} antipodal pairs, family has {len(self.antipodal_pairs())}")

    def with_axis(self, axis: Direction | None) -> DirectionFamily:
        return DirectionFamily(self.grid, self.entries, axis, self.normalized)

    @classmethod
    def from_matrix(cls, grid, directions, matrix, axis=None, normalized=True) -> DirectionFamily:
        matrix = np.asarray(matrix, dtype=float)
        entries = [
            (n, BinnedDistribution.from_vector(grid, row, normalized=normalized))
            for n, row in zip(directions, matrix)
        ]
        return cls(grid, tuple(entries), axis, normalized)

    # -- serialization -----------------------------------------------------

    def to_dict(self) -> dict:
        order = [k for pair in self.antipodal_pairs() for k in pair]
        return {
            "grid": self.grid.to_dict(),
            "axis": self.axis.as_list() if self.axis is not None else None,
            "entries": [
                {
                    "direction": self.entries[k][0].as_list(),
                    "weights": self.entries[k][1].weights.tolist(),
                    "censored": self.entries[k][1].censored_mass,
                }
                for k in order
            ],
            "normalized": self.normalized,
        }

    @classmethod
    def from_dict(cls, d: dict) -> DirectionFamily:
        grid = TimeGrid.from_dict(d["grid"])
        normalized = bool(d.get("normalized", True))
        axis = Direction.from_vector(d["axis"]) if d.get("axis") is not None else None
        entries = [
            (
                Direction.from_vector(e["direction"]),
                BinnedDistribution(grid, e["weights"], e.get("censored", 0.0), normalized),
            )
            for e in d["entries"]
        ]
        return cls(grid, tuple(entries), axis, normalized)

    def save(self, path, manifest: dict | None = None):
        payload = self.to_dict()
        if manifest is not None:
            payload["manifest"] = manifest
        write_json(path, payload)

    @classmethod
    def load(cls, path) -> DirectionFamily:
        return cls.from_dict(json.loads(Path(path).read_text()))


def antipode_lookup(f: DirectionFamily, n: Direction) -> tuple[BinnedDistribution, BinnedDistribution]:
    i = f.index_of(n)
    return f.entries[i][1], f.entries[f.antipode_index(i)][1]


def write_json(path, payload: dict):
    """Deterministic JSON: sorted keys, full float precision, trailing newline."""
    Path(path).write_text(json.dumps(payload, indent=2, sort_keys=True) + "\n")
