"""Generators for direction families used by tests, scripts and fixtures."""

from __future__ import annotations

import numpy as np

from .povm_model import BinnedSpinPOVM, predict_family, random_povm
from .spin_algebra import Direction, random_direction
from .time_distributions import BinnedDistribution, DirectionFamily, TimeGrid

Z = Direction(0.0, 0.0, 1.0)
X = Direction(1.0, 0.0, 0.0)
Y = Direction(0.0, 1.0, 0.0)


def antipodal_directions(pairs: int, rng: np.random.Generator) -> list[Direction]:
    """``pairs`` random directions, each followed by its antipode."""
    out = []
    while len(out) < 2 * pairs:
        n = random_direction(rng)
        if all(n.distance(m) > 1e-3 and n.distance(-m) > 1e-3 for m in out):
            out += [n, -n]
    return out


def two_point_family(grid: TimeGrid, a: int, b: int) -> DirectionFamily:
    """P_{+-z} = point mass at bin a, P_{+-x} = point mass at bin b, axis z."""
    pa = BinnedDistribution.point_mass(grid, a)
    pb = BinnedDistribution.point_mass(grid, b)
    return DirectionFamily(grid, ((Z, pa), (-Z, pa), (X, pb), (-X, pb)), axis=Z)


def random_distribution_matrix(rows: int, grid: TimeGrid, rng: np.random.Generator, concentration: float = 1.0):
    """Rows drawn from a Dirichlet over the bins plus the censored coordinate."""
    return rng.dirichlet(np.full(grid.bin_count + 1, concentration), size=rows)


def noise_family(grid: TimeGrid, directions, rng: np.random.Generator, axis=None) -> DirectionFamily:
    return DirectionFamily.from_matrix(grid, directions, random_distribution_matrix(len(directions), grid, rng), axis)


def povm_family(grid: TimeGrid, directions, seed: int, spin_strength: float = 1.0, axis=None) -> DirectionFamily:
    return predict_family(random_povm(grid, seed, spin_strength), directions, axis=axis)


def mixed_family(grid: TimeGrid, pairs: int, seed: int) -> DirectionFamily:
    """Convex mixture of a POVM-generated family and arbitrary noise, random weight."""
    rng = np.random.default_rng(seed)
    dirs = antipodal_directions(pairs, rng)
    lam = rng.uniform()
    m = (1 - lam) * povm_family(grid, dirs, seed + 10_000, rng.uniform()).matrix()
    m = m + lam * random_distribution_matrix(len(dirs), grid, rng)
    return DirectionFamily.from_matrix(grid, dirs, m / m.sum(axis=1, keepdims=True))


def chiral_family(grid: TimeGrid, perpendicular_pairs: int, seed: int, axis: Direction = Z) -> DirectionFamily:
    """Family with P_up = P_down listed on +-axis and random perpendicular directions.

    Perpendicular directions come in antipodal pairs with independent random
    distributions, so only axial + chiral structure is imposed.
    """
    rng = np.random.default_rng(seed)
    a = axis.as_array()
    helper = np.array([1.0, 0.0, 0.0]) if abs(a[0]) < 0.9 else np.array([0.0, 1.0, 0.0])
    e1 = np.cross(a, helper)
    e1 /= np.linalg.norm(e1)
    e2 = np.cross(a, e1)
    angles = rng.uniform(0, np.pi, perpendicular_pairs) + np.pi * np.arange(perpendicular_pairs) / perpendicular_pairs
    dirs = [axis, -axis]
    for phi in angles:
        n = Direction.from_vector(np.cos(phi) * e1 + np.sin(phi) * e2)
        dirs += [n, -n]
    m = random_distribution_matrix(len(dirs), grid, rng)
    m[1] = m[0]
    return DirectionFamily.from_matrix(grid, dirs, m, axis=axis)


def direction_average(f: DirectionFamily) -> np.ndarray:
    return f.matrix().mean(axis=0)


def mix_toward_average(f: DirectionFamily, lam: float) -> DirectionFamily:
    m = f.matrix()
    return DirectionFamily.from_matrix(f.grid, f.directions, (1 - lam) * m + lam * m.mean(axis=0), f.axis, f.normalized)


def spin_independent_povm(grid: TimeGrid, weights, censored: float = 0.0) -> BinnedSpinPOVM:
    return BinnedSpinPOVM.spin_independent(grid, weights, censored)
