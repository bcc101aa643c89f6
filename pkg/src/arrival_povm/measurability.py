"""Necessary conditions for a direction family to come from a spin POVM.

Every spin POVM gives ``P_n + P_{-n} = Tr(O)`` for all directions, so the
largest discrepancy between antipodal-pair sums (``delta``) must vanish, and
a quarter of it bounds from below the worst-case error of any approximating
spin POVM. All suprema run over the listed directions only; the spherical
supremum can only be larger.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .errors import DirectionNotFound, MissingAxis, MissingPerpendicularDirection
from .spin_algebra import Direction
from .time_distributions import DirectionFamily, write_json

PERPENDICULAR_TOL = 1e-6
DEFAULT_TOL = 1e-6


class Verdict(str, Enum):
    POVM_COMPATIBLE_AT_TOL = "POVM_COMPATIBLE_AT_TOL"
    INCOMPATIBLE = "INCOMPATIBLE"


def pair_sums(f: DirectionFamily) -> tuple[list[tuple[int, int]], np.ndarray]:
    """Antipodal index pairs and the matching sums P_n + P_{-n} as rows."""
    pairs = f.antipodal_pairs()
    m = f.matrix()
    return pairs, np.array([m[i] + m[j] for i, j in pairs]).reshape(len(pairs), -1)


def pair_table(f: DirectionFamily) -> list[tuple[tuple[Direction, Direction], float]]:
    """TV distance between the pair sums of every unordered pair of antipodal pairs.

    Each antipodal pair is named by its first-listed direction.
    """
    pairs, sums = pair_sums(f)
    dirs = f.directions
    table = []
    for a in range(len(pairs)):
        for b in range(a + 1, len(pairs)):
            d = float(np.abs(sums[a] - sums[b]).sum())
            table.append(((dirs[pairs[a][0]], dirs[pairs[b][0]]), d))
    return table


def max_pair_discrepancy(f: DirectionFamily) -> float:
    """Like ``delta`` but 0 for a single antipodal pair instead of raising."""
    _, sums = pair_sums(f)
    if len(sums) < 2:
        return 0.0
    diff = np.abs(sums[:, None, :] - sums[None, :, :]).sum(axis=-1)
    return float(diff.max())


def delta(f: DirectionFamily) -> float:
    f.require_pairs(2)
    return max(v for _, v in pair_table(f))


def _axis_indices(f: DirectionFamily) -> tuple[int, int]:
    if f.axis is None:
        raise MissingAxis("family declares no symmetry axis")
    try:
        up = f.index_of(f.axis)
    except DirectionNotFound:
        raise MissingAxis(f"axis {f.axis.label()} is not among the listed directions") from None
    return up, f.antipode_index(up)


def perpendicular_indices(f: DirectionFamily, tol: float = PERPENDICULAR_TOL) -> list[int]:
    if f.axis is None:
        raise MissingAxis("family declares no symmetry axis")
    a = f.axis.as_array()
    return [i for i, n in enumerate(f.direction_array()) if abs(n @ a) <= tol]


def axial_defect(f: DirectionFamily) -> float:
    """max over perpendicular b of ||P_up + P_down - 2 P_b||."""
    up, down = _axis_indices(f)
    perp = perpendicular_indices(f)
    if not perp:
        raise MissingPerpendicularDirection("no listed direction is perpendicular to the axis")
    m = f.matrix()
    s = m[up] + m[down]
    return float(max(np.abs(s - 2 * m[b]).sum() for b in perp))


def chiral_hypothesis_gap(f: DirectionFamily) -> float:
    """||P_up - P_down||; the chiral check applies only when this is small."""
    up, down = _axis_indices(f)
    m = f.matrix()
    return float(np.abs(m[up] - m[down]).sum())


def chiral_defect(f: DirectionFamily) -> float:
    """sup_n ||P_n - P_up||.

    Under axial symmetry plus P_up = P_down a spin POVM predicts no spin
    dependence at all, so any nonzero value is a violation. Meaningful only
    when ``chiral_hypothesis_gap`` is within tolerance.
    """
    up, _ = _axis_indices(f)
    m = f.matrix()
    return float(np.abs(m - m[up]).sum(axis=1).max())


def inversion_defect(f: DirectionFamily) -> float:
    """sup_n ||P_n - P_{-n}||."""
    m = f.matrix()
    if not len(m):
        return 0.0
    partner = [f.antipode_index(i) for i in range(len(f))]
    return float(np.abs(m - m[partner]).sum(axis=1).max())


@dataclass
class CheckReport:
    delta: float
    lower_bound: float
    axial_defect: float | None
    chiral_defect: float | None
    chiral_hypothesis_gap: float | None
    chiral_applicable: bool | None
    inversion_defect: float
    per_pair_table: list = field(default_factory=list)
    verdict: Verdict = Verdict.POVM_COMPATIBLE_AT_TOL
    tol: float = DEFAULT_TOL
    direction_count: int = 0

    def to_dict(self) -> dict:
        return {
            "delta": self.delta,
            "lower_bound": self.lower_bound,
            "axial_defect": self.axial_defect,
            "chiral_defect": self.chiral_defect,
            "chiral_hypothesis_gap": self.chiral_hypothesis_gap,
            "chiral_status": (
                None if self.chiral_applicable is None else ("APPLICABLE" if self.chiral_applicable else "NOT_APPLICABLE")
            ),
            "inversion_defect": self.inversion_defect,
            "per_pair_table": [
                {"n": n.as_list(), "m": m.as_list(), "defect": v} for (n, m), v in self.per_pair_table
            ],
            "verdict": self.verdict.value,
            "tol": self.tol,
            "direction_count": self.direction_count,
        }

    @classmethod
    def from_dict(cls, d: dict) -> CheckReport:
        status = d.get("chiral_status")
        return cls(
            delta=d["delta"],
            lower_bound=d["lower_bound"],
            axial_defect=d.get("axial_defect"),
            chiral_defect=d.get("chiral_defect"),
            chiral_hypothesis_gap=d.get("chiral_hypothesis_gap"),
            chiral_applicable=None if status is None else status == "APPLICABLE",
            inversion_defect=d["inversion_defect"],
            per_pair_table=[
                ((Direction.from_vector(r["n"]), Direction.from_vector(r["m"])), r["defect"])
                for r in d.get("per_pair_table", [])
            ],
            verdict=Verdict(d["verdict"]),
            tol=d.get("tol", DEFAULT_TOL),
            direction_count=d.get("direction_count", 0),
        )

    def save(self, path, manifest: dict | None = None):
        payload = self.to_dict()
        if manifest is not None:
            payload["manifest"] = manifest
        write_json(path, payload)


def full_report(f: DirectionFamily, tol: float = DEFAULT_TOL) -> CheckReport:
    f.require_pairs(2)
    table = pair_table(f)
    d = max(v for _, v in table)

    axial = chiral = gap = applicable = None
    if f.axis is not None:
        try:
            _axis_indices(f)
        except MissingAxis:
            pass
        else:
            gap = chiral_hypothesis_gap(f)
            chiral = chiral_defect(f)
            applicable = gap <= tol
            if perpendicular_indices(f):
                axial = axial_defect(f)

    return CheckReport(
        delta=d,
        lower_bound=d / 4,
        axial_defect=axial,
        chiral_defect=chiral,
        chiral_hypothesis_gap=gap,
        chiral_applicable=applicable,
        inversion_defect=inversion_defect(f),
        per_pair_table=table,
        verdict=Verdict.INCOMPATIBLE if d > tol else Verdict.POVM_COMPATIBLE_AT_TOL,
        tol=tol,
        direction_count=len(f),
    )
