import json

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from arrival_povm.errors import MissingAxis, MissingPerpendicularDirection, TooFewDirections
from arrival_povm.families import (
    X,
    Y,
    Z,
    antipodal_directions,
    chiral_family,
    mix_toward_average,
    noise_family,
    povm_family,
)
from arrival_povm.measurability import (
    CheckReport,
    Verdict,
    axial_defect,
    chiral_defect,
    chiral_hypothesis_gap,
    delta,
    full_report,
    inversion_defect,
    pair_table,
)
from arrival_povm.povm_model import BinnedSpinPOVM, predict_family, random_povm
from arrival_povm.spin_algebra import Direction, Effect
from arrival_povm.time_distributions import DirectionFamily, TimeGrid


def _tv(p, q):
    return float(np.abs(np.asarray(p) - np.asarray(q)).sum())


# -- examples ------------------------------------------------------------------


def test_two_point_family_examples(two_point):
    assert delta(two_point) == pytest.approx(4, abs=1e-12)
    assert axial_defect(two_point) == pytest.approx(4, abs=1e-12)
    assert chiral_defect(two_point) == pytest.approx(2, abs=1e-12)
    assert chiral_hypothesis_gap(two_point) == 0
    r = full_report(two_point)
    assert r.verdict is Verdict.INCOMPATIBLE and r.lower_bound == 1.0 and r.chiral_applicable


def test_povm_family_examples(grid10, rng):
    dirs = [Z, -Z, X, -X, Y, -Y] + antipodal_directions(3, rng)
    f = povm_family(grid10, dirs, seed=4, axis=Z)
    assert delta(f) <= 1e-10
    r = full_report(f, tol=1e-8)
    assert r.verdict is Verdict.POVM_COMPATIBLE_AT_TOL and r.lower_bound <= 2.5e-11
    flat = povm_family(grid10, dirs, seed=4, spin_strength=0.0, axis=Z)
    assert chiral_defect(flat) <= 1e-10 and inversion_defect(flat) <= 1e-10


def test_axial_defect_on_axially_symmetric_povm(grid10, rng):
    alpha = rng.dirichlet(np.ones(11))
    c = alpha * rng.uniform(-1, 1, 11)
    c[-1] -= c.sum()
    alpha[-1] = max(alpha[-1], abs(c[-1]))
    alpha /= alpha.sum()
    c = np.clip(c, -alpha, alpha)
    c[-1] = -c[:-1].sum()
    if abs(c[-1]) > alpha[-1]:
        c[:-1] *= alpha[-1] / abs(c[:-1].sum())
        c[-1] = -c[:-1].sum()
    m = np.zeros((11, 4))
    m[:, 0], m[:, 3] = alpha, c
    povm = BinnedSpinPOVM.from_bloch_matrix(grid10, m)
    f = predict_family(povm, [Z, -Z, X, -X, Y, -Y], axis=Z)
    assert axial_defect(f) <= 1e-10
    r = full_report(f)
    if np.abs(c).sum() > 1e-6:
        assert r.chiral_hypothesis_gap == pytest.approx(2 * np.abs(c).sum(), abs=1e-12)
        assert r.chiral_applicable is False
        assert r.to_dict()["chiral_status"] == "NOT_APPLICABLE"


def test_axial_defect_is_twice_tv_for_equal_up_down(grid10, rng):
    u, v = rng.dirichlet(np.ones(11), 2)
    f = DirectionFamily.from_matrix(grid10, [Z, -Z, X, -X], np.array([u, u, v, v]), axis=Z)
    assert axial_defect(f) == pytest.approx(2 * _tv(u, v), abs=1e-12)


def test_single_bin_projector_inversion_defect():
    grid = TimeGrid(0, 1, 1)
    povm = BinnedSpinPOVM(grid, (Effect(0.5, (0, 0, 0.5)),), Effect(0.5, (0, 0, -0.5)))
    assert inversion_defect(predict_family(povm, [Z, -Z, X, -X])) == pytest.approx(2)


def test_perturbed_povm_delta_matches_hand_sum(grid10, rng):
    dirs = [Z, -Z, X, -X, Y, -Y]
    m = povm_family(grid10, dirs, seed=21).matrix()
    eps = 0.05
    m[2, 4] += eps
    m[2] /= m[2].sum()
    f = DirectionFamily.from_matrix(grid10, dirs, m)
    sums = [m[0] + m[1], m[2] + m[3], m[4] + m[5]]
    hand = max(_tv(sums[a], sums[b]) for a in range(3) for b in range(a + 1, 3))
    assert delta(f) == pytest.approx(hand, abs=1e-14)
    assert delta(f) > 0.05


# -- errors --------------------------------------------------------------------


def test_error_classes(grid10, rng):
    one_pair = DirectionFamily.from_matrix(grid10, [Z, -Z], rng.dirichlet(np.ones(11), 2), axis=Z)
    with pytest.raises(TooFewDirections):
        delta(one_pair)
    no_axis = noise_family(grid10, [Z, -Z, X, -X], rng)
    with pytest.raises(MissingAxis):
        axial_defect(no_axis)
    with pytest.raises(MissingAxis):
        chiral_defect(no_axis)
    off_axis = noise_family(grid10, [X, -X, Y, -Y], rng, axis=Z)
    with pytest.raises(MissingAxis):
        axial_defect(off_axis)
    tilted = Direction(1, 0, 1)
    no_perp = noise_family(grid10, [Z, -Z, tilted, -tilted], rng, axis=Z)
    with pytest.raises(MissingPerpendicularDirection):
        axial_defect(no_perp)
    r = full_report(no_perp)
    assert r.axial_defect is None and r.chiral_defect is not None


# -- properties ----------------------------------------------------------------


def test_soundness_over_many_povms():
    for seed in range(1000):
        rng = np.random.default_rng(seed)
        grid = TimeGrid(0, 1, int(rng.integers(1, 201)))
        dirs = antipodal_directions(int(rng.integers(3, 21)), rng)
        f = predict_family(random_povm(grid, seed, rng.uniform()), dirs)
        assert delta(f) <= 1e-10


@given(st.integers(0, 10**6), st.integers(1, 30), st.integers(0, 4))
def test_axial_defect_bounded_by_delta(seed, bins, extra):
    # axial symmetry: every perpendicular direction carries the same distribution
    rng = np.random.default_rng(seed)
    phi = rng.uniform(0, np.pi)
    b = Direction(np.cos(phi), np.sin(phi), 0)
    dirs = [Z, -Z, X, -X, b, -b] + antipodal_directions(extra, rng)
    m = rng.dirichlet(np.ones(bins + 1), len(dirs))
    m[3:6] = m[2]
    f = DirectionFamily.from_matrix(TimeGrid(0, 1, bins), dirs, m, axis=Z)
    assert axial_defect(f) <= delta(f) + 1e-12


@given(st.integers(0, 10**6), st.integers(1, 30), st.integers(2, 6))
def test_inversion_symmetric_delta_is_twice_sup_tv(seed, bins, pairs):
    rng = np.random.default_rng(seed)
    grid = TimeGrid(0, 1, bins)
    dirs = antipodal_directions(pairs, rng)
    m = np.repeat(rng.dirichlet(np.ones(bins + 1), pairs), 2, axis=0)
    f = DirectionFamily.from_matrix(grid, dirs, m)
    assert inversion_defect(f) == 0
    sup = max(_tv(m[i], m[j]) for i in range(len(m)) for j in range(len(m)))
    assert delta(f) == pytest.approx(2 * sup, abs=1e-12)


@given(st.integers(0, 10**6), st.integers(1, 30))
def test_approximate_measurement_special_case(seed, bins):
    rng = np.random.default_rng(seed)
    u, v = rng.dirichlet(np.ones(bins + 1), 2)
    f = DirectionFamily.from_matrix(TimeGrid(0, 1, bins), [Z, -Z, X, -X], np.array([u, u, v, v]), axis=Z)
    assert delta(f) / 4 == pytest.approx(_tv(v, u) / 2, abs=1e-12)


@given(st.integers(0, 10**6), st.floats(0, 1), st.integers(2, 6))
def test_scale_monotonicity(seed, lam, pairs):
    rng = np.random.default_rng(seed)
    f = noise_family(TimeGrid(0, 1, 12), antipodal_directions(pairs, rng), rng)
    assert delta(mix_toward_average(f, lam)) == pytest.approx((1 - lam) * delta(f), abs=1e-12)


@given(st.integers(0, 10**6))
def test_report_invariants(seed):
    f = chiral_family(TimeGrid(0, 1, 8), 2, seed)
    r = full_report(f)
    assert r.lower_bound == r.delta / 4
    assert r.delta == max(v for _, v in r.per_pair_table)
    assert len(r.per_pair_table) == 3 and r.direction_count == 6
    assert r.chiral_applicable and r.chiral_hypothesis_gap == 0


def test_pair_table_is_order_independent(rng):
    f = noise_family(TimeGrid(0, 1, 5), antipodal_directions(4, rng), rng)
    perm = [2, 3, 6, 7, 0, 1, 4, 5]
    g = DirectionFamily.from_matrix(f.grid, [f.directions[i] for i in perm], f.matrix()[perm])
    assert delta(f) == delta(g)
    assert sorted(v for _, v in pair_table(f)) == sorted(v for _, v in pair_table(g))


def test_report_json_roundtrip(two_point, tmp_path):
    r = full_report(two_point, tol=0.1)
    r.save(tmp_path / "c.json", {"command": "check"})
    raw = json.loads((tmp_path / "c.json").read_text())
    assert raw["verdict"] == "INCOMPATIBLE" and raw["chiral_status"] == "APPLICABLE"
    back = CheckReport.from_dict(raw)
    assert back.delta == r.delta and back.verdict is r.verdict and back.tol == 0.1
    assert [v for _, v in back.per_pair_table] == [v for _, v in r.per_pair_table]
