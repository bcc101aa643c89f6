import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from arrival_povm.errors import InvalidPOVM
from arrival_povm.families import X, Z, antipodal_directions
from arrival_povm.measurability import delta
from arrival_povm.povm_model import (
    BinnedSpinPOVM,
    convex_combination,
    predict_family,
    random_povm,
    validate,
)
from arrival_povm.spin_algebra import Effect, random_direction
from arrival_povm.time_distributions import TimeGrid


def test_trivial_povm_is_spin_independent(rng):
    grid = TimeGrid(0, 1, 5)
    w = np.array([0.1, 0.2, 0.3, 0.25, 0.15])
    povm = BinnedSpinPOVM.spin_independent(grid, w)
    assert validate(povm) == []
    fam = predict_family(povm, antipodal_directions(4, rng))
    for _, p in fam.entries:
        assert np.allclose(p.weights, w, atol=1e-15) and p.censored_mass == 0


def test_single_bin_projector_povm():
    grid = TimeGrid(0, 1, 1)
    povm = BinnedSpinPOVM(grid, (Effect(0.5, (0, 0, 0.5)),), Effect(0.5, (0, 0, -0.5)))
    fam = predict_family(povm, [Z, -Z, X, -X])
    m = fam.matrix()
    assert np.allclose(m[0], [1, 0]) and np.allclose(m[1], [0, 1]) and np.allclose(m[2], [0.5, 0.5])


def test_validate_reports_psd_violation_with_slack():
    grid = TimeGrid(0, 1, 2)
    povm = BinnedSpinPOVM(grid, (Effect(0.1, (0, 0, 0.2)), Effect(0.4, (0, 0, -0.2))), Effect(0.5))
    (v,) = validate(povm)
    assert v.kind == "psd" and v.bin == 0 and v.slack == pytest.approx(0.1)


def test_validate_reports_completeness_violation_with_slack():
    grid = TimeGrid(0, 1, 3)
    povm = BinnedSpinPOVM.spin_independent(grid, [0.2, 0.3, 0.55])
    (v,) = validate(povm)
    assert v.kind == "completeness" and v.slack == pytest.approx(0.05)
    with pytest.raises(InvalidPOVM):
        predict_family(povm, [Z, -Z])


def test_validate_reports_residual_and_beta_sum():
    grid = TimeGrid(0, 1, 1)
    povm = BinnedSpinPOVM(grid, (Effect(0.5, (0, 0, 0.5)),), Effect(0.5, (0, 0, 0)))
    kinds = sorted(v.inequality for v in validate(povm))
    assert kinds == ["sum(beta) == 0"]
    povm = BinnedSpinPOVM(grid, (Effect(0.9, (0, 0, 0.2)),), Effect(0.1, (0, 0, -0.2)))
    (v,) = validate(povm)
    assert v.bin == -1 and v.slack == pytest.approx(0.1)


def test_random_povm_examples():
    grid = TimeGrid(0, 1, 50)
    assert validate(random_povm(grid, 7, 1.0)) == []
    zero = random_povm(grid, 3, 0.0)
    assert np.all(zero.bloch_matrix()[:, 1:] == 0)
    a, b = random_povm(grid, 5, 0.6), random_povm(grid, 5, 0.6)
    assert np.array_equal(a.bloch_matrix(), b.bloch_matrix())
    with pytest.raises(ValueError):
        random_povm(grid, 0, 1.5)


def test_random_povm_respects_spin_strength():
    grid = TimeGrid(0, 1, 40)
    for s in (0.1, 0.5, 0.9):
        m = random_povm(grid, 11, s).bloch_matrix()[:-1]
        assert np.all(np.linalg.norm(m[:, 1:], axis=1) <= s * m[:, 0] + 1e-15)


@given(st.integers(0, 10**6), st.integers(1, 200), st.floats(0, 1), st.integers(1, 20))
def test_trace_identity_at_model_level(seed, bins, strength, pairs):
    rng = np.random.default_rng(seed)
    povm = random_povm(TimeGrid(0, 1, bins), seed, strength)
    assert validate(povm) == []
    fam = predict_family(povm, antipodal_directions(pairs, rng))
    m = fam.matrix()
    assert m.min() >= 0
    assert np.allclose(m.sum(axis=1), 1, atol=1e-10)
    expected = 2 * povm.bloch_matrix()[:, 0]
    for i, j in fam.antipodal_pairs():
        assert np.max(np.abs(m[i] + m[j] - expected)) <= 1e-12


def test_predictions_nonnegative_on_many_pairs(rng):
    for seed in range(1000):
        povm = random_povm(TimeGrid(0, 1, int(rng.integers(1, 30))), seed, 1.0)
        n = random_direction(rng)
        assert povm.predict_matrix([n]).min() >= -1e-15


def test_predict_is_linear_in_povm(rng):
    grid = TimeGrid(0, 1, 25)
    p, q = random_povm(grid, 1, 0.8), random_povm(grid, 2, 0.4)
    dirs = antipodal_directions(5, rng)
    for lam in (0.0, 0.3, 0.77, 1.0):
        mix = predict_family(convex_combination(p, q, lam), dirs).matrix()
        expect = (1 - lam) * predict_family(p, dirs).matrix() + lam * predict_family(q, dirs).matrix()
        assert np.max(np.abs(mix - expect)) <= 1e-12


def test_predicted_family_has_zero_delta(rng):
    fam = predict_family(random_povm(TimeGrid(0, 1, 40), 99, 1.0), antipodal_directions(6, rng))
    assert delta(fam) <= 1e-10


def test_povm_json_roundtrip(tmp_path):
    povm = random_povm(TimeGrid(0, 0.5, 7), 4, 0.9)
    povm.save(tmp_path / "p.json")
    back = BinnedSpinPOVM.load(tmp_path / "p.json")
    assert np.array_equal(back.bloch_matrix(), povm.bloch_matrix())
    assert back.grid == povm.grid
