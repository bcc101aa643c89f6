"""Acceptance criteria, one test each.

Every test prints a single ``CRITERION <k>: PASS|FAIL`` line (also collected
into the terminal summary) and then asserts the same condition.
"""

import hashlib
import json
import time

import numpy as np
import pytest

from arrival_povm.cli import main, suggested_tol
from arrival_povm.config import bundled_config_path, load_config
from arrival_povm.families import (
    X,
    Z,
    antipodal_directions,
    chiral_family,
    mixed_family,
    noise_family,
    povm_family,
    two_point_family,
)
from arrival_povm.measurability import Verdict, delta, full_report
from arrival_povm.povm_fit import FitOptions, brute_force_fit, certify, fit
from arrival_povm.povm_model import predict_family, random_povm
from arrival_povm.spin_algebra import random_direction, spinor_from_direction
from arrival_povm.time_distributions import DirectionFamily, TimeGrid, tv_distance


@pytest.fixture
def record(acceptance_log):
    def _record(k: int, ok: bool, detail: str, elapsed: float, budget: float):
        ok = bool(ok) and elapsed <= budget
        line = f"CRITERION {k}: {'PASS' if ok else 'FAIL'}  {detail}  [{elapsed:.1f}s / {budget:.0f}s]"
        print(line)
        acceptance_log.append(line)
        return ok

    return _record


def test_criterion_1_trace_condition_soundness(record):
    t0 = time.perf_counter()
    worst = 0.0
    for seed in range(1000):
        rng = np.random.default_rng(seed)
        grid = TimeGrid(0, 1, int(rng.integers(1, 201)))
        dirs = antipodal_directions(int(rng.integers(2, 21)), rng)
        worst = max(worst, delta(predict_family(random_povm(grid, seed, rng.uniform()), dirs)))
    ok = record(1, worst <= 1e-10, f"1000 random POVMs, max delta {worst:.2e} (<= 1e-10)", time.perf_counter() - t0, 30)
    assert ok


def test_criterion_2_quarter_delta_lower_bound(record):
    t0 = time.perf_counter()
    worst_gap, uncertified, nonconverged = np.inf, 0, 0
    for seed in range(100):
        rng = np.random.default_rng(seed)
        f = mixed_family(TimeGrid(0, 1, int(rng.integers(1, 40))), int(rng.integers(2, 7)), seed)
        r = fit(f)
        worst_gap = min(worst_gap, r.minimax_error - delta(f) / 4)
        if r.converged:
            uncertified += not certify(r, f)
        else:
            nonconverged += 1
    ok = worst_gap >= -1e-6 and uncertified == 0
    detail = f"100 families, min(fit - delta/4) {worst_gap:.2e}, uncertified {uncertified}, not converged {nonconverged}"
    assert record(2, ok, detail, time.perf_counter() - t0, 600)


def test_criterion_3_tightness_witness(record):
    t0 = time.perf_counter()
    f = two_point_family(TimeGrid(0, 1, 10), 3, 7)
    d = delta(f)
    r = fit(f)
    m = np.zeros((11, 4))
    m[[3, 7], 0] = 0.5
    midpoint_ok = np.allclose(r.povm.bloch_matrix(), m, atol=1e-3)
    ok = abs(d - 4) <= 1e-12 and abs(r.minimax_error - 1) <= 1e-3 and midpoint_ok
    detail = f"delta {d:.12f}, fit {r.minimax_error:.6f}, midpoint POVM {'matched' if midpoint_ok else 'not matched'}"
    assert record(3, ok, detail, time.perf_counter() - t0, 30)


def test_criterion_4_round_trip(record):
    t0 = time.perf_counter()
    worst = 0.0
    for seed in range(20):
        rng = np.random.default_rng(1000 + seed)
        grid = TimeGrid(0, 1, int(rng.integers(1, 60)))
        f = povm_family(grid, antipodal_directions(int(rng.integers(1, 10)), rng), seed, rng.uniform())
        worst = max(worst, fit(f).minimax_error)
    assert record(4, worst <= 1e-5, f"20 POVM families, max fit error {worst:.2e} (<= 1e-5)", time.perf_counter() - t0, 300)


def _oracle_instances():
    out = []
    for bins in (1, 2, 3):
        out.append(two_point_family(TimeGrid(0, 1, bins), 0, bins - 1) if bins > 1 else None)
        for pairs in (1, 2):
            for seed in range(8):
                rng = np.random.default_rng(100 * bins + 10 * pairs + seed)
                dirs = antipodal_directions(pairs, rng)
                grid = TimeGrid(0, 1, bins)
                out.append(noise_family(grid, dirs, rng))
                out.append(povm_family(grid, dirs, seed, rng.uniform()))
                if pairs == 2:
                    out.append(noise_family(grid, [Z, -Z, X, -X], rng, axis=Z))
    return [f for f in out if f is not None]


def test_criterion_5_oracle_agreement(record):
    t0 = time.perf_counter()
    instances = _oracle_instances()
    worst = max(abs(fit(f).minimax_error - brute_force_fit(f, 200)) for f in instances)
    detail = f"{len(instances)} instances, max |fit - brute force| {worst:.2e} (<= 0.012)"
    assert record(5, worst <= 0.012, detail, time.perf_counter() - t0, 300)


def test_criterion_6_chiral_no_spin_dependence(record):
    t0 = time.perf_counter()
    worst = 0.0
    for seed in range(10):
        f = chiral_family(TimeGrid(0, 1, 5 + 3 * seed), 1 + seed % 4, seed)
        assert tv_distance(f.distributions[0], f.distributions[1]) <= 1e-9
        pred = fit(f, FitOptions(enforce_axial=True)).predictions()
        worst = max(worst, float(np.abs(pred - pred[0]).sum(axis=1).max()))
    detail = f"10 chiral families, max prediction variation {worst:.2e} (<= 1e-6)"
    assert record(6, worst <= 1e-6, detail, time.perf_counter() - t0, 600)


def test_criterion_7_spinor_identity(record):
    t0 = time.perf_counter()
    rng = np.random.default_rng(7)
    worst_exp = worst_overlap = 0.0
    for _ in range(10_000):
        n = random_direction(rng)
        s = spinor_from_direction(n)
        worst_exp = max(worst_exp, float(np.abs(s.pauli_expectation() - n.as_array()).max()))
        worst_overlap = max(worst_overlap, abs(s.overlap(spinor_from_direction(-n))))
    ok = worst_exp <= 1e-12 and worst_overlap <= 1e-12
    detail = f"10^4 directions, max |<n|sigma|n> - n| {worst_exp:.1e}, max antipodal overlap {worst_overlap:.1e}"
    assert record(7, ok, detail, time.perf_counter() - t0, 600)


@pytest.fixture(scope="module")
def phenomenon_run(tmp_path_factory):
    out = tmp_path_factory.mktemp("phenomenon") / "family.json"
    t0 = time.perf_counter()
    code = main(["simulate", "--config", str(bundled_config_path()), "--out", str(out), "--seed", "1"])
    return out, code, time.perf_counter() - t0


def test_criterion_8_phenomenon_reproduction(record, phenomenon_run):
    path, code, elapsed = phenomenon_run
    t0 = time.perf_counter()
    f = DirectionFamily.load(path)
    n = load_config(bundled_config_path()).sim.trajectories
    by = {d.label(): p for d, p in f.entries}
    pz, pmz, px = by[Z.label()], by[(-Z).label()], by[X.label()]
    inv, spin = tv_distance(pz, pmz), tv_distance(pz, px)
    report = full_report(f, suggested_tol(n))
    half_tv = tv_distance(px, pz) / 2
    ok = (
        code == 0
        and n == 100_000
        and inv <= 0.05
        and spin >= 0.05
        and report.verdict is Verdict.INCOMPATIBLE
        and abs(report.lower_bound - half_tv) <= 0.02
    )
    detail = (
        f"N={n}, tv(z,-z) {inv:.4f} (<= 0.05), tv(z,x) {spin:.4f} (>= 0.05), {report.verdict.value}, "
        f"delta/4 {report.lower_bound:.4f} vs tv(x,z)/2 {half_tv:.4f} (within 0.02)"
    )
    assert record(8, ok, detail, elapsed + time.perf_counter() - t0, 600)


def test_criterion_9_determinism(record, phenomenon_run, tmp_path):
    first, _, _ = phenomenon_run
    t0 = time.perf_counter()
    again, off = tmp_path / "family.json", tmp_path / "off" / "family.json"
    off.parent.mkdir()
    main(["simulate", "--config", str(bundled_config_path()), "--out", str(again), "--seed", "1"])
    main(["simulate", "--config", str(bundled_config_path()), "--out", str(off), "--seed", "1", "--no-spin-term"])
    same = hashlib.sha256(first.read_bytes()).digest() == hashlib.sha256(again.read_bytes()).digest()
    d_off = delta(DirectionFamily.from_dict(json.loads(off.read_text())))
    ok = same and d_off == 0.0
    detail = f"same-seed files {'bitwise identical' if same else 'DIFFER'}, spin-off delta {d_off!r}"
    assert record(9, ok, detail, time.perf_counter() - t0, 1200)
