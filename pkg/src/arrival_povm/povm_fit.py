"""Best-approximating spin POVM under the worst-case total-variation error.

The program

    minimize    max_n  sum_k |P_{n,k} - alpha_k - beta_k.n|
    subject to  alpha_k >= |beta_k|            (every bin and the residual)
                sum alpha = 1,  sum beta = 0

is a second-order cone program. ``fit`` hands it to a conic solver through
cvxpy; ``brute_force_fit`` solves a polyhedral inner approximation of the
same program as a plain LP with scipy's HiGHS, and serves as an independent
check on small instances.
"""

from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass, field
from pathlib import Path

import cvxpy as cp
import numpy as np
from scipy.optimize import linprog

from .errors import DidNotConverge, InfeasibleGrid, ProblemTooLarge
from .measurability import max_pair_discrepancy
from .povm_model import POVM_TOL, BinnedSpinPOVM, validate
from .spin_algebra import Direction
from .time_distributions import DirectionFamily, write_json

log = logging.getLogger(__name__)

CERTIFY_TOL = 1e-9
# stage-two slack on the minimax value while breaking ties
TIE_BREAK_SLACK = 1e-7


@dataclass
class FitOptions:
    max_iterations: int = 50_000
    tol: float = 1e-6
    seed: int = 0
    enforce_axial: bool = False
    # among optimal POVMs, return one with the least total spin dependence
    prefer_spin_independent: bool = True
    solver: str = "CLARABEL"


@dataclass
class FitResult:
    povm: BinnedSpinPOVM
    per_direction_error: list
    minimax_error: float
    lower_bound: float
    iterations: int
    converged: bool
    status: str = ""
    initial_error: float = math.nan
    options: dict = field(default_factory=dict)

    def predictions(self) -> np.ndarray:
        return self.povm.predict_matrix([n for n, _ in self.per_direction_error])

    def to_dict(self) -> dict:
        return {
            "povm": self.povm.to_dict(),
            "per_direction_error": [{"direction": n.as_list(), "error": e} for n, e in self.per_direction_error],
            "minimax_error": self.minimax_error,
            "lower_bound": self.lower_bound,
            "iterations": self.iterations,
            "converged": self.converged,
            "status": self.status,
            "initial_error": self.initial_error,
            "options": self.options,
        }

    @classmethod
    def from_dict(cls, d: dict) -> FitResult:
        return cls(
            povm=BinnedSpinPOVM.from_dict(d["povm"]),
            per_direction_error=[(Direction.from_vector(r["direction"]), r["error"]) for r in d["per_direction_error"]],
            minimax_error=d["minimax_error"],
            lower_bound=d["lower_bound"],
            iterations=d["iterations"],
            converged=d["converged"],
            status=d.get("status", ""),
            initial_error=d.get("initial_error", math.nan),
            options=d.get("options", {}),
        )

    def save(self, path, manifest: dict | None = None):
        payload = self.to_dict()
        if manifest is not None:
            payload["manifest"] = manifest
        write_json(path, payload)

    @classmethod
    def load(cls, path) -> FitResult:
        return cls.from_dict(json.loads(Path(path).read_text()))


def direction_errors(povm: BinnedSpinPOVM, f: DirectionFamily) -> np.ndarray:
    """TV error ||P_n - <n|O|n>|| for every listed direction."""
    return np.abs(f.matrix() - povm.predict_matrix(f.directions)).sum(axis=1)


def repair(m: np.ndarray) -> np.ndarray:
    """Map near-feasible Bloch rows onto an exactly valid POVM.

    Completeness is restored by spreading the defect evenly, then the rows are
    mixed with the uniform spin-independent POVM just enough to make every
    effect positive. Both steps move the predictions by O(violation).
    """
    m = np.array(m, dtype=float)
    rows = len(m)
    total = m.sum(axis=0)
    m[:, 0] -= (total[0] - 1.0) / rows
    m[:, 1:] -= total[1:] / rows
    gap = float((np.linalg.norm(m[:, 1:], axis=1) - m[:, 0]).max())
    if gap > 0:
        gap += 4 * np.finfo(float).eps
        eps = gap * rows / (1 + gap * rows)
        m *= 1 - eps
        m[:, 0] += eps / rows
    return m


def _initial_povm(f: DirectionFamily) -> np.ndarray:
    m = np.zeros((f.grid.bin_count + 1, 4))
    m[:, 0] = f.matrix().mean(axis=0)
    return repair(m)


def _solve(problem: cp.Problem, opts: FitOptions):
    kwargs = {"max_iter": opts.max_iterations}
    try:
        problem.solve(solver=opts.solver, **kwargs)
    except cp.error.SolverError as exc:
        log.warning("solver %s failed: %s", opts.solver, exc)
        return "solver_error", 0
    stats = problem.solver_stats
    iters = int(stats.num_iters) if stats is not None and stats.num_iters is not None else 0
    return problem.status, iters


def fit(f: DirectionFamily, opts: FitOptions | None = None, strict: bool = False) -> FitResult:
    """Minimax spin-POVM fit to a normalized direction family.

    With ``strict=True`` a non-optimal solver status raises ``DidNotConverge``
    (partial result attached); otherwise the result is returned with
    ``converged=False``. The returned POVM is always exactly valid: it is the
    better of the repaired solver output and the spin-independent
    direction-averaged starting point.
    """
    opts = opts or FitOptions()
    k1 = f.grid.bin_count + 1
    if f.grid.bin_count < 1:
        raise InfeasibleGrid("grid has no bins")
    if len(f) == 0:
        raise ValueError("family has no directions")
    if opts.enforce_axial and f.axis is None:
        raise ValueError("enforce_axial requires a family with a declared axis")

    P = f.matrix()
    N = f.direction_array()
    D = len(N)

    alpha = cp.Variable(k1)
    if opts.enforce_axial:
        axis = f.axis.as_array()
        c = cp.Variable(k1)
        pred = np.ones((D, 1)) @ cp.reshape(alpha, (1, k1), order="C") + np.outer(N @ axis, np.ones(1)) @ cp.reshape(
            c, (1, k1), order="C"
        )
        cone = [cp.abs(c) <= alpha, cp.sum(c) == 0]
        spin = cp.sum(cp.abs(c))
    else:
        beta = cp.Variable((k1, 3))
        pred = np.ones((D, 1)) @ cp.reshape(alpha, (1, k1), order="C") + N @ beta.T
        cone = [cp.SOC(alpha, beta, axis=1), cp.sum(beta, axis=0) == 0]
        spin = cp.sum(cp.norm(beta, 2, axis=1))
    row_err = cp.sum(cp.abs(P - pred), axis=1)
    t = cp.Variable()
    constraints = [*cone, cp.sum(alpha) == 1, row_err <= t]

    stage1 = cp.Problem(cp.Minimize(t), constraints)
    status, iters = _solve(stage1, opts)
    converged = status == cp.OPTIMAL

    def current():
        if alpha.value is None:
            return None
        m = np.zeros((k1, 4))
        m[:, 0] = alpha.value
        if opts.enforce_axial:
            m[:, 1:] = np.outer(c.value, axis)
        else:
            m[:, 1:] = beta.value
        return repair(m)

    candidate = current()
    if converged and opts.prefer_spin_independent:
        t_star = float(t.value)
        stage2 = cp.Problem(
            cp.Minimize(spin),
            [*cone, cp.sum(alpha) == 1, row_err <= t_star + TIE_BREAK_SLACK * (1 + t_star)],
        )
        status2, iters2 = _solve(stage2, opts)
        iters += iters2
        if status2 == cp.OPTIMAL:
            m2 = current()
            e1 = direction_errors(BinnedSpinPOVM.from_bloch_matrix(f.grid, candidate), f).max()
            e2 = direction_errors(BinnedSpinPOVM.from_bloch_matrix(f.grid, m2), f).max()
            if e2 <= e1 + 2 * TIE_BREAK_SLACK * (1 + e1):
                candidate = m2
        else:
            log.info("tie-break stage ended with status %s; keeping stage-one POVM", status2)

    init = _initial_povm(f)
    init_povm = BinnedSpinPOVM.from_bloch_matrix(f.grid, init)
    init_err = float(direction_errors(init_povm, f).max())
    best = init_povm
    if candidate is not None:
        povm = BinnedSpinPOVM.from_bloch_matrix(f.grid, candidate)
        if direction_errors(povm, f).max() <= init_err:
            best = povm
    errs = direction_errors(best, f)

    result = FitResult(
        povm=best,
        per_direction_error=[(n, float(e)) for n, e in zip(f.directions, errs)],
        minimax_error=float(errs.max()),
        lower_bound=max_pair_discrepancy(f) / 4,
        iterations=iters,
        converged=converged,
        status=str(status),
        initial_error=init_err,
        options={
            "max_iterations": opts.max_iterations,
            "tol": opts.tol,
            "seed": opts.seed,
            "enforce_axial": opts.enforce_axial,
            "prefer_spin_independent": opts.prefer_spin_independent,
            "solver": opts.solver,
        },
    )
    if strict and not converged:
        raise DidNotConverge(f"solver finished with status {status!r}", result)
    return result


def certify(result: FitResult, f: DirectionFamily) -> bool:
    """Independent recheck of a fit: valid POVM, honest error, and error >= delta/4."""
    if validate(result.povm, POVM_TOL):
        return False
    if len(result.per_direction_error) != len(f):
        return False
    errs = direction_errors(result.povm, f)
    if abs(float(errs.max()) - result.minimax_error) > CERTIFY_TOL:
        return False
    return bool(errs.max() >= max_pair_discrepancy(f) / 4 - CERTIFY_TOL)


def _polygon_facets(resolution: int) -> tuple[np.ndarray, float]:
    """Outward normals and support value of a regular polygon inscribed in the unit circle."""
    ang = 2 * np.pi * (np.arange(resolution) + 0.5) / resolution
    return np.column_stack([np.cos(ang), np.sin(ang)]), math.cos(math.pi / resolution)


def brute_force_fit(f: DirectionFamily, resolution: int = 200) -> float:
    """Minimax error over POVMs whose effects lie in a polygonal inner cone.

    ``beta`` is restricted to the span of the listed directions; any
    component outside it changes no prediction and only tightens positivity.
    In a two-dimensional span the disc ``|beta| <= alpha`` is replaced by an
    inscribed regular polygon with ``resolution`` vertices, so every candidate
    is a valid POVM and the returned value is an upper bound on the true
    optimum, within O(1/resolution**2) of it. Small instances only.
    """
    K = f.grid.bin_count
    pairs = f.antipodal_pairs()
    if K > 3 or len(pairs) > 2:
        raise ProblemTooLarge(f"brute force handles <= 3 bins and <= 2 antipodal pairs (got {K}, {len(pairs)})")
    if resolution < 3:
        raise ValueError("resolution must be at least 3")

    P = f.matrix()
    N = f.direction_array()
    D, k1 = P.shape
    _, s, vt = np.linalg.svd(N)
    d = int((s > 1e-9).sum())
    U = vt[:d].T  # orthonormal basis of the direction span, 3 x d
    G = N @ U  # direction coordinates in that basis, D x d

    # variable layout: alpha (k1) | gamma (k1*d, row-major) | s (D*k1) | t
    n_alpha, n_gamma, n_s = k1, k1 * d, D * k1
    nv = n_alpha + n_gamma + n_s + 1
    ia = lambda j: j  # noqa: E731
    ig = lambda j, c: n_alpha + j * d + c  # noqa: E731
    is_ = lambda n, j: n_alpha + n_gamma + n * k1 + j  # noqa: E731
    it = nv - 1

    A_ub, b_ub = [], []

    def row():
        return np.zeros(nv)

    for n in range(D):
        for j in range(k1):
            # s_nj >= +(P - alpha - gamma.g) and s_nj >= -(P - alpha - gamma.g)
            for sign in (1.0, -1.0):
                r = row()
                r[is_(n, j)] = -1.0
                r[ia(j)] = -sign
                for c in range(d):
                    r[ig(j, c)] = -sign * G[n, c]
                A_ub.append(r)
                b_ub.append(-sign * P[n, j])
        r = row()
        r[[is_(n, j) for j in range(k1)]] = 1.0
        r[it] = -1.0
        A_ub.append(r)
        b_ub.append(0.0)

    if d == 1:
        normals, support = np.array([[1.0], [-1.0]]), 1.0
    elif d == 2:
        normals, support = _polygon_facets(resolution)
    else:
        raise ProblemTooLarge("direction span has dimension > 2")
    for j in range(k1):
        for u in normals:
            r = row()
            for c in range(d):
                r[ig(j, c)] = u[c]
            r[ia(j)] = -support
            A_ub.append(r)
            b_ub.append(0.0)

    A_eq, b_eq = [], []
    r = row()
    r[[ia(j) for j in range(k1)]] = 1.0
    A_eq.append(r)
    b_eq.append(1.0)
    for c in range(d):
        r = row()
        r[[ig(j, c) for j in range(k1)]] = 1.0
        A_eq.append(r)
        b_eq.append(0.0)

    cost = row()
    cost[it] = 1.0
    bounds = [(0, None)] * n_alpha + [(None, None)] * n_gamma + [(0, None)] * n_s + [(0, None)]
    res = linprog(cost, A_ub=np.array(A_ub), b_ub=b_ub, A_eq=np.array(A_eq), b_eq=b_eq, bounds=bounds, method="highs")
    if not res.success:
        raise RuntimeError(f"brute-force LP failed: {res.message}")
    return max(float(res.fun), 0.0)
