"""First-arrival times of a free spin-1/2 Gaussian packet under Bohmian guidance.

The packet is ``psi (x) |n>`` with ``psi`` a freely spreading 3D Gaussian,
known in closed form. Trajectories follow the Pauli current

    v = (hbar/m) Im(grad psi / psi) + (hbar / 2m) (grad|psi|^2 x n) / |psi|^2

whose second (spin) term is a pure curl and only depends on the spin through
``n``. Initial positions are drawn once from ``|psi_0|^2`` and reused for every
spin direction, so cross-direction differences carry little Monte Carlo noise.
Each trajectory is integrated with an adaptive Dormand-Prince 5(4) step
(vectorized over trajectories, each with its own step size) until it first
crosses the plane ``x . normal = offset`` or reaches the horizon.
"""

from __future__ import annotations

import logging
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import NodeProximity
from .spin_algebra import Direction
from .time_distributions import BinnedDistribution, DirectionFamily, TimeGrid

log = logging.getLogger(__name__)

# relative density below which a trajectory counts as "at a node"
NODE_GUARD = 1e-30
LOG_NODE_GUARD = math.log(NODE_GUARD)
MAX_FLAGGED_FRACTION = 1e-3
CROSSING_TIME_TOL = 1e-6
CHUNK_SIZE = 25_000


@dataclass(frozen=True)
class PacketModel:
    initial_width: float = 1.0
    initial_center: tuple = (0.0, 0.0, 0.0)
    initial_wavevector: tuple = (0.0, 0.0, 1.0)
    spin_direction: Direction = Direction(0.0, 0.0, 1.0)
    mass: float = 1.0
    hbar: float = 1.0

    def __post_init__(self):
        for name in ("initial_width", "mass", "hbar"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be strictly positive")
        object.__setattr__(self, "initial_center", tuple(float(c) for c in self.initial_center))
        object.__setattr__(self, "initial_wavevector", tuple(float(c) for c in self.initial_wavevector))

    def with_spin(self, n: Direction) -> PacketModel:
        return PacketModel(self.initial_width, self.initial_center, self.initial_wavevector, n, self.mass, self.hbar)

    @property
    def group_velocity(self) -> np.ndarray:
        return self.hbar * np.asarray(self.initial_wavevector) / self.mass

    def spreading_parameter(self, t):
        """hbar t / (2 m sigma0^2)."""
        return self.hbar * np.asarray(t, dtype=float) / (2 * self.mass * self.initial_width**2)

    def width(self, t):
        """Position-space standard deviation per axis at time t."""
        return self.initial_width * np.sqrt(1 + self.spreading_parameter(t) ** 2)

    def peak_density(self, t):
        return (2 * np.pi * self.width(t) ** 2) ** -1.5


@dataclass(frozen=True)
class ArrivalSurface:
    plane_normal: Direction = Direction(0.0, 0.0, 1.0)
    plane_offset: float = 5.0

    def signed_distance(self, x: np.ndarray) -> np.ndarray:
        return np.asarray(x) @ self.plane_normal.as_array() - self.plane_offset

    def check_start(self, model: PacketModel):
        if self.signed_distance(np.asarray(model.initial_center)) >= 0:
            raise ValueError("packet centre must lie strictly on the negative side of the surface")


@dataclass(frozen=True)
class StepControl:
    initial_step: float = 0.05
    atol: float = 1e-8
    rtol: float = 1e-8

    def __post_init__(self):
        if not (self.initial_step > 0 and self.atol > 0 and self.rtol > 0):
            raise ValueError("step control parameters must be positive")


@dataclass(frozen=True)
class SimConfig:
    trajectories: int
    horizon: float
    grid: TimeGrid
    seed: int = 0
    step_control: StepControl = field(default_factory=StepControl)
    spin_term: bool = True
    workers: int = 0  # 0 = ARRIVAL_POVM_THREADS or auto

    def __post_init__(self):
        if self.trajectories < 1:
            raise ValueError("trajectories must be positive")
        if self.grid.t_start > 0:
            raise ValueError("grid must start at or before t = 0")
        if self.horizon < self.grid.t_end:
            raise ValueError(f"horizon {self.horizon} ends before the grid ({self.grid.t_end})")


# -- wavefunction and velocity field -------------------------------------------


def _relative(model: PacketModel, t, x):
    t = np.asarray(t, dtype=float)
    c = np.asarray(model.initial_center)
    u = np.asarray(x, dtype=float) - c - np.multiply.outer(t, model.group_velocity)
    return t, u


def log_gradient(model: PacketModel, t, x) -> np.ndarray:
    """grad psi / psi, shape (..., 3)."""
    t, u = _relative(model, t, x)
    z = np.asarray(1 + 1j * model.spreading_parameter(t))
    return -u / (2 * model.initial_width**2 * z[..., None]) + 1j * np.asarray(model.initial_wavevector)


def wavefunction(model: PacketModel, t, x) -> tuple[np.ndarray, np.ndarray]:
    """Value and gradient of the freely evolved Gaussian at (t, x)."""
    t, u = _relative(model, t, x)
    s2 = model.initial_width**2
    k = np.asarray(model.initial_wavevector)
    z = np.asarray(1 + 1j * model.spreading_parameter(t))
    dx = np.asarray(x, dtype=float) - np.asarray(model.initial_center)
    phase = dx @ k - model.hbar * (k @ k) * t / (2 * model.mass)
    exponent = -(u * u).sum(axis=-1) / (4 * s2 * z) + 1j * phase
    psi = (2 * np.pi * s2) ** -0.75 * (1 / np.sqrt(z)) ** 3 * np.exp(exponent)
    grad = psi[..., None] * (-u / (2 * s2 * z[..., None]) + 1j * k)
    return psi, grad


def log_relative_density(model: PacketModel, t, x) -> np.ndarray:
    """log(|psi(t,x)|^2 / peak density at t)."""
    t, u = _relative(model, t, x)
    return -(u * u).sum(axis=-1) / (2 * model.width(t) ** 2)


def velocity_from_psi(model: PacketModel, psi, grad, spin_term: bool = True) -> np.ndarray:
    """Pauli-current guidance velocity from psi and grad psi."""
    rho = np.abs(psi) ** 2
    j = np.imag(np.conj(psi)[..., None] * grad)
    v = (model.hbar / model.mass) * j / rho[..., None]
    if spin_term:
        grad_rho = 2 * np.real(np.conj(psi)[..., None] * grad)
        n = model.spin_direction.as_array()
        v = v + (model.hbar / (2 * model.mass)) * np.cross(grad_rho, n) / rho[..., None]
    return v


def _velocity(model: PacketModel, t, x, spin_term: bool = True) -> np.ndarray:
    # the guidance law written with grad psi / psi, which never underflows
    g = log_gradient(model, t, x)
    v = (model.hbar / model.mass) * g.imag
    if spin_term:
        v = v + (model.hbar / model.mass) * np.cross(g.real, model.spin_direction.as_array())
    return v


def guidance_velocity(model: PacketModel, t: float, x, spin_term: bool = True) -> np.ndarray:
    """Bohmian velocity at a point; raises NodeProximity where the density is negligible."""
    x = np.asarray(x, dtype=float)
    if np.any(log_relative_density(model, t, x) < LOG_NODE_GUARD):
        raise NodeProximity(f"|psi|^2 below {NODE_GUARD:g} of its peak at t={t}, x={x.tolist()}")
    return _velocity(model, t, x, spin_term)


# -- integration ---------------------------------------------------------------

# Dormand-Prince 5(4) tableau
_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_A = [
    [],
    [1 / 5],
    [3 / 40, 9 / 40],
    [44 / 45, -56 / 15, 32 / 9],
    [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729],
    [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656],
    [35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84],
]
_B5 = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])
_B4 = np.array([5179 / 57600, 0.0, 7571 / 16695, 393 / 640, -92097 / 339200, 187 / 2100, 1 / 40])
_E = _B5 - _B4


def _dp_step(f, t, x, h):
    """One Dormand-Prince step for a batch; returns 5th-order state and error vector."""
    hh = h[:, None]
    k = [f(t, x)]
    for i in range(1, 7):
        xi = x + hh * sum(a * kj for a, kj in zip(_A[i], k) if a != 0.0)
        k.append(f(t + _C[i] * h, xi))
    x5 = x + hh * sum(b * kj for b, kj in zip(_B5, k) if b != 0.0)
    err = hh * sum(e * kj for e, kj in zip(_E, k) if e != 0.0)
    return x5, err


@dataclass
class ArrivalSample:
    """Per-trajectory outcome of one direction's run."""

    times: np.ndarray  # first-crossing time, nan if none before the horizon
    flagged: np.ndarray  # trajectory passed within the near-node guard
    steps: int  # accepted steps of the longest trajectory

    @property
    def crossed(self) -> np.ndarray:
        return ~np.isnan(self.times)


def _refine_crossing(f, surface, t0, x0, h):
    """Crossing time inside [t0, t0+h] by bracketed secant (Illinois) iteration.

    The state at intermediate times comes from a fresh single step of the
    same integrator started at (t0, x0).
    """
    lo = np.zeros_like(h)
    hi = h.copy()
    g_lo = surface.signed_distance(x0)
    g_hi = surface.signed_distance(_dp_step(f, t0, x0, hi)[0])
    side = np.zeros(len(h), dtype=int)
    for _ in range(100):
        denom = g_hi - g_lo
        tau = np.where(denom > 0, hi - g_hi * (hi - lo) / np.where(denom > 0, denom, 1.0), 0.5 * (lo + hi))
        tau = np.clip(tau, lo, hi)
        g = surface.signed_distance(_dp_step(f, t0, x0, np.maximum(tau, 1e-300))[0])
        below = g < 0
        lo = np.where(below, tau, lo)
        hi = np.where(below, hi, tau)
        # Illinois: halve the stale endpoint's value when the same side repeats
        g_hi = np.where(below & (side == -1), 0.5 * g_hi, np.where(below, g_hi, g))
        g_lo = np.where(~below & (side == 1), 0.5 * g_lo, np.where(below, g, g_lo))
        side = np.where(below, -1, 1)
        if np.all((hi - lo <= CROSSING_TIME_TOL) | (g == 0)):
            break
    return t0 + np.where(g_hi == 0, hi, 0.5 * (lo + hi))


def integrate_arrivals(
    model: PacketModel,
    surface: ArrivalSurface,
    x0: np.ndarray,
    horizon: float,
    step: StepControl,
    spin_term: bool = True,
) -> ArrivalSample:
    """First-crossing times for a batch of initial positions (no cross-talk between rows)."""
    m = len(x0)
    f = lambda t, x: _velocity(model, t, x, spin_term)  # noqa: E731
    t = np.zeros(m)
    x = np.array(x0, dtype=float)
    h = np.full(m, min(step.initial_step, horizon))
    times = np.full(m, np.nan)
    flagged = log_relative_density(model, 0.0, x) < LOG_NODE_GUARD
    active = surface.signed_distance(x) < 0
    # already on or past the plane at t = 0: arrival at time zero
    times[~active] = 0.0
    steps = 0
    while active.any():
        idx = np.flatnonzero(active)
        ti, xi = t[idx], x[idx]
        hi = np.minimum(h[idx], horizon - ti)
        x_new, err = _dp_step(f, ti, xi, hi)
        scale = step.atol + step.rtol * np.maximum(np.abs(xi), np.abs(x_new))
        enorm = np.sqrt(np.mean((err / scale) ** 2, axis=1))
        ok = enorm <= 1.0
        factor = np.clip(0.9 * np.where(enorm > 0, enorm, 1e-10) ** -0.2, 0.2, 5.0)
        h[idx] = np.where(ok, hi * factor, hi * np.minimum(factor, 1.0))

        acc = idx[ok]
        if acc.size:
            steps += 1
            x_acc = x_new[ok]
            t_acc = ti[ok] + hi[ok]
            flagged[acc] |= log_relative_density(model, t_acc, x_acc) < LOG_NODE_GUARD
            crossed = surface.signed_distance(x_acc) >= 0
            if crossed.any():
                c = acc[crossed]
                times[c] = _refine_crossing(f, surface, t[c], x[c], hi[ok][crossed])
                active[c] = False
            t[acc] = t_acc
            x[acc] = x_acc
            done = acc[(t_acc >= horizon) & ~crossed]
            active[done] = False
    times[times > horizon] = np.nan
    return ArrivalSample(times, flagged, steps)


def histogram(times: np.ndarray, grid: TimeGrid) -> BinnedDistribution:
    """Counting-measure histogram; non-arrivals and arrivals past the grid are censored."""
    n = len(times)
    k = grid.bin_index(np.where(np.isnan(times), np.inf, times))
    inside = (k >= 0) & (k < grid.bin_count)
    counts = np.bincount(k[inside], minlength=grid.bin_count)
    censored = n - int(counts.sum())
    return BinnedDistribution(grid, counts / n, censored / n)


def sample_initial_positions(model: PacketModel, count: int, seed: int) -> np.ndarray:
    """Positions from |psi_0|^2; row i depends only on the seed and i."""
    rng = np.random.default_rng(seed)
    return np.asarray(model.initial_center) + model.initial_width * rng.standard_normal((count, 3))


def worker_count(requested: int = 0) -> int:
    if requested > 0:
        return requested
    env = int(os.environ.get("ARRIVAL_POVM_THREADS", "0") or 0)
    return env if env > 0 else (os.cpu_count() or 1)


@dataclass
class SimulationRun:
    family: DirectionFamily
    flagged: dict  # direction label -> flagged trajectory count
    samples: dict  # direction label -> ArrivalSample


def simulate_family(base: PacketModel, surface: ArrivalSurface, directions, cfg: SimConfig) -> DirectionFamily:
    """Arrival-time family n -> P_n on cfg.grid, with the surface normal as axis."""
    return run_simulation(base, surface, directions, cfg).family


def run_simulation(
    base: PacketModel,
    surface: ArrivalSurface,
    directions,
    cfg: SimConfig,
    keep_samples: bool = False,
) -> SimulationRun:
    """``simulate_family`` plus per-direction node-guard counts and, optionally, raw arrival times."""
    surface.check_start(base)
    x0 = sample_initial_positions(base, cfg.trajectories, cfg.seed)
    chunks = [x0[i : i + CHUNK_SIZE] for i in range(0, len(x0), CHUNK_SIZE)]
    workers = worker_count(cfg.workers)
    entries, flagged, samples = [], {}, {}
    with ThreadPoolExecutor(max_workers=workers) as pool:
        for n in directions:
            model = base.with_spin(n)
            parts = list(
                pool.map(
                    lambda c: integrate_arrivals(model, surface, c, cfg.horizon, cfg.step_control, cfg.spin_term),
                    chunks,
                )
            )
            sample = ArrivalSample(
                np.concatenate([p.times for p in parts]),
                np.concatenate([p.flagged for p in parts]),
                max(p.steps for p in parts),
            )
            nflag = int(sample.flagged.sum())
            flagged[n.label()] = nflag
            if nflag > MAX_FLAGGED_FRACTION * cfg.trajectories:
                raise NodeProximity(f"{nflag} of {cfg.trajectories} trajectories flagged near a node for n={n.label()}", flagged)
            if keep_samples:
                samples[n.label()] = sample
            entries.append((n, histogram(sample.times, cfg.grid)))
            log.info("n=%s: censored %.4f, flagged %d", n.label(), entries[-1][1].censored_mass, nflag)
    family = DirectionFamily(cfg.grid, tuple(entries), axis=surface.plane_normal)
    return SimulationRun(family, flagged, samples)
