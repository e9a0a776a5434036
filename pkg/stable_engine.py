"""Isotropic planar stable paths and their windings.

Increments are built by subordination: U_t = B_{S_t} with B a standard planar
Brownian motion and S a subordinator with Laplace exponent lambda^(alpha/2),
so E[exp(i <u, U_t>)] = exp(-t (|u|^2 / 2)^(alpha/2)).

Windings fill the gaps between successive points with straight segments, so a
step from z1 to z2 turns by the principal argument of z2/z1.
"""

import logging
import math
from dataclasses import dataclass
from typing import Optional, Sequence, Union

import numpy as np
from scipy import stats

from analytic import cone_constants
from config import DEFAULT_MAX_STEPS, ORIGIN_TOL
from errors import BudgetExhaustedError, DomainError, OriginProximityError, SegmentThroughOriginError
from samplers import RngLike, as_generator, sample_stable_subordinator_increment

logger = logging.getLogger(__name__)

_CELLS = 500_000
_BLOCK = 256

# a step is flagged as a jump beyond this many interquartile ranges of the standardized step size
JUMP_IQR_FACTOR = 6.0


def _check_alpha(alpha: float):
    if not 0 < alpha < 2:
        raise DomainError(f"alpha must lie in (0, 2), got {alpha}")


@dataclass
class StablePath:
    """A recorded stable path started at 1."""

    alpha: float
    times: np.ndarray
    points: np.ndarray
    theta: np.ndarray
    clock: np.ndarray
    jump_flags: np.ndarray


def isotropic_increment(alpha: float, dt: float, rng: RngLike, size=None):
    """B_{S_dt}: complex increments of the isotropic alpha-stable process over dt."""
    _check_alpha(alpha)
    gen = as_generator(rng)
    shape = () if size is None else size
    subordinator = np.asarray(sample_stable_subordinator_increment(alpha / 2, dt, gen, shape))
    gauss = gen.standard_normal(np.shape(subordinator) + (2,))
    values = np.sqrt(subordinator) * (gauss[..., 0] + 1j * gauss[..., 1])
    return complex(values) if size is None else values


def characteristic_exponent(alpha: float, u: float) -> float:
    """-log E[exp(i <u, U_1 - U_0>)] = (|u|^2 / 2)^(alpha/2)."""
    return (u * u / 2.0) ** (alpha / 2.0)


def winding_increment(z1: complex, z2: complex) -> float:
    """Argument swept along the segment [z1, z2], in (-pi, pi].

    Raises:
        SegmentThroughOriginError: If an endpoint is 0 or the segment contains 0
    """
    if z1 == 0 or z2 == 0:
        raise SegmentThroughOriginError("segment endpoint at the origin")
    ratio = complex(z2) / complex(z1)
    if ratio.imag == 0 and ratio.real < 0:
        raise SegmentThroughOriginError(f"segment [{z1}, {z2}] passes through the origin")
    return math.atan2(ratio.imag, ratio.real)


def simulate_stable(alpha: float, t_max: float, dt: float, rng: RngLike, origin_tol: float = ORIGIN_TOL) -> StablePath:
    """Stable path on a uniform time grid of step dt, started at 1.

    Raises:
        OriginProximityError: If the path comes within origin_tol of 0
    """
    _check_alpha(alpha)
    if not (t_max > 0 and dt > 0) or dt >= t_max:
        raise DomainError(f"need 0 < dt < t_max, got dt={dt}, t_max={t_max}")
    steps = int(math.ceil(t_max / dt))
    increments = isotropic_increment(alpha, dt, rng, steps)
    points = 1.0 + np.concatenate([[0.0 + 0j], np.cumsum(increments)])
    radius = np.abs(points)
    if radius.min() < origin_tol:
        raise OriginProximityError(f"stable path came within {origin_tol} of the origin")
    ratio = points[1:] / points[:-1]
    if np.any((ratio.imag == 0) & (ratio.real < 0)):
        raise SegmentThroughOriginError("a segment of the stable path passes through the origin")
    theta = np.concatenate([[0.0], np.cumsum(np.angle(ratio))])
    weights = radius ** (-alpha)
    clock = np.concatenate([[0.0], np.cumsum(0.5 * dt * (weights[:-1] + weights[1:]))])

    standardized = np.abs(increments) / dt ** (1.0 / alpha)
    q25, q75 = np.percentile(standardized, [25, 75])
    jump_flags = standardized > JUMP_IQR_FACTOR * (q75 - q25)
    return StablePath(alpha, dt * np.arange(steps + 1), points, theta, clock, jump_flags)


def time_changed_winding(path: StablePath, u: float) -> float:
    """theta at A(u) = inf{t : H_t > u}, linear in the clock inside the crossing step.

    Raises:
        BudgetExhaustedError: If the clock of the path never reaches u
    """
    if not u > 0:
        raise DomainError(f"u must be positive, got {u}")
    if path.clock[-1] < u:
        raise BudgetExhaustedError(f"clock reaches only {path.clock[-1]:.4g} < u={u}", path.clock.size - 1)
    return float(np.interp(u, path.clock, path.theta))


@dataclass
class StableWindings:
    """Clock-adaptive simulation results, one row per path.

    theta: winding at the clock target (or at the last barrier crossing)
    clock: clock at the stopping event
    log_exit_times: log real time at each barrier crossing, shape (n, barriers)
    overshoot: theta - c at each barrier crossing
    """

    theta: np.ndarray
    clock: np.ndarray
    log_exit_times: np.ndarray
    overshoot: np.ndarray
    rejected: np.ndarray
    exhausted: np.ndarray
    max_increment: float

    @property
    def retained(self) -> np.ndarray:
        return ~(self.rejected | self.exhausted)


def stable_windings_batch(
    alpha: float,
    n: int,
    dt: float,
    rng: RngLike,
    clock_target: Optional[float] = None,
    barriers: Optional[Union[float, Sequence[float]]] = None,
    origin_tol: float = ORIGIN_TOL,
    max_steps: int = DEFAULT_MAX_STEPS,
) -> StableWindings:
    """Simulate n stable paths on a clock-adaptive grid.

    The real-time step from U_i is dt |U_i|^alpha, so every step advances the
    clock by about dt. By scaling, U_{i+1} / U_i = 1 + Y_i with Y_i iid copies
    of the increment over dt. The winding increment angle(1 + Y), the log-radius
    increment log|1 + Y| and the clock increment 0.5 dt (1 + |1 + Y|^-alpha)
    are therefore iid, and the walk is simulated in blocks.

    Exactly one of `clock_target` (stop when the clock reaches it) and
    `barriers` (stop once theta has reached every barrier) must be given.
    """
    _check_alpha(alpha)
    if (clock_target is None) == (barriers is None):
        raise DomainError("give exactly one of clock_target and barriers")
    levels = np.atleast_1d(np.asarray(barriers if barriers is not None else [], dtype=float))
    if barriers is not None and (levels.size == 0 or np.any(levels <= 0)):
        raise DomainError(f"barriers must be positive, got {barriers}")
    if clock_target is not None and not clock_target > 0:
        raise DomainError(f"clock_target must be positive, got {clock_target}")
    gen = as_generator(rng)

    theta = np.zeros(n)
    clock = np.zeros(n)
    log_r = np.zeros(n)
    log_time = np.full(n, -np.inf)
    log_exit = np.full((n, levels.size), np.nan)
    overshoot = np.full((n, levels.size), np.nan)
    theta_out = np.full(n, np.nan)
    clock_out = np.full(n, np.nan)
    rejected = np.zeros(n, dtype=bool)
    active = np.arange(n)
    max_increment = 0.0
    log_dt = math.log(dt)
    log_tol = math.log(origin_tol)
    done = 0

    while active.size and done < max_steps:
        rows = active.size
        k = int(max(1, min(_BLOCK, _CELLS // rows, max_steps - done)))
        ratio = 1.0 + isotropic_increment(alpha, dt, gen, (rows, k))
        d_theta = np.angle(ratio)
        d_log_r = np.log(np.abs(ratio))
        d_clock = 0.5 * dt * (1.0 + np.exp(-alpha * d_log_r))
        max_increment = max(max_increment, float(np.abs(d_theta).max()))

        theta_path = theta[active, None] + np.cumsum(d_theta, axis=1)
        clock_path = clock[active, None] + np.cumsum(d_clock, axis=1)
        log_r_path = log_r[active, None] + np.cumsum(d_log_r, axis=1)
        log_r_left = np.concatenate([log_r[active, None], log_r_path[:, :-1]], axis=1)
        log_steps = log_dt + alpha * log_r_left
        time_path = np.logaddexp.accumulate(np.concatenate([log_time[active, None], log_steps], axis=1), axis=1)[:, 1:]

        near = log_r_path < log_tol
        near_any = near.any(axis=1)
        near_at = np.where(near_any, near.argmax(axis=1), k)
        row_ids = np.arange(rows)

        if clock_target is not None:
            reached = clock_path >= clock_target
            hit = reached.any(axis=1)
            j = reached.argmax(axis=1)
            stop = hit & (j < near_at)
            r, jj = row_ids[stop], j[stop]
            before = np.where(jj > 0, clock_path[r, jj - 1], clock[active[r]])
            theta_before = np.where(jj > 0, theta_path[r, jj - 1], theta[active[r]])
            frac = (clock_target - before) / (clock_path[r, jj] - before)
            theta_out[active[r]] = theta_before + frac * d_theta[r, jj]
            clock_out[active[r]] = clock_target
            finished = stop
        else:
            finished = np.ones(rows, dtype=bool)
            for b, level in enumerate(levels):
                pending = np.isnan(log_exit[active, b])
                crossed = theta_path >= level
                hit = crossed.any(axis=1)
                j = crossed.argmax(axis=1)
                fresh = pending & hit & (j < near_at)
                r, jj = row_ids[fresh], j[fresh]
                log_exit[active[r], b] = time_path[r, jj]
                overshoot[active[r], b] = theta_path[r, jj] - level
                if b == levels.size - 1:
                    theta_out[active[r]] = theta_path[r, jj]
                    clock_out[active[r]] = clock_path[r, jj]
                finished &= ~np.isnan(log_exit[active, b])

        bad = near_any & ~finished
        rejected[active[bad]] = True
        keep = ~(finished | bad)
        theta[active[keep]] = theta_path[keep, -1]
        clock[active[keep]] = clock_path[keep, -1]
        log_r[active[keep]] = log_r_path[keep, -1]
        log_time[active[keep]] = time_path[keep, -1]
        active = active[keep]
        done += k

    exhausted = np.zeros(n, dtype=bool)
    exhausted[active] = True
    if exhausted.any() or rejected.any():
        logger.warning(
            "stable windings alpha=%g: %d exhausted, %d rejected of %d paths", alpha, exhausted.sum(), rejected.sum(), n
        )
    return StableWindings(theta_out, clock_out, log_exit, overshoot, rejected, exhausted, max_increment)


def time_changed_windings(alpha: float, u: float, n: int, dt: float, rng: RngLike, max_steps: int = DEFAULT_MAX_STEPS):
    """theta_{A(u)} for n independent paths; NaN for rejected paths."""
    return stable_windings_batch(alpha, n, dt, rng, clock_target=u, max_steps=max_steps).theta


def winding_exit_time(path_budget: int, alpha: float, c: float, dt: float, rng: RngLike) -> float:
    """Real time at which the unwrapped winding first reaches c.

    Raises:
        BudgetExhaustedError: If theta stays below c for path_budget steps
        OriginProximityError: If the path nears the origin first
    """
    result = stable_windings_batch(alpha, 1, dt, rng, barriers=c, max_steps=path_budget)
    if result.rejected[0]:
        raise OriginProximityError(f"path came within {ORIGIN_TOL} of the origin")
    if result.exhausted[0]:
        raise BudgetExhaustedError(f"winding stayed below {c} for {path_budget} steps", path_budget)
    return float(np.exp(result.log_exit_times[0, 0]))


def spitzer_stable_batch(
    alpha: float, c_scale: float, t: float, n: int, dt: float, rng: RngLike, max_steps: int = DEFAULT_MAX_STEPS
) -> StableWindings:
    if not (c_scale > 0 and t > 0):
        raise DomainError(f"c_scale and t must be positive, got {c_scale}, {t}")
    return stable_windings_batch(alpha, n, dt, rng, barriers=c_scale * math.sqrt(t), max_steps=max_steps)


def spitzer_stable_statistic(
    alpha: float, c_scale: float, t: float, dt: float, rng: RngLike, max_steps: int = DEFAULT_MAX_STEPS
) -> float:
    """(1/t) log of the first time the winding reaches c_scale sqrt(t).

    As t grows its law approaches that of c_scale^2 / (r(alpha) N^2).
    """
    result = spitzer_stable_batch(alpha, c_scale, t, 1, dt, rng, max_steps)
    if not result.retained[0]:
        raise BudgetExhaustedError(f"no winding exit within {max_steps} steps", max_steps)
    return float(result.log_exit_times[0, 0] / t)


def spitzer_stable_limit_median(alpha: float, c_scale: float = 1.0) -> float:
    """Median of c_scale^2 / (r(alpha) N^2)."""
    return c_scale**2 / (cone_constants(alpha).r_alpha * stats.chi2.median(1))
