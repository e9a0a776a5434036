"""Path simulation of planar Brownian motion.

Two routes are provided. The direct route steps Z = 1 + W in the plane and
unwraps its argument. The driver route simulates the skew-product pair
(beta, gamma) in clock time and reads off the exponential functional
A_u = int_0^u exp(2 beta_s) ds and its inverse, the clock H.

Batch functions work on many paths at once and never raise on a single bad
path: they return masks for rejected or budget-exhausted paths. The
single-draw functions raise instead.
"""

import logging
import math
from dataclasses import dataclass
from typing import List, Literal, Optional, Sequence, Tuple

import numpy as np
from scipy.special import logsumexp

from config import DEFAULT_MAX_STEPS, ORIGIN_TOL
from errors import BudgetExhaustedError, DomainError, OriginProximityError
from samplers import RngLike, YorParams, as_generator, sample_first_passage
from verify import McEstimate

logger = logging.getLogger(__name__)

ExitKind = Literal["single", "double"]
ExitMode = Literal["exact", "path"]
GaussLaplaceKind = Literal["single", "double", "dufresne"]

# steps simulated per block, and the cap on rows x steps held in memory at once
_BLOCK = 256
_CELLS = 1_000_000

# minimum number of steps used to integrate over any horizon
MIN_STEPS = 50


def _block_size(rows: int, remaining: int) -> int:
    return int(max(1, min(_BLOCK, _CELLS // max(rows, 1), remaining)))


def _positive(value: float, name: str):
    if not value > 0:
        raise DomainError(f"{name} must be positive, got {value}")


@dataclass
class DriverPath:
    """The skew-product drivers on a uniform clock grid.

    log_a holds log A at each grid node (log_a[0] = -inf since A_0 = 0).
    """

    dt: float
    beta: np.ndarray
    gamma: np.ndarray
    log_a: np.ndarray

    @property
    def length(self) -> int:
        return self.beta.size - 1

    @property
    def u(self) -> np.ndarray:
        return self.dt * np.arange(self.beta.size)

    @property
    def A(self) -> np.ndarray:
        return np.exp(self.log_a)

    def functional_at(self, u: float) -> float:
        """A at clock time u, linear between nodes."""
        if not 0 <= u <= self.dt * self.length:
            raise DomainError(f"u={u} outside the simulated clock range")
        return float(np.interp(u, self.u, self.A))

    def clock_at(self, t: float) -> float:
        """H_t = inf{u : A_u >= t}, by linear interpolation of A between nodes."""
        _positive(t, "t")
        log_t = math.log(t)
        if self.log_a[-1] < log_t:
            raise BudgetExhaustedError(f"A reaches only {self.A[-1]:.4g} < t={t}", self.length)
        i = int(np.searchsorted(self.log_a, log_t, side="left")) - 1
        lo, hi = math.exp(self.log_a[i] - log_t), math.exp(self.log_a[i + 1] - log_t)
        return self.dt * (i + (1.0 - lo) / (hi - lo))

    def planar_until(self, t: float) -> "PlanarPath":
        """Z in real time: Z_{A_u} = exp(beta_u + i gamma_u), cut at real time t."""
        h = self.clock_at(t)
        i = min(int(h // self.dt), self.length - 1)
        frac = h / self.dt - i
        beta_t = self.beta[i] + frac * (self.beta[i + 1] - self.beta[i])
        gamma_t = self.gamma[i] + frac * (self.gamma[i + 1] - self.gamma[i])
        beta = np.append(self.beta[: i + 1], beta_t)
        gamma = np.append(self.gamma[: i + 1], gamma_t)
        return PlanarPath(
            times=np.append(self.A[: i + 1], t),
            points=np.exp(beta + 1j * gamma),
            theta=gamma,
            clock=np.append(self.u[: i + 1], h),
        )


@dataclass
class PlanarPath:
    """Time-stamped positions of a planar path with its unwrapped angle and clock."""

    times: np.ndarray
    points: np.ndarray
    theta: np.ndarray
    clock: np.ndarray


@dataclass(frozen=True)
class ExitSample:
    barrier: float
    kind: ExitKind
    exit_time: float
    functional_value: float


@dataclass
class ExitBatch:
    """Exit times and log A at exit for many paths; NaN where the budget ran out."""

    barrier: float
    kind: ExitKind
    exit_times: np.ndarray
    log_functionals: np.ndarray

    @property
    def exhausted(self) -> np.ndarray:
        return np.isnan(self.exit_times)

    @property
    def functional_values(self) -> np.ndarray:
        return np.exp(self.log_functionals)


@dataclass
class FunctionalDraws:
    """log A and the endpoint of beta per path; the `_anti` fields hold the antithetic twins."""

    log_a: np.ndarray
    beta_end: np.ndarray
    log_a_anti: Optional[np.ndarray] = None
    beta_end_anti: Optional[np.ndarray] = None


def simulate_driver(u_max: float, dt: float, rng: RngLike) -> DriverPath:
    """Simulate (beta, gamma) on [0, u_max] and accumulate A by the log-domain trapezoid.

    Raises:
        DomainError: If dt >= u_max
    """
    _positive(u_max, "u_max")
    _positive(dt, "dt")
    if dt >= u_max:
        raise DomainError(f"dt={dt} must be smaller than u_max={u_max}")
    gen = as_generator(rng)
    steps = int(math.ceil(u_max / dt))
    increments = math.sqrt(dt) * gen.standard_normal((2, steps))
    beta = np.concatenate([[0.0], np.cumsum(increments[0])])
    gamma = np.concatenate([[0.0], np.cumsum(increments[1])])
    terms = math.log(0.5 * dt) + np.logaddexp(2 * beta[:-1], 2 * beta[1:])
    log_a = np.concatenate([[-np.inf], np.logaddexp.accumulate(terms)])
    return DriverPath(dt=dt, beta=beta, gamma=gamma, log_a=log_a)


def integrate_log_functional(
    horizons,
    dt: float,
    rng: RngLike,
    exponent: float = 2.0,
    nu: float = 0.0,
    min_steps: int = MIN_STEPS,
    max_steps: int = DEFAULT_MAX_STEPS,
    antithetic: bool = False,
) -> FunctionalDraws:
    """log of int_0^T exp(exponent (beta_s + nu s)) ds for one horizon T per path.

    Each path uses its own step T/n with n = clip(ceil(T/dt), min_steps,
    max_steps), so very long horizons are integrated on a coarser grid rather
    than dropped. The trapezoid terms are accumulated with log-sum-exp so
    excursions of beta far beyond the double range never overflow.

    Args:
        horizons: Positive horizons, one per path
        dt: Target step
        rng: Generator or stream
        exponent: Factor in front of beta_s + nu s
        nu: Drift
        min_steps: Lower bound on steps per path
        max_steps: Upper bound on steps per path
        antithetic: Also integrate the mirrored path -beta on the same draws

    Returns:
        FunctionalDraws with log A and beta at each horizon
    """
    horizon = np.asarray(horizons, dtype=float).ravel()
    if horizon.size == 0 or np.any(~(horizon > 0)) or np.any(~np.isfinite(horizon)):
        raise DomainError("horizons must be positive and finite")
    _positive(dt, "dt")
    gen = as_generator(rng)
    n = horizon.size
    steps = np.clip(np.ceil(horizon / dt), min_steps, max_steps).astype(np.int64)
    h = horizon / steps
    signs = (1.0, -1.0) if antithetic else (1.0,)
    log_a = np.full((len(signs), n), -np.inf)
    beta = np.zeros((len(signs), n))

    done = 0
    while True:
        rows = np.flatnonzero(steps > done)
        if rows.size == 0:
            break
        k = _block_size(rows.size, int(steps[rows].max()) - done)
        draws = gen.standard_normal((rows.size, k))
        cols = done + np.arange(1, k + 1)
        live = cols[None, :] <= steps[rows, None]
        step = h[rows, None]
        s_left = step * (cols - 1)
        increments = np.sqrt(step) * draws
        last = np.minimum(steps[rows] - done, k) - 1
        log_half = np.log(0.5 * step)
        for j, sign in enumerate(signs):
            start = beta[j, rows, None]
            path = start + sign * np.cumsum(increments, axis=1)
            left = np.concatenate([start, path[:, :-1]], axis=1)
            y_left = exponent * (left + nu * s_left)
            y_right = exponent * (path + nu * (s_left + step))
            terms = np.where(live, log_half + np.logaddexp(y_left, y_right), -np.inf)
            log_a[j, rows] = np.logaddexp(log_a[j, rows], logsumexp(terms, axis=1))
            beta[j, rows] = path[np.arange(rows.size), last]
        done += k

    if antithetic:
        return FunctionalDraws(log_a[0], beta[0], log_a[1], beta[1])
    return FunctionalDraws(log_a[0], beta[0])


def clock_coverage(du: float, max_steps: int, coarsen_rounds: int = 0, max_du: float = 1.0) -> float:
    """Clock range walked by first_clock_crossing before a path counts as exhausted."""
    total, step = du * max_steps, du
    for _ in range(coarsen_rounds):
        step = min(2 * step, max(du, max_du))
        total += step * max_steps
    return total


def first_clock_crossing(
    log_targets,
    du: float,
    rng: RngLike,
    max_steps: int = DEFAULT_MAX_STEPS,
    coarsen_rounds: int = 0,
    max_du: float = 1.0,
) -> np.ndarray:
    """H = inf{u : A_u >= target} for one target per path, NaN when the budget runs out.

    beta is simulated on a uniform clock grid of step du and A is inverted by
    linear interpolation inside the crossing step. Paths still below their
    target after max_steps steps get up to `coarsen_rounds` further rounds of
    max_steps steps each, the step doubling every round up to max(du, max_du).
    """
    target = np.asarray(log_targets, dtype=float).ravel()
    _positive(du, "du")
    gen = as_generator(rng)
    n = target.size
    clock = np.full(n, np.nan)
    beta = np.zeros(n)
    log_a = np.full(n, -np.inf)
    active = np.arange(n)
    elapsed, step = 0.0, du
    for round_index in range(coarsen_rounds + 1):
        if round_index:
            step = min(2 * step, max(du, max_du))
        log_half = math.log(0.5 * step)
        done = 0
        while active.size and done < max_steps:
            k = _block_size(active.size, max_steps - done)
            start = beta[active, None]
            path = start + math.sqrt(step) * np.cumsum(gen.standard_normal((active.size, k)), axis=1)
            left = np.concatenate([start, path[:, :-1]], axis=1)
            terms = log_half + np.logaddexp(2 * left, 2 * path)
            cum = np.logaddexp.accumulate(np.concatenate([log_a[active, None], terms], axis=1), axis=1)
            crossed = cum[:, 1:] >= target[active, None]
            hit = crossed.any(axis=1)

            rows = np.flatnonzero(hit)
            j = crossed[rows].argmax(axis=1)
            goal = target[active[rows]]
            lo = np.exp(cum[rows, j] - goal)
            hi = np.exp(cum[rows, j + 1] - goal)
            clock[active[rows]] = elapsed + step * (done + j + (1.0 - lo) / (hi - lo))

            keep = ~hit
            beta[active[keep]] = path[keep, -1]
            log_a[active[keep]] = cum[keep, -1]
            active = active[keep]
            done += k
        elapsed += step * max_steps
        if not active.size:
            break

    if active.size:
        logger.debug("clock inversion: %d of %d paths passed clock %.4g", active.size, n, elapsed)
    return clock


def _crossing_fraction(left: np.ndarray, right: np.ndarray, c: float, double: bool) -> np.ndarray:
    """Linear interpolation to a grid-level crossing; the step midpoint for a bridge-only crossing."""
    with np.errstate(divide="ignore", invalid="ignore"):
        frac = np.where(right >= c, (c - left) / (right - left), 0.5)
        if double:
            frac = np.where(right <= -c, (-c - left) / (right - left), frac)
    return np.clip(frac, 0.0, 1.0)


def barrier_walk(
    c: float, n: int, dt: float, rng: RngLike, max_steps: int, track_double: bool = True, track_single: bool = True
) -> Tuple[np.ndarray, np.ndarray]:
    """Exit times of gamma from (-c, c) and from (-inf, c) on common paths.

    A step from g0 to g1 crosses the upper level with the Brownian-bridge
    probability exp(-2 (c - g0)(c - g1) / dt), and the lower one with
    exp(-2 (c + g0)(c + g1) / dt); a grid-level crossing has probability 1.

    Returns:
        (double-barrier times, single-barrier times); NaN where untracked or
        the budget ran out
    """
    _positive(c, "c")
    _positive(dt, "dt")
    gen = as_generator(rng)
    t_double = np.full(n, np.nan)
    t_single = np.full(n, np.nan)
    gamma = np.zeros(n)
    active = np.arange(n)
    done = 0
    while active.size and done < max_steps:
        k = _block_size(active.size, max_steps - done)
        start = gamma[active, None]
        path = start + math.sqrt(dt) * np.cumsum(gen.standard_normal((active.size, k)), axis=1)
        left = np.concatenate([start, path[:, :-1]], axis=1)
        u_up = gen.random((active.size, k))
        u_lo = gen.random((active.size, k))
        p_up = np.exp(-2.0 * np.clip(c - left, 0, None) * np.clip(c - path, 0, None) / dt)
        p_lo = np.exp(-2.0 * np.clip(c + left, 0, None) * np.clip(c + path, 0, None) / dt)
        up = u_up < p_up
        down = u_lo < p_lo
        rows = np.arange(active.size)

        tracks = ((up | down, t_double, True, track_double), (up, t_single, False, track_single))
        for flags, times, double, tracked in tracks:
            if not tracked:
                continue
            fresh = flags.any(axis=1) & np.isnan(times[active])
            j = flags[rows[fresh]].argmax(axis=1)
            frac = _crossing_fraction(left[rows[fresh], j], path[rows[fresh], j], c, double)
            times[active[fresh]] = dt * (done + j + frac)

        gamma[active] = path[:, -1]
        pending = np.zeros(active.size, dtype=bool)
        if track_double:
            pending |= np.isnan(t_double[active])
        if track_single:
            pending |= np.isnan(t_single[active])
        active = active[pending]
        done += k

    if active.size:
        logger.warning("barrier walk c=%g: %d of %d paths exhausted %d steps", c, active.size, n, max_steps)
    return t_double, t_single


def _functionals_at(exit_times: np.ndarray, dt: float, gen: np.random.Generator, max_steps: int) -> np.ndarray:
    log_a = np.full(exit_times.size, np.nan)
    done = ~np.isnan(exit_times)
    if done.any():
        log_a[done] = integrate_log_functional(exit_times[done], dt, gen, max_steps=max_steps).log_a
    return log_a


def exit_single_batch(
    c: float, n: int, dt: float, rng: RngLike, mode: ExitMode = "exact", max_steps: int = DEFAULT_MAX_STEPS
) -> ExitBatch:
    """T^gamma_c and A at that time for n independent paths.

    beta is independent of gamma, so A is integrated over the exit time after
    the exit time is drawn. In exact mode the exit time is c^2/N^2.
    """
    _positive(c, "c")
    gen = as_generator(rng)
    if mode == "exact":
        times = np.asarray(sample_first_passage(c, gen, n), dtype=float)
    elif mode == "path":
        _, times = barrier_walk(c, n, dt, gen, max_steps, track_double=False)
    else:
        raise DomainError(f"Unknown exit mode: {mode}")
    return ExitBatch(c, "single", times, _functionals_at(times, dt, gen, max_steps))


def exit_double_batch(c: float, n: int, dt: float, rng: RngLike, max_steps: int = DEFAULT_MAX_STEPS) -> ExitBatch:
    """T^{|gamma|}_c with the bridge-corrected walk, and A at that time."""
    gen = as_generator(rng)
    times, _ = barrier_walk(c, n, dt, gen, max_steps, track_single=False)
    return ExitBatch(c, "double", times, _functionals_at(times, dt, gen, max_steps))


def coupled_exit_times(c: float, n: int, dt: float, rng: RngLike, max_steps: int = DEFAULT_MAX_STEPS):
    """(T^{|gamma|}_c, T^gamma_c) measured on the same gamma paths."""
    return barrier_walk(c, n, dt, rng, max_steps)


def _single(batch: ExitBatch, budget: int) -> ExitSample:
    if batch.exhausted[0]:
        message = f"no exit from the c={batch.barrier} {batch.kind} barrier within {budget} steps"
        raise BudgetExhaustedError(message, budget)
    return ExitSample(batch.barrier, batch.kind, float(batch.exit_times[0]), float(batch.functional_values[0]))


def exit_single(c: float, mode: ExitMode, dt: float, rng: RngLike, max_steps: int = DEFAULT_MAX_STEPS) -> ExitSample:
    """One draw of (T^gamma_c, A at T^gamma_c).

    Raises:
        BudgetExhaustedError: In path mode, if gamma has not crossed c within max_steps
    """
    return _single(exit_single_batch(c, 1, dt, rng, mode, max_steps), max_steps)


def exit_double(c: float, dt: float, rng: RngLike, max_steps: int = DEFAULT_MAX_STEPS) -> ExitSample:
    return _single(exit_double_batch(c, 1, dt, rng, max_steps), max_steps)


def exp_functional_batch(
    t: float, n: int, dt: float, rng: RngLike, nu: float = 0.0, exponent: float = 2.0
) -> FunctionalDraws:
    _positive(t, "t")
    return integrate_log_functional(np.full(n, float(t)), dt, rng, exponent=exponent, nu=nu)


def exp_functional_at(t: float, nu: float, dt: float, rng: RngLike, exponent: float = 2.0) -> float:
    """One draw of int_0^t exp(exponent (beta_s + nu s)) ds.

    exponent=2 with nu=0 is A^Z_t; exponent=1 gives the Asian-option functional.
    """
    return float(np.exp(exp_functional_batch(t, 1, dt, rng, nu, exponent).log_a[0]))


def bougerol_pairs(t: float, n: int, dt: float, rng: RngLike) -> Tuple[np.ndarray, np.ndarray]:
    """(sinh(beta_t), sqrt(A_t) N) with N independent; the two sides of Bougerol's identity."""
    gen = as_generator(rng)
    draws = exp_functional_batch(t, n, dt, gen)
    return np.sinh(draws.beta_end), np.exp(0.5 * draws.log_a) * gen.standard_normal(n)


def gauss_laplace_terms(log_a, x: float, kind: GaussLaplaceKind, c: Optional[float] = None) -> np.ndarray:
    """Per-path terms whose mean is the Gauss-Laplace transform at x.

    single: c sqrt(pi / (2A)) exp(-x / (2A))
    double: c sqrt(2 / (pi A)) exp(-x / (2A))
    dufresne: (2 pi A)^-1/2 exp(-x / (2A))
    """
    log_a = np.asarray(log_a, dtype=float)
    if x < 0:
        raise DomainError(f"x must be nonnegative, got {x}")
    if kind == "single":
        _positive(c, "c")
        log_prefactor = math.log(c) + 0.5 * math.log(math.pi / 2)
    elif kind == "double":
        _positive(c, "c")
        log_prefactor = math.log(c) + 0.5 * math.log(2 / math.pi)
    elif kind == "dufresne":
        log_prefactor = -0.5 * math.log(2 * math.pi)
    else:
        raise DomainError(f"Unknown transform kind: {kind}")
    return np.exp(log_prefactor - 0.5 * log_a - 0.5 * x * np.exp(-log_a))


@dataclass
class DirectWindings:
    """Direct-route results at the horizon; rejected paths came within origin_tol of 0."""

    theta: np.ndarray
    clock: np.ndarray
    rejected: np.ndarray
    exhausted: np.ndarray

    @property
    def retained(self) -> np.ndarray:
        return ~(self.rejected | self.exhausted)

    @property
    def rejection_rate(self) -> float:
        return float(self.rejected.mean())


def _bridge_refine(z0: complex, z1: complex, h: float, gen: np.random.Generator, origin_tol: float, depth: int = 12):
    """Angle and clock increments over a step, splitting it with Brownian-bridge midpoints
    until every piece turns by less than pi/2. Returns None if the piece nears 0."""
    dtheta = float(np.angle(z1 / z0))
    if abs(dtheta) < math.pi / 2:
        return dtheta, 0.5 * h * (abs(z0) ** -2 + abs(z1) ** -2)
    if depth == 0:
        return None
    w = gen.standard_normal(2)
    mid = 0.5 * (z0 + z1) + math.sqrt(h / 4) * complex(w[0], w[1])
    if abs(mid) < origin_tol:
        return None
    first = _bridge_refine(z0, mid, h / 2, gen, origin_tol, depth - 1)
    second = _bridge_refine(mid, z1, h / 2, gen, origin_tol, depth - 1)
    if first is None or second is None:
        return None
    return first[0] + second[0], first[1] + second[1]


def _direct_walk(
    t: float, n: int, dt_base: float, origin_tol: float, gen: np.random.Generator, max_steps: int, record: bool = False
):
    z = np.ones(n, dtype=complex)
    time = np.zeros(n)
    theta = np.zeros(n)
    clock = np.zeros(n)
    rejected = np.zeros(n, dtype=bool)
    alive = np.ones(n, dtype=bool)
    history: List[Tuple[float, complex, float, float]] = [(0.0, 1 + 0j, 0.0, 0.0)] if record else []
    refined = 0
    steps = 0
    while alive.any() and steps < max_steps:
        idx = np.flatnonzero(alive)
        z0 = z[idx]
        r2 = np.abs(z0) ** 2
        h = np.minimum(dt_base * np.minimum(1.0, r2), t - time[idx])
        w = gen.standard_normal((idx.size, 2))
        z1 = z0 + np.sqrt(h) * (w[:, 0] + 1j * w[:, 1])
        dtheta = np.angle(z1 / z0)
        with np.errstate(divide="ignore"):
            dclock = 0.5 * h * (1.0 / r2 + np.abs(z1) ** -2)
        bad = np.abs(z1) < origin_tol

        for pos in np.flatnonzero((np.abs(dtheta) >= math.pi / 2) & ~bad):
            refined += 1
            result = _bridge_refine(complex(z0[pos]), complex(z1[pos]), float(h[pos]), gen, origin_tol)
            if result is None:
                bad[pos] = True
            else:
                dtheta[pos], dclock[pos] = result

        z[idx] = z1
        time[idx] += h
        theta[idx] += dtheta
        clock[idx] += dclock
        rejected[idx[bad]] = True
        alive[idx[bad]] = False
        alive[idx[time[idx] >= t * (1 - 1e-12)]] = False
        if record and not bad[0]:
            history.append((float(time[0]), complex(z[0]), float(theta[0]), float(clock[0])))
        steps += 1

    if refined:
        logger.debug("direct route: %d steps refined by bridge splitting", refined)
    exhausted = alive & ~rejected
    return DirectWindings(theta, clock, rejected, exhausted), history


def winding_direct_batch(
    t: float,
    n: int,
    dt_base: float,
    rng: RngLike,
    origin_tol: float = ORIGIN_TOL,
    max_steps: int = DEFAULT_MAX_STEPS,
) -> DirectWindings:
    """theta_t and H_t for n paths of Z = 1 + W by the direct planar route.

    Steps shrink as dt_base min(1, |Z|^2) near the origin.
    """
    _positive(t, "t")
    _positive(dt_base, "dt_base")
    result, _ = _direct_walk(t, n, dt_base, origin_tol, as_generator(rng), max_steps)
    if result.rejected.any():
        logger.warning("direct route: rejected %d of %d paths near the origin", result.rejected.sum(), n)
    return result


def winding_direct(
    t_max: float, dt_base: float, origin_tol: float, rng: RngLike, max_steps: int = DEFAULT_MAX_STEPS
) -> PlanarPath:
    """One recorded path of Z = 1 + W on [0, t_max].

    Raises:
        OriginProximityError: If the path comes within origin_tol of 0
        BudgetExhaustedError: If the horizon is not reached within max_steps
    """
    _positive(t_max, "t_max")
    _positive(dt_base, "dt_base")
    result, history = _direct_walk(t_max, 1, dt_base, origin_tol, as_generator(rng), max_steps, record=True)
    if result.rejected[0]:
        raise OriginProximityError(f"path came within {origin_tol} of the origin")
    if result.exhausted[0]:
        raise BudgetExhaustedError(f"horizon {t_max} not reached within {max_steps} steps", max_steps)
    times, points, theta, clock = (np.array(column) for column in zip(*history))
    return PlanarPath(times=times, points=points, theta=theta, clock=clock)


@dataclass
class DriverWindings:
    """theta_t per path; NaN where the clock passed `clock_floor` before A reached t."""

    theta: np.ndarray
    clock: np.ndarray
    normal: Optional[np.ndarray] = None
    clock_floor: float = math.inf

    @property
    def exhausted(self) -> np.ndarray:
        return np.isnan(self.clock)

    @property
    def retention(self) -> float:
        return float(1.0 - self.exhausted.mean())

    def theta_floor(self) -> np.ndarray:
        """theta with exhausted paths replaced by sqrt(clock_floor) N.

        An exhausted path has H_t > clock_floor, so the replacement has the
        right sign and a smaller magnitude than the true winding.
        """
        if self.normal is None or not math.isfinite(self.clock_floor):
            return self.theta
        return np.where(self.exhausted, math.sqrt(self.clock_floor) * self.normal, self.theta)


def winding_driver(
    t: float, n: int, dt: float, rng: RngLike, max_steps: int = DEFAULT_MAX_STEPS, coarsen_rounds: int = 0
) -> DriverWindings:
    """theta_t = gamma_{H_t} for n paths by the driver route.

    H_t depends on beta only, so gamma_{H_t} is drawn exactly as sqrt(H_t) N.
    """
    _positive(t, "t")
    gen = as_generator(rng)
    clock = first_clock_crossing(np.full(n, math.log(t)), dt, gen, max_steps, coarsen_rounds)
    normal = gen.standard_normal(n)
    floor = clock_coverage(dt, max_steps, coarsen_rounds)
    return DriverWindings(theta=np.sqrt(clock) * normal, clock=clock, normal=normal, clock_floor=floor)


def winding_at_large_t(t: float, dt: float, rng: RngLike, max_steps: int = DEFAULT_MAX_STEPS) -> float:
    """One draw of theta_t at a large horizon (driver route only).

    Raises:
        BudgetExhaustedError: If A does not reach t within max_steps
    """
    result = winding_driver(t, 1, dt, rng, max_steps)
    if result.exhausted[0]:
        raise BudgetExhaustedError(f"A did not reach t={t:.4g} within {max_steps} steps", max_steps)
    return float(result.theta[0])


def winding_driver_path(t: float, dt: float, rng: RngLike, max_steps: int = DEFAULT_MAX_STEPS) -> PlanarPath:
    """A real-time planar path on [0, t] rebuilt from a driver path.

    The clock range is doubled until A passes t.
    """
    _positive(t, "t")
    gen = as_generator(rng)
    u_max = max(1.0, 4 * dt)
    while True:
        driver = simulate_driver(u_max, dt, gen)
        if driver.log_a[-1] >= math.log(t):
            return driver.planar_until(t)
        if driver.length >= max_steps:
            raise BudgetExhaustedError(f"A did not reach t={t:.4g} within {max_steps} steps", max_steps)
        u_max *= 2


def clock_at_first_passage_batch(b: float, n: int, dt: float, rng: RngLike, max_steps: int = DEFAULT_MAX_STEPS):
    """H^Z at the first hitting time of b by an independent Brownian motion delta.

    That time is b^2/N^2; the clock is the inverse of A at it. NaN marks paths
    whose clock passed the budget, i.e. values above dt * max_steps.
    """
    _positive(b, "b")
    gen = as_generator(rng)
    hitting = np.asarray(sample_first_passage(b, gen, n), dtype=float)
    return first_clock_crossing(np.log(hitting), dt, gen, max_steps)


def clock_at_first_passage(b: float, dt: float, rng: RngLike, max_steps: int = DEFAULT_MAX_STEPS) -> float:
    clock = clock_at_first_passage_batch(b, 1, dt, rng, max_steps)
    if np.isnan(clock[0]):
        raise BudgetExhaustedError(f"clock exceeded {dt * max_steps:.4g} before the hitting time", max_steps)
    return float(clock[0])


def _check_paths(n_paths: int) -> int:
    if n_paths < 4:
        raise DomainError(f"pricing needs at least 4 paths (2 antithetic pairs), got {n_paths}")
    return n_paths // 2


def asian_payoffs(
    t: float, strikes: Sequence[float], nu: float, pairs: int, dt: float, rng: RngLike, exponent: float = 2.0
) -> np.ndarray:
    """Pair-averaged payoffs (A_t / t - K)^+, shape (pairs, strikes).

    A_t = int_0^t exp(exponent (beta_s + nu s)) ds; each row averages the
    payoff of a path and of its mirror image -beta.
    """
    _positive(t, "t")
    if any(k < 0 for k in strikes):
        raise DomainError(f"strikes must be nonnegative, got {list(strikes)}")
    draws = integrate_log_functional(np.full(pairs, float(t)), dt, rng, exponent=exponent, nu=nu, antithetic=True)
    average = np.exp(draws.log_a)[:, None] / t
    twin = np.exp(draws.log_a_anti)[:, None] / t
    levels = np.asarray(strikes, dtype=float)[None, :]
    return 0.5 * (np.maximum(average - levels, 0.0) + np.maximum(twin - levels, 0.0))


def asian_call_grid(
    t: float, strikes: Sequence[float], nu: float, n_paths: int, dt: float, rng: RngLike, exponent: float = 2.0
) -> List[McEstimate]:
    """Prices E[(A_t / t - K)^+] for several strikes on common random numbers."""
    payoffs = asian_payoffs(t, strikes, nu, _check_paths(n_paths), dt, rng, exponent)
    return [McEstimate.from_samples(payoffs[:, j]) for j in range(payoffs.shape[1])]


def asian_call(
    t: float, K: float, nu: float, n_paths: int, dt: float, rng: RngLike, exponent: float = 2.0
) -> McEstimate:
    return asian_call_grid(t, [K], nu, n_paths, dt, rng, exponent)[0]


def yor_exptime_batch(p: YorParams, n: int, dt: float, rng: RngLike, max_steps: int = DEFAULT_MAX_STEPS) -> np.ndarray:
    """int_0^{T_lambda} exp(2 (beta_s + nu s)) ds with T_lambda exponential of rate lambda."""
    gen = as_generator(rng)
    horizons = gen.standard_exponential(n) / p.lam
    horizons = np.where(horizons > 0, horizons, np.finfo(float).tiny)
    return np.exp(integrate_log_functional(horizons, dt, gen, exponent=2.0, nu=p.nu, max_steps=max_steps).log_a)


def yor_exptime_functional(p: YorParams, dt: float, rng: RngLike) -> float:
    return float(yor_exptime_batch(p, 1, dt, rng)[0])


def pinched_log_functional(t: float, n: int, dt: float, rng: RngLike, max_steps: int = DEFAULT_MAX_STEPS) -> np.ndarray:
    """(1/t) log A at the exit time T^gamma_t.

    By scaling, A_{T^gamma_t} = t^2 int_0^{T^gamma_1} exp(2 t beta_v) dv.
    """
    _positive(t, "t")
    gen = as_generator(rng)
    horizons = np.asarray(sample_first_passage(1.0, gen, n), dtype=float)
    log_a = integrate_log_functional(horizons, dt, gen, exponent=2.0 * t, max_steps=max_steps).log_a
    return (2.0 * math.log(t) + log_a) / t


def fixed_horizon_log_functional(t: float, n: int, dt: float, rng: RngLike) -> np.ndarray:
    """(1/t) log A_{t^2}, with A_{t^2} = t^2 int_0^1 exp(2 t beta_v) dv."""
    _positive(t, "t")
    log_a = integrate_log_functional(np.ones(n), dt, rng, exponent=2.0 * t).log_a
    return (2.0 * math.log(t) + log_a) / t


@dataclass
class TailCurve:
    """Estimated P(A_horizon >= t) on a grid of log t, with consecutive log-log slopes."""

    log_levels: np.ndarray
    counts: np.ndarray
    n: int

    @property
    def probabilities(self) -> np.ndarray:
        return self.counts / self.n

    @property
    def slopes(self) -> np.ndarray:
        with np.errstate(divide="ignore"):
            log_p = np.log(self.probabilities)
        return np.diff(log_p) / np.diff(self.log_levels)

    def merged(self, other: "TailCurve") -> "TailCurve":
        if not np.array_equal(self.log_levels, other.log_levels):
            raise DomainError("tail curves on different grids cannot be merged")
        return TailCurve(self.log_levels, self.counts + other.counts, self.n + other.n)


def tail_counts(log_a: np.ndarray, log_levels: Sequence[float]) -> TailCurve:
    levels = np.asarray(log_levels, dtype=float)
    counts = (np.asarray(log_a)[:, None] >= levels[None, :]).sum(axis=0)
    return TailCurve(levels, counts, int(np.asarray(log_a).size))


def tail_probability_curve(horizon: float, log_levels: Sequence[float], n: int, dt: float, rng: RngLike) -> TailCurve:
    """P(A_horizon >= e^L) for each L; by duality this is P(H_{e^L} <= horizon)."""
    return tail_counts(exp_functional_batch(horizon, n, dt, rng).log_a, log_levels)
