"""Registry of named experiments and the runner that executes them.

Each experiment binds one identity or limit theorem to the samplers and
engines that test it and to an analytic target. Monte Carlo work is split
into fixed chunks with their own substreams, so a report depends only on the
seed and the experiment name.
"""

import hashlib
import logging
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, Iterable, Iterator, List, Optional, Tuple

import numpy as np
from scipy import special, stats

import analytic
import bm_engine
import stable_engine
from config import KS_INFLATION, LARGE_HORIZON_DT, MIN_ESS, RunConfig
from errors import BudgetExhaustedError, DegenerateWeightsError, UnknownExperimentError
from samplers import (
    RngStream,
    YorParams,
    biased_expectation,
    chunk_streams,
    sample_first_passage,
    sample_K,
    sample_X2c,
    sample_yor_rhs,
)
from verify import Check, ExperimentReport, McEstimate, ks_one_sample, ks_two_sample, ks_weighted

logger = logging.getLogger(__name__)

X_GRID = (0.0, 0.5, 1.0, 2.0)


@dataclass
class Outcome:
    """What an experiment function returns; the runner turns it into a report."""

    checks: List[Check]
    n: int
    details: Dict[str, Any] = field(default_factory=dict)
    inconclusive: Optional[str] = None


@dataclass(frozen=True)
class Experiment:
    name: str
    claim: str
    func: Callable[["ExperimentContext"], Outcome]
    paths: int
    dt: float
    tags: Tuple[str, ...] = ()


REGISTRY: Dict[str, Experiment] = {}


def experiment(name: str, claim: str, paths: int, dt: float, tags: Tuple[str, ...] = ()):
    """Register an experiment function under `name`."""

    def decorator(func: Callable[["ExperimentContext"], Outcome]):
        REGISTRY[name] = Experiment(name, claim, func, paths, dt, tags)
        return func

    return decorator


def stream_id_for(name: str) -> int:
    """64-bit stream id derived from the experiment name."""
    return int.from_bytes(hashlib.sha256(name.encode("utf-8")).digest()[:8], "big")


@dataclass
class ExperimentContext:
    experiment: Experiment
    stream: RngStream
    config: RunConfig

    @property
    def n_paths(self) -> int:
        return self.config.n_paths or self.experiment.paths

    @property
    def dt(self) -> float:
        return self.config.dt or self.experiment.dt

    def param(self, key: str, default: float) -> float:
        """Override `<experiment>.<key>` or `<key>` from the run configuration."""
        overrides = self.config.overrides
        return overrides.get(f"{self.experiment.name}.{key}", overrides.get(key, default))

    def chunks(self, n: Optional[int] = None, offset: int = 0) -> Iterator[Tuple[np.random.Generator, int]]:
        """Generators for fixed-size chunks of `n` draws; `offset` selects a separate family."""
        base = self.stream if offset == 0 else self.stream.substream(2**32 + offset)
        for sub, count in chunk_streams(base, n or self.n_paths):
            yield sub.generator(), count

    def collect(self, func: Callable[[np.random.Generator, int], Any], n: Optional[int] = None, offset: int = 0):
        """Concatenate the arrays (or tuples of arrays) returned by func for every chunk."""
        parts = [func(gen, count) for gen, count in self.chunks(n, offset)]
        if isinstance(parts[0], tuple):
            return tuple(np.concatenate(column) for column in zip(*parts))
        return np.concatenate(parts)


def _censor(values: np.ndarray, cap: float) -> np.ndarray:
    return np.where(np.isnan(values), cap, np.minimum(values, cap))


def _retention_reason(retained: int, total: int, minimum: float = 0.8) -> Optional[str]:
    if total and retained / total < minimum:
        return f"only {retained} of {total} paths finished within budget"
    return None


def _too_few(retained: int) -> Outcome:
    check = Check("retained", float(retained), 2.0, 0.0, kind="at_least")
    return Outcome([check], retained, {"retained": retained}, f"only {retained} paths finished within budget")


def _gauss_laplace_checks(log_a: np.ndarray, kind: str, c: Optional[float] = None, t: Optional[float] = None):
    checks = []
    for x in X_GRID:
        terms = bm_engine.gauss_laplace_terms(log_a, x, kind, c)
        target = analytic.glt_rhs(kind, x, c=c, t=t)
        checks.append(Check.from_mc(f"x={x:g}", McEstimate.from_samples(terms), target))
    return checks


@experiment(
    "bougerol",
    "sinh(beta_t) and sqrt(A_t) N have the same law at every fixed t",
    paths=10_000,
    dt=1e-3,
    tags=("bm", "identity"),
)
def bougerol(ctx: ExperimentContext) -> Outcome:
    checks = []
    n = ctx.n_paths
    for t in (0.5, 1.0, 2.0):
        # both sides from disjoint path sets so the samples are independent
        lhs, rhs = ctx.collect(lambda gen, count: bm_engine.bougerol_pairs(t, count, ctx.dt, gen), 2 * n)
        result = ks_two_sample(lhs[:n], rhs[n:], inflation=KS_INFLATION)
        checks.append(Check.from_ks(f"t={t:g}", result))
    return Outcome(checks, n)


@experiment(
    "glt_single",
    "Gauss-Laplace transform of A at the single-barrier exit time T^gamma_c",
    paths=100_000,
    dt=LARGE_HORIZON_DT,
    tags=("bm", "transform"),
)
def glt_single(ctx: ExperimentContext) -> Outcome:
    c = ctx.param("c", 1.0)
    max_steps = 20_000
    log_a = ctx.collect(
        lambda gen, count: bm_engine.exit_single_batch(c, count, ctx.dt, gen, "exact", max_steps).log_functionals
    )
    checks = _gauss_laplace_checks(log_a, "single", c=c)

    # exact and path-mode exit times agree once both are censored at the walk budget
    n_cross = min(2_000, ctx.n_paths)
    walk_dt, walk_steps = 1e-3, 50_000
    cap = walk_dt * walk_steps
    exact = ctx.collect(lambda gen, count: sample_first_passage(c, gen, count), n_cross, offset=1)
    walked = ctx.collect(
        lambda gen, count: bm_engine.barrier_walk(c, count, walk_dt, gen, walk_steps, track_double=False)[1],
        n_cross,
        offset=2,
    )
    agreement = ks_two_sample(_censor(exact, cap), _censor(walked, cap), inflation=KS_INFLATION)
    checks.append(Check.from_ks("exact_vs_path_exit", agreement))
    details = {"c": c, "median_exit_time": float(np.median(exact)), "path_censored": int(np.isnan(walked).sum())}
    return Outcome(checks, log_a.size, details)


@experiment(
    "glt_double",
    "Gauss-Laplace transform of A at the double-barrier exit time, f_m with m = pi/(2c)",
    paths=100_000,
    dt=1e-3,
    tags=("bm", "transform"),
)
def glt_double(ctx: ExperimentContext) -> Outcome:
    c = ctx.param("c", math.pi / 4)

    def run(gen, count):
        batch = bm_engine.exit_double_batch(c, count, ctx.dt, gen)
        return batch.exit_times, batch.log_functionals

    batch_times, log_a = ctx.collect(run)
    exhausted = int(np.isnan(batch_times).sum())
    checks = _gauss_laplace_checks(log_a[~np.isnan(log_a)], "double", c=c)

    n_coupled = min(2_000, ctx.n_paths)
    doubled, single = ctx.collect(
        lambda gen, count: bm_engine.coupled_exit_times(c, count, ctx.dt, gen, 50_000), n_coupled, offset=1
    )
    both = ~np.isnan(doubled) & ~np.isnan(single)
    violations = int(np.sum(doubled[both] > single[both]))
    checks.append(Check("double_exits_first", float(violations), 0.0, 0.0, kind="at_most", n=int(both.sum())))
    details = {
        "c": c,
        "m": analytic.order_from_barrier(c),
        "exhausted": exhausted,
        "mean_exit_time": float(np.nanmean(batch_times)),
    }
    return Outcome(checks, log_a.size, details, _retention_reason(log_a.size - exhausted, log_a.size, 0.99))


@experiment(
    "dufresne",
    "Gauss-Laplace transform of A_t at a fixed time t",
    paths=100_000,
    dt=1e-3,
    tags=("bm", "transform"),
)
def dufresne(ctx: ExperimentContext) -> Outcome:
    t = ctx.param("t", 1.0)
    log_a = ctx.collect(lambda gen, count: bm_engine.exp_functional_batch(t, count, ctx.dt, gen).log_a)
    return Outcome(_gauss_laplace_checks(log_a, "dufresne", t=t), log_a.size, {"t": t})


@experiment(
    "ggc_laplace",
    "K built from the Chebyshev coefficients has Laplace transform f_m",
    paths=100_000,
    dt=1e-3,
    tags=("ggc", "sampler"),
)
def ggc_laplace(ctx: ExperimentContext) -> Outcome:
    checks = []
    for m in (1, 2, 3, 4, 5):
        spec = analytic.ggc_coeffs(m)
        grid = np.linspace(0.0, 10.0, 41)
        gap = float(np.max(np.abs(spec.laplace_transform(grid) - analytic.f_m(grid, m))))
        checks.append(Check(f"m={m} product_vs_closed_form", gap, 0.0, 1e-10, kind="at_most"))
        draws = ctx.collect(lambda gen, count: sample_K(spec, gen, count), offset=m)
        for x in (0.5, 1.0, 2.0):
            estimate = McEstimate.from_samples(np.exp(-x * draws))
            checks.append(Check.from_mc(f"m={m} x={x:g}", estimate, analytic.f_m(x, m)))
        checks.append(Check.from_mc(f"m={m} mean", McEstimate.from_samples(draws), spec.mean()))
    return Outcome(checks, ctx.n_paths)


@experiment(
    "x2c_laplace",
    "X_{2,c} = G'_1/2 + K has Laplace transform (1+x)^-1/2 f_m(x), also as the length-biased law of 1/(2A)",
    paths=20_000,
    dt=1e-3,
    tags=("ggc", "sampler", "bm"),
)
def x2c_laplace(ctx: ExperimentContext) -> Outcome:
    checks = []
    for m in (1, 2, 3):
        c = math.pi / (2 * m)
        draws = ctx.collect(lambda gen, count: sample_X2c(c, gen, count), max(ctx.n_paths, 100_000), offset=m)
        for x in (0.5, 1.0, 2.0):
            target = analytic.glt_rhs("double", x, c=c)
            checks.append(Check.from_mc(f"m={m} x={x:g}", McEstimate.from_samples(np.exp(-x * draws)), target))

    # reweighted path draws at m = 2
    c = math.pi / 4
    log_a = ctx.collect(lambda gen, count: bm_engine.exit_double_batch(c, count, ctx.dt, gen).log_functionals)
    values = 0.5 * np.exp(-log_a[~np.isnan(log_a)])
    ess = math.inf
    for x in (0.5, 1.0, 2.0):
        estimate = biased_expectation(values, 0.5, lambda v: np.exp(-x * v))
        ess = min(ess, estimate.ess)
        checks.append(Check.from_mc(f"biased x={x:g}", estimate, analytic.glt_rhs("double", x, c=c)))
    reason = f"effective sample size {ess:.0f} below {MIN_ESS:.0f}" if ess < MIN_ESS else None
    return Outcome(checks, values.size, {"ess": ess}, reason)


@experiment(
    "h5",
    "the clock at the hitting time of b by an independent Brownian motion is T^beta_{arcsinh b}",
    paths=10_000,
    dt=1e-3,
    tags=("bm", "clock"),
)
def h5(ctx: ExperimentContext) -> Outcome:
    b = ctx.param("b", 1.0)
    u_max = ctx.param("u_max", 50.0)
    max_steps = int(math.ceil(u_max / ctx.dt))
    level = math.asinh(b)
    clock = ctx.collect(lambda gen, count: bm_engine.clock_at_first_passage_batch(b, count, ctx.dt, gen, max_steps))
    exact = ctx.collect(lambda gen, count: sample_first_passage(level, gen, count), offset=1)
    censored = _censor(clock, u_max)
    checks = [
        Check.from_ks("ks_censored", ks_two_sample(censored, _censor(exact, u_max), inflation=KS_INFLATION)),
        Check.from_mc("P(H<=1)", McEstimate.from_samples(censored <= 1.0), analytic.first_passage_cdf(level, 1.0)),
    ]
    return Outcome(checks, clock.size, {"b": b, "a_b": level, "censored": int(np.isnan(clock).sum()), "u_max": u_max})


@experiment(
    "deblassie",
    "P(H_t <= 1) = P(A_1 >= t) decays faster than any power of t",
    paths=1_000_000,
    dt=1e-3,
    tags=("bm", "clock", "asymptotic"),
)
def deblassie(ctx: ExperimentContext) -> Outcome:
    log_a = ctx.collect(lambda gen, count: bm_engine.exp_functional_batch(1.0, count, ctx.dt, gen).log_a)
    levels = [2.0, 3.0, 4.0]
    # extend the grid while the estimate rests on at least 100 exceedances
    while levels[-1] < 12.0 and np.sum(log_a >= levels[-1] + 1.0) >= 100:
        levels.append(levels[-1] + 1.0)
    curve = bm_engine.tail_counts(log_a, levels)
    slopes = curve.slopes
    probability = curve.probabilities[levels.index(4.0)]
    stderr = math.sqrt(probability * (1 - probability) / curve.n)
    bound = analytic.deblassie_bound(math.e**4, 1.0)
    checks = [
        Check("slopes_steepen", float(np.max(np.diff(slopes))), 0.0, 0.0, kind="at_most"),
        Check("last_slope", float(slopes[-1]), -1.0, 0.0, kind="at_most"),
        Check("bound_at_e4", float(probability), bound, 3 * stderr, kind="at_most", stderr=stderr, n=curve.n),
    ]
    details = {
        "log_levels": levels,
        "counts": curve.counts.tolist(),
        "probabilities": curve.probabilities.tolist(),
        "slopes": slopes.tolist(),
        "reached_minus_two": bool(slopes[-1] <= -2.0),
    }
    return Outcome(checks, curve.n, details)


@experiment(
    "spitzer_bm",
    "2 theta_t / log t converges to a standard Cauchy law",
    paths=5_500,
    dt=LARGE_HORIZON_DT,
    tags=("bm", "winding", "asymptotic"),
)
def spitzer_bm(ctx: ExperimentContext) -> Outcome:
    log_t = ctx.param("log_t", 30.0)
    u_budget = ctx.param("u_budget", 10_000.0)
    rounds = int(ctx.param("coarsen_rounds", 8))
    max_steps = max(1, int(math.ceil(u_budget / ctx.dt)))
    horizon = math.exp(log_t)

    def run(gen, count):
        result = bm_engine.winding_driver(horizon, count, ctx.dt, gen, max_steps, rounds)
        return result.theta_floor(), result.exhausted

    theta, exhausted = ctx.collect(run)
    if theta.size < 2:
        return _too_few(theta.size)
    statistic = 2.0 * theta / log_t
    # exhausted paths carry a floor of the same sign; only a positive floor at or below 1 leaves P(<=1) open
    undecided = exhausted & (statistic > 0.0) & (statistic <= 1.0)
    below_one = McEstimate.from_samples(np.where(undecided, 0.5, statistic <= 1.0))
    checks = [
        Check("median", float(np.median(statistic)), 0.0, 0.05, n=statistic.size),
        Check("P(<=1)", below_one.mean, 0.75, 0.02, stderr=below_one.stderr, n=statistic.size),
    ]
    floor = bm_engine.clock_coverage(ctx.dt, max_steps, rounds)
    details = {
        "log_t": log_t,
        "attempted": int(theta.size),
        "exhausted": int(exhausted.sum()),
        "undecided": int(undecided.sum()),
        "clock_floor": floor,
    }
    reason = None
    if undecided.sum() > 0.01 * theta.size:
        reason = f"{int(undecided.sum())} of {theta.size} paths still open after clock {floor:.4g}"
    return Outcome(checks, theta.size, details, reason)


@experiment(
    "propnew",
    "(1/t) log A at the pinched horizon T^gamma_t converges to 2|C_1|",
    paths=10_000,
    dt=1e-3,
    tags=("bm", "asymptotic"),
)
def propnew(ctx: ExperimentContext) -> Outcome:
    def cauchy_cdf(x):
        return 2.0 / math.pi * np.arctan(np.clip(x, 0.0, None) / 2.0)

    def half_normal_cdf(x):
        return special.erf(np.clip(x, 0.0, None) / (2.0 * math.sqrt(2.0)))

    checks = []
    details: Dict[str, Any] = {}
    for index, t in enumerate((10.0, 15.0)):
        pinched = ctx.collect(
            lambda gen, count: bm_engine.pinched_log_functional(t, count, ctx.dt, gen, 20_000), offset=index
        )
        result = ks_one_sample(pinched, cauchy_cdf)
        checks.append(Check(f"t={t:g}", result.statistic, 0.0, 0.05, n=result.n))
        fixed = ctx.collect(
            lambda gen, count: bm_engine.fixed_horizon_log_functional(t, count, ctx.dt, gen),
            min(ctx.n_paths, 4_000),
            offset=10 + index,
        )
        details[f"fixed_horizon_ks_vs_2|N| t={t:g}"] = ks_one_sample(fixed, half_normal_cdf).statistic
        details[f"fixed_horizon_ks_vs_2|C| t={t:g}"] = ks_one_sample(fixed, cauchy_cdf).statistic
    return Outcome(checks, ctx.n_paths, details)


@experiment(
    "yor_exptime",
    "the exponential functional up to an independent exponential time has the law (1 - U^(1/a)) / (2 G_b)",
    paths=10_000,
    dt=1e-3,
    tags=("bm", "identity"),
)
def yor_exptime(ctx: ExperimentContext) -> Outcome:
    params = YorParams.from_rate(ctx.param("lambda", 2.0), ctx.param("nu", 0.0))
    paths = ctx.collect(lambda gen, count: bm_engine.yor_exptime_batch(params, count, ctx.dt, gen))
    exact = ctx.collect(lambda gen, count: sample_yor_rhs(params, gen, count), offset=1)
    ratio = float(np.median(paths) / np.median(exact))
    checks = [
        Check.from_ks("ks", ks_two_sample(paths, exact, inflation=KS_INFLATION)),
        Check("median_ratio", ratio, 1.0, 0.05, n=paths.size),
    ]
    return Outcome(checks, paths.size, {"lambda": params.lam, "nu": params.nu, "a": params.a, "b": params.b})


@experiment(
    "kalpha_variance",
    "the winding of a stable process read at the inverse clock is a Levy process with variance u k(alpha)",
    paths=10_000,
    dt=1e-3,
    tags=("stable", "winding"),
)
def kalpha_variance(ctx: ExperimentContext) -> Outcome:
    alpha = ctx.param("alpha", 1.0)
    constants = analytic.cone_constants(alpha)
    k = constants.k_alpha
    grid = (0.25, 0.5, 1.0)
    variances = []
    checks = []
    largest = 0.0
    for index, u in enumerate(grid):
        def run(gen, count):
            result = stable_engine.stable_windings_batch(alpha, count, ctx.dt, gen, clock_target=u)
            return result.theta, np.full(count, result.max_increment)

        theta, increments = ctx.collect(run, offset=index)
        largest = max(largest, float(increments.max()))
        theta = theta[~np.isnan(theta)]
        if theta.size < 2:
            return _too_few(theta.size)
        variances.append(float(np.var(theta, ddof=1)))
        if u == 0.5:
            checks.append(Check("var/u at u=0.5", variances[-1] / u, k, 0.05 * k, n=theta.size))
            checks.append(Check.from_mc("mean at u=0.5", McEstimate.from_samples(theta), 0.0))
    slope = float(np.dot(grid, variances) / np.dot(grid, grid))
    checks.append(Check("variance_slope", slope, k, 0.10 * k))
    expected = constants.expected_ratio
    checks.append(Check("ratio_k_over_r", slope / constants.r_alpha, expected, 0.10 * expected))
    checks.append(Check("max_increment", largest, math.pi, 0.0, kind="at_most"))
    details = {"alpha": alpha, "k_alpha": k, "r_alpha": constants.r_alpha, "variances": variances, "u": list(grid)}
    return Outcome(checks, ctx.n_paths, details)


@experiment(
    "stable_asymptotic",
    "(1/t) log of the first time the stable winding reaches sqrt(t) converges to 1 / (r(alpha) N^2)",
    paths=10_000,
    dt=LARGE_HORIZON_DT,
    tags=("stable", "winding", "asymptotic"),
)
def stable_asymptotic(ctx: ExperimentContext) -> Outcome:
    alpha = ctx.param("alpha", 1.0)
    t = ctx.param("t", 9.0)

    def run(gen, count):
        result = stable_engine.spitzer_stable_batch(alpha, 1.0, t, count, ctx.dt, gen, 100_000)
        return np.where(result.retained, result.log_exit_times[:, 0] / t, np.nan)

    statistic = ctx.collect(run)
    kept = statistic[~np.isnan(statistic)]
    if kept.size < 2:
        return _too_few(kept.size)
    target = stable_engine.spitzer_stable_limit_median(alpha)
    median = float(np.median(kept))
    checks = [Check("median", median, target, 0.15 * target, n=kept.size)]
    details = {"alpha": alpha, "t": t, "retained": int(kept.size), "positive_fraction": float(np.mean(kept > 0))}
    return Outcome(checks, kept.size, details, _retention_reason(kept.size, statistic.size))


@experiment(
    "asian_k0",
    "the Asian call with zero strike prices at E[A_t]/t = (e^2t - 1)/(2t)",
    paths=100_000,
    dt=1e-3,
    tags=("bm", "pricing"),
)
def asian_k0(ctx: ExperimentContext) -> Outcome:
    t = ctx.param("t", 1.0)
    strikes = (0.0, 1.0, 2.0, 4.0)
    payoffs = ctx.collect(
        lambda gen, count: bm_engine.asian_payoffs(t, strikes, 0.0, count, ctx.dt, gen), ctx.n_paths // 2
    )
    prices = [McEstimate.from_samples(payoffs[:, j]) for j in range(len(strikes))]
    target = (math.exp(2 * t) - 1) / (2 * t)
    means = [p.mean for p in prices]
    # payoffs share paths across strikes, so the ordering holds per sample
    details = {
        "strikes": list(strikes),
        "prices": means,
        "stderr": [p.stderr for p in prices],
        "monotone_in_K": bool(np.all(np.diff(means) <= 0.0)),
    }
    checks = [Check.from_mc("K=0", prices[0], target)]
    return Outcome(checks, 2 * payoffs.shape[0], details)


@experiment(
    "bo_limit",
    "the length-biased law of 1/(2A) at T^gamma_c approaches Gamma(1/2) as c grows (c = 10 unless overridden)",
    paths=20_000,
    dt=LARGE_HORIZON_DT,
    tags=("bm", "ggc", "asymptotic"),
)
def bo_limit(ctx: ExperimentContext) -> Outcome:
    c = ctx.param("c", 10.0)
    log_a = ctx.collect(
        lambda gen, count: bm_engine.exit_single_batch(c, count, ctx.dt, gen, "exact", 4_000).log_functionals
    )
    values = 0.5 * np.exp(-log_a)
    try:
        estimate = biased_expectation(values, 0.5)
    except DegenerateWeightsError as e:
        return Outcome([Check("weights", math.nan, 0.0, 0.0)], values.size, {}, str(e))
    weights = np.sqrt(values)
    result = ks_weighted(values, weights, stats.gamma(0.5).cdf, inflation=KS_INFLATION)
    checks = [
        Check.from_ks("ks_vs_gamma_half", result),
        Check.from_mc("biased_mean", estimate, 0.5 + 1.0 / c**2),
    ]
    reason = f"effective sample size {estimate.ess:.0f} below {MIN_ESS:.0f}" if estimate.ess < MIN_ESS else None
    return Outcome(checks, values.size, {"c": c, "ess": estimate.ess}, reason)


def select(tags: Iterable[str] = ()) -> List[Experiment]:
    """Experiments matching any of the names or tags; all of them for an empty filter or 'all'.

    Raises:
        UnknownExperimentError: If a filter entry matches nothing
    """
    wanted = [tag for tag in tags if tag and tag != "all"]
    if not wanted:
        return [REGISTRY[name] for name in sorted(REGISTRY)]
    chosen = {}
    for tag in wanted:
        matches = [exp for exp in REGISTRY.values() if exp.name == tag or tag in exp.tags]
        if not matches:
            raise UnknownExperimentError(f"no experiment or tag named '{tag}'")
        chosen.update({exp.name: exp for exp in matches})
    return [chosen[name] for name in sorted(chosen)]


def run_experiment(name: str, config: RunConfig, stream: Optional[RngStream] = None) -> ExperimentReport:
    """Run one registered experiment.

    Args:
        name: Registry name
        config: Run configuration (seed, path and step overrides, parameters)
        stream: Stream to draw from; derived from the seed and name when None

    Returns:
        ExperimentReport; a run that exhausts its budget is inconclusive

    Raises:
        UnknownExperimentError: If the name is not registered
    """
    if name not in REGISTRY:
        raise UnknownExperimentError(f"unknown experiment '{name}'")
    exp = REGISTRY[name]
    stream = stream or RngStream(config.seed, stream_id_for(name))
    ctx = ExperimentContext(exp, stream, config)
    logger.info("running %s (paths=%d, dt=%g)", name, ctx.n_paths, ctx.dt)
    started = time.perf_counter()
    try:
        outcome = exp.func(ctx)
    except BudgetExhaustedError as e:
        outcome = Outcome([Check("budget", math.nan, 0.0, 0.0)], 0, {"budget": e.budget}, str(e))
    report = ExperimentReport.from_checks(
        name, exp.claim, config.seed, outcome.n, outcome.checks, outcome.details, outcome.inconclusive
    )
    report.runtime = time.perf_counter() - started
    logger.info("%s: %s in %.1fs", name, report.verdict, report.runtime)
    return report


def run_suite(
    config: RunConfig, tags: Optional[Iterable[str]] = None, parallelism: Optional[int] = None
) -> List[ExperimentReport]:
    """Run the selected experiments concurrently; reports come back sorted by name."""
    chosen = select(config.suite if tags is None else tags)
    workers = parallelism or config.parallelism
    with ThreadPoolExecutor(max_workers=workers) as pool:
        reports = list(pool.map(lambda exp: run_experiment(exp.name, config), chosen))
    return sorted(reports, key=lambda report: report.name)
