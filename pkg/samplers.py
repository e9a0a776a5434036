"""Exact random-variate generators and the reproducible stream contract.

Every sampler takes a numpy Generator (or an RngStream, which is turned into
one) and an optional `size`; it returns a float when `size` is None and an
array otherwise.
"""

import logging
import math
from dataclasses import dataclass
from typing import Callable, List, Literal, Optional, Tuple, Union

import numpy as np

from analytic import GgcSpec, ggc_coeffs, order_from_barrier
from config import CHUNK_PATHS
from errors import DegenerateWeightsError, DomainError, NonIntegerOrderError
from verify import McEstimate

logger = logging.getLogger(__name__)

BasicKind = Literal["normal", "exponential", "gamma_half", "cauchy", "uniform"]
Size = Optional[Union[int, Tuple[int, ...]]]

_UINT64 = 2**64


@dataclass(frozen=True)
class RngStream:
    """A (seed, stream_id) pair naming one independent random stream.

    Streams are plain values: the same pair always yields the same sequence,
    and distinct stream ids are independent substreams of the seed.
    """

    seed: int
    stream_id: int = 0

    def __post_init__(self):
        for name in ("seed", "stream_id"):
            value = getattr(self, name)
            if not 0 <= value < _UINT64:
                raise DomainError(f"{name} must be a 64-bit unsigned integer, got {value}")

    def generator(self) -> np.random.Generator:
        sequence = np.random.SeedSequence(self.seed, spawn_key=(self.stream_id,))
        return np.random.Generator(np.random.PCG64(sequence))

    def substream(self, index: int) -> "RngStream":
        """Child stream `index`, independent of its siblings and of the parent."""
        mixed = np.random.SeedSequence([self.stream_id, index]).generate_state(1, dtype=np.uint64)[0]
        return RngStream(self.seed, int(mixed))


RngLike = Union[RngStream, np.random.Generator]


def as_generator(rng: RngLike) -> np.random.Generator:
    if isinstance(rng, RngStream):
        return rng.generator()
    return rng


def chunk_streams(stream: RngStream, n: int, chunk: int = CHUNK_PATHS) -> List[Tuple[RngStream, int]]:
    """Split `n` draws into fixed-size chunks, chunk i drawing from substream i.

    The split depends only on `n` and `chunk`, so results do not depend on how
    many workers process the chunks or in which order.
    """
    if n <= 0:
        raise DomainError(f"n must be positive, got {n}")
    return [(stream.substream(i), min(chunk, n - start)) for i, start in enumerate(range(0, n, chunk))]


def _shape(size: Size) -> Tuple[int, ...]:
    if size is None:
        return ()
    return (size,) if isinstance(size, (int, np.integer)) else tuple(size)


def _out(values: np.ndarray, size: Size):
    return float(values) if size is None else values


def _nonzero_normal(rng: np.random.Generator, size: Size) -> np.ndarray:
    draws = np.asarray(rng.standard_normal(_shape(size)))
    zero = draws == 0
    while np.any(zero):
        draws[zero] = rng.standard_normal(int(zero.sum()))
        zero = draws == 0
    return draws


def _open_uniform(rng: np.random.Generator, size: Size) -> np.ndarray:
    draws = np.asarray(rng.random(_shape(size)))
    zero = draws == 0
    while np.any(zero):
        draws[zero] = rng.random(int(zero.sum()))
        zero = draws == 0
    return draws


def sample_basic(kind: BasicKind, rng: RngLike, size: Size = None, **params: float):
    """Draw from one of the elementary laws.

    Args:
        kind: normal (loc, scale), exponential (rate), gamma_half (scale),
            cauchy (c) or uniform (low, high)
        rng: Generator or stream
        size: Output shape; None for a single float
        **params: Law parameters; omitted ones take the standard values

    Raises:
        DomainError: On an unknown kind or invalid parameters
    """
    gen = as_generator(rng)
    shape = _shape(size)
    if kind == "normal":
        scale = params.get("scale", 1.0)
        _check_positive(scale, "scale")
        values = params.get("loc", 0.0) + scale * gen.standard_normal(shape)
    elif kind == "exponential":
        rate = params.get("rate", 1.0)
        _check_positive(rate, "rate")
        values = gen.standard_exponential(shape) / rate
    elif kind == "gamma_half":
        scale = params.get("scale", 1.0)
        _check_positive(scale, "scale")
        # G_1/2 = N^2 / 2
        values = 0.5 * scale * gen.standard_normal(shape) ** 2
    elif kind == "cauchy":
        c = params.get("c", 1.0)
        _check_positive(c, "c")
        values = c * gen.standard_cauchy(shape)
    elif kind == "uniform":
        low, high = params.get("low", 0.0), params.get("high", 1.0)
        if not high > low:
            raise DomainError(f"uniform needs low < high, got ({low}, {high})")
        values = gen.uniform(low, high, shape)
    else:
        raise DomainError(f"Unknown law: {kind}")
    return _out(np.asarray(values, dtype=float), size)


def _check_positive(value: float, name: str):
    if not value > 0:
        raise DomainError(f"{name} must be positive, got {value}")


def sample_K(spec: GgcSpec, rng: RngLike, size: Size = None):
    """K = [G_1/2] + sum_k e_k / coeff_k with independent components."""
    gen = as_generator(rng)
    shape = _shape(size)
    total = np.zeros(shape)
    if spec.has_gamma_half:
        total = total + 0.5 * gen.standard_normal(shape) ** 2
    for coeff in spec.coeffs:
        total = total + gen.standard_exponential(shape) / coeff
    return _out(total, size)


def integer_order(c: float) -> int:
    """m = pi/(2c) as an integer, or NonIntegerOrderError."""
    m = order_from_barrier(c)
    rounded = round(m)
    if rounded < 1 or abs(m - rounded) > 1e-9 * max(1.0, m):
        raise NonIntegerOrderError(f"pi/(2c) = {m:.12g} is not a positive integer (c = {c})")
    return int(rounded)


def sample_X2c(c: float, rng: RngLike, size: Size = None):
    """X_{2,c} = G'_1/2 + K with K built from the order m = pi/(2c).

    Raises:
        NonIntegerOrderError: If pi/(2c) is not an integer
    """
    spec = ggc_coeffs(integer_order(c))
    gen = as_generator(rng)
    half = 0.5 * gen.standard_normal(_shape(size)) ** 2
    return _out(half + sample_K(spec, gen, _shape(size)), size)


def sample_first_passage(h: float, rng: RngLike, size: Size = None):
    """T_h = h^2 / N^2 for a standard Brownian motion started at 0."""
    _check_positive(h, "h")
    normal = _nonzero_normal(as_generator(rng), size)
    return _out(h * h / normal**2, size)


@dataclass(frozen=True)
class YorParams:
    """Parameters of the exponential-time functional.

    lam is the rate of the independent exponential time, nu the drift;
    a = nu/2 + sqrt(2 lam + nu^2)/2 and b = a - nu.
    """

    lam: float
    nu: float
    a: float
    b: float

    def __post_init__(self):
        if not self.lam > 0:
            raise DomainError(f"lambda must be positive, got {self.lam}")
        expected = self.nu / 2 + 0.5 * math.sqrt(2 * self.lam + self.nu**2)
        consistent = math.isclose(self.a, expected, rel_tol=1e-12)
        consistent = consistent and math.isclose(self.b, self.a - self.nu, rel_tol=1e-12)
        if not consistent:
            raise DomainError(f"inconsistent parameters a={self.a}, b={self.b} for lambda={self.lam}, nu={self.nu}")
        if not (self.a > 0 and self.b > 0):
            raise DomainError(f"a and b must be positive, got a={self.a}, b={self.b}")

    @classmethod
    def from_rate(cls, lam: float, nu: float = 0.0) -> "YorParams":
        if not lam > 0:
            raise DomainError(f"lambda must be positive, got {lam}")
        a = nu / 2 + 0.5 * math.sqrt(2 * lam + nu * nu)
        return cls(lam=lam, nu=nu, a=a, b=a - nu)


def sample_yor_rhs(p: YorParams, rng: RngLike, size: Size = None):
    """(1 - U^(1/a)) / (2 G_b), the exact law of the exponential-time functional."""
    gen = as_generator(rng)
    uniform = _open_uniform(gen, size)
    gamma = np.asarray(gen.standard_gamma(p.b, _shape(size)))
    return _out((1.0 - uniform ** (1.0 / p.a)) / (2.0 * gamma), size)


def biased_expectation(samples, u: float, payoff: Optional[Callable[[np.ndarray], np.ndarray]] = None) -> McEstimate:
    """Expectation under the length-biased law x^u P(X in dx) / E[X^u].

    The estimate is the ratio sum(w f(x)) / sum(w) with w = x^u. Its standard
    error comes from the delta method, and the effective sample size
    (sum w)^2 / sum w^2 is attached to the result.

    Args:
        samples: Nonnegative draws of X
        u: Bias exponent
        payoff: Vectorized function of x; the identity when None

    Returns:
        McEstimate with `ess` set

    Raises:
        DegenerateWeightsError: If every weight vanishes
    """
    x = np.asarray(samples, dtype=float).ravel()
    if x.size < 2:
        raise DomainError(f"at least two samples are needed, got {x.size}")
    if np.any(x < 0) or np.any(np.isnan(x)):
        raise DomainError("samples must be nonnegative")
    values = x if payoff is None else np.broadcast_to(np.asarray(payoff(x), dtype=float), x.shape)

    if u == 0:
        weights = np.ones_like(x)
    else:
        positive = x > 0
        if not np.any(positive):
            raise DegenerateWeightsError(f"all {x.size} weights are zero")
        log_w = np.full_like(x, -np.inf)
        log_w[positive] = u * np.log(x[positive])
        # scale by the largest weight so the sums never overflow
        weights = np.exp(log_w - log_w.max())

    total = weights.sum()
    if total == 0 or not np.isfinite(total):
        raise DegenerateWeightsError(f"importance weights sum to {total}")
    mean = float(np.sum(weights * values) / total)
    n = x.size
    variance = n / (n - 1) * float(np.sum((weights * (values - mean)) ** 2)) / total**2
    ess = float(total**2 / np.sum(weights**2))
    share = float(weights.max() / total)
    if share > 0.1:
        logger.warning("largest weight carries %.1f%% of the mass (ess %.1f of %d)", 100 * share, ess, n)
    return McEstimate(mean=mean, stderr=math.sqrt(variance), n=n, ess=ess)


def sample_stable_subordinator_increment(alpha_half: float, dt: float, rng: RngLike, size: Size = None):
    """Increment over dt of the subordinator with Laplace exponent lambda^alpha_half.

    Uses Kanter's representation S_1 = (A(U) / E)^((1-a)/a) with
    A(u) = [sin(a pi u)^a sin((1-a) pi u)^(1-a) / sin(pi u)]^(1/(1-a)),
    and the scaling S_dt = dt^(1/a) S_1.
    """
    a = alpha_half
    if not 0 < a < 1:
        raise DomainError(f"alpha_half must lie in (0, 1), got {a}")
    _check_positive(dt, "dt")
    gen = as_generator(rng)
    u = _open_uniform(gen, size)
    e = np.asarray(gen.standard_exponential(_shape(size)))
    e = np.where(e > 0, e, np.finfo(float).tiny)
    log_kanter = (
        a * np.log(np.sin(a * math.pi * u))
        + (1 - a) * np.log(np.sin((1 - a) * math.pi * u))
        - np.log(np.sin(math.pi * u))
    ) / (1 - a)
    log_s = (1 - a) / a * (log_kanter - np.log(e)) + math.log(dt) / a
    return _out(np.exp(log_s), size)
