"""Statistical comparison machinery and experiment reports."""

import logging
import math
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, Literal, Optional, Sequence

import numpy as np
from scipy import stats

from config import FLOAT_DIGITS, KS_LEVEL_C, N_SE, Verdict
from errors import DomainError

logger = logging.getLogger(__name__)

CheckKind = Literal["within", "at_most", "at_least"]


@dataclass(frozen=True)
class McEstimate:
    """Monte Carlo point estimate with its standard error.

    `ess` is set for importance-weighted estimates only.
    """

    mean: float
    stderr: float
    n: int
    ess: Optional[float] = None

    def __post_init__(self):
        if self.n < 2:
            raise DomainError(f"an estimate needs at least two samples, got {self.n}")
        if not self.stderr >= 0:
            raise DomainError(f"stderr must be nonnegative, got {self.stderr}")

    @classmethod
    def from_samples(cls, values) -> "McEstimate":
        arr = np.asarray(values, dtype=float).ravel()
        if arr.size < 2:
            raise DomainError(f"an estimate needs at least two samples, got {arr.size}")
        return cls(mean=float(arr.mean()), stderr=float(arr.std(ddof=1) / math.sqrt(arr.size)), n=int(arr.size))

    def z_score(self, target: float) -> float:
        if self.stderr == 0:
            return 0.0 if self.mean == target else math.inf
        return (self.mean - target) / self.stderr


@dataclass(frozen=True)
class KsResult:
    statistic: float
    threshold: float
    n: int
    m: Optional[int] = None

    @property
    def passed(self) -> bool:
        return self.statistic <= self.threshold


def ks_threshold(n: float, m: Optional[float] = None, level_c: float = KS_LEVEL_C, inflation: float = 1.0) -> float:
    """c sqrt((n+m)/(nm)) for two samples, c / sqrt(n) for one, times the inflation."""
    effective = n if m is None else n * m / (n + m)
    return inflation * level_c / math.sqrt(effective)


def _check_sample(values, name: str) -> np.ndarray:
    arr = np.asarray(values, dtype=float).ravel()
    if arr.size == 0:
        raise DomainError(f"{name} is empty")
    if np.any(np.isnan(arr)):
        raise DomainError(f"{name} contains NaN")
    return arr


def ks_two_sample(a, b, level_c: float = KS_LEVEL_C, inflation: float = 1.0) -> KsResult:
    """Sup-distance between the empirical CDFs of two samples.

    Args:
        a: First sample
        b: Second sample
        level_c: Critical constant for the chosen level (1.36 for 5%)
        inflation: Factor applied to the threshold for discretized samples

    Returns:
        KsResult with the statistic and the level threshold

    Raises:
        DomainError: If either sample is empty
    """
    x, y = _check_sample(a, "first sample"), _check_sample(b, "second sample")
    statistic = float(stats.ks_2samp(x, y, method="asymp").statistic)
    return KsResult(statistic, ks_threshold(x.size, y.size, level_c, inflation), x.size, y.size)


def ks_one_sample(samples, cdf: Callable, level_c: float = KS_LEVEL_C, inflation: float = 1.0) -> KsResult:
    """Sup-distance between the empirical CDF and an exact one."""
    x = _check_sample(samples, "sample")
    statistic = float(stats.kstest(x, cdf, method="asymp").statistic)
    return KsResult(statistic, ks_threshold(x.size, None, level_c, inflation), x.size)


def ks_weighted(samples, weights, cdf: Callable, level_c: float = KS_LEVEL_C, inflation: float = 1.0) -> KsResult:
    """KS distance of an importance-weighted empirical CDF.

    The threshold uses the effective sample size (sum w)^2 / sum w^2 in place
    of n.
    """
    x = _check_sample(samples, "sample")
    w = np.asarray(weights, dtype=float).ravel()
    if w.shape != x.shape:
        raise DomainError(f"weights shape {w.shape} does not match samples {x.shape}")
    if np.any(w < 0) or not w.sum() > 0:
        raise DomainError("weights must be nonnegative with a positive sum")
    order = np.argsort(x, kind="stable")
    x, w = x[order], w[order]
    total = w.sum()
    upper = np.cumsum(w) / total
    lower = upper - w / total
    exact = np.asarray(cdf(x), dtype=float)
    statistic = float(max(np.max(upper - exact), np.max(exact - lower)))
    ess = total**2 / np.sum(w**2)
    return KsResult(statistic, inflation * level_c / math.sqrt(ess), int(round(ess)))


def z_verdict(estimate: McEstimate, target: float, n_se: float = N_SE) -> Verdict:
    return Verdict.PASS if abs(estimate.mean - target) <= n_se * estimate.stderr else Verdict.FAIL


def ks_verdict(statistic: float, threshold: float) -> Verdict:
    return Verdict.PASS if statistic <= threshold else Verdict.FAIL


@dataclass(frozen=True)
class Check:
    """One numeric comparison inside an experiment.

    within: |estimate - target| <= tolerance
    at_most: estimate <= target + tolerance
    at_least: estimate >= target - tolerance
    """

    label: str
    estimate: float
    target: float
    tolerance: float
    kind: CheckKind = "within"
    stderr: Optional[float] = None
    n: Optional[int] = None

    @property
    def passed(self) -> bool:
        if self.kind == "at_most":
            return self.estimate <= self.target + self.tolerance
        if self.kind == "at_least":
            return self.estimate >= self.target - self.tolerance
        return abs(self.estimate - self.target) <= self.tolerance

    @property
    def score(self) -> float:
        """Distance to the target in units of the tolerance (larger is worse)."""
        if self.kind == "at_most":
            gap = self.estimate - self.target
        elif self.kind == "at_least":
            gap = self.target - self.estimate
        else:
            gap = abs(self.estimate - self.target)
        if math.isnan(gap):
            return math.inf
        if self.tolerance == 0:
            return 0.0 if gap <= 0 else math.inf
        return gap / self.tolerance

    @classmethod
    def from_mc(cls, label: str, estimate: McEstimate, target: float, n_se: float = N_SE) -> "Check":
        return cls(label, estimate.mean, target, n_se * estimate.stderr, stderr=estimate.stderr, n=estimate.n)

    @classmethod
    def from_ks(cls, label: str, result: KsResult) -> "Check":
        return cls(label, result.statistic, 0.0, result.threshold, n=result.n)


def _number(value: Optional[float]) -> Optional[float]:
    if value is None or not math.isfinite(value):
        return None
    return float(f"{value:.{FLOAT_DIGITS}g}")


def _with_hex(payload: Dict[str, Any], key: str, value: Optional[float]):
    payload[key] = _number(value)
    payload[f"{key}_hex"] = None if value is None else float(value).hex()


def _from_hex(payload: Dict[str, Any], key: str) -> Optional[float]:
    raw = payload.get(f"{key}_hex")
    return None if raw is None else float.fromhex(raw)


def _plain(value: Any) -> Any:
    """Details to JSON-ready values, floats at the printed precision."""
    if isinstance(value, dict):
        return {str(k): _plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple, np.ndarray)):
        return [_plain(v) for v in value]
    if isinstance(value, (bool, np.bool_)):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        return int(value)
    if isinstance(value, (float, np.floating)):
        return _number(float(value))
    return value


def check_payload(check: Check) -> Dict[str, Any]:
    payload: Dict[str, Any] = {"label": check.label, "kind": check.kind, "passed": check.passed, "n": check.n}
    for key in ("estimate", "target", "tolerance", "stderr"):
        _with_hex(payload, key, getattr(check, key))
    return payload


def check_from_payload(payload: Dict[str, Any]) -> Check:
    return Check(
        label=payload["label"],
        estimate=_from_hex(payload, "estimate"),
        target=_from_hex(payload, "target"),
        tolerance=_from_hex(payload, "tolerance"),
        kind=payload["kind"],
        stderr=_from_hex(payload, "stderr"),
        n=payload.get("n"),
    )


@dataclass
class ExperimentReport:
    """Outcome of one named experiment.

    The headline target/estimate/tolerance are those of the worst check, and
    the verdict follows from the checks alone (or is inconclusive when the run
    ran out of budget or effective samples).
    """

    name: str
    claim: str
    target: float
    estimate: float
    tolerance: float
    verdict: Verdict
    seed: int
    n: int
    checks: List[Check] = field(default_factory=list)
    details: Dict[str, Any] = field(default_factory=dict)
    reason: Optional[str] = None
    runtime: float = 0.0

    @classmethod
    def from_checks(
        cls,
        name: str,
        claim: str,
        seed: int,
        n: int,
        checks: Sequence[Check],
        details: Optional[Dict[str, Any]] = None,
        inconclusive: Optional[str] = None,
    ) -> "ExperimentReport":
        if not checks:
            raise DomainError(f"experiment {name} produced no checks")
        worst = max(checks, key=lambda check: check.score)
        if inconclusive:
            verdict = Verdict.INCONCLUSIVE
        elif all(check.passed for check in checks):
            verdict = Verdict.PASS
        else:
            verdict = Verdict.FAIL
        return cls(
            name=name,
            claim=claim,
            target=worst.target,
            estimate=worst.estimate,
            tolerance=worst.tolerance,
            verdict=verdict,
            seed=seed,
            n=n,
            checks=list(checks),
            details=dict(details or {}),
            reason=inconclusive,
        )

    def to_payload(self) -> Dict[str, Any]:
        """JSON-ready dict; runtime is left out so equal seeds give equal files."""
        payload: Dict[str, Any] = {
            "name": self.name,
            "claim": self.claim,
            "verdict": str(self.verdict),
            "seed": self.seed,
            "n": self.n,
            "reason": self.reason,
            "checks": [check_payload(check) for check in self.checks],
            "details": _plain(self.details),
        }
        for key in ("target", "estimate", "tolerance"):
            _with_hex(payload, key, getattr(self, key))
        return payload

    @classmethod
    def from_payload(cls, payload: Dict[str, Any], runtime: float = 0.0) -> "ExperimentReport":
        try:
            return cls(
                name=payload["name"],
                claim=payload["claim"],
                target=_from_hex(payload, "target"),
                estimate=_from_hex(payload, "estimate"),
                tolerance=_from_hex(payload, "tolerance"),
                verdict=Verdict(payload["verdict"]),
                seed=int(payload["seed"]),
                n=int(payload["n"]),
                checks=[check_from_payload(item) for item in payload.get("checks", [])],
                details=payload.get("details", {}),
                reason=payload.get("reason"),
                runtime=runtime,
            )
        except (KeyError, ValueError, TypeError) as e:
            raise DomainError(f"malformed report payload: {e}")


def summarize(reports: Sequence[ExperimentReport]) -> Dict[str, int]:
    """Verdict counts over a list of reports."""
    counts = {str(verdict): 0 for verdict in Verdict.values()}
    for report in reports:
        counts[str(report.verdict)] += 1
    counts["total"] = len(reports)
    return counts
