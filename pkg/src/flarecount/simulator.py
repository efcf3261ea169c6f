"""Mixed-Poisson populations: exact probabilities, simulation and bound checks.

Each subject flares as a Poisson process whose rate is drawn from a mixture
density.  The probability of seeing ``k`` events in time ``t`` is

    p_k = integral phi(v) (v t)^k exp(-v t) / k! dv

which has closed forms for the supported families (Poisson for point and
discrete mixtures, negative binomial for gamma mixtures).  The quadrature
route exists as an independent check on those closed forms.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np
from scipy.special import gammaln

from . import __version__
from .counts import Bound, EventLog, FrequencyTable, Target, from_events
from .errors import DomainError, InapplicableError
from .estimators import ESTIMATORS, resolve
from .numerics import integrate

TAIL_MASS = 1e-12
K_CAP = 10_000
GENERATOR = "numpy.random.PCG64 via SeedSequence(seed, spawn_key=(replication,))"


@dataclass(frozen=True)
class MixtureSpec:
    """Rate mixture in canonical form.

    ``family`` is either ``"discrete"`` (``atoms`` holds sorted, merged
    ``(rate, weight)`` pairs) or ``"gamma"`` (``shape``, ``rate``).  Use the
    :func:`point`, :func:`discrete`, :func:`exponential` and :func:`gamma`
    constructors, which canonicalize.
    """

    family: str
    atoms: tuple = ()
    shape: float = 0.0
    rate: float = 0.0

    @property
    def is_point(self) -> bool:
        return self.family == "discrete" and len(self.atoms) == 1

    def mean(self) -> float:
        if self.family == "gamma":
            return self.shape / self.rate
        return sum(v * w for v, w in self.atoms)

    def describe(self) -> str:
        if self.family == "gamma":
            return f"gamma:{self.shape!r},{self.rate!r}"
        if self.is_point:
            return f"point:{self.atoms[0][0]!r}"
        return "discrete:" + ";".join(f"{v!r},{w!r}" for v, w in self.atoms)


def discrete(atoms: Sequence) -> MixtureSpec:
    merged: dict = {}
    for v, w in atoms:
        v, w = float(v), float(w)
        if not (v >= 0 and math.isfinite(v)):
            raise DomainError(f"rate must be finite and non-negative, got {v!r}")
        if not w > 0:
            raise DomainError(f"weight must be positive, got {w!r}")
        merged[v] = merged.get(v, 0.0) + w
    if not merged:
        raise DomainError("discrete mixture needs at least one atom")
    total = math.fsum(merged.values())
    if abs(total - 1.0) > 1e-9:
        raise DomainError(f"weights must sum to 1, got {total!r}")
    return MixtureSpec("discrete", tuple((v, w / total) for v, w in sorted(merged.items())))


def point(rate: float) -> MixtureSpec:
    return discrete([(rate, 1.0)])


def gamma(shape: float, rate: float) -> MixtureSpec:
    shape, rate = float(shape), float(rate)
    if not (shape > 0 and rate > 0):
        raise DomainError("gamma shape and rate must be positive")
    return MixtureSpec("gamma", shape=shape, rate=rate)


def exponential(rate: float) -> MixtureSpec:
    return gamma(1.0, rate)


def parse_mixture(text: str) -> MixtureSpec:
    """Parse ``point:V``, ``discrete:V,W;V,W``, ``exp:B`` or ``gamma:A,B``."""
    kind, _, body = text.strip().partition(":")
    try:
        if kind == "point":
            return point(float(body))
        if kind in ("exp", "exponential"):
            return exponential(float(body))
        if kind == "gamma":
            a, b = body.split(",")
            return gamma(float(a), float(b))
        if kind == "discrete":
            atoms = [tuple(float(x) for x in part.split(",")) for part in body.split(";")]
            if any(len(a) != 2 for a in atoms):
                raise ValueError
            return discrete(atoms)
    except ValueError as exc:
        raise DomainError(f"malformed mixture {text!r}: {exc}") from exc
    raise DomainError(f"unknown mixture family {kind!r}")


# -- probabilities -------------------------------------------------------------

def _log_poisson(k, mu):
    k = np.asarray(k, dtype=float)
    if mu == 0:
        return np.where(k == 0, 0.0, -np.inf)
    return k * math.log(mu) - mu - gammaln(k + 1)


def pk_array(mix: MixtureSpec, t: float, k_max: int) -> np.ndarray:
    """Closed-form ``p_0 .. p_{k_max}``."""
    if not t > 0:
        raise DomainError("t must be positive")
    k = np.arange(k_max + 1, dtype=float)
    if mix.family == "gamma":
        a, b = mix.shape, mix.rate
        logp = (gammaln(k + a) - gammaln(k + 1) - gammaln(a)
                + a * math.log(b / (b + t)) + k * math.log(t / (b + t)))
        return np.exp(logp)
    out = np.zeros(k_max + 1)
    for v, w in mix.atoms:
        out += w * np.exp(_log_poisson(k, v * t))
    return out


def _density(mix: MixtureSpec):
    a, b = mix.shape, mix.rate
    log_norm = a * math.log(b) - math.lgamma(a)

    def phi_log(v):
        return log_norm + (a - 1) * math.log(v) - b * v
    return phi_log


def pk_quadrature(mix: MixtureSpec, t: float, k: int, tol: float = 1e-12) -> float:
    """``p_k`` by integrating the mixture density against the Poisson mass."""
    if mix.family != "gamma":
        return float(pk_array(mix, t, k)[k])
    phi_log = _density(mix)
    lk = math.lgamma(k + 1)

    def f(v):
        if v <= 0:
            return 0.0
        return math.exp(phi_log(v) + k * math.log(v * t) - v * t - lk)

    # split at the integrand's mode so the transformed tail stays smooth
    mode = max((mix.shape - 1 + k) / (mix.rate + t), 0.0)
    if mode > 0:
        return integrate(f, 0.0, mode, tol) + integrate(f, mode, math.inf, tol)
    return integrate(f, 0.0, math.inf, tol)


def pk_mixture(mix: MixtureSpec, t: float, k: int, method: str = "closed") -> float:
    if k < 0:
        raise DomainError("k must be non-negative")
    if method == "quadrature":
        return pk_quadrature(mix, t, k)
    return float(pk_array(mix, t, k)[k])


class ExpectedCounts(NamedTuple):
    table: FrequencyTable
    unseen: float
    k_max: int
    truncated: bool


def expected_table(mix: MixtureSpec, N: float, t: float, k_max: int | None = None) -> ExpectedCounts:
    """Expected ``n_k = N p_k`` for k = 1..k_max, plus the true unseen ``N p_0``.

    ``k_max`` is extended until the tail mass drops below 1e-12, up to a
    hard cap of 10 000 (``truncated`` is set when the cap bites).
    """
    k_max = 8 if k_max is None else k_max
    truncated = False
    while True:
        p = pk_array(mix, t, k_max)
        if 1.0 - math.fsum(p) < TAIL_MASS:
            break
        if k_max >= K_CAP:
            truncated = True
            break
        k_max = min(2 * k_max, K_CAP)
    table = FrequencyTable({k: float(N * p[k]) for k in range(1, k_max + 1)})
    return ExpectedCounts(table, float(N * p[0]), k_max, truncated)


def check_holder(mix: MixtureSpec, t: float, k_max: int) -> list:
    """Margins ``k p_0 p_k - p_1 p_{k-1}`` for k = 2..k_max.

    Non-negative for every mixture; zero for a point mass.
    """
    if k_max < 2:
        raise DomainError("k_max must be >= 2")
    p = pk_array(mix, t, k_max)
    return [(k, float(k * p[0] * p[k] - p[1] * p[k - 1])) for k in range(2, k_max + 1)]


# -- simulation --------------------------------------------------------------

@dataclass(frozen=True)
class SimConfig:
    N: int
    horizon: float
    mixture: MixtureSpec
    replications: int = 1
    seed: int = 0

    def __post_init__(self):
        if self.N < 1 or not self.horizon > 0 or self.replications < 1:
            raise DomainError("need N >= 1, horizon > 0 and replications >= 1")
        if not 0 <= self.seed < 2 ** 64:
            raise DomainError("seed must be a 64-bit unsigned integer")

    def to_dict(self) -> dict:
        return {"N": self.N, "horizon": self.horizon, "mixture": self.mixture.describe(),
                "replications": self.replications, "seed": self.seed}


def replication_rng(seed: int, replication: int) -> np.random.Generator:
    ss = np.random.SeedSequence(seed, spawn_key=(replication,))
    return np.random.Generator(np.random.PCG64(ss))


def _draw_counts(config: SimConfig, rng: np.random.Generator) -> np.ndarray:
    mix = config.mixture
    if mix.family == "gamma":
        rates = rng.gamma(mix.shape, 1.0 / mix.rate, size=config.N)
    elif mix.is_point:
        rates = np.full(config.N, mix.atoms[0][0])
    else:
        values = np.array([v for v, _ in mix.atoms])
        weights = np.array([w for _, w in mix.atoms])
        rates = values[rng.choice(len(values), size=config.N, p=weights)]
    return rng.poisson(rates * config.horizon)


def simulate_log(config: SimConfig, replication: int = 0) -> EventLog:
    """Simulate one population over ``[0, horizon]``.

    Subject i draws a rate, then a Poisson event count, then that many
    uniform event times.  The output depends only on ``(seed, replication)``.
    """
    rng = replication_rng(config.seed, replication)
    counts = _draw_counts(config, rng)
    times = rng.uniform(0.0, config.horizon, size=int(counts.sum()))
    records = {}
    start = 0
    for i in np.flatnonzero(counts):
        stop = start + int(counts[i])
        records[f"s{i}"] = sorted(times[start:stop].tolist())
        start = stop
    return EventLog(float(config.horizon), records)


@dataclass(frozen=True)
class EstimatorSummary:
    estimator: str
    target: str
    bound: str
    mean: float | None
    sd: float | None
    mean_truth: float | None
    violation_fraction: float | None
    applicable: int
    inapplicable: int

    def to_dict(self) -> dict:
        return dict(self.__dict__)


@dataclass(frozen=True)
class ExperimentReport:
    config: SimConfig
    mean_unseen: float
    rows: tuple

    def row(self, name: str) -> EstimatorSummary:
        name = resolve(name)
        for r in self.rows:
            if r.estimator == name:
                return r
        raise KeyError(name)

    def to_dict(self) -> dict:
        return {
            "package": "flarecount",
            "version": __version__,
            "numpy": np.__version__,
            "generator": GENERATOR,
            "config": self.config.to_dict(),
            "mean_true_unseen": self.mean_unseen,
            "estimators": [r.to_dict() for r in self.rows],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"


def _truth(target: Target, N: int, unseen: int):
    if target is Target.UNSEEN:
        return unseen
    if target is Target.TOTAL:
        return N
    return None


def run_experiment(config: SimConfig, estimators: Sequence[str]) -> ExperimentReport:
    """Simulate every replication, estimate on the full-horizon table, aggregate.

    Each estimate is compared to the replication's realized unseen count (or
    to N for total estimators).  A lower bound is violated when it exceeds
    the truth, an upper bound when it falls below it.
    """
    names = sorted({resolve(e) for e in estimators})
    if not names:
        raise DomainError("no estimators selected")
    values = {name: [] for name in names}
    truths = {name: [] for name in names}
    meta: dict = {}
    failures = {name: 0 for name in names}
    unseen_total = 0
    for rep in range(config.replications):
        log = simulate_log(config, rep)
        unseen = config.N - len(log.records)
        unseen_total += unseen
        table = from_events(log) if log.records else FrequencyTable()
        for name in names:
            try:
                est = ESTIMATORS[name](table)
            except InapplicableError:
                failures[name] += 1
                continue
            meta[name] = (est.target, est.bound)
            values[name].append(est.value)
            truths[name].append(_truth(est.target, config.N, unseen))
    rows = []
    for name in names:
        vals = np.asarray(values[name], dtype=float)
        if name not in meta:
            rows.append(EstimatorSummary(name, "", "", None, None, None, None, 0, failures[name]))
            continue
        target, bound = meta[name]
        truth = truths[name]
        mean_truth = violation = None
        if truth[0] is not None:
            tr = np.asarray(truth, dtype=float)
            mean_truth = float(tr.mean())
            if bound is Bound.LOWER:
                violation = float(np.mean(vals > tr))
            elif bound is Bound.UPPER:
                violation = float(np.mean(vals < tr))
        sd = float(vals.std(ddof=1)) if vals.size > 1 else None
        rows.append(EstimatorSummary(name, target.value, bound.value, float(vals.mean()), sd,
                                     mean_truth, violation, int(vals.size), failures[name]))
    return ExperimentReport(config, unseen_total / config.replications, tuple(rows))
