"""Projection of frequency tables in time and prediction of new discoveries."""

from __future__ import annotations

import io
import math
import warnings
from dataclasses import dataclass
from typing import Optional, Sequence

from .counts import EventLog, FrequencyTable, as_table, from_events, totals
from .errors import DomainError, InapplicableError
from .estimators import ESTIMATORS, resolve


class ExtrapolationWarning(UserWarning):
    """The alternating projection series is no longer contracting."""


def _check_times(T, t):
    if not (T > 0 and t > 0):
        raise DomainError(f"times must be positive, got T={T!r}, t={t!r}")


@dataclass(frozen=True)
class Projection:
    """Expected counts ``n_r(t)`` projected from a table observed at ``T``.

    ``counts[0]`` is only the part of n_0(t) contributed by subjects already
    seen at ``T``; the unknown n_0(T) is left out.
    """

    T: float
    t: float
    counts: dict
    unstable: bool = False

    @property
    def unseen_increment(self) -> float:
        return self.counts[0]

    @property
    def table(self) -> FrequencyTable:
        return FrequencyTable({r: v for r, v in self.counts.items() if r >= 1})


def mnatsakanian_project(table, T: float, t: float, r_max: Optional[int] = None) -> Projection:
    """Binomially thin (or extrapolate) a table from horizon ``T`` to ``t``.

    n_r(t) = sum_{k>=max(r,1)} n_k(T) C(k, r) (t/T)^r (1 - t/T)^(k - r)

    For ``t > 2T`` the series alternates with growing terms; the result is
    still returned but marked unstable and an ExtrapolationWarning is issued.
    """
    _check_times(T, t)
    table = as_table(table)
    if r_max is None:
        r_max = table.max_k
    p = t / T
    q = 1.0 - p
    unstable = abs(q) > 1.0
    if unstable:
        warnings.warn(f"projection to t={t} > 2T={2 * T} is unstable", ExtrapolationWarning,
                      stacklevel=2)
    counts = {}
    for r in range(0, r_max + 1):
        counts[r] = math.fsum(v * math.comb(k, r) * p ** r * q ** (k - r)
                              for k, v in table.items() if k >= r and v)
    return Projection(T, t, counts, unstable)


def unseen_at(table, T: float, t: float) -> float:
    """``sum_k n_k(T) (1 - t/T)^k``: observed subjects expected to be unseen at ``t``."""
    _check_times(T, t)
    table = as_table(table)
    q = 1.0 - t / T
    if abs(q) > 1.0:
        warnings.warn(f"projection to t={t} > 2T={2 * T} is unstable", ExtrapolationWarning,
                      stacklevel=2)
    return math.fsum(v * q ** k for k, v in table.items())


@dataclass(frozen=True)
class Prediction:
    method: str
    value: float
    unstable: bool = False
    notes: tuple = ()


def efron_thisted_new(table, T: float, tau: float) -> Prediction:
    """Expected new subjects in a further interval ``tau``.

    S(tau) = sum_k (-1)^(k+1) (tau/T)^k n_k
    """
    if not T > 0 or tau < 0:
        raise DomainError(f"need T > 0 and tau >= 0, got T={T!r}, tau={tau!r}")
    table = as_table(table)
    x = tau / T
    value = math.fsum((-1) ** (k + 1) * x ** k * v for k, v in table.items())
    unstable = x > 1.0
    notes = ()
    if unstable:
        notes = (f"tau/T = {x:g} > 1: alternating series may oscillate",)
        warnings.warn(notes[0], ExtrapolationWarning, stacklevel=2)
    return Prediction("efron-thisted", value, unstable, notes)


def solow_polasky_new(table, m: int) -> Prediction:
    """Expected new subjects among ``m`` further events.

    S(m) = n_1^2 / (2 n_2) * (1 - (1 - 2 n_2 / (n_1 n))^m).  When
    ``m < n n_1 / (2 n_2)`` this is close to ``m n_1 / n``; the note on the
    result records which side of that threshold ``m`` falls.
    """
    if m < 0:
        raise DomainError("m must be non-negative")
    table = as_table(table)
    n1, n2 = table[1], table[2]
    _, n = totals(table)
    if n1 <= 0 or n2 <= 0:
        raise InapplicableError("solow-polasky", "requires n_1 > 0 and n_2 > 0")
    limit = n1 * n1 / (2.0 * n2)
    q = 2.0 * n2 / (n1 * n)
    value = limit * -math.expm1(m * math.log1p(-q)) if q < 1 else limit * float(m > 0)
    threshold = n * n1 / (2.0 * n2)
    regime = "linear" if m < threshold else "saturating"
    note = f"{regime} regime (m {'<' if m < threshold else '>='} {threshold:g}); m n_1/n = {m * n1 / n:g}"
    return Prediction("solow-polasky", value, False, (note,))


def in_linear_regime(table, m: int) -> bool:
    table = as_table(table)
    _, n = totals(table)
    return m < n * table[1] / (2.0 * table[2])


# -- replay curves ---------------------------------------------------------------

@dataclass(frozen=True)
class CurvePoint:
    x: float
    value: Optional[float]
    estimator: str
    reason: Optional[str] = None

    @property
    def is_gap(self) -> bool:
        return self.value is None


@dataclass(frozen=True)
class PredictionCurve:
    axis: str
    points: tuple
    reference: float

    def __post_init__(self):
        xs = [p.x for p in self.points]
        if any(b <= a for a, b in zip(xs, xs[1:])):
            raise DomainError("curve x values must be strictly increasing")

    @property
    def gaps(self) -> tuple:
        return tuple(p for p in self.points if p.is_gap)

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write("x,value,estimator\n")
        for p in self.points:
            if not p.is_gap:
                buf.write(f"{p.x!r},{p.value!r},{p.estimator}\n")
        return buf.getvalue()


def uniform_grid(horizon: float, size: int) -> list:
    if size < 1:
        raise DomainError("grid size must be >= 1")
    grid = [horizon * i / size for i in range(1, size + 1)]
    grid[-1] = horizon
    return grid


def estimate_curve(log: EventLog, grid: Sequence[float], estimator: str) -> PredictionCurve:
    """Re-run an estimator on the log truncated at each time in ``grid``.

    Points where the estimator does not apply are kept as gaps.
    """
    if not grid:
        raise DomainError("empty grid")
    name = resolve(estimator)
    fn = ESTIMATORS[name]
    points = []
    for t in grid:
        if not 0 < t <= log.horizon:
            raise DomainError(f"grid time {t!r} outside (0, {log.horizon}]")
        table = from_events(log, t)
        try:
            points.append(CurvePoint(float(t), fn(table).value, name))
        except InapplicableError as exc:
            points.append(CurvePoint(float(t), None, name, exc.reason))
    return PredictionCurve("time", tuple(points), log.horizon)
